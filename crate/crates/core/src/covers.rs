//! The combinatorial cover calculus.
//!
//! Everything here is metric-free: a cover is a family of point subsets
//! whose union is the whole space, and two points are related when every
//! pair of simultaneous iterates fits inside a single member. On finite
//! discrete models every set is clopen and closures are identities, so the
//! chain power `C^k` plays the role the closed chain cover plays on general
//! spaces.
//!
//! Cover semi-expansiveness (`R(C^4)` contained in `R(C)`) is the
//! topological counterpart of metric semi-expansiveness; it forces the
//! relation to be a map-compatible equivalence, the quotient to carry a
//! generator, and conversely every expansive quotient pulls back to such a
//! cover.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quotients::{self, Partition, QuotientSystem};
use crate::rational::Rational;
use crate::system::FiniteMetricSystem;

/// A finite cover: nonempty subsets whose union is the whole point set.
/// Members are kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    n: usize,
    sets: Vec<BTreeSet<usize>>,
}

#[derive(Serialize, Deserialize)]
struct CoverFile {
    sets: Vec<Vec<String>>,
}

impl Cover {
    pub fn new(n: usize, mut sets: Vec<BTreeSet<usize>>) -> Result<Self> {
        sets.sort();
        sets.dedup();
        if sets.iter().any(|s| s.is_empty()) {
            return Err(Error::BadParameters(
                "cover contains an empty member".into(),
            ));
        }
        if let Some(&p) = sets.iter().flatten().find(|&&p| p >= n) {
            return Err(Error::BadParameters(format!(
                "cover member index {p} out of range"
            )));
        }
        let covered: BTreeSet<usize> = sets.iter().flatten().copied().collect();
        if covered.len() != n {
            let missing = (0..n).find(|p| !covered.contains(p)).unwrap();
            return Err(Error::BadParameters(format!(
                "cover misses point index {missing}"
            )));
        }
        Ok(Cover { n, sets })
    }

    pub fn space_size(&self) -> usize {
        self.n
    }

    pub fn sets(&self) -> &[BTreeSet<usize>] {
        &self.sets
    }

    /// True when some member contains both points.
    pub fn covers_pair(&self, a: usize, b: usize) -> bool {
        self.sets.iter().any(|s| s.contains(&a) && s.contains(&b))
    }

    pub fn to_json(&self, sys: &FiniteMetricSystem) -> String {
        let file = CoverFile {
            sets: self
                .sets
                .iter()
                .map(|s| s.iter().map(|&p| sys.point_name(p).to_string()).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("cover serialization cannot fail")
    }

    pub fn from_json(sys: &FiniteMetricSystem, source: &str) -> Result<Self> {
        let file: CoverFile =
            serde_json::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
        let mut sets = Vec::with_capacity(file.sets.len());
        for set in &file.sets {
            let mut member = BTreeSet::new();
            for name in set {
                let idx = sys
                    .index_of(name)
                    .ok_or_else(|| Error::Parse(format!("unknown point {name:?}")))?;
                member.insert(idx);
            }
            sets.push(member);
        }
        Cover::new(sys.len(), sets)
    }
}

/// The relation `x ~ y iff every pair of simultaneous iterates fits in a
/// single member`, decided over one period of the pair sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverRelation {
    related: Vec<Vec<bool>>,
    pub transitive: bool,
}

impl CoverRelation {
    pub fn related(&self, x: usize, y: usize) -> bool {
        self.related[x][y]
    }

    pub fn is_identity(&self) -> bool {
        self.related
            .iter()
            .enumerate()
            .all(|(x, row)| row.iter().enumerate().all(|(y, &r)| r == (x == y)))
    }

    /// First pair related here but not in `other`, if any.
    pub fn containment_violation(&self, other: &CoverRelation) -> Option<(usize, usize)> {
        for x in 0..self.related.len() {
            for y in (x + 1)..self.related.len() {
                if self.related[x][y] && !other.related[x][y] {
                    return Some((x, y));
                }
            }
        }
        None
    }

    /// Partition into equivalence classes; only meaningful when transitive.
    pub fn to_partition(&self) -> Partition {
        let n = self.related.len();
        let mut class_of = vec![usize::MAX; n];
        let mut next = 0;
        for x in 0..n {
            if class_of[x] != usize::MAX {
                continue;
            }
            for y in x..n {
                if self.related[x][y] {
                    class_of[y] = next;
                }
            }
            next += 1;
        }
        Partition::from_class_of(class_of)
    }
}

/// Computes the cover relation exactly via periodicity of the pair
/// sequence, and its transitivity flag.
pub fn cover_relation(sys: &FiniteMetricSystem, cover: &Cover) -> CoverRelation {
    let n = sys.len();
    let mut related = vec![vec![false; n]; n];
    for x in 0..n {
        for y in x..n {
            let period = num_integer::lcm(sys.period_of(x), sys.period_of(y));
            let (mut a, mut b) = (x, y);
            let mut ok = true;
            for _ in 0..period {
                if !cover.covers_pair(a, b) {
                    ok = false;
                    break;
                }
                a = sys.apply(a);
                b = sys.apply(b);
            }
            related[x][y] = ok;
            related[y][x] = ok;
        }
    }
    let mut transitive = true;
    'outer: for x in 0..n {
        for y in 0..n {
            if !related[x][y] {
                continue;
            }
            for z in 0..n {
                if related[y][z] && !related[x][z] {
                    transitive = false;
                    break 'outer;
                }
            }
        }
    }
    CoverRelation {
        related,
        transitive,
    }
}

/// The chain power `C^k`: unions of `k` members with consecutive nonempty
/// intersections, deduplicated.
pub fn cover_power(cover: &Cover, k: usize) -> Cover {
    assert!(k >= 1, "chain length must be at least 1");
    // State: (last member index, union so far). Deduplicating states keeps
    // the frontier small even for long chains.
    let mut frontier: BTreeSet<(usize, BTreeSet<usize>)> = cover
        .sets()
        .iter()
        .enumerate()
        .map(|(i, s)| (i, s.clone()))
        .collect();
    for _ in 1..k {
        let mut next = BTreeSet::new();
        for (last, union) in &frontier {
            for (i, candidate) in cover.sets().iter().enumerate() {
                if cover.sets()[*last].intersection(candidate).next().is_some() {
                    let mut extended = union.clone();
                    extended.extend(candidate.iter().copied());
                    next.insert((i, extended));
                }
            }
        }
        frontier = next;
    }
    let sets: Vec<BTreeSet<usize>> = frontier.into_iter().map(|(_, u)| u).collect();
    Cover::new(cover.space_size(), sets).expect("chain power of a cover is a cover")
}

/// Outcome of the cover semi-expansiveness check `R(C^4) subset of R(C)`.
#[derive(Debug, Clone)]
pub struct CoverSemiExpansivity {
    pub holds: bool,
    /// Pair related under the 4-chain power but not under the cover itself.
    pub witness: Option<(String, String)>,
    /// When the check holds the two relations coincide (the reverse
    /// containment is automatic).
    pub relations_equal: bool,
    /// When the check holds the relation is transitive.
    pub transitive: bool,
}

/// Decides cover semi-expansiveness, recording the equality and
/// transitivity facts that follow from it.
pub fn is_cover_semi_expansive(sys: &FiniteMetricSystem, cover: &Cover) -> CoverSemiExpansivity {
    let base = cover_relation(sys, cover);
    let chained = cover_relation(sys, &cover_power(cover, 4));
    match chained.containment_violation(&base) {
        Some((x, y)) => CoverSemiExpansivity {
            holds: false,
            witness: Some((sys.point_name(x).to_string(), sys.point_name(y).to_string())),
            relations_equal: false,
            transitive: base.transitive,
        },
        None => CoverSemiExpansivity {
            holds: true,
            witness: None,
            relations_equal: base == chained,
            transitive: base.transitive,
        },
    }
}

/// Outcome of the generator check: the cover relation is the identity.
#[derive(Debug, Clone)]
pub struct GeneratorCheck {
    pub holds: bool,
    pub witness: Option<(String, String)>,
}

/// A cover is a generator when distinct points are separated at some time:
/// the cover relation must be the identity.
pub fn is_generator(sys: &FiniteMetricSystem, cover: &Cover) -> GeneratorCheck {
    let relation = cover_relation(sys, cover);
    let witness = (0..sys.len())
        .flat_map(|x| ((x + 1)..sys.len()).map(move |y| (x, y)))
        .find(|&(x, y)| relation.related(x, y));
    GeneratorCheck {
        holds: witness.is_none(),
        witness: witness
            .map(|(x, y)| (sys.point_name(x).to_string(), sys.point_name(y).to_string())),
    }
}

/// Result of the forward pipeline: partition by the cover relation, quotient
/// system, and the projected cover which must be a generator.
#[derive(Debug, Clone)]
pub struct CoverQuotient {
    pub quotient: QuotientSystem,
    pub quotient_cover: Cover,
    pub generator_ok: bool,
}

/// From a cover-semi-expansive system, builds the quotient by the cover
/// relation and the projected cover `{q(saturation of U(x))}`, checking it
/// is a generator for the quotient map.
pub fn cover_quotient_pipeline(sys: &FiniteMetricSystem, cover: &Cover) -> Result<CoverQuotient> {
    let semi = is_cover_semi_expansive(sys, cover);
    if !semi.holds {
        let (x, y) = semi.witness.expect("failed check carries a witness");
        return Err(Error::NotCoverSemiExpansive { x, y });
    }
    let relation = cover_relation(sys, cover);
    let partition = relation.to_partition();
    let quotient = quotients::build_quotient(sys, &partition)?;
    let mut members: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    for x in 0..sys.len() {
        // U(x) is the union of members through x; the projected member is
        // the set of classes entirely inside it.
        let mut u_x: BTreeSet<usize> = BTreeSet::new();
        for set in cover.sets() {
            if set.contains(&x) {
                u_x.extend(set.iter().copied());
            }
        }
        let member: BTreeSet<usize> = (0..partition.len())
            .filter(|&c| partition.classes()[c].iter().all(|p| u_x.contains(p)))
            .collect();
        debug_assert!(member.contains(&partition.class_of(x)));
        members.insert(member);
    }
    let quotient_cover = Cover::new(partition.len(), members.into_iter().collect())?;
    let generator_ok = is_generator(&quotient.quotient, &quotient_cover).holds;
    Ok(CoverQuotient {
        quotient,
        quotient_cover,
        generator_ok,
    })
}

/// Result of the reverse pipeline: the pulled-back cover of a quotient
/// certified expansive, with its semi-expansiveness check and the relation
/// match against the partition.
#[derive(Debug, Clone)]
pub struct PullBackCover {
    /// Ball cover of the quotient the pull-back came from.
    pub quotient_cover: Cover,
    /// Saturated cover of the base space.
    pub cover: Cover,
    pub semi: CoverSemiExpansivity,
    /// The cover relation of the pulled-back cover equals the partition.
    pub relation_matches: bool,
}

/// Pulls back a small-ball cover of an expansive quotient to the base.
///
/// Members of the quotient cover are open balls of radius `alpha_r/8`, so
/// their diameter stays below `alpha_r/4` and 4-chains stay below the
/// expansivity threshold `alpha_r`.
pub fn pull_back_cover(q: &QuotientSystem, alpha_r: &Rational) -> Result<PullBackCover> {
    if !alpha_r.is_positive() {
        return Err(Error::BadThresholds(format!(
            "need alpha_r > 0, got {alpha_r}"
        )));
    }
    if let Some(sup) = q.quotient.expansivity_sup() {
        if *alpha_r >= sup {
            return Err(Error::AlphaTooLarge {
                alpha: alpha_r.clone(),
                reason: format!(
                    "quotient is expansive only below {sup}, its least orbit separation"
                ),
            });
        }
    }
    let k = q.quotient.len();
    let radius = alpha_r.half().half().half();
    let mut quotient_members: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    for c in 0..k {
        let ball: BTreeSet<usize> = (0..k)
            .filter(|&c2| *q.quotient.dist(c, c2) < radius)
            .collect();
        quotient_members.insert(ball);
    }
    let quotient_cover = Cover::new(k, quotient_members.into_iter().collect())?;
    let base_sets: Vec<BTreeSet<usize>> = quotient_cover
        .sets()
        .iter()
        .map(|ball| {
            ball.iter()
                .flat_map(|&c| q.partition.classes()[c].iter().copied())
                .collect()
        })
        .collect();
    let cover = Cover::new(q.base.len(), base_sets)?;
    let semi = is_cover_semi_expansive(&q.base, &cover);
    let relation_matches = cover_relation(&q.base, &cover).to_partition() == q.partition;
    Ok(PullBackCover {
        quotient_cover,
        cover,
        semi,
        relation_matches,
    })
}
