//! Quotients by orbit closeness.
//!
//! For `alpha > 0` the relation `x ~ y iff D(x,y) <= alpha` (orbits within
//! `alpha` for all time) is reflexive, symmetric and invariant under the
//! map. When it is transitive it partitions the space, and the induced
//! system on classes — with the Hausdorff metric between classes — is the
//! quotient. Semi-expansiveness at `alpha` is the classical sufficient
//! condition for transitivity; on finite systems the relation can also be
//! transitive without it, so transitivity is checked directly and the
//! result records which condition held.
//!
//! The module verifies both directions of the expansive-quotient
//! characterization: from an expansive quotient a rescaled metric
//! `d1 = d_R + K d` with `K = alpha / (2 diam + 1)` makes the base
//! semi-expansive and recovers the partition exactly, and from a
//! semi-expansive base the projected cover of `alpha/2`-balls is an
//! expansivity cover of the quotient.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::covers::{self, Cover};
use crate::error::{Error, Result};
use crate::expansivity;
use crate::rational::Rational;
use crate::system::FiniteMetricSystem;

/// A partition of the point set, in canonical form: classes sorted by least
/// member, members sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct PartitionFile {
    classes: Vec<Vec<String>>,
}

impl Partition {
    pub fn from_classes(n: usize, classes: Vec<Vec<usize>>) -> Result<Self> {
        let mut class_of = vec![usize::MAX; n];
        for (k, class) in classes.iter().enumerate() {
            if class.is_empty() {
                return Err(Error::BadParameters("empty partition class".into()));
            }
            for &p in class {
                if p >= n {
                    return Err(Error::BadParameters(format!(
                        "class member index {p} out of range"
                    )));
                }
                if class_of[p] != usize::MAX {
                    return Err(Error::BadParameters(format!(
                        "point index {p} appears in two classes"
                    )));
                }
                class_of[p] = k;
            }
        }
        if class_of.contains(&usize::MAX) {
            return Err(Error::BadParameters(
                "classes do not cover the point set".into(),
            ));
        }
        Ok(Self::from_class_of(class_of))
    }

    /// Canonicalizes an arbitrary class assignment.
    pub fn from_class_of(class_of: Vec<usize>) -> Self {
        let mut order: Vec<usize> = Vec::new();
        let mut renumber = vec![usize::MAX; class_of.len()];
        for &k in &class_of {
            if renumber[k] == usize::MAX {
                renumber[k] = order.len();
                order.push(k);
            }
        }
        let canonical: Vec<usize> = class_of.iter().map(|&k| renumber[k]).collect();
        let mut classes = vec![Vec::new(); order.len()];
        for (p, &k) in canonical.iter().enumerate() {
            classes[k].push(p);
        }
        Partition {
            classes,
            class_of: canonical,
        }
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_class_of((0..n).collect())
    }

    pub fn total(n: usize) -> Self {
        Self::from_class_of(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_of(&self, point: usize) -> usize {
        self.class_of[point]
    }

    pub fn class_assignment(&self) -> &[usize] {
        &self.class_of
    }

    /// First pair `x ~ y` whose images land in different classes, if any.
    pub fn compatibility_violation(&self, sys: &FiniteMetricSystem) -> Option<(usize, usize)> {
        for class in &self.classes {
            for &x in class {
                for &y in class {
                    if x < y && self.class_of[sys.apply(x)] != self.class_of[sys.apply(y)] {
                        return Some((x, y));
                    }
                }
            }
        }
        None
    }

    /// Image partition under the map. For compatible partitions this is the
    /// partition itself.
    pub fn image_under(&self, sys: &FiniteMetricSystem) -> Self {
        let mut class_of = vec![0usize; self.class_of.len()];
        for (p, &k) in self.class_of.iter().enumerate() {
            class_of[sys.apply(p)] = k;
        }
        Self::from_class_of(class_of)
    }

    /// Display name of a class, e.g. `{a,b}`.
    pub fn class_name(&self, sys: &FiniteMetricSystem, class: usize) -> String {
        let members: Vec<&str> = self.classes[class]
            .iter()
            .map(|&p| sys.point_name(p))
            .collect();
        format!("{{{}}}", members.join(","))
    }

    pub fn to_json(&self, sys: &FiniteMetricSystem) -> String {
        let file = PartitionFile {
            classes: self
                .classes
                .iter()
                .map(|c| c.iter().map(|&p| sys.point_name(p).to_string()).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("partition serialization cannot fail")
    }

    pub fn from_json(sys: &FiniteMetricSystem, source: &str) -> Result<Self> {
        let file: PartitionFile =
            serde_json::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
        let mut classes = Vec::with_capacity(file.classes.len());
        for class in &file.classes {
            let mut indices = Vec::with_capacity(class.len());
            for name in class {
                let idx = sys
                    .index_of(name)
                    .ok_or_else(|| Error::Parse(format!("unknown point {name:?}")))?;
                indices.push(idx);
            }
            classes.push(indices);
        }
        Self::from_classes(sys.len(), classes)
    }
}

/// The orbit-closeness partition at `alpha`, plus the record of whether
/// semi-expansiveness (the sufficient condition for transitivity) held.
#[derive(Debug, Clone)]
pub struct LewowiczRelation {
    pub partition: Partition,
    /// True when the system is `alpha`-semi-expansive; transitivity can hold
    /// without it.
    pub semi_expansive: bool,
}

/// Computes the relation `D(x,y) <= alpha` and returns its partition when
/// transitive; otherwise errors with a witness triple.
///
/// Compatibility with the map is automatic because `D` is invariant under
/// it.
pub fn lewowicz_relation(sys: &FiniteMetricSystem, alpha: &Rational) -> Result<LewowiczRelation> {
    if !alpha.is_positive() {
        return Err(Error::BadThresholds(format!(
            "need alpha > 0, got alpha = {alpha}"
        )));
    }
    let n = sys.len();
    let sup = sys.orbit_sup_matrix();
    let related = |x: usize, y: usize| sup[x][y] <= *alpha;
    for x in 0..n {
        for y in 0..n {
            if !related(x, y) {
                continue;
            }
            for z in 0..n {
                if related(y, z) && !related(x, z) {
                    return Err(Error::NotTransitive {
                        x: sys.point_name(x).to_string(),
                        y: sys.point_name(y).to_string(),
                        z: sys.point_name(z).to_string(),
                    });
                }
            }
        }
    }
    let mut class_of = vec![usize::MAX; n];
    let mut next = 0usize;
    for x in 0..n {
        if class_of[x] != usize::MAX {
            continue;
        }
        for y in x..n {
            if related(x, y) {
                class_of[y] = next;
            }
        }
        next += 1;
    }
    let partition = Partition::from_class_of(class_of);
    debug_assert!(partition.compatibility_violation(sys).is_none());
    let semi_expansive = expansivity::is_semi_expansive(sys, alpha)?.holds;
    Ok(LewowiczRelation {
        partition,
        semi_expansive,
    })
}

/// Diameter of each class, in class order.
pub fn class_diameters(partition: &Partition, sys: &FiniteMetricSystem) -> Vec<Rational> {
    partition
        .classes()
        .iter()
        .map(|class| {
            let mut diam = Rational::zero();
            for (i, &x) in class.iter().enumerate() {
                for &y in &class[i + 1..] {
                    if *sys.dist(x, y) > diam {
                        diam = sys.dist(x, y).clone();
                    }
                }
            }
            diam
        })
        .collect()
}

/// A base system together with a compatible partition and the induced
/// system on classes under the Hausdorff metric.
#[derive(Debug, Clone)]
pub struct QuotientSystem {
    pub base: FiniteMetricSystem,
    pub partition: Partition,
    pub quotient: FiniteMetricSystem,
}

impl QuotientSystem {
    /// Class index of a base point.
    pub fn project(&self, point: usize) -> usize {
        self.partition.class_of(point)
    }
}

/// Hausdorff distance between two nonempty point sets.
pub fn hausdorff_distance(sys: &FiniteMetricSystem, a: &[usize], b: &[usize]) -> Rational {
    let one_sided = |from: &[usize], to: &[usize]| {
        from.iter()
            .map(|&x| to.iter().map(|&y| sys.dist(x, y).clone()).min().unwrap())
            .max()
            .unwrap()
    };
    std::cmp::max(one_sided(a, b), one_sided(b, a))
}

/// Builds the quotient system: points are classes, the metric is the
/// Hausdorff distance, the map is the induced one. Validates compatibility
/// and the metric axioms on the result.
pub fn build_quotient(sys: &FiniteMetricSystem, partition: &Partition) -> Result<QuotientSystem> {
    if let Some((x, y)) = partition.compatibility_violation(sys) {
        return Err(Error::NotCompatible {
            x: sys.point_name(x).to_string(),
            y: sys.point_name(y).to_string(),
        });
    }
    let k = partition.len();
    let mut metric = vec![vec![Rational::zero(); k]; k];
    for a in 0..k {
        for b in (a + 1)..k {
            let d = hausdorff_distance(sys, &partition.classes()[a], &partition.classes()[b]);
            if d.is_zero() {
                return Err(Error::DegenerateMetric {
                    a: partition.class_name(sys, a),
                    b: partition.class_name(sys, b),
                });
            }
            metric[a][b] = d.clone();
            metric[b][a] = d;
        }
    }
    let map: Vec<usize> = partition
        .classes()
        .iter()
        .map(|class| partition.class_of(sys.apply(class[0])))
        .collect();
    let names = (0..k).map(|c| partition.class_name(sys, c)).collect();
    let quotient = FiniteMetricSystem::new(names, metric, map)?;
    for x in 0..sys.len() {
        debug_assert_eq!(
            quotient.apply(partition.class_of(x)),
            partition.class_of(sys.apply(x)),
            "projection must intertwine the maps"
        );
    }
    Ok(QuotientSystem {
        base: sys.clone(),
        partition: partition.clone(),
        quotient,
    })
}

/// Certificate for the rescaled-metric construction on an expansive
/// quotient.
#[derive(Debug, Clone, Serialize)]
pub struct LewowiczMetricCertificate {
    pub alpha: Rational,
    /// `alpha / (2 diam(base) + 1)`.
    pub k: Rational,
    /// `d1(x,y) = d_R([x],[y]) + K d(x,y)`.
    pub d1: Vec<Vec<Rational>>,
    /// The base system under `d1` is `alpha`-semi-expansive.
    pub verified_semi_expansive: bool,
    /// The orbit-closeness relation of `d1` at `alpha` recovers the
    /// partition exactly.
    pub verified_relation_match: bool,
}

/// Runs the quotient-to-base direction: from a quotient expansive at
/// `alpha`, builds `d1 = d_R + K d` and verifies that the base becomes
/// `alpha`-semi-expansive with orbit-closeness relation exactly the given
/// partition. Both flags are guaranteed; a false one indicates a bug.
pub fn lewowicz_metric(q: &QuotientSystem, alpha: &Rational) -> Result<LewowiczMetricCertificate> {
    if !alpha.is_positive() {
        return Err(Error::BadThresholds(format!(
            "need alpha > 0, got alpha = {alpha}"
        )));
    }
    if let Some(sup) = q.quotient.expansivity_sup() {
        if *alpha >= sup {
            return Err(Error::AlphaTooLarge {
                alpha: alpha.clone(),
                reason: format!(
                    "quotient is expansive only below {sup}, its least orbit separation"
                ),
            });
        }
    }
    let base = &q.base;
    let n = base.len();
    let k = alpha / &(&(&Rational::integer(2) * base.diameter()) + &Rational::one());
    let mut d1 = vec![vec![Rational::zero(); n]; n];
    for x in 0..n {
        for y in 0..n {
            let dr = q.quotient.dist(q.project(x), q.project(y));
            d1[x][y] = dr + &(&k * base.dist(x, y));
        }
    }
    let rescaled = base.with_metric(d1.clone())?;
    let verified_semi_expansive = expansivity::is_semi_expansive(&rescaled, alpha)?.holds;
    let verified_relation_match = match lewowicz_relation(&rescaled, alpha) {
        Ok(rel) => rel.partition == q.partition,
        Err(_) => false,
    };
    Ok(LewowiczMetricCertificate {
        alpha: alpha.clone(),
        k,
        d1,
        verified_semi_expansive,
        verified_relation_match,
    })
}

/// The projected ball cover of the quotient, with its validity check.
#[derive(Debug, Clone)]
pub struct ExpansivityCover {
    pub quotient: QuotientSystem,
    /// Cover of the quotient point set by projected saturated balls.
    pub cover: Cover,
    /// True when the cover is an expansivity cover for the quotient map.
    pub valid: bool,
}

/// Runs the base-to-quotient direction: from an `alpha`-semi-expansive base
/// whose orbit-closeness partition is `partition`, projects the saturated
/// open `alpha/2`-balls to a cover of the quotient and checks it is an
/// expansivity cover (equivalently a generator: on finite discrete models
/// closures are identities).
pub fn expansivity_cover(
    sys: &FiniteMetricSystem,
    alpha: &Rational,
    partition: &Partition,
) -> Result<ExpansivityCover> {
    let cert = expansivity::is_semi_expansive(sys, alpha)?;
    if !cert.holds {
        let w = cert.witness.expect("failed certificate carries a witness");
        return Err(Error::NotSemiExpansive {
            alpha: alpha.clone(),
            x: w.x,
            y: w.y,
        });
    }
    let relation = lewowicz_relation(sys, alpha)?;
    if relation.partition != *partition {
        return Err(Error::BadParameters(
            "partition is not the orbit-closeness partition at alpha".into(),
        ));
    }
    let q = build_quotient(sys, partition)?;
    let n = sys.len();
    let radius = alpha.half();
    let mut members: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    for x in 0..n {
        // Classes entirely inside the open ball B_{alpha/2}(x).
        let member: BTreeSet<usize> = (0..partition.len())
            .filter(|&c| {
                partition.classes()[c]
                    .iter()
                    .all(|&y| *sys.dist(x, y) < radius)
            })
            .collect();
        debug_assert!(
            member.contains(&partition.class_of(x)),
            "each class has diameter below alpha/2 and fits in its own ball"
        );
        members.insert(member);
    }
    let cover = Cover::new(q.quotient.len(), members.into_iter().collect())?;
    let valid = covers::is_generator(&q.quotient, &cover).holds;
    Ok(ExpansivityCover {
        quotient: q,
        cover,
        valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::ratio;
    use crate::system::product_system;

    fn example_product() -> FiniteMetricSystem {
        let seg = fixtures::line(2, &Rational::integer(2));
        product_system(&seg, &seg, &Rational::integer(2), &ratio(1, 3)).unwrap()
    }

    #[test]
    fn relation_examples() {
        let c3 = fixtures::cycle(3);
        let rel = lewowicz_relation(&c3, &ratio(1, 2)).unwrap();
        assert_eq!(rel.partition, Partition::singletons(3));
        assert!(rel.semi_expansive);

        // Transitive despite semi-expansiveness failing: sufficient, not
        // necessary.
        let rel = lewowicz_relation(&c3, &Rational::one()).unwrap();
        assert_eq!(rel.partition, Partition::total(3));
        assert!(!rel.semi_expansive);

        let l4 = fixtures::line(4, &Rational::one());
        match lewowicz_relation(&l4, &Rational::one()).unwrap_err() {
            Error::NotTransitive { x, y, z } => {
                assert_eq!((x.as_str(), y.as_str(), z.as_str()), ("0", "1", "2"));
            }
            other => panic!("expected NotTransitive, got {other}"),
        }
    }

    #[test]
    fn class_diameter_examples() {
        let c3 = fixtures::cycle(3);
        assert_eq!(
            class_diameters(&Partition::singletons(3), &c3),
            vec![Rational::zero(); 3]
        );
        assert_eq!(
            class_diameters(&Partition::total(3), &c3),
            vec![Rational::one()]
        );

        let prod = example_product();
        let rel = lewowicz_relation(&prod, &Rational::integer(2)).unwrap();
        let diams = class_diameters(&rel.partition, &prod);
        assert_eq!(diams, vec![ratio(2, 3), ratio(2, 3)]);
        assert!(diams.iter().all(|d| *d < Rational::one()));
    }

    #[test]
    fn quotient_examples() {
        let c3 = fixtures::cycle(3);
        let q = build_quotient(&c3, &Partition::singletons(3)).unwrap();
        assert_eq!(q.quotient.len(), 3);
        assert_eq!(q.quotient.map(), c3.map());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(q.quotient.dist(i, j), c3.dist(i, j));
            }
        }

        let q = build_quotient(&c3, &Partition::total(3)).unwrap();
        assert_eq!(q.quotient.len(), 1);

        let prod = example_product();
        let rel = lewowicz_relation(&prod, &Rational::integer(2)).unwrap();
        let q = build_quotient(&prod, &rel.partition).unwrap();
        assert_eq!(q.quotient.len(), 2);
        assert_eq!(*q.quotient.dist(0, 1), Rational::integer(4));
        assert_eq!(q.quotient.map(), &[0, 1]);
    }

    #[test]
    fn incompatible_partition_is_rejected() {
        // On C4, pairing each point with its neighbor is not compatible with
        // the rotation.
        let c4 = fixtures::cycle(4);
        let partition = Partition::from_classes(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert!(matches!(
            build_quotient(&c4, &partition).unwrap_err(),
            Error::NotCompatible { .. }
        ));
    }

    #[test]
    fn rescaled_metric_k_formula() {
        // alpha = 1, base diameter 2 gives K = 1/5.
        let two = fixtures::line(2, &Rational::integer(2));
        let q = build_quotient(&two, &Partition::singletons(2)).unwrap();
        let cert = lewowicz_metric(&q, &Rational::one()).unwrap();
        assert_eq!(cert.k, ratio(1, 5));
        assert!(cert.verified_semi_expansive && cert.verified_relation_match);
    }

    #[test]
    fn rescaled_metric_on_c3_singletons() {
        let c3 = fixtures::cycle(3);
        let q = build_quotient(&c3, &Partition::singletons(3)).unwrap();
        let cert = lewowicz_metric(&q, &ratio(1, 2)).unwrap();
        assert_eq!(cert.k, ratio(1, 6));
        for x in 0..3 {
            for y in 0..3 {
                assert_eq!(cert.d1[x][y], &ratio(7, 6) * c3.dist(x, y));
            }
        }
        assert!(cert.verified_semi_expansive && cert.verified_relation_match);
    }

    #[test]
    fn rescaled_metric_on_product_fibers() {
        let prod = example_product();
        let rel = lewowicz_relation(&prod, &Rational::integer(2)).unwrap();
        let q = build_quotient(&prod, &rel.partition).unwrap();
        let cert = lewowicz_metric(&q, &Rational::integer(2)).unwrap();
        assert_eq!(cert.k, ratio(6, 31));
        assert!(cert.verified_semi_expansive && cert.verified_relation_match);
        // d_R([x],[y]) <= d1(x,y) everywhere.
        for x in 0..prod.len() {
            for y in 0..prod.len() {
                let dr = q.quotient.dist(q.project(x), q.project(y));
                assert!(*dr <= cert.d1[x][y]);
            }
        }
        // The quotient is expansive only below 4.
        assert!(matches!(
            lewowicz_metric(&q, &Rational::integer(4)).unwrap_err(),
            Error::AlphaTooLarge { .. }
        ));
    }

    #[test]
    fn expansivity_cover_examples() {
        let c3 = fixtures::cycle(3);
        let result = expansivity_cover(&c3, &ratio(1, 2), &Partition::singletons(3)).unwrap();
        assert!(result.valid);
        assert_eq!(result.cover.sets().len(), 3);
        assert!(result.cover.sets().iter().all(|s| s.len() == 1));

        let one = fixtures::cycle(1);
        let result = expansivity_cover(&one, &Rational::one(), &Partition::singletons(1)).unwrap();
        assert!(result.valid);
        assert_eq!(result.cover.sets().len(), 1);

        let prod = example_product();
        let rel = lewowicz_relation(&prod, &Rational::integer(2)).unwrap();
        let result = expansivity_cover(&prod, &Rational::integer(2), &rel.partition).unwrap();
        assert!(result.valid);
        assert_eq!(result.quotient.quotient.len(), 2);
        assert!(result.cover.sets().iter().all(|s| s.len() == 1));

        assert!(matches!(
            expansivity_cover(&c3, &Rational::one(), &Partition::total(3)).unwrap_err(),
            Error::NotSemiExpansive { .. }
        ));
    }

    #[test]
    fn partition_json_round_trip() {
        let prod = example_product();
        let rel = lewowicz_relation(&prod, &Rational::integer(2)).unwrap();
        let json = rel.partition.to_json(&prod);
        let back = Partition::from_json(&prod, &json).unwrap();
        assert_eq!(back, rel.partition);
    }

    #[test]
    fn interval_factor_collapses_to_the_base() {
        // Crossing an expansive system with a grid discretization of the
        // unit interval, second coordinate scaled by alpha/3, gives an
        // alpha-semi-expansive product whose classes are the interval
        // fibers and whose quotient is conjugate to the first factor.
        let c3 = fixtures::cycle(3);
        let alpha = ratio(1, 2);
        let grid = fixtures::line(5, &ratio(1, 4));
        let prod = product_system(
            &c3,
            &grid,
            &Rational::one(),
            &(&alpha / &Rational::integer(3)),
        )
        .unwrap();
        assert!(expansivity::is_semi_expansive(&prod, &alpha).unwrap().holds);
        let rel = lewowicz_relation(&prod, &alpha).unwrap();
        assert_eq!(rel.partition.len(), 3);
        for class in rel.partition.classes() {
            assert_eq!(class.len(), 5);
        }
        let q = build_quotient(&prod, &rel.partition).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(q.quotient.dist(a, b), c3.dist(a, b));
            }
        }
        assert_eq!(q.quotient.map(), c3.map());
    }

    #[test]
    fn classes_are_invariant_under_the_map() {
        for seed in 0..20 {
            let sys = fixtures::random(6, seed);
            for alpha in sys.orbit_sup_values() {
                if !alpha.is_positive() {
                    continue;
                }
                if let Ok(rel) = lewowicz_relation(&sys, &alpha) {
                    assert_eq!(rel.partition.image_under(&sys), rel.partition);
                }
            }
        }
    }

    #[test]
    fn round_trip_recovers_partition_on_random_systems() {
        for seed in 0..15 {
            let sys = fixtures::random(5, seed);
            for alpha in sys.orbit_sup_values() {
                if !alpha.is_positive() {
                    continue;
                }
                let Ok(rel) = lewowicz_relation(&sys, &alpha) else {
                    continue;
                };
                let q = build_quotient(&sys, &rel.partition).unwrap();
                // Any threshold below the quotient's expansivity bound works;
                // half of it keeps the test inside the valid range.
                let alpha_r = match q.quotient.expansivity_sup() {
                    Some(sup) => sup.half(),
                    None => Rational::one(),
                };
                let cert = lewowicz_metric(&q, &alpha_r).unwrap();
                assert!(cert.verified_semi_expansive, "seed {seed} alpha {alpha}");
                assert!(cert.verified_relation_match, "seed {seed} alpha {alpha}");
            }
        }
    }

    #[test]
    fn class_diameters_below_epsilon_for_certified_systems() {
        for seed in 0..15 {
            let sys = fixtures::random(5, seed + 40);
            for alpha in sys.orbit_sup_values() {
                if !alpha.is_positive() {
                    continue;
                }
                for epsilon in sys.metric_values() {
                    if !epsilon.is_positive() || epsilon > alpha.half() {
                        continue;
                    }
                    let cert = expansivity::is_eps_alpha_expansive(&sys, &epsilon, &alpha).unwrap();
                    if !cert.holds {
                        continue;
                    }
                    let rel = lewowicz_relation(&sys, &alpha).unwrap();
                    for diam in class_diameters(&rel.partition, &sys) {
                        assert!(diam < epsilon);
                    }
                }
            }
        }
    }
}
