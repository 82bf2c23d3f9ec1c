//! Stability of quotient semiconjugacies under perturbation.
//!
//! For a system that is semi-Anosov at `alpha` with step size `delta`, any
//! permutation `g` within `C0`-distance `delta` of the map has every
//! `g`-orbit `alpha/4`-shadowed by a true orbit. Two shadowing points stay
//! within `alpha/2` of each other for all time, so they share an
//! orbit-closeness class: the class map `q_g` is well defined and satisfies
//! `f_R . q_g = q_g . g` exactly. On a finite space the neighborhood of the
//! map is a finite set of permutations, so the sweep enumerates it and
//! reports honestly which perturbations admit a semiconjugacy; the
//! guaranteed regime is `c0(f,g) < delta`.
//!
//! Continuity of `q_g`, a substantial matter on infinite spaces, is
//! automatic on finite discrete models and not separately verified.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quotients::{self, QuotientSystem};
use crate::rational::Rational;
use crate::shadowing;
use crate::system::FiniteMetricSystem;

/// A semiconjugacy candidate for one perturbation.
#[derive(Debug, Clone, Serialize)]
pub struct SemiconjugacyResult {
    /// The perturbed permutation.
    pub g: Vec<usize>,
    /// Class assigned to each point: the class of any shadowing point of
    /// its `g`-orbit.
    pub q_g: Vec<usize>,
    /// `f_R . q_g = q_g . g` holds pointwise.
    pub verified_semiconjugacy: bool,
    /// Exhaustive uniqueness among class maps within half the quotient
    /// expansivity bound of the projection; `None` when the class count
    /// exceeds the search cap.
    pub unique_in_neighborhood: Option<bool>,
    /// `max_x d_R(q_g(x), q(x))`.
    pub c0_distance_to_q: Rational,
    /// `max_x d(f x, g x)`.
    pub c0_distance_f_g: Rational,
    /// True when `c0(f,g) < delta`, the regime with guaranteed success.
    pub within_guarantee: bool,
}

fn perm_period(g: &[usize], x: usize) -> u64 {
    let mut p = 1u64;
    let mut cursor = g[x];
    while cursor != x {
        cursor = g[cursor];
        p += 1;
    }
    p
}

/// Builds the semiconjugacy for one perturbation `g`.
///
/// The partition must be the orbit-closeness partition at `alpha` and the
/// system must certify semi-Anosov at `alpha`; the resulting `delta` is the
/// guarantee radius. Fails with [`Error::NoShadowingPoint`] when some
/// `g`-orbit admits no `alpha/4`-shadowing point, which signals that `g`
/// lies outside the stability neighborhood.
pub fn build_semiconjugacy(
    sys: &FiniteMetricSystem,
    partition: &quotients::Partition,
    alpha: &Rational,
    g: &[usize],
    subset_cap: usize,
    uniqueness_class_cap: usize,
) -> Result<SemiconjugacyResult> {
    let c0_distance_f_g = sys.c0_distance(g)?;
    let relation = quotients::lewowicz_relation(sys, alpha)?;
    if relation.partition != *partition {
        return Err(Error::BadParameters(
            "partition is not the orbit-closeness partition at alpha".into(),
        ));
    }
    let cert = shadowing::certify_semi_anosov(sys, alpha, subset_cap)?;
    if !cert.certified {
        return Err(Error::NotSemiAnosov {
            alpha: alpha.clone(),
            reason: "semiconjugacies are only guaranteed for semi-Anosov systems".into(),
        });
    }
    let delta = cert.delta.expect("certified certificate carries delta");
    let quotient = quotients::build_quotient(sys, partition)?;
    let radius = alpha.half().half();
    let n = sys.len();

    let q_g = compute_class_map(sys, partition, g, &radius)?;

    let verified_semiconjugacy = (0..n).all(|x| quotient.quotient.apply(q_g[x]) == q_g[g[x]]);
    let c0_distance_to_q = (0..n)
        .map(|x| {
            quotient
                .quotient
                .dist(q_g[x], partition.class_of(x))
                .clone()
        })
        .max()
        .unwrap();
    let unique_in_neighborhood = if partition.len() <= uniqueness_class_cap {
        Some(uniqueness_by_exhaustion(&quotient, g, &q_g))
    } else {
        None
    };
    Ok(SemiconjugacyResult {
        g: g.to_vec(),
        q_g,
        verified_semiconjugacy,
        unique_in_neighborhood,
        c0_distance_to_q,
        within_guarantee: c0_distance_f_g < delta,
        c0_distance_f_g,
    })
}

/// For each point, the class of its shadowing points: every `z` with
/// `d(f^i z, g^i x) < radius` over a full common period. All shadowing
/// points of one orbit must share a class.
fn compute_class_map(
    sys: &FiniteMetricSystem,
    partition: &quotients::Partition,
    g: &[usize],
    radius: &Rational,
) -> Result<Vec<usize>> {
    let n = sys.len();
    let mut q_g = vec![usize::MAX; n];
    for x in 0..n {
        let period_g = perm_period(g, x);
        let mut class: Option<usize> = None;
        for z in 0..n {
            let common = num_integer::lcm(sys.period_of(z), period_g);
            let (mut fz, mut gx) = (z, x);
            let mut shadows = true;
            for _ in 0..common {
                if sys.dist(fz, gx) >= radius {
                    shadows = false;
                    break;
                }
                fz = sys.apply(fz);
                gx = g[gx];
            }
            if !shadows {
                continue;
            }
            match class {
                None => class = Some(partition.class_of(z)),
                Some(c) if c != partition.class_of(z) => {
                    return Err(Error::AmbiguousClass {
                        point: sys.point_name(x).to_string(),
                        a: partition.class_name(sys, c),
                        b: partition.class_name(sys, partition.class_of(z)),
                    });
                }
                Some(_) => {}
            }
        }
        match class {
            Some(c) => q_g[x] = c,
            None => {
                return Err(Error::NoShadowingPoint {
                    point: sys.point_name(x).to_string(),
                    epsilon: radius.clone(),
                })
            }
        }
    }
    Ok(q_g)
}

/// Exhaustively checks that no other class map both intertwines with `g`
/// and stays within half the quotient expansivity bound of the projection.
fn uniqueness_by_exhaustion(quotient: &QuotientSystem, g: &[usize], q_g: &[usize]) -> bool {
    let classes = quotient.partition.len();
    let n = quotient.base.len();
    let Some(alpha_r) = quotient.quotient.expansivity_sup() else {
        // A single class admits a single class map.
        return true;
    };
    let half = alpha_r.half();
    let mut candidate = vec![0usize; n];
    loop {
        let semiconjugate =
            (0..n).all(|x| quotient.quotient.apply(candidate[x]) == candidate[g[x]]);
        if semiconjugate {
            let in_ball = (0..n).all(|x| {
                *quotient
                    .quotient
                    .dist(candidate[x], quotient.partition.class_of(x))
                    < half
            });
            if in_ball && candidate != q_g {
                return false;
            }
        }
        // Odometer over all class maps.
        let mut pos = 0;
        loop {
            if pos == n {
                return true;
            }
            candidate[pos] += 1;
            if candidate[pos] < classes {
                break;
            }
            candidate[pos] = 0;
            pos += 1;
        }
    }
}

/// One row of the neighborhood sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub g: Vec<usize>,
    pub success: bool,
    pub error: Option<String>,
    pub distance: Option<Rational>,
    pub unique: Option<bool>,
}

/// Aggregate of a neighborhood sweep.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub alpha: Rational,
    pub radius: Rational,
    /// The certified semi-Anosov step size: success is guaranteed whenever
    /// `c0(f,g) < delta`.
    pub delta: Rational,
    /// Whole neighborhood enumerated, as opposed to a seeded sample.
    pub exhaustive: bool,
    pub candidates: usize,
    pub successes: usize,
    pub max_distance_to_q: Option<Rational>,
    pub all_unique: Option<bool>,
    pub rows: Vec<SweepRow>,
}

/// Enumerates every permutation within `C0`-distance `radius` of the map
/// (strictly), attempts a semiconjugacy for each, and tabulates the
/// outcomes. Rows are ordered lexicographically by permutation.
///
/// Above the enumeration cap the sweep needs an explicit `sample`: it then
/// draws that many seeded random permutations instead of the full
/// neighborhood, which is reported as such rather than passed off as
/// exhaustive.
#[allow(clippy::too_many_arguments)]
pub fn stability_sweep(
    sys: &FiniteMetricSystem,
    partition: &quotients::Partition,
    alpha: &Rational,
    radius: &Rational,
    enumeration_cap: usize,
    subset_cap: usize,
    sample: Option<(usize, u64)>,
) -> Result<StabilityReport> {
    let n = sys.len();
    if n > enumeration_cap && sample.is_none() {
        return Err(Error::TooLarge(format!(
            "sweep enumerates n! permutations; n = {n} exceeds the cap {enumeration_cap} \
             and no sample count was given"
        )));
    }
    let cert = shadowing::certify_semi_anosov(sys, alpha, subset_cap)?;
    if !cert.certified {
        return Err(Error::NotSemiAnosov {
            alpha: alpha.clone(),
            reason: "the sweep needs a certified semi-Anosov base".into(),
        });
    }
    let delta = cert.delta.expect("certified certificate carries delta");
    let candidates: Vec<Vec<usize>> = match (n > enumeration_cap, sample) {
        (true, Some((count, seed))) => {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut drawn: Vec<Vec<usize>> = (0..count)
                .map(|_| {
                    let mut g: Vec<usize> = (0..n).collect();
                    g.shuffle(&mut rng);
                    g
                })
                .collect();
            drawn.push(sys.map().to_vec());
            drawn.sort();
            drawn.dedup();
            drawn
        }
        _ => crate::fixtures::all_permutations(n),
    };
    let exhaustive = n <= enumeration_cap;
    let neighborhood: Vec<Vec<usize>> = candidates
        .into_iter()
        .filter(|g| {
            sys.c0_distance(g)
                .expect("candidate permutations are valid")
                < *radius
        })
        .collect();
    let rows: Vec<SweepRow> = crate::par::map_slice(&neighborhood, |g| {
        match build_semiconjugacy(sys, partition, alpha, g, subset_cap, 4) {
            Ok(result) => SweepRow {
                g: g.clone(),
                success: true,
                error: None,
                distance: Some(result.c0_distance_to_q),
                unique: result.unique_in_neighborhood,
            },
            Err(err) => SweepRow {
                g: g.clone(),
                success: false,
                error: Some(err.code().to_string()),
                distance: None,
                unique: None,
            },
        }
    });
    let successes = rows.iter().filter(|r| r.success).count();
    let max_distance_to_q = rows.iter().filter_map(|r| r.distance.clone()).max();
    let unique_flags: Vec<bool> = rows.iter().filter_map(|r| r.unique).collect();
    let all_unique = if unique_flags.is_empty() {
        None
    } else {
        Some(unique_flags.iter().all(|&u| u))
    };
    Ok(StabilityReport {
        alpha: alpha.clone(),
        radius: radius.clone(),
        delta,
        exhaustive,
        candidates: rows.len(),
        successes,
        max_distance_to_q,
        all_unique,
        rows,
    })
}
