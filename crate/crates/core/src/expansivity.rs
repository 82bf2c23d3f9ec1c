//! Expansiveness certificates.
//!
//! A system is `[eps,alpha]`-expansive when every pair whose orbits stay
//! within `alpha` for all time (orbit sup distance `D <= alpha`) is closer
//! than `eps` now (`d < eps`, strict). The threshold conventions are fixed
//! throughout the crate: `<= alpha` on the hypothesis side, `< eps` on the
//! conclusion side.
//!
//! Every finite system is expansive once `alpha` drops below the least orbit
//! sup distance of a distinct pair, so certificates here are quantitative:
//! they pin down which `(eps, alpha)` hold, not whether some threshold
//! exists.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::system::FiniteMetricSystem;

/// Outcome of an `[eps,alpha]`-expansiveness check.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansivityCertificate {
    pub epsilon: Rational,
    pub alpha: Rational,
    pub holds: bool,
    /// Holds for the degenerate reason that the whole space has diameter
    /// below `epsilon`.
    pub trivial: bool,
    pub witness: Option<ExpansivityWitness>,
    /// Least window half-width that already forces the conclusion; present
    /// only when the certificate holds.
    pub uniform_index: Option<u64>,
}

/// A violating pair: orbits stay within `alpha` yet the points are at least
/// `epsilon` apart.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansivityWitness {
    pub x: String,
    pub y: String,
    pub orbit_sup: Rational,
    pub distance: Rational,
}

/// One band of the expansiveness region: for `alpha` in
/// `[alpha_from, alpha_to)` the system is `[eps,alpha]`-expansive exactly
/// when `eps > min_epsilon` (and `eps <= alpha`).
#[derive(Debug, Clone, Serialize)]
pub struct RegionBand {
    pub alpha_from: Rational,
    /// `None` on the last, unbounded band.
    pub alpha_to: Option<Rational>,
    /// Exclusive lower bound on admissible `eps`.
    pub min_epsilon: Rational,
}

/// First violating pair under the raw implication, with no constraint
/// between the thresholds. Used by the window and gap scans, which evaluate
/// the condition at degenerate thresholds such as `eps > alpha` or
/// `eps <= 0`.
pub(crate) fn raw_violation(
    sys: &FiniteMetricSystem,
    epsilon: &Rational,
    alpha: &Rational,
) -> Option<(usize, usize)> {
    let n = sys.len();
    for x in 0..n {
        for y in x..n {
            if sys.orbit_sup_distance(x, y) <= *alpha && *sys.dist(x, y) >= *epsilon {
                return Some((x, y));
            }
        }
    }
    None
}

fn certificate(
    sys: &FiniteMetricSystem,
    epsilon: Rational,
    alpha: Rational,
) -> ExpansivityCertificate {
    let violation = raw_violation(sys, &epsilon, &alpha);
    let holds = violation.is_none();
    ExpansivityCertificate {
        trivial: holds && *sys.diameter() < epsilon,
        witness: violation.map(|(x, y)| ExpansivityWitness {
            x: sys.point_name(x).to_string(),
            y: sys.point_name(y).to_string(),
            orbit_sup: sys.orbit_sup_distance(x, y),
            distance: sys.dist(x, y).clone(),
        }),
        uniform_index: holds.then(|| minimal_uniform_index(sys, &epsilon, &alpha)),
        epsilon,
        alpha,
        holds,
    }
}

/// Decides `[epsilon,alpha]`-expansiveness and certifies the outcome.
///
/// Requires `0 < epsilon <= alpha`. Inputs with `epsilon` above the diameter
/// are accepted and flagged trivial.
pub fn is_eps_alpha_expansive(
    sys: &FiniteMetricSystem,
    epsilon: &Rational,
    alpha: &Rational,
) -> Result<ExpansivityCertificate> {
    if !epsilon.is_positive() || epsilon > alpha {
        return Err(Error::BadThresholds(format!(
            "need 0 < epsilon <= alpha, got epsilon = {epsilon}, alpha = {alpha}"
        )));
    }
    Ok(certificate(sys, epsilon.clone(), alpha.clone()))
}

/// Semi-expansiveness at `alpha` is `[alpha/2, alpha]`-expansiveness.
pub fn is_semi_expansive(
    sys: &FiniteMetricSystem,
    alpha: &Rational,
) -> Result<ExpansivityCertificate> {
    if !alpha.is_positive() {
        return Err(Error::BadThresholds(format!(
            "need alpha > 0, got alpha = {alpha}"
        )));
    }
    Ok(certificate(sys, alpha.half(), alpha.clone()))
}

/// Windowed orbit sup distance `max d(f^n x, f^n y)` over `|n| <= half_width`.
fn windowed_sup(sys: &FiniteMetricSystem, x: usize, y: usize, half_width: u64) -> Rational {
    let mut best = sys.dist(x, y).clone();
    let (mut a, mut b) = (x, y);
    let (mut ra, mut rb) = (x, y);
    for _ in 0..half_width {
        a = sys.apply(a);
        b = sys.apply(b);
        ra = sys.apply_inv(ra);
        rb = sys.apply_inv(rb);
        for (u, v) in [(a, b), (ra, rb)] {
            if *sys.dist(u, v) > best {
                best = sys.dist(u, v).clone();
            }
        }
    }
    best
}

fn window_condition_holds(
    sys: &FiniteMetricSystem,
    epsilon: &Rational,
    alpha: &Rational,
    half_width: u64,
) -> bool {
    let n = sys.len();
    for x in 0..n {
        for y in x..n {
            if windowed_sup(sys, x, y, half_width) <= *alpha && sys.dist(x, y) >= epsilon {
                return false;
            }
        }
    }
    true
}

fn minimal_uniform_index(sys: &FiniteMetricSystem, epsilon: &Rational, alpha: &Rational) -> u64 {
    (0..=sys.order())
        .find(|&w| window_condition_holds(sys, epsilon, alpha, w))
        .expect("window of half-width order(f) reduces to the full condition")
}

/// Least `N` such that orbits agreeing within `alpha` on the window
/// `|n| <= N` are already closer than `epsilon`. `N <= order(f)` always
/// suffices on a finite system.
///
/// Errors with [`Error::NotExpansive`] when the hypothesis fails, i.e. the
/// system is not `[epsilon,alpha]`-expansive in the raw sense.
pub fn uniform_index(
    sys: &FiniteMetricSystem,
    epsilon: &Rational,
    alpha: &Rational,
) -> Result<u64> {
    if let Some((x, y)) = raw_violation(sys, epsilon, alpha) {
        return Err(Error::NotExpansive {
            epsilon: epsilon.clone(),
            alpha: alpha.clone(),
            x: sys.point_name(x).to_string(),
            y: sys.point_name(y).to_string(),
        });
    }
    Ok(minimal_uniform_index(sys, epsilon, alpha))
}

/// Exact supremum of `delta >= 0` such that the system is
/// `[epsilon-delta, alpha+delta]`-expansive, with an attainment flag.
///
/// A pair `(x,y)` first violates the shifted condition at
/// `delta = max(D(x,y) - alpha, epsilon - d(x,y))`, and `delta = epsilon`
/// kills the diagonal, so the supremum is the least of those critical
/// values.
pub fn expansiveness_gap(
    sys: &FiniteMetricSystem,
    epsilon: &Rational,
    alpha: &Rational,
) -> Result<(Rational, bool)> {
    if let Some((x, y)) = raw_violation(sys, epsilon, alpha) {
        return Err(Error::NotExpansive {
            epsilon: epsilon.clone(),
            alpha: alpha.clone(),
            x: sys.point_name(x).to_string(),
            y: sys.point_name(y).to_string(),
        });
    }
    let n = sys.len();
    let mut sup = epsilon.clone();
    for x in 0..n {
        for y in x..n {
            let critical = std::cmp::max(
                sys.orbit_sup_distance(x, y) - alpha,
                epsilon - sys.dist(x, y),
            );
            if critical < sup {
                sup = critical;
            }
        }
    }
    let attained = raw_violation(sys, &(epsilon - &sup), &(alpha + &sup)).is_none();
    Ok((sup, attained))
}

/// Exact region structure over the critical grid of orbit sup values.
///
/// Within each band the set of admissible `eps` is constant because the
/// hypothesis set `{(x,y) : D(x,y) <= alpha}` only changes when `alpha`
/// crosses an orbit sup value.
pub fn expansiveness_region(sys: &FiniteMetricSystem) -> Vec<RegionBand> {
    let d_matrix: Vec<Vec<Rational>> = sys.metric().to_vec();
    let sup_matrix = sys.orbit_sup_matrix();
    let thresholds = sys.orbit_sup_values();
    let n = sys.len();
    let mut bands = Vec::with_capacity(thresholds.len());
    for (idx, alpha) in thresholds.iter().enumerate() {
        let mut min_epsilon = Rational::zero();
        for x in 0..n {
            for y in x..n {
                if sup_matrix[x][y] <= *alpha && d_matrix[x][y] > min_epsilon {
                    min_epsilon = d_matrix[x][y].clone();
                }
            }
        }
        bands.push(RegionBand {
            alpha_from: alpha.clone(),
            alpha_to: thresholds.get(idx + 1).cloned(),
            min_epsilon,
        });
    }
    bands
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::ratio;
    use crate::system::product_system;

    #[test]
    fn c3_certificates() {
        let c3 = fixtures::cycle(3);
        let cert = is_eps_alpha_expansive(&c3, &ratio(1, 2), &ratio(1, 2)).unwrap();
        assert!(cert.holds && !cert.trivial);
        assert_eq!(cert.uniform_index, Some(0));

        let cert = is_eps_alpha_expansive(&c3, &ratio(1, 2), &Rational::one()).unwrap();
        assert!(!cert.holds);
        let w = cert.witness.unwrap();
        assert_eq!((w.x.as_str(), w.y.as_str()), ("0", "1"));
        assert_eq!(w.orbit_sup, Rational::one());
        assert_eq!(w.distance, Rational::one());

        let cert =
            is_eps_alpha_expansive(&c3, &Rational::integer(2), &Rational::integer(5)).unwrap();
        assert!(cert.holds && cert.trivial);
    }

    #[test]
    fn threshold_validation() {
        let c3 = fixtures::cycle(3);
        assert!(matches!(
            is_eps_alpha_expansive(&c3, &Rational::zero(), &Rational::one()),
            Err(Error::BadThresholds(_))
        ));
        assert!(matches!(
            is_eps_alpha_expansive(&c3, &Rational::integer(2), &Rational::one()),
            Err(Error::BadThresholds(_))
        ));
        assert!(matches!(
            is_semi_expansive(&c3, &Rational::zero()),
            Err(Error::BadThresholds(_))
        ));
    }

    #[test]
    fn uniform_index_examples() {
        let c3 = fixtures::cycle(3);
        assert_eq!(uniform_index(&c3, &ratio(1, 2), &ratio(1, 2)).unwrap(), 0);

        // Identity map: the window size is irrelevant, every d <= 1 is < 3/2.
        let l4 = fixtures::line(4, &Rational::one());
        assert_eq!(
            uniform_index(&l4, &ratio(3, 2), &Rational::one()).unwrap(),
            0
        );

        assert!(matches!(
            uniform_index(&c3, &ratio(1, 2), &Rational::one()),
            Err(Error::NotExpansive { .. })
        ));
    }

    #[test]
    fn uniform_index_is_minimal_and_bounded() {
        for seed in 0..30 {
            let sys = fixtures::random(5, seed);
            for alpha in sys.orbit_sup_values() {
                if !alpha.is_positive() {
                    continue;
                }
                for epsilon in sys.metric_values() {
                    if !epsilon.is_positive() || epsilon > alpha {
                        continue;
                    }
                    let Ok(cert) = is_eps_alpha_expansive(&sys, &epsilon, &alpha) else {
                        continue;
                    };
                    if !cert.holds {
                        continue;
                    }
                    let n = cert.uniform_index.unwrap();
                    assert!(n <= sys.order());
                    assert!(window_condition_holds(&sys, &epsilon, &alpha, n));
                    if n > 0 {
                        assert!(!window_condition_holds(&sys, &epsilon, &alpha, n - 1));
                    }
                }
            }
        }
    }

    /// Independent gap oracle: evaluate the raw shifted condition at every
    /// critical candidate in ascending order; the supremum is the first
    /// failing candidate (the feasible set is downward closed and can only
    /// change at candidates).
    fn gap_oracle(sys: &FiniteMetricSystem, eps: &Rational, alpha: &Rational) -> (Rational, bool) {
        let mut candidates = vec![eps.clone()];
        for x in 0..sys.len() {
            for y in x..sys.len() {
                for c in [sys.orbit_sup_distance(x, y) - alpha, eps - sys.dist(x, y)] {
                    if c.is_positive() {
                        candidates.push(c);
                    }
                }
            }
        }
        candidates.sort();
        candidates.dedup();
        for c in candidates {
            if raw_violation(sys, &(eps - &c), &(alpha + &c)).is_some() {
                return (c, false);
            }
        }
        unreachable!("delta = epsilon always fails on the diagonal");
    }

    #[test]
    fn gap_examples_match_oracle() {
        let c3 = fixtures::cycle(3);
        let cases = [
            (&c3, ratio(1, 2), ratio(1, 2), ratio(1, 2)),
            (
                &c3,
                Rational::integer(2),
                Rational::integer(5),
                Rational::one(),
            ),
        ];
        for (sys, eps, alpha, expected) in cases {
            let (sup, attained) = expansiveness_gap(sys, &eps, &alpha).unwrap();
            assert_eq!(sup, expected);
            assert!(!attained);
            assert_eq!(gap_oracle(sys, &eps, &alpha), (sup, attained));
        }

        // eps = 3/2 exceeds alpha = 1 here; the raw condition still holds on
        // the line and the binding pair is the one at distance 1.
        let l4 = fixtures::line(4, &Rational::one());
        let (sup, attained) = expansiveness_gap(&l4, &ratio(3, 2), &Rational::one()).unwrap();
        assert_eq!(
            (sup.clone(), attained),
            gap_oracle(&l4, &ratio(3, 2), &Rational::one())
        );
        assert_eq!(sup, ratio(1, 2));

        assert!(matches!(
            expansiveness_gap(&c3, &ratio(1, 2), &Rational::one()),
            Err(Error::NotExpansive { .. })
        ));
    }

    #[test]
    fn gap_consistency_on_random_systems() {
        for seed in 0..20 {
            let sys = fixtures::random(4, seed);
            for alpha in sys.orbit_sup_values() {
                for epsilon in sys.metric_values() {
                    if !epsilon.is_positive() || epsilon > alpha {
                        continue;
                    }
                    if raw_violation(&sys, &epsilon, &alpha).is_some() {
                        continue;
                    }
                    let (sup, attained) = expansiveness_gap(&sys, &epsilon, &alpha).unwrap();
                    assert_eq!(gap_oracle(&sys, &epsilon, &alpha), (sup.clone(), attained));
                    // Strictly below the supremum the shifted condition holds.
                    let below = sup.half();
                    if below.is_positive() {
                        assert!(
                            raw_violation(&sys, &(&epsilon - &below), &(&alpha + &below)).is_none()
                        );
                    }
                    let above = &sup + &Rational::one();
                    assert!(
                        raw_violation(&sys, &(&epsilon - &above), &(&alpha + &above)).is_some()
                    );
                }
            }
        }
    }

    #[test]
    fn semi_expansive_examples() {
        let c3 = fixtures::cycle(3);
        assert!(is_semi_expansive(&c3, &ratio(1, 2)).unwrap().holds);
        let cert = is_semi_expansive(&c3, &Rational::one()).unwrap();
        assert!(!cert.holds);
        let w = cert.witness.unwrap();
        assert_eq!((w.x.as_str(), w.y.as_str()), ("0", "1"));

        let seg = fixtures::line(2, &Rational::integer(2));
        let prod = product_system(&seg, &seg, &Rational::integer(2), &ratio(1, 3)).unwrap();
        assert!(
            is_semi_expansive(&prod, &Rational::integer(2))
                .unwrap()
                .holds
        );
    }

    #[test]
    fn region_examples() {
        let c3 = fixtures::cycle(3);
        let region = expansiveness_region(&c3);
        assert_eq!(region.len(), 2);
        assert_eq!(region[0].alpha_from, Rational::zero());
        assert_eq!(region[0].alpha_to, Some(Rational::one()));
        assert_eq!(region[0].min_epsilon, Rational::zero());
        assert_eq!(region[1].alpha_from, Rational::one());
        assert_eq!(region[1].alpha_to, None);
        assert_eq!(region[1].min_epsilon, Rational::one());

        let one = fixtures::cycle(1);
        let region = expansiveness_region(&one);
        assert_eq!(region.len(), 1);
        assert_eq!(region[0].min_epsilon, Rational::zero());
        assert_eq!(region[0].alpha_to, None);

        let l4 = fixtures::line(4, &Rational::one());
        let region = expansiveness_region(&l4);
        let bounds: Vec<Rational> = region.iter().map(|b| b.min_epsilon.clone()).collect();
        assert_eq!(
            bounds,
            vec![
                Rational::zero(),
                Rational::one(),
                Rational::integer(2),
                Rational::integer(3)
            ]
        );
    }

    #[test]
    fn region_agrees_with_direct_checks() {
        for seed in 0..10 {
            let sys = fixtures::random(5, seed);
            let region = expansiveness_region(&sys);
            for band in &region {
                let alpha = match &band.alpha_to {
                    // A sample strictly inside the band.
                    Some(hi) => (&band.alpha_from + hi).half(),
                    None => &band.alpha_from + &Rational::one(),
                };
                let just_above = &band.min_epsilon + &ratio(1, 1000);
                assert!(raw_violation(&sys, &just_above, &alpha).is_none());
                if band.min_epsilon.is_positive() {
                    assert!(raw_violation(&sys, &band.min_epsilon, &alpha).is_some());
                }
            }
        }
    }

    #[test]
    fn monotonicity_property() {
        // Holding at (eps, alpha) implies holding at any weaker (eps' >= eps,
        // alpha' <= alpha).
        for seed in 0..15 {
            let sys = fixtures::random(5, seed + 100);
            let epsilons = sys.metric_values();
            let alphas = sys.orbit_sup_values();
            for alpha in &alphas {
                for epsilon in &epsilons {
                    if raw_violation(&sys, epsilon, alpha).is_some() {
                        continue;
                    }
                    for eps2 in &epsilons {
                        for alpha2 in &alphas {
                            if eps2 >= epsilon && alpha2 <= alpha {
                                assert!(raw_violation(&sys, eps2, alpha2).is_none());
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn raw_check_equals_window_check_at_order() {
        for seed in 0..15 {
            let sys = fixtures::random(5, seed + 50);
            let order = sys.order();
            for alpha in sys.orbit_sup_values() {
                for epsilon in sys.metric_values() {
                    if !epsilon.is_positive() {
                        continue;
                    }
                    assert_eq!(
                        raw_violation(&sys, &epsilon, &alpha).is_none(),
                        window_condition_holds(&sys, &epsilon, &alpha, order)
                    );
                }
            }
        }
    }
}
