//! Periodic sequence spaces and shadowing envelopes.
//!
//! The space of bi-infinite sequences over a finite system, with the
//! weighted metric `sum_k d(x_k, y_k) / 2^|k|`, is infinite even at desk
//! scale; this module works with its period-P truncation, where P is a
//! multiple of the map order so the orbit copy `i(x) = (x, fx, ..., f^{P-1}x)`
//! lands inside and the shift restricts to a rotation. Grouping the
//! bi-infinite sum by residue gives the exact per-position weights
//!
//! `c_r = (2^-r + 2^(r-P)) / (1 - 2^-P)`, with `sum_r c_r = 3`.
//!
//! Theorems are verified on this submodel; raising P refines the
//! approximation and every certificate names the P it was computed at.
//!
//! Step conventions: elements of the `rho`-space satisfy the closed
//! condition `d(f x_k, x_{k+1}) <= rho`, while pseudo-orbits stay strict
//! (`< delta`), matching the conventions used everywhere else.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansivity;
use crate::quotients::{self, QuotientSystem};
use crate::rational::Rational;
use crate::shadowing::{self, RestrictionGraph, ShadowingModulus};
use crate::system::FiniteMetricSystem;

/// Exact per-position weights of the period-P metric:
/// `c_r = (2^-r + 2^(r-P)) / (1 - 2^-P)` for `r` in `0..P`.
pub fn sigma_weights(period: u64) -> Vec<Rational> {
    assert!(period >= 1);
    let p = period as i32;
    let denom = Rational::one() - Rational::pow2(-p);
    (0..p)
        .map(|r| &(Rational::pow2(-r) + Rational::pow2(r - p)) / &denom)
        .collect()
}

/// Metric between two periodic sequences given as one-period tuples of base
/// point indices: the bi-infinite weighted sum, grouped over their common
/// period.
pub fn sigma_distance_periodic(base: &FiniteMetricSystem, u: &[usize], v: &[usize]) -> Rational {
    assert!(!u.is_empty() && !v.is_empty());
    let common = num_integer::lcm(u.len() as u64, v.len() as u64);
    let weights = sigma_weights(common);
    let mut total = Rational::zero();
    for (r, weight) in weights.iter().enumerate() {
        total += &(weight * base.dist(u[r % u.len()], v[r % v.len()]));
    }
    total
}

/// The period-P truncation of the sequence space at step tolerance `rho`:
/// all P-tuples whose cyclic steps satisfy `d(f x_k, x_{k+1}) <= rho`,
/// carrying the weighted metric and the rotation-by-one shift.
#[derive(Debug, Clone)]
pub struct PeriodicSequenceSpace {
    pub base: FiniteMetricSystem,
    pub period: u64,
    pub rho: Rational,
    pub weights: Vec<Rational>,
    /// Elements as tuples of base point indices, lexicographic order.
    pub elements: Vec<Vec<usize>>,
    /// The space packaged as a system, so every certificate applies to it.
    pub system: FiniteMetricSystem,
    index: HashMap<Vec<usize>, usize>,
}

impl PeriodicSequenceSpace {
    pub fn element_index(&self, tuple: &[usize]) -> Option<usize> {
        self.index.get(tuple).copied()
    }

    pub fn sigma_metric(&self, i: usize, j: usize) -> &Rational {
        self.system.dist(i, j)
    }

    fn tuple_name(base: &FiniteMetricSystem, tuple: &[usize]) -> String {
        let parts: Vec<&str> = tuple.iter().map(|&x| base.point_name(x)).collect();
        format!("({})", parts.join(","))
    }
}

/// Enumerates the period-P space at `rho` as cycles of the closed
/// transition relation, realized as P-tuples.
pub fn build_periodic_sigma(
    base: &FiniteMetricSystem,
    period: u64,
    rho: &Rational,
    element_cap: usize,
) -> Result<PeriodicSequenceSpace> {
    if period == 0 || !period.is_multiple_of(base.order()) {
        return Err(Error::BadPeriod {
            period,
            order: base.order(),
        });
    }
    if rho.is_negative() {
        return Err(Error::BadParameters(format!(
            "rho must be nonnegative, got {rho}"
        )));
    }
    let n = base.len();
    let allowed: Vec<Vec<usize>> = (0..n)
        .map(|x| {
            (0..n)
                .filter(|&y| base.dist(base.apply(x), y) <= rho)
                .collect()
        })
        .collect();

    let p = period as usize;
    let mut elements: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<usize> = Vec::with_capacity(p);
    fn enumerate(
        stack: &mut Vec<usize>,
        p: usize,
        allowed: &[Vec<usize>],
        elements: &mut Vec<Vec<usize>>,
        cap: usize,
    ) -> Result<()> {
        if stack.len() == p {
            if allowed[*stack.last().unwrap()].contains(&stack[0]) {
                if elements.len() >= cap {
                    return Err(Error::ResourceLimit(format!(
                        "period space exceeds the element cap {cap}"
                    )));
                }
                elements.push(stack.clone());
            }
            return Ok(());
        }
        let choices: Vec<usize> = if stack.is_empty() {
            (0..allowed.len()).collect()
        } else {
            allowed[*stack.last().unwrap()].clone()
        };
        for y in choices {
            stack.push(y);
            enumerate(stack, p, allowed, elements, cap)?;
            stack.pop();
        }
        Ok(())
    }
    enumerate(&mut stack, p, &allowed, &mut elements, element_cap)?;

    let index: HashMap<Vec<usize>, usize> = elements
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    let weights = sigma_weights(period);
    let m = elements.len();
    let metric: Vec<Vec<Rational>> = crate::par::map_indices(m, |i| {
        (0..m)
            .map(|j| {
                let mut total = Rational::zero();
                for (r, weight) in weights.iter().enumerate() {
                    total += &(weight * base.dist(elements[i][r], elements[j][r]));
                }
                total
            })
            .collect()
    });
    let map: Vec<usize> = elements
        .iter()
        .map(|t| {
            let mut rotated = t[1..].to_vec();
            rotated.push(t[0]);
            *index
                .get(&rotated)
                .expect("the step condition is rotation invariant")
        })
        .collect();
    let names: Vec<String> = elements
        .iter()
        .map(|t| PeriodicSequenceSpace::tuple_name(base, t))
        .collect();
    // Positive weighted sums of per-coordinate metrics inherit the triangle
    // inequality, so the cubic re-validation is skipped.
    let system = FiniteMetricSystem::new_unchecked_triangle(names, metric, map)?;
    Ok(PeriodicSequenceSpace {
        base: base.clone(),
        period,
        rho: rho.clone(),
        weights,
        elements,
        system,
        index,
    })
}

/// The orbit-copy embedding and its verified properties.
#[derive(Debug, Clone)]
pub struct Embedding {
    /// Element index of `i(x) = (x, fx, ..., f^{P-1}x)` per base point.
    pub image: Vec<usize>,
    pub injective: bool,
    /// `shift(i(x)) = i(f x)` for every point.
    pub intertwines: bool,
}

/// Embeds the base into the space by orbit copies and verifies injectivity
/// and the intertwining identity exactly.
pub fn embed(space: &PeriodicSequenceSpace) -> Embedding {
    let base = &space.base;
    let image: Vec<usize> = (0..base.len())
        .map(|x| {
            let mut tuple = Vec::with_capacity(space.period as usize);
            let mut cursor = x;
            for _ in 0..space.period {
                tuple.push(cursor);
                cursor = base.apply(cursor);
            }
            space
                .element_index(&tuple)
                .expect("orbit copies have step distance 0 <= rho")
        })
        .collect();
    let mut sorted = image.clone();
    sorted.sort_unstable();
    sorted.dedup();
    let injective = sorted.len() == image.len();
    let intertwines = (0..base.len()).all(|x| space.system.apply(image[x]) == image[base.apply(x)]);
    Embedding {
        image,
        injective,
        intertwines,
    }
}

/// Report on shadowing of image pseudo-orbits by their exact defining
/// sequences.
#[derive(Debug, Clone, Serialize)]
pub struct ImageShadowingReport {
    pub epsilon: Rational,
    pub delta: Rational,
    pub max_period: u64,
    pub holds: bool,
    pub chains_checked: u64,
    /// Largest shadow distance observed, with the chain realizing it and
    /// the step tolerance that chain needs to be a space element.
    pub worst_distance: Option<Rational>,
    pub worst_chain: Option<Vec<String>>,
    pub worst_rho: Option<Rational>,
    pub failing_chain: Option<Vec<String>>,
}

/// Enumerates periodic delta-pseudo-orbits of the shift consisting of
/// image points `i(x_n)` (periods are multiples of the base order up to
/// `max_period`) and verifies each is `eps`-shadowed by precisely the point
/// `(x_n)` itself, which is an element of the period-Q space at its own
/// step tolerance.
pub fn verify_image_shadowing(
    space: &PeriodicSequenceSpace,
    epsilon: &Rational,
    delta: &Rational,
    max_period: u64,
    walk_cap: u64,
) -> Result<ImageShadowingReport> {
    if !epsilon.is_positive() || !delta.is_positive() {
        return Err(Error::BadThresholds(format!(
            "need epsilon, delta > 0, got epsilon = {epsilon}, delta = {delta}"
        )));
    }
    let base = &space.base;
    let n = base.len();
    // Pullback of the sequence metric along the embedding.
    let pullback: Vec<Vec<Rational>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let mut total = Rational::zero();
                    let (mut fa, mut fb) = (a, b);
                    for weight in &space.weights {
                        total += &(weight * base.dist(fa, fb));
                        fa = base.apply(fa);
                        fb = base.apply(fb);
                    }
                    total
                })
                .collect()
        })
        .collect();
    let edge: Vec<Vec<bool>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| pullback[base.apply(a)][b] < *delta)
                .collect()
        })
        .collect();

    let mut report = ImageShadowingReport {
        epsilon: epsilon.clone(),
        delta: delta.clone(),
        max_period,
        holds: true,
        chains_checked: 0,
        worst_distance: None,
        worst_chain: None,
        worst_rho: None,
        failing_chain: None,
    };

    let orbit_tuple = |x: usize| -> Vec<usize> {
        let mut t = Vec::with_capacity(space.period as usize);
        let mut cursor = x;
        for _ in 0..space.period {
            t.push(cursor);
            cursor = base.apply(cursor);
        }
        t
    };

    let mut inspect = |chain: &[usize], report: &mut ImageShadowingReport| -> Result<bool> {
        report.chains_checked += 1;
        if report.chains_checked > walk_cap {
            return Err(Error::ResourceLimit(format!(
                "image chain enumeration exceeded {walk_cap} chains"
            )));
        }
        let q = chain.len();
        let rho_needed = (0..q)
            .map(|k| base.dist(base.apply(chain[k]), chain[(k + 1) % q]).clone())
            .max()
            .unwrap();
        let mut worst = Rational::zero();
        for shift in 0..q {
            let mut rotated = Vec::with_capacity(q);
            for k in 0..q {
                rotated.push(chain[(shift + k) % q]);
            }
            let dist = sigma_distance_periodic(base, &rotated, &orbit_tuple(chain[shift]));
            if dist > worst {
                worst = dist;
            }
        }
        if report.worst_distance.as_ref().is_none_or(|w| worst > *w) {
            report.worst_distance = Some(worst.clone());
            report.worst_chain = Some(
                chain
                    .iter()
                    .map(|&x| base.point_name(x).to_string())
                    .collect(),
            );
            report.worst_rho = Some(rho_needed);
        }
        Ok(worst < *epsilon)
    };

    let mut q = base.order();
    'outer: while q <= max_period {
        // Closed walks of length q with their least node first, so each
        // rotation class appears once.
        let mut stack: Vec<usize> = Vec::with_capacity(q as usize);
        fn dfs(
            start: usize,
            stack: &mut Vec<usize>,
            q: usize,
            edge: &[Vec<bool>],
            inspect: &mut dyn FnMut(&[usize], &mut ImageShadowingReport) -> Result<bool>,
            report: &mut ImageShadowingReport,
        ) -> Result<Option<Vec<usize>>> {
            if stack.len() == q {
                if edge[*stack.last().unwrap()][start] && !inspect(stack, report)? {
                    return Ok(Some(stack.clone()));
                }
                return Ok(None);
            }
            let last = *stack.last().unwrap();
            for next in start..edge.len() {
                if edge[last][next] {
                    stack.push(next);
                    if let Some(f) = dfs(start, stack, q, edge, inspect, report)? {
                        return Ok(Some(f));
                    }
                    stack.pop();
                }
            }
            Ok(None)
        }
        for start in 0..n {
            stack.clear();
            stack.push(start);
            if let Some(failing) = dfs(
                start,
                &mut stack,
                q as usize,
                &edge,
                &mut inspect,
                &mut report,
            )? {
                report.holds = false;
                report.failing_chain = Some(
                    failing
                        .iter()
                        .map(|&x| base.point_name(x).to_string())
                        .collect(),
                );
                break 'outer;
            }
        }
        q += base.order();
    }
    Ok(report)
}

/// Result of the step-tolerance search for sequence-space expansiveness.
#[derive(Debug, Clone)]
pub struct EnvelopeExpansiveness {
    /// Largest step tolerance on the critical grid whose space passes.
    pub rho: Rational,
    pub space_elements: usize,
    /// Largest step size certified by the pair pseudo-orbit route at tube
    /// radius `epsilon/3`; spaces at any smaller tolerance are expansive.
    pub pair_route_delta: Option<Rational>,
    /// The direct check passed at every grid tolerance the pair route
    /// covers.
    pub routes_consistent: bool,
}

/// Finds the largest `rho` on the critical grid such that the period-P
/// space at `rho` is `[epsilon, alpha]`-expansive.
///
/// The direct decision on the built space is authoritative; the pair
/// pseudo-orbit route (tube radius `epsilon/3`, since the sequence metric
/// is at most three times the worst position distance) cross-checks it.
pub fn envelope_expansiveness(
    base: &FiniteMetricSystem,
    period: u64,
    epsilon: &Rational,
    alpha: &Rational,
    element_cap: usize,
) -> Result<EnvelopeExpansiveness> {
    if !epsilon.is_positive() || !alpha.is_positive() {
        return Err(Error::BadThresholds(format!(
            "need epsilon, alpha > 0, got epsilon = {epsilon}, alpha = {alpha}"
        )));
    }
    if let Some(sup) = base.expansivity_sup() {
        if *alpha >= sup {
            return Err(Error::AlphaTooLarge {
                alpha: alpha.clone(),
                reason: format!("base is expansive only below {sup}"),
            });
        }
    }
    let mut grid = base.metric_values();
    grid.reverse();
    let mut chosen: Option<(Rational, usize)> = None;
    let mut checked: Vec<(Rational, bool)> = Vec::new();
    for rho in &grid {
        let space = build_periodic_sigma(base, period, rho, element_cap)?;
        let passes = expansivity::raw_violation(&space.system, epsilon, alpha).is_none();
        checked.push((rho.clone(), passes));
        if passes {
            chosen = Some((rho.clone(), space.elements.len()));
            break;
        }
    }
    let Some((rho, space_elements)) = chosen else {
        return Err(Error::NoSuchRho {
            period,
            epsilon: epsilon.clone(),
            alpha: alpha.clone(),
        });
    };
    let third = epsilon / &Rational::integer(3);
    let mut pair_route_delta: Option<Rational> = None;
    for delta in base.metric_values() {
        if !delta.is_positive() {
            continue;
        }
        if shadowing::pair_pseudo_orbit_expansiveness(base, &third, alpha, &delta).holds {
            pair_route_delta = Some(delta);
        } else {
            break;
        }
    }
    // Grid tolerances strictly below the pair-route step size must have
    // passed the direct check.
    let routes_consistent = match &pair_route_delta {
        None => true,
        Some(bound) => checked.iter().all(|(rho, passed)| rho >= bound || *passed),
    };
    Ok(EnvelopeExpansiveness {
        rho,
        space_elements,
        pair_route_delta,
        routes_consistent,
    })
}

/// The assembled envelope: a quotient of a periodic sequence space in which
/// the base embeds and whose shadowing traces every base pseudo-orbit.
#[derive(Debug, Clone)]
pub struct ShadowingEnvelope {
    /// Expansivity constant used for the base (half its least orbit
    /// separation).
    pub alpha: Rational,
    /// Image-shadowing step size, at most `alpha/4`.
    pub delta: Rational,
    pub rho: Rational,
    pub space: PeriodicSequenceSpace,
    pub quotient: QuotientSystem,
    /// Base point to envelope class, `mu = q . i`.
    pub mu: Vec<usize>,
    pub mu_injective: bool,
    pub mu_intertwines: bool,
    pub image_shadowing: ImageShadowingReport,
    /// For each tube radius, the supremal base step size such that every
    /// base pseudo-orbit is shadowed in the envelope through `mu`.
    pub envelope_moduli: Vec<(Rational, ShadowingModulus)>,
}

/// Caps for the envelope pipeline.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeCaps {
    pub element_cap: usize,
    pub subset_cap: usize,
    pub walk_cap: u64,
}

impl Default for EnvelopeCaps {
    fn default() -> Self {
        EnvelopeCaps {
            element_cap: 4096,
            subset_cap: 100_000,
            walk_cap: 1_000_000,
        }
    }
}

/// Supremal base step size for which every base delta-chain is
/// `eps`-shadowed in the envelope through `mu`, scanned over the base
/// metric grid.
fn envelope_modulus(
    base: &FiniteMetricSystem,
    envelope: &FiniteMetricSystem,
    mu: &[usize],
    epsilon: &Rational,
    subset_cap: usize,
) -> Result<ShadowingModulus> {
    let unconstrained = envelope.diameter() + &Rational::one();
    let restriction_at = |delta: &Rational| -> RestrictionGraph {
        let mut edges = Vec::new();
        for x in 0..base.len() {
            for y in 0..base.len() {
                if base.dist(base.apply(x), y) < delta {
                    edges.push((x, y));
                }
            }
        }
        RestrictionGraph {
            nodes: base.points().to_vec(),
            labels: mu
                .iter()
                .map(|&c| envelope.point_name(c).to_string())
                .collect(),
            edges,
        }
    };
    let decide = |delta: &Rational| -> Result<bool> {
        let restriction = restriction_at(delta);
        Ok(shadowing::decide_shadowing(
            envelope,
            epsilon,
            &unconstrained,
            Some(&restriction),
            subset_cap,
        )?
        .holds)
    };
    let beyond = base.diameter() + &Rational::one();
    if decide(&beyond)? {
        return Ok(ShadowingModulus::Infinite);
    }
    let mut best: Option<Rational> = None;
    for value in base.metric_values() {
        if !value.is_positive() {
            continue;
        }
        if decide(&value)? {
            best = Some(value);
        } else {
            break;
        }
    }
    let sup_delta = best.expect("true base orbits are traced by their own images");
    let attained = decide(&sup_delta)?;
    Ok(ShadowingModulus::Finite {
        sup_delta,
        attained,
    })
}

/// Runs the whole envelope construction at period P.
///
/// Pipeline: certify the base expansive at `alpha` (half its least orbit
/// separation), find the largest image-shadowing step `delta <= alpha/4`,
/// pick the largest `rho` whose space is `[delta/4, alpha]`-expansive,
/// quotient that space by orbit closeness at `alpha`, embed the base via
/// `mu = q . i`, and measure the envelope shadowing modulus over the tube
/// radius grid.
pub fn build_shadowing_envelope(
    base: &FiniteMetricSystem,
    period: u64,
    eps_grid: Option<&[Rational]>,
    caps: EnvelopeCaps,
) -> Result<ShadowingEnvelope> {
    let alpha = match base.expansivity_sup() {
        Some(sup) => sup.half(),
        None => Rational::one(),
    };
    let shadow_eps = alpha.half().half();

    // Largest delta <= alpha/4 on the pullback grid with image shadowing.
    let probe = build_periodic_sigma(base, period, &Rational::zero(), caps.element_cap)?;
    let probe_embedding = embed(&probe);
    let mut delta_grid: Vec<Rational> = vec![shadow_eps.clone()];
    for x in 0..base.len() {
        for y in 0..base.len() {
            let value = sigma_distance_periodic(
                base,
                &probe.elements[probe_embedding.image[x]],
                &probe.elements[probe_embedding.image[y]],
            );
            if value.is_positive() && value <= shadow_eps {
                delta_grid.push(value);
            }
        }
    }
    delta_grid.sort();
    delta_grid.dedup();
    let mut delta: Option<(Rational, ImageShadowingReport)> = None;
    for candidate in delta_grid.iter().rev() {
        let report = verify_image_shadowing(&probe, &shadow_eps, candidate, period, caps.walk_cap)?;
        if report.holds {
            delta = Some((candidate.clone(), report));
            break;
        }
    }
    let (delta, image_shadowing) =
        delta.expect("below the least positive pullback distance only exact chains remain");

    let expansiveness =
        envelope_expansiveness(base, period, &delta.half().half(), &alpha, caps.element_cap)?;
    let space = build_periodic_sigma(base, period, &expansiveness.rho, caps.element_cap)?;
    let relation = quotients::lewowicz_relation(&space.system, &alpha)?;
    let quotient = quotients::build_quotient(&space.system, &relation.partition)?;
    let embedding = embed(&space);
    let mu: Vec<usize> = embedding
        .image
        .iter()
        .map(|&e| relation.partition.class_of(e))
        .collect();
    let mut mu_sorted = mu.clone();
    mu_sorted.sort_unstable();
    mu_sorted.dedup();
    let mu_injective = mu_sorted.len() == mu.len() && embedding.injective;
    let mu_intertwines = embedding.intertwines
        && (0..base.len()).all(|x| quotient.quotient.apply(mu[x]) == mu[base.apply(x)]);

    let default_grid: Vec<Rational>;
    let grid: &[Rational] = match eps_grid {
        Some(grid) => grid,
        None => {
            let mut values: Vec<Rational> = quotient
                .quotient
                .metric_values()
                .into_iter()
                .filter(|v| v.is_positive())
                .collect();
            if values.len() > 8 {
                let step = values.len() / 8;
                values = values.into_iter().step_by(step).collect();
            }
            default_grid = values;
            &default_grid
        }
    };
    let mut envelope_moduli = Vec::with_capacity(grid.len());
    for eps in grid {
        let modulus = envelope_modulus(base, &quotient.quotient, &mu, eps, caps.subset_cap)?;
        envelope_moduli.push((eps.clone(), modulus));
    }

    Ok(ShadowingEnvelope {
        alpha,
        delta,
        rho: expansiveness.rho,
        space,
        quotient,
        mu,
        mu_injective,
        mu_intertwines,
        image_shadowing,
        envelope_moduli,
    })
}
