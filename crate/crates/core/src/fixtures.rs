//! Deterministic fixture generators.
//!
//! `random` draws symmetric edge weights and closes them under shortest
//! paths, so the triangle inequality holds by construction; the permutation
//! is a seeded shuffle. Identical parameters always produce identical
//! systems.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::system::FiniteMetricSystem;

/// The n-cycle: points `0..n`, all distances 1, map `i -> i+1 mod n`.
pub fn cycle(n: usize) -> FiniteMetricSystem {
    assert!(n >= 1);
    let points = (0..n).map(|i| i.to_string()).collect();
    let metric = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Rational::zero()
                    } else {
                        Rational::one()
                    }
                })
                .collect()
        })
        .collect();
    let map = (0..n).map(|i| (i + 1) % n).collect();
    FiniteMetricSystem::new(points, metric, map).expect("cycle fixture is valid")
}

/// The n-point line under the identity map: `d(i,j) = scale * |i - j|`.
/// With `scale = 1/(n-1)` this is a grid discretization of the unit
/// interval.
pub fn line(n: usize, scale: &Rational) -> FiniteMetricSystem {
    assert!(n >= 1);
    assert!(scale.is_positive());
    let points = (0..n).map(|i| i.to_string()).collect();
    let metric = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| scale * &Rational::integer((i as i64 - j as i64).abs()))
                .collect()
        })
        .collect();
    let map = (0..n).collect();
    FiniteMetricSystem::new(points, metric, map).expect("line fixture is valid")
}

/// A seeded random system: random rational edge weights completed to a
/// metric by Floyd-Warshall, plus a random permutation.
pub fn random(n: usize, seed: u64) -> FiniteMetricSystem {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut metric = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let numer = rng.gen_range(2..=12);
            let denom = rng.gen_range(1..=4);
            let w = Rational::new(numer, denom);
            metric[i][j] = w.clone();
            metric[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let via = &metric[i][k] + &metric[k][j];
                if via < metric[i][j] {
                    metric[i][j] = via;
                }
            }
        }
    }
    let mut map: Vec<usize> = (0..n).collect();
    map.shuffle(&mut rng);
    let points = (0..n).map(|i| format!("p{i}")).collect();
    FiniteMetricSystem::new(points, metric, map).expect("random fixture is valid")
}

/// A seeded random cover of `0..n`: a few random subsets plus singleton
/// patches for any point left uncovered, so the result is always a valid
/// cover.
pub fn random_cover(n: usize, seed: u64) -> Vec<std::collections::BTreeSet<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x636f766572);
    let members = rng.gen_range(2..=n.max(2));
    let mut sets: Vec<std::collections::BTreeSet<usize>> = Vec::new();
    for _ in 0..members {
        let size = rng.gen_range(1..=n);
        let mut set = std::collections::BTreeSet::new();
        for _ in 0..size {
            set.insert(rng.gen_range(0..n));
        }
        sets.push(set);
    }
    let covered: std::collections::BTreeSet<usize> = sets.iter().flatten().copied().collect();
    for p in 0..n {
        if !covered.contains(&p) {
            sets.push([p].into());
        }
    }
    sets.sort();
    sets.dedup();
    sets
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push(current.clone());
        // next_permutation in place
        let Some(i) = (0..n.saturating_sub(1))
            .rev()
            .find(|&i| current[i] < current[i + 1])
        else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}

/// Fixture kinds understood by the command line `generate` subcommand.
pub enum FixtureKind<'a> {
    Cycle {
        n: usize,
    },
    Line {
        n: usize,
        scale: Rational,
    },
    Product {
        left: &'a FiniteMetricSystem,
        right: &'a FiniteMetricSystem,
        w1: Rational,
        w2: Rational,
    },
    Random {
        n: usize,
        seed: u64,
    },
}

/// Dispatches a fixture description to the matching generator.
pub fn generate_fixture(kind: FixtureKind<'_>) -> Result<FiniteMetricSystem> {
    match kind {
        FixtureKind::Cycle { n } => {
            if n == 0 {
                return Err(Error::BadParameters("cycle needs n >= 1".into()));
            }
            Ok(cycle(n))
        }
        FixtureKind::Line { n, scale } => {
            if n == 0 {
                return Err(Error::BadParameters("line needs n >= 1".into()));
            }
            if !scale.is_positive() {
                return Err(Error::BadParameters("line scale must be positive".into()));
            }
            Ok(line(n, &scale))
        }
        FixtureKind::Product {
            left,
            right,
            w1,
            w2,
        } => crate::system::product_system(left, right, &w1, &w2),
        FixtureKind::Random { n, seed } => {
            if n == 0 {
                return Err(Error::BadParameters("random needs n >= 1".into()));
            }
            Ok(random(n, seed))
        }
    }
}
