//! Exact verification toolkit for finite metric dynamical systems.
//!
//! The crate models a compact metric space with a homeomorphism as a finite
//! point set carrying an exact rational metric and a permutation. On such
//! systems every dynamical quantifier over all integer times is finite, so
//! the toolkit can *decide* — not sample — expansiveness properties,
//! quotient constructions, shadowing, stability of semiconjugacies and
//! shadowing envelopes, emitting certificates that replay bit for bit.
//!
//! Note that every finite system is expansive once the threshold drops below
//! the least orbit separation of a distinct pair; the value of the toolkit
//! is quantitative (exactly which thresholds work, with witnesses when they
//! do not), never existential.
//!
//! Modules follow the subject matter:
//!
//! - [`system`]: finite metric systems, orbit machinery, product fixtures.
//! - [`expansivity`]: `[eps,alpha]`-expansiveness, uniform indices, gaps.
//! - [`quotients`]: orbit-closeness relations, quotient systems, the
//!   rescaled metric construction, expansivity covers.
//! - [`covers`]: the purely combinatorial cover calculus and generators.
//! - [`shadowing`]: exact pseudo-orbit shadowing decisions via automata,
//!   semi-Anosov certification, quotient pipelines.
//! - [`stability`]: semiconjugacies for perturbed maps and neighborhood
//!   sweeps.
//! - [`envelope`]: periodic sequence spaces, the shift embedding and the
//!   shadowing-envelope construction.
//!
//! Sweeps parallelize over rayon when the default `parallel` feature is on;
//! disabling it gives a fully sequential build with identical output.
//!
//! ```
//! use orbitcert::{expansivity, fixtures, quotients, rational::ratio};
//!
//! // The 3-cycle: three points at mutual distance 1, rotated by the map.
//! let sys = fixtures::cycle(3);
//!
//! // Orbits that stay within 1/2 forever start out closer than 1/2, so the
//! // system is [1/2,1/2]-expansive, and already on the time-0 window.
//! let cert = expansivity::is_eps_alpha_expansive(&sys, &ratio(1, 2), &ratio(1, 2)).unwrap();
//! assert!(cert.holds);
//! assert_eq!(cert.uniform_index, Some(0));
//!
//! // At threshold 1 every pair stays close forever: one class remains.
//! let relation = quotients::lewowicz_relation(&sys, &ratio(1, 1)).unwrap();
//! let quotient = quotients::build_quotient(&sys, &relation.partition).unwrap();
//! assert_eq!(quotient.quotient.len(), 1);
//! ```

// Errors carry exact rational witnesses, and indexed loops over metric
// matrices read better than iterator chains here.
#![allow(clippy::result_large_err, clippy::needless_range_loop)]

pub mod covers;
pub mod envelope;
pub mod error;
pub mod expansivity;
pub mod fixtures;
mod par;
pub mod quotients;
pub mod rational;
pub mod shadowing;
pub mod stability;
pub mod system;

pub use error::{Error, Result};
pub use rational::Rational;
pub use system::FiniteMetricSystem;
