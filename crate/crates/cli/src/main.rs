//! Command line front end.
//!
//! Every subcommand prints a short human summary on stdout and, with
//! `--output`, writes a JSON artifact whose rationals are `p/q` strings.
//! Identical invocations produce byte-identical artifacts.
//!
//! Exit codes: 0 the property holds or the construction certified; 1 the
//! property fails, with a witness embedded in the artifact; 2 usage or
//! validation error; 3 a resource cap was hit.

// Library errors carry exact rational witnesses; their size is the point.
#![allow(clippy::result_large_err)]

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use orbitcert::covers::{self, Cover};
use orbitcert::envelope::{self, EnvelopeCaps};
use orbitcert::error::Error;
use orbitcert::expansivity;
use orbitcert::fixtures;
use orbitcert::quotients;
use orbitcert::rational::Rational;
use orbitcert::shadowing::{self, RestrictionGraph};
use orbitcert::stability;
use orbitcert::system::{self, FiniteMetricSystem};

#[derive(Parser)]
#[command(
    name = "orbitcert",
    about = "Exact certificates for expansiveness, quotients and shadowing on finite metric systems",
    version
)]
struct Cli {
    /// Worker threads for parallel sweeps (0 keeps the default pool size).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Cap on product states in the shadowing subset construction.
    #[arg(
        long,
        global = true,
        env = "ORBITCERT_SUBSET_CAP",
        default_value_t = 100_000
    )]
    subset_cap: usize,
    /// Cap on elements of a periodic sequence space.
    #[arg(
        long,
        global = true,
        env = "ORBITCERT_ELEMENT_CAP",
        default_value_t = 4096
    )]
    element_cap: usize,
    /// Cap on the point count for full permutation enumerations.
    #[arg(long, global = true, env = "ORBITCERT_ENUM_CAP", default_value_t = 8)]
    enum_cap: usize,
    /// Cap on enumerated periodic chains in image-shadowing checks.
    #[arg(
        long,
        global = true,
        env = "ORBITCERT_WALK_CAP",
        default_value_t = 1_000_000
    )]
    walk_cap: u64,
    /// Write the JSON artifact to this path.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SystemArg {
    /// Path to a system file.
    #[arg(long)]
    system: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Certify [epsilon,alpha]-expansiveness.
    Certify {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        epsilon: Rational,
        #[arg(long)]
        alpha: Rational,
    },
    /// Exact region of thresholds for which the system is expansive.
    Region {
        #[command(flatten)]
        sys: SystemArg,
    },
    /// Orbit-closeness partition, quotient system and rescaled metric.
    Quotient {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        alpha: Rational,
        /// Quotient by this partition file instead of the orbit-closeness
        /// relation at alpha (compatibility is checked).
        #[arg(long)]
        partition: Option<PathBuf>,
        /// Threshold for the rescaled-metric direction; defaults to half
        /// the quotient expansivity bound.
        #[arg(long)]
        lewowicz_alpha: Option<Rational>,
        /// Also project the alpha/2-ball cover and validate it.
        #[arg(long)]
        cover: bool,
        /// Write the quotient system file here.
        #[arg(long)]
        emit_quotient: Option<PathBuf>,
    },
    /// Cover relation, chain powers, semi-expansiveness and the quotient
    /// pipeline.
    Covers {
        #[command(flatten)]
        sys: SystemArg,
        /// Path to a cover file.
        #[arg(long)]
        cover: PathBuf,
        /// Chain power to report alongside the fixed power-4 check.
        #[arg(long, default_value_t = 4)]
        power: usize,
        /// Run the reverse pull-back from the pipeline quotient at this
        /// expansivity threshold.
        #[arg(long)]
        pull_back_alpha: Option<Rational>,
    },
    /// Decide eps-delta shadowing; without --delta, compute the modulus.
    Shadowing {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        epsilon: Rational,
        #[arg(long)]
        delta: Option<Rational>,
        /// Restriction graph file limiting the allowed sequences.
        #[arg(long)]
        restriction: Option<PathBuf>,
        /// Also cross-check with the periodic oracle up to this period.
        #[arg(long)]
        oracle_period: Option<usize>,
    },
    /// Certify the semi-Anosov property at alpha.
    SemiAnosov {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        alpha: Rational,
    },
    /// Semi-Anosov quotient pipeline, with optional reverse re-metrization.
    AnosovQuotient {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        alpha: Rational,
        /// Also rebuild the base metric from the quotient and re-certify.
        #[arg(long)]
        reverse: bool,
    },
    /// Sweep all permutations within a C0 radius and build semiconjugacies.
    Stability {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        alpha: Rational,
        #[arg(long)]
        radius: Rational,
        /// Above the enumeration cap, draw this many seeded random
        /// permutations instead of the full neighborhood.
        #[arg(long)]
        sample: Option<usize>,
        /// Seed for the sampled sweep.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build the periodic shadowing envelope.
    Envelope {
        #[command(flatten)]
        sys: SystemArg,
        /// Truncation period; must be a multiple of the map order.
        #[arg(long)]
        period: u64,
        /// Tube radii to measure the envelope modulus at (defaults to the
        /// envelope's own metric grid).
        #[arg(long, value_delimiter = ',')]
        epsilon_grid: Option<Vec<Rational>>,
        /// Write the periodic sequence space as a system file.
        #[arg(long)]
        emit_space: Option<PathBuf>,
        /// Write the envelope (quotient) as a system file.
        #[arg(long)]
        emit_envelope: Option<PathBuf>,
    },
    /// Re-certify expansiveness across every permutation within a C0
    /// radius of the map.
    Openness {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        epsilon: Rational,
        #[arg(long)]
        alpha: Rational,
        #[arg(long)]
        radius: Rational,
    },
    /// Generate a fixture system file.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Re-check the witness embedded in a failed certificate.
    VerifyWitness {
        /// Path to the JSON artifact of an exit-1 run.
        #[arg(long)]
        certificate: PathBuf,
        #[arg(long)]
        system: PathBuf,
        /// Cover file, for cover artifacts.
        #[arg(long)]
        cover: Option<PathBuf>,
        /// Restriction graph, for restricted shadowing artifacts.
        #[arg(long)]
        restriction: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenerateKind {
    /// n-cycle with all distances 1.
    Cycle {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// n points on a line under the identity map, d(i,j) = scale*|i-j|.
    Line {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "1")]
        scale: Rational,
        #[arg(long)]
        out: PathBuf,
    },
    /// Weighted product of two systems.
    Product {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        w1: Rational,
        #[arg(long)]
        w2: Rational,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded random system: shortest-path metric completion plus a random
    /// permutation.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    if cli.jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    match run(&cli) {
        Ok(Verdict { holds, artifact }) => {
            if let Err(err) = write_artifact(&cli.output, &artifact) {
                eprintln!("error: {err}");
                return ExitCode::from(2);
            }
            ExitCode::from(if holds { 0 } else { 1 })
        }
        Err(err) => {
            eprintln!("error: {err}");
            let mut artifact = error_artifact(&err);
            if let Value::Object(context) = command_context(&cli.command) {
                for (key, value) in context {
                    artifact[key] = value;
                }
            }
            let _ = write_artifact(&cli.output, &artifact);
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Command name and thresholds, so error artifacts stay replayable.
fn command_context(command: &Command) -> Value {
    match command {
        Command::Certify { epsilon, alpha, .. } => {
            json!({"command": "certify", "epsilon": epsilon.to_string(), "alpha": alpha.to_string()})
        }
        Command::Region { .. } => json!({"command": "region"}),
        Command::Quotient { alpha, .. } => {
            json!({"command": "quotient", "alpha": alpha.to_string()})
        }
        Command::Covers { .. } => json!({"command": "covers"}),
        Command::Shadowing { epsilon, delta, .. } => json!({
            "command": "shadowing",
            "epsilon": epsilon.to_string(),
            "delta": delta.as_ref().map(|d| d.to_string()),
        }),
        Command::SemiAnosov { alpha, .. } => {
            json!({"command": "semi-anosov", "alpha": alpha.to_string()})
        }
        Command::AnosovQuotient { alpha, .. } => {
            json!({"command": "anosov-quotient", "alpha": alpha.to_string()})
        }
        Command::Stability { alpha, radius, .. } => json!({
            "command": "stability",
            "alpha": alpha.to_string(),
            "radius": radius.to_string(),
        }),
        Command::Envelope { period, .. } => json!({"command": "envelope", "period": period}),
        Command::Openness {
            epsilon,
            alpha,
            radius,
            ..
        } => json!({
            "command": "openness",
            "epsilon": epsilon.to_string(),
            "alpha": alpha.to_string(),
            "radius": radius.to_string(),
        }),
        Command::Generate { .. } => json!({"command": "generate"}),
        Command::VerifyWitness { .. } => json!({"command": "verify-witness"}),
    }
}

struct Verdict {
    holds: bool,
    artifact: Value,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::ResourceLimit(_) | Error::TooLarge(_) => 3,
        Error::NotExpansive { .. }
        | Error::NotTransitive { .. }
        | Error::NotSemiExpansive { .. }
        | Error::NotCoverSemiExpansive { .. }
        | Error::NotSemiAnosov { .. }
        | Error::NoShadowingPoint { .. } => 1,
        _ => 2,
    }
}

fn error_artifact(err: &Error) -> Value {
    let witness = match err {
        Error::NotExpansive { x, y, .. } => json!({"x": x, "y": y}),
        Error::NotTransitive { x, y, z } => json!({"x": x, "y": y, "z": z}),
        Error::NotSemiExpansive { x, y, .. } => json!({"x": x, "y": y}),
        Error::NotCoverSemiExpansive { x, y } => json!({"x": x, "y": y}),
        Error::NoShadowingPoint { point, .. } => json!({"point": point}),
        _ => Value::Null,
    };
    json!({
        "error": err.code(),
        "message": err.to_string(),
        "witness": witness,
    })
}

fn write_artifact(path: &Option<PathBuf>, artifact: &Value) -> Result<(), Error> {
    if let Some(path) = path {
        let mut text = serde_json::to_string_pretty(artifact).expect("artifacts serialize");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::Parse(format!("cannot write {path:?}: {e}")))?;
    }
    Ok(())
}

fn load(path: &PathBuf) -> Result<FiniteMetricSystem, Error> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {path:?}: {e}")))?;
    system::load_system(&text)
}

fn to_value<T: serde::Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("artifacts serialize")
}

fn run(cli: &Cli) -> Result<Verdict, Error> {
    match &cli.command {
        Command::Certify {
            sys,
            epsilon,
            alpha,
        } => {
            let sys = load(&sys.system)?;
            let cert = expansivity::is_eps_alpha_expansive(&sys, epsilon, alpha)?;
            if cert.holds {
                println!(
                    "[{epsilon},{alpha}]-expansive: yes{} (uniform index {})",
                    if cert.trivial { " (trivially)" } else { "" },
                    cert.uniform_index.unwrap()
                );
            } else {
                let w = cert.witness.as_ref().unwrap();
                println!(
                    "[{epsilon},{alpha}]-expansive: no; witness ({}, {}) with D = {}, d = {}",
                    w.x, w.y, w.orbit_sup, w.distance
                );
            }
            let mut artifact = to_value(&cert);
            artifact["command"] = json!("certify");
            let gap = if cert.holds {
                let (sup_delta, attained) = expansivity::expansiveness_gap(&sys, epsilon, alpha)?;
                println!("gap: thresholds can shift by any delta below {sup_delta}");
                Some(json!({"sup_delta": sup_delta.to_string(), "attained": attained}))
            } else {
                None
            };
            artifact["gap"] = gap.unwrap_or(Value::Null);
            Ok(Verdict {
                holds: cert.holds,
                artifact,
            })
        }
        Command::Region { sys } => {
            let sys = load(&sys.system)?;
            let region = expansivity::expansiveness_region(&sys);
            println!(
                "{:<14} {:<14} epsilon must exceed",
                "alpha from", "alpha to"
            );
            for band in &region {
                println!(
                    "{:<14} {:<14} {}",
                    band.alpha_from.to_string(),
                    band.alpha_to
                        .as_ref()
                        .map_or("inf".to_string(), |a| a.to_string()),
                    band.min_epsilon
                );
            }
            Ok(Verdict {
                holds: true,
                artifact: json!({"command": "region", "bands": to_value(&region)}),
            })
        }
        Command::Quotient {
            sys,
            alpha,
            partition,
            lewowicz_alpha,
            cover,
            emit_quotient,
        } => {
            let sys = load(&sys.system)?;
            let (chosen, semi_expansive) = match partition {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| Error::Parse(format!("cannot read {path:?}: {e}")))?;
                    let partition = quotients::Partition::from_json(&sys, &text)?;
                    let semi = expansivity::is_semi_expansive(&sys, alpha)?.holds;
                    (partition, semi)
                }
                None => {
                    let relation = quotients::lewowicz_relation(&sys, alpha)?;
                    (relation.partition, relation.semi_expansive)
                }
            };
            let q = quotients::build_quotient(&sys, &chosen)?;
            let diameters = quotients::class_diameters(&chosen, &sys);
            println!(
                "{} classes at alpha = {alpha} (semi-expansive: {semi_expansive})",
                chosen.len()
            );
            for (c, diam) in diameters.iter().enumerate() {
                println!("  {}  diameter {}", chosen.class_name(&sys, c), diam);
            }
            let alpha_r = match lewowicz_alpha {
                Some(a) => Some(a.clone()),
                None => q.quotient.expansivity_sup().map(|s| s.half()),
            };
            let lewowicz = match &alpha_r {
                Some(a) => {
                    let cert = quotients::lewowicz_metric(&q, a)?;
                    println!(
                        "rescaled metric at alpha = {a}: K = {}, semi-expansive {}, relation match {}",
                        cert.k, cert.verified_semi_expansive, cert.verified_relation_match
                    );
                    Some(cert)
                }
                None => None,
            };
            let cover_result = if *cover {
                let result = quotients::expansivity_cover(&sys, alpha, &chosen)?;
                println!(
                    "projected ball cover: {} members, valid expansivity cover: {}",
                    result.cover.sets().len(),
                    result.valid
                );
                Some(json!({
                    "sets": cover_sets_json(&result.cover, &result.quotient.quotient),
                    "valid": result.valid,
                }))
            } else {
                None
            };
            if let Some(path) = emit_quotient {
                fs::write(path, q.quotient.to_json())
                    .map_err(|e| Error::Parse(format!("cannot write {path:?}: {e}")))?;
            }
            let holds = lewowicz
                .as_ref()
                .is_none_or(|c| c.verified_semi_expansive && c.verified_relation_match)
                && cover_result
                    .as_ref()
                    .is_none_or(|c| c["valid"].as_bool().unwrap_or(false));
            Ok(Verdict {
                holds,
                artifact: json!({
                    "command": "quotient",
                    "alpha": alpha.to_string(),
                    "semi_expansive": semi_expansive,
                    "classes": partition_json(&chosen, &sys),
                    "class_diameters": diameters.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
                    "quotient_points": q.quotient.points(),
                    "lewowicz": lewowicz.as_ref().map(to_value),
                    "cover": cover_result,
                }),
            })
        }
        Command::Covers {
            sys,
            cover,
            power,
            pull_back_alpha,
        } => {
            let sys = load(&sys.system)?;
            let text = fs::read_to_string(cover)
                .map_err(|e| Error::Parse(format!("cannot read {cover:?}: {e}")))?;
            let cover = Cover::from_json(&sys, &text)?;
            let relation = covers::cover_relation(&sys, &cover);
            let semi = covers::is_cover_semi_expansive(&sys, &cover);
            let generator = covers::is_generator(&sys, &cover);
            let powered = covers::cover_power(&cover, *power);
            println!(
                "cover relation transitive: {}; semi-expansive: {}; generator: {}",
                relation.transitive, semi.holds, generator.holds
            );
            println!("chain power {} has {} members", power, powered.sets().len());
            let pipeline = if semi.holds {
                let result = covers::cover_quotient_pipeline(&sys, &cover)?;
                println!(
                    "quotient: {} classes; projected cover is a generator: {}",
                    result.quotient.quotient.len(),
                    result.generator_ok
                );
                let pull_back = match pull_back_alpha {
                    Some(alpha_r) => {
                        let pb = covers::pull_back_cover(&result.quotient, alpha_r)?;
                        println!(
                            "pull-back at alpha_r = {alpha_r}: semi-expansive {}, relation match {}",
                            pb.semi.holds, pb.relation_matches
                        );
                        Some(json!({
                            "cover": cover_sets_json(&pb.cover, &result.quotient.base),
                            "semi_expansive": pb.semi.holds,
                            "relation_matches": pb.relation_matches,
                        }))
                    }
                    None => None,
                };
                Some((result, pull_back))
            } else {
                None
            };
            let holds = semi.holds
                && pipeline.as_ref().is_some_and(|(p, pb)| {
                    p.generator_ok
                        && pb
                            .as_ref()
                            .is_none_or(|v| v["semi_expansive"].as_bool().unwrap_or(false))
                });
            Ok(Verdict {
                holds,
                artifact: json!({
                    "command": "covers",
                    "transitive": relation.transitive,
                    "semi_expansive": semi.holds,
                    "witness": semi.witness,
                    "relations_equal": semi.relations_equal,
                    "generator": generator.holds,
                    "generator_witness": generator.witness,
                    "power": power,
                    "power_members": powered.sets().len(),
                    "pipeline": pipeline.as_ref().map(|(p, pb)| json!({
                        "classes": p.quotient.quotient.len(),
                        "quotient_cover": cover_sets_json(&p.quotient_cover, &p.quotient.quotient),
                        "generator_ok": p.generator_ok,
                        "pull_back": pb,
                    })),
                }),
            })
        }
        Command::Shadowing {
            sys,
            epsilon,
            delta,
            restriction,
            oracle_period,
        } => {
            let sys = load(&sys.system)?;
            let restriction = match restriction {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| Error::Parse(format!("cannot read {path:?}: {e}")))?;
                    Some(RestrictionGraph::from_json(&text)?)
                }
                None => None,
            };
            match delta {
                Some(delta) => {
                    let cert = shadowing::decide_shadowing(
                        &sys,
                        epsilon,
                        delta,
                        restriction.as_ref(),
                        cli.subset_cap,
                    )?;
                    if cert.holds {
                        println!("{epsilon}-{delta} shadowing: yes");
                    } else {
                        println!(
                            "{epsilon}-{delta} shadowing: no; counterexample chain {:?}",
                            cert.counterexample.as_ref().unwrap()
                        );
                    }
                    let oracle = match oracle_period {
                        Some(period) => {
                            let outcome =
                                shadowing::periodic_shadowing_oracle(&sys, epsilon, delta, *period);
                            println!(
                                "periodic oracle (period <= {period}): {} ({} cycles)",
                                outcome.holds, outcome.cycles_checked
                            );
                            Some(json!({
                                "holds": outcome.holds,
                                "failing_cycle": outcome.failing_cycle,
                                "cycles_checked": outcome.cycles_checked,
                            }))
                        }
                        None => None,
                    };
                    let mut artifact = to_value(&cert);
                    artifact["command"] = json!("shadowing");
                    artifact["oracle"] = oracle.unwrap_or(Value::Null);
                    Ok(Verdict {
                        holds: cert.holds,
                        artifact,
                    })
                }
                None => {
                    let modulus = shadowing::shadowing_modulus(&sys, epsilon, cli.subset_cap)?;
                    match &modulus {
                        shadowing::ShadowingModulus::Infinite => {
                            println!("shadowing modulus at {epsilon}: every delta works")
                        }
                        shadowing::ShadowingModulus::Finite { sup_delta, attained } => println!(
                            "shadowing modulus at {epsilon}: sup delta = {sup_delta} (attained: {attained})"
                        ),
                    }
                    Ok(Verdict {
                        holds: true,
                        artifact: json!({
                            "command": "shadowing-modulus",
                            "epsilon": epsilon.to_string(),
                            "modulus": to_value(&modulus),
                        }),
                    })
                }
            }
        }
        Command::SemiAnosov { sys, alpha } => {
            let sys = load(&sys.system)?;
            let cert = shadowing::certify_semi_anosov(&sys, alpha, cli.subset_cap)?;
            match (&cert.delta, &cert.binding) {
                (Some(delta), _) => println!(
                    "semi-Anosov at alpha = {alpha}: yes with delta = {delta} ([{}, {alpha}]-expansive, {}-{delta} shadowing)",
                    cert.expansive_eps.as_ref().unwrap(),
                    cert.shadow_eps
                ),
                (None, binding) => println!(
                    "semi-Anosov at alpha = {alpha}: no (binding condition: {:?})",
                    binding.as_ref().unwrap()
                ),
            }
            let mut artifact = to_value(&cert);
            artifact["command"] = json!("semi-anosov");
            Ok(Verdict {
                holds: cert.certified,
                artifact,
            })
        }
        Command::AnosovQuotient {
            sys,
            alpha,
            reverse,
        } => {
            let sys = load(&sys.system)?;
            let report = shadowing::anosov_quotient_pipeline(&sys, alpha, cli.subset_cap)?;
            println!(
                "semi-Anosov at {alpha} with delta = {}; quotient has {} classes",
                report.certificate.delta.as_ref().unwrap(),
                report.quotient.quotient.len()
            );
            let mut moduli_ok = true;
            for (eps_r, modulus) in &report.quotient_moduli {
                moduli_ok &= modulus.is_positive();
                match modulus {
                    shadowing::ShadowingModulus::Infinite => {
                        println!("  modulus at {eps_r}: every delta works")
                    }
                    shadowing::ShadowingModulus::Finite { sup_delta, .. } => {
                        println!("  modulus at {eps_r}: {sup_delta}")
                    }
                }
            }
            let reverse_report = if *reverse {
                let rev = shadowing::anosov_reverse(&report.quotient, alpha, cli.subset_cap)?;
                println!(
                    "reverse: K = {}, delta = {}, re-certified: {}",
                    rev.k, rev.delta, rev.certificate.certified
                );
                Some(rev)
            } else {
                None
            };
            let holds = moduli_ok
                && reverse_report
                    .as_ref()
                    .is_none_or(|r| r.certificate.certified);
            Ok(Verdict {
                holds,
                artifact: json!({
                    "command": "anosov-quotient",
                    "alpha": alpha.to_string(),
                    "certificate": to_value(&report.certificate),
                    "classes": report.quotient.quotient.len(),
                    "quotient_expansivity_sup": report
                        .quotient_expansivity_sup
                        .as_ref()
                        .map(|s| s.to_string()),
                    "moduli": report
                        .quotient_moduli
                        .iter()
                        .map(|(e, m)| json!({"epsilon": e.to_string(), "modulus": to_value(m)}))
                        .collect::<Vec<_>>(),
                    "reverse": reverse_report.as_ref().map(|r| json!({
                        "delta": r.delta.to_string(),
                        "k": r.k.to_string(),
                        "certificate": to_value(&r.certificate),
                    })),
                }),
            })
        }
        Command::Stability {
            sys,
            alpha,
            radius,
            sample,
            seed,
        } => {
            let sys = load(&sys.system)?;
            let relation = quotients::lewowicz_relation(&sys, alpha)?;
            let report = stability::stability_sweep(
                &sys,
                &relation.partition,
                alpha,
                radius,
                cli.enum_cap,
                cli.subset_cap,
                sample.map(|count| (count, *seed)),
            )?;
            println!(
                "{} of radius {radius}: {} candidates, {} semiconjugacies (guarantee radius delta = {})",
                if report.exhaustive {
                    "neighborhood"
                } else {
                    "sampled neighborhood"
                },
                report.candidates,
                report.successes,
                report.delta
            );
            if let Some(max) = &report.max_distance_to_q {
                println!("max distance to the projection: {max}");
            }
            let holds = report.successes == report.candidates;
            let mut artifact = to_value(&report);
            artifact["command"] = json!("stability");
            Ok(Verdict { holds, artifact })
        }
        Command::Envelope {
            sys,
            period,
            epsilon_grid,
            emit_space,
            emit_envelope,
        } => {
            let sys = load(&sys.system)?;
            let caps = EnvelopeCaps {
                element_cap: cli.element_cap,
                subset_cap: cli.subset_cap,
                walk_cap: cli.walk_cap,
            };
            let result =
                envelope::build_shadowing_envelope(&sys, *period, epsilon_grid.as_deref(), caps)?;
            println!(
                "envelope at period {period}: alpha = {}, delta = {}, rho = {}, {} elements, {} classes",
                result.alpha,
                result.delta,
                result.rho,
                result.space.elements.len(),
                result.quotient.quotient.len()
            );
            println!(
                "embedding injective: {}, intertwines: {}",
                result.mu_injective, result.mu_intertwines
            );
            let mut moduli_ok = true;
            for (eps, modulus) in &result.envelope_moduli {
                moduli_ok &= modulus.is_positive();
                match modulus {
                    shadowing::ShadowingModulus::Infinite => {
                        println!("  envelope modulus at {eps}: every delta works")
                    }
                    shadowing::ShadowingModulus::Finite { sup_delta, .. } => {
                        println!("  envelope modulus at {eps}: {sup_delta}")
                    }
                }
            }
            if let Some(path) = emit_space {
                fs::write(path, result.space.system.to_json())
                    .map_err(|e| Error::Parse(format!("cannot write {path:?}: {e}")))?;
            }
            if let Some(path) = emit_envelope {
                fs::write(path, result.quotient.quotient.to_json())
                    .map_err(|e| Error::Parse(format!("cannot write {path:?}: {e}")))?;
            }
            let holds = result.mu_injective && result.mu_intertwines && moduli_ok;
            Ok(Verdict {
                holds,
                artifact: json!({
                    "command": "envelope",
                    "period": period,
                    "alpha": result.alpha.to_string(),
                    "delta": result.delta.to_string(),
                    "rho": result.rho.to_string(),
                    "space_elements": result.space.elements.len(),
                    "classes": result.quotient.quotient.len(),
                    "mu_injective": result.mu_injective,
                    "mu_intertwines": result.mu_intertwines,
                    "image_shadowing": to_value(&result.image_shadowing),
                    "moduli": result
                        .envelope_moduli
                        .iter()
                        .map(|(e, m)| json!({"epsilon": e.to_string(), "modulus": to_value(m)}))
                        .collect::<Vec<_>>(),
                }),
            })
        }
        Command::Openness {
            sys,
            epsilon,
            alpha,
            radius,
        } => {
            let sys = load(&sys.system)?;
            let n = sys.len();
            if n > cli.enum_cap {
                return Err(Error::TooLarge(format!(
                    "openness enumerates n! permutations; n = {n} exceeds the cap {}",
                    cli.enum_cap
                )));
            }
            let neighborhood: Vec<Vec<usize>> = fixtures::all_permutations(n)
                .into_iter()
                .filter(|g| sys.c0_distance(g).expect("valid permutation") < *radius)
                .collect();
            let mut failures = Vec::new();
            for g in &neighborhood {
                let perturbed = sys.with_map(g.clone())?;
                let cert = expansivity::is_eps_alpha_expansive(&perturbed, epsilon, alpha)?;
                if !cert.holds {
                    failures.push(json!({
                        "g": g,
                        "witness": to_value(&cert.witness),
                    }));
                }
            }
            let holds = failures.is_empty();
            println!(
                "perturbations within C0 radius {radius}: {} of {} remain [{epsilon},{alpha}]-expansive",
                neighborhood.len() - failures.len(),
                neighborhood.len()
            );
            Ok(Verdict {
                holds,
                artifact: json!({
                    "command": "openness",
                    "epsilon": epsilon.to_string(),
                    "alpha": alpha.to_string(),
                    "radius": radius.to_string(),
                    "candidates": neighborhood.len(),
                    "failures": failures,
                }),
            })
        }
        Command::Generate { kind } => {
            let (sys, out) = match kind {
                GenerateKind::Cycle { n, out } => (
                    fixtures::generate_fixture(fixtures::FixtureKind::Cycle { n: *n })?,
                    out,
                ),
                GenerateKind::Line { n, scale, out } => (
                    fixtures::generate_fixture(fixtures::FixtureKind::Line {
                        n: *n,
                        scale: scale.clone(),
                    })?,
                    out,
                ),
                GenerateKind::Product {
                    left,
                    right,
                    w1,
                    w2,
                    out,
                } => {
                    let left = load(left)?;
                    let right = load(right)?;
                    (
                        fixtures::generate_fixture(fixtures::FixtureKind::Product {
                            left: &left,
                            right: &right,
                            w1: w1.clone(),
                            w2: w2.clone(),
                        })?,
                        out,
                    )
                }
                GenerateKind::Random { n, seed, out } => (
                    fixtures::generate_fixture(fixtures::FixtureKind::Random {
                        n: *n,
                        seed: *seed,
                    })?,
                    out,
                ),
            };
            fs::write(out, sys.to_json())
                .map_err(|e| Error::Parse(format!("cannot write {out:?}: {e}")))?;
            println!("wrote {} points to {}", sys.len(), out.display());
            Ok(Verdict {
                holds: true,
                artifact: json!({"command": "generate", "points": sys.len()}),
            })
        }
        Command::VerifyWitness {
            certificate,
            system,
            cover,
            restriction,
        } => {
            let sys = load(system)?;
            let text = fs::read_to_string(certificate)
                .map_err(|e| Error::Parse(format!("cannot read {certificate:?}: {e}")))?;
            let artifact: Value =
                serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            let valid = verify_witness(&sys, &artifact, cover.as_ref(), restriction.as_ref())?;
            println!("witness {}", if valid { "verified" } else { "REJECTED" });
            Ok(Verdict {
                holds: valid,
                artifact: json!({"command": "verify-witness", "valid": valid}),
            })
        }
    }
}

fn partition_json(partition: &quotients::Partition, sys: &FiniteMetricSystem) -> Value {
    Value::Array(
        partition
            .classes()
            .iter()
            .map(|class| {
                Value::Array(
                    class
                        .iter()
                        .map(|&p| Value::String(sys.point_name(p).to_string()))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn cover_sets_json(cover: &Cover, sys: &FiniteMetricSystem) -> Value {
    Value::Array(
        cover
            .sets()
            .iter()
            .map(|set| {
                Value::Array(
                    set.iter()
                        .map(|&p| Value::String(sys.point_name(p).to_string()))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn rational_field(artifact: &Value, key: &str) -> Result<Rational, Error> {
    artifact[key]
        .as_str()
        .ok_or_else(|| Error::Parse(format!("artifact lacks field {key:?}")))?
        .parse()
}

/// Re-checks the witness embedded in a failed artifact against the system
/// it was produced from.
fn verify_witness(
    sys: &FiniteMetricSystem,
    artifact: &Value,
    cover_path: Option<&PathBuf>,
    restriction_path: Option<&PathBuf>,
) -> Result<bool, Error> {
    // Machine-readable error objects carry their own witness payloads.
    if let Some(code) = artifact["error"].as_str() {
        return verify_error_witness(sys, artifact, code);
    }
    let command = artifact["command"]
        .as_str()
        .ok_or_else(|| Error::Parse("artifact lacks a command tag".into()))?;
    match command {
        // Expansivity witness: orbits stay within alpha yet the points are
        // at least epsilon apart.
        "certify" => {
            let epsilon = rational_field(artifact, "epsilon")?;
            let alpha = rational_field(artifact, "alpha")?;
            let witness = &artifact["witness"];
            let (Some(x), Some(y)) = (witness["x"].as_str(), witness["y"].as_str()) else {
                return Ok(false);
            };
            let (Some(x), Some(y)) = (sys.index_of(x), sys.index_of(y)) else {
                return Ok(false);
            };
            Ok(sys.orbit_sup_distance(x, y) <= alpha && *sys.dist(x, y) >= epsilon)
        }
        "shadowing" => {
            let cert = shadowing::ShadowingCertificate {
                epsilon: rational_field(artifact, "epsilon")?,
                delta: rational_field(artifact, "delta")?,
                restriction: shadowing::RestrictionDescriptor::All,
                holds: false,
                counterexample: serde_json::from_value(artifact["counterexample"].clone())
                    .map_err(|e| Error::Parse(e.to_string()))?,
                counterexample_nodes: serde_json::from_value(
                    artifact["counterexample_nodes"].clone(),
                )
                .map_err(|e| Error::Parse(e.to_string()))?,
            };
            let restriction = match restriction_path {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| Error::Parse(format!("cannot read {path:?}: {e}")))?;
                    Some(RestrictionGraph::from_json(&text)?)
                }
                None => None,
            };
            shadowing::verify_shadowing_counterexample(sys, &cert, restriction.as_ref())
        }
        // Transitivity witness triple for the orbit-closeness relation.
        "quotient" => {
            let alpha = rational_field(artifact, "alpha")?;
            let w = &artifact["witness"];
            let names = [w["x"].as_str(), w["y"].as_str(), w["z"].as_str()];
            let [Some(x), Some(y), Some(z)] = names else {
                return Ok(false);
            };
            let (Some(x), Some(y), Some(z)) = (sys.index_of(x), sys.index_of(y), sys.index_of(z))
            else {
                return Ok(false);
            };
            Ok(sys.orbit_sup_distance(x, y) <= alpha
                && sys.orbit_sup_distance(y, z) <= alpha
                && sys.orbit_sup_distance(x, z) > alpha)
        }
        // Pair related under the 4-chain power but not under the cover.
        "covers" => {
            let Some(path) = cover_path else {
                return Err(Error::BadParameters(
                    "cover artifacts need --cover to re-check the witness".into(),
                ));
            };
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("cannot read {path:?}: {e}")))?;
            let cover = Cover::from_json(sys, &text)?;
            let w = &artifact["witness"];
            let (Some(x), Some(y)) = (w[0].as_str(), w[1].as_str()) else {
                return Ok(false);
            };
            let (Some(x), Some(y)) = (sys.index_of(x), sys.index_of(y)) else {
                return Ok(false);
            };
            let base = covers::cover_relation(sys, &cover);
            let chained = covers::cover_relation(sys, &covers::cover_power(&cover, 4));
            Ok(chained.related(x, y) && !base.related(x, y))
        }
        // Failed stability rows re-run to the same error.
        "stability" => {
            let alpha = rational_field(artifact, "alpha")?;
            let relation = quotients::lewowicz_relation(sys, &alpha)?;
            let Some(rows) = artifact["rows"].as_array() else {
                return Ok(false);
            };
            for row in rows {
                if row["success"].as_bool() == Some(false) {
                    let g: Vec<usize> = serde_json::from_value(row["g"].clone())
                        .map_err(|e| Error::Parse(e.to_string()))?;
                    let outcome = stability::build_semiconjugacy(
                        sys,
                        &relation.partition,
                        &alpha,
                        &g,
                        100_000,
                        4,
                    );
                    let matches = match outcome {
                        Err(ref err) => Some(err.code()) == row["error"].as_str(),
                        Ok(_) => false,
                    };
                    if !matches {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        // Each failed perturbation must re-fail certification.
        "openness" => {
            let epsilon = rational_field(artifact, "epsilon")?;
            let alpha = rational_field(artifact, "alpha")?;
            let Some(failures) = artifact["failures"].as_array() else {
                return Ok(false);
            };
            for failure in failures {
                let g: Vec<usize> = serde_json::from_value(failure["g"].clone())
                    .map_err(|e| Error::Parse(e.to_string()))?;
                let perturbed = sys.with_map(g)?;
                if expansivity::is_eps_alpha_expansive(&perturbed, &epsilon, &alpha)?.holds {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        // Certificates whose verdict is the whole content: recompute it.
        "semi-anosov" => {
            let alpha = rational_field(artifact, "alpha")?;
            let cert = shadowing::certify_semi_anosov(sys, &alpha, 100_000)?;
            Ok(Some(cert.certified) == artifact["certified"].as_bool())
        }
        other => Err(Error::BadParameters(format!(
            "no witness replay for {other:?} artifacts"
        ))),
    }
}

fn verify_error_witness(
    sys: &FiniteMetricSystem,
    artifact: &Value,
    code: &str,
) -> Result<bool, Error> {
    let witness = &artifact["witness"];
    match code {
        "NotExpansive" => {
            let epsilon = rational_field(artifact, "epsilon")?;
            let alpha = rational_field(artifact, "alpha")?;
            let (Some(x), Some(y)) = (witness["x"].as_str(), witness["y"].as_str()) else {
                return Ok(false);
            };
            let (Some(x), Some(y)) = (sys.index_of(x), sys.index_of(y)) else {
                return Ok(false);
            };
            Ok(sys.orbit_sup_distance(x, y) <= alpha && *sys.dist(x, y) >= epsilon)
        }
        "NotSemiExpansive" => {
            let alpha = rational_field(artifact, "alpha")?;
            let (Some(x), Some(y)) = (witness["x"].as_str(), witness["y"].as_str()) else {
                return Ok(false);
            };
            let (Some(x), Some(y)) = (sys.index_of(x), sys.index_of(y)) else {
                return Ok(false);
            };
            Ok(sys.orbit_sup_distance(x, y) <= alpha && *sys.dist(x, y) >= alpha.half())
        }
        "NotTransitive" => {
            let alpha = rational_field(artifact, "alpha")?;
            let names = [
                witness["x"].as_str(),
                witness["y"].as_str(),
                witness["z"].as_str(),
            ];
            let [Some(x), Some(y), Some(z)] = names else {
                return Ok(false);
            };
            let (Some(x), Some(y), Some(z)) = (sys.index_of(x), sys.index_of(y), sys.index_of(z))
            else {
                return Ok(false);
            };
            Ok(sys.orbit_sup_distance(x, y) <= alpha
                && sys.orbit_sup_distance(y, z) <= alpha
                && sys.orbit_sup_distance(x, z) > alpha)
        }
        "NotSemiAnosov" => {
            let alpha = rational_field(artifact, "alpha")?;
            let cert = shadowing::certify_semi_anosov(sys, &alpha, 100_000)?;
            Ok(!cert.certified)
        }
        other => Err(Error::BadParameters(format!(
            "no witness replay for {other} errors"
        ))),
    }
}
