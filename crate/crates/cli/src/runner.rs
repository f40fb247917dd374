//! Command execution and artifact persistence.
//!
//! Every run writes `manifest.json` (the full configuration plus tool
//! version and wall time) and `results.json` (the numeric payload). The
//! results document is a pure function of `(config, seed)`: trial streams
//! are keyed, collection is trial-ordered, and reduction is sequential, so
//! the bytes do not depend on the worker count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use serde::Serialize;
use serde_json::json;

use hoplab_core::signedlog::SignedLog;
use hoplab_core::weights::{log_ratio_walk, Provenance, WeightSequence};
use hoplab_core::{brownian, crossings, estimators, stats, transfer};

use crate::config::{CommandConfig, RunConfig, SCHEMA_VERSION};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit status conventions: 0 success, 1 configuration error (no artifacts),
/// 2 invariant violation (artifacts plus offending-weight dumps written).
#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub out_dir: PathBuf,
    pub results_json: String,
    /// Human-readable reason when `exit_code == 2`.
    pub violation: Option<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool_version: &'a str,
    created_unix_seconds: u64,
    wall_ms: u128,
    /// Set on replays whose recorded tool version differs.
    reproducible: bool,
    config: &'a RunConfig,
}

pub fn run(config: &RunConfig, out_dir: &Path) -> anyhow::Result<RunOutcome> {
    run_inner(config, out_dir, true)
}

fn run_inner(config: &RunConfig, out_dir: &Path, reproducible: bool) -> anyhow::Result<RunOutcome> {
    config.validate()?;
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let started = Instant::now();
    let created_unix_seconds = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .context("building worker pool")?;
    let executed = pool.install(|| execute(config, out_dir))?;

    let results_envelope = json!({
        "schema_version": SCHEMA_VERSION,
        "command": config.command.name(),
        "seed": config.seed,
        "results": executed.payload,
    });
    let results_json =
        serde_json::to_string_pretty(&results_envelope).context("serializing results")?;
    fs::write(out_dir.join("results.json"), &results_json)?;

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION,
        created_unix_seconds,
        wall_ms: started.elapsed().as_millis(),
        reproducible,
        config,
    };
    fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).context("serializing manifest")?,
    )?;

    Ok(RunOutcome {
        exit_code: if executed.violation.is_some() { 2 } else { 0 },
        out_dir: out_dir.to_path_buf(),
        results_json,
        violation: executed.violation,
    })
}

/// Re-run a persisted manifest. The results are byte-identical to the
/// original run when the tool version matches; otherwise the run proceeds
/// best-effort and the fresh manifest is flagged non-reproducible.
pub fn replay(manifest_path: &Path, out_dir: &Path) -> anyhow::Result<RunOutcome> {
    let text = fs::read_to_string(manifest_path)
        .with_context(|| format!("reading manifest {}", manifest_path.display()))?;
    let doc: serde_json::Value = serde_json::from_str(&text).context("parsing manifest")?;
    let recorded = doc
        .get("tool_version")
        .and_then(|v| v.as_str())
        .unwrap_or("unknown");
    let mut reproducible = true;
    if recorded != TOOL_VERSION {
        eprintln!(
            "warning: manifest was written by version {recorded}, this is {TOOL_VERSION}; \
             replay is best-effort and flagged non-reproducible"
        );
        reproducible = false;
    }
    let config: RunConfig = serde_json::from_value(
        doc.get("config")
            .cloned()
            .context("manifest has no config block")?,
    )
    .context("decoding config from manifest")?;
    run_inner(&config, out_dir, reproducible)
}

struct Executed {
    payload: serde_json::Value,
    violation: Option<String>,
}

fn execute(config: &RunConfig, out_dir: &Path) -> anyhow::Result<Executed> {
    let spec = config
        .spec
        .as_ref()
        .map(|s| s.build(config.seed))
        .transpose()?;
    match &config.command {
        CommandConfig::Spike {
            k_scale,
            n_target,
            trials,
        } => {
            let est = estimators::spike_estimate(
                spec.as_ref().unwrap(),
                &estimators::SpikeParams {
                    k_scale: *k_scale,
                    n_target: *n_target,
                    trials: *trials,
                    cross_check: config.cross_check,
                },
            );
            match est {
                Ok(est) => {
                    let mut csv = String::from(
                        "n,k_scale,log_eps,trials,mean_window_fraction,v_hat,stderr\n",
                    );
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{},{}",
                        est.n,
                        est.k_scale,
                        est.log_eps,
                        est.trials,
                        est.mean_window_fraction,
                        est.v_hat,
                        est.stderr
                    );
                    fs::write(out_dir.join("spike.csv"), csv)?;
                    Ok(Executed {
                        payload: serde_json::to_value(&est)?,
                        violation: None,
                    })
                }
                Err(hoplab_core::Error::CountMismatch {
                    trial,
                    transfer,
                    inertia,
                    weights,
                }) => {
                    let dump = out_dir.join(format!("mismatch-trial-{trial}.txt"));
                    fs::write(&dump, weights_file(&weights))?;
                    Ok(Executed {
                        payload: json!({
                            "error": "count mismatch",
                            "trial": trial,
                            "transfer": transfer,
                            "inertia": inertia,
                            "weights_dump": dump.display().to_string(),
                        }),
                        violation: Some(format!(
                            "transfer/inertia count mismatch on trial {trial} \
                             ({transfer} vs {inertia}); weights dumped to {}",
                            dump.display()
                        )),
                    })
                }
                Err(e) => Err(e.into()),
            }
        }
        CommandConfig::Local {
            n,
            t_grid,
            eta_grid,
            trials,
            oracle_paths,
        } => {
            let rep = estimators::local_stats(
                spec.as_ref().unwrap(),
                &estimators::LocalStatsParams {
                    n_base: *n,
                    t_grid: t_grid.clone(),
                    eta_grid: eta_grid.clone(),
                    trials: *trials,
                    oracle_paths: *oracle_paths,
                },
            )?;
            let mut cells = String::from("t,eta,m_used,tv_distance\n");
            let mut hist = String::from("t,eta,count,empirical,oracle\n");
            for c in &rep.cells {
                let _ = writeln!(cells, "{},{},{},{}", c.t, c.eta, c.m_used, c.tv_distance);
                for k in 0..c.empirical.len().max(c.oracle.len()) {
                    let _ = writeln!(
                        hist,
                        "{},{},{},{},{}",
                        c.t,
                        c.eta,
                        k,
                        c.empirical.get(k).copied().unwrap_or(0),
                        c.oracle.get(k).copied().unwrap_or(0)
                    );
                }
            }
            fs::write(out_dir.join("local_cells.csv"), cells)?;
            fs::write(out_dir.join("local_histograms.csv"), hist)?;
            Ok(Executed {
                payload: serde_json::to_value(&rep)?,
                violation: None,
            })
        }
        CommandConfig::Smallest { n, trials } => {
            let rep = estimators::smallest_eig_law(
                spec.as_ref().unwrap(),
                &estimators::SmallestEigParams {
                    n: *n,
                    trials: *trials,
                },
            )?;
            let mut csv = String::from("index,neg_log_lambda0_over_sqrt_n\n");
            for (i, s) in rep.samples.iter().enumerate() {
                let _ = writeln!(csv, "{i},{s}");
            }
            fs::write(out_dir.join("smallest_samples.csv"), csv)?;
            Ok(Executed {
                payload: serde_json::to_value(&rep)?,
                violation: None,
            })
        }
        CommandConfig::Ns {
            k_scale,
            eps_grid,
            trials,
        } => {
            let est = estimators::novikov_shubin(
                spec.as_ref().unwrap(),
                &estimators::NsParams {
                    k_scale: *k_scale,
                    eps_grid: eps_grid.clone(),
                    trials: *trials,
                },
            )?;
            let mut csv = String::from("eps,n,mu,mu_stderr,v_hat\n");
            for r in &est.rows {
                let _ = writeln!(csv, "{},{},{},{},{}", r.eps, r.n, r.mu, r.mu_stderr, r.v_hat);
            }
            fs::write(out_dir.join("ns.csv"), csv)?;
            Ok(Executed {
                payload: serde_json::to_value(&est)?,
                violation: None,
            })
        }
        CommandConfig::BoundsCheck {
            n,
            delta,
            lambda,
            exhaustive,
            trials,
            dump_trajectory,
        } => bounds_check(
            config,
            spec.as_ref().unwrap(),
            out_dir,
            *n,
            *delta,
            *lambda,
            *exhaustive,
            *trials,
            *dump_trajectory,
        ),
        CommandConfig::BmRenewal {
            sigma2,
            k_scale,
            trials,
        } => {
            let mut rows = Vec::new();
            let mut csv =
                String::from("sigma2,k_scale,rate,stderr,probe_rate,probe_stderr,dt,trials\n");
            for &s2 in sigma2 {
                let est = brownian::renewal_rate(s2, *k_scale, *trials, config.seed)?;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    est.sigma2,
                    est.k_scale,
                    est.rate,
                    est.stderr,
                    est.probe_rate,
                    est.probe_stderr,
                    est.dt,
                    est.trials
                );
                rows.push(est);
            }
            fs::write(out_dir.join("renewal.csv"), csv)?;
            Ok(Executed {
                payload: serde_json::to_value(&rows)?,
                violation: None,
            })
        }
        CommandConfig::BmSup {
            xs,
            sigma2,
            trials,
            mesh,
        } => {
            let mut csv = String::from("x,cdf,empirical_cdf\n");
            let samples = if *trials > 0 {
                brownian::sample_sup_abs(*sigma2, *trials, *mesh, config.seed)?
            } else {
                Vec::new()
            };
            let sigma = sigma2.sqrt();
            let mut rows = Vec::new();
            for &x in xs {
                let cdf = brownian::sup_abs_cdf(x / sigma);
                let emp = if samples.is_empty() {
                    f64::NAN
                } else {
                    samples.partition_point(|s| *s <= x) as f64 / samples.len() as f64
                };
                let _ = writeln!(csv, "{x},{cdf},{emp}");
                rows.push(json!({"x": x, "cdf": cdf, "empirical": emp}));
            }
            fs::write(out_dir.join("sup_law.csv"), csv)?;
            Ok(Executed {
                payload: serde_json::Value::Array(rows),
                violation: None,
            })
        }
        CommandConfig::BmTail {
            eta,
            t,
            sigma2,
            m_max,
            trials,
        } => {
            let rep = brownian::tail_check(*eta, *t, *sigma2, *m_max, *trials, config.seed)?;
            let mut csv = String::from("m,p_gt,envelope\n");
            for r in &rep.rows {
                let env = match (rep.envelope_ln_a, rep.envelope_b) {
                    (Some(a), Some(b)) => (a - b * (r.m as f64) * (r.m as f64)).exp(),
                    _ => f64::NAN,
                };
                let _ = writeln!(csv, "{},{},{}", r.m, r.p_gt, env);
            }
            fs::write(out_dir.join("tail.csv"), csv)?;
            Ok(Executed {
                payload: serde_json::to_value(&rep)?,
                violation: None,
            })
        }
        CommandConfig::DiagMoment { n_grid, trials } => {
            let rep =
                estimators::moment_diagnostic(spec.as_ref().unwrap(), n_grid, *trials)?;
            let mut csv = String::from("n,ratio2,ratio2_stderr,ratio4,ratio4_stderr\n");
            for r in &rep.rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    r.n, r.ratio2, r.ratio2_stderr, r.ratio4, r.ratio4_stderr
                );
            }
            fs::write(out_dir.join("moment.csv"), csv)?;
            Ok(Executed {
                payload: serde_json::to_value(&rep)?,
                violation: None,
            })
        }
        CommandConfig::DiagCorrelation { max_lag, trials } => {
            let rep =
                estimators::correlation_diagnostic(spec.as_ref().unwrap(), *max_lag, *trials)?;
            let mut csv = String::from("lag,corr,stderr\n");
            for r in &rep.rows {
                let _ = writeln!(csv, "{},{},{}", r.lag, r.corr, r.stderr);
            }
            fs::write(out_dir.join("correlation.csv"), csv)?;
            Ok(Executed {
                payload: serde_json::to_value(&rep)?,
                violation: None,
            })
        }
        CommandConfig::DiagBigWeight { n_grid, trials } => {
            let rep =
                estimators::big_weight_diagnostic(spec.as_ref().unwrap(), n_grid, *trials)?;
            let mut csv = String::from("n,mean_max_ratio,stderr\n");
            for r in &rep.rows {
                let _ = writeln!(csv, "{},{},{}", r.n, r.mean_max_ratio, r.stderr);
            }
            fs::write(out_dir.join("big_weight.csv"), csv)?;
            Ok(Executed {
                payload: serde_json::to_value(&rep)?,
                violation: None,
            })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn bounds_check(
    config: &RunConfig,
    spec: &hoplab_core::weights::WeightProcessSpec,
    out_dir: &Path,
    n: u64,
    delta: f64,
    lambda: Option<f64>,
    exhaustive: bool,
    trials: u64,
    dump_trajectory: bool,
) -> anyhow::Result<Executed> {
    let log_lambda = match lambda {
        Some(l) => {
            if !(l > 0.0 && l < 1.0) {
                bail!("lambda must be in (0, 1)");
            }
            l.ln()
        }
        None => -(n as f64).sqrt(),
    };
    let lam = SignedLog::from_sign_ln(1, log_lambda);

    let instances: Vec<WeightSequence> = if exhaustive {
        let (v0, v1) = match &spec.kind {
            hoplab_core::weights::ProcessKind::TwoPoint { p } => (1.0, 2.0 * p - 1.0),
            other => bail!(
                "exhaustive enumeration is defined for two-point specs, got {}",
                other.label()
            ),
        };
        if n > 24 {
            bail!("exhaustive enumeration capped at n = 24 (2^n instances)");
        }
        (0..(1u64 << n))
            .map(|mask| {
                let values: Vec<f64> = (0..n)
                    .map(|i| if mask >> i & 1 == 1 { v1 } else { v0 })
                    .collect();
                WeightSequence::from_values(
                    values,
                    Provenance {
                        label: format!("{}#exhaustive-{mask}", spec.label()),
                        seed: spec.seed,
                        stream: mask,
                    },
                )
            })
            .collect::<Result<_, _>>()?
    } else {
        (0..trials)
            .map(|t| spec.sample(n as usize, t))
            .collect::<Result<_, _>>()?
    };

    if dump_trajectory {
        if let Some(first) = instances.first() {
            let rows = transfer::scaled_trajectory(first, lam)?;
            let mut csv = String::from("k,y,component,s_k\n");
            for r in &rows {
                let _ = writeln!(csv, "{},{},{},{}", r.k, r.y, r.component, r.s_k);
            }
            fs::write(out_dir.join("trajectory.csv"), csv)?;
        }
    }

    let mut csv = String::from(
        "instance,m,j,d_deep,d_shallow,c_deep,c_shallow,b_eighth,b_sixteenth,\
         m_premise_ok,j_upper_premise_ok,j_lower_premise_ok,holds\n",
    );
    let mut premised_violations = 0u64;
    let mut any_violation_dump = None;
    let mut count_mismatches = 0u64;
    for (i, w) in instances.iter().enumerate() {
        // The two counters must agree identically before the sandwich means
        // anything.
        let via_jumps = transfer::eigencount_via_jumps(w, lam)? as usize;
        let rep = crossings::check_sandwich(w, lam, delta)?;
        if via_jumps != rep.m {
            count_mismatches += 1;
            let dump = out_dir.join(format!("mismatch-instance-{i}.txt"));
            fs::write(&dump, weights_file(w.values()))?;
        }
        let _ = writeln!(
            csv,
            "{i},{},{},{},{},{},{},{},{},{},{},{},{}",
            rep.m,
            rep.j,
            rep.d_deep,
            rep.d_shallow,
            rep.c_deep,
            rep.c_shallow,
            rep.b_eighth,
            rep.b_sixteenth,
            rep.m_premise_ok,
            rep.j_upper_premise_ok,
            rep.j_lower_premise_ok,
            rep.holds
        );
        let premised_violation = (rep.m_premise_ok && !rep.m_holds)
            || (rep.j_upper_premise_ok && !rep.j_upper_holds)
            || (rep.j_lower_premise_ok && !rep.j_lower_holds);
        if premised_violation {
            premised_violations += 1;
            if any_violation_dump.is_none() {
                let dump = out_dir.join(format!("violation-instance-{i}.txt"));
                fs::write(&dump, weights_file(w.values()))?;
                any_violation_dump = Some(dump);
            }
        }
    }
    fs::write(out_dir.join("sandwich.csv"), csv)?;

    // Summary statistics over instances, for the results document.
    let walks: Vec<usize> = instances
        .iter()
        .map(|w| log_ratio_walk(w).steps())
        .collect();
    let (mean_steps, _) = stats::mean_stderr(
        &walks.iter().map(|&s| s as f64).collect::<Vec<_>>(),
    );

    let violation = if count_mismatches > 0 {
        Some(format!(
            "{count_mismatches} transfer/inertia count mismatches (see mismatch-instance-*.txt)"
        ))
    } else if premised_violations > 0 {
        Some(format!(
            "{premised_violations} premised sandwich violations (see violation-instance-*.txt)"
        ))
    } else {
        None
    };
    Ok(Executed {
        payload: json!({
            "n": n,
            "delta": delta,
            "log_lambda": log_lambda,
            "instances": instances.len(),
            "walk_steps_mean": mean_steps,
            "premised_violations": premised_violations,
            "count_mismatches": count_mismatches,
            "seed": config.seed,
        }),
        violation,
    })
}

/// One weight per line; the format doubles as an empirical-file spec so any
/// dumped instance can be replayed directly.
fn weights_file(values: &[f64]) -> String {
    let mut text = String::from("# offending weight realization; replayable as spec empirical:<this file>\n");
    for v in values {
        let _ = writeln!(text, "{v}");
    }
    text
}
