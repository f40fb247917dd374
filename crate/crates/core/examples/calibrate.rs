// Scratch calibration runs used while pinning acceptance tolerances.
use hoplab_core::estimators::*;
use hoplab_core::weights::{ProcessKind, WeightProcessSpec};
use hoplab_core::{brownian, groups};

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "sol-var" => {
            let spec = WeightProcessSpec::new(
                ProcessKind::Toral {
                    system: groups::ToralSystem::default(),
                },
                7,
            )
            .unwrap();
            let t = std::time::Instant::now();
            let v = spec.variance_summary().unwrap();
            println!("sol variance: {v:?} in {:?}", t.elapsed());
        }
        "spike-dyson" => {
            let trials: u64 = std::env::args()
                .nth(2)
                .and_then(|s| s.parse().ok())
                .unwrap_or(500);
            let spec =
                WeightProcessSpec::new(ProcessKind::DysonGamma { order: 1 }, 7).unwrap();
            let t = std::time::Instant::now();
            let est = spike_estimate(
                &spec,
                &SpikeParams {
                    k_scale: 3.0,
                    n_target: 10000,
                    trials,
                    cross_check: true,
                },
            )
            .unwrap();
            println!(
                "dyson spike: v_hat={:.5} +- {:.5} (sigma2={:.5}) n={} in {:?}",
                est.v_hat, est.stderr, est.sigma2_ref.sigma2, est.n, t.elapsed()
            );
        }
        "spike-twopoint" => {
            let k: f64 = std::env::args()
                .nth(2)
                .and_then(|s| s.parse().ok())
                .unwrap_or(18.0);
            let trials: u64 = std::env::args()
                .nth(3)
                .and_then(|s| s.parse().ok())
                .unwrap_or(500);
            let spec = WeightProcessSpec::new(ProcessKind::TwoPoint { p: 0.9 }, 7).unwrap();
            let t = std::time::Instant::now();
            let est = spike_estimate(
                &spec,
                &SpikeParams {
                    k_scale: k,
                    n_target: 3000000,
                    trials,
                    cross_check: true,
                },
            )
            .unwrap();
            println!(
                "two-point spike K={k}: v_hat={:.6} +- {:.6} (sigma2={:.6}) n={} in {:?}",
                est.v_hat, est.stderr, est.sigma2_ref.sigma2, est.n, t.elapsed()
            );
        }
        "smallest" => {
            let trials: u64 = std::env::args()
                .nth(2)
                .and_then(|s| s.parse().ok())
                .unwrap_or(300);
            let spec =
                WeightProcessSpec::new(ProcessKind::DysonGamma { order: 1 }, 7).unwrap();
            let t = std::time::Instant::now();
            let rep = smallest_eig_law(&spec, &SmallestEigParams { n: 4001, trials }).unwrap();
            println!(
                "smallest: KS={:.4} median={:.4} in {:?}",
                rep.ks_distance, rep.median, t.elapsed()
            );
        }
        "local" => {
            let trials: u64 = std::env::args()
                .nth(2)
                .and_then(|s| s.parse().ok())
                .unwrap_or(400);
            let spec =
                WeightProcessSpec::new(ProcessKind::DysonGamma { order: 1 }, 7).unwrap();
            let t = std::time::Instant::now();
            let rep = local_stats(
                &spec,
                &LocalStatsParams {
                    n_base: 4001,
                    t_grid: vec![1.0],
                    eta_grid: vec![1.0],
                    trials,
                    oracle_paths: 4000,
                },
            )
            .unwrap();
            println!(
                "local: tv={:.4} emp={:?} oracle={:?} in {:?}",
                rep.cells[0].tv_distance,
                rep.cells[0].empirical,
                rep.cells[0].oracle,
                t.elapsed()
            );
        }
        "renewal" => {
            for sigma2 in [0.25, 1.0, 4.0] {
                let t = std::time::Instant::now();
                let est = brownian::renewal_rate(sigma2, 10.0, 1000, 7).unwrap();
                println!(
                    "renewal sigma2={sigma2}: rate={:.4} +- {:.4} probe={:.4} dt={:.2e} in {:?}",
                    est.rate, est.stderr, est.probe_rate, est.dt, t.elapsed()
                );
            }
        }
        "tail" => {
            let trials: u64 = std::env::args()
                .nth(2)
                .and_then(|s| s.parse().ok())
                .unwrap_or(100_000);
            let t = std::time::Instant::now();
            let rep = brownian::tail_check(1.0, 1.0, 4.0, 6, trials, 7).unwrap();
            println!("tail rows: {:?}", rep.rows);
            println!(
                "envelope ln_a={:?} b={:?} below={} in {:?}",
                rep.envelope_ln_a, rep.envelope_b, rep.below_envelope, t.elapsed()
            );
        }
        "ns-control" => {
            let spec = WeightProcessSpec::new(ProcessKind::Constant { value: 1.0 }, 7).unwrap();
            let grid: Vec<f64> = (0..7).map(|i| 0.1 * 0.5f64.powi(i)).collect();
            let t = std::time::Instant::now();
            let est = novikov_shubin(
                &spec,
                &NsParams {
                    k_scale: 12.0,
                    eps_grid: grid,
                    trials: 1,
                },
            )
            .unwrap();
            for r in &est.rows {
                println!("eps={:.5} n={} mu={:.6}", r.eps, r.n, r.mu);
            }
            println!(
                "alpha={:?}\nspike={:?} in {:?}",
                est.alpha_hat, est.spike_fit, t.elapsed()
            );
        }
        "ns-sol" => {
            let trials: u64 = std::env::args()
                .nth(2)
                .and_then(|s| s.parse().ok())
                .unwrap_or(300);
            let spec = WeightProcessSpec::new(
                ProcessKind::Toral {
                    system: groups::ToralSystem::default(),
                },
                7,
            )
            .unwrap();
            let grid: Vec<f64> = (0..6)
                .map(|i| (-12.0 - 4.0 * i as f64).exp())
                .collect();
            let t = std::time::Instant::now();
            let est = novikov_shubin(
                &spec,
                &NsParams {
                    k_scale: 3.0,
                    eps_grid: grid,
                    trials,
                },
            )
            .unwrap();
            for r in &est.rows {
                println!(
                    "eps=e^{:.1} n={} mu={:.3e} v_hat={:.4}",
                    r.eps.ln(),
                    r.n,
                    r.mu,
                    r.v_hat
                );
            }
            println!(
                "alpha={:?}\nspike={:?} in {:?}",
                est.alpha_hat, est.spike_fit, t.elapsed()
            );
        }
        "moment-sol" => {
            let spec = WeightProcessSpec::new(
                ProcessKind::Toral {
                    system: groups::ToralSystem::default(),
                },
                7,
            )
            .unwrap();
            let t = std::time::Instant::now();
            let rep = moment_diagnostic(&spec, &[100, 1000, 10_000, 100_000], 200).unwrap();
            for r in &rep.rows {
                println!(
                    "n={} ratio2={:.4}+-{:.4} ratio4={:.4}+-{:.4}",
                    r.n, r.ratio2, r.ratio2_stderr, r.ratio4, r.ratio4_stderr
                );
            }
            println!("bounded2={} bounded4={} in {:?}", rep.bounded2, rep.bounded4, t.elapsed());
        }
        "corr-sol" => {
            let spec = WeightProcessSpec::new(
                ProcessKind::Toral {
                    system: groups::ToralSystem::default(),
                },
                7,
            )
            .unwrap();
            let t = std::time::Instant::now();
            let rep = correlation_diagnostic(&spec, 8, 4000).unwrap();
            for r in &rep.rows {
                println!("lag={} corr={:+.3e} +- {:.1e}", r.lag, r.corr, r.stderr);
            }
            println!(
                "significant={:?} fit={:?} in {:?}",
                rep.significant_lags, rep.decay_fit, t.elapsed()
            );
        }
        other => eprintln!("unknown probe {other:?}"),
    }
}
