//! Acceptance suite: one test per shipping criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them as they complete).
//!
//! Each criterion pins its tolerance in code. The statistical ones use
//! fixed seeds, so every run evaluates the same realization and the
//! pass/fail outcome is deterministic.

use std::path::Path;

use hoplab_cli::{CommandConfig, RunConfig, SpecConfig};
use hoplab_core::operator::{kolmogorov_distance, FiniteOperator};
use hoplab_core::signedlog::SignedLog;
use hoplab_core::weights::{ProcessKind, Provenance, WeightProcessSpec, WeightSequence};
use hoplab_core::{brownian, crossings, estimators, groups, stats, transfer};

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {id:2} {name}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn two_point_instance(n: usize, mask: u64, other: f64) -> WeightSequence {
    let values: Vec<f64> = (0..n)
        .map(|i| if mask >> i & 1 == 1 { other } else { 1.0 })
        .collect();
    WeightSequence::from_values(
        values,
        Provenance {
            label: format!("pattern-{mask:b}"),
            seed: 0,
            stream: mask,
        },
    )
    .unwrap()
}

/// 1. Transfer jump count and Sturm inertia agree exactly: exhaustive
/// two-point patterns for odd n in 3..=11 at lambda = 1e-1..1e-6, plus 10^3
/// random instances at n = 1001, lambda = exp(-sqrt(1001)).
#[test]
fn criterion_01_counting_equivalence() {
    let mut checked = 0u64;
    for n in (3usize..=11).step_by(2) {
        for mask in 0..(1u64 << n) {
            let w = two_point_instance(n, mask, 0.8);
            let h = FiniteOperator::new(&w);
            for exp in 1..=6 {
                let lam = SignedLog::from_f64(10f64.powi(-exp));
                let a = transfer::eigencount_via_jumps(&w, lam).unwrap() as usize;
                let b = h.count_in_window(lam).unwrap().m_plus;
                assert_eq!(a, b, "n={n} mask={mask:b} lambda=1e-{exp}");
                checked += 1;
            }
        }
    }
    let spec = WeightProcessSpec::new(ProcessKind::DysonGamma { order: 1 }, 101).unwrap();
    let n = 1001;
    let lam = SignedLog::from_sign_ln(1, -(n as f64).sqrt());
    for trial in 0..1000 {
        let w = spec.sample(n, trial).unwrap();
        let a = transfer::eigencount_via_jumps(&w, lam).unwrap() as usize;
        let b = FiniteOperator::new(&w).count_in_window(lam).unwrap().m_plus;
        assert_eq!(a, b, "random trial {trial}");
        checked += 1;
    }
    report(
        1,
        "counting equivalence",
        true,
        &format!("{checked} instances, zero disagreements"),
    );
}

/// 2. negcount matches the bisection oracle exactly on 10^3 random
/// instances with n <= 15, 100 probes each.
#[test]
fn criterion_02_oracle_agreement() {
    use rand::Rng;
    let spec = WeightProcessSpec::new(ProcessKind::DysonGamma { order: 1 }, 202).unwrap();
    let mut rng = hoplab_core::seeding::rng_for(202, 0xACC2, 0);
    let mut probes_run = 0u64;
    for trial in 0..1000u64 {
        let n = 2 * rng.random_range(1..=7) + 1;
        let w = spec.sample(n, trial).unwrap();
        let h = FiniteOperator::new(&w);
        let eigs = h.eigenvalues_oracle().unwrap();
        let radius = 2.0 * w.values().iter().fold(0.0f64, |m, a| m.max(a.abs())) + 0.5;
        let mut done = 0;
        while done < 100 {
            let x = rng.random_range(-radius..radius);
            if eigs.iter().any(|e| (e - x).abs() < 1e-8) {
                continue;
            }
            done += 1;
            probes_run += 1;
            let expect = eigs.iter().filter(|e| **e < x).count();
            let got = h.negcount(SignedLog::from_f64(x)).unwrap().below;
            assert_eq!(got, expect, "trial {trial}, probe {x}");
        }
    }
    report(
        2,
        "oracle agreement",
        true,
        &format!("{probes_run} probes, all exact"),
    );
}

/// 3. Crossing/well eigenvalue sandwich: zero violations wherever the
/// lambda-smallness premise holds (exhaustive n = 11 suite), and the bounds
/// hold outright on the 10^3-instance n = 1001 suite.
#[test]
fn criterion_03_eigenvalue_sandwich() {
    let lam = SignedLog::from_f64(1e-6);
    let mut premised = 0u64;
    for mask in 0..(1u64 << 11) {
        let w = two_point_instance(11, mask, 0.8);
        let rep = crossings::check_sandwich(&w, lam, 0.99).unwrap();
        assert!(rep.m_premise_ok, "premise must hold at n=11, lambda=1e-6");
        assert!(rep.m_holds, "mask {mask:b}: {rep:?}");
        if rep.j_upper_premise_ok {
            assert!(rep.j_upper_holds, "mask {mask:b}: {rep:?}");
        }
        if rep.j_lower_premise_ok {
            assert!(rep.j_lower_holds, "mask {mask:b}: {rep:?}");
        }
        premised += 1;
    }
    let spec = WeightProcessSpec::new(ProcessKind::DysonGamma { order: 1 }, 303).unwrap();
    let n = 1001;
    let lam = SignedLog::from_sign_ln(1, -(n as f64).sqrt());
    for trial in 0..1000 {
        let w = spec.sample(n, trial).unwrap();
        let rep = crossings::check_sandwich(&w, lam, 0.5).unwrap();
        assert!(
            rep.m_holds && rep.j_upper_holds && rep.j_lower_holds,
            "trial {trial}: {rep:?}"
        );
    }
    report(
        3,
        "eigenvalue sandwich",
        true,
        &format!("{premised} premised + 1000 spectral-scale instances, zero violations"),
    );
}

/// 4. Spike constant for the square-root-exponential weights: K = 3,
/// n = 9999, 10^4 cross-checked trials; v_hat in [0.33, 0.49]
/// (pi^2/24 +- 20%) and its 3-stderr interval overlaps that window.
#[test]
fn criterion_04_dyson_spike_constant() {
    let spec = WeightProcessSpec::new(ProcessKind::DysonGamma { order: 1 }, 404).unwrap();
    let est = estimators::spike_estimate(
        &spec,
        &estimators::SpikeParams {
            k_scale: 3.0,
            n_target: 10_000,
            trials: 10_000,
            cross_check: true,
        },
    )
    .unwrap();
    let (lo, hi) = (0.33, 0.49);
    let inside = est.v_hat >= lo && est.v_hat <= hi;
    let overlaps = est.v_hat + 3.0 * est.stderr >= lo && est.v_hat - 3.0 * est.stderr <= hi;
    report(
        4,
        "spike constant (gamma weights)",
        inside && overlaps,
        &format!(
            "v_hat = {:.4} +- {:.4}, window [{lo}, {hi}], sigma2 = {:.4}",
            est.v_hat, est.stderr, est.sigma2_ref.sigma2
        ),
    );
}

/// 5. Spike constant for the two-point lamplighter weights: v_hat within
/// 25% of (1/4) log^2(0.8) = 0.012448.
///
/// The log-variance here is 33x smaller than in criterion 4, which moves
/// the asymptotic regime: matching the criterion-4 renewal depth needs
/// K * sigma ~ 3 (K = 27), and the window exponent must dominate the
/// walk's near-minimum dwell correction, which needs |log eps| ~ 64
/// (n ~ 3e6). At the criterion-4 protocol (K = 3, n = 9999) the estimate
/// sits at 0.005, 2.4x below target, for fundamental reasons; see the
/// sizing notes in the README.
#[test]
fn criterion_05_lamplighter_spike_constant() {
    let spec = WeightProcessSpec::new(ProcessKind::TwoPoint { p: 0.9 }, 505).unwrap();
    let est = estimators::spike_estimate(
        &spec,
        &estimators::SpikeParams {
            k_scale: 27.0,
            n_target: 3_000_000,
            trials: 1000,
            cross_check: false,
        },
    )
    .unwrap();
    let target = 0.25 * 0.8f64.ln().powi(2);
    let rel = (est.v_hat - target).abs() / target;
    report(
        5,
        "spike constant (lamplighter weights)",
        rel <= 0.25,
        &format!(
            "v_hat = {:.6} +- {:.6} vs target {:.6} (relative error {:.1}%)",
            est.v_hat,
            est.stderr,
            target,
            100.0 * rel
        ),
    );
}

/// 6. Renewal limit: E[#unit crossings on [0, K^2]]/K^2 within 10% of
/// sigma2 for sigma2 in {0.25, 1, 4} at K = 10, 10^4 paths.
#[test]
fn criterion_06_renewal_limit() {
    let mut detail = String::new();
    let mut ok = true;
    for sigma2 in [0.25, 1.0, 4.0] {
        let est = brownian::renewal_rate(sigma2, 10.0, 10_000, 606).unwrap();
        let rel = (est.rate - sigma2).abs() / sigma2;
        ok &= rel <= 0.10;
        detail.push_str(&format!(
            "sigma2={sigma2}: rate={:.4} ({:+.1}%); ",
            est.rate,
            100.0 * (est.rate / sigma2 - 1.0)
        ));
    }
    report(6, "renewal limit", ok, detail.trim_end());
}

/// 7. Smallest-eigenvalue law: KS distance <= 0.08 between
/// -log(lambda_0)/sqrt(n) over 2000 trials (n = 4001) and the
/// sigma-scaled sup|B| law; the series oracle itself is validated against
/// a fine-mesh simulation within 3 standard errors.
#[test]
fn criterion_07_smallest_eigenvalue_law() {
    // Oracle validation at x = 1: dt = 1e-6 over 2 * 10^4 paths.
    let trials = 20_000u64;
    let sups = brownian::sample_sup_abs(1.0, trials, 1e-6, 707).unwrap();
    let emp = sups.partition_point(|s| *s <= 1.0) as f64 / trials as f64;
    let series = brownian::sup_abs_cdf(1.0);
    let se = (series * (1.0 - series) / trials as f64).sqrt();
    let oracle_ok = (emp - series).abs() <= 3.0 * se;

    let spec = WeightProcessSpec::new(ProcessKind::DysonGamma { order: 1 }, 717).unwrap();
    let rep = estimators::smallest_eig_law(
        &spec,
        &estimators::SmallestEigParams {
            n: 4001,
            trials: 2000,
        },
    )
    .unwrap();
    let ks_ok = rep.ks_distance <= 0.08;
    report(
        7,
        "smallest-eigenvalue law",
        oracle_ok && ks_ok,
        &format!(
            "KS = {:.4} (<= 0.08); oracle check |{:.4} - {:.4}| <= 3 * {:.4}",
            rep.ks_distance, emp, series, se
        ),
    );
}

/// 8. Local statistics: total-variation distance <= 0.08 between the
/// eigenvalue-count law at (t, eta) = (1, 1), n = 4001, 2000 trials, and
/// the simulated Brownian well count.
#[test]
fn criterion_08_local_statistics() {
    let spec = WeightProcessSpec::new(ProcessKind::DysonGamma { order: 1 }, 808).unwrap();
    let rep = estimators::local_stats(
        &spec,
        &estimators::LocalStatsParams {
            n_base: 4001,
            t_grid: vec![1.0],
            eta_grid: vec![1.0],
            trials: 2000,
            oracle_paths: 20_000,
        },
    )
    .unwrap();
    let tv = rep.cells[0].tv_distance;
    report(
        8,
        "local statistics",
        tv <= 0.08,
        &format!(
            "TV = {tv:.4} (<= 0.08), empirical {:?} vs oracle {:?}",
            rep.cells[0].empirical, rep.cells[0].oracle
        ),
    );
}

/// 9. Gaussian tail of the well count: at 10^6 paths the empirical
/// P(Lambda(1,1) > m) lies below the envelope a*exp(-b m^2) fitted at
/// m in {2, 3}, for every m <= 6.
#[test]
fn criterion_09_tail_bound() {
    let rep = brownian::tail_check(1.0, 1.0, 4.0, 6, 1_000_000, 909).unwrap();
    let fitted = rep.envelope_b.is_some();
    report(
        9,
        "well-count tail bound",
        fitted && rep.below_envelope,
        &format!(
            "tail {:?}, envelope b = {:?}",
            rep.rows.iter().map(|r| r.p_gt).collect::<Vec<_>>(),
            rep.envelope_b
        ),
    );
}

/// 10. Rank-one cut: Kolmogorov distance between the spectrum and the
/// cut-edge spectrum is at most 1/(n+1), exactly, over 10^3 random
/// instances with n <= 201.
#[test]
fn criterion_10_rank_one_cut() {
    use rand::Rng;
    let spec = WeightProcessSpec::new(ProcessKind::DysonGamma { order: 1 }, 1010).unwrap();
    let mut rng = hoplab_core::seeding::rng_for(1010, 0xACC10, 0);
    let mut worst_slack = f64::INFINITY;
    for trial in 0..1000u64 {
        // Mixed odd sizes up to the cap, with the cap itself exercised.
        let n = if trial % 50 == 0 {
            201
        } else {
            2 * rng.random_range(1..=100) + 1
        };
        let w = spec.sample(n, trial).unwrap();
        let h = FiniteOperator::new(&w);
        let k = rng.random_range(1..=n);
        let e1 = h.eigenvalues_oracle().unwrap();
        let e2 = h.cut_edge(k).eigenvalues_oracle().unwrap();
        let d = kolmogorov_distance(&e1, &e2).unwrap();
        let bound = 1.0 / (n + 1) as f64;
        assert!(d <= bound + 1e-12, "trial {trial}: n={n} k={k} d={d}");
        worst_slack = worst_slack.min(bound - d);
    }
    report(
        10,
        "rank-one cut distance",
        true,
        &format!("1000 instances within 1/(n+1); tightest slack {worst_slack:.2e}"),
    );
}

/// 11. Sol-lattice construction: the periodic-orbit coboundary certificate
/// equals 2 log 2 to 1e-9; the fourth-moment ratio stays bounded across
/// n = 10^2..10^5; the window-mass fit has log-log slope -2 +- 0.5 while
/// the all-ones control shows a power-law exponent 1 +- 0.2.
#[test]
fn criterion_11_sol_construction() {
    use num_rational::Ratio;
    let sys = groups::ToralSystem::default();
    let cob = groups::coboundary_check(&sys, [Ratio::new(1, 3), Ratio::new(0, 1)]).unwrap();
    let cob_ok = cob.distinct && ((cob.lhs - cob.rhs) - 2.0 * 2.0f64.ln()).abs() <= 1e-9;

    let sol = WeightProcessSpec::new(ProcessKind::Toral { system: sys }, 1111).unwrap();
    let moments =
        estimators::moment_diagnostic(&sol, &[100, 1000, 10_000, 100_000], 200).unwrap();
    let moments_ok = moments.bounded4 && moments.bounded2;

    let grid: Vec<f64> = (0..6).map(|i| (-12.0 - 4.0 * i as f64).exp()).collect();
    let ns_sol = estimators::novikov_shubin(
        &sol,
        &estimators::NsParams {
            k_scale: 3.0,
            eps_grid: grid,
            trials: 400,
        },
    )
    .unwrap();
    let spike_slope = ns_sol.spike_fit.unwrap().slope;
    let sol_ok = (spike_slope + 2.0).abs() <= 0.5;

    let control = WeightProcessSpec::new(ProcessKind::Constant { value: 1.0 }, 1112).unwrap();
    let grid: Vec<f64> = (0..7).map(|i| 0.1 * 0.5f64.powi(i)).collect();
    let ns_control = estimators::novikov_shubin(
        &control,
        &estimators::NsParams {
            k_scale: 12.0,
            eps_grid: grid,
            trials: 1,
        },
    )
    .unwrap();
    let alpha = ns_control.alpha_hat.unwrap().slope;
    let control_ok = (alpha - 1.0).abs() <= 0.2;

    report(
        11,
        "sol-lattice construction",
        cob_ok && moments_ok && sol_ok && control_ok,
        &format!(
            "coboundary gap = {:.12} (2 log 2 = {:.12}); moment ratios bounded = {}; \
             spike slope = {:.3}; control alpha = {:.3}",
            cob.lhs - cob.rhs,
            2.0 * 2.0f64.ln(),
            moments_ok,
            spike_slope,
            alpha
        ),
    );
}

/// 12. Determinism: the same configuration produces byte-identical
/// results.json under worker counts 1 and 8, and replaying a manifest
/// reproduces the bytes again.
#[test]
fn criterion_12_determinism_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: usize, cmd: CommandConfig, spec: Option<SpecConfig>| {
        let cfg = RunConfig {
            command: cmd,
            spec,
            seed: 1212,
            workers,
            cross_check: true,
        };
        let out = dir.path().join(name);
        hoplab_cli::run(&cfg, &out).unwrap()
    };
    let spike_cmd = || CommandConfig::Spike {
        k_scale: 3.0,
        n_target: 2001,
        trials: 500,
    };
    let a = run("w1", 1, spike_cmd(), Some(SpecConfig::DysonGamma { order: 1 }));
    let b = run("w8", 8, spike_cmd(), Some(SpecConfig::DysonGamma { order: 1 }));
    let workers_identical = a.results_json == b.results_json;

    let renewal = CommandConfig::BmRenewal {
        sigma2: vec![1.0],
        k_scale: 6.0,
        trials: 400,
    };
    let c = run("r1", 1, renewal.clone(), None);
    let d = run("r8", 8, renewal, None);
    let renewal_identical = c.results_json == d.results_json;

    let replayed = hoplab_cli::replay(
        &dir.path().join("w1").join("manifest.json"),
        &dir.path().join("replayed"),
    )
    .unwrap();
    let replay_identical = replayed.results_json == a.results_json;
    let replay_bytes_match = std::fs::read(Path::new(&dir.path().join("replayed").join("results.json")))
        .unwrap()
        == std::fs::read(dir.path().join("w1").join("results.json")).unwrap();

    report(
        12,
        "determinism and replay",
        workers_identical && renewal_identical && replay_identical && replay_bytes_match,
        &format!(
            "workers 1 vs 8 identical: {workers_identical} (spike), {renewal_identical} (renewal); \
             replay identical: {}",
            replay_identical && replay_bytes_match
        ),
    );
}
