//! Monte Carlo drivers: the spectral spike at zero, local eigenvalue
//! statistics against the Brownian oracle, the smallest-eigenvalue law, the
//! small-spectral-scale exponent, and the mixing diagnostics.
//!
//! Every estimator is a deterministic function of `(spec, parameters, seed)`:
//! trial `t` draws from the stream `hash(estimator tag, t)`, results are
//! collected in trial order and reduced sequentially, so the output does not
//! depend on the number of worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::brownian;
use crate::error::{Error, Result};
use crate::operator::FiniteOperator;
use crate::seeding::{self, tag};
use crate::signedlog::SignedLog;
use crate::stats::{self, LinearFit};
use crate::transfer;
use crate::weights::{log_ratio_walk, VarianceSummary, WeightProcessSpec};

fn largest_odd_leq(x: u64) -> u64 {
    assert!(x >= 3, "need n >= 3");
    if x % 2 == 0 {
        x - 1
    } else {
        x
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpikeParams {
    /// The window coupling scale: `n = largest odd <= n_target` and
    /// `eps = exp(-sqrt(n)/K)`, so that `n = K^2 log^2 eps` exactly.
    pub k_scale: f64,
    pub n_target: u64,
    pub trials: u64,
    /// Verify transfer jumps against Sturm inertia on every trial.
    pub cross_check: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpikeEstimate {
    pub spec_label: String,
    pub k_scale: f64,
    pub n: u64,
    pub log_eps: f64,
    pub trials: u64,
    /// Mean of `M / (n+1)` with `M` the eigenvalue count in `(-eps, eps)`.
    pub mean_window_fraction: f64,
    /// `mu_n(-eps, eps) * log^2 eps`; the spike prediction is `sigma2`.
    pub v_hat: f64,
    pub stderr: f64,
    pub sigma2_ref: VarianceSummary,
    pub cross_checked: bool,
}

pub fn spike_estimate(
    spec: &WeightProcessSpec,
    params: &SpikeParams,
    ) -> Result<SpikeEstimate> {
    if params.k_scale < 2.0 {
        return Err(Error::Config(format!(
            "window scale K = {} too small; need K >= 2",
            params.k_scale
        )));
    }
    let sigma2_ref = spec.variance_summary()?;
    if sigma2_ref.degenerate {
        return Err(Error::Config(format!(
            "spec {} has sigma2 = 0; the spike scaling is void",
            spec.label()
        )));
    }
    let n = largest_odd_leq(params.n_target);
    let log_eps = -(n as f64).sqrt() / params.k_scale;
    let lam = SignedLog::from_sign_ln(1, log_eps);
    let per_trial: Vec<Result<u64>> = (0..params.trials)
        .into_par_iter()
        .map(|trial| {
            let w = spec.sample_stream(n as usize, seeding::mix(&[tag::ESTIMATOR_SPIKE, trial]))?;
            let wc = FiniteOperator::new(&w).count_in_window(lam)?;
            if params.cross_check {
                let via_jumps = transfer::eigencount_via_jumps(&w, lam)? as usize;
                if via_jumps != wc.m_plus {
                    return Err(Error::CountMismatch {
                        trial,
                        transfer: via_jumps,
                        inertia: wc.m_plus,
                        weights: w.values().to_vec(),
                    });
                }
            }
            Ok(wc.window as u64)
        })
        .collect();
    let windows: Vec<f64> = per_trial
        .into_iter()
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .map(|w| w as f64)
        .collect();
    let (mean_window, se_window) = stats::mean_stderr(&windows);
    let dim = (n + 1) as f64;
    let log2_eps = log_eps * log_eps;
    Ok(SpikeEstimate {
        spec_label: spec.label(),
        k_scale: params.k_scale,
        n,
        log_eps,
        trials: params.trials,
        mean_window_fraction: mean_window / dim,
        v_hat: mean_window / dim * log2_eps,
        stderr: se_window / dim * log2_eps,
        sigma2_ref,
        cross_checked: params.cross_check,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalStatsParams {
    pub n_base: u64,
    pub t_grid: Vec<f64>,
    pub eta_grid: Vec<f64>,
    pub trials: u64,
    pub oracle_paths: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalCell {
    pub t: f64,
    pub eta: f64,
    /// Interval length actually used: `floor(t n)` adjusted to odd.
    pub m_used: u64,
    pub log_lambda: f64,
    /// Histogram of the eigenvalue count over trials.
    pub empirical: Vec<u64>,
    /// Histogram of the Brownian well count over oracle paths.
    pub oracle: Vec<u64>,
    pub tv_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalStatsReport {
    pub spec_label: String,
    pub n_base: u64,
    pub trials: u64,
    pub oracle_paths: u64,
    pub sigma2: f64,
    pub cells: Vec<LocalCell>,
}

/// Law of the eigenvalue count of the length-`floor(t n)` restriction in
/// `(0, e^{-eta sqrt n})`, per grid cell, against the law of the number of
/// `eta`-wells of a variance-`sigma2` Brownian motion on `[0, t]`.
pub fn local_stats(
    spec: &WeightProcessSpec,
    params: &LocalStatsParams,
) -> Result<LocalStatsReport> {
    let vs = spec.variance_summary()?;
    if vs.degenerate {
        return Err(Error::Config("local statistics need sigma2 > 0".into()));
    }
    let n = params.n_base;
    let sqrt_n = (n as f64).sqrt();
    struct Cell {
        t: f64,
        eta: f64,
        m: u64,
        lam: SignedLog,
    }
    let mut cells = Vec::new();
    for &t in &params.t_grid {
        for &eta in &params.eta_grid {
            if !(t > 0.0 && t <= 1.0) || !(eta > 0.0) {
                return Err(Error::Config(format!("bad grid cell (t={t}, eta={eta})")));
            }
            let m = largest_odd_leq(((t * n as f64).floor() as u64).max(3));
            cells.push(Cell {
                t,
                eta,
                m,
                lam: SignedLog::from_sign_ln(1, -eta * sqrt_n),
            });
        }
    }

    let empirical: Vec<Result<Vec<u64>>> = (0..params.trials)
        .into_par_iter()
        .map(|trial| {
            let w = spec.sample_stream(n as usize, seeding::mix(&[tag::ESTIMATOR_LOCAL, trial]))?;
            let mut counts = Vec::with_capacity(cells.len());
            for cell in &cells {
                let h = FiniteOperator::new(&w.prefix(cell.m as usize));
                counts.push(h.count_in_window(cell.lam)?.m_plus as u64);
            }
            // Per-trial coherence: at fixed t the count cannot grow with eta.
            for pair in cells.iter().zip(&counts).collect::<Vec<_>>().windows(2) {
                let ((c0, k0), (c1, k1)) = (pair[0], pair[1]);
                if c0.t == c1.t && c1.eta >= c0.eta {
                    assert!(k1 <= k0, "count increased with eta on trial {trial}");
                }
            }
            Ok(counts)
        })
        .collect();
    let empirical: Vec<Vec<u64>> = empirical.into_iter().collect::<Result<_>>()?;

    let t_max = params
        .t_grid
        .iter()
        .cloned()
        .fold(f64::MIN, f64::max);
    let dt = brownian::default_dt(t_max);
    let oracle: Vec<Vec<u64>> = (0..params.oracle_paths)
        .into_par_iter()
        .map(|path_id| {
            let mut rng =
                seeding::rng_for(spec.seed, tag::ESTIMATOR_LOCAL, seeding::mix(&[0xB0, path_id]));
            let steps = (t_max / dt).ceil() as usize;
            let scale = (vs.sigma2 * dt).sqrt();
            let mut samples = Vec::with_capacity(steps + 1);
            let mut x = 0.0f64;
            samples.push(x);
            for _ in 0..steps {
                use rand_distr::Distribution;
                let z: f64 = rand_distr::StandardNormal.sample(&mut rng);
                x += scale * z;
                samples.push(x);
            }
            cells
                .iter()
                .map(|cell| {
                    let limit = ((cell.t / dt).floor() as usize).min(samples.len() - 1);
                    crate::crossings::crossings(&samples[..=limit], cell.eta).down() as u64
                })
                .collect()
        })
        .collect();

    let mut out_cells = Vec::with_capacity(cells.len());
    for (idx, cell) in cells.iter().enumerate() {
        let emp_hist = stats::histogram(empirical.iter().map(|row| row[idx]));
        let ora_hist = stats::histogram(oracle.iter().map(|row| row[idx]));
        let tv = stats::tv_distance(&emp_hist, &ora_hist);
        out_cells.push(LocalCell {
            t: cell.t,
            eta: cell.eta,
            m_used: cell.m,
            log_lambda: cell.lam.ln_abs(),
            empirical: emp_hist,
            oracle: ora_hist,
            tv_distance: tv,
        });
    }
    Ok(LocalStatsReport {
        spec_label: spec.label(),
        n_base: n,
        trials: params.trials,
        oracle_paths: params.oracle_paths,
        sigma2: vs.sigma2,
        cells: out_cells,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SmallestEigParams {
    pub n: u64,
    pub trials: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmallestEigReport {
    pub spec_label: String,
    pub n: u64,
    pub trials: u64,
    pub sigma: f64,
    /// Sorted samples of `-log lambda_0 / sqrt(n)`.
    pub samples: Vec<f64>,
    pub median: f64,
    /// One-sample KS distance against `P(sigma sup|B| <= x)`.
    pub ks_distance: f64,
}

/// Locates the smallest positive eigenvalue per trial by bisection on the
/// window count over `log lambda`, to 1e-3 relative precision in the log.
pub fn smallest_eig_law(
    spec: &WeightProcessSpec,
    params: &SmallestEigParams,
) -> Result<SmallestEigReport> {
    let vs = spec.variance_summary()?;
    if vs.degenerate && !matches!(spec.kind, crate::weights::ProcessKind::Constant { .. }) {
        return Err(Error::Config("smallest-eigenvalue law needs sigma2 > 0".into()));
    }
    let n = largest_odd_leq(params.n);
    let sqrt_n = (n as f64).sqrt();
    let sigma = vs.sigma2.sqrt();
    let bracket = if sigma > 0.0 { 4.0 * sigma * sqrt_n } else { 4.0 * sqrt_n };
    let samples: Vec<Result<f64>> = (0..params.trials)
        .into_par_iter()
        .map(|trial| {
            let w =
                spec.sample_stream(n as usize, seeding::mix(&[tag::ESTIMATOR_SMALLEST, trial]))?;
            let h = FiniteOperator::new(&w);
            let count_ge_one = |y: f64| -> Result<bool> {
                Ok(h.count_in_window(SignedLog::from_sign_ln(1, y))?.m_plus >= 1)
            };
            let max_w = w.values().iter().fold(0.0f64, |m, a| m.max(a.abs()));
            let hi0 = (2.0 * max_w + 1.0).ln();
            let mut lo = -bracket;
            if count_ge_one(lo)? {
                lo = -2.0 * bracket; // enlarge once
                if count_ge_one(lo)? {
                    return Err(Error::BracketFailure { lo, hi: hi0 });
                }
            }
            let mut hi = hi0;
            debug_assert!(count_ge_one(hi)?);
            while hi - lo > 1e-3 * hi.abs().max(lo.abs()).max(1e-3) {
                let mid = 0.5 * (hi + lo);
                if count_ge_one(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(-(0.5 * (hi + lo)) / sqrt_n)
        })
        .collect();
    let mut samples: Vec<f64> = samples.into_iter().collect::<Result<_>>()?;
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = samples[samples.len() / 2];
    let ks = if sigma > 0.0 {
        stats::ks_vs_cdf(&samples, |x| brownian::sup_abs_cdf(x / sigma))
    } else {
        f64::NAN
    };
    Ok(SmallestEigReport {
        spec_label: spec.label(),
        n,
        trials: params.trials,
        sigma,
        median,
        ks_distance: ks,
        samples,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NsParams {
    pub k_scale: f64,
    /// Geometric grid, decreasing, at least 5 points.
    pub eps_grid: Vec<f64>,
    pub trials: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NsRow {
    pub eps: f64,
    pub n: u64,
    pub mu: f64,
    pub mu_stderr: f64,
    /// `mu * log^2 eps`.
    pub v_hat: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NsEstimate {
    pub spec_label: String,
    pub k_scale: f64,
    pub rows: Vec<NsRow>,
    /// Slope of `log mu` against `log eps` (the power-law exponent).
    pub alpha_hat: Option<LinearFit>,
    /// Slope of `log mu` against `log |log eps|`; a pure spike sits at -2.
    pub spike_fit: Option<LinearFit>,
    pub zero_rows_dropped: usize,
}

/// Finite-grid stand-in for the small-scale exponent
/// `liminf log mu(-eps, eps) / log eps`, reported next to the spike fit so a
/// logarithmic spike is distinguishable from a small positive power.
pub fn novikov_shubin(spec: &WeightProcessSpec, params: &NsParams) -> Result<NsEstimate> {
    if params.eps_grid.len() < 5 {
        return Err(Error::Config("need at least 5 grid points".into()));
    }
    if params
        .eps_grid
        .windows(2)
        .any(|w| !(w[1] < w[0]) || w[1] <= 0.0)
        || params.eps_grid[0] >= 1.0
    {
        return Err(Error::Config(
            "eps grid must be decreasing inside (0, 1)".into(),
        ));
    }
    let mut rows = Vec::with_capacity(params.eps_grid.len());
    for (gi, &eps) in params.eps_grid.iter().enumerate() {
        let log_eps = eps.ln();
        let n_raw = (params.k_scale * params.k_scale * log_eps * log_eps).floor() as u64;
        let n = largest_odd_leq(n_raw.max(3));
        let lam = SignedLog::from_sign_ln(1, log_eps);
        let fracs: Vec<Result<f64>> = (0..params.trials)
            .into_par_iter()
            .map(|trial| {
                let w = spec.sample_stream(
                    n as usize,
                    seeding::mix(&[tag::ESTIMATOR_NS, gi as u64, trial]),
                )?;
                let wc = FiniteOperator::new(&w).count_in_window(lam)?;
                Ok(wc.window as f64 / (n + 1) as f64)
            })
            .collect();
        let fracs: Vec<f64> = fracs.into_iter().collect::<Result<_>>()?;
        let (mu, se) = stats::mean_stderr(&fracs);
        rows.push(NsRow {
            eps,
            n,
            mu,
            mu_stderr: se,
            v_hat: mu * log_eps * log_eps,
        });
    }
    let usable: Vec<&NsRow> = rows.iter().filter(|r| r.mu > 0.0).collect();
    let zero_rows_dropped = rows.len() - usable.len();
    let (alpha_hat, spike_fit) = if usable.len() >= 2 {
        let ln_mu: Vec<f64> = usable.iter().map(|r| r.mu.ln()).collect();
        let ln_eps: Vec<f64> = usable.iter().map(|r| r.eps.ln()).collect();
        let ln_ln: Vec<f64> = usable.iter().map(|r| (-r.eps.ln()).ln()).collect();
        (
            Some(stats::linear_fit(&ln_eps, &ln_mu)),
            Some(stats::linear_fit(&ln_ln, &ln_mu)),
        )
    } else {
        (None, None)
    };
    Ok(NsEstimate {
        spec_label: spec.label(),
        k_scale: params.k_scale,
        rows,
        alpha_hat,
        spike_fit,
        zero_rows_dropped,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub n: u64,
    /// `E S_n^2 / n`.
    pub ratio2: f64,
    pub ratio2_stderr: f64,
    /// `E S_n^4 / n^2`.
    pub ratio4: f64,
    pub ratio4_stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub spec_label: String,
    pub rows: Vec<MomentRow>,
    /// Last-point ratio at most twice the median ratio of the column.
    pub bounded2: bool,
    pub bounded4: bool,
}

/// Diffusive moment table: bounded ratios certify the square-root scaling
/// of the walk that every limit statement rests on.
pub fn moment_diagnostic(
    spec: &WeightProcessSpec,
    n_grid: &[u64],
    trials: u64,
) -> Result<MomentReport> {
    let mut rows = Vec::with_capacity(n_grid.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        assert!(n >= 1);
        let per: Vec<Result<(f64, f64)>> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let w = spec.sample_stream(
                    2 * n as usize,
                    seeding::mix(&[tag::DIAG_MOMENT, gi as u64, trial]),
                )?;
                let s = *log_ratio_walk(&w).partial_sums().last().unwrap();
                let nf = n as f64;
                Ok((s * s / nf, s * s * s * s / (nf * nf)))
            })
            .collect();
        let per: Vec<(f64, f64)> = per.into_iter().collect::<Result<_>>()?;
        let r2: Vec<f64> = per.iter().map(|p| p.0).collect();
        let r4: Vec<f64> = per.iter().map(|p| p.1).collect();
        let (ratio2, ratio2_stderr) = stats::mean_stderr(&r2);
        let (ratio4, ratio4_stderr) = stats::mean_stderr(&r4);
        rows.push(MomentRow {
            n,
            ratio2,
            ratio2_stderr,
            ratio4,
            ratio4_stderr,
        });
    }
    let bounded = |pick: fn(&MomentRow) -> f64| -> bool {
        let mut vals: Vec<f64> = rows.iter().map(pick).collect();
        let last = *vals.last().unwrap();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        last <= 2.0 * vals[vals.len() / 2]
    };
    Ok(MomentReport {
        spec_label: spec.label(),
        bounded2: bounded(|r| r.ratio2),
        bounded4: bounded(|r| r.ratio4),
        rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrRow {
    pub lag: usize,
    /// `E U_0 U_lag` (raw product; the increments are centered).
    pub corr: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrReport {
    pub spec_label: String,
    pub rows: Vec<CorrRow>,
    /// Lags (>= 1) whose correlation clears four standard errors.
    pub significant_lags: Vec<usize>,
    /// `log |corr|` against lag over {0} and the significant lags.
    pub decay_fit: Option<LinearFit>,
}

pub fn correlation_diagnostic(
    spec: &WeightProcessSpec,
    max_lag: usize,
    trials: u64,
) -> Result<CorrReport> {
    const WINDOW: usize = 256;
    let series_len = max_lag + WINDOW;
    let per_trial: Vec<Result<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let w = spec.sample_stream(
                2 * series_len,
                seeding::mix(&[tag::DIAG_CORRELATION, trial]),
            )?;
            let u = log_ratio_walk(&w).increments().to_vec();
            let mut prods = Vec::with_capacity(max_lag + 1);
            for lag in 0..=max_lag {
                let mut acc = 0.0;
                for i in 0..WINDOW {
                    acc += u[i] * u[i + lag];
                }
                prods.push(acc / WINDOW as f64);
            }
            Ok(prods)
        })
        .collect();
    let per_trial: Vec<Vec<f64>> = per_trial.into_iter().collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let col: Vec<f64> = per_trial.iter().map(|p| p[lag]).collect();
        let (corr, stderr) = stats::mean_stderr(&col);
        rows.push(CorrRow { lag, corr, stderr });
    }
    let significant_lags: Vec<usize> = rows
        .iter()
        .skip(1)
        .filter(|r| r.corr.abs() > 4.0 * r.stderr)
        .map(|r| r.lag)
        .collect();
    let decay_fit = if significant_lags.is_empty() {
        None
    } else {
        let mut xs = vec![0.0];
        let mut ys = vec![rows[0].corr.abs().ln()];
        for &l in &significant_lags {
            xs.push(l as f64);
            ys.push(rows[l].corr.abs().ln());
        }
        Some(stats::linear_fit(&xs, &ys))
    };
    Ok(CorrReport {
        spec_label: spec.label(),
        rows,
        significant_lags,
        decay_fit,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BigWeightRow {
    pub n: u64,
    /// `E max_{k<=n} |log|a_k|| / sqrt(n)`.
    pub mean_max_ratio: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BigWeightReport {
    pub spec_label: String,
    pub rows: Vec<BigWeightRow>,
    pub decreasing: bool,
    /// Clear downward trend (last point below 60% of the first); a
    /// heavy-tailed control fails this and is thereby flagged.
    pub vanishing_trend: bool,
}

pub fn big_weight_diagnostic(
    spec: &WeightProcessSpec,
    n_grid: &[u64],
    trials: u64,
) -> Result<BigWeightReport> {
    let mut rows = Vec::with_capacity(n_grid.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        let maxima: Vec<Result<f64>> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let w = spec.sample_stream(
                    n as usize,
                    seeding::mix(&[tag::DIAG_BIG_WEIGHT, gi as u64, trial]),
                )?;
                let max = w.log_abs().iter().fold(0.0f64, |m, l| m.max(l.abs()));
                Ok(max / (n as f64).sqrt())
            })
            .collect();
        let maxima: Vec<f64> = maxima.into_iter().collect::<Result<_>>()?;
        let (mean_max_ratio, stderr) = stats::mean_stderr(&maxima);
        rows.push(BigWeightRow {
            n,
            mean_max_ratio,
            stderr,
        });
    }
    let decreasing = rows.windows(2).all(|w| w[1].mean_max_ratio < w[0].mean_max_ratio);
    let vanishing_trend = rows.last().unwrap().mean_max_ratio
        < 0.6 * rows.first().unwrap().mean_max_ratio;
    Ok(BigWeightReport {
        spec_label: spec.label(),
        rows,
        decreasing,
        vanishing_trend,
    })
}
