//! Edge-weight processes and the log-ratio walk derived from them.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::ToralSystem;
use crate::seeding::{self, tag};

/// One realized finite sequence of nonzero edge weights, with the natural
/// logs of their magnitudes cached at sampling time. All downstream
/// consumers (walks, pivots, shears) work in the log domain.
#[derive(Clone, Debug)]
pub struct WeightSequence {
    values: Vec<f64>,
    log_abs: Vec<f64>,
    provenance: Provenance,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub label: String,
    pub seed: u64,
    pub stream: u64,
}

impl WeightSequence {
    pub fn from_values(values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if v == 0.0 || !v.is_finite() {
                return Err(Error::Config(format!(
                    "weight {i} is {v}; weights must be nonzero and finite"
                )));
            }
        }
        let log_abs = values.iter().map(|v| v.abs().ln()).collect();
        Ok(WeightSequence {
            values,
            log_abs,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn log_abs(&self) -> &[f64] {
        &self.log_abs
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Truncation to the first `m` weights (restriction to a subinterval).
    pub fn prefix(&self, m: usize) -> WeightSequence {
        assert!(m <= self.len());
        WeightSequence {
            values: self.values[..m].to_vec(),
            log_abs: self.log_abs[..m].to_vec(),
            provenance: self.provenance.clone(),
        }
    }
}

/// The walk of pair log-ratios: increments `U_i = 2 log|a_{2i-1}/a_{2i}|`
/// and partial sums `S_k` with `S_0 = 0`.
#[derive(Clone, Debug)]
pub struct Walk {
    increments: Vec<f64>,
    partial: Vec<f64>,
}

impl Walk {
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `S_0..S_m` inclusive; `partial().len() == increments().len() + 1`.
    pub fn partial_sums(&self) -> &[f64] {
        &self.partial
    }

    pub fn steps(&self) -> usize {
        self.increments.len()
    }

    /// Diffusively rescaled path value `S_{floor(m t)} / sqrt(m)`.
    pub fn scaled_value(&self, t: f64) -> f64 {
        let m = self.steps();
        let idx = ((m as f64 * t).floor() as usize).min(m);
        self.partial[idx] / (m as f64).sqrt()
    }
}

/// The walk consumes weights in pairs; a trailing odd weight is dropped.
pub fn log_ratio_walk(w: &WeightSequence) -> Walk {
    let pairs = w.len() / 2;
    let logs = w.log_abs();
    let mut increments = Vec::with_capacity(pairs);
    let mut partial = Vec::with_capacity(pairs + 1);
    partial.push(0.0);
    let mut s = 0.0;
    for i in 0..pairs {
        let u = 2.0 * (logs[2 * i] - logs[2 * i + 1]);
        increments.push(u);
        s += u;
        partial.push(s);
    }
    Walk {
        increments,
        partial,
    }
}

type LampSamplerFn = dyn Fn(&mut ChaCha8Rng) -> f64 + Send + Sync;

/// The weight distributions the laboratory knows how to generate.
#[derive(Clone)]
pub enum ProcessKind {
    /// Values `1` and `2p-1` with probability 1/2 each (lamplighter dual).
    TwoPoint { p: f64 },
    /// `a = sqrt(lambda)` with `lambda` a mean-one Gamma of integer order `m`
    /// (sum of `m` exponentials of rate `m`).
    DysonGamma { order: u32 },
    /// `log a ~ N(0, sigma_log^2)`.
    LogNormal { sigma_log: f64 },
    /// I.i.d. draws from the empirical distribution of a loaded file.
    Empirical {
        label: String,
        values: Arc<Vec<f64>>,
    },
    /// Deterministic-in-orbit weights `a_k = f(B^k x)` of a hyperbolic torus
    /// map, with Haar-random starting point per stream.
    Toral { system: ToralSystem },
    Constant { value: f64 },
    /// User-supplied i.i.d. sampler (general lamp groups).
    LampSampler {
        label: String,
        sampler: Arc<LampSamplerFn>,
    },
}

impl std::fmt::Debug for ProcessKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

impl ProcessKind {
    pub fn label(&self) -> String {
        match self {
            ProcessKind::TwoPoint { p } => format!("two-point:{p}"),
            ProcessKind::DysonGamma { order } => format!("dyson-gamma:{order}"),
            ProcessKind::LogNormal { sigma_log } => format!("lognormal:{sigma_log}"),
            ProcessKind::Empirical { label, .. } => format!("empirical:{label}"),
            ProcessKind::Toral { system } => format!(
                "toral:[[{},{}],[{},{}]]+{}",
                system.matrix[0][0],
                system.matrix[0][1],
                system.matrix[1][0],
                system.matrix[1][1],
                system.shift
            ),
            ProcessKind::Constant { value } => format!("constant:{value}"),
            ProcessKind::LampSampler { label, .. } => format!("lamp-sampler:{label}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct WeightProcessSpec {
    pub kind: ProcessKind,
    pub seed: u64,
}

/// How a variance figure was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VarianceMethod {
    ClosedForm,
    FileExact,
    MonteCarlo,
}

/// `sigma2 = Var log|a|` and `var_u = Var U`. For i.i.d. kinds
/// `var_u = 8 sigma2`; for the toral kind both are empirical estimates and
/// `sigma2_stderr` is populated.
#[derive(Clone, Debug, Serialize)]
pub struct VarianceSummary {
    pub sigma2: f64,
    pub var_u: f64,
    pub sigma2_stderr: Option<f64>,
    pub method: VarianceMethod,
    /// `sigma2 == 0`: the spike scaling is void for this process.
    pub degenerate: bool,
}

impl WeightProcessSpec {
    pub fn new(kind: ProcessKind, seed: u64) -> Result<Self> {
        let spec = WeightProcessSpec { kind, seed };
        spec.validate()?;
        Ok(spec)
    }

    /// Load the empirical-file kind: one real per line, `#` comments allowed,
    /// zero entries rejected.
    pub fn empirical_from_path(path: &str, seed: u64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                Error::Config(format!("{path}:{}: unparsable value {line:?}", lineno + 1))
            })?;
            if v == 0.0 || !v.is_finite() {
                return Err(Error::Config(format!(
                    "{path}:{}: zero or non-finite weight {v}",
                    lineno + 1
                )));
            }
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::Config(format!("{path}: no weights found")));
        }
        Self::new(
            ProcessKind::Empirical {
                label: path.to_string(),
                values: Arc::new(values),
            },
            seed,
        )
    }

    pub fn label(&self) -> String {
        self.kind.label()
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ProcessKind::TwoPoint { p } => {
                if !(*p > 0.0 && *p <= 1.0) {
                    return Err(Error::Config(format!("two-point p={p} outside (0, 1]")));
                }
                if *p == 0.5 {
                    return Err(Error::Config(
                        "two-point p=1/2 yields zero weights (edge percolation)".into(),
                    ));
                }
            }
            ProcessKind::DysonGamma { order } => {
                if *order < 1 {
                    return Err(Error::Config("dyson-gamma order must be >= 1".into()));
                }
            }
            ProcessKind::LogNormal { sigma_log } => {
                if !(*sigma_log > 0.0) || !sigma_log.is_finite() {
                    return Err(Error::Config(format!("lognormal sigma={sigma_log} invalid")));
                }
            }
            ProcessKind::Empirical { values, .. } => {
                if values.is_empty() {
                    return Err(Error::Config("empirical kind with no values".into()));
                }
            }
            ProcessKind::Toral { system } => system.validate()?,
            ProcessKind::Constant { value } => {
                if *value == 0.0 || !value.is_finite() {
                    return Err(Error::Config("constant weight must be nonzero finite".into()));
                }
            }
            ProcessKind::LampSampler { .. } => {}
        }
        Ok(())
    }

    /// Deterministic function of `(seed, trial, n)`; `trial` indexes an
    /// independent stream.
    pub fn sample(&self, n: usize, trial: u64) -> Result<WeightSequence> {
        self.sample_stream(n, trial)
    }

    /// As [`sample`](Self::sample) but with an explicit stream id, used by
    /// estimators that need several independent families of trials.
    pub fn sample_stream(&self, n: usize, stream: u64) -> Result<WeightSequence> {
        assert!(n >= 1);
        self.validate()?;
        let mut rng = seeding::rng_for(self.seed, tag::WEIGHTS, stream);
        let provenance = Provenance {
            label: self.label(),
            seed: self.seed,
            stream,
        };
        let values: Vec<f64> = match &self.kind {
            ProcessKind::TwoPoint { p } => {
                let other = 2.0 * p - 1.0;
                (0..n)
                    .map(|_| if rng.random::<bool>() { 1.0 } else { other })
                    .collect()
            }
            ProcessKind::DysonGamma { order } => {
                let m = *order as f64;
                (0..n)
                    .map(|_| {
                        let mut lam = 0.0;
                        for _ in 0..*order {
                            let e: f64 = Exp1.sample(&mut rng);
                            lam += e / m;
                        }
                        lam.sqrt()
                    })
                    .collect()
            }
            ProcessKind::LogNormal { sigma_log } => (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (sigma_log * z).exp()
                })
                .collect(),
            ProcessKind::Empirical { values, .. } => (0..n)
                .map(|_| values[rng.random_range(0..values.len())])
                .collect(),
            ProcessKind::Toral { system } => {
                let x0 = [rng.random::<f64>(), rng.random::<f64>()];
                return crate::groups::toral_orbit_weights_from(system, x0, n, provenance);
            }
            ProcessKind::Constant { value } => vec![*value; n],
            ProcessKind::LampSampler { sampler, .. } => {
                (0..n).map(|_| sampler(&mut rng)).collect()
            }
        };
        WeightSequence::from_values(values, provenance)
    }

    /// Closed-form variance where the law permits, empirical otherwise.
    pub fn variance_summary(&self) -> Result<VarianceSummary> {
        self.validate()?;
        let closed = |sigma2: f64| VarianceSummary {
            sigma2,
            var_u: 8.0 * sigma2,
            sigma2_stderr: None,
            method: VarianceMethod::ClosedForm,
            degenerate: sigma2 == 0.0,
        };
        match &self.kind {
            ProcessKind::TwoPoint { p } => {
                // log|a| is 0 or log|2p-1| with probability 1/2 each.
                let l = (2.0 * p - 1.0).abs().ln();
                Ok(closed(0.25 * l * l))
            }
            ProcessKind::DysonGamma { order } => {
                // Var log lambda = trigamma(m) = pi^2/6 - sum_{j<m} 1/j^2,
                // and log a = log(lambda)/2.
                let m = *order;
                let mut trigamma = PI * PI / 6.0;
                for j in 1..m {
                    trigamma -= 1.0 / (j as f64 * j as f64);
                }
                Ok(closed(0.25 * trigamma))
            }
            ProcessKind::LogNormal { sigma_log } => Ok(closed(sigma_log * sigma_log)),
            ProcessKind::Constant { .. } => Ok(closed(0.0)),
            ProcessKind::Empirical { values, .. } => {
                let logs: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
                let sigma2 = population_variance(&logs);
                Ok(VarianceSummary {
                    sigma2,
                    var_u: 8.0 * sigma2,
                    sigma2_stderr: None,
                    method: VarianceMethod::FileExact,
                    degenerate: sigma2 == 0.0,
                })
            }
            ProcessKind::Toral { .. } | ProcessKind::LampSampler { .. } => {
                self.empirical_variance(64, 16384)
            }
        }
    }

    /// Batched Monte Carlo estimate of `Var log|a|` and `Var U` with a
    /// standard error across independent streams.
    fn empirical_variance(&self, batches: u64, batch_len: usize) -> Result<VarianceSummary> {
        let mut sig_vals = Vec::with_capacity(batches as usize);
        let mut varu_vals = Vec::with_capacity(batches as usize);
        for b in 0..batches {
            let stream = seeding::mix(&[tag::VARIANCE_MC, b]);
            let w = self.sample_stream(batch_len, stream)?;
            sig_vals.push(sample_variance(w.log_abs()));
            let walk = log_ratio_walk(&w);
            varu_vals.push(sample_variance(walk.increments()));
        }
        let (sigma2, se) = crate::stats::mean_stderr(&sig_vals);
        let (var_u, _) = crate::stats::mean_stderr(&varu_vals);
        Ok(VarianceSummary {
            sigma2,
            var_u,
            sigma2_stderr: Some(se),
            method: VarianceMethod::MonteCarlo,
            degenerate: false,
        })
    }
}

/// Exact variance of a finite population (the empirical-file law).
fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Unbiased estimator for Monte Carlo batches. The batch standard errors
/// here can be tiny (symmetric two-point laws), so the 1/n bias of the
/// population formula would be visible.
fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(kind: ProcessKind) -> WeightProcessSpec {
        WeightProcessSpec::new(kind, 42).unwrap()
    }

    #[test]
    fn constant_process() {
        let s = spec(ProcessKind::Constant { value: 1.0 });
        let w = s.sample(4, 0).unwrap();
        assert_eq!(w.values(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn degenerate_two_point_is_all_ones() {
        let s = spec(ProcessKind::TwoPoint { p: 1.0 });
        let w = s.sample(3, 0).unwrap();
        assert_eq!(w.values(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn two_point_half_rejected() {
        assert!(WeightProcessSpec::new(ProcessKind::TwoPoint { p: 0.5 }, 0).is_err());
    }

    #[test]
    fn two_point_frequency_converges() {
        // Law of large numbers: value 0.8 appears with frequency 1/2.
        let s = spec(ProcessKind::TwoPoint { p: 0.9 });
        let n = 100_000;
        let w = s.sample(n, 0).unwrap();
        let freq = w.values().iter().filter(|&&v| v == 0.8).count() as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((freq - 0.5).abs() < 3.0 * se, "freq {freq}");
    }

    #[test]
    fn walk_hand_values() {
        let p = Provenance {
            label: "test".into(),
            seed: 0,
            stream: 0,
        };
        let w = WeightSequence::from_values(vec![1.0, 1.0, 1.0, 1.0], p.clone()).unwrap();
        assert_eq!(log_ratio_walk(&w).partial_sums(), &[0.0, 0.0, 0.0]);

        let e = std::f64::consts::E;
        let w = WeightSequence::from_values(vec![e, 1.0, e, 1.0], p.clone()).unwrap();
        let walk = log_ratio_walk(&w);
        assert_relative_eq!(walk.increments()[0], 2.0, max_relative = 1e-15);
        assert_relative_eq!(walk.increments()[1], 2.0, max_relative = 1e-15);
        assert_relative_eq!(walk.partial_sums()[2], 4.0, max_relative = 1e-15);

        let w = WeightSequence::from_values(vec![1.0, e], p).unwrap();
        let walk = log_ratio_walk(&w);
        assert_relative_eq!(walk.increments()[0], -2.0, max_relative = 1e-15);
        assert_relative_eq!(walk.partial_sums()[1], -2.0, max_relative = 1e-15);
    }

    #[test]
    fn walk_increments_reconstruct_exactly() {
        let s = spec(ProcessKind::DysonGamma { order: 1 });
        let w = s.sample(1000, 3).unwrap();
        let walk = log_ratio_walk(&w);
        let logs = w.log_abs();
        let mut acc = 0.0f64;
        for k in 1..=walk.steps() {
            // increments are bit-identical to the defining formula on the
            // cached logs (doubling commutes with the one rounding)
            let direct = 2.0 * logs[2 * k - 2] - 2.0 * logs[2 * k - 1];
            assert_eq!(walk.increments()[k - 1], direct, "increment at k={k}");
            // and the partial sums are exactly their cumulative sum
            acc += walk.increments()[k - 1];
            assert_eq!(walk.partial_sums()[k], acc, "partial sum at k={k}");
        }
    }

    #[test]
    fn trailing_odd_weight_dropped() {
        let p = Provenance {
            label: "test".into(),
            seed: 0,
            stream: 0,
        };
        let w = WeightSequence::from_values(vec![2.0, 3.0, 5.0], p).unwrap();
        assert_eq!(log_ratio_walk(&w).steps(), 1);
    }

    #[test]
    fn closed_form_variances() {
        let s = spec(ProcessKind::TwoPoint { p: 0.9 });
        let v = s.variance_summary().unwrap();
        assert_relative_eq!(v.sigma2, 0.25 * 0.8f64.ln().powi(2), max_relative = 1e-15);
        assert_relative_eq!(v.sigma2, 0.012448, max_relative = 1e-3);
        assert!(!v.degenerate);

        let s = spec(ProcessKind::DysonGamma { order: 1 });
        let v = s.variance_summary().unwrap();
        assert_relative_eq!(v.sigma2, PI * PI / 24.0, max_relative = 1e-15);
        assert_relative_eq!(v.sigma2, 0.411234, max_relative = 1e-5);

        let s = spec(ProcessKind::Constant { value: 2.0 });
        let v = s.variance_summary().unwrap();
        assert_eq!(v.sigma2, 0.0);
        assert!(v.degenerate);
    }

    #[test]
    fn empirical_variance_matches_closed_form() {
        // 10^6 samples agree with the closed form within 4 standard errors.
        for kind in [
            ProcessKind::TwoPoint { p: 0.9 },
            ProcessKind::DysonGamma { order: 1 },
        ] {
            let s = spec(kind);
            let closed = s.variance_summary().unwrap();
            let emp = s.empirical_variance(64, 16384).unwrap();
            let se = emp.sigma2_stderr.unwrap();
            assert!(
                (emp.sigma2 - closed.sigma2).abs() < 4.0 * se,
                "{}: emp {} vs closed {} (se {se})",
                s.label(),
                emp.sigma2,
                closed.sigma2
            );
            let ratio = emp.var_u / (8.0 * emp.sigma2);
            assert!((0.95..=1.05).contains(&ratio), "var_u/8sigma2 = {ratio}");
        }
    }

    #[test]
    fn resampling_is_bit_identical_and_trials_differ() {
        let s = spec(ProcessKind::DysonGamma { order: 1 });
        let a = s.sample(50, 7).unwrap();
        let b = s.sample(50, 7).unwrap();
        assert_eq!(a.values(), b.values());
        let c = s.sample(50, 8).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn dyson_sampler_matches_gamma_moments() {
        // Mean of lambda = a^2 is 1 for every order.
        for order in [1u32, 3] {
            let s = spec(ProcessKind::DysonGamma { order });
            let w = s.sample(200_000, 0).unwrap();
            let mean_lam: f64 =
                w.values().iter().map(|a| a * a).sum::<f64>() / w.len() as f64;
            let sd = (1.0 / order as f64 / w.len() as f64).sqrt();
            assert!(
                (mean_lam - 1.0).abs() < 5.0 * sd,
                "order {order}: mean {mean_lam}"
            );
        }
    }
}
