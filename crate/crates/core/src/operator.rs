//! Finite zero-diagonal tridiagonal operators and exact eigenvalue counting.
//!
//! The operator on `{1, ..., n+1}` has off-diagonal entries `a_1..a_n` and
//! zero diagonal. Counting is done by Sturm inertia of `xI - H` in signed-log
//! arithmetic, so probe points as small as `exp(-sqrt(n))` are exact for any
//! reachable `n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::signedlog::SignedLog;
use crate::weights::WeightSequence;

/// Multiplicative nudge (in log domain) applied to a probe that lands on a
/// pivot breakdown. A few times the cancellation tolerance, so one nudge
/// clears the ambiguous window.
const PIVOT_NUDGE: f64 = 4e-12;
const MAX_NUDGES: u32 = 3;

/// Largest dimension the bisection oracle will accept.
pub const ORACLE_MAX_N: usize = 256;

#[derive(Clone, Debug)]
pub struct FiniteOperator {
    weights: Vec<f64>,
    log_abs2: Vec<f64>, // 2 log|a_i|; -inf encodes a cut (zero) edge
}

/// Outcome of an inertia count, with nudge bookkeeping.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Negcount {
    /// Number of eigenvalues strictly below the probe.
    pub below: usize,
    pub nudges: u32,
    /// Total log-domain shift applied to the probe by nudging.
    pub log_shift: f64,
}

/// `M+ = #eigenvalues in (0, lambda)` for odd `n`, plus the symmetric window
/// count `2 M+` in `(-lambda, lambda)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WindowCount {
    pub m_plus: usize,
    pub window: usize,
    pub nudges: u32,
}

impl FiniteOperator {
    pub fn new(w: &WeightSequence) -> Self {
        FiniteOperator {
            weights: w.values().to_vec(),
            log_abs2: w.log_abs().iter().map(|l| 2.0 * l).collect(),
        }
    }

    /// Construction from raw off-diagonals. Zeros are allowed here (the
    /// operator then splits into blocks); sampled weight sequences never
    /// contain them, only [`cut_edge`](Self::cut_edge) introduces one.
    pub fn from_raw(weights: Vec<f64>) -> Self {
        let log_abs2 = weights
            .iter()
            .map(|a| {
                if *a == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    2.0 * a.abs().ln()
                }
            })
            .collect();
        FiniteOperator { weights, log_abs2 }
    }

    /// Number of edge weights `n`; the matrix dimension is `n + 1`.
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.len() + 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sets `a_k = 0` (1-based), splitting the operator into two blocks.
    /// The result violates the nonzero-weight invariant by design and exists
    /// for rank-one comparison arguments.
    pub fn cut_edge(&self, k: usize) -> FiniteOperator {
        assert!(k >= 1 && k <= self.n(), "cut index out of range");
        let mut weights = self.weights.clone();
        weights[k - 1] = 0.0;
        FiniteOperator::from_raw(weights)
    }

    /// Eigenvalues of `H` strictly below `x`, by counting positive pivots of
    /// the `LDL^T` factorization of `xI - H`:
    /// `d_1 = x`, `d_k = x - a_{k-1}^2 / d_{k-1}`.
    ///
    /// A pivot that lands on zero or inside the cancellation window nudges
    /// the probe (`x -> x * (1 + 4e-12)`) and restarts; persistent breakdown
    /// is a spectral collision.
    pub fn negcount(&self, x: SignedLog) -> Result<Negcount> {
        let mut probe = x;
        let mut log_shift = 0.0;
        for nudges in 0..=MAX_NUDGES {
            match self.negcount_once(probe) {
                Ok(below) => {
                    return Ok(Negcount {
                        below,
                        nudges,
                        log_shift,
                    })
                }
                Err(index) => {
                    if nudges == MAX_NUDGES {
                        return Err(Error::SpectralCollision { index });
                    }
                    probe = nudged(probe);
                    log_shift += PIVOT_NUDGE;
                }
            }
        }
        unreachable!()
    }

    /// One pass of the pivot recursion; `Err(k)` reports a breakdown at
    /// pivot index `k`.
    fn negcount_once(&self, x: SignedLog) -> std::result::Result<usize, usize> {
        if x.is_zero() {
            return Err(0);
        }
        let mut positive = 0usize;
        let mut d = x;
        if d.sign() > 0 {
            positive += 1;
        }
        for (k, &la2) in self.log_abs2.iter().enumerate() {
            let a2 = SignedLog::from_sign_ln(if la2 == f64::NEG_INFINITY { 0 } else { 1 }, la2);
            let next = match x.try_add(&a2.div(&d).neg()) {
                Ok(v) if !v.is_zero() => v,
                _ => return Err(k + 1),
            };
            d = next;
            if d.sign() > 0 {
                positive += 1;
            }
        }
        Ok(positive)
    }

    /// Window count around zero for odd `n`: the spectrum is symmetric and
    /// zero is not an eigenvalue, so `#(-lambda, lambda) = 2 #(0, lambda)`.
    pub fn count_in_window(&self, lambda: SignedLog) -> Result<WindowCount> {
        let n = self.n();
        if n % 2 == 0 {
            return Err(Error::UnsupportedParity { n });
        }
        assert!(lambda.sign() > 0, "window bound must be positive");
        let nc = self.negcount(lambda)?;
        let negatives = (n + 1) / 2;
        debug_assert!(nc.below >= negatives, "bipartite symmetry violated");
        let m_plus = nc.below - negatives;
        Ok(WindowCount {
            m_plus,
            window: 2 * m_plus,
            nudges: nc.nudges,
        })
    }

    /// All `n+1` eigenvalues by bisection on the inertia count, ascending,
    /// to about 1e-12 absolute accuracy. Bounded at [`ORACLE_MAX_N`]: this
    /// is a desk-scale oracle, not a solver.
    pub fn eigenvalues_oracle(&self) -> Result<Vec<f64>> {
        if self.n() > ORACLE_MAX_N {
            return Err(Error::Config(format!(
                "eigenvalue oracle capped at n = {ORACLE_MAX_N}, got {}",
                self.n()
            )));
        }
        let radius = 2.0
            * self
                .weights
                .iter()
                .fold(0.0f64, |m, a| m.max(a.abs()))
            + 1.0;
        let dim = self.dim();
        let mut eigs = Vec::with_capacity(dim);
        for j in 0..dim {
            let mut lo = -radius;
            let mut hi = radius;
            for _ in 0..100 {
                if hi - lo < 1e-13 {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if self.probe_count(mid)? <= j {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            eigs.push(0.5 * (lo + hi));
        }
        Ok(eigs)
    }

    /// Bisection probe tolerant of collisions: shifts the probe off the
    /// breakdown point rather than failing the whole sweep.
    fn probe_count(&self, x: f64) -> Result<usize> {
        let mut probe = SignedLog::from_f64(x);
        for _ in 0..3 {
            match self.negcount(probe) {
                Ok(nc) => return Ok(nc.below),
                Err(_) => probe = nudged(nudged(nudged(probe))),
            }
        }
        Err(Error::SpectralCollision { index: 0 })
    }
}

fn nudged(x: SignedLog) -> SignedLog {
    if x.is_zero() {
        // Probe exactly at zero: step to a tiny positive value.
        SignedLog::from_sign_ln(1, -707.0)
    } else {
        SignedLog::from_sign_ln(x.sign(), x.ln_abs() + PIVOT_NUDGE)
    }
}

/// Kolmogorov distance between two empirical measures given as sorted lists
/// of equal length (equal atom mass). The sup runs over the merged
/// breakpoint set; breakpoints closer than 1e-9 are treated as one point,
/// since the eigenvalue oracle itself only resolves 1e-12 and localized
/// spectra contain pairs split far below that.
pub fn kolmogorov_distance(e1: &[f64], e2: &[f64]) -> Result<f64> {
    if e1.len() != e2.len() {
        return Err(Error::LengthMismatch {
            left: e1.len(),
            right: e2.len(),
        });
    }
    let n = e1.len();
    if n == 0 {
        return Ok(0.0);
    }
    debug_assert!(e1.windows(2).all(|w| w[0] <= w[1]), "input must be sorted");
    debug_assert!(e2.windows(2).all(|w| w[0] <= w[1]), "input must be sorted");
    const MERGE_EPS: f64 = 1e-9;
    let (mut i, mut j) = (0usize, 0usize);
    let mut worst = 0usize;
    while i < n || j < n {
        let next = match (e1.get(i), e2.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => break,
        };
        let cluster_end = next + MERGE_EPS;
        while i < n && e1[i] <= cluster_end {
            i += 1;
        }
        while j < n && e2[j] <= cluster_end {
            j += 1;
        }
        worst = worst.max(i.abs_diff(j));
    }
    Ok(worst as f64 / n as f64)
}
