//! Crossing and well calculus on walks, and the finite-size eigenvalue
//! sandwich that compares crossing counts with exact spectral counts.
//!
//! A walk makes an `alpha`-downcrossing when its running maximum since the
//! previous crossing exceeds the current value by at least `alpha`, and an
//! `alpha`-upcrossing when the running minimum since the previous crossing
//! sits at least `alpha` below the current value. The first crossing is
//! always a downcrossing. The maximal number of disjoint `s`-wells equals
//! the number of `s`-downcrossings; both scanners are implemented
//! independently and the equality is asserted.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::FiniteOperator;
use crate::signedlog::SignedLog;
use crate::transfer;
use crate::weights::{log_ratio_walk, WeightSequence};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Crossing {
    Down,
    Up,
}

/// Streaming crossing detector; feed walk values left to right.
#[derive(Clone, Debug)]
pub struct CrossingScanner {
    alpha: f64,
    seeking_down: bool,
    extreme: f64,
    started: bool,
}

impl CrossingScanner {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha > 0.0, "crossing size must be positive");
        CrossingScanner {
            alpha,
            seeking_down: true,
            extreme: 0.0,
            started: false,
        }
    }

    /// Push the next walk value; reports a crossing completed at this index.
    pub fn push(&mut self, x: f64) -> Option<Crossing> {
        if !self.started {
            self.started = true;
            self.extreme = x;
            return None;
        }
        if self.seeking_down {
            if x > self.extreme {
                self.extreme = x;
            }
            if self.extreme - x >= self.alpha {
                self.seeking_down = false;
                self.extreme = x;
                return Some(Crossing::Down);
            }
        } else {
            if x < self.extreme {
                self.extreme = x;
            }
            if x - self.extreme >= self.alpha {
                self.seeking_down = true;
                self.extreme = x;
                return Some(Crossing::Up);
            }
        }
        None
    }
}

/// Crossing times (indices into the walk) at one threshold.
#[derive(Clone, Debug, Serialize)]
pub struct CrossingReport {
    pub alpha: f64,
    pub down_times: Vec<usize>,
    pub up_times: Vec<usize>,
}

impl CrossingReport {
    pub fn down(&self) -> usize {
        self.down_times.len()
    }

    pub fn up(&self) -> usize {
        self.up_times.len()
    }

    pub fn total(&self) -> usize {
        self.down() + self.up()
    }
}

/// Scan a full walk (values `X(0), X(1), ...`).
pub fn crossings(xs: &[f64], alpha: f64) -> CrossingReport {
    let mut scanner = CrossingScanner::new(alpha);
    let mut down_times = Vec::new();
    let mut up_times = Vec::new();
    for (k, &x) in xs.iter().enumerate() {
        match scanner.push(x) {
            Some(Crossing::Down) => down_times.push(k),
            Some(Crossing::Up) => up_times.push(k),
            None => {}
        }
    }
    CrossingReport {
        alpha,
        down_times,
        up_times,
    }
}

/// An `s`-well: the walk enters at height `X(a)`, stays strictly below it,
/// dips at least `s`, and exits where it climbs back to the entry height
/// (linearly interpolated) or at the end of the data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Well {
    pub start: f64,
    pub end: f64,
}

/// Maximal disjoint `s`-wells, left to right.
///
/// Each well is anchored at the lowest level that closes earliest: the
/// running minimum of the dip plus `s`. Anchoring at the running maximum
/// instead can fuse consecutive dips into one interval that never closes
/// and miss the maximal packing. The entry point is the last downward
/// passage of the anchor level before the dip's minimum, the exit is the
/// first upward passage after it (both linearly interpolated), or the end
/// of the data for a dip still open there.
pub fn wells(xs: &[f64], s: f64) -> Vec<Well> {
    assert!(s > 0.0, "well depth must be positive");
    let mut found: Vec<Well> = Vec::new();
    if xs.is_empty() {
        return found;
    }
    enum Phase {
        Down { max: f64 },
        Up { min: f64, min_idx: usize },
    }
    let mut phase = Phase::Down { max: xs[0] };
    for (k, &x) in xs.iter().enumerate().skip(1) {
        match phase {
            Phase::Down { ref mut max } => {
                if x > *max {
                    *max = x;
                }
                if *max - x >= s {
                    phase = Phase::Up { min: x, min_idx: k };
                }
            }
            Phase::Up {
                ref mut min,
                ref mut min_idx,
            } => {
                if x < *min {
                    *min = x;
                    *min_idx = k;
                } else if x - *min >= s {
                    let level = *min + s;
                    let start = backward_passage(xs, *min_idx, level);
                    let prev = xs[k - 1];
                    let end = if x == level {
                        k as f64
                    } else {
                        (k - 1) as f64 + (level - prev) / (x - prev)
                    };
                    debug_assert!(found.last().map_or(true, |w| w.end <= start + 1e-9));
                    found.push(Well { start, end });
                    phase = Phase::Down { max: x };
                }
            }
        }
    }
    if let Phase::Up { min, min_idx } = phase {
        let level = min + s;
        let start = backward_passage(xs, min_idx, level);
        found.push(Well {
            start,
            end: (xs.len() - 1) as f64,
        });
    }
    let down = crossings(xs, s).down();
    assert_eq!(
        found.len(),
        down,
        "well count diverged from downcrossing count"
    );
    found
}

/// Interpolated time of the last downward passage of `level` before the
/// index `upto` (exclusive). The caller guarantees one exists.
fn backward_passage(xs: &[f64], upto: usize, level: f64) -> f64 {
    for j in (0..upto).rev() {
        if xs[j] >= level {
            return if xs[j] == level {
                j as f64
            } else {
                j as f64 + (xs[j] - level) / (xs[j] - xs[j + 1])
            };
        }
    }
    unreachable!("no passage of the anchor level before the dip");
}

/// Which big-weight threshold a bound uses. The one-sided finite bound is
/// stated with `delta/8`, the two jump bounds with `delta/16`; both are kept
/// and the choice is recorded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BigWeightThreshold {
    EighthDelta,
    SixteenthDelta,
}

impl BigWeightThreshold {
    fn factor(self) -> f64 {
        match self {
            BigWeightThreshold::EighthDelta => 1.0 / 8.0,
            BigWeightThreshold::SixteenthDelta => 1.0 / 16.0,
        }
    }
}

/// `#{k : |log|a_k|| > (delta * factor) |log lambda|}`.
pub fn big_weight_count(
    w: &WeightSequence,
    delta: f64,
    lambda: SignedLog,
    threshold: BigWeightThreshold,
) -> usize {
    assert!(delta > 0.0 && delta < 1.0);
    assert!(lambda.sign() > 0 && lambda.ln_abs() < 0.0, "lambda in (0,1)");
    let cut = delta * threshold.factor() * (-lambda.ln_abs());
    w.log_abs().iter().filter(|l| l.abs() > cut).count()
}

/// Both levels of the finite-size sandwich for one weight realization.
///
/// M-level (eigenvalue count `M = #(0, lambda)` against downcrossings of the
/// half-walk at `(1 +- delta)|log lambda|`, big weights at `delta/8`):
/// requires `lambda < (delta/16n)^(2/delta)`.
///
/// J-level (transfer jumps against crossings of the walk at
/// `(2 +- delta)|log lambda|`, big weights at `delta/16`): the upper bound
/// requires `lambda < (delta/32n)^(4/delta)`, the lower one
/// `lambda < 3^(-2/delta)`.
#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub delta: f64,
    pub log_lambda: f64,
    pub n: usize,
    pub m: usize,
    pub d_deep: usize,
    pub d_shallow: usize,
    pub b_eighth: usize,
    pub j: usize,
    pub c_deep: usize,
    pub c_shallow: usize,
    pub b_sixteenth: usize,
    pub m_premise_ok: bool,
    pub j_upper_premise_ok: bool,
    pub j_lower_premise_ok: bool,
    pub m_holds: bool,
    pub j_upper_holds: bool,
    pub j_lower_holds: bool,
    /// The M-level inequality together with every J-level inequality whose
    /// premise is satisfied.
    pub holds: bool,
}

pub fn check_sandwich(w: &WeightSequence, lambda: SignedLog, delta: f64) -> Result<SandwichReport> {
    let n = w.len();
    if n % 2 == 0 {
        return Err(Error::UnsupportedParity { n });
    }
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(Error::Config(format!("delta = {delta} outside (0, 1)")));
    }
    if lambda.sign() <= 0 || lambda.ln_abs() >= 0.0 {
        return Err(Error::Config("sandwich needs lambda in (0, 1)".into()));
    }
    let log_lambda = lambda.ln_abs();
    let abs_log = -log_lambda;

    let h = FiniteOperator::new(w);
    let m = h.count_in_window(lambda)?.m_plus;
    let j = transfer::jump_count(w, lambda)? as usize;

    let walk = log_ratio_walk(w);
    let s = walk.partial_sums();
    // Thresholds on S (increments 2 log|ratio|): (1 +- delta)|log lambda| on
    // the half-walk is (2 +- 2 delta)|log lambda| on S.
    let d_deep = crossings(s, (2.0 + 2.0 * delta) * abs_log).down();
    let d_shallow = crossings(s, (2.0 - 2.0 * delta) * abs_log).down();
    let c_deep = crossings(s, (2.0 + delta) * abs_log).total();
    let c_shallow = crossings(s, (2.0 - delta) * abs_log).total();
    let b_eighth = big_weight_count(w, delta, lambda, BigWeightThreshold::EighthDelta);
    let b_sixteenth = big_weight_count(w, delta, lambda, BigWeightThreshold::SixteenthDelta);

    let m_premise_ok = log_lambda < (2.0 / delta) * (delta / (16.0 * n as f64)).ln();
    let j_upper_premise_ok = log_lambda < (4.0 / delta) * (delta / (32.0 * n as f64)).ln();
    let j_lower_premise_ok = log_lambda < -(2.0 / delta) * 3.0f64.ln();

    let m_holds = d_deep as i64 - 2 * b_eighth as i64 <= m as i64
        && m <= d_shallow + 2 * b_eighth;
    let j_upper_holds = j <= 2 * b_sixteenth + c_shallow;
    let j_lower_holds = c_deep as i64 - 2 * b_sixteenth as i64 <= j as i64;

    let holds = m_holds
        && (!j_upper_premise_ok || j_upper_holds)
        && (!j_lower_premise_ok || j_lower_holds);

    Ok(SandwichReport {
        delta,
        log_lambda,
        n,
        m,
        d_deep,
        d_shallow,
        b_eighth,
        j,
        c_deep,
        c_shallow,
        b_sixteenth,
        m_premise_ok,
        j_upper_premise_ok,
        j_lower_premise_ok,
        m_holds,
        j_upper_holds,
        j_lower_holds,
        holds,
    })
}
