//! Eigenvalue counting as a dynamical system on the boundary circle.
//!
//! Conjugating the spectral-parameter transfer step by the zero-parameter
//! flow turns the eigenvalue recursion into a product of parabolic shears
//! acting on `R u {inf}`. Lifting the trajectory to the surface `A` (a chain
//! of lines glued alternately at 0 and inf) makes the eigenvalue count a
//! component index: every pass of 0 or inf advances one component, and the
//! number of eigenvalues in `(0, lambda)` is `ceil(J/2)` where `J` is the
//! number of passes.
//!
//! Each pair of weights contributes two shears:
//!   even step: `v -> v / (1 - lambda e^{S_k} v)`   (can pass inf),
//!   odd step:  `v -> v + lambda e^{-S_k} / a_{2k+1}^2` (can pass 0),
//! executed separately so that a step passes at most one of {0, inf} and
//! component advancement is never ambiguous.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::signedlog::SignedLog;
use crate::weights::WeightSequence;

/// A point of the glued-line surface: `component >= 1` indexes the line,
/// `value` is the circle coordinate. Odd components carry `v <= 0` (the
/// trajectory enters them at inf and drifts toward 0), even components carry
/// `v >= 0` (entered at 0, drifting toward inf).
#[derive(Clone, Copy, Debug)]
pub struct SurfacePoint {
    component: u32,
    value: SignedLog,
}

impl SurfacePoint {
    /// The canonical start: `v_0 = inf` on the first component.
    pub fn start() -> Self {
        SurfacePoint {
            component: 1,
            value: SignedLog::infinity(-1),
        }
    }

    pub fn new(component: u32, value: SignedLog) -> Self {
        let p = SurfacePoint { component, value };
        debug_assert!(p.parity_consistent());
        p
    }

    pub fn component(&self) -> u32 {
        self.component
    }

    pub fn value(&self) -> SignedLog {
        self.value
    }

    /// Passes of 0 or inf since the start.
    pub fn jumps(&self) -> u32 {
        self.component - 1
    }

    fn parity_consistent(&self) -> bool {
        if self.component % 2 == 1 {
            self.value.sign() <= 0 // odd lines hold v in [-inf, 0)
        } else {
            self.value.sign() >= 0 && !self.value.is_infinite()
        }
    }

    /// The surface's total order: by component, then by circle coordinate.
    /// Within a component the circle coordinate itself is monotone along the
    /// direction of travel, for both parities.
    pub fn cmp_surface(&self, other: &SurfacePoint) -> Ordering {
        self.component
            .cmp(&other.component)
            .then_with(|| self.value.cmp_value(&other.value))
    }
}

/// State of the counting process between weight pairs.
#[derive(Clone, Debug)]
pub struct TransferState {
    point: SurfacePoint,
    pair_index: usize,
    s_k: f64,
    parity_sign: i8,
    log_lambda: f64,
    lambda_is_zero: bool,
}

/// What a single pair step did.
#[derive(Clone, Copy, Debug, Default)]
pub struct PairOutcome {
    pub passes: u32,
}

impl TransferState {
    /// `lambda >= 0`; `lambda = 0` freezes the process (both shears become
    /// the identity).
    pub fn new(lambda: SignedLog) -> Result<Self> {
        if lambda.sign() < 0 {
            return Err(Error::Config("spectral parameter must be >= 0".into()));
        }
        Ok(TransferState {
            point: SurfacePoint::start(),
            pair_index: 0,
            s_k: 0.0,
            parity_sign: 1,
            log_lambda: lambda.ln_abs(),
            lambda_is_zero: lambda.is_zero(),
        })
    }

    pub fn point(&self) -> SurfacePoint {
        self.point
    }

    pub fn pair_index(&self) -> usize {
        self.pair_index
    }

    pub fn running_sum(&self) -> f64 {
        self.s_k
    }

    pub fn parity_sign(&self) -> i8 {
        self.parity_sign
    }

    /// Override the current point (paired-trajectory experiments).
    pub fn set_point(&mut self, p: SurfacePoint) {
        self.point = p;
    }

    /// Apply the two shears of one weight pair, then advance the walk.
    /// `a_even` is 1.0 on the final half-pair of an odd-length sequence
    /// (the boundary convention of the eigenvalue recursion).
    pub fn step_pair(&mut self, a_odd: f64, a_even: f64) -> Result<PairOutcome> {
        assert!(a_odd != 0.0 && a_even != 0.0, "weights must be nonzero");
        let mut outcome = PairOutcome::default();
        if !self.lambda_is_zero {
            // Even step: lower shear with coefficient c = -lambda e^{S_k}.
            let c = SignedLog::from_sign_ln(-1, self.log_lambda + self.s_k);
            outcome.passes += self.apply_lower_shear(c)?;
            // Odd step: translation by b = lambda e^{-S_k} / a_odd^2.
            let b = SignedLog::from_sign_ln(
                1,
                self.log_lambda - self.s_k - 2.0 * a_odd.abs().ln(),
            );
            outcome.passes += self.apply_translation(b)?;
        }
        self.s_k += 2.0 * (a_odd.abs().ln() - a_even.abs().ln());
        self.parity_sign *= (a_odd * a_even).signum() as i8;
        self.pair_index += 1;
        Ok(outcome)
    }

    /// `v -> v / (1 + c v)` with `c < 0`. In the reciprocal coordinate
    /// `w = 1/v` this is the translation `w -> w + c`; it passes inf exactly
    /// when `w` crosses (or lands on) 0 from above.
    fn apply_lower_shear(&mut self, c: SignedLog) -> Result<u32> {
        let v = self.point.value;
        if v.is_zero() {
            return Ok(0); // fixed point of the shear
        }
        if v.is_infinite() {
            // On the inf point: moves off into the current (odd) component.
            self.point.value = c.recip();
            return Ok(0);
        }
        let w = v.recip();
        let w_new = w
            .try_add(&c)
            .map_err(|_| Error::SpectralCollision {
                index: self.pair_index,
            })?;
        if w.sign() > 0 && w_new.sign() <= 0 {
            self.point.component += 1;
            self.point.value = if w_new.is_zero() {
                SignedLog::infinity(-1)
            } else {
                w_new.recip()
            };
        } else {
            self.point.value = w_new.recip();
        }
        debug_assert!(self.point.parity_consistent());
        Ok(u32::from(w.sign() > 0 && w_new.sign() <= 0))
    }

    /// `v -> v + b` with `b > 0`; passes 0 exactly when `v` crosses (or
    /// lands on) 0 from below. Fixes inf.
    fn apply_translation(&mut self, b: SignedLog) -> Result<u32> {
        let v = self.point.value;
        if v.is_infinite() {
            return Ok(0);
        }
        let v_new = v
            .try_add(&b)
            .map_err(|_| Error::SpectralCollision {
                index: self.pair_index,
            })?;
        let passed = v.sign() < 0 && v_new.sign() >= 0;
        if passed {
            self.point.component += 1;
        }
        self.point.value = v_new;
        debug_assert!(self.point.parity_consistent());
        Ok(u32::from(passed))
    }
}

fn run_weights(state: &mut TransferState, w: &WeightSequence) -> Result<()> {
    let values = w.values();
    let n = values.len();
    let pairs = n.div_ceil(2);
    for k in 0..pairs {
        let a_odd = values[2 * k];
        let a_even = if 2 * k + 1 < n { values[2 * k + 1] } else { 1.0 };
        state.step_pair(a_odd, a_even)?;
    }
    Ok(())
}

/// Total passes of 0 or inf over the full run; `ceil(J/2)` equals the
/// eigenvalue count of the operator in `(0, lambda)`. Requires odd `n`.
pub fn jump_count(w: &WeightSequence, lambda: SignedLog) -> Result<u32> {
    if w.len() % 2 == 0 {
        return Err(Error::UnsupportedParity { n: w.len() });
    }
    if lambda.sign() <= 0 {
        return Err(Error::Config("jump count needs lambda > 0".into()));
    }
    let mut state = TransferState::new(lambda)?;
    run_weights(&mut state, w)?;
    Ok(state.point.jumps())
}

/// `ceil(J/2)`, the transfer-side eigenvalue count.
pub fn eigencount_via_jumps(w: &WeightSequence, lambda: SignedLog) -> Result<u32> {
    Ok(jump_count(w, lambda)?.div_ceil(2))
}

/// One trajectory row: pair index, rescaled log coordinate
/// `Y_k = log v_k / |log lambda|`, component, and running walk sum.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct TrajectoryRow {
    pub k: usize,
    pub y: f64,
    pub component: u32,
    pub s_k: f64,
}

/// The rescaled trajectory, for diagnostics and sandwich comparisons.
/// Requires `lambda` strictly inside `(0, 1)` so the rescaling is defined.
pub fn scaled_trajectory(w: &WeightSequence, lambda: SignedLog) -> Result<Vec<TrajectoryRow>> {
    if lambda.sign() <= 0 || lambda.ln_abs() >= 0.0 {
        return Err(Error::Config(
            "scaled trajectory needs lambda in (0, 1)".into(),
        ));
    }
    let abs_log_lambda = -lambda.ln_abs();
    let mut state = TransferState::new(lambda)?;
    let values = w.values();
    let n = values.len();
    let pairs = n.div_ceil(2);
    let mut rows = Vec::with_capacity(pairs + 1);
    rows.push(TrajectoryRow {
        k: 0,
        y: f64::INFINITY,
        component: 1,
        s_k: 0.0,
    });
    for k in 0..pairs {
        let a_odd = values[2 * k];
        let a_even = if 2 * k + 1 < n { values[2 * k + 1] } else { 1.0 };
        state.step_pair(a_odd, a_even)?;
        rows.push(TrajectoryRow {
            k: k + 1,
            y: state.point.value.ln_abs() / abs_log_lambda,
            component: state.point.component,
            s_k: state.running_sum(),
        });
    }
    Ok(rows)
}
