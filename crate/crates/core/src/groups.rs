//! Group-ring constructions that feed weight processes: the hyperbolic
//! torus-map weights of a Sol lattice and the lamplighter two-point law.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::{ProcessKind, Provenance, WeightProcessSpec, WeightSequence};

/// Integer torus automorphism `x -> Bx mod 1` with the observable
/// `f(x) = 2 cos(2 pi x1) + 2 cos(2 pi x2) + shift`.
///
/// The default system is `B = [[2,1],[1,1]]` with shift 5, for which the
/// weights land in `[1, 9]` and are bounded away from zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToralSystem {
    pub matrix: [[i64; 2]; 2],
    pub shift: f64,
}

impl Default for ToralSystem {
    fn default() -> Self {
        ToralSystem {
            matrix: [[2, 1], [1, 1]],
            shift: 5.0,
        }
    }
}

impl ToralSystem {
    pub fn validate(&self) -> Result<()> {
        let [[a, b], [c, d]] = self.matrix;
        let det = a * d - b * c;
        if det != 1 && det != -1 {
            return Err(Error::Config(format!("toral matrix must have det +-1, got {det}")));
        }
        if (a + d).abs() <= 2 {
            return Err(Error::Config(format!(
                "toral matrix must be hyperbolic (|trace| > 2), got trace {}",
                a + d
            )));
        }
        if !self.shift.is_finite() {
            return Err(Error::Config("toral shift must be finite".into()));
        }
        Ok(())
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        let [[a, b], [c, d]] = self.matrix;
        let y0 = a as f64 * x[0] + b as f64 * x[1];
        let y1 = c as f64 * x[0] + d as f64 * x[1];
        [y0.rem_euclid(1.0), y1.rem_euclid(1.0)]
    }

    pub fn apply_rational(&self, x: RationalPoint) -> RationalPoint {
        let [[a, b], [c, d]] = self.matrix;
        [
            fract(x[0] * Ratio::from_integer(a) + x[1] * Ratio::from_integer(b)),
            fract(x[0] * Ratio::from_integer(c) + x[1] * Ratio::from_integer(d)),
        ]
    }

    /// `f(x) = 2 cos(2 pi x1) + 2 cos(2 pi x2) + shift`.
    pub fn observable(&self, x: [f64; 2]) -> f64 {
        2.0 * (TAU * x[0]).cos() + 2.0 * (TAU * x[1]).cos() + self.shift
    }
}

pub type RationalPoint = [Ratio<i64>; 2];

fn fract(r: Ratio<i64>) -> Ratio<i64> {
    let f = r - r.floor();
    debug_assert!(f >= Ratio::from_integer(0) && f < Ratio::from_integer(1));
    f
}

/// Weights along the forward orbit: `a_k = f(B^k x0)`, `k = 1..=n`.
/// Double-precision iteration; hyperbolicity amplifies roundoff, which is
/// acceptable for statistical use but not for orbit identities (those go
/// through [`rational_orbit`]).
pub fn toral_orbit_weights_from(
    sys: &ToralSystem,
    x0: [f64; 2],
    n: usize,
    provenance: Provenance,
) -> Result<WeightSequence> {
    sys.validate()?;
    let mut x = x0;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        x = sys.apply(x);
        values.push(sys.observable(x));
    }
    WeightSequence::from_values(values, provenance)
}

/// Convenience entry matching the process interface: `x0` either fixed or
/// Haar-random through the usual seeded stream (via `WeightProcessSpec`).
pub fn toral_orbit_weights(sys: &ToralSystem, x0: [f64; 2], n: usize) -> Result<WeightSequence> {
    toral_orbit_weights_from(
        sys,
        x0,
        n,
        Provenance {
            label: format!("toral-fixed:{x0:?}"),
            seed: 0,
            stream: 0,
        },
    )
}

/// Exact forward orbit of a rational point under `B` until it returns to the
/// start. Errors if no return happens within `cap` steps.
pub fn rational_orbit(
    sys: &ToralSystem,
    x0: RationalPoint,
    cap: usize,
) -> Result<Vec<RationalPoint>> {
    sys.validate()?;
    let x0 = [fract(x0[0]), fract(x0[1])];
    let mut orbit = vec![x0];
    let mut x = x0;
    for _ in 0..cap {
        x = sys.apply_rational(x);
        if x == x0 {
            return Ok(orbit);
        }
        orbit.push(x);
    }
    Err(Error::NonPeriodicPoint { cap })
}

#[derive(Clone, Debug, Serialize)]
pub struct CoboundaryReport {
    /// Sum of `g` over even powers of `B` along one period of `B^2`.
    pub lhs: f64,
    /// Sum of `g` over odd powers.
    pub rhs: f64,
    pub distinct: bool,
    pub orbit_period: usize,
}

/// Periodic-orbit certificate that the log-weight observable is not a
/// coboundary of `B^2`: the alternating orbit sums of
/// `g(y) = log|2 cos(2 pi y1) + 2 cos(2 pi y2) + shift|` must differ.
pub fn coboundary_check(sys: &ToralSystem, x0: RationalPoint) -> Result<CoboundaryReport> {
    let orbit = rational_orbit(sys, x0, 1 << 20)?;
    let period = orbit.len();
    // Period of B^2 on this orbit: half of an even B-period, else the full one.
    let s_period = if period % 2 == 0 { period / 2 } else { period };
    let g = |p: &RationalPoint| {
        let x = [ratio_to_f64(p[0]), ratio_to_f64(p[1])];
        sys.observable(x).abs().ln()
    };
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..s_period {
        lhs += g(&orbit[(2 * i) % period]);
        rhs += g(&orbit[(2 * i + 1) % period]);
    }
    Ok(CoboundaryReport {
        lhs,
        rhs,
        distinct: (lhs - rhs).abs() > 1e-9,
        orbit_period: period,
    })
}

fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Lamplighter-type weight processes: either the two-point law of the
/// switch-walk on lamps `Z_2` (weights 1 and `2p-1`), or a user-supplied
/// sampler for the spectral measure of a general lamp walk.
#[derive(Clone)]
pub enum LamplighterSpec {
    TwoPoint { p: f64 },
    General {
        label: String,
        sampler: Arc<dyn Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Send + Sync>,
    },
}

pub fn lamplighter_process(spec: LamplighterSpec, seed: u64) -> Result<WeightProcessSpec> {
    match spec {
        LamplighterSpec::TwoPoint { p } => {
            if p == 0.5 {
                return Err(Error::Config(
                    "p = 1/2 gives edge weights 0 or 1 (edge percolation); zero weights are not allowed"
                        .into(),
                ));
            }
            WeightProcessSpec::new(ProcessKind::TwoPoint { p }, seed)
        }
        LamplighterSpec::General { label, sampler } => {
            WeightProcessSpec::new(ProcessKind::LampSampler { label, sampler }, seed)
        }
    }
}
