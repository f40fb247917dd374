//! Run configuration: a single serializable document that fully determines a
//! run. The manifest written next to the results embeds this document, so
//! any run can be replayed from its manifest alone.

use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use hoplab_core::groups::ToralSystem;
use hoplab_core::weights::{ProcessKind, WeightProcessSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpecConfig {
    TwoPoint { p: f64 },
    DysonGamma { order: u32 },
    Lognormal { sigma_log: f64 },
    Empirical { path: String },
    SolToral {
        #[serde(default)]
        matrix: Option<[[i64; 2]; 2]>,
        #[serde(default)]
        shift: Option<f64>,
    },
    Constant { value: f64 },
    /// Lamplighter switch-walk on Z_2 lamps: two-point weights {1, 2p-1}.
    Lamplighter { p: f64 },
}

impl SpecConfig {
    pub fn build(&self, seed: u64) -> anyhow::Result<WeightProcessSpec> {
        let spec = match self {
            SpecConfig::TwoPoint { p } => {
                WeightProcessSpec::new(ProcessKind::TwoPoint { p: *p }, seed)
            }
            SpecConfig::DysonGamma { order } => {
                WeightProcessSpec::new(ProcessKind::DysonGamma { order: *order }, seed)
            }
            SpecConfig::Lognormal { sigma_log } => WeightProcessSpec::new(
                ProcessKind::LogNormal {
                    sigma_log: *sigma_log,
                },
                seed,
            ),
            SpecConfig::Empirical { path } => WeightProcessSpec::empirical_from_path(path, seed),
            SpecConfig::SolToral { matrix, shift } => {
                let mut system = ToralSystem::default();
                if let Some(m) = matrix {
                    system.matrix = *m;
                }
                if let Some(c) = shift {
                    system.shift = *c;
                }
                WeightProcessSpec::new(ProcessKind::Toral { system }, seed)
            }
            SpecConfig::Constant { value } => {
                WeightProcessSpec::new(ProcessKind::Constant { value: *value }, seed)
            }
            SpecConfig::Lamplighter { p } => hoplab_core::groups::lamplighter_process(
                hoplab_core::groups::LamplighterSpec::TwoPoint { p: *p },
                seed,
            ),
        };
        spec.map_err(|e| anyhow!("invalid spec: {e}"))
    }

    /// Reuse the empirical-file loader as a generic weight-list reader.
    pub fn load_weight_file(path: &str) -> anyhow::Result<Vec<f64>> {
        let spec = WeightProcessSpec::empirical_from_path(path, 0)?;
        match spec.kind {
            ProcessKind::Empirical { values, .. } => {
                Ok(Arc::try_unwrap(values).unwrap_or_else(|a| (*a).clone()))
            }
            _ => unreachable!(),
        }
    }
}

impl FromStr for SpecConfig {
    type Err = anyhow::Error;

    /// `kind[:arg]`, e.g. `dyson-gamma:1`, `two-point:0.9`, `sol-toral`.
    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let need = |what: &str| anyhow!("spec {kind:?} needs an argument ({what})");
        let parse_f64 = |a: Option<&str>, what: &str| -> anyhow::Result<f64> {
            a.ok_or_else(|| need(what))?
                .parse()
                .with_context(|| format!("parsing {what} for spec {kind:?}"))
        };
        Ok(match kind {
            "two-point" => SpecConfig::TwoPoint {
                p: parse_f64(arg, "p")?,
            },
            "dyson-gamma" => SpecConfig::DysonGamma {
                order: arg
                    .ok_or_else(|| need("order"))?
                    .parse()
                    .context("parsing dyson-gamma order")?,
            },
            "lognormal" => SpecConfig::Lognormal {
                sigma_log: parse_f64(arg, "sigma")?,
            },
            "empirical" => SpecConfig::Empirical {
                path: arg.ok_or_else(|| need("path"))?.to_string(),
            },
            "sol-toral" => SpecConfig::SolToral {
                matrix: None,
                shift: arg.map(|a| a.parse()).transpose().context("parsing shift")?,
            },
            "constant" => SpecConfig::Constant {
                value: parse_f64(arg, "value")?,
            },
            "lamplighter" => SpecConfig::Lamplighter {
                p: parse_f64(arg, "p")?,
            },
            other => bail!("unknown spec kind {other:?}"),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CommandConfig {
    /// Window count at the coupled scale `eps = exp(-sqrt(n)/K)`.
    Spike {
        k_scale: f64,
        n_target: u64,
        trials: u64,
    },
    /// Local eigenvalue statistics against the Brownian well-count oracle.
    Local {
        n: u64,
        t_grid: Vec<f64>,
        eta_grid: Vec<f64>,
        trials: u64,
        oracle_paths: u64,
    },
    /// Law of the smallest positive eigenvalue.
    Smallest { n: u64, trials: u64 },
    /// Small-scale exponent over a geometric window grid.
    Ns {
        k_scale: f64,
        eps_grid: Vec<f64>,
        trials: u64,
    },
    /// Crossing/well sandwich verification against exact counts.
    BoundsCheck {
        n: u64,
        delta: f64,
        /// Window bound; defaults to `exp(-sqrt(n))`.
        lambda: Option<f64>,
        /// All two-point value patterns (two-point specs only) instead of
        /// sampled trials.
        exhaustive: bool,
        trials: u64,
        /// Dump the rescaled transfer trajectory of the first instance.
        dump_trajectory: bool,
    },
    /// Brownian renewal-rate table.
    BmRenewal {
        sigma2: Vec<f64>,
        k_scale: f64,
        trials: u64,
    },
    /// CDF table (and optional empirical law) of `sup |B|` on [0, 1].
    BmSup {
        xs: Vec<f64>,
        sigma2: f64,
        trials: u64,
        mesh: f64,
    },
    /// Well-count tail table against the fitted Gaussian envelope.
    BmTail {
        eta: f64,
        t: f64,
        sigma2: f64,
        m_max: u32,
        trials: u64,
    },
    DiagMoment { n_grid: Vec<u64>, trials: u64 },
    DiagCorrelation { max_lag: usize, trials: u64 },
    DiagBigWeight { n_grid: Vec<u64>, trials: u64 },
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CommandConfig::Spike { .. } => "spike",
            CommandConfig::Local { .. } => "local",
            CommandConfig::Smallest { .. } => "smallest",
            CommandConfig::Ns { .. } => "ns",
            CommandConfig::BoundsCheck { .. } => "bounds-check",
            CommandConfig::BmRenewal { .. } => "bm-renewal",
            CommandConfig::BmSup { .. } => "bm-sup",
            CommandConfig::BmTail { .. } => "bm-tail",
            CommandConfig::DiagMoment { .. } => "diag-moment",
            CommandConfig::DiagCorrelation { .. } => "diag-correlation",
            CommandConfig::DiagBigWeight { .. } => "diag-big-weight",
        }
    }

    pub fn needs_spec(&self) -> bool {
        !matches!(
            self,
            CommandConfig::BmRenewal { .. }
                | CommandConfig::BmSup { .. }
                | CommandConfig::BmTail { .. }
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandConfig,
    #[serde(default)]
    pub spec: Option<SpecConfig>,
    pub seed: u64,
    /// 0 means the library default.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub cross_check: bool,
}

impl RunConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.command.needs_spec() && self.spec.is_none() {
            bail!("command {:?} requires a spec", self.command.name());
        }
        if let Some(spec) = &self.spec {
            spec.build(self.seed)?;
        }
        match &self.command {
            CommandConfig::Spike {
                k_scale,
                n_target,
                trials,
            } => {
                if *k_scale < 2.0 {
                    bail!("spike needs K >= 2");
                }
                if *n_target < 3 || *trials == 0 {
                    bail!("spike needs n >= 3 and trials >= 1");
                }
            }
            CommandConfig::Ns { eps_grid, .. } => {
                if eps_grid.len() < 5 {
                    bail!("ns needs at least 5 grid points");
                }
            }
            CommandConfig::BoundsCheck {
                n,
                delta,
                exhaustive,
                trials,
                ..
            } => {
                if n % 2 == 0 {
                    bail!("bounds-check needs odd n");
                }
                if !(*delta > 0.0 && *delta < 1.0) {
                    bail!("bounds-check needs delta in (0, 1)");
                }
                if !exhaustive && *trials == 0 {
                    bail!("bounds-check needs trials >= 1 unless exhaustive");
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("parsing config TOML")?;
        Ok(cfg)
    }
}

/// Geometric grid helper for `--eps from:to:points`.
pub fn geometric_grid(from: f64, to: f64, points: usize) -> anyhow::Result<Vec<f64>> {
    if !(from > to && to > 0.0 && from < 1.0) {
        bail!("geometric grid needs 1 > from > to > 0");
    }
    if points < 2 {
        bail!("geometric grid needs at least 2 points");
    }
    let ratio = (to / from).powf(1.0 / (points as f64 - 1.0));
    Ok((0..points).map(|i| from * ratio.powi(i as i32)).collect())
}
