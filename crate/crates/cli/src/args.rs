use std::path::{Path, PathBuf};

use acstab_core::grid::{eval_mode, make_grid, AcParams, GridSpec, ModeIndex, ScalarField};
use acstab_core::schemes::SchemeKind;
use acstab_core::solver::{HomotopyConfig, NewtonConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "acstab", version, about = "Stability and robustness laboratory for implicit Allen-Cahn schemes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recompute a reference table or figure data set.
    #[command(after_help = "\
Columns:
  table1, table2, table3  ratio,<entries...>  (with --check: ratio,entry,computed,reference,abs_diff,pass)
  table4                  scheme,formula,dt_max,reference,pass
  fig1-data, fig5-data    ratio,interval,lower,upper,label,simulated_label,pass")]
    Reproduce {
        id: ReproduceId,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a scheme from a prescribed initial field.
    #[command(after_help = "\
Initial field: const:<v> | const+mode:<v>,<delta>,<k>[,<l>]
Columns: step,t,min,max,center,l2,sign,settled,settle_step,limit
The last row has step = final and carries the settle data.")]
    Simulate {
        initial: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Closed-form and constant-state analyses.
    #[command(after_help = "\
Columns:
  thresholds    scheme,formula,dt_max
  bifurcations  scheme,c,dt,k1[,k2],eps_sq,eigenfunction,ambiguous
  intervals     scheme,ratio,entry,value,label
  classify      scheme,ratio,r,limit,settle_step,sign_changes,pattern,region_label
  perturb       scheme,c,r,k1[,k2],gain,b2,b1,b0,pole")]
    Analyze {
        what: AnalyzeWhat,
        #[command(flatten)]
        run: RunArgs,
    },
    /// States that one step maps onto a target.
    #[command(after_help = "\
Target: const:<c> | const+mode:<c>,<delta>,<k>[,<l>]
Constant targets, columns: record,target,value,phi1,phi2,discriminant,discriminant_sign,stage
  (record = root per preimage, cubic per solved cubic)
Field targets, columns: x1[,x2],value; the summary (scheme,c,delta,r,gain,completed,
  last_good_delta,solves,newton_iterations,forward_residual) goes to <out>.summary.csv,
  or to stderr when writing to stdout.")]
    Preimage {
        target: String,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReproduceId {
    Table1,
    Table2,
    Table3,
    Table4,
    #[value(name = "fig1-data")]
    Fig1Data,
    #[value(name = "fig5-data")]
    Fig5Data,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalyzeWhat {
    Thresholds,
    Bifurcations,
    Intervals,
    Classify,
    Perturb,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// be, cn, modcn or dirk2
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Time step (exclusive with --ratio)
    #[arg(long)]
    pub dt: Option<f64>,
    /// dt/eps^2 (be), dt/(2 eps^2) (cn, modcn) or dt/(4 eps^2) (dirk2)
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Points per axis [default: 257 in 1D, 65 in 2D]
    #[arg(long)]
    pub n: Option<usize>,
    /// Time steps (simulate, classify) or continuation steps (preimage)
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub l: Option<f64>,
    /// First continuation amplitude
    #[arg(long)]
    pub delta0: Option<f64>,
    /// Last continuation amplitude
    #[arg(long)]
    pub delta1: Option<f64>,
    /// Entries per family (intervals, fig data)
    #[arg(long)]
    pub count: Option<usize>,
    /// Output file [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with the same keys in lower_snake_case; flags win
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Compare against the printed reference values
    #[arg(long)]
    pub check: bool,
    #[arg(long)]
    pub newton_tol: Option<f64>,
    #[arg(long)]
    pub newton_max_iter: Option<usize>,
    #[arg(long)]
    pub rmin: Option<f64>,
    #[arg(long)]
    pub rmax: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Next-step constant
    #[arg(long = "c", allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// Current-step constant (perturb) or preimage branch selector
    #[arg(long = "r", allow_hyphen_values = true)]
    pub r: Option<f64>,
    #[arg(long)]
    pub max_k: Option<u32>,
    #[arg(long)]
    pub eps_min: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NewtonFile {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

/// Run configuration as read from `--config`.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: Option<String>,
    pub eps: Option<f64>,
    pub dt: Option<f64>,
    pub ratio: Option<f64>,
    pub dim: Option<usize>,
    pub n: Option<usize>,
    pub steps: Option<usize>,
    pub k: Option<f64>,
    pub l: Option<f64>,
    pub delta0: Option<f64>,
    pub delta1: Option<f64>,
    pub count: Option<usize>,
    pub newton: Option<NewtonFile>,
    pub out: Option<PathBuf>,
    pub check: Option<bool>,
    pub rmin: Option<f64>,
    pub rmax: Option<f64>,
    pub samples: Option<usize>,
    pub c: Option<f64>,
    pub r: Option<f64>,
    pub max_k: Option<u32>,
    pub eps_min: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Flags override file values.
    pub fn overlay(self, a: &RunArgs) -> RunArgs {
        let nf = self.newton.unwrap_or_default();
        RunArgs {
            scheme: a.scheme.clone().or(self.scheme),
            eps: a.eps.or(self.eps),
            dt: a.dt.or(self.dt),
            ratio: a.ratio.or(self.ratio),
            dim: a.dim.or(self.dim),
            n: a.n.or(self.n),
            steps: a.steps.or(self.steps),
            k: a.k.or(self.k),
            l: a.l.or(self.l),
            delta0: a.delta0.or(self.delta0),
            delta1: a.delta1.or(self.delta1),
            count: a.count.or(self.count),
            out: a.out.clone().or(self.out),
            config: a.config.clone(),
            check: a.check || self.check.unwrap_or(false),
            newton_tol: a.newton_tol.or(nf.tol),
            newton_max_iter: a.newton_max_iter.or(nf.max_iter),
            rmin: a.rmin.or(self.rmin),
            rmax: a.rmax.or(self.rmax),
            samples: a.samples.or(self.samples),
            c: a.c.or(self.c),
            r: a.r.or(self.r),
            max_k: a.max_k.or(self.max_k),
            eps_min: a.eps_min.or(self.eps_min),
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(cfg_err(format!("--{name} must be positive, got {v}")))
    }
}

impl RunArgs {
    /// Applies `--config` if present.
    pub fn resolve(self) -> Result<Self, CliError> {
        match &self.config {
            Some(p) => Ok(RunConfig::load(p)?.overlay(&self)),
            None => Ok(self),
        }
    }

    pub fn scheme(&self) -> Result<SchemeKind, CliError> {
        let tag = self.scheme.as_deref().ok_or_else(|| cfg_err("--scheme is required"))?;
        Ok(tag.parse::<SchemeKind>()?)
    }

    pub fn eps_or(&self, default: f64) -> Result<f64, CliError> {
        positive("eps", self.eps.unwrap_or(default))
    }

    /// Exactly one of `--dt` and `--ratio`; with `--ratio` alone, `eps`
    /// defaults to 1 since only the ratio matters.
    pub fn params(&self, kind: &SchemeKind) -> Result<AcParams, CliError> {
        let dt = match (self.dt, self.ratio) {
            (Some(_), Some(_)) => return Err(cfg_err("--dt and --ratio are mutually exclusive")),
            (None, None) => return Err(cfg_err("one of --dt or --ratio is required")),
            (Some(dt), None) => {
                let eps = positive("eps", self.eps.ok_or_else(|| cfg_err("--eps is required with --dt"))?)?;
                return Ok(AcParams::new(eps, positive("dt", dt)?)?);
            }
            (None, Some(ratio)) => ratio,
        };
        let eps = self.eps_or(1.0)?;
        Ok(AcParams::new(eps, kind.dt_from_ratio(positive("ratio", dt)?, eps))?)
    }

    pub fn ratio(&self, kind: &SchemeKind) -> Result<f64, CliError> {
        match (self.ratio, self.dt) {
            (Some(_), Some(_)) => Err(cfg_err("--dt and --ratio are mutually exclusive")),
            (Some(r), None) => positive("ratio", r),
            (None, Some(_)) => Ok(kind.ratio(&self.params(kind)?)),
            (None, None) => Err(cfg_err("--ratio (or --eps and --dt) is required")),
        }
    }

    pub fn newton(&self) -> Result<NewtonConfig, CliError> {
        let d = NewtonConfig::default();
        let cfg = NewtonConfig {
            tol: self.newton_tol.unwrap_or(d.tol),
            max_iter: self.newton_max_iter.unwrap_or(d.max_iter),
            ..d
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid(&self, dim: usize) -> Result<GridSpec, CliError> {
        let n = self.n.unwrap_or(if dim == 1 { 257 } else { 65 });
        Ok(make_grid(dim, n)?)
    }

    /// Dimension from `--dim`, or from the number of mode indices.
    pub fn dim_for(&self, indices: usize) -> Result<usize, CliError> {
        let dim = self.dim.unwrap_or(indices.max(1));
        if !(1..=2).contains(&dim) {
            return Err(cfg_err(format!("--dim must be 1 or 2, got {dim}")));
        }
        if indices > 0 && indices != dim {
            return Err(cfg_err(format!("{indices} mode index(es) given for a {dim}D grid")));
        }
        Ok(dim)
    }

    /// Mode from `--k`/`--l`.
    pub fn mode(&self) -> Result<ModeIndex, CliError> {
        let k = self.k.unwrap_or(1.0);
        let dim = self.dim.unwrap_or(if self.l.is_some() { 2 } else { 1 });
        let vals = match dim {
            1 if self.l.is_some() => return Err(cfg_err("--l needs --dim 2")),
            1 => vec![k],
            2 => vec![k, self.l.unwrap_or(k)],
            d => return Err(cfg_err(format!("--dim must be 1 or 2, got {d}"))),
        };
        Ok(ModeIndex::from_values(&vals)?)
    }

    pub fn homotopy(&self, delta_end: f64) -> Result<HomotopyConfig, CliError> {
        let d1 = self.delta1.unwrap_or(delta_end);
        let d0 = self.delta0.unwrap_or(1e-3_f64.min(d1.abs()).copysign(d1));
        let cfg = HomotopyConfig {
            delta_start: d0,
            delta_end: d1,
            steps: self.steps.unwrap_or(HomotopyConfig::default().steps),
            adaptive: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parsed `const:<v>` or `const+mode:<v>,<delta>,<k>[,<l>]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub value: f64,
    pub perturbation: Option<(f64, ModeIndex)>,
}

impl FieldSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || cfg_err(format!("bad field spec '{s}' (expected const:<v> or const+mode:<v>,<delta>,<k>[,<l>])"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        if let Some(rest) = s.strip_prefix("const+mode:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if !(3..=4).contains(&parts.len()) {
                return Err(bad());
            }
            let ks = parts[2..].iter().map(|t| num(t)).collect::<Result<Vec<_>, _>>()?;
            let mode = ModeIndex::from_values(&ks).map_err(|e| cfg_err(format!("{s}: {e}")))?;
            Ok(Self {
                value: num(parts[0])?,
                perturbation: Some((num(parts[1])?, mode)),
            })
        } else if let Some(rest) = s.strip_prefix("const:") {
            Ok(Self {
                value: num(rest)?,
                perturbation: None,
            })
        } else {
            Err(bad())
        }
    }

    pub fn indices(&self) -> usize {
        self.perturbation.as_ref().map_or(0, |(_, m)| m.dim())
    }

    pub fn profile(&self, grid: &GridSpec) -> Result<Option<ScalarField>, CliError> {
        match &self.perturbation {
            Some((_, m)) => Ok(Some(eval_mode(m, grid)?)),
            None => Ok(None),
        }
    }

    pub fn field(&self, grid: &GridSpec) -> Result<ScalarField, CliError> {
        Ok(match (&self.perturbation, self.profile(grid)?) {
            (Some((delta, _)), Some(f)) => f.map(|v| self.value + delta * v),
            _ => ScalarField::constant(*grid, self.value),
        })
    }
}
