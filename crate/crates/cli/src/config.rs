//! Run configuration: command-line flags layered over an optional TOML file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Parser, Debug)]
#[command(name = "pss", version, about = "Pseudo-spherical surface toolkit: verify families, analyze immersions, build surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the structure equations of a family and, when it has one, its closed-form immersion.
    Verify(RunArgs),
    /// Run the finite-jet obstruction analysis and print the verdict with its trace.
    Obstruct(RunArgs),
    /// Solve, integrate the moving frame and export the surface mesh.
    Immerse(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionKind {
    /// Sine-Gordon kink `4·arctan(exp(a x + t/a))`.
    Kink,
    /// `C·exp(p x + q t) + particular` for linear equations.
    Linear,
    /// Numerical traveling wave `φ(x + c t)`.
    Wave,
    /// Closed form given by `--u`.
    Expr,
    /// Grid file given by `--input` (`.csv` or binary).
    File,
}

#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    /// Configuration file; defaults to $PSS_CONFIG when set.
    #[arg(long, env = "PSS_CONFIG")]
    pub config: Option<PathBuf>,
    /// Family id, e.g. sg-basic, sg-eta, hyp-iii-lambda.
    #[arg(long)]
    pub family: Option<String>,
    /// Extra family parameter, NAME=VALUE (repeatable).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Coefficient function of an evolution family, NAME=EXPR (f11, f12, f22, f31).
    #[arg(long = "coef", value_name = "NAME=EXPR")]
    pub coefs: Vec<String>,
    /// Representative of F for Hyp_i families (sin, cos, sinh, cosh, exp, exp-).
    #[arg(long)]
    pub fkind: Option<String>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long = "A")]
    pub big_a: Option<f64>,
    #[arg(long = "B")]
    pub big_b: Option<f64>,
    #[arg(long = "Q")]
    pub big_q: Option<f64>,
    #[arg(long = "T")]
    pub big_t: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Equation constant γ of the Hyp_ii families.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, alias = "zeta")]
    pub xi: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Family sign branch (+1 or -1).
    #[arg(long, allow_hyphen_values = true)]
    pub sign: Option<f64>,
    /// Immersion constant l of the universal families.
    #[arg(long)]
    pub l: Option<f64>,
    /// Immersion constant γ of the universal families.
    #[arg(long = "gamma-im")]
    pub gamma_im: Option<f64>,
    /// Sign of the second fundamental form branch (+1 or -1).
    #[arg(long = "imm-sign", allow_hyphen_values = true)]
    pub imm_sign: Option<f64>,
    /// Jet order for the obstruction analysis (0 or 1).
    #[arg(long)]
    pub order: Option<u32>,
    /// Grid `x0:x1:t0:t1:h`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, value_enum)]
    pub solution: Option<SolutionKind>,
    /// Kink speed.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Exponent rate p of the linear solution.
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    /// Amplitude of the linear solution.
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    /// Traveling-wave speed.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// Traveling-wave data φ(0), φ'(0) as `u0,du0`.
    #[arg(long = "wave-data", allow_hyphen_values = true)]
    pub wave_data: Option<String>,
    /// Closed-form solution u(x, t).
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<String>,
    /// Solution grid file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Relative degeneracy threshold for the frame mask.
    #[arg(long = "eps-deg")]
    pub eps_deg: Option<f64>,
    /// Mesh output path (OBJ).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Seed of the randomized zero tests.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// `[section] key = value` file; every entry is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub family: FamilySection,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub coefficients: BTreeMap<String, String>,
    #[serde(default)]
    pub immersion: ImmersionSection,
    #[serde(default)]
    pub solution: SolutionSection,
    #[serde(default)]
    pub frame: FrameSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub check: CheckSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    pub id: Option<String>,
    pub fkind: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImmersionSection {
    pub l: Option<f64>,
    pub gamma_im: Option<f64>,
    pub sign: Option<f64>,
    pub order: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionSection {
    pub kind: Option<SolutionKind>,
    pub grid: Option<String>,
    pub a: Option<f64>,
    pub p: Option<f64>,
    pub amplitude: Option<f64>,
    pub c: Option<f64>,
    pub u0: Option<f64>,
    pub du0: Option<f64>,
    pub u: Option<String>,
    pub input: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSection {
    pub eps_deg: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub mesh: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    pub seed: Option<u64>,
    pub mean_k_error: Option<f64>,
    pub max_metric_error: Option<f64>,
    pub max_path_residual: Option<f64>,
}

/// Everything a command needs, after merging flags over the config file.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub family: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub coefficients: BTreeMap<String, String>,
    pub fkind: Option<String>,
    pub l: f64,
    pub gamma_im: f64,
    pub imm_sign: f64,
    pub order: u32,
    pub grid: String,
    pub solution: SolutionKind,
    pub a: f64,
    pub p: f64,
    pub amplitude: f64,
    pub c: f64,
    pub wave_data: (f64, f64),
    pub u: Option<String>,
    pub input: Option<PathBuf>,
    pub eps_deg: f64,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub seed: u64,
    pub mean_k_error: f64,
    pub max_metric_error: f64,
    pub max_path_residual: f64,
}

pub const DEFAULT_GRID: &str = "-3:3:-3:3:0.02";
pub const DEFAULT_SEED: u64 = 0x5eed;

fn split_pair(s: &str, what: &str) -> Result<(String, String), Failure> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(Failure::usage(format!("{what} `{s}` should look like NAME=VALUE"))),
    }
}

fn load(path: &Path) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Result<RunConfig, Failure> {
        let file = match &args.config {
            Some(p) => load(p)?,
            None => FileConfig::default(),
        };
        let mut params = file.params.clone();
        let named = [
            ("eta", args.eta),
            ("A", args.big_a),
            ("B", args.big_b),
            ("Q", args.big_q),
            ("T", args.big_t),
            ("alpha", args.alpha),
            ("beta", args.beta),
            ("gamma", args.gamma),
            ("delta", args.delta),
            ("nu", args.nu),
            ("lambda", args.lambda),
            ("xi", args.xi),
            ("tau", args.tau),
            ("sign", args.sign),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                params.insert(k.to_string(), v);
            }
        }
        for s in &args.params {
            let (k, v) = split_pair(s, "--param")?;
            let v: f64 = v.parse().map_err(|_| Failure::usage(format!("--param {k}: `{v}` is not a number")))?;
            params.insert(k, v);
        }
        let mut coefficients = file.coefficients.clone();
        for s in &args.coefs {
            let (k, v) = split_pair(s, "--coef")?;
            coefficients.insert(k, v);
        }
        let sol = &file.solution;
        let wave_data = match &args.wave_data {
            Some(s) => {
                let v: Vec<f64> = s.split(',').map(|x| x.trim().parse()).collect::<Result<_, _>>().map_err(|_| Failure::usage(format!("--wave-data `{s}`")))?;
                match v[..] {
                    [u0, du0] => (u0, du0),
                    _ => return Err(Failure::usage(format!("--wave-data `{s}` should be u0,du0"))),
                }
            }
            None => (sol.u0.unwrap_or(std::f64::consts::PI), sol.du0.unwrap_or(2.0)),
        };
        Ok(RunConfig {
            family: args.family.clone().or(file.family.id.clone()),
            params,
            coefficients,
            fkind: args.fkind.clone().or(file.family.fkind.clone()),
            l: args.l.or(file.immersion.l).unwrap_or(3.0),
            gamma_im: args.gamma_im.or(file.immersion.gamma_im).unwrap_or(1.0),
            imm_sign: args.imm_sign.or(file.immersion.sign).unwrap_or(1.0),
            order: args.order.or(file.immersion.order).unwrap_or(1),
            grid: args.grid.clone().or(sol.grid.clone()).unwrap_or_else(|| DEFAULT_GRID.to_string()),
            solution: args.solution.or(sol.kind).unwrap_or(SolutionKind::Kink),
            a: args.a.or(sol.a).unwrap_or(1.0),
            p: args.p.or(sol.p).unwrap_or(1.0),
            amplitude: args.amplitude.or(sol.amplitude).unwrap_or(1.0),
            c: args.c.or(sol.c).unwrap_or(1.0),
            wave_data,
            u: args.u.clone().or(sol.u.clone()),
            input: args.input.clone().or(sol.input.clone()),
            eps_deg: args.eps_deg.or(file.frame.eps_deg).unwrap_or(pss_core::frame::DEFAULT_EPS_DEG),
            out: args.out.clone().or(file.output.mesh.clone()),
            report: args.report.clone().or(file.output.report.clone()),
            seed: args.seed.or(file.check.seed).unwrap_or(DEFAULT_SEED),
            mean_k_error: file.check.mean_k_error.unwrap_or(1e-2),
            max_metric_error: file.check.max_metric_error.unwrap_or(1e-3),
            max_path_residual: file.check.max_path_residual.unwrap_or(1e-3),
        })
    }
}
