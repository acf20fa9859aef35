use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use grweyl::TauForm;

#[derive(Debug, Parser)]
#[command(
    name = "grweyl",
    version,
    about = "Tensor calculus and conformal invariants of non-symmetric metrics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Metric parts, connection, torsion, curvature and the curvature family at each point.
    Tensors {
        #[command(flatten)]
        common: Common,
        /// Curvature family coefficients `u,u',v,v',w`.
        #[arg(long, default_value = "0,0,0,0,0")]
        params: String,
    },
    /// Associated and family curvature with their contractions.
    Curvature {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "0,0,0,0,0")]
        params: String,
    },
    /// Thomas-type connection invariants.
    Thomas {
        #[command(flatten)]
        common: Common,
        /// Five characters from {1,2}, or `all`.
        #[arg(long = "r", default_value = "all")]
        selector: String,
        #[arg(long, value_enum, default_value_t = TauFormArg::Printed)]
        tau_form: TauFormArg,
    },
    /// Weyl tensor and torsion-corrected Weyl-type tensors.
    Weyl {
        #[command(flatten)]
        common: Common,
        /// `s1,s2,r1,...,r8` or `random:K`.
        #[arg(
            long,
            default_value = "111,111,11111,11111,11111,11111,11111,11111,11111,11111"
        )]
        rho: String,
        #[arg(long, default_value = "0,0,0,0,0")]
        params: String,
        #[arg(long, value_enum, default_value_t = TauFormArg::Printed)]
        tau_form: TauFormArg,
        /// Emit the fully covariant forms.
        #[arg(long)]
        covariant: bool,
    },
    /// Runs the invariance suite on the space and its conformal image.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Tolerance override `NAME=VALUE`; NAME is a class or a check-name prefix.
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tolerances: Vec<String>,
        /// Where to write the JSON report (defaults to --output or stdout).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Perturb the image so that it is no longer conformal.
        #[arg(long)]
        corrupt: bool,
        /// Draw a random ψ from this seed instead of reading it from the file.
        #[arg(long, value_name = "SEED")]
        auto_psi: Option<u64>,
        #[arg(long, value_enum, default_value_t = TauFormArg::Printed)]
        tau_form: TauFormArg,
    },
    /// Decides whether two metrics are conformally related.
    Detect {
        #[command(flatten)]
        common: Common,
        /// Second space file.
        #[arg(long)]
        against: PathBuf,
    },
    /// Writes a random space file.
    Generate {
        #[arg(long, default_value_t = 3)]
        dimension: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Number of sampled evaluation points.
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Evaluation point `v1,v2,...`; repeatable. Replaces the file's points.
    #[arg(long = "point", value_name = "V1,V2,...")]
    pub points: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TauFormArg {
    Printed,
    TraceCompleted,
}

impl From<TauFormArg> for TauForm {
    fn from(t: TauFormArg) -> Self {
        match t {
            TauFormArg::Printed => TauForm::Printed,
            TauFormArg::TraceCompleted => TauForm::TraceCompleted,
        }
    }
}
