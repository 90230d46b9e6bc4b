use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "beltrami", version, about = "Construct, classify and verify Beltrami fields curl u = f u on structured grids")]
pub struct Cli {
    /// `key = value` file supplying defaults for the subcommand's flags; flags
    /// given on the command line win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the proportionality factor f: which Beltrami fields can it carry
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Classify(ClassifyArgs),
    /// Adapted frame and connection coefficients of the level sets of f,
    /// optionally evolving tangential data along them
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Frame(FrameArgs),
    /// Build a translation- or rotation-symmetric field from a flux function
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Construct(ConstructArgs),
    /// Residuals of curl u = f u, div u = 0 and u . grad f = 0
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Verify(VerifyArgs),
    /// Continue Cauchy data on a periodic slice off the slice
    #[command(args_override_self = true, allow_negative_numbers = true)]
    March(MarchArgs),
    /// Sample a closed-form Beltrami field
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Oracle(OracleArgs),
    /// Integrate the coaxial-cylinder ODE for (u1, u2) along r
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Ode(OdeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StencilArg {
    Second,
    Fourth,
}

impl From<StencilArg> for beltrami::Stencil {
    fn from(s: StencilArg) -> Self {
        match s {
            StencilArg::Second => beltrami::Stencil::Second,
            StencilArg::Fourth => beltrami::Stencil::Fourth,
        }
    }
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output directory, created if missing
    #[arg(long, default_value = ".", value_name = "DIR")]
    pub out: PathBuf,
    /// Also write the fields as legacy ASCII VTK files
    #[arg(long)]
    pub vtk: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Proportionality factor: an expression in x, y, z, r, theta, or a `.bfg1` file
    #[arg(long = "f", allow_hyphen_values = true, value_name = "EXPR|FILE")]
    pub f: String,
    /// Grid for expression input, `lo:hi:dims[:coords]` or
    /// `origin=..;spacing=..;dims=..;coords=..`
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Relative tolerance for "vanishes identically"
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    /// Smallest admissible |grad f|
    #[arg(long, default_value_t = 1e-10)]
    pub grad_tol: f64,
    #[arg(long, value_enum, default_value_t = StencilArg::Fourth)]
    pub stencil: StencilArg,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Auto,
    Principal,
    Completion,
}

#[derive(Debug, Args)]
pub struct FrameArgs {
    /// Level function: an expression or a `.bfg1` file
    #[arg(long = "f", allow_hyphen_values = true, value_name = "EXPR|FILE")]
    pub f: String,
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    /// Umbilic tolerance
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub grad_tol: f64,
    #[arg(long, value_enum, default_value_t = StencilArg::Second)]
    pub stencil: StencilArg,
    /// e1 component of tangential initial data (expression or `.bfg1`); with
    /// --u2, evolves the data along the normal lines
    #[arg(long, allow_hyphen_values = true, requires = "u2", value_name = "EXPR|FILE")]
    pub u1: Option<String>,
    /// e2 component of tangential initial data
    #[arg(long, allow_hyphen_values = true, requires = "u1", value_name = "EXPR|FILE")]
    pub u2: Option<String>,
    /// Level f = LEVEL carrying the initial data (default: min f)
    #[arg(long)]
    pub level: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SymmetryArg {
    Translation,
    Rotation,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(long, value_enum)]
    pub symmetry: SymmetryArg,
    /// Flux profile Phi, an expression in t
    #[arg(long, allow_hyphen_values = true)]
    pub phi: String,
    /// Dirichlet data: an expression in the grid coordinates or a `.bfg1` file
    #[arg(long, allow_hyphen_values = true, value_name = "EXPR|FILE")]
    pub bc: String,
    /// Cross-section grid: (x, y) with one z node, or (r, z) with one theta node
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long, default_value_t = 1e-10)]
    pub newton_tol: f64,
    #[arg(long, default_value_t = 50)]
    pub newton_max_iter: usize,
    /// Stencil of the verification step
    #[arg(long, value_enum, default_value_t = StencilArg::Fourth)]
    pub stencil: StencilArg,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Field: three comma-separated expressions or a `.bfg1` file
    #[arg(long = "u", allow_hyphen_values = true, value_name = "EXPRS|FILE")]
    pub u: String,
    /// Proportionality factor: an expression or a `.bfg1` file
    #[arg(long = "f", allow_hyphen_values = true, value_name = "EXPR|FILE")]
    pub f: String,
    /// Required when neither input is a file
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, value_enum, default_value_t = StencilArg::Second)]
    pub stencil: StencilArg,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct MarchArgs {
    /// Slice data: three comma-separated expressions or a `.bfg1` file with one
    /// node along the third axis
    #[arg(long = "u", allow_hyphen_values = true, value_name = "EXPRS|FILE")]
    pub u: String,
    /// Periodic slice grid, `origin=..;spacing=..;dims=n1,n2,1`; the period is n h
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 0.2)]
    pub depth: f64,
    #[arg(long, default_value_t = 40)]
    pub steps: usize,
    /// Retained fraction of the Nyquist band
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub filter_frac: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub u3_min: f64,
    /// Stencil used to recover f and verify the marched field
    #[arg(long, value_enum, default_value_t = StencilArg::Fourth)]
    pub stencil: StencilArg,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleArg {
    Abc,
    HarmonicGradient,
    PlanarCr,
    Lundquist,
    Cylinder,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub kind: OracleArg,
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    /// ABC amplitudes and wavenumber; Lundquist and constant factors use --c
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Harmonic potential in x, y, z
    #[arg(long, allow_hyphen_values = true)]
    pub potential: Option<String>,
    /// Factor: phi(z) for planar-cr, phi(r) for cylinder
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<String>,
    /// Cauchy-Riemann pair (v, w) in x, y
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<String>,
    /// Cylinder initial values (u1, u2) at r0
    #[arg(long, default_value_t = 0.0)]
    pub u1_0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub u2_0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r0: f64,
    #[arg(long, value_enum, default_value_t = StencilArg::Second)]
    pub stencil: StencilArg,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct OdeArgs {
    /// Factor phi, an expression in r
    #[arg(long, allow_hyphen_values = true)]
    pub phi: String,
    #[arg(long)]
    pub r0: f64,
    /// Initial values `u1,u2` at r0
    #[arg(long, allow_hyphen_values = true, value_name = "U1,U2")]
    pub u0: String,
    #[arg(long)]
    pub r1: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[command(flatten)]
    pub output: Output,
}
