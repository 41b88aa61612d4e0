use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod report;

use report::Format;

/// Chart-level checks for Frobenius-projective and Frobenius-affine structures.
#[derive(Parser, Debug)]
#[command(name = "frobstruct", version)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Differential operators of finite level.
    #[command(subcommand)]
    Dop(DopCmd),
    /// Modules over the ring of differential operators.
    #[command(subcommand)]
    Dmod(DmodCmd),
    /// Indigenous and affine-indigenous candidates.
    #[command(subcommand)]
    Indig(IndigCmd),
    /// Tango structures and the bundle A_N.
    #[command(subcommand)]
    Tango(TangoCmd),
    /// Tate-module combinatorics and Chern arithmetic.
    #[command(subcommand)]
    Comb(CombCmd),
    /// Frobenius-affine structures on the affine line.
    #[command(subcommand)]
    Orbits(OrbitsCmd),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ChartArgs {
    #[arg(long)]
    pub p: u64,
    /// Comma-separated variable names.
    #[arg(long, default_value = "t", value_delimiter = ',')]
    pub vars: Vec<String>,
    /// Variables that are inverted on the chart.
    #[arg(long, value_delimiter = ',')]
    pub laurent: Vec<String>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DopCmd {
    /// Product of two operators.
    Mul {
        #[command(flatten)]
        #[serde(flatten)]
        chart: ChartArgs,
        /// Level: a nonnegative integer or `inf`.
        #[arg(long)]
        m: String,
        #[arg(long)]
        lhs: String,
        #[arg(long)]
        rhs: String,
    },
    /// Apply an operator to a function.
    Apply {
        #[command(flatten)]
        #[serde(flatten)]
        chart: ChartArgs,
        #[arg(long)]
        m: String,
        #[arg(long)]
        op: String,
        #[arg(long)]
        f: String,
    },
    /// Image under the natural map from level m1 to level m2.
    Levelmap {
        #[command(flatten)]
        #[serde(flatten)]
        chart: ChartArgs,
        #[arg(long)]
        m1: String,
        #[arg(long)]
        m2: String,
        #[arg(long)]
        op: String,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DmodCmd {
    /// Check the relations of the generator action.
    Validate {
        #[arg(long)]
        module: String,
    },
    /// Classical p-curvature of the level-0 truncation.
    Pcurv {
        #[arg(long)]
        module: String,
        #[arg(long, default_value = "0")]
        var: String,
    },
    /// Horizontal sections of the level-0 connection, or check one.
    Sol {
        #[arg(long)]
        module: String,
        /// Components of a vector to test for horizontality.
        #[arg(long = "vec")]
        check: Vec<String>,
    },
    /// Iterated Cartier descent.
    Dormant {
        #[arg(long)]
        module: String,
    },
    /// Frobenius pullback of the trivial module, framed by a unit.
    Pullback {
        #[command(flatten)]
        #[serde(flatten)]
        chart: ChartArgs,
        #[arg(long = "N")]
        #[serde(rename = "N")]
        level: u32,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value = "1")]
        unit: String,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndigCmd {
    /// Kodaira-Spencer criterion, plus the affine check when `delta` is given.
    Check {
        #[arg(long)]
        candidate: String,
    },
    /// The trivial affine-indigenous candidate on a polynomial chart.
    Trivial {
        #[command(flatten)]
        #[serde(flatten)]
        chart: ChartArgs,
        #[arg(long = "N")]
        #[serde(rename = "N")]
        level: u32,
    },
    /// Twist by a rank-one module.
    Twist {
        #[arg(long)]
        candidate: String,
        #[arg(long)]
        by: String,
    },
    /// Whether the determinant is gauge equivalent to theta.
    Normalized {
        #[arg(long)]
        candidate: String,
        #[arg(long)]
        theta: String,
        /// Largest monomial gauge exponent to try.
        #[arg(long)]
        bound: Option<u64>,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TangoArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub level: u32,
    /// Variables; defaults to `t` for one generator, `t1, ..., tn` otherwise.
    #[arg(long, value_delimiter = ',')]
    pub vars: Vec<String>,
    /// Generator representatives, one per variable.
    #[arg(long = "gen")]
    pub gens: Vec<String>,
    /// Read the structure from a file instead.
    #[arg(long)]
    pub file: Option<String>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TangoCmd {
    /// Class of a polynomial in B^(N), and its differential.
    Project {
        #[command(flatten)]
        #[serde(flatten)]
        chart: ChartArgs,
        #[arg(long = "N")]
        #[serde(rename = "N")]
        level: u32,
        #[arg(long)]
        f: String,
    },
    /// Unit Jacobian test.
    Verify {
        #[command(flatten)]
        #[serde(flatten)]
        tango: TangoArgs,
    },
    /// Image at a lower level.
    Truncate {
        #[command(flatten)]
        #[serde(flatten)]
        tango: TangoArgs,
        #[arg(long)]
        to: u32,
    },
    /// Dual affine connection of a structure, or check a module on Omega.
    Dualconn {
        #[command(flatten)]
        #[serde(flatten)]
        tango: TangoArgs,
        /// Check this rank-one module instead.
        #[arg(long)]
        module: Option<String>,
    },
    /// The dormant affine-indigenous module of a structure.
    Reconstruct {
        #[command(flatten)]
        #[serde(flatten)]
        tango: TangoArgs,
    },
    /// Product structure of two structure files.
    Product {
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
    },
    /// The matrix of divided derivatives of the generator of A_N.
    Kappa {
        #[arg(long)]
        p: u64,
        #[arg(long = "N")]
        #[serde(rename = "N")]
        level: u32,
    },
    /// Filtration and graded isomorphisms of A_N.
    Filtration {
        #[arg(long)]
        p: u64,
        #[arg(long = "N")]
        #[serde(rename = "N")]
        level: u32,
    },
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
pub struct TateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub level: u32,
    #[arg(long)]
    pub p: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Sn,
    Delta,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombCmd {
    /// Enumerated number of basis tuples against the closed formula.
    Count {
        #[command(flatten)]
        #[serde(flatten)]
        tate: TateArgs,
    },
    /// Class representatives, or check that a tuple is one.
    Classes {
        #[command(flatten)]
        #[serde(flatten)]
        tate: TateArgs,
        #[arg(long, value_enum, default_value_t = Which::Delta)]
        which: Which,
        /// A tuple as a JSON list of vectors.
        #[arg(long)]
        check: Option<String>,
    },
    /// Orbits per delta-class.
    Ratio {
        #[command(flatten)]
        #[serde(flatten)]
        tate: TateArgs,
    },
    /// Classes fixed by a finite group (finite-level evidence).
    Invariants {
        #[command(flatten)]
        #[serde(flatten)]
        tate: TateArgs,
        #[arg(long, value_enum, default_value_t = Which::Delta)]
        which: Which,
        /// Generator matrices as JSON.
        #[arg(long = "gen")]
        gens: Vec<String>,
        /// Hyperelliptic preset index 0..7.
        #[arg(long)]
        preset: Option<usize>,
    },
    /// Chern-number obstruction.
    Chern {
        #[arg(long, allow_hyphen_values = true)]
        c1sq: Option<i64>,
        #[arg(long, allow_hyphen_values = true)]
        c2: Option<i64>,
        /// Surface class from the built-in table.
        #[arg(long)]
        surface: Option<String>,
        #[arg(long, default_value_t = 0)]
        genus: i64,
        /// Affine mode, with this c1.
        #[arg(long, allow_hyphen_values = true)]
        aff_c1: Option<i64>,
        #[arg(long)]
        p: u64,
        #[arg(long = "N")]
        #[serde(rename = "N")]
        level: u32,
    },
    /// Built-in Chern numbers of surface classes.
    Table {
        #[arg(long, default_value_t = 0)]
        genus: i64,
    },
    /// Chern numbers of a product of curves.
    ProductChern {
        #[arg(long)]
        g1: i64,
        #[arg(long)]
        g2: i64,
        #[arg(long)]
        p: u64,
        #[arg(long = "N")]
        #[serde(rename = "N")]
        level: u32,
    },
    /// Count of genus-g objects.
    GenusCount {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        g: u64,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitsCmd {
    /// Canonical orbit representative.
    Canon {
        #[arg(long)]
        p: u64,
        #[arg(long = "N")]
        #[serde(rename = "N")]
        level: u32,
        #[arg(long)]
        f: String,
        /// Report whether `f` already is canonical.
        #[arg(long)]
        check: bool,
    },
    /// Number of orbits within a degree bound.
    Count {
        #[arg(long)]
        p: u64,
        #[arg(long = "N")]
        #[serde(rename = "N")]
        level: u32,
        #[arg(long)]
        deg: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Dop(c) => commands::dop(c),
        Command::Dmod(c) => commands::dmod(c),
        Command::Indig(c) => commands::indig(c),
        Command::Tango(c) => commands::tango(c),
        Command::Comb(c) => commands::comb(c),
        Command::Orbits(c) => commands::orbits(c),
    };
    match result {
        Ok(report) => {
            print!("{}", report.render(cli.format));
            ExitCode::from(report.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
