//! `tvgeom`: command-line front end for the Turaev-Viro state sum, quantum
//! 6j symbols, spherical tetrahedra and the semiclassical identities.
//!
//! Exit codes: 0 on success, 2 on invalid arguments (the message names the
//! flag), 1 when a computation fails or an identity misses its tolerance
//! (a JSON error object is printed on standard output).

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::Format;

#[derive(Parser, Debug)]
#[command(
    name = "tvgeom",
    version,
    about = "Turaev-Viro invariants and their semiclassical geometry"
)]
pub struct Cli {
    /// Output format for results on standard output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Worker threads (defaults to the machine's parallelism). With 1 thread
    /// every result is bit-for-bit reproducible.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Turaev-Viro invariant of a triangulation file.
    Tv(TvArgs),
    /// Quantum 6j symbol; colors are doubled integers 2j.
    Sixj(SixjArgs),
    /// Exact symbols against the asymptotic formula along k·j.
    Asymp(AsympArgs),
    /// Geometry of a single tetrahedron.
    Geom {
        #[command(subcommand)]
        what: GeomCommand,
    },
    /// Numerical checks of the asymptotic identities.
    Identities(IdentitiesArgs),
    /// The semiclassical invariant.
    Semiclassical {
        #[command(subcommand)]
        what: SemiclassicalCommand,
    },
    /// Apply one Pachner move to a triangulation file.
    Pachner(PachnerArgs),
    /// List (and optionally write) the bundled triangulations.
    Corpus(CorpusArgs),
}

#[derive(Args, Debug)]
pub struct TvArgs {
    /// Triangulation JSON file.
    #[arg(long = "in")]
    pub input: std::path::PathBuf,
    /// Level r ≥ 3.
    #[arg(long)]
    pub r: u32,
    /// Abort after visiting this many partial colorings.
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ConventionArg {
    /// The state-sum normalization, a power of i times the Racah value.
    Tv,
    /// The real Racah-Wigner value.
    Classical,
}

#[derive(Args, Debug)]
pub struct SixjArgs {
    #[arg(long)]
    pub r: u32,
    /// Six doubled colors 2j: j12,j23,j13,j34,j14,j24.
    #[arg(long, value_delimiter = ',')]
    pub colors: Vec<u32>,
    #[arg(long, value_enum, default_value_t = ConventionArg::Tv)]
    pub convention: ConventionArg,
    /// Also evaluate the Racah sum in extended precision.
    #[arg(long)]
    pub high_precision: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VolumeSignArg {
    Plus,
    Minus,
}

#[derive(Args, Debug)]
pub struct AsympArgs {
    /// Base level r; the symbols are taken at r(k) = k(r − 2) + 2.
    #[arg(long)]
    pub r: u32,
    /// Six doubled colors at the base level.
    #[arg(long, value_delimiter = ',')]
    pub colors: Vec<u32>,
    #[arg(long)]
    pub kmin: u32,
    #[arg(long)]
    pub kmax: u32,
    /// Window length for the RMS statistic.
    #[arg(long, default_value_t = 20)]
    pub window: usize,
    /// Sign of the volume term in the phase.
    #[arg(long, value_enum, default_value_t = VolumeSignArg::Plus)]
    pub volume_sign: VolumeSignArg,
    /// Write the rows (k, r_k, exact, estimate, envelope) to this CSV file.
    #[arg(long)]
    pub csv: Option<std::path::PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GeometryArg {
    Spherical,
    Euclidean,
}

#[derive(Subcommand, Debug)]
pub enum GeomCommand {
    /// Gram (or Cayley-Menger) determinant, dihedral angles and volume.
    Tetra {
        /// l12,l13,l14,l23,l24,l34.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lengths: Vec<f64>,
        #[arg(long, value_enum, default_value_t = GeometryArg::Spherical)]
        geometry: GeometryArg,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Identity {
    /// Asymptotic pentagon identity on random 5-point configurations.
    Sjac,
    /// sin(l_cd) ∫ sin(l_ab)/√G dl_ab = π over a grid of l_cd.
    Normalization,
    /// The region integral (1/sin l_a) ∬ sin l_b sin l_c.
    Delinfty,
}

#[derive(Args, Debug)]
pub struct IdentitiesArgs {
    #[arg(value_enum)]
    pub identity: Identity,
    /// Configurations (sjac) or grid points (normalization, delinfty).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Tolerance; defaults to 1e-4 for sjac and 1e-6 otherwise.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Normalization context l02,l03,l12,l13 (default all π/2).
    #[arg(long, value_delimiter = ',')]
    pub context: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    Reduction,
    Mc,
}

#[derive(Subcommand, Debug)]
pub enum SemiclassicalCommand {
    /// I(S³) on the 5-cell.
    S3 {
        #[arg(long, value_enum, default_value_t = MethodArg::Reduction)]
        method: MethodArg,
        #[arg(long, default_value_t = 10_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Acceptance cutoff on the Gram determinants.
        #[arg(long, default_value_t = 1e-8)]
        epsilon: f64,
        /// Tetrahedron signs for Monte Carlo, five values ±1.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        signs: Option<Vec<i8>>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MoveArg {
    #[value(name = "2-3")]
    TwoThree,
    #[value(name = "3-2")]
    ThreeTwo,
    #[value(name = "1-4")]
    OneFour,
    #[value(name = "4-1")]
    FourOne,
}

#[derive(Args, Debug)]
pub struct PachnerArgs {
    #[arg(long = "in")]
    pub input: std::path::PathBuf,
    #[arg(long = "move", value_enum)]
    pub kind: MoveArg,
    /// Face i,j,k (vertex indices) for 2-3.
    #[arg(long, value_delimiter = ',')]
    pub face: Option<Vec<usize>>,
    /// Edge u,v for 3-2.
    #[arg(long, value_delimiter = ',')]
    pub edge: Option<Vec<usize>>,
    /// Tetrahedron i,j,k,l for 1-4.
    #[arg(long, value_delimiter = ',')]
    pub tet: Option<Vec<usize>>,
    /// Vertex for 4-1.
    #[arg(long)]
    pub vertex: Option<usize>,
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Args, Debug)]
pub struct CorpusArgs {
    /// Directory to write the bundled files into.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    commands::run(cli)
}
