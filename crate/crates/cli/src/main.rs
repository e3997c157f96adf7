mod commands;
mod docs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fraisse_core::Family;

/// Finite σ-structures, epimorphisms, spiral covers and Boolean-power
/// automorphisms, with checkable JSON certificates.
#[derive(Parser, Debug)]
#[command(name = "fraisse", version)]
pub struct Cli {
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Membership of a structure in one of the families.
    Check {
        #[arg(long)]
        family: Family,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Search for an epimorphism between two structures.
    Epi {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        to: PathBuf,
        /// Node budget of the backtracking search.
        #[arg(long)]
        cap: Option<u64>,
    },
    #[command(subcommand)]
    Amalgamate(AmalgamateCmd),
    #[command(subcommand)]
    Spiral(SpiralCmd),
    #[command(subcommand)]
    Qp(QpCmd),
    /// Idempotents, congruences, simplicity, Mal'cev term and automorphisms.
    Algebra {
        #[command(flatten)]
        source: AlgebraSource,
        /// Size cap for the ternary clone.
        #[arg(long)]
        cap: Option<usize>,
    },
    /// The power of an algebra pinned at marked points.
    Power {
        #[command(flatten)]
        source: AlgebraSource,
        #[arg(long)]
        points: usize,
        #[arg(long, value_delimiter = ',')]
        marked: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        pins: Vec<usize>,
    },
    #[command(subcommand)]
    Transconj(TransconjCmd),
    #[command(subcommand)]
    Tower(TowerCmd),
    /// Re-check a certificate written by any other subcommand.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        /// Cap on the function space for translate-to-conjugate instances.
        #[arg(long)]
        cap: Option<usize>,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct AlgebraSource {
    /// `Z2`, `Z3`, `Z4`, `S3-as-group` or `2elt-semilattice`.
    #[arg(long)]
    preset: Option<String>,
    /// Algebra as JSON `{"size", "ops": [{"arity", "table"}]}`.
    #[arg(long = "in")]
    input: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum AmalgamateCmd {
    /// Amalgamate `phi1: A1 → B` and `phi2: A2 → B`.
    Pap {
        #[arg(long)]
        phi1: PathBuf,
        #[arg(long)]
        phi2: PathBuf,
        #[arg(long)]
        family: Family,
        /// Largest amalgam considered.
        #[arg(long)]
        cap: Option<usize>,
    },
    /// A structure mapping onto both `A1` and `A2`.
    Jpp {
        #[arg(long)]
        a1: PathBuf,
        #[arg(long)]
        a2: PathBuf,
        #[arg(long)]
        family: Family,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Cover of a structure by a member of `F0n` or `Fn`.
    Cover {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        family: Family,
        #[arg(long)]
        cap: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
pub enum SpiralCmd {
    /// The spiral S(p,q,r).
    Make {
        #[arg(short)]
        p: usize,
        #[arg(short)]
        q: usize,
        #[arg(short)]
        r: usize,
        #[arg(long)]
        dot: bool,
    },
    /// The covering map S(tp,q,tr) → S(p,q,r).
    Cover {
        #[arg(short)]
        t: usize,
        #[arg(short)]
        p: usize,
        #[arg(short)]
        q: usize,
        #[arg(short)]
        r: usize,
        #[arg(long)]
        dot: bool,
    },
    /// A union of spirals mapping onto one relation of a structure.
    DigraphCover {
        #[arg(long = "in")]
        input: PathBuf,
        /// Relation index, starting at 1.
        #[arg(long, default_value_t = 1)]
        relation: usize,
        #[arg(long)]
        dot: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum QpCmd {
    /// QP labelling of a spiral cover for a random λ.
    Spiral {
        #[arg(short)]
        p: usize,
        #[arg(short)]
        q: usize,
        #[arg(short)]
        r: usize,
        #[arg(long)]
        group: String,
        /// Winding number; defaults to the exponent of the group.
        #[arg(short)]
        t: Option<usize>,
        #[arg(long, default_value_t = 0)]
        x0: usize,
        #[arg(long)]
        alpha: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Surjective QP cover of a member of F0 for a random λ.
    Cover {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug)]
pub enum TransconjCmd {
    /// Build an instance, construct the conjugator and check it on every function.
    Demo {
        /// `z2-spiral`, `z2-transposition-spiral`, `z3-spiral`, `s3-spiral` or `z2-marked`.
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cap on the number of functions.
        #[arg(long)]
        cap: Option<usize>,
        /// Print Q with its μ labels as DOT instead of the transcript.
        #[arg(long)]
        dot: bool,
        /// Also write the instance as a certificate.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum TowerCmd {
    /// Write the task file of a scripted run over F^(1).
    Demo,
    /// Grow a tower by discharging the tasks of a task file.
    Grow {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        stages: usize,
        /// Initial size cap of each amalgamation search; doubled on retry.
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long, default_value_t = 6)]
        attempts: usize,
        /// Largest stage accepted.
        #[arg(long)]
        guard: Option<usize>,
        /// Write `stage_K.json` and `stage_K.dot` for every stage here.
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Also write the tower as a certificate.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli.command) {
        Ok(reply) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &reply.text).map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => {
                    print!("{}", reply.text);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if let Some(note) = reply.note {
                eprintln!("{note}");
            }
            ExitCode::from(reply.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
