//! Command-line front end for the hexmix library.

pub mod commands;
pub mod config;
pub mod render;

use std::ffi::OsString;
use std::io::Write;

use clap::{CommandFactory, Parser, Subcommand};

use config::{Common, EnumerateOpts, MixOpts, RenderOpts, SampleOpts, ShapeOpts, VerifyOpts};

/// Build identifier embedded in every artifact.
pub fn build_id() -> String {
    format!("hexmix {} ({})", env!("CARGO_PKG_VERSION"), env!("HEXMIX_BUILD"))
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit code 2 with usage text.
    Usage(String),
    Core(hexmix::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<hexmix::Error> for CliError {
    fn from(e: hexmix::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Parser, Debug)]
#[command(name = "hexmix", version, about = "Lozenge tilings of hexagons: exact sampling, mixing and limit shapes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Count tilings by exhaustive search and by the product formula.
    Enumerate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: EnumerateOpts,
    },
    /// Exact (CFTP) or long-run samples.
    Sample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: SampleOpts,
    },
    /// Exact spectrum and mixing time, or a coalescence sweep.
    Mix {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: MixOpts,
    },
    /// Limit-shape fields, arctic curve and scaling checks.
    Shape {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: ShapeOpts,
    },
    /// Run the acceptance battery.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: VerifyOpts,
    },
    /// Draw a tiling as SVG.
    Render {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: RenderOpts,
    },
}

/// Outcome of a command: whether its assertions held.
pub type Verdict = Result<bool, CliError>;

pub fn dispatch(cmd: Command) -> Verdict {
    match cmd {
        Command::Enumerate { common, opts } => commands::enumerate(common, opts),
        Command::Sample { common, opts } => commands::sample(common, opts),
        Command::Mix { common, opts } => commands::mix(common, opts),
        Command::Shape { common, opts } => commands::shape(common, opts),
        Command::Verify { common, opts } => commands::verify(common, opts),
        Command::Render { common, opts } => commands::render(common, opts),
    }
}

/// Parse `argv`, run, and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(CliError::Usage(m)) => {
            let mut err = std::io::stderr();
            let _ = writeln!(err, "error: {m}\n\n{}", Cli::command().render_usage());
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
