//! Run configuration: flags layered over an optional JSON file.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Json,
    Svg,
    Grid,
}

/// Fields left as `None` by both flags and file take command defaults.
macro_rules! layered {
    ($t:ident { $($f:ident),* $(,)? }) => {
        impl $t {
            pub const KEYS: &'static [&'static str] = &[$(stringify!($f)),*];

            /// Flags win; the file fills what the flags left unset.
            pub fn overlay(self, file: Self) -> Self {
                $t { $($f: self.$f.or(file.$f)),* }
            }
        }
    };
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Common {
    /// Hexagon side lengths.
    #[arg(long, num_args = 3, value_names = ["A", "B", "C"])]
    pub sides: Option<Vec<i64>>,
    /// Regular hexagon (N, N, N).
    #[arg(long)]
    pub n: Option<i64>,
    /// Volume tilt.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// JSON file with any of the options above or the command's own.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

layered!(Common { sides, n, q, seed, replicas, out, format, tol, config });

impl Common {
    pub fn sides(&self) -> Result<(i64, i64, i64), CliError> {
        match (&self.sides, self.n) {
            (Some(_), Some(_)) => Err(CliError::Usage("give either --sides or --n, not both".into())),
            (Some(s), None) if s.len() == 3 => Ok((s[0], s[1], s[2])),
            (Some(s), None) => Err(CliError::Usage(format!("--sides takes three values, got {}", s.len()))),
            (None, Some(n)) => Ok((n, n, n)),
            (None, None) => Err(CliError::Usage("missing --sides A B C or --n N".into())),
        }
    }

    pub fn format_or(&self, default: Format, allowed: &[Format]) -> Result<Format, CliError> {
        let f = self.format.unwrap_or(default);
        if f != default && !allowed.contains(&f) {
            return Err(CliError::Usage(format!("format {f:?} not supported by this command")));
        }
        Ok(f)
    }
}

/// Command-specific option sets.
pub trait Layered: Sized + Default + Serialize + for<'de> Deserialize<'de> {
    const KEYS: &'static [&'static str];
    fn overlay(self, file: Self) -> Self;
}

macro_rules! options {
    ($t:ident { $($(#[$m:meta])* $f:ident : $ty:ty),* $(,)? }) => {
        #[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
        #[serde(default)]
        pub struct $t { $($(#[$m])* pub $f: Option<$ty>),* }
        layered!($t { $($f),* });
        impl Layered for $t {
            const KEYS: &'static [&'static str] = $t::KEYS;
            fn overlay(self, file: Self) -> Self { $t::overlay(self, file) }
        }
    };
}

options!(EnumerateOpts {
    /// Abort when the state count exceeds this.
    #[arg(long)]
    limit: usize,
});

options!(SampleOpts {
    /// Run the chain from the minimal tiling for this long instead of CFTP.
    #[arg(long)]
    horizon: f64,
    #[arg(long)]
    max_epochs: u32,
});

options!(MixOpts {
    /// Coalescence sweep over these N; exact spectrum when absent.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    sizes: Vec<i64>,
    /// Mixing threshold ε.
    #[arg(long)]
    eps: f64,
    /// Coalescence cap as a multiple of N².
    #[arg(long)]
    cap: f64,
});

options!(ShapeOpts {
    /// Grid points per unit length in the field export.
    #[arg(long)]
    grid: usize,
    #[arg(long)]
    arctic_points: usize,
    #[arg(long, num_args = 0, default_missing_value = "true")]
    conic_check: bool,
    #[arg(long, num_args = 0, default_missing_value = "true")]
    edge_check: bool,
});

options!(VerifyOpts {
    #[arg(long)]
    suite: String,
    /// Subset of criterion ids.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    criteria: Vec<u32>,
});

options!(RenderOpts {
    /// Height-grid file to draw; a fresh exact sample when absent.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, num_args = 0, default_missing_value = "true")]
    arctic: bool,
    #[arg(long, num_args = 0, default_missing_value = "true")]
    analytic_lines: bool,
    #[arg(long, num_args = 0, default_missing_value = "true")]
    discrete_lines: bool,
    /// Lattice spacing in pixels.
    #[arg(long)]
    unit: f64,
});

fn read_file(path: &Option<PathBuf>) -> Result<Map<String, Value>, CliError> {
    let Some(path) = path else { return Ok(Map::new()) };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::Usage(format!("config {}: expected a JSON object", path.display()))),
        Err(e) => Err(CliError::Usage(format!("config {}: {e}", path.display()))),
    }
}

/// Merge flags with the `--config` file. Unknown keys are rejected.
pub fn resolve<T: Layered>(common: Common, opts: T) -> Result<(Common, T), CliError> {
    let file = read_file(&common.config)?;
    if let Some(k) = file.keys().find(|k| {
        let k = k.as_str();
        k == "config" || (!Common::KEYS.contains(&k) && !T::KEYS.contains(&k))
    }) {
        return Err(CliError::Usage(format!("unknown config key {k:?}")));
    }
    let value = Value::Object(file);
    let bad = |e: serde_json::Error| CliError::Usage(format!("invalid config: {e}"));
    let fc: Common = serde_json::from_value(value.clone()).map_err(bad)?;
    let fo: T = serde_json::from_value(value).map_err(bad)?;
    Ok((common.overlay(fc), opts.overlay(fo)))
}

/// The effective configuration, echoed into artifacts.
pub fn echo(command: &str, common: &Common, opts: &impl Serialize) -> Value {
    let mut m = Map::new();
    m.insert("command".into(), Value::String(command.into()));
    for v in [serde_json::to_value(common), serde_json::to_value(opts)].into_iter().flatten() {
        if let Value::Object(o) = v {
            m.extend(o.into_iter().filter(|(_, v)| !v.is_null()));
        }
    }
    Value::Object(m)
}
