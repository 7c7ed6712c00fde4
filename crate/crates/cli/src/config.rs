//! Run settings resolved from flags, an optional `key=value` file, and
//! defaults, in that order of precedence.

use std::collections::BTreeMap;
use std::path::Path;

use clap::Args;
use topobar::learn::{default_c_grid, default_sigma_grid};
use topobar::PanelMode;

use crate::CliError;

/// Pipeline flags shared by several subcommands. Unset flags fall back to
/// the config file, then to the defaults.
#[derive(Args, Clone, Debug, Default)]
pub struct PipelineArgs {
    /// Width of the healthy-tissue ring around the lesion, in pixels.
    #[arg(long)]
    pub border: Option<usize>,
    /// Number of border-distance slices.
    #[arg(long)]
    pub slices: Option<usize>,
    /// Death value for bars that never die.
    #[arg(long)]
    pub cap: Option<f64>,
    /// Panel layout: `2d` (sliced) or `1d` (intensity only).
    #[arg(long)]
    pub mode: Option<PanelMode>,
    /// Z-score feature columns before the SVM.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub standardize: Option<bool>,
    /// Comma-separated kernel widths; `2^k` terms are accepted.
    #[arg(long)]
    pub sigmas: Option<String>,
    /// Comma-separated SVM costs; `2^k` terms are accepted.
    #[arg(long)]
    pub cs: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub border: usize,
    pub slices: usize,
    pub cap: f64,
    pub mode: PanelMode,
    pub standardize: bool,
    pub sigmas: Vec<f64>,
    pub cs: Vec<f64>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            border: topobar::DEFAULT_BORDER_WIDTH,
            slices: topobar::DEFAULT_SLICES,
            cap: topobar::DEFAULT_CAP,
            mode: PanelMode::TwoD,
            standardize: false,
            sigmas: default_sigma_grid(),
            cs: default_c_grid(),
            seed: 0,
        }
    }
}

const KEYS: [&str; 8] = [
    "border",
    "slices",
    "cap",
    "mode",
    "standardize",
    "sigmas",
    "cs",
    "seed",
];

/// Parses `key=value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str, origin: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Input(format!("{origin}:{}: expected key=value", n + 1))
        })?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(CliError::Input(format!(
                "{origin}:{}: unknown key {k:?}",
                n + 1
            )));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    v.parse()
        .map_err(|e| CliError::Input(format!("bad value {v:?} for {key}: {e}")))
}

/// Parses `0.5,2^-3,8` style lists.
pub fn parse_grid(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for term in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let v = match term.split_once('^') {
            Some((base, exp)) => {
                let base: f64 = parse(key, base)?;
                let exp: i32 = parse(key, exp)?;
                base.powi(exp)
            }
            None => parse(key, term)?,
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::Input(format!("{key} values must be positive, got {term}")));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(CliError::Input(format!("{key} grid is empty")));
    }
    Ok(out)
}

impl RunConfig {
    /// Layers flags over the config file (if any) over the defaults.
    pub fn resolve(
        args: &PipelineArgs,
        seed: Option<u64>,
        config: Option<&Path>,
    ) -> Result<Self, CliError> {
        let file = match config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                parse_config_file(&text, &p.display().to_string())?
            }
            None => BTreeMap::new(),
        };
        let mut c = RunConfig::default();
        for (k, v) in &file {
            match k.as_str() {
                "border" => c.border = parse(k, v)?,
                "slices" => c.slices = parse(k, v)?,
                "cap" => c.cap = parse(k, v)?,
                "mode" => c.mode = parse(k, v)?,
                "standardize" => c.standardize = parse(k, v)?,
                "sigmas" => c.sigmas = parse_grid(k, v)?,
                "cs" => c.cs = parse_grid(k, v)?,
                "seed" => c.seed = parse(k, v)?,
                _ => unreachable!("keys checked while parsing"),
            }
        }
        if let Some(v) = args.border {
            c.border = v;
        }
        if let Some(v) = args.slices {
            c.slices = v;
        }
        if let Some(v) = args.cap {
            c.cap = v;
        }
        if let Some(v) = args.mode {
            c.mode = v;
        }
        if let Some(v) = args.standardize {
            c.standardize = v;
        }
        if let Some(v) = &args.sigmas {
            c.sigmas = parse_grid("sigmas", v)?;
        }
        if let Some(v) = &args.cs {
            c.cs = parse_grid("cs", v)?;
        }
        if let Some(v) = seed {
            c.seed = v;
        }
        if c.slices == 0 {
            return Err(CliError::Input("slices must be at least 1".into()));
        }
        if !(c.cap.is_finite() && c.cap >= 1.0) {
            return Err(CliError::Input(format!("cap must be at least 1, got {}", c.cap)));
        }
        Ok(c)
    }
}
