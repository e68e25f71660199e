//! Run configuration: command-line flags override a flat `key = value`
//! config file, which overrides built-in defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};

use super::output::Format;
use crate::gravity::glm::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::gravity::{KVariant, DEFAULT_DISTANCE_EXPONENT};
use crate::ingest::DEFAULT_MIN_CONTROL_PCT;
use crate::network::WeightMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KVariantArg {
    Paper,
    TotalPreserving,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    Revenue,
    Count,
}

/// Flags shared by every subcommand. All are optional so that unset flags
/// can fall back to the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Flat `key = value` config file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Trade flows CSV (year,origin,dest,sector,value).
    #[arg(long, global = true, value_name = "FILE")]
    pub trade: Option<PathBuf>,
    /// Cities CSV (city_id,name,country,lat,lon,population).
    #[arg(long, global = true, value_name = "FILE")]
    pub cities: Option<PathBuf>,
    /// GDP CSV (country,year,gdp).
    #[arg(long, global = true, value_name = "FILE")]
    pub gdp: Option<PathBuf>,
    /// Capital cities CSV (country,city_id); defaults to the most populous city.
    #[arg(long, global = true, value_name = "FILE")]
    pub capitals: Option<PathBuf>,
    /// Ownership links CSV.
    #[arg(long, global = true, value_name = "FILE")]
    pub ownership: Option<PathBuf>,
    /// Trade sector scheme: `trade10`, `fdi9` or a raw_code,group CSV.
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    /// Sector scheme applied to ownership links.
    #[arg(long, global = true)]
    pub fdi_scheme: Option<String>,
    /// Comma-separated years.
    #[arg(long, global = true)]
    pub years: Option<String>,
    /// Distance exponent of the theoretical flow.
    #[arg(long, global = true)]
    pub a: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub k_variant: Option<KVariantArg>,
    /// Treat pairs without a flow record as zero flows.
    #[arg(long, global = true)]
    pub assume_zero: bool,
    /// Exit with status 2 when any gravity fit fails or does not converge.
    #[arg(long, global = true)]
    pub strict: bool,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Number of CA axes to keep.
    #[arg(long, global = true)]
    pub axes: Option<usize>,
    /// Number of clusters cut from the Ward tree.
    #[arg(long, global = true)]
    pub clusters: Option<usize>,
    /// Two 1-based axes for the SVG scatter, e.g. `1,2`.
    #[arg(long, global = true)]
    pub plot_axes: Option<String>,
    /// Minimum ownership percentage for a controlling link.
    #[arg(long, global = true)]
    pub min_control_pct: Option<f64>,
    /// Minimum share of a city's revenue for a sector to count toward diversity.
    #[arg(long, global = true)]
    pub min_share: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub weights: Option<WeightArg>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Comma-separated output formats: csv, json, svg.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Worker threads for independent analyses.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for `synth`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub trade: Option<PathBuf>,
    pub cities: Option<PathBuf>,
    pub gdp: Option<PathBuf>,
    pub capitals: Option<PathBuf>,
    pub ownership: Option<PathBuf>,
    pub scheme: String,
    pub fdi_scheme: String,
    /// Empty means "every year available".
    pub years: Vec<i32>,
    pub a: f64,
    pub k_variant: KVariant,
    pub assume_zero: bool,
    pub strict: bool,
    pub tol: f64,
    pub max_iter: usize,
    pub axes: usize,
    pub clusters: usize,
    pub plot_axes: (usize, usize),
    pub min_control_pct: f64,
    pub min_share: f64,
    pub weights: WeightMode,
    pub out: PathBuf,
    pub formats: BTreeSet<Format>,
    pub jobs: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            trade: None,
            cities: None,
            gdp: None,
            capitals: None,
            ownership: None,
            scheme: "trade10".into(),
            fdi_scheme: "fdi9".into(),
            years: Vec::new(),
            a: DEFAULT_DISTANCE_EXPONENT,
            k_variant: KVariant::Paper,
            assume_zero: false,
            strict: false,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            axes: 3,
            clusters: 4,
            plot_axes: (1, 2),
            min_control_pct: DEFAULT_MIN_CONTROL_PCT,
            min_share: 0.0,
            weights: WeightMode::Revenue,
            out: PathBuf::from("out"),
            formats: [Format::Csv, Format::Json].into_iter().collect(),
            jobs: 1,
            seed: 7,
        }
    }
}

const KEYS: [&str; 25] = [
    "trade",
    "cities",
    "gdp",
    "capitals",
    "ownership",
    "scheme",
    "fdi-scheme",
    "years",
    "a",
    "k-variant",
    "assume-zero",
    "strict",
    "tol",
    "max-iter",
    "axes",
    "clusters",
    "plot-axes",
    "min-control-pct",
    "min-share",
    "weights",
    "out",
    "format",
    "jobs",
    "seed",
    "config",
];

/// Parses `key = value` lines. `#` starts a comment line; keys use the long
/// flag names (underscores are accepted for dashes).
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) || key == "config" {
            return Err(format!("line {}: unknown key `{}`", i + 1, k.trim()));
        }
        let value = v.trim().trim_matches('"').to_string();
        if out.insert(key, value).is_some() {
            return Err(format!("line {}: key `{}` set twice", i + 1, k.trim()));
        }
    }
    Ok(out)
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse()
        .map_err(|_| format!("invalid value `{v}` for `{key}`"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("invalid value `{v}` for `{key}`")),
    }
}

pub fn parse_years(v: &str) -> Result<Vec<i32>, String> {
    let mut years: Vec<i32> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse("years", s))
        .collect::<Result<_, _>>()?;
    years.sort_unstable();
    years.dedup();
    if years.is_empty() {
        return Err("`years` is empty".into());
    }
    Ok(years)
}

fn parse_plot_axes(v: &str) -> Result<(usize, usize), String> {
    let parts: Vec<usize> = v
        .split(',')
        .map(|s| parse("plot-axes", s.trim()))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y] if x >= 1 && y >= 1 && x != y => Ok((x, y)),
        _ => Err(format!(
            "`plot-axes` needs two distinct 1-based axes, got `{v}`"
        )),
    }
}

impl RunConfig {
    /// Applies config-file values, then flags, over the defaults. Relative
    /// paths in the config file are taken relative to the file's directory.
    pub fn resolve(
        flags: &Flags,
        file: &BTreeMap<String, String>,
        base: Option<&Path>,
    ) -> Result<Self, String> {
        let mut c = RunConfig::default();
        let path = |v: &str| match base {
            Some(b) if Path::new(v).is_relative() => b.join(v),
            _ => PathBuf::from(v),
        };
        for (key, v) in file {
            match key.as_str() {
                "trade" => c.trade = Some(path(v)),
                "cities" => c.cities = Some(path(v)),
                "gdp" => c.gdp = Some(path(v)),
                "capitals" => c.capitals = Some(path(v)),
                "ownership" => c.ownership = Some(path(v)),
                "scheme" => c.scheme = v.clone(),
                "fdi-scheme" => c.fdi_scheme = v.clone(),
                "years" => c.years = parse_years(v)?,
                "a" => c.a = parse(key, v)?,
                "k-variant" => c.k_variant = to_k(KVariantArg::from_str(v, true)?),
                "assume-zero" => c.assume_zero = parse_bool(key, v)?,
                "strict" => c.strict = parse_bool(key, v)?,
                "tol" => c.tol = parse(key, v)?,
                "max-iter" => c.max_iter = parse(key, v)?,
                "axes" => c.axes = parse(key, v)?,
                "clusters" => c.clusters = parse(key, v)?,
                "plot-axes" => c.plot_axes = parse_plot_axes(v)?,
                "min-control-pct" => c.min_control_pct = parse(key, v)?,
                "min-share" => c.min_share = parse(key, v)?,
                "weights" => c.weights = to_w(WeightArg::from_str(v, true)?),
                "out" => c.out = path(v),
                "format" => c.formats = Format::parse_list(v)?,
                "jobs" => c.jobs = parse(key, v)?,
                "seed" => c.seed = parse(key, v)?,
                _ => return Err(format!("unknown key `{key}`")),
            }
        }

        macro_rules! flag {
            ($field:ident) => {
                if let Some(v) = &flags.$field {
                    c.$field = v.clone().into();
                }
            };
        }
        flag!(trade);
        flag!(cities);
        flag!(gdp);
        flag!(capitals);
        flag!(ownership);
        flag!(scheme);
        flag!(fdi_scheme);
        flag!(a);
        flag!(tol);
        flag!(max_iter);
        flag!(axes);
        flag!(clusters);
        flag!(min_control_pct);
        flag!(min_share);
        flag!(out);
        flag!(jobs);
        flag!(seed);
        if let Some(v) = &flags.years {
            c.years = parse_years(v)?;
        }
        if let Some(v) = flags.k_variant {
            c.k_variant = to_k(v);
        }
        if let Some(v) = flags.weights {
            c.weights = to_w(v);
        }
        if let Some(v) = &flags.format {
            c.formats = Format::parse_list(v)?;
        }
        if let Some(v) = &flags.plot_axes {
            c.plot_axes = parse_plot_axes(v)?;
        }
        c.assume_zero |= flags.assume_zero;
        c.strict |= flags.strict;
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> Result<(), String> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(format!("`a` must be positive, got {}", self.a));
        }
        if !(self.tol > 0.0) {
            return Err(format!("`tol` must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return Err("`max-iter` must be at least 1".into());
        }
        if self.axes == 0 {
            return Err("`axes` must be at least 1".into());
        }
        if self.clusters == 0 {
            return Err("`clusters` must be at least 1".into());
        }
        if !(self.min_control_pct > 0.0 && self.min_control_pct <= 100.0) {
            return Err(format!(
                "`min-control-pct` must lie in (0, 100], got {}",
                self.min_control_pct
            ));
        }
        if !(0.0..1.0).contains(&self.min_share) {
            return Err(format!(
                "`min-share` must lie in [0, 1), got {}",
                self.min_share
            ));
        }
        if self.jobs == 0 {
            return Err("`jobs` must be at least 1".into());
        }
        for (name, p) in [
            ("trade", &self.trade),
            ("cities", &self.cities),
            ("gdp", &self.gdp),
            ("capitals", &self.capitals),
            ("ownership", &self.ownership),
        ] {
            if p.as_ref().is_some_and(|p| p.as_os_str().is_empty()) {
                return Err(format!("`{name}` path is empty"));
            }
        }
        Ok(())
    }
}

fn to_k(v: KVariantArg) -> KVariant {
    match v {
        KVariantArg::Paper => KVariant::Paper,
        KVariantArg::TotalPreserving => KVariant::TotalPreserving,
    }
}

fn to_w(v: WeightArg) -> WeightMode {
    match v {
        WeightArg::Revenue => WeightMode::Revenue,
        WeightArg::Count => WeightMode::Count,
    }
}
