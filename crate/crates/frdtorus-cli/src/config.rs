//! Run configuration: defaults, flat key = value config files, and flag
//! precedence (flags over file over defaults). Validation aggregates every
//! problem into a single message.

use anyhow::{bail, Context};
use frdtorus::spectral::{QuadratureRule, SpectralParams};
use frdtorus::walk::BlockSchedule;
use frdtorus::lattice::TorusSpec;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub d: usize,
    pub l: u32,
    pub n: u32,
    pub alpha: f64,
    pub m2: f64,
    pub rel_tol: f64,
    pub schedule: Option<Vec<u64>>,
    pub coarse_r: usize,
    pub orders: Vec<u32>,
    pub m2_grid: Vec<f64>,
    pub big: bool,
    pub windows: bool,
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            d: 2,
            l: 3,
            n: 2,
            alpha: 1.5,
            m2: 1.0,
            rel_tol: 1e-9,
            schedule: None,
            coarse_r: 2,
            orders: vec![0, 1, 2],
            m2_grid: vec![0.2, 0.5, 1.0],
            big: false,
            windows: false,
            workers: None,
        }
    }
}

/// Optional overrides coming from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub d: Option<usize>,
    pub l: Option<u32>,
    pub n: Option<u32>,
    pub alpha: Option<f64>,
    pub m2: Option<f64>,
    pub rel_tol: Option<f64>,
    pub schedule: Option<Vec<u64>>,
    pub coarse_r: Option<usize>,
    pub orders: Option<Vec<u32>>,
    pub m2_grid: Option<Vec<f64>>,
    pub big: bool,
    pub windows: bool,
    pub workers: Option<usize>,
}

fn parse_list<T: std::str::FromStr>(s: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<T>()
                .map_err(|e| anyhow::anyhow!("bad list entry '{part}': {e}"))
        })
        .collect()
}

/// Parse a flat `key = value` config file (# starts a comment).
pub fn parse_config_file(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {} is not 'key = value': '{line}'", lineno + 1);
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

impl RunConfig {
    /// defaults <- config file <- command-line overrides
    pub fn resolve(
        file: Option<&BTreeMap<String, String>>,
        over: &Overrides,
    ) -> anyhow::Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(map) = file {
            for (key, value) in map {
                match key.as_str() {
                    "d" => cfg.d = value.parse().context("config key d")?,
                    "l" | "L" => cfg.l = value.parse().context("config key L")?,
                    "n" | "N" => cfg.n = value.parse().context("config key N")?,
                    "alpha" => cfg.alpha = value.parse().context("config key alpha")?,
                    "m2" => cfg.m2 = value.parse().context("config key m2")?,
                    "rel_tol" => cfg.rel_tol = value.parse().context("config key rel_tol")?,
                    "schedule" => cfg.schedule = Some(parse_list(value)?),
                    "coarse_r" => cfg.coarse_r = value.parse().context("config key coarse_r")?,
                    "orders" => cfg.orders = parse_list(value)?,
                    "m2_grid" => cfg.m2_grid = parse_list(value)?,
                    "big" => cfg.big = value.parse().context("config key big")?,
                    "windows" => cfg.windows = value.parse().context("config key windows")?,
                    "workers" => cfg.workers = Some(value.parse().context("config key workers")?),
                    other => bail!("unknown config key '{other}'"),
                }
            }
        }
        if let Some(v) = over.d {
            cfg.d = v;
        }
        if let Some(v) = over.l {
            cfg.l = v;
        }
        if let Some(v) = over.n {
            cfg.n = v;
        }
        if let Some(v) = over.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = over.m2 {
            cfg.m2 = v;
        }
        if let Some(v) = over.rel_tol {
            cfg.rel_tol = v;
        }
        if over.schedule.is_some() {
            cfg.schedule = over.schedule.clone();
        }
        if let Some(v) = over.coarse_r {
            cfg.coarse_r = v;
        }
        if let Some(v) = &over.orders {
            cfg.orders = v.clone();
        }
        if let Some(v) = &over.m2_grid {
            cfg.m2_grid = v.clone();
        }
        cfg.big |= over.big;
        cfg.windows |= over.windows;
        if over.workers.is_some() {
            cfg.workers = over.workers;
        } else if cfg.workers.is_none() {
            if let Ok(env) = std::env::var("FRDTORUS_WORKERS") {
                cfg.workers = Some(env.parse().context("FRDTORUS_WORKERS")?);
            }
        }
        Ok(cfg)
    }

    /// Validate everything at once; the error carries one aggregated
    /// message.
    pub fn validate(&self) -> anyhow::Result<(TorusSpec, SpectralParams, QuadratureRule, BlockSchedule)>
    {
        let mut problems = Vec::new();
        if self.d < 2 {
            problems.push(format!("d must be >= 2, got {}", self.d));
        }
        if self.l < 3 || self.l % 2 == 0 {
            problems.push(format!("L must be odd and >= 3, got {}", self.l));
        }
        if self.n < 2 {
            problems.push(format!("N must be >= 2, got {}", self.n));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            problems.push(format!(
                "alpha must lie in the open interval (0, 2), got {}",
                self.alpha
            ));
        }
        if !(self.m2 > 0.0) {
            problems.push(format!(
                "m2 must be positive (the torus resolvent is valid only when m != 0), got {}",
                self.m2
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1e-2) {
            problems.push(format!("rel_tol must lie in (0, 1e-2), got {}", self.rel_tol));
        }
        if self.coarse_r < 1 {
            problems.push("coarse factor r must be >= 1".into());
        }
        for &m2 in &self.m2_grid {
            if !(m2 > 0.0) {
                problems.push(format!(
                    "sweep m2 grid entries must be positive (valid only when m != 0), got {m2}"
                ));
            }
        }
        if !problems.is_empty() {
            bail!("invalid configuration: {}", problems.join("; "));
        }
        let spec = TorusSpec::new(self.d, self.l, self.n).map_err(|e| anyhow::anyhow!("{e}"))?;
        let params =
            SpectralParams::new(self.alpha, self.m2).map_err(|e| anyhow::anyhow!("{e}"))?;
        let rule = QuadratureRule::with_rel_tol(self.rel_tol);
        let schedule = match &self.schedule {
            Some(cuts) => BlockSchedule::new(cuts.clone()).map_err(|e| anyhow::anyhow!("{e}"))?,
            None => BlockSchedule::geometric(self.l, self.n),
        };
        if schedule.scales() != self.n as usize {
            bail!(
                "invalid configuration: schedule has {} scales but N = {}",
                schedule.scales(),
                self.n
            );
        }
        Ok((spec, params, rule, schedule))
    }
}

pub fn parse_list_f64(s: &str) -> anyhow::Result<Vec<f64>> {
    parse_list(s)
}

pub fn parse_list_u64(s: &str) -> anyhow::Result<Vec<u64>> {
    parse_list(s)
}

pub fn parse_list_u32(s: &str) -> anyhow::Result<Vec<u32>> {
    parse_list(s)
}
