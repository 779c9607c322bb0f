//! Run configuration: a JSON file merged with command-line flags, flags
//! taking precedence.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use limitcascade::critical::BisectionSettings;
use limitcascade::metrics::KCoreGraph;
use limitcascade::waves::Sessions;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    /// Holdings CSV: investor_id,stock_id,market_value.
    #[arg(long, global = true)]
    pub holdings: Option<PathBuf>,
    /// Fund to management-company mapping CSV: fund_id,company_id.
    #[arg(long, global = true)]
    pub mapping: Option<PathBuf>,
    /// Limit-down events CSV: timestamp,stock_id.
    #[arg(long, global = true)]
    pub events: Option<PathBuf>,
    /// Price limits as lo:hi:step.
    #[arg(long, global = true)]
    pub c_grid: Option<String>,
    /// Single price limit; overrides --c-grid.
    #[arg(long, global = true)]
    pub c: Option<f64>,
    /// Confidence grid as lo:hi:step.
    #[arg(long, global = true)]
    pub alpha_grid: Option<String>,
    /// Single confidence; overrides --alpha-grid.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub collapse_threshold: Option<f64>,
    /// Bisection tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_steps: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Comma-separated rewiring fractions.
    #[arg(long, global = true)]
    pub p_list: Option<String>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_kcore_graph)]
    pub kcore_graph: Option<KCoreGraph>,
    /// Comma-separated shocked stock ids.
    #[arg(long, global = true)]
    pub shock: Option<String>,
    /// Trading sessions, e.g. 09:30-11:30,13:00-15:00.
    #[arg(long, global = true)]
    pub sessions: Option<String>,
    /// Empty minutes allowed inside a wave.
    #[arg(long, global = true)]
    pub gap_tolerance: Option<u32>,
    /// Bucket width in minutes for event k-core trajectories.
    #[arg(long, global = true)]
    pub bucket_minutes: Option<u32>,
    /// Tolerance for the driving-node equality test.
    #[arg(long, global = true)]
    pub equality_tol: Option<f64>,
    /// Bins of the neighbor-maximum histogram.
    #[arg(long, global = true)]
    pub bins: Option<usize>,
}

fn parse_kcore_graph(s: &str) -> Result<KCoreGraph, String> {
    match s {
        "projection" => Ok(KCoreGraph::Projection),
        "bipartite" => Ok(KCoreGraph::Bipartite),
        other => Err(format!("expected projection or bipartite, got {other:?}")),
    }
}

macro_rules! overlay {
    ($flags:expr, $file:expr, $($field:ident),+) => {
        RunConfig { $($field: $flags.$field.or($file.$field)),+ }
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Field-wise merge, `self` winning over `file`.
    pub fn over(self, file: RunConfig) -> RunConfig {
        overlay!(
            self, file, holdings, mapping, events, c_grid, c, alpha_grid, alpha, collapse_threshold, tol, max_steps,
            seed, trials, p_list, threads, out_dir, kcore_graph, shock, sessions, gap_tolerance, bucket_minutes,
            equality_tol, bins
        )
    }

    pub fn holdings_path(&self) -> Result<&Path> {
        match &self.holdings {
            Some(p) => Ok(p),
            None => bail!("--holdings is required"),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn c_values(&self, default: &str) -> Result<Vec<f64>> {
        let values = match (self.c, &self.c_grid) {
            (Some(c), _) => vec![c],
            (None, Some(g)) => parse_grid(g)?,
            (None, None) => parse_grid(default)?,
        };
        for &c in &values {
            ensure!(c > 0.0 && c < 1.0, "price limit {c} outside (0, 1)");
        }
        Ok(values)
    }

    pub fn alpha_values(&self) -> Result<Vec<f64>> {
        let values = match (self.alpha, &self.alpha_grid) {
            (Some(a), _) => vec![a],
            (None, Some(g)) => parse_grid(g)?,
            (None, None) => Vec::new(),
        };
        for &a in &values {
            ensure!((0.0..=1.0).contains(&a), "confidence {a} outside [0, 1]");
        }
        Ok(values)
    }

    pub fn bisection(&self) -> Result<BisectionSettings> {
        let d = BisectionSettings::default();
        let s = BisectionSettings {
            collapse_threshold: self.collapse_threshold.unwrap_or(d.collapse_threshold),
            tol: self.tol.unwrap_or(d.tol),
            max_steps: self.max_steps,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn p_values(&self) -> Result<Vec<f64>> {
        let text = self.p_list.as_deref().unwrap_or("0,0.25,0.5,0.75,1");
        let values = parse_list(text)?;
        for &p in &values {
            ensure!((0.0..=1.0).contains(&p), "rewiring fraction {p} outside [0, 1]");
        }
        Ok(values)
    }

    pub fn sessions(&self) -> Result<Sessions> {
        Ok(match &self.sessions {
            Some(s) => Sessions::parse(s)?,
            None => Sessions::default(),
        })
    }

    pub fn shock_ids(&self) -> Vec<String> {
        self.shock
            .as_deref()
            .map(|s| s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect())
            .unwrap_or_default()
    }
}

fn round_grid(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Parses `lo:hi:step` into an inclusive grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    if parts.len() == 1 {
        return Ok(vec![parts[0].parse().with_context(|| format!("bad grid {spec:?}"))?]);
    }
    ensure!(parts.len() == 3, "grid must be lo:hi:step, got {spec:?}");
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad grid {spec:?}"))?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    ensure!(step > 0.0 && hi >= lo, "grid {spec:?} is empty");
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| round_grid(lo + k as f64 * step)).collect())
}

pub fn parse_list(spec: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("bad number {s:?}")))
        .collect::<Result<_>>()?;
    ensure!(!values.is_empty(), "empty list");
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_inclusive_and_clean() {
        let g = parse_grid("0.1:0.9:0.1").unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[2], 0.3);
        assert_eq!(g[8], 0.9);
        assert_eq!(parse_grid("0.5").unwrap(), vec![0.5]);
        assert!(parse_grid("0.9:0.1:0.1").is_err());
        assert!(parse_grid("a:b:c").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let file = RunConfig {
            seed: Some(1),
            trials: Some(5),
            ..Default::default()
        };
        let flags = RunConfig {
            seed: Some(2),
            ..Default::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.seed, Some(2));
        assert_eq!(merged.trials, Some(5));
    }

    #[test]
    fn config_json_round_trip() {
        let cfg: RunConfig = serde_json::from_str(r#"{"c-grid": "0.1:0.3:0.1", "kcore-graph": "bipartite"}"#).unwrap();
        assert_eq!(cfg.c_values("0.5").unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(cfg.kcore_graph, Some(KCoreGraph::Bipartite));
        assert!(serde_json::from_str::<RunConfig>(r#"{"sead": 1}"#).is_err());
    }
}
