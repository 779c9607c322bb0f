//! Critical market confidence.
//!
//! Two views of the same boundary: a per-neighbor closed form computed from
//! the initial weights (how much confidence keeps one neighboring stock
//! above its limit after a single-stock shock), and a bisection on the full
//! cascade for the confidence below which the market collapses.

use serde::Serialize;

use crate::contagion::{CascadeParams, CascadeWorkspace};
use crate::error::CriticalError;
use crate::network::BipartiteNetwork;
use crate::stats::{pearson, Correlation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeighborStatus {
    Normal,
    /// The raw value was negative: the target cannot fail at the first step
    /// even with zero confidence. The reported value is clamped to 0.
    CannotFail,
    /// Above 1: the target fails at the first step at any confidence.
    Unavoidable,
    /// Zero denominator; the value is NaN.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeighborCritical {
    pub value: f64,
    pub status: NeighborStatus,
}

impl NeighborCritical {
    fn classify(raw: f64) -> Self {
        if raw.is_nan() {
            Self {
                value: f64::NAN,
                status: NeighborStatus::Indeterminate,
            }
        } else if raw < 0.0 {
            Self {
                value: 0.0,
                status: NeighborStatus::CannotFail,
            }
        } else if raw > 1.0 {
            Self {
                value: raw,
                status: NeighborStatus::Unavoidable,
            }
        } else {
            Self {
                value: raw,
                status: NeighborStatus::Normal,
            }
        }
    }
}

/// Split of a target stock's initial value by whether its holders also
/// hold the shocked stock.
struct Exposure {
    total: f64,
    /// `Σ_{m∉L} w_{target,m}`
    outside: f64,
    /// `Σ_{m∈L} w_{target,m}`
    inside: f64,
    /// `Σ_{m∈L} (1 - w_{shock,m}/A_m) w_{target,m}`
    inside_liquid: f64,
    shared: usize,
}

fn exposure(net: &BipartiteNetwork, shock: usize, target: usize) -> Result<Exposure, CriticalError> {
    if shock == target {
        return Err(CriticalError::SameStock(shock));
    }
    let mut ex = Exposure {
        total: net.stock_value(target),
        outside: 0.0,
        inside: 0.0,
        inside_liquid: 0.0,
        shared: 0,
    };
    for e in net.stock_edges(target) {
        let m = net.edge_investor(e);
        let w = net.edge_weight(e);
        let w_shock = net.weight(shock, m);
        if w_shock > 0.0 {
            ex.shared += 1;
            ex.inside += w;
            ex.inside_liquid += (1.0 - w_shock / net.investor_value(m)) * w;
        } else {
            ex.outside += w;
        }
    }
    if ex.shared == 0 {
        return Err(CriticalError::NoCommonInvestor { shock, target });
    }
    Ok(ex)
}

// Written as (1-c)·(S/den) - out/den so a fully nested target, where den
// is S summed in the same order, gives exactly 1 - c.
fn ratio(c: f64, ex: &Exposure, den: f64) -> f64 {
    if den == 0.0 {
        return f64::NAN;
    }
    (1.0 - c) * (ex.total / den) - ex.outside / den
}

/// Confidence needed to keep `target` from failing one step after `shock`
/// fails, accounting for the liquidity the shocked position removes from
/// each common holder.
pub fn neighbor_alpha_c(
    net: &BipartiteNetwork,
    shock: usize,
    target: usize,
    c: f64,
) -> Result<NeighborCritical, CriticalError> {
    let ex = exposure(net, shock, target)?;
    Ok(NeighborCritical::classify(ratio(c, &ex, ex.inside_liquid)))
}

/// As [`neighbor_alpha_c`] but treating each shocked position as negligible
/// in its holder's portfolio. Exactly `1 - c` when every holder of the
/// target also holds the shock.
pub fn neighbor_alpha_c_simplified(
    net: &BipartiteNetwork,
    shock: usize,
    target: usize,
    c: f64,
) -> Result<NeighborCritical, CriticalError> {
    let ex = exposure(net, shock, target)?;
    Ok(NeighborCritical::classify(ratio(c, &ex, ex.inside)))
}

/// Per-shock critical confidence from the cascade bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum CriticalConfidence {
    Value(f64),
    /// The market collapses even at full confidence.
    AlwaysCollapses,
    /// The market survives even at zero confidence.
    NeverCollapses,
}

impl CriticalConfidence {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Value(v) => Some(*v),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Value(_) => "value",
            Self::AlwaysCollapses => "always-collapses",
            Self::NeverCollapses => "never-collapses",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BisectionSettings {
    /// Failed fraction at or above which the market counts as collapsed.
    pub collapse_threshold: f64,
    pub tol: f64,
    pub max_steps: Option<usize>,
}

impl Default for BisectionSettings {
    fn default() -> Self {
        Self {
            collapse_threshold: 0.5,
            tol: 1e-3,
            max_steps: None,
        }
    }
}

impl BisectionSettings {
    pub fn validate(&self) -> Result<(), CriticalError> {
        if !(self.collapse_threshold > 0.0 && self.collapse_threshold <= 1.0) {
            return Err(CriticalError::Threshold(self.collapse_threshold));
        }
        if !(self.tol > 0.0) {
            return Err(CriticalError::Tolerance(self.tol));
        }
        Ok(())
    }
}

fn params(alpha: f64, c: f64, settings: &BisectionSettings) -> CascadeParams {
    CascadeParams {
        alpha,
        price_limit: c,
        max_steps: settings.max_steps,
    }
}

/// Bisection for the confidence separating collapse from stability after
/// shocking `shocks`. Collapse is monotone non-increasing in confidence, so
/// the returned midpoint lies within `tol / 2` of the switch.
pub fn find_alpha_c_with(
    ws: &mut CascadeWorkspace<'_>,
    shocks: &[usize],
    c: f64,
    settings: &BisectionSettings,
) -> Result<CriticalConfidence, CriticalError> {
    settings.validate()?;
    let mut collapses = |alpha: f64| -> Result<bool, CriticalError> {
        let r = ws.run(shocks, &params(alpha, c, settings))?;
        Ok(r.final_failed_fraction >= settings.collapse_threshold)
    };
    if collapses(1.0)? {
        return Ok(CriticalConfidence::AlwaysCollapses);
    }
    if !collapses(0.0)? {
        return Ok(CriticalConfidence::NeverCollapses);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > settings.tol {
        let mid = 0.5 * (lo + hi);
        if collapses(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalConfidence::Value(0.5 * (lo + hi)))
}

pub fn find_alpha_c(
    net: &BipartiteNetwork,
    shock: usize,
    c: f64,
    settings: &BisectionSettings,
) -> Result<CriticalConfidence, CriticalError> {
    find_alpha_c_with(&mut CascadeWorkspace::new(net), &[shock], c, settings)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub c: f64,
    pub alpha: f64,
    pub shock: usize,
    pub failed_fraction: f64,
    pub collapsed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShockCritical {
    pub c: f64,
    pub shock: usize,
    pub alpha_c: CriticalConfidence,
}

/// Per price limit summary of the per-shock values. Sentinel outcomes are
/// counted and left out of the mean and max.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateCritical {
    pub c: f64,
    pub mean: Option<f64>,
    pub max: Option<f64>,
    pub n_values: usize,
    pub n_always: usize,
    pub n_never: usize,
}

impl AggregateCritical {
    pub fn from_values(c: f64, values: &[CriticalConfidence]) -> Self {
        let nums: Vec<f64> = values.iter().filter_map(CriticalConfidence::value).collect();
        let count = |k: CriticalConfidence| values.iter().filter(|v| **v == k).count();
        Self {
            c,
            mean: (!nums.is_empty()).then(|| nums.iter().sum::<f64>() / nums.len() as f64),
            max: nums.iter().copied().reduce(f64::max),
            n_values: nums.len(),
            n_always: count(CriticalConfidence::AlwaysCollapses),
            n_never: count(CriticalConfidence::NeverCollapses),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub grid: Vec<GridCell>,
    pub per_shock: Vec<ShockCritical>,
    pub aggregate: Vec<AggregateCritical>,
}

/// Phase-boundary sweep: for each price limit, bisects the critical
/// confidence of every shock in `shocks` and, when `alpha_grid` is given,
/// also records the outcome at each grid confidence.
pub fn sweep(
    net: &BipartiteNetwork,
    c_grid: &[f64],
    alpha_grid: &[f64],
    shocks: &[usize],
    settings: &BisectionSettings,
) -> Result<SweepResult, CriticalError> {
    settings.validate()?;
    let tasks: Vec<(f64, usize)> = c_grid
        .iter()
        .flat_map(|&c| shocks.iter().map(move |&s| (c, s)))
        .collect();
    let outcomes = crate::par::map_with(
        tasks,
        || CascadeWorkspace::new(net),
        |ws, (c, shock)| -> Result<(ShockCritical, Vec<GridCell>), CriticalError> {
            let mut cells = Vec::with_capacity(alpha_grid.len());
            for &alpha in alpha_grid {
                let r = ws.run(&[shock], &params(alpha, c, settings))?;
                cells.push(GridCell {
                    c,
                    alpha,
                    shock,
                    failed_fraction: r.final_failed_fraction,
                    collapsed: r.final_failed_fraction >= settings.collapse_threshold,
                });
            }
            let alpha_c = find_alpha_c_with(ws, &[shock], c, settings)?;
            Ok((ShockCritical { c, shock, alpha_c }, cells))
        },
    );
    let mut grid = Vec::new();
    let mut per_shock = Vec::new();
    for out in outcomes {
        let (sc, cells) = out?;
        per_shock.push(sc);
        grid.extend(cells);
    }
    let aggregate = c_grid
        .iter()
        .map(|&c| {
            let values: Vec<CriticalConfidence> = per_shock
                .iter()
                .filter(|p| p.c == c)
                .map(|p| p.alpha_c)
                .collect();
            AggregateCritical::from_values(c, &values)
        })
        .collect();
    Ok(SweepResult {
        grid,
        per_shock,
        aggregate,
    })
}

/// Visits every `(shock, target)` pair of distinct stocks sharing an
/// investor, with the target's inside/outside split and common-holder count.
fn for_each_neighbor_pair(net: &BipartiteNetwork, mut f: impl FnMut(usize, usize, &Exposure)) {
    let n = net.n_stocks();
    let mut holds_shock = vec![false; net.n_investors()];
    let mut stamp = vec![usize::MAX; n];
    let mut targets = Vec::new();
    for shock in 0..n {
        for m in net.holders(shock) {
            holds_shock[m] = true;
        }
        targets.clear();
        stamp[shock] = shock;
        for m in net.holders(shock) {
            for t in net.portfolio(m) {
                if stamp[t] != shock {
                    stamp[t] = shock;
                    targets.push(t);
                }
            }
        }
        targets.sort_unstable();
        for &t in &targets {
            let mut ex = Exposure {
                total: net.stock_value(t),
                outside: 0.0,
                inside: 0.0,
                inside_liquid: f64::NAN,
                shared: 0,
            };
            for e in net.stock_edges(t) {
                let w = net.edge_weight(e);
                if holds_shock[net.edge_investor(e)] {
                    ex.shared += 1;
                    ex.inside += w;
                } else {
                    ex.outside += w;
                }
            }
            f(shock, t, &ex);
        }
        for m in net.holders(shock) {
            holds_shock[m] = false;
        }
    }
}

/// Probability of each stock being a driving node: the fraction of all
/// single-stock shocks for which its simplified critical confidence sits
/// within `equality_tol` of `1 - c`.
pub fn driving_node_probability(net: &BipartiteNetwork, c: f64, equality_tol: f64) -> Vec<f64> {
    let n = net.n_stocks();
    let boundary = 1.0 - c;
    let mut hits = vec![0usize; n];
    for_each_neighbor_pair(net, |_, target, ex| {
        let v = ratio(c, ex, ex.inside);
        if (v - boundary).abs() <= equality_tol {
            hits[target] += 1;
        }
    });
    hits.into_iter().map(|h| h as f64 / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub center: f64,
    pub lo: f64,
    pub hi: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxAlphaHistogram {
    pub c: f64,
    /// Per shock, the largest simplified critical confidence over its
    /// projection neighbors; `None` for shocks without neighbors.
    pub per_shock_max: Vec<Option<f64>>,
    pub bins: Vec<HistogramBin>,
    /// Share of shocks (with neighbors) whose maximum is within `tol` of `1 - c`.
    pub fraction_at_boundary: f64,
    pub n_without_neighbors: usize,
}

/// Distribution over shocks of the neighbors' maximum simplified critical
/// confidence. `nbins` bins of width `1/(nbins+1)` are centred on
/// `k/(nbins+1)`, so the default 9 bins line up with a 0.1-spaced c-grid.
/// Values beyond the outer bins are counted in them.
pub fn max_alpha_ci_histogram(net: &BipartiteNetwork, c: f64, nbins: usize, tol: f64) -> MaxAlphaHistogram {
    let n = net.n_stocks();
    let mut per_shock_max: Vec<Option<f64>> = vec![None; n];
    for_each_neighbor_pair(net, |shock, _, ex| {
        let v = ratio(c, ex, ex.inside).max(0.0);
        let slot = &mut per_shock_max[shock];
        *slot = Some(slot.map_or(v, |cur| cur.max(v)));
    });
    let nbins = nbins.max(1);
    let width = 1.0 / (nbins + 1) as f64;
    let mut counts = vec![0usize; nbins];
    let mut at_boundary = 0usize;
    let mut with_neighbors = 0usize;
    for v in per_shock_max.iter().flatten() {
        with_neighbors += 1;
        let k = ((v / width).round() as isize - 1).clamp(0, nbins as isize - 1) as usize;
        counts[k] += 1;
        if (v - (1.0 - c)).abs() <= tol {
            at_boundary += 1;
        }
    }
    let denom = with_neighbors.max(1) as f64;
    let bins = counts
        .iter()
        .enumerate()
        .map(|(k, &cnt)| {
            let center = (k + 1) as f64 * width;
            HistogramBin {
                center,
                lo: center - width / 2.0,
                hi: center + width / 2.0,
                fraction: cnt as f64 / denom,
            }
        })
        .collect();
    MaxAlphaHistogram {
        c,
        per_shock_max,
        bins,
        fraction_at_boundary: at_boundary as f64 / denom,
        n_without_neighbors: n - with_neighbors,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeTiming {
    /// Mean failure step per stock over the shocks (other than itself) in
    /// which it fails; `None` if it never fails.
    pub tau_bar: Vec<Option<f64>>,
    pub failures: Vec<usize>,
    pub n_never_fail: usize,
    pub p_d: Vec<f64>,
    /// Pearson correlation of `tau_bar` with `p_d` over stocks that fail.
    pub correlation: Option<Correlation>,
}

/// Average failure step of each stock across all single-stock shocks and
/// its correlation with the driving-node probability.
pub fn average_cascade_steps(
    net: &BipartiteNetwork,
    c: f64,
    alpha: f64,
    max_steps: Option<usize>,
) -> Result<CascadeTiming, CriticalError> {
    let params = CascadeParams {
        alpha,
        price_limit: c,
        max_steps,
    };
    let results = crate::contagion::run_all_single_shocks(net, &params)?;
    let n = net.n_stocks();
    let mut sum = vec![0u64; n];
    let mut failures = vec![0usize; n];
    for r in &results {
        for (tau, stocks) in r.timeline.iter().enumerate().skip(1) {
            for &s in stocks {
                sum[s] += tau as u64;
                failures[s] += 1;
            }
        }
    }
    let tau_bar: Vec<Option<f64>> = (0..n)
        .map(|s| (failures[s] > 0).then(|| sum[s] as f64 / failures[s] as f64))
        .collect();
    let p_d = driving_node_probability(net, c, 0.0);
    let (xs, ys): (Vec<f64>, Vec<f64>) = tau_bar
        .iter()
        .zip(&p_d)
        .filter_map(|(t, p)| t.map(|t| (t, *p)))
        .unzip();
    let n_never_fail = n - xs.len();
    if n_never_fail > 0 {
        log::info!("{n_never_fail} stock(s) never fail and are excluded from tau_bar");
    }
    Ok(CascadeTiming {
        correlation: pearson(&xs, &ys),
        tau_bar,
        failures,
        n_never_fail,
        p_d,
    })
}
