//! Plain-Rust side of the browser demo; the exported functions in the crate
//! root only add JSON encoding.

use limitcascade::critical::{driving_node_probability, find_alpha_c, sweep, BisectionSettings};
use limitcascade::metrics::{average_nestedness, branching, k_core_index};
use limitcascade::stats::pearson;
use limitcascade::synth::{random_bipartite, CorePeriphery, NestedMarket};
use limitcascade::waves::{cascade_failures, kcore_trajectory};
use limitcascade::{run_cascade, stock_projection, BipartiteNetwork, CascadeParams};
use serde::Serialize;

pub fn market(kind: &str, seed: u32) -> Result<BipartiteNetwork, String> {
    match kind {
        "nested" => Ok(NestedMarket {
            n_stocks: 120,
            n_investors: 15,
            n_popular: 20,
            ..Default::default()
        }
        .build(seed.into())),
        "random" => Ok(random_bipartite(120, 15, 900, seed.into())),
        "core-periphery" => Ok(CorePeriphery::default().build()),
        other => Err(format!("unknown market {other:?}")),
    }
}

#[derive(Debug, Serialize)]
pub struct StepView {
    pub step: usize,
    pub failed: usize,
    pub mean_k_core: f64,
}

#[derive(Debug, Serialize)]
pub struct CascadeView {
    pub n_stocks: usize,
    pub shock: String,
    pub steps: usize,
    pub final_failed_fraction: f64,
    pub surviving_market_value: f64,
    pub per_step: Vec<StepView>,
    /// Critical confidence of this shock at this price limit, if finite.
    pub alpha_c: Option<f64>,
}

pub fn cascade(kind: &str, seed: u32, shock: usize, alpha: f64, c: f64) -> Result<CascadeView, String> {
    let net = market(kind, seed)?;
    let shock = shock % net.n_stocks();
    let result = run_cascade(&net, &[shock], &CascadeParams::new(alpha, c)).map_err(|e| e.to_string())?;
    let cores = k_core_index(&stock_projection(&net));
    let per_step = kcore_trajectory(&cascade_failures(&result), &cores)
        .into_iter()
        .map(|(step, s)| StepView {
            step,
            failed: s.count,
            mean_k_core: s.mean,
        })
        .collect();
    let alpha_c = find_alpha_c(&net, shock, c, &BisectionSettings::default())
        .map_err(|e| e.to_string())?
        .value();
    Ok(CascadeView {
        n_stocks: net.n_stocks(),
        shock: net.stock_id(shock).to_string(),
        steps: result.steps,
        final_failed_fraction: result.final_failed_fraction,
        surviving_market_value: result.surviving_market_value,
        per_step,
        alpha_c,
    })
}

#[derive(Debug, Serialize)]
pub struct BoundaryView {
    pub c: Vec<f64>,
    pub mean_alpha_c: Vec<Option<f64>>,
    pub max_alpha_c: Vec<Option<f64>>,
}

/// Mean and max critical confidence over every third shock.
pub fn boundary(kind: &str, seed: u32) -> Result<BoundaryView, String> {
    let net = market(kind, seed)?;
    let cs: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let shocks: Vec<usize> = (0..net.n_stocks()).step_by(3).collect();
    let result = sweep(&net, &cs, &[], &shocks, &BisectionSettings::default()).map_err(|e| e.to_string())?;
    Ok(BoundaryView {
        c: cs,
        mean_alpha_c: result.aggregate.iter().map(|a| a.mean).collect(),
        max_alpha_c: result.aggregate.iter().map(|a| a.max).collect(),
    })
}

#[derive(Debug, Serialize)]
pub struct DrivingPoint {
    pub stock: String,
    pub branching: f64,
    pub p_d: f64,
    pub average_nestedness: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct DrivingView {
    pub points: Vec<DrivingPoint>,
    /// Pearson r of P_D against branching over fully nested stocks.
    pub nested_r: Option<f64>,
}

pub fn driving_nodes(kind: &str, seed: u32, c: f64) -> Result<DrivingView, String> {
    let net = market(kind, seed)?;
    let g = stock_projection(&net);
    let p_d = driving_node_probability(&net, c, 0.0);
    let points: Vec<DrivingPoint> = (0..net.n_stocks())
        .map(|s| DrivingPoint {
            stock: net.stock_id(s).to_string(),
            branching: branching(&net, s),
            p_d: p_d[s],
            average_nestedness: average_nestedness(&net, &g, s),
        })
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.average_nestedness == Some(1.0))
        .map(|p| (p.branching, p.p_d))
        .unzip();
    Ok(DrivingView {
        nested_r: pearson(&x, &y).map(|c| c.r),
        points,
    })
}
