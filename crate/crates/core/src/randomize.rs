//! Partial edge randomization and the critical-confidence slope it yields.

use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::contagion::CascadeWorkspace;
use crate::critical::{find_alpha_c_with, AggregateCritical, BisectionSettings, CriticalConfidence};
use crate::error::RewireError;
use crate::network::BipartiteNetwork;
use crate::stats::{linear_fit, LineFit};

/// Weight given to every edge of a rewired network.
pub const REWIRED_WEIGHT: f64 = 1.0;

/// Mean critical confidences below this are left out of the line fit.
pub const FIT_FLOOR: f64 = 0.02;

const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewirePlan {
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
}

impl RewirePlan {
    pub fn validate(&self) -> Result<(), RewireError> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(RewireError::Fraction(self.p));
        }
        if self.trials == 0 {
            return Err(RewireError::Trials);
        }
        Ok(())
    }
}

/// Generator for one `(p, trial)` cell. Each cell gets its own ChaCha
/// stream, so results do not depend on how trials are scheduled.
pub fn trial_rng(seed: u64, p_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((p_index as u64) << 32) | trial as u64);
    rng
}

/// Deletes `floor(p * E)` uniformly chosen edges, then adds the same number
/// of new stock-investor edges uniformly among unoccupied pairs. All output
/// weights are [`REWIRED_WEIGHT`]. Draws that would leave a node without
/// edges are rejected and redrawn.
pub fn partial_rewire_with<R: Rng>(
    net: &BipartiteNetwork,
    p: f64,
    rng: &mut R,
) -> Result<BipartiteNetwork, RewireError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(RewireError::Fraction(p));
    }
    let ns = net.n_stocks();
    let nm = net.n_investors();
    let n_edges = net.n_edges();
    let k = (p * n_edges as f64).floor() as usize;
    let total_pairs = ns * nm;
    let free = total_pairs - (n_edges - k);
    if k > free {
        return Err(RewireError::TooDense { needed: k, free });
    }

    for _ in 0..MAX_ATTEMPTS {
        let mut removed = vec![false; n_edges];
        for e in index::sample(rng, n_edges, k) {
            removed[e] = true;
        }
        let mut occupied: HashSet<usize> = HashSet::with_capacity(n_edges);
        let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(n_edges);
        for (e, (s, m, _)) in net.edges().enumerate() {
            if !removed[e] {
                occupied.insert(s * nm + m);
                edges.push((s, m, REWIRED_WEIGHT));
            }
        }
        if 2 * k > free {
            let open: Vec<usize> = (0..total_pairs).filter(|key| !occupied.contains(key)).collect();
            for i in index::sample(rng, open.len(), k) {
                let key = open[i];
                edges.push((key / nm, key % nm, REWIRED_WEIGHT));
            }
        } else {
            let mut placed = 0;
            while placed < k {
                let s = rng.random_range(0..ns);
                let m = rng.random_range(0..nm);
                if occupied.insert(s * nm + m) {
                    edges.push((s, m, REWIRED_WEIGHT));
                    placed += 1;
                }
            }
        }
        let mut stock_deg = vec![0usize; ns];
        let mut inv_deg = vec![0usize; nm];
        for &(s, m, _) in &edges {
            stock_deg[s] += 1;
            inv_deg[m] += 1;
        }
        if stock_deg.contains(&0) || inv_deg.contains(&0) {
            continue;
        }
        return Ok(BipartiteNetwork::from_edges(
            net.stock_ids().to_vec(),
            net.investor_ids().to_vec(),
            edges,
        )?);
    }
    Err(RewireError::Isolated(MAX_ATTEMPTS))
}

pub fn partial_rewire(net: &BipartiteNetwork, p: f64, seed: u64) -> Result<BipartiteNetwork, RewireError> {
    partial_rewire_with(net, p, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomizationPoint {
    pub p: f64,
    pub c: f64,
    pub mean_alpha_c: Option<f64>,
    pub n_values: usize,
    /// Trials whose bisection ended in a sentinel.
    pub n_excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomizationFit {
    pub p: f64,
    pub fit: Option<LineFit>,
    /// Points that entered the fit.
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomizationResult {
    pub points: Vec<RandomizationPoint>,
    pub fits: Vec<RandomizationFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub p: f64,
    pub trial: usize,
    pub shock: usize,
    pub alpha_c: Vec<CriticalConfidence>,
}

/// Runs every `(p, trial)` cell: rewire, draw one uniformly random shock,
/// bisect the critical confidence at every `c` in `c_grid`.
pub fn randomization_trials(
    net: &BipartiteNetwork,
    p_list: &[f64],
    trials: usize,
    c_grid: &[f64],
    settings: &BisectionSettings,
    seed: u64,
) -> Result<Vec<TrialOutcome>, RewireError> {
    if trials == 0 {
        return Err(RewireError::Trials);
    }
    for &p in p_list {
        RewirePlan { p, trials, seed }.validate()?;
    }
    settings.validate()?;
    let tasks: Vec<(usize, usize)> = (0..p_list.len())
        .flat_map(|pi| (0..trials).map(move |t| (pi, t)))
        .collect();
    crate::par::map_with(
        tasks,
        || (),
        |_, (pi, trial)| -> Result<TrialOutcome, RewireError> {
            let mut rng = trial_rng(seed, pi, trial);
            let rewired = partial_rewire_with(net, p_list[pi], &mut rng)?;
            let shock = rng.random_range(0..rewired.n_stocks());
            let mut ws = CascadeWorkspace::new(&rewired);
            let alpha_c = c_grid
                .iter()
                .map(|&c| find_alpha_c_with(&mut ws, &[shock], c, settings))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(TrialOutcome {
                p: p_list[pi],
                trial,
                shock,
                alpha_c,
            })
        },
    )
    .into_iter()
    .collect()
}

/// Aggregates trial outcomes into mean critical confidence per `(p, c)` and
/// fits `alpha_c = slope * c + intercept` per `p`, skipping points whose
/// mean is missing or below [`FIT_FLOOR`].
pub fn summarize_trials(p_list: &[f64], c_grid: &[f64], outcomes: &[TrialOutcome]) -> RandomizationResult {
    let mut points = Vec::new();
    let mut fits = Vec::new();
    for &p in p_list {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (ci, &c) in c_grid.iter().enumerate() {
            let values: Vec<CriticalConfidence> = outcomes
                .iter()
                .filter(|o| o.p == p)
                .map(|o| o.alpha_c[ci])
                .collect();
            let agg = AggregateCritical::from_values(c, &values);
            if let Some(mean) = agg.mean {
                if mean >= FIT_FLOOR {
                    xs.push(c);
                    ys.push(mean);
                }
            }
            points.push(RandomizationPoint {
                p,
                c,
                mean_alpha_c: agg.mean,
                n_values: agg.n_values,
                n_excluded: agg.n_always + agg.n_never,
            });
        }
        fits.push(RandomizationFit {
            p,
            fit: linear_fit(&xs, &ys),
            n_points: xs.len(),
        });
    }
    RandomizationResult { points, fits }
}

pub fn randomization_experiment(
    net: &BipartiteNetwork,
    p_list: &[f64],
    trials: usize,
    c_grid: &[f64],
    settings: &BisectionSettings,
    seed: u64,
) -> Result<RandomizationResult, RewireError> {
    let outcomes = randomization_trials(net, p_list, trials, c_grid, settings, seed)?;
    Ok(summarize_trials(p_list, c_grid, &outcomes))
}
