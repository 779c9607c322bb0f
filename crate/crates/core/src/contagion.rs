//! Limit-down cascade dynamics.
//!
//! At each step every investor holding a freshly failed stock loses the
//! liquidity of those positions. With `r` the fraction of its current
//! portfolio value that is still tradable, all of its remaining live
//! positions are revalued by `alpha * r`. A live stock fails once its value
//! has fallen by at least the price limit `c` relative to its initial value.

use serde::Serialize;

use crate::error::CascadeError;
use crate::network::BipartiteNetwork;

const LIVE: u32 = u32::MAX;

/// Market confidence, price limit and step budget for one cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CascadeParams {
    pub alpha: f64,
    pub price_limit: f64,
    /// `None` means the number of stocks, which always suffices.
    pub max_steps: Option<usize>,
}

impl CascadeParams {
    pub fn new(alpha: f64, price_limit: f64) -> Self {
        Self {
            alpha,
            price_limit,
            max_steps: None,
        }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = Some(max_steps);
        self
    }

    pub fn validate(&self) -> Result<(), CascadeError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(CascadeError::Alpha(self.alpha));
        }
        if !(self.price_limit > 0.0 && self.price_limit < 1.0) {
            return Err(CascadeError::PriceLimit(self.price_limit));
        }
        if self.max_steps == Some(0) {
            return Err(CascadeError::MaxSteps);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeResult {
    /// `timeline[tau]` holds the stocks that failed at step `tau`, ascending.
    /// Entry 0 is the initial shock.
    pub timeline: Vec<Vec<usize>>,
    /// Failure step per stock, `None` for survivors.
    pub failed_at: Vec<Option<u32>>,
    /// Terminal step: the first step that produced no failure, or
    /// `max_steps` when truncated.
    pub steps: usize,
    pub truncated: bool,
    pub final_failed_fraction: f64,
    /// Sum of live stock values at termination.
    pub surviving_market_value: f64,
}

impl CascadeResult {
    pub fn n_failed(&self) -> usize {
        self.timeline.iter().map(Vec::len).sum()
    }

    pub fn failed_set(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.timeline.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }
}

/// Reusable scratch buffers for running many cascades on one network.
pub struct CascadeWorkspace<'a> {
    net: &'a BipartiteNetwork,
    weights: Vec<f64>,
    failed_at: Vec<u32>,
    stock_mark: Vec<u32>,
    investor_mark: Vec<u32>,
    epoch: u32,
}

impl<'a> CascadeWorkspace<'a> {
    pub fn new(net: &'a BipartiteNetwork) -> Self {
        Self {
            net,
            weights: net.weights().to_vec(),
            failed_at: vec![LIVE; net.n_stocks()],
            stock_mark: vec![0; net.n_stocks()],
            investor_mark: vec![0; net.n_investors()],
            epoch: 0,
        }
    }

    fn next_epoch(&mut self) -> u32 {
        if self.epoch == u32::MAX {
            self.stock_mark.fill(0);
            self.investor_mark.fill(0);
            self.epoch = 0;
        }
        self.epoch += 1;
        self.epoch
    }

    /// Runs one cascade from `shock` on a pristine copy of the initial weights.
    pub fn run(&mut self, shock: &[usize], params: &CascadeParams) -> Result<CascadeResult, CascadeError> {
        params.validate()?;
        if shock.is_empty() {
            return Err(CascadeError::EmptyShock);
        }
        let net = self.net;
        let n = net.n_stocks();
        if let Some(&bad) = shock.iter().find(|&&s| s >= n) {
            return Err(CascadeError::UnknownShock(bad));
        }
        let max_steps = params.max_steps.unwrap_or(n).max(1);
        let alpha = params.alpha;
        let c = params.price_limit;

        self.weights.copy_from_slice(net.weights());
        self.failed_at.fill(LIVE);

        let mut frontier: Vec<usize> = shock.to_vec();
        frontier.sort_unstable();
        frontier.dedup();
        for &s in &frontier {
            self.failed_at[s] = 0;
        }
        let mut timeline = vec![frontier.clone()];
        let mut infected = Vec::new();
        let mut touched = Vec::new();
        let mut tau: u32 = 0;
        let mut truncated = false;

        loop {
            // L_tau: holders of the stocks that failed at this step.
            let epoch = self.next_epoch();
            infected.clear();
            for &s in &frontier {
                for m in net.holders(s) {
                    if self.investor_mark[m] != epoch {
                        self.investor_mark[m] = epoch;
                        infected.push(m);
                    }
                }
            }
            infected.sort_unstable();

            touched.clear();
            for &m in &infected {
                let mut before = 0.0;
                let mut after = 0.0;
                for &e in net.investor_edges(m) {
                    let s = net.edge_stock(e);
                    let at = self.failed_at[s];
                    if at < tau {
                        continue;
                    }
                    before += self.weights[e];
                    if at == LIVE {
                        after += self.weights[e];
                    }
                }
                let ratio = if before > 0.0 { after / before } else { 0.0 };
                let factor = alpha * ratio;
                for &e in net.investor_edges(m) {
                    let s = net.edge_stock(e);
                    if self.failed_at[s] == LIVE {
                        self.weights[e] *= factor;
                        if self.stock_mark[s] != epoch {
                            self.stock_mark[s] = epoch;
                            touched.push(s);
                        }
                    }
                }
            }
            touched.sort_unstable();

            tau += 1;
            let mut next = Vec::new();
            for &s in &touched {
                let now: f64 = net.stock_edges(s).map(|e| self.weights[e]).sum();
                let s0 = net.stock_value(s);
                if (now - s0) / s0 <= -c {
                    next.push(s);
                }
            }
            if next.is_empty() {
                break;
            }
            for &s in &next {
                self.failed_at[s] = tau;
            }
            timeline.push(next.clone());
            if tau as usize >= max_steps {
                truncated = true;
                break;
            }
            frontier = next;
        }

        let surviving_market_value = (0..n)
            .filter(|&s| self.failed_at[s] == LIVE)
            .map(|s| net.stock_edges(s).map(|e| self.weights[e]).sum::<f64>())
            .sum();
        let n_failed: usize = timeline.iter().map(Vec::len).sum();
        Ok(CascadeResult {
            failed_at: self
                .failed_at
                .iter()
                .map(|&t| (t != LIVE).then_some(t))
                .collect(),
            timeline,
            steps: tau as usize,
            truncated,
            final_failed_fraction: n_failed as f64 / n as f64,
            surviving_market_value,
        })
    }
}

/// Runs a single cascade from the given initial shock set.
pub fn run_cascade(
    net: &BipartiteNetwork,
    shock: &[usize],
    params: &CascadeParams,
) -> Result<CascadeResult, CascadeError> {
    CascadeWorkspace::new(net).run(shock, params)
}

/// Shocks every stock on its own; entry `i` is the cascade started at stock `i`.
pub fn run_all_single_shocks(
    net: &BipartiteNetwork,
    params: &CascadeParams,
) -> Result<Vec<CascadeResult>, CascadeError> {
    params.validate()?;
    crate::par::map_with(
        0..net.n_stocks(),
        || CascadeWorkspace::new(net),
        |ws, s| ws.run(&[s], params),
    )
    .into_iter()
    .collect()
}
