//! Synthetic investor-stock networks for experiments, demos and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::network::BipartiteNetwork;

fn ids(prefix: &str, n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len();
    (0..n).map(|i| format!("{prefix}{i:0width$}")).collect()
}

/// Nested ownership in the style of herding fund managers.
///
/// Investor 0 is the most diversified. Stock `i` is held by the first
/// `h_i` investors, so the holder sets form a chain under inclusion: a
/// handful of popular stocks are held by everyone while most stocks sit in
/// the portfolios of the few widest investors only. `noise` is the
/// probability that a stock also gets one extra holder outside its prefix,
/// which breaks nestedness locally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NestedMarket {
    pub n_stocks: usize,
    pub n_investors: usize,
    /// Stocks held by every investor.
    pub n_popular: usize,
    /// Exponent shaping the holder-count tail; larger means more stocks
    /// with a single holder.
    pub tail_exponent: f64,
    pub noise: f64,
    /// Weights are drawn uniformly from `[1 - spread, 1 + spread]`.
    pub weight_spread: f64,
}

impl Default for NestedMarket {
    fn default() -> Self {
        Self {
            n_stocks: 200,
            n_investors: 20,
            n_popular: 25,
            tail_exponent: 3.0,
            noise: 0.05,
            weight_spread: 0.5,
        }
    }
}

impl NestedMarket {
    pub fn build(&self, seed: u64) -> BipartiteNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = self.n_investors.max(1);
        let mut edges = Vec::new();
        for s in 0..self.n_stocks {
            let holders = if s < self.n_popular {
                m
            } else {
                let x: f64 = rng.random();
                1 + ((m - 1) as f64 * x.powf(self.tail_exponent)).floor() as usize
            };
            for inv in 0..holders {
                edges.push((s, inv, self.draw_weight(&mut rng)));
            }
            if holders < m && rng.random::<f64>() < self.noise {
                let extra = rng.random_range(holders..m);
                edges.push((s, extra, self.draw_weight(&mut rng)));
            }
        }
        BipartiteNetwork::from_edges(ids("S", self.n_stocks), ids("C", m), edges)
            .expect("nested market is well formed")
    }

    fn draw_weight(&self, rng: &mut ChaCha8Rng) -> f64 {
        1.0 + self.weight_spread * (2.0 * rng.random::<f64>() - 1.0)
    }
}

/// Uniform random bipartite graph with `n_edges` distinct unit-weight
/// edges. Every node is guaranteed at least one edge, which requires
/// `n_edges >= max(n_stocks, n_investors)`.
pub fn random_bipartite(n_stocks: usize, n_investors: usize, n_edges: usize, seed: u64) -> BipartiteNetwork {
    assert!(n_edges >= n_stocks.max(n_investors) && n_edges <= n_stocks * n_investors);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = vec![false; n_stocks * n_investors];
    let mut edges = Vec::with_capacity(n_edges);
    let mut add = |s: usize, m: usize, edges: &mut Vec<(usize, usize, f64)>| {
        if !taken[s * n_investors + m] {
            taken[s * n_investors + m] = true;
            edges.push((s, m, 1.0));
        }
    };
    // One edge per node first, then uniform fill.
    for s in 0..n_stocks {
        let m = rng.random_range(0..n_investors);
        add(s, m, &mut edges);
    }
    for m in 0..n_investors {
        let s = rng.random_range(0..n_stocks);
        add(s, m, &mut edges);
    }
    while edges.len() < n_edges {
        let s = rng.random_range(0..n_stocks);
        let m = rng.random_range(0..n_investors);
        add(s, m, &mut edges);
    }
    BipartiteNetwork::from_edges(ids("S", n_stocks), ids("C", n_investors), edges)
        .expect("random bipartite graph is well formed")
}

/// Investors that share a common block of stocks and each own a private
/// block of their own. Investor `m` holds `n_shared` shared stocks plus
/// `private[m]` stocks nobody else holds, so each private stock is fully
/// nested on everything in its owner's portfolio and its branching equals
/// the owner's portfolio size.
pub fn shared_and_private(n_shared: usize, private: &[usize]) -> BipartiteNetwork {
    let n_private: usize = private.iter().sum();
    let n_stocks = n_shared + n_private;
    let mut edges = Vec::new();
    let mut next = n_shared;
    for (m, &k) in private.iter().enumerate() {
        for s in 0..n_shared {
            edges.push((s, m, 1.0));
        }
        for s in next..next + k {
            edges.push((s, m, 1.0));
        }
        next += k;
    }
    BipartiteNetwork::from_edges(ids("S", n_stocks), ids("C", private.len()), edges)
        .expect("shared/private market is well formed")
}

/// Core-periphery market: `n_core` stocks densely co-held by `n_big` large
/// investors, plus `n_small` small investors each owning `per_small`
/// peripheral stocks and a dominant stake in one core stock.
///
/// A shock to a peripheral stock first takes down its owner's other
/// peripheral stocks, then the core stock the owner dominates, and from
/// there spreads through the large investors into the core.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorePeriphery {
    pub n_core: usize,
    pub n_big: usize,
    pub n_small: usize,
    pub per_small: usize,
    /// Weight of a small investor's stake in its core stock, relative to a
    /// big investor's stake of 1.
    pub small_core_stake: f64,
}

impl Default for CorePeriphery {
    fn default() -> Self {
        Self {
            n_core: 30,
            n_big: 4,
            n_small: 10,
            per_small: 4,
            small_core_stake: 8.0,
        }
    }
}

impl CorePeriphery {
    pub fn build(&self) -> BipartiteNetwork {
        let n_stocks = self.n_core + self.n_small * self.per_small;
        let n_investors = self.n_big + self.n_small;
        let mut edges = Vec::new();
        for b in 0..self.n_big {
            for s in 0..self.n_core {
                edges.push((s, b, 1.0));
            }
        }
        for k in 0..self.n_small {
            let m = self.n_big + k;
            edges.push((k % self.n_core, m, self.small_core_stake));
            let first = self.n_core + k * self.per_small;
            for s in first..first + self.per_small {
                edges.push((s, m, 1.0));
            }
        }
        BipartiteNetwork::from_edges(ids("S", n_stocks), ids("C", n_investors), edges)
            .expect("core-periphery market is well formed")
    }

    /// Index of the first peripheral stock.
    pub fn first_peripheral(&self) -> usize {
        self.n_core
    }
}
