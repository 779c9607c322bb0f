//! Structural stock metrics: nestedness, branching, k-core index and
//! degree correlations across the two sides of the network.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::critical::driving_node_probability;
use crate::network::{stock_projection, BipartiteNetwork, StockGraph};

/// Share of `i`'s investors that also hold `j`. Not symmetric. A stock is
/// fully nested on itself.
pub fn nestedness(net: &BipartiteNetwork, i: usize, j: usize) -> f64 {
    if i == j {
        return 1.0;
    }
    common_holders(net, i, j) as f64 / net.stock_degree(i) as f64
}

pub(crate) fn common_holders(net: &BipartiteNetwork, i: usize, j: usize) -> usize {
    // Both holder lists are sorted.
    let mut a = net.holders(i).peekable();
    let mut b = net.holders(j).peekable();
    let mut count = 0;
    while let (Some(&x), Some(&y)) = (a.peek(), b.peek()) {
        match x.cmp(&y) {
            std::cmp::Ordering::Less => {
                a.next();
            }
            std::cmp::Ordering::Greater => {
                b.next();
            }
            std::cmp::Ordering::Equal => {
                count += 1;
                a.next();
                b.next();
            }
        }
    }
    count
}

/// Largest portfolio size among the stock's investors over the stock's own
/// investor count.
pub fn branching(net: &BipartiteNetwork, i: usize) -> f64 {
    let widest = net
        .holders(i)
        .map(|m| net.investor_degree(m))
        .max()
        .unwrap_or(0);
    widest as f64 / net.stock_degree(i) as f64
}

/// Mean nestedness of `i` on its projection neighbors. `None` when `i`
/// shares no investor with any other stock.
pub fn average_nestedness(net: &BipartiteNetwork, graph: &StockGraph, i: usize) -> Option<f64> {
    let nbrs = graph.neighbors(i);
    if nbrs.is_empty() {
        return None;
    }
    let sum: f64 = nbrs.iter().map(|&j| nestedness(net, i, j)).sum();
    Some(sum / nbrs.len() as f64)
}

/// Core number of every node of a simple undirected graph given as sorted
/// adjacency lists (bucket peeling, linear time).
pub fn core_numbers(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();
    let max_degree = degree.iter().copied().max().unwrap_or(0);

    let mut bin = vec![0usize; max_degree + 1];
    for &d in &degree {
        bin[d] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let count = *b;
        *b = start;
        start += count;
    }
    let mut pos = vec![0usize; n];
    let mut vert = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[degree[v]];
        vert[pos[v]] = v;
        bin[degree[v]] += 1;
    }
    for d in (1..=max_degree).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;

    for i in 0..n {
        let v = vert[i];
        for &u in &adjacency[v] {
            if degree[u] > degree[v] {
                let du = degree[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = vert[pw];
                if u != w {
                    pos[u] = pw;
                    vert[pu] = w;
                    pos[w] = pu;
                    vert[pw] = u;
                }
                bin[du] += 1;
                degree[u] -= 1;
            }
        }
    }
    degree
}

/// k-core index of each stock in the unweighted stock projection.
pub fn k_core_index(graph: &StockGraph) -> Vec<usize> {
    core_numbers(graph.adjacency())
}

/// k-core index of each stock in the bipartite graph itself, investors
/// included as ordinary nodes.
pub fn bipartite_k_core_index(net: &BipartiteNetwork) -> Vec<usize> {
    let ns = net.n_stocks();
    let mut adjacency: Vec<Vec<usize>> = Vec::with_capacity(ns + net.n_investors());
    for s in 0..ns {
        adjacency.push(net.holders(s).map(|m| ns + m).collect());
    }
    for m in 0..net.n_investors() {
        adjacency.push(net.portfolio(m).collect());
    }
    let mut cores = core_numbers(&adjacency);
    cores.truncate(ns);
    cores
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnnCurve {
    /// `(degree, mean nearest-neighbor degree)` sorted by degree.
    pub stocks: Vec<(usize, f64)>,
    pub investors: Vec<(usize, f64)>,
}

/// Average nearest-neighbor degree per degree class, for stocks (whose
/// neighbors are investors) and for investors (whose neighbors are stocks).
pub fn knn_degree(net: &BipartiteNetwork) -> KnnCurve {
    let mut by_stock: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for s in 0..net.n_stocks() {
        let k = net.stock_degree(s);
        let mean = net.holders(s).map(|m| net.investor_degree(m) as f64).sum::<f64>() / k as f64;
        let slot = by_stock.entry(k).or_default();
        slot.0 += mean;
        slot.1 += 1;
    }
    let mut by_investor: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for m in 0..net.n_investors() {
        let k = net.investor_degree(m);
        let mean = net.portfolio(m).map(|s| net.stock_degree(s) as f64).sum::<f64>() / k as f64;
        let slot = by_investor.entry(k).or_default();
        slot.0 += mean;
        slot.1 += 1;
    }
    let finish = |m: BTreeMap<usize, (f64, usize)>| {
        m.into_iter()
            .map(|(k, (sum, cnt))| (k, sum / cnt as f64))
            .collect()
    };
    KnnCurve {
        stocks: finish(by_stock),
        investors: finish(by_investor),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KCoreGraph {
    #[default]
    Projection,
    Bipartite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StockMetrics {
    pub stock: usize,
    pub degree: usize,
    pub branching: f64,
    pub average_nestedness: Option<f64>,
    pub k_core: usize,
    pub p_d: f64,
}

/// One row of structural metrics per stock, with the driving-node
/// probability at price limit `c`.
pub fn stock_metrics(net: &BipartiteNetwork, c: f64, equality_tol: f64, kcore_graph: KCoreGraph) -> Vec<StockMetrics> {
    let graph = stock_projection(net);
    let cores = match kcore_graph {
        KCoreGraph::Projection => k_core_index(&graph),
        KCoreGraph::Bipartite => bipartite_k_core_index(net),
    };
    let p_d = driving_node_probability(net, c, equality_tol);
    (0..net.n_stocks())
        .map(|s| StockMetrics {
            stock: s,
            degree: net.stock_degree(s),
            branching: branching(net, s),
            average_nestedness: average_nestedness(net, &graph, s),
            k_core: cores[s],
            p_d: p_d[s],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{load_holdings, HoldingRecord};

    fn net(records: &[(&str, &str)]) -> BipartiteNetwork {
        load_holdings(records.iter().map(|(m, s)| HoldingRecord::new(*m, *s, 1.0)))
            .unwrap()
            .0
    }

    fn toy_t1() -> BipartiteNetwork {
        net(&[("C1", "S2"), ("C1", "S3"), ("C2", "S1"), ("C2", "S2")])
    }

    #[test]
    fn nestedness_examples() {
        let t1 = toy_t1();
        assert_eq!(nestedness(&t1, 0, 1), 1.0);
        assert_eq!(nestedness(&t1, 1, 0), 0.5);
        assert_eq!(nestedness(&t1, 0, 2), 0.0);
        assert_eq!(nestedness(&t1, 2, 2), 1.0);
    }

    #[test]
    fn branching_examples() {
        let t1 = toy_t1();
        assert_eq!(branching(&t1, 0), 2.0);
        assert_eq!(branching(&t1, 1), 1.0);
        let five = net(&[("C", "A"), ("C", "B"), ("C", "D"), ("C", "E"), ("C", "F")]);
        assert_eq!(branching(&five, 0), 5.0);
    }

    #[test]
    fn complete_bipartite_branching() {
        // 3 investors each holding all 4 stocks: branching = 4 / 3.
        let mut recs = Vec::new();
        let names: Vec<(String, String)> = (0..3)
            .flat_map(|m| (0..4).map(move |s| (format!("C{m}"), format!("S{s}"))))
            .collect();
        for (m, s) in &names {
            recs.push((m.as_str(), s.as_str()));
        }
        let k = net(&recs);
        for s in 0..4 {
            assert!((branching(&k, s) - 4.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn average_nestedness_examples() {
        let t1 = toy_t1();
        let g = stock_projection(&t1);
        assert_eq!(average_nestedness(&t1, &g, 0), Some(1.0));
        assert_eq!(average_nestedness(&t1, &g, 1), Some(0.5));
        let lonely = net(&[("C", "S1"), ("D", "S2")]);
        let g = stock_projection(&lonely);
        assert_eq!(average_nestedness(&lonely, &g, 0), None);
    }

    #[test]
    fn core_examples() {
        let tri = StockGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]);
        assert_eq!(k_core_index(&tri), vec![2, 2, 2]);
        let star = StockGraph::from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert_eq!(k_core_index(&star), vec![1; 5]);
        let empty = StockGraph::from_edges(3, []);
        assert_eq!(k_core_index(&empty), vec![0; 3]);
        assert!(core_numbers(&[]).is_empty());
    }

    #[test]
    fn knn_examples() {
        let curve = knn_degree(&toy_t1());
        assert_eq!(curve.stocks, vec![(1, 2.0), (2, 2.0)]);
        // Each investor holds one degree-1 and one degree-2 stock.
        assert_eq!(curve.investors, vec![(2, 1.5)]);
    }

    #[test]
    fn regular_knn_is_flat() {
        let names: Vec<(String, String)> = (0..3)
            .flat_map(|m| (0..4).map(move |s| (format!("C{m}"), format!("S{s}"))))
            .collect();
        let recs: Vec<(&str, &str)> = names.iter().map(|(m, s)| (m.as_str(), s.as_str())).collect();
        let curve = knn_degree(&net(&recs));
        assert_eq!(curve.stocks, vec![(3, 4.0)]);
        assert_eq!(curve.investors, vec![(4, 3.0)]);
    }

    #[test]
    fn metrics_table_on_t1() {
        let rows = stock_metrics(&toy_t1(), 0.1, 0.0, KCoreGraph::Projection);
        let degrees: Vec<usize> = rows.iter().map(|r| r.degree).collect();
        assert_eq!(degrees, vec![1, 2, 1]);
        let cores: Vec<usize> = rows.iter().map(|r| r.k_core).collect();
        assert_eq!(cores, vec![1, 1, 1]);
        assert_eq!(rows[0].p_d, 1.0 / 3.0);
        let bip = stock_metrics(&toy_t1(), 0.1, 0.0, KCoreGraph::Bipartite);
        assert!(bip.iter().all(|r| r.k_core == 1));
    }
}
