//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use limitcascade::BipartiteNetwork;
use rand::Rng;

/// Dense `(stock, investor) -> weight` view of a network.
pub fn dense(net: &BipartiteNetwork) -> Vec<Vec<f64>> {
    let mut w = vec![vec![0.0; net.n_investors()]; net.n_stocks()];
    for (s, m, x) in net.edges() {
        w[s][m] = x;
    }
    w
}

/// Cascade recomputed from scratch every step on a dense weight matrix.
/// Returns the failure timeline, shock first.
pub fn naive_cascade(net: &BipartiteNetwork, shock: &[usize], alpha: f64, c: f64) -> Vec<Vec<usize>> {
    let w0 = dense(net);
    let ns = w0.len();
    let nm = net.n_investors();
    let s0: Vec<f64> = w0.iter().map(|row| row.iter().filter(|&&x| x > 0.0).sum()).collect();
    let mut w = w0.clone();
    let mut failed = vec![false; ns];
    let mut frontier: Vec<usize> = shock.to_vec();
    frontier.sort_unstable();
    frontier.dedup();
    let mut timeline = Vec::new();
    loop {
        for &s in &frontier {
            failed[s] = true;
        }
        timeline.push(frontier.clone());
        if timeline.len() > ns {
            break;
        }
        // Investors holding a stock that failed at this step.
        let infected: Vec<usize> = (0..nm)
            .filter(|&m| frontier.iter().any(|&s| w0[s][m] > 0.0))
            .collect();
        let earlier: Vec<bool> = (0..ns).map(|s| failed[s] && !frontier.contains(&s)).collect();
        for m in infected {
            let mut before = 0.0;
            let mut after = 0.0;
            for s in 0..ns {
                if w0[s][m] > 0.0 && !earlier[s] {
                    before += w[s][m];
                    if !failed[s] {
                        after += w[s][m];
                    }
                }
            }
            let r = if before > 0.0 { after / before } else { 0.0 };
            for s in 0..ns {
                if w0[s][m] > 0.0 && !failed[s] {
                    w[s][m] *= alpha * r;
                }
            }
        }
        let next: Vec<usize> = (0..ns)
            .filter(|&s| !failed[s])
            .filter(|&s| {
                let now: f64 = (0..nm).filter(|&m| w0[s][m] > 0.0).map(|m| w[s][m]).sum();
                (now - s0[s]) / s0[s] <= -c
            })
            .collect();
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    timeline
}

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Random network with weights in `(0, 1]` and no isolated nodes.
pub fn random_network<R: Rng>(rng: &mut R, max_stocks: usize, max_investors: usize) -> BipartiteNetwork {
    let ns = rng.random_range(1..=max_stocks);
    let nm = rng.random_range(1..=max_investors);
    let density = rng.random_range(0.2..0.9);
    let mut on = vec![vec![false; nm]; ns];
    for row in on.iter_mut() {
        for cell in row.iter_mut() {
            *cell = rng.random_bool(density);
        }
    }
    for (s, row) in on.iter_mut().enumerate() {
        if !row.contains(&true) {
            row[s % nm] = true;
        }
    }
    for m in 0..nm {
        if !on.iter().any(|row| row[m]) {
            on[m % ns][m] = true;
        }
    }
    let mut edges = Vec::new();
    for (s, row) in on.iter().enumerate() {
        for (m, &x) in row.iter().enumerate() {
            if x {
                // 1 - U[0, 1) lies in (0, 1].
                edges.push((s, m, 1.0 - rng.random::<f64>()));
            }
        }
    }
    BipartiteNetwork::from_edges(ids("S", ns), ids("C", nm), edges).unwrap()
}

/// Random network containing a shock stock held by every investor of a
/// target stock. Returns `(net, shock, target)`.
pub fn nested_fixture<R: Rng>(rng: &mut R) -> (BipartiteNetwork, usize, usize) {
    let nm = rng.random_range(1..=6);
    let ns = rng.random_range(2..=8);
    let shock = 0;
    let target = 1;
    let mut edges = Vec::new();
    let mut inv_has = vec![false; nm];
    // Shock held by a nonempty subset; target by a nonempty subset of that.
    let shock_holders: Vec<usize> = {
        let mut v: Vec<usize> = (0..nm).filter(|_| rng.random_bool(0.7)).collect();
        if v.is_empty() {
            v.push(rng.random_range(0..nm));
        }
        v
    };
    let mut target_holders: Vec<usize> = shock_holders.iter().copied().filter(|_| rng.random_bool(0.6)).collect();
    if target_holders.is_empty() {
        target_holders.push(shock_holders[0]);
    }
    let weight = |rng: &mut R| rng.random_range(0.01..100.0);
    for &m in &shock_holders {
        edges.push((shock, m, weight(rng)));
        inv_has[m] = true;
    }
    for &m in &target_holders {
        edges.push((target, m, weight(rng)));
    }
    for s in 2..ns {
        let mut any = false;
        for m in 0..nm {
            if rng.random_bool(0.4) {
                edges.push((s, m, weight(rng)));
                inv_has[m] = true;
                any = true;
            }
        }
        if !any {
            let m = rng.random_range(0..nm);
            edges.push((s, m, weight(rng)));
            inv_has[m] = true;
        }
    }
    for m in 0..nm {
        if !inv_has[m] {
            edges.push((shock, m, weight(rng)));
        }
    }
    let net = BipartiteNetwork::from_edges(ids("S", ns), ids("C", nm), edges).unwrap();
    (net, shock, target)
}

/// Core numbers by repeated peeling at every threshold.
pub fn brute_core_numbers(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut core = vec![0; n];
    for k in 1..=n {
        let mut alive = vec![true; n];
        loop {
            let mut changed = false;
            for v in 0..n {
                if alive[v] && adjacency[v].iter().filter(|&&u| alive[u]).count() < k {
                    alive[v] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for v in 0..n {
            if alive[v] {
                core[v] = k;
            }
        }
    }
    core
}

/// Random simple graph as sorted adjacency lists.
pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> Vec<Vec<usize>> {
    let n = rng.random_range(0..=max_nodes);
    let p = rng.random_range(0.0..0.5);
    let mut adj = vec![Vec::new(); n];
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    for row in &mut adj {
        row.sort_unstable();
    }
    adj
}

/// Driving-node probability from set inclusion alone: target `i` counts for
/// shock `j` when every investor of `i` also holds `j`.
pub fn brute_driving_probability(net: &BipartiteNetwork) -> Vec<f64> {
    let w = dense(net);
    let n = w.len();
    (0..n)
        .map(|i| {
            let hits = (0..n)
                .filter(|&j| j != i)
                .filter(|&j| (0..w[i].len()).all(|m| w[i][m] == 0.0 || w[j][m] > 0.0))
                .count();
            hits as f64 / n as f64
        })
        .collect()
}
