//! Weighted bipartite investor-stock network and its one-mode stock projection.
//!
//! Stocks and investors are addressed by dense indices assigned in
//! lexicographic order of their string identifiers, so the same set of
//! holdings always yields the same network regardless of record order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;

use serde::Deserialize;

use crate::error::NetworkError;

/// One `(investor, stock, market value)` holding.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldingRecord {
    pub investor: String,
    pub stock: String,
    pub value: f64,
}

impl HoldingRecord {
    pub fn new(investor: impl Into<String>, stock: impl Into<String>, value: f64) -> Self {
        Self {
            investor: investor.into(),
            stock: stock.into(),
            value,
        }
    }
}

/// A record that was skipped during loading.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    /// 1-based line in the source file (or position in the record sequence).
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    pub stocks: usize,
    pub investors: usize,
    pub edges: usize,
    pub merged_duplicates: usize,
    pub dropped_isolated_stocks: usize,
    pub rejected: Vec<Rejection>,
}

/// Immutable weighted bipartite graph between stocks and investors.
///
/// Edges are stored once, sorted by `(stock, investor)`; a second index
/// groups the same edge ids by investor (sorted by stock).
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteNetwork {
    stock_ids: Vec<String>,
    investor_ids: Vec<String>,
    stock_lookup: HashMap<String, usize>,
    edge_stock: Vec<usize>,
    edge_investor: Vec<usize>,
    edge_weight: Vec<f64>,
    stock_offsets: Vec<usize>,
    investor_offsets: Vec<usize>,
    investor_edges: Vec<usize>,
    stock_value: Vec<f64>,
    investor_value: Vec<f64>,
}

impl BipartiteNetwork {
    /// Builds a network from explicit `(stock, investor, weight)` triples.
    ///
    /// Every weight must be finite and positive, pairs must be unique and
    /// every node must carry at least one edge.
    pub fn from_edges(
        stock_ids: Vec<String>,
        investor_ids: Vec<String>,
        mut edges: Vec<(usize, usize, f64)>,
    ) -> Result<Self, NetworkError> {
        let n_stocks = stock_ids.len();
        let n_investors = investor_ids.len();
        for &(s, m, w) in &edges {
            if s >= n_stocks {
                return Err(NetworkError::IndexOutOfRange {
                    kind: "stock",
                    index: s,
                });
            }
            if m >= n_investors {
                return Err(NetworkError::IndexOutOfRange {
                    kind: "investor",
                    index: m,
                });
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(NetworkError::InvalidWeight {
                    stock: s,
                    investor: m,
                    weight: w,
                });
            }
        }
        if edges.is_empty() {
            return Err(NetworkError::Empty);
        }
        edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for pair in edges.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(NetworkError::DuplicateEdge {
                    stock: pair[0].0,
                    investor: pair[0].1,
                });
            }
        }

        let edge_stock: Vec<usize> = edges.iter().map(|e| e.0).collect();
        let edge_investor: Vec<usize> = edges.iter().map(|e| e.1).collect();
        let edge_weight: Vec<f64> = edges.iter().map(|e| e.2).collect();

        let mut stock_offsets = vec![0usize; n_stocks + 1];
        for &s in &edge_stock {
            stock_offsets[s + 1] += 1;
        }
        for i in 0..n_stocks {
            stock_offsets[i + 1] += stock_offsets[i];
        }

        let mut investor_offsets = vec![0usize; n_investors + 1];
        for &m in &edge_investor {
            investor_offsets[m + 1] += 1;
        }
        for i in 0..n_investors {
            investor_offsets[i + 1] += investor_offsets[i];
        }
        // Edges are visited in stock order, so each investor's slice ends up
        // sorted by stock.
        let mut cursor = investor_offsets.clone();
        let mut investor_edges = vec![0usize; edges.len()];
        for (e, &m) in edge_investor.iter().enumerate() {
            investor_edges[cursor[m]] = e;
            cursor[m] += 1;
        }

        for s in 0..n_stocks {
            if stock_offsets[s] == stock_offsets[s + 1] {
                return Err(NetworkError::Isolated {
                    kind: "stock",
                    id: stock_ids[s].clone(),
                });
            }
        }
        for m in 0..n_investors {
            if investor_offsets[m] == investor_offsets[m + 1] {
                return Err(NetworkError::Isolated {
                    kind: "investor",
                    id: investor_ids[m].clone(),
                });
            }
        }

        let stock_value = (0..n_stocks)
            .map(|s| {
                edge_weight[stock_offsets[s]..stock_offsets[s + 1]]
                    .iter()
                    .sum()
            })
            .collect();
        let investor_value = (0..n_investors)
            .map(|m| {
                investor_edges[investor_offsets[m]..investor_offsets[m + 1]]
                    .iter()
                    .map(|&e| edge_weight[e])
                    .sum()
            })
            .collect();
        let stock_lookup = stock_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();

        Ok(Self {
            stock_ids,
            investor_ids,
            stock_lookup,
            edge_stock,
            edge_investor,
            edge_weight,
            stock_offsets,
            investor_offsets,
            investor_edges,
            stock_value,
            investor_value,
        })
    }

    pub fn n_stocks(&self) -> usize {
        self.stock_ids.len()
    }

    pub fn n_investors(&self) -> usize {
        self.investor_ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_weight.len()
    }

    pub fn stock_ids(&self) -> &[String] {
        &self.stock_ids
    }

    pub fn investor_ids(&self) -> &[String] {
        &self.investor_ids
    }

    pub fn stock_id(&self, stock: usize) -> &str {
        &self.stock_ids[stock]
    }

    pub fn investor_id(&self, investor: usize) -> &str {
        &self.investor_ids[investor]
    }

    pub fn stock_index(&self, id: &str) -> Option<usize> {
        self.stock_lookup.get(id).copied()
    }

    /// Initial market value `S_{i,0}` of a stock.
    pub fn stock_value(&self, stock: usize) -> f64 {
        self.stock_value[stock]
    }

    /// Initial portfolio value `A_{m,0}` of an investor.
    pub fn investor_value(&self, investor: usize) -> f64 {
        self.investor_value[investor]
    }

    /// Edge ids of a stock, ordered by investor.
    pub fn stock_edges(&self, stock: usize) -> std::ops::Range<usize> {
        self.stock_offsets[stock]..self.stock_offsets[stock + 1]
    }

    /// Edge ids of an investor, ordered by stock.
    pub fn investor_edges(&self, investor: usize) -> &[usize] {
        &self.investor_edges[self.investor_offsets[investor]..self.investor_offsets[investor + 1]]
    }

    pub fn edge_stock(&self, edge: usize) -> usize {
        self.edge_stock[edge]
    }

    pub fn edge_investor(&self, edge: usize) -> usize {
        self.edge_investor[edge]
    }

    pub fn edge_weight(&self, edge: usize) -> f64 {
        self.edge_weight[edge]
    }

    pub fn weights(&self) -> &[f64] {
        &self.edge_weight
    }

    /// Investors holding a stock, ascending.
    pub fn holders(&self, stock: usize) -> impl Iterator<Item = usize> + '_ {
        self.stock_edges(stock).map(move |e| self.edge_investor[e])
    }

    /// Stocks held by an investor, ascending.
    pub fn portfolio(&self, investor: usize) -> impl Iterator<Item = usize> + '_ {
        self.investor_edges(investor)
            .iter()
            .map(move |&e| self.edge_stock[e])
    }

    pub fn stock_degree(&self, stock: usize) -> usize {
        self.stock_offsets[stock + 1] - self.stock_offsets[stock]
    }

    pub fn investor_degree(&self, investor: usize) -> usize {
        self.investor_offsets[investor + 1] - self.investor_offsets[investor]
    }

    /// Weight `w_{i,m,0}`, or zero when the investor does not hold the stock.
    pub fn weight(&self, stock: usize, investor: usize) -> f64 {
        let range = self.stock_edges(stock);
        let slice = &self.edge_investor[range.clone()];
        match slice.binary_search(&investor) {
            Ok(pos) => self.edge_weight[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// All edges as `(stock, investor, weight)` in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_edges()).map(move |e| (self.edge_stock[e], self.edge_investor[e], self.edge_weight[e]))
    }

    /// Same topology with every weight replaced by `weight`.
    pub fn with_uniform_weights(&self, weight: f64) -> Result<Self, NetworkError> {
        let edges = self.edges().map(|(s, m, _)| (s, m, weight)).collect();
        Self::from_edges(self.stock_ids.clone(), self.investor_ids.clone(), edges)
    }
}

/// Builds a network from holding records.
///
/// Duplicate `(investor, stock)` records are summed; records with a
/// non-finite or non-positive value are rejected and reported with their
/// 1-based position. An input with no valid record is fatal.
pub fn load_holdings<I>(records: I) -> Result<(BipartiteNetwork, LoadReport), NetworkError>
where
    I: IntoIterator<Item = HoldingRecord>,
{
    let mut report = LoadReport::default();
    let mut cells: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    let mut seen_stocks = BTreeSet::new();
    for (pos, rec) in records.into_iter().enumerate() {
        seen_stocks.insert(rec.stock.clone());
        if !(rec.value.is_finite() && rec.value > 0.0) {
            report.rejected.push(Rejection {
                line: pos + 1,
                reason: format!("market value {} is not a positive finite number", rec.value),
            });
            continue;
        }
        cells.entry((rec.stock, rec.investor)).or_default().push(rec.value);
    }
    if !report.rejected.is_empty() {
        log::warn!("rejected {} holding record(s)", report.rejected.len());
    }
    build(cells, seen_stocks, report)
}

fn build(
    cells: BTreeMap<(String, String), Vec<f64>>,
    seen_stocks: BTreeSet<String>,
    mut report: LoadReport,
) -> Result<(BipartiteNetwork, LoadReport), NetworkError> {
    if cells.is_empty() {
        return Err(NetworkError::Empty);
    }
    let stocks: BTreeSet<&str> = cells.keys().map(|(s, _)| s.as_str()).collect();
    let investors: BTreeSet<&str> = cells.keys().map(|(_, m)| m.as_str()).collect();
    let stock_ix: HashMap<&str, usize> = stocks.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let investor_ix: HashMap<&str, usize> =
        investors.iter().enumerate().map(|(i, s)| (*s, i)).collect();

    let mut edges = Vec::with_capacity(cells.len());
    for ((s, m), mut values) in cells.iter().map(|(k, v)| (k, v.clone())) {
        if values.len() > 1 {
            report.merged_duplicates += values.len() - 1;
        }
        // Summing in sorted order keeps the total independent of record order.
        values.sort_by(f64::total_cmp);
        let total: f64 = values.iter().sum();
        edges.push((stock_ix[s.as_str()], investor_ix[m.as_str()], total));
    }
    report.dropped_isolated_stocks = seen_stocks.len() - stocks.len();
    if report.dropped_isolated_stocks > 0 {
        log::warn!(
            "dropped {} stock(s) with no valid holdings",
            report.dropped_isolated_stocks
        );
    }
    let stock_ids = stocks.iter().map(|s| s.to_string()).collect();
    let investor_ids = investors.iter().map(|s| s.to_string()).collect();
    let net = BipartiteNetwork::from_edges(stock_ids, investor_ids, edges)?;
    report.stocks = net.n_stocks();
    report.investors = net.n_investors();
    report.edges = net.n_edges();
    log::info!(
        "loaded {} stocks, {} investors, {} edges",
        report.stocks,
        report.investors,
        report.edges
    );
    Ok((net, report))
}

#[derive(Debug, Deserialize)]
struct HoldingRow {
    investor_id: String,
    stock_id: String,
    market_value: String,
}

#[derive(Debug, Deserialize)]
struct MappingRow {
    fund_id: String,
    company_id: String,
}

/// Parsed holdings file: accepted records plus line-numbered rejections.
#[derive(Debug, Clone, Default)]
pub struct HoldingsInput {
    pub records: Vec<HoldingRecord>,
    pub rejected: Vec<Rejection>,
}

/// Reads `investor_id,stock_id,market_value` CSV.
pub fn read_holdings_csv<R: Read>(reader: R) -> Result<HoldingsInput, NetworkError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = HoldingsInput::default();
    let headers = rdr.headers()?.clone();
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(err) => {
                let line = err.position().map_or(0, |p| p.line() as usize);
                out.rejected.push(Rejection {
                    line,
                    reason: err.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row: HoldingRow = match record.deserialize(Some(&headers)) {
            Ok(r) => r,
            Err(err) => {
                out.rejected.push(Rejection {
                    line,
                    reason: err.to_string(),
                });
                continue;
            }
        };
        match row.market_value.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => {
                out.records
                    .push(HoldingRecord::new(row.investor_id, row.stock_id, v));
            }
            _ => out.rejected.push(Rejection {
                line,
                reason: format!("invalid market value {:?}", row.market_value),
            }),
        }
    }
    Ok(out)
}

/// Loads a holdings CSV straight into a network. CSV-level rejections are
/// merged into the load report.
pub fn load_holdings_csv<R: Read>(
    reader: R,
) -> Result<(BipartiteNetwork, LoadReport), NetworkError> {
    let input = read_holdings_csv(reader)?;
    let (net, mut report) = load_holdings(input.records)?;
    report.rejected = input.rejected;
    Ok((net, report))
}

/// Reads a `fund_id,company_id` mapping CSV.
pub fn read_mapping_csv<R: Read>(reader: R) -> Result<HashMap<String, String>, NetworkError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut map = HashMap::new();
    for row in rdr.deserialize::<MappingRow>() {
        let row = row?;
        map.insert(row.fund_id, row.company_id);
    }
    Ok(map)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grouped {
    pub records: Vec<HoldingRecord>,
    /// Distinct fund ids that had no mapping and kept their own id.
    pub unmapped_funds: usize,
}

/// Re-keys fund holdings by management company, summing same
/// `(company, stock)` values. Output is sorted by `(company, stock)`.
pub fn group_by_mapping(records: &[HoldingRecord], mapping: &HashMap<String, String>) -> Grouped {
    let mut cells: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    let mut unmapped = BTreeSet::new();
    for rec in records {
        let company = match mapping.get(&rec.investor) {
            Some(c) => c.clone(),
            None => {
                unmapped.insert(rec.investor.clone());
                rec.investor.clone()
            }
        };
        cells
            .entry((company, rec.stock.clone()))
            .or_default()
            .push(rec.value);
    }
    if !unmapped.is_empty() {
        log::warn!("{} fund(s) missing from mapping kept their own id", unmapped.len());
    }
    let records = cells
        .into_iter()
        .map(|((company, stock), mut values)| {
            values.sort_by(f64::total_cmp);
            HoldingRecord::new(company, stock, values.iter().sum())
        })
        .collect();
    Grouped {
        records,
        unmapped_funds: unmapped.len(),
    }
}

/// Unweighted simple undirected graph over stocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StockGraph {
    adjacency: Vec<Vec<usize>>,
}

impl StockGraph {
    /// Builds a graph from an undirected edge list; self-loops and repeated
    /// edges are discarded.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for (a, b) in edges {
            if a != b {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        Self { adjacency }
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }
}

/// Stocks are adjacent iff they share at least one investor.
pub fn stock_projection(net: &BipartiteNetwork) -> StockGraph {
    let n = net.n_stocks();
    let mut adjacency = vec![Vec::new(); n];
    let mut stamp = vec![usize::MAX; n];
    for (s, nbrs) in adjacency.iter_mut().enumerate() {
        stamp[s] = s;
        for m in net.holders(s) {
            for t in net.portfolio(m) {
                if stamp[t] != s {
                    stamp[t] = s;
                    nbrs.push(t);
                }
            }
        }
        nbrs.sort_unstable();
    }
    StockGraph { adjacency }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(m: &str, s: &str, v: f64) -> HoldingRecord {
        HoldingRecord::new(m, s, v)
    }

    #[test]
    fn singleton_record() {
        let (net, report) = load_holdings(vec![rec("C1", "S1", 5.0)]).unwrap();
        assert_eq!(net.n_edges(), 1);
        assert_eq!(net.stock_value(0), 5.0);
        assert_eq!(net.investor_value(0), 5.0);
        assert_eq!(report.edges, 1);
    }

    #[test]
    fn duplicates_are_summed() {
        let (net, report) = load_holdings(vec![rec("C1", "S1", 2.0), rec("C1", "S1", 3.0)]).unwrap();
        assert_eq!(net.n_edges(), 1);
        assert_eq!(net.weight(0, 0), 5.0);
        assert_eq!(report.merged_duplicates, 1);
    }

    #[test]
    fn bad_values_rejected_with_position() {
        let (net, report) = load_holdings(vec![
            rec("C1", "S1", 1.0),
            rec("C1", "S2", 0.0),
            rec("C2", "S1", f64::NAN),
            rec("C2", "S3", -4.0),
        ])
        .unwrap();
        assert_eq!(net.n_stocks(), 1);
        let lines: Vec<usize> = report.rejected.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![2, 3, 4]);
        assert_eq!(report.dropped_isolated_stocks, 2);
    }

    #[test]
    fn empty_input_is_fatal() {
        assert!(matches!(load_holdings(Vec::new()), Err(NetworkError::Empty)));
        assert!(matches!(
            load_holdings(vec![rec("C", "S", -1.0)]),
            Err(NetworkError::Empty)
        ));
    }

    #[test]
    fn csv_rejections_carry_line_numbers() {
        let data = "investor_id,stock_id,market_value\nC1,S1,2.5\nC1,S2,abc\nC2,S2,-1\nC2,S1,1\n";
        let input = read_holdings_csv(data.as_bytes()).unwrap();
        assert_eq!(input.records.len(), 2);
        let lines: Vec<usize> = input.rejected.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![3, 4]);
        let (net, report) = load_holdings_csv(data.as_bytes()).unwrap();
        assert_eq!(net.n_stocks(), 1);
        assert_eq!(report.rejected.len(), 2);
    }

    #[test]
    fn grouping_sums_funds() {
        let mapping: HashMap<String, String> =
            [("F1", "C"), ("F2", "C")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        let out = group_by_mapping(&[rec("F1", "S1", 1.0), rec("F2", "S1", 1.0)], &mapping);
        assert_eq!(out.records, vec![rec("C", "S1", 2.0)]);
        assert_eq!(out.unmapped_funds, 0);
    }

    #[test]
    fn grouping_identity_and_unmapped() {
        let records = vec![rec("A", "S1", 1.0), rec("B", "S2", 3.0)];
        let identity: HashMap<String, String> =
            ["A", "B"].iter().map(|s| (s.to_string(), s.to_string())).collect();
        assert_eq!(group_by_mapping(&records, &identity).records, records);
        let out = group_by_mapping(&records, &HashMap::new());
        assert_eq!(out.records, records);
        assert_eq!(out.unmapped_funds, 2);
    }

    #[test]
    fn projection_examples() {
        let (net, _) = load_holdings(vec![rec("C1", "S1", 1.0), rec("C1", "S2", 1.0)]).unwrap();
        let g = stock_projection(&net);
        assert!(g.contains(0, 1) && g.contains(1, 0));
        assert_eq!(g.n_edges(), 1);

        let (net, _) = load_holdings(vec![rec("C1", "S1", 1.0), rec("C2", "S2", 1.0)]).unwrap();
        assert_eq!(stock_projection(&net).n_edges(), 0);

        // C1: {S2, S3}, C2: {S1, S2}
        let (net, _) = load_holdings(vec![
            rec("C1", "S2", 1.0),
            rec("C1", "S3", 1.0),
            rec("C2", "S1", 1.0),
            rec("C2", "S2", 1.0),
        ])
        .unwrap();
        let g = stock_projection(&net);
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.neighbors(2), &[1]);
    }

    #[test]
    fn from_edges_validation() {
        let ids = |n: usize, p: &str| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
        assert!(matches!(
            BipartiteNetwork::from_edges(ids(1, "S"), ids(1, "C"), vec![(0, 0, 0.0)]),
            Err(NetworkError::InvalidWeight { .. })
        ));
        assert!(matches!(
            BipartiteNetwork::from_edges(ids(1, "S"), ids(1, "C"), vec![(0, 0, 1.0), (0, 0, 2.0)]),
            Err(NetworkError::DuplicateEdge { .. })
        ));
        assert!(matches!(
            BipartiteNetwork::from_edges(ids(2, "S"), ids(1, "C"), vec![(0, 0, 1.0)]),
            Err(NetworkError::Isolated { kind: "stock", .. })
        ));
    }
}
