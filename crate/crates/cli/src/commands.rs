use std::collections::HashMap;
use std::fs::File;

use anyhow::{bail, ensure, Context, Result};
use limitcascade::critical::{average_cascade_steps, max_alpha_ci_histogram, sweep, CriticalConfidence};
use limitcascade::metrics::{bipartite_k_core_index, k_core_index, knn_degree, stock_metrics, KCoreGraph};
use limitcascade::network::{group_by_mapping, read_holdings_csv, read_mapping_csv};
use limitcascade::randomize::{randomization_trials, summarize_trials};
use limitcascade::stats::Summary;
use limitcascade::waves::{
    cascade_failures, detect_waves, format_minute, kcore_trajectory, max_pd_timeline, normalize_events,
    read_events_csv, SideCorrelation,
};
use limitcascade::{load_holdings, run_cascade, stock_projection, BipartiteNetwork, CascadeParams};

use crate::config::RunConfig;
use crate::output::{num, opt, OutputDir};

const DEFAULT_C_GRID: &str = "0.1:0.9:0.1";
const DEFAULT_C: &str = "0.1";
const DEFAULT_TRIALS: usize = 600;

fn load_network(cfg: &RunConfig) -> Result<BipartiteNetwork> {
    let path = cfg.holdings_path()?;
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let input = read_holdings_csv(file)?;
    for r in &input.rejected {
        log::warn!("{}:{}: {}", path.display(), r.line, r.reason);
    }
    let records = match &cfg.mapping {
        Some(mp) => {
            let file = File::open(mp).with_context(|| format!("opening {}", mp.display()))?;
            let grouped = group_by_mapping(&input.records, &read_mapping_csv(file)?);
            if grouped.unmapped_funds > 0 {
                log::warn!("{} fund(s) without a company mapping kept their own id", grouped.unmapped_funds);
            }
            grouped.records
        }
        None => input.records,
    };
    let (net, report) = load_holdings(records)?;
    log::info!(
        "loaded {} stocks, {} investors, {} edges ({} duplicates merged, {} isolated stocks dropped, {} rejected)",
        report.stocks,
        report.investors,
        report.edges,
        report.merged_duplicates,
        report.dropped_isolated_stocks,
        report.rejected.len() + input.rejected.len()
    );
    Ok(net)
}

fn shock_indices(net: &BipartiteNetwork, cfg: &RunConfig) -> Result<Vec<usize>> {
    cfg.shock_ids()
        .iter()
        .map(|id| net.stock_index(id).with_context(|| format!("unknown stock {id:?}")))
        .collect()
}

fn single_c(cfg: &RunConfig) -> Result<f64> {
    let cs = cfg.c_values(DEFAULT_C)?;
    ensure!(cs.len() == 1, "this command takes a single price limit (--c)");
    Ok(cs[0])
}

fn k_cores(net: &BipartiteNetwork, cfg: &RunConfig) -> Vec<usize> {
    match cfg.kcore_graph.unwrap_or_default() {
        KCoreGraph::Projection => k_core_index(&stock_projection(net)),
        KCoreGraph::Bipartite => bipartite_k_core_index(net),
    }
}

fn confidence_cells(a: &CriticalConfidence) -> [String; 2] {
    [a.value().map(num).unwrap_or_default(), a.label().to_string()]
}

fn summary_cells(s: &Summary) -> [String; 7] {
    [
        s.count.to_string(),
        num(s.mean),
        num(s.min),
        num(s.q1),
        num(s.median),
        num(s.q3),
        num(s.max),
    ]
}

const SUMMARY_HEADER: [&str; 7] = ["count", "mean", "min", "q1", "median", "q3", "max"];

fn with_summary_header<'a>(lead: &[&'a str]) -> Vec<&'a str> {
    lead.iter().copied().chain(SUMMARY_HEADER).collect()
}

pub fn sweep_cmd(cfg: &RunConfig) -> Result<()> {
    let net = load_network(cfg)?;
    let cs = cfg.c_values(DEFAULT_C_GRID)?;
    let alphas = cfg.alpha_values()?;
    let settings = cfg.bisection()?;
    let mut shocks = shock_indices(&net, cfg)?;
    if shocks.is_empty() {
        shocks = (0..net.n_stocks()).collect();
    }
    let result = sweep(&net, &cs, &alphas, &shocks, &settings)?;
    let id = |s: usize| net.stock_id(s).to_string();

    let mut out = OutputDir::create(cfg.out_dir())?;
    if !alphas.is_empty() {
        out.csv(
            "sweep_grid.csv",
            &["c", "alpha", "shock_id", "failed_fraction", "collapsed"],
            result.grid.iter().map(|g| {
                [num(g.c), num(g.alpha), id(g.shock), num(g.failed_fraction), g.collapsed.to_string()]
            }),
        )?;
    }
    out.csv(
        "alpha_c_per_shock.csv",
        &["c", "shock_id", "alpha_c", "status"],
        result.per_shock.iter().map(|p| {
            let [v, label] = confidence_cells(&p.alpha_c);
            [num(p.c), id(p.shock), v, label]
        }),
    )?;
    out.csv(
        "alpha_c_aggregate.csv",
        &["c", "mean_alpha_c", "max_alpha_c", "n_values", "n_always_collapses", "n_never_collapses"],
        result.aggregate.iter().map(|a| {
            [
                num(a.c),
                opt(a.mean),
                opt(a.max),
                a.n_values.to_string(),
                a.n_always.to_string(),
                a.n_never.to_string(),
            ]
        }),
    )?;

    let bins = cfg.bins.unwrap_or(9);
    let tol = cfg.equality_tol.unwrap_or(0.0);
    let hists: Vec<_> = cs.iter().map(|&c| max_alpha_ci_histogram(&net, c, bins, tol)).collect();
    out.csv(
        "max_alpha_histogram.csv",
        &["c", "bin_center", "bin_lo", "bin_hi", "fraction"],
        hists.iter().flat_map(|h| {
            h.bins
                .iter()
                .map(move |b| [num(h.c), num(b.center), num(b.lo), num(b.hi), num(b.fraction)])
        }),
    )?;
    out.csv(
        "max_alpha_boundary.csv",
        &["c", "fraction_at_boundary", "n_without_neighbors"],
        hists
            .iter()
            .map(|h| [num(h.c), num(h.fraction_at_boundary), h.n_without_neighbors.to_string()]),
    )?;
    out.manifest("sweep", cfg)
}

pub fn metrics_cmd(cfg: &RunConfig) -> Result<()> {
    let net = load_network(cfg)?;
    let c = single_c(cfg)?;
    let tol = cfg.equality_tol.unwrap_or(0.0);
    let rows = stock_metrics(&net, c, tol, cfg.kcore_graph.unwrap_or_default());
    let id = |s: usize| net.stock_id(s).to_string();

    let mut out = OutputDir::create(cfg.out_dir())?;
    out.csv(
        "metrics.csv",
        &["stock_id", "degree", "branching", "avg_nestedness", "k_core", "p_d"],
        rows.iter().map(|r| {
            [
                id(r.stock),
                r.degree.to_string(),
                num(r.branching),
                opt(r.average_nestedness),
                r.k_core.to_string(),
                num(r.p_d),
            ]
        }),
    )?;
    out.csv("p_d.csv", &["stock_id", "p_d"], rows.iter().map(|r| [id(r.stock), num(r.p_d)]))?;
    let knn = knn_degree(&net);
    out.csv(
        "knn.csv",
        &["side", "degree", "knn"],
        knn.stocks
            .iter()
            .map(|(k, v)| ["stock".to_string(), k.to_string(), num(*v)])
            .chain(knn.investors.iter().map(|(k, v)| ["investor".to_string(), k.to_string(), num(*v)])),
    )?;

    if let Some(alpha) = cfg.alpha {
        let timing = average_cascade_steps(&net, c, alpha, cfg.max_steps)?;
        out.csv(
            "tau_bar.csv",
            &["stock_id", "tau_bar", "failures", "p_d"],
            (0..net.n_stocks())
                .map(|s| [id(s), opt(timing.tau_bar[s]), timing.failures[s].to_string(), num(timing.p_d[s])]),
        )?;
        let corr = timing.correlation;
        out.csv(
            "tau_bar_correlation.csv",
            &["n", "r", "p_value", "n_never_fail"],
            [[
                corr.map(|x| x.n.to_string()).unwrap_or_default(),
                opt(corr.map(|x| x.r)),
                opt(corr.map(|x| x.p_value)),
                timing.n_never_fail.to_string(),
            ]],
        )?;
    }
    out.manifest("metrics", cfg)
}

pub fn randomize_cmd(cfg: &RunConfig) -> Result<()> {
    let Some(seed) = cfg.seed else {
        bail!("randomize needs --seed");
    };
    let net = load_network(cfg)?;
    let cs = cfg.c_values(DEFAULT_C_GRID)?;
    let ps = cfg.p_values()?;
    let trials = cfg.trials.unwrap_or(DEFAULT_TRIALS);
    let settings = cfg.bisection()?;
    let outcomes = randomization_trials(&net, &ps, trials, &cs, &settings, seed)?;
    let summary = summarize_trials(&ps, &cs, &outcomes);

    let mut out = OutputDir::create(cfg.out_dir())?;
    out.csv(
        "randomize_trials.csv",
        &["p", "trial", "shock_id", "c", "alpha_c", "status"],
        outcomes.iter().flat_map(|o| {
            let shock = net.stock_id(o.shock).to_string();
            cs.iter().zip(&o.alpha_c).map(move |(&c, a)| {
                let [v, label] = confidence_cells(a);
                [num(o.p), o.trial.to_string(), shock.clone(), num(c), v, label]
            })
        }),
    )?;
    out.csv(
        "randomize_results.csv",
        &["p", "c", "mean_alpha_c", "n_excluded"],
        summary
            .points
            .iter()
            .map(|p| [num(p.p), num(p.c), opt(p.mean_alpha_c), p.n_excluded.to_string()]),
    )?;
    out.csv(
        "randomize_fit.csv",
        &["p", "slope", "intercept", "r2"],
        summary.fits.iter().map(|f| {
            [
                num(f.p),
                opt(f.fit.map(|x| x.slope)),
                opt(f.fit.map(|x| x.intercept)),
                opt(f.fit.map(|x| x.r2)),
            ]
        }),
    )?;
    out.manifest("randomize", cfg)
}

fn side_cells(wave: String, side: &str, s: &SideCorrelation) -> [String; 6] {
    let status = serde_json::to_value(s.status)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    [
        wave,
        side.to_string(),
        s.n.to_string(),
        status,
        opt(s.correlation.map(|c| c.r)),
        opt(s.correlation.map(|c| c.p_value)),
    ]
}

pub fn waves_cmd(cfg: &RunConfig) -> Result<()> {
    let Some(path) = &cfg.events else {
        bail!("waves needs --events");
    };
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let sessions = cfg.sessions()?;
    let set = normalize_events(read_events_csv(file)?, &sessions);
    let events = set.events;
    let waves = detect_waves(&events, cfg.gap_tolerance.unwrap_or(0), &sessions);

    let mut out = OutputDir::create(cfg.out_dir())?;
    out.csv(
        "waves.csv",
        &["wave", "date", "start", "end", "n_failures", "peak", "peaks"],
        waves.iter().enumerate().map(|(i, w)| {
            let peaks: Vec<String> = w.peaks.iter().map(|&m| format_minute(m)).collect();
            [
                i.to_string(),
                w.date.to_string(),
                format_minute(w.start),
                format_minute(w.end),
                w.n_failures().to_string(),
                format_minute(w.peak()),
                peaks.join(" "),
            ]
        }),
    )?;
    out.csv(
        "wave_counts.csv",
        &["wave", "date", "minute", "count"],
        waves.iter().enumerate().flat_map(|(i, w)| {
            w.counts.iter().enumerate().map(move |(k, &n)| {
                [i.to_string(), w.date.to_string(), format_minute(w.start + k as u32), n.to_string()]
            })
        }),
    )?;

    if cfg.holdings.is_some() {
        let net = load_network(cfg)?;
        let c = single_c(cfg)?;
        let p_d = limitcascade::driving_node_probability(&net, c, cfg.equality_tol.unwrap_or(0.0));
        let by_id: HashMap<String, f64> = (0..net.n_stocks()).map(|s| (net.stock_id(s).to_string(), p_d[s])).collect();
        let timeline = max_pd_timeline(&events, &by_id, &waves);
        out.csv(
            "max_pd_timeline.csv",
            &["wave", "date", "minute", "time_to_peak", "n_failed", "max_pd"],
            timeline.minutes.iter().map(|m| {
                [
                    m.wave.to_string(),
                    waves[m.wave].date.to_string(),
                    format_minute(m.minute),
                    m.time_to_peak.to_string(),
                    m.n_failed.to_string(),
                    opt(m.max_pd),
                ]
            }),
        )?;
        let mut rows = Vec::new();
        for wc in &timeline.per_wave {
            rows.push(side_cells(wc.wave.to_string(), "before", &wc.before));
            rows.push(side_cells(wc.wave.to_string(), "after", &wc.after));
        }
        rows.push(side_cells("pooled".into(), "before", &timeline.pooled_before));
        rows.push(side_cells("pooled".into(), "after", &timeline.pooled_after));
        out.csv("max_pd_correlation.csv", &["wave", "side", "n", "status", "r", "p_value"], rows)?;

        let cores = k_cores(&net, cfg);
        let width = cfg.bucket_minutes.unwrap_or(1).max(1);
        let mut unknown = 0;
        // ISO dates sort chronologically.
        let failures: Vec<((String, u32), usize)> = events
            .iter()
            .filter_map(|e| match net.stock_index(&e.stock) {
                Some(s) => Some(((e.date.to_string(), e.minute / width * width), s)),
                None => {
                    unknown += 1;
                    None
                }
            })
            .collect();
        if unknown > 0 {
            log::warn!("{unknown} event(s) reference stocks missing from the holdings");
        }
        let traj = kcore_trajectory(&failures, &cores);
        out.csv(
            "kcore_trajectory.csv",
            &with_summary_header(&["date", "bucket_start"]),
            traj.iter().map(|((date, start), s)| {
                [date.clone(), format_minute(*start)].into_iter().chain(summary_cells(s)).collect::<Vec<_>>()
            }),
        )?;
    }
    out.manifest("waves", cfg)
}

pub fn cascade_cmd(cfg: &RunConfig) -> Result<()> {
    let net = load_network(cfg)?;
    let shocks = shock_indices(&net, cfg)?;
    ensure!(!shocks.is_empty(), "cascade needs --shock");
    let Some(alpha) = cfg.alpha else {
        bail!("cascade needs --alpha");
    };
    let c = single_c(cfg)?;
    let mut params = CascadeParams::new(alpha, c);
    params.max_steps = cfg.max_steps;
    let result = run_cascade(&net, &shocks, &params)?;
    if result.truncated {
        log::warn!("cascade stopped at the step limit with failures still pending");
    }

    let mut out = OutputDir::create(cfg.out_dir())?;
    out.csv(
        "cascade_timeline.csv",
        &["step", "stock_id"],
        cascade_failures(&result)
            .into_iter()
            .map(|(tau, s)| [tau.to_string(), net.stock_id(s).to_string()]),
    )?;
    out.csv(
        "cascade_summary.csv",
        &["steps", "truncated", "n_failed", "final_failed_fraction", "surviving_market_value"],
        [[
            result.steps.to_string(),
            result.truncated.to_string(),
            result.n_failed().to_string(),
            num(result.final_failed_fraction),
            num(result.surviving_market_value),
        ]],
    )?;
    let traj = kcore_trajectory(&cascade_failures(&result), &k_cores(&net, cfg));
    out.csv(
        "cascade_kcore.csv",
        &with_summary_header(&["step"]),
        traj.iter()
            .map(|(tau, s)| std::iter::once(tau.to_string()).chain(summary_cells(s)).collect::<Vec<_>>()),
    )?;
    out.manifest("cascade", cfg)
}
