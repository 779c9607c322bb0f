mod support;

use limitcascade::{run_cascade, CascadeParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn subset(failed: &[Option<u32>], other: &[Option<u32>]) -> bool {
    failed.iter().zip(other).all(|(a, b)| a.is_none() || b.is_some())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matches_naive_reference(seed in any::<u64>(), alpha in 0.0..=1.0f64, c in 0.001..0.999f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = support::random_network(&mut rng, 5, 4);
        let n = net.n_stocks();
        let mut shock: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.3)).collect();
        if shock.is_empty() {
            shock.push(rng.random_range(0..n));
        }
        let got = run_cascade(&net, &shock, &CascadeParams::new(alpha, c)).unwrap();
        let want = support::naive_cascade(&net, &shock, alpha, c);
        prop_assert_eq!(&got.timeline, &want);
        prop_assert!(!got.truncated);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn monotone_in_alpha_and_c(seed in any::<u64>(), a in 0.0..=1.0f64, b in 0.0..=1.0f64,
                               c1 in 0.01..0.99f64, c2 in 0.01..0.99f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = support::random_network(&mut rng, 12, 6);
        let (lo_a, hi_a) = if a <= b { (a, b) } else { (b, a) };
        let (lo_c, hi_c) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
        for shock in 0..net.n_stocks() {
            let weak = run_cascade(&net, &[shock], &CascadeParams::new(lo_a, lo_c)).unwrap();
            let strong = run_cascade(&net, &[shock], &CascadeParams::new(hi_a, lo_c)).unwrap();
            prop_assert!(subset(&strong.failed_at, &weak.failed_at));
            let deep = run_cascade(&net, &[shock], &CascadeParams::new(lo_a, hi_c)).unwrap();
            prop_assert!(subset(&deep.failed_at, &weak.failed_at));
        }
    }

    #[test]
    fn result_shape(seed in any::<u64>(), alpha in 0.0..=1.0f64, c in 0.01..0.99f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = support::random_network(&mut rng, 15, 6);
        let total: f64 = (0..net.n_stocks()).map(|s| net.stock_value(s)).sum();
        let r = run_cascade(&net, &[0], &CascadeParams::new(alpha, c)).unwrap();
        let mut seen = vec![false; net.n_stocks()];
        for step in &r.timeline {
            for &s in step {
                prop_assert!(!seen[s]);
                seen[s] = true;
            }
        }
        prop_assert!(r.steps <= net.n_stocks());
        prop_assert!((0.0..=1.0).contains(&r.final_failed_fraction));
        prop_assert!(r.surviving_market_value <= total);
    }
}

#[test]
fn surviving_value_never_recovers() {
    // Cap the cascade one step further each run.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let net = support::random_network(&mut rng, 10, 5);
        let mut last = f64::INFINITY;
        for steps in 1..=net.n_stocks() {
            let params = CascadeParams::new(0.8, 0.3).with_max_steps(steps);
            let r = run_cascade(&net, &[0], &params).unwrap();
            let live: f64 = r.surviving_market_value;
            assert!(live <= last + 1e-12);
            last = live;
        }
    }
}
