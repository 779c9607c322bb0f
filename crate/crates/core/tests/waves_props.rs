use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use limitcascade::waves::{detect_waves, max_pd_timeline, normalize_events, FailureEvent, Sessions};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn events(seed: u64) -> Vec<FailureEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sessions = Sessions::default();
    let mut out = Vec::new();
    for k in 0..rng.random_range(0..80) {
        let ranges = sessions.ranges();
        let (a, b) = ranges[rng.random_range(0..ranges.len())];
        let day = rng.random_range(1..=3);
        out.push(FailureEvent {
            date: NaiveDate::from_ymd_opt(2015, 7, day).unwrap(),
            minute: rng.random_range(a..=(a + 25).min(b)),
            stock: format!("S{k}"),
        });
    }
    out
}

proptest! {
    #[test]
    fn waves_partition_event_minutes(seed in any::<u64>(), gap in 0u32..4) {
        let evs = events(seed);
        let waves = detect_waves(&evs, gap, &Sessions::default());
        let mut per_minute: BTreeMap<(NaiveDate, u32), u32> = BTreeMap::new();
        for e in &evs {
            *per_minute.entry((e.date, e.minute)).or_default() += 1;
        }
        for (&(d, m), &n) in &per_minute {
            let owners: Vec<_> = waves.iter().filter(|w| w.contains(d, m)).collect();
            prop_assert_eq!(owners.len(), 1);
            prop_assert_eq!(owners[0].counts[(m - owners[0].start) as usize], n);
        }
        let total: u32 = waves.iter().map(|w| w.n_failures()).sum();
        prop_assert_eq!(total as usize, evs.len());
        for w in &waves {
            prop_assert!(w.counts[0] > 0 && *w.counts.last().unwrap() > 0);
            let top = *w.counts.iter().max().unwrap();
            prop_assert_eq!(w.counts[(w.peak() - w.start) as usize], top);
        }
        for pair in waves.windows(2) {
            if pair[0].date == pair[1].date && pair[0].session == pair[1].session {
                prop_assert!(pair[1].start - pair[0].end - 1 > gap);
            }
        }
    }

    #[test]
    fn waves_ignore_order_and_are_idempotent(seed in any::<u64>(), shuffle in any::<u64>()) {
        let evs = events(seed);
        let mut shuffled = evs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        let s = Sessions::default();
        let a = detect_waves(&evs, 1, &s);
        prop_assert_eq!(&a, &detect_waves(&shuffled, 1, &s));
        let once = normalize_events(evs.clone(), &s);
        let twice = normalize_events(once.events.clone(), &s);
        prop_assert_eq!(&once.events, &twice.events);
        prop_assert_eq!(detect_waves(&once.events, 1, &s), detect_waves(&twice.events, 1, &s));
    }

    #[test]
    fn minute_maximum_matches_brute_force(seed in any::<u64>()) {
        let evs = events(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut p_d: HashMap<String, f64> = HashMap::new();
        for e in &evs {
            if rng.random_bool(0.8) {
                p_d.insert(e.stock.clone(), rng.random());
            }
        }
        let waves = detect_waves(&evs, 0, &Sessions::default());
        let t = max_pd_timeline(&evs, &p_d, &waves);
        for row in &t.minutes {
            let w = &waves[row.wave];
            let brute = evs
                .iter()
                .filter(|e| e.date == w.date && e.minute == row.minute)
                .filter_map(|e| p_d.get(&e.stock).copied())
                .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.max(p))));
            prop_assert_eq!(row.max_pd, brute);
            prop_assert_eq!(row.time_to_peak, row.minute as i64 - w.peak() as i64);
        }
        prop_assert_eq!(t.missing, evs.iter().filter(|e| !p_d.contains_key(&e.stock)).count());
    }
}
