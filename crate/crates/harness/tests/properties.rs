use proptest::prelude::*;

use teg_harness::baseline::{baseline_schedule, BaselineModel};
use teg_harness::config::parse_range;
use teg_harness::verify::{verify_conservation, verify_replay};
use teg_harness::{run_scenario, ScenarioConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn small_runs_conserve_and_replay(
        seed in 0u64..10_000,
        agents in 1usize..40,
        epochs in 1u64..12,
        shrimp_wallet in 20u64..2000,
        rate in 0.0f64..3.0,
    ) {
        let mut cfg = ScenarioConfig::seeded(seed);
        cfg.population.agents = agents;
        cfg.population.shrimp.e_init = shrimp_wallet;
        cfg.population.arrival_rate = rate;
        cfg.run.epochs = epochs;
        let run = run_scenario(&cfg).unwrap();
        prop_assert!(run.supply.balanced());
        let v = verify_conservation(&run.events);
        prop_assert!(v.passed, "{}", v.detail);
        prop_assert!(verify_replay(&run.events, &run.metrics, &cfg.metrics).passed);
        prop_assert_eq!(run.metrics.len() as u64, epochs);
    }
}

proptest! {
    #[test]
    fn integer_ranges_are_inclusive(a in -50i64..50, len in 0i64..30) {
        let v = parse_range(&format!("{a}..{}", a + len)).unwrap();
        prop_assert_eq!(v.len() as i64, len + 1);
        prop_assert_eq!(v[0].parse::<i64>().unwrap(), a);
    }

    #[test]
    fn baseline_never_overfills(
        free in prop::collection::vec(0u64..64, 1..12),
        jobs in prop::collection::vec((0u64..100, 1u64..40), 0..30),
    ) {
        let model = BaselineModel { tau: 1.0, lambda: 0.5 };
        let plan = baseline_schedule(&free, &jobs, &model);
        prop_assert_eq!(plan.placements.len(), jobs.len());
        let mut left = free.clone();
        let mut blocked = false;
        for (k, &(id, place)) in plan.placements.iter().enumerate() {
            let size = jobs[k].1;
            prop_assert_eq!(id, jobs[k].0);
            // tightest fitting slot, lowest index on ties
            let fit = (0..left.len()).filter(|&i| left[i] >= size).min_by_key(|&i| (left[i], i));
            match place {
                Some(i) => {
                    prop_assert!(!blocked, "placed behind a blocked job");
                    prop_assert_eq!(Some(i), fit);
                    left[i] -= size;
                }
                None => {
                    prop_assert!(blocked || fit.is_none());
                    blocked = true;
                }
            }
        }
    }
}
