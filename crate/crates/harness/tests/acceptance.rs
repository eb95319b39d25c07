//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Runs with `harness = false` so the lines print without `--nocapture`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use teg_core::governor::LandauParams;
use teg_harness::verify::{self, book, convergence, damping, equilibrium, fear, lyapunov, nooom, stress, thermal};
use teg_harness::verify::Verdict;
use teg_harness::{run_scenario, ScenarioConfig};

const SEED: u64 = 1;

fn all_of(name: &str, parts: Vec<Verdict>) -> Verdict {
    let passed = parts.iter().all(|v| v.passed);
    let detail = parts
        .iter()
        .map(|v| format!("{} {}: {}", if v.passed { "ok" } else { "FAILED" }, v.name, v.detail))
        .collect::<Vec<_>>()
        .join("; ");
    Verdict::new(name, passed, detail)
}

fn no_oom() -> Verdict {
    let t = Instant::now();
    let (_, v) = nooom::verify_no_oom(1000, SEED);
    let took = t.elapsed();
    let budget = Verdict::new(
        "budget",
        took < Duration::from_secs(60),
        format!("{:.2} s of 60 s", took.as_secs_f64()),
    );
    all_of("1 no_oom", vec![v, budget])
}

fn conservation_scenarios() -> Vec<(String, ScenarioConfig)> {
    let mut out = Vec::new();
    for seed in 1..=3 {
        let mut c = ScenarioConfig::seeded(seed);
        c.run.epochs = 80;
        out.push((format!("default seed {seed}"), c));
    }
    let mut broke = ScenarioConfig::seeded(11);
    broke.run.epochs = 80;
    broke.population.shrimp.e_init = 60;
    broke.population.whale.e_init = 150;
    out.push(("thin wallets".into(), broke));
    let mut crowd = ScenarioConfig::seeded(12);
    crowd.run.epochs = 60;
    crowd.population.agents = 160;
    crowd.population.arrival_rate = 2.0;
    out.push(("crowded".into(), crowd));
    out
}

fn conservation() -> Verdict {
    let mut parts = Vec::new();
    for (label, cfg) in conservation_scenarios() {
        match run_scenario(&cfg) {
            Ok(run) => {
                let mut v = verify::verify_conservation(&run.events);
                v.name = label;
                parts.push(v);
            }
            Err(e) => parts.push(Verdict::new(&label, false, e.to_string())),
        }
    }
    all_of("2 conservation", parts)
}

fn magnetic() -> Verdict {
    let (_, v) = equilibrium::verify_equilibrium(&equilibrium::EquilibriumConfig::default());
    all_of("3 magnetic_equilibrium", vec![v])
}

fn lyapunov_and_damping() -> Verdict {
    let (_, l) = lyapunov::verify_attractors(&[-0.3, 0.0, 0.5], &[0.5, 1.0, 2.0]);
    let (_, d) = damping::verify_damping(&damping::DampingConfig::default(), 10);
    all_of("4 lyapunov_and_dual_damping", vec![l, d])
}

fn barrier() -> Verdict {
    let (_, v) = stress::verify_stress(&stress::StressConfig::default());
    all_of("5 barrier_safety", vec![v])
}

fn landau() -> Verdict {
    let p = LandauParams {
        a: 0.05,
        b: 1.0,
        re_c: 10.0,
        h_field: 0.0,
        gamma_bounds: (-1.0, 1e6),
    };
    all_of("6 landau_pitchfork", vec![stress::verify_landau(&p, 100.0, 100)])
}

fn scaling() -> Verdict {
    let (_, v) = convergence::verify_convergence(&convergence::ConvergenceConfig::default());
    all_of("7 scaling_laws", vec![v])
}

fn orderbook() -> Verdict {
    let (_, v) = book::verify_orderbook(1000, 10_000, SEED);
    all_of("8 orderbook_oracle", vec![v])
}

fn vickrey() -> Verdict {
    let (_, v) = book::verify_truthfulness(10);
    all_of("9 vickrey_truthfulness", vec![v])
}

fn fear_premium() -> Verdict {
    match fear::verify_fear(&ScenarioConfig::seeded(SEED)) {
        Ok((_, v)) => all_of("10 fear_premium", vec![v]),
        Err(e) => Verdict::new("10 fear_premium", false, e.to_string()),
    }
}

fn thermal_spread() -> Verdict {
    let seeds: Vec<u64> = (1..=5).collect();
    match thermal::verify_thermal(&ScenarioConfig::default(), &seeds) {
        Ok((_, v)) => all_of("11 thermal_spread", vec![v]),
        Err(e) => Verdict::new("11 thermal_spread", false, e.to_string()),
    }
}

fn determinism() -> Verdict {
    let mut cfg = ScenarioConfig::seeded(SEED);
    cfg.run.threads = 1;
    match verify::verify_determinism(&cfg, &[4]) {
        Ok(v) => all_of("12 determinism", vec![v]),
        Err(e) => Verdict::new("12 determinism", false, e.to_string()),
    }
}

fn main() -> ExitCode {
    let criteria: [fn() -> Verdict; 12] = [
        no_oom,
        conservation,
        magnetic,
        lyapunov_and_damping,
        barrier,
        landau,
        scaling,
        orderbook,
        vickrey,
        fear_premium,
        thermal_spread,
        determinism,
    ];
    let mut failed = 0;
    for c in criteria {
        let v = c();
        println!("{}", v.line());
        failed += usize::from(!v.passed);
    }
    println!("acceptance: {}/12 passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
