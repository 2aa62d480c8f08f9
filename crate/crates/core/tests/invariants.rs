use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ::pqga::harness::config::PolicyKind;
use ::pqga::harness::{run_experiment, ExperimentConfig};
use ::pqga::metrics::{application_metrics, dynamic_regret, static_regret};
use ::pqga::oracles::{period_terms, weighted_objective};

fn config(kind: &str, seed: u64) -> ExperimentConfig {
    let text = format!(
        "seed = {seed}\nhorizon = 120\n[problem]\nkind = \"{kind}\"\n\
         [problem.mimo]\nantennas = 8\nproviders = 2\nusers_per_provider = 2\n\
         [schedule]\ndurations = [4, 8]\noffsets = [[0, 2], [0, 3, 5]]\n\
         [algorithm]\ncorollary = 4\ntarget = \"static\"\nsteps = 2\n"
    );
    ::pqga::harness::parse_config(&text).unwrap()
}

#[test]
fn regrets_are_ordered_for_every_policy() {
    for kind in ["synthetic", "mimo"] {
        for seed in 1..=3 {
            let outcome = run_experiment(&config(kind, seed)).unwrap();
            let tol = 1e-6 * outcome.schedule.num_periods() as f64;
            for run in &outcome.runs {
                let re_dyn = dynamic_regret(&run.trace, &outcome.dynamic_benchmark).unwrap();
                let re_stat = static_regret(&run.trace, &outcome.static_benchmark).unwrap();
                // the per-period optimum is the smallest feasible loss in each period,
                // so it dominates any fixed decision
                if run
                    .trace
                    .periods
                    .iter()
                    .all(|p| p.constraint_values.iter().all(|g| *g <= 1e-9))
                {
                    assert!(re_dyn >= -tol, "{kind} {seed} {}: {re_dyn}", run.kind);
                }
                assert!(
                    re_dyn >= re_stat - tol,
                    "{kind} {seed} {}: {re_dyn} < {re_stat}",
                    run.kind
                );
            }
        }
    }
}

#[test]
fn average_power_stays_below_the_peak() {
    for seed in 1..=3 {
        let outcome = run_experiment(&config("mimo", seed)).unwrap();
        let p_max = outcome.config.problem.mimo.p_max();
        for run in &outcome.runs {
            let m = application_metrics(&run.trace).unwrap();
            assert!(m.power <= p_max * (1.0 + 1e-12), "{}: {}", run.kind, m.power);
            assert!(m.rate >= 0.0);
        }
    }
}

#[test]
fn oracles_beat_random_feasible_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for kind in ["synthetic", "mimo"] {
        let mut cfg = config(kind, 4);
        cfg.policies = vec![PolicyKind::Offline];
        let outcome = run_experiment(&cfg).unwrap();
        let problem = outcome.instance.problem();
        let all: Vec<(usize, f64)> = (0..outcome.schedule.num_periods())
            .flat_map(|i| period_terms(&outcome.schedule, i))
            .collect();
        for _ in 0..100 {
            let raw: Vec<f64> = (0..problem.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let x = problem.project_feasible(&raw);
            for (i, bench) in outcome.benchmarks.iter().enumerate() {
                let b = bench.as_ref().unwrap();
                let terms = period_terms(&outcome.schedule, i);
                let f = weighted_objective(&problem, &terms, &x);
                assert!(
                    b.objective <= f + 1e-7 * f.max(1.0),
                    "{kind} period {i}: {} > {f}",
                    b.objective
                );
            }
            let f = weighted_objective(&problem, &all, &x);
            assert!(
                outcome.offline.objective <= f + 1e-7 * f.max(1.0),
                "{kind}: {} > {f}",
                outcome.offline.objective
            );
        }
    }
}
