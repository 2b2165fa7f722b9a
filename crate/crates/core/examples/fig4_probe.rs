use srctraces_core::harness::{best_of_grid, preset, run_experiment, Scale, Selector};

fn main() {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(1729);
    for config in preset("fig4", Scale::Desk, seed).unwrap() {
        let result = run_experiment(&config, None, None).unwrap();
        let early_step = config.horizon / 20;
        println!("== {} (5% checkpoint = step {early_step}) ==", config.name);
        let best = best_of_grid(&result.aggregates, Selector::FinalError).unwrap();
        for c in &best {
            println!(
                "  {:<24} early {:>8.4}  final {:>8.4}",
                c.learner_id,
                c.error_near_step(early_step).unwrap(),
                c.final_error().unwrap(),
            );
        }
    }
}
