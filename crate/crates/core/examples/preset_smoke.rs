use srctraces_core::harness::{
    best_of_grid, best_of_grid_by_s_error, preset, run_experiment, steps_to_target, Scale,
    Selector,
};

fn main() {
    let name = std::env::args().nth(1).unwrap();
    let seed: u64 = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(1729);
    let t0 = std::time::Instant::now();
    for config in preset(&name, Scale::Desk, seed).unwrap() {
        let result = run_experiment(&config, None, None).unwrap();
        println!("== {} (initial err {:.3}) ==", config.name, result.initial_mean_error);
        let best = best_of_grid(&result.aggregates, Selector::FinalError).unwrap();
        for c in &best {
            println!(
                "  {:<24} cfg {:>3}  final {:>8.4}  final-s {}  auc {:>10.1}",
                c.learner_id,
                c.config_index,
                c.final_error().unwrap(),
                c.final_s_error().map(|s| format!("{s:8.4}")).unwrap_or_else(|| "        ".into()),
                c.area_under_curve().unwrap(),
            );
        }
        if name == "fig3" {
            println!("  -- by final S error --");
            for c in best_of_grid_by_s_error(&result.aggregates).unwrap() {
                println!(
                    "  {:<24} cfg {:>3}  final-s {:>8.4}",
                    c.learner_id, c.config_index, c.final_s_error().unwrap()
                );
            }
        }
        if let Some(targets) = &result.resolved_targets {
            let table = steps_to_target(&result.aggregates, targets).unwrap();
            println!("{table}");
        }
        let diverged: usize = result.aggregates.iter().map(|a| a.diverged_runs).sum();
        if diverged > 0 {
            println!("  ({diverged} diverged run(s) across the grid)");
        }
    }
    println!("elapsed: {:.1?}", t0.elapsed());
}
// (5%-checkpoint probe appended during tuning)
