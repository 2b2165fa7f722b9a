fn main() {
    let args: Vec<String> = std::env::args().collect();
    let suite: srctraces_core::checks::Suite = args[1].parse().unwrap();
    let t0 = std::time::Instant::now();
    let outcomes = srctraces_core::checks::run_suite(suite, &[1729]).unwrap();
    for o in &outcomes {
        println!("{o}");
    }
    println!("elapsed: {:.1?}", t0.elapsed());
}
