//! Runs twenty simulated sessions per condition and prints the
//! per-condition summary table.
//!
//! cargo run -p feedscout --example simulated_study --release

use std::sync::Arc;
use std::time::Instant;

use feedscout::corpus::StandardFeed;
use feedscout::harness::{export_results, simulate_session, SimOptions};
use feedscout::provider::TemplateProvider;
use feedscout::Condition;

fn main() -> feedscout::Result<()> {
    let opts = SimOptions::new(Arc::new(TemplateProvider));
    let started = Instant::now();
    let mut metrics = Vec::new();
    for seed in 0..20u64 {
        let feed = StandardFeed::ALL[seed as usize % 3];
        for condition in Condition::ALL {
            let id = format!("s{seed:02}-{}", condition.as_str().to_lowercase());
            let (_, outcome) = simulate_session(&id, None, condition, feed, seed, &opts)?;
            metrics.push(outcome.metrics);
        }
    }
    let table = export_results(&metrics);
    print!("{}", table.to_text());
    println!("\n{} sessions in {:.1?}", metrics.len(), started.elapsed());
    Ok(())
}
