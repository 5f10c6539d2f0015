//! Writes a simulated session to disk, reads it back and replays it.
//!
//! cargo run -p feedscout --example replay_log

use std::sync::Arc;

use feedscout::corpus::StandardFeed;
use feedscout::event_log;
use feedscout::harness::{simulate_session, SimOptions};
use feedscout::provider::TemplateProvider;
use feedscout::session::replay;
use feedscout::Condition;

fn main() -> feedscout::Result<()> {
    let dir = std::env::temp_dir().join("feedscout-replay");
    let mut opts = SimOptions::new(Arc::new(TemplateProvider));
    opts.out_dir = Some(dir.clone());
    std::fs::create_dir_all(&dir)?;
    let (live, outcome) = simulate_session("replay-demo", None, Condition::UserChat, StandardFeed::A, 21, &opts)?;
    let path = outcome.log_path.expect("written to disk");

    let log = event_log::load(&path)?;
    println!("{}: {} events", path.display(), log.stream.len());
    let mut kinds = std::collections::BTreeMap::new();
    for e in log.stream.events() {
        *kinds.entry(e.data.kind()).or_insert(0) += 1;
    }
    for (k, n) in kinds {
        println!("  {k:<18} {n}");
    }

    let rebuilt = replay(&log, Arc::new(live.corpus().clone()), Arc::new(TemplateProvider))?;
    println!("same final feed: {}", rebuilt.feed().items() == live.feed().items());
    println!("same metrics:    {}", rebuilt.metrics()? == outcome.metrics);
    Ok(())
}
