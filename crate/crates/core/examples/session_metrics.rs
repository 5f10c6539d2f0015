//! Drives a SEARCH session by hand and prints its metrics table.
//!
//! cargo run -p feedscout --example session_metrics

use std::sync::Arc;

use feedscout::corpus::StandardFeed;
use feedscout::event_log::{Boundary, ClickTarget, Phase};
use feedscout::provider::TemplateProvider;
use feedscout::{Condition, Session, SessionSetup};

fn browse(s: &mut Session, t: &mut u64, n: usize, dwell: u64) -> feedscout::Result<()> {
    for _ in 0..n {
        let next = s
            .feed()
            .search_block()
            .iter()
            .chain(s.feed().items()[s.feed().cursor()..].iter())
            .find(|fi| !s.feed().served().contains(&fi.item.item_id))
            .map(|fi| fi.item.item_id.clone());
        let Some(id) = next else { break };
        *t += 400;
        s.scroll(*t, (*t / 4) as i64)?;
        s.impression_enter(*t, &id)?;
        *t += dwell;
        s.impression_exit(*t, &id)?;
    }
    Ok(())
}

fn main() -> feedscout::Result<()> {
    let setup = SessionSetup::standard("by-hand", Condition::Search, StandardFeed::A, 8);
    let corpus = Arc::new(setup.corpus.load()?);
    let mut s = Session::new(setup, corpus, Arc::new(TemplateProvider))?;
    let mut t = 0;
    s.phase_mark(t, Phase::Warmup, Boundary::Start)?;
    browse(&mut s, &mut t, 12, 1200)?;
    s.phase_mark(t, Phase::Warmup, Boundary::End)?;
    s.phase_mark(t, Phase::Exploration, Boundary::Start)?;
    browse(&mut s, &mut t, 6, 1200)?;
    t += 500;
    s.click(t, ClickTarget::SearchBar, None)?;
    t += 4000;
    s.search(t, "hiking trails")?;
    browse(&mut s, &mut t, 8, 3500)?;
    s.phase_mark(t, Phase::Exploration, Boundary::End)?;

    print!("{}", s.metrics()?.to_table());
    Ok(())
}
