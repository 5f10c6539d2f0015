//! Simulates a warm-up where the reader lingers on one rare category and
//! shows what the analyzer makes of it.
//!
//! cargo run -p feedscout --example insight_report

use std::sync::Arc;

use feedscout::analysis::{build_insight, should_trigger};
use feedscout::corpus::StandardFeed;
use feedscout::event_log::{Boundary, Phase};
use feedscout::provider::TemplateProvider;
use feedscout::{Condition, Session, SessionSetup};

fn main() -> feedscout::Result<()> {
    let setup = SessionSetup::standard("insight", Condition::AiInit, StandardFeed::A, 3);
    let corpus = Arc::new(setup.corpus.load()?);
    let mut s = Session::new(setup, corpus, Arc::new(TemplateProvider))?;
    s.phase_mark(0, Phase::Warmup, Boundary::Start)?;

    let items: Vec<(String, String)> = s
        .feed()
        .items()
        .iter()
        .map(|fi| (fi.item.item_id.clone(), fi.item.category.clone()))
        .collect();
    let dominant = ["food", "fashion"];
    let favourite = items
        .iter()
        .map(|(_, c)| c.clone())
        .find(|c| !dominant.contains(&c.as_str()))
        .expect("feed has off-topic items");
    println!("reader secretly likes {favourite}");
    let mut t = 0;
    for (id, category) in &items {
        let dwell = if *category == favourite { 6000 } else { 900 };
        t += 300;
        s.impression_enter(t, id)?;
        t += dwell;
        s.impression_exit(t, id)?;
    }

    let mut config = s.config().analyzer();
    // Seven off-topic items spread over twelve categories rarely repeat, so
    // let a single long look count.
    config.min_evidence = 1;
    let report = build_insight(s.feed(), s.events(), &s.corpus().category_ids(), &config);
    println!("feed entropy: {:.2} bits over {} browsed items", report.entropy_bits, report.browsed_item_count);
    for (c, share) in &report.dominant {
        println!("dominant: {c} ({:.0}%)", share * 100.0);
    }
    println!("underrepresented: {}", report.underrepresented.join(", "));
    for sig in &report.signals {
        println!(
            "latent signal: {} ({} views, mean dwell {:.0} ms vs {:.0} ms baseline)",
            sig.category, sig.evidence_count, sig.mean_dwell_ms, sig.baseline_dwell_ms
        );
    }
    let decision = should_trigger(s.events(), config_level(&s), &config);
    println!("trigger now? {} ({})", decision.fire, decision.reason);
    Ok(())
}

fn config_level(s: &Session) -> feedscout::analysis::ProactivityLevel {
    s.config().proactivity
}
