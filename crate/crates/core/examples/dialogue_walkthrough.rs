//! One AI-initiated exploration cycle from trigger to blended refresh,
//! printing every assistant turn.
//!
//! cargo run -p feedscout --example dialogue_walkthrough

use std::sync::Arc;

use feedscout::corpus::StandardFeed;
use feedscout::dialogue::{AssistantTurn, Stage};
use feedscout::event_log::{Boundary, Phase};
use feedscout::feed::Origin;
use feedscout::provider::TemplateProvider;
use feedscout::session::Notification;
use feedscout::{Condition, Session, SessionSetup};

fn show(turns: &[AssistantTurn]) {
    for turn in turns {
        println!("assistant [{:?}]: {}", turn.turn, turn.text);
        for o in &turn.options {
            println!("    ({}) {}", o.option_id, o.label);
        }
    }
}

fn main() -> feedscout::Result<()> {
    let setup = SessionSetup::standard("walk", Condition::AiInit, StandardFeed::B, 12);
    let corpus = Arc::new(setup.corpus.load()?);
    let mut s = Session::new(setup, corpus, Arc::new(TemplateProvider))?;
    s.phase_mark(0, Phase::Exploration, Boundary::Start)?;

    let ids: Vec<String> = s.feed().items().iter().map(|fi| fi.item.item_id.clone()).collect();
    let mut t = 0;
    for (n, id) in ids.iter().enumerate() {
        t += 1500;
        let reply = s.impression_enter(t, id)?;
        s.impression_exit(t + 1000, id)?;
        t += 1000;
        if let Some(Notification::Trigger { reason, turns, .. }) = reply.notifications.first() {
            println!("-- trigger after item {} ({reason})", n + 1);
            show(turns);
            break;
        }
    }

    while matches!(s.dialogue().stage, Stage::AwaitingResponse | Stage::Narrowing) {
        let option = s.dialogue().presented_options[0].clone();
        println!("reader picks: {}", option.label);
        t += 3000;
        let reply = s.select_option(t, &option.option_id)?;
        show(&reply.turns);
    }

    t += 2000;
    s.refresh(t)?;
    let blended = s.feed().items().iter().filter(|fi| fi.origin == Origin::Blended);
    println!("-- after refresh:");
    for fi in blended {
        println!("  new: {:<14} {}", fi.item.category, fi.item.title);
    }
    Ok(())
}
