mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use feedscout::analysis::{shannon_entropy, CategoryDistribution};
use feedscout::corpus::{generate_biased_feed, Corpus, FeedSpec, StandardFeed};
use feedscout::dialogue::Direction;
use feedscout::event_log::{parse_log, write_log, Boundary, Phase};
use feedscout::feed::FeedState;
use feedscout::harness::{plan_study, search_corpus};
use feedscout::provider::TemplateProvider;
use feedscout::{Condition, Session, SessionSetup};
use proptest::prelude::*;

fn corpus() -> Corpus {
    Corpus::synthetic_sized(320, 7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_lies_between_zero_and_log_k(counts in prop::collection::vec(0usize..50, 1..15)) {
        let map: BTreeMap<String, usize> = counts.iter().enumerate().map(|(i, n)| (format!("c{i}"), *n)).collect();
        prop_assume!(counts.iter().sum::<usize>() > 0);
        let d = CategoryDistribution::from_counts(&map).unwrap();
        let h = shannon_entropy(&d);
        let k = counts.iter().filter(|n| **n > 0).count() as f64;
        prop_assert!(h >= 0.0);
        prop_assert!(h <= k.log2() + 1e-12);
    }

    #[test]
    fn metrics_match_the_oracle(seed in any::<u64>()) {
        let s = common::random_scenario(seed);
        prop_assert_eq!(common::check_scenario(&s), Ok(()));
    }

    #[test]
    fn log_round_trips(seed in any::<u64>()) {
        let s = common::random_scenario(seed);
        let mut stream = feedscout::event_log::EventStream::new("oracle");
        for e in s.events() {
            stream.push(e).unwrap();
        }
        let mut buf = Vec::new();
        write_log(&mut buf, None, &stream).unwrap();
        let loaded = parse_log(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(loaded.stream.events(), stream.events());
        prop_assert!(loaded.warnings.is_empty());
        prop_assert_eq!(loaded.to_bytes(), buf);
    }

    #[test]
    fn torn_final_line_is_dropped(seed in any::<u64>(), cut in 1usize..40) {
        let s = common::random_scenario(seed);
        let mut stream = feedscout::event_log::EventStream::new("oracle");
        for e in s.events() {
            stream.push(e).unwrap();
        }
        let mut buf = Vec::new();
        write_log(&mut buf, None, &stream).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let keep = text.len() - cut.min(text.lines().last().unwrap().len()) - 1;
        let loaded = parse_log(&text[..keep]).unwrap();
        prop_assert_eq!(loaded.stream.len(), stream.len() - 1);
        prop_assert_eq!(loaded.warnings.len(), 1);
    }

    #[test]
    fn biased_feed_shape_holds_for_any_pair(seed in any::<u64>(), a in 0usize..14, b in 0usize..14) {
        prop_assume!(a != b);
        let corpus = corpus();
        let cats = corpus.category_ids();
        let spec = FeedSpec::new(&[cats[a].as_str(), cats[b].as_str()], 0.8, 35);
        let feed = generate_biased_feed(&corpus, &spec, seed).unwrap();
        let dominant = feed.iter().filter(|i| i.category == cats[a] || i.category == cats[b]).count();
        prop_assert_eq!(dominant, 28);
    }

    #[test]
    fn refresh_never_touches_surfaced_slots(seed in any::<u64>(), depth in 0usize..26, increase in 0usize..14) {
        let corpus = corpus();
        let items = generate_biased_feed(&corpus, &StandardFeed::B.spec(), seed).unwrap();
        let mut feed = FeedState::initialize("p", items, 0.25).unwrap();
        feed.set_direction(Direction::increase(&corpus.category_ids()[increase]), &corpus).unwrap();
        let ids: Vec<String> = feed.items().iter().take(depth).map(|fi| fi.item.item_id.clone()).collect();
        for (t, id) in ids.iter().enumerate() {
            feed.record_impression(id, t as u64 * 10).unwrap();
            feed.close_impression(id, t as u64 * 10 + 5).unwrap();
        }
        let before = feed.items().to_vec();
        feed.refresh_feed(&corpus, seed).unwrap();
        prop_assert_eq!(&feed.items()[..depth], &before[..depth]);
        let changed = (0..before.len()).filter(|&i| feed.items()[i] != before[i]).count();
        prop_assert_eq!(changed, 9);
    }

    #[test]
    fn search_never_errors_on_nonblank_text(query in "[a-z ]{0,20}") {
        let corpus = corpus();
        let result = search_corpus(&corpus, &query);
        prop_assert_eq!(result.is_err(), query.trim().is_empty());
    }

    #[test]
    fn plans_validate_and_balance(n in 1usize..30, seed in any::<u64>()) {
        let plans = plan_study(n * 2, seed).unwrap();
        prop_assert_eq!(plans.len(), n * 2);
        for p in &plans {
            prop_assert!(p.validate().is_ok());
        }
        let ai = plans.iter().filter(|p| p.group == Condition::AiInit).count();
        prop_assert_eq!(ai, n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Errors never leave a trace: a rejected call appends nothing.
    #[test]
    fn rejected_calls_do_not_log(seed in any::<u64>(), cond in 0usize..4) {
        let condition = Condition::ALL[cond];
        let setup = SessionSetup::standard("p", condition, StandardFeed::C, seed);
        let corpus = Arc::new(setup.corpus.load().unwrap());
        let mut s = Session::new(setup, corpus, Arc::new(TemplateProvider)).unwrap();
        s.phase_mark(10, Phase::Exploration, Boundary::Start).unwrap();
        let n = s.events().len();
        let attempts = [
            s.search(20, "travel").is_err(),
            s.send_text(20, "more travel").is_err(),
            s.dismiss(20).is_err(),
            s.select_option(20, "nope").is_err(),
            s.impression_exit(20, "nope").is_err(),
            s.scroll(5, 100).is_err(),
        ];
        let succeeded = attempts.iter().filter(|e| !**e).count();
        if succeeded == 0 {
            prop_assert_eq!(s.events().len(), n);
        } else {
            prop_assert!(s.events().len() > n);
        }
        prop_assert!(attempts[4] && attempts[5]);
    }
}
