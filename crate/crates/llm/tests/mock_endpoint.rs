use std::sync::Arc;
use std::time::Instant;

use proptest::prelude::*;
use skirmish_core::adversaries::{Policy, RulesPolicy};
use skirmish_core::battlemap::bundled_maps;
use skirmish_core::dqn::{train, TrainConfig, TrainEvent};
use skirmish_core::engine::enumerate_actions;
use skirmish_core::fixtures::{random_state, rogue_vs_wizard};
use skirmish_core::llm::{assign_adversary, AdversaryKind, MixSchedule};
use skirmish_core::tournament::{run_fight, run_match, FightResult, PolicyKind, PolicyRef, TournamentConfig};
use skirmish_llm::{ChatClient, LlmConfig, LlmFactory, LlmPolicy, MockReply, MockScript, MockServer, Telemetry};

fn config(server: &MockServer) -> LlmConfig {
    LlmConfig {
        endpoint: server.url(),
        timeout_secs: 5.0,
        backoff_ms: 10,
        ..LlmConfig::default()
    }
}

fn policy(config: LlmConfig) -> (LlmPolicy, Telemetry) {
    let t = Telemetry::new();
    (LlmPolicy::new(Arc::new(ChatClient::new(config)), t.clone(), "llm"), t)
}

fn llm_ref(id: &str, server: &MockServer) -> PolicyRef {
    PolicyRef::new(id, PolicyKind::Llm).with_param("endpoint", &server.url())
}

#[test]
fn fixed_reply_is_a_valid_completion() {
    let server = MockServer::start(MockScript::always(MockReply::text("1: attack enemy with ranged weapon"))).unwrap();
    let client = ChatClient::new(config(&server));
    let c = client.complete("gpt-4o", "hello").unwrap();
    assert_eq!(c.text, "1: attack enemy with ranged weapon");
    assert_eq!(c.attempts, 1);
    let s = rogue_vs_wizard();
    let (mut p, t) = policy(config(&server));
    assert_eq!(p.choose(&s, &enumerate_actions(&s)).unwrap(), 1);
    assert_eq!(t.validity_rate(), Some(1.0));
    assert_eq!(server.requests()[1].model, "gpt-4o");
}

#[test]
fn tool_call_reply_is_parsed() {
    let server = MockServer::start(MockScript::always(MockReply::Tool { action: 9 })).unwrap();
    let s = rogue_vs_wizard();
    let (mut p, _) = policy(LlmConfig { tools: true, ..config(&server) });
    assert_eq!(p.choose(&s, &enumerate_actions(&s)).unwrap(), 9);
}

#[test]
fn slow_endpoint_times_out_to_random() {
    let server = MockServer::start(MockScript::always(MockReply::delay(2000, MockReply::text("0")))).unwrap();
    let s = rogue_vs_wizard();
    let menu = enumerate_actions(&s);
    let (mut p, t) = policy(LlmConfig { timeout_secs: 1.0, retries: 0, ..config(&server) });
    let start = Instant::now();
    let i = p.choose(&s, &menu).unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.9);
    assert!(i < menu.len());
    let r = &t.records()[0];
    assert!(!r.valid);
    assert!(r.error.as_deref().unwrap().starts_with("transport"), "{:?}", r.error);
}

#[test]
fn server_error_is_retried() {
    let server = MockServer::start(MockScript::sequence(vec![
        MockReply::Status { code: 500 },
        MockReply::text("3: dash"),
    ]))
    .unwrap();
    let client = ChatClient::new(config(&server));
    let c = client.complete("m", "p").unwrap();
    assert_eq!((c.text.as_str(), c.attempts), ("3: dash", 2));
    let statuses: Vec<u16> = server.requests().iter().map(|r| r.status).collect();
    assert_eq!(statuses, [500, 200]);
}

#[test]
fn retries_are_bounded() {
    let server = MockServer::start(MockScript::always(MockReply::Status { code: 503 })).unwrap();
    let client = ChatClient::new(LlmConfig { retries: 2, ..config(&server) });
    assert!(client.complete("m", "p").is_err());
    assert_eq!(server.requests().len(), 3);
    let server = MockServer::start(MockScript::always(MockReply::Status { code: 400 })).unwrap();
    let client = ChatClient::new(config(&server));
    assert!(client.complete("m", "p").is_err());
    assert_eq!(server.requests().len(), 1);
}

#[test]
fn always_ending_turn_reaches_the_round_cap() {
    let server = MockServer::start(MockScript::always(MockReply::text("0: end my turn"))).unwrap();
    let factory = LlmFactory::new(None);
    let tc = TournamentConfig { max_rounds: 25, ..TournamentConfig::default() };
    let (rec, _) = run_fight(&factory, &llm_ref("a", &server), &llm_ref("b", &server), 0, 11, &tc, &bundled_maps());
    assert_eq!(rec.result, FightResult::Tie);
    assert_eq!(rec.rounds, 25);
    assert!(rec.error.is_none());
    assert!(factory.telemetry().records().iter().all(|r| r.valid && r.chosen == 0));
}

#[test]
fn garbage_replies_fall_back_every_time() {
    let server = MockServer::start(MockScript::always(MockReply::text("I would attack because it is close"))).unwrap();
    let factory = LlmFactory::new(None);
    let tc = TournamentConfig::default();
    let rules = PolicyRef::new("rules", PolicyKind::Rules);
    let (rec, _) = run_fight(&factory, &rules, &llm_ref("llm", &server), 0, 5, &tc, &bundled_maps());
    assert!(rec.error.is_none());
    assert!(rec.rounds >= 1);
    let t = factory.telemetry();
    assert!(!t.is_empty());
    assert_eq!(t.validity_rate(), Some(0.0));
    assert_eq!(t.fallback_count(), t.len());
}

#[test]
fn major_and_minor_menus_use_different_models() {
    // The big model answers nonsense, so its random fallback eventually
    // spends the action and the small model sees a minor-only menu.
    let script = MockScript::default()
        .rule(Some("big"), None, vec![MockReply::text("hmm")])
        .rule(Some("small"), None, vec![MockReply::text("0: end my turn")]);
    let server = MockServer::start(script).unwrap();
    let factory = LlmFactory::new(None);
    let llm = llm_ref("llm", &server).with_param("model", "big").with_param("secondary_model", "small");
    let tc = TournamentConfig { max_rounds: 20, ..TournamentConfig::default() };
    run_fight(&factory, &llm, &PolicyRef::new("inert", PolicyKind::Inert), 0, 3, &tc, &bundled_maps());
    let log = server.requests();
    assert!(log.iter().any(|r| r.model == "big"));
    assert!(log.iter().any(|r| r.model == "small"));
    assert!(log.iter().all(|r| r.status == 200));
}

#[test]
fn validity_rate_matches_the_script() {
    let replies = ["0", "no", "2: x", "{\"action\": 1}", "99: x", "", "4", "maybe 3", "5:", "-1"];
    let server = MockServer::start(MockScript::sequence(replies.iter().map(|r| MockReply::text(*r)).collect())).unwrap();
    let s = rogue_vs_wizard();
    let menu = enumerate_actions(&s);
    let (mut p, t) = policy(config(&server));
    for _ in 0..replies.len() {
        assert!(p.choose(&s, &menu).unwrap() < menu.len());
    }
    assert_eq!(t.validity_rate(), Some(0.5));
    let path = std::env::temp_dir().join(format!("skirmish-telemetry-{}.jsonl", std::process::id()));
    t.write_jsonl(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().all(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["latency_ms"].is_number()));
    std::fs::remove_file(path).ok();
}

#[test]
fn llm_roster_entries_in_a_match() {
    let server = MockServer::start(MockScript::always(MockReply::text("1"))).unwrap();
    let factory = LlmFactory::new(None);
    let tc = TournamentConfig::default();
    let m = run_match(&factory, &llm_ref("llm", &server), &PolicyRef::new("random", PolicyKind::Random), 4, 9, &tc);
    let tally = m.tally();
    assert_eq!(tally.fights(), 4);
    assert!(m.fights.iter().all(|f| f.error.is_none()));
    let unconfigured = PolicyRef::new("llm", PolicyKind::Llm);
    let (rec, _) = run_fight(&factory, &unconfigured, &PolicyRef::new("rules", PolicyKind::Rules), 0, 1, &tc, &bundled_maps());
    assert_eq!(rec.result, FightResult::Loss);
    assert!(rec.error.unwrap().contains("no llm endpoint"));
}

fn mixed_curve(server: &MockServer) -> Vec<f64> {
    let train_config = TrainConfig { iterations: 12, seed: 4, ..TrainConfig::default() };
    let mix = MixSchedule { llm_fraction: 0.5, seed: 4 };
    let llm = Arc::new(ChatClient::new(config(server)));
    let mut schedule = move |episode: u64| -> Box<dyn Policy> {
        match assign_adversary(episode, &mix) {
            AdversaryKind::Rules => Box::new(RulesPolicy),
            AdversaryKind::Llm => Box::new(LlmPolicy::new(llm.clone(), Telemetry::new(), "llm")),
        }
    };
    train(&train_config, &mut schedule, &mut |_: TrainEvent| {}).unwrap().reward_curve
}

#[test]
fn mixed_training_with_a_flaky_endpoint_is_deterministic() {
    let script = MockScript::default()
        .rule(None, Some("0: end my turn\n1: attack"), vec![MockReply::text("1: attack")])
        .rule(None, None, vec![MockReply::Status { code: 500 }, MockReply::text("garbage")]);
    let server = MockServer::start(script.clone()).unwrap();
    let a = mixed_curve(&server);
    let server = MockServer::start(script).unwrap();
    let b = mixed_curve(&server);
    assert_eq!(a.len(), 12);
    assert_eq!(a, b);
    assert!(!server.requests().is_empty());
}

fn reply_strategy() -> impl Strategy<Value = MockReply> {
    prop_oneof![
        "[ -~]{0,40}".prop_map(MockReply::text),
        (0u64..100).prop_map(|n| MockReply::text(format!("{n}: go"))),
        (0u64..1_000_000).prop_map(|action| MockReply::Tool { action }),
        prop::sample::select(vec![400u16, 404, 429, 500, 503]).prop_map(|code| MockReply::Status { code }),
        (0u64..30).prop_map(|ms| MockReply::delay(ms, MockReply::text("0"))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn any_endpoint_behaviour_yields_a_legal_index(
        replies in prop::collection::vec(reply_strategy(), 1..8),
        seed in 0u64..10_000,
    ) {
        let server = MockServer::start(MockScript::sequence(replies)).unwrap();
        let (mut p, t) = policy(LlmConfig { retries: 1, backoff_ms: 1, ..config(&server) });
        p.reset(seed);
        for k in 0..6 {
            let s = random_state(seed + k, 40);
            let menu = enumerate_actions(&s);
            if menu.is_empty() {
                continue;
            }
            prop_assert!(p.choose(&s, &menu).unwrap() < menu.len());
        }
        prop_assert!(t.records().iter().all(|r| r.chosen < r.menu_size));
    }
}
