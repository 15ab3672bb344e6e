//! Request handling over the trained knowledge-base fixture.

use std::sync::OnceLock;

use stdqa_core::fixtures::{train_kb_pipeline, JB4732_KB, KB_TRAIN_SEED, SAFETY_VALVE_QUERY};
use stdqa_core::kb::{KbStore, Verdict};
use stdqa_core::service::{AskRequest, FeedbackRequest, Health, Models, QaService, ServiceConfig};
use stdqa_core::sim::SimPipeline;

fn pipeline() -> SimPipeline {
    static P: OnceLock<SimPipeline> = OnceLock::new();
    P.get_or_init(|| train_kb_pipeline(KB_TRAIN_SEED).unwrap().0)
        .clone()
}

fn service(config: ServiceConfig) -> QaService {
    let mut store = KbStore::in_memory();
    store.import_str(JB4732_KB).unwrap();
    QaService::from_parts(
        config,
        Models {
            sim: pipeline(),
            ner: None,
        },
        store,
    )
}

fn ask(question: &str, top_k: usize) -> AskRequest {
    AskRequest {
        question: question.into(),
        top_k,
    }
}

#[test]
fn safety_valve_question_finds_discharge_area_section() {
    let svc = service(ServiceConfig::default());
    let resp = svc.handle_ask(&ask(SAFETY_VALVE_QUERY, 5)).unwrap();
    assert_eq!(resp.candidates.len(), 5);
    assert_eq!(resp.candidates[0].source.section, "E.6.3");
    assert!(resp.candidates.windows(2).all(|w| w[0].score >= w[1].score));
    assert!(!resp.top_k_clamped);
}

#[test]
fn blank_question_is_rejected() {
    let svc = service(ServiceConfig::default());
    let err = svc.handle_ask(&ask("  \n", 5)).unwrap_err();
    assert_eq!((err.status, err.code.as_str()), (400, "empty_question"));
}

#[test]
fn top_k_zero_and_clamping() {
    let svc = service(ServiceConfig {
        top_k_cap: 3,
        ..Default::default()
    });
    assert!(svc
        .handle_ask(&ask("法兰", 0))
        .unwrap()
        .candidates
        .is_empty());
    let resp = svc.handle_ask(&ask("法兰", 50)).unwrap();
    assert_eq!(resp.candidates.len(), 3);
    assert!(resp.top_k_clamped);
}

#[test]
fn feedback_attaches_to_history() {
    let svc = service(ServiceConfig::default());
    let resp = svc.handle_ask(&ask(SAFETY_VALVE_QUERY, 1)).unwrap();
    let fb = svc
        .handle_feedback(&FeedbackRequest {
            history_id: resp.history_id.clone(),
            verdict: Verdict::Helpful,
            comment: String::new(),
        })
        .unwrap();
    assert_eq!(fb.history_id, resp.history_id);
    let missing = svc
        .handle_feedback(&FeedbackRequest {
            history_id: "h-999999".into(),
            verdict: Verdict::Unhelpful,
            comment: "?".into(),
        })
        .unwrap_err();
    assert_eq!((missing.status, missing.code.as_str()), (404, "not_found"));
    let stats = svc.stats().unwrap();
    assert_eq!((stats.history, stats.feedback), (1, 1));
}

#[test]
fn import_adds_and_indexes_records() {
    let svc = service(ServiceConfig::default());
    let body = r#"[{"question":"爆破片的设计爆破压力如何确定?","answer":"按E.7.2确定。","source":{"doc":"JB4732","section":"E.7.9"}},
                   {"question":"什么是新的问题?","answer":"新答案。"}]"#;
    assert_eq!(svc.handle_import(body.as_bytes()).unwrap().added, 2);
    assert_eq!(svc.stats().unwrap().records, 29);
    let resp = svc.handle_ask(&ask("什么是新的问题?", 1)).unwrap();
    assert_eq!(resp.candidates[0].answer, "新答案。");
    assert!((resp.candidates[0].score - 1.0).abs() < 1e-6);
}

#[test]
fn bad_imports_are_all_or_nothing() {
    let svc = service(ServiceConfig {
        import_limit_bytes: 200,
        ..Default::default()
    });
    let err = svc.handle_import(b"[{\"question\":\"a\"").unwrap_err();
    assert_eq!(err.code, "parse_error");
    let err = svc
        .handle_import(br#"[{"question":"q1","answer":"a"},{"question":"","answer":"b"}]"#)
        .unwrap_err();
    assert_eq!(err.code, "validation_error");
    let err = svc.handle_import(&[b' '; 201]).unwrap_err();
    assert_eq!((err.status, err.code.as_str()), (413, "payload_too_large"));
    assert_eq!(svc.stats().unwrap().records, 27);
}

#[test]
fn health_moves_from_starting_to_ready_after_load() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("sim.ckpt");
    pipeline().save(&model).unwrap();
    let kb = dir.path().join("kb.json");
    let mut store = KbStore::open(&kb).unwrap();
    store.import_str(JB4732_KB).unwrap();
    store.compact().unwrap();
    let config = ServiceConfig::from_toml_str(&format!(
        "kb = {:?}\nsim_model = {:?}\n",
        kb.display().to_string(),
        model.display().to_string()
    ))
    .unwrap();
    let svc = QaService::new(config);
    assert_eq!(svc.health().status, Health::Starting);
    let err = svc.handle_ask(&ask(SAFETY_VALVE_QUERY, 1)).unwrap_err();
    assert_eq!((err.status, err.code.as_str()), (503, "not_ready"));
    svc.load().unwrap();
    assert_eq!(svc.health().status, Health::Ready);
    let resp = svc.handle_ask(&ask(SAFETY_VALVE_QUERY, 1)).unwrap();
    assert_eq!(resp.candidates[0].source.section, "E.6.3");
    // The query was logged to the store's history sidecar.
    drop(svc);
    assert_eq!(KbStore::open(&kb).unwrap().history().len(), 1);
}

#[test]
fn load_fails_on_missing_files() {
    let config = ServiceConfig {
        kb: Some("/nonexistent/kb.json".into()),
        sim_model: Some("/nonexistent/sim.ckpt".into()),
        ..Default::default()
    };
    assert!(QaService::new(config).load().is_err());
}
