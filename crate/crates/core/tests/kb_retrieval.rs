//! Retrieval against an exhaustive rescoring of every stored question.

use stdqa_core::fixtures::synthetic_kb;
use stdqa_core::kb::{retrieve, KbIndex, KbRecord, KbStore, RetrieveOptions};
use stdqa_core::sim::{SimModel, SimModelConfig, SimPipeline};
use stdqa_core::text::{build_vocab, segment, SegmenterConfig, TextEncoder};

fn setup(n: usize) -> (KbStore, SimPipeline) {
    let mut store = KbStore::in_memory();
    store
        .import_str(&serde_json::to_string(&synthetic_kb(n, 21)).unwrap())
        .unwrap();
    let corpus: Vec<Vec<String>> = store
        .records()
        .iter()
        .map(|r| segment(&r.question, &SegmenterConfig::Char))
        .collect();
    let vocab = build_vocab(&corpus, 1);
    let config = SimModelConfig {
        seed: 5,
        ..SimModelConfig::new(vocab.len(), 8, 8)
    };
    let model = SimModel::with_init_scale(config, 0.5).unwrap();
    let text = TextEncoder {
        segmenter: SegmenterConfig::Char,
        vocab,
        max_len: 32,
    };
    (store, SimPipeline { model, text })
}

fn exhaustive(question: &str, records: &[KbRecord], p: &SimPipeline) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = records
        .iter()
        .map(|r| {
            (
                r.id.clone(),
                p.similarity_text(question, &r.question).unwrap().score,
            )
        })
        .collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    all
}

fn options(top_k: usize, prefilter_m: usize) -> RetrieveOptions {
    RetrieveOptions {
        top_k,
        prefilter_m,
        ..Default::default()
    }
}

#[test]
fn unfiltered_retrieval_equals_exhaustive_scan() {
    let (store, p) = setup(100);
    let index = KbIndex::build(store.records(), &p);
    for q in [
        "压力容器的设计温度?",
        "安全阀排放面积",
        "法兰",
        "焊接接头系数如何取?",
    ] {
        let got = retrieve(q, store.records(), &index, &p, &options(100, 0)).unwrap();
        let want = exhaustive(q, store.records(), &p);
        assert_eq!(got.len(), 100);
        for (g, (id, score)) in got.iter().zip(&want) {
            assert_eq!(&g.record.id, id);
            assert!((g.score - score).abs() < 1e-12);
        }
        let top5 = retrieve(q, store.records(), &index, &p, &options(5, 0)).unwrap();
        assert_eq!(top5, got[..5]);
    }
}

#[test]
fn stored_question_retrieves_itself_with_score_one() {
    let (store, p) = setup(100);
    let index = KbIndex::build(store.records(), &p);
    for k in [0, 37, 99] {
        let target = &store.records()[k];
        let got = retrieve(
            &target.question,
            store.records(),
            &index,
            &p,
            &options(3, 0),
        )
        .unwrap();
        assert_eq!(got[0].record.question, target.question);
        assert!((got[0].score - 1.0).abs() < 1e-6, "{}", got[0].score);
    }
}

#[test]
fn prefilter_at_or_above_store_size_changes_nothing() {
    let (store, p) = setup(50);
    let index = KbIndex::build(store.records(), &p);
    let q = "容器试验压力";
    let all = retrieve(q, store.records(), &index, &p, &options(50, 0)).unwrap();
    assert_eq!(
        retrieve(q, store.records(), &index, &p, &options(50, 50)).unwrap(),
        all
    );
    assert_eq!(
        retrieve(q, store.records(), &index, &p, &options(50, 80)).unwrap(),
        all
    );
    let narrowed = retrieve(q, store.records(), &index, &p, &options(50, 10)).unwrap();
    assert_eq!(narrowed.len(), 10);
}

#[test]
fn min_score_drops_weak_candidates() {
    let (store, p) = setup(30);
    let index = KbIndex::build(store.records(), &p);
    let all = retrieve("疲劳分析", store.records(), &index, &p, &options(30, 0)).unwrap();
    let cut = all[10].score;
    let opts = RetrieveOptions {
        min_score: cut,
        ..options(30, 0)
    };
    let kept = retrieve("疲劳分析", store.records(), &index, &p, &opts).unwrap();
    assert!(kept.iter().all(|r| r.score >= cut));
    assert_eq!(kept[..], all[..kept.len()]);
}

#[test]
fn retrieval_output_is_reproducible() {
    let run = || {
        let (store, p) = setup(100);
        let index = KbIndex::build(store.records(), &p);
        let res = retrieve(
            "安全阀的开启压力",
            store.records(),
            &index,
            &p,
            &options(10, 0),
        )
        .unwrap();
        serde_json::to_string(
            &res.iter()
                .map(|r| (&r.record.id, r.score))
                .collect::<Vec<_>>(),
        )
        .unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn index_extension_matches_rebuild() {
    let (mut store, p) = setup(20);
    let mut index = KbIndex::build(store.records(), &p);
    let extra = synthetic_kb(25, 99)
        .into_iter()
        .skip(20)
        .map(|mut r| {
            r.id = r.id.map(|id| format!("x{id}"));
            r.group_id = r.group_id.map(|g| format!("x{g}"));
            r
        })
        .collect::<Vec<_>>();
    store
        .import_str(&serde_json::to_string(&extra).unwrap())
        .unwrap();
    index.extend(&store.records()[20..], &p);
    let rebuilt = KbIndex::build(store.records(), &p);
    let q = "设计材料";
    assert_eq!(
        retrieve(q, store.records(), &index, &p, &options(25, 0)).unwrap(),
        retrieve(q, store.records(), &rebuilt, &p, &options(25, 0)).unwrap()
    );
}
