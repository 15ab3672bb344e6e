//! Deterministic synthetic corpora used by tests, benchmarks and demos.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::kb::{ImportRecord, Origin, SourceRef};
use crate::ner::{EntityType, Tag, TaggedSentence};
use crate::ner::{NerError, NerHistory, NerPipeline, NerTrainOptions};
use crate::nn::seeded_rng;
use crate::sim::{
    train_sim, PairExample, PairRecord, SimError, SimModelConfig, SimPipeline, TrainHistory,
    TrainOptions,
};
use crate::text::{build_vocab, SegmenterConfig, TokenizedSentence, Vocabulary};

/// A raw token-level pair before vocabulary encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenPair {
    pub q1: Vec<String>,
    pub q2: Vec<String>,
    pub label: u8,
}

/// Builds a vocabulary over every token in `pairs` and encodes them.
pub fn encode_pairs(pairs: &[TokenPair]) -> (Vocabulary, Vec<PairExample>) {
    let corpus: Vec<Vec<String>> = pairs
        .iter()
        .flat_map(|p| [p.q1.clone(), p.q2.clone()])
        .collect();
    let vocab = build_vocab(&corpus, 1);
    let examples = pairs
        .iter()
        .map(|p| PairExample {
            q1: TokenizedSentence::from_tokens(p.q1.clone(), &vocab),
            q2: TokenizedSentence::from_tokens(p.q2.clone(), &vocab),
            label: p.label,
        })
        .collect();
    (vocab, examples)
}

/// Balanced pairs over a 60-token vocabulary. Similar pairs keep at least 80%
/// of the first sentence's tokens (one token replaced); dissimilar pairs share
/// no token at all.
pub fn overlap_pairs(n: usize, seed: u64) -> Vec<TokenPair> {
    let mut rng = seeded_rng(seed);
    let inventory: Vec<String> = (0..60).map(|i| format!("t{i:02}")).collect();
    (0..n)
        .map(|i| {
            let len = rng.random_range(5..=8);
            let q1: Vec<String> = inventory.choose_multiple(&mut rng, len).cloned().collect();
            let unused: Vec<&String> = inventory.iter().filter(|t| !q1.contains(t)).collect();
            if i % 2 == 0 {
                let mut q2 = q1.clone();
                let slot = rng.random_range(0..len);
                q2[slot] = (*unused.choose(&mut rng).unwrap()).clone();
                TokenPair { q1, q2, label: 1 }
            } else {
                let q2 = unused
                    .choose_multiple(&mut rng, len)
                    .map(|t| (*t).clone())
                    .collect();
                TokenPair { q1, q2, label: 0 }
            }
        })
        .collect()
}

/// Knobs for [`paraphrase_pairs_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParaphraseSpec {
    /// Size of the concept inventory; each concept has two surface forms.
    pub concepts: usize,
    /// Fraction of concepts replaced in a corrupted (non-paraphrase) copy.
    pub corrupt_fraction: f64,
    /// Probability that a non-paraphrase is an unrelated sentence instead of
    /// a corrupted copy.
    pub unrelated_prob: f64,
}

impl Default for ParaphraseSpec {
    fn default() -> Self {
        ParaphraseSpec {
            concepts: 40,
            corrupt_fraction: 0.5,
            unrelated_prob: 0.5,
        }
    }
}

/// [`paraphrase_pairs_with`] under the default [`ParaphraseSpec`].
pub fn paraphrase_pairs(n: usize, seed: u64) -> Vec<TokenPair> {
    paraphrase_pairs_with(n, seed, ParaphraseSpec::default())
}

/// Paraphrase-detection pairs built from a concept inventory where every
/// concept has two interchangeable surface forms (`cNNNa` / `cNNNb`).
///
/// A paraphrase keeps the concept sequence, rewrites each word to a randomly
/// chosen surface form and swaps one adjacent pair half of the time. A
/// non-paraphrase is either an unrelated sentence or a copy with a fraction
/// of its concepts replaced, rewritten and reordered the same way.
pub fn paraphrase_pairs_with(n: usize, seed: u64, spec: ParaphraseSpec) -> Vec<TokenPair> {
    let mut rng = seeded_rng(seed);
    let surface = |concept: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        let form = if rng.random_bool(0.5) { 'a' } else { 'b' };
        format!("c{concept:03}{form}")
    };
    let all: Vec<usize> = (0..spec.concepts).collect();
    (0..n)
        .map(|i| {
            let len = rng.random_range(5..=9);
            let base: Vec<usize> = all.choose_multiple(&mut rng, len).copied().collect();
            let label = u8::from(i % 2 == 0);
            let mut other = base.clone();
            if label == 0 {
                if rng.random_bool(spec.unrelated_prob) {
                    let len2 = rng.random_range(5..=9);
                    other = all.choose_multiple(&mut rng, len2).copied().collect();
                } else {
                    let k = ((len as f64 * spec.corrupt_fraction).round() as usize).max(1);
                    let mut slots: Vec<usize> = (0..len).collect();
                    slots.shuffle(&mut rng);
                    for &slot in &slots[..k] {
                        let replacement = loop {
                            let c = rng.random_range(0..spec.concepts);
                            if !other.contains(&c) {
                                break c;
                            }
                        };
                        other[slot] = replacement;
                    }
                }
            }
            if rng.random_bool(0.5) {
                let j = rng.random_range(0..other.len() - 1);
                other.swap(j, j + 1);
            }
            let q1 = base.iter().map(|&c| surface(c, &mut rng)).collect();
            let q2 = other.iter().map(|&c| surface(c, &mut rng)).collect();
            TokenPair { q1, q2, label }
        })
        .collect()
}

/// The flange sentence used throughout the generation examples.
pub const FLANGE_SENTENCE: &str = "本规定不适用于对焊法兰的颈部过渡段";

/// The flange sentence with its tags exactly as tabulated: only `对焊`
/// (positions 7 and 8) carries `B-CAT I-CAT`.
pub fn flange_table_tags() -> TaggedSentence {
    let mut s = TaggedSentence::untagged_chars(FLANGE_SENTENCE);
    s.tags[7] = Tag::B(EntityType::Cat);
    s.tags[8] = Tag::I(EntityType::Cat);
    s
}

/// The flange sentence with the whole entity `对焊法兰` (positions 7..11)
/// tagged as a category.
pub fn flange_full_entity() -> TaggedSentence {
    TaggedSentence::annotate(FLANGE_SENTENCE, &[("对焊法兰", EntityType::Cat)])
        .expect("entity present")
}

/// Five annotated standard sentences covering all six entity types; the
/// first is the flange sentence.
pub fn ner_corpus() -> Vec<TaggedSentence> {
    use EntityType::*;
    let raw: [(&str, &[(&str, EntityType)]); 5] = [
        (FLANGE_SENTENCE, &[("对焊法兰", Cat)]),
        ("设计压力取1MPa。", &[("设计压力", Par)]),
        (
            "在腐蚀环境下应选用不锈钢材料。",
            &[("腐蚀环境", Con), ("不锈钢", Mat)],
        ),
        (
            "蒸发器在失效分析阶段应检查几何尺寸。",
            &[("蒸发器", Cat), ("失效分析", Sta), ("几何尺寸", Pro)],
        ),
        (
            "反应器的筒体厚度应按设计温度确定。",
            &[("反应器", Cat), ("筒体厚度", Par), ("设计温度", Con)],
        ),
    ];
    raw.iter()
        .map(|(text, ents)| TaggedSentence::annotate(text, ents).expect("fixture entities present"))
        .collect()
}

/// A small pressure-vessel knowledge base in import format: 12 answer groups
/// with 2–3 question variants each, including the safety-valve discharge
/// area group at section E.6.3.
pub const JB4732_KB: &str = include_str!("../fixtures/jb4732_kb.json");

/// Standard sentences as `section<TAB>sentence` lines.
pub const STD_CORPUS: &str = include_str!("../fixtures/std_corpus.txt");

/// A paraphrase of the E.6.3 questions that is not itself stored.
pub const SAFETY_VALVE_QUERY: &str = "安全阀的排放面积如何计算?";

pub fn jb4732_records() -> Vec<ImportRecord> {
    serde_json::from_str(JB4732_KB).expect("fixture parses")
}

/// Similarity training pairs from grouped questions.
///
/// Every within-group pair is similar, and each question is also paired
/// with `augment` perturbed copies of itself (one character dropped or two
/// adjacent characters swapped). Each question then gets as many partners
/// from other groups as it has similar pairs, labelled dissimilar.
pub fn group_pairs(records: &[ImportRecord], augment: usize, seed: u64) -> Vec<PairRecord> {
    let mut rng = seeded_rng(seed);
    let items: Vec<(&str, &str)> = records
        .iter()
        .filter_map(|r| {
            Some((
                r.question.as_deref()?,
                r.group_id.as_deref().or(r.id.as_deref())?,
            ))
        })
        .collect();
    let mut out = Vec::new();
    for (i, &(q, g)) in items.iter().enumerate() {
        for &(q2, g2) in &items[i + 1..] {
            if g == g2 {
                out.push(PairRecord {
                    q1: q.into(),
                    q2: q2.into(),
                    label: 1,
                });
            }
        }
        let chars: Vec<char> = q.chars().collect();
        for _ in 0..augment {
            let mut copy = chars.clone();
            let k = rng.random_range(0..copy.len().saturating_sub(1).max(1));
            if rng.random_bool(0.5) && copy.len() > 2 {
                copy.remove(k);
            } else if copy.len() > 1 {
                copy.swap(k, k + 1);
            }
            out.push(PairRecord {
                q1: q.into(),
                q2: copy.into_iter().collect(),
                label: 1,
            });
        }
        let similar = items.iter().filter(|&&(_, g2)| g2 == g).count() - 1 + augment;
        let others: Vec<&str> = items
            .iter()
            .filter(|&&(_, g2)| g2 != g)
            .map(|&(q2, _)| q2)
            .collect();
        for &q2 in others.choose_multiple(&mut rng, similar) {
            out.push(PairRecord {
                q1: q.into(),
                q2: q2.into(),
                label: 0,
            });
        }
    }
    out
}

/// Seed at which [`train_kb_pipeline`] is known to rank the E.6.3 group
/// first for [`SAFETY_VALVE_QUERY`].
pub const KB_TRAIN_SEED: u64 = 7;

/// Trains a character-level similarity pipeline on [`group_pairs`] of the
/// knowledge-base fixture (four perturbed copies per question, D = H = 32,
/// batch 8, 20 epochs).
pub fn train_kb_pipeline(seed: u64) -> Result<(SimPipeline, TrainHistory), SimError> {
    let pairs = group_pairs(&jb4732_records(), 4, seed);
    let text = SimPipeline::encoder_for(&pairs, SegmenterConfig::Char, 1, 32);
    let examples = SimPipeline::examples(&text, &pairs);
    let config = SimModelConfig {
        seed,
        ..SimModelConfig::new(text.vocab.len(), 32, 32)
    };
    let options = TrainOptions {
        epochs: 20,
        batch_size: 8,
        ..Default::default()
    };
    let (model, history) = train_sim(&examples, &config, &options)?;
    Ok((SimPipeline { model, text }, history))
}

/// Trains a tagger on [`ner_corpus`] until it memorizes it (D = H = 16,
/// 200 epochs, one sentence per step).
pub fn train_corpus_tagger(seed: u64) -> Result<(NerPipeline, NerHistory), NerError> {
    let options = NerTrainOptions {
        epochs: 200,
        ..Default::default()
    };
    NerPipeline::train(&ner_corpus(), 16, 16, seed, &options)
}

/// `n` records with random questions over a 40-character inventory, in
/// groups of one to three variants; ids are `r-000`, `r-001`, ...
pub fn synthetic_kb(n: usize, seed: u64) -> Vec<ImportRecord> {
    let inventory: Vec<char> = "压力温度容器安全阀排放面积计算设计材料焊接接头系数腐蚀裕量试验法兰应力强度疲劳分析开孔补强"
        .chars()
        .collect();
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(n);
    let mut group = 0;
    while out.len() < n {
        let variants = rng.random_range(1..=3).min(n - out.len());
        let answer = format!("答案{group}");
        for _ in 0..variants {
            let len = rng.random_range(6..=12);
            let question: String = (0..len)
                .map(|_| *inventory.choose(&mut rng).unwrap())
                .collect();
            out.push(ImportRecord {
                id: Some(format!("r-{:03}", out.len())),
                group_id: Some(format!("g-{group:03}")),
                question: Some(question + "?"),
                answer: Some(answer.clone()),
                source: Some(SourceRef {
                    doc: "SYN".into(),
                    section: format!("{}.{}", group / 10 + 1, group % 10 + 1),
                }),
                origin: Some(Origin::Manual),
                created_at: None,
            });
        }
        group += 1;
    }
    out
}
