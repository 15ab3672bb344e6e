//! Forward algorithm and Viterbi against brute-force enumeration of every
//! tag path on small random fixtures.

use rand::Rng;
use stdqa_core::ner::{
    crf_gold_score, crf_log_partition, viterbi_decode, CrfParams, EntityType, Tag, TagSet,
    TransitionMask,
};
use stdqa_core::nn::{seeded_rng, Tensor};

struct Fixture {
    emissions: Tensor,
    crf: CrfParams,
}

fn random_fixture(seed: u64) -> Fixture {
    let mut rng = seeded_rng(seed);
    let len = rng.random_range(1..=5);
    let t = rng.random_range(2..=4);
    let mut draw = |n: usize| {
        (0..n)
            .map(|_| rng.random_range(-3.0..3.0))
            .collect::<Vec<f64>>()
    };
    Fixture {
        emissions: Tensor::from_vec(&[len, t], draw(len * t)).unwrap(),
        crf: CrfParams {
            transitions: Tensor::from_vec(&[t, t], draw(t * t)).unwrap(),
            start: draw(t),
            end: draw(t),
        },
    }
}

/// Every path of length `len` over `t` tags, in lexicographic order.
fn all_paths(len: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..t).map(move |j| {
                    let mut q = p.clone();
                    q.push(j);
                    q
                })
            })
            .collect();
    }
    out
}

fn path_score(f: &Fixture, path: &[usize]) -> f64 {
    let mut s = f.crf.start[path[0]] + f.crf.end[path[path.len() - 1]];
    for (pos, &tag) in path.iter().enumerate() {
        s += f.emissions.row(pos)[tag];
        if pos > 0 {
            s += f.crf.transitions.row(path[pos - 1])[tag];
        }
    }
    s
}

fn feasible(mask: &TransitionMask, path: &[usize]) -> bool {
    mask.allows_start(path[0]) && path.windows(2).all(|w| mask.allows(w[0], w[1]))
}

fn brute_logsumexp(scores: &[f64]) -> f64 {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln()
}

fn brute_argmax(f: &Fixture, mask: Option<&TransitionMask>) -> (Vec<usize>, f64) {
    let (len, t) = (f.emissions.rows(), f.emissions.cols());
    all_paths(len, t)
        .into_iter()
        .filter(|p| mask.is_none_or(|m| feasible(m, p)))
        .map(|p| {
            let s = path_score(f, &p);
            (p, s)
        })
        .fold((vec![], f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
}

/// A BIO tag set of `t` tags: O, then alternating B/I of two entity types.
fn bio_tagset(t: usize) -> TagSet {
    let tags = [
        Tag::O,
        Tag::B(EntityType::Cat),
        Tag::I(EntityType::Cat),
        Tag::B(EntityType::Par),
    ];
    TagSet::new(tags[..t].to_vec()).unwrap()
}

#[test]
fn log_partition_matches_enumeration() {
    for seed in 0..100 {
        let f = random_fixture(seed);
        let paths = all_paths(f.emissions.rows(), f.emissions.cols());
        let scores: Vec<f64> = paths.iter().map(|p| path_score(&f, p)).collect();
        let expected = brute_logsumexp(&scores);
        let got = crf_log_partition(&f.emissions, &f.crf).unwrap();
        assert!(
            (got - expected).abs() < 1e-9,
            "seed {seed}: {got} vs {expected}"
        );
        for (p, s) in paths.iter().zip(&scores).take(8) {
            let gold = crf_gold_score(&f.emissions, p, &f.crf).unwrap();
            assert!((gold - s).abs() < 1e-12, "seed {seed} path {p:?}");
        }
    }
}

#[test]
fn viterbi_matches_enumeration_unmasked() {
    for seed in 0..100 {
        let f = random_fixture(seed);
        let (path, score) = viterbi_decode(&f.emissions, &f.crf, None).unwrap();
        let (best, best_score) = brute_argmax(&f, None);
        assert_eq!(path, best, "seed {seed}");
        assert!((score - best_score).abs() < 1e-9);
    }
}

#[test]
fn viterbi_matches_enumeration_masked() {
    for seed in 0..100 {
        let f = random_fixture(1000 + seed);
        let mask = TransitionMask::bio(&bio_tagset(f.emissions.cols()));
        let (path, score) = viterbi_decode(&f.emissions, &f.crf, Some(&mask)).unwrap();
        let (best, best_score) = brute_argmax(&f, Some(&mask));
        assert!(feasible(&mask, &path), "seed {seed}: {path:?}");
        assert_eq!(path, best, "seed {seed}");
        assert!((score - best_score).abs() < 1e-9);
    }
}

#[test]
fn masked_decode_never_emits_orphan_inside_tag() {
    let tags = TagSet::standard();
    let mask = TransitionMask::bio(&tags);
    let t = tags.len();
    for seed in 0..50 {
        let mut rng = seeded_rng(seed);
        let len = rng.random_range(1..=6);
        let emissions = Tensor::from_vec(
            &[len, t],
            (0..len * t).map(|_| rng.random_range(-3.0..3.0)).collect(),
        )
        .unwrap();
        let crf = CrfParams::zeros(t);
        let (path, _) = viterbi_decode(&emissions, &crf, Some(&mask)).unwrap();
        let decoded = tags.decode(&path).unwrap();
        assert!(!matches!(decoded[0], Tag::I(_)));
        for w in decoded.windows(2) {
            if let Tag::I(x) = w[1] {
                assert!(w[0] == Tag::B(x) || w[0] == Tag::I(x), "{decoded:?}");
            }
        }
    }
}
