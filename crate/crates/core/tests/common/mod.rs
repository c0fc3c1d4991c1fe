#![allow(dead_code)]

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rouge_we::embedding::EmbeddingTable;
use rouge_we::text::{NGram, NGramMultiset, TokenSequence};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vocab(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i}")).collect()
}

pub fn random_sequence(rng: &mut impl Rng, vocab: &[String], max_len: usize) -> TokenSequence {
    let len = rng.gen_range(0..=max_len);
    TokenSequence::new("rand", (0..len).map(|_| vocab.choose(rng).unwrap().clone()).collect())
}

/// Random multiset of unigrams with at most `max_instances` occurrences.
pub fn random_multiset(rng: &mut impl Rng, vocab: &[String], max_instances: usize) -> NGramMultiset {
    let n = rng.gen_range(0..=max_instances);
    (0..n)
        .map(|_| NGram::new(vec![vocab.choose(rng).unwrap().clone()]).unwrap())
        .collect()
}

/// Random table with mixed-sign components, so some similarities clamp to 0.
pub fn random_table(rng: &mut impl Rng, vocab: &[String], dim: usize) -> EmbeddingTable {
    EmbeddingTable::from_pairs(
        dim,
        vocab.iter().map(|w| {
            let v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-0.4f32..1.0)).collect();
            (w.clone(), v)
        }),
    )
    .unwrap()
}

/// Exhaustive maximum-weight one-to-one assignment between the instances of
/// two multisets. Exponential; only for a handful of instances per side.
pub fn brute_force_max_assignment(
    cand: &NGramMultiset,
    reference: &NGramMultiset,
    sim: impl Fn(&NGram, &NGram) -> f64,
) -> f64 {
    let expand =
        |s: &NGramMultiset| -> Vec<NGram> { s.iter().flat_map(|(g, c)| std::iter::repeat_n(g.clone(), c)).collect() };
    let refs = expand(reference);
    let cands = expand(cand);
    let weights: Vec<Vec<f64>> = refs.iter().map(|r| cands.iter().map(|c| sim(r, c)).collect()).collect();

    fn best(i: usize, used: &mut Vec<bool>, w: &[Vec<f64>]) -> f64 {
        if i == w.len() {
            return 0.0;
        }
        let mut top = best(i + 1, used, w);
        for j in 0..used.len() {
            if !used[j] && w[i][j] > 0.0 {
                used[j] = true;
                top = top.max(w[i][j] + best(i + 1, used, w));
                used[j] = false;
            }
        }
        top
    }
    best(0, &mut vec![false; cands.len()], &weights)
}

pub const SYNTH_SYSTEMS: usize = 10;

/// Drop rate applied to system `k`'s copy of a model summary.
pub fn degradation(k: usize) -> f64 {
    0.09 * k as f64
}

/// Writes a synthetic corpus under `root`: `topics` topics with four model
/// summaries each, plus `SYNTH_SYSTEMS` systems where system `k` copies a
/// model summary and replaces each token with noise with probability
/// `degradation(k)`. Also writes `judgments.csv` whose pyramid and
/// responsiveness columns follow the degradation rank.
pub fn write_synthetic_corpus(root: &Path, topics: usize, seed: u64) {
    let mut rng = rng(seed);
    let noise: Vec<String> = (0..400).map(|i| format!("noise{i}")).collect();
    for t in 0..topics {
        let topic_vocab: Vec<String> = (0..120).map(|i| format!("t{t}word{i}")).collect();
        let shared: Vec<String> = (0..40).map(|i| format!("common{i}")).collect();
        let pool: Vec<&String> = topic_vocab.iter().chain(&shared).collect();
        let models: Vec<Vec<String>> = (0..4)
            .map(|_| (0..100).map(|_| (*pool.choose(&mut rng).unwrap()).clone()).collect())
            .collect();

        let dir = root.join(format!("topic{t:02}"));
        fs::create_dir_all(dir.join("models")).unwrap();
        fs::create_dir_all(dir.join("systems")).unwrap();
        for (m, words) in models.iter().enumerate() {
            fs::write(dir.join("models").join(format!("M{m}.txt")), words.join(" ") + ".\n").unwrap();
        }
        for k in 0..SYNTH_SYSTEMS {
            let base = &models[(k + t) % models.len()];
            let words: Vec<String> = base
                .iter()
                .map(|w| {
                    if rng.gen_bool(degradation(k)) {
                        noise.choose(&mut rng).unwrap().clone()
                    } else {
                        w.clone()
                    }
                })
                .collect();
            fs::write(
                dir.join("systems").join(format!("sys{k:02}.txt")),
                words.join(" ") + "\n",
            )
            .unwrap();
        }
    }

    let mut csv = String::from("system_id,pyramid,responsiveness,readability\n");
    for k in 0..SYNTH_SYSTEMS {
        let quality = (SYNTH_SYSTEMS - k) as f64;
        let readability = 3.0 + rng.gen_range(-1.0..1.0);
        csv.push_str(&format!(
            "sys{k:02},{:.3},{:.3},{readability:.3}\n",
            quality / 10.0,
            quality / 2.0
        ));
    }
    fs::write(root.join("judgments.csv"), csv).unwrap();
}
