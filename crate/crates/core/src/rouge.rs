//! ROUGE-N / ROUGE-SU scoring under a pluggable unit similarity.
//!
//! Classic ROUGE counts exact n-gram matches, clipped by multiplicity.
//! ROUGE-WE replaces the exact test with the cosine of (composed) word
//! vectors. Both are expressed here as a [`MatchFunction`] feeding a single
//! soft-overlap routine, which under exact matching reduces to clipped
//! counting.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding::{dot_clamped, EmbeddingTable, EmbeddingVector};
use crate::error::{Error, Result};
use crate::text::{extract_ngrams, extract_skip_bigrams, NGram, NGramMultiset, TokenSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OovPolicy {
    /// OOV units score 0 against everything, even themselves.
    #[default]
    Zero,
    /// OOV units fall back to exact string matching.
    ExactFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchKind {
    #[default]
    Exact,
    #[serde(alias = "embedding")]
    We,
}

/// Unit-level similarity used when counting overlap.
#[derive(Debug, Clone, Copy)]
pub enum MatchFunction<'t> {
    Exact,
    Embedding { table: &'t EmbeddingTable, oov: OovPolicy },
}

impl<'t> MatchFunction<'t> {
    pub fn embedding(table: &'t EmbeddingTable, oov: OovPolicy) -> Self {
        Self::Embedding { table, oov }
    }

    pub fn kind(&self) -> MatchKind {
        match self {
            Self::Exact => MatchKind::Exact,
            Self::Embedding { .. } => MatchKind::We,
        }
    }

    pub fn similarity(&self, a: &NGram, b: &NGram) -> f64 {
        match *self {
            Self::Exact => f_exact(a, b),
            Self::Embedding { table, oov } => f_we(a, b, table, oov),
        }
    }
}

/// 1 when the word lists are equal element-wise, 0 otherwise. Skip gaps are
/// not part of a unit's identity.
pub fn f_exact(a: &NGram, b: &NGram) -> f64 {
    if a.words() == b.words() {
        1.0
    } else {
        0.0
    }
}

/// Embedding similarity of two units.
///
/// Both units are composed multiplicatively; if either is OOV the result is
/// 0 (or [`f_exact`] under [`OovPolicy::ExactFallback`]). Units of different
/// arity never match.
pub fn f_we(a: &NGram, b: &NGram, table: &EmbeddingTable, oov: OovPolicy) -> f64 {
    let va = table.compose_ngram(a.words());
    let vb = table.compose_ngram(b.words());
    we_similarity(a, va.as_ref(), b, vb.as_ref(), table, oov)
}

fn we_similarity(
    a: &NGram,
    va: Option<&EmbeddingVector<'_>>,
    b: &NGram,
    vb: Option<&EmbeddingVector<'_>>,
    table: &EmbeddingTable,
    oov: OovPolicy,
) -> f64 {
    if a.arity() != b.arity() {
        return 0.0;
    }
    match (va, vb) {
        (Some(va), Some(vb)) => {
            // a unit vector dotted with itself is exactly 1
            if table.is_normalized() && a.words() == b.words() {
                1.0
            } else {
                dot_clamped(va.values(), vb.values()).unwrap_or(0.0)
            }
        }
        _ => match oov {
            OovPolicy::Zero => 0.0,
            OovPolicy::ExactFallback => f_exact(a, b),
        },
    }
}

/// Greedy one-to-one soft matching between two multisets.
///
/// Every (reference instance, candidate instance) pair with positive
/// similarity is ranked by similarity, descending; ties go to the
/// lexicographically smaller reference n-gram, then candidate n-gram. Pairs
/// are taken best-first while both instances are still free, and their
/// similarities summed. Under exact matching this is the clipped count
/// `Σ min(count_cand, count_ref)`.
pub fn soft_overlap(cand: &NGramMultiset, reference: &NGramMultiset, matcher: &MatchFunction<'_>) -> f64 {
    let refs: Vec<(&NGram, usize)> = reference.iter().collect();
    let cands: Vec<(&NGram, usize)> = cand.iter().collect();
    let pairs = match *matcher {
        MatchFunction::Exact => exact_pairs(&refs, &cands),
        MatchFunction::Embedding { table, oov } => embedding_pairs(&refs, &cands, table, oov),
    };
    greedy_assign(pairs, &refs, &cands)
}

struct Pair {
    sim: f64,
    r: usize,
    c: usize,
}

fn exact_pairs(refs: &[(&NGram, usize)], cands: &[(&NGram, usize)]) -> Vec<Pair> {
    let mut by_words: HashMap<&[String], Vec<usize>> = HashMap::new();
    for (c, (gram, _)) in cands.iter().enumerate() {
        by_words.entry(gram.words()).or_default().push(c);
    }
    let mut pairs = Vec::new();
    for (r, (gram, _)) in refs.iter().enumerate() {
        if let Some(cs) = by_words.get(gram.words()) {
            pairs.extend(cs.iter().map(|&c| Pair { sim: 1.0, r, c }));
        }
    }
    pairs
}

fn embedding_pairs(
    refs: &[(&NGram, usize)],
    cands: &[(&NGram, usize)],
    table: &EmbeddingTable,
    oov: OovPolicy,
) -> Vec<Pair> {
    let compose = |side: &[(&NGram, usize)]| -> Vec<Option<EmbeddingVector<'_>>> {
        side.iter().map(|(g, _)| table.compose_ngram(g.words())).collect()
    };
    let ref_vecs = compose(refs);
    let cand_vecs = compose(cands);
    let mut pairs = Vec::new();
    for (r, (rg, _)) in refs.iter().enumerate() {
        for (c, (cg, _)) in cands.iter().enumerate() {
            let sim = we_similarity(rg, ref_vecs[r].as_ref(), cg, cand_vecs[c].as_ref(), table, oov);
            if sim > 0.0 {
                pairs.push(Pair { sim, r, c });
            }
        }
    }
    pairs
}

fn greedy_assign(mut pairs: Vec<Pair>, refs: &[(&NGram, usize)], cands: &[(&NGram, usize)]) -> f64 {
    // entry indices follow lexicographic n-gram order, so index order is the
    // documented tie-break
    pairs.sort_by(|a, b| b.sim.total_cmp(&a.sim).then(a.r.cmp(&b.r)).then(a.c.cmp(&b.c)));
    let mut ref_left: Vec<usize> = refs.iter().map(|(_, n)| *n).collect();
    let mut cand_left: Vec<usize> = cands.iter().map(|(_, n)| *n).collect();
    let mut total = 0.0;
    for Pair { sim, r, c } in pairs {
        let take = ref_left[r].min(cand_left[c]);
        if take > 0 {
            ref_left[r] -= take;
            cand_left[c] -= take;
            total += sim * take as f64;
        }
    }
    total
}

/// Which units a score is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RougeVariant {
    /// Contiguous n-grams.
    N(usize),
    /// Skip-bigrams with at most `max_skip` intervening words, optionally
    /// pooled with unigrams.
    Su { max_skip: usize, include_unigrams: bool },
}

impl RougeVariant {
    pub const ROUGE_1: Self = Self::N(1);
    pub const ROUGE_2: Self = Self::N(2);
    pub const ROUGE_SU4: Self = Self::Su {
        max_skip: 4,
        include_unigrams: true,
    };

    pub fn defaults() -> [Self; 3] {
        [Self::ROUGE_1, Self::ROUGE_2, Self::ROUGE_SU4]
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::N(0) => Err(Error::Config("ROUGE-N requires n >= 1".into())),
            _ => Ok(()),
        }
    }

    /// The unit multiset this variant scores.
    pub fn units(&self, seq: &TokenSequence) -> Result<NGramMultiset> {
        match *self {
            Self::N(n) => extract_ngrams(seq, n),
            Self::Su {
                max_skip,
                include_unigrams,
            } => {
                let mut set = extract_skip_bigrams(seq, max_skip);
                if include_unigrams {
                    set.extend(&extract_ngrams(seq, 1)?);
                }
                Ok(set)
            }
        }
    }

    fn suffix(&self) -> String {
        match self {
            Self::N(n) => n.to_string(),
            Self::Su {
                max_skip,
                include_unigrams: true,
            } => format!("su{max_skip}"),
            Self::Su {
                max_skip,
                include_unigrams: false,
            } => format!("s{max_skip}"),
        }
    }
}

impl fmt::Display for RougeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rouge-{}", self.suffix())
    }
}

impl FromStr for RougeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown ROUGE variant `{s}`"));
        let rest = s.trim().to_ascii_lowercase();
        let rest = rest.strip_prefix("rouge-").ok_or_else(bad)?;
        let parse = |digits: &str| digits.parse::<usize>().map_err(|_| bad());
        let variant = if let Some(k) = rest.strip_prefix("su") {
            Self::Su {
                max_skip: parse(k)?,
                include_unigrams: true,
            }
        } else if let Some(k) = rest.strip_prefix('s') {
            Self::Su {
                max_skip: parse(k)?,
                include_unigrams: false,
            }
        } else {
            Self::N(parse(rest)?)
        };
        variant.validate()?;
        Ok(variant)
    }
}

impl Serialize for RougeVariant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RougeVariant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Recall / precision / F1 for one candidate.
///
/// For a single reference, `recall = soft_match_count / ref_total` and
/// `precision = soft_match_count / cand_total`. When several references are
/// aggregated the ratios follow the [`MultiRefPolicy`] and the count fields
/// are summed over the per-reference scores that contributed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub soft_match_count: f64,
    pub ref_total: usize,
    pub cand_total: usize,
}

impl RougeScore {
    pub fn from_counts(soft_match_count: f64, ref_total: usize, cand_total: usize) -> Self {
        let ratio = |total: usize| {
            if total > 0 {
                (soft_match_count / total as f64).clamp(0.0, 1.0)
            } else {
                0.0
            }
        };
        let recall = ratio(ref_total);
        let precision = ratio(cand_total);
        Self {
            recall,
            precision,
            f1: f1(recall, precision),
            soft_match_count,
            ref_total,
            cand_total,
        }
    }

    pub fn component(&self, which: ScoreComponent) -> f64 {
        match which {
            ScoreComponent::Recall => self.recall,
            ScoreComponent::Precision => self.precision,
            ScoreComponent::F1 => self.f1,
        }
    }
}

fn f1(recall: f64, precision: f64) -> f64 {
    if recall + precision > 0.0 {
        2.0 * recall * precision / (recall + precision)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreComponent {
    #[default]
    Recall,
    Precision,
    F1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiRefPolicy {
    /// Mean of the per-reference scores.
    #[default]
    Average,
    /// Mean over leave-one-out folds of the best (by F1) per-reference score
    /// in the fold.
    Jackknife,
}

macro_rules! kebab_from_str {
    ($($ty:ty),*) => {$(
        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                serde_json::from_value(serde_json::Value::String(s.trim().to_string()))
                    .map_err(|_| Error::Config(format!(
                        "invalid value `{s}` for {}", stringify!($ty)
                    )))
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match serde_json::to_value(self) {
                    Ok(serde_json::Value::String(s)) => f.write_str(&s),
                    _ => Err(fmt::Error),
                }
            }
        }
    )*};
}

kebab_from_str!(OovPolicy, MatchKind, ScoreComponent, MultiRefPolicy);

/// Scores one candidate against its references.
pub fn rouge_score(
    cand: &TokenSequence,
    refs: &[TokenSequence],
    variant: RougeVariant,
    matcher: &MatchFunction<'_>,
    multiref: MultiRefPolicy,
) -> Result<RougeScore> {
    variant.validate()?;
    let cand_units = variant.units(cand)?;
    let ref_units = refs.iter().map(|r| variant.units(r)).collect::<Result<Vec<_>>>()?;
    rouge_score_units(&cand_units, &ref_units, matcher, multiref)
}

/// Same as [`rouge_score`] on pre-extracted unit multisets.
pub fn rouge_score_units(
    cand: &NGramMultiset,
    refs: &[NGramMultiset],
    matcher: &MatchFunction<'_>,
    multiref: MultiRefPolicy,
) -> Result<RougeScore> {
    if refs.is_empty() {
        return Err(Error::Contract("at least one reference is required".into()));
    }
    let per_ref: Vec<RougeScore> = refs
        .iter()
        .map(|r| RougeScore::from_counts(soft_overlap(cand, r, matcher), r.total(), cand.total()))
        .collect();
    Ok(aggregate(&per_ref, multiref))
}

fn aggregate(per_ref: &[RougeScore], policy: MultiRefPolicy) -> RougeScore {
    if per_ref.len() == 1 {
        return per_ref[0];
    }
    match policy {
        MultiRefPolicy::Average => mean_of(per_ref.iter()),
        MultiRefPolicy::Jackknife => {
            let best: Vec<&RougeScore> = (0..per_ref.len())
                .map(|held_out| {
                    per_ref
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != held_out)
                        .map(|(_, s)| s)
                        .reduce(
                            |best, s| match s.f1.total_cmp(&best.f1).then(s.recall.total_cmp(&best.recall)) {
                                Ordering::Greater => s,
                                _ => best,
                            },
                        )
                        .expect("at least two references")
                })
                .collect();
            mean_of(best.into_iter())
        }
    }
}

fn mean_of<'a>(scores: impl Iterator<Item = &'a RougeScore>) -> RougeScore {
    let mut acc = RougeScore::default();
    let mut n = 0usize;
    for s in scores {
        acc.recall += s.recall;
        acc.precision += s.precision;
        acc.f1 += s.f1;
        acc.soft_match_count += s.soft_match_count;
        acc.ref_total += s.ref_total;
        acc.cand_total += s.cand_total;
        n += 1;
    }
    let n = n as f64;
    acc.recall /= n;
    acc.precision /= n;
    acc.f1 /= n;
    acc
}

/// Declarative description of one metric, as used by the CLI and harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetricConfig {
    pub variant: RougeVariant,
    #[serde(rename = "match", default)]
    pub matching: MatchKind,
    #[serde(default)]
    pub oov: OovPolicy,
    #[serde(default)]
    pub multiref: MultiRefPolicy,
    #[serde(default)]
    pub report: ScoreComponent,
}

impl MetricConfig {
    pub fn exact(variant: RougeVariant) -> Self {
        Self {
            variant,
            matching: MatchKind::Exact,
            oov: OovPolicy::default(),
            multiref: MultiRefPolicy::default(),
            report: ScoreComponent::default(),
        }
    }

    pub fn we(variant: RougeVariant) -> Self {
        Self {
            matching: MatchKind::We,
            ..Self::exact(variant)
        }
    }

    /// `rouge-1`, `rouge-we-su4`, ...
    pub fn name(&self) -> String {
        match self.matching {
            MatchKind::Exact => self.variant.to_string(),
            MatchKind::We => format!("rouge-we-{}", self.variant.suffix()),
        }
    }

    /// Binds the metric to an embedding table when it needs one.
    pub fn matcher<'t>(&self, table: Option<&'t EmbeddingTable>) -> Result<MatchFunction<'t>> {
        match self.matching {
            MatchKind::Exact => Ok(MatchFunction::Exact),
            MatchKind::We => table
                .map(|t| MatchFunction::embedding(t, self.oov))
                .ok_or_else(|| Error::Config(format!("metric {} requires an embeddings table", self.name()))),
        }
    }
}
