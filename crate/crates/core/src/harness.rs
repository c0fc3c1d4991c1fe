//! AESOP-style meta-evaluation: score every system summary with each metric,
//! average per system over topics, and correlate against human judgments.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{CorrelationTriple, ScoreVector};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::rouge::{rouge_score_units, MetricConfig, RougeVariant};
use crate::text::{tokenize_with_id, NGramMultiset, TokenSequence, TokenizeConfig};

/// One topic: its human-written model summaries and the system summaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub topic_id: String,
    /// `(model_id, text)`, sorted by id.
    pub model_summaries: Vec<(String, String)>,
    /// `(system_id, text)`, sorted by id.
    pub system_summaries: Vec<(String, String)>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

fn read_summaries(dir: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if !path.is_file() || path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Corpus(format!("non UTF-8 file name {}", path.display())))?
            .to_string();
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        out.push((id, text));
    }
    out.sort();
    Ok(out)
}

/// Loads `<root>/<topic_id>/{models,systems}/<id>.txt`.
pub fn load_corpus(root: &Path) -> Result<Vec<Topic>> {
    let mut topics = Vec::new();
    for dir in sorted_subdirs(root)? {
        let topic_id = dir.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let models_dir = dir.join("models");
        if !models_dir.is_dir() {
            return Err(Error::Corpus(format!(
                "topic `{topic_id}` has no models/ directory ({})",
                models_dir.display()
            )));
        }
        let model_summaries = read_summaries(&models_dir)?;
        if model_summaries.is_empty() {
            return Err(Error::Corpus(format!("topic `{topic_id}` has no model summaries")));
        }
        let systems_dir = dir.join("systems");
        let system_summaries = if systems_dir.is_dir() {
            read_summaries(&systems_dir)?
        } else {
            warn!("topic `{topic_id}` has no systems/ directory");
            Vec::new()
        };
        topics.push(Topic {
            topic_id,
            model_summaries,
            system_summaries,
        });
    }
    Ok(topics)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Judgment {
    Pyramid,
    Responsiveness,
    Readability,
}

impl Judgment {
    pub const ALL: [Judgment; 3] = [Self::Pyramid, Self::Responsiveness, Self::Readability];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pyramid => "pyramid",
            Self::Responsiveness => "responsiveness",
            Self::Readability => "readability",
        }
    }
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub pyramid: f64,
    pub responsiveness: f64,
    pub readability: f64,
}

impl JudgmentRecord {
    pub fn get(&self, which: Judgment) -> f64 {
        match which {
            Judgment::Pyramid => self.pyramid,
            Judgment::Responsiveness => self.responsiveness,
            Judgment::Readability => self.readability,
        }
    }
}

/// Human scores per system.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HumanJudgments {
    pub systems: BTreeMap<String, JudgmentRecord>,
}

impl HumanJudgments {
    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }
}

const JUDGMENT_HEADER: [&str; 4] = ["system_id", "pyramid", "responsiveness", "readability"];

/// Reads `system_id,pyramid,responsiveness,readability` rows.
pub fn load_judgments(path: &Path) -> Result<HumanJudgments> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let columns: Vec<usize> = JUDGMENT_HEADER
        .iter()
        .map(|name| {
            headers.iter().position(|h| h == *name).ok_or_else(|| Error::Format {
                path: path.to_path_buf(),
                message: format!("missing column `{name}`"),
            })
        })
        .collect::<Result<_>>()?;

    let mut judgments = HumanJudgments::default();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(columns[i]).unwrap_or("");
        let number = |i: usize| {
            field(i)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::FormatAtLine {
                    path: path.to_path_buf(),
                    line,
                    message: format!("{} value `{}` is not a number", JUDGMENT_HEADER[i], field(i)),
                })
        };
        let system_id = field(0).to_string();
        if system_id.is_empty() {
            return Err(Error::FormatAtLine {
                path: path.to_path_buf(),
                line,
                message: "empty system_id".into(),
            });
        }
        let rec = JudgmentRecord {
            pyramid: number(1)?,
            responsiveness: number(2)?,
            readability: number(3)?,
        };
        if judgments.systems.insert(system_id.clone(), rec).is_some() {
            return Err(Error::FormatAtLine {
                path: path.to_path_buf(),
                line,
                message: format!("duplicate system_id `{system_id}`"),
            });
        }
    }
    Ok(judgments)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// Shared inputs for scoring a corpus.
#[derive(Debug, Clone, Copy)]
pub struct ScoringContext<'a> {
    pub tokenize: &'a TokenizeConfig,
    pub embeddings: Option<&'a EmbeddingTable>,
}

/// Per-system mean score for every metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemScores {
    pub metrics: Vec<MetricConfig>,
    /// Sorted system ids.
    pub systems: Vec<String>,
    /// `scores[metric][system]`, aligned with `metrics` and `systems`.
    pub scores: Vec<Vec<f64>>,
    pub n_topics: usize,
}

impl SystemScores {
    pub fn get(&self, metric: usize, system: &str) -> Option<f64> {
        let s = self.systems.binary_search_by(|id| id.as_str().cmp(system)).ok()?;
        self.scores.get(metric).map(|row| row[s])
    }

    pub fn vector(&self, metric: usize) -> ScoreVector {
        ScoreVector::new(self.systems.clone(), self.scores[metric].clone()).expect("system ids are unique")
    }
}

struct TopicUnits {
    refs: Vec<NGramMultiset>,
    systems: HashMap<String, NGramMultiset>,
}

fn topic_tokens(topic: &Topic, config: &TokenizeConfig) -> (Vec<TokenSequence>, Vec<(String, TokenSequence)>) {
    let models = topic
        .model_summaries
        .iter()
        .map(|(id, text)| tokenize_with_id(text, id, config))
        .collect();
    let systems = topic
        .system_summaries
        .iter()
        .map(|(id, text)| (id.clone(), tokenize_with_id(text, id, config)))
        .collect();
    (models, systems)
}

/// Scores each system summary against its topic's model summaries and
/// averages the configured ROUGE component over topics.
///
/// A system with no summary for a topic gets 0 for that topic. Scoring runs
/// in parallel on the current rayon pool; the per-system fold is always done
/// in (metric, system, topic) order so results are reproducible bit for bit.
pub fn score_corpus(topics: &[Topic], metrics: &[MetricConfig], ctx: ScoringContext<'_>) -> Result<SystemScores> {
    if topics.is_empty() {
        return Err(Error::Contract("cannot score an empty corpus".into()));
    }
    let matchers = metrics
        .iter()
        .map(|m| m.matcher(ctx.embeddings))
        .collect::<Result<Vec<_>>>()?;

    let tokens: Vec<_> = topics.par_iter().map(|t| topic_tokens(t, ctx.tokenize)).collect();

    let mut units: HashMap<RougeVariant, Vec<TopicUnits>> = HashMap::new();
    for variant in metrics.iter().map(|m| m.variant) {
        if units.contains_key(&variant) {
            continue;
        }
        let per_topic = tokens
            .par_iter()
            .map(|(models, systems)| -> Result<TopicUnits> {
                Ok(TopicUnits {
                    refs: models.iter().map(|m| variant.units(m)).collect::<Result<_>>()?,
                    systems: systems
                        .iter()
                        .map(|(id, seq)| Ok((id.clone(), variant.units(seq)?)))
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        units.insert(variant, per_topic);
    }

    let systems: Vec<String> = topics
        .iter()
        .flat_map(|t| t.system_summaries.iter().map(|(id, _)| id.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    for topic in topics {
        let present: BTreeSet<&str> = topic.system_summaries.iter().map(|(id, _)| id.as_str()).collect();
        for sys in systems.iter().filter(|s| !present.contains(s.as_str())) {
            warn!(
                "system `{sys}` has no summary for topic `{}`; scoring it 0",
                topic.topic_id
            );
        }
    }

    let jobs: Vec<(usize, usize, usize)> = (0..metrics.len())
        .flat_map(|m| (0..systems.len()).flat_map(move |s| (0..topics.len()).map(move |t| (m, s, t))))
        .collect();

    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(m, s, t)| {
            let metric = &metrics[m];
            let topic_units = &units[&metric.variant][t];
            let Some(cand) = topic_units.systems.get(&systems[s]) else {
                return 0.0;
            };
            match rouge_score_units(cand, &topic_units.refs, &matchers[m], metric.multiref) {
                Ok(score) => score.component(metric.report),
                Err(e) => {
                    warn!(
                        "{} failed for system `{}` on topic `{}`: {e}; scoring it 0",
                        metric.name(),
                        systems[s],
                        topics[t].topic_id
                    );
                    0.0
                }
            }
        })
        .collect();

    let n_topics = topics.len();
    let scores: Vec<Vec<f64>> = values
        .chunks(systems.len() * n_topics)
        .map(|per_metric| {
            per_metric
                .chunks(n_topics)
                .map(|per_topic| per_topic.iter().sum::<f64>() / n_topics as f64)
                .collect()
        })
        .collect();

    for (s, sys) in systems.iter().enumerate() {
        if scores.iter().all(|row| row[s] == 0.0) {
            warn!("system `{sys}` scored 0 on every metric (empty or missing summaries)");
        }
    }
    debug!(
        "scored {} systems on {} topics with {} metrics",
        systems.len(),
        n_topics,
        metrics.len()
    );

    Ok(SystemScores {
        metrics: metrics.to_vec(),
        systems,
        scores: if metrics.is_empty() { Vec::new() } else { scores },
        n_topics,
    })
}

/// Correlation of one metric against one kind of human judgment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub metric: String,
    pub judgment: Judgment,
    /// `None` when the correlation is undefined (e.g. constant scores).
    pub correlation: Option<CorrelationTriple>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaEvalReport {
    pub n_systems: usize,
    pub systems: Vec<String>,
    pub rows: Vec<ReportRow>,
    /// Resolved run configuration, echoed for provenance.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config: Option<serde_json::Value>,
}

/// Correlates every metric's per-system scores with each human judgment,
/// over systems present in both.
pub fn meta_evaluate(scores: &SystemScores, judgments: &HumanJudgments) -> Result<MetaEvalReport> {
    let common: Vec<String> = scores
        .systems
        .iter()
        .filter(|s| judgments.systems.contains_key(*s))
        .cloned()
        .collect();
    if common.len() < 2 {
        return Err(Error::Corpus(format!(
            "need at least 2 systems with both scores and judgments, found {}",
            common.len()
        )));
    }
    for sys in scores.systems.iter().filter(|s| !judgments.systems.contains_key(*s)) {
        warn!("system `{sys}` has no human judgments; excluded from correlations");
    }

    let mut rows = Vec::new();
    for (m, metric) in scores.metrics.iter().enumerate() {
        let metric_values: Vec<f64> = common
            .iter()
            .map(|s| scores.get(m, s).expect("common system is scored"))
            .collect();
        for judgment in Judgment::ALL {
            let human: Vec<f64> = common.iter().map(|s| judgments.systems[s].get(judgment)).collect();
            let (correlation, note) = match CorrelationTriple::compute(&metric_values, &human) {
                Ok(t) => (Some(t), None),
                Err(e) => {
                    warn!("{} vs {judgment}: {e}", metric.name());
                    (None, Some(e.to_string()))
                }
            };
            rows.push(ReportRow {
                metric: metric.name(),
                judgment,
                correlation,
                n: common.len(),
                note,
            });
        }
    }
    Ok(MetaEvalReport {
        n_systems: common.len(),
        systems: common,
        rows,
        config: None,
    })
}

fn fmt_coef(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_default()
}

impl MetaEvalReport {
    pub fn row(&self, metric: &str, judgment: Judgment) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.metric == metric && r.judgment == judgment)
    }

    pub fn metric_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.metric.as_str()) {
                names.push(&r.metric);
            }
        }
        names
    }

    /// `metric,judgment,pearson,spearman,kendall,n` with 4-decimal
    /// coefficients; undefined coefficients are left empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let ser = |e: csv::Error| Error::Format {
            path: PathBuf::from("report.csv"),
            message: e.to_string(),
        };
        w.write_record(["metric", "judgment", "pearson", "spearman", "kendall", "n"])
            .map_err(ser)?;
        for r in &self.rows {
            let c = r.correlation;
            w.write_record([
                r.metric.clone(),
                r.judgment.to_string(),
                fmt_coef(c.map(|c| c.pearson)),
                fmt_coef(c.map(|c| c.spearman)),
                fmt_coef(c.map(|c| c.kendall)),
                r.n.to_string(),
            ])
            .map_err(ser)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format {
            path: PathBuf::from("report.csv"),
            message: e.to_string(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Writes `report.csv` and `report.json` into `dir`, creating it.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let csv_path = dir.join("report.csv");
        fs::write(&csv_path, self.to_csv()?).map_err(io_err(&csv_path))?;
        let json_path = dir.join("report.json");
        fs::write(&json_path, self.to_json()).map_err(io_err(&json_path))?;
        Ok(())
    }

    /// Plain-text table: one row per metric, P/S/K per judgment.
    pub fn format_table(&self) -> String {
        let names = self.metric_names();
        let width = names.iter().map(|n| n.len()).max().unwrap_or(6).max(6);
        let mut out = String::new();
        let _ = write!(out, "{:<width$}", "metric");
        for j in Judgment::ALL {
            let _ = write!(out, " | {:^26}", j.as_str());
        }
        out.push('\n');
        let _ = write!(out, "{:<width$}", "");
        for _ in Judgment::ALL {
            let _ = write!(out, " | {:>8} {:>8} {:>8}", "P", "S", "K");
        }
        out.push('\n');
        for name in names {
            let _ = write!(out, "{name:<width$}");
            for j in Judgment::ALL {
                let c = self.row(name, j).and_then(|r| r.correlation);
                let cell = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into());
                let _ = write!(
                    out,
                    " | {:>8} {:>8} {:>8}",
                    cell(c.map(|c| c.pearson)),
                    cell(c.map(|c| c.spearman)),
                    cell(c.map(|c| c.kendall))
                );
            }
            out.push('\n');
        }
        let _ = writeln!(out, "n = {} systems", self.n_systems);
        out
    }
}
