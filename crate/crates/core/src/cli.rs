//! Command-line front end: `score`, `meta-eval` and `embeddings inspect`.
//!
//! Options can come from flags or from a TOML file passed with `--config`;
//! flags win. The resolved configuration is echoed into `report.json`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingFormat, EmbeddingTable, LoadOptions};
use crate::harness::{load_corpus, load_judgments, meta_evaluate, score_corpus, ScoringContext};
use crate::rouge::{rouge_score, MatchKind, MetricConfig, MultiRefPolicy, OovPolicy, RougeVariant, ScoreComponent};
use crate::text::{tokenize_with_id, TokenizeConfig};

#[derive(Debug, Parser)]
#[command(
    name = "rouge-we",
    version,
    about = "ROUGE / ROUGE-WE scoring and metric meta-evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one candidate summary against one or more reference summaries.
    Score {
        /// Candidate (system) summary file.
        candidate: PathBuf,
        /// Reference (model) summary files.
        #[arg(required = true)]
        references: Vec<PathBuf>,
        #[command(flatten)]
        opts: MetricArgs,
    },
    /// Correlate metric scores with human judgments over a corpus.
    MetaEval {
        /// Corpus root: <root>/<topic>/{models,systems}/<id>.txt
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// CSV with header system_id,pyramid,responsiveness,readability
        #[arg(long)]
        judgments: Option<PathBuf>,
        #[command(flatten)]
        opts: MetricArgs,
    },
    /// Embedding table utilities.
    Embeddings {
        #[command(subcommand)]
        command: EmbeddingsCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum EmbeddingsCommand {
    /// Load a table and print its shape, load summary and selected vectors.
    Inspect {
        path: PathBuf,
        #[arg(long, value_name = "binary|text", default_value = "binary")]
        format: EmbeddingFormat,
        /// Word to look up (repeatable).
        #[arg(long = "word", value_name = "W")]
        words: Vec<String>,
        /// Keep raw vector lengths instead of normalizing to unit norm.
        #[arg(long)]
        no_normalize: bool,
    },
}

/// Options shared by `score` and `meta-eval`.
#[derive(Debug, Clone, Default, Args)]
pub struct MetricArgs {
    /// TOML file with defaults for any of these options.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// ROUGE variants [default: rouge-1,rouge-2,rouge-su4]
    #[arg(long, value_delimiter = ',', value_name = "rouge-1,rouge-2,rouge-su4")]
    pub metrics: Option<Vec<RougeVariant>>,
    /// Unit matching: exact strings, word embeddings, or both (`exact,we`) [default: exact]
    #[arg(long = "match", value_delimiter = ',', value_name = "exact|we")]
    pub matching: Option<Vec<MatchKind>>,
    /// Word vectors, required by `we` metrics.
    #[arg(long, value_name = "PATH")]
    pub embeddings: Option<PathBuf>,
    /// [default: binary]
    #[arg(long, value_name = "binary|text")]
    pub embeddings_format: Option<EmbeddingFormat>,
    /// Keep raw vector lengths (experimental; similarities are then raw dot products).
    #[arg(long)]
    pub no_normalize: bool,
    /// Similarity of out-of-vocabulary units [default: zero]
    #[arg(long, value_name = "zero|exact-fallback")]
    pub oov: Option<OovPolicy>,
    /// Multi-reference aggregation [default: average]
    #[arg(long, value_name = "average|jackknife")]
    pub multiref: Option<MultiRefPolicy>,
    /// ROUGE component reported and correlated [default: recall]
    #[arg(long, value_name = "recall|precision|f1")]
    pub report_component: Option<ScoreComponent>,
    /// Lowercase tokens (default).
    #[arg(long, overrides_with = "no_lowercase")]
    pub lowercase: bool,
    /// Keep token case.
    #[arg(long, overrides_with = "lowercase")]
    pub no_lowercase: bool,
    /// Apply Porter-style English stemming.
    #[arg(long)]
    pub stem: bool,
    /// Stopword list, one word per line.
    #[arg(long, value_name = "PATH")]
    pub stopwords: Option<PathBuf>,
    /// Output directory for report.csv and report.json [default: report]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for corpus scoring [default: all cores]
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
}

/// Declarative config file; keys mirror the long flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub metrics: Option<Vec<RougeVariant>>,
    #[serde(rename = "match")]
    pub matching: Option<Vec<MatchKind>>,
    pub embeddings: Option<PathBuf>,
    pub embeddings_format: Option<EmbeddingFormat>,
    pub no_normalize: Option<bool>,
    pub oov: Option<OovPolicy>,
    pub multiref: Option<MultiRefPolicy>,
    pub report_component: Option<ScoreComponent>,
    pub lowercase: Option<bool>,
    pub stem: Option<bool>,
    pub stopwords: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub corpus: Option<PathBuf>,
    pub judgments: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&raw).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenizeSettings {
    pub lowercase: bool,
    pub stem: bool,
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingSettings {
    pub path: PathBuf,
    pub format: EmbeddingFormat,
    pub normalize: bool,
}

/// Fully resolved options for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub metrics: Vec<MetricConfig>,
    pub tokenize: TokenizeSettings,
    pub embeddings: Option<EmbeddingSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub judgments: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn resolve(command: &str, args: &MetricArgs, file: &FileConfig) -> Result<Self> {
        let variants = args
            .metrics
            .clone()
            .or_else(|| file.metrics.clone())
            .unwrap_or_else(|| RougeVariant::defaults().to_vec());
        let matches = args
            .matching
            .clone()
            .or_else(|| file.matching.clone())
            .unwrap_or_else(|| vec![MatchKind::Exact]);
        if variants.is_empty() || matches.is_empty() {
            bail!("at least one metric and one match kind are required");
        }
        let oov = args.oov.or(file.oov).unwrap_or_default();
        let multiref = args.multiref.or(file.multiref).unwrap_or_default();
        let report = args.report_component.or(file.report_component).unwrap_or_default();

        let mut metrics: Vec<MetricConfig> = Vec::new();
        for &matching in &matches {
            for &variant in &variants {
                let m = MetricConfig {
                    variant,
                    matching,
                    oov,
                    multiref,
                    report,
                };
                if !metrics.contains(&m) {
                    metrics.push(m);
                }
            }
        }

        let lowercase = if args.no_lowercase {
            false
        } else if args.lowercase {
            true
        } else {
            file.lowercase.unwrap_or(true)
        };
        let tokenize = TokenizeSettings {
            lowercase,
            stem: args.stem || file.stem.unwrap_or(false),
            stopwords: args.stopwords.clone().or_else(|| file.stopwords.clone()),
        };

        let needs_table = metrics.iter().any(|m| m.matching == MatchKind::We);
        let embeddings = match args.embeddings.clone().or_else(|| file.embeddings.clone()) {
            Some(path) => Some(EmbeddingSettings {
                path,
                format: args.embeddings_format.or(file.embeddings_format).unwrap_or_default(),
                normalize: !(args.no_normalize || file.no_normalize.unwrap_or(false)),
            }),
            None if needs_table => bail!("`--match we` requires --embeddings <path>"),
            None => None,
        };

        Ok(Self {
            command: command.to_string(),
            metrics,
            tokenize,
            embeddings,
            corpus: None,
            judgments: None,
            out: args.out.clone().or_else(|| file.out.clone()),
            threads: args.threads.or(file.threads),
        })
    }

    pub fn tokenize_config(&self) -> Result<TokenizeConfig> {
        let stopwords = match &self.tokenize.stopwords {
            Some(path) => Some(TokenizeConfig::load_stopwords(path)?),
            None => None,
        };
        Ok(TokenizeConfig {
            lowercase: self.tokenize.lowercase,
            stem: self.tokenize.stem,
            stopwords,
        })
    }

    /// Loads the embedding table only when some metric needs it.
    pub fn load_embeddings(&self) -> Result<Option<EmbeddingTable>> {
        if !self.metrics.iter().any(|m| m.matching == MatchKind::We) {
            return Ok(None);
        }
        let Some(e) = &self.embeddings else {
            bail!("`--match we` requires --embeddings <path>");
        };
        let options = LoadOptions {
            normalize: e.normalize,
            lowercase: self.tokenize.lowercase,
        };
        let table = EmbeddingTable::load(&e.path, e.format, options)?;
        log::info!(
            "loaded {} vectors of dimension {} from {}",
            table.len(),
            table.dim(),
            e.path.display()
        );
        Ok(Some(table))
    }
}

fn file_config(args: &MetricArgs) -> Result<FileConfig> {
    args.config
        .as_deref()
        .map(FileConfig::load)
        .transpose()
        .map(Option::unwrap_or_default)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Prints `<metric> R=<r> P=<p> F=<f>` per configured metric.
pub fn cmd_score(candidate: &Path, references: &[PathBuf], config: &RunConfig, out: &mut impl Write) -> Result<()> {
    let tok = config.tokenize_config()?;
    let cand = tokenize_with_id(&read_text(candidate)?, &candidate.display().to_string(), &tok);
    let refs = references
        .iter()
        .map(|p| Ok(tokenize_with_id(&read_text(p)?, &p.display().to_string(), &tok)))
        .collect::<Result<Vec<_>>>()?;
    let table = config.load_embeddings()?;
    for metric in &config.metrics {
        let matcher = metric.matcher(table.as_ref())?;
        let s = rouge_score(&cand, &refs, metric.variant, &matcher, metric.multiref)?;
        writeln!(
            out,
            "{} R={:.6} P={:.6} F={:.6}",
            metric.name(),
            s.recall,
            s.precision,
            s.f1
        )?;
    }
    Ok(())
}

/// Runs the harness, writes `report.csv` / `report.json`, prints the table.
pub fn cmd_meta_eval(config: &RunConfig, out: &mut impl Write) -> Result<()> {
    let corpus = config.corpus.as_deref().context("meta-eval requires --corpus <dir>")?;
    let judgments_path = config
        .judgments
        .as_deref()
        .context("meta-eval requires --judgments <csv>")?;
    let out_dir = config.out.clone().unwrap_or_else(|| PathBuf::from("report"));

    let judgments = load_judgments(judgments_path)?;
    let topics = load_corpus(corpus)?;
    if topics.is_empty() {
        bail!("corpus {} contains no topics", corpus.display());
    }
    let tok = config.tokenize_config()?;
    let table = config.load_embeddings()?;
    let ctx = ScoringContext {
        tokenize: &tok,
        embeddings: table.as_ref(),
    };

    let scores = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building thread pool")?
            .install(|| score_corpus(&topics, &config.metrics, ctx))?,
        None => score_corpus(&topics, &config.metrics, ctx)?,
    };
    let mut report = meta_evaluate(&scores, &judgments)?;
    report.config = Some(serde_json::to_value(config)?);
    report.write(&out_dir)?;

    write!(out, "{}", report.format_table())?;
    writeln!(out, "reports written to {}", out_dir.display())?;
    Ok(())
}

pub fn cmd_embeddings_inspect(
    path: &Path,
    format: EmbeddingFormat,
    words: &[String],
    normalize: bool,
    out: &mut impl Write,
) -> Result<()> {
    let table = EmbeddingTable::load(
        path,
        format,
        LoadOptions {
            normalize,
            ..LoadOptions::default()
        },
    )?;
    let s = table.load_summary();
    writeln!(out, "path: {}", path.display())?;
    writeln!(out, "format: {format}")?;
    writeln!(out, "vocabulary: {}", table.len())?;
    writeln!(out, "dimension: {}", table.dim())?;
    writeln!(out, "normalized: {}", table.is_normalized())?;
    if let Some(declared) = s.declared_size {
        writeln!(out, "declared size: {declared}")?;
    }
    writeln!(out, "duplicates replaced: {}", s.duplicates_replaced)?;
    writeln!(out, "case collisions skipped: {}", s.case_collisions_skipped)?;
    writeln!(out, "zero vectors skipped: {}", s.zero_vectors_skipped)?;
    for word in words {
        let key = word.to_lowercase();
        match table.lookup(&key) {
            None => writeln!(out, "{word}: OOV")?,
            Some(v) => {
                let shown: Vec<String> = v.iter().take(10).map(|x| format!("{x:.6}")).collect();
                let more = if v.len() > 10 { ", ..." } else { "" };
                writeln!(out, "{word}: [{}{more}]", shown.join(", "))?;
            }
        }
    }
    Ok(())
}

/// Parses `std::env::args` and dispatches, writing to standard output.
pub fn run() -> Result<()> {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Score {
            candidate,
            references,
            opts,
        } => {
            let file = file_config(&opts)?;
            let config = RunConfig::resolve("score", &opts, &file)?;
            cmd_score(&candidate, &references, &config, &mut out)
        }
        Command::MetaEval {
            corpus,
            judgments,
            opts,
        } => {
            let file = file_config(&opts)?;
            let mut config = RunConfig::resolve("meta-eval", &opts, &file)?;
            config.corpus = corpus.or(file.corpus);
            config.judgments = judgments.or(file.judgments);
            cmd_meta_eval(&config, &mut out)
        }
        Command::Embeddings {
            command:
                EmbeddingsCommand::Inspect {
                    path,
                    format,
                    words,
                    no_normalize,
                },
        } => cmd_embeddings_inspect(&path, format, &words, !no_normalize, &mut out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("rouge-we").chain(args.iter().copied())).unwrap()
    }

    fn metric_args(cli: Cli) -> MetricArgs {
        match cli.command {
            Command::Score { opts, .. } | Command::MetaEval { opts, .. } => opts,
            _ => panic!("no metric args"),
        }
    }

    #[test]
    fn defaults_resolve_to_three_exact_recall_metrics() {
        let args = metric_args(parse(&["score", "c.txt", "r.txt"]));
        let cfg = RunConfig::resolve("score", &args, &FileConfig::default()).unwrap();
        let names: Vec<String> = cfg.metrics.iter().map(MetricConfig::name).collect();
        assert_eq!(names, ["rouge-1", "rouge-2", "rouge-su4"]);
        assert!(cfg
            .metrics
            .iter()
            .all(|m| m.report == ScoreComponent::Recall && m.oov == OovPolicy::Zero));
        assert!(cfg.tokenize.lowercase && !cfg.tokenize.stem);
        assert!(cfg.embeddings.is_none());
    }

    #[test]
    fn match_list_expands_metrics() {
        let args = metric_args(parse(&[
            "score",
            "c.txt",
            "r.txt",
            "--metrics",
            "rouge-1,rouge-su4",
            "--match",
            "we,exact",
            "--embeddings",
            "v.bin",
            "--oov",
            "exact-fallback",
            "--multiref",
            "jackknife",
            "--report-component",
            "f1",
        ]));
        let cfg = RunConfig::resolve("score", &args, &FileConfig::default()).unwrap();
        let names: Vec<String> = cfg.metrics.iter().map(MetricConfig::name).collect();
        assert_eq!(names, ["rouge-we-1", "rouge-we-su4", "rouge-1", "rouge-su4"]);
        assert!(cfg.metrics.iter().all(|m| m.multiref == MultiRefPolicy::Jackknife));
        assert_eq!(cfg.embeddings.unwrap().format, EmbeddingFormat::Binary);
    }

    #[test]
    fn we_without_embeddings_is_rejected() {
        let args = metric_args(parse(&["score", "c.txt", "r.txt", "--match", "we"]));
        assert!(RunConfig::resolve("score", &args, &FileConfig::default()).is_err());
    }

    #[test]
    fn flags_override_config_file() {
        let file: FileConfig = toml::from_str(
            r#"
            metrics = ["rouge-2"]
            match = ["exact"]
            oov = "exact-fallback"
            lowercase = false
            stem = true
            report-component = "precision"
            out = "from-file"
            "#,
        )
        .unwrap();
        let args = metric_args(parse(&["meta-eval", "--report-component", "f1", "--lowercase"]));
        let cfg = RunConfig::resolve("meta-eval", &args, &file).unwrap();
        assert_eq!(cfg.metrics.len(), 1);
        assert_eq!(cfg.metrics[0].variant, RougeVariant::ROUGE_2);
        assert_eq!(cfg.metrics[0].report, ScoreComponent::F1);
        assert_eq!(cfg.metrics[0].oov, OovPolicy::ExactFallback);
        assert!(cfg.tokenize.lowercase);
        assert!(cfg.tokenize.stem);
        assert_eq!(cfg.out, Some(PathBuf::from("from-file")));

        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }

    #[test]
    fn bad_flag_values_fail_to_parse() {
        for args in [
            &["score", "c", "r", "--metrics", "rouge-l"][..],
            &["score", "c", "r", "--match", "fuzzy"],
            &["score", "c", "r", "--oov", "maybe"],
            &["score", "c"],
        ] {
            assert!(Cli::try_parse_from(std::iter::once("rouge-we").chain(args.iter().copied())).is_err());
        }
    }

    #[test]
    fn score_output_format() {
        let dir = tempfile::tempdir().unwrap();
        let cand = dir.path().join("c.txt");
        let reference = dir.path().join("r.txt");
        fs::write(&cand, "It is raining heavily.").unwrap();
        fs::write(&reference, "It is pouring").unwrap();
        let args = metric_args(parse(&["score", "c", "r", "--metrics", "rouge-1,rouge-2"]));
        let cfg = RunConfig::resolve("score", &args, &FileConfig::default()).unwrap();
        let mut buf = Vec::new();
        cmd_score(&cand, &[reference], &cfg, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "rouge-1 R=0.666667 P=0.500000 F=0.571429\nrouge-2 R=0.500000 P=0.333333 F=0.400000\n"
        );
    }

    #[test]
    fn inspect_reports_shape_and_oov() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        fs::write(&path, "2 2\nCat 3 4\ndog 1 0\n").unwrap();
        let mut buf = Vec::new();
        cmd_embeddings_inspect(
            &path,
            EmbeddingFormat::Text,
            &["cat".into(), "emu".into()],
            true,
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("vocabulary: 2\n"));
        assert!(text.contains("dimension: 2\n"));
        assert!(text.contains("cat: [0.600000, 0.800000]\n"));
        assert!(text.contains("emu: OOV\n"));
    }
}
