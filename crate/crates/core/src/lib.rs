//! ROUGE and ROUGE-WE summarization metrics.
//!
//! ROUGE-WE scores n-gram overlap with word-embedding similarity instead of
//! exact string matching. The crate also ships the meta-evaluation harness
//! used to check how well a metric tracks human judgments.
//!
//! ```
//! use rouge_we::rouge::{rouge_score, MatchFunction, MultiRefPolicy, RougeVariant};
//! use rouge_we::text::{tokenize, TokenizeConfig};
//!
//! let cfg = TokenizeConfig::default();
//! let cand = tokenize("It is raining heavily.", &cfg);
//! let reference = tokenize("It is pouring", &cfg);
//! let score = rouge_score(
//!     &cand,
//!     &[reference],
//!     RougeVariant::ROUGE_1,
//!     &MatchFunction::Exact,
//!     MultiRefPolicy::Average,
//! )
//! .unwrap();
//! assert_eq!(score.recall, 2.0 / 3.0);
//! ```

pub mod cli;
pub mod correlation;
pub mod embedding;
pub mod error;
pub mod harness;
pub mod rouge;
pub mod text;

pub use error::{Error, Result};
