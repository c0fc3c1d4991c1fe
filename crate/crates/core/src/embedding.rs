//! Pre-trained word vectors: loading, lookup and n-gram composition.
//!
//! Vectors are stored as `f32` in one flat buffer and L2-normalized at load
//! time, so the dot product of two stored vectors is their cosine. Arithmetic
//! on them (products, norms, dots) is carried out in `f64`.

use std::borrow::Cow;
use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Products whose L2 norm falls below this carry no usable direction.
pub const ZERO_NORM_TOLERANCE: f64 = 1e-12;

/// Vectors already this close to unit length are stored untouched, which
/// makes write-then-reload a bit-exact fixed point.
const UNIT_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingFormat {
    #[default]
    Binary,
    Text,
}

impl FromStr for EmbeddingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" | "bin" => Ok(Self::Binary),
            "text" | "txt" => Ok(Self::Text),
            other => Err(Error::Config(format!("unknown embeddings format `{other}`"))),
        }
    }
}

impl fmt::Display for EmbeddingFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Binary => "binary",
            Self::Text => "text",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    /// Rescale every vector to unit L2 norm. Turning this off is only meant
    /// for experiments; similarities are then clamped raw dot products.
    pub normalize: bool,
    /// Lowercase vocabulary entries so they match pipeline-normalized tokens.
    pub lowercase: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            normalize: true,
            lowercase: true,
        }
    }
}

/// Bookkeeping from one load.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub declared_size: Option<usize>,
    pub loaded: usize,
    /// Same source word seen again; the later vector replaced the earlier.
    pub duplicates_replaced: usize,
    /// Different source words that lowercase to an already-stored key; the
    /// earlier (more frequent) form was kept.
    pub case_collisions_skipped: usize,
    pub zero_vectors_skipped: usize,
}

/// A vector borrowed from a table or owned after composition.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector<'a> {
    values: Cow<'a, [f32]>,
}

impl<'a> EmbeddingVector<'a> {
    pub fn borrowed(values: &'a [f32]) -> Self {
        Self {
            values: Cow::Borrowed(values),
        }
    }

    pub fn owned(values: Vec<f32>) -> EmbeddingVector<'static> {
        EmbeddingVector {
            values: Cow::Owned(values),
        }
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }

    pub fn into_owned(self) -> EmbeddingVector<'static> {
        EmbeddingVector {
            values: Cow::Owned(self.values.into_owned()),
        }
    }
}

/// Vocabulary → vector map with a single global dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    words: Vec<String>,
    data: Vec<f32>,
    normalized: bool,
    summary: LoadSummary,
}

impl PartialEq for EmbeddingTable {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.len() == other.len()
            && self.normalized == other.normalized
            && self.iter().all(|(word, v)| {
                other
                    .lookup(word)
                    .is_some_and(|o| o.iter().zip(v).all(|(a, b)| a.to_bits() == b.to_bits()))
            })
    }
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self::with_options(dim, LoadOptions::default())
    }

    fn with_options(dim: usize, options: LoadOptions) -> Self {
        Self {
            dim,
            index: HashMap::new(),
            words: Vec::new(),
            data: Vec::new(),
            normalized: options.normalize,
            summary: LoadSummary::default(),
        }
    }

    /// Builds a table from in-memory pairs with the default load rules.
    pub fn from_pairs<S, I>(dim: usize, pairs: I) -> Result<Self>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = (S, Vec<f32>)>,
    {
        let mut builder = TableBuilder::new(dim, LoadOptions::default());
        for (word, values) in pairs {
            if values.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: values.len(),
                });
            }
            builder.insert(word.as_ref(), values);
        }
        Ok(builder.finish())
    }

    /// One-hot table: word `i` maps to the `i`-th basis vector.
    pub fn one_hot<S: AsRef<str>>(vocab: &[S]) -> Result<Self> {
        let dim = vocab.len();
        Self::from_pairs(
            dim,
            vocab.iter().enumerate().map(|(i, w)| {
                let mut v = vec![0.0f32; dim];
                v[i] = 1.0;
                (w, v)
            }),
        )
    }

    pub fn load(path: &Path, format: EmbeddingFormat, options: LoadOptions) -> Result<Self> {
        match format {
            EmbeddingFormat::Binary => Self::load_binary_with(path, options),
            EmbeddingFormat::Text => Self::load_text_with(path, options),
        }
    }

    pub fn load_binary(path: &Path) -> Result<Self> {
        Self::load_binary_with(path, LoadOptions::default())
    }

    pub fn load_binary_with(path: &Path, options: LoadOptions) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        read_binary(BufReader::new(file), path, options)
    }

    pub fn load_text(path: &Path) -> Result<Self> {
        Self::load_text_with(path, LoadOptions::default())
    }

    pub fn load_text_with(path: &Path, options: LoadOptions) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        read_text(BufReader::new(file), path, options)
    }

    /// Writes the table in word2vec binary layout, in load order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (word, values) in self.iter() {
            w.write_all(word.as_bytes())?;
            w.write_all(b" ")?;
            for v in values {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn load_summary(&self) -> &LoadSummary {
        &self.summary
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Exact-string lookup. Absent words (including `""`) are OOV.
    pub fn lookup(&self, word: &str) -> Option<&[f32]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.words.iter().enumerate().map(|(i, w)| (w.as_str(), self.row(i)))
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Multiplicative composition of the words' vectors.
    ///
    /// The element-wise product of the constituent vectors is renormalized
    /// to unit length (when the table is normalized). Any OOV constituent,
    /// or a product with norm below [`ZERO_NORM_TOLERANCE`], yields `None`.
    /// A single word returns its stored vector unchanged.
    pub fn compose_ngram<S: AsRef<str>>(&self, words: &[S]) -> Option<EmbeddingVector<'_>> {
        let rows = words
            .iter()
            .map(|w| self.lookup(w.as_ref()))
            .collect::<Option<Vec<_>>>()?;
        match rows.as_slice() {
            [] => None,
            [single] => Some(EmbeddingVector::borrowed(single)),
            [a, b] => self.finish_product(a.iter().zip(*b).map(|(&x, &y)| x as f64 * y as f64).collect()),
            _ => {
                // factors are sorted per component so the rounded product does
                // not depend on word order
                let mut factors = vec![0.0f64; rows.len()];
                let product = (0..self.dim)
                    .map(|k| {
                        for (f, row) in factors.iter_mut().zip(&rows) {
                            *f = row[k] as f64;
                        }
                        factors.sort_by(f64::total_cmp);
                        factors.iter().product()
                    })
                    .collect();
                self.finish_product(product)
            }
        }
    }

    fn finish_product(&self, product: Vec<f64>) -> Option<EmbeddingVector<'static>> {
        let norm = product.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm.is_nan() || norm < ZERO_NORM_TOLERANCE {
            return None;
        }
        let scale = if self.normalized { norm } else { 1.0 };
        Some(EmbeddingVector::owned(
            product.into_iter().map(|v| (v / scale) as f32).collect(),
        ))
    }
}

/// Dot product of two vectors clamped to `[0, 1]`. For unit vectors this is
/// the cosine with negative values floored at zero.
pub fn similarity(v1: &EmbeddingVector<'_>, v2: &EmbeddingVector<'_>) -> Result<f64> {
    dot_clamped(v1.values(), v2.values())
}

pub(crate) fn dot_clamped(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
    Ok(dot.clamp(0.0, 1.0))
}

fn l2_norm(values: &[f32]) -> f64 {
    values.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
}

struct TableBuilder {
    table: EmbeddingTable,
    options: LoadOptions,
    // original (pre-lowercasing) spelling of each stored entry
    sources: Vec<String>,
}

impl TableBuilder {
    fn new(dim: usize, options: LoadOptions) -> Self {
        Self {
            table: EmbeddingTable::with_options(dim, options),
            options,
            sources: Vec::new(),
        }
    }

    fn insert(&mut self, source: &str, mut values: Vec<f32>) {
        if source.is_empty() {
            return;
        }
        let norm = l2_norm(&values);
        if !norm.is_finite() || norm < ZERO_NORM_TOLERANCE {
            self.table.summary.zero_vectors_skipped += 1;
            return;
        }
        if self.options.normalize && (norm - 1.0).abs() > UNIT_SLACK {
            for v in values.iter_mut() {
                *v = (*v as f64 / norm) as f32;
            }
        }
        let key = if self.options.lowercase {
            source.to_lowercase()
        } else {
            source.to_string()
        };
        let dim = self.table.dim;
        match self.table.index.get(&key) {
            Some(&i) if self.sources[i] == source => {
                self.table.data[i * dim..(i + 1) * dim].copy_from_slice(&values);
                self.table.summary.duplicates_replaced += 1;
            }
            Some(_) => self.table.summary.case_collisions_skipped += 1,
            None => {
                self.table.index.insert(key.clone(), self.table.words.len());
                self.table.words.push(key);
                self.table.data.extend_from_slice(&values);
                self.sources.push(source.to_string());
            }
        }
    }

    fn finish(mut self) -> EmbeddingTable {
        self.table.summary.loaded = self.table.len();
        self.table
    }
}

/// Byte-offset tracking reader used for truncation diagnostics.
struct Cursor<'p, R> {
    inner: R,
    offset: u64,
    path: &'p Path,
}

impl<R: BufRead> Cursor<'_, R> {
    fn io_err(&self, source: io::Error) -> Error {
        Error::Io {
            path: self.path.to_path_buf(),
            source,
        }
    }

    fn truncated(&self, message: impl Into<String>) -> Error {
        Error::Truncated {
            path: self.path.to_path_buf(),
            offset: self.offset,
            message: message.into(),
        }
    }

    /// Reads up to (excluding) `delim`; returns `None` at clean EOF.
    fn read_until(&mut self, delim: u8) -> Result<Option<Vec<u8>>> {
        let mut buf = Vec::new();
        let n = self.inner.read_until(delim, &mut buf).map_err(|e| self.io_err(e))?;
        if n == 0 {
            return Ok(None);
        }
        self.offset += n as u64;
        if buf.last() == Some(&delim) {
            buf.pop();
            Ok(Some(buf))
        } else {
            Err(self.truncated(format!("expected byte 0x{delim:02x} before end of file")))
        }
    }

    fn skip_newlines(&mut self) -> Result<()> {
        loop {
            let (skip, exhausted) = match self.inner.fill_buf() {
                Ok(buf) => {
                    let skip = buf.iter().take_while(|&&b| b == b'\n' || b == b'\r').count();
                    (skip, skip < buf.len() || buf.is_empty())
                }
                Err(e) => return Err(self.io_err(e)),
            };
            self.inner.consume(skip);
            self.offset += skip as u64;
            if exhausted {
                return Ok(());
            }
        }
    }

    fn read_floats(&mut self, dim: usize) -> Result<Vec<f32>> {
        let mut bytes = vec![0u8; dim * 4];
        let mut filled = 0;
        while filled < bytes.len() {
            match self.inner.read(&mut bytes[filled..]) {
                Ok(0) => {
                    self.offset += filled as u64;
                    return Err(self.truncated(format!("vector payload ends after {filled} of {} bytes", dim * 4)));
                }
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(self.io_err(e)),
            }
        }
        self.offset += filled as u64;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut fields = line.split_whitespace();
    let size = fields.next()?.parse().ok()?;
    let dim = fields.next()?.parse().ok()?;
    fields.next().is_none().then_some((size, dim))
}

fn read_binary<R: BufRead>(reader: R, path: &Path, options: LoadOptions) -> Result<EmbeddingTable> {
    let mut cursor = Cursor {
        inner: reader,
        offset: 0,
        path,
    };
    let format_err = |message: String| Error::Format {
        path: PathBuf::from(path),
        message,
    };
    let header = cursor
        .read_until(b'\n')
        .map_err(|_| format_err("missing `<vocab_size> <dim>` header line".into()))?
        .ok_or_else(|| format_err("empty file".into()))?;
    let header = String::from_utf8_lossy(&header);
    let (size, dim) =
        parse_header(&header).ok_or_else(|| format_err(format!("malformed header `{}`", header.trim_end())))?;
    if dim == 0 && size > 0 {
        return Err(format_err("dimension must be positive".into()));
    }

    let mut builder = TableBuilder::new(dim, options);
    for entry in 0..size {
        cursor.skip_newlines()?;
        let word = cursor
            .read_until(b' ')?
            .ok_or_else(|| cursor.truncated(format!("expected entry {entry} of {size}")))?;
        let word = String::from_utf8_lossy(&word);
        let values = cursor.read_floats(dim)?;
        builder.insert(&word, values);
    }
    let mut table = builder.finish();
    table.summary.declared_size = Some(size);
    Ok(table)
}

fn read_text<R: BufRead>(reader: R, path: &Path, options: LoadOptions) -> Result<EmbeddingTable> {
    let line_err = |line: usize, message: String| Error::FormatAtLine {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut builder: Option<TableBuilder> = None;
    let mut declared: Option<(usize, usize)> = None;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        if lineno == 1 {
            if let Some(header) = parse_header(&line) {
                declared = Some(header);
                continue;
            }
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-empty line has a field");
        let values = fields
            .map(|f| {
                f.parse::<f32>()
                    .map_err(|_| line_err(lineno, format!("`{f}` is not a number")))
            })
            .collect::<Result<Vec<f32>>>()?;
        let builder = builder.get_or_insert_with(|| {
            let dim = declared.map_or(values.len(), |(_, d)| d);
            TableBuilder::new(dim, options)
        });
        if values.len() != builder.table.dim {
            return Err(line_err(
                lineno,
                format!("expected {} values, found {}", builder.table.dim, values.len()),
            ));
        }
        builder.insert(word, values);
    }

    let mut table = match builder {
        Some(b) => b.finish(),
        None => TableBuilder::new(declared.map_or(0, |(_, d)| d), options).finish(),
    };
    table.summary.declared_size = declared.map(|(s, _)| s);
    Ok(table)
}
