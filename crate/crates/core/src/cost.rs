//! Cost matrices over an answer space: the indicator cost for a single
//! distinguished answer, the normalized ordinal cost, the cosine-distance
//! semantic cost, and user-supplied matrices loaded from CSV.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::space::{Answer, AnswerSpace, Outcome, ScaleMap};

/// Dense nonnegative transport costs over every ordered outcome pair.
/// `cost(from, to)` is the price of moving one unit of mass from outcome
/// `from` to outcome `to`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    space: Arc<AnswerSpace>,
    entries: Vec<f64>,
}

impl CostMatrix {
    /// Wraps a row-major entry vector, validating size and nonnegativity.
    pub fn from_entries(space: Arc<AnswerSpace>, entries: Vec<f64>) -> Result<Self> {
        let n = space.len();
        if entries.len() != n * n {
            return Err(Error::CostMatrixSize {
                expected: n * n,
                got: entries.len(),
            });
        }
        for (k, &value) in entries.iter().enumerate() {
            if value < 0.0 {
                return Err(Error::NegativeCost {
                    row: space.label(k / n).to_owned(),
                    col: space.label(k % n).to_owned(),
                    value,
                });
            }
        }
        Ok(Self { space, entries })
    }

    pub fn space(&self) -> &Arc<AnswerSpace> {
        &self.space
    }

    pub fn cost(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.space.len() + to]
    }

    pub fn cost_outcomes(&self, from: &Outcome, to: &Outcome) -> Result<f64> {
        let i = self
            .space
            .index_of(from)
            .ok_or_else(|| Error::UnknownAnswer(from.label().to_owned()))?;
        let j = self
            .space
            .index_of(to)
            .ok_or_else(|| Error::UnknownAnswer(to.label().to_owned()))?;
        Ok(self.cost(i, j))
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    /// Writes the matrix as headered CSV: one header row of outcome labels
    /// (sentinel as `∅`) and one labeled row per source outcome.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let n = self.space.len();
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend((0..n).map(|i| self.space.label(i).to_owned()));
        w.write_record(&header)?;
        for i in 0..n {
            let mut row = vec![self.space.label(i).to_owned()];
            row.extend((0..n).map(|j| format!("{}", self.cost(i, j))));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a matrix in the [`write_csv`](Self::write_csv) layout. Headers
    /// must match the space's outcome labels exactly and in order.
    pub fn read_csv(space: Arc<AnswerSpace>, reader: impl Read) -> Result<Self> {
        let n = space.len();
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = r.records();
        let header = records
            .next()
            .transpose()?
            .ok_or(Error::MalformedCostRow(1))?;
        if header.len() != n + 1 {
            return Err(Error::MalformedCostRow(1));
        }
        for (i, field) in header.iter().skip(1).enumerate() {
            if field != space.label(i) {
                return Err(Error::CostHeaderMismatch {
                    expected: space.label(i).to_owned(),
                    got: field.to_owned(),
                });
            }
        }
        let mut entries = vec![0.0; n * n];
        let mut rows_seen = 0usize;
        for (i, record) in records.enumerate() {
            let record = record?;
            let line = i + 2;
            if i >= n || record.len() != n + 1 {
                return Err(Error::MalformedCostRow(line));
            }
            if &record[0] != space.label(i) {
                return Err(Error::CostHeaderMismatch {
                    expected: space.label(i).to_owned(),
                    got: record[0].to_owned(),
                });
            }
            for j in 0..n {
                entries[i * n + j] = record[j + 1]
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::MalformedCostRow(line))?;
            }
            rows_seen += 1;
        }
        if rows_seen != n {
            return Err(Error::MalformedCostRow(rows_seen + 1));
        }
        Self::from_entries(space, entries)
    }
}

/// Orientation of the indicator cost for a distinguished target answer.
///
/// The two orientations transpose each other; only `IntoTarget` makes the
/// score of a persuading context positive, so it is the default everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasicOrientation {
    /// Cost 1 to move mass from any non-target outcome into the target.
    IntoTarget,
    /// Cost 1 to move mass out of the target (the transposed matrix). Under
    /// this orientation transporting anything onto the target point mass is
    /// free, so the resulting score is identically zero; kept for
    /// compatibility experiments only.
    OutOfTarget,
}

/// Indicator cost: unit charge on moves between the target and everything
/// else, zero elsewhere. See [`BasicOrientation`].
pub fn basic_cost(space: &Arc<AnswerSpace>, target: &Answer) -> Result<CostMatrix> {
    basic_cost_oriented(space, target, BasicOrientation::IntoTarget)
}

pub fn basic_cost_oriented(
    space: &Arc<AnswerSpace>,
    target: &Answer,
    orientation: BasicOrientation,
) -> Result<CostMatrix> {
    let t = space
        .index_of_text(target.text())
        .ok_or_else(|| Error::UnknownAnswer(target.text().to_owned()))?;
    let n = space.len();
    let mut entries = vec![0.0; n * n];
    for other in (0..n).filter(|&i| i != t) {
        match orientation {
            BasicOrientation::IntoTarget => entries[other * n + t] = 1.0,
            BasicOrientation::OutOfTarget => entries[t * n + other] = 1.0,
        }
    }
    CostMatrix::from_entries(Arc::clone(space), entries)
}

/// Normalized absolute difference of scale positions:
/// `|n(a) − n(b)| / span` for scale answers, 0 on any pair involving the
/// sentinel. The sentinel clause makes this a non-metric; the solver never
/// assumes metric structure.
pub fn ordinal_cost(space: &Arc<AnswerSpace>, scale: &ScaleMap) -> Result<CostMatrix> {
    let span = scale.span();
    if span == 0 {
        return Err(Error::ZeroScaleSpan);
    }
    let positions = space
        .answers()
        .iter()
        .map(|a| {
            scale
                .numeric(a)
                .ok_or_else(|| Error::UnmappedScaleAnswer(a.text().to_owned()))
        })
        .collect::<Result<Vec<i64>>>()?;
    let n = space.len();
    let mut entries = vec![0.0; n * n];
    for (i, &ni) in positions.iter().enumerate() {
        for (j, &nj) in positions.iter().enumerate() {
            entries[i * n + j] = (ni - nj).unsigned_abs() as f64 / span as f64;
        }
    }
    CostMatrix::from_entries(Arc::clone(space), entries)
}

/// Fixed-dimension embedding vectors keyed by answer text. Duplicate texts
/// keep the first vector seen.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    vectors: HashMap<String, Vec<f64>>,
    dimension: usize,
}

impl EmbeddingTable {
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut vectors = HashMap::new();
        let mut dimension = 0usize;
        for (text, vector) in entries {
            let text = text.into();
            if vectors.contains_key(&text) {
                continue;
            }
            if vectors.is_empty() {
                dimension = vector.len();
            } else if vector.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: vector.len(),
                });
            }
            if norm(&vector) == 0.0 {
                return Err(Error::ZeroNormVector(text));
            }
            vectors.insert(text, vector);
        }
        Ok(Self { vectors, dimension })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, text: &str) -> Option<&[f64]> {
        self.vectors.get(text).map(Vec::as_slice)
    }

    /// Reads a JSON-lines file of `{"text": ..., "vector": [...]}` records.
    pub fn from_jsonl(reader: impl Read) -> Result<Self> {
        #[derive(Deserialize)]
        struct Line {
            text: String,
            vector: Vec<f64>,
        }
        let reader = std::io::BufReader::new(reader);
        let mut entries = Vec::new();
        for line in std::io::BufRead::lines(reader) {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line)?;
            entries.push((parsed.text, parsed.vector));
        }
        Self::new(entries)
    }

    pub fn load_jsonl(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_jsonl(std::fs::File::open(path)?)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (norm(a) * norm(b))
}

/// Cosine-distance cost `1 − cos(e(a), e(b))`, clamped to `[0, 2]`.
/// Same-outcome pairs and pairs involving the sentinel cost 0.
pub fn semantic_cost(space: &Arc<AnswerSpace>, table: &EmbeddingTable) -> Result<CostMatrix> {
    let vectors = space
        .answers()
        .iter()
        .map(|a| {
            table
                .get(a.text())
                .ok_or_else(|| Error::MissingVector(a.text().to_owned()))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = space.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..vectors.len() {
        for j in 0..vectors.len() {
            if i == j {
                continue;
            }
            entries[i * n + j] = (1.0 - cosine(vectors[i], vectors[j])).clamp(0.0, 2.0);
        }
    }
    CostMatrix::from_entries(Arc::clone(space), entries)
}

/// Loads a user-supplied cost matrix from headered CSV.
pub fn load_cost(space: &Arc<AnswerSpace>, path: impl AsRef<std::path::Path>) -> Result<CostMatrix> {
    CostMatrix::read_csv(Arc::clone(space), std::fs::File::open(path)?)
}
