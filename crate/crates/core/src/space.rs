//! Answer spaces, probability distributions over them, and ordinal scale maps.
//!
//! An [`AnswerSpace`] is a finite set of candidate answer strings, optionally
//! extended with an out-of-scale sentinel `∅` that absorbs probability mass
//! falling outside the declared answers. Distributions, cost matrices, and
//! transport plans are all indexed against one shared space.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization slack accepted when a distribution is constructed. Weight
/// vectors within this tolerance of a simplex point are rescaled exactly.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// A candidate answer string. Nonempty by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Answer(String);

impl Answer {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.is_empty() {
            return Err(Error::EmptyAnswerText);
        }
        Ok(Self(text))
    }

    pub fn text(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Answer {
    type Error = Error;

    fn try_from(text: String) -> Result<Self> {
        Answer::new(text)
    }
}

impl From<Answer> for String {
    fn from(answer: Answer) -> String {
        answer.0
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Label used for the sentinel in file formats and reports.
pub const SENTINEL_LABEL: &str = "∅";

/// An outcome a distribution can place mass on: a concrete answer or the
/// out-of-scale sentinel.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Answer(Answer),
    Sentinel,
}

impl Outcome {
    pub fn answer(text: impl Into<String>) -> Result<Self> {
        Ok(Outcome::Answer(Answer::new(text)?))
    }

    pub fn as_answer(&self) -> Option<&Answer> {
        match self {
            Outcome::Answer(a) => Some(a),
            Outcome::Sentinel => None,
        }
    }

    pub fn is_sentinel(&self) -> bool {
        matches!(self, Outcome::Sentinel)
    }

    /// Human-readable label; the sentinel renders as `∅`.
    pub fn label(&self) -> &str {
        match self {
            Outcome::Answer(a) => a.text(),
            Outcome::Sentinel => SENTINEL_LABEL,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Checks the prefix-free property over a sequence of answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrefixFreedom {
    PrefixFree,
    /// The first offending pair in input order.
    Violation { first: Answer, second: Answer },
}

impl PrefixFreedom {
    pub fn is_ok(&self) -> bool {
        matches!(self, PrefixFreedom::PrefixFree)
    }
}

/// Pairwise scan for prefix violations; reports the first violating pair in
/// input order. Errors on an empty input.
pub fn validate_prefix_free(answers: &[Answer]) -> Result<PrefixFreedom> {
    if answers.is_empty() {
        return Err(Error::EmptyAnswerSet);
    }
    for i in 0..answers.len() {
        for j in (i + 1)..answers.len() {
            let (a, b) = (answers[i].text(), answers[j].text());
            if a.starts_with(b) || b.starts_with(a) {
                return Ok(PrefixFreedom::Violation {
                    first: answers[i].clone(),
                    second: answers[j].clone(),
                });
            }
        }
    }
    Ok(PrefixFreedom::PrefixFree)
}

/// A finite, ordered set of answers plus an optional sentinel outcome.
///
/// Outcome indices are stable: answers occupy `0..num_answers()` in
/// construction order and the sentinel, when present, is the last index.
#[derive(Debug, Clone)]
pub struct AnswerSpace {
    answers: Vec<Answer>,
    sentinel: bool,
    prefix_free: bool,
    index: HashMap<String, usize>,
}

impl PartialEq for AnswerSpace {
    fn eq(&self, other: &Self) -> bool {
        self.answers == other.answers && self.sentinel == other.sentinel
    }
}

impl Eq for AnswerSpace {}

impl AnswerSpace {
    /// Builds a prefix-free space. Fails on duplicates or prefix violations.
    pub fn new(answers: Vec<Answer>, sentinel: bool) -> Result<Arc<Self>> {
        match validate_prefix_free(&answers)? {
            PrefixFreedom::PrefixFree => {}
            PrefixFreedom::Violation { first, second } => {
                if first == second {
                    return Err(Error::DuplicateAnswer(first.text().to_owned()));
                }
                return Err(Error::PrefixViolation {
                    first: first.text().to_owned(),
                    second: second.text().to_owned(),
                });
            }
        }
        Self::build(answers, sentinel, true)
    }

    /// Builds a space of atomic single-token outcomes without the prefix
    /// check. Next-token distributions treat each token as indivisible, so a
    /// token alphabet need not be prefix-free as strings; string-probability
    /// covers still require [`AnswerSpace::new`].
    pub fn from_tokens(answers: Vec<Answer>, sentinel: bool) -> Result<Arc<Self>> {
        if answers.is_empty() {
            return Err(Error::EmptyAnswerSet);
        }
        let prefix_free = matches!(
            validate_prefix_free(&answers)?,
            PrefixFreedom::PrefixFree
        );
        Self::build(answers, sentinel, prefix_free)
    }

    fn build(answers: Vec<Answer>, sentinel: bool, prefix_free: bool) -> Result<Arc<Self>> {
        let mut index = HashMap::with_capacity(answers.len());
        for (i, answer) in answers.iter().enumerate() {
            if index.insert(answer.text().to_owned(), i).is_some() {
                return Err(Error::DuplicateAnswer(answer.text().to_owned()));
            }
        }
        Ok(Arc::new(Self {
            answers,
            sentinel,
            prefix_free,
            index,
        }))
    }

    /// Number of outcomes, sentinel included.
    pub fn len(&self) -> usize {
        self.answers.len() + usize::from(self.sentinel)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_answers(&self) -> usize {
        self.answers.len()
    }

    pub fn has_sentinel(&self) -> bool {
        self.sentinel
    }

    pub fn is_prefix_free(&self) -> bool {
        self.prefix_free
    }

    pub fn answers(&self) -> &[Answer] {
        &self.answers
    }

    pub fn sentinel_index(&self) -> Option<usize> {
        self.sentinel.then_some(self.answers.len())
    }

    pub fn outcome(&self, index: usize) -> Outcome {
        if index < self.answers.len() {
            Outcome::Answer(self.answers[index].clone())
        } else if Some(index) == self.sentinel_index() {
            Outcome::Sentinel
        } else {
            panic!("outcome index {index} out of bounds for space of {}", self.len())
        }
    }

    pub fn label(&self, index: usize) -> &str {
        if index < self.answers.len() {
            self.answers[index].text()
        } else {
            SENTINEL_LABEL
        }
    }

    pub fn index_of_text(&self, text: &str) -> Option<usize> {
        self.index.get(text).copied()
    }

    pub fn index_of(&self, outcome: &Outcome) -> Option<usize> {
        match outcome {
            Outcome::Answer(a) => self.index_of_text(a.text()),
            Outcome::Sentinel => self.sentinel_index(),
        }
    }

    pub fn outcomes(&self) -> impl Iterator<Item = Outcome> + '_ {
        (0..self.len()).map(|i| self.outcome(i))
    }
}

/// Two handles refer to the same space if they are literally shared or
/// structurally equal (e.g. loaded from identical files).
pub fn same_space(a: &Arc<AnswerSpace>, b: &Arc<AnswerSpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// What to do with probability mass not assigned to any answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualMode {
    /// Assign `1 − Σ weights` to the sentinel.
    Sentinel,
    /// Divide every weight by the total (requires a positive total).
    Renormalize,
}

/// A normalized probability distribution over an [`AnswerSpace`].
///
/// Construction renormalizes exactly, so `probs()` always sums to 1 up to
/// floating-point rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerDistribution {
    space: Arc<AnswerSpace>,
    probs: Vec<f64>,
}

impl AnswerDistribution {
    /// Builds a distribution from nonnegative per-answer weights.
    ///
    /// Sentinel mode requires the total to stay within `1 + 1e-6` and assigns
    /// the residual to `∅`; renormalize mode rescales by the total.
    pub fn build<I, S>(space: &Arc<AnswerSpace>, raw: I, mode: ResidualMode) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut probs = vec![0.0; space.len()];
        for (text, weight) in raw {
            let text = text.as_ref();
            if weight < 0.0 {
                return Err(Error::NegativeWeight {
                    answer: text.to_owned(),
                    weight,
                });
            }
            let idx = space
                .index_of_text(text)
                .ok_or_else(|| Error::UnknownAnswer(text.to_owned()))?;
            probs[idx] += weight;
        }
        let total: f64 = probs.iter().sum();
        match mode {
            ResidualMode::Sentinel => {
                if total > 1.0 + NORMALIZATION_TOLERANCE {
                    return Err(Error::MassExceedsOne { total });
                }
                match space.sentinel_index() {
                    Some(s) => probs[s] = (1.0 - total).max(0.0),
                    None => {
                        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
                            return Err(Error::NoSentinelForResidual { total });
                        }
                    }
                }
            }
            ResidualMode::Renormalize => {
                if total <= 0.0 {
                    return Err(Error::ZeroTotalMass);
                }
                for p in &mut probs {
                    *p /= total;
                }
            }
        }
        Self::from_probs(Arc::clone(space), probs)
    }

    /// Wraps a full probability vector (one entry per outcome, sentinel
    /// last). The vector must already sum to 1 within `1e-6`; it is then
    /// rescaled exactly.
    pub fn from_probs(space: Arc<AnswerSpace>, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != space.len() {
            return Err(Error::ProbabilityLength {
                expected: space.len(),
                got: probs.len(),
            });
        }
        for (i, &p) in probs.iter().enumerate() {
            if p < 0.0 {
                return Err(Error::NegativeWeight {
                    answer: space.label(i).to_owned(),
                    weight: p,
                });
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::MassExceedsOne { total });
        }
        let probs = probs.into_iter().map(|p| p / total).collect();
        Ok(Self { space, probs })
    }

    /// The point mass δ on one outcome.
    pub fn point_mass(space: &Arc<AnswerSpace>, outcome: &Outcome) -> Result<Self> {
        let idx = space
            .index_of(outcome)
            .ok_or_else(|| Error::UnknownAnswer(outcome.label().to_owned()))?;
        let mut probs = vec![0.0; space.len()];
        probs[idx] = 1.0;
        Ok(Self {
            space: Arc::clone(space),
            probs,
        })
    }

    pub fn uniform(space: &Arc<AnswerSpace>) -> Self {
        let n = space.len();
        Self {
            space: Arc::clone(space),
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn space(&self) -> &Arc<AnswerSpace> {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_at(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn prob(&self, outcome: &Outcome) -> f64 {
        self.space
            .index_of(outcome)
            .map(|i| self.probs[i])
            .unwrap_or(0.0)
    }

    pub fn prob_text(&self, text: &str) -> f64 {
        self.space
            .index_of_text(text)
            .map(|i| self.probs[i])
            .unwrap_or(0.0)
    }

    pub fn sentinel_mass(&self) -> f64 {
        self.space
            .sentinel_index()
            .map(|i| self.probs[i])
            .unwrap_or(0.0)
    }

    /// Index of the single outcome carrying probability 1, if any.
    pub fn point_mass_index(&self) -> Option<usize> {
        self.probs.iter().position(|&p| p == 1.0)
    }

    /// Argmax outcome. Ties break toward the lexicographically smallest
    /// answer text; the sentinel loses all ties.
    pub fn greedy(&self) -> Outcome {
        let mut best: Option<usize> = None;
        for (i, answer) in self.space.answers().iter().enumerate() {
            match best {
                None => best = Some(i),
                Some(b) => {
                    let (pb, pi) = (self.probs[b], self.probs[i]);
                    if pi > pb
                        || (pi == pb && answer.text() < self.space.answers()[b].text())
                    {
                        best = Some(i);
                    }
                }
            }
        }
        match (best, self.space.sentinel_index()) {
            (Some(b), Some(s)) if self.probs[s] > self.probs[b] => Outcome::Sentinel,
            (Some(b), _) => Outcome::Answer(self.space.answers()[b].clone()),
            (None, Some(_)) => Outcome::Sentinel,
            (None, None) => unreachable!("spaces are nonempty by construction"),
        }
    }
}

/// Maps scale answers to integer positions (e.g. `"0"..="9"` to `0..=9`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaleMap {
    answers: Vec<Answer>,
    numeric: HashMap<String, i64>,
    min: i64,
    max: i64,
}

impl ScaleMap {
    pub fn new(pairs: Vec<(Answer, i64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyAnswerSet);
        }
        let mut numeric = HashMap::with_capacity(pairs.len());
        let mut by_value: HashMap<i64, String> = HashMap::new();
        let mut answers = Vec::with_capacity(pairs.len());
        let (mut min, mut max) = (i64::MAX, i64::MIN);
        for (answer, value) in pairs {
            if let Some(prev) = by_value.insert(value, answer.text().to_owned()) {
                return Err(Error::NonInjectiveScale {
                    first: prev,
                    second: answer.text().to_owned(),
                    value,
                });
            }
            if numeric.insert(answer.text().to_owned(), value).is_some() {
                return Err(Error::DuplicateAnswer(answer.text().to_owned()));
            }
            min = min.min(value);
            max = max.max(value);
            answers.push(answer);
        }
        if answers.len() >= 2 && max == min {
            return Err(Error::ZeroScaleSpan);
        }
        Ok(Self {
            answers,
            numeric,
            min,
            max,
        })
    }

    /// The decimal-string scale `lo..=hi`, e.g. `integer_range(0, 9)` for a
    /// ten-point rating scale.
    pub fn integer_range(lo: i64, hi: i64) -> Result<Self> {
        let pairs = (lo..=hi)
            .map(|v| Ok((Answer::new(v.to_string())?, v)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs)
    }

    pub fn answers(&self) -> &[Answer] {
        &self.answers
    }

    pub fn numeric(&self, answer: &Answer) -> Option<i64> {
        self.numeric.get(answer.text()).copied()
    }

    pub fn numeric_text(&self, text: &str) -> Option<i64> {
        self.numeric.get(text).copied()
    }

    pub fn contains(&self, answer: &Answer) -> bool {
        self.numeric.contains_key(answer.text())
    }

    pub fn min(&self) -> i64 {
        self.min
    }

    pub fn max(&self) -> i64 {
        self.max
    }

    /// `max − min`; positive whenever the scale has at least two answers.
    pub fn span(&self) -> i64 {
        self.max - self.min
    }
}

/// Probability-weighted mean scale position of a distribution.
///
/// Sentinel mass contributes 0 to the sum and is returned alongside the
/// value so callers can reject high-`∅` cases.
pub fn expected_value(dist: &AnswerDistribution, scale: &ScaleMap) -> Result<(f64, f64)> {
    let mut value = 0.0;
    for (i, answer) in dist.space().answers().iter().enumerate() {
        let p = dist.prob_at(i);
        match scale.numeric(answer) {
            Some(n) => value += p * n as f64,
            None if p == 0.0 => {}
            None => return Err(Error::UnmappedScaleAnswer(answer.text().to_owned())),
        }
    }
    Ok((value, dist.sentinel_mass()))
}

#[derive(Debug, Serialize, Deserialize)]
struct SpaceFile {
    answers: Vec<Answer>,
    #[serde(default)]
    sentinel: bool,
    #[serde(default)]
    scale: Option<std::collections::BTreeMap<String, i64>>,
}

/// Parses the JSON space document
/// `{"answers":[...], "sentinel":true, "scale":{"0":0,...}}`.
pub fn parse_space(reader: impl Read) -> Result<(Arc<AnswerSpace>, Option<ScaleMap>)> {
    let file: SpaceFile = serde_json::from_reader(reader)?;
    let space = AnswerSpace::new(file.answers, file.sentinel)?;
    let scale = file
        .scale
        .map(|entries| {
            ScaleMap::new(
                entries
                    .into_iter()
                    .map(|(text, value)| Ok((Answer::new(text)?, value)))
                    .collect::<Result<Vec<_>>>()?,
            )
        })
        .transpose()?;
    Ok((space, scale))
}

pub fn load_space(path: impl AsRef<std::path::Path>) -> Result<(Arc<AnswerSpace>, Option<ScaleMap>)> {
    parse_space(std::fs::File::open(path)?)
}

#[derive(Debug, Deserialize)]
struct DistributionFile {
    space: SpaceFile,
    probs: std::collections::BTreeMap<String, f64>,
    #[serde(default = "default_residual")]
    residual: ResidualMode,
}

fn default_residual() -> ResidualMode {
    ResidualMode::Sentinel
}

/// Parses a distribution document: a space plus per-answer weights,
/// `{"space":{...}, "probs":{"A":0.25,...}, "residual":"sentinel"}`.
pub fn parse_distribution(
    reader: impl Read,
) -> Result<(AnswerDistribution, Option<ScaleMap>)> {
    let file: DistributionFile = serde_json::from_reader(reader)?;
    let space = AnswerSpace::new(file.space.answers, file.space.sentinel)?;
    let scale = file
        .space
        .scale
        .map(|entries| {
            ScaleMap::new(
                entries
                    .into_iter()
                    .map(|(text, value)| Ok((Answer::new(text)?, value)))
                    .collect::<Result<Vec<_>>>()?,
            )
        })
        .transpose()?;
    let dist = AnswerDistribution::build(&space, file.probs, file.residual)?;
    Ok((dist, scale))
}

pub fn load_distribution(
    path: impl AsRef<std::path::Path>,
) -> Result<(AnswerDistribution, Option<ScaleMap>)> {
    parse_distribution(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn answers(texts: &[&str]) -> Vec<Answer> {
        texts.iter().map(|t| Answer::new(*t).unwrap()).collect()
    }

    #[test]
    fn prefix_free_accepts_distinct_words() {
        let ok = validate_prefix_free(&answers(&["German", "French"])).unwrap();
        assert!(ok.is_ok());
        let ok = validate_prefix_free(&answers(&["9", "5", "0"])).unwrap();
        assert!(ok.is_ok());
    }

    #[test]
    fn prefix_free_reports_first_pair() {
        let report = validate_prefix_free(&answers(&["run", "runner"])).unwrap();
        match report {
            PrefixFreedom::Violation { first, second } => {
                assert_eq!(first.text(), "run");
                assert_eq!(second.text(), "runner");
            }
            PrefixFreedom::PrefixFree => panic!("expected a violation"),
        }
    }

    #[test]
    fn prefix_free_rejects_empty_input() {
        assert!(matches!(
            validate_prefix_free(&[]),
            Err(Error::EmptyAnswerSet)
        ));
    }

    #[test]
    fn space_rejects_duplicates_and_prefixes() {
        assert!(matches!(
            AnswerSpace::new(answers(&["a", "a"]), false),
            Err(Error::DuplicateAnswer(_))
        ));
        assert!(matches!(
            AnswerSpace::new(answers(&["run", "runner"]), false),
            Err(Error::PrefixViolation { .. })
        ));
    }

    #[test]
    fn token_space_allows_prefixes_but_flags_them() {
        let space = AnswerSpace::from_tokens(answers(&["9", "95"]), true).unwrap();
        assert!(!space.is_prefix_free());
        assert_eq!(space.len(), 3);
    }

    #[test]
    fn build_sentinel_mode_assigns_residual() {
        let space = AnswerSpace::new(answers(&["9", "0"]), true).unwrap();
        let dist = AnswerDistribution::build(
            &space,
            [("9", 0.6), ("0", 0.2)],
            ResidualMode::Sentinel,
        )
        .unwrap();
        assert!((dist.prob_text("9") - 0.6).abs() < 1e-12);
        assert!((dist.sentinel_mass() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn build_sentinel_mode_zero_residual_when_normalized() {
        let space = AnswerSpace::new(answers(&["A", "B", "C", "D"]), true).unwrap();
        let dist = AnswerDistribution::build(
            &space,
            [("A", 0.25), ("B", 0.25), ("C", 0.25), ("D", 0.25)],
            ResidualMode::Sentinel,
        )
        .unwrap();
        assert_eq!(dist.sentinel_mass(), 0.0);
    }

    #[test]
    fn build_renormalize_rescales_uniformly() {
        let space = AnswerSpace::new(answers(&["A", "B"]), false).unwrap();
        let dist =
            AnswerDistribution::build(&space, [("A", 0.2), ("B", 0.2)], ResidualMode::Renormalize)
                .unwrap();
        assert!((dist.prob_text("A") - 0.5).abs() < 1e-12);
        assert!((dist.prob_text("B") - 0.5).abs() < 1e-12);
    }

    #[test]
    fn build_rejects_bad_weights() {
        let space = AnswerSpace::new(answers(&["A", "B"]), true).unwrap();
        assert!(matches!(
            AnswerDistribution::build(&space, [("A", -0.1)], ResidualMode::Sentinel),
            Err(Error::NegativeWeight { .. })
        ));
        assert!(matches!(
            AnswerDistribution::build(&space, [("A", 0.9), ("B", 0.3)], ResidualMode::Sentinel),
            Err(Error::MassExceedsOne { .. })
        ));
        assert!(matches!(
            AnswerDistribution::build(&space, [("A", 0.0)], ResidualMode::Renormalize),
            Err(Error::ZeroTotalMass)
        ));
        assert!(matches!(
            AnswerDistribution::build(&space, [("Z", 0.5)], ResidualMode::Sentinel),
            Err(Error::UnknownAnswer(_))
        ));
    }

    #[test]
    fn distribution_sums_to_one_exactly_after_build() {
        let space = AnswerSpace::new(answers(&["A", "B", "C"]), true).unwrap();
        let dist = AnswerDistribution::build(
            &space,
            [("A", 0.3000001), ("B", 0.3), ("C", 0.4)],
            ResidualMode::Sentinel,
        )
        .unwrap();
        let total: f64 = dist.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_unique_max() {
        let space = AnswerSpace::new(answers(&["German", "French"]), false).unwrap();
        let dist = AnswerDistribution::build(
            &space,
            [("German", 0.9), ("French", 0.1)],
            ResidualMode::Renormalize,
        )
        .unwrap();
        assert_eq!(dist.greedy().label(), "German");
    }

    #[test]
    fn greedy_lexicographic_tie_break() {
        let space = AnswerSpace::new(answers(&["B", "A"]), false).unwrap();
        let dist =
            AnswerDistribution::build(&space, [("A", 0.5), ("B", 0.5)], ResidualMode::Renormalize)
                .unwrap();
        assert_eq!(dist.greedy().label(), "A");
    }

    #[test]
    fn greedy_sentinel_loses_ties() {
        let space = AnswerSpace::new(answers(&["Z"]), true).unwrap();
        let dist =
            AnswerDistribution::build(&space, [("Z", 0.5)], ResidualMode::Sentinel).unwrap();
        assert_eq!(dist.greedy().label(), "Z");
    }

    #[test]
    fn greedy_sentinel_wins_strict_majority() {
        let space = AnswerSpace::new(answers(&["Z"]), true).unwrap();
        let dist =
            AnswerDistribution::build(&space, [("Z", 0.2)], ResidualMode::Sentinel).unwrap();
        assert!(dist.greedy().is_sentinel());
    }

    #[test]
    fn expected_value_point_mass_and_symmetry() {
        let space = AnswerSpace::new(answers(&["0", "3", "5", "9"]), true).unwrap();
        let scale = ScaleMap::integer_range(0, 9).unwrap();

        let nine = AnswerDistribution::build(&space, [("9", 1.0)], ResidualMode::Sentinel).unwrap();
        assert_eq!(expected_value(&nine, &scale).unwrap().0, 9.0);

        let split =
            AnswerDistribution::build(&space, [("0", 0.5), ("9", 0.5)], ResidualMode::Sentinel)
                .unwrap();
        assert_eq!(expected_value(&split, &scale).unwrap().0, 4.5);
    }

    #[test]
    fn expected_value_ignores_sentinel_mass() {
        // Hand sum 0.5·3 + 0.25·5 = 2.75, sentinel contributes nothing.
        let space = AnswerSpace::new(answers(&["3", "5"]), true).unwrap();
        let scale = ScaleMap::integer_range(0, 9).unwrap();
        let dist =
            AnswerDistribution::build(&space, [("3", 0.5), ("5", 0.25)], ResidualMode::Sentinel)
                .unwrap();
        let (value, sentinel) = expected_value(&dist, &scale).unwrap();
        assert!((value - 2.75).abs() < 1e-12);
        assert!((sentinel - 0.25).abs() < 1e-12);
    }

    #[test]
    fn expected_value_rejects_unmapped_support() {
        let space = AnswerSpace::new(answers(&["3", "x"]), true).unwrap();
        let scale = ScaleMap::integer_range(0, 9).unwrap();
        let dist =
            AnswerDistribution::build(&space, [("3", 0.5), ("x", 0.5)], ResidualMode::Sentinel)
                .unwrap();
        assert!(matches!(
            expected_value(&dist, &scale),
            Err(Error::UnmappedScaleAnswer(_))
        ));
    }

    #[test]
    fn scale_map_rejects_non_injective() {
        let pairs = vec![
            (Answer::new("a").unwrap(), 1),
            (Answer::new("b").unwrap(), 1),
        ];
        assert!(matches!(
            ScaleMap::new(pairs),
            Err(Error::NonInjectiveScale { .. })
        ));
    }

    #[test]
    fn space_json_round_trip() {
        let json = r#"{"answers":["0","1","2"],"sentinel":true,"scale":{"0":0,"1":1,"2":2}}"#;
        let (space, scale) = parse_space(json.as_bytes()).unwrap();
        assert_eq!(space.len(), 4);
        let scale = scale.unwrap();
        assert_eq!(scale.span(), 2);
        assert_eq!(scale.numeric_text("1"), Some(1));
    }

    #[test]
    fn distribution_json_parses() {
        let json = r#"{"space":{"answers":["A","B"],"sentinel":true},"probs":{"A":0.5,"B":0.25}}"#;
        let (dist, _) = parse_distribution(json.as_bytes()).unwrap();
        assert!((dist.prob_text("A") - 0.5).abs() < 1e-12);
        assert!((dist.sentinel_mass() - 0.25).abs() < 1e-12);
    }
}
