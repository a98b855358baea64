//! Experiment harnesses over the TPS metric: dataset ingestion, seeded
//! context construction, backend calls, and analysis-ready CSV/JSON
//! emission. Every harness is a deterministic function of its dataset, the
//! backend's responses, and the seed, so runs against a replay fixture are
//! byte-identical.

pub mod annotation;
pub mod concat;
pub mod config;
pub mod dataset;
pub mod emit;
pub mod error;
pub mod greedy;
pub mod lost_in_middle;
pub mod movies;
pub mod record;
pub mod run;
pub mod seeding;
pub mod tps_vs_k;
pub mod word_sense;

use std::path::Path;

pub use config::RunConfig;
pub use error::{HarnessError, Result};
pub use record::{categorize, Category, ContextPiece, ExperimentRecord};
pub use run::{ExperimentContext, QuarantineNote, RunOutcome};

/// The six named experiments the CLI can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    GreedyVsTps,
    WordSense,
    TpsVsK,
    ConcatVsIndividual,
    LostInMiddle,
    AnnotationCoding,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::GreedyVsTps,
        ExperimentKind::WordSense,
        ExperimentKind::TpsVsK,
        ExperimentKind::ConcatVsIndividual,
        ExperimentKind::LostInMiddle,
        ExperimentKind::AnnotationCoding,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::GreedyVsTps => "greedy-vs-tps",
            ExperimentKind::WordSense => "word-sense",
            ExperimentKind::TpsVsK => "tps-vs-k",
            ExperimentKind::ConcatVsIndividual => "concat-vs-individual",
            ExperimentKind::LostInMiddle => "lost-in-middle",
            ExperimentKind::AnnotationCoding => "annotation-coding",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|kind| kind.name() == name)
            .ok_or_else(|| HarnessError::UnknownExperiment(name.to_owned()))
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Runs one experiment end to end: ingest, score, emit. Output files land
/// in `out_dir` (`results.csv`, `summary.json`, and `samples.json` for the
/// seeded harnesses).
pub fn run_experiment(
    kind: ExperimentKind,
    dataset: &Path,
    out_dir: &Path,
    ctx: &ExperimentContext,
) -> Result<RunOutcome> {
    std::fs::create_dir_all(out_dir)?;
    match kind {
        ExperimentKind::GreedyVsTps => greedy::run(dataset, out_dir, ctx),
        ExperimentKind::WordSense => word_sense::run(dataset, out_dir, ctx),
        ExperimentKind::TpsVsK => tps_vs_k::run(dataset, out_dir, ctx),
        ExperimentKind::ConcatVsIndividual => concat::run(dataset, out_dir, ctx),
        ExperimentKind::LostInMiddle => lost_in_middle::run(dataset, out_dir, ctx),
        ExperimentKind::AnnotationCoding => annotation::run(dataset, out_dir, ctx),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_names_round_trip() {
        for kind in ExperimentKind::ALL {
            assert_eq!(ExperimentKind::parse(kind.name()).unwrap(), kind);
        }
        assert!(matches!(
            ExperimentKind::parse("nope"),
            Err(HarnessError::UnknownExperiment(_))
        ));
    }
}
