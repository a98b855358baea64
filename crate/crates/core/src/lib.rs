//! Core metric engine for the targeted persuasion score (TPS).
//!
//! TPS measures how persuasive a context is to a language model: it is the
//! drop in Wasserstein distance from the model's answer distribution to a
//! target distribution when the context is prepended to the query. This
//! crate provides the pieces that computation is built from:
//!
//! - [`space`]: answer spaces (prefix-free covers with an out-of-scale
//!   sentinel), normalized distributions, and ordinal scale maps;
//! - [`cost`]: the indicator, ordinal, and cosine-distance cost families,
//!   plus CSV-loaded matrices;
//! - [`transport`]: an exact transportation-simplex solver with closed-form
//!   fast paths for point-mass targets and 1-d ordinal costs;
//! - [`tps`]: the score itself and its named variants;
//! - [`stats`]: MAD outlier detection, Spearman correlation, one-sided
//!   t-tests, Bonferroni flags, and RMSE.
//!
//! Everything here is pure and immutable after construction; values are
//! safe to share across threads.

pub mod cost;
pub mod error;
pub mod space;
pub mod stats;
#[cfg(any(test, feature = "testkit"))]
pub mod testkit;
pub mod transport;
pub mod tps;

pub use cost::{
    basic_cost, basic_cost_oriented, load_cost, ordinal_cost, semantic_cost, BasicOrientation,
    CostMatrix, EmbeddingTable,
};
pub use error::{Error, Result};
pub use space::{
    expected_value, load_distribution, load_space, parse_distribution, parse_space, same_space,
    validate_prefix_free, Answer, AnswerDistribution, AnswerSpace, Outcome, PrefixFreedom,
    ResidualMode, ScaleMap, SENTINEL_LABEL,
};
pub use stats::{
    bonferroni, mad_outliers, mad_outliers_with_rule, rmse, spearman, student_t_cdf,
    student_t_sf, t_test_one_sided, OutlierReport, TTest, Tail,
};
pub use transport::{
    validate_plan, wasserstein, wasserstein_1d_ordinal, wasserstein_to_point_mass, Method,
    PlanCheck, TransportPlan, WassersteinResult, FEASIBILITY_TOLERANCE, MAX_SUPPORT,
    OPTIMALITY_TOLERANCE,
};
pub use tps::{basic_tps, distance_tps, semantic_tps, tps, TpsInput, TpsResult, Variant};
