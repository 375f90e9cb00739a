//! Conformal prediction: transductive confidence machines for
//! classification and ridge regression, inductive (split) conformal
//! predictors, the on-line protocol with its calibration counters, and a
//! Bayesian ridge baseline for comparison.

// `!(x > 0.0)` style checks are there to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod conformal;
pub mod error;
pub mod icp;
pub mod kernel;
pub mod nonconformity;
pub mod protocol;
pub mod ridge;
pub mod rrcm;
pub mod stats;
pub mod types;

pub use conformal::{
    classify_p_table, p_value, prediction_set, smoothed_p_value, summarize, Epsilon, KnnConformal, SmoothingTape,
    TransductiveClassifier,
};
pub use error::{Error, Result};
pub use icp::{icp_fit, icp_p_value, icp_predict, IcpModel, Learner, NearestNeighbourLearner, PredictionRule, RidgeLearner};
pub use kernel::KernelSpec;
pub use nonconformity::{
    knn_scores, residual_scores, DiscrepancySpec, KnnConfig, KnnIndex, KnnMeasure, NonconformityMeasure,
    NonconformityScores, ResidualMeasure,
};
pub use protocol::{
    calibration_report, run_batch, run_online, CalibrationReport, ConfidencePredictor, Counts, Feedback,
    ProtocolLedger, RrcmPredictor, TeacherSchedule,
};
pub use ridge::{RidgeConfig, RidgeModel};
pub use rrcm::{rrcm_predict, PValueProfile, RegressionPrediction, ResidualLine};
pub use types::{
    complete, ClassLabel, ConfidenceCredibility, Dataset, Example, Interval, IntervalUnion, Label, LabelSpace,
    PValueTable, PredictionSet,
};
