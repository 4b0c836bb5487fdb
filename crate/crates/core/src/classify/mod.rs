//! Trajectory classification: nearest-MMD labelling and feature-based
//! linear baselines with k-fold cross-validation.

mod features;
mod linear;
mod nearest;

pub use features::{extract_features, FeatureVector, MIN_FEATURE_LENGTH};
pub use linear::{
    cross_validate, train_linear_svm, train_logistic, CvReport, FitDiagnostics, LabeledDataset, LinearModel,
    LinearSvm, LogisticRegression, Trainer,
};
pub use nearest::{
    classify_queries, leave_one_out, nearest_mmd_classify, summarize, ClassificationSummary, NearestMatch, NearestMmdConfig,
    Prediction, StartRule,
};
