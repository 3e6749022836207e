//! Contact and pressure metrics, dataset-level reports, the geometric
//! mesh-plane baseline and occlusion sensitivity analysis.

pub mod baseline;
pub mod error;
pub mod metrics;
pub mod report;
pub mod sensitivity;

pub use error::{EvalError, Result};
pub use metrics::{contact_iou, mae, temporal_accuracy, volumetric_iou, FrameMetricAccumulator};
pub use report::{
    aggregate, evaluate_predictor, evaluate_with, zero_guesser, FrameRecord, GroupMetrics,
    MetricsReport, ZeroGuesser, DEFAULT_GROUP_KEYS,
};
pub use sensitivity::{
    cell_rects, mean_color_replace, occlusion_sensitivity, CellRect, SensitivityMap, DEFAULT_GRID,
};
