//! Trusted spoofing countermeasure: an evidential network emits non-negative
//! evidence, a Dirichlet over the class probabilities turns it into an
//! opinion (class probabilities plus one uncertainty mass), and the
//! evaluation suite scores both detection and calibration.

pub mod data;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod net;
pub mod opinion;
pub mod report;
pub mod specfn;

pub use data::{gen_blobs, BlobConfig, Dataset, Sample, ScoreRecord};
pub use error::{Error, Result};
pub use loss::{AnnealSchedule, LossBreakdown};
pub use metrics::{CalibrationReport, EvalReport, TdcfCosts, UncertaintyBins};
pub use net::{predict, train, NetworkParams, Objective, TrainConfig, TrainedModel};
pub use opinion::{Class, Decision, DirichletParams, Evidence, OneHot, Opinion};
pub use report::{EvalConfig, Report, ScoreNormalization};
