//! Campaign orchestration: configuration, seeded Monte Carlo runs into a
//! resumable ensemble store, key-rate analysis and the validation suite.

pub mod analysis;
pub mod campaign;
pub mod config;
pub mod store;
pub mod validate;

pub use analysis::{analyze, evaluate_noise_point, export_csv, AnalysisReport, NoisePoint, ResultRecord};
pub use campaign::{realization_seed, run_campaign, with_configured_threads, CampaignSummary, THREADS_ENV};
pub use config::{CampaignConfig, ConjugationMode};
pub use store::{EnsembleStore, RealizationRecord};
pub use validate::{validate_suite, ValidationReport};
