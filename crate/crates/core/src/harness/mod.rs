//! Campaign configuration, execution, caching and reporting.

pub mod cache;
pub mod campaign;
pub mod cli;
pub mod config;
pub mod report;

pub use cache::Cache;
pub use campaign::{derive_seed, run_campaign, CampaignOutcome, RunOptions, CODE_VERSION};
pub use config::{CampaignConfig, CampaignKind};
pub use report::{ReportRow, Status, SCHEMA_VERSION};
