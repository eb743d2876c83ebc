//! Experiment engine: scenario configs, seeded Monte Carlo runs, sweeps,
//! method comparisons and CSV reports.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod scenes;

pub use config::{CodeConfig, Estimator, Method, NoiseConfig, ScenarioConfig};
pub use pipeline::{run_trial, trial_spectrum, TrialRecord};
pub use report::{
    compare_report, median_with_failures, run_scenario, summarize, sweep, sweep_variant, trend_violations,
    write_summary_csv, write_timing_csv, write_trials_csv, CompareRow, Summary, SweepAxis, SweepRow,
};
