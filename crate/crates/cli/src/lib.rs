//! Library side of the `hrush` command: configuration, pipeline, reports
//! and content-addressed artifacts.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod pipeline;
pub mod report;

use hrushovski::error::Error;

pub use config::{ParamSelector, RunConfig};
pub use pipeline::{run_pipeline, PipelineOutput};
pub use report::{Format, Report, Section, Verdict};

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    /// A required property failed.
    Failed = 1,
    Invalid = 2,
    /// A resource budget was exceeded.
    Resource = 3,
}

impl Exit {
    pub fn of_verdict(v: Verdict) -> Exit {
        match v {
            Verdict::Pass => Exit::Success,
            Verdict::Fail => Exit::Failed,
        }
    }

    pub fn of_error(e: &Error) -> Exit {
        match e {
            Error::Resource(_) => Exit::Resource,
            Error::InvalidInput(_) | Error::Unsupported(_) | Error::Parse { .. } => Exit::Invalid,
        }
    }
}
