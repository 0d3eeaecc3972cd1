//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure, 1 anything else (I/O on outputs).

use std::fmt;

use modsel_core::Error;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::DimensionMismatch(_) | Error::NonFinite { .. } | Error::Empty | Error::MissingTruth => {
                Failure::data(message)
            }
            Error::RankDeficient { .. } | Error::LeverageOne { .. } | Error::PerfectFit | Error::MixedCriteria => {
                Failure::numerical(message)
            }
            _ => Failure::config(message),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::io(e.to_string())
    }
}
