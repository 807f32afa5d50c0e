//! JSON description files for exchanges and step functions.
//!
//! ```json
//! {"permutation":[2,1],"lengths":["2/3","1/3"]}
//! {"widths":["1/2","1/2"],"values":["1","-1"]}
//! ```
//!
//! Permutations are one-based; every number is an exact string.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iet::{Iet, IetError, Permutation};
use crate::numeric::ExactScalar;
use crate::step::{StepError, StepFunction};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Iet(#[from] IetError),
    #[error(transparent)]
    Step(#[from] StepError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IetFile {
    pub permutation: Vec<usize>,
    pub lengths: Vec<ExactScalar>,
}

impl IetFile {
    pub fn from_iet(iet: &Iet) -> Self {
        IetFile {
            permutation: iet.permutation().one_based(),
            lengths: iet.lengths().to_vec(),
        }
    }

    pub fn build(&self) -> Result<Iet, FileError> {
        Ok(Iet::new(
            Permutation::from_one_based(&self.permutation)?,
            self.lengths.clone(),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepFile {
    pub widths: Vec<ExactScalar>,
    pub values: Vec<ExactScalar>,
}

impl StepFile {
    pub fn from_step(f: &StepFunction) -> Self {
        StepFile {
            widths: f.widths().to_vec(),
            values: f.values().to_vec(),
        }
    }

    pub fn build(&self) -> Result<StepFunction, FileError> {
        Ok(StepFunction::new(self.widths.clone(), self.values.clone())?)
    }
}

/// Compact single-line form; identical inputs give identical bytes.
pub fn iet_to_json(iet: &Iet) -> String {
    serde_json::to_string(&IetFile::from_iet(iet)).expect("plain data")
}

pub fn iet_from_json(text: &str) -> Result<Iet, FileError> {
    serde_json::from_str::<IetFile>(text)?.build()
}

pub fn step_to_json(f: &StepFunction) -> String {
    serde_json::to_string(&StepFile::from_step(f)).expect("plain data")
}

pub fn step_from_json(text: &str) -> Result<StepFunction, FileError> {
    serde_json::from_str::<StepFile>(text)?.build()
}

pub fn read_iet(path: &Path) -> Result<Iet, FileError> {
    iet_from_json(&fs::read_to_string(path)?)
}

pub fn read_step(path: &Path) -> Result<StepFunction, FileError> {
    step_from_json(&fs::read_to_string(path)?)
}
