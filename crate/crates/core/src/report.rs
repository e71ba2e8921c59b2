//! Uniform claim reports: `{"claim", "params", "value", "bound", "status", "witness"}`.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::matspace::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// An exact identity or inequality that was checked.
    Confirmed,
    /// Data at parameters outside a theorem's (unquantified) range; consistent, but no confirmation.
    Exploratory,
    Violated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub claim: String,
    pub params: Map<String, Value>,
    pub value: String,
    pub bound: String,
    pub status: Status,
    /// Matrix literals.
    pub witness: Vec<String>,
}

impl Report {
    pub fn new(claim: &str, value: impl ToString, bound: impl ToString, status: Status) -> Self {
        Report {
            claim: claim.into(),
            params: Map::new(),
            value: value.to_string(),
            bound: bound.to_string(),
            status,
            witness: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }

    pub fn witness<'a>(mut self, mats: impl IntoIterator<Item = &'a Mat>) -> Self {
        self.witness = mats.into_iter().map(Mat::to_literal).collect();
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Violated
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// `Confirmed` if `holds`, else `Violated`.
pub fn status_of(holds: bool) -> Status {
    if holds {
        Status::Confirmed
    } else {
        Status::Violated
    }
}
