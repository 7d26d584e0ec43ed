use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Coarse,
    Refine,
}

/// Losses measured before the step of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub stage: Stage,
    pub iteration: usize,
    pub l_mask: f64,
    /// Normal loss in the coarse stage, explicit-target loss in refinement.
    pub l_normal: f64,
    pub total: f64,
    /// Total loss per view.
    pub per_view: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub records: Vec<IterationRecord>,
}

impl LossReport {
    pub fn push(&mut self, r: IterationRecord) {
        self.records.push(r);
    }

    pub fn extend(&mut self, other: LossReport) {
        self.records.extend(other.records);
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first_total(&self) -> Option<f64> {
        self.records.first().map(|r| r.total)
    }

    pub fn last_total(&self) -> Option<f64> {
        self.records.last().map(|r| r.total)
    }

    pub fn min_total(&self) -> Option<f64> {
        self.records.iter().map(|r| r.total).min_by(f64::total_cmp)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("stage,iteration,l_mask,l_normal,total\n");
        for r in &self.records {
            let stage = match r.stage {
                Stage::Coarse => "coarse",
                Stage::Refine => "refine",
            };
            writeln!(s, "{stage},{},{},{},{}", r.iteration, r.l_mask, r.l_normal, r.total).unwrap();
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}
