use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Clean,
    Attack,
    Stabilization,
    Normal,
    /// Baseline: attack views plus constraint views.
    AttackConstraint,
    /// Baseline: retraining on the updated working dataset.
    Retrain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub epoch: usize,
    pub phase: Phase,
    pub mean_loss: f64,
}

/// Per-epoch mean losses, one row per phase.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<LossRow>,
}

impl TrainLog {
    pub fn push(&mut self, epoch: usize, phase: Phase, mean_loss: f64) {
        self.rows.push(LossRow { epoch, phase, mean_loss });
    }

    pub fn phase_losses(&self, phase: Phase) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.phase == phase)
            .map(|r| r.mean_loss)
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.into(),
            source,
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(["epoch", "phase", "mean_loss"]).map_err(csv_err)?;
        }
        for r in &self.rows {
            w.serialize(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
        crate::io_util::write_atomic(path, &bytes)
    }
}

/// Callback run after every epoch with the 1-based epoch index.
pub type EpochHook<'a> = dyn FnMut(usize, &crate::gaussian::Scene) -> Result<()> + 'a;
