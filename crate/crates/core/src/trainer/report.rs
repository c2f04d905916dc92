use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::strategy::PartitionSummary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub epoch_wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalMetrics {
    pub test_acc: f64,
    pub f1: f64,
    /// Absent when the test split holds a single class.
    pub auroc: Option<f64>,
}

/// Outcome of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub strategy: String,
    pub seed: u64,
    pub steps: usize,
    pub epochs: Vec<EpochMetrics>,
    #[serde(rename = "final")]
    pub final_metrics: FinalMetrics,
    pub partition: PartitionSummary,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Tab-separated per-epoch table with a header row.
    pub fn epochs_tsv(&self) -> String {
        let mut out = String::from("strategy\tepoch\ttrain_loss\ttrain_acc\tval_acc\tepoch_wall_seconds\n");
        for e in &self.epochs {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                self.strategy, e.epoch, e.train_loss, e.train_acc, e.val_acc, e.epoch_wall_seconds
            )
            .expect("writing to a String");
        }
        out
    }

    /// Copy with every wall-time field zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        for e in &mut r.epochs {
            e.epoch_wall_seconds = 0.0;
        }
        r
    }

    pub fn total_wall_seconds(&self) -> f64 {
        self.epochs.iter().map(|e| e.epoch_wall_seconds).sum()
    }
}
