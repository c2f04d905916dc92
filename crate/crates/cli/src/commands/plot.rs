use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gptft::trainer::MetricsReport;

use crate::config::RunConfig;
use crate::corpus::create_dir;
use crate::error::{Category, CliError, CliResult};

/// Tab-separated tables, one row per report in input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotTables {
    /// Total and mean per-epoch wall time.
    pub time: String,
    /// Final-epoch train and validation accuracy and test accuracy.
    pub accuracy: String,
    /// Test F1 and AUROC; AUROC is empty when absent.
    pub metrics: String,
}

pub fn plot_tables(reports: &[MetricsReport]) -> PlotTables {
    let mut time = String::from("strategy\tepochs\tsteps\ttotal_wall_seconds\tmean_epoch_seconds\n");
    let mut accuracy = String::from("strategy\ttrain_acc\tval_acc\ttest_acc\n");
    let mut metrics = String::from("strategy\tf1\tauroc\n");
    for r in reports {
        let total = r.total_wall_seconds();
        let mean = if r.epochs.is_empty() { 0.0 } else { total / r.epochs.len() as f64 };
        let (train, val) = r
            .epochs
            .last()
            .map_or((String::new(), String::new()), |e| (e.train_acc.to_string(), e.val_acc.to_string()));
        let f = &r.final_metrics;
        let auroc = f.auroc.map_or(String::new(), |a| a.to_string());
        let ok = "writing to a String";
        writeln!(time, "{}\t{}\t{}\t{total}\t{mean}", r.strategy, r.epochs.len(), r.steps).expect(ok);
        writeln!(accuracy, "{}\t{train}\t{val}\t{}", r.strategy, f.test_acc).expect(ok);
        writeln!(metrics, "{}\t{}\t{auroc}", r.strategy, f.f1).expect(ok);
    }
    PlotTables { time, accuracy, metrics }
}

fn read_report(path: &Path) -> CliResult<MetricsReport> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    MetricsReport::from_json(&text)
        .map_err(|e| CliError::new(Category::Input, format!("{}: not a run report: {e}", path.display())))
}

/// Writes `time.tsv`, `accuracy.tsv` and `metrics.tsv` under `plots/`.
pub fn cmd_plot_data(paths: &[PathBuf], config: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let reports = paths.iter().map(|p| read_report(p)).collect::<CliResult<Vec<_>>>()?;
    let tables = plot_tables(&reports);
    let dir = config.output_dir.join("plots");
    create_dir(&dir)?;
    let mut written = Vec::new();
    for (name, body) in [("time.tsv", &tables.time), ("accuracy.tsv", &tables.accuracy), ("metrics.tsv", &tables.metrics)] {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
