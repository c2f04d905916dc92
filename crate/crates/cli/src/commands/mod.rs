mod eval;
mod init;
mod label;
mod params;
mod plot;
mod split;
mod tokenize;
mod train;

use std::io::Write;

pub use eval::{cmd_eval, EvalMetrics};
pub use init::cmd_init;
pub use label::{cmd_label, LabelOutcome};
pub use params::{cmd_params, params_table};
pub use plot::{cmd_plot_data, plot_tables, PlotTables};
pub use split::{cmd_split, SPLIT_FILES};
pub use train::{cmd_train, TrainOptions, TrainOutcome, CHECKPOINT_FILE, CONFIG_FILE, EPOCHS_FILE, REPORT_FILE};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::Command;

pub(crate) fn emit(out: &mut dyn Write, text: &str) -> CliResult {
    out.write_all(text.as_bytes())
        .and_then(|()| if text.ends_with('\n') { Ok(()) } else { out.write_all(b"\n") })
        .map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e))
}

pub fn dispatch(command: Command, mut config: RunConfig, out: &mut dyn Write) -> CliResult {
    match command {
        Command::Label { input, rules, output } => {
            if rules.is_some() {
                config.rules = rules;
            }
            let outcome = cmd_label(&input, &config, output.as_deref())?;
            emit(out, &format!("{}\nwrote {}", outcome.stats, outcome.output.display()))
        }
        Command::Split { input } => {
            let split = cmd_split(&input, &config)?;
            let mut text = String::new();
            for (name, n, path) in split {
                text += &format!("{name}\t{n}\t{}\n", path.display());
            }
            emit(out, &text)
        }
        Command::Train {
            checkpoint,
            data,
            splits,
            run_dir,
            epochs,
            lr,
            max_steps,
        } => {
            config.checkpoint = checkpoint.or(config.checkpoint);
            if let Some(d) = data {
                config.data = Some(d);
                (config.train_data, config.val_data, config.test_data) = (None, None, None);
            }
            if let Some(dir) = splits {
                config.data = None;
                let [train, val, test] = SPLIT_FILES.map(|f| Some(dir.join(f)));
                (config.train_data, config.val_data, config.test_data) = (train, val, test);
            }
            config.epochs = epochs.unwrap_or(config.epochs);
            config.lr = lr.unwrap_or(config.lr);
            config.max_steps = max_steps.or(config.max_steps);
            let outcome = cmd_train(&config, &TrainOptions { run_dir })?;
            let f = &outcome.report.final_metrics;
            let auroc = f.auroc.map_or("absent".to_string(), |a| format!("{a:.4}"));
            emit(
                out,
                &format!(
                    "test_acc {:.4}\tf1 {:.4}\tauroc {auroc}\tsteps {}\nrun {}",
                    f.test_acc,
                    f.f1,
                    outcome.report.steps,
                    outcome.run_dir.display()
                ),
            )
        }
        Command::Eval {
            checkpoint,
            corpus,
            output,
        } => {
            let metrics = cmd_eval(&checkpoint, &corpus, &config)?;
            let json = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
            if let Some(path) = output {
                crate::corpus::ensure_distinct(&corpus, &path)?;
                std::fs::write(&path, format!("{json}\n")).map_err(|e| CliError::io(&path, e))?;
            }
            emit(out, &json)
        }
        Command::Params => emit(out, &cmd_params(&config)?),
        Command::PlotData { reports } => {
            let written = cmd_plot_data(&reports, &config)?;
            let text: Vec<String> = written.iter().map(|p| format!("wrote {}", p.display())).collect();
            emit(out, &text.join("\n"))
        }
        Command::Tokenize { decode, items } => {
            let items = if items.is_empty() {
                std::io::stdin()
                    .lines()
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::io(std::path::Path::new("<stdin>"), e))?
            } else {
                items
            };
            emit(out, &tokenize::cmd_tokenize(&config, decode, &items)?)
        }
        Command::Init { output } => {
            cmd_init(&config, &output)?;
            emit(out, &format!("wrote {}", output.display()))
        }
    }
}
