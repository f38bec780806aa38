//! Full mock pipeline: run the E1a cohort, fit the model, print the report.
//!
//!     cargo run --release --example e1a_pipeline [out-dir]

use refprime::client::MockBias;
use refprime::runner::{cmd_analyze, cmd_run, RunConfig};
use refprime::stimuli::ExposureCondition;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "runs/e1a-mock".into());
    let config = RunConfig {
        mock: true,
        seed: 2023,
        out: out.into(),
        mock_bias: MockBias {
            subject_bias_by_exposure: [(ExposureCondition::Subject, 0.9), (ExposureCondition::Nonsubject, 0.3)].into(),
            ..Default::default()
        },
        ..Default::default()
    };
    let run = cmd_run(&config, true)?;
    eprintln!("{} sessions run, {} reused", run.executed, run.skipped);
    let analysis = cmd_analyze(&config, None)?;
    print!("{}", analysis.report.to_markdown());
    Ok(())
}
