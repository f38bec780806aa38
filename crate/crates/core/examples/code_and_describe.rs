//! Run a mock E2b cohort, then print condition proportions and descriptive rates.

use refprime::analysis::{condition_proportions, describe};
use refprime::client::MockBias;
use refprime::runner::{cmd_run, RunConfig};
use refprime::stimuli::Experiment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let config = RunConfig {
        mock: true,
        seed: 12,
        out: dir.path().to_path_buf(),
        mock_bias: MockBias { goal_bias: 0.4, content_accuracy: 0.9, ..Default::default() },
        ..RunConfig::for_experiment(Experiment::E2b)
    };
    cmd_run(&config, false)?;
    let records = refprime::coding::read_records(config.trials_path())?;
    let table = condition_proportions(&records, Experiment::E2b);
    table.write_csv_to(std::io::stdout())?;
    println!("{:#?}", describe(&records));
    Ok(())
}
