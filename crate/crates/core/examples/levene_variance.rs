//! Compare per-participant response variance between two mock cohorts that
//! differ in how strongly they follow exposure.

use refprime::analysis::{pairwise_levene, participant_means, Center};
use refprime::client::MockBias;
use refprime::runner::{cmd_run, RunConfig};
use refprime::stimuli::ExposureCondition;

fn cohort_means(seed: u64, forced: f64) -> Result<Vec<f64>, Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let bias = MockBias {
        yes_rate_ambiguous: forced,
        subject_bias_by_exposure: [(ExposureCondition::Subject, 0.8), (ExposureCondition::Nonsubject, 0.2)].into(),
        ..Default::default()
    };
    let config = RunConfig { mock: true, seed, out: dir.path().to_path_buf(), mock_bias: bias, ..Default::default() };
    cmd_run(&config, false)?;
    let records = refprime::coding::read_records(config.trials_path())?;
    Ok(participant_means(&records).into_values().collect())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let samples = vec![("balanced".to_string(), cohort_means(1, 0.5)?), ("yes-leaning".to_string(), cohort_means(2, 0.9)?)];
    for center in [Center::Median, Center::Mean] {
        for r in pairwise_levene(&samples, center)? {
            println!(
                "{} vs {} ({center}): var {:.4} / {:.4}, W = {:.3}, p = {:.4}",
                r.a, r.b, r.var_a, r.var_b, r.result.w, r.result.p
            );
        }
    }
    Ok(())
}
