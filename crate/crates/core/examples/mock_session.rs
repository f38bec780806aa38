//! One simulated participant through an E1a session; prints the final prompt.

use refprime::client::{MockBias, MockParticipant};
use refprime::participants::{build_cohort, CohortConfig};
use refprime::session::{run_session, serialize_transcript, SessionOptions};
use refprime::stimuli::{build_schedule, generate_templates, Experiment, ExperimentDesign, Lexicon};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let exp = Experiment::E1a;
    let cohort = CohortConfig { size: 1, persona: true, ..CohortConfig::for_experiment(exp) };
    let profile = build_cohort(exp, &cohort, 4, |c| ExperimentDesign::new(exp, c, 4))?.remove(0);
    let items = generate_templates(&profile.design, &Lexicon::default(), 4)?;
    let schedule = build_schedule(&profile.design, &items, 4)?;
    let mock = MockParticipant::new(MockBias { seed: 4, ..Default::default() })?;
    let outcome = run_session(&profile, &schedule, &mock, &SessionOptions::default())?;
    println!("{}", serialize_transcript(&outcome.transcript));
    println!("---\n{} records, {} requests", outcome.records.len(), outcome.requests.len());
    Ok(())
}
