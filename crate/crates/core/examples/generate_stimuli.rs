//! Generate E2a templates for the goal-source design and print one participant's schedule.
//!
//!     cargo run --example generate_stimuli [seed]

use refprime::seeding::derive_seed;
use refprime::stimuli::{build_schedule, generate_templates, Experiment, ExperimentDesign, ExposureCondition, Lexicon};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let design = ExperimentDesign::new(Experiment::E2a, ExposureCondition::Subject, seed);
    let items = generate_templates(&design, &Lexicon::default(), derive_seed(seed, "items/E2a"))?;
    let schedule = build_schedule(&design, &items, derive_seed(seed, "schedule/example"))?;
    for slot in &schedule {
        println!("{:>2} {:<8} {:<10} {}", slot.position, slot.phase, slot.ref_focus, slot.item.story_text);
    }
    println!("\n{} slots from {} generated items", schedule.len(), items.len());
    Ok(())
}
