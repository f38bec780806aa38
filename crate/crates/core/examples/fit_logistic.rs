//! Fit the E1a model to simulated hierarchical data and print the fixed effects.
//!
//!     cargo run --release --example fit_logistic

use refprime::analysis::model_spec_for;
use refprime::inference::{fit_records, Priors, SamplerConfig};
use refprime::stimuli::Experiment;
use refprime::validation::{simulate_e1a_records, RecoveryTruth};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = RecoveryTruth::default();
    let records = simulate_e1a_records(8, 24, 12, &truth);
    let binding = model_spec_for(Experiment::E1a);
    println!("{}", binding.spec.formula());
    let fit = fit_records(&records, &binding.spec, Priors::default(), &SamplerConfig { seed: 8, ..Default::default() })?;
    println!("{:<14} {:>7} {:>7} {:>8} {:>8} {:>6} {:>7}", "term", "truth", "mean", "2.5%", "97.5%", "R-hat", "p_MAP");
    for (c, b) in fit.summary.coefficients.iter().zip(truth.beta) {
        let pm = c.p_map.map_or("n/a".into(), |p| format!("{p:.4}"));
        println!("{:<14} {b:>7.2} {:>7.3} {:>8.3} {:>8.3} {:>6.3} {pm:>7}", c.name, c.mean, c.q2_5, c.q97_5, c.rhat);
    }
    println!("{} draws, {} divergences", fit.summary.pooled_draws, fit.summary.divergences);
    Ok(())
}
