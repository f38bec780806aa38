//! Simulated participants: unique sampling temperatures and optional persona preambles.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeding;
use crate::stimuli::{Experiment, ExperimentDesign};

/// Temperatures are distinct at this many decimal places.
pub const TEMPERATURE_DECIMALS: u32 = 3;

#[derive(Debug, Error, PartialEq)]
pub enum ParticipantError {
    #[error("need at least one participant")]
    Empty,
    #[error("temperature bounds must satisfy lo < hi, got [{lo}, {hi}]")]
    Bounds { lo: f64, hi: f64 },
    #[error("{n} distinct temperatures requested but only {capacity} exist in range at {TEMPERATURE_DECIMALS} decimals")]
    Capacity { n: usize, capacity: usize },
    #[error("persona field `{0}` is empty")]
    MissingField(&'static str),
}

/// Draw `n` pairwise-distinct temperatures uniformly from the 0.001 grid in
/// `[lo, hi]`, resampling on collision. Output is in draw order.
pub fn assign_temperatures(n: usize, lo: f64, hi: f64, rng_seed: u64) -> Result<Vec<f64>, ParticipantError> {
    if n == 0 {
        return Err(ParticipantError::Empty);
    }
    if !(lo < hi) || lo < 0.0 {
        return Err(ParticipantError::Bounds { lo, hi });
    }
    let scale = 10f64.powi(TEMPERATURE_DECIMALS as i32);
    let k_lo = (lo * scale - 1e-9).ceil() as i64;
    let k_hi = (hi * scale + 1e-9).floor() as i64;
    let capacity = (k_hi - k_lo + 1).max(0) as usize;
    if n > capacity {
        return Err(ParticipantError::Capacity { n, capacity });
    }
    let mut rng = seeding::rng_from_seed(rng_seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let k = rng.random_range(k_lo..=k_hi);
        if seen.insert(k) {
            out.push(k as f64 / scale);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Persona {
    pub prefix: String,
    pub name: String,
    pub country: String,
    pub gender_pronoun: String,
}

/// Fill the persona carrier sentence.
pub fn render_persona_prompt(persona: &Persona) -> Result<String, ParticipantError> {
    for (field, value) in [
        ("prefix", &persona.prefix),
        ("name", &persona.name),
        ("country", &persona.country),
        ("gender_pronoun", &persona.gender_pronoun),
    ] {
        if value.trim().is_empty() {
            return Err(ParticipantError::MissingField(field));
        }
    }
    Ok(format!(
        "{} {} is a native English speaker living in {}. {} is asked in a psycholinguistic experiment to answer the following questions.",
        persona.prefix, persona.name, persona.country, persona.gender_pronoun
    ))
}

/// Pools persona fields are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonaPool {
    /// (title, subject pronoun) pairs.
    pub titles: Vec<(String, String)>,
    pub surnames: Vec<String>,
    pub countries: Vec<String>,
}

impl Default for PersonaPool {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        PersonaPool {
            titles: vec![
                ("Mr.".into(), "He".into()),
                ("Ms.".into(), "She".into()),
                ("Mrs.".into(), "She".into()),
            ],
            surnames: s(&["Smith", "Jones", "Brown", "Taylor", "Wilson", "Lee", "Walker", "Clark"]),
            countries: s(&["the United States", "England", "Australia"]),
        }
    }
}

impl PersonaPool {
    pub fn draw<R: Rng>(&self, rng: &mut R) -> Option<Persona> {
        let (prefix, pronoun) = self.titles.choose(rng)?;
        Some(Persona {
            prefix: prefix.clone(),
            name: self.surnames.choose(rng)?.clone(),
            country: self.countries.choose(rng)?.clone(),
            gender_pronoun: pronoun.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantProfile {
    pub participant_id: String,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub persona: Option<Persona>,
    pub design: ExperimentDesign,
}

/// Cohort settings for one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortConfig {
    pub size: usize,
    pub temperature_lo: f64,
    pub temperature_hi: f64,
    pub persona: bool,
    pub persona_pool: PersonaPool,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig {
            size: 24,
            temperature_lo: 0.2,
            temperature_hi: 1.0,
            persona: false,
            persona_pool: PersonaPool::default(),
        }
    }
}

impl CohortConfig {
    /// 24 participants for E1a and E2a, 60 for E2b.
    pub fn for_experiment(experiment: Experiment) -> Self {
        CohortConfig {
            size: match experiment {
                Experiment::E1a | Experiment::E2a => 24,
                Experiment::E2b => 60,
            },
            ..Default::default()
        }
    }
}

pub fn participant_id(experiment: Experiment, index: usize) -> String {
    format!("{experiment}-p{:02}", index + 1)
}

/// Build the cohort for one experiment. Exposure conditions alternate by
/// participant index, so the two conditions differ in size by at most one.
/// `design_for` supplies each participant's design given its condition.
pub fn build_cohort(
    experiment: Experiment,
    config: &CohortConfig,
    root_seed: u64,
    design_for: impl Fn(crate::stimuli::ExposureCondition) -> ExperimentDesign,
) -> Result<Vec<ParticipantProfile>, ParticipantError> {
    let temps = assign_temperatures(
        config.size,
        config.temperature_lo,
        config.temperature_hi,
        seeding::derive_seed(root_seed, &format!("temperatures/{experiment}")),
    )?;
    let mut persona_rng = seeding::stream(root_seed, &format!("personas/{experiment}"));
    let conditions = experiment.conditions();
    Ok(temps
        .into_iter()
        .enumerate()
        .map(|(i, temperature)| ParticipantProfile {
            participant_id: participant_id(experiment, i),
            temperature,
            persona: if config.persona {
                config.persona_pool.draw(&mut persona_rng)
            } else {
                None
            },
            design: design_for(conditions[i % 2]),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn distinct_sorted(v: &[f64]) -> bool {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s.windows(2).all(|w| w[0] < w[1])
    }

    #[test]
    fn cohort_sizes_from_the_study() {
        for n in [24, 60] {
            let t = assign_temperatures(n, 0.2, 1.0, 11).unwrap();
            assert_eq!(t.len(), n);
            assert!(t.iter().all(|x| (0.2..=1.0).contains(x)));
            assert!(distinct_sorted(&t));
        }
    }

    #[test]
    fn singleton_and_capacity() {
        let t = assign_temperatures(1, 0.2, 1.0, 0).unwrap();
        assert!((0.2..=1.0).contains(&t[0]));
        assert_eq!(assign_temperatures(801, 0.2, 1.0, 0).unwrap().len(), 801);
        assert_eq!(
            assign_temperatures(802, 0.2, 1.0, 0),
            Err(ParticipantError::Capacity { n: 802, capacity: 801 })
        );
        assert!(matches!(assign_temperatures(3, 1.0, 0.2, 0), Err(ParticipantError::Bounds { .. })));
    }

    #[test]
    fn persona_carrier_sentence() {
        let p = Persona {
            prefix: "Mr.".into(),
            name: "Smith".into(),
            country: "England".into(),
            gender_pronoun: "He".into(),
        };
        assert_eq!(
            render_persona_prompt(&p).unwrap(),
            "Mr. Smith is a native English speaker living in England. He is asked in a psycholinguistic experiment to answer the following questions."
        );
        let q = Persona {
            prefix: "Ms.".into(),
            name: "Lee".into(),
            country: "Australia".into(),
            gender_pronoun: "She".into(),
        };
        assert_eq!(
            render_persona_prompt(&q).unwrap(),
            "Ms. Lee is a native English speaker living in Australia. She is asked in a psycholinguistic experiment to answer the following questions."
        );
        let empty = Persona { country: String::new(), ..p };
        assert_eq!(render_persona_prompt(&empty), Err(ParticipantError::MissingField("country")));
    }

    #[test]
    fn cohort_alternates_conditions() {
        let cfg = CohortConfig::for_experiment(Experiment::E1a);
        let cohort = build_cohort(Experiment::E1a, &cfg, 5, |c| {
            ExperimentDesign::new(Experiment::E1a, c, 0)
        })
        .unwrap();
        assert_eq!(cohort.len(), 24);
        let subj = cohort
            .iter()
            .filter(|p| p.design.exposure_condition == crate::stimuli::ExposureCondition::Subject)
            .count();
        assert_eq!(subj, 12);
        assert_eq!(cohort[0].participant_id, "E1a-p01");
        assert!(cohort.iter().all(|p| p.persona.is_none()));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn temperatures_are_distinct_and_in_range(n in 1usize..200, seed in any::<u64>()) {
                let t = assign_temperatures(n, 0.2, 1.0, seed).unwrap();
                prop_assert_eq!(t.len(), n);
                prop_assert!(t.iter().all(|x| (0.2..=1.0).contains(x)));
                prop_assert!(distinct_sorted(&t));
                prop_assert_eq!(t, assign_temperatures(n, 0.2, 1.0, seed).unwrap());
            }

            #[test]
            fn persona_is_an_exact_template_fill(
                prefix in "[A-Z][a-z]{1,4}\\.", name in "[A-Z][a-z]{2,8}",
                country in "[A-Z][a-z]{2,10}", pronoun in "(He|She|They)",
            ) {
                let p = Persona { prefix: prefix.clone(), name: name.clone(), country: country.clone(), gender_pronoun: pronoun.clone() };
                let text = render_persona_prompt(&p).unwrap();
                let skeleton = text
                    .replacen(&format!("{prefix} {name}"), "{P}", 1)
                    .replacen(&format!("living in {country}."), "living in {C}.", 1)
                    .replacen(&format!(" {pronoun} is asked"), " {G} is asked", 1);
                prop_assert_eq!(
                    skeleton,
                    "{P} is a native English speaker living in {C}. {G} is asked in a psycholinguistic experiment to answer the following questions."
                );
            }
        }
    }
}
