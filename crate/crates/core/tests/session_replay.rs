use std::sync::atomic::{AtomicUsize, Ordering};

use refprime::client::{ClientError, CompletionRequest, MockBias, MockParticipant, QueryContext, Respondent};
use refprime::coding::Parsed;
use refprime::participants::{build_cohort, CohortConfig, ParticipantProfile};
use refprime::session::{run_session, serialize_transcript, SessionOptions};
use refprime::stimuli::{build_schedule, generate_templates, Experiment, ExperimentDesign, Lexicon, TrialSlot};

fn setup(exp: Experiment, persona: bool) -> (ParticipantProfile, Vec<TrialSlot>) {
    let config = CohortConfig { size: 2, persona, ..CohortConfig::for_experiment(exp) };
    let profile = build_cohort(exp, &config, 5, |c| ExperimentDesign::new(exp, c, 5)).unwrap().remove(1);
    let items = generate_templates(&profile.design, &Lexicon::default(), 17).unwrap();
    let schedule = build_schedule(&profile.design, &items, 23).unwrap();
    (profile, schedule)
}

fn mock() -> MockParticipant {
    MockParticipant::new(MockBias { seed: 99, ..Default::default() }).unwrap()
}

#[test]
fn prompts_grow_and_every_slot_is_recorded() {
    for exp in Experiment::ALL.iter().copied() {
        let (profile, schedule) = setup(exp, true);
        let out = run_session(&profile, &schedule, &mock(), &SessionOptions::default()).unwrap();
        assert!(out.is_complete());
        assert_eq!(out.records.len(), schedule.len());
        assert_eq!(out.requests.len(), 2 * schedule.len());
        assert!(out.records.iter().all(|r| r.content_parsed != Parsed::Unparseable && r.ref_parsed != Parsed::Unparseable));
        let lengths: Vec<usize> = out.requests.iter().map(|r| r.request.prompt.len()).collect();
        assert!(lengths.windows(2).all(|w| w[0] < w[1]), "{lengths:?}");
        for (slot, rec) in schedule.iter().zip(&out.records) {
            assert_eq!((&rec.item_id, rec.phase, rec.ref_focus), (&slot.item.item_id, slot.phase, slot.ref_focus));
        }
    }
}

#[test]
fn mock_sessions_replay_bit_for_bit() {
    let (profile, schedule) = setup(Experiment::E2a, false);
    let a = run_session(&profile, &schedule, &mock(), &SessionOptions::default()).unwrap();
    let b = run_session(&profile, &schedule, &mock(), &SessionOptions::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(serialize_transcript(&a.transcript), serialize_transcript(&b.transcript));
}

/// Answers "yes" until its budget runs out, then fails.
struct Flaky {
    budget: AtomicUsize,
}

impl Respondent for Flaky {
    fn respond(&self, _r: &CompletionRequest, _c: &QueryContext<'_>) -> Result<String, ClientError> {
        if self.budget.fetch_sub(1, Ordering::SeqCst) == 0 {
            return Err(ClientError::Network { attempts: 1, message: "reset".into() });
        }
        Ok(" Yes.".into())
    }
}

#[test]
fn failure_keeps_completed_slots() {
    let (profile, schedule) = setup(Experiment::E1a, false);
    let out = run_session(&profile, &schedule, &Flaky { budget: AtomicUsize::new(7) }, &SessionOptions::default()).unwrap();
    // Seven answers cover three full slots and the content question of the fourth.
    assert_eq!(out.records.len(), 3);
    assert_eq!(out.failure.as_ref().unwrap().position, 3);
}

#[test]
fn context_limit_stops_instead_of_truncating() {
    let (profile, schedule) = setup(Experiment::E1a, false);
    let options = SessionOptions { max_prompt_chars: Some(600), ..Default::default() };
    let out = run_session(&profile, &schedule, &mock(), &options).unwrap();
    assert!(!out.is_complete());
    assert!(out.failure.unwrap().error.contains("600"));
    assert!(out.requests.iter().all(|r| r.request.prompt.chars().count() <= 600));
}
