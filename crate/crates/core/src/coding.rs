//! Answer parsing, referent coding, exclusions and descriptive rates.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stimuli::{
    Experiment, ExposureCondition, Phase, QuestionFocus, TrialSlot, VerbClass, YesNo,
};

#[derive(Debug, Error)]
pub enum CodingError {
    #[error("focus {focus} is not legal in {experiment}")]
    IllegalFocus {
        focus: QuestionFocus,
        experiment: Experiment,
    },
    #[error("no non-excluded records match the filter")]
    Empty,
    #[error("trial table: {0}")]
    Table(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parsed {
    Yes,
    No,
    Unparseable,
}

impl Parsed {
    pub fn as_yes_no(self) -> Option<YesNo> {
        match self {
            Parsed::Yes => Some(YesNo::Yes),
            Parsed::No => Some(YesNo::No),
            Parsed::Unparseable => None,
        }
    }
}

/// Lexemes accepted as verdicts, compared case-insensitively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerLexicon {
    pub yes: Vec<String>,
    pub no: Vec<String>,
}

impl Default for AnswerLexicon {
    fn default() -> Self {
        AnswerLexicon {
            yes: vec!["yes".into(), "yeah".into()],
            no: vec!["no".into(), "nope".into()],
        }
    }
}

impl AnswerLexicon {
    /// Classify the first alphabetic token of `text`.
    pub fn parse(&self, text: &str) -> Parsed {
        let token: String = text
            .chars()
            .skip_while(|c| !c.is_alphabetic())
            .take_while(|c| c.is_alphabetic())
            .collect::<String>()
            .to_lowercase();
        if token.is_empty() {
            Parsed::Unparseable
        } else if self.yes.iter().any(|w| w.eq_ignore_ascii_case(&token)) {
            Parsed::Yes
        } else if self.no.iter().any(|w| w.eq_ignore_ascii_case(&token)) {
            Parsed::No
        } else {
            Parsed::Unparseable
        }
    }
}

pub fn parse_answer(text: &str) -> Parsed {
    AnswerLexicon::default().parse(text)
}

/// Binary referent code: 1 for a subject interpretation (E1a, E2a) or a goal
/// interpretation (E2b), 0 otherwise.
pub fn code_referent(answer: YesNo, focus: QuestionFocus, experiment: Experiment) -> Result<u8, CodingError> {
    let [positive, negative] = experiment.foci();
    let yes = answer == YesNo::Yes;
    if focus == positive {
        Ok(u8::from(yes))
    } else if focus == negative {
        Ok(u8::from(!yes))
    } else {
        Err(CodingError::IllegalFocus { focus, experiment })
    }
}

/// One answered slot. `referent_code` is the dependent variable (Rc).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub participant_id: String,
    pub item_id: String,
    pub phase: Phase,
    pub verb_class: VerbClass,
    pub exposure_condition: ExposureCondition,
    pub ref_focus: QuestionFocus,
    pub content_raw: String,
    pub content_parsed: Parsed,
    pub content_correct: bool,
    pub ref_raw: String,
    pub ref_parsed: Parsed,
    pub referent_code: Option<u8>,
    pub excluded: bool,
}

impl TrialRecord {
    /// Parse and code both answers for one slot.
    pub fn from_answers(
        participant_id: &str,
        experiment: Experiment,
        exposure_condition: ExposureCondition,
        slot: &TrialSlot,
        content_raw: &str,
        ref_raw: &str,
        lexicon: &AnswerLexicon,
    ) -> Result<Self, CodingError> {
        let content_parsed = lexicon.parse(content_raw);
        let ref_parsed = lexicon.parse(ref_raw);
        let content_correct = content_parsed.as_yes_no() == Some(slot.item.content_gold);
        let referent_code = match ref_parsed.as_yes_no() {
            Some(a) => Some(code_referent(a, slot.ref_focus, experiment)?),
            None => None,
        };
        let mut record = TrialRecord {
            participant_id: participant_id.to_string(),
            item_id: slot.item.item_id.clone(),
            phase: slot.phase,
            verb_class: slot.item.verb_class,
            exposure_condition,
            ref_focus: slot.ref_focus,
            content_raw: content_raw.to_string(),
            content_parsed,
            content_correct,
            ref_raw: ref_raw.to_string(),
            ref_parsed,
            referent_code,
            excluded: false,
        };
        record.excluded = record.should_exclude();
        Ok(record)
    }

    pub fn should_exclude(&self) -> bool {
        !self.content_correct
            || self.content_parsed == Parsed::Unparseable
            || self.ref_parsed == Parsed::Unparseable
    }
}

/// Flag trials with incorrect comprehension answers or unparseable answers.
/// No record is dropped.
pub fn apply_exclusions(mut records: Vec<TrialRecord>) -> Vec<TrialRecord> {
    for r in &mut records {
        r.excluded = r.should_exclude();
    }
    records
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseFilter {
    #[default]
    All,
    Only(Phase),
}

impl PhaseFilter {
    fn admits(self, phase: Phase) -> bool {
        match self {
            PhaseFilter::All => true,
            PhaseFilter::Only(p) => p == phase,
        }
    }
}

fn kept(records: &[TrialRecord], filter: PhaseFilter) -> impl Iterator<Item = &TrialRecord> {
    records.iter().filter(move |r| !r.excluded && filter.admits(r.phase))
}

fn proportion<'a>(it: impl Iterator<Item = &'a TrialRecord>, pred: impl Fn(&TrialRecord) -> bool) -> Result<f64, CodingError> {
    let (hits, total) = it.fold((0usize, 0usize), |(h, t), r| (h + usize::from(pred(r)), t + 1));
    if total == 0 {
        Err(CodingError::Empty)
    } else {
        Ok(hits as f64 / total as f64)
    }
}

/// Share of yes answers to reference questions among non-excluded trials.
pub fn yes_rate(records: &[TrialRecord], filter: PhaseFilter) -> Result<f64, CodingError> {
    proportion(kept(records, filter), |r| r.ref_parsed == Parsed::Yes)
}

pub fn no_rate(records: &[TrialRecord], filter: PhaseFilter) -> Result<f64, CodingError> {
    proportion(kept(records, filter), |r| r.ref_parsed == Parsed::No)
}

/// Share of correctly answered comprehension questions over all records.
pub fn content_accuracy(records: &[TrialRecord]) -> Result<f64, CodingError> {
    proportion(records.iter(), |r| r.content_correct)
}

pub fn exclusion_rate(records: &[TrialRecord]) -> Result<f64, CodingError> {
    proportion(records.iter(), |r| r.excluded)
}

/// Write the flat trial table, one row per record.
pub fn write_records_to(out: impl Write, records: &[TrialRecord]) -> Result<(), CodingError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records(path: impl AsRef<Path>, records: &[TrialRecord]) -> Result<(), CodingError> {
    write_records_to(std::fs::File::create(path)?, records)
}

pub fn read_records_from(input: impl Read) -> Result<Vec<TrialRecord>, CodingError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<Result<Vec<_>, _>>()
        .map_err(CodingError::from)
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>, CodingError> {
    read_records_from(std::fs::File::open(path)?)
}
