//! Recursive in-context sessions.
//!
//! Every request carries the whole transcript so far, including the model's
//! own earlier answers. Each slot contributes four turns:
//!
//! ```text
//! <story>
//! Q: <content question>
//! A: <answer>
//! Q: <reference question>
//! A: <answer>
//! ```
//!
//! Turns are joined by [`TURN_SEPARATOR`]; slots by [`SLOT_SEPARATOR`]. The
//! request prompt is the serialized transcript followed by `"\nA:"`, so each
//! prompt is a strict prefix of the next.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::client::{ClientError, CompletionRequest, QueryContext, QuestionKind, Respondent};
use crate::coding::{AnswerLexicon, CodingError, TrialRecord};
use crate::participants::{render_persona_prompt, ParticipantError, ParticipantProfile};
use crate::stimuli::{phrase_reference_question, StimulusError, TrialSlot};

pub const TURN_SEPARATOR: &str = "\n";
pub const SLOT_SEPARATOR: &str = "\n\n";
pub const QUESTION_PREFIX: &str = "Q: ";
pub const ANSWER_PREFIX: &str = "A:";
const TURNS_PER_SLOT: usize = 4;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("schedule is empty")]
    EmptySchedule,
    #[error("prompt of {chars} characters exceeds the context limit of {limit}")]
    ContextOverflow { chars: usize, limit: usize },
    #[error("turn order violated: {0}")]
    TurnOrder(&'static str),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
    #[error(transparent)]
    Coding(#[from] CodingError),
    #[error(transparent)]
    Persona(#[from] ParticipantError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnRole {
    Prompt,
    Model,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: TurnRole,
    pub text: String,
}

/// Append-only record of one participant's context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub participant_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preamble: Option<String>,
    turns: Vec<Turn>,
    /// Number of completed slots.
    cursor: usize,
}

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('\n', "\\n").replace('\r', "\\r")
}

impl Transcript {
    pub fn new(participant_id: impl Into<String>, preamble: Option<String>) -> Self {
        Transcript {
            participant_id: participant_id.into(),
            preamble: preamble.filter(|p| !p.is_empty()),
            turns: Vec::new(),
            cursor: 0,
        }
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn preamble(&self) -> Option<&str> {
        self.preamble.as_deref()
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn push_prompt(&mut self, text: impl Into<String>) -> Result<(), SessionError> {
        if self.turns.last().is_some_and(|t| t.role == TurnRole::Prompt) {
            return Err(SessionError::TurnOrder("two prompt turns in a row"));
        }
        self.turns.push(Turn {
            role: TurnRole::Prompt,
            text: text.into(),
        });
        Ok(())
    }

    pub fn push_model(&mut self, text: impl Into<String>) -> Result<(), SessionError> {
        if self.turns.last().is_none_or(|t| t.role != TurnRole::Prompt) {
            return Err(SessionError::TurnOrder("model turn must follow a prompt"));
        }
        self.turns.push(Turn {
            role: TurnRole::Model,
            text: text.into(),
        });
        if self.turns.len() % TURNS_PER_SLOT == 0 {
            self.cursor += 1;
        }
        Ok(())
    }
}

/// Render a transcript as prompt text. Model turns are escaped so that no
/// answer can forge structure.
pub fn serialize_transcript(transcript: &Transcript) -> String {
    let mut out = String::new();
    if let Some(pre) = &transcript.preamble {
        out.push_str(pre);
    }
    for (i, turn) in transcript.turns.iter().enumerate() {
        if i == 0 {
            if !out.is_empty() {
                out.push_str(SLOT_SEPARATOR);
            }
        } else if i % TURNS_PER_SLOT == 0 {
            out.push_str(SLOT_SEPARATOR);
        } else {
            out.push_str(TURN_SEPARATOR);
        }
        match turn.role {
            TurnRole::Prompt => out.push_str(&turn.text),
            TurnRole::Model => {
                out.push_str(ANSWER_PREFIX);
                out.push(' ');
                out.push_str(&escape(&turn.text));
            }
        }
    }
    out
}

/// Prompt for the pending question: the transcript plus an answer cue.
pub fn request_prompt(transcript: &Transcript) -> String {
    format!("{}{TURN_SEPARATOR}{ANSWER_PREFIX}", serialize_transcript(transcript))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionOptions {
    /// Text placed after the persona sentence and before the first story.
    pub instruction_header: String,
    pub model_name: String,
    pub max_tokens: u32,
    pub stop_sequences: Vec<String>,
    pub max_prompt_chars: Option<usize>,
    pub answer_lexicon: AnswerLexicon,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            instruction_header: String::new(),
            model_name: "text-davinci-003".into(),
            max_tokens: crate::client::DEFAULT_MAX_TOKENS,
            stop_sequences: vec![crate::client::DEFAULT_STOP.into()],
            max_prompt_chars: None,
            answer_lexicon: AnswerLexicon::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestLog {
    pub position: usize,
    pub kind: QuestionKind,
    pub request: CompletionRequest,
    pub response: String,
}

/// Marks a session that stopped before the end of its schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFailure {
    pub position: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub transcript: Transcript,
    pub records: Vec<TrialRecord>,
    pub requests: Vec<RequestLog>,
    pub failure: Option<SessionFailure>,
}

impl SessionOutcome {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

fn preamble(profile: &ParticipantProfile, options: &SessionOptions) -> Result<Option<String>, SessionError> {
    let mut parts = Vec::new();
    if let Some(persona) = &profile.persona {
        parts.push(render_persona_prompt(persona)?);
    }
    if !options.instruction_header.is_empty() {
        parts.push(options.instruction_header.clone());
    }
    Ok((!parts.is_empty()).then(|| parts.join(TURN_SEPARATOR)))
}

struct Asker<'a> {
    profile: &'a ParticipantProfile,
    respondent: &'a dyn Respondent,
    options: &'a SessionOptions,
    requests: Vec<RequestLog>,
}

impl Asker<'_> {
    fn ask(&mut self, transcript: &mut Transcript, slot: &TrialSlot, kind: QuestionKind) -> Result<String, SessionError> {
        let prompt = request_prompt(transcript);
        if let Some(limit) = self.options.max_prompt_chars {
            let chars = prompt.chars().count();
            if chars > limit {
                return Err(SessionError::ContextOverflow { chars, limit });
            }
        }
        let request = CompletionRequest {
            prompt,
            temperature: self.profile.temperature,
            max_tokens: self.options.max_tokens,
            stop_sequences: self.options.stop_sequences.clone(),
            model_name: self.options.model_name.clone(),
        };
        let context = QueryContext {
            participant_id: &self.profile.participant_id,
            exposure_condition: self.profile.design.exposure_condition,
            slot,
            kind,
        };
        let raw = self.respondent.respond(&request, &context)?;
        transcript.push_model(raw.trim())?;
        self.requests.push(RequestLog {
            position: slot.position,
            kind,
            request,
            response: raw.clone(),
        });
        Ok(raw)
    }
}

/// Run one participant through a schedule.
///
/// A respondent or context error stops the session; records for completed
/// slots are kept and `failure` names the slot that failed.
pub fn run_session(
    profile: &ParticipantProfile,
    schedule: &[TrialSlot],
    respondent: &dyn Respondent,
    options: &SessionOptions,
) -> Result<SessionOutcome, SessionError> {
    if schedule.is_empty() {
        return Err(SessionError::EmptySchedule);
    }
    let mut transcript = Transcript::new(profile.participant_id.clone(), preamble(profile, options)?);
    let mut asker = Asker {
        profile,
        respondent,
        options,
        requests: Vec::new(),
    };
    let mut records = Vec::with_capacity(schedule.len());
    let mut failure = None;
    for slot in schedule {
        let step = (|| -> Result<TrialRecord, SessionError> {
            let reference = phrase_reference_question(&slot.item, slot.ref_focus)?.to_string();
            transcript.push_prompt(format!(
                "{}{TURN_SEPARATOR}{QUESTION_PREFIX}{}",
                slot.item.story_text, slot.item.content_question
            ))?;
            let content_raw = asker.ask(&mut transcript, slot, QuestionKind::Content)?;
            transcript.push_prompt(format!("{QUESTION_PREFIX}{reference}"))?;
            let ref_raw = asker.ask(&mut transcript, slot, QuestionKind::Reference)?;
            Ok(TrialRecord::from_answers(
                &profile.participant_id,
                profile.design.experiment,
                profile.design.exposure_condition,
                slot,
                &content_raw,
                &ref_raw,
                &options.answer_lexicon,
            )?)
        })();
        match step {
            Ok(record) => records.push(record),
            Err(e @ (SessionError::Client(_) | SessionError::ContextOverflow { .. })) => {
                log::warn!("{}: session stopped at slot {}: {e}", profile.participant_id, slot.position);
                failure = Some(SessionFailure {
                    position: slot.position,
                    error: e.to_string(),
                });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SessionOutcome {
        transcript,
        records,
        requests: asker.requests,
        failure,
    })
}
