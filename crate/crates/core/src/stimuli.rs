//! Stimulus items, synthetic templates and trial schedules.
//!
//! An experiment presents two-sentence stories. The first sentence introduces
//! two named characters (subject and non-subject); the second starts with a
//! pronoun. When the characters differ in gender the pronoun is unambiguous
//! (exposure items); when they share a gender it is ambiguous (critical items).
//! Each story carries a comprehension question and one reference question per
//! legal question focus.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeding;

/// Default lexicon shipped with the crate.
pub const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.toml");

#[derive(Debug, Error)]
pub enum StimulusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("item {item_id}: {rule}")]
    Invariant { item_id: String, rule: String },
    #[error("lexicon: {0}")]
    Lexicon(String),
    #[error("insufficient lexicon for {needed} {class} items (only {available} distinct frames)")]
    InsufficientLexicon {
        class: VerbClass,
        needed: usize,
        available: usize,
    },
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("n_critical must be even to balance question foci, got {0}")]
    OddCritical(usize),
    #[error("schedule needs {needed} {phase} items but only {available} are usable")]
    NotEnoughItems {
        phase: Phase,
        needed: usize,
        available: usize,
    },
    #[error("focus {focus} is not legal for item {item_id}")]
    IllegalFocus { item_id: String, focus: QuestionFocus },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $label)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($label => Ok($name::$variant),)+
                    other => Err(format!(concat!("unknown ", stringify!($name), " `{}`"), other)),
                }
            }
        }
    };
}

label_enum!(Gender { Male => "male", Female => "female" });
label_enum!(SyntacticRole { Subject => "subject", Nonsubject => "nonsubject" });
label_enum!(ThematicRole { Source => "source", Goal => "goal" });
label_enum!(
    /// `gs`: the subject is the goal ("received from"); `sg`: the subject is the source ("sent to").
    VerbClass { Joint => "joint", Gs => "gs", Sg => "sg" }
);
label_enum!(QuestionFocus {
    Subject => "subject",
    Nonsubject => "nonsubject",
    Source => "source",
    Goal => "goal",
});
label_enum!(Experiment { E1a => "E1a", E2a => "E2a", E2b => "E2b" });
label_enum!(ExposureCondition {
    Subject => "subject",
    Nonsubject => "nonsubject",
    Goal => "goal",
    Source => "source",
});
label_enum!(Phase { Exposure => "exposure", Critical => "critical" });
label_enum!(YesNo { Yes => "yes", No => "no" });

impl Gender {
    pub fn pronoun(self) -> &'static str {
        match self {
            Gender::Male => "He",
            Gender::Female => "She",
        }
    }

    pub fn other(self) -> Gender {
        match self {
            Gender::Male => Gender::Female,
            Gender::Female => Gender::Male,
        }
    }
}

impl SyntacticRole {
    pub fn other(self) -> SyntacticRole {
        match self {
            SyntacticRole::Subject => SyntacticRole::Nonsubject,
            SyntacticRole::Nonsubject => SyntacticRole::Subject,
        }
    }
}

impl ThematicRole {
    pub fn other(self) -> ThematicRole {
        match self {
            ThematicRole::Source => ThematicRole::Goal,
            ThematicRole::Goal => ThematicRole::Source,
        }
    }
}

impl VerbClass {
    /// Thematic role of the syntactic subject, if the frame has one.
    pub fn subject_thematic_role(self) -> Option<ThematicRole> {
        match self {
            VerbClass::Joint => None,
            VerbClass::Gs => Some(ThematicRole::Goal),
            VerbClass::Sg => Some(ThematicRole::Source),
        }
    }

    pub fn legal_foci(self) -> &'static [QuestionFocus] {
        match self {
            VerbClass::Joint => &[QuestionFocus::Subject, QuestionFocus::Nonsubject],
            VerbClass::Gs | VerbClass::Sg => QuestionFocus::ALL,
        }
    }

    /// Syntactic role holding the given thematic role in this frame.
    pub fn role_of(self, thematic: ThematicRole) -> Option<SyntacticRole> {
        self.subject_thematic_role().map(|subj| {
            if subj == thematic {
                SyntacticRole::Subject
            } else {
                SyntacticRole::Nonsubject
            }
        })
    }
}

impl QuestionFocus {
    /// Syntactic role of the character a focus names, for a given verb class.
    pub fn resolve(self, verb_class: VerbClass) -> Option<SyntacticRole> {
        match self {
            QuestionFocus::Subject => Some(SyntacticRole::Subject),
            QuestionFocus::Nonsubject => Some(SyntacticRole::Nonsubject),
            QuestionFocus::Source => verb_class.role_of(ThematicRole::Source),
            QuestionFocus::Goal => verb_class.role_of(ThematicRole::Goal),
        }
    }
}

impl Experiment {
    /// The two reference-question foci used by this experiment, default first.
    pub fn foci(self) -> [QuestionFocus; 2] {
        match self {
            Experiment::E1a | Experiment::E2a => [QuestionFocus::Subject, QuestionFocus::Nonsubject],
            Experiment::E2b => [QuestionFocus::Goal, QuestionFocus::Source],
        }
    }

    pub fn conditions(self) -> [ExposureCondition; 2] {
        match self {
            Experiment::E1a | Experiment::E2a => {
                [ExposureCondition::Subject, ExposureCondition::Nonsubject]
            }
            Experiment::E2b => [ExposureCondition::Goal, ExposureCondition::Source],
        }
    }

    pub fn default_initial_exposures(self) -> usize {
        match self {
            Experiment::E1a => 20,
            Experiment::E2a | Experiment::E2b => 12,
        }
    }

    pub fn default_verb_mix(self) -> BTreeMap<VerbClass, f64> {
        match self {
            Experiment::E1a => BTreeMap::from([(VerbClass::Joint, 1.0)]),
            Experiment::E2a | Experiment::E2b => {
                BTreeMap::from([(VerbClass::Gs, 0.5), (VerbClass::Sg, 0.5)])
            }
        }
    }
}

impl ExposureCondition {
    /// Syntactic role of the referent this condition exposes, for a verb class.
    pub fn referent_role(self, verb_class: VerbClass) -> Option<SyntacticRole> {
        match self {
            ExposureCondition::Subject => Some(SyntacticRole::Subject),
            ExposureCondition::Nonsubject => Some(SyntacticRole::Nonsubject),
            ExposureCondition::Goal => verb_class.role_of(ThematicRole::Goal),
            ExposureCondition::Source => verb_class.role_of(ThematicRole::Source),
        }
    }
}

impl YesNo {
    pub fn flip(self) -> YesNo {
        match self {
            YesNo::Yes => YesNo::No,
            YesNo::No => YesNo::Yes,
        }
    }

    pub fn from_bool(yes: bool) -> YesNo {
        if yes {
            YesNo::Yes
        } else {
            YesNo::No
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Character {
    pub name: String,
    pub gender: Gender,
    pub syntactic_role: SyntacticRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thematic_role: Option<ThematicRole>,
}

/// One two-sentence story with its questions.
///
/// `characters[0]` is the subject and `characters[1]` the non-subject.
/// `intended_referent` is the syntactic role the pronoun picks out on
/// unambiguous items and is absent on ambiguous ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusItem {
    pub item_id: String,
    pub verb_class: VerbClass,
    pub characters: [Character; 2],
    pub story_text: String,
    pub content_question: String,
    pub content_gold: YesNo,
    pub ref_question_variants: BTreeMap<QuestionFocus, String>,
    pub ambiguous: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intended_referent: Option<SyntacticRole>,
}

impl StimulusItem {
    pub fn character(&self, role: SyntacticRole) -> &Character {
        match role {
            SyntacticRole::Subject => &self.characters[0],
            SyntacticRole::Nonsubject => &self.characters[1],
        }
    }

    /// Check every structural invariant of the item.
    pub fn validate(&self) -> Result<(), StimulusError> {
        let fail = |rule: &str| {
            Err(StimulusError::Invariant {
                item_id: self.item_id.clone(),
                rule: rule.to_string(),
            })
        };
        let [subj, obj] = &self.characters;
        if subj.syntactic_role != SyntacticRole::Subject
            || obj.syntactic_role != SyntacticRole::Nonsubject
        {
            return fail("characters must be ordered (subject, nonsubject)");
        }
        if subj.name.trim().is_empty() || obj.name.trim().is_empty() {
            return fail("character names must be nonempty");
        }
        match self.verb_class.subject_thematic_role() {
            None => {
                if subj.thematic_role.is_some() || obj.thematic_role.is_some() {
                    return fail("joint items must not carry thematic roles");
                }
            }
            Some(expected) => {
                if subj.thematic_role != Some(expected) {
                    return fail(match self.verb_class {
                        VerbClass::Gs => "gs items require the subject to be the goal",
                        _ => "sg items require the subject to be the source",
                    });
                }
                if obj.thematic_role != Some(expected.other()) {
                    return fail("nonsubject must hold the complementary thematic role");
                }
            }
        }
        if self.ambiguous != (subj.gender == obj.gender) {
            return fail("ambiguous must hold exactly when both characters share a gender");
        }
        if self.ambiguous == self.intended_referent.is_some() {
            return fail("intended_referent must be present exactly on unambiguous items");
        }
        let legal = self.verb_class.legal_foci();
        if self.ref_question_variants.len() != legal.len()
            || !legal.iter().all(|f| self.ref_question_variants.contains_key(f))
        {
            return fail("reference-question variants must cover exactly the legal foci");
        }
        Ok(())
    }

    /// True when a yes answer to the `focus` question is correct.
    pub fn truthful_answer(&self, focus: QuestionFocus) -> Option<YesNo> {
        let referent = self.intended_referent?;
        let named = focus.resolve(self.verb_class)?;
        Some(YesNo::from_bool(named == referent))
    }
}

/// Return the reference question for `focus`; a yes answer asserts that the
/// named character is the pronoun's referent.
pub fn phrase_reference_question(
    item: &StimulusItem,
    focus: QuestionFocus,
) -> Result<&str, StimulusError> {
    item.ref_question_variants
        .get(&focus)
        .map(String::as_str)
        .ok_or_else(|| StimulusError::IllegalFocus {
            item_id: item.item_id.clone(),
            focus,
        })
}

/// Read a line-delimited JSON stimulus file and validate every record.
pub fn load_stimuli(path: impl AsRef<Path>) -> Result<Vec<StimulusItem>, StimulusError> {
    let file = std::fs::File::open(path)?;
    read_stimuli(BufReader::new(file))
}

pub fn read_stimuli(reader: impl BufRead) -> Result<Vec<StimulusItem>, StimulusError> {
    let mut items = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item: StimulusItem =
            serde_json::from_str(&line).map_err(|e| StimulusError::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
        item.validate()?;
        items.push(item);
    }
    Ok(items)
}

pub fn write_stimuli(path: impl AsRef<Path>, items: &[StimulusItem]) -> Result<(), StimulusError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_stimuli_to(&mut file, items)?;
    file.flush()?;
    Ok(())
}

pub fn write_stimuli_to(mut out: impl Write, items: &[StimulusItem]) -> Result<(), StimulusError> {
    for item in items {
        let line = serde_json::to_string(item).map_err(std::io::Error::other)?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameEntry {
    pub name: String,
    pub gender: Gender,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerbEntry {
    pub class: VerbClass,
    pub past: String,
    pub base: String,
    #[serde(default)]
    pub object: String,
    pub preposition: String,
}

impl VerbEntry {
    fn phrase(&self, form: &str) -> String {
        if self.object.is_empty() {
            format!("{form} {}", self.preposition)
        } else {
            format!("{form} {} {}", self.object, self.preposition)
        }
    }

    pub fn past_phrase(&self) -> String {
        self.phrase(&self.past)
    }

    pub fn base_phrase(&self) -> String {
        self.phrase(&self.base)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Continuation {
    pub past: String,
    pub base: String,
}

/// Names, verb frames and pronoun continuations used by the template generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    pub names: Vec<NameEntry>,
    pub verbs: Vec<VerbEntry>,
    pub continuations: Vec<Continuation>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::from_toml(DEFAULT_LEXICON).expect("bundled lexicon parses")
    }
}

impl Lexicon {
    pub fn from_toml(text: &str) -> Result<Self, StimulusError> {
        toml::from_str(text).map_err(|e| StimulusError::Lexicon(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StimulusError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn names_for(&self, gender: Gender) -> Vec<&str> {
        self.names
            .iter()
            .filter(|n| n.gender == gender)
            .map(|n| n.name.as_str())
            .collect()
    }

    pub fn verbs_for(&self, class: VerbClass) -> Vec<&VerbEntry> {
        self.verbs.iter().filter(|v| v.class == class).collect()
    }

    /// Check that every character of every item is drawn from this name pool.
    pub fn check_names(&self, items: &[StimulusItem]) -> Result<(), StimulusError> {
        for item in items {
            for c in &item.characters {
                if !self.names.iter().any(|n| n.name == c.name && n.gender == c.gender) {
                    return Err(StimulusError::Invariant {
                        item_id: item.item_id.clone(),
                        rule: format!("name `{}` ({}) is not in the name pool", c.name, c.gender),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Render the story, comprehension question and reference questions for a
/// fixed cast. `foil` names a third person used by false comprehension
/// questions.
pub fn render_item(
    item_id: impl Into<String>,
    verb: &VerbEntry,
    continuation: &Continuation,
    subject: (&str, Gender),
    object: (&str, Gender),
    pronoun_gender: Gender,
    content_gold: YesNo,
    foil: &str,
) -> StimulusItem {
    let thematic = verb.class.subject_thematic_role();
    let characters = [
        Character {
            name: subject.0.to_string(),
            gender: subject.1,
            syntactic_role: SyntacticRole::Subject,
            thematic_role: thematic,
        },
        Character {
            name: object.0.to_string(),
            gender: object.1,
            syntactic_role: SyntacticRole::Nonsubject,
            thematic_role: thematic.map(ThematicRole::other),
        },
    ];
    let ambiguous = subject.1 == object.1;
    let intended_referent = if ambiguous {
        None
    } else if pronoun_gender == subject.1 {
        Some(SyntacticRole::Subject)
    } else {
        Some(SyntacticRole::Nonsubject)
    };
    let story_text = format!(
        "{} {} {}. {} {}.",
        subject.0,
        verb.past_phrase(),
        object.0,
        pronoun_gender.pronoun(),
        continuation.past
    );
    let second = match content_gold {
        YesNo::Yes => object.0,
        YesNo::No => foil,
    };
    let content_question = format!("Did {} {} {}?", subject.0, verb.base_phrase(), second);
    let ref_question_variants = verb
        .class
        .legal_foci()
        .iter()
        .map(|&focus| {
            let role = focus.resolve(verb.class).expect("legal focus resolves");
            let name = match role {
                SyntacticRole::Subject => subject.0,
                SyntacticRole::Nonsubject => object.0,
            };
            (focus, format!("Did {name} {}?", continuation.base))
        })
        .collect();
    StimulusItem {
        item_id: item_id.into(),
        verb_class: verb.class,
        characters,
        story_text,
        content_question,
        content_gold,
        ref_question_variants,
        ambiguous,
        intended_referent,
    }
}

/// How exposure conditions are assigned to item lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ListAssignment {
    /// One fixed exposure list per condition, shared by every participant in it.
    #[default]
    FixedLists,
    /// Exposure items are drawn afresh for each participant.
    PerParticipant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDesign {
    pub experiment: Experiment,
    pub exposure_condition: ExposureCondition,
    pub n_initial_exposures: usize,
    pub n_interleaved_exposures: usize,
    pub n_critical: usize,
    pub verb_mix: BTreeMap<VerbClass, f64>,
    pub seed: u64,
}

impl ExperimentDesign {
    /// Default design: 20 (E1a) or 12 (E2a/E2b) initial exposures, 12 interleaved
    /// exposures and 12 critical items.
    pub fn new(experiment: Experiment, exposure_condition: ExposureCondition, seed: u64) -> Self {
        ExperimentDesign {
            experiment,
            exposure_condition,
            n_initial_exposures: experiment.default_initial_exposures(),
            n_interleaved_exposures: 12,
            n_critical: 12,
            verb_mix: experiment.default_verb_mix(),
            seed,
        }
    }

    pub fn n_exposures(&self) -> usize {
        self.n_initial_exposures + self.n_interleaved_exposures
    }

    pub fn n_slots(&self) -> usize {
        self.n_exposures() + self.n_critical
    }

    pub fn validate(&self) -> Result<(), StimulusError> {
        if !self.experiment.conditions().contains(&self.exposure_condition) {
            return Err(StimulusError::InvalidDesign(format!(
                "{} does not permit the {} exposure condition",
                self.experiment, self.exposure_condition
            )));
        }
        let total: f64 = self.verb_mix.values().sum();
        if self.verb_mix.values().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(StimulusError::InvalidDesign(
                "verb_mix weights must be nonnegative and sum to 1".into(),
            ));
        }
        let allowed: &[VerbClass] = match self.experiment {
            Experiment::E1a => &[VerbClass::Joint],
            Experiment::E2a | Experiment::E2b => &[VerbClass::Gs, VerbClass::Sg],
        };
        for (class, weight) in &self.verb_mix {
            if *weight > 0.0 && !allowed.contains(class) {
                return Err(StimulusError::InvalidDesign(format!(
                    "{} does not permit {class} verbs",
                    self.experiment
                )));
            }
        }
        if self.experiment != Experiment::E1a {
            let gs = self.verb_mix.get(&VerbClass::Gs).copied().unwrap_or(0.0);
            if (gs - 0.5).abs() > 1e-9 {
                return Err(StimulusError::InvalidDesign(format!(
                    "{} requires a 50/50 gs/sg verb split",
                    self.experiment
                )));
            }
        }
        Ok(())
    }
}

/// Split `n` across the verb mix by largest remainder; ties go to the earlier class.
fn allocate(n: usize, mix: &BTreeMap<VerbClass, f64>) -> Vec<(VerbClass, usize)> {
    let mut shares: Vec<(VerbClass, usize, f64)> = mix
        .iter()
        .filter(|(_, w)| **w > 0.0)
        .map(|(c, w)| {
            let exact = w * n as f64;
            (*c, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = shares.iter().map(|s| s.1).sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| shares[b].2.total_cmp(&shares[a].2).then(a.cmp(&b)));
    for &i in order.iter().take(n - assigned) {
        shares[i].1 += 1;
    }
    shares.into_iter().map(|(c, k, _)| (c, k)).collect()
}

struct FrameDraw<'a> {
    verb: &'a VerbEntry,
    continuation: &'a Continuation,
}

/// Draw `count` distinct (verb, continuation, cast) frames for one class.
fn draw_items<R: Rng>(
    lexicon: &Lexicon,
    class: VerbClass,
    count: usize,
    ambiguous: bool,
    referent_for: impl Fn(VerbClass) -> SyntacticRole,
    id_prefix: &str,
    start_index: usize,
    rng: &mut R,
) -> Result<Vec<StimulusItem>, StimulusError> {
    let verbs = lexicon.verbs_for(class);
    let male = lexicon.names_for(Gender::Male);
    let female = lexicon.names_for(Gender::Female);
    // Casts: ordered (subject, object) name pairs obeying the ambiguity rule.
    let mut casts: Vec<((&str, Gender), (&str, Gender))> = Vec::new();
    for (g1, pool1) in [(Gender::Male, &male), (Gender::Female, &female)] {
        let g2 = if ambiguous { g1 } else { g1.other() };
        let pool2 = if g2 == Gender::Male { &male } else { &female };
        for a in pool1.iter() {
            for b in pool2.iter() {
                if a != b {
                    casts.push(((a, g1), (b, g2)));
                }
            }
        }
    }
    let mut frames = Vec::new();
    for verb in &verbs {
        for continuation in &lexicon.continuations {
            frames.push(FrameDraw { verb, continuation });
        }
    }
    let available = frames.len() * casts.len();
    if count > available || (count > 0 && (frames.is_empty() || casts.is_empty())) {
        return Err(StimulusError::InsufficientLexicon {
            class,
            needed: count,
            available,
        });
    }
    // Sample distinct (frame, cast) combinations without replacement.
    let mut combos: Vec<usize> = (0..available).collect();
    let (picked, _) = combos.partial_shuffle(rng, count);
    let mut out = Vec::with_capacity(count);
    for (k, &combo) in picked.iter().enumerate() {
        let frame = &frames[combo / casts.len()];
        let (subject, object) = casts[combo % casts.len()];
        let pronoun_gender = if ambiguous {
            subject.1
        } else {
            match referent_for(class) {
                SyntacticRole::Subject => subject.1,
                SyntacticRole::Nonsubject => object.1,
            }
        };
        let gold = YesNo::from_bool(rng.random_bool(0.5));
        let foils: Vec<&str> = lexicon
            .names
            .iter()
            .map(|n| n.name.as_str())
            .filter(|n| *n != subject.0 && *n != object.0)
            .collect();
        let foil = foils.choose(rng).copied().ok_or_else(|| {
            StimulusError::Lexicon("need a third name for false comprehension questions".into())
        })?;
        out.push(render_item(
            format!("{id_prefix}-{:02}", start_index + k + 1),
            frame.verb,
            frame.continuation,
            subject,
            object,
            pronoun_gender,
            gold,
            foil,
        ));
    }
    Ok(out)
}

/// Generate synthetic items for a design: `n_exposures()` unambiguous items whose
/// pronoun resolves to the exposure condition's role, followed by `n_critical`
/// ambiguous items. Critical items depend only on the experiment and seed, so
/// both exposure conditions share the same critical list.
pub fn generate_templates(
    design: &ExperimentDesign,
    lexicon: &Lexicon,
    rng_seed: u64,
) -> Result<Vec<StimulusItem>, StimulusError> {
    design.validate()?;
    for gender in [Gender::Male, Gender::Female] {
        if lexicon.names_for(gender).len() < 2 {
            return Err(StimulusError::Lexicon(format!(
                "name pool needs at least two {gender} names"
            )));
        }
    }
    for (class, weight) in &design.verb_mix {
        if *weight > 0.0 && lexicon.verbs_for(*class).is_empty() {
            return Err(StimulusError::Lexicon(format!("no {class} verbs in the lexicon")));
        }
    }
    let exp = design.experiment;
    let cond = design.exposure_condition;
    let mut items = Vec::new();

    let mut rng = seeding::stream(rng_seed, &format!("exposure/{exp}/{cond}"));
    let mut next = 0;
    for (class, count) in allocate(design.n_exposures(), &design.verb_mix) {
        let referent = |c: VerbClass| cond.referent_role(c).expect("validated condition");
        let prefix = format!("{exp}-exp-{cond}");
        items.extend(draw_items(lexicon, class, count, false, referent, &prefix, next, &mut rng)?);
        next += count;
    }

    let mut rng = seeding::stream(rng_seed, &format!("critical/{exp}"));
    let mut next = 0;
    for (class, count) in allocate(design.n_critical, &design.verb_mix) {
        let prefix = format!("{exp}-crit");
        let unused = |_| SyntacticRole::Subject;
        items.extend(draw_items(lexicon, class, count, true, unused, &prefix, next, &mut rng)?);
        next += count;
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSlot {
    pub position: usize,
    pub item: StimulusItem,
    pub phase: Phase,
    pub ref_focus: QuestionFocus,
}

/// Assign the two foci to `n` slots: an exact split, with a random extra for odd `n`.
fn balanced_foci<R: Rng>(n: usize, foci: [QuestionFocus; 2], rng: &mut R) -> Vec<QuestionFocus> {
    let first = if rng.random_bool(0.5) { 0 } else { 1 };
    (0..n).map(|i| foci[(i + first) % 2]).collect()
}

/// Lay out one participant's trial sequence.
///
/// The first `n_initial_exposures` slots are exposure slots; the rest are a
/// random permutation of `n_interleaved_exposures` exposure slots and
/// `n_critical` critical slots. Critical foci are split exactly in half,
/// alternating within verb class so that focus and verb class are crossed as
/// evenly as the counts allow.
pub fn build_schedule(
    design: &ExperimentDesign,
    items: &[StimulusItem],
    rng_seed: u64,
) -> Result<Vec<TrialSlot>, StimulusError> {
    design.validate()?;
    if design.n_critical % 2 != 0 {
        return Err(StimulusError::OddCritical(design.n_critical));
    }
    let mut rng = seeding::rng_from_seed(rng_seed);
    let foci = design.experiment.foci();
    let cond = design.exposure_condition;

    let mut exposure: Vec<&StimulusItem> = items
        .iter()
        .filter(|it| {
            !it.ambiguous
                && design.verb_mix.get(&it.verb_class).is_some_and(|w| *w > 0.0)
                && it.intended_referent.is_some()
                && it.intended_referent == cond.referent_role(it.verb_class)
        })
        .collect();
    let mut critical: Vec<&StimulusItem> = items
        .iter()
        .filter(|it| it.ambiguous && design.verb_mix.get(&it.verb_class).is_some_and(|w| *w > 0.0))
        .collect();
    if exposure.len() < design.n_exposures() {
        return Err(StimulusError::NotEnoughItems {
            phase: Phase::Exposure,
            needed: design.n_exposures(),
            available: exposure.len(),
        });
    }
    if critical.len() < design.n_critical {
        return Err(StimulusError::NotEnoughItems {
            phase: Phase::Critical,
            needed: design.n_critical,
            available: critical.len(),
        });
    }

    exposure.shuffle(&mut rng);
    exposure.truncate(design.n_exposures());
    critical.shuffle(&mut rng);
    critical.truncate(design.n_critical);

    let exposure_foci = balanced_foci(exposure.len(), foci, &mut rng);
    let mut exposure_slots: Vec<(&StimulusItem, QuestionFocus)> =
        exposure.into_iter().zip(exposure_foci).collect();
    let mut tail_exposures = exposure_slots.split_off(design.n_initial_exposures);

    critical.sort_by_key(|it| it.verb_class);
    let critical_foci = balanced_foci(critical.len(), foci, &mut rng);
    let mut critical_slots: Vec<(&StimulusItem, QuestionFocus)> =
        critical.into_iter().zip(critical_foci).collect();
    critical_slots.shuffle(&mut rng);

    let mut phases: Vec<Phase> = std::iter::repeat_n(Phase::Exposure, tail_exposures.len())
        .chain(std::iter::repeat_n(Phase::Critical, critical_slots.len()))
        .collect();
    phases.shuffle(&mut rng);

    let mut slots = Vec::with_capacity(design.n_slots());
    for (item, focus) in exposure_slots {
        slots.push((Phase::Exposure, item, focus));
    }
    tail_exposures.reverse();
    critical_slots.reverse();
    for phase in phases {
        let (item, focus) = match phase {
            Phase::Exposure => tail_exposures.pop(),
            Phase::Critical => critical_slots.pop(),
        }
        .expect("phase multiset matches slot counts");
        slots.push((phase, item, focus));
    }
    Ok(slots
        .into_iter()
        .enumerate()
        .map(|(position, (phase, item, ref_focus))| TrialSlot {
            position,
            item: item.clone(),
            phase,
            ref_focus,
        })
        .collect())
}
