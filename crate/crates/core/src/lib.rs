//! Referential priming experiments run against language models, with a
//! Bayesian mixed-effects analysis of the coded answers.

pub mod analysis;
pub mod client;
pub mod coding;
pub mod inference;
pub mod participants;
pub mod seeding;
pub mod session;
pub mod special;
pub mod stimuli;
pub mod runner;
pub mod validation;
