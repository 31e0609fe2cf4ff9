//! Deterministic SRD-subset combat simulator with a reinforcement-learning
//! environment, a DQN trainer, scripted adversaries and a tournament runner.

pub mod adversaries;
pub mod battlemap;
pub mod characters;
pub mod engine;
pub mod env;
pub mod dqn;
pub mod fixtures;
pub mod llm;
pub mod rng;
pub mod rules;
pub mod tournament;
