//! Numerosity discrimination trials: trial generation, learner feedback,
//! trial logs, statistics, simulated subjects and a log repository.

pub mod feedback;
pub mod log;
pub mod session;
pub mod sim;
pub mod stats;
pub mod trial;
pub mod cli;
pub mod repo;
