//! Menu → game → end-of-game state machine.
//!
//! A [`Session`] is advanced by exactly one writer through [`Session::step`].
//! Each step returns the feedback events it emitted and, for an answered
//! trial, the resulting log record. Events are also queued for
//! [`Session::drain_events`].

use std::collections::VecDeque;

use chrono::NaiveDateTime;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feedback::{self, FeedbackError, FeedbackEvent};
use crate::log::{self, LogError, TrialRecord};
use crate::trial::{self, DisplayMode, GameConfig, Tier, TrialError, TrialSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("input {input} is not accepted in phase {phase:?}")]
    IllegalTransition { phase: Phase, input: &'static str },
    #[error(transparent)]
    Trial(#[from] TrialError),
    #[error(transparent)]
    Feedback(#[from] FeedbackError),
    #[error(transparent)]
    Log(#[from] LogError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Menu,
    InGame,
    Settings,
    /// A game just finished; waiting for ContinuePlaying or exit.
    Ended,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum UserInput {
    SelectMode { mode: DisplayMode },
    TouchSlot { slot: usize },
    ExitButton,
    LongPress { duration_ms: u64 },
    ContinuePlaying,
    /// Experimenter edit made from the settings view.
    UpdateConfig { config: GameConfig },
}

impl UserInput {
    fn name(&self) -> &'static str {
        match self {
            UserInput::SelectMode { .. } => "SelectMode",
            UserInput::TouchSlot { .. } => "TouchSlot",
            UserInput::ExitButton => "ExitButton",
            UserInput::LongPress { .. } => "LongPress",
            UserInput::ContinuePlaying => "ContinuePlaying",
            UserInput::UpdateConfig { .. } => "UpdateConfig",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingTrial {
    pub trial: TrialSpec,
    pub displayed_at: NaiveDateTime,
}

/// Read-only view of the session, safe to show to the UI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub phase: Phase,
    pub mode: DisplayMode,
    pub trial_in_game: u32,
    pub correct_in_game: u32,
    pub trials_per_game: u32,
    pub next_test_no: u32,
    pub pending: Option<PendingTrial>,
    pub last_tier: Option<Tier>,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutcome {
    pub events: Vec<FeedbackEvent>,
    pub record: Option<TrialRecord>,
}

#[derive(Debug, Clone)]
pub struct Session {
    config: GameConfig,
    learner: String,
    trainer: String,
    seed: u64,
    rng: ChaCha8Rng,
    phase: Phase,
    trial_in_game: u32,
    correct_in_game: u32,
    next_test_no: u32,
    pending: Option<PendingTrial>,
    last_tier: Option<Tier>,
    events: VecDeque<FeedbackEvent>,
    records: Vec<TrialRecord>,
}

impl Session {
    pub fn new(config: GameConfig, learner: &str, trainer: &str, seed: u64) -> Result<Self, SessionError> {
        config.validate()?;
        let session = Session {
            config,
            learner: learner.to_string(),
            trainer: trainer.to_string(),
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            phase: Phase::Menu,
            trial_in_game: 0,
            correct_in_game: 0,
            next_test_no: 1,
            pending: None,
            last_tier: None,
            events: VecDeque::new(),
            records: Vec::new(),
        };
        // The record writer rejects names it cannot round-trip; fail early.
        session.validate_names()?;
        Ok(session)
    }

    /// Seeds from OS entropy. The seed stays available through [`Session::seed`].
    pub fn with_entropy(config: GameConfig, learner: &str, trainer: &str) -> Result<Self, SessionError> {
        Self::new(config, learner, trainer, rand::random())
    }

    fn validate_names(&self) -> Result<(), SessionError> {
        let probe = TrialRecord {
            test_no: 1,
            mode: self.config.mode,
            learner: self.learner.clone(),
            trainer: self.trainer.clone(),
            values: vec![1, 2],
            value_selected: 2,
            correction: true,
            date: NaiveDateTime::default(),
            answering_time_ms: 0,
            other_parameters: self.config.other_parameters(),
        };
        probe.validate()?;
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn pending(&self) -> Option<&PendingTrial> {
        self.pending.as_ref()
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            phase: self.phase,
            mode: self.config.mode,
            trial_in_game: self.trial_in_game,
            correct_in_game: self.correct_in_game,
            trials_per_game: self.config.trials_per_game,
            next_test_no: self.next_test_no,
            pending: self.pending.clone(),
            last_tier: self.last_tier,
            seed: self.seed,
        }
    }

    pub fn drain_events(&mut self) -> Vec<FeedbackEvent> {
        self.events.drain(..).collect()
    }

    /// The session's log so far, `.csv` flavor.
    pub fn log_csv(&self) -> Result<String, LogError> {
        log::format_log_csv(&self.records)
    }

    pub fn log_txt(&self) -> Result<String, LogError> {
        log::format_log_txt(&self.records)
    }

    fn illegal(&self, input: &UserInput) -> SessionError {
        SessionError::IllegalTransition { phase: self.phase, input: input.name() }
    }

    fn start_game(&mut self, now: NaiveDateTime, out: &mut StepOutcome) -> Result<(), SessionError> {
        let trial = trial::generate_trial(&self.config, &mut self.rng)?;
        self.phase = Phase::InGame;
        self.trial_in_game = 0;
        self.correct_in_game = 0;
        self.pending = Some(PendingTrial { trial, displayed_at: now });
        out.events.push(feedback::session_started(self.config.mode, now));
        Ok(())
    }

    /// Advances the state machine. `now` is the wall-clock time of the input.
    pub fn step(&mut self, input: UserInput, now: NaiveDateTime) -> Result<StepOutcome, SessionError> {
        let mut out = StepOutcome::default();
        match (self.phase, &input) {
            (_, UserInput::LongPress { duration_ms }) if self.phase != Phase::Settings => {
                if *duration_ms >= self.config.long_press_threshold_ms {
                    // Opening settings abandons the displayed trial unanswered.
                    self.pending = None;
                    self.phase = Phase::Settings;
                }
            }
            (Phase::Menu, UserInput::SelectMode { mode }) => {
                self.config.mode = *mode;
                self.start_game(now, &mut out)?;
            }
            (Phase::Ended, UserInput::ContinuePlaying) => self.start_game(now, &mut out)?,
            (Phase::InGame, UserInput::TouchSlot { slot }) => {
                let pending = self.pending.as_ref().expect("a game always has a pending trial");
                let answer = trial::evaluate_answer(&pending.trial, *slot, pending.displayed_at, now)?;
                let record = TrialRecord {
                    test_no: self.next_test_no,
                    mode: pending.trial.mode,
                    learner: self.learner.clone(),
                    trainer: self.trainer.clone(),
                    values: pending.trial.values.clone(),
                    value_selected: answer.chosen_value,
                    correction: answer.correct,
                    date: now,
                    answering_time_ms: answer.answering_time_ms,
                    other_parameters: self.config.other_parameters(),
                };
                out.events.push(feedback::feedback_for_answer(answer.correct, &self.config.vocabulary, now)?);
                self.next_test_no += 1;
                self.trial_in_game += 1;
                self.correct_in_game += u32::from(answer.correct);
                self.records.push(record.clone());
                out.record = Some(record);

                if self.trial_in_game >= self.config.trials_per_game {
                    let tier = trial::end_of_game_tier(
                        self.correct_in_game,
                        self.trial_in_game,
                        self.config.score_boundaries,
                    );
                    out.events.push(feedback::end_of_game_feedback(tier, &self.config.vocabulary, now)?);
                    self.last_tier = Some(tier);
                    self.pending = None;
                    self.phase = Phase::Ended;
                } else {
                    // Next stimulus appears after the configured pause.
                    let delay = chrono::Duration::milliseconds(self.config.inter_trial_delay_ms as i64);
                    let trial = trial::generate_trial(&self.config, &mut self.rng)?;
                    self.pending = Some(PendingTrial { trial, displayed_at: now + delay });
                }
            }
            (Phase::InGame | Phase::Ended, UserInput::ExitButton) => {
                out.events.push(feedback::exit_feedback(&self.config.vocabulary, now)?);
                self.pending = None;
                self.phase = Phase::Menu;
            }
            (Phase::Settings, UserInput::ExitButton) => self.phase = Phase::Menu,
            (Phase::Settings, UserInput::UpdateConfig { config }) => {
                config.validate()?;
                self.config = config.clone();
                self.validate_names()?;
            }
            _ => return Err(self.illegal(&input)),
        }
        self.events.extend(out.events.iter().cloned());
        Ok(out)
    }
}
