//! The experimenter-facing event stream of the masked protocol.
//!
//! Events carry only post-answer correctness and game-level outcomes. None of
//! them can name a stimulus value, a slot position or the correct index, so an
//! experimenter who only hears the device cannot cue the subject.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trial::{DisplayMode, Tier};

const EVENT_TIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S%.3f";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeedbackError {
    #[error("no vocabulary entry for {0}")]
    MissingVocabularyEntry(&'static str),
    #[error("vocabulary entry for {0} contains a digit and could reveal trial content")]
    RevealingVocabularyEntry(&'static str),
    #[error("malformed event line: {0}")]
    MalformedEvent(String),
}

/// Words spoken by the device for each event kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Vocabulary {
    pub correct: String,
    pub incorrect: String,
    pub tier_high: String,
    pub tier_mid: String,
    pub tier_low: String,
    pub exit: String,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            correct: "good".into(),
            incorrect: "no".into(),
            tier_high: "great".into(),
            tier_mid: "ok".into(),
            tier_low: "again".into(),
            exit: "attention".into(),
        }
    }
}

impl Vocabulary {
    fn entries(&self) -> [(&'static str, &str); 6] {
        [
            ("correct", &self.correct),
            ("incorrect", &self.incorrect),
            ("tier high", &self.tier_high),
            ("tier mid", &self.tier_mid),
            ("tier low", &self.tier_low),
            ("exit", &self.exit),
        ]
    }

    /// Every entry must be present, single-line, and free of digits.
    pub fn validate(&self) -> Result<(), FeedbackError> {
        for (name, word) in self.entries() {
            Self::check(name, word)?;
        }
        Ok(())
    }

    fn check<'a>(name: &'static str, word: &'a str) -> Result<&'a str, FeedbackError> {
        if word.trim().is_empty() || word.contains(['\n', '\r']) {
            return Err(FeedbackError::MissingVocabularyEntry(name));
        }
        if word.chars().any(|c| c.is_ascii_digit()) {
            return Err(FeedbackError::RevealingVocabularyEntry(name));
        }
        Ok(word)
    }

    fn word_for_tier(&self, tier: Tier) -> Result<&str, FeedbackError> {
        match tier {
            Tier::High => Self::check("tier high", &self.tier_high),
            Tier::Mid => Self::check("tier mid", &self.tier_mid),
            Tier::Low => Self::check("tier low", &self.tier_low),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeedbackKind {
    TrialCorrect,
    TrialIncorrect,
    GameEnded(Tier),
    ExitRequested,
    SessionStarted(DisplayMode),
}

impl fmt::Display for FeedbackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeedbackKind::TrialCorrect => f.write_str("TrialCorrect"),
            FeedbackKind::TrialIncorrect => f.write_str("TrialIncorrect"),
            FeedbackKind::GameEnded(tier) => write!(f, "GameEnded({tier})"),
            FeedbackKind::ExitRequested => f.write_str("ExitRequested"),
            FeedbackKind::SessionStarted(mode) => write!(f, "SessionStarted({mode})"),
        }
    }
}

impl FromStr for FeedbackKind {
    type Err = FeedbackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || FeedbackError::MalformedEvent(s.to_string());
        match s {
            "TrialCorrect" => return Ok(FeedbackKind::TrialCorrect),
            "TrialIncorrect" => return Ok(FeedbackKind::TrialIncorrect),
            "ExitRequested" => return Ok(FeedbackKind::ExitRequested),
            _ => {}
        }
        let (head, arg) = s
            .strip_suffix(')')
            .and_then(|rest| rest.split_once('('))
            .ok_or_else(malformed)?;
        match head {
            "GameEnded" => match arg {
                "High" => Ok(FeedbackKind::GameEnded(Tier::High)),
                "Mid" => Ok(FeedbackKind::GameEnded(Tier::Mid)),
                "Low" => Ok(FeedbackKind::GameEnded(Tier::Low)),
                _ => Err(malformed()),
            },
            "SessionStarted" => arg.parse().map(FeedbackKind::SessionStarted).map_err(|_| malformed()),
            _ => Err(malformed()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub kind: FeedbackKind,
    pub spoken_word: String,
    pub timestamp: NaiveDateTime,
}

impl FeedbackEvent {
    /// `timestamp kind word`, one event per line.
    pub fn to_line(&self) -> String {
        format!("{} {} {}", self.timestamp.format(EVENT_TIME_FORMAT), self.kind, self.spoken_word)
    }

    pub fn parse_line(line: &str) -> Result<Self, FeedbackError> {
        let malformed = || FeedbackError::MalformedEvent(line.to_string());
        let mut parts = line.splitn(3, ' ');
        let ts = parts.next().ok_or_else(malformed)?;
        let kind = parts.next().ok_or_else(malformed)?;
        let word = parts.next().ok_or_else(malformed)?;
        let timestamp = NaiveDateTime::parse_from_str(ts, EVENT_TIME_FORMAT).map_err(|_| malformed())?;
        Ok(FeedbackEvent { kind: kind.parse()?, spoken_word: word.to_string(), timestamp })
    }
}

pub fn feedback_for_answer(
    correct: bool,
    vocabulary: &Vocabulary,
    timestamp: NaiveDateTime,
) -> Result<FeedbackEvent, FeedbackError> {
    let (kind, word) = if correct {
        (FeedbackKind::TrialCorrect, Vocabulary::check("correct", &vocabulary.correct)?)
    } else {
        (FeedbackKind::TrialIncorrect, Vocabulary::check("incorrect", &vocabulary.incorrect)?)
    };
    Ok(FeedbackEvent { kind, spoken_word: word.to_string(), timestamp })
}

pub fn end_of_game_feedback(
    tier: Tier,
    vocabulary: &Vocabulary,
    timestamp: NaiveDateTime,
) -> Result<FeedbackEvent, FeedbackError> {
    let word = vocabulary.word_for_tier(tier)?;
    Ok(FeedbackEvent { kind: FeedbackKind::GameEnded(tier), spoken_word: word.to_string(), timestamp })
}

pub fn exit_feedback(vocabulary: &Vocabulary, timestamp: NaiveDateTime) -> Result<FeedbackEvent, FeedbackError> {
    let word = Vocabulary::check("exit", &vocabulary.exit)?;
    Ok(FeedbackEvent { kind: FeedbackKind::ExitRequested, spoken_word: word.to_string(), timestamp })
}

/// Announces the display mode only; it says nothing about which slot is right.
pub fn session_started(mode: DisplayMode, timestamp: NaiveDateTime) -> FeedbackEvent {
    FeedbackEvent {
        kind: FeedbackKind::SessionStarted(mode),
        spoken_word: mode.wire_name().to_string(),
        timestamp,
    }
}
