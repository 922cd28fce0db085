//! Trial generation and answer evaluation.
//!
//! A trial presents `set_size` distinct values from a [`ValueDomain`] in one
//! of four [`DisplayMode`]s; the subject must touch the slot holding the
//! largest value.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDateTime;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feedback::Vocabulary;

/// Smallest number of values shown in one trial.
pub const MIN_SET_SIZE: usize = 2;
/// Largest number of values shown in one trial (the log has columns C_0..C_4).
pub const MAX_SET_SIZE: usize = 5;
/// Largest supported domain cardinality.
pub const MAX_DOMAIN_SIZE: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrialError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("slot {slot} out of range for a trial of {len} values")]
    SlotOutOfRange { slot: usize, len: usize },
    #[error("answer time precedes display time")]
    AnswerBeforeDisplay,
    #[error("unknown display mode `{0}`")]
    UnknownMode(String),
}

/// Visual encoding of a value. Wire names match the log's `Test Name` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisplayMode {
    Dice,
    Heap,
    Rect,
    Disc,
}

/// Discrete (countable dots) versus continuous (area, fill level) encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModeType {
    Discrete,
    Continuous,
}

impl DisplayMode {
    pub const ALL: [DisplayMode; 4] = [DisplayMode::Dice, DisplayMode::Heap, DisplayMode::Rect, DisplayMode::Disc];

    pub fn wire_name(self) -> &'static str {
        match self {
            DisplayMode::Dice => "dice",
            DisplayMode::Heap => "heap",
            DisplayMode::Rect => "rect",
            DisplayMode::Disc => "disc",
        }
    }

    pub fn mode_type(self) -> ModeType {
        match self {
            DisplayMode::Dice | DisplayMode::Heap => ModeType::Discrete,
            DisplayMode::Rect | DisplayMode::Disc => ModeType::Continuous,
        }
    }
}

impl fmt::Display for DisplayMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.wire_name())
    }
}

impl FromStr for DisplayMode {
    type Err = TrialError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dice" => Ok(DisplayMode::Dice),
            "heap" => Ok(DisplayMode::Heap),
            "rect" => Ok(DisplayMode::Rect),
            "disc" => Ok(DisplayMode::Disc),
            other => Err(TrialError::UnknownMode(other.to_string())),
        }
    }
}

/// Ascending set of distinct, strictly positive values a trial may draw from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct ValueDomain(Vec<u32>);

impl ValueDomain {
    pub fn new(mut values: Vec<u32>) -> Result<Self, TrialError> {
        values.sort_unstable();
        if values.len() < MIN_SET_SIZE || values.len() > MAX_DOMAIN_SIZE {
            return Err(TrialError::InvalidConfig(format!(
                "domain must hold between {MIN_SET_SIZE} and {MAX_DOMAIN_SIZE} values, got {}",
                values.len()
            )));
        }
        if values[0] == 0 {
            return Err(TrialError::InvalidConfig("domain values must be strictly positive".into()));
        }
        if values.windows(2).any(|w| w[0] == w[1]) {
            return Err(TrialError::InvalidConfig("domain values must be distinct".into()));
        }
        Ok(ValueDomain(values))
    }

    /// `{1, 2, ..., max}`.
    pub fn range(max: u32) -> Result<Self, TrialError> {
        Self::new((1..=max).collect())
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, value: u32) -> bool {
        self.0.binary_search(&value).is_ok()
    }

    pub fn max(&self) -> u32 {
        *self.0.last().expect("domain is never empty")
    }
}

impl Default for ValueDomain {
    fn default() -> Self {
        ValueDomain(vec![1, 2, 3, 4, 5])
    }
}

impl TryFrom<Vec<u32>> for ValueDomain {
    type Error = TrialError;

    fn try_from(values: Vec<u32>) -> Result<Self, Self::Error> {
        ValueDomain::new(values)
    }
}

impl From<ValueDomain> for Vec<u32> {
    fn from(domain: ValueDomain) -> Self {
        domain.0
    }
}

/// One stimulus presentation. `values[i]` is shown in slot `i`, left to right.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub mode: DisplayMode,
    pub values: Vec<u32>,
    pub correct_index: usize,
}

impl TrialSpec {
    /// Builds a trial from explicit values, checking distinctness and size.
    pub fn new(mode: DisplayMode, values: Vec<u32>) -> Result<Self, TrialError> {
        if values.len() < MIN_SET_SIZE || values.len() > MAX_SET_SIZE {
            return Err(TrialError::InvalidConfig(format!(
                "a trial shows between {MIN_SET_SIZE} and {MAX_SET_SIZE} values, got {}",
                values.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if values[..i].contains(v) {
                return Err(TrialError::InvalidConfig(format!("repeated value {v}")));
            }
        }
        let correct_index = argmax(&values);
        Ok(TrialSpec { mode, values, correct_index })
    }

    pub fn set_size(&self) -> usize {
        self.values.len()
    }

    pub fn max_value(&self) -> u32 {
        self.values[self.correct_index]
    }
}

fn argmax(values: &[u32]) -> usize {
    values
        .iter()
        .enumerate()
        .max_by_key(|(_, v)| **v)
        .map(|(i, _)| i)
        .expect("trial values are never empty")
}

/// Score boundaries as fractions of the game length, `lower <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBoundaries {
    pub lower: f64,
    pub upper: f64,
}

impl Default for ScoreBoundaries {
    fn default() -> Self {
        ScoreBoundaries { lower: 0.5, upper: 0.8 }
    }
}

/// Display settings, recorded verbatim into the log's `Other Parameters`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Appearance {
    pub background: String,
    pub foreground: String,
    pub bg_opacity: String,
}

impl Default for Appearance {
    fn default() -> Self {
        Appearance {
            background: "black".into(),
            foreground: "green".into(),
            bg_opacity: ".2".into(),
        }
    }
}

/// Everything the settings view can change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub mode: DisplayMode,
    pub domain: ValueDomain,
    pub set_size: usize,
    pub trials_per_game: u32,
    pub score_boundaries: ScoreBoundaries,
    pub inter_trial_delay_ms: u64,
    pub long_press_threshold_ms: u64,
    pub appearance: Appearance,
    pub vocabulary: Vocabulary,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            mode: DisplayMode::Dice,
            domain: ValueDomain::default(),
            set_size: 2,
            trials_per_game: 20,
            score_boundaries: ScoreBoundaries::default(),
            inter_trial_delay_ms: 1000,
            long_press_threshold_ms: 1000,
            appearance: Appearance::default(),
            vocabulary: Vocabulary::default(),
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), TrialError> {
        if !(MIN_SET_SIZE..=MAX_SET_SIZE).contains(&self.set_size) {
            return Err(TrialError::InvalidConfig(format!(
                "set size {} outside [{MIN_SET_SIZE}, {MAX_SET_SIZE}]",
                self.set_size
            )));
        }
        if self.set_size > self.domain.len() {
            return Err(TrialError::InvalidConfig(format!(
                "set size {} exceeds domain size {}",
                self.set_size,
                self.domain.len()
            )));
        }
        if self.trials_per_game == 0 {
            return Err(TrialError::InvalidConfig("a game needs at least one trial".into()));
        }
        let ScoreBoundaries { lower, upper } = self.score_boundaries;
        if !(0.0..=1.0).contains(&lower) || !(0.0..=1.0).contains(&upper) || lower > upper {
            return Err(TrialError::InvalidConfig(format!(
                "score boundaries must satisfy 0 <= {lower} <= {upper} <= 1"
            )));
        }
        if self.long_press_threshold_ms == 0 {
            return Err(TrialError::InvalidConfig("long press threshold must be positive".into()));
        }
        self.vocabulary
            .validate()
            .map_err(|e| TrialError::InvalidConfig(e.to_string()))
    }

    /// The `Other Parameters` column for records produced under this config.
    pub fn other_parameters(&self) -> String {
        let values: Vec<String> = self.domain.values().iter().map(u32::to_string).collect();
        format!(
            "background {}, foreground {}, bg opacity {}, Value Set [{}]",
            self.appearance.background,
            self.appearance.foreground,
            self.appearance.bg_opacity,
            values.join(",")
        )
    }
}

/// Draws a trial uniformly over all ordered `set_size`-tuples of distinct
/// domain values.
pub fn generate_trial<R: Rng + ?Sized>(config: &GameConfig, rng: &mut R) -> Result<TrialSpec, TrialError> {
    if config.set_size > config.domain.len() {
        return Err(TrialError::InvalidConfig(format!(
            "set size {} exceeds domain size {}",
            config.set_size,
            config.domain.len()
        )));
    }
    if !(MIN_SET_SIZE..=MAX_SET_SIZE).contains(&config.set_size) {
        return Err(TrialError::InvalidConfig(format!("set size {} unsupported", config.set_size)));
    }
    let mut pool = config.domain.values().to_vec();
    let (chosen, _) = pool.partial_shuffle(rng, config.set_size);
    let values = chosen.to_vec();
    let correct_index = argmax(&values);
    Ok(TrialSpec { mode: config.mode, values, correct_index })
}

/// Outcome of touching one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Answer {
    pub chosen_value: u32,
    pub correct: bool,
    pub answering_time_ms: u64,
}

/// Evaluates a touch. Answering time runs from stimulus display, so any
/// inter-trial delay is excluded.
pub fn evaluate_answer(
    trial: &TrialSpec,
    chosen_slot: usize,
    display_time: NaiveDateTime,
    answer_time: NaiveDateTime,
) -> Result<Answer, TrialError> {
    let chosen_value = *trial
        .values
        .get(chosen_slot)
        .ok_or(TrialError::SlotOutOfRange { slot: chosen_slot, len: trial.values.len() })?;
    let elapsed = answer_time.signed_duration_since(display_time).num_milliseconds();
    if elapsed < 0 {
        return Err(TrialError::AnswerBeforeDisplay);
    }
    Ok(Answer {
        chosen_value,
        correct: chosen_slot == trial.correct_index,
        answering_time_ms: elapsed as u64,
    })
}

/// End-of-game score placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tier {
    Low,
    Mid,
    High,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Low => "Low",
            Tier::Mid => "Mid",
            Tier::High => "High",
        })
    }
}

/// Lower-inclusive: a score equal to a boundary lands in the higher tier.
pub fn end_of_game_tier(correct: u32, total: u32, boundaries: ScoreBoundaries) -> Tier {
    debug_assert!(total >= 1 && correct <= total);
    // Compare correct/total >= b as correct >= b*total to keep 10/20 == 0.5 exact.
    let reaches = |b: f64| f64::from(correct) >= b * f64::from(total);
    if reaches(boundaries.upper) {
        Tier::High
    } else if reaches(boundaries.lower) {
        Tier::Mid
    } else {
        Tier::Low
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn at(h: u32, m: u32, s: u32, ms: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2022, 5, 19).unwrap().and_hms_milli_opt(h, m, s, ms).unwrap()
    }

    #[test]
    fn mode_classification() {
        assert_eq!(DisplayMode::Dice.mode_type(), ModeType::Discrete);
        assert_eq!(DisplayMode::Heap.mode_type(), ModeType::Discrete);
        assert_eq!(DisplayMode::Disc.mode_type(), ModeType::Continuous);
        assert_eq!(DisplayMode::Rect.mode_type(), ModeType::Continuous);
        for m in DisplayMode::ALL {
            assert_eq!(m.wire_name().parse::<DisplayMode>().unwrap(), m);
        }
        assert!("square".parse::<DisplayMode>().is_err());
    }

    #[test]
    fn domain_bounds() {
        assert!(ValueDomain::range(10).is_ok());
        assert!(ValueDomain::range(11).is_err());
        assert!(ValueDomain::new(vec![3]).is_err());
        assert!(ValueDomain::new(vec![0, 1]).is_err());
        assert!(ValueDomain::new(vec![2, 2, 3]).is_err());
        assert_eq!(ValueDomain::new(vec![5, 1, 3]).unwrap().values(), &[1, 3, 5]);
    }

    #[test]
    fn full_set_is_a_permutation() {
        let config = GameConfig { set_size: 5, ..GameConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let t = generate_trial(&config, &mut rng).unwrap();
            let mut sorted = t.values.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, vec![1, 2, 3, 4, 5]);
            assert_eq!(t.values[t.correct_index], 5);
        }
    }

    #[test]
    fn replay_with_same_seed() {
        let config = GameConfig { set_size: 3, ..GameConfig::default() };
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10).map(|_| generate_trial(&config, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }

    #[test]
    fn oversized_set_rejected() {
        let config = GameConfig { domain: ValueDomain::range(3).unwrap(), set_size: 4, ..GameConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(generate_trial(&config, &mut rng), Err(TrialError::InvalidConfig(_))));
        assert!(config.validate().is_err());
    }

    #[test]
    fn answers_from_published_log() {
        let t1 = TrialSpec::new(DisplayMode::Dice, vec![1, 4]).unwrap();
        let a = evaluate_answer(&t1, 1, at(17, 2, 18, 35), at(17, 2, 25, 981)).unwrap();
        assert_eq!((a.chosen_value, a.correct, a.answering_time_ms), (4, true, 7946));

        let t81 = TrialSpec::new(DisplayMode::Rect, vec![4, 2, 3]).unwrap();
        let a = evaluate_answer(&t81, 2, at(17, 26, 50, 0), at(17, 26, 50, 0)).unwrap();
        assert_eq!((a.chosen_value, a.correct), (3, false));

        let t180 = TrialSpec::new(DisplayMode::Heap, vec![3, 2, 1]).unwrap();
        let a = evaluate_answer(&t180, 1, at(17, 35, 5, 80), at(17, 35, 6, 6)).unwrap();
        assert_eq!((a.chosen_value, a.correct, a.answering_time_ms), (2, false, 926));
    }

    #[test]
    fn answer_errors() {
        let t = TrialSpec::new(DisplayMode::Disc, vec![2, 5]).unwrap();
        assert_eq!(
            evaluate_answer(&t, 2, at(1, 0, 0, 0), at(1, 0, 1, 0)),
            Err(TrialError::SlotOutOfRange { slot: 2, len: 2 })
        );
        assert_eq!(evaluate_answer(&t, 0, at(1, 0, 1, 0), at(1, 0, 0, 0)), Err(TrialError::AnswerBeforeDisplay));
        assert!(TrialSpec::new(DisplayMode::Disc, vec![2, 2]).is_err());
        assert!(TrialSpec::new(DisplayMode::Disc, vec![1, 2, 3, 4, 5, 6]).is_err());
    }

    #[test]
    fn tiers() {
        let b = ScoreBoundaries::default();
        assert_eq!(end_of_game_tier(18, 20, b), Tier::High);
        assert_eq!(end_of_game_tier(16, 20, b), Tier::High);
        assert_eq!(end_of_game_tier(10, 20, b), Tier::Mid);
        assert_eq!(end_of_game_tier(9, 20, b), Tier::Low);
        assert_eq!(end_of_game_tier(0, 20, b), Tier::Low);
    }

    #[test]
    fn other_parameters_match_published_log() {
        assert_eq!(
            GameConfig::default().other_parameters(),
            "background black, foreground green, bg opacity .2, Value Set [1,2,3,4,5]"
        );
    }
}
