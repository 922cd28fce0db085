//! Synthetic subjects for end-to-end checks and power estimates.
//!
//! A [`SubjectModel`] decides which slot a simulated subject touches. The
//! ratio models encode the ratio effect: accuracy drops as the two largest
//! values get closer.

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feedback::FeedbackEvent;
use crate::log::TrialRecord;
use crate::session::{Session, SessionError, UserInput};
use crate::stats::{binomial_tail, ChanceLevel, StatsError};
use crate::trial::{generate_trial, GameConfig, TrialSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("no accuracy entry for pair {{{0},{1}}}")]
    MissingPairEntry(u32, u32),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairAccuracy {
    pub smaller: u32,
    pub larger: u32,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum SubjectModel {
    UniformRandom,
    Perfect,
    /// Probability of touching the maximum, per unordered pair of the two
    /// largest values shown.
    RatioTable { pairs: Vec<PairAccuracy> },
    /// `P(correct) = 1 / (1 + exp(-(intercept + slope * ratio)))`.
    RatioLogistic { slope: f64, intercept: f64 },
}

/// Published per-pair accuracies over `{1..5}`, first then second subject.
const TABLE_PAIRS: [(u32, u32, f64, f64); 10] = [
    (1, 2, 0.81, 0.69),
    (1, 3, 0.90, 0.70),
    (1, 4, 0.93, 0.78),
    (1, 5, 0.94, 0.94),
    (2, 3, 0.82, 0.57),
    (2, 4, 0.81, 0.68),
    (2, 5, 0.96, 0.76),
    (3, 4, 0.67, 0.45),
    (3, 5, 0.73, 0.70),
    (4, 5, 0.55, 0.71),
];

impl SubjectModel {
    pub fn ratio_table(pairs: &[((u32, u32), f64)]) -> Result<Self, SimError> {
        let pairs = pairs
            .iter()
            .map(|&((a, b), accuracy)| PairAccuracy { smaller: a.min(b), larger: a.max(b), accuracy })
            .collect();
        let model = SubjectModel::RatioTable { pairs };
        model.validate()?;
        Ok(model)
    }

    /// Ratio table with the first subject's published per-pair accuracies.
    pub fn first_subject() -> Self {
        SubjectModel::RatioTable {
            pairs: TABLE_PAIRS
                .iter()
                .map(|&(smaller, larger, accuracy, _)| PairAccuracy { smaller, larger, accuracy })
                .collect(),
        }
    }

    pub fn second_subject() -> Self {
        SubjectModel::RatioTable {
            pairs: TABLE_PAIRS
                .iter()
                .map(|&(smaller, larger, _, accuracy)| PairAccuracy { smaller, larger, accuracy })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        match self {
            SubjectModel::RatioTable { pairs } => {
                for p in pairs {
                    if !(0.0..=1.0).contains(&p.accuracy) {
                        return Err(SimError::InvalidModel(format!("accuracy {} outside [0, 1]", p.accuracy)));
                    }
                }
                Ok(())
            }
            SubjectModel::RatioLogistic { slope, intercept } if !slope.is_finite() || !intercept.is_finite() => {
                Err(SimError::InvalidModel("logistic parameters must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// Checks that every pair the configured domain can produce has an entry.
    pub fn covers(&self, config: &GameConfig) -> Result<(), SimError> {
        if let SubjectModel::RatioTable { .. } = self {
            let values = config.domain.values();
            for (i, &a) in values.iter().enumerate() {
                for &b in &values[i + 1..] {
                    self.pair_accuracy(a, b)?;
                }
            }
        }
        Ok(())
    }

    fn pair_accuracy(&self, smaller: u32, larger: u32) -> Result<f64, SimError> {
        match self {
            SubjectModel::RatioTable { pairs } => pairs
                .iter()
                .find(|p| p.smaller == smaller && p.larger == larger)
                .map(|p| p.accuracy)
                .ok_or(SimError::MissingPairEntry(smaller, larger)),
            SubjectModel::RatioLogistic { slope, intercept } => {
                let ratio = f64::from(smaller) / f64::from(larger);
                Ok(1.0 / (1.0 + (-(intercept + slope * ratio)).exp()))
            }
            SubjectModel::UniformRandom => Ok(f64::NAN),
            SubjectModel::Perfect => Ok(1.0),
        }
    }

    /// Probability of a correct answer on `trial`.
    pub fn success_probability(&self, trial: &TrialSpec) -> Result<f64, SimError> {
        match self {
            SubjectModel::UniformRandom => Ok(1.0 / trial.set_size() as f64),
            SubjectModel::Perfect => Ok(1.0),
            _ => {
                let (second, max) = top_two(trial);
                self.pair_accuracy(second, max)
            }
        }
    }

    pub fn uses_top_two_rule(&self, config: &GameConfig) -> bool {
        matches!(self, SubjectModel::RatioTable { .. } | SubjectModel::RatioLogistic { .. }) && config.set_size > 2
    }
}

impl std::str::FromStr for SubjectModel {
    type Err = SimError;

    /// `uniform`, `perfect`, `subject1`, `subject2` or `logistic:SLOPE,INTERCEPT`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" | "uniform-random" => Ok(SubjectModel::UniformRandom),
            "perfect" => Ok(SubjectModel::Perfect),
            "subject1" => Ok(SubjectModel::first_subject()),
            "subject2" => Ok(SubjectModel::second_subject()),
            _ => {
                let params = s
                    .strip_prefix("logistic:")
                    .ok_or_else(|| SimError::InvalidModel(format!("unknown model `{s}`")))?;
                let (slope, intercept) = params
                    .split_once(',')
                    .ok_or_else(|| SimError::InvalidModel("expected logistic:SLOPE,INTERCEPT".into()))?;
                let parse = |x: &str| {
                    x.trim().parse::<f64>().map_err(|_| SimError::InvalidModel(format!("bad number `{x}`")))
                };
                let model = SubjectModel::RatioLogistic { slope: parse(slope)?, intercept: parse(intercept)? };
                model.validate()?;
                Ok(model)
            }
        }
    }
}

fn top_two(trial: &TrialSpec) -> (u32, u32) {
    let max = trial.max_value();
    let second = trial.values.iter().copied().filter(|v| *v != max).max().expect("at least two values");
    (second, max)
}

/// The slot a simulated subject touches.
pub fn choose<R: Rng + ?Sized>(model: &SubjectModel, trial: &TrialSpec, rng: &mut R) -> Result<usize, SimError> {
    let len = trial.set_size();
    match model {
        SubjectModel::UniformRandom => Ok(rng.random_range(0..len)),
        SubjectModel::Perfect => Ok(trial.correct_index),
        _ => {
            let p = model.success_probability(trial)?;
            if rng.random::<f64>() < p {
                Ok(trial.correct_index)
            } else {
                // Uniform over the wrong slots.
                let wrong = rng.random_range(0..len - 1);
                Ok(if wrong >= trial.correct_index { wrong + 1 } else { wrong })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub seed: u64,
    pub learner: String,
    pub trainer: String,
    pub start: NaiveDateTime,
    /// Median of the log-normal answering time.
    pub median_answer_ms: f64,
    /// Log-scale spread of the answering time.
    pub answer_sigma: f64,
    /// Pause between the end of a game and the next one.
    pub game_pause_ms: u64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            seed: 0,
            learner: "Subject".into(),
            trainer: "Experimenter".into(),
            start: NaiveDate::from_ymd_opt(2022, 5, 19).unwrap().and_hms_opt(17, 2, 0).unwrap(),
            median_answer_ms: 3000.0,
            answer_sigma: 0.6,
            game_pause_ms: 8000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSession {
    pub log: String,
    pub records: Vec<TrialRecord>,
    pub events: Vec<FeedbackEvent>,
    pub seed: u64,
    /// Modeling caveats that apply to this run.
    pub notes: Vec<String>,
}

fn model_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Plays `n_games` games through the session state machine and returns the
/// resulting `.csv` log.
pub fn simulate_session(
    model: &SubjectModel,
    config: &GameConfig,
    n_games: u32,
    options: &SimulationOptions,
) -> Result<SimulatedSession, SimError> {
    model.validate()?;
    model.covers(config)?;
    if !(options.median_answer_ms > 0.0) || !(options.answer_sigma >= 0.0) {
        return Err(SimError::InvalidParameter("answering time distribution".into()));
    }
    let answer_time = LogNormal::new(options.median_answer_ms.ln(), options.answer_sigma)
        .map_err(|e| SimError::InvalidParameter(e.to_string()))?;
    let mut session = Session::new(config.clone(), &options.learner, &options.trainer, options.seed)?;
    let mut rng = model_rng(options.seed, 1);
    let mut now = options.start;
    let mut events = Vec::new();

    for game in 0..n_games {
        let input = if game == 0 {
            UserInput::SelectMode { mode: config.mode }
        } else {
            now += Duration::milliseconds(options.game_pause_ms as i64);
            UserInput::ContinuePlaying
        };
        events.extend(session.step(input, now)?.events);
        while let Some(pending) = session.pending() {
            let slot = choose(model, &pending.trial, &mut rng)?;
            let elapsed = answer_time.sample(&mut rng).round().max(1.0) as i64;
            now = pending.displayed_at + Duration::milliseconds(elapsed);
            events.extend(session.step(UserInput::TouchSlot { slot }, now)?.events);
        }
    }

    let mut notes = Vec::new();
    if model.uses_top_two_rule(config) {
        notes.push(format!(
            "set size {}: the ratio model uses the accuracy of the two largest values shown",
            config.set_size
        ));
    }
    Ok(SimulatedSession {
        log: session.log_csv().map_err(SessionError::from)?,
        records: session.records().to_vec(),
        events,
        seed: options.seed,
        notes,
    })
}

/// Successes over `n_trials` independent simulated trials.
pub fn simulate_successes<R: Rng + ?Sized>(
    model: &SubjectModel,
    config: &GameConfig,
    n_trials: u32,
    rng: &mut R,
) -> Result<u64, SimError> {
    let mut k = 0;
    for _ in 0..n_trials {
        let trial = generate_trial(config, rng).map_err(SessionError::from)?;
        k += u64::from(choose(model, &trial, rng)? == trial.correct_index);
    }
    Ok(k)
}

/// Binomial-test p-values of `replicates` independent simulated sessions of
/// `n_trials` trials each. Replicate `r` uses its own ChaCha stream.
pub fn replicate_p_values(
    model: &SubjectModel,
    config: &GameConfig,
    n_trials: u32,
    replicates: u32,
    seed: u64,
    chance: ChanceLevel,
) -> Result<Vec<f64>, SimError> {
    model.validate()?;
    model.covers(config)?;
    let p0 = chance.probability(config.set_size);
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = model_rng(seed, (u64::from(n_trials) << 32) | u64::from(r));
            let k = simulate_successes(model, config, n_trials, &mut rng)?;
            Ok(binomial_tail(k, u64::from(n_trials), p0)?)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub n_trials: u32,
    pub replicates: u32,
    pub detections: u32,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub alpha: f64,
    pub seed: u64,
    pub points: Vec<PowerPoint>,
}

impl PowerReport {
    pub fn render_csv(&self) -> String {
        let mut out = format!("# alpha={} seed={}\nn_trials,replicates,detections,rate\n", self.alpha, self.seed);
        for p in &self.points {
            out.push_str(&format!("{},{},{},{:.4}\n", p.n_trials, p.replicates, p.detections, p.rate));
        }
        out
    }
}

/// Fraction of simulated sessions whose p-value falls below `alpha`, per
/// session length in `grid`.
pub fn power_analysis(
    model: &SubjectModel,
    config: &GameConfig,
    grid: &[u32],
    alpha: f64,
    replicates: u32,
    seed: u64,
    chance: ChanceLevel,
) -> Result<PowerReport, SimError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SimError::InvalidParameter(format!("alpha {alpha} outside (0, 1)")));
    }
    if replicates == 0 {
        return Err(SimError::InvalidParameter("at least one replicate".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    for &n in grid {
        if n == 0 {
            return Err(SimError::InvalidParameter("session length must be positive".into()));
        }
        let p = replicate_p_values(model, config, n, replicates, seed, chance)?;
        let detections = p.iter().filter(|&&p| p < alpha).count() as u32;
        points.push(PowerPoint { n_trials: n, replicates, detections, rate: f64::from(detections) / f64::from(replicates) });
    }
    Ok(PowerReport { alpha, seed, points })
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and Uniform(0, 1).
pub fn ks_uniform_statistic(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value `sqrt(-ln(alpha / 2) / 2) / sqrt(n)`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}
