//! On-line and batch evaluation of confidence predictors.
//!
//! At step `n` the predictor sees object `x_n` and outputs one prediction
//! set per significance level; the ledger then records whether each set
//! erred (missed `y_n`), was multiple or was empty. Which labels the
//! predictor learns afterwards is decided by a [`TeacherSchedule`].

use std::collections::HashSet;
use std::str::FromStr;

use rand::RngCore;

use crate::conformal::{prediction_set, Epsilon, KnnConformal, SmoothingTape, TransductiveClassifier};
use crate::error::{Error, Result};
use crate::nonconformity::NonconformityMeasure;
use crate::ridge::RidgeConfig;
use crate::rrcm::{rrcm_predict, RegressionPrediction};
use crate::types::{Dataset, Example, Interval, IntervalUnion, PredictionSet};

/// A predictor that can be driven by the on-line protocol.
pub trait ConfidencePredictor {
    /// Learns one labelled example.
    fn observe(&mut self, example: &Example) -> Result<()>;

    /// One prediction set per significance level. Smoothed predictors draw
    /// their tie-breaking variables from `rng`.
    fn predict(&mut self, object: &[f64], eps: &[Epsilon], rng: &mut dyn RngCore) -> Result<Vec<PredictionSet>>;
}

impl<M: NonconformityMeasure> ConfidencePredictor for TransductiveClassifier<M> {
    fn observe(&mut self, example: &Example) -> Result<()> {
        TransductiveClassifier::observe(self, example.clone())
    }

    fn predict(&mut self, object: &[f64], eps: &[Epsilon], rng: &mut dyn RngCore) -> Result<Vec<PredictionSet>> {
        let table = self.p_table(object, rng)?;
        Ok(eps.iter().map(|&e| prediction_set(&table, e)).collect())
    }
}

impl ConfidencePredictor for KnnConformal {
    fn observe(&mut self, example: &Example) -> Result<()> {
        KnnConformal::observe(self, example.clone())
    }

    fn predict(&mut self, object: &[f64], eps: &[Epsilon], rng: &mut dyn RngCore) -> Result<Vec<PredictionSet>> {
        let table = self.p_table(object, rng)?;
        Ok(eps.iter().map(|&e| prediction_set(&table, e)).collect())
    }
}

/// Ridge regression confidence machine driven on-line; outputs the convex
/// hull of each prediction set. Predicts the whole real line until the
/// first label arrives.
pub struct RrcmPredictor {
    training: Dataset,
    cfg: RidgeConfig,
}

impl RrcmPredictor {
    pub fn new(training: Dataset, cfg: RidgeConfig) -> Self {
        RrcmPredictor { training, cfg }
    }
}

impl ConfidencePredictor for RrcmPredictor {
    fn observe(&mut self, example: &Example) -> Result<()> {
        self.training.push(example.clone())
    }

    fn predict(&mut self, object: &[f64], eps: &[Epsilon], _rng: &mut dyn RngCore) -> Result<Vec<PredictionSet>> {
        let hulls: Vec<Option<Interval>> = if self.training.is_empty() {
            vec![Some(Interval::real_line()); eps.len()]
        } else {
            rrcm_predict(&self.training, object, &self.cfg, eps)?
                .into_iter()
                .map(|p: RegressionPrediction| p.hull)
                .collect()
        };
        hulls
            .into_iter()
            .map(|h| {
                IntervalUnion::new(h.into_iter().collect()).map(PredictionSet::Intervals)
            })
            .collect()
    }
}

/// When the true labels reach the predictor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TeacherSchedule {
    /// Label `n` right after step `n`.
    Immediate,
    /// Only labels of steps divisible by `period`, right after the step.
    Lazy { period: usize },
    /// Label `n` after the prediction at step `n + delay`.
    Slow { delay: usize },
    /// At the end of step `at`, reveal the label of example `example`
    /// (1-based); `at` strictly increasing.
    Explicit(Vec<Feedback>),
    /// Labels of the first `training` steps only.
    Batch { training: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Feedback {
    pub at: usize,
    pub example: usize,
}

impl TeacherSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            TeacherSchedule::Lazy { period: 0 } => {
                Err(Error::Schedule("lazy period must be at least 1".into()))
            }
            TeacherSchedule::Explicit(fb) => {
                for w in fb.windows(2) {
                    if w[0].at >= w[1].at {
                        return Err(Error::Schedule(format!(
                            "feedback steps must increase strictly ({} then {})",
                            w[0].at, w[1].at
                        )));
                    }
                }
                let mut seen = HashSet::new();
                for f in fb {
                    if f.example == 0 || f.at == 0 {
                        return Err(Error::Schedule("steps and examples are 1-based".into()));
                    }
                    if f.example > f.at {
                        return Err(Error::Schedule(format!(
                            "step {} reveals the label of unseen example {}",
                            f.at, f.example
                        )));
                    }
                    if !seen.insert(f.example) {
                        return Err(Error::Schedule(format!(
                            "label of example {} revealed twice",
                            f.example
                        )));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// 1-based examples whose labels are revealed at the end of `step`.
    fn revealed_after(&self, step: usize, cursor: &mut usize) -> Vec<usize> {
        match self {
            TeacherSchedule::Immediate => vec![step],
            TeacherSchedule::Lazy { period } => {
                if step.is_multiple_of(*period) {
                    vec![step]
                } else {
                    vec![]
                }
            }
            TeacherSchedule::Slow { delay } => {
                if step > *delay {
                    vec![step - delay]
                } else {
                    vec![]
                }
            }
            TeacherSchedule::Explicit(fb) => {
                let mut out = Vec::new();
                while *cursor < fb.len() && fb[*cursor].at == step {
                    out.push(fb[*cursor].example);
                    *cursor += 1;
                }
                out
            }
            TeacherSchedule::Batch { training } => {
                if step <= *training {
                    vec![step]
                } else {
                    vec![]
                }
            }
        }
    }
}

impl FromStr for TeacherSchedule {
    type Err = Error;

    /// `immediate`, `lazy:Q`, `slow:D`, `batch:L` or
    /// `explicit:STEP/EXAMPLE,STEP/EXAMPLE,...`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: Option<&str>| -> Result<usize> {
            a.ok_or_else(|| Error::Schedule(format!("schedule '{s}' needs a numeric argument")))?
                .parse::<usize>()
                .map_err(|_| Error::Schedule(format!("bad number in schedule '{s}'")))
        };
        let schedule = match kind {
            "immediate" => TeacherSchedule::Immediate,
            "lazy" => TeacherSchedule::Lazy { period: num(arg)? },
            "slow" => TeacherSchedule::Slow { delay: num(arg)? },
            "batch" => TeacherSchedule::Batch { training: num(arg)? },
            "explicit" => {
                let arg = arg.ok_or_else(|| Error::Schedule("explicit schedule needs feedback pairs".into()))?;
                let fb = arg
                    .split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(|p| {
                        let (at, ex) = p
                            .split_once('/')
                            .ok_or_else(|| Error::Schedule(format!("feedback '{p}' is not STEP/EXAMPLE")))?;
                        Ok(Feedback {
                            at: num(Some(at.trim()))?,
                            example: num(Some(ex.trim()))?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                TeacherSchedule::Explicit(fb)
            }
            other => return Err(Error::Schedule(format!("unknown teacher '{other}'"))),
        };
        schedule.validate()?;
        Ok(schedule)
    }
}

/// Per-step indicators at one significance level.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelRecord {
    pub eps: Epsilon,
    pub err: Vec<bool>,
    pub mult: Vec<bool>,
    pub emp: Vec<bool>,
}

/// Cumulative counts after one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Counts {
    pub err: u64,
    pub mult: u64,
    pub emp: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolLedger {
    steps: Vec<usize>,
    levels: Vec<LevelRecord>,
}

impl ProtocolLedger {
    pub fn new(eps: &[Epsilon]) -> Self {
        ProtocolLedger {
            steps: Vec::new(),
            levels: eps
                .iter()
                .map(|&eps| LevelRecord {
                    eps,
                    err: Vec::new(),
                    mult: Vec::new(),
                    emp: Vec::new(),
                })
                .collect(),
        }
    }

    /// Records one step's prediction sets (one per level) against `example`.
    pub fn record(&mut self, step: usize, example: &Example, sets: &[PredictionSet]) -> Result<()> {
        if sets.len() != self.levels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} prediction sets for {} levels",
                sets.len(),
                self.levels.len()
            )));
        }
        self.steps.push(step);
        for (lvl, set) in self.levels.iter_mut().zip(sets) {
            let emp = set.is_empty();
            lvl.err.push(emp || !set.contains(&example.label));
            lvl.mult.push(set.is_multiple());
            lvl.emp.push(emp);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Global (1-based) step number of each recorded prediction.
    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn levels(&self) -> &[LevelRecord] {
        &self.levels
    }

    pub fn level(&self, eps: Epsilon) -> Option<&LevelRecord> {
        self.levels.iter().find(|l| l.eps == eps)
    }

    /// `(Err_n, Mult_n, Emp_n)` after every recorded step.
    pub fn cumulative(&self, eps: Epsilon) -> Option<Vec<Counts>> {
        let lvl = self.level(eps)?;
        let mut acc = Counts::default();
        Some(
            (0..self.len())
                .map(|i| {
                    acc.err += lvl.err[i] as u64;
                    acc.mult += lvl.mult[i] as u64;
                    acc.emp += lvl.emp[i] as u64;
                    acc
                })
                .collect(),
        )
    }

    pub fn totals(&self, eps: Epsilon) -> Option<Counts> {
        let lvl = self.level(eps)?;
        let count = |v: &[bool]| v.iter().filter(|&&b| b).count() as u64;
        Some(Counts {
            err: count(&lvl.err),
            mult: count(&lvl.mult),
            emp: count(&lvl.emp),
        })
    }

    /// The records of steps numbered `first` and later.
    pub fn since(&self, first: usize) -> ProtocolLedger {
        let start = self.steps.partition_point(|&s| s < first);
        ProtocolLedger {
            steps: self.steps[start..].to_vec(),
            levels: self
                .levels
                .iter()
                .map(|l| LevelRecord {
                    eps: l.eps,
                    err: l.err[start..].to_vec(),
                    mult: l.mult[start..].to_vec(),
                    emp: l.emp[start..].to_vec(),
                })
                .collect(),
        }
    }
}

/// Runs the on-line protocol over `stream`.
pub fn run_online(
    stream: &[Example],
    predictor: &mut dyn ConfidencePredictor,
    eps_list: &[Epsilon],
    schedule: &TeacherSchedule,
    tape: &SmoothingTape,
) -> Result<ProtocolLedger> {
    schedule.validate()?;
    let mut ledger = ProtocolLedger::new(eps_list);
    let mut cursor = 0;
    let mut revealed = vec![false; stream.len()];
    for (i, example) in stream.iter().enumerate() {
        let step = i + 1;
        let mut rng = tape.substream(step as u64);
        let sets = predictor.predict(&example.object, eps_list, &mut rng)?;
        ledger.record(step, example, &sets)?;
        for idx in schedule.revealed_after(step, &mut cursor) {
            if idx == 0 || idx > step {
                return Err(Error::Schedule(format!(
                    "step {step} reveals the label of unseen example {idx}"
                )));
            }
            if std::mem::replace(&mut revealed[idx - 1], true) {
                return Err(Error::Schedule(format!("label of example {idx} revealed twice")));
            }
            predictor.observe(&stream[idx - 1])?;
        }
    }
    Ok(ledger)
}

/// Trains on `training`, then predicts every test example without feedback.
/// Test step numbers continue after the training steps, so a batch run and an
/// on-line run under `Batch { training: l }` share tie-breaking streams.
pub fn run_batch(
    training: &[Example],
    test: &[Example],
    predictor: &mut dyn ConfidencePredictor,
    eps_list: &[Epsilon],
    tape: &SmoothingTape,
) -> Result<ProtocolLedger> {
    for ex in training {
        predictor.observe(ex)?;
    }
    let mut ledger = ProtocolLedger::new(eps_list);
    for (j, example) in test.iter().enumerate() {
        let step = training.len() + j + 1;
        let mut rng = tape.substream(step as u64);
        let sets = predictor.predict(&example.object, eps_list, &mut rng)?;
        ledger.record(step, example, &sets)?;
    }
    Ok(ledger)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationReport {
    pub eps: Epsilon,
    pub n: usize,
    pub error_rate: f64,
    pub mult_rate: f64,
    pub empty_rate: f64,
    /// Least-squares slopes (through the origin) of `Err_n`, `Mult_n`,
    /// `Emp_n` against `n`.
    pub err_slope: f64,
    pub mult_slope: f64,
    pub empty_slope: f64,
    pub cumulative: Vec<Counts>,
}

pub fn calibration_report(ledger: &ProtocolLedger, eps: Epsilon) -> Result<CalibrationReport> {
    if ledger.is_empty() {
        return Err(Error::InvalidParameter("empty ledger".into()));
    }
    let cumulative = ledger
        .cumulative(eps)
        .ok_or_else(|| Error::InvalidParameter(format!("level {} not in ledger", eps.value())))?;
    let n = cumulative.len();
    let last = cumulative[n - 1];
    let sxx: f64 = (1..=n).map(|i| (i * i) as f64).sum();
    let slope = |f: fn(&Counts) -> u64| {
        cumulative
            .iter()
            .enumerate()
            .map(|(i, c)| (i + 1) as f64 * f(c) as f64)
            .sum::<f64>()
            / sxx
    };
    Ok(CalibrationReport {
        eps,
        n,
        error_rate: last.err as f64 / n as f64,
        mult_rate: last.mult as f64 / n as f64,
        empty_rate: last.emp as f64 / n as f64,
        err_slope: slope(|c| c.err),
        mult_slope: slope(|c| c.mult),
        empty_slope: slope(|c| c.emp),
        cumulative,
    })
}
