//! Transductive conformal prediction for classification.

use std::collections::BTreeSet;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nonconformity::{KnnConfig, KnnIndex, NonconformityMeasure, NonconformityScores};
use crate::types::{
    check_object, ClassLabel, ConfidenceCredibility, Dataset, Example, Label, LabelSpace, PValueTable,
    PredictionSet,
};

/// Significance level in the open interval (0, 1); the confidence level is
/// `1 - ε`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Epsilon(f64);

impl Epsilon {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Epsilon(value))
        } else {
            Err(Error::InvalidParameter(format!("significance level {value} not in (0, 1)")))
        }
    }

    /// Significance level for a confidence level in (0, 1).
    pub fn from_confidence(level: f64) -> Result<Self> {
        Epsilon::new(1.0 - level)
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn confidence(&self) -> f64 {
        1.0 - self.0
    }
}

/// Seeded source of the uniform tie-breaking variables used by smoothed
/// p-values.
///
/// Each step (or test object) gets its own ChaCha stream derived from
/// `(seed, index)`, so results do not depend on evaluation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SmoothingTape {
    seed: u64,
}

impl SmoothingTape {
    pub fn new(seed: u64) -> Self {
        SmoothingTape { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn substream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// Draws one η ~ U[0, 1).
pub fn draw_eta(rng: &mut dyn RngCore) -> f64 {
    rng.random::<f64>()
}

/// Fraction of scores at least as large as the last (test) score.
pub fn p_value(scores: &NonconformityScores) -> Result<f64> {
    let s = scores.as_slice();
    let test = *s.last().ok_or(Error::EmptyScores)?;
    let ge = s.iter().filter(|&&a| a >= test).count();
    Ok(ge as f64 / s.len() as f64)
}

/// `(#{α_i > α_n} + η #{α_i = α_n}) / n`.
pub fn smoothed_p_value(scores: &NonconformityScores, eta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("eta {eta} outside [0, 1]")));
    }
    let s = scores.as_slice();
    let test = *s.last().ok_or(Error::EmptyScores)?;
    let gt = s.iter().filter(|&&a| a > test).count();
    let eq = s.iter().filter(|&&a| a == test).count();
    Ok((gt as f64 + eta * eq as f64) / s.len() as f64)
}

fn p_from_scores(scores: &NonconformityScores, eta: Option<&mut dyn RngCore>) -> Result<f64> {
    match eta {
        Some(rng) => smoothed_p_value(scores, draw_eta(rng)),
        None => p_value(scores),
    }
}

/// p-value of a candidate when the training sequence is empty: the test
/// example is compared only with itself.
fn lone_p(eta: Option<&mut dyn RngCore>) -> f64 {
    match eta {
        Some(rng) => draw_eta(rng),
        None => 1.0,
    }
}

/// p-values of every label in the alphabet for one test object.
///
/// With `eta` set, smoothed p-values are produced with one η per candidate,
/// drawn in alphabet order.
pub fn classify_p_table(
    training: &Dataset,
    object: &[f64],
    measure: &dyn NonconformityMeasure,
    mut eta: Option<&mut dyn RngCore>,
) -> Result<PValueTable> {
    let alphabet = match training.label_space() {
        LabelSpace::Classes(s) => s.len(),
        LabelSpace::RealLine => {
            return Err(Error::LabelKind {
                expected: "class",
                found: "real",
            })
        }
    };
    check_object(object, training.dim())?;
    let mut p = Vec::with_capacity(alphabet);
    for y in 0..alphabet {
        let rng = eta.as_mut().map(|r| &mut **r as &mut dyn RngCore);
        if training.is_empty() {
            p.push(lone_p(rng));
            continue;
        }
        let seq = training.complete(object, Label::Class(ClassLabel(y)))?;
        let scores = measure.scores(&seq)?;
        p.push(p_from_scores(&scores, rng)?);
    }
    PValueTable::new(p)
}

/// `Γ^ε = {Y : p_Y > ε}`.
pub fn prediction_set(table: &PValueTable, eps: Epsilon) -> PredictionSet {
    PredictionSet::Labels(
        table
            .iter()
            .filter(|&(_, p)| p > eps.value())
            .map(|(y, _)| y)
            .collect::<BTreeSet<_>>(),
    )
}

/// Predicted label (largest p-value, ties to the earliest label), confidence
/// `1 - (largest p among the other labels)` and credibility `max p`.
pub fn summarize(table: &PValueTable) -> Result<ConfidenceCredibility> {
    if table.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "summary needs at least 2 labels, got {}",
            table.len()
        )));
    }
    let p = table.values();
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    let runner_up = p
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ConfidenceCredibility {
        prediction: ClassLabel(best),
        confidence: 1.0 - runner_up,
        credibility: p[best],
    })
}

/// Transductive conformal classifier over an arbitrary measure. Recomputes
/// every score of each completed sequence.
pub struct TransductiveClassifier<M> {
    training: Dataset,
    measure: M,
    smoothed: bool,
}

impl<M: NonconformityMeasure> TransductiveClassifier<M> {
    pub fn new(training: Dataset, measure: M, smoothed: bool) -> Result<Self> {
        if !training.is_classification() {
            return Err(Error::LabelKind {
                expected: "class",
                found: "real",
            });
        }
        Ok(TransductiveClassifier {
            training,
            measure,
            smoothed,
        })
    }

    pub fn training(&self) -> &Dataset {
        &self.training
    }

    pub fn observe(&mut self, example: Example) -> Result<()> {
        self.training.push(example)
    }

    pub fn p_table(&self, object: &[f64], rng: &mut dyn RngCore) -> Result<PValueTable> {
        let eta = if self.smoothed { Some(rng) } else { None };
        classify_p_table(&self.training, object, &self.measure, eta)
    }
}

/// k-NN conformal classifier backed by an incrementally updated
/// [`KnnIndex`]. Yields the same p-values as a [`TransductiveClassifier`]
/// over [`crate::nonconformity::KnnMeasure`].
pub struct KnnConformal {
    index: KnnIndex,
    dim: usize,
    smoothed: bool,
}

impl KnnConformal {
    pub fn new(cfg: KnnConfig, dim: usize, alphabet: usize, smoothed: bool) -> Result<Self> {
        if cfg.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if alphabet < 2 {
            return Err(Error::InvalidParameter("alphabet needs at least 2 labels".into()));
        }
        Ok(KnnConformal {
            index: KnnIndex::new(cfg, alphabet),
            dim,
            smoothed,
        })
    }

    /// Builds the classifier from a training set.
    pub fn fit(training: &Dataset, cfg: KnnConfig, smoothed: bool) -> Result<Self> {
        let alphabet = training.label_space().alphabet_size().ok_or(Error::LabelKind {
            expected: "class",
            found: "real",
        })?;
        let mut c = KnnConformal::new(cfg, training.dim(), alphabet, smoothed)?;
        for ex in training.examples() {
            c.observe(ex.clone())?;
        }
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn observe(&mut self, example: Example) -> Result<()> {
        check_object(&example.object, self.dim)?;
        let label = example.label.as_class().ok_or(Error::LabelKind {
            expected: "class",
            found: "real",
        })?;
        self.index.insert(example.object, label)
    }

    pub fn p_table(&self, object: &[f64], rng: &mut dyn RngCore) -> Result<PValueTable> {
        check_object(object, self.dim)?;
        let mut eta = if self.smoothed { Some(rng) } else { None };
        if self.index.is_empty() {
            let p = (0..self.index.alphabet())
                .map(|_| lone_p(eta.as_mut().map(|r| &mut **r as &mut dyn RngCore)))
                .collect();
            return PValueTable::new(p);
        }
        let p = self
            .index
            .completed_scores(object)
            .iter()
            .map(|s| p_from_scores(s, eta.as_mut().map(|r| &mut **r as &mut dyn RngCore)))
            .collect::<Result<Vec<_>>>()?;
        PValueTable::new(p)
    }
}
