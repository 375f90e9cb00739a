//! Domain types shared by every predictor: examples, datasets, label
//! spaces, p-value tables and prediction sets.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Index of a symbol in a declared class alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassLabel(pub usize);

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Label {
    Class(ClassLabel),
    Real(f64),
}

impl Label {
    pub fn kind(&self) -> &'static str {
        match self {
            Label::Class(_) => "class",
            Label::Real(_) => "real",
        }
    }

    pub fn as_class(&self) -> Option<ClassLabel> {
        match *self {
            Label::Class(c) => Some(c),
            Label::Real(_) => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match *self {
            Label::Real(y) => Some(y),
            Label::Class(_) => None,
        }
    }
}

impl From<ClassLabel> for Label {
    fn from(c: ClassLabel) -> Self {
        Label::Class(c)
    }
}

/// The set of admissible labels. Class alphabets are declared up front so
/// that classes absent from the data still take part in prediction.
#[derive(Clone, Debug, PartialEq)]
pub enum LabelSpace {
    Classes(Arc<[String]>),
    RealLine,
}

impl LabelSpace {
    pub fn classes<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "class alphabet needs at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        let distinct: BTreeSet<&str> = symbols.iter().map(String::as_str).collect();
        if distinct.len() != symbols.len() {
            return Err(Error::InvalidParameter("duplicate symbol in class alphabet".into()));
        }
        Ok(LabelSpace::Classes(symbols.into()))
    }

    /// Alphabet size, or `None` for the real line.
    pub fn alphabet_size(&self) -> Option<usize> {
        match self {
            LabelSpace::Classes(s) => Some(s.len()),
            LabelSpace::RealLine => None,
        }
    }

    pub fn symbol(&self, label: ClassLabel) -> Option<&str> {
        match self {
            LabelSpace::Classes(s) => s.get(label.0).map(String::as_str),
            LabelSpace::RealLine => None,
        }
    }

    pub fn lookup(&self, symbol: &str) -> Option<ClassLabel> {
        match self {
            LabelSpace::Classes(s) => s.iter().position(|x| x == symbol).map(ClassLabel),
            LabelSpace::RealLine => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LabelSpace::Classes(_) => "class",
            LabelSpace::RealLine => "real",
        }
    }

    /// All class labels in declared order.
    pub fn class_labels(&self) -> impl Iterator<Item = ClassLabel> {
        (0..self.alphabet_size().unwrap_or(0)).map(ClassLabel)
    }

    pub fn check(&self, label: &Label) -> Result<()> {
        match (self, label) {
            (LabelSpace::Classes(s), Label::Class(c)) => {
                if c.0 < s.len() {
                    Ok(())
                } else {
                    Err(Error::UnknownLabel {
                        label: c.0,
                        alphabet: s.len(),
                    })
                }
            }
            (LabelSpace::RealLine, Label::Real(y)) => {
                if y.is_finite() {
                    Ok(())
                } else {
                    Err(Error::NonFinite {
                        context: "label".into(),
                    })
                }
            }
            _ => Err(Error::LabelKind {
                expected: self.kind(),
                found: label.kind(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub object: Vec<f64>,
    pub label: Label,
}

impl Example {
    pub fn new(object: Vec<f64>, label: Label) -> Self {
        Example { object, label }
    }

    pub fn class(object: Vec<f64>, label: usize) -> Self {
        Example::new(object, Label::Class(ClassLabel(label)))
    }

    pub fn real(object: Vec<f64>, label: f64) -> Self {
        Example::new(object, Label::Real(label))
    }
}

pub(crate) fn check_object(object: &[f64], dim: usize) -> Result<()> {
    if object.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: object.len(),
        });
    }
    if object.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "object features".into(),
        });
    }
    Ok(())
}

/// An ordered sequence of examples over a common dimension and label space.
/// Duplicates are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    examples: Vec<Example>,
    dim: usize,
    label_space: LabelSpace,
}

impl Dataset {
    pub fn new(dim: usize, label_space: LabelSpace, examples: Vec<Example>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        for ex in &examples {
            check_object(&ex.object, dim)?;
            label_space.check(&ex.label)?;
        }
        Ok(Dataset {
            examples,
            dim,
            label_space,
        })
    }

    pub fn empty(dim: usize, label_space: LabelSpace) -> Result<Self> {
        Dataset::new(dim, label_space, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn get(&self, i: usize) -> Option<&Example> {
        self.examples.get(i)
    }

    pub fn is_classification(&self) -> bool {
        matches!(self.label_space, LabelSpace::Classes(_))
    }

    /// Appends one example, validating it against the dataset's schema.
    pub fn push(&mut self, example: Example) -> Result<()> {
        check_object(&example.object, self.dim)?;
        self.label_space.check(&example.label)?;
        self.examples.push(example);
        Ok(())
    }

    /// The completed sequence `(x_1, y_1), ..., (x_l, y_l), (object, candidate)`.
    pub fn complete(&self, object: &[f64], candidate: Label) -> Result<Dataset> {
        check_object(object, self.dim)?;
        self.label_space.check(&candidate)?;
        let mut examples = Vec::with_capacity(self.examples.len() + 1);
        examples.extend_from_slice(&self.examples);
        examples.push(Example::new(object.to_vec(), candidate));
        Ok(Dataset {
            examples,
            dim: self.dim,
            label_space: self.label_space.clone(),
        })
    }

    /// Splits into the first `m` examples and the rest.
    pub fn split_at(&self, m: usize) -> (Dataset, Dataset) {
        let m = m.min(self.len());
        let make = |ex: &[Example]| Dataset {
            examples: ex.to_vec(),
            dim: self.dim,
            label_space: self.label_space.clone(),
        };
        (make(&self.examples[..m]), make(&self.examples[m..]))
    }

    pub(crate) fn real_labels(&self) -> Result<Vec<f64>> {
        self.examples
            .iter()
            .map(|e| {
                e.label.as_real().ok_or(Error::LabelKind {
                    expected: "real",
                    found: "class",
                })
            })
            .collect()
    }

    pub(crate) fn class_labels(&self) -> Result<Vec<ClassLabel>> {
        self.examples
            .iter()
            .map(|e| {
                e.label.as_class().ok_or(Error::LabelKind {
                    expected: "class",
                    found: "real",
                })
            })
            .collect()
    }
}

/// Free-function form of [`Dataset::complete`].
pub fn complete(training: &Dataset, object: &[f64], candidate: Label) -> Result<Dataset> {
    training.complete(object, candidate)
}

/// Per-candidate p-values for one test object, indexed by class label.
#[derive(Clone, Debug, PartialEq)]
pub struct PValueTable {
    p: Vec<f64>,
}

impl PValueTable {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("p-value {bad} outside [0, 1]")));
        }
        Ok(PValueTable { p })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn get(&self, label: ClassLabel) -> Option<f64> {
        self.p.get(label.0).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassLabel, f64)> + '_ {
        self.p.iter().enumerate().map(|(i, &p)| (ClassLabel(i), p))
    }
}

/// Closed interval with possibly infinite endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval [{lo}, {hi}] is reversed");
        Interval { lo, hi }
    }

    pub fn real_line() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lo <= y && y <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// Sorted union of pairwise disjoint closed intervals.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct IntervalUnion {
    parts: Vec<Interval>,
}

impl IntervalUnion {
    pub fn new(parts: Vec<Interval>) -> Result<Self> {
        for w in parts.windows(2) {
            if !(w[0].hi < w[1].lo) {
                return Err(Error::InvalidParameter(
                    "intervals must be sorted and pairwise disjoint".into(),
                ));
            }
        }
        if parts.iter().any(|iv| !(iv.lo <= iv.hi)) {
            return Err(Error::InvalidParameter("reversed interval".into()));
        }
        Ok(IntervalUnion { parts })
    }

    pub fn empty() -> Self {
        IntervalUnion { parts: Vec::new() }
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains(&self, y: f64) -> bool {
        // parts are sorted: find the last part starting at or before y
        let idx = self.parts.partition_point(|iv| iv.lo <= y);
        idx > 0 && self.parts[idx - 1].contains(y)
    }

    /// Smallest closed interval containing every part.
    pub fn hull(&self) -> Option<Interval> {
        Some(Interval::new(self.parts.first()?.lo, self.parts.last()?.hi))
    }

    /// True when the set holds more than one real number.
    pub fn is_multiple(&self) -> bool {
        self.parts.len() > 1 || self.parts.first().is_some_and(|iv| iv.lo < iv.hi)
    }

    pub fn is_subset_of(&self, other: &IntervalUnion) -> bool {
        self.parts
            .iter()
            .all(|iv| other.parts.iter().any(|o| o.contains_interval(iv)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PredictionSet {
    Labels(BTreeSet<ClassLabel>),
    Intervals(IntervalUnion),
}

impl PredictionSet {
    pub fn contains(&self, label: &Label) -> bool {
        match (self, label) {
            (PredictionSet::Labels(s), Label::Class(c)) => s.contains(c),
            (PredictionSet::Intervals(u), Label::Real(y)) => u.contains(*y),
            _ => false,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            PredictionSet::Labels(s) => s.is_empty(),
            PredictionSet::Intervals(u) => u.is_empty(),
        }
    }

    /// More than one label (or more than one point of the real line).
    pub fn is_multiple(&self) -> bool {
        match self {
            PredictionSet::Labels(s) => s.len() > 1,
            PredictionSet::Intervals(u) => u.is_multiple(),
        }
    }

    pub fn is_subset_of(&self, other: &PredictionSet) -> bool {
        match (self, other) {
            (PredictionSet::Labels(a), PredictionSet::Labels(b)) => a.is_subset(b),
            (PredictionSet::Intervals(a), PredictionSet::Intervals(b)) => a.is_subset_of(b),
            _ => false,
        }
    }
}

/// Point prediction with its confidence and credibility.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfidenceCredibility {
    pub prediction: ClassLabel,
    pub confidence: f64,
    pub credibility: f64,
}
