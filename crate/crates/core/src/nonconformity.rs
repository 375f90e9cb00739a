//! Nonconformity measures.
//!
//! A measure maps a data sequence to one strangeness score per example and
//! must commute with permutations of the sequence: swapping two examples
//! swaps their scores and leaves the rest untouched.

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::ridge::{self, RidgeConfig};
use crate::types::{ClassLabel, Dataset, Label};

/// Scores aligned with the order of the scored sequence. Entries are finite
/// or `+∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonconformityScores(pub Vec<f64>);

impl NonconformityScores {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub trait NonconformityMeasure {
    fn scores(&self, seq: &Dataset) -> Result<NonconformityScores>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KnnConfig {
    pub k: usize,
    pub kernel: KernelSpec,
}

impl KnnConfig {
    pub fn new(k: usize, kernel: KernelSpec) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        kernel.validate()?;
        Ok(KnnConfig { k, kernel })
    }
}

/// Ratio of the summed same-label to summed other-label neighbour distances,
/// with the conventions for empty classes and zero denominators.
pub(crate) fn knn_ratio(same_sum: f64, diff_sum: f64, n_same: usize, n_diff: usize) -> f64 {
    if n_diff == 0 {
        0.0
    } else if n_same == 0 {
        f64::INFINITY
    } else if diff_sum == 0.0 {
        if same_sum == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        same_sum / diff_sum
    }
}

/// Sum of an ascending list's first `m` entries, in ascending order.
pub(crate) fn sum_smallest(sorted: &[f64], m: usize) -> f64 {
    sorted[..m].iter().fold(0.0, |acc, d| acc + d)
}

/// k-nearest-neighbour distance-ratio scores.
///
/// `α_i = Σ_{j≤m} d⁺_ij / Σ_{j≤m} d⁻_ij` with `m = min(k, #same, #other)`.
/// No other-label examples gives 0; other-label examples but no same-label
/// ones gives `+∞`.
pub fn knn_scores(seq: &Dataset, cfg: &KnnConfig) -> Result<NonconformityScores> {
    if cfg.k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if seq.len() < 2 {
        return Err(Error::TooFewExamples {
            needed: 2,
            found: seq.len(),
        });
    }
    let labels = seq.class_labels()?;
    let ex = seq.examples();
    let n = ex.len();
    let mut same = Vec::with_capacity(n);
    let mut diff = Vec::with_capacity(n);
    let scores = (0..n)
        .map(|i| {
            same.clear();
            diff.clear();
            for j in (0..n).filter(|&j| j != i) {
                let d = cfg.kernel.distance(&ex[i].object, &ex[j].object);
                if labels[j] == labels[i] {
                    same.push(d);
                } else {
                    diff.push(d);
                }
            }
            same.sort_by(f64::total_cmp);
            diff.sort_by(f64::total_cmp);
            let m = cfg.k.min(same.len()).min(diff.len());
            knn_ratio(
                sum_smallest(&same, m),
                sum_smallest(&diff, m),
                same.len(),
                diff.len(),
            )
        })
        .collect();
    Ok(NonconformityScores(scores))
}

/// Absolute residuals `|y_i - f(x_i)|` of the ridge fit to the whole sequence.
pub fn residual_scores(seq: &Dataset, cfg: &RidgeConfig) -> Result<NonconformityScores> {
    let y = seq.real_labels()?;
    if y.is_empty() {
        return Err(Error::TooFewExamples { needed: 1, found: 0 });
    }
    let objects: Vec<&[f64]> = seq.examples().iter().map(|e| e.object.as_slice()).collect();
    let r = ridge::residuals(&objects, &y, seq.dim(), cfg)?;
    Ok(NonconformityScores(r.into_iter().map(f64::abs).collect()))
}

/// Discrepancy `Δ(y, ŷ)` between a label and a prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiscrepancySpec {
    /// `|y - ŷ|` for real labels.
    AbsoluteError,
    /// 0 when the class labels agree, 1 otherwise.
    ZeroOne,
}

impl DiscrepancySpec {
    pub fn eval(&self, y: &Label, predicted: &Label) -> Result<f64> {
        match (self, y, predicted) {
            (DiscrepancySpec::AbsoluteError, Label::Real(a), Label::Real(b)) => Ok((a - b).abs()),
            (DiscrepancySpec::ZeroOne, Label::Class(a), Label::Class(b)) => {
                Ok(if a == b { 0.0 } else { 1.0 })
            }
            (DiscrepancySpec::AbsoluteError, _, _) => Err(Error::LabelKind {
                expected: "real",
                found: if y.kind() == "real" { predicted.kind() } else { y.kind() },
            }),
            (DiscrepancySpec::ZeroOne, _, _) => Err(Error::LabelKind {
                expected: "class",
                found: if y.kind() == "class" { predicted.kind() } else { y.kind() },
            }),
        }
    }
}

/// `α_i = Δ(y_i, ŷ_i)` for (label, prediction) pairs.
pub fn delta_scores(pairs: &[(Label, Label)], delta: DiscrepancySpec) -> Result<NonconformityScores> {
    pairs
        .iter()
        .map(|(y, yhat)| delta.eval(y, yhat))
        .collect::<Result<Vec<_>>>()
        .map(NonconformityScores)
}

/// Measure adaptor over [`knn_scores`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KnnMeasure(pub KnnConfig);

impl NonconformityMeasure for KnnMeasure {
    fn scores(&self, seq: &Dataset) -> Result<NonconformityScores> {
        knn_scores(seq, &self.0)
    }
}

/// Measure adaptor over [`residual_scores`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualMeasure(pub RidgeConfig);

impl NonconformityMeasure for ResidualMeasure {
    fn scores(&self, seq: &Dataset) -> Result<NonconformityScores> {
        residual_scores(seq, &self.0)
    }
}

fn insert_bounded(list: &mut Vec<f64>, d: f64, cap: usize) {
    let pos = list.partition_point(|&x| x.total_cmp(&d).is_le());
    if pos < cap {
        list.insert(pos, d);
        list.truncate(cap);
    }
}

/// Sum of the `m` smallest entries of `sorted ∪ {extra}`, in ascending order.
fn sum_smallest_with(sorted: &[f64], extra: f64, m: usize, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend_from_slice(sorted);
    let pos = buf.partition_point(|&x| x.total_cmp(&extra).is_le());
    buf.insert(pos, extra);
    sum_smallest(buf, m)
}

struct Neighbours {
    same: Vec<f64>,
    diff: Vec<f64>,
}

/// Incrementally maintained k-NN state over a growing labelled sequence.
///
/// Produces exactly the scores of [`knn_scores`] on the completed sequence
/// in `O(l·k)` per candidate label instead of `O(l²)`.
pub struct KnnIndex {
    cfg: KnnConfig,
    alphabet: usize,
    objects: Vec<Vec<f64>>,
    labels: Vec<ClassLabel>,
    class_counts: Vec<usize>,
    neighbours: Vec<Neighbours>,
}

impl KnnIndex {
    pub fn new(cfg: KnnConfig, alphabet: usize) -> Self {
        KnnIndex {
            cfg,
            alphabet,
            objects: Vec::new(),
            labels: Vec::new(),
            class_counts: vec![0; alphabet],
            neighbours: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn config(&self) -> &KnnConfig {
        &self.cfg
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn insert(&mut self, object: Vec<f64>, label: ClassLabel) -> Result<()> {
        if label.0 >= self.alphabet {
            return Err(Error::UnknownLabel {
                label: label.0,
                alphabet: self.alphabet,
            });
        }
        let k = self.cfg.k;
        let mut own = Neighbours {
            same: Vec::with_capacity(k + 1),
            diff: Vec::with_capacity(k + 1),
        };
        for (i, other) in self.objects.iter().enumerate() {
            let d = self.cfg.kernel.distance(other, &object);
            let nb = &mut self.neighbours[i];
            if self.labels[i] == label {
                insert_bounded(&mut nb.same, d, k);
                insert_bounded(&mut own.same, d, k);
            } else {
                insert_bounded(&mut nb.diff, d, k);
                insert_bounded(&mut own.diff, d, k);
            }
        }
        self.objects.push(object);
        self.labels.push(label);
        self.class_counts[label.0] += 1;
        self.neighbours.push(own);
        Ok(())
    }

    /// Scores of the sequence completed with `(object, candidate)` for every
    /// candidate in alphabet order. Requires at least one stored example.
    pub fn completed_scores(&self, object: &[f64]) -> Vec<NonconformityScores> {
        let k = self.cfg.k;
        let n = self.len() + 1;
        let dist: Vec<f64> = self
            .objects
            .iter()
            .map(|o| self.cfg.kernel.distance(o, object))
            .collect();
        // k smallest distances from the test object to each class
        let mut per_class: Vec<Vec<f64>> = vec![Vec::with_capacity(k + 1); self.alphabet];
        for (d, y) in dist.iter().zip(&self.labels) {
            insert_bounded(&mut per_class[y.0], *d, k);
        }
        let mut buf = Vec::with_capacity(k + 1);
        (0..self.alphabet)
            .map(|cand| {
                let mut scores = Vec::with_capacity(n);
                for (i, nb) in self.neighbours.iter().enumerate() {
                    let yi = self.labels[i].0;
                    let mut n_same = self.class_counts[yi] - 1;
                    let mut n_diff = self.len() - self.class_counts[yi];
                    let (same_sum, diff_sum);
                    if yi == cand {
                        n_same += 1;
                        let m = k.min(n_same).min(n_diff);
                        same_sum = sum_smallest_with(&nb.same, dist[i], m, &mut buf);
                        diff_sum = sum_smallest(&nb.diff, m);
                    } else {
                        n_diff += 1;
                        let m = k.min(n_same).min(n_diff);
                        same_sum = sum_smallest(&nb.same, m);
                        diff_sum = sum_smallest_with(&nb.diff, dist[i], m, &mut buf);
                    }
                    scores.push(knn_ratio(same_sum, diff_sum, n_same, n_diff));
                }
                let n_same = self.class_counts[cand];
                let n_diff = self.len() - n_same;
                let m = k.min(n_same).min(n_diff);
                let mut diff: Vec<f64> = Vec::with_capacity(k * self.alphabet);
                for (c, list) in per_class.iter().enumerate() {
                    if c != cand {
                        diff.extend_from_slice(list);
                    }
                }
                diff.sort_by(f64::total_cmp);
                scores.push(knn_ratio(
                    sum_smallest(&per_class[cand], m),
                    sum_smallest(&diff, m),
                    n_same,
                    n_diff,
                ));
                NonconformityScores(scores)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Example, LabelSpace};

    fn classes(n: usize) -> LabelSpace {
        LabelSpace::classes((0..n).map(|i| format!("c{i}"))).unwrap()
    }

    fn knn1() -> KnnConfig {
        KnnConfig::new(1, KernelSpec::Linear).unwrap()
    }

    #[test]
    fn knn_hand_enumerated_ratio() {
        let d = Dataset::new(
            1,
            classes(2),
            vec![
                Example::class(vec![0.0], 0),
                Example::class(vec![1.0], 0),
                Example::class(vec![10.0], 1),
            ],
        )
        .unwrap();
        let s = knn_scores(&d, &knn1()).unwrap();
        assert_eq!(s.0[0], 1.0 / 10.0);
        assert_eq!(s.0[1], 1.0 / 9.0);
        // (10, B) has no same-label neighbour
        assert_eq!(s.0[2], f64::INFINITY);
    }

    #[test]
    fn knn_equidistant_is_one() {
        let d = Dataset::new(
            1,
            classes(2),
            vec![
                Example::class(vec![0.0], 0),
                Example::class(vec![-2.0], 0),
                Example::class(vec![2.0], 1),
            ],
        )
        .unwrap();
        assert_eq!(knn_scores(&d, &knn1()).unwrap().0[0], 1.0);
    }

    #[test]
    fn knn_single_class_scores_zero() {
        let d = Dataset::new(
            2,
            classes(3),
            (0..5).map(|i| Example::class(vec![i as f64, 1.0], 2)).collect(),
        )
        .unwrap();
        assert_eq!(knn_scores(&d, &KnnConfig::new(2, KernelSpec::Linear).unwrap()).unwrap().0, vec![0.0; 5]);
    }

    #[test]
    fn knn_truncates_to_available_neighbours() {
        // k = 3 but only one other-label example: both sums use one term
        let d = Dataset::new(
            1,
            classes(2),
            vec![
                Example::class(vec![0.0], 0),
                Example::class(vec![1.0], 0),
                Example::class(vec![3.0], 0),
                Example::class(vec![4.0], 1),
            ],
        )
        .unwrap();
        let s = knn_scores(&d, &KnnConfig::new(3, KernelSpec::Linear).unwrap()).unwrap();
        assert_eq!(s.0[0], 1.0 / 4.0);
        assert_eq!(s.0[2], 2.0 / 1.0);
    }

    #[test]
    fn knn_errors() {
        assert!(KnnConfig::new(0, KernelSpec::Linear).is_err());
        let one = Dataset::new(1, classes(2), vec![Example::class(vec![0.0], 0)]).unwrap();
        assert_eq!(
            knn_scores(&one, &knn1()),
            Err(Error::TooFewExamples { needed: 2, found: 1 })
        );
    }

    #[test]
    fn residual_examples() {
        let ls = LabelSpace::RealLine;
        let d = Dataset::new(1, ls.clone(), vec![Example::real(vec![1.0], 2.0)]).unwrap();
        let s0 = residual_scores(&d, &RidgeConfig::primal(0.0).unwrap()).unwrap();
        assert!(s0.0[0].abs() < 1e-15);
        let s1 = residual_scores(&d, &RidgeConfig::primal(1.0).unwrap()).unwrap();
        assert!((s1.0[0] - 1.0).abs() < 1e-15);

        let d = Dataset::new(
            2,
            ls,
            vec![
                Example::real(vec![1.0, 2.0], 3.0),
                Example::real(vec![-1.0, 0.5], -7.5),
                Example::real(vec![0.3, 0.3], 0.25),
            ],
        )
        .unwrap();
        let s = residual_scores(&d, &RidgeConfig::primal(1e12).unwrap()).unwrap();
        for (a, y) in s.0.iter().zip([3.0, 7.5, 0.25]) {
            assert!((a - y).abs() <= 1e-6 * y);
        }
    }

    #[test]
    fn residual_interpolates_square_full_rank_design() {
        let d = Dataset::new(
            2,
            LabelSpace::RealLine,
            vec![Example::real(vec![1.0, 2.0], 3.0), Example::real(vec![-1.0, 0.5], -7.5)],
        )
        .unwrap();
        let s = residual_scores(&d, &RidgeConfig::primal(0.0).unwrap()).unwrap();
        assert!(s.0.iter().all(|a| *a < 1e-12));
    }

    #[test]
    fn residual_rejects_class_labels() {
        let d = Dataset::new(1, classes(2), vec![Example::class(vec![0.0], 0)]).unwrap();
        assert!(matches!(
            residual_scores(&d, &RidgeConfig::primal(1.0).unwrap()),
            Err(Error::LabelKind { .. })
        ));
    }

    #[test]
    fn delta_examples() {
        let abs = delta_scores(&[(Label::Real(3.0), Label::Real(2.5))], DiscrepancySpec::AbsoluteError).unwrap();
        assert_eq!(abs.0, vec![0.5]);
        let a = Label::Class(ClassLabel(0));
        let b = Label::Class(ClassLabel(1));
        assert_eq!(delta_scores(&[(a, a), (a, b)], DiscrepancySpec::ZeroOne).unwrap().0, vec![0.0, 1.0]);
        assert!(delta_scores(&[(a, Label::Real(1.0))], DiscrepancySpec::ZeroOne).is_err());
        assert!(delta_scores(&[(a, a)], DiscrepancySpec::AbsoluteError).is_err());
    }
}
