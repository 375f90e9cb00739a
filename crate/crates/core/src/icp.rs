//! Inductive conformal prediction: a rule is trained once on the proper
//! training set and judged against a fixed calibration set.

use std::collections::BTreeSet;
use std::fmt;

use crate::conformal::Epsilon;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::nonconformity::DiscrepancySpec;
use crate::ridge::{RidgeConfig, RidgeModel};
use crate::types::{check_object, ClassLabel, Dataset, Interval, IntervalUnion, Label, LabelSpace, PredictionSet};

/// A frozen prediction rule `F`.
pub trait PredictionRule: Send + Sync {
    fn predict(&self, object: &[f64]) -> Label;
}

/// Builds a rule from the proper training set.
pub trait Learner {
    fn fit(&self, proper: &Dataset) -> Result<Box<dyn PredictionRule>>;
}

/// Kernel (or primal) ridge regression learner.
#[derive(Clone, Copy, Debug)]
pub struct RidgeLearner(pub RidgeConfig);

struct RidgeRule(RidgeModel);

impl PredictionRule for RidgeRule {
    fn predict(&self, object: &[f64]) -> Label {
        Label::Real(self.0.predict(object))
    }
}

impl Learner for RidgeLearner {
    fn fit(&self, proper: &Dataset) -> Result<Box<dyn PredictionRule>> {
        let y = proper.real_labels()?;
        let objects: Vec<&[f64]> = proper.examples().iter().map(|e| e.object.as_slice()).collect();
        let model = RidgeModel::fit(&objects, &y, proper.dim(), &self.0)?;
        Ok(Box::new(RidgeRule(model)))
    }
}

/// 1-nearest-neighbour classifier; distance ties go to the earlier example.
#[derive(Clone, Copy, Debug, Default)]
pub struct NearestNeighbourLearner(pub KernelSpec);

struct NearestNeighbourRule {
    kernel: KernelSpec,
    objects: Vec<Vec<f64>>,
    labels: Vec<ClassLabel>,
}

impl PredictionRule for NearestNeighbourRule {
    fn predict(&self, object: &[f64]) -> Label {
        let mut best = (f64::INFINITY, self.labels[0]);
        for (o, y) in self.objects.iter().zip(&self.labels) {
            let d = self.kernel.distance(o, object);
            if d < best.0 {
                best = (d, *y);
            }
        }
        Label::Class(best.1)
    }
}

impl Learner for NearestNeighbourLearner {
    fn fit(&self, proper: &Dataset) -> Result<Box<dyn PredictionRule>> {
        self.0.validate()?;
        let labels = proper.class_labels()?;
        if labels.is_empty() {
            return Err(Error::TooFewExamples { needed: 1, found: 0 });
        }
        Ok(Box::new(NearestNeighbourRule {
            kernel: self.0,
            objects: proper.examples().iter().map(|e| e.object.clone()).collect(),
            labels,
        }))
    }
}

/// Default proper-training size `⌈2l/3⌉`.
pub fn default_split(l: usize) -> usize {
    (2 * l).div_ceil(3)
}

pub struct IcpModel {
    rule: Box<dyn PredictionRule>,
    calibration: Vec<f64>,
    delta: DiscrepancySpec,
    proper_size: usize,
    label_space: LabelSpace,
    dim: usize,
}

impl fmt::Debug for IcpModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IcpModel")
            .field("calibration", &self.calibration)
            .field("delta", &self.delta)
            .field("proper_size", &self.proper_size)
            .finish_non_exhaustive()
    }
}

impl IcpModel {
    /// Calibration scores, ascending.
    pub fn calibration_scores(&self) -> &[f64] {
        &self.calibration
    }

    pub fn proper_size(&self) -> usize {
        self.proper_size
    }

    pub fn calibration_size(&self) -> usize {
        self.calibration.len()
    }

    pub fn rule(&self) -> &dyn PredictionRule {
        self.rule.as_ref()
    }

    pub fn delta(&self) -> DiscrepancySpec {
        self.delta
    }
}

/// Trains `F` on the first `m` examples (`⌈2l/3⌉` when `split_m` is `None`)
/// and scores the remaining `l - m` as calibration examples.
pub fn icp_fit(
    training: &Dataset,
    split_m: Option<usize>,
    learner: &dyn Learner,
    delta: DiscrepancySpec,
) -> Result<IcpModel> {
    let l = training.len();
    let m = split_m.unwrap_or_else(|| default_split(l));
    if m == 0 || m >= l {
        return Err(Error::InvalidParameter(format!(
            "split size m = {m} must satisfy 1 <= m < l = {l}"
        )));
    }
    let (proper, calibration) = training.split_at(m);
    let rule = learner.fit(&proper)?;
    let mut scores = calibration
        .examples()
        .iter()
        .map(|e| delta.eval(&e.label, &rule.predict(&e.object)))
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(f64::total_cmp);
    Ok(IcpModel {
        rule,
        calibration: scores,
        delta,
        proper_size: m,
        label_space: training.label_space().clone(),
        dim: training.dim(),
    })
}

/// `(#{calibration scores ≥ α} + 1) / (l - m + 1)` by binary search.
pub fn p_value_against(calibration: &[f64], alpha: f64) -> f64 {
    let below = calibration.partition_point(|&s| s < alpha);
    (calibration.len() - below + 1) as f64 / (calibration.len() + 1) as f64
}

pub fn icp_p_value(model: &IcpModel, object: &[f64], candidate: Label) -> Result<f64> {
    check_object(object, model.dim)?;
    model.label_space.check(&candidate)?;
    let alpha = model.delta.eval(&candidate, &model.rule.predict(object))?;
    Ok(p_value_against(&model.calibration, alpha))
}

pub fn icp_predict(model: &IcpModel, object: &[f64], eps: Epsilon) -> Result<PredictionSet> {
    check_object(object, model.dim)?;
    match &model.label_space {
        LabelSpace::Classes(symbols) => {
            let prediction = model.rule.predict(object);
            let mut set = BTreeSet::new();
            for y in (0..symbols.len()).map(ClassLabel) {
                let alpha = model.delta.eval(&Label::Class(y), &prediction)?;
                if p_value_against(&model.calibration, alpha) > eps.value() {
                    set.insert(y);
                }
            }
            Ok(PredictionSet::Labels(set))
        }
        LabelSpace::RealLine => {
            if model.delta != DiscrepancySpec::AbsoluteError {
                return Err(Error::InvalidParameter(
                    "closed-form regression sets need the absolute-error discrepancy".into(),
                ));
            }
            let centre = model.rule.predict(object).as_real().ok_or(Error::LabelKind {
                expected: "real",
                found: "class",
            })?;
            let c = model.calibration.len();
            let n = (c + 1) as f64;
            // smallest count t of calibration scores ≥ α with (t + 1)/n > ε
            let t = (0..=c).find(|&t| (t + 1) as f64 / n > eps.value());
            let set = match t {
                None => IntervalUnion::empty(),
                Some(0) => IntervalUnion::new(vec![Interval::real_line()])?,
                Some(t) => {
                    let q = model.calibration[c - t];
                    IntervalUnion::new(vec![Interval::new(centre - q, centre + q)])?
                }
            };
            Ok(PredictionSet::Intervals(set))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Example;

    struct Constant(f64);

    impl PredictionRule for Constant {
        fn predict(&self, _: &[f64]) -> Label {
            Label::Real(self.0)
        }
    }

    struct ConstantLearner(f64);

    impl Learner for ConstantLearner {
        fn fit(&self, _: &Dataset) -> Result<Box<dyn PredictionRule>> {
            Ok(Box::new(Constant(self.0)))
        }
    }

    fn reg(points: &[(f64, f64)]) -> Dataset {
        Dataset::new(
            1,
            LabelSpace::RealLine,
            points.iter().map(|&(x, y)| Example::real(vec![x], y)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn minimal_split() {
        let d = reg(&[(0.0, 1.0), (1.0, 2.0)]);
        let m = icp_fit(&d, Some(1), &ConstantLearner(0.0), DiscrepancySpec::AbsoluteError).unwrap();
        assert_eq!(m.calibration_size(), 1);
        assert_eq!(m.proper_size(), 1);
    }

    #[test]
    fn constant_learner_scores_are_offsets() {
        let d = reg(&[(0.0, 9.0), (1.0, 4.0), (2.0, -1.0), (3.0, 2.5)]);
        let m = icp_fit(&d, Some(1), &ConstantLearner(2.0), DiscrepancySpec::AbsoluteError).unwrap();
        assert_eq!(m.calibration_scores(), &[0.5, 2.0, 3.0]);
    }

    #[test]
    fn split_out_of_range() {
        let d = reg(&[(0.0, 1.0), (1.0, 2.0)]);
        let l = ConstantLearner(0.0);
        assert!(icp_fit(&d, Some(0), &l, DiscrepancySpec::AbsoluteError).is_err());
        assert!(icp_fit(&d, Some(2), &l, DiscrepancySpec::AbsoluteError).is_err());
    }

    #[test]
    fn default_split_is_two_thirds_rounded_up() {
        assert_eq!(default_split(3), 2);
        assert_eq!(default_split(10), 7);
        assert_eq!(default_split(150), 100);
    }

    #[test]
    fn p_value_examples() {
        let cal = [1.0, 2.0, 3.0];
        assert_eq!(p_value_against(&cal, 2.5), 0.5);
        assert_eq!(p_value_against(&cal, 0.0), 1.0);
        assert_eq!(p_value_against(&cal, 10.0), 0.25);
    }

    fn calibrated(centre: f64) -> IcpModel {
        // calibration scores [1, 2, 3] around a constant rule
        let d = reg(&[(0.0, 0.0), (0.0, centre + 1.0), (0.0, centre - 2.0), (0.0, centre + 3.0)]);
        icp_fit(&d, Some(1), &ConstantLearner(centre), DiscrepancySpec::AbsoluteError).unwrap()
    }

    #[test]
    fn regression_interval_inverts_step_function() {
        let m = calibrated(5.0);
        assert_eq!(m.calibration_scores(), &[1.0, 2.0, 3.0]);
        let set = icp_predict(&m, &[0.0], Epsilon::new(0.5).unwrap()).unwrap();
        assert_eq!(
            set,
            PredictionSet::Intervals(IntervalUnion::new(vec![Interval::new(3.0, 7.0)]).unwrap())
        );
        // εn = 1.2 is not an integer: one score ≥ α suffices
        let set = icp_predict(&m, &[0.0], Epsilon::new(0.3).unwrap()).unwrap();
        assert_eq!(
            set,
            PredictionSet::Intervals(IntervalUnion::new(vec![Interval::new(2.0, 8.0)]).unwrap())
        );
        let set = icp_predict(&m, &[0.0], Epsilon::new(0.2).unwrap()).unwrap();
        assert_eq!(
            set,
            PredictionSet::Intervals(IntervalUnion::new(vec![Interval::real_line()]).unwrap())
        );
        // α at or below the smallest score always reaches p = 1
        let set = icp_predict(&m, &[0.0], Epsilon::new(0.99).unwrap()).unwrap();
        assert_eq!(
            set,
            PredictionSet::Intervals(IntervalUnion::new(vec![Interval::new(4.0, 6.0)]).unwrap())
        );
    }

    #[test]
    fn perfect_classifier_gives_unit_p_for_its_prediction() {
        let ls = LabelSpace::classes(["A", "B", "C"]).unwrap();
        let d = Dataset::new(
            1,
            ls,
            vec![
                Example::class(vec![0.0], 0),
                Example::class(vec![10.0], 1),
                Example::class(vec![0.1], 0),
                Example::class(vec![9.9], 1),
            ],
        )
        .unwrap();
        let m = icp_fit(&d, Some(2), &NearestNeighbourLearner::default(), DiscrepancySpec::ZeroOne).unwrap();
        assert_eq!(m.calibration_scores(), &[0.0, 0.0]);
        assert_eq!(icp_p_value(&m, &[0.2], Label::Class(ClassLabel(0))).unwrap(), 1.0);
        assert_eq!(icp_p_value(&m, &[0.2], Label::Class(ClassLabel(2))).unwrap(), 1.0 / 3.0);
        let set = icp_predict(&m, &[0.2], Epsilon::new(0.5).unwrap()).unwrap();
        assert_eq!(set, PredictionSet::Labels([ClassLabel(0)].into()));
        let all = icp_predict(&m, &[0.2], Epsilon::new(0.3).unwrap()).unwrap();
        assert_eq!(all, PredictionSet::Labels([0, 1, 2].map(ClassLabel).into()));
    }
}
