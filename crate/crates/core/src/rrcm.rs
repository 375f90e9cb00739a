//! Ridge regression confidence machine.
//!
//! Every residual of the ridge fit to the completed sequence is an affine
//! function of the candidate label `y`: `r_i(y) = a_i + b_i y`. The p-value
//! `p(y) = #{i : |r_i(y)| ≥ |r_n(y)|} / n` is therefore piecewise constant
//! with breakpoints at the roots of `(r_i - r_n)(r_i + r_n)`, and each
//! prediction set is computed exactly from those breakpoints.

use crate::conformal::Epsilon;
use crate::error::{Error, Result};
use crate::ridge::{ResidualOperator, RidgeConfig};
use crate::types::{check_object, Dataset, Interval, IntervalUnion};

/// Breakpoints closer than this are merged.
pub const ROOT_DEDUP_TOL: f64 = 1e-12;
/// Relative size below which a line coefficient difference counts as zero.
const COEF_TOL: f64 = 1e-12;

/// Residual `a + b y` of one example as a function of the candidate label.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualLine {
    pub intercept: f64,
    pub slope: f64,
}

impl ResidualLine {
    pub fn at(&self, y: f64) -> f64 {
        self.intercept + self.slope * y
    }
}

/// Lines `a_i + b_i y` for the sequence completed with `(object, y)`:
/// `a = (I - H)(y_1, …, y_l, 0)ᵀ`, `b = (I - H) e_n`.
pub fn residual_lines(training: &Dataset, object: &[f64], cfg: &RidgeConfig) -> Result<Vec<ResidualLine>> {
    if training.is_empty() {
        return Err(Error::TooFewExamples { needed: 1, found: 0 });
    }
    check_object(object, training.dim())?;
    let mut labels = training.real_labels()?;
    let mut objects: Vec<&[f64]> = training.examples().iter().map(|e| e.object.as_slice()).collect();
    objects.push(object);
    let op = ResidualOperator::new(&objects, training.dim(), cfg)?;
    labels.push(0.0);
    let a = op.apply(&labels);
    let mut unit = vec![0.0; labels.len()];
    *unit.last_mut().unwrap() = 1.0;
    let b = op.apply(&unit);
    Ok(a
        .into_iter()
        .zip(b)
        .map(|(intercept, slope)| ResidualLine { intercept, slope })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionPrediction {
    pub gamma: IntervalUnion,
    /// Convex hull of `gamma`; `None` when `gamma` is empty.
    pub hull: Option<Interval>,
}

impl RegressionPrediction {
    fn from_union(gamma: IntervalUnion) -> Self {
        let hull = gamma.hull();
        RegressionPrediction { gamma, hull }
    }

    /// Hull width: 0 for an empty set, `+∞` for an unbounded one.
    pub fn width(&self) -> f64 {
        self.hull.map_or(0.0, |h| h.width())
    }

    pub fn is_unbounded(&self) -> bool {
        self.hull.is_some_and(|h| !h.is_bounded())
    }
}

/// Sign of one linear factor over the sorted breakpoint regions.
#[derive(Clone, Copy, Debug)]
enum Factor {
    Constant(i8),
    /// Root at breakpoint `point`, increasing (`+1`) or decreasing (`-1`).
    Root { point: usize, slope: i8 },
}

impl Factor {
    /// Sign within region `r`: region `2g + 1` is breakpoint `g`, even regions
    /// are the open gaps around them.
    fn sign(&self, r: usize) -> i8 {
        match *self {
            Factor::Constant(s) => s,
            Factor::Root { point, slope } => {
                let at = 2 * point + 1;
                match r.cmp(&at) {
                    std::cmp::Ordering::Equal => 0,
                    std::cmp::Ordering::Greater => slope,
                    std::cmp::Ordering::Less => -slope,
                }
            }
        }
    }
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// The exact piecewise-constant p-value function `y ↦ p(y)`.
#[derive(Clone, Debug)]
pub struct PValueProfile {
    breakpoints: Vec<f64>,
    /// p-value per region: `2 * breakpoints.len() + 1` entries.
    region_p: Vec<f64>,
}

impl PValueProfile {
    pub fn new(lines: &[ResidualLine]) -> Result<Self> {
        let test = *lines.last().ok_or(Error::EmptyScores)?;
        let n = lines.len();

        // (intercept, slope) of (r_i - r_n) and (r_i + r_n)
        enum Raw {
            Constant(i8),
            Root(usize),
        }
        let mut roots: Vec<(f64, usize)> = Vec::new();
        let mut raw: Vec<[(Raw, i8); 2]> = Vec::with_capacity(n);
        for line in lines {
            let mut make = |d: f64, e: f64, a_scale: f64, b_scale: f64| -> (Raw, i8) {
                if e.abs() <= COEF_TOL * b_scale {
                    if d.abs() <= COEF_TOL * a_scale {
                        (Raw::Constant(0), 0)
                    } else {
                        (Raw::Constant(sign_of(d)), 0)
                    }
                } else {
                    let id = roots.len();
                    roots.push((-d / e, id));
                    (Raw::Root(id), sign_of(e))
                }
            };
            let a_scale = line.intercept.abs() + test.intercept.abs();
            let b_scale = line.slope.abs() + test.slope.abs();
            let f1 = make(line.intercept - test.intercept, line.slope - test.slope, a_scale, b_scale);
            let f2 = make(line.intercept + test.intercept, line.slope + test.slope, a_scale, b_scale);
            raw.push([f1, f2]);
        }

        roots.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut breakpoints: Vec<f64> = Vec::new();
        let mut group_of = vec![0usize; roots.len()];
        for &(value, id) in &roots {
            match breakpoints.last() {
                Some(&last) if value - last <= ROOT_DEDUP_TOL => {}
                _ => breakpoints.push(value),
            }
            group_of[id] = breakpoints.len() - 1;
        }

        let regions = 2 * breakpoints.len() + 1;
        let mut counts = vec![0usize; regions];
        for pair in &raw {
            let f: Vec<Factor> = pair
                .iter()
                .map(|(r, s)| match r {
                    Raw::Constant(c) => Factor::Constant(*c),
                    Raw::Root(id) => Factor::Root {
                        point: group_of[*id],
                        slope: *s,
                    },
                })
                .collect();
            for (r, c) in counts.iter_mut().enumerate() {
                if f[0].sign(r) * f[1].sign(r) >= 0 {
                    *c += 1;
                }
            }
        }
        let region_p = counts.into_iter().map(|c| c as f64 / n as f64).collect();
        Ok(PValueProfile {
            breakpoints,
            region_p,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `p(y)`, resolved against the stored breakpoints.
    pub fn p_at(&self, y: f64) -> f64 {
        let g = self.breakpoints.partition_point(|&c| c < y);
        let region = if g < self.breakpoints.len() && self.breakpoints[g] == y {
            2 * g + 1
        } else {
            2 * g
        };
        self.region_p[region]
    }

    /// `{y : p(y) > ε}` as a union of closed intervals.
    pub fn prediction_set(&self, eps: Epsilon) -> IntervalUnion {
        let bp = &self.breakpoints;
        let left = |r: usize| {
            if r % 2 == 1 {
                bp[r / 2]
            } else if r == 0 {
                f64::NEG_INFINITY
            } else {
                // p at a breakpoint never falls below p on the adjacent gaps,
                // so a run cannot open on a gap other than the first.
                bp[r / 2 - 1]
            }
        };
        let right = |r: usize| {
            if r % 2 == 1 {
                bp[r / 2]
            } else if r / 2 == bp.len() {
                f64::INFINITY
            } else {
                bp[r / 2]
            }
        };
        let mut parts = Vec::new();
        let mut start: Option<usize> = None;
        for (r, &p) in self.region_p.iter().enumerate() {
            let inside = p > eps.value();
            match (inside, start) {
                (true, None) => start = Some(r),
                (false, Some(s)) => {
                    parts.push(Interval::new(left(s), right(r - 1)));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            parts.push(Interval::new(left(s), right(self.region_p.len() - 1)));
        }
        IntervalUnion::new(parts).expect("regions are visited in increasing order")
    }
}

/// Exact prediction set and its hull for one significance level.
pub fn exact_interval(lines: &[ResidualLine], eps: Epsilon) -> Result<RegressionPrediction> {
    let profile = PValueProfile::new(lines)?;
    Ok(RegressionPrediction::from_union(profile.prediction_set(eps)))
}

/// RRCM prediction for several significance levels from a single solve.
pub fn rrcm_predict(
    training: &Dataset,
    object: &[f64],
    cfg: &RidgeConfig,
    eps_list: &[Epsilon],
) -> Result<Vec<RegressionPrediction>> {
    let lines = residual_lines(training, object, cfg)?;
    let profile = PValueProfile::new(&lines)?;
    Ok(eps_list
        .iter()
        .map(|&e| RegressionPrediction::from_union(profile.prediction_set(e)))
        .collect())
}
