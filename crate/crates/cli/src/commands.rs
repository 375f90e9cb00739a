//! One function per subcommand. Each builds its output in memory; writing
//! happens only after the whole computation succeeded.

use std::path::PathBuf;

use conformal_core::bayes::{replicate_bayes_comparison, ExperimentGrid, LinearModelSpec};
use conformal_core::{
    icp_fit, icp_p_value, icp_predict, rrcm_predict, run_batch, run_online, summarize, ConfidencePredictor, Dataset,
    DiscrepancySpec, Epsilon, IcpModel, KnnConformal, Label, LabelSpace, NearestNeighbourLearner, PValueTable,
    PredictionSet, ProtocolLedger, RidgeLearner, RrcmPredictor, SmoothingTape,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{CommandKind, MeasureSpec, RunConfig};
use crate::data::{load_csv, load_test, LabelSchema, TestRow};
use crate::error::{CliError, CliResult};
use crate::output::{num, Curves, Table};

/// Files to write (or the table to print) plus a one-line summary.
#[derive(Debug, PartialEq)]
pub struct Outcome {
    pub summary: String,
    /// Destination and contents; a `None` destination means standard output.
    pub files: Vec<(Option<PathBuf>, Vec<u8>)>,
}

pub fn execute(cfg: &RunConfig) -> CliResult<Outcome> {
    match cfg.command {
        CommandKind::Classify => classify(cfg),
        CommandKind::Regress => regress(cfg),
        CommandKind::Online => online(cfg),
        CommandKind::Batch => batch(cfg),
        CommandKind::Icp => icp(cfg),
        CommandKind::BayesCompare => bayes_compare(cfg),
    }
}

fn single(cfg: &RunConfig, summary: String, contents: Vec<u8>) -> Outcome {
    Outcome {
        summary,
        files: vec![(cfg.out.clone(), contents)],
    }
}

fn schema(cfg: &RunConfig) -> LabelSchema {
    match cfg.measure {
        MeasureSpec::Knn(_) => LabelSchema::Classes(cfg.labels.clone()),
        MeasureSpec::Ridge(_) => LabelSchema::Real,
    }
}

fn data_path(cfg: &RunConfig) -> &std::path::Path {
    cfg.data.as_deref().expect("checked when resolving")
}

fn test_path(cfg: &RunConfig) -> &std::path::Path {
    cfg.test.as_deref().expect("checked when resolving")
}

fn symbols(space: &LabelSpace) -> Vec<String> {
    space.class_labels().map(|y| space.symbol(y).unwrap_or_default().to_owned()).collect()
}

fn set_cell(set: &PredictionSet, space: &LabelSpace) -> String {
    match set {
        PredictionSet::Labels(s) => s.iter().map(|&y| space.symbol(y).unwrap_or_default()).collect::<Vec<_>>().join(";"),
        PredictionSet::Intervals(u) => u
            .parts()
            .iter()
            .map(|iv| format!("[{},{}]", num(iv.lo), num(iv.hi)))
            .collect::<Vec<_>>()
            .join(";"),
    }
}

fn label_cell(label: &Label, space: &LabelSpace) -> String {
    match label {
        Label::Class(y) => space.symbol(*y).unwrap_or_default().to_owned(),
        Label::Real(v) => num(*v),
    }
}

/// Error / multiple / empty rates of labelled predictions, per level.
struct Tally {
    eps: Vec<Epsilon>,
    n: usize,
    err: Vec<usize>,
    mult: Vec<usize>,
    emp: Vec<usize>,
    width: Vec<f64>,
}

impl Tally {
    fn new(eps: &[Epsilon]) -> Self {
        Tally {
            eps: eps.to_vec(),
            n: 0,
            err: vec![0; eps.len()],
            mult: vec![0; eps.len()],
            emp: vec![0; eps.len()],
            width: vec![0.0; eps.len()],
        }
    }

    fn add(&mut self, sets: &[PredictionSet], label: Option<&Label>) {
        self.n += 1;
        for (i, s) in sets.iter().enumerate() {
            if let Some(y) = label {
                self.err[i] += (!s.contains(y)) as usize;
            }
            self.mult[i] += s.is_multiple() as usize;
            self.emp[i] += s.is_empty() as usize;
            if let PredictionSet::Intervals(u) = s {
                self.width[i] += u.hull().map_or(0.0, |h| h.width());
            }
        }
    }

    fn summary(&self, head: &str, labelled: bool, widths: bool) -> String {
        let mut parts = vec![format!("{head} n={}", self.n)];
        let rate = |c: usize| num(c as f64 / self.n.max(1) as f64);
        for (i, e) in self.eps.iter().enumerate() {
            let mut s = format!("eps={}", num(e.value()));
            if labelled {
                s += &format!(" err={}", rate(self.err[i]));
            }
            if widths {
                s += &format!(" width={}", num(self.width[i] / self.n.max(1) as f64));
            } else {
                s += &format!(" mult={} emp={}", rate(self.mult[i]), rate(self.emp[i]));
            }
            parts.push(s);
        }
        parts.join(" | ")
    }
}

fn ledger_summary(head: &str, ledger: &ProtocolLedger) -> String {
    let n = ledger.len();
    let mut parts = vec![format!("{head} n={n}")];
    for lvl in ledger.levels() {
        let c = ledger.totals(lvl.eps).unwrap_or_default();
        let rate = |x: u64| num(x as f64 / n.max(1) as f64);
        parts.push(format!(
            "eps={} err={} mult={} emp={}",
            num(lvl.eps.value()),
            rate(c.err),
            rate(c.mult),
            rate(c.emp)
        ));
    }
    parts.join(" | ")
}

/// Columns `n, Err_ε, Mult_ε, Emp_ε` (per level) of the cumulative counters.
fn ledger_curves(ledger: &ProtocolLedger) -> CliResult<Vec<u8>> {
    let mut curves = Curves::new("n", (1..=ledger.len()).map(|i| i as f64).collect());
    for lvl in ledger.levels() {
        let cum = ledger.cumulative(lvl.eps).unwrap_or_default();
        let tag = num(lvl.eps.value());
        curves.push(format!("Err_{tag}"), cum.iter().map(|c| c.err as f64).collect());
        curves.push(format!("Mult_{tag}"), cum.iter().map(|c| c.mult as f64).collect());
        curves.push(format!("Emp_{tag}"), cum.iter().map(|c| c.emp as f64).collect());
    }
    curves.to_csv()
}

/// Header and row layout shared by transductive and inductive classification.
fn class_table(space: &LabelSpace, eps: &[Epsilon], labelled: bool) -> Table {
    let mut header = vec!["row".to_owned()];
    header.extend(symbols(space).iter().map(|s| format!("p_{s}")));
    header.extend(["prediction", "confidence", "credibility"].map(String::from));
    if labelled {
        header.push("label".into());
    }
    header.extend(eps.iter().map(|e| format!("set_{}", num(e.value()))));
    Table::new(header)
}

fn class_row(
    i: usize,
    table: &PValueTable,
    sets: &[PredictionSet],
    row: &TestRow,
    space: &LabelSpace,
) -> CliResult<Vec<String>> {
    let summary = summarize(table)?;
    let mut cells = vec![(i + 1).to_string()];
    cells.extend(table.values().iter().map(|&p| num(p)));
    cells.push(space.symbol(summary.prediction).unwrap_or_default().to_owned());
    cells.push(num(summary.confidence));
    cells.push(num(summary.credibility));
    if let Some(y) = &row.label {
        cells.push(label_cell(y, space));
    }
    cells.extend(sets.iter().map(|s| set_cell(s, space)));
    Ok(cells)
}

fn interval_table(eps: &[Epsilon], labelled: bool) -> Table {
    let mut header = vec!["row".to_owned()];
    if labelled {
        header.push("label".into());
    }
    for e in eps {
        let tag = num(e.value());
        header.extend([format!("lo_{tag}"), format!("hi_{tag}"), format!("set_{tag}")]);
    }
    Table::new(header)
}

fn interval_row(i: usize, sets: &[PredictionSet], row: &TestRow) -> Vec<String> {
    let mut cells = vec![(i + 1).to_string()];
    if let Some(y) = &row.label {
        cells.push(label_cell(y, &LabelSpace::RealLine));
    }
    for s in sets {
        let hull = match s {
            PredictionSet::Intervals(u) => u.hull(),
            PredictionSet::Labels(_) => None,
        };
        match hull {
            Some(h) => cells.extend([num(h.lo), num(h.hi)]),
            None => cells.extend([String::new(), String::new()]),
        }
        cells.push(set_cell(s, &LabelSpace::RealLine));
    }
    cells
}

fn labelled(rows: &[TestRow]) -> bool {
    rows.first().is_some_and(|r| r.label.is_some())
}

fn classify(cfg: &RunConfig) -> CliResult<Outcome> {
    let MeasureSpec::Knn(knn) = &cfg.measure else {
        unreachable!("checked when resolving")
    };
    let training = load_csv(data_path(cfg), &schema(cfg))?;
    let space = training.label_space().clone();
    let rows = load_test(test_path(cfg), training.dim(), &space)?;
    let model = KnnConformal::fit(&training, *knn, cfg.smoothed)?;
    let tape = SmoothingTape::new(cfg.seed);
    let mut table = class_table(&space, &cfg.eps, labelled(&rows));
    let mut tally = Tally::new(&cfg.eps);
    for (i, row) in rows.iter().enumerate() {
        let p = model.p_table(&row.object, &mut tape.substream(i as u64))?;
        let sets: Vec<_> = cfg.eps.iter().map(|&e| conformal_core::prediction_set(&p, e)).collect();
        table.row(class_row(i, &p, &sets, row, &space)?);
        tally.add(&sets, row.label.as_ref());
    }
    Ok(single(cfg, tally.summary("classify", labelled(&rows), false), table.to_csv()?))
}

fn regress(cfg: &RunConfig) -> CliResult<Outcome> {
    let MeasureSpec::Ridge(ridge) = &cfg.measure else {
        unreachable!("checked when resolving")
    };
    let training = load_csv(data_path(cfg), &LabelSchema::Real)?;
    let rows = load_test(test_path(cfg), training.dim(), &LabelSpace::RealLine)?;
    let mut table = interval_table(&cfg.eps, labelled(&rows));
    let mut tally = Tally::new(&cfg.eps);
    for (i, row) in rows.iter().enumerate() {
        let preds = rrcm_predict(&training, &row.object, ridge, &cfg.eps)?;
        let sets: Vec<_> = preds.into_iter().map(|p| PredictionSet::Intervals(p.gamma)).collect();
        table.row(interval_row(i, &sets, row));
        tally.add(&sets, row.label.as_ref());
    }
    Ok(single(cfg, tally.summary("regress", labelled(&rows), true), table.to_csv()?))
}

fn predictor(cfg: &RunConfig, data: &Dataset) -> CliResult<Box<dyn ConfidencePredictor>> {
    match &cfg.measure {
        MeasureSpec::Knn(knn) => {
            let alphabet = data.label_space().alphabet_size().expect("class data");
            Ok(Box::new(KnnConformal::new(*knn, data.dim(), alphabet, cfg.smoothed)?))
        }
        MeasureSpec::Ridge(ridge) => {
            if cfg.smoothed {
                return Err(CliError::Usage("--smoothed applies to classification only".into()));
            }
            Ok(Box::new(RrcmPredictor::new(Dataset::empty(data.dim(), LabelSpace::RealLine)?, *ridge)))
        }
    }
}

fn online(cfg: &RunConfig) -> CliResult<Outcome> {
    let data = load_csv(data_path(cfg), &schema(cfg))?;
    let mut stream = data.examples().to_vec();
    if cfg.shuffle {
        stream.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    }
    let mut p = predictor(cfg, &data)?;
    let ledger = run_online(&stream, p.as_mut(), &cfg.eps, &cfg.teacher, &SmoothingTape::new(cfg.seed))?;
    Ok(single(cfg, ledger_summary("online", &ledger), ledger_curves(&ledger)?))
}

fn batch(cfg: &RunConfig) -> CliResult<Outcome> {
    let training = load_csv(data_path(cfg), &schema(cfg))?;
    let test_schema = match training.label_space() {
        LabelSpace::Classes(_) => LabelSchema::Classes(Some(symbols(training.label_space()))),
        LabelSpace::RealLine => LabelSchema::Real,
    };
    let test = load_csv(test_path(cfg), &test_schema)?;
    if test.dim() != training.dim() {
        return Err(CliError::Data(format!(
            "{}: {} features, training has {}",
            test_path(cfg).display(),
            test.dim(),
            training.dim()
        )));
    }
    let mut p = predictor(cfg, &training)?;
    let ledger = run_batch(training.examples(), test.examples(), p.as_mut(), &cfg.eps, &SmoothingTape::new(cfg.seed))?;
    Ok(single(cfg, ledger_summary("batch", &ledger), ledger_curves(&ledger)?))
}

fn icp_model(cfg: &RunConfig, training: &Dataset) -> CliResult<IcpModel> {
    Ok(match &cfg.measure {
        MeasureSpec::Knn(knn) => icp_fit(
            training,
            cfg.split_m,
            &NearestNeighbourLearner(knn.kernel),
            DiscrepancySpec::ZeroOne,
        )?,
        MeasureSpec::Ridge(ridge) => icp_fit(training, cfg.split_m, &RidgeLearner(*ridge), DiscrepancySpec::AbsoluteError)?,
    })
}

fn icp(cfg: &RunConfig) -> CliResult<Outcome> {
    let training = load_csv(data_path(cfg), &schema(cfg))?;
    let space = training.label_space().clone();
    let rows = load_test(test_path(cfg), training.dim(), &space)?;
    let model = icp_model(cfg, &training)?;
    let mut tally = Tally::new(&cfg.eps);
    let classes = space.alphabet_size().is_some();
    let mut table = if classes {
        class_table(&space, &cfg.eps, labelled(&rows))
    } else {
        interval_table(&cfg.eps, labelled(&rows))
    };
    for (i, row) in rows.iter().enumerate() {
        let sets = cfg
            .eps
            .iter()
            .map(|&e| icp_predict(&model, &row.object, e))
            .collect::<conformal_core::Result<Vec<_>>>()?;
        if classes {
            let p = space
                .class_labels()
                .map(|y| icp_p_value(&model, &row.object, Label::Class(y)))
                .collect::<conformal_core::Result<Vec<_>>>()?;
            table.row(class_row(i, &PValueTable::new(p)?, &sets, row, &space)?);
        } else {
            table.row(interval_row(i, &sets, row));
        }
        tally.add(&sets, row.label.as_ref());
    }
    let head = format!("icp m={} c={}", model.proper_size(), model.calibration_size());
    Ok(single(cfg, tally.summary(&head, labelled(&rows), !classes), table.to_csv()?))
}

fn bayes_compare(cfg: &RunConfig) -> CliResult<Outcome> {
    let grid = ExperimentGrid {
        trials: cfg.trials,
        a_values: cfg.a_assumed.clone(),
        ..ExperimentGrid::default()
    };
    let curves = replicate_bayes_comparison(&grid, &LinearModelSpec::default(), cfg.seed)?;
    let dir = cfg.out.clone().expect("checked when resolving");
    let family = |pick: &dyn Fn(usize) -> Vec<f64>| -> CliResult<Vec<u8>> {
        let mut c = Curves::new("level", curves.levels.clone());
        for (i, a) in curves.a_values.iter().enumerate() {
            c.push(format!("a_{}", num(*a)), pick(i));
        }
        c.to_csv()
    };
    let files = vec![
        (dir.join("rrcm_validity.csv"), family(&|i| curves.rrcm[i].miscoverage.clone())?),
        (dir.join("rrcm_efficiency.csv"), family(&|i| curves.rrcm[i].mean_width.clone())?),
        (dir.join("bayes_validity.csv"), family(&|i| curves.bayes[i].miscoverage.clone())?),
        (dir.join("bayes_efficiency.csv"), family(&|i| curves.bayes[i].mean_width.clone())?),
    ];
    let summary = format!(
        "bayes-compare trials={} levels={} predictions={} a={} -> {}",
        grid.trials,
        curves.levels.len(),
        curves.predictions,
        curves.a_values.iter().map(|a| num(*a)).collect::<Vec<_>>().join(","),
        dir.display()
    );
    Ok(Outcome {
        summary,
        files: files.into_iter().map(|(p, c)| (Some(p), c)).collect(),
    })
}
