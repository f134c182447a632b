//! Full-factorial designs, stepwise response-surface regression, ANOVA and
//! desirability search.
//!
//! Continuous factors are coded linearly onto [-1, 1] over their level range
//! and two-level categorical factors onto {-1, +1}. Squared terms exist only
//! for continuous factors with at least three levels; with two levels the
//! square is the constant column and would alias the intercept.

use std::collections::HashSet;
use std::fmt;
use std::io::Read;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_ALPHA: f64 = 0.15;

/// Sums of squares below this fraction of the uncentered response energy are
/// treated as exact zeros.
const SS_RELATIVE_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum DoeError {
    #[error("invalid factor '{name}': {reason}")]
    InvalidFactor { name: String, reason: String },
    #[error("design needs at least one factor")]
    EmptyDesign,
    #[error("replications must be at least 1")]
    NoReplications,
    #[error("categorical factor '{0}' has more than 2 levels; only two-level categories are supported")]
    UnsupportedCategorical(String),
    #[error("aliased terms: {}", .0.join(", "))]
    Aliased(Vec<String>),
    #[error("no residual degrees of freedom (perfect fit); p-values are undefined")]
    PerfectFit,
    #[error("response has zero total variance")]
    ZeroVariance,
    #[error("invalid observations: {0}")]
    InvalidObservations(String),
    #[error("empty desirability grid")]
    EmptyGrid,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Level {
    Number(f64),
    Label(String),
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Number(x) => write!(f, "{x}"),
            Level::Label(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Factor {
    pub name: String,
    pub kind: FactorKind,
    pub levels: Vec<Level>,
    /// Column holding this factor in observation files; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
}

impl Factor {
    pub fn continuous(name: &str, levels: &[f64]) -> Result<Self, DoeError> {
        let f = Self {
            name: name.into(),
            kind: FactorKind::Continuous,
            levels: levels.iter().map(|&x| Level::Number(x)).collect(),
            column: None,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn categorical(name: &str, levels: &[&str]) -> Result<Self, DoeError> {
        let f = Self {
            name: name.into(),
            kind: FactorKind::Categorical,
            levels: levels.iter().map(|s| Level::Label((*s).into())).collect(),
            column: None,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn with_column(mut self, column: &str) -> Self {
        self.column = Some(column.into());
        self
    }

    pub fn column(&self) -> &str {
        self.column.as_deref().unwrap_or(&self.name)
    }

    pub fn validate(&self) -> Result<(), DoeError> {
        let bad = |reason: &str| DoeError::InvalidFactor {
            name: self.name.clone(),
            reason: reason.into(),
        };
        if self.name.is_empty() || self.name.contains('*') {
            return Err(bad("name must be non-empty and contain no '*'"));
        }
        if self.levels.len() < 2 {
            return Err(bad("needs at least 2 levels"));
        }
        match self.kind {
            FactorKind::Continuous => {
                let xs = self.numeric_levels().ok_or_else(|| bad("continuous levels must be numbers"))?;
                if xs.iter().any(|x| !x.is_finite()) || xs.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(bad("continuous levels must be finite and strictly increasing"));
                }
            }
            FactorKind::Categorical => {
                let mut seen = HashSet::new();
                for l in &self.levels {
                    match l {
                        Level::Label(s) if seen.insert(s.as_str()) => {}
                        Level::Label(_) => return Err(bad("duplicate level label")),
                        Level::Number(_) => return Err(bad("categorical levels must be labels")),
                    }
                }
            }
        }
        Ok(())
    }

    fn numeric_levels(&self) -> Option<Vec<f64>> {
        self.levels
            .iter()
            .map(|l| match l {
                Level::Number(x) => Some(*x),
                Level::Label(_) => None,
            })
            .collect()
    }

    /// Coded value of an arbitrary setting. Continuous values may lie
    /// outside the level range (extrapolation); categorical labels must match.
    pub fn code(&self, level: &Level) -> Option<f64> {
        match (self.kind, level) {
            (FactorKind::Continuous, Level::Number(x)) => {
                let xs = self.numeric_levels()?;
                let (lo, hi) = (xs[0], xs[xs.len() - 1]);
                Some(2.0 * (x - lo) / (hi - lo) - 1.0)
            }
            (FactorKind::Categorical, Level::Label(s)) => {
                let i = self.levels.iter().position(|l| matches!(l, Level::Label(t) if t == s))?;
                Some(if i == 0 { -1.0 } else { 1.0 })
            }
            _ => None,
        }
    }

    fn has_square(&self) -> bool {
        self.kind == FactorKind::Continuous && self.levels.len() >= 3
    }

    fn find_level(&self, raw: &str) -> Option<usize> {
        let raw = raw.trim();
        match self.kind {
            FactorKind::Continuous => {
                let x: f64 = raw.parse().ok()?;
                self.levels
                    .iter()
                    .position(|l| matches!(l, Level::Number(v) if (v - x).abs() <= 1e-9 * v.abs().max(1.0)))
            }
            FactorKind::Categorical => self
                .levels
                .iter()
                .position(|l| matches!(l, Level::Label(s) if s.eq_ignore_ascii_case(raw))),
        }
    }
}

/// The wheel/maneuvering-effort experiment: front and rear wheel diameters
/// (mm), load (kg), floor type and effort type.
pub fn wheel_experiment_factors() -> Vec<Factor> {
    vec![
        Factor::continuous("FW", &[605.0, 655.0, 695.0]).unwrap().with_column("fw_mm"),
        Factor::continuous("RW", &[155.0, 240.0]).unwrap().with_column("rw_mm"),
        Factor::continuous("MW", &[0.0, 48.5, 97.0]).unwrap().with_column("load_kg"),
        Factor::categorical("FT", &["asphalt", "cement"]).unwrap().with_column("floor"),
        Factor::categorical("ET", &["push", "pull"]).unwrap().with_column("effort_type"),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Run {
    /// Level index per factor.
    pub levels: Vec<usize>,
    /// 0-based replicate.
    pub replicate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorialDesign {
    factors: Vec<Factor>,
    replications: usize,
    runs: Vec<Run>,
}

impl FactorialDesign {
    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn replications(&self) -> usize {
        self.replications
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    fn coded_run(&self, run: &Run) -> Vec<f64> {
        self.factors
            .iter()
            .zip(&run.levels)
            .map(|(f, &i)| f.code(&f.levels[i]).expect("valid level"))
            .collect()
    }
}

/// Full cross product of factor levels times `replications`, in
/// lexicographic order: first factor slowest, replicate fastest.
pub fn generate_design(factors: &[Factor], replications: usize) -> Result<FactorialDesign, DoeError> {
    if factors.is_empty() {
        return Err(DoeError::EmptyDesign);
    }
    if replications == 0 {
        return Err(DoeError::NoReplications);
    }
    let mut names = HashSet::new();
    for f in factors {
        f.validate()?;
        if !names.insert(f.name.as_str()) {
            return Err(DoeError::InvalidFactor {
                name: f.name.clone(),
                reason: "duplicate factor name".into(),
            });
        }
    }
    let mut runs = Vec::new();
    let mut idx = vec![0usize; factors.len()];
    'cells: loop {
        for r in 0..replications {
            runs.push(Run {
                levels: idx.clone(),
                replicate: r,
            });
        }
        for k in (0..factors.len()).rev() {
            idx[k] += 1;
            if idx[k] < factors[k].levels.len() {
                continue 'cells;
            }
            idx[k] = 0;
        }
        break;
    }
    Ok(FactorialDesign {
        factors: factors.to_vec(),
        replications,
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservationSet {
    design: FactorialDesign,
    response: Vec<f64>,
}

impl ObservationSet {
    pub fn new(design: FactorialDesign, response: Vec<f64>) -> Result<Self, DoeError> {
        if response.len() != design.runs.len() {
            return Err(DoeError::InvalidObservations(format!(
                "{} responses for {} runs",
                response.len(),
                design.runs.len()
            )));
        }
        if let Some(y) = response.iter().find(|y| !y.is_finite()) {
            return Err(DoeError::InvalidObservations(format!(
                "responses must be finite, got {y}"
            )));
        }
        Ok(Self { design, response })
    }

    pub fn design(&self) -> &FactorialDesign {
        &self.design
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }
}

/// Reads an observation table for `factors`. Each factor is looked up by its
/// column name, replicates come from the 1-based `rep` column, and the
/// response from `response_column`. Every (cell, replicate) of the full
/// factorial must appear exactly once.
pub fn read_observations<R: Read>(
    reader: R,
    factors: &[Factor],
    response_column: &str,
) -> Result<ObservationSet, DoeError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| DoeError::Parse {
            line: 1,
            message: format!("missing column '{name}'"),
        })
    };
    let factor_cols = factors.iter().map(|f| col(f.column())).collect::<Result<Vec<_>, _>>()?;
    let rep_col = col("rep")?;
    let y_col = col(response_column)?;

    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let mut levels = Vec::with_capacity(factors.len());
        for (f, &c) in factors.iter().zip(&factor_cols) {
            levels.push(f.find_level(field(c)).ok_or_else(|| DoeError::Parse {
                line,
                message: format!("'{}' is not a level of {}", field(c), f.name),
            })?);
        }
        let rep: usize = field(rep_col)
            .parse()
            .ok()
            .filter(|r| *r >= 1)
            .ok_or_else(|| DoeError::Parse {
                line,
                message: format!("bad replicate '{}'", field(rep_col)),
            })?;
        let y: f64 = field(y_col)
            .parse()
            .ok()
            .filter(|y: &f64| y.is_finite() && *y >= 0.0)
            .ok_or_else(|| DoeError::Parse {
                line,
                message: format!("response '{}' is not a non-negative number", field(y_col)),
            })?;
        rows.push((line, levels, rep - 1, y));
    }
    let reps = rows.iter().map(|r| r.2 + 1).max().ok_or_else(|| {
        DoeError::InvalidObservations("no observation rows".into())
    })?;
    let design = generate_design(factors, reps)?;
    let mut response = vec![None; design.runs.len()];
    for (line, levels, rep, y) in rows {
        let mut cell = 0;
        for (f, &i) in factors.iter().zip(&levels) {
            cell = cell * f.levels.len() + i;
        }
        let slot = &mut response[cell * reps + rep];
        if slot.is_some() {
            return Err(DoeError::Parse {
                line,
                message: "duplicate run".into(),
            });
        }
        *slot = Some(y);
    }
    let missing = response.iter().filter(|r| r.is_none()).count();
    if missing > 0 {
        return Err(DoeError::InvalidObservations(format!(
            "{missing} of {} runs missing from the full factorial",
            response.len()
        )));
    }
    ObservationSet::new(design, response.into_iter().map(Option::unwrap).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "type", content = "factors", rename_all = "snake_case")]
pub enum Term {
    Intercept,
    Linear(usize),
    Square(usize),
    Interaction(usize, usize),
}

impl Term {
    pub fn label(&self, factors: &[Factor]) -> String {
        match *self {
            Term::Intercept => "Intercept".into(),
            Term::Linear(i) => factors[i].name.clone(),
            Term::Square(i) => format!("{0}*{0}", factors[i].name),
            Term::Interaction(i, j) => format!("{}*{}", factors[i].name, factors[j].name),
        }
    }

    pub fn value(&self, coded: &[f64]) -> f64 {
        match *self {
            Term::Intercept => 1.0,
            Term::Linear(i) => coded[i],
            Term::Square(i) => coded[i] * coded[i],
            Term::Interaction(i, j) => coded[i] * coded[j],
        }
    }

    /// Parses a label such as `RW`, `MW*MW` or `RW*MW`.
    pub fn parse(label: &str, factors: &[Factor]) -> Option<Term> {
        if label.eq_ignore_ascii_case("intercept") {
            return Some(Term::Intercept);
        }
        let idx = |n: &str| factors.iter().position(|f| f.name == n.trim());
        match label.split_once('*') {
            None => idx(label).map(Term::Linear),
            Some((a, b)) => {
                let (i, j) = (idx(a)?, idx(b)?);
                match i.cmp(&j) {
                    std::cmp::Ordering::Equal => Some(Term::Square(i)),
                    std::cmp::Ordering::Less => Some(Term::Interaction(i, j)),
                    std::cmp::Ordering::Greater => Some(Term::Interaction(j, i)),
                }
            }
        }
    }
}

/// Intercept, linear terms, squares of continuous factors with three or more
/// levels, then all two-way interactions.
pub fn candidate_terms(factors: &[Factor]) -> Vec<Term> {
    let mut t = vec![Term::Intercept];
    t.extend((0..factors.len()).map(Term::Linear));
    t.extend((0..factors.len()).filter(|&i| factors[i].has_square()).map(Term::Square));
    for i in 0..factors.len() {
        for j in i + 1..factors.len() {
            t.push(Term::Interaction(i, j));
        }
    }
    t
}

/// Model matrix over all candidate terms, one row per run.
pub fn encode(design: &FactorialDesign) -> Result<(Vec<Term>, DMatrix<f64>), DoeError> {
    if let Some(f) = design
        .factors
        .iter()
        .find(|f| f.kind == FactorKind::Categorical && f.levels.len() > 2)
    {
        return Err(DoeError::UnsupportedCategorical(f.name.clone()));
    }
    let terms = candidate_terms(&design.factors);
    let coded: Vec<Vec<f64>> = design.runs.iter().map(|r| design.coded_run(r)).collect();
    let x = DMatrix::from_fn(design.runs.len(), terms.len(), |r, c| terms[c].value(&coded[r]));
    Ok((terms, x))
}

struct Ols {
    coef: Vec<f64>,
    sse: f64,
}

enum OlsOutcome {
    Fit(Ols),
    /// Column position (within the requested set) that is a linear
    /// combination of the columns before it.
    Aliased(usize),
}

fn ols(x: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize]) -> OlsOutcome {
    let sub = x.select_columns(cols);
    let qr = sub.clone().qr();
    let r = qr.r();
    let scale = (0..cols.len())
        .map(|k| sub.column(k).norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    for k in 0..cols.len() {
        if r[(k, k)].abs() <= RANK_TOL * scale {
            return OlsOutcome::Aliased(k);
        }
    }
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .expect("non-singular triangular factor");
    let resid = y - &sub * &beta;
    OlsOutcome::Fit(Ols {
        coef: beta.iter().copied().collect(),
        sse: resid.norm_squared(),
    })
}

struct Problem {
    factors: Vec<Factor>,
    terms: Vec<Term>,
    x: DMatrix<f64>,
    y: DVector<f64>,
    tol: f64,
}

impl Problem {
    fn new(obs: &ObservationSet) -> Result<Self, DoeError> {
        let (terms, x) = encode(&obs.design)?;
        let y = DVector::from_column_slice(&obs.response);
        let tol = SS_RELATIVE_TOL * y.norm_squared();
        Ok(Self {
            factors: obs.design.factors.clone(),
            terms,
            x,
            y,
            tol,
        })
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    fn clean(&self, ss: f64) -> f64 {
        if ss <= self.tol {
            0.0
        } else {
            ss
        }
    }

    fn fit(&self, cols: &[usize]) -> Result<Ols, DoeError> {
        match ols(&self.x, &self.y, cols) {
            OlsOutcome::Fit(mut o) => {
                o.sse = self.clean(o.sse);
                Ok(o)
            }
            OlsOutcome::Aliased(k) => Err(DoeError::Aliased(self.alias_group(&cols[..=k]))),
        }
    }

    /// Names the last column of `cols` together with the earlier columns it
    /// is a combination of.
    fn alias_group(&self, cols: &[usize]) -> Vec<String> {
        let (&last, prev) = cols.split_last().expect("non-empty");
        let mut names = Vec::new();
        if !prev.is_empty() {
            let target = self.x.column(last).clone_owned();
            if let OlsOutcome::Fit(o) = ols(&self.x, &target, prev) {
                for (&c, b) in prev.iter().zip(&o.coef) {
                    if b.abs() > 1e-8 {
                        names.push(self.terms[c].label(&self.factors));
                    }
                }
            }
        }
        names.push(self.terms[last].label(&self.factors));
        names
    }

    fn model(&self, cols: Vec<usize>) -> Result<RsmModel, DoeError> {
        let o = self.fit(&cols)?;
        let included: Vec<Term> = cols.iter().map(|&c| self.terms[c]).collect();
        Ok(RsmModel {
            factors: self.factors.clone(),
            candidates: self.terms.clone(),
            labels: included.iter().map(|t| t.label(&self.factors)).collect(),
            included,
            coefficients: o.coef,
            sse: o.sse,
            dfe: self.n() - cols.len(),
        })
    }

    /// p-value of the partial F test comparing a reduced model (`sse_small`)
    /// with a full one (`sse_big`, `dfe_big` residual df) differing by one term.
    fn partial_p(&self, sse_small: f64, sse_big: f64, dfe_big: usize) -> f64 {
        let extra = self.clean(sse_small - sse_big);
        if extra == 0.0 {
            return 1.0;
        }
        if sse_big == 0.0 {
            return 0.0;
        }
        f_upper_tail(extra / (sse_big / dfe_big as f64), 1.0, dfe_big as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RsmModel {
    #[serde(skip)]
    factors: Vec<Factor>,
    #[serde(skip)]
    candidates: Vec<Term>,
    #[serde(skip)]
    included: Vec<Term>,
    #[serde(rename = "terms")]
    labels: Vec<String>,
    /// Coefficients in coded units, parallel to `terms`.
    coefficients: Vec<f64>,
    sse: f64,
    dfe: usize,
}

impl RsmModel {
    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn candidates(&self) -> &[Term] {
        &self.candidates
    }

    pub fn included(&self) -> &[Term] {
        &self.included
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.coefficients[i])
    }

    pub fn sse(&self) -> f64 {
        self.sse
    }

    pub fn dfe(&self) -> usize {
        self.dfe
    }

    /// Prediction at coded factor values.
    pub fn predict_coded(&self, coded: &[f64]) -> f64 {
        self.included
            .iter()
            .zip(&self.coefficients)
            .map(|(t, b)| b * t.value(coded))
            .sum()
    }

    /// Prediction at natural settings, one per factor.
    pub fn predict(&self, settings: &[Level]) -> Option<f64> {
        if settings.len() != self.factors.len() {
            return None;
        }
        let coded = self
            .factors
            .iter()
            .zip(settings)
            .map(|(f, l)| f.code(l))
            .collect::<Option<Vec<_>>>()?;
        Some(self.predict_coded(&coded))
    }

    fn columns(&self) -> Vec<usize> {
        self.included
            .iter()
            .map(|t| self.candidates.iter().position(|c| c == t).expect("candidate"))
            .collect()
    }
}

/// OLS fit of a given term set; the intercept is added when missing.
pub fn fit_terms(obs: &ObservationSet, terms: &[Term]) -> Result<RsmModel, DoeError> {
    let p = Problem::new(obs)?;
    let mut cols = vec![0];
    for t in terms {
        let c = p.terms.iter().position(|c| c == t).ok_or_else(|| DoeError::InvalidFactor {
            name: t.label(&obs.design.factors),
            reason: "not a candidate term for this design".into(),
        })?;
        if !cols.contains(&c) {
            cols.push(c);
        }
    }
    if cols.len() >= p.n() {
        return Err(DoeError::PerfectFit);
    }
    p.model(cols)
}

/// Forward-backward stepwise selection with partial F tests. Hierarchy is
/// not enforced: interactions may enter without their parents.
pub fn fit_stepwise(obs: &ObservationSet, alpha_enter: f64, alpha_remove: f64) -> Result<RsmModel, DoeError> {
    for a in [alpha_enter, alpha_remove] {
        if !(a > 0.0 && a < 1.0) {
            return Err(DoeError::InvalidObservations(format!("alpha {a} outside (0, 1)")));
        }
    }
    let p = Problem::new(obs)?;
    let n = p.n();
    if n < 2 {
        return Err(DoeError::PerfectFit);
    }
    if n > p.terms.len() {
        let all: Vec<usize> = (0..p.terms.len()).collect();
        p.fit(&all)?;
    }

    let mut cols = vec![0usize];
    let mut cur = p.fit(&cols)?;
    let mut seen = HashSet::new();
    seen.insert(cols.clone());
    loop {
        let mut changed = false;

        let dfe_new = n as isize - cols.len() as isize - 1;
        if dfe_new >= 1 {
            let mut best: Option<(f64, usize, Ols)> = None;
            for c in (1..p.terms.len()).filter(|c| !cols.contains(c)) {
                let mut trial = cols.clone();
                trial.push(c);
                let OlsOutcome::Fit(mut o) = ols(&p.x, &p.y, &trial) else {
                    continue;
                };
                o.sse = p.clean(o.sse);
                let pv = p.partial_p(cur.sse, o.sse, dfe_new as usize);
                if best.as_ref().is_none_or(|b| pv < b.0) {
                    best = Some((pv, c, o));
                }
            }
            if let Some((pv, c, o)) = best {
                let mut next = cols.clone();
                next.push(c);
                if pv < alpha_enter && seen.insert(sorted(&next)) {
                    cols = next;
                    cur = o;
                    changed = true;
                }
            }
        }

        let dfe = n - cols.len();
        let mut worst: Option<(f64, usize)> = None;
        for k in 1..cols.len() {
            let reduced: Vec<usize> = cols.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &c)| c).collect();
            let o = p.fit(&reduced)?;
            let pv = p.partial_p(o.sse, cur.sse, dfe);
            if worst.is_none_or(|w| pv > w.0) {
                worst = Some((pv, k));
            }
        }
        if let Some((pv, k)) = worst {
            let mut next = cols.clone();
            next.remove(k);
            if pv > alpha_remove && seen.insert(sorted(&next)) {
                cols = next;
                cur = p.fit(&cols)?;
                changed = true;
            }
        }

        if !changed {
            break;
        }
    }
    p.model(cols)
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}

/// Upper tail P(F(d1, d2) > f) through the regularized incomplete beta
/// function.
pub fn f_upper_tail(f: f64, d1: f64, d2: f64) -> f64 {
    if f.is_nan() {
        return f64::NAN;
    }
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    let x = d2 / (d2 + d1 * f);
    statrs::function::beta::beta_reg(d2 / 2.0, d1 / 2.0, x).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaRow {
    pub term: String,
    pub df: usize,
    pub adj_ss: f64,
    pub adj_ms: f64,
    pub f: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaTable {
    pub rows: Vec<AnovaRow>,
    pub error_df: usize,
    pub error_ss: f64,
    pub error_ms: f64,
    pub total_df: usize,
    pub total_ss: f64,
}

/// Adjusted (partial) sums of squares: each term's SS is the increase in
/// sse when only that term is dropped.
pub fn anova(model: &RsmModel, obs: &ObservationSet) -> Result<AnovaTable, DoeError> {
    let p = Problem::new(obs)?;
    if model.dfe == 0 || model.sse == 0.0 {
        return Err(DoeError::PerfectFit);
    }
    let cols = model.columns();
    let mse = model.sse / model.dfe as f64;
    let mut rows = Vec::new();
    for k in 1..cols.len() {
        let reduced: Vec<usize> = cols.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &c)| c).collect();
        let o = p.fit(&reduced)?;
        let ss = p.clean(o.sse - model.sse);
        let f = ss / mse;
        rows.push(AnovaRow {
            term: model.labels[k].clone(),
            df: 1,
            adj_ss: ss,
            adj_ms: ss,
            f,
            p: f_upper_tail(f, 1.0, model.dfe as f64),
        });
    }
    let mean = p.y.mean();
    Ok(AnovaTable {
        rows,
        error_df: model.dfe,
        error_ss: model.sse,
        error_ms: mse,
        total_df: p.n() - 1,
        total_ss: p.y.iter().map(|y| (y - mean).powi(2)).sum(),
    })
}

/// Coefficient of determination in percent.
pub fn r_squared(model: &RsmModel, obs: &ObservationSet) -> Result<f64, DoeError> {
    let y = &obs.response;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if sst <= SS_RELATIVE_TOL * y.iter().map(|v| v * v).sum::<f64>() {
        return Err(DoeError::ZeroVariance);
    }
    Ok(100.0 * (1.0 - model.sse / sst))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesirabilitySolution {
    pub settings: Vec<(String, Level)>,
    pub predicted: f64,
    pub desirability: f64,
}

/// Exhaustive search of `grid` (candidate settings per factor) for the
/// highest minimization desirability d = (U - y) / (U - L), clipped to
/// [0, 1], with L and U the observed response extremes. Ties go to the lower
/// prediction, then to the lexicographically first setting.
pub fn desirability_optimize(
    model: &RsmModel,
    obs: &ObservationSet,
    grid: &[Vec<Level>],
) -> Result<DesirabilitySolution, DoeError> {
    let nf = model.factors.len();
    if grid.len() != nf || grid.iter().any(Vec::is_empty) {
        return Err(DoeError::EmptyGrid);
    }
    let lo = obs.response.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = obs.response.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(DoeError::ZeroVariance);
    }
    let coded: Vec<Vec<f64>> = grid
        .iter()
        .zip(&model.factors)
        .map(|(levels, f)| {
            levels
                .iter()
                .map(|l| {
                    f.code(l).ok_or_else(|| DoeError::InvalidFactor {
                        name: f.name.clone(),
                        reason: format!("'{l}' is not a valid setting"),
                    })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;

    let mut idx = vec![0usize; nf];
    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    let mut x = vec![0.0; nf];
    'outer: loop {
        for k in 0..nf {
            x[k] = coded[k][idx[k]];
        }
        let yhat = model.predict_coded(&x);
        let d = ((hi - yhat) / (hi - lo)).clamp(0.0, 1.0);
        let scale = 1e-9 * (hi - lo);
        if best.as_ref().is_none_or(|b| d > b.0 || (d == b.0 && yhat < b.1 - scale)) {
            best = Some((d, yhat, idx.clone()));
        }
        for k in (0..nf).rev() {
            idx[k] += 1;
            if idx[k] < grid[k].len() {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }
    let (d, yhat, idx) = best.expect("non-empty grid");
    Ok(DesirabilitySolution {
        settings: model
            .factors
            .iter()
            .zip(&idx)
            .zip(grid)
            .map(|((f, &i), g)| (f.name.clone(), g[i].clone()))
            .collect(),
        predicted: yhat,
        desirability: d,
    })
}

/// Every declared level of every factor.
pub fn level_grid(factors: &[Factor]) -> Vec<Vec<Level>> {
    factors.iter().map(|f| f.levels.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level(names: &[&str]) -> Vec<Factor> {
        names.iter().map(|n| Factor::continuous(n, &[-1.0, 1.0]).unwrap()).collect()
    }

    fn synthetic(f: impl Fn(&[f64]) -> f64, factors: &[Factor], reps: usize) -> ObservationSet {
        let d = generate_design(factors, reps).unwrap();
        let y = d.runs().iter().map(|r| f(&d.coded_run(r))).collect();
        ObservationSet::new(d, y).unwrap()
    }

    #[test]
    fn design_sizes() {
        assert_eq!(generate_design(&wheel_experiment_factors(), 3).unwrap().runs().len(), 216);
        assert_eq!(generate_design(&two_level(&["a"]), 1).unwrap().runs().len(), 2);

        let fs = vec![
            Factor::continuous("a", &[1.0, 2.0]).unwrap(),
            Factor::continuous("b", &[1.0, 2.0, 3.0]).unwrap(),
        ];
        let d = generate_design(&fs, 2).unwrap();
        assert_eq!(d.runs().len(), 12);
        for i in 0..2 {
            for j in 0..3 {
                let n = d.runs().iter().filter(|r| r.levels == [i, j]).count();
                assert_eq!(n, 2);
            }
        }
        assert_eq!(d.runs()[0], Run { levels: vec![0, 0], replicate: 0 });
        assert_eq!(d.runs()[1], Run { levels: vec![0, 0], replicate: 1 });
        assert_eq!(d.runs()[2].levels, vec![0, 1]);
        assert!(matches!(generate_design(&[], 1), Err(DoeError::EmptyDesign)));
        assert!(matches!(generate_design(&fs, 0), Err(DoeError::NoReplications)));
    }

    #[test]
    fn factor_validation() {
        assert!(Factor::continuous("a", &[1.0]).is_err());
        assert!(Factor::continuous("a", &[2.0, 1.0]).is_err());
        assert!(Factor::categorical("a", &["x", "x"]).is_err());
        assert!(Factor::continuous("a*b", &[1.0, 2.0]).is_err());
    }

    #[test]
    fn coding() {
        let w = wheel_experiment_factors();
        let mw = &w[2];
        let codes: Vec<f64> = mw.levels.iter().map(|l| mw.code(l).unwrap()).collect();
        assert_eq!(codes, vec![-1.0, 0.0, 1.0]);
        assert_eq!(w[3].code(&Level::Label("asphalt".into())), Some(-1.0));
        assert_eq!(w[3].code(&Level::Label("cement".into())), Some(1.0));
        assert_eq!(w[3].code(&Level::Label("ice".into())), None);

        let d = generate_design(&w, 1).unwrap();
        let (terms, x) = encode(&d).unwrap();
        let rw = terms.iter().position(|t| *t == Term::Linear(1)).unwrap();
        let m = terms.iter().position(|t| *t == Term::Linear(2)).unwrap();
        let rwmw = terms.iter().position(|t| *t == Term::Interaction(1, 2)).unwrap();
        for r in 0..x.nrows() {
            assert_eq!(x[(r, rwmw)], x[(r, rw)] * x[(r, m)]);
        }
        // FW and MW get squares; RW, FT, ET do not
        let labels: Vec<String> = terms.iter().map(|t| t.label(&w)).collect();
        assert_eq!(terms.len(), 1 + 5 + 2 + 10);
        assert!(labels.contains(&"MW*MW".to_string()));
        assert!(!labels.contains(&"FT*FT".to_string()));
        assert!(labels.contains(&"RW*MW".to_string()));

        let three = Factor::categorical("c", &["x", "y", "z"]).unwrap();
        let d = generate_design(&[three], 1).unwrap();
        assert!(matches!(encode(&d), Err(DoeError::UnsupportedCategorical(_))));
    }

    #[test]
    fn term_labels_round_trip() {
        let w = wheel_experiment_factors();
        for t in candidate_terms(&w) {
            assert_eq!(Term::parse(&t.label(&w), &w), Some(t));
        }
        assert_eq!(Term::parse("MW*RW", &w), Some(Term::Interaction(1, 2)));
    }

    #[test]
    fn noiseless_recovery() {
        let fs = two_level(&["x1", "x2", "x3"]);
        let obs = synthetic(|x| 2.0 + 3.0 * x[0] - 1.5 * x[0] * x[1], &fs, 3);
        let m = fit_stepwise(&obs, DEFAULT_ALPHA, DEFAULT_ALPHA).unwrap();
        assert_eq!(m.labels(), ["Intercept", "x1", "x1*x2"]);
        assert!((m.coefficient("Intercept").unwrap() - 2.0).abs() < 1e-9);
        assert!((m.coefficient("x1").unwrap() - 3.0).abs() < 1e-9);
        assert!((m.coefficient("x1*x2").unwrap() + 1.5).abs() < 1e-9);
        assert!((r_squared(&m, &obs).unwrap() - 100.0).abs() < 1e-9);
        assert!(matches!(anova(&m, &obs), Err(DoeError::PerfectFit)));
    }

    /// Every subset of candidate terms containing the intercept: the exact
    /// model is the smallest with zero residual.
    #[test]
    fn all_subsets_agree_with_stepwise() {
        let fs = two_level(&["x1", "x2", "x3"]);
        let obs = synthetic(|x| 2.0 + 3.0 * x[0] - 1.5 * x[0] * x[1], &fs, 3);
        let cands = candidate_terms(&fs);
        let mut best: Option<Vec<Term>> = None;
        for mask in 0u32..(1 << (cands.len() - 1)) {
            let terms: Vec<Term> = (1..cands.len()).filter(|i| mask >> (i - 1) & 1 == 1).map(|i| cands[i]).collect();
            let m = fit_terms(&obs, &terms).unwrap();
            if m.sse() == 0.0 && best.as_ref().is_none_or(|b| m.included().len() < b.len()) {
                best = Some(m.included().to_vec());
            }
        }
        let step = fit_stepwise(&obs, 0.15, 0.15).unwrap();
        assert_eq!(best.unwrap(), step.included());
    }

    #[test]
    fn constant_response() {
        let fs = two_level(&["a", "b"]);
        let obs = synthetic(|_| 5.0, &fs, 2);
        let m = fit_stepwise(&obs, 0.15, 0.15).unwrap();
        assert_eq!(m.labels(), ["Intercept"]);
        assert_eq!(m.sse(), 0.0);
        assert!(matches!(r_squared(&m, &obs), Err(DoeError::ZeroVariance)));
    }

    #[test]
    fn one_way_anova() {
        let fs = two_level(&["a"]);
        let d = generate_design(&fs, 2).unwrap();
        let obs = ObservationSet::new(d.clone(), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = fit_terms(&obs, &[Term::Linear(0)]).unwrap();
        let t = anova(&m, &obs).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!((t.rows[0].adj_ss - 4.0).abs() < 1e-12);
        assert!((t.rows[0].f - 8.0).abs() < 1e-9);
        assert!((t.rows[0].p - 0.10557280900008414).abs() < 1e-9);
        assert_eq!(t.error_df, 2);
        assert!((r_squared(&m, &obs).unwrap() - 80.0).abs() < 1e-9);

        let flat = ObservationSet::new(d, vec![1.0, 1.0, 3.0, 3.0]).unwrap();
        let m = fit_terms(&flat, &[Term::Linear(0)]).unwrap();
        assert!(matches!(anova(&m, &flat), Err(DoeError::PerfectFit)));
    }

    #[test]
    fn intercept_only_r2_is_zero() {
        let obs = synthetic(|x| 1.0 + x[0] * x[0] * 0.0 + x[0].max(0.0), &two_level(&["a"]), 2);
        let m = fit_terms(&obs, &[]).unwrap();
        assert_eq!(r_squared(&m, &obs).unwrap(), 0.0);
    }

    #[test]
    fn f_tail_reference_values() {
        let cases = [
            (8.0, 1.0, 2.0, 0.10557280900008414),
            (4.96, 1.0, 10.0, 0.0500876505664682),
            (3.5, 2.0, 5.0, 0.11206549034164981),
            (1.2, 3.0, 20.0, 0.33528114471038295),
            (0.5, 1.0, 200.0, 0.48032319219862196),
            (2.3, 5.0, 100.0, 0.05046962528077674),
            (10.0, 4.0, 12.0, 0.0008480997248110265),
        ];
        for (f, d1, d2, want) in cases {
            let got = f_upper_tail(f, d1, d2);
            assert!((got - want).abs() < 1e-8 * want.max(1e-3), "F({d1},{d2}) > {f}: {got} vs {want}");
        }
        assert_eq!(f_upper_tail(0.0, 1.0, 5.0), 1.0);
        assert_eq!(f_upper_tail(f64::INFINITY, 1.0, 5.0), 0.0);
    }

    #[test]
    fn two_level_square_is_rejected() {
        let fs = wheel_experiment_factors();
        let d = generate_design(&fs, 1).unwrap();
        let obs = ObservationSet::new(d, (0..72).map(|i| 10.0 + (i % 7) as f64).collect()).unwrap();
        // squares of two-level factors are never candidates
        assert!(!candidate_terms(&fs).contains(&Term::Square(3)));
        match fit_terms(&obs, &[Term::Linear(3), Term::Square(3)]) {
            Err(DoeError::InvalidFactor { name, .. }) => assert_eq!(name, "FT*FT"),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn aliased_terms_are_named() {
        // 2-level factors replicated so that a and b are identical columns
        let fs = two_level(&["a", "b"]);
        let d = generate_design(&fs, 3).unwrap();
        let obs = ObservationSet::new(d, (0..12).map(|i| i as f64).collect()).unwrap();
        let ok = fit_terms(&obs, &[Term::Linear(0), Term::Linear(1), Term::Interaction(0, 1)]);
        assert!(ok.is_ok());

        let fs = vec![Factor::continuous("a", &[0.0, 1.0, 2.0]).unwrap()];
        let d = generate_design(&fs, 1).unwrap();
        let obs = ObservationSet::new(d, vec![1.0, 2.0, 4.0]).unwrap();
        // three runs, three columns: saturated
        assert!(matches!(
            fit_terms(&obs, &[Term::Linear(0), Term::Square(0)]),
            Err(DoeError::PerfectFit)
        ));
    }

    #[test]
    fn rank_deficient_design_reports_alias() {
        // one replicate of a 2x2 with every candidate gives 4 runs and 4
        // columns; adding a duplicated factor makes columns collinear
        let a = Factor::continuous("a", &[0.0, 1.0]).unwrap();
        let d = generate_design(&[a], 4).unwrap();
        let obs = ObservationSet::new(d, vec![1.0, 1.1, 0.9, 1.0, 2.0, 2.1, 1.9, 2.2]).unwrap();
        let p = Problem::new(&obs).unwrap();
        // duplicate the linear column by hand
        let x = p.x.clone().insert_column(2, 0.0);
        let mut x = x;
        for r in 0..x.nrows() {
            x[(r, 2)] = 2.0 * x[(r, 1)];
        }
        match ols(&x, &p.y, &[0, 1, 2]) {
            OlsOutcome::Aliased(k) => assert_eq!(k, 2),
            OlsOutcome::Fit(_) => panic!("expected alias"),
        }
    }

    #[test]
    fn residuals_orthogonal_to_model() {
        let w = wheel_experiment_factors();
        let d = generate_design(&w, 2).unwrap();
        let y: Vec<f64> = (0..d.runs().len()).map(|i| 10.0 + ((i * 37) % 11) as f64 * 0.3).collect();
        let obs = ObservationSet::new(d, y).unwrap();
        let all = candidate_terms(&w);
        let m = fit_terms(&obs, &all).unwrap();
        let p = Problem::new(&obs).unwrap();
        let cols = m.columns();
        let xs = p.x.select_columns(&cols);
        let beta = DVector::from_column_slice(m.coefficients());
        let r = &p.y - &xs * beta;
        let g = xs.transpose() * r;
        assert!(g.amax() < 1e-8, "{}", g.amax());
    }

    #[test]
    fn desirability_prefers_low_levels_for_positive_effects() {
        let fs = vec![
            Factor::continuous("a", &[1.0, 2.0, 3.0]).unwrap(),
            Factor::continuous("b", &[10.0, 20.0]).unwrap(),
            Factor::categorical("c", &["lo", "hi"]).unwrap(),
        ];
        let obs = synthetic(|x| 20.0 + 2.0 * x[0] + 1.0 * x[1] + 0.5 * x[2], &fs, 2);
        let m = fit_stepwise(&obs, 0.15, 0.15).unwrap();
        let s = desirability_optimize(&m, &obs, &level_grid(&fs)).unwrap();
        assert_eq!(
            s.settings,
            vec![
                ("a".to_string(), Level::Number(1.0)),
                ("b".to_string(), Level::Number(10.0)),
                ("c".to_string(), Level::Label("lo".into())),
            ]
        );
        assert!((s.desirability - 1.0).abs() < 1e-9);
        assert!((s.predicted - 16.5).abs() < 1e-9);
        assert!(matches!(desirability_optimize(&m, &obs, &[]), Err(DoeError::EmptyGrid)));
    }

    #[test]
    fn desirability_matches_brute_force_minimum() {
        let fs = vec![
            Factor::continuous("x1", &[-1.0, 0.0, 1.0]).unwrap(),
            Factor::continuous("x2", &[-1.0, 0.0, 1.0]).unwrap(),
        ];
        let truth = |x: &[f64]| 10.0 + 3.0 * x[0] - 1.2 * x[0] * x[1] + 2.0 * x[1] * x[1];
        let obs = synthetic(truth, &fs, 2);
        let m = fit_stepwise(&obs, 0.15, 0.15).unwrap();
        let grid: Vec<Vec<Level>> = (0..2)
            .map(|_| (0..=8).map(|k| Level::Number(-1.0 + 0.25 * k as f64)).collect())
            .collect();
        let s = desirability_optimize(&m, &obs, &grid).unwrap();

        let mut best = (f64::INFINITY, 0.0, 0.0);
        for a in 0..=8 {
            for b in 0..=8 {
                let x = [-1.0 + 0.25 * a as f64, -1.0 + 0.25 * b as f64];
                let y = truth(&x);
                if y < best.0 {
                    best = (y, x[0], x[1]);
                }
            }
        }
        assert_eq!(s.settings[0].1, Level::Number(best.1));
        assert_eq!(s.settings[1].1, Level::Number(best.2));
        assert!((s.predicted - best.0).abs() < 1e-9);
    }

    #[test]
    fn wheel_directions() {
        let w = wheel_experiment_factors();
        // effort grows with both wheel sizes and load, is lower on cement and
        // when pulling
        let truth = |x: &[f64]| 12.0 + 0.8 * x[0] + 0.6 * x[1] + 2.5 * x[2] - 0.7 * x[3] - 0.9 * x[4] + 0.3 * x[1] * x[2];
        let d = generate_design(&w, 3).unwrap();
        let y = d
            .runs()
            .iter()
            .map(|r| truth(&d.coded_run(r)) + 0.05 * ((r.replicate as f64) - 1.0))
            .collect();
        let obs = ObservationSet::new(d, y).unwrap();
        let m = fit_stepwise(&obs, 0.15, 0.15).unwrap();
        let s = desirability_optimize(&m, &obs, &level_grid(&w)).unwrap();
        let got: Vec<String> = s.settings.iter().map(|(_, l)| l.to_string()).collect();
        assert_eq!(got, ["605", "155", "0", "cement", "pull"]);
        let t = anova(&m, &obs).unwrap();
        assert!(t.rows.iter().any(|r| r.term == "RW*MW"));
        for r in &t.rows {
            assert!((0.0..=1.0).contains(&r.p));
            assert_eq!(r.adj_ms, r.adj_ss / r.df as f64);
        }
    }

    #[test]
    fn observation_csv() {
        let w = wheel_experiment_factors();
        let d = generate_design(&w, 1).unwrap();
        let mut text = String::from("fw_mm,rw_mm,load_kg,floor,effort_type,rep,effort_kgf\n");
        for (i, r) in d.runs().iter().enumerate().rev() {
            let vals: Vec<String> = w.iter().zip(&r.levels).map(|(f, &k)| f.levels[k].to_string()).collect();
            text.push_str(&format!("{},{},{}\n", vals.join(","), r.replicate + 1, i));
        }
        let obs = read_observations(text.as_bytes(), &w, "effort_kgf").unwrap();
        assert_eq!(obs.response().len(), 72);
        assert!(obs.response().iter().enumerate().all(|(i, y)| *y == i as f64));

        let dup = text.clone() + "605,155,0,asphalt,push,1,3\n";
        assert!(matches!(
            read_observations(dup.as_bytes(), &w, "effort_kgf"),
            Err(DoeError::Parse { line: 74, .. })
        ));
        let short: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            read_observations(short.as_bytes(), &w, "effort_kgf"),
            Err(DoeError::InvalidObservations(_))
        ));
        let bad = "fw_mm,rw_mm,load_kg,floor,effort_type,rep,effort_kgf\n600,155,0,asphalt,push,1,3\n";
        assert!(matches!(
            read_observations(bad.as_bytes(), &w, "effort_kgf"),
            Err(DoeError::Parse { line: 2, .. })
        ));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn adding_terms_never_raises_sse(ys in proptest::collection::vec(0.0f64..50.0, 24), order in Just(()).prop_perturb(|_, mut rng| {
                let mut v: Vec<usize> = (1..7).collect();
                for i in (1..v.len()).rev() {
                    let j = rng.random_range(0..=i);
                    v.swap(i, j);
                }
                v
            })) {
                let fs: Vec<Factor> = ["a", "b", "c"].iter().map(|n| Factor::continuous(n, &[0.0, 1.0]).unwrap()).collect();
                let d = generate_design(&fs, 3).unwrap();
                let obs = ObservationSet::new(d, ys).unwrap();
                let cands = candidate_terms(&fs);
                let mut terms = Vec::new();
                let mut prev = fit_terms(&obs, &terms).unwrap().sse();
                for &k in &order {
                    terms.push(cands[k]);
                    let m = fit_terms(&obs, &terms).unwrap();
                    prop_assert!(m.sse() <= prev * (1.0 + 1e-12) + 1e-12);
                    prev = m.sse();
                }
            }
        }
    }
}
