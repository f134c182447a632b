//! Handle placement from back-compression-force (BCF) curves.
//!
//! BCF curves come from an external biomechanics tool; this module only
//! consumes them. Heights are in cm and forces in N.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_SPIKE_RATIO: f64 = 0.15;
pub const DEFAULT_TIER_GAP: f64 = 20.0;

#[derive(Debug, Error)]
pub enum HandleError {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("expected a {expected} curve, got {got}")]
    WrongTask { expected: &'static str, got: Task },
    #[error("tier range inverted: top {top} <= minimum {min}")]
    InvertedRange { top: f64, min: f64 },
    #[error("invalid {0}")]
    InvalidParameter(String),
    #[error("curves share no height range: [{0}, {1}] and [{2}, {3}]")]
    DisjointRanges(f64, f64, f64, f64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Lift,
    Push,
    Pull,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Lift => "lift",
            Task::Push => "push",
            Task::Pull => "pull",
        })
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lift" => Ok(Task::Lift),
            "push" => Ok(Task::Push),
            "pull" => Ok(Task::Pull),
            other => Err(format!("unknown task '{other}'")),
        }
    }
}

/// BCF sampled over handle height for one task and population.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BcfCurve {
    task: Task,
    population_tag: String,
    samples: Vec<(f64, f64)>,
}

impl BcfCurve {
    pub fn new(
        task: Task,
        population_tag: impl Into<String>,
        samples: Vec<(f64, f64)>,
    ) -> Result<Self, HandleError> {
        if samples.len() < 3 {
            return Err(HandleError::InvalidCurve(format!(
                "need at least 3 samples, got {}",
                samples.len()
            )));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(HandleError::InvalidCurve(format!(
                    "heights must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some((h, f)) = samples.iter().find(|(h, f)| !(h.is_finite() && f.is_finite() && *f > 0.0)) {
            return Err(HandleError::InvalidCurve(format!(
                "BCF must be positive and finite (height {h}: {f})"
            )));
        }
        Ok(Self {
            task,
            population_tag: population_tag.into(),
            samples,
        })
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn population_tag(&self) -> &str {
        &self.population_tag
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn heights(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.0)
    }

    fn range(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    /// Linear interpolation inside the sampled range; `None` outside it.
    pub fn interpolate(&self, h: f64) -> Option<f64> {
        let (lo, hi) = self.range();
        if h < lo || h > hi {
            return None;
        }
        let i = self.samples.partition_point(|s| s.0 < h);
        let (h1, f1) = self.samples[i];
        if h1 == h || i == 0 {
            return Some(f1);
        }
        let (h0, f0) = self.samples[i - 1];
        Some(f0 + (f1 - f0) * (h - h0) / (h1 - h0))
    }

    /// Applies `f` to every BCF value.
    pub fn map_bcf(&self, f: impl Fn(f64) -> f64) -> Result<Self, HandleError> {
        Self::new(
            self.task,
            self.population_tag.clone(),
            self.samples.iter().map(|&(h, b)| (h, f(b))).collect(),
        )
    }

    pub fn with_task(mut self, task: Task) -> Self {
        self.task = task;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiftHeight {
    pub height: f64,
    /// False when no step exceeded the spike ratio and the lowest sample was returned.
    pub spike: bool,
}

/// Lowest handle height whose next lower sample raises BCF by more than
/// `spike_ratio` of its own BCF.
pub fn min_lift_height(curve: &BcfCurve, spike_ratio: f64) -> Result<LiftHeight, HandleError> {
    if curve.task != Task::Lift {
        return Err(HandleError::WrongTask {
            expected: "lift",
            got: curve.task,
        });
    }
    if !(spike_ratio.is_finite() && spike_ratio >= 0.0) {
        return Err(HandleError::InvalidParameter(format!(
            "spike ratio {spike_ratio}"
        )));
    }
    let s = &curve.samples;
    let spike_at = (1..s.len()).find(|&i| s[i - 1].1 > (1.0 + spike_ratio) * s[i].1);
    Ok(match spike_at {
        Some(i) => LiftHeight {
            height: s[i].0,
            spike: true,
        },
        None => LiftHeight {
            height: s[0].0,
            spike: false,
        },
    })
}

/// Handle positions from `h_top` downward in steps of `tier_gap`, stopping
/// before `h_min` is passed.
pub fn tier_layout(h_top: f64, h_min: f64, tier_gap: f64) -> Result<Vec<f64>, HandleError> {
    if !(h_top > h_min) {
        return Err(HandleError::InvertedRange {
            top: h_top,
            min: h_min,
        });
    }
    if !(tier_gap.is_finite() && tier_gap > 0.0) {
        return Err(HandleError::InvalidParameter(format!("tier gap {tier_gap}")));
    }
    let mut tiers = Vec::new();
    let mut k = 0u32;
    loop {
        let h = h_top - f64::from(k) * tier_gap;
        if h < h_min - 1e-9 {
            break;
        }
        tiers.push(h);
        k += 1;
    }
    Ok(tiers)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HandleSelection {
    pub height: f64,
    pub rank_push: f64,
    pub rank_pull: f64,
    pub rationale: String,
}

/// Goodness rank of every grid point: the percentage of grid points with
/// strictly higher BCF.
pub fn goodness_ranks(bcf: &[f64]) -> Vec<f64> {
    let n = bcf.len() as f64;
    bcf.iter()
        .map(|&x| 100.0 * bcf.iter().filter(|&&y| y > x).count() as f64 / n)
        .collect()
}

/// Heights, then the first and second curve's BCF at those heights.
pub type CommonGrid = (Vec<f64>, Vec<f64>, Vec<f64>);

/// Puts both curves on one height grid. Identical grids are used as is;
/// otherwise the union of sample heights inside the shared range is used and
/// both curves are linearly interpolated onto it.
pub fn common_grid(a: &BcfCurve, b: &BcfCurve) -> Result<CommonGrid, HandleError> {
    if a.heights().eq(b.heights()) {
        return Ok((
            a.heights().collect(),
            a.samples.iter().map(|s| s.1).collect(),
            b.samples.iter().map(|s| s.1).collect(),
        ));
    }
    let (alo, ahi) = a.range();
    let (blo, bhi) = b.range();
    let lo = alo.max(blo);
    let hi = ahi.min(bhi);
    if lo >= hi {
        return Err(HandleError::DisjointRanges(alo, ahi, blo, bhi));
    }
    let mut grid: Vec<f64> = a
        .heights()
        .chain(b.heights())
        .filter(|h| (lo..=hi).contains(h))
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let fa = grid.iter().map(|&h| a.interpolate(h).expect("inside range")).collect();
    let fb = grid.iter().map(|&h| b.interpolate(h).expect("inside range")).collect();
    Ok((grid, fa, fb))
}

fn argmin_height(grid: &[f64], bcf: &[f64]) -> f64 {
    let mut best = 0;
    for i in 1..bcf.len() {
        if bcf[i] < bcf[best] {
            best = i;
        }
    }
    grid[best]
}

/// Maneuvering-handle height that is equally good for pushing and pulling:
/// the grid height maximizing the smaller of its two goodness ranks.
pub fn maneuver_height(push: &BcfCurve, pull: &BcfCurve) -> Result<HandleSelection, HandleError> {
    for c in [push, pull] {
        if c.task == Task::Lift {
            return Err(HandleError::WrongTask {
                expected: "push or pull",
                got: c.task,
            });
        }
    }
    let (grid, fp, fl) = common_grid(push, pull)?;
    let rp = goodness_ranks(&fp);
    let rl = goodness_ranks(&fl);
    let mid = 0.5 * (argmin_height(&grid, &fp) + argmin_height(&grid, &fl));

    let mut best = 0;
    for i in 1..grid.len() {
        let score = rp[i].min(rl[i]);
        let best_score = rp[best].min(rl[best]);
        let closer = (grid[i] - mid).abs() < (grid[best] - mid).abs();
        if score > best_score || (score == best_score && closer) {
            best = i;
        }
    }
    let rationale = format!(
        "maximin goodness rank over {} grid heights; push better than {:.1}% and pull better than {:.1}% of heights",
        grid.len(),
        rp[best],
        rl[best]
    );
    Ok(HandleSelection {
        height: grid[best],
        rank_push: rp[best],
        rank_pull: rl[best],
        rationale,
    })
}

/// Reads a `height_cm,bcf_n` curve. A comment line such as
/// `# task=push population=95th-male` supplies metadata; explicit arguments
/// take precedence over it.
pub fn read_curve<R: Read>(
    mut reader: R,
    task: Option<Task>,
    population: Option<&str>,
) -> Result<BcfCurve, HandleError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;

    let mut meta_task = None;
    let mut meta_pop = None;
    let mut body = String::new();
    let mut line_map = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(meta) = trimmed.strip_prefix('#') {
            for kv in meta.split_whitespace() {
                match kv.split_once('=') {
                    Some(("task", v)) => {
                        meta_task = Some(v.parse::<Task>().map_err(|message| HandleError::Parse {
                            line: i + 1,
                            message,
                        })?)
                    }
                    Some(("population", v)) => meta_pop = Some(v.to_string()),
                    _ => {}
                }
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        body.push_str(line);
        body.push('\n');
        line_map.push(i + 1);
    }

    #[derive(Deserialize)]
    struct Row {
        height_cm: f64,
        bcf_n: f64,
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut samples = Vec::new();
    for (i, rec) in rdr.deserialize::<Row>().enumerate() {
        let row = rec.map_err(|e| HandleError::Parse {
            line: line_map.get(i + 1).copied().unwrap_or(0),
            message: e.to_string(),
        })?;
        samples.push((row.height_cm, row.bcf_n));
    }
    let task = task.or(meta_task).ok_or_else(|| HandleError::Parse {
        line: 1,
        message: "no task given (flag or '# task=' line)".into(),
    })?;
    let pop = population
        .map(str::to_string)
        .or(meta_pop)
        .unwrap_or_default();
    BcfCurve::new(task, pop, samples)
}
