//! Config-driven command front end.
//!
//! Exit codes: 0 success, 1 input or config error, 2 domain infeasibility or
//! degeneracy (the report is still written).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anthro::ConstraintBounds;
use crate::doe::{self, DoeError, Factor};
use crate::handle::{self, HandleError, DEFAULT_SPIKE_RATIO};
use crate::mechanism::{self, MechanismGeometry};
use crate::optimizer::{self, OptimizationProblem, SolveStatus};
use crate::reba::{self, Activity, AngleCaps, Coupling, LoadClass, LoadCoupling};
use crate::report::{fmt_num, to_csv, to_json};
use crate::scooping::{self, ScoopConditions};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input or configuration; exit code 1.
    #[error("{0}")]
    Input(String),
}

impl CliError {
    fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Optimize lever link lengths and confirm with the grid oracle
    Optimize,
    /// Penetration depths and base plate length
    Scoop,
    /// Lifting and maneuvering handle heights
    Handle,
    /// Stepwise response surface fit of the wheel experiment
    Doe,
    /// Batch REBA scoring of a posture table
    Reba,
    /// Feasibility of the configured geometry only
    Check,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Optimize,
        Command::Scoop,
        Command::Handle,
        Command::Doe,
        Command::Reba,
        Command::Check,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Optimize => "optimize",
            Command::Scoop => "scoop",
            Command::Handle => "handle",
            Command::Doe => "doe",
            Command::Reba => "reba",
            Command::Check => "check",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ergodesign", version, about = "Ergonomics-constrained design of manual equipment")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; defaults are used when omitted
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for report files; reports go to stdout when unset
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report format, overriding the config
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub alpha_eval: f64,
    pub gamma_eval: f64,
    pub variable_upper_limits: [f64; 3],
    pub tolerance: f64,
    /// Grid spacing of the verification oracle, cm.
    pub grid_resolution: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let p = OptimizationProblem::default();
        Self {
            alpha_eval: p.alpha_eval,
            gamma_eval: p.gamma_eval,
            variable_upper_limits: p.variable_upper_limits,
            tolerance: p.tolerance,
            grid_resolution: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoopConfig {
    /// Material table; the built-in table is used when unset.
    pub materials: Option<PathBuf>,
    pub kerb_mass: f64,
    pub approach_velocity: f64,
    pub final_velocity: f64,
    pub bucket_area: f64,
    pub gravity: f64,
    pub blade_width: f64,
}

impl Default for ScoopConfig {
    fn default() -> Self {
        let c = ScoopConditions::default();
        Self {
            materials: None,
            kerb_mass: c.kerb_mass,
            approach_velocity: c.approach_velocity,
            final_velocity: c.final_velocity,
            bucket_area: c.bucket_area,
            gravity: c.gravity,
            blade_width: c.blade_width,
        }
    }
}

impl ScoopConfig {
    pub fn conditions(&self) -> ScoopConditions {
        ScoopConditions {
            kerb_mass: self.kerb_mass,
            approach_velocity: self.approach_velocity,
            final_velocity: self.final_velocity,
            bucket_area: self.bucket_area,
            gravity: self.gravity,
            blade_width: self.blade_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HandleConfig {
    pub lift_curve: Option<PathBuf>,
    pub push_curve: Option<PathBuf>,
    pub pull_curve: Option<PathBuf>,
    pub spike_ratio: f64,
    /// Highest tier; defaults to `bounds.max_handle_height`.
    pub tier_top: Option<f64>,
}

impl Default for HandleConfig {
    fn default() -> Self {
        Self {
            lift_curve: None,
            push_curve: None,
            pull_curve: None,
            spike_ratio: DEFAULT_SPIKE_RATIO,
            tier_top: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoeConfig {
    pub observations: Option<PathBuf>,
    pub response_column: String,
    pub alpha_enter: f64,
    pub alpha_remove: f64,
    pub factors: Vec<Factor>,
}

impl Default for DoeConfig {
    fn default() -> Self {
        Self {
            observations: None,
            response_column: "effort_kgf".into(),
            alpha_enter: doe::DEFAULT_ALPHA,
            alpha_remove: doe::DEFAULT_ALPHA,
            factors: doe::wheel_experiment_factors(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RebaConfig {
    pub postures: Option<PathBuf>,
    pub load_class: LoadClass,
    pub shock_force: bool,
    pub coupling: Coupling,
    pub activity: Activity,
    pub caps: AngleCaps,
}

impl RebaConfig {
    pub fn load(&self) -> LoadCoupling {
        LoadCoupling {
            load_class: self.load_class,
            shock_force: self.shock_force,
            coupling: self.coupling,
            activity: self.activity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    pub out_dir: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for IoConfig {
    fn default() -> Self {
        Self {
            out_dir: None,
            formats: vec![Format::Json],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: MechanismGeometry,
    pub bounds: ConstraintBounds,
    pub optimizer: OptimizerConfig,
    pub scoop: ScoopConfig,
    pub handle: HandleConfig,
    pub doe: DoeConfig,
    pub reba: RebaConfig,
    pub io: IoConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("config: {}", e.message())))
    }

    /// Reads a config file, resolving relative paths against its directory
    /// and checking that every referenced input file exists.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|CliError::Input(m)| CliError::Input(format!("{}: {m}", path.display())))?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new("")));
        cfg.check_inputs()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut self.scoop.materials);
        fix(&mut self.handle.lift_curve);
        fix(&mut self.handle.push_curve);
        fix(&mut self.handle.pull_curve);
        fix(&mut self.doe.observations);
        fix(&mut self.reba.postures);
        fix(&mut self.io.out_dir);
    }

    pub fn check_inputs(&self) -> Result<(), CliError> {
        let inputs = [
            ("scoop.materials", &self.scoop.materials),
            ("handle.lift_curve", &self.handle.lift_curve),
            ("handle.push_curve", &self.handle.push_curve),
            ("handle.pull_curve", &self.handle.pull_curve),
            ("doe.observations", &self.doe.observations),
            ("reba.postures", &self.reba.postures),
        ];
        for (key, p) in inputs {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(CliError::Input(format!("{key}: no such file {}", p.display())));
                }
            }
        }
        let bad = self.bounds.invalid_fields();
        if !bad.is_empty() {
            return Err(CliError::Input(format!("bounds: invalid {}", bad.join(", "))));
        }
        Ok(())
    }

    pub fn problem(&self) -> OptimizationProblem {
        OptimizationProblem {
            bounds: self.bounds,
            alpha_eval: self.optimizer.alpha_eval,
            gamma_eval: self.optimizer.gamma_eval,
            variable_upper_limits: self.optimizer.variable_upper_limits,
            tolerance: self.optimizer.tolerance,
        }
    }
}

/// Report files produced by one command, plus its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    /// (file name, contents)
    pub files: Vec<(String, String)>,
    pub summary: String,
}

fn emit(name: &str, formats: &[Format], json: String, csv: impl FnOnce() -> Vec<(String, String)>) -> Vec<(String, String)> {
    let mut files = Vec::new();
    if formats.contains(&Format::Json) {
        files.push((format!("{name}.json"), json));
    }
    if formats.contains(&Format::Csv) {
        files.extend(csv());
    }
    files
}

fn snake_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

#[derive(Serialize)]
struct OptimizeReport {
    command: &'static str,
    status: SolveStatus,
    solver: optimizer::OptimizationResult,
    oracle: optimizer::OptimizationResult,
    oracle_resolution: f64,
    /// Percentage by which the oracle's objective exceeds the solver's.
    oracle_gap_pct: f64,
}

pub fn cmd_optimize(cfg: &RunConfig, formats: &[Format]) -> Result<Outcome, CliError> {
    let problem = cfg.problem();
    let solver = optimizer::solve(&problem, None).map_err(CliError::input)?;
    let oracle = optimizer::grid_search_oracle(&problem, cfg.optimizer.grid_resolution).map_err(CliError::input)?;
    let gap = if solver.objective.is_finite() && solver.objective > 0.0 && oracle.objective.is_finite() {
        100.0 * (oracle.objective - solver.objective) / solver.objective
    } else {
        f64::NAN
    };
    let exit_code = if solver.status == SolveStatus::Optimal { 0 } else { 2 };
    let summary = format!(
        "optimize: {:?} oe={} cb={} bd={} ma={}",
        solver.status,
        fmt_num(solver.geometry.oe),
        fmt_num(solver.geometry.cb),
        fmt_num(solver.geometry.bd),
        fmt_num(solver.objective)
    );
    let report = OptimizeReport {
        command: "optimize",
        status: solver.status,
        solver,
        oracle,
        oracle_resolution: cfg.optimizer.grid_resolution,
        oracle_gap_pct: gap,
    };
    let files = emit("optimize", formats, to_json(&report), || {
        let row = |m: &str, r: &optimizer::OptimizationResult| {
            vec![
                m.to_string(),
                snake_name(&r.status),
                fmt_num(r.geometry.oe),
                fmt_num(r.geometry.cb),
                fmt_num(r.geometry.bd),
                fmt_num(r.objective),
                fmt_num(r.slacks.handle_height_slack),
                fmt_num(r.slacks.volume_slack),
                fmt_num(r.slacks.turning_slack),
            ]
        };
        vec![(
            "optimize.csv".into(),
            to_csv(
                &["method", "status", "oe", "cb", "bd", "objective", "handle_height_slack", "volume_slack", "turning_slack"],
                &[row("solver", &report.solver), row("grid", &report.oracle)],
            ),
        )]
    });
    Ok(Outcome {
        exit_code,
        files,
        summary,
    })
}

#[derive(Serialize)]
struct MaterialDepth {
    name: String,
    provenance: scooping::Provenance,
    effective_rho_mu: f64,
    depth_cm: f64,
}

#[derive(Serialize)]
struct ScoopReport {
    command: &'static str,
    conditions: ScoopConditions,
    materials: Vec<MaterialDepth>,
    plate: scooping::PlateSizing,
}

pub fn cmd_scoop(cfg: &RunConfig, formats: &[Format]) -> Result<Outcome, CliError> {
    let materials = match &cfg.scoop.materials {
        Some(p) => {
            let f = fs::File::open(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            scooping::read_materials(f).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
        }
        None => scooping::default_materials(),
    };
    if materials.is_empty() {
        return Err(CliError::Input("scoop.materials: no materials".into()));
    }
    let cond = cfg.scoop.conditions();
    let mut rows = Vec::new();
    for m in &materials {
        let d = scooping::penetration_depth(m, &cond).map_err(CliError::input)?;
        rows.push(MaterialDepth {
            name: m.name.clone(),
            provenance: m.provenance,
            effective_rho_mu: m.effective_rho_mu,
            depth_cm: 100.0 * d,
        });
    }
    let plate = scooping::base_plate_length(&materials, &cond).map_err(CliError::input)?;
    let exit_code = if plate.degenerate { 2 } else { 0 };
    let summary = format!(
        "scoop: plate {} cm governed by {}",
        fmt_num(plate.length_cm),
        plate.governing_material
    );
    let report = ScoopReport {
        command: "scoop",
        conditions: cond,
        materials: rows,
        plate,
    };
    let files = emit("scoop", formats, to_json(&report), || {
        let rows: Vec<Vec<String>> = report
            .materials
            .iter()
            .map(|m| vec![m.name.clone(), fmt_num(m.effective_rho_mu), fmt_num(m.depth_cm)])
            .collect();
        vec![("scoop.csv".into(), to_csv(&["material", "effective_rho_mu", "depth_cm"], &rows))]
    });
    Ok(Outcome {
        exit_code,
        files,
        summary,
    })
}

#[derive(Serialize)]
struct HandleReport {
    command: &'static str,
    spike_ratio: f64,
    min_lift: Option<handle::LiftHeight>,
    tier_top: Option<f64>,
    tier_gap: f64,
    tiers: Option<Vec<f64>>,
    maneuver: Option<handle::HandleSelection>,
}

fn read_curve(path: &Path, task: handle::Task) -> Result<handle::BcfCurve, CliError> {
    let f = fs::File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    handle::read_curve(f, Some(task), None).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn cmd_handle(cfg: &RunConfig, formats: &[Format]) -> Result<Outcome, CliError> {
    let h = &cfg.handle;
    if h.lift_curve.is_none() && (h.push_curve.is_none() || h.pull_curve.is_none()) {
        return Err(CliError::Input(
            "handle: set handle.lift_curve and/or both handle.push_curve and handle.pull_curve".into(),
        ));
    }
    let mut exit_code = 0;
    let mut notes = Vec::new();
    let tier_top = h.tier_top.unwrap_or(cfg.bounds.max_handle_height);
    let (mut min_lift, mut tiers) = (None, None);
    if let Some(p) = &h.lift_curve {
        let lift = read_curve(p, handle::Task::Lift)?;
        let l = handle::min_lift_height(&lift, h.spike_ratio).map_err(CliError::input)?;
        match handle::tier_layout(tier_top, l.height, cfg.bounds.tier_gap) {
            Ok(t) => tiers = Some(t),
            Err(e @ HandleError::InvertedRange { .. }) => {
                exit_code = 2;
                notes.push(e.to_string());
            }
            Err(e) => return Err(CliError::input(e)),
        }
        min_lift = Some(l);
    }
    let mut maneuver = None;
    if let (Some(pp), Some(pl)) = (&h.push_curve, &h.pull_curve) {
        let push = read_curve(pp, handle::Task::Push)?;
        let pull = read_curve(pl, handle::Task::Pull)?;
        match handle::maneuver_height(&push, &pull) {
            Ok(s) => maneuver = Some(s),
            Err(e @ HandleError::DisjointRanges(..)) => {
                exit_code = 2;
                notes.push(e.to_string());
            }
            Err(e) => return Err(CliError::input(e)),
        }
    }
    let mut summary = String::from("handle:");
    if let Some(l) = &min_lift {
        summary += &format!(" min lift {} cm;", fmt_num(l.height));
    }
    if let Some(t) = &tiers {
        summary += &format!(" {} tiers;", t.len());
    }
    if let Some(m) = &maneuver {
        summary += &format!(" maneuver {} cm;", fmt_num(m.height));
    }
    for n in &notes {
        summary += &format!(" {n};");
    }
    let report = HandleReport {
        command: "handle",
        spike_ratio: h.spike_ratio,
        min_lift,
        tier_top: tiers.as_ref().map(|_| tier_top),
        tier_gap: cfg.bounds.tier_gap,
        tiers,
        maneuver,
    };
    let files = emit("handle", formats, to_json(&report), || {
        let mut rows = Vec::new();
        if let Some(l) = &report.min_lift {
            rows.push(vec!["min_lift".into(), fmt_num(l.height)]);
        }
        for (i, t) in report.tiers.iter().flatten().enumerate() {
            rows.push(vec![format!("tier_{}", i + 1), fmt_num(*t)]);
        }
        if let Some(m) = &report.maneuver {
            rows.push(vec!["maneuver".into(), fmt_num(m.height)]);
        }
        vec![("handle.csv".into(), to_csv(&["item", "height_cm"], &rows))]
    });
    Ok(Outcome {
        exit_code,
        files,
        summary: summary.trim_end_matches(';').to_string(),
    })
}

#[derive(Serialize)]
struct TermRow {
    term: String,
    coefficient: f64,
}

#[derive(Serialize)]
struct DoeReport {
    command: &'static str,
    runs: usize,
    alpha_enter: f64,
    alpha_remove: f64,
    terms: Vec<TermRow>,
    sse: f64,
    dfe: usize,
    r_squared: Option<f64>,
    anova: Option<doe::AnovaTable>,
    notes: Vec<String>,
    desirability: doe::DesirabilitySolution,
}

fn doe_error(e: DoeError) -> CliError {
    CliError::input(e)
}

pub fn cmd_doe(cfg: &RunConfig, formats: &[Format]) -> Result<Outcome, CliError> {
    let d = &cfg.doe;
    let path = d
        .observations
        .as_ref()
        .ok_or_else(|| CliError::Input("doe.observations is not set".into()))?;
    let f = fs::File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let obs = doe::read_observations(f, &d.factors, &d.response_column)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;

    let mut exit_code = 0;
    let mut notes = Vec::new();
    let model = match doe::fit_stepwise(&obs, d.alpha_enter, d.alpha_remove) {
        Ok(m) => m,
        Err(e @ DoeError::Aliased(_)) => {
            return Ok(Outcome {
                exit_code: 2,
                files: Vec::new(),
                summary: format!("doe: {e}"),
            })
        }
        Err(e) => return Err(doe_error(e)),
    };
    let r_squared = match doe::r_squared(&model, &obs) {
        Ok(r) => Some(r),
        Err(e) => {
            notes.push(format!("r_squared: {e}"));
            None
        }
    };
    let anova = match doe::anova(&model, &obs) {
        Ok(t) => Some(t),
        Err(e @ DoeError::PerfectFit) => {
            notes.push(format!("anova: {e}"));
            None
        }
        Err(e) => return Err(doe_error(e)),
    };
    let desirability = match doe::desirability_optimize(&model, &obs, &doe::level_grid(&d.factors)) {
        Ok(s) => s,
        Err(e @ DoeError::ZeroVariance) => {
            exit_code = 2;
            notes.push(format!("desirability: {e}"));
            doe::DesirabilitySolution {
                settings: Vec::new(),
                predicted: f64::NAN,
                desirability: f64::NAN,
            }
        }
        Err(e) => return Err(doe_error(e)),
    };
    let summary = format!(
        "doe: {} terms [{}], R2 {}",
        model.labels().len(),
        model.labels().join(", "),
        r_squared.map_or("n/a".into(), fmt_num)
    );
    let report = DoeReport {
        command: "doe",
        runs: obs.response().len(),
        alpha_enter: d.alpha_enter,
        alpha_remove: d.alpha_remove,
        terms: model
            .labels()
            .iter()
            .zip(model.coefficients())
            .map(|(t, c)| TermRow {
                term: t.clone(),
                coefficient: *c,
            })
            .collect(),
        sse: model.sse(),
        dfe: model.dfe(),
        r_squared,
        anova,
        notes,
        desirability,
    };
    let files = emit("doe", formats, to_json(&report), || {
        let terms: Vec<Vec<String>> = report
            .terms
            .iter()
            .map(|t| vec![t.term.clone(), fmt_num(t.coefficient)])
            .collect();
        let mut out = vec![("doe_terms.csv".into(), to_csv(&["term", "coefficient"], &terms))];
        if let Some(a) = &report.anova {
            let mut rows: Vec<Vec<String>> = a
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.term.clone(),
                        r.df.to_string(),
                        fmt_num(r.adj_ss),
                        fmt_num(r.adj_ms),
                        fmt_num(r.f),
                        fmt_num(r.p),
                    ]
                })
                .collect();
            rows.push(vec![
                "Error".into(),
                a.error_df.to_string(),
                fmt_num(a.error_ss),
                fmt_num(a.error_ms),
                String::new(),
                String::new(),
            ]);
            rows.push(vec![
                "Total".into(),
                a.total_df.to_string(),
                fmt_num(a.total_ss),
                String::new(),
                String::new(),
                String::new(),
            ]);
            out.push((
                "doe_anova.csv".into(),
                to_csv(&["term", "df", "adj_ss", "adj_ms", "f", "p"], &rows),
            ));
        }
        out
    });
    Ok(Outcome {
        exit_code,
        files,
        summary,
    })
}

#[derive(Serialize)]
struct RebaReport {
    command: &'static str,
    load: LoadCoupling,
    scored: usize,
    failed: usize,
    rows: Vec<reba::BatchRow>,
}

pub fn cmd_reba(cfg: &RunConfig, formats: &[Format]) -> Result<Outcome, CliError> {
    let path = cfg
        .reba
        .postures
        .as_ref()
        .ok_or_else(|| CliError::Input("reba.postures is not set".into()))?;
    let f = fs::File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let load = cfg.reba.load();
    let rows = reba::batch_score(f, &load, cfg.reba.caps).map_err(CliError::input)?;
    let failed = rows.iter().filter(|r| r.result.is_none()).count();
    let report = RebaReport {
        command: "reba",
        load,
        scored: rows.len() - failed,
        failed,
        rows,
    };
    let mut summary = format!("reba: {} scored, {} failed", report.scored, report.failed);
    for r in report.rows.iter().filter(|r| r.error.is_some()) {
        summary += &format!("\n  line {}: {}", r.line, r.error.as_deref().unwrap_or(""));
    }
    let files = emit("reba", formats, to_json(&report), || {
        let rows: Vec<Vec<String>> = report
            .rows
            .iter()
            .map(|r| {
                let mut v = vec![r.line.to_string(), r.id.clone().unwrap_or_default()];
                match &r.result {
                    Some(x) => v.extend([
                        x.left.score_a.to_string(),
                        x.left.score_b.to_string(),
                        x.right.score_b.to_string(),
                        x.left.final_score.to_string(),
                        x.right.final_score.to_string(),
                        snake_name(&reba::risk_band(x.final_score()).expect("valid score")),
                        String::new(),
                    ]),
                    None => {
                        v.extend(std::iter::repeat_n(String::new(), 6));
                        v.push(r.error.clone().unwrap_or_default());
                    }
                }
                v
            })
            .collect();
        vec![(
            "reba.csv".into(),
            to_csv(
                &["line", "id", "score_a", "left_score_b", "right_score_b", "left_final", "right_final", "risk_band", "error"],
                &rows,
            ),
        )]
    });
    Ok(Outcome {
        exit_code: 0,
        files,
        summary,
    })
}

#[derive(Serialize)]
struct CheckReport {
    command: &'static str,
    geometry: MechanismGeometry,
    bounds: ConstraintBounds,
    tolerance: f64,
    handle_height: f64,
    container_volume: f64,
    turning_width: f64,
    mechanical_advantage: f64,
    slacks: mechanism::ConstraintSlacks,
}

pub fn cmd_check(cfg: &RunConfig, formats: &[Format]) -> Result<Outcome, CliError> {
    let g = cfg.geometry;
    let tol = cfg.optimizer.tolerance;
    let slacks = mechanism::check_feasibility_with_tolerance(&g, &cfg.bounds, tol).map_err(CliError::input)?;
    let alpha = g.alpha_max;
    let report = CheckReport {
        command: "check",
        geometry: g,
        bounds: cfg.bounds,
        tolerance: tol,
        handle_height: mechanism::handle_height(&g, alpha).map_err(CliError::input)?,
        container_volume: mechanism::container_capacity(&g, alpha).map_err(CliError::input)?.volume,
        turning_width: mechanism::turning_width(mechanism::equipment_length(&g, alpha), g.width_w, cfg.bounds.worker_depth),
        mechanical_advantage: mechanism::mechanical_advantage(&g, cfg.optimizer.gamma_eval).map_err(CliError::input)?,
        slacks,
    };
    let exit_code = if slacks.feasible { 0 } else { 2 };
    let summary = format!(
        "check: {} (height slack {}, volume slack {}, turning slack {})",
        if slacks.feasible { "feasible" } else { "infeasible" },
        fmt_num(slacks.handle_height_slack),
        fmt_num(slacks.volume_slack),
        fmt_num(slacks.turning_slack)
    );
    let files = emit("check", formats, to_json(&report), || {
        let rows = vec![
            vec!["handle_height".into(), fmt_num(report.handle_height), fmt_num(slacks.handle_height_slack)],
            vec!["container_volume".into(), fmt_num(report.container_volume), fmt_num(slacks.volume_slack)],
            vec!["turning_width".into(), fmt_num(report.turning_width), fmt_num(slacks.turning_slack)],
        ];
        vec![("check.csv".into(), to_csv(&["quantity", "value", "slack"], &rows))]
    });
    Ok(Outcome {
        exit_code,
        files,
        summary,
    })
}

pub fn execute(command: Command, cfg: &RunConfig, formats: &[Format]) -> Result<Outcome, CliError> {
    match command {
        Command::Optimize => cmd_optimize(cfg, formats),
        Command::Scoop => cmd_scoop(cfg, formats),
        Command::Handle => cmd_handle(cfg, formats),
        Command::Doe => cmd_doe(cfg, formats),
        Command::Reba => cmd_reba(cfg, formats),
        Command::Check => cmd_check(cfg, formats),
    }
}

/// Runs every command whose inputs are configured, in a fixed order.
pub fn run_all(cfg: &RunConfig, formats: &[Format]) -> Result<Vec<(Command, Outcome)>, CliError> {
    let mut out = Vec::new();
    for c in Command::ALL {
        let ready = match c {
            Command::Handle => cfg.handle.lift_curve.is_some() || cfg.handle.push_curve.is_some(),
            Command::Doe => cfg.doe.observations.is_some(),
            Command::Reba => cfg.reba.postures.is_some(),
            _ => true,
        };
        if ready {
            out.push((c, execute(c, cfg, formats)?));
        }
    }
    Ok(out)
}

pub fn write_files(dir: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    for (name, text) in files {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

/// Entry point of the binary; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let formats = cli.format.map_or_else(|| cfg.io.formats.clone(), |f| vec![f]);
    let outcome = match execute(cli.command, &cfg, &formats) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match cli.out.as_ref().or(cfg.io.out_dir.as_ref()) {
        Some(dir) => {
            if let Err(e) = write_files(dir, &outcome.files) {
                eprintln!("error: {e}");
                return 1;
            }
            eprintln!("{}", outcome.summary);
        }
        None => {
            for (_, text) in &outcome.files {
                print!("{text}");
            }
            eprintln!("{}", outcome.summary);
        }
    }
    outcome.exit_code
}
