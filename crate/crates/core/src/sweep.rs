//! Grid evaluation of the analytic expectations, pit-of-losses maps, and
//! majority-threshold equivalence classes.
//!
//! All grids are evaluated point-wise in parallel; output order always
//! follows grid index order.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ViseError};
use crate::expectations::{expected_society_increment, ExpectationReport};
use crate::model::{alpha_votes, validate, EnvironmentParams, SocietyParams};
use crate::optimal::optimal_threshold;

/// Society values below this count as losses.
pub const PIT_TOLERANCE: f64 = -1e-9;

/// A swept parameter. Scale-free axes are multiplied by `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    TOverSigma,
    Delta,
    Alpha,
    MuOverSigma,
}

impl AxisKind {
    pub fn name(self) -> &'static str {
        match self {
            AxisKind::TOverSigma => "t_over_sigma",
            AxisKind::Delta => "delta",
            AxisKind::Alpha => "alpha",
            AxisKind::MuOverSigma => "mu_over_sigma",
        }
    }
}

impl std::str::FromStr for AxisKind {
    type Err = ViseError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t_over_sigma" | "t" => Ok(AxisKind::TOverSigma),
            "delta" => Ok(AxisKind::Delta),
            "alpha" => Ok(AxisKind::Alpha),
            "mu_over_sigma" | "mu" => Ok(AxisKind::MuOverSigma),
            other => Err(ViseError::validation("axis", format!("unknown axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub kind: AxisKind,
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(kind: AxisKind, lo: f64, hi: f64, step: f64) -> Result<Self> {
        let axis = Axis { kind, lo, hi, step };
        axis.check()?;
        Ok(axis)
    }

    fn check(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(ViseError::validation(
                "axis",
                format!(
                    "{}: bounds [{}, {}] are not a finite interval",
                    self.kind.name(),
                    self.lo,
                    self.hi
                ),
            ));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(ViseError::validation(
                "axis",
                format!("{}: step {} must be positive", self.kind.name(), self.step),
            ));
        }
        Ok(())
    }

    /// `lo + i·step` for every `i` that stays within `hi` (up to rounding).
    pub fn values(&self) -> Vec<f64> {
        grid(self.lo, self.hi, self.step)
    }
}

/// Inclusive arithmetic grid computed by index, so endpoints do not drift.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| lo + i as f64 * step).collect()
}

/// How the claims threshold is chosen at each grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TMode {
    Fixed,
    Optimal,
}

impl TMode {
    pub fn name(self) -> &'static str {
        match self {
            TMode::Fixed => "fixed",
            TMode::Optimal => "optimal",
        }
    }
}

/// Parameters held constant during a sweep. Exactly the ones not swept
/// must be set; `t` is unused in optimal mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    pub n: u32,
    pub sigma: f64,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub mu: Option<f64>,
    pub t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub fixed: FixedParams,
    pub axes: Vec<Axis>,
    pub t_mode: TMode,
}

impl SweepSpec {
    fn check(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(ViseError::validation("axes", "sweep one or two axes"));
        }
        if self.axes.len() == 2 && self.axes[0].kind == self.axes[1].kind {
            return Err(ViseError::validation("axes", "axes must differ"));
        }
        for a in &self.axes {
            a.check()?;
        }
        if self.fixed.n == 0 {
            return Err(ViseError::validation("n", "society must have at least one member"));
        }
        if !(self.fixed.sigma.is_finite() && self.fixed.sigma > 0.0) {
            return Err(ViseError::validation("sigma", "must be positive and finite"));
        }
        let swept = |k| self.axes.iter().any(|a| a.kind == k);
        let slot = |field: &'static str, kind: AxisKind, value: Option<f64>, needed: bool| match (
            swept(kind),
            value.is_some(),
        ) {
            (true, true) => Err(ViseError::validation(field, "is both fixed and swept")),
            (false, false) if needed => Err(ViseError::validation(field, "is neither fixed nor swept")),
            _ => Ok(()),
        };
        slot("delta", AxisKind::Delta, self.fixed.delta, true)?;
        slot("alpha", AxisKind::Alpha, self.fixed.alpha, true)?;
        slot("mu", AxisKind::MuOverSigma, self.fixed.mu, true)?;
        match self.t_mode {
            TMode::Fixed => slot("t", AxisKind::TOverSigma, self.fixed.t, true)?,
            TMode::Optimal => {
                if swept(AxisKind::TOverSigma) {
                    return Err(ViseError::validation("t", "cannot sweep t in optimal mode"));
                }
            }
        }
        Ok(())
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub i: usize,
    pub j: usize,
    pub n: u32,
    pub ell: u32,
    pub delta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub mu: f64,
    pub sigma: f64,
    pub mu_over_sigma: f64,
    pub t_mode: &'static str,
    pub t_used: Option<f64>,
    pub t_over_sigma: Option<f64>,
    pub support_prob: Option<f64>,
    pub egoist: Option<f64>,
    pub group: Option<f64>,
    pub society: Option<f64>,
    /// `;`-separated markers: `no-group`, `no-egoists`, `degenerate-t0`,
    /// `delta-rounded`, `invalid`.
    pub flags: String,
}

/// CSV header of [`SweepTable::write_csv`].
pub const SWEEP_HEADER: [&str; 18] = [
    "i",
    "j",
    "n",
    "ell",
    "delta",
    "alpha",
    "gamma",
    "mu",
    "sigma",
    "mu_over_sigma",
    "t_mode",
    "t_used",
    "t_over_sigma",
    "support_prob",
    "egoist",
    "group",
    "society",
    "flags",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axes: Vec<AxisKind>,
    pub shape: Vec<usize>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Row at grid index `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> &SweepRow {
        let cols = self.shape.get(1).copied().unwrap_or(1);
        &self.rows[i * cols + j]
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    n: u32,
    sigma: f64,
    delta: f64,
    alpha: f64,
    mu: f64,
    t: f64,
}

fn evaluate_point(p: Point, t_mode: TMode, i: usize, j: usize) -> SweepRow {
    let mut flags: Vec<&str> = Vec::new();
    let raw_ell = p.delta * f64::from(p.n);
    let ell = raw_ell.round().clamp(0.0, f64::from(p.n)) as u32;
    if (raw_ell - f64::from(ell)).abs() > 1e-6 {
        flags.push("delta-rounded");
    }
    let society = SocietyParams::new(p.n, ell, p.alpha, p.t);
    let mut row = SweepRow {
        i,
        j,
        n: p.n,
        ell,
        delta: society.delta(),
        alpha: p.alpha,
        gamma: society.gamma(),
        mu: p.mu,
        sigma: p.sigma,
        mu_over_sigma: p.mu / p.sigma,
        t_mode: t_mode.name(),
        t_used: None,
        t_over_sigma: None,
        support_prob: None,
        egoist: None,
        group: None,
        society: None,
        flags: String::new(),
    };
    let cfg = match EnvironmentParams::new(p.mu, p.sigma).and_then(|env| validate(society, env)) {
        Ok(cfg) => cfg,
        Err(_) => {
            flags.push("invalid");
            row.flags = flags.join(";");
            return row;
        }
    };
    if cfg.derived.g == 0 {
        flags.push("no-group");
    }
    if ell == 0 {
        flags.push("no-egoists");
    }
    let t = match t_mode {
        TMode::Fixed => p.t,
        TMode::Optimal => match optimal_threshold(&cfg) {
            Ok(opt) => opt.t0,
            Err(_) => {
                if cfg.derived.g > 0 {
                    flags.push("degenerate-t0");
                }
                0.0
            }
        },
    };
    let report: ExpectationReport = expected_society_increment(&cfg.with_t(t));
    if cfg.derived.g > 0 {
        row.t_used = Some(t);
        row.t_over_sigma = Some(t / p.sigma);
    }
    row.support_prob = report.support_prob.map(|p| p.value());
    row.egoist = report.egoist;
    row.group = report.group_member;
    row.society = Some(report.society);
    row.flags = flags.join(";");
    row
}

/// Evaluates the expectations on the grid spanned by `spec.axes`.
/// Invalid or degenerate points become flagged rows rather than errors.
pub fn sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.check()?;
    let values: Vec<Vec<f64>> = spec.axes.iter().map(Axis::values).collect();
    let shape: Vec<usize> = values.iter().map(Vec::len).collect();
    let rows_n = shape[0];
    let cols_n = shape.get(1).copied().unwrap_or(1);
    let f = spec.fixed;

    let rows = (0..rows_n * cols_n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / cols_n, idx % cols_n);
            let mut p = Point {
                n: f.n,
                sigma: f.sigma,
                delta: f.delta.unwrap_or(0.0),
                alpha: f.alpha.unwrap_or(0.0),
                mu: f.mu.unwrap_or(0.0),
                t: f.t.unwrap_or(0.0),
            };
            for ((axis, vals), k) in spec.axes.iter().zip(&values).zip([i, j]) {
                let v = vals[k];
                match axis.kind {
                    AxisKind::TOverSigma => p.t = v * f.sigma,
                    AxisKind::Delta => p.delta = v,
                    AxisKind::Alpha => p.alpha = v,
                    AxisKind::MuOverSigma => p.mu = v * f.sigma,
                }
            }
            evaluate_point(p, spec.t_mode, i, j)
        })
        .collect();

    Ok(SweepTable {
        axes: spec.axes.iter().map(|a| a.kind).collect(),
        shape,
        rows,
    })
}

/// Grid metadata recorded alongside a pit map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridMeta {
    fn of(values: &[f64]) -> Self {
        GridMeta {
            lo: values.first().copied().unwrap_or(f64::NAN),
            hi: values.last().copied().unwrap_or(f64::NAN),
            count: values.len(),
        }
    }
}

/// Where the society's expected increment is negative on a `(μ/σ, δ)` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PitResult {
    pub alpha: f64,
    pub n: u32,
    pub t_mode: TMode,
    pub mu_over_sigma: Vec<f64>,
    pub delta: Vec<f64>,
    /// `mask[i][j]`: pit at `(mu_over_sigma[i], delta[j])`.
    pub mask: Vec<Vec<bool>>,
    pub society: Vec<Vec<f64>>,
    pub t_used: Vec<Vec<Option<f64>>>,
    /// Cells whose optimal threshold was degenerate; evaluated at `t = 0`.
    pub flagged: Vec<(usize, usize)>,
    /// Largest `δ` such that no column up to and including it has a pit.
    pub delta_max: Option<f64>,
}

/// JSON companion of the pit CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PitSummary {
    pub alpha: f64,
    pub n: u32,
    pub t_mode: TMode,
    pub delta_max: Option<f64>,
    pub pit_cells: usize,
    pub flagged_cells: usize,
    pub mu_over_sigma: GridMeta,
    pub delta: GridMeta,
}

/// CSV header of [`PitResult::write_csv`].
pub const PIT_HEADER: [&str; 7] = ["mu_over_sigma", "delta", "ell", "t_used", "society", "pit", "flag"];

#[derive(Serialize)]
struct PitRow<'a> {
    mu_over_sigma: f64,
    delta: f64,
    ell: u32,
    t_used: Option<f64>,
    society: f64,
    pit: bool,
    flag: &'a str,
}

impl PitResult {
    pub fn summary(&self) -> PitSummary {
        PitSummary {
            alpha: self.alpha,
            n: self.n,
            t_mode: self.t_mode,
            delta_max: self.delta_max,
            pit_cells: self.mask.iter().flatten().filter(|&&b| b).count(),
            flagged_cells: self.flagged.len(),
            mu_over_sigma: GridMeta::of(&self.mu_over_sigma),
            delta: GridMeta::of(&self.delta),
        }
    }

    /// Long-format mask: one row per `(μ/σ, δ)` cell.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (i, &m) in self.mu_over_sigma.iter().enumerate() {
            for (j, &d) in self.delta.iter().enumerate() {
                let flagged = self.flagged.contains(&(i, j));
                w.serialize(PitRow {
                    mu_over_sigma: m,
                    delta: d,
                    ell: (d * f64::from(self.n)).round() as u32,
                    t_used: self.t_used[i][j],
                    society: self.society[i][j],
                    pit: self.mask[i][j],
                    flag: if flagged { "degenerate-t0" } else { "" },
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `(-1, 0]` in steps of `0.01`.
pub fn default_mu_over_sigma_grid() -> Vec<f64> {
    (0..100).map(|k| f64::from(k - 99) / 100.0).collect()
}

/// `k/n` for `k = 0..=n`.
pub fn lattice_delta_grid(n: u32) -> Vec<f64> {
    (0..=n).map(|k| f64::from(k) / f64::from(n)).collect()
}

struct Cell {
    society: f64,
    t_used: Option<f64>,
    flagged: bool,
}

fn pit_cell(alpha: f64, n: u32, t_mode: TMode, mu_over_sigma: f64, delta: f64) -> Result<Cell> {
    let ell = (delta * f64::from(n)).round() as u32;
    let cfg = validate(
        SocietyParams::new(n, ell, alpha, 0.0),
        EnvironmentParams::new(mu_over_sigma, 1.0)?,
    )?;
    let (t, flagged) = match t_mode {
        TMode::Fixed => (0.0, false),
        TMode::Optimal => match optimal_threshold(&cfg) {
            Ok(opt) => (opt.t0, false),
            Err(_) => (0.0, cfg.derived.g > 0),
        },
    };
    let report = expected_society_increment(&cfg.with_t(t));
    Ok(Cell {
        society: report.society,
        t_used: (cfg.derived.g > 0).then_some(t),
        flagged,
    })
}

fn check_pit_inputs(alpha: f64, n: u32, mu_grid: &[f64], delta_grid: &[f64]) -> Result<()> {
    if n == 0 {
        return Err(ViseError::validation("n", "society must have at least one member"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ViseError::validation("alpha", format!("{alpha} is not in [0, 1]")));
    }
    if mu_grid.is_empty() || delta_grid.is_empty() {
        return Err(ViseError::validation("grid", "pit grids must be nonempty"));
    }
    if let Some(d) = delta_grid.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(ViseError::validation("delta", format!("{d} is not in [0, 1]")));
    }
    Ok(())
}

/// Pit map over `(μ/σ, δ)` with `t = 0` (`TMode::Fixed`) or `t = t₀`.
pub fn pit_region(
    alpha: f64,
    n: u32,
    t_mode: TMode,
    mu_over_sigma_grid: &[f64],
    delta_grid: &[f64],
) -> Result<PitResult> {
    check_pit_inputs(alpha, n, mu_over_sigma_grid, delta_grid)?;
    let cols = delta_grid.len();
    let cells = (0..mu_over_sigma_grid.len() * cols)
        .into_par_iter()
        .map(|idx| pit_cell(alpha, n, t_mode, mu_over_sigma_grid[idx / cols], delta_grid[idx % cols]))
        .collect::<Result<Vec<_>>>()?;

    let mut mask = Vec::with_capacity(mu_over_sigma_grid.len());
    let mut society = Vec::with_capacity(mu_over_sigma_grid.len());
    let mut t_used = Vec::with_capacity(mu_over_sigma_grid.len());
    let mut flagged = Vec::new();
    for (i, row) in cells.chunks(cols).enumerate() {
        mask.push(row.iter().map(|c| c.society < PIT_TOLERANCE).collect::<Vec<_>>());
        society.push(row.iter().map(|c| c.society).collect());
        t_used.push(row.iter().map(|c| c.t_used).collect());
        flagged.extend(row.iter().enumerate().filter(|(_, c)| c.flagged).map(|(j, _)| (i, j)));
    }

    let mut delta_max = None;
    for (j, &d) in delta_grid.iter().enumerate() {
        if mask.iter().any(|row| row[j]) {
            break;
        }
        delta_max = Some(d);
    }

    Ok(PitResult {
        alpha,
        n,
        t_mode,
        mu_over_sigma: mu_over_sigma_grid.to_vec(),
        delta: delta_grid.to_vec(),
        mask,
        society,
        t_used,
        flagged,
        delta_max,
    })
}

/// `delta_max` alone, scanning `δ = k/n` upwards and stopping at the first pit.
pub fn delta_max(alpha: f64, n: u32, t_mode: TMode, mu_over_sigma_grid: &[f64]) -> Result<Option<f64>> {
    let deltas = lattice_delta_grid(n);
    check_pit_inputs(alpha, n, mu_over_sigma_grid, &deltas)?;
    let mut best = None;
    for &d in &deltas {
        let pit = mu_over_sigma_grid
            .par_iter()
            .map(|&m| pit_cell(alpha, n, t_mode, m, d).map(|c| c.society < PIT_TOLERANCE))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .any(|b| b);
        if pit {
            break;
        }
        best = Some(d);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaMaxPoint {
    pub alpha: f64,
    pub delta_max: Option<f64>,
}

/// `delta_max` under `t = t₀` for each `alpha`, over the default `μ/σ` grid.
pub fn max_delta_curve(n: u32, alpha_grid: &[f64]) -> Result<Vec<DeltaMaxPoint>> {
    if let Some(a) = alpha_grid.iter().find(|a| !(0.0..1.0).contains(*a)) {
        return Err(ViseError::validation("alpha", format!("{a} is not in [0, 1)")));
    }
    let mu = default_mu_over_sigma_grid();
    alpha_grid
        .iter()
        .map(|&alpha| {
            Ok(DeltaMaxPoint {
                alpha,
                delta_max: delta_max(alpha, n, TMode::Optimal, &mu)?,
            })
        })
        .collect()
}

/// Majority thresholds in `[k/n, (k+1)/n)` share `floor(α·n) = k` and thus
/// the same winning coalitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdClass {
    pub votes: u32,
    pub lo: f64,
    pub hi: f64,
    /// Class midpoint, away from lattice rounding.
    pub representative: f64,
}

/// `floor(α·n)` with the same lattice snapping as the voting rule.
pub fn threshold_class(alpha: f64, n: u32) -> u32 {
    alpha_votes(alpha, n).floor() as u32
}

/// The `n` classes partitioning `[0, 1)`.
pub fn majority_threshold_classes(n: u32) -> Result<Vec<ThresholdClass>> {
    if n == 0 {
        return Err(ViseError::validation("n", "must be at least 1"));
    }
    let nf = f64::from(n);
    Ok((0..n)
        .map(|k| ThresholdClass {
            votes: k,
            lo: f64::from(k) / nf,
            hi: f64::from(k + 1) / nf,
            representative: (f64::from(k) + 0.5) / nf,
        })
        .collect())
}
