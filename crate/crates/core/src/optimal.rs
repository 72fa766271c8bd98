//! The group claims threshold that maximizes the society's expected
//! one-step increment.
//!
//! Differentiating `M(d̃)` in `t` gives
//! `f(t̃)(√g/σ)[δ(μ⁺_α - μ⁺_γ) - (1 - δ)(F_γ - F_α)t]`, which vanishes at
//! `t₀ = β(μ⁺_α - μ⁺_γ)/(F_γ - F_α)` and changes sign from + to - there, so
//! the objective is unimodal whenever `F_γ > F_α`.

use serde::Serialize;

use crate::error::{Result, ViseError};
use crate::expectations::{rule_terms, ExpectationReport, RuleTerms};
use crate::model::Configuration;
use crate::special::{cdf, density, first_count_above, ln_pmf, mass_between, pmf_or_zero, CompensatedSum};

/// Which closed form produced `t₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseTag {
    /// Neither special regime applies.
    General,
    /// `α < 1 - δ`: the group's votes alone pass a proposal.
    GroupDecisive,
    /// `δ ≤ α`: the egoists' votes alone never pass a proposal.
    EgoistsInsufficient,
    /// Both of the above: `t₀ = -βμ`.
    Both,
    /// The group's vote never changes the outcome.
    Degenerate,
}

impl CaseTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::General => "general",
            CaseTag::GroupDecisive => "group-decisive",
            CaseTag::EgoistsInsufficient => "egoists-insufficient",
            CaseTag::Both => "both",
            CaseTag::Degenerate => "degenerate",
        }
    }
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalThresholdResult {
    pub t0: f64,
    pub case_tag: CaseTag,
    pub society_value_at_t0: f64,
    /// Value of the general formula, whatever the regime.
    pub general_t0: f64,
    /// Value of the regime-specific formula when one applies.
    pub special_t0: Option<f64>,
}

/// Optimal claims threshold for `cfg` (its `t` is ignored).
///
/// Returns [`ViseError::DegenerateRule`] when `F_{γn} = F_{αn}`: then the
/// outcome of a vote never depends on the group's threshold.
pub fn optimal_threshold(cfg: &Configuration) -> Result<OptimalThresholdResult> {
    let g = cfg.derived.g;
    if g == 0 {
        return Err(ViseError::DegenerateRule(
            "no group members, so there is no claims threshold to choose".into(),
        ));
    }
    let terms = rule_terms(cfg);
    let ell = cfg.society.ell;
    let (mu, sigma) = (cfg.env.mu, cfg.env.sigma);
    let z = mu / sigma;
    let (p, q) = (cdf(z), cdf(-z));
    let k_gamma = first_count_above(cfg.derived.gamma_votes);
    let k_alpha = first_count_above(cfg.derived.alpha_votes);
    let Some(ratio) = pivot_ratio(k_gamma, k_alpha, ell, p, q) else {
        return Err(ViseError::DegenerateRule(degenerate_reason(cfg, &terms)));
    };

    let (general, special, case_tag) = if ell == 0 {
        // No egoists: β = 0 and nobody to balance against.
        (0.0, Some(0.0), CaseTag::Both)
    } else {
        let beta = f64::from(ell) / f64::from(g);
        let edge = sigma * density(z);
        let general = beta * (edge * ratio - mu);
        let group_decisive = k_gamma <= 0;
        let egoists_insufficient = k_alpha > i64::from(ell);
        let (special, tag) = match (group_decisive, egoists_insufficient) {
            (true, true) => (Some(-beta * mu), CaseTag::Both),
            (true, false) => {
                let below_alpha = mass_between(0, k_alpha - 1, ell, p, q);
                let b_alpha = pmf_or_zero(k_alpha - 1, ell - 1, p, q);
                (Some(beta * (edge * b_alpha / below_alpha - mu)), CaseTag::GroupDecisive)
            }
            (false, true) => {
                let mpg = terms.mu_plus_gamma.expect("ell >= 1");
                (Some(-(beta / terms.tail_gamma) * mpg), CaseTag::EgoistsInsufficient)
            }
            (false, false) => (None, CaseTag::General),
        };
        (general, special, tag)
    };

    // The regime formulas divide by tails that can underflow; the general
    // form below is evaluated in scaled arithmetic and never does.
    let t0 = general;
    let value = ExpectationReport::from_terms(&cfg.with_t(t0), &terms).society;
    Ok(OptimalThresholdResult {
        t0,
        case_tag,
        society_value_at_t0: value,
        general_t0: general,
        special_t0: special,
    })
}

/// `(b(k_α-1 | ℓ-1) - b(k_γ-1 | ℓ-1)) / (F_γ - F_α)`, the boundary term of
/// `(μ⁺_α - μ⁺_γ + μ(F_γ - F_α)) / (σφ(μ/σ)(F_γ - F_α))`.
///
/// Every pmf is taken relative to the largest one among the pivotal counts
/// `k_γ..k_α`, so the ratio survives tails far below the smallest normal
/// double. `None` when the group can never pivot.
fn pivot_ratio(k_gamma: i64, k_alpha: i64, ell: u32, p: f64, q: f64) -> Option<f64> {
    let lo = k_gamma.max(0);
    let hi = (k_alpha - 1).min(i64::from(ell));
    if lo > hi {
        return None;
    }
    let ln: Vec<f64> = (lo..=hi).map(|x| ln_pmf(x as u32, ell, p, q)).collect();
    let peak = ln.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return None;
    }
    let mut mass = CompensatedSum::default();
    for v in &ln {
        mass.add((v - peak).exp());
    }
    let n = f64::from(ell);
    // b(x | ℓ-1) = b(x | ℓ)(ℓ - x)/(ℓq) and b(x-1 | ℓ-1) = b(x | ℓ)x/(ℓp)
    let top = if hi == i64::from(ell) {
        0.0
    } else {
        (ln[ln.len() - 1] - peak).exp() * (n - hi as f64) / (n * q)
    };
    let bottom = if lo == 0 {
        0.0
    } else {
        (ln[0] - peak).exp() * lo as f64 / (n * p)
    };
    Some((top - bottom) / mass.total())
}

fn degenerate_reason(cfg: &Configuration, terms: &RuleTerms) -> String {
    let ell = f64::from(cfg.society.ell);
    if cfg.derived.gamma_votes >= ell {
        format!(
            "egoists would need more than γn = {} of {} votes even with group support; \
             no proposal can pass",
            cfg.derived.gamma_votes, cfg.society.ell
        )
    } else {
        format!(
            "F_γn = {} equals F_αn = {} (egoist support probability {}); \
             the group never pivots",
            terms.tail_gamma, terms.tail_alpha, terms.p_vote
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArgmaxMethod {
    GoldenSection,
    /// Golden-section search disagreed with a dense scan; the scan's best
    /// grid point is reported.
    GridScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArgmaxResult {
    pub t: f64,
    pub value: f64,
    pub method: ArgmaxMethod,
    /// The objective is numerically flat on the bracket.
    pub degenerate: bool,
    pub bracket: (f64, f64),
}

/// Default search interval: `μ ± 6σ/√g`.
pub fn default_bracket(cfg: &Configuration) -> (f64, f64) {
    let half = 6.0 * cfg.env.sigma / f64::from(cfg.derived.g.max(1)).sqrt();
    (cfg.env.mu - half, cfg.env.mu + half)
}

const GRID_POINTS: usize = 2001;

/// Maximizes `M(d̃)` over `t` numerically, without using the closed form for `t₀`.
pub fn numeric_argmax_t(cfg: &Configuration, bracket: Option<(f64, f64)>, tol: f64) -> Result<ArgmaxResult> {
    if cfg.derived.g == 0 {
        return Err(ViseError::DegenerateRule(
            "no group members, so the objective does not depend on t".into(),
        ));
    }
    let (lo, hi) = bracket.unwrap_or_else(|| default_bracket(cfg));
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(ViseError::validation(
            "bracket",
            format!("[{lo}, {hi}] is not a finite interval"),
        ));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(ViseError::validation("tol", format!("{tol} must be positive")));
    }

    let terms = rule_terms(cfg);
    let objective = |t: f64| ExpectationReport::from_terms(&cfg.with_t(t), &terms).society;

    let (t_gs, v_gs) = golden_section_max(&objective, lo, hi, tol);

    let mut best = (t_gs, v_gs);
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut grid_best = (lo, f64::NEG_INFINITY);
    for i in 0..GRID_POINTS {
        let t = lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64;
        let v = objective(t);
        vmin = vmin.min(v);
        vmax = vmax.max(v);
        if v > grid_best.1 {
            grid_best = (t, v);
        }
    }
    let scale = vmax.abs().max(vmin.abs()).max(f64::MIN_POSITIVE);
    let degenerate = vmax - vmin <= 1e-14 * scale;
    let mut method = ArgmaxMethod::GoldenSection;
    if grid_best.1 > v_gs + 1e-12 * scale {
        log::warn!(
            "golden-section maximum {v_gs} at t = {t_gs} is below grid value {} at t = {}; \
             objective is not unimodal on [{lo}, {hi}]",
            grid_best.1,
            grid_best.0
        );
        best = grid_best;
        method = ArgmaxMethod::GridScan;
    }
    Ok(ArgmaxResult {
        t: best.0,
        value: best.1,
        method,
        degenerate,
        bracket: (lo, hi),
    })
}

fn golden_section_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    [(mid, fm), (c, fc), (d, fd)]
        .into_iter()
        .fold((mid, fm), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// Finite-difference diagnostics of `M(d̃)` around a candidate optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarityDiagnostics {
    /// Central difference `dM/dt` at `t0` with step `derivative_step`.
    pub first_derivative: f64,
    pub derivative_step: f64,
    /// `M(t0 + h) - 2M(t0) + M(t0 - h)` with `h = curvature_step`.
    pub second_difference: f64,
    pub curvature_step: f64,
    pub tolerance: f64,
    pub stationary: bool,
    pub is_maximum: bool,
}

/// Absolute bound on `|dM/dt|` (dimensionless) for a stationary point.
pub const STATIONARITY_TOLERANCE: f64 = 1e-6;

pub fn stationarity_check(cfg: &Configuration, t0: f64) -> Result<StationarityDiagnostics> {
    if !t0.is_finite() {
        return Err(ViseError::validation("t0", format!("{t0} is not finite")));
    }
    if cfg.derived.g == 0 {
        return Err(ViseError::DegenerateRule("no group members".into()));
    }
    let terms = rule_terms(cfg);
    let m = |t: f64| ExpectationReport::from_terms(&cfg.with_t(t), &terms).society;
    let scale = cfg.env.sigma / f64::from(cfg.derived.g).sqrt();
    let h1 = 1e-4 * scale;
    let h2 = 0.5 * scale;
    let first = (m(t0 + h1) - m(t0 - h1)) / (2.0 * h1);
    let second = m(t0 + h2) - 2.0 * m(t0) + m(t0 - h2);
    Ok(StationarityDiagnostics {
        first_derivative: first,
        derivative_step: h1,
        second_difference: second,
        curvature_step: h2,
        tolerance: STATIONARITY_TOLERANCE,
        stationary: first.abs() <= STATIONARITY_TOLERANCE,
        is_maximum: second < 0.0,
    })
}

/// Central-difference slope of `M(d̃)` at `t` with step `h`.
pub fn society_slope(cfg: &Configuration, t: f64, h: f64) -> f64 {
    let terms = rule_terms(cfg);
    let m = |t: f64| ExpectationReport::from_terms(&cfg.with_t(t), &terms).society;
    (m(t + h) - m(t - h)) / (2.0 * h)
}
