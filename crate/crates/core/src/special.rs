//! Scalar building blocks: the standard normal density and distribution
//! function, binomial probabilities, and the upper-truncated normal mean.
//!
//! # Accuracy
//!
//! * [`std_normal_cdf`] is evaluated as `erfc(-x/√2)/2` with the FreeBSD/musl
//!   `erfc` (via the `libm` crate), which is accurate to within one ulp. The
//!   resulting absolute error is below `1e-15` on the whole real line; the
//!   test suite pins `1e-12` against 40-digit reference values on `|x| ≤ 8`.
//! * [`binomial_pmf`] uses Loader's saddle-point expansion (the algorithm
//!   behind R's `dbinom`), which works in log space and keeps a relative
//!   error near machine precision for `ell` well beyond `10⁴`.
//! * Binomial tails are sums of pmf terms with Neumaier compensation.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ViseError};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(ViseError::domain(
                "Probability::new",
                format!("{value} is not in [0, 1]"),
            ))
        }
    }

    /// Clamps rounding noise into `[0, 1]`. Only for values that are
    /// probabilities by construction.
    pub(crate) fn saturating(value: f64) -> Self {
        Probability(value.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn complement(self) -> Probability {
        Probability(1.0 - self.0)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Arguments of an upper binomial tail: the probability that strictly more
/// than `xi` of `ell` independent trials succeed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSpec {
    pub xi: f64,
    pub ell: u32,
    pub p: Probability,
}

impl TailSpec {
    pub fn new(xi: f64, ell: u32, p: Probability) -> Result<Self> {
        if ell == 0 {
            return Err(ViseError::domain("TailSpec::new", "ell must be at least 1"));
        }
        if !xi.is_finite() {
            return Err(ViseError::domain("TailSpec::new", format!("xi = {xi}")));
        }
        Ok(TailSpec { xi, ell, p })
    }
}

fn require_finite(op: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(ViseError::domain(op, format!("non-finite input {x}")))
    }
}

/// Standard normal density. Accepts infinities.
#[inline]
pub(crate) fn density(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function. Accepts infinities.
#[inline]
pub(crate) fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn std_normal_pdf(x: f64) -> Result<f64> {
    require_finite("std_normal_pdf", x)?;
    Ok(density(x))
}

/// `Φ(x)`, absolute error below `1e-15`.
pub fn std_normal_cdf(x: f64) -> Result<Probability> {
    require_finite("std_normal_cdf", x)?;
    Ok(Probability::saturating(cdf(x)))
}

// ln(n!) - (n + 1/2) ln n + n - ln √(2π) for n = 1..=15.
#[allow(clippy::excessive_precision)]
const STIRLERR_SMALL: [f64; 15] = [
    0.081_061_466_795_327_258,
    0.041_340_695_955_409_294,
    0.027_677_925_684_998_339,
    0.020_790_672_103_765_093,
    0.016_644_691_189_821_192,
    0.013_876_128_823_070_748,
    0.011_896_709_945_891_770,
    0.010_411_265_261_972_096,
    0.009_255_462_182_712_733,
    0.008_330_563_433_362_871,
    0.007_573_675_487_951_841,
    0.006_942_840_107_209_530,
    0.006_408_994_188_004_207,
    0.005_951_370_112_758_848,
    0.005_554_733_551_962_801,
];

/// Error of Stirling's approximation to `ln(n!)`, for integer `n ≥ 1`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if n <= 15.0 {
        return STIRLERR_SMALL[n as usize - 1];
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/np) + np - x`, computed without cancellation when
/// `x ≈ np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// Natural log of `C(ell, x) p^x q^(ell-x)`; `-inf` for impossible outcomes.
pub(crate) fn ln_pmf(x: u32, ell: u32, p: f64, q: f64) -> f64 {
    debug_assert!(x <= ell);
    if p == 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if x == ell { 0.0 } else { f64::NEG_INFINITY };
    }
    let n = f64::from(ell);
    if x == 0 {
        if ell == 0 {
            return 0.0;
        }
        return if p < 0.1 { -bd0(n, n * q) - n * p } else { n * q.ln() };
    }
    if x == ell {
        return if q < 0.1 { -bd0(n, n * p) - n * q } else { n * p.ln() };
    }
    let k = f64::from(x);
    let lc = stirlerr(n) - stirlerr(k) - stirlerr(n - k) - bd0(k, n * p) - bd0(n - k, n * q);
    let lf = LN_2PI + k.ln() + (-k / n).ln_1p();
    lc - 0.5 * lf
}

#[inline]
pub(crate) fn pmf(x: u32, ell: u32, p: f64, q: f64) -> f64 {
    ln_pmf(x, ell, p, q).exp()
}

/// `ln b(x | ell)` for the binomial distribution with success probability `p`.
pub fn ln_binomial_pmf(x: u32, ell: u32, p: Probability) -> Result<f64> {
    if x > ell {
        return Err(ViseError::domain(
            "ln_binomial_pmf",
            format!("x = {x} exceeds ell = {ell}"),
        ));
    }
    Ok(ln_pmf(x, ell, p.0, 1.0 - p.0))
}

/// `b(x | ell) = C(ell, x) p^x q^(ell-x)`.
pub fn binomial_pmf(x: u32, ell: u32, p: Probability) -> Result<Probability> {
    if x > ell {
        return Err(ViseError::domain(
            "binomial_pmf",
            format!("x = {x} exceeds ell = {ell}"),
        ));
    }
    Ok(Probability::saturating(pmf(x, ell, p.0, 1.0 - p.0)))
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn total(self) -> f64 {
        self.sum + self.carry
    }
}

/// First vote count that strictly exceeds `xi`: `floor(xi) + 1`.
#[inline]
pub(crate) fn first_count_above(xi: f64) -> i64 {
    xi.floor() as i64 + 1
}

/// `Σ_{x = floor(xi)+1}^{ell} b(x | ell)` with `q = 1 - p` supplied by the
/// caller. Works for `ell = 0` (a point mass at zero).
pub(crate) fn upper_tail(xi: f64, ell: u32, p: f64, q: f64) -> f64 {
    let from = first_count_above(xi);
    if from <= 0 {
        return 1.0;
    }
    if from > i64::from(ell) {
        return 0.0;
    }
    let mut acc = CompensatedSum::default();
    for x in from as u32..=ell {
        acc.add(ln_pmf(x, ell, p, q).exp());
    }
    acc.total().clamp(0.0, 1.0)
}

/// `b(x | ell)` for any integer `x`; zero off the support.
pub(crate) fn pmf_or_zero(x: i64, ell: u32, p: f64, q: f64) -> f64 {
    if x < 0 || x > i64::from(ell) {
        0.0
    } else {
        pmf(x as u32, ell, p, q)
    }
}

/// `Σ_{x=from}^{to} b(x | ell)`, clipped to the support.
pub(crate) fn mass_between(from: i64, to: i64, ell: u32, p: f64, q: f64) -> f64 {
    let from = from.max(0);
    let to = to.min(i64::from(ell));
    let mut acc = CompensatedSum::default();
    for x in from..=to {
        acc.add(pmf(x as u32, ell, p, q));
    }
    acc.total().clamp(0.0, 1.0)
}

/// Probability that strictly more than `spec.xi` of `spec.ell` trials succeed.
pub fn binomial_upper_tail(spec: &TailSpec) -> Probability {
    Probability::saturating(upper_tail(spec.xi, spec.ell, spec.p.0, 1.0 - spec.p.0))
}

/// Continuity-corrected normal approximation to [`binomial_upper_tail`]:
/// `Φ(-(floor(xi) + 0.5 - p·ell) / √(p·q·ell))`.
pub fn binomial_upper_tail_normal_approx(spec: &TailSpec) -> Result<Probability> {
    let p = spec.p.0;
    let q = 1.0 - p;
    if p <= 0.0 || q <= 0.0 {
        return Err(ViseError::domain(
            "binomial_upper_tail_normal_approx",
            format!("p = {p} gives zero variance"),
        ));
    }
    let ell = f64::from(spec.ell);
    let z = -(spec.xi.floor() + 0.5 - p * ell) / (p * q * ell).sqrt();
    Ok(Probability::saturating(cdf(z)))
}

/// `M(ζ | ζ > t)` for `ζ ~ N(mu, sigma²)`: `mu + sigma·f(z)/F(z)` with
/// `z = (mu - t)/sigma`.
pub fn truncated_normal_mean(mu: f64, sigma: f64, t: f64) -> Result<f64> {
    require_finite("truncated_normal_mean", mu)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(ViseError::domain(
            "truncated_normal_mean",
            format!("sigma = {sigma} must be positive and finite"),
        ));
    }
    if t.is_nan() {
        return Err(ViseError::domain("truncated_normal_mean", "t is NaN"));
    }
    let z = (mu - t) / sigma;
    let tail = cdf(z);
    if tail == 0.0 {
        return Err(ViseError::Overflow {
            op: "truncated_normal_mean",
            detail: format!("P(ζ > t) underflows to 0 at z = {z:.3}; t lies too far above mu"),
        });
    }
    let ratio = density(z) / tail;
    if !ratio.is_finite() {
        return Err(ViseError::Overflow {
            op: "truncated_normal_mean",
            detail: format!("inverse Mills ratio is not finite at z = {z:.3}"),
        });
    }
    Ok(mu + sigma * ratio)
}
