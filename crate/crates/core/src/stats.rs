//! Two-sample t-tests over per-fold metric values.
//!
//! Student-t tail probabilities come from the regularized incomplete beta
//! function, evaluated by its continued fraction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("each sample needs at least two values, got {0} and {1}")]
    TooFewSamples(usize, usize),
    #[error("paired samples differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("alpha {0} not in (0, 1)")]
    InvalidAlpha(f64),
}

pub type Result<T> = std::result::Result<T, StatsError>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// Unpaired, unequal variances, Welch–Satterthwaite degrees of freedom.
    #[default]
    Welch,
    Paired,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::Welch => "welch",
            TestKind::Paired => "paired",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult<T> {
    pub kind: TestKind,
    pub t: T,
    pub df: T,
    /// Two-sided.
    pub p_value: T,
    pub significant: bool,
    /// Both samples (or all paired differences) were constant. `t` is then 0
    /// with `p = 1` when the means agree, and infinite with `p = 0` otherwise.
    pub zero_variance: bool,
}

fn mean_var<T: Scalar>(x: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(x.len());
    let mean = x.iter().copied().sum::<T>() / n;
    let ss: T = x.iter().map(|&v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - T::one()))
}

fn check<T: Scalar>(a: &[T], b: &[T], alpha: f64) -> Result<()> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::TooFewSamples(a.len(), b.len()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidAlpha(alpha));
    }
    Ok(())
}

fn degenerate<T: Scalar>(kind: TestKind, diff: T, df: T, alpha: f64) -> TestResult<T> {
    let (t, p) = if diff == T::zero() {
        (T::zero(), T::one())
    } else {
        (diff.signum() * T::infinity(), T::zero())
    };
    TestResult { kind, t, df, p_value: p, significant: p < T::lit(alpha), zero_variance: true }
}

/// Welch's unequal-variance two-sample t-test.
pub fn welch_t_test<T: Scalar>(a: &[T], b: &[T], alpha: f64) -> Result<TestResult<T>> {
    check(a, b, alpha)?;
    let (na, nb) = (T::from_usize_lossy(a.len()), T::from_usize_lossy(b.len()));
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == T::zero() {
        return Ok(degenerate(TestKind::Welch, ma - mb, na + nb - T::lit(2.0), alpha));
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - T::one()) + sb * sb / (nb - T::one()));
    let p = t_two_sided_p(t, df);
    Ok(TestResult { kind: TestKind::Welch, t, df, p_value: p, significant: p < T::lit(alpha), zero_variance: false })
}

/// Paired t-test on the differences `a_i - b_i`.
pub fn paired_t_test<T: Scalar>(a: &[T], b: &[T], alpha: f64) -> Result<TestResult<T>> {
    check(a, b, alpha)?;
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let d: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
    let n = T::from_usize_lossy(d.len());
    let (md, vd) = mean_var(&d);
    let df = n - T::one();
    if vd == T::zero() {
        return Ok(degenerate(TestKind::Paired, md, df, alpha));
    }
    let t = md / (vd / n).sqrt();
    let p = t_two_sided_p(t, df);
    Ok(TestResult { kind: TestKind::Paired, t, df, p_value: p, significant: p < T::lit(alpha), zero_variance: false })
}

pub fn run_test<T: Scalar>(kind: TestKind, a: &[T], b: &[T], alpha: f64) -> Result<TestResult<T>> {
    match kind {
        TestKind::Welch => welch_t_test(a, b, alpha),
        TestKind::Paired => paired_t_test(a, b, alpha),
    }
}

/// `P(|T| ≥ |t|)` for Student's t with `df` degrees of freedom.
pub fn t_two_sided_p<T: Scalar>(t: T, df: T) -> T {
    if t.is_infinite() {
        return T::zero();
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, df / T::lit(2.0), T::lit(0.5)).max(T::zero()).min(T::one())
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < T::lit(0.5) {
        // reflection
        return (T::PI() / (T::PI() * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut sum = T::lit(COEF[0]);
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        sum += T::lit(c) / (x + T::from_usize_lossy(i));
    }
    let t = x + T::lit(7.5);
    T::lit(0.5) * (T::lit(2.0) * T::PI()).ln() + (x + T::lit(0.5)) * t.ln() - t + sum.ln()
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_incomplete_beta<T: Scalar>(x: T, a: T, b: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (T::one() - x).ln();
    if x < (a + T::one()) / (a + b + T::lit(2.0)) {
        ln_front.exp() * beta_continued_fraction(x, a, b) / a
    } else {
        T::one() - ln_front.exp() * beta_continued_fraction(T::one() - x, b, a) / b
    }
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction<T: Scalar>(x: T, a: T, b: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    let eps = T::epsilon();
    let one = T::one();
    let guard = |v: T| if v.abs() < tiny { tiny } else { v };
    let mut c = one;
    let mut d = one / guard(one - (a + b) * x / (a + one));
    let mut h = d;
    for m in 1..=500usize {
        let m = T::from_usize_lossy(m);
        let m2 = m + m;
        let even = m * (b - m) * x / ((a + m2 - one) * (a + m2));
        d = one / guard(one + even * d);
        c = guard(one + even / c);
        h *= d * c;
        let odd = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + one));
        d = one / guard(one + odd * d);
        c = guard(one + odd / c);
        let delta = d * c;
        h *= delta;
        if (delta - one).abs() < eps {
            break;
        }
    }
    h
}
