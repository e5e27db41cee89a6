//! The special functions behind the asymptotic guess: the inverse pair
//! `theta(lambda)` / `lambda(theta)`, the exponents `f`, `j` and their
//! derivatives, and the regularized parts `f_0`, `j_0` near `theta = 0`.
//!
//! Everything is evaluated with MPFR at a configurable mantissa width.
//! Near `theta = 0` the closed forms for `lambda'`, `f''` and `j'` are `0/0`,
//! so the evaluation is routed through `u = 1 - 4 lambda` and the series
//!
//! ```text
//! theta(u) = sum_{k >= 1} u^k / (2k + 1)
//! ```
//!
//! which keeps `u` (and hence `f' = -ln u`) at full relative precision.

use rug::float::Constant;
use rug::Float;

use crate::error::{Error, Result};

/// Extra bits carried through intermediate computations.
pub const GUARD_BITS: u32 = 16;

/// Width of the bisection bracket, relative to its upper end, before the
/// derivative-refined iteration takes over.
const BISECTION_WIDTH_BITS: i32 = 40;

/// Precision and branch-switch parameters shared by all evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionConfig {
    pub mantissa_bits: u32,
    /// Below this `theta` the series in `u` is used.
    pub theta_switch: f64,
    /// Maximum number of series terms.
    pub series_terms: usize,
    /// Additive constant of `j`; `None` means `ln(2)/2`.
    pub j_constant: Option<f64>,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig {
            mantissa_bits: 128,
            theta_switch: 1e-2,
            series_terms: 40,
            j_constant: None,
        }
    }
}

impl PrecisionConfig {
    pub fn with_bits(bits: u32) -> Self {
        PrecisionConfig {
            mantissa_bits: bits,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mantissa_bits < 64 {
            return Err(Error::Config(format!(
                "mantissa_bits must be at least 64, got {}",
                self.mantissa_bits
            )));
        }
        if !(self.theta_switch > 0.0 && self.theta_switch < 0.1) {
            return Err(Error::Config(format!(
                "theta_switch must lie in (0, 0.1), got {}",
                self.theta_switch
            )));
        }
        if self.series_terms == 0 {
            return Err(Error::Config("series_terms must be positive".into()));
        }
        if let Some(c) = self.j_constant {
            if !c.is_finite() {
                return Err(Error::Config("j_constant must be finite".into()));
            }
        }
        Ok(())
    }

    /// Precision of intermediate and returned values.
    pub fn working_bits(&self) -> u32 {
        self.mantissa_bits + GUARD_BITS
    }

    /// `2^(8 - mantissa_bits)`, the module-wide accuracy target.
    pub fn tolerance(&self) -> Float {
        Float::with_val(64, Float::i_exp(1, 8 - self.mantissa_bits as i32))
    }

    /// A value at working precision.
    pub fn float<T>(&self, x: T) -> Float
    where
        Float: rug::Assign<T>,
    {
        Float::with_val(self.working_bits(), x)
    }

    /// `num / den` rounded once at working precision.
    pub fn ratio(&self, num: usize, den: usize) -> Float {
        self.float(num) / den as u64
    }

    fn theta_switch_float(&self) -> Float {
        self.float(self.theta_switch)
    }

    /// The additive constant of `j`.
    pub fn j_constant(&self) -> Float {
        match self.j_constant {
            Some(c) => self.float(c),
            None => self.float(2).ln() / 2u32,
        }
    }
}

/// A real number that may be `+infinity`, reported as an explicit flag.
#[derive(Debug, Clone, PartialEq)]
pub enum Extended {
    Finite(Float),
    PosInfinity,
}

impl Extended {
    pub fn finite(&self) -> Option<&Float> {
        match self {
            Extended::Finite(x) => Some(x),
            Extended::PosInfinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Extended::PosInfinity)
    }
}

/// All functions evaluated at one `theta`.
#[derive(Debug, Clone)]
pub struct AsymPoint {
    pub theta: Float,
    pub lambda: Float,
    pub f: Float,
    /// Undefined at `theta = 0`.
    pub j: Option<Float>,
    pub f_prime: Extended,
    pub f_double_prime: Option<Float>,
    pub j_prime: Option<Float>,
    pub lambda_prime: Float,
    /// `f + theta ln theta`.
    pub f0: Float,
    /// `j + ln(theta) / 2`.
    pub j0: Float,
}

impl AsymPoint {
    /// `1 - 4 (theta + 1) lambda`.
    pub fn g_aux(&self) -> Float {
        let t1 = Float::with_val(self.theta.prec(), &self.theta + 1u32);
        Float::with_val(self.theta.prec(), 1u32 - t1 * &self.lambda * 4u32)
    }
}

/// Series sums at `u`: `R(u) = sum u^(k-1)/(2k+1)` (so `theta = u R(u)`)
/// and `T(u) = sum k u^(k-1)/(2k+1) = d theta / du`.
fn series(u: &Float, cfg: &PrecisionConfig) -> (Float, Float) {
    let wp = u.prec();
    let mut r = Float::with_val(wp, 0);
    let mut t = Float::with_val(wp, 0);
    let mut power = Float::with_val(wp, 1);
    let eps = Float::with_val(64, Float::i_exp(1, -(wp as i32) - 4));
    for k in 1..=cfg.series_terms as u32 {
        let term = Float::with_val(wp, &power / (2 * k + 1));
        r += &term;
        t += Float::with_val(wp, &term * k);
        let small = Float::with_val(wp, term.abs_ref()) <= Float::with_val(wp, &eps * Float::with_val(wp, r.abs_ref()));
        if small && k > 1 {
            break;
        }
        power *= u;
    }
    (r, t)
}

/// A solved point: `theta`, `lambda` and `u = 1 - 4 lambda`, the latter kept
/// separately so it has full relative precision when small.
#[derive(Debug, Clone)]
struct Solved {
    theta: Float,
    lambda: Float,
    u: Float,
    series: bool,
}

fn check_lambda(lambda: &Float) -> Result<()> {
    if lambda.is_nan() || *lambda <= 0 || *lambda > 0.25 {
        return Err(Error::Domain(format!("lambda must lie in (0, 1/4], got {lambda}")));
    }
    Ok(())
}

fn check_theta(theta: &Float) -> Result<()> {
    if theta.is_nan() || theta.is_infinite() || *theta < 0 {
        return Err(Error::Domain(format!("theta must be finite and >= 0, got {theta}")));
    }
    Ok(())
}

/// `theta` at given `lambda` and `u = 1 - 4 lambda`.
fn theta_at(lambda: &Float, u: &Float, cfg: &PrecisionConfig) -> Float {
    let wp = cfg.working_bits();
    if *u < Float::with_val(wp, cfg.theta_switch * 3.0) {
        let (r, _) = series(u, cfg);
        return r * u;
    }
    // artanh(s) = ln(1 + s) - ln(4 lambda) / 2 with s = sqrt(u), stable as lambda -> 0
    let s = Float::with_val(wp, u.sqrt_ref());
    let four_lambda = Float::with_val(wp, lambda * 4u32);
    let artanh = Float::with_val(wp, s.ln_1p_ref()) - four_lambda.ln() / 2u32;
    artanh / s - 1u32
}

/// `d theta / d lambda` at a solved point.
fn theta_slope(p: &Solved, cfg: &PrecisionConfig) -> Float {
    let wp = cfg.working_bits();
    if p.series {
        let (_, t) = series(&p.u, cfg);
        return t * -4i32;
    }
    let a = Float::with_val(wp, &p.theta * 2u32) / &p.u;
    let b = Float::with_val(wp, &p.lambda * 2u32).recip();
    a - b
}

fn one_minus_four(lambda: &Float, wp: u32) -> Float {
    Float::with_val(wp, 1u32 - Float::with_val(wp, lambda * 4u32))
}

/// Closed-form `theta(lambda)`, with the series in `u = 1 - 4 lambda` near
/// `lambda = 1/4`.
pub fn theta_of_lambda(lambda: &Float, cfg: &PrecisionConfig) -> Result<Float> {
    check_lambda(lambda)?;
    let wp = cfg.working_bits();
    let lambda = Float::with_val(wp, lambda);
    let u = one_minus_four(&lambda, wp);
    Ok(theta_at(&lambda, &u, cfg))
}

/// Right-hand side of the linear ODE for `theta` as a function of `lambda`:
/// `2 theta / (1 - 4 lambda) - 1 / (2 lambda)`.
pub fn theta_ode_rhs(lambda: &Float, cfg: &PrecisionConfig) -> Result<Float> {
    check_lambda(lambda)?;
    if *lambda == 0.25 {
        return Err(Error::Domain("theta ODE is singular at lambda = 1/4".into()));
    }
    let wp = cfg.working_bits();
    let lambda = Float::with_val(wp, lambda);
    let u = one_minus_four(&lambda, wp);
    let theta = theta_at(&lambda, &u, cfg);
    let p = Solved {
        theta,
        lambda,
        u,
        series: false,
    };
    Ok(theta_slope(&p, cfg))
}

/// Solves `theta(u) = theta` on the series branch by Newton iteration in `u`.
/// Also valid for small negative `theta` (analytic continuation).
fn solve_series(theta: &Float, cfg: &PrecisionConfig) -> Solved {
    let wp = cfg.working_bits();
    let mut u = Float::with_val(wp, theta * 3u32);
    if !theta.is_zero() {
        for _ in 0..64 {
            let (r, t) = series(&u, cfg);
            let residual = Float::with_val(wp, &r * &u) - theta;
            let step = residual / t;
            u -= &step;
            let tiny = Float::with_val(wp, u.abs_ref()) >> (wp as i32 - 4);
            if Float::with_val(wp, step.abs_ref()) <= tiny {
                break;
            }
        }
    }
    let lambda = Float::with_val(wp, 1u32 - &u) / 4u32;
    Solved {
        theta: Float::with_val(wp, theta),
        lambda,
        u,
        series: true,
    }
}

/// `theta` as a function of `L = ln lambda`, in double precision. Used only
/// to bracket the root; the result is refined at full precision.
fn theta_of_log_lambda_f64(l: f64, cfg: &PrecisionConfig) -> f64 {
    let u = 1.0 - 4.0 * l.exp();
    if u < 3.0 * cfg.theta_switch {
        let (mut sum, mut power) = (0.0, u);
        for k in 1..=cfg.series_terms {
            sum += power / (2 * k + 1) as f64;
            power *= u;
        }
        return sum;
    }
    let s = u.sqrt();
    (s.ln_1p() - (4f64.ln() + l) / 2.0) / s - 1.0
}

/// Bisection in `ln lambda` over `[ln 10^-bits, ln 1/4]`, widened by repeated
/// squaring of the lower end, down to relative width 2^-40.
fn bracket_f64(theta: f64, cfg: &PrecisionConfig) -> (f64, f64) {
    let mut lo = -(cfg.mantissa_bits as f64) * 10f64.ln();
    while theta_of_log_lambda_f64(lo, cfg) < theta {
        lo *= 2.0;
    }
    let mut hi = 0.25f64.ln();
    let width = (-(BISECTION_WIDTH_BITS as f64)).exp2();
    while hi - lo > width * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if theta_of_log_lambda_f64(mid, cfg) > theta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Newton iteration on `lambda` from `start`, confined to `(lo, hi)`.
/// Returns `None` if an iterate leaves the bracket.
fn newton_lambda(theta: &Float, start: Float, lo: &Float, hi: &Float, cfg: &PrecisionConfig) -> Option<Float> {
    let wp = cfg.working_bits();
    let mut lambda = start;
    for _ in 0..24 {
        let u = one_minus_four(&lambda, wp);
        let p = Solved {
            theta: theta_at(&lambda, &u, cfg),
            lambda: lambda.clone(),
            u,
            series: false,
        };
        let residual = Float::with_val(wp, &p.theta - theta);
        let step = residual / theta_slope(&p, cfg);
        let next = Float::with_val(wp, &lambda - &step);
        if next <= *lo || next >= *hi {
            return None;
        }
        lambda = next;
        // evaluation noise in theta sits near 2^-wp relative, so stop at the target precision
        if Float::with_val(wp, step.abs_ref()) <= Float::with_val(wp, &lambda >> cfg.mantissa_bits as i32) {
            break;
        }
    }
    Some(lambda)
}

/// Bisection at full precision down to width 2^-40, then Newton.
fn bisect_full(theta: &Float, cfg: &PrecisionConfig) -> (Float, Float, Float) {
    let wp = cfg.working_bits();
    let at = |lambda: &Float| theta_at(lambda, &one_minus_four(lambda, wp), cfg);
    let mut lo = Float::with_val(wp, Float::u_pow_u(10, cfg.mantissa_bits)).recip();
    while at(&lo) < *theta {
        lo.square_mut();
    }
    let mut hi = Float::with_val(wp, 0.25);
    loop {
        let width = Float::with_val(wp, &hi - &lo);
        if width <= Float::with_val(wp, &hi >> BISECTION_WIDTH_BITS) {
            break;
        }
        let ratio = Float::with_val(wp, &hi / &lo);
        let mid = if ratio > 4 {
            Float::with_val(wp, &lo * &hi).sqrt()
        } else {
            Float::with_val(wp, &lo + &hi) / 2u32
        };
        if at(&mid) > *theta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = Float::with_val(wp, &lo + &hi) / 2u32;
    (lo, mid, hi)
}

/// Bracketed bisection followed by Newton iteration on `lambda`. The
/// bracket is located in double precision on `ln lambda`; if Newton does
/// not settle inside it, the whole search is repeated at full precision.
fn solve_bracketed(theta: &Float, cfg: &PrecisionConfig) -> Solved {
    let wp = cfg.working_bits();
    let (l_lo, l_hi) = bracket_f64(theta.to_f64(), cfg);
    // widen by 2^-30 relative to absorb double rounding
    let pad = (-30f64).exp2();
    let lo = Float::with_val(wp, l_lo - pad).exp();
    let hi = Float::with_val(wp, l_hi + pad).exp().min(&Float::with_val(wp, 0.25));
    let start = Float::with_val(wp, 0.5 * (l_lo + l_hi)).exp();
    let lambda = match newton_lambda(theta, start, &lo, &hi, cfg) {
        Some(l) => l,
        None => {
            let (lo, mid, hi) = bisect_full(theta, cfg);
            newton_lambda(theta, mid.clone(), &lo, &hi, cfg).unwrap_or(mid)
        }
    };
    let u = one_minus_four(&lambda, wp);
    Solved {
        theta: Float::with_val(wp, theta),
        lambda,
        u,
        series: false,
    }
}

fn solve(theta: &Float, cfg: &PrecisionConfig) -> Result<Solved> {
    check_theta(theta)?;
    if *theta < cfg.theta_switch_float() {
        Ok(solve_series(theta, cfg))
    } else {
        Ok(solve_bracketed(theta, cfg))
    }
}

/// The unique `lambda` in `(0, 1/4]` with `theta_of_lambda(lambda) = theta`.
pub fn lambda_of_theta(theta: &Float, cfg: &PrecisionConfig) -> Result<Float> {
    Ok(solve(theta, cfg)?.lambda)
}

fn lambda_prime_at(p: &Solved, cfg: &PrecisionConfig) -> Float {
    let wp = cfg.working_bits();
    if p.series {
        return theta_slope(p, cfg).recip();
    }
    let g = g_at(p, wp);
    Float::with_val(wp, &p.lambda * &p.u) * -2i32 / g
}

/// `1 - 4 (theta + 1) lambda = u - 4 theta lambda`.
fn g_at(p: &Solved, wp: u32) -> Float {
    let t = Float::with_val(wp, &p.theta * &p.lambda) * 4u32;
    Float::with_val(wp, &p.u - t)
}

/// `ln(1 - 4 lambda)`.
fn ln_u(p: &Solved, wp: u32) -> Float {
    if p.u >= 0.5 {
        Float::with_val(wp, &p.lambda * -4i32).ln_1p()
    } else {
        Float::with_val(wp, p.u.ln_ref())
    }
}

/// `ln(1 - 4 (theta + 1) lambda)`.
fn ln_g(p: &Solved, wp: u32) -> Float {
    let x = Float::with_val(wp, &p.theta + 1u32) * &p.lambda * 4u32;
    if x <= 0.5 {
        (-x).ln_1p()
    } else {
        g_at(p, wp).ln()
    }
}

/// `lambda'(theta)`; from the `u`-series below the switch, where the closed
/// form is `0/0` at the origin.
pub fn lambda_prime(theta: &Float, cfg: &PrecisionConfig) -> Result<Float> {
    let p = solve(theta, cfg)?;
    Ok(lambda_prime_at(&p, cfg))
}

/// `f = -ln(lambda) - 2 theta - theta ln(1 - 4 lambda)`; `ln 4` at the origin.
pub fn f_of_theta(theta: &Float, cfg: &PrecisionConfig) -> Result<Float> {
    let p = solve(theta, cfg)?;
    Ok(f_at(&p, cfg.working_bits()))
}

fn f_at(p: &Solved, wp: u32) -> Float {
    let head = -Float::with_val(wp, p.lambda.ln_ref()) - Float::with_val(wp, &p.theta * 2u32);
    if p.theta.is_zero() {
        return head;
    }
    head - ln_u(p, wp) * &p.theta
}

fn j_at(p: &Solved, cfg: &PrecisionConfig) -> Float {
    -ln_g(p, cfg.working_bits()) / 2u32 + cfg.j_constant()
}

fn require_positive(theta: &Float, what: &str) -> Result<()> {
    if theta.is_nan() || *theta <= 0 {
        return Err(Error::Domain(format!("{what} requires theta > 0, got {theta}")));
    }
    Ok(())
}

/// `j = -ln(1 - 4(theta + 1) lambda) / 2 + c_j`, defined for `theta > 0`.
pub fn j_of_theta(theta: &Float, cfg: &PrecisionConfig) -> Result<Float> {
    require_positive(theta, "j")?;
    let p = solve(theta, cfg)?;
    Ok(j_at(&p, cfg))
}

/// `f' = -ln(1 - 4 lambda)`, `+infinity` at the origin.
pub fn f_prime(theta: &Float, cfg: &PrecisionConfig) -> Result<Extended> {
    let p = solve(theta, cfg)?;
    Ok(f_prime_at(&p, cfg.working_bits()))
}

fn f_prime_at(p: &Solved, wp: u32) -> Extended {
    if p.u.is_zero() {
        Extended::PosInfinity
    } else {
        Extended::Finite(-ln_u(p, wp))
    }
}

/// `f'' = 4 lambda' / (1 - 4 lambda)`, defined for `theta > 0`.
pub fn f_double_prime(theta: &Float, cfg: &PrecisionConfig) -> Result<Float> {
    require_positive(theta, "f''")?;
    let p = solve(theta, cfg)?;
    Ok(f_double_prime_at(&p, cfg))
}

fn f_double_prime_at(p: &Solved, cfg: &PrecisionConfig) -> Float {
    lambda_prime_at(p, cfg) * 4u32 / &p.u
}

/// `j' = -g' / (2 g)` with `g = 1 - 4(theta + 1) lambda`, defined for `theta > 0`.
pub fn j_prime(theta: &Float, cfg: &PrecisionConfig) -> Result<Float> {
    require_positive(theta, "j'")?;
    let p = solve(theta, cfg)?;
    Ok(j_prime_at(&p, cfg))
}

fn j_prime_at(p: &Solved, cfg: &PrecisionConfig) -> Float {
    let wp = cfg.working_bits();
    let lp = lambda_prime_at(p, cfg);
    let g = g_at(p, wp);
    // g' = -4 lambda - 4 (theta + 1) lambda'
    let g_prime = -(Float::with_val(wp, &p.lambda * 4u32) + Float::with_val(wp, &p.theta + 1u32) * lp * 4u32);
    -g_prime / (g * 2u32)
}

/// `(f0, j0)` at a solved point.
fn regular_parts(p: &Solved, cfg: &PrecisionConfig) -> (Float, Float) {
    let wp = cfg.working_bits();
    if p.series {
        // u / theta = 1 / R(u), finite through theta = 0
        let (r, _) = series(&p.u, cfg);
        let u_over_theta = r.recip();
        let g_over_theta = Float::with_val(wp, &u_over_theta - Float::with_val(wp, &p.lambda * 4u32));
        let mut f0 = -Float::with_val(wp, p.lambda.ln_ref()) - Float::with_val(wp, &p.theta * 2u32);
        if !p.theta.is_zero() {
            f0 -= u_over_theta.ln() * &p.theta;
        }
        let j0 = -g_over_theta.ln() / 2u32 + cfg.j_constant();
        (f0, j0)
    } else {
        let ln_theta = Float::with_val(wp, p.theta.ln_ref());
        let f0 = f_at(p, wp) + Float::with_val(wp, &p.theta * &ln_theta);
        let j0 = j_at(p, cfg) + ln_theta / 2u32;
        (f0, j0)
    }
}

/// `(f + theta ln theta, j + ln(theta) / 2)`, with limits `(ln 4, 0)` at the
/// origin.
///
/// Arguments in `(-theta_switch, 0)` are accepted and evaluated on the
/// analytic continuation through the `u`-series, so central differences at
/// the origin are available.
pub fn f0_j0(theta: &Float, cfg: &PrecisionConfig) -> Result<(Float, Float)> {
    if theta.is_nan() || theta.is_infinite() {
        return Err(Error::Domain(format!("theta must be finite, got {theta}")));
    }
    if *theta < 0 {
        let limit = -cfg.theta_switch_float();
        if *theta <= limit {
            return Err(Error::Domain(format!(
                "continuation of f0, j0 only defined for theta > -{}",
                cfg.theta_switch
            )));
        }
        let p = solve_series(theta, cfg);
        return Ok(regular_parts(&p, cfg));
    }
    let p = solve(theta, cfg)?;
    Ok(regular_parts(&p, cfg))
}

/// Every function at `theta` from a single inversion.
pub fn asym_point(theta: &Float, cfg: &PrecisionConfig) -> Result<AsymPoint> {
    let p = solve(theta, cfg)?;
    let wp = cfg.working_bits();
    let positive = !p.theta.is_zero();
    let (f0, j0) = regular_parts(&p, cfg);
    Ok(AsymPoint {
        theta: p.theta.clone(),
        lambda: p.lambda.clone(),
        f: f_at(&p, wp),
        j: positive.then(|| j_at(&p, cfg)),
        f_prime: f_prime_at(&p, wp),
        f_double_prime: positive.then(|| f_double_prime_at(&p, cfg)),
        j_prime: positive.then(|| j_prime_at(&p, cfg)),
        lambda_prime: lambda_prime_at(&p, cfg),
        f0,
        j0,
    })
}

/// `4 lambda + exp(-f') - 1`.
pub fn core_identity_residual(pt: &AsymPoint) -> Option<Float> {
    let wp = pt.lambda.prec();
    let fp = pt.f_prime.finite()?;
    let e = Float::with_val(wp, -fp).exp();
    Some(Float::with_val(wp, &pt.lambda * 4u32) + e - 1u32)
}

/// Residual of the first-order equation satisfied by `j`:
/// `(4 theta lambda - e^{-f'}) j' + (f''/2)(4 theta^2 lambda + e^{-f'}) + 4 lambda (1/2 - theta)`.
pub fn j_equation_residual(pt: &AsymPoint) -> Option<Float> {
    let wp = pt.lambda.prec();
    let fp = pt.f_prime.finite()?;
    let jp = pt.j_prime.as_ref()?;
    let fpp = pt.f_double_prime.as_ref()?;
    let e = Float::with_val(wp, -fp).exp();
    let four_lambda = Float::with_val(wp, &pt.lambda * 4u32);
    let a = Float::with_val(wp, &four_lambda * &pt.theta) - &e;
    let theta_sq = Float::with_val(wp, pt.theta.square_ref());
    let b = Float::with_val(wp, &four_lambda * theta_sq) + &e;
    let half_minus = Float::with_val(wp, 0.5) - &pt.theta;
    Some(a * jp + Float::with_val(wp, fpp * b) / 2u32 + four_lambda * half_minus)
}

/// `theta f'' - 2 - lambda'/lambda`, the second logarithmic-derivative identity.
pub fn f_double_prime_identity_residual(pt: &AsymPoint) -> Option<Float> {
    let wp = pt.lambda.prec();
    let fpp = pt.f_double_prime.as_ref()?;
    let lhs = Float::with_val(wp, fpp * &pt.theta);
    let rhs = Float::with_val(wp, &pt.lambda_prime / &pt.lambda) + 2u32;
    Some(lhs - rhs)
}

/// `ln(2 pi)` at `wp` bits.
pub(crate) fn ln_two_pi(wp: u32) -> Float {
    (Float::with_val(wp, Constant::Pi) * 2u32).ln()
}

/// `e / 3` at `wp` bits.
pub fn e_over_three(wp: u32) -> Float {
    Float::with_val(wp, 1u32).exp() / 3u32
}

/// `ln 4` at `wp` bits.
pub fn ln_four(wp: u32) -> Float {
    Float::with_val(wp, 4u32).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PrecisionConfig {
        PrecisionConfig::default()
    }

    fn f(x: f64) -> Float {
        cfg().float(x)
    }

    fn close(a: &Float, b: f64, tol: f64) -> bool {
        (a.to_f64() - b).abs() <= tol
    }

    // Reference values at lambda = 1/10 from an independent 40-digit
    // evaluation of the closed forms.
    const THETA_AT_TENTH: &str = "0.3319429006299253834005275359049295063732";
    const F_AT_TENTH: f64 = 1.808_264_231_003_169;
    const J_AT_TENTH: f64 = 0.727_048_071_387_993_4;
    const FP_AT_TENTH: f64 = 0.510_825_623_765_990_7;
    const LP_AT_TENTH: f64 = -0.256_836_759_231_88;
    const FPP_AT_TENTH: f64 = -1.712_245_061_545_866_7;
    const JP_AT_TENTH: f64 = -1.036_301_642_318_079_2;

    fn theta_tenth() -> Float {
        let c = cfg();
        Float::with_val(c.working_bits(), Float::parse(THETA_AT_TENTH).unwrap())
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(PrecisionConfig::with_bits(32).validate().is_err());
        let bad = PrecisionConfig {
            theta_switch: 0.2,
            ..cfg()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn theta_examples() {
        let c = cfg();
        assert!(theta_of_lambda(&f(0.25), &c).unwrap().is_zero());
        let t = theta_of_lambda(&(c.float(1) / 10u32), &c).unwrap();
        let diff = Float::with_val(c.working_bits(), &t - theta_tenth()).abs();
        assert!(diff < 1e-35);
        assert!(theta_of_lambda(&f(0.0), &c).is_err());
        assert!(theta_of_lambda(&f(0.3), &c).is_err());
        assert!(theta_of_lambda(&f(-1.0), &c).is_err());
    }

    #[test]
    fn theta_diverges_like_half_log_near_zero() {
        let c = cfg();
        for exp in [-50, -200, -2000] {
            let lambda = c.float(Float::i_exp(1, exp));
            let t = theta_of_lambda(&lambda, &c).unwrap();
            let lead = -Float::with_val(c.working_bits(), lambda.ln_ref()) / 2u32;
            // theta + ln(lambda)/2 tends to -1
            let gap = Float::with_val(c.working_bits(), &t - &lead).to_f64();
            assert!((gap + 1.0).abs() < 1e-10, "exp={exp} gap={gap}");
        }
    }

    #[test]
    fn lambda_examples() {
        let c = cfg();
        assert_eq!(lambda_of_theta(&f(0.0), &c).unwrap(), 0.25);
        let l = lambda_of_theta(&theta_tenth(), &c).unwrap();
        assert!(close(&l, 0.1, 1e-16));
        for t in [1e-3, 1e-4, 1e-6] {
            let l = lambda_of_theta(&f(t), &c).unwrap().to_f64();
            assert!((l - (0.25 - 0.75 * t)).abs() < 2.0 * t * t, "t={t}");
        }
        assert!(lambda_of_theta(&f(-0.5), &c).is_err());
    }

    #[test]
    fn lambda_round_trip_at_large_theta() {
        // ln lambda is near -2 theta here, past where a fixed absolute width is representable
        let c = cfg();
        for t in [6398.0, 1e5] {
            let l = lambda_of_theta(&f(t), &c).unwrap();
            let back = theta_of_lambda(&l, &c).unwrap();
            assert!(close(&back, t, 1e-20 * t), "t={t} back={back}");
        }
    }

    #[test]
    fn lambda_prime_examples() {
        let c = cfg();
        let at_zero = lambda_prime(&f(0.0), &c).unwrap();
        let diff = Float::with_val(c.working_bits(), &at_zero + 0.75).abs();
        assert!(diff < 1e-30);
        assert!(close(&lambda_prime(&theta_tenth(), &c).unwrap(), LP_AT_TENTH, 1e-15));
        let far = lambda_prime(&f(30.0), &c).unwrap();
        assert!(far < 0 && far > -1e-20);
    }

    #[test]
    fn f_and_j_examples() {
        let c = cfg();
        let ln4 = ln_four(c.working_bits());
        let f_zero = f_of_theta(&f(0.0), &c).unwrap();
        assert!(Float::with_val(c.working_bits(), &f_zero - &ln4).abs() < 1e-35);
        assert!(close(&f_of_theta(&theta_tenth(), &c).unwrap(), F_AT_TENTH, 1e-15));
        assert!(close(&j_of_theta(&theta_tenth(), &c).unwrap(), J_AT_TENTH, 1e-15));
        assert!(j_of_theta(&f(0.0), &c).is_err());
        // f tends to a constant (2) at infinity
        let a = f_of_theta(&f(30.0), &c).unwrap();
        let b = f_of_theta(&f(40.0), &c).unwrap();
        assert!(Float::with_val(c.working_bits(), &a - &b).abs() < 1e-20);
        assert!(close(&b, 2.0, 1e-20));
    }

    #[test]
    fn j_singularity_at_origin() {
        let c = cfg();
        for t in [1e-3, 1e-5, 1e-7] {
            let th = f(t);
            let j = j_of_theta(&th, &c).unwrap();
            let s = j + Float::with_val(c.working_bits(), th.ln_ref()) / 2u32;
            assert!(s.to_f64().abs() < 10.0 * t, "t={t} s={s}");
        }
    }

    #[test]
    fn derivative_examples() {
        let c = cfg();
        let t = theta_tenth();
        let fp = f_prime(&t, &c).unwrap();
        assert!(close(fp.finite().unwrap(), FP_AT_TENTH, 1e-15));
        assert!(close(&f_double_prime(&t, &c).unwrap(), FPP_AT_TENTH, 1e-15));
        assert!(close(&j_prime(&t, &c).unwrap(), JP_AT_TENTH, 1e-15));
        assert!(f_prime(&f(0.0), &c).unwrap().is_infinite());
        assert!(f_double_prime(&f(0.0), &c).is_err());
        assert!(j_prime(&f(0.0), &c).is_err());
    }

    #[test]
    fn f_double_prime_behaves_like_minus_inverse_theta() {
        let c = cfg();
        for t in [1e-4, 1e-6, 1e-8] {
            let x = f_double_prime(&f(t), &c).unwrap() * t;
            assert!((x.to_f64() + 1.0).abs() < 100.0 * t, "t={t} x={x}");
        }
    }

    #[test]
    fn second_log_derivative_identity_at_one() {
        let c = cfg();
        let pt = asym_point(&f(1.0), &c).unwrap();
        let r = f_double_prime_identity_residual(&pt).unwrap();
        assert!(r.abs() < 1e-30);
    }

    #[test]
    fn regular_parts_at_origin() {
        let c = cfg();
        let (f0, j0) = f0_j0(&f(0.0), &c).unwrap();
        assert!(Float::with_val(c.working_bits(), &f0 - ln_four(c.working_bits())).abs() < 1e-35);
        assert!(j0.abs() < 1e-35);
        let (f1, j1) = f0_j0(&f(1.0), &c).unwrap();
        let fj = f_of_theta(&f(1.0), &c).unwrap();
        let jj = j_of_theta(&f(1.0), &c).unwrap();
        assert!(Float::with_val(c.working_bits(), &f1 - &fj).abs() < 1e-35);
        assert!(Float::with_val(c.working_bits(), &j1 - &jj).abs() < 1e-35);
        assert!(f0_j0(&f(-0.5), &c).is_err());
    }

    #[test]
    fn regular_parts_continuous_across_switch() {
        let c = cfg();
        let below = f0_j0(&f(0.01 * (1.0 - 1e-12)), &c).unwrap();
        let above = f0_j0(&f(0.01), &c).unwrap();
        assert!((below.0.to_f64() - above.0.to_f64()).abs() < 1e-12);
        assert!((below.1.to_f64() - above.1.to_f64()).abs() < 1e-12);
    }

    #[test]
    fn slope_of_f0_at_origin() {
        let c = cfg();
        let h = 1e-6;
        let (fp, _) = f0_j0(&f(h), &c).unwrap();
        let (fm, _) = f0_j0(&f(-h), &c).unwrap();
        let slope = (fp - fm) / (2.0 * h);
        let got = slope.exp();
        let want = e_over_three(c.working_bits());
        assert!(Float::with_val(c.working_bits(), &got - &want).abs() < 1e-6);
    }

    #[test]
    fn asym_point_bundle() {
        let c = cfg();
        let p0 = asym_point(&f(0.0), &c).unwrap();
        assert_eq!(p0.lambda, 0.25);
        assert!(p0.f_prime.is_infinite());
        assert!(p0.j.is_none() && p0.j_prime.is_none() && p0.f_double_prime.is_none());
        assert!(close(&p0.lambda_prime, -0.75, 1e-30));
        assert!(close(&p0.f, 4f64.ln(), 1e-15));

        let p = asym_point(&theta_tenth(), &c).unwrap();
        assert!(close(&p.lambda, 0.1, 1e-16));
        assert!(close(&p.f, F_AT_TENTH, 1e-15));
        assert!(close(p.j.as_ref().unwrap(), J_AT_TENTH, 1e-15));
        assert!(close(&p.lambda_prime, LP_AT_TENTH, 1e-15));
        assert!(p.g_aux() > 0);
        for t in [1e-5, 0.3, 2.0, 17.0] {
            let p = asym_point(&f(t), &c).unwrap();
            assert!(core_identity_residual(&p).unwrap().abs() < 1e-30);
        }
    }

    #[test]
    fn custom_j_constant() {
        let c = PrecisionConfig {
            j_constant: Some(0.0),
            ..cfg()
        };
        let shifted = j_of_theta(&f(1.0), &c).unwrap();
        let plain = j_of_theta(&f(1.0), &cfg()).unwrap();
        assert!(close(&(plain - shifted), 2f64.ln() / 2.0, 1e-15));
    }

    #[test]
    fn huge_theta_stays_finite() {
        let c = cfg();
        let p = asym_point(&f(2500.0), &c).unwrap();
        assert!(p.lambda > 0);
        assert!(p.f.is_finite() && close(&p.f, 2.0, 1e-20));
        assert!(p.j.unwrap().is_finite());
    }
}
