//! Empirical checks of the guess-and-check hypotheses.
//!
//! For a grid point `(n, g)` the harness measures
//!
//! ```text
//! Q     = E(n,g) / Omega(n,g)
//! alpha = 2(2n-1)/(n+1) * Omega(n-1,g) / Omega(n,g)
//! beta  = n^2 * Omega(n,g-1) / Omega(n,g)
//! s     = Omega(n,g-1) / Omega(n,g) = beta / n^2
//! ```
//!
//! and aggregates them into decay fits, extrapolated limits and pass/fail
//! checks. All ratios are formed in log space at the configured precision
//! and only rounded to `f64` at the end.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use rug::Float;

use crate::asym::{
    asym_point, core_identity_residual, e_over_three, f0_j0, f_double_prime_identity_residual, j_equation_residual,
    lambda_of_theta, lambda_prime, ln_four, theta_ode_rhs, theta_of_lambda, PrecisionConfig,
};
use crate::error::{Error, Result};
use crate::exact::{build_table_with, ExactTable, FillStrategy};
use crate::omega::{log_omega, BoundaryNormalization, OmegaConfig};

/// Minimum number of points for a reported fit.
pub const MIN_FIT_POINTS: usize = 5;

/// Diagnostics at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub n: usize,
    pub g: usize,
    pub x: usize,
    pub theta: f64,
    /// `E / Omega`, when the exact value was available.
    pub q: Option<f64>,
    pub alpha: f64,
    /// Zero on the boundary row.
    pub beta: f64,
    /// `alpha + beta - 1`, formed before rounding.
    pub residual: f64,
    pub s: f64,
    /// Set for `g = 0`, where `beta` and `s` are zero by convention.
    pub boundary: bool,
}

/// Least-squares line through `(ln x, ln |quantity|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Quantity selected for [`fit_decay`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayQuantity {
    /// `|alpha + beta - 1|` against `ln x`.
    Residual,
    /// `s` against `ln n`.
    S,
    /// `|q - 1|` against `ln x`.
    QError,
}

/// `g = round(theta * n)`, ties rounded up.
pub fn diagonal_genus(theta: f64, n: usize) -> usize {
    (theta * n as f64 + 0.5).floor().max(0.0) as usize
}

/// `n` on the diagonal `theta` closest to scale `x = n + g`.
pub fn diagonal_size_for_scale(theta: f64, x: usize) -> usize {
    ((x as f64 / (1.0 + theta)).round() as usize).max(2)
}

/// `ln Q(n, g)`.
pub fn log_q(n: usize, g: usize, table: &ExactTable, cfg: &OmegaConfig) -> Result<Float> {
    let e = table.entry(crate::exact::GridPoint::new(n, g))?;
    let ln_e = e.ln(cfg.precision.working_bits())?;
    Ok(ln_e - log_omega(n, g, cfg)?.log_value)
}

/// `Q(n, g) = E(n, g) / Omega(n, g)`.
pub fn q_value(n: usize, g: usize, table: &ExactTable, cfg: &OmegaConfig) -> Result<f64> {
    Ok(log_q(n, g, table, cfg)?.exp().to_f64())
}

/// `s(n, g) = Omega(n, g-1) / Omega(n, g)` for `g >= 1`.
pub fn s_value(n: usize, g: usize, cfg: &OmegaConfig) -> Result<f64> {
    if g == 0 {
        return Err(Error::Domain("s(n, g) requires g >= 1".into()));
    }
    let d = log_omega(n, g - 1, cfg)?.log_value - log_omega(n, g, cfg)?.log_value;
    Ok(d.exp().to_f64())
}

/// Ratios built from `Omega` alone; `q` is left empty.
pub fn omega_record(n: usize, g: usize, cfg: &OmegaConfig) -> Result<ConvergenceRecord> {
    if n < 2 {
        return Err(Error::Domain("alpha(n, g) needs Omega(n-1, g), so n >= 2".into()));
    }
    let wp = cfg.precision.working_bits();
    let here = log_omega(n, g, cfg)?.log_value;
    let left = log_omega(n - 1, g, cfg)?.log_value;
    let n64 = n as u64;
    let coeff = Float::with_val(wp, 2 * (2 * n64 - 1)) / (n64 + 1);
    let alpha = Float::with_val(wp, &left - &here).exp() * coeff;
    let (beta, s) = if g == 0 {
        (Float::with_val(wp, 0), Float::with_val(wp, 0))
    } else {
        let down = log_omega(n, g - 1, cfg)?.log_value;
        let s = Float::with_val(wp, &down - &here).exp();
        let beta = Float::with_val(wp, &s * n64) * n64;
        (beta, s)
    };
    let residual = Float::with_val(wp, &alpha + &beta) - 1u32;
    Ok(ConvergenceRecord {
        n,
        g,
        x: n + g,
        theta: g as f64 / n as f64,
        q: None,
        alpha: alpha.to_f64(),
        beta: beta.to_f64(),
        residual: residual.to_f64(),
        s: s.to_f64(),
        boundary: g == 0,
    })
}

/// Full diagnostics at `(n, g)`, including `Q` from the exact table.
pub fn record(n: usize, g: usize, table: &ExactTable, cfg: &OmegaConfig) -> Result<ConvergenceRecord> {
    let q = q_value(n, g, table, cfg)?;
    let mut r = omega_record(n, g, cfg)?;
    r.q = Some(q);
    Ok(r)
}

/// Records along the diagonal `g = round(theta n)`. `Q` is filled in when a
/// table is supplied, and then every point must lie inside it.
pub fn residual_scan(
    theta: f64,
    n_list: &[usize],
    table: Option<&ExactTable>,
    cfg: &OmegaConfig,
) -> Result<Vec<ConvergenceRecord>> {
    if !(theta.is_finite() && theta >= 0.0) {
        return Err(Error::Domain(format!(
            "diagonal slope must be finite and >= 0, got {theta}"
        )));
    }
    n_list
        .par_iter()
        .map(|&n| {
            let g = diagonal_genus(theta, n);
            match table {
                Some(t) => record(n, g, t, cfg),
                None => omega_record(n, g, cfg),
            }
        })
        .collect()
}

/// Least-squares line through `points`.
pub fn least_squares(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: points.len(),
        });
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= f64::EPSILON * m * (1.0 + mx * mx) {
        return Err(Error::DegenerateFit("abscissae are all equal".into()));
    }
    if syy <= f64::EPSILON * m * (1.0 + my * my) {
        return Err(Error::DegenerateFit("quantity is constant".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0);
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        points: points.len(),
    })
}

/// Fits `ln |quantity|` against `ln x` (or `ln n` for `s`). Zero entries are
/// dropped; an all-zero quantity is reported as [`Error::ZeroQuantity`].
pub fn fit_decay(records: &[ConvergenceRecord], quantity: DecayQuantity) -> Result<SlopeFit> {
    let mut points = Vec::with_capacity(records.len());
    for r in records {
        let (abscissa, y) = match quantity {
            DecayQuantity::Residual => (r.x as f64, r.residual.abs()),
            DecayQuantity::S => (r.n as f64, r.s.abs()),
            DecayQuantity::QError => {
                let q = r.q.ok_or_else(|| Error::Domain("record lacks Q".into()))?;
                (r.x as f64, (q - 1.0).abs())
            }
        };
        if y > 0.0 && y.is_finite() {
            points.push((abscissa.ln(), y.ln()));
        }
    }
    if points.is_empty() && !records.is_empty() {
        return Err(Error::ZeroQuantity);
    }
    least_squares(&points)
}

/// Aitken/Richardson extrapolant of the last three terms, assuming a
/// geometric (power-law in a doubled index) error.
pub fn richardson(seq: &[f64]) -> Result<f64> {
    if seq.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: seq.len(),
        });
    }
    let [a, b, c] = [seq[seq.len() - 3], seq[seq.len() - 2], seq[seq.len() - 1]];
    let denom = (c - b) - (b - a);
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::DegenerateFit("second difference vanishes".into()));
    }
    Ok(c - (c - b) * (c - b) / denom)
}

/// Extrapolants of every window of three consecutive terms.
pub fn richardson_windows(seq: &[f64]) -> Result<Vec<f64>> {
    seq.windows(3).map(richardson).collect()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// `Q` along a sequence of grid points with its extrapolated limit.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitStudy {
    pub label: String,
    pub points: Vec<(usize, usize)>,
    pub q: Vec<f64>,
    pub kappa: f64,
    /// `|Q - kappa|` per point.
    pub errors: Vec<f64>,
}

impl LimitStudy {
    fn from_points(label: String, points: Vec<(usize, usize)>, table: &ExactTable, cfg: &OmegaConfig) -> Result<Self> {
        let q: Vec<f64> = points
            .par_iter()
            .map(|&(n, g)| q_value(n, g, table, cfg))
            .collect::<Result<_>>()?;
        let kappa = richardson(&q)?;
        let errors = q.iter().map(|v| (v - kappa).abs()).collect();
        Ok(LimitStudy {
            label,
            points,
            q,
            kappa,
            errors,
        })
    }

    pub fn errors_decreasing(&self) -> bool {
        strictly_decreasing(&self.errors)
    }
}

/// `Q(n, round(theta n))` for the given sizes.
pub fn diagonal_study(theta: f64, n_list: &[usize], table: &ExactTable, cfg: &OmegaConfig) -> Result<LimitStudy> {
    let points = n_list.iter().map(|&n| (n, diagonal_genus(theta, n))).collect();
    LimitStudy::from_points(format!("theta={theta}"), points, table, cfg)
}

/// `Q(n, g)` for fixed `g`.
pub fn fixed_genus_study(g: usize, n_list: &[usize], table: &ExactTable, cfg: &OmegaConfig) -> Result<LimitStudy> {
    let points = n_list.iter().map(|&n| (n, g)).collect();
    LimitStudy::from_points(format!("g={g}"), points, table, cfg)
}

/// Candidate values for `lim Q(n, 0)`.
pub const KAPPA0_CANDIDATES: [(&str, f64); 2] = [
    ("1 (stated boundary normalization)", 1.0),
    (
        "sqrt(2) (Catalan asymptotic 4^n / (sqrt(pi) n^(3/2)))",
        std::f64::consts::SQRT_2,
    ),
];

/// Measurement of `lim Q(n, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryStudy {
    pub n_list: Vec<usize>,
    pub q: Vec<f64>,
    pub extrapolants: Vec<f64>,
    pub kappa0: f64,
    /// Largest gap between successive extrapolants.
    pub spread: f64,
    /// Index into [`KAPPA0_CANDIDATES`] of the nearest candidate.
    pub selected: usize,
    pub distance: f64,
}

impl BoundaryStudy {
    pub fn selected_label(&self) -> &'static str {
        KAPPA0_CANDIDATES[self.selected].0
    }

    pub fn selected_value(&self) -> f64 {
        KAPPA0_CANDIDATES[self.selected].1
    }
}

pub fn boundary_study(n_list: &[usize], table: &ExactTable, cfg: &OmegaConfig) -> Result<BoundaryStudy> {
    let q: Vec<f64> = n_list
        .iter()
        .map(|&n| q_value(n, 0, table, cfg))
        .collect::<Result<_>>()?;
    let extrapolants = richardson_windows(&q)?;
    let kappa0 = *extrapolants.last().ok_or(Error::TooFewPoints {
        needed: 3,
        got: q.len(),
    })?;
    let spread = extrapolants.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    let (selected, distance) = KAPPA0_CANDIDATES
        .iter()
        .enumerate()
        .map(|(i, c)| (i, (kappa0 - c.1).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("candidates are non-empty");
    Ok(BoundaryStudy {
        n_list: n_list.to_vec(),
        q,
        extrapolants,
        kappa0,
        spread,
        selected,
        distance,
    })
}

/// Largest `|alpha + beta - 1|` on the anti-diagonal `n + g = x`, over a
/// sample of genera: every `g <= 16`, a geometric sweep, and the far end `n = 2`.
pub fn antidiagonal_max(x: usize, cfg: &OmegaConfig) -> Result<(f64, usize)> {
    if x < 3 {
        return Err(Error::Domain("anti-diagonal needs x >= 3".into()));
    }
    let g_hi = x - 2;
    let mut gs: Vec<usize> = (1..=g_hi.min(16)).collect();
    let mut g = 16.0f64;
    while g < g_hi as f64 {
        gs.push(g.round() as usize);
        g *= 1.25;
    }
    gs.push(g_hi);
    gs.sort_unstable();
    gs.dedup();
    let records: Vec<ConvergenceRecord> = gs
        .par_iter()
        .map(|&g| omega_record(x - g, g, cfg))
        .collect::<Result<_>>()?;
    let best = records
        .iter()
        .map(|r| (r.residual.abs(), r.g))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one genus sampled");
    Ok(best)
}

/// Low-genus window check at scale `x` and `theta = x^(-exponent)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowGenusCheck {
    pub x: usize,
    pub n: usize,
    pub g: usize,
    pub theta: f64,
    /// `|alpha - (1 - 3 theta)|`.
    pub alpha_gap: f64,
    /// `|beta - 3 theta|`.
    pub beta_gap: f64,
    pub alpha_bound: f64,
    pub beta_bound: f64,
}

impl LowGenusCheck {
    pub fn pass(&self) -> bool {
        self.alpha_gap <= self.alpha_bound && self.beta_gap <= self.beta_bound
    }
}

pub fn low_genus_check(x: usize, exponent: f64, cfg: &OmegaConfig) -> Result<LowGenusCheck> {
    let xf = x as f64;
    let nominal = xf.powf(-exponent);
    let g = ((xf * nominal / (1.0 + nominal)).round() as usize).max(1);
    let n = x - g;
    let r = omega_record(n, g, cfg)?;
    let theta = g as f64 / n as f64;
    Ok(LowGenusCheck {
        x,
        n,
        g,
        theta,
        alpha_gap: (r.alpha - (1.0 - 3.0 * theta)).abs(),
        beta_gap: (r.beta - 3.0 * theta).abs(),
        alpha_bound: 10.0 * xf.powf(-5.0 / 3.0),
        beta_bound: 10.0 * xf.powf(-4.0 / 3.0),
    })
}

/// Measurement plan for [`assumption_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct HarnessConfig {
    pub omega: OmegaConfig,
    /// Diagonals on which the residual and `s` decay are fitted.
    pub residual_thetas: Vec<f64>,
    /// Scales `x = n + g` for the residual fits.
    pub residual_scales: Vec<usize>,
    /// Scales of the sampled anti-diagonals.
    pub antidiagonal_scales: Vec<usize>,
    /// Diagonal along which `ln s` is fitted against `ln n`.
    pub s_theta: f64,
    /// `(theta, sizes)` for the `Q` trend along diagonals.
    pub q_diagonals: Vec<(f64, Vec<usize>)>,
    pub fixed_genera: Vec<usize>,
    pub fixed_genus_sizes: Vec<usize>,
    pub boundary_sizes: Vec<usize>,
    /// Largest genus for the `Q(1, g)` and `s(2, g)` scans.
    pub unit_genus_max: usize,
    /// Largest size for the `s(n, 1)` scan.
    pub s_row_size_max: usize,
    pub low_genus_scale: usize,
    pub low_genus_exponent: f64,
    pub cell_cap: u64,
    pub fill: FillStrategy,
}

fn geometric_scales(lo: usize, hi: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut x = lo as f64;
    while x <= hi as f64 * (1.0 + 1e-9) {
        out.push(x.round() as usize);
        x *= std::f64::consts::SQRT_2;
    }
    if *out.last().unwrap() != hi {
        out.push(hi);
    }
    out
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            omega: OmegaConfig::default(),
            residual_thetas: vec![0.25, 1.0, 4.0],
            residual_scales: geometric_scales(100, 10_000),
            antidiagonal_scales: geometric_scales(100, 6400),
            s_theta: 1.0,
            q_diagonals: vec![
                (0.25, vec![50, 100, 200, 400]),
                (1.0, vec![50, 100, 200, 400]),
                (4.0, vec![25, 50, 100, 200]),
            ],
            fixed_genera: vec![1, 2, 3],
            fixed_genus_sizes: vec![250, 500, 1000, 2000],
            boundary_sizes: vec![500, 1000, 2000, 4000],
            unit_genus_max: 1000,
            s_row_size_max: 1000,
            low_genus_scale: 10_000,
            low_genus_exponent: 0.8,
            cell_cap: 4_000_000,
            fill: FillStrategy::AntiDiagonal,
        }
    }
}

impl HarnessConfig {
    fn table(&self, n_max: usize, g_max: usize) -> Result<ExactTable> {
        build_table_with(n_max, g_max, self.cell_cap, self.fill)
    }
}

/// One named pass/fail check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

/// Everything measured by [`assumption_report`].
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub boundary_label: String,
    /// Set when the boundary row was rescaled by a measured constant.
    pub calibrated: bool,
    pub residual_scans: Vec<(f64, Vec<ConvergenceRecord>, SlopeFit)>,
    pub antidiagonal: Vec<(usize, f64, usize)>,
    pub antidiagonal_fit: SlopeFit,
    pub s_fit: SlopeFit,
    pub max_n2s: f64,
    pub boundary: BoundaryStudy,
    pub q_unit_max: f64,
    pub q_unit_argmax: usize,
    pub s2_min: f64,
    pub s_row_min: f64,
    pub diagonals: Vec<LimitStudy>,
    pub fixed_genus: Vec<LimitStudy>,
    pub low_genus: LowGenusCheck,
}

/// Measures Assumptions 1-4 and the convergence of `Q` over the plan.
pub fn assumption_report(plan: &HarnessConfig) -> Result<AssumptionReport> {
    let cfg = &plan.omega;

    // (i) residual decay along diagonals and anti-diagonals
    let mut residual_scans = Vec::new();
    for &theta in &plan.residual_thetas {
        let sizes: Vec<usize> = plan
            .residual_scales
            .iter()
            .map(|&x| diagonal_size_for_scale(theta, x))
            .collect();
        let records = residual_scan(theta, &sizes, None, cfg)?;
        let fit = fit_decay(&records, DecayQuantity::Residual)?;
        residual_scans.push((theta, records, fit));
    }
    let antidiagonal: Vec<(usize, f64, usize)> = plan
        .antidiagonal_scales
        .iter()
        .map(|&x| antidiagonal_max(x, cfg).map(|(r, g)| (x, r, g)))
        .collect::<Result<_>>()?;
    let antidiagonal_fit = least_squares(
        &antidiagonal
            .iter()
            .map(|&(x, r, _)| ((x as f64).ln(), r.ln()))
            .collect::<Vec<_>>(),
    )?;

    // (iv) s decay and the n^2 s bound
    let s_sizes: Vec<usize> = plan
        .residual_scales
        .iter()
        .map(|&x| diagonal_size_for_scale(plan.s_theta, x))
        .collect();
    let s_records = residual_scan(plan.s_theta, &s_sizes, None, cfg)?;
    let s_fit = fit_decay(&s_records, DecayQuantity::S)?;
    let max_n2s = residual_scans
        .iter()
        .flat_map(|(_, recs, _)| recs.iter())
        .chain(s_records.iter())
        .filter(|r| r.n >= 10 && !r.boundary)
        .map(|r| r.s * (r.n as f64).powi(2))
        .fold(0.0, f64::max);

    // (ii) boundary row
    let n_b = *plan.boundary_sizes.iter().max().unwrap_or(&0);
    let boundary = boundary_study(&plan.boundary_sizes, &plan.table(n_b, 0)?, cfg)?;

    // (iii) Q(1, g) and s(2, g), s(n, 1)
    let unit = plan.table(1, plan.unit_genus_max)?;
    let q_unit: Vec<(f64, usize)> = (1..=plan.unit_genus_max)
        .into_par_iter()
        .map(|g| q_value(1, g, &unit, cfg).map(|q| (q, g)))
        .collect::<Result<_>>()?;
    let (q_unit_max, q_unit_argmax) = q_unit
        .iter()
        .copied()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap_or((f64::NAN, 0));
    let s2: Vec<f64> = (1..=plan.unit_genus_max)
        .into_par_iter()
        .map(|g| s_value(2, g, cfg))
        .collect::<Result<_>>()?;
    let s2_min = s2.iter().copied().fold(f64::INFINITY, f64::min);
    let s_row: Vec<f64> = (1..=plan.s_row_size_max)
        .into_par_iter()
        .map(|n| s_value(n, 1, cfg))
        .collect::<Result<_>>()?;
    let s_row_min = s_row.iter().copied().fold(f64::INFINITY, f64::min);

    // Q along diagonals and fixed genera
    let mut diagonals = Vec::new();
    for (theta, sizes) in &plan.q_diagonals {
        let n_max = *sizes.iter().max().unwrap_or(&1);
        let g_max = sizes.iter().map(|&n| diagonal_genus(*theta, n)).max().unwrap_or(0);
        let table = plan.table(n_max, g_max)?;
        diagonals.push(diagonal_study(*theta, sizes, &table, cfg)?);
    }
    let mut fixed_genus = Vec::new();
    if !plan.fixed_genera.is_empty() {
        let n_max = *plan.fixed_genus_sizes.iter().max().unwrap_or(&1);
        let g_max = *plan.fixed_genera.iter().max().unwrap();
        let table = plan.table(n_max, g_max)?;
        for &g in &plan.fixed_genera {
            fixed_genus.push(fixed_genus_study(g, &plan.fixed_genus_sizes, &table, cfg)?);
        }
    }

    let low_genus = low_genus_check(plan.low_genus_scale, plan.low_genus_exponent, cfg)?;

    Ok(AssumptionReport {
        calibrated: matches!(cfg.boundary, BoundaryNormalization::Scaled(_)),
        boundary_label: match &cfg.boundary {
            BoundaryNormalization::Stated => "stated".to_string(),
            BoundaryNormalization::Scaled(k) => format!("calibrated (scale {:.12})", k.to_f64()),
        },
        residual_scans,
        antidiagonal,
        antidiagonal_fit,
        s_fit,
        max_n2s,
        boundary,
        q_unit_max,
        q_unit_argmax,
        s2_min,
        s_row_min,
        diagonals,
        fixed_genus,
        low_genus,
    })
}

/// Runs the plan under the stated boundary constant, measures `kappa0`, then
/// reruns it with the `g = 0` row rescaled by `kappa0`.
pub fn calibrated_report(plan: &HarnessConfig) -> Result<(AssumptionReport, AssumptionReport)> {
    let mut stated_plan = plan.clone();
    stated_plan.omega.boundary = BoundaryNormalization::Stated;
    let stated = assumption_report(&stated_plan)?;
    let mut cal_plan = plan.clone();
    let wp = plan.omega.precision.working_bits();
    cal_plan.omega.boundary = BoundaryNormalization::Scaled(Float::with_val(wp, stated.boundary.kappa0));
    let calibrated = assumption_report(&cal_plan)?;
    Ok((stated, calibrated))
}

/// Slope bound for the residual fits.
pub const RESIDUAL_SLOPE_MAX: f64 = -1.2;
pub const RESIDUAL_R2_MIN: f64 = 0.95;
pub const S_SLOPE_MAX: f64 = -1.9;
pub const N2S_MAX: f64 = 2.0;
/// Allowed growth of the anti-diagonal maximum between windows `[x, 2x]` and `[2x, 4x]`.
pub const TREND_FACTOR: f64 = 2.0;
/// Largest admissible gap between successive `kappa0` extrapolants.
pub const KAPPA0_SPREAD_MAX: f64 = 1e-3;
pub const KAPPA0_MATCH_TOL: f64 = 1e-2;
/// Agreement of the diagonal limits with each other, and with 1 once calibrated.
pub const DIAGONAL_KAPPA_TOL: f64 = 0.02;

impl AssumptionReport {
    /// For every sampled `x >= 100` with `4x` in range: the maximum over
    /// `[2x, 4x]` is at most [`TREND_FACTOR`] times the maximum over `[x, 2x]`.
    pub fn antidiagonal_trend_ok(&self) -> bool {
        let window_max = |lo: usize, hi: usize| {
            self.antidiagonal
                .iter()
                .filter(|(x, _, _)| *x >= lo && *x <= hi)
                .map(|t| t.1)
                .fold(f64::NAN, f64::max)
        };
        let top = self.antidiagonal.iter().map(|t| t.0).max().unwrap_or(0);
        self.antidiagonal
            .iter()
            .filter(|(x, _, _)| *x >= 100 && 4 * x <= top)
            .all(|&(x, _, _)| window_max(2 * x, 4 * x) <= TREND_FACTOR * window_max(x, 2 * x))
    }

    pub fn max_residual(&self) -> f64 {
        self.antidiagonal
            .iter()
            .map(|t| t.1)
            .chain(
                self.residual_scans
                    .iter()
                    .flat_map(|(_, r, _)| r.iter().map(|r| r.residual.abs())),
            )
            .fold(0.0, f64::max)
    }

    pub fn checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        for (theta, _, fit) in &self.residual_scans {
            out.push(Check::new(
                &format!("residual decay theta={theta}"),
                fit.slope <= RESIDUAL_SLOPE_MAX && fit.r_squared >= RESIDUAL_R2_MIN,
                format!("slope {:.4} r2 {:.6}", fit.slope, fit.r_squared),
            ));
        }
        out.push(Check::new(
            "anti-diagonal residual trend",
            self.antidiagonal_trend_ok(),
            format!("fitted slope {:.4}", self.antidiagonal_fit.slope),
        ));
        out.push(Check::new(
            "n^2 s bound",
            self.max_n2s <= N2S_MAX,
            format!("max n^2 s = {:.6}", self.max_n2s),
        ));
        out.push(Check::new(
            "s decay",
            self.s_fit.slope <= S_SLOPE_MAX,
            format!("slope {:.4}", self.s_fit.slope),
        ));
        out.push(Check::new(
            "Q(1,g) bounded",
            self.q_unit_max.is_finite() && self.q_unit_max > 0.0,
            format!("max {:.6} at g={}", self.q_unit_max, self.q_unit_argmax),
        ));
        out.push(Check::new(
            "s(2,g) bounded below",
            self.s2_min > 0.0,
            format!("min {:.6e}", self.s2_min),
        ));
        out.push(Check::new(
            "s(n,1) positive",
            self.s_row_min > 0.0,
            format!("min {:.6e}", self.s_row_min),
        ));
        out.push(Check::new(
            "Q(n,0) limit stabilizes",
            self.boundary.spread <= KAPPA0_SPREAD_MAX && self.boundary.distance <= KAPPA0_MATCH_TOL,
            format!(
                "kappa0 {:.6}, spread {:.2e}, nearest {}",
                self.boundary.kappa0,
                self.boundary.spread,
                self.boundary.selected_label()
            ),
        ));
        for d in self.diagonals.iter().chain(self.fixed_genus.iter()) {
            out.push(Check::new(
                &format!("Q trend {}", d.label),
                d.errors_decreasing(),
                format!("kappa {:.6}", d.kappa),
            ));
        }
        if !self.diagonals.is_empty() {
            let lo = self.diagonals.iter().map(|d| d.kappa).fold(f64::INFINITY, f64::min);
            let hi = self.diagonals.iter().map(|d| d.kappa).fold(f64::NEG_INFINITY, f64::max);
            out.push(Check::new(
                "diagonal limits agree",
                hi - lo <= DIAGONAL_KAPPA_TOL,
                format!("kappa in [{lo:.6}, {hi:.6}]"),
            ));
            if self.calibrated {
                out.push(Check::new(
                    "calibrated diagonal limit is 1",
                    (lo - 1.0).abs() <= DIAGONAL_KAPPA_TOL && (hi - 1.0).abs() <= DIAGONAL_KAPPA_TOL,
                    format!("kappa in [{lo:.6}, {hi:.6}], target 1 +- {DIAGONAL_KAPPA_TOL}"),
                ));
            }
        }
        out.push(Check::new(
            "low-genus window",
            self.low_genus.pass(),
            format!(
                "|alpha-(1-3t)| {:.3e} <= {:.3e}, |beta-3t| {:.3e} <= {:.3e}",
                self.low_genus.alpha_gap,
                self.low_genus.alpha_bound,
                self.low_genus.beta_gap,
                self.low_genus.beta_bound
            ),
        ));
        out
    }

    pub fn all_pass(&self) -> bool {
        self.checks().iter().all(|c| c.pass)
    }

    /// `key=value` lines.
    pub fn key_values(&self) -> Vec<(String, String)> {
        vec![
            ("kappa0".into(), format!("{:.17e}", self.boundary.kappa0)),
            ("max_residual".into(), format!("{:.17e}", self.max_residual())),
            ("slope_residual".into(), format!("{:.17e}", self.antidiagonal_fit.slope)),
            ("slope_s".into(), format!("{:.17e}", self.s_fit.slope)),
            ("max_n2s".into(), format!("{:.17e}", self.max_n2s)),
            ("qbound_n1".into(), format!("{:.17e}", self.q_unit_max)),
        ]
    }

    /// Human-readable block followed by the `key=value` section.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "assumption report (boundary constant: {})", self.boundary_label);
        let _ = writeln!(s);
        let _ = writeln!(s, "max |alpha+beta-1| per anti-diagonal:");
        for (x, r, g) in &self.antidiagonal {
            let _ = writeln!(s, "  x={x:>6}  max={r:.6e}  at g={g}");
        }
        let _ = writeln!(
            s,
            "  fit: slope {:.4}, r2 {:.6}",
            self.antidiagonal_fit.slope, self.antidiagonal_fit.r_squared
        );
        for (theta, _, fit) in &self.residual_scans {
            let _ = writeln!(
                s,
                "  diagonal theta={theta}: slope {:.4}, r2 {:.6}",
                fit.slope, fit.r_squared
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "boundary row Q(n,0):");
        for (n, q) in self.boundary.n_list.iter().zip(&self.boundary.q) {
            let _ = writeln!(s, "  n={n:>6}  Q={q:.12}");
        }
        let _ = writeln!(s, "  extrapolants: {:?}", self.boundary.extrapolants);
        let _ = writeln!(
            s,
            "  measured kappa0 = {:.3}; data selects {} (distance {:.2e})",
            self.boundary.kappa0,
            self.boundary.selected_label(),
            self.boundary.distance
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "max_g Q(1,g) = {:.9} (g={})", self.q_unit_max, self.q_unit_argmax);
        let _ = writeln!(s, "min_g s(2,g) = {:.9e}", self.s2_min);
        let _ = writeln!(s, "min_n s(n,1) = {:.9e}", self.s_row_min);
        let _ = writeln!(s, "max n^2 s    = {:.9}", self.max_n2s);
        let _ = writeln!(s, "s fit slope  = {:.4}", self.s_fit.slope);
        let _ = writeln!(s);
        let _ = writeln!(s, "Q limits:");
        for d in self.diagonals.iter().chain(self.fixed_genus.iter()) {
            let _ = writeln!(s, "  {}: kappa {:.6}", d.label, d.kappa);
            for ((n, g), (q, e)) in d.points.iter().zip(d.q.iter().zip(&d.errors)) {
                let _ = writeln!(s, "    n={n:>5} g={g:>5}  Q={q:.9}  |Q-kappa|={e:.3e}");
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "checks:");
        for c in self.checks() {
            let _ = writeln!(
                s,
                "  [{}] {}: {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "[values]");
        for (k, v) in self.key_values() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}

/// Writes `n,g,x,theta,q,alpha,beta,residual,s` rows; `q` is empty when absent.
pub fn write_records_csv<W: Write>(records: &[ConvergenceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "g", "x", "theta", "q", "alpha", "beta", "residual", "s"])?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            r.g.to_string(),
            r.x.to_string(),
            format!("{:.17e}", r.theta),
            r.q.map(|q| format!("{q:.17e}")).unwrap_or_default(),
            format!("{:.17e}", r.alpha),
            format!("{:.17e}", r.beta),
            format!("{:.17e}", r.residual),
            format!("{:.17e}", r.s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Residuals of the analytic identities at one `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeRow {
    pub theta: f64,
    /// `4 lambda + exp(-f') - 1`.
    pub identity: f64,
    /// Residual of the `j` equation; only on the `j` grid.
    pub j_residual: Option<f64>,
    /// `theta f'' - 2 - lambda'/lambda`.
    pub f_identity: Option<f64>,
    /// Central difference of `lambda(theta)` minus `lambda'`.
    pub lambda_fd_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeScan {
    pub rows: Vec<OdeRow>,
    /// `(lambda, finite-difference dtheta/dlambda minus the ODE right-hand side)`.
    pub theta_rows: Vec<(f64, f64)>,
    pub max_identity: f64,
    pub max_j: f64,
    pub max_f_identity: f64,
    pub max_lambda_fd: f64,
    pub max_theta_fd: f64,
}

/// Inclusive range on which the `j` equation and the `lambda'` central
/// difference are checked.
pub const J_GRID: (f64, f64) = (0.1, 20.0);
/// Finite-difference step.
pub const FD_STEP: f64 = 1e-8;
/// Precision floor for the finite-difference checks.
pub const FD_BITS: u32 = 256;

/// `count` points from `lo` to `hi`, evenly spaced in log scale.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Evaluates the identity residuals on `theta_grid` and the `theta`-ODE
/// residual on `lambda_grid`.
pub fn ode_residual_scan(theta_grid: &[f64], lambda_grid: &[f64], cfg: &PrecisionConfig) -> Result<OdeScan> {
    let fd_cfg = PrecisionConfig {
        mantissa_bits: cfg.mantissa_bits.max(FD_BITS),
        ..cfg.clone()
    };
    let rows: Vec<OdeRow> = theta_grid
        .par_iter()
        .map(|&t| -> Result<OdeRow> {
            let pt = asym_point(&cfg.float(t), cfg)?;
            let identity = core_identity_residual(&pt).map(|r| r.to_f64()).unwrap_or(f64::NAN);
            let on_j_grid = t >= J_GRID.0 && t <= J_GRID.1;
            let (j_residual, f_identity, lambda_fd_error) = if on_j_grid {
                let j = j_equation_residual(&pt).map(|r| r.to_f64());
                let fi = f_double_prime_identity_residual(&pt).map(|r| r.to_f64());
                let h = fd_cfg.float(FD_STEP);
                let th = fd_cfg.float(t);
                let up = lambda_of_theta(&Float::with_val(fd_cfg.working_bits(), &th + &h), &fd_cfg)?;
                let down = lambda_of_theta(&Float::with_val(fd_cfg.working_bits(), &th - &h), &fd_cfg)?;
                let fd = (up - down) / (h * 2u32);
                let exact = lambda_prime(&th, &fd_cfg)?;
                (j, fi, Some((fd - exact).to_f64()))
            } else {
                (None, None, None)
            };
            Ok(OdeRow {
                theta: t,
                identity,
                j_residual,
                f_identity,
                lambda_fd_error,
            })
        })
        .collect::<Result<_>>()?;
    let theta_rows: Vec<(f64, f64)> = lambda_grid
        .par_iter()
        .map(|&l| -> Result<(f64, f64)> {
            let h = fd_cfg.float(FD_STEP);
            let lam = fd_cfg.float(l);
            let up = theta_of_lambda(&Float::with_val(fd_cfg.working_bits(), &lam + &h), &fd_cfg)?;
            let down = theta_of_lambda(&Float::with_val(fd_cfg.working_bits(), &lam - &h), &fd_cfg)?;
            let fd = (up - down) / (h * 2u32);
            let rhs = theta_ode_rhs(&lam, &fd_cfg)?;
            Ok((l, (fd - rhs).to_f64()))
        })
        .collect::<Result<_>>()?;
    let max_abs = |it: &mut dyn Iterator<Item = f64>| it.map(f64::abs).fold(0.0, f64::max);
    Ok(OdeScan {
        max_identity: max_abs(&mut rows.iter().map(|r| r.identity)),
        max_j: max_abs(&mut rows.iter().filter_map(|r| r.j_residual)),
        max_f_identity: max_abs(&mut rows.iter().filter_map(|r| r.f_identity)),
        max_lambda_fd: max_abs(&mut rows.iter().filter_map(|r| r.lambda_fd_error)),
        max_theta_fd: max_abs(&mut theta_rows.iter().map(|r| r.1)),
        rows,
        theta_rows,
    })
}

impl OdeScan {
    pub fn write_theta_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "theta",
            "identity_residual",
            "j_residual",
            "f_identity_residual",
            "lambda_prime_fd_error",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                format!("{:.17e}", r.theta),
                format!("{:.17e}", r.identity),
                opt(r.j_residual),
                opt(r.f_identity),
                opt(r.lambda_fd_error),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_lambda_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "theta_ode_fd_error"])?;
        for (l, e) in &self.theta_rows {
            w.write_record([format!("{l:.17e}"), format!("{e:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Largest `|lambda(theta(lambda)) - lambda|` over `lambdas`.
pub fn round_trip_error(lambdas: &[f64], cfg: &PrecisionConfig) -> Result<Float> {
    let errs: Vec<Float> = lambdas
        .par_iter()
        .map(|&l| -> Result<Float> {
            let lam = cfg.float(l);
            let back = lambda_of_theta(&theta_of_lambda(&lam, cfg)?, cfg)?;
            Ok((back - lam).abs())
        })
        .collect::<Result<_>>()?;
    Ok(errs.into_iter().fold(cfg.float(0), |a, b| a.max(&b)))
}

/// `true` when `theta(lambda)` is strictly decreasing along increasing `lambdas`.
pub fn theta_strictly_decreasing(lambdas: &[f64], cfg: &PrecisionConfig) -> Result<bool> {
    let thetas: Vec<Float> = lambdas
        .iter()
        .map(|&l| theta_of_lambda(&cfg.float(l), cfg))
        .collect::<Result<_>>()?;
    Ok(thetas.windows(2).all(|w| w[1] < w[0]))
}

/// Decay of `|f''|` and `|j'|` on `[lo, hi]` against `C exp(-rate theta)`,
/// with `C` fitted at `lo`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCheck {
    pub rate: f64,
    /// `(theta, |f''| / (C_f e^{-rate theta}), |j'| / (C_j e^{-rate theta}))`.
    pub ratios: Vec<(f64, f64, f64)>,
}

impl DecayCheck {
    pub fn pass(&self) -> bool {
        self.ratios.iter().all(|r| r.1 <= 1.0 + 1e-12 && r.2 <= 1.0 + 1e-12)
    }
}

pub fn decay_check(lo: f64, hi: f64, rate: f64, samples: usize, cfg: &PrecisionConfig) -> Result<DecayCheck> {
    let wp = cfg.working_bits();
    let at = |t: f64| -> Result<(Float, Float)> {
        let pt = asym_point(&cfg.float(t), cfg)?;
        let scale = Float::with_val(wp, rate * t).exp();
        let f = pt.f_double_prime.expect("theta > 0").abs() * &scale;
        let j = pt.j_prime.expect("theta > 0").abs() * scale;
        Ok((f, j))
    };
    let (cf, cj) = at(lo)?;
    let step = (hi - lo) / (samples.max(2) - 1) as f64;
    let ratios = (0..samples.max(2))
        .map(|i| {
            let t = lo + step * i as f64;
            let (f, j) = at(t)?;
            Ok((t, (f / &cf).to_f64(), (j / &cj).to_f64()))
        })
        .collect::<Result<_>>()?;
    Ok(DecayCheck { rate, ratios })
}

/// One constant compared against its closed-form value.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantCheck {
    pub name: &'static str,
    pub value: f64,
    pub target: f64,
    pub error: f64,
    pub tolerance: f64,
}

impl ConstantCheck {
    pub fn pass(&self) -> bool {
        self.error <= self.tolerance
    }
}

/// Step for the central difference of `f0` at the origin.
pub const F0_SLOPE_STEP: f64 = 1e-6;

/// The closed-form constants at `theta = 0` and `lambda = 1/4`.
pub fn origin_constants(cfg: &PrecisionConfig) -> Result<Vec<ConstantCheck>> {
    let wp = cfg.working_bits();
    let zero = cfg.float(0);
    let quarter = cfg.float(0.25);
    let make = |name, value: Float, target: Float, tolerance| {
        let error = Float::with_val(wp, &value - &target).abs().to_f64();
        ConstantCheck {
            name,
            value: value.to_f64(),
            target: target.to_f64(),
            error,
            tolerance,
        }
    };
    let (f0, j0) = f0_j0(&zero, cfg)?;
    let h = cfg.float(F0_SLOPE_STEP);
    let (f_up, _) = f0_j0(&h, cfg)?;
    let (f_down, _) = f0_j0(&Float::with_val(wp, -&h), cfg)?;
    let slope = (f_up - f_down) / (h * 2u32);
    Ok(vec![
        make("theta(1/4)", theta_of_lambda(&quarter, cfg)?, cfg.float(0), 1e-20),
        make("lambda(0)", lambda_of_theta(&zero, cfg)?, cfg.float(0.25), 1e-20),
        make("lambda'(0)", lambda_prime(&zero, cfg)?, cfg.float(-0.75), 1e-20),
        make("f0(0)", f0, ln_four(wp), 1e-20),
        make("j0(0)", j0, cfg.float(0), 1e-20),
        make("exp(f0'(0))", slope.exp(), e_over_three(wp), 1e-6),
    ])
}
