//! Log-space evaluation of the asymptotic guess `Omega(n, g)`.
//!
//! ```text
//! Omega(n, 0) = 4^n n^(-3/2) / sqrt(2 pi)
//! Omega(n, g) = C_g n^(2g-2) exp(n f(g/n) + j(g/n)),  C_g = sqrt(g) g^g / (sqrt(2 pi) e^g g!)
//! ```
//!
//! For small `theta = g/n` the algebraically identical form
//! `C~_g n^(3g-3/2) exp(n f0(theta) + j0(theta))` with `C~_g = 1 / (sqrt(2 pi) g! e^g)`
//! avoids the `theta ln theta` cancellation.

use std::fmt;
use std::io::Write;

use rug::Float;

use crate::asym::{asym_point, ln_four, ln_two_pi, PrecisionConfig};
use crate::error::{Error, Result};
use crate::exact::{format_float, CSV_DIGITS};

/// Which closed form produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OmegaBranch {
    BoundaryG0,
    LowTheta,
    General,
}

impl OmegaBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            OmegaBranch::BoundaryG0 => "boundary_g0",
            OmegaBranch::LowTheta => "low_theta",
            OmegaBranch::General => "general",
        }
    }
}

impl fmt::Display for OmegaBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Normalization of the `g = 0` row.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum BoundaryNormalization {
    /// `4^n n^(-3/2) / sqrt(2 pi)` as written.
    #[default]
    Stated,
    /// The written row multiplied by the given constant. Rows `g >= 1` are
    /// left untouched.
    Scaled(Float),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OmegaConfig {
    pub precision: PrecisionConfig,
    pub boundary: BoundaryNormalization,
}

impl OmegaConfig {
    pub fn new(precision: PrecisionConfig) -> Self {
        OmegaConfig {
            precision,
            boundary: BoundaryNormalization::Stated,
        }
    }

    pub fn with_boundary(mut self, boundary: BoundaryNormalization) -> Self {
        self.boundary = boundary;
        self
    }

    fn wp(&self) -> u32 {
        self.precision.working_bits()
    }
}

/// `ln Omega(n, g)` together with the branch that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LogOmega {
    pub n: usize,
    pub g: usize,
    pub log_value: Float,
    pub branch: OmegaBranch,
}

fn ln_gamma_plus_one(g: usize, wp: u32) -> Float {
    Float::with_val(wp, g as u64 + 1).ln_gamma()
}

/// `ln C_g = (1/2) ln g + g ln g - g - ln(g!) - (1/2) ln(2 pi)`, for `g >= 1`.
pub fn log_c(g: usize, cfg: &PrecisionConfig) -> Result<Float> {
    if g == 0 {
        return Err(Error::Domain("C_g is undefined at g = 0".into()));
    }
    let wp = cfg.working_bits();
    let ln_g = Float::with_val(wp, g as u64).ln();
    let coeff = Float::with_val(wp, g as u64) + 0.5;
    let v = ln_g * coeff - g as u64 - ln_gamma_plus_one(g, wp) - ln_two_pi(wp) / 2u32;
    Ok(v)
}

/// `ln C~_g = -ln(g!) - g - (1/2) ln(2 pi)`, for `g >= 0`.
pub fn log_c_tilde(g: usize, cfg: &PrecisionConfig) -> Float {
    let wp = cfg.working_bits();
    -ln_gamma_plus_one(g, wp) - g as u64 - ln_two_pi(wp) / 2u32
}

/// `ln Omega(n, g)`, choosing the branch from `g` and `theta = g / n`.
pub fn log_omega(n: usize, g: usize, cfg: &OmegaConfig) -> Result<LogOmega> {
    let branch = if g == 0 {
        OmegaBranch::BoundaryG0
    } else if (g as f64 / n.max(1) as f64) < cfg.precision.theta_switch {
        OmegaBranch::LowTheta
    } else {
        OmegaBranch::General
    };
    log_omega_on_branch(n, g, branch, cfg)
}

/// `ln Omega(n, g)` through a forced branch. `LowTheta` and `General` are
/// both valid for any `g >= 1`; `BoundaryG0` only for `g = 0`.
pub fn log_omega_on_branch(n: usize, g: usize, branch: OmegaBranch, cfg: &OmegaConfig) -> Result<LogOmega> {
    if n == 0 {
        return Err(Error::Domain("Omega(n, g) requires n >= 1".into()));
    }
    let wp = cfg.wp();
    let ln_n = Float::with_val(wp, n as u64).ln();
    let log_value = match branch {
        OmegaBranch::BoundaryG0 => {
            if g != 0 {
                return Err(Error::Domain("boundary branch requires g = 0".into()));
            }
            let mut v = ln_four(wp) * n as u64 - Float::with_val(wp, &ln_n * 1.5) - ln_two_pi(wp) / 2u32;
            if let BoundaryNormalization::Scaled(k) = &cfg.boundary {
                if *k <= 0 {
                    return Err(Error::Config("boundary scale must be positive".into()));
                }
                v += Float::with_val(wp, k.ln_ref());
            }
            v
        }
        OmegaBranch::LowTheta | OmegaBranch::General => {
            if g == 0 {
                return Err(Error::Domain(format!("{branch} branch requires g >= 1")));
            }
            let theta = cfg.precision.ratio(g, n);
            let pt = asym_point(&theta, &cfg.precision)?;
            if branch == OmegaBranch::LowTheta {
                let power = Float::with_val(wp, 3 * g as u64) - 1.5;
                log_c_tilde(g, &cfg.precision) + power * &ln_n + pt.f0 * n as u64 + pt.j0
            } else {
                let power = Float::with_val(wp, 2 * g as i64 - 2);
                let j = pt.j.expect("j is defined for theta > 0");
                log_c(g, &cfg.precision)? + power * &ln_n + pt.f * n as u64 + j
            }
        }
    };
    Ok(LogOmega {
        n,
        g,
        log_value,
        branch,
    })
}

/// Writes `n,g,log_omega,branch` rows.
pub fn write_omega_csv<W: Write>(rows: &[LogOmega], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "g", "log_omega", "branch"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.g.to_string(),
            format_float(&r.log_value, CSV_DIGITS),
            r.branch.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
