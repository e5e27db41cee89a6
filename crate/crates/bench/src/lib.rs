//! Fixtures shared by the benchmarks.

use hurwitz::rug::Float;
use hurwitz::{OmegaBranch, OmegaConfig, PrecisionConfig};

/// Square table sizes for the fill benchmarks.
pub const TABLE_SIZES: [usize; 3] = [50, 100, 200];

/// `theta` values spanning the series branch, the bracketed solver and the
/// far tail where `lambda` underflows double precision.
pub const THETAS: [f64; 4] = [1e-3, 0.1, 4.0, 500.0];

/// One `(n, g)` cell per Omega branch, at a size typical of the harness.
pub fn omega_cells() -> Vec<(OmegaBranch, usize, usize)> {
    vec![
        (OmegaBranch::BoundaryG0, 4000, 0),
        (OmegaBranch::LowTheta, 2000, 3),
        (OmegaBranch::General, 1000, 1000),
    ]
}

pub fn theta_floats(cfg: &PrecisionConfig) -> Vec<(f64, Float)> {
    THETAS.iter().map(|&t| (t, cfg.float(t))).collect()
}

pub fn omega_config() -> OmegaConfig {
    OmegaConfig::default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use hurwitz::log_omega;

    #[test]
    fn cells_land_on_their_branch() {
        let cfg = omega_config();
        for (branch, n, g) in omega_cells() {
            assert_eq!(log_omega(n, g, &cfg).unwrap().branch, branch);
        }
    }
}
