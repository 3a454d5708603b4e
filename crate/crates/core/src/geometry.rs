//! Stochastic-geometry kernels: the two-circle overlap area behind the
//! conditional cell-population integral, its double integral J(r), and the
//! Rayleigh serving-distance distribution of nearest-BS association.
//!
//! Geometry convention: the serving BS sits at the origin of the working
//! frame, the tagged user at (0, -r), and a candidate cell-mate at polar
//! coordinates (x, theta) about the BS. The cell-mate is served by the same
//! BS iff the ball of radius x around it is empty of other BSs; the ball of
//! radius r around the user is already known empty, so only the area of the
//! first ball not covered by the second counts.

use std::sync::{Arc, OnceLock};

use crate::config::NumericsConfig;
use crate::{quad, Error, Result};

use std::f64::consts::PI;

/// Center distance between the cell-mate ball center (x, theta) and the
/// tagged-user ball center (0, -r).
fn center_distance(r: f64, x: f64, theta: f64) -> f64 {
    (x * x + r * r + 2.0 * x * r * theta.sin()).sqrt()
}

/// Intersection (lens) area of circles with radii `r1`, `r2` and center
/// distance `d`. Clamps the inverse-cosine arguments so that tangency
/// configurations do not produce NaN from floating-point drift.
fn lens_area(r1: f64, r2: f64, d: f64) -> f64 {
    if r1 == 0.0 || r2 == 0.0 {
        return 0.0;
    }
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        let rm = r1.min(r2);
        return PI * rm * rm;
    }
    let clamp = |v: f64| v.clamp(-1.0, 1.0);
    let a1 = clamp((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1));
    let a2 = clamp((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2));
    let sq = ((r1 + r2) * (r1 + r2) - d * d) * (d * d - (r1 - r2) * (r1 - r2));
    r1 * r1 * a1.acos() + r2 * r2 * a2.acos() - 0.5 * sq.max(0.0).sqrt()
}

/// Area of the circle centered at (x, theta) with radius x that is not
/// covered by the circle centered at (0, -r) with radius r (m^2).
pub fn overlap_area(r: f64, x: f64, theta: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let d = center_distance(r, x, theta);
    (PI * x * x - lens_area(r, x, d)).max(0.0)
}

/// Lens area for the same (r, x, theta) parametrization; exposed so tests
/// can assert the complement identity `overlap + lens = pi x^2`.
pub fn lens_area_polar(r: f64, x: f64, theta: f64) -> f64 {
    lens_area(r, x, center_distance(r, x, theta))
}

/// J(r) = int_0^inf int_0^2pi exp(-lambda_b A(r, x, theta)) x dtheta dx by
/// direct adaptive quadrature (m^2).
///
/// The outer integral is truncated where the conservative bound
/// `exp(-lambda_b max(0, pi x^2 - pi r^2))` drops below 1e-12.
pub fn cell_mass(lambda_b: f64, r: f64, numerics: &NumericsConfig) -> Result<f64> {
    if lambda_b <= 0.0 || r < 0.0 {
        return Err(Error::Domain(format!(
            "cell_mass requires lambda_b > 0 and r >= 0, got lambda_b = {lambda_b}, r = {r}"
        )));
    }
    let tol = numerics.quad_rel_tol;
    let x_max = (r * r + 1e12f64.ln() / (PI * lambda_b)).sqrt();
    let inner_err: std::cell::Cell<Option<Error>> = std::cell::Cell::new(None);
    let outer = quad::integrate(
        |x| {
            let inner = quad::integrate(
                |theta| (-lambda_b * overlap_area(r, x, theta)).exp(),
                0.0,
                2.0 * PI,
                tol * 0.25,
                0.0,
            );
            match inner {
                Ok(v) => v * x,
                Err(e) => {
                    inner_err.set(Some(e));
                    0.0
                }
            }
        },
        0.0,
        x_max,
        tol,
        0.0,
    )?;
    if let Some(e) = inner_err.take() {
        return Err(e);
    }
    Ok(outer)
}

/// lambda_u [y + gamma (phi - y)] J: the conditional intensity of same-cell
/// GPS weight at serving distance r, given the double integral J.
pub fn f_of_r(lambda_u: f64, gamma: f64, phi: f64, y: f64, j: f64) -> f64 {
    lambda_u * (y + gamma * (phi - y)) * j
}

/// CDF of the distance from a user to its nearest BS.
pub fn cdf_r(lambda_b: f64, r: f64) -> f64 {
    -f64::exp_m1(-lambda_b * PI * r * r)
}

/// Exact inverse of [`cdf_r`] for p in [0, 1).
pub fn cdf_r_inv(lambda_b: f64, p: f64) -> f64 {
    (-f64::ln_1p(-p) / (lambda_b * PI)).sqrt()
}

// ---------------------------------------------------------------------------
// Master kernel table
// ---------------------------------------------------------------------------

/// J obeys the exact scaling J(r; lambda_b) = Jhat(r sqrt(lambda_b)) /
/// lambda_b, with Jhat the unit-density kernel, because every term of
/// A(r, x, theta) is quadratic in lengths. One dimensionless table therefore
/// serves every BS density.
struct MasterKernel {
    ln_rho_lo: f64,
    inv_dln: f64,
    rho_lo: f64,
    rho_hi: f64,
    values: Vec<f64>,
}

const MASTER_POINTS: usize = 512;
// Covers tail masses up to 45 (default truncation is 40).
const MASTER_RHO_LO: f64 = 0.01;
const MASTER_RHO_HI: f64 = 3.7947; // sqrt(45.2 / pi)

impl MasterKernel {
    fn build() -> MasterKernel {
        use rayon::prelude::*;
        let numerics = NumericsConfig {
            quad_rel_tol: 1e-7,
            ..NumericsConfig::default()
        };
        let ln_lo = MASTER_RHO_LO.ln();
        let ln_hi = MASTER_RHO_HI.ln();
        let dln = (ln_hi - ln_lo) / (MASTER_POINTS - 1) as f64;
        let values: Vec<f64> = (0..MASTER_POINTS)
            .into_par_iter()
            .map(|i| {
                let rho = (ln_lo + dln * i as f64).exp();
                cell_mass(1.0, rho, &numerics).expect("master kernel quadrature")
            })
            .collect();
        MasterKernel {
            ln_rho_lo: ln_lo,
            inv_dln: 1.0 / dln,
            rho_lo: MASTER_RHO_LO,
            rho_hi: MASTER_RHO_HI,
            values,
        }
    }

    /// Jhat(rho) by interpolation, linear in ln(rho) between nodes.
    fn j_hat(&self, rho: f64) -> f64 {
        if rho <= self.rho_lo {
            // Jhat(0) = 1 exactly (the overlap area degenerates to pi x^2);
            // blend linearly in rho over the short head interval.
            return 1.0 + (self.values[0] - 1.0) * (rho / self.rho_lo).max(0.0);
        }
        if rho >= self.rho_hi {
            return *self.values.last().unwrap();
        }
        let t = (rho.ln() - self.ln_rho_lo) * self.inv_dln;
        let i = (t as usize).min(MASTER_POINTS - 2);
        let frac = t - i as f64;
        self.values[i] + (self.values[i + 1] - self.values[i]) * frac
    }
}

fn master() -> &'static Arc<MasterKernel> {
    static MASTER: OnceLock<Arc<MasterKernel>> = OnceLock::new();
    MASTER.get_or_init(|| Arc::new(MasterKernel::build()))
}

/// Precomputed J(r) for one BS density.
///
/// Interpolation never produces negative values: the tabulated nodes are
/// strictly positive and interpolation is linear between them.
#[derive(Clone)]
pub struct KernelTable {
    lambda_b: f64,
    sqrt_lambda: f64,
    master: Arc<MasterKernel>,
}

impl KernelTable {
    pub fn build(lambda_b: f64) -> Result<KernelTable> {
        if lambda_b <= 0.0 {
            return Err(Error::Domain(format!(
                "KernelTable requires lambda_b > 0, got {lambda_b}"
            )));
        }
        Ok(KernelTable {
            lambda_b,
            sqrt_lambda: lambda_b.sqrt(),
            master: Arc::clone(master()),
        })
    }

    pub fn lambda_b(&self) -> f64 {
        self.lambda_b
    }

    /// J(r) (m^2).
    pub fn j(&self, r: f64) -> f64 {
        self.master.j_hat(r * self.sqrt_lambda) / self.lambda_b
    }
}
