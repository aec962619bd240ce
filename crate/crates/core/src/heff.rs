//! The effective three-site spin model of one lattice triangle, its exact
//! unitary evolution, the parameter point that realizes the three-site
//! entangler, and imperfection sweeps over coupling offsets.
//!
//! Conventions: couplings are the time-integrated phases (evolution runs for
//! dimensionless time tau, so a coupling lambda accumulates lambda * tau).
//! Sites 1, 2, 3 are cyclic; the model is
//!
//!   H = sum_j [ a + c0 z_j + c1 z_j z_{j+1} + c2 (x_j x_{j+1} + y_j y_{j+1})
//!             + c3 z_j z_{j+1} z_{j+2} + c4 sum_{l=x,y} l_j z_{j+1} l_{j+2} ]
//!
//! with c_i = lambda_i + epsilon_i. Every term is real in the computational
//! basis, so H is a real symmetric 8x8 matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeffParams {
    pub lambda: [f64; 5],
    pub a: f64,
    pub epsilon: [f64; 5],
    pub tau: f64,
}

/// The coupling point whose evolution for time `tau` realizes the
/// three-site entangler at `tau = 1`. The uniform-site sum visits the
/// triple-z product three times, so its coefficient carries a factor 1/3
/// to leave the accumulated per-term phase at pi/8.
pub fn ideal_params(tau: f64) -> Result<HeffParams> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::config("tau must be nonnegative"));
    }
    let p8 = std::f64::consts::FRAC_PI_8;
    Ok(HeffParams {
        lambda: [p8, -p8, 0.0, p8 / 3.0, 0.0],
        a: 0.0,
        epsilon: [0.0; 5],
        tau,
    })
}

fn zval(m: usize, site: usize) -> f64 {
    if m >> site & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Builds the 8x8 matrix for the given couplings. Always real symmetric and
/// block-diagonal in the number of flipped sites.
pub fn build_heff(p: &HeffParams) -> DMatrix<f64> {
    let c: Vec<f64> = (0..5).map(|i| p.lambda[i] + p.epsilon[i]).collect();
    let mut h = DMatrix::<f64>::zeros(8, 8);
    for m in 0..8usize {
        for j in 0..3usize {
            let (j1, j2, j3) = (j, (j + 1) % 3, (j + 2) % 3);
            h[(m, m)] += p.a
                + c[0] * zval(m, j1)
                + c[1] * zval(m, j1) * zval(m, j2)
                + c[3] * zval(m, j1) * zval(m, j2) * zval(m, j3);
            // Hopping terms exchange a pair of opposite bits.
            if (m >> j1 ^ m >> j2) & 1 == 1 {
                let m2 = m ^ (1 << j1) ^ (1 << j2);
                h[(m2, m)] += 2.0 * c[2];
            }
            if (m >> j1 ^ m >> j3) & 1 == 1 {
                let m2 = m ^ (1 << j1) ^ (1 << j3);
                h[(m2, m)] += 2.0 * c[4] * zval(m, j2);
            }
        }
    }
    h
}

fn symmetry_defect(h: &DMatrix<f64>) -> f64 {
    let mut dev = 0.0f64;
    for r in 0..h.nrows() {
        for s in 0..h.ncols() {
            dev = dev.max((h[(r, s)] - h[(s, r)]).abs());
        }
    }
    dev
}

/// Eigendecomposition of a small real symmetric matrix by cyclic Jacobi
/// sweeps. Eigenvector columns stay orthogonal by construction, which
/// matters here: the spin model has degenerate pairs in every flip sector
/// and QR-style solvers can hand back skewed bases for them.
fn jacobi_eigen(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = h.nrows();
    let mut a = h.clone();
    let mut q = DMatrix::<f64>::identity(n, n);
    let scale = 1.0 + h.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |r| (p, r)))
            .map(|(p, r)| a[(p, r)] * a[(p, r)])
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                let apr = a[(p, r)];
                if apr == 0.0 {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akr = a[(k, r)];
                    a[(k, p)] = c * akp - s * akr;
                    a[(k, r)] = s * akp + c * akr;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let ark = a[(r, k)];
                    a[(p, k)] = c * apk - s * ark;
                    a[(r, k)] = s * apk + c * ark;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), q)
}

/// exp(-iHt) applied to a 3-qubit state by exact spectral decomposition.
pub fn evolve(h: &DMatrix<f64>, t: f64, psi0: &StateVector) -> Result<StateVector> {
    if h.nrows() != 8 || h.ncols() != 8 {
        return Err(Error::DimensionMismatch(h.nrows() * h.ncols(), 64));
    }
    if psi0.qubit_count() != 3 {
        return Err(Error::config("evolution acts on 3-qubit states"));
    }
    let dev = symmetry_defect(h);
    if dev > 1e-10 {
        return Err(Error::NotHermitian(dev));
    }
    let (evals, evecs) = jacobi_eigen(h);
    let mut out = vec![Complex64::new(0.0, 0.0); 8];
    for k in 0..8 {
        let mut ck = Complex64::new(0.0, 0.0);
        for i in 0..8 {
            ck += evecs[(i, k)] * psi0.amplitude(i);
        }
        let w = Complex64::from_polar(1.0, -evals[k] * t) * ck;
        for i in 0..8 {
            out[i] += evecs[(i, k)] * w;
        }
    }
    StateVector::from_amplitudes(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FidelitySurface {
    pub tau_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub which_eps: usize,
    /// values[ti][ei] = F(tau_grid[ti], eps_grid[ei]).
    pub values: Vec<Vec<f64>>,
}

impl FidelitySurface {
    pub fn value(&self, tau_index: usize, eps_index: usize) -> f64 {
        self.values[tau_index][eps_index]
    }

    /// CSV rows ordered tau-major, matching the grid layout.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,epsilon,fidelity\n");
        for (ti, &tau) in self.tau_grid.iter().enumerate() {
            for (ei, &eps) in self.eps_grid.iter().enumerate() {
                out.push_str(&format!(
                    "{:.12},{:.12},{:.12}\n",
                    tau, eps, self.values[ti][ei]
                ));
            }
        }
        out
    }
}

/// tau from 0 to 2 in steps of 0.02; index 50 lands exactly on 1.
pub fn default_tau_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 * 0.02).collect()
}

/// Symmetric offsets up to an eighth turn in steps of pi/160; index 20
/// lands exactly on 0.
pub fn default_eps_grid() -> Vec<f64> {
    (-20..=20)
        .map(|j| j as f64 * (std::f64::consts::PI / 160.0))
        .collect()
}

/// F(tau, eps) = |<ideal | evolved>|^2 where the ideal state is the
/// three-site entangler applied to `psi0` and the evolved one comes from
/// the ideal couplings with a single offset added to coupling `which_eps`.
pub fn fidelity_surface(
    tau_grid: &[f64],
    eps_grid: &[f64],
    which_eps: usize,
    psi0: &StateVector,
) -> Result<FidelitySurface> {
    if which_eps > 4 {
        return Err(Error::config(format!(
            "coupling index {which_eps} outside 0..=4"
        )));
    }
    check_grid(tau_grid, "tau")?;
    check_grid(eps_grid, "epsilon")?;
    if psi0.qubit_count() != 3 {
        return Err(Error::config("surface needs a 3-qubit start state"));
    }
    let mut ideal = psi0.clone();
    ideal.apply_ccz(1, 2, 3)?;

    let columns: Result<Vec<Vec<f64>>> = eps_grid
        .par_iter()
        .map(|&eps| {
            let mut p = ideal_params(1.0)?;
            p.epsilon[which_eps] = eps;
            let (evals, evecs) = jacobi_eigen(&build_heff(&p));
            // Spectral weights of start and ideal states.
            let mut c = [Complex64::new(0.0, 0.0); 8];
            let mut d = [Complex64::new(0.0, 0.0); 8];
            for k in 0..8 {
                for i in 0..8 {
                    c[k] += evecs[(i, k)] * psi0.amplitude(i);
                    d[k] += evecs[(i, k)] * ideal.amplitude(i);
                }
            }
            Ok(tau_grid
                .iter()
                .map(|&tau| {
                    let mut ip = Complex64::new(0.0, 0.0);
                    for k in 0..8 {
                        ip += d[k].conj()
                            * Complex64::from_polar(1.0, -evals[k] * tau)
                            * c[k];
                    }
                    ip.norm_sqr()
                })
                .collect())
        })
        .collect();
    let columns = columns?;
    let values: Vec<Vec<f64>> = (0..tau_grid.len())
        .map(|ti| (0..eps_grid.len()).map(|ei| columns[ei][ti]).collect())
        .collect();
    Ok(FidelitySurface {
        tau_grid: tau_grid.to_vec(),
        eps_grid: eps_grid.to_vec(),
        which_eps,
        values,
    })
}

fn check_grid(grid: &[f64], name: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::config(format!("{name} grid is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::config(format!("{name} grid must be finite")));
    }
    for w in grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::config(format!("{name} grid must ascend")));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MottReport {
    pub valid: bool,
    /// Tunneling over interaction, J/U.
    pub ratio: f64,
    /// Largest J/U the pinned-filling regime tolerates, 1/(5.8 z).
    pub bound: f64,
}

/// Whether (J, U) sits in the pinned-filling regime for coordination
/// number `z`: requires U/(zJ) >= 5.8. J = 0 always qualifies.
pub fn mott_check(j: f64, u: f64, z: u32) -> Result<MottReport> {
    if u.is_nan() || u <= 0.0 {
        return Err(Error::config("interaction U must be positive"));
    }
    if j.is_nan() || j < 0.0 {
        return Err(Error::config("tunneling J must be nonnegative"));
    }
    if z == 0 {
        return Err(Error::config("coordination number must be at least 1"));
    }
    let bound = 1.0 / (5.8 * z as f64);
    let ratio = j / u;
    Ok(MottReport {
        valid: ratio <= bound,
        ratio,
        bound,
    })
}

/// Order-of-magnitude scale of the induced couplings, J^3 / U^2. Same
/// units in and out.
pub fn lambda_scale_estimate(j: f64, u: f64) -> Result<f64> {
    if u.is_nan() || u <= 0.0 {
        return Err(Error::config("interaction U must be positive"));
    }
    Ok(j.powi(3) / u.powi(2))
}
