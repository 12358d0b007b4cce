//! Four model problems on the unit square and their residual audits.
//!
//! Dirichlet problems (Poisson, Helmholtz, Darcy) live on the vertex grid
//! `x_i = i/(n-1)` with the boundary ring stored as explicit zeros; the
//! interior is discretized with the 5-point stencil, `h = 1/(n-1)`. The
//! periodic Navier–Stokes problem lives on cell centers `x_i = (i+0.5)/n`
//! and is evolved pseudo-spectrally. All solvers are single-threaded;
//! parallelism happens one level up, across samples.

use rustfft::num_complex::Complex;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fft::{dst1_2d, fft2, signed_freq, to_complex};
use crate::field::Field;
use crate::grf::{sample_grf, threshold_binary};

/// Which of the four model problems a dataset contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdeKind {
    /// ∇²u = a, zero Dirichlet boundary.
    Poisson,
    /// ∇²u + k²u = a, zero Dirichlet boundary.
    Helmholtz,
    /// −∇·(a ∇u) = f with binary permeability a, zero Dirichlet boundary.
    Darcy,
    /// Vorticity form of incompressible Navier–Stokes, periodic, forced.
    NavierStokes,
    /// Both fields drawn independently from a Gaussian prior; no operator
    /// links them. Used for analytically tractable toy datasets.
    GaussianField,
}

impl PdeKind {
    /// Stable one-byte tag used in the dataset file header.
    pub fn tag(self) -> u8 {
        match self {
            PdeKind::Poisson => 0,
            PdeKind::Helmholtz => 1,
            PdeKind::Darcy => 2,
            PdeKind::NavierStokes => 3,
            PdeKind::GaussianField => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<PdeKind> {
        match tag {
            0 => Some(PdeKind::Poisson),
            1 => Some(PdeKind::Helmholtz),
            2 => Some(PdeKind::Darcy),
            3 => Some(PdeKind::NavierStokes),
            4 => Some(PdeKind::GaussianField),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PdeKind::Poisson => "poisson",
            PdeKind::Helmholtz => "helmholtz",
            PdeKind::Darcy => "darcy",
            PdeKind::NavierStokes => "navier_stokes",
            PdeKind::GaussianField => "gaussian_field",
        }
    }

    /// Solutions of the Dirichlet problems vanish on the boundary ring.
    pub fn is_dirichlet(self) -> bool {
        matches!(self, PdeKind::Poisson | PdeKind::Helmholtz | PdeKind::Darcy)
    }
}

/// Spectrum of the Gaussian random field used for coefficients/sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrfParams {
    pub amplitude: f64,
    pub exponent: f64,
}

/// Everything needed to synthesize one dataset: problem family, grid size,
/// input-field spectrum, and the per-family physical parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeSpec {
    pub kind: PdeKind,
    pub resolution: usize,
    pub grf: GrfParams,
    /// Wavenumber k in the Helmholtz operator.
    pub helmholtz_k: f64,
    /// Threshold and the two permeability levels for Darcy.
    pub darcy_threshold: f64,
    pub darcy_levels: (f64, f64),
    /// Constant right-hand side f for Darcy.
    pub darcy_forcing: f64,
    /// Viscosity, final time, and requested step count for Navier–Stokes.
    pub ns_viscosity: f64,
    pub ns_horizon: f64,
    pub ns_steps: usize,
}

impl PdeSpec {
    /// Defaults shared by the constructors. The GRF amplitude scales with
    /// resolution so the per-pixel variance stays O(1) as grids grow (the
    /// spectral mode sum converges, while synthesis normalizes by 1/n²).
    fn base(kind: PdeKind, resolution: usize, exponent: f64) -> PdeSpec {
        PdeSpec {
            kind,
            resolution,
            grf: GrfParams {
                amplitude: resolution as f64 / 2.0,
                exponent,
            },
            helmholtz_k: 1.0,
            darcy_threshold: 0.0,
            darcy_levels: (3.0, 12.0),
            darcy_forcing: 1.0,
            ns_viscosity: 1e-3,
            ns_horizon: 1.0,
            ns_steps: 128,
        }
    }

    pub fn poisson(resolution: usize) -> PdeSpec {
        PdeSpec::base(PdeKind::Poisson, resolution, 2.0)
    }

    pub fn helmholtz(resolution: usize) -> PdeSpec {
        PdeSpec::base(PdeKind::Helmholtz, resolution, 2.0)
    }

    pub fn darcy(resolution: usize) -> PdeSpec {
        PdeSpec::base(PdeKind::Darcy, resolution, 2.5)
    }

    pub fn navier_stokes(resolution: usize) -> PdeSpec {
        PdeSpec::base(PdeKind::NavierStokes, resolution, 2.5)
    }

    /// Grid spacing of the Dirichlet vertex grid.
    pub fn dirichlet_h(&self) -> f64 {
        1.0 / (self.resolution as f64 - 1.0)
    }

    /// Draw the coefficient field for one sample.
    pub fn draw_coefficient(&self, seed: u64) -> Field {
        let g = sample_grf(self.resolution, self.grf.amplitude, self.grf.exponent, seed);
        match self.kind {
            PdeKind::Darcy => {
                let (low, high) = self.darcy_levels;
                threshold_binary(&g, self.darcy_threshold, low, high)
            }
            _ => g,
        }
    }

    /// Solve the forward problem for a given coefficient field.
    pub fn solve(&self, coefficient: &Field) -> Result<Field> {
        match self.kind {
            PdeKind::Poisson => solve_poisson(coefficient),
            PdeKind::Helmholtz => solve_helmholtz(coefficient, self.helmholtz_k),
            PdeKind::Darcy => {
                let f = Field::constant(coefficient.size(), self.darcy_forcing);
                solve_darcy(coefficient, &f)
            }
            PdeKind::NavierStokes => {
                evolve_navier_stokes(coefficient, self.ns_viscosity, self.ns_horizon, self.ns_steps)
            }
            PdeKind::GaussianField => Err(Error::config(
                "gaussian field pairs are drawn from a prior, not solved",
            )),
        }
    }
}

// ===================================================================
// Dirichlet spectral solves (Poisson, Helmholtz)
// ===================================================================

/// Eigenvalue of the 5-point Laplacian for sine mode `(j, k)`, `1 ≤ j,k ≤ m`
/// on an interior of side `m` with spacing `h`. Always negative.
fn laplace_eigenvalue(j: usize, k: usize, m: usize, h: f64) -> f64 {
    let denom = 2.0 * (m as f64 + 1.0);
    let sj = (PI * j as f64 / denom).sin();
    let sk = (PI * k as f64 / denom).sin();
    -4.0 / (h * h) * (sj * sj + sk * sk)
}

/// Shared sine-transform solve of `(∇²_h + shift) u = a` on the interior.
fn dirichlet_spectral_solve(a: &Field, shift: f64) -> Result<Field> {
    let n = a.size();
    if n < 4 {
        return Err(Error::config("Dirichlet grids need at least 4 points per side"));
    }
    let m = n - 2;
    let h = 1.0 / (n as f64 - 1.0);

    let mut rhs = vec![0.0; m * m];
    for y in 0..m {
        for x in 0..m {
            rhs[y * m + x] = a.at(y + 1, x + 1);
        }
    }

    // resonance guard: the discrete operator must be invertible
    if shift != 0.0 {
        let mut min_gap = f64::INFINITY;
        let mut worst = (0, 0);
        for j in 1..=m {
            for k in 1..=m {
                let gap = (laplace_eigenvalue(j, k, m, h) + shift).abs();
                if gap < min_gap {
                    min_gap = gap;
                    worst = (j, k);
                }
            }
        }
        if min_gap <= 1e-8 {
            return Err(Error::numeric(format!(
                "operator is resonant near sine mode ({}, {}): |eigenvalue gap| = {min_gap:.3e}",
                worst.0, worst.1
            )));
        }
    }

    dst1_2d(&mut rhs, m);
    for j in 1..=m {
        for k in 1..=m {
            let lambda = laplace_eigenvalue(j, k, m, h) + shift;
            rhs[(j - 1) * m + (k - 1)] /= lambda;
        }
    }
    dst1_2d(&mut rhs, m);
    let scale = (2.0 / (m as f64 + 1.0)).powi(2);

    let mut u = Field::zeros(n);
    for y in 0..m {
        for x in 0..m {
            *u.at_mut(y + 1, x + 1) = rhs[y * m + x] * scale;
        }
    }
    if !u.is_finite() {
        return Err(Error::numeric("Dirichlet solve produced non-finite values"));
    }
    Ok(u)
}

/// Solve ∇²u = a with zero Dirichlet boundary; exact for the 5-point stencil.
pub fn solve_poisson(a: &Field) -> Result<Field> {
    dirichlet_spectral_solve(a, 0.0)
}

/// Solve ∇²u + k²u = a with zero Dirichlet boundary.
///
/// Fails with a numeric error when k² sits within 1e-8 of a discrete
/// Laplacian eigenvalue (resonance), naming the offending mode.
pub fn solve_helmholtz(a: &Field, k: f64) -> Result<Field> {
    dirichlet_spectral_solve(a, k * k)
}

// ===================================================================
// Darcy flow: finite volumes with harmonic face permeabilities + CG
// ===================================================================

/// Harmonic mean — the consistent face permeability between two cells.
#[inline]
fn face_perm(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Apply the Darcy operator `u ↦ −∇·(a∇u)` on interior nodes (row-major
/// `m × m` interior vector), zero Dirichlet ring.
fn darcy_apply(a: &Field, u: &[f64], out: &mut [f64], m: usize, h: f64) {
    let n = a.size();
    debug_assert_eq!(m, n - 2);
    let inv_h2 = 1.0 / (h * h);
    let at = |y: i64, x: i64| -> f64 {
        // interior vector lookup with the zero ring folded in
        if y < 0 || x < 0 || y >= m as i64 || x >= m as i64 {
            0.0
        } else {
            u[y as usize * m + x as usize]
        }
    };
    for y in 0..m {
        for x in 0..m {
            let (gy, gx) = (y + 1, x + 1); // full-grid coordinates
            let uc = u[y * m + x];
            let ac = a.at(gy, gx);
            let aw = face_perm(ac, a.at(gy, gx - 1));
            let ae = face_perm(ac, a.at(gy, gx + 1));
            let an = face_perm(ac, a.at(gy - 1, gx));
            let as_ = face_perm(ac, a.at(gy + 1, gx));
            let (yi, xi) = (y as i64, x as i64);
            out[y * m + x] = inv_h2
                * (aw * (uc - at(yi, xi - 1))
                    + ae * (uc - at(yi, xi + 1))
                    + an * (uc - at(yi - 1, xi))
                    + as_ * (uc - at(yi + 1, xi)));
        }
    }
}

/// Solve −∇·(a∇u) = f with zero Dirichlet boundary by Jacobi-preconditioned
/// conjugate gradients on the interior unknowns.
///
/// Requires `a > 0` everywhere. Converges to a relative residual of 1e-12
/// (well inside the 1e-6 flux-balance audit) or fails with a numeric error.
pub fn solve_darcy(a: &Field, f: &Field) -> Result<Field> {
    let n = a.size();
    if n < 4 {
        return Err(Error::config("Dirichlet grids need at least 4 points per side"));
    }
    if f.size() != n {
        return Err(Error::config("permeability and forcing grids must match"));
    }
    if a.as_slice().iter().any(|&v| !(v > 0.0)) {
        return Err(Error::numeric("Darcy permeability must be strictly positive"));
    }
    let m = n - 2;
    let h = 1.0 / (n as f64 - 1.0);
    let dim = m * m;

    let mut b = vec![0.0; dim];
    for y in 0..m {
        for x in 0..m {
            b[y * m + x] = f.at(y + 1, x + 1);
        }
    }
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Ok(Field::zeros(n));
    }

    // diagonal of the operator, for Jacobi preconditioning
    let inv_h2 = 1.0 / (h * h);
    let mut diag = vec![0.0; dim];
    for y in 0..m {
        for x in 0..m {
            let (gy, gx) = (y + 1, x + 1);
            let ac = a.at(gy, gx);
            diag[y * m + x] = inv_h2
                * (face_perm(ac, a.at(gy, gx - 1))
                    + face_perm(ac, a.at(gy, gx + 1))
                    + face_perm(ac, a.at(gy - 1, gx))
                    + face_perm(ac, a.at(gy + 1, gx)));
        }
    }

    let mut u = vec![0.0; dim];
    let mut r = b.clone(); // r = b - A·0
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; dim];

    let tol = 1e-12 * b_norm;
    let max_iter = 20 * dim;
    let mut converged = false;
    for _ in 0..max_iter {
        darcy_apply(a, &p, &mut ap, m, h);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::numeric("CG broke down: operator lost positive-definiteness"));
        }
        let alpha = rz / pap;
        for i in 0..dim {
            u[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r_norm <= tol {
            converged = true;
            break;
        }
        for i in 0..dim {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..dim {
            p[i] = z[i] + beta * p[i];
        }
    }
    if !converged {
        return Err(Error::numeric("CG did not reach tolerance"));
    }

    let mut out = Field::zeros(n);
    for y in 0..m {
        for x in 0..m {
            *out.at_mut(y + 1, x + 1) = u[y * m + x];
        }
    }
    Ok(out)
}

/// Relative flux-balance defect `‖−∇·(a∇u) − f‖ / ‖f‖` over the interior,
/// recomputed directly from the fields. This is the post-solve audit used
/// by [`pde_residual`] and the tests.
pub fn darcy_flux_imbalance(a: &Field, f: &Field, u: &Field) -> f64 {
    let n = a.size();
    let m = n - 2;
    let h = 1.0 / (n as f64 - 1.0);
    let mut interior = vec![0.0; m * m];
    for y in 0..m {
        for x in 0..m {
            interior[y * m + x] = u.at(y + 1, x + 1);
        }
    }
    let mut div = vec![0.0; m * m];
    darcy_apply(a, &interior, &mut div, m, h);
    let mut num = 0.0;
    let mut den = 0.0;
    for y in 0..m {
        for x in 0..m {
            let d = div[y * m + x] - f.at(y + 1, x + 1);
            num += d * d;
            den += f.at(y + 1, x + 1).powi(2);
        }
    }
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

// ===================================================================
// Navier–Stokes vorticity, periodic pseudo-spectral
// ===================================================================

/// Fixed forcing `q(x, y) = 0.1 · (sin(2π(x+y)) + cos(2π(x+y)))` sampled at
/// cell centers.
pub fn ns_forcing(size: usize) -> Field {
    Field::from_fn(size, |y, x| {
        let xs = (x as f64 + 0.5) / size as f64;
        let ys = (y as f64 + 0.5) / size as f64;
        let arg = 2.0 * PI * (xs + ys);
        0.1 * (arg.sin() + arg.cos())
    })
}

/// Diagnostics from one evolution, mostly for tests and logging.
#[derive(Debug, Clone, Copy)]
pub struct NsStats {
    /// Total substeps actually taken (≥ requested steps when CFL forced
    /// subdivision).
    pub substeps: usize,
    /// Largest advective CFL number seen before subdivision.
    pub max_cfl: f64,
}

/// Evolve the vorticity `w` of forced incompressible Navier–Stokes on the
/// periodic unit square, returning the state at `horizon`.
///
/// Semi-implicit scheme: Crank–Nicolson on diffusion, explicit Euler on the
/// dealiased (2/3 rule) advection and forcing. Steps whose advective CFL
/// number exceeds 1 are subdivided (with a warning) until each substep is
/// stable. The mean of `w` is conserved up to the forcing mean.
pub fn evolve_navier_stokes(
    w0: &Field,
    viscosity: f64,
    horizon: f64,
    steps: usize,
) -> Result<Field> {
    evolve_navier_stokes_detailed(w0, viscosity, horizon, steps).map(|(w, _)| w)
}

/// As [`evolve_navier_stokes`], also returning step diagnostics.
pub fn evolve_navier_stokes_detailed(
    w0: &Field,
    viscosity: f64,
    horizon: f64,
    steps: usize,
) -> Result<(Field, NsStats)> {
    let q = ns_forcing(w0.size());
    evolve_ns_impl(w0, Some(&q), viscosity, horizon, steps)
}

/// Evolution core with an arbitrary (or absent) forcing field; the unforced
/// form exists for analytic decay checks.
pub fn evolve_ns_impl(
    w0: &Field,
    forcing: Option<&Field>,
    viscosity: f64,
    horizon: f64,
    steps: usize,
) -> Result<(Field, NsStats)> {
    if viscosity <= 0.0 {
        return Err(Error::config("viscosity must be positive"));
    }
    if steps == 0 || horizon <= 0.0 {
        return Err(Error::config("need a positive horizon and step count"));
    }
    let n = w0.size();
    let nn = n * n;

    // wavenumbers (2π-scaled), squared magnitudes, and the 2/3 dealias stencil
    let kx: Vec<f64> = (0..n).map(|i| 2.0 * PI * signed_freq(i, n) as f64).collect();
    let mut k2 = vec![0.0; nn];
    let mut keep = vec![true; nn];
    let cut = (n as f64) / 3.0;
    for y in 0..n {
        for x in 0..n {
            let i = y * n + x;
            k2[i] = kx[x] * kx[x] + kx[y] * kx[y];
            keep[i] = (signed_freq(x, n) as f64).abs() <= cut
                && (signed_freq(y, n) as f64).abs() <= cut;
        }
    }

    let mut q_hat = match forcing {
        Some(q) => {
            if q.size() != n {
                return Err(Error::config("forcing grid must match the state grid"));
            }
            to_complex(q)
        }
        None => vec![Complex::new(0.0, 0.0); nn],
    };
    fft2(&mut q_hat, n, false);

    let mut w_hat = to_complex(w0);
    fft2(&mut w_hat, n, false);

    let dt = horizon / steps as f64;
    let dx = 1.0 / n as f64;
    let mut stats = NsStats {
        substeps: 0,
        max_cfl: 0.0,
    };

    let mut psi_hat = vec![Complex::new(0.0, 0.0); nn];
    let mut vx = vec![Complex::new(0.0, 0.0); nn];
    let mut vy = vec![Complex::new(0.0, 0.0); nn];
    let mut wx = vec![Complex::new(0.0, 0.0); nn];
    let mut wy = vec![Complex::new(0.0, 0.0); nn];
    let mut adv = vec![Complex::new(0.0, 0.0); nn];

    for _ in 0..steps {
        let mut remaining = dt;
        let mut warned = false;
        while remaining > dt * 1e-12 {
            // velocity from the stream function: Δψ = −w ⇒ ψ̂ = ŵ/k²
            for i in 0..nn {
                psi_hat[i] = if k2[i] > 0.0 {
                    w_hat[i] / k2[i]
                } else {
                    Complex::new(0.0, 0.0)
                };
            }
            let im = Complex::new(0.0, 1.0);
            for y in 0..n {
                for x in 0..n {
                    let i = y * n + x;
                    vx[i] = im * kx[y] * psi_hat[i]; // ∂ψ/∂y
                    vy[i] = -im * kx[x] * psi_hat[i]; // −∂ψ/∂x
                    wx[i] = im * kx[x] * w_hat[i];
                    wy[i] = im * kx[y] * w_hat[i];
                }
            }
            fft2(&mut vx, n, true);
            fft2(&mut vy, n, true);
            fft2(&mut wx, n, true);
            fft2(&mut wy, n, true);

            let v_max = vx
                .iter()
                .chain(vy.iter())
                .fold(0.0f64, |m, c| m.max(c.re.abs()));
            stats.max_cfl = stats.max_cfl.max(v_max * dt / dx);

            // Subdivide the rest of this step whenever CFL would exceed 1,
            // targeting CFL ≤ 0.5 per substep to leave the explicit
            // advection some stability margin.
            let cfl_remaining = v_max * remaining / dx;
            let parts = if cfl_remaining > 1.0 {
                if !warned {
                    log::warn!(
                        "advective CFL {:.2} > 1; subdividing step",
                        v_max * dt / dx
                    );
                    warned = true;
                }
                (cfl_remaining / 0.5).ceil() as usize
            } else {
                1
            };
            let sub_dt = remaining / parts as f64;

            for i in 0..nn {
                adv[i] = Complex::new(vx[i].re * wx[i].re + vy[i].re * wy[i].re, 0.0);
            }
            fft2(&mut adv, n, false);

            for i in 0..nn {
                let nl = if keep[i] { adv[i] } else { Complex::new(0.0, 0.0) };
                let half = 0.5 * viscosity * k2[i] * sub_dt;
                w_hat[i] = (w_hat[i] * (1.0 - half) + sub_dt * (q_hat[i] - nl)) / (1.0 + half);
            }
            stats.substeps += 1;
            remaining -= sub_dt;
        }
    }

    fft2(&mut w_hat, n, true);
    let out = crate::fft::real_field(&w_hat, n);
    if !out.is_finite() {
        return Err(Error::numeric("Navier–Stokes evolution diverged"));
    }
    Ok((out, stats))
}

// ===================================================================
// Residual audits
// ===================================================================

/// 5-point Laplacian at an interior node of a full-grid field.
#[inline]
fn lap5(u: &Field, y: usize, x: usize, inv_h2: f64) -> f64 {
    (u.at(y, x - 1) + u.at(y, x + 1) + u.at(y - 1, x) + u.at(y + 1, x) - 4.0 * u.at(y, x)) * inv_h2
}

/// Relative discrete residual of a stored (coefficient, solution) pair.
///
/// Dirichlet kinds combine the interior operator defect with a boundary
/// violation term (`u` on the ring, weighted `1/h²` to sit on the operator
/// scale), normalized by the right-hand side. Navier–Stokes uses a
/// step-doubling self-consistency check: the pair is re-evolved at twice
/// the step count and the relative difference reported.
pub fn pde_residual(spec: &PdeSpec, coefficient: &Field, solution: &Field) -> Result<f64> {
    let n = coefficient.size();
    if solution.size() != n {
        return Err(Error::config("coefficient/solution grids must match"));
    }
    match spec.kind {
        PdeKind::Poisson | PdeKind::Helmholtz => {
            let shift = if spec.kind == PdeKind::Helmholtz {
                spec.helmholtz_k * spec.helmholtz_k
            } else {
                0.0
            };
            let h = 1.0 / (n as f64 - 1.0);
            let inv_h2 = 1.0 / (h * h);
            let mut num = 0.0;
            let mut den = 0.0;
            for y in 1..n - 1 {
                for x in 1..n - 1 {
                    let r = lap5(solution, y, x, inv_h2) + shift * solution.at(y, x)
                        - coefficient.at(y, x);
                    num += r * r;
                    den += coefficient.at(y, x).powi(2);
                }
            }
            num += boundary_violation(solution, inv_h2);
            Ok((num / den.max(f64::MIN_POSITIVE)).sqrt())
        }
        PdeKind::Darcy => {
            let f = Field::constant(n, spec.darcy_forcing);
            let h = 1.0 / (n as f64 - 1.0);
            let flux = darcy_flux_imbalance(coefficient, &f, solution);
            let mut bnd = boundary_violation(solution, 1.0 / (h * h));
            let f_norm2: f64 = (1..n - 1)
                .flat_map(|y| (1..n - 1).map(move |x| (y, x)))
                .map(|(y, x)| f.at(y, x).powi(2))
                .sum();
            bnd /= f_norm2.max(f64::MIN_POSITIVE);
            Ok((flux * flux + bnd).sqrt())
        }
        PdeKind::NavierStokes => {
            let refined = evolve_navier_stokes(
                coefficient,
                spec.ns_viscosity,
                spec.ns_horizon,
                spec.ns_steps * 2,
            )?;
            let denom = refined.l2_norm().max(f64::MIN_POSITIVE);
            Ok(refined.l2_distance(solution) / denom)
        }
        PdeKind::GaussianField => {
            Err(Error::config("gaussian field pairs have no residual: no operator links them"))
        }
    }
}

/// Squared boundary-ring violation, weighted to the operator scale.
fn boundary_violation(u: &Field, inv_h2: f64) -> f64 {
    let n = u.size();
    let mut sum = 0.0;
    for x in 0..n {
        sum += u.at(0, x).powi(2) + u.at(n - 1, x).powi(2);
    }
    for y in 1..n - 1 {
        sum += u.at(y, 0).powi(2) + u.at(y, n - 1).powi(2);
    }
    sum * inv_h2 * inv_h2
}

#[cfg(test)]
mod tests {
    use super::*;

    /// sin(πx)sin(πy) on the vertex grid — vanishes on the ring.
    fn sine_bump(n: usize) -> Field {
        Field::from_fn(n, |y, x| {
            let xs = x as f64 / (n as f64 - 1.0);
            let ys = y as f64 / (n as f64 - 1.0);
            (PI * xs).sin() * (PI * ys).sin()
        })
    }

    fn rel_l2(truth: &Field, approx: &Field) -> f64 {
        truth.l2_distance(approx) / truth.l2_norm()
    }

    #[test]
    fn poisson_manufactured_solution_second_order() {
        // ∇²(sin πx sin πy) = −2π² sin πx sin πy
        let mut errs = Vec::new();
        for n in [32usize, 64] {
            let u_true = sine_bump(n);
            let a = u_true.map(|v| -2.0 * PI * PI * v);
            let u = solve_poisson(&a).unwrap();
            errs.push(rel_l2(&u_true, &u));
        }
        assert!(errs[1] < 1e-3, "64² error {:.2e}", errs[1]);
        let ratio = errs[0] / errs[1];
        assert!(
            (3.5..=4.5).contains(&ratio),
            "halving h should quarter the error, got ratio {ratio:.2}"
        );
    }

    #[test]
    fn poisson_discrete_residual_is_machine_level() {
        let spec = PdeSpec::poisson(32);
        let a = spec.draw_coefficient(5);
        let u = solve_poisson(&a).unwrap();
        let r = pde_residual(&spec, &a, &u).unwrap();
        assert!(r < 1e-8, "spectral solve should satisfy the stencil, r = {r:.2e}");
    }

    #[test]
    fn poisson_residual_detects_boundary_shift() {
        // adding a constant leaves the interior stencil perfect; only the
        // boundary term can flag it
        let spec = PdeSpec::poisson(32);
        let a = spec.draw_coefficient(6);
        let u = solve_poisson(&a).unwrap();
        let shifted = u.map(|v| v + 0.1);
        let r = pde_residual(&spec, &a, &shifted).unwrap();
        assert!(r > 1.0, "boundary violation must dominate, r = {r:.2e}");
    }

    #[test]
    fn helmholtz_manufactured_solution() {
        // (∇² + 1)(sin πx sin πy) = (1 − 2π²) sin πx sin πy with k = 1
        let mut errs = Vec::new();
        for n in [32usize, 64] {
            let u_true = sine_bump(n);
            let a = u_true.map(|v| (1.0 - 2.0 * PI * PI) * v);
            let u = solve_helmholtz(&a, 1.0).unwrap();
            errs.push(rel_l2(&u_true, &u));
        }
        assert!(errs[1] < 1e-3, "64² error {:.2e}", errs[1]);
        let ratio = errs[0] / errs[1];
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio:.2}");
    }

    #[test]
    fn helmholtz_rejects_resonant_wavenumber() {
        // place k² exactly on the smallest discrete eigenvalue of −∇²
        let n = 16;
        let m = n - 2;
        let h = 1.0 / (n as f64 - 1.0);
        let k = (-laplace_eigenvalue(1, 1, m, h)).sqrt();
        let a = sine_bump(n);
        let err = solve_helmholtz(&a, k).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)), "got {err:?}");
        assert!(err.to_string().contains("resonant"));
    }

    #[test]
    fn darcy_constant_permeability_reduces_to_poisson() {
        // −∇·(1·∇u) = c  ⇔  ∇²u = −c
        let n = 32;
        let c = 2.5;
        let a = Field::constant(n, 1.0);
        let f = Field::constant(n, c);
        let u_darcy = solve_darcy(&a, &f).unwrap();
        let u_poisson = solve_poisson(&Field::constant(n, -c)).unwrap();
        assert!(u_darcy.l2_distance(&u_poisson) / u_poisson.l2_norm() < 1e-6);
    }

    #[test]
    fn darcy_binary_field_flux_balance() {
        let spec = PdeSpec::darcy(32);
        let a = spec.draw_coefficient(11);
        let f = Field::constant(32, spec.darcy_forcing);
        let u = solve_darcy(&a, &f).unwrap();
        let imbalance = darcy_flux_imbalance(&a, &f, &u);
        assert!(imbalance < 1e-6, "flux imbalance {imbalance:.2e}");
        assert!(pde_residual(&spec, &a, &u).unwrap() < 1e-6);
    }

    #[test]
    fn darcy_manufactured_solution_second_order() {
        // u* = sin(πx)sin(πy), a = 1 + u*/2, f = −∇·(a∇u*) expanded by hand
        let manufactured = |n: usize| -> (Field, Field, Field) {
            let grid = |i: usize| i as f64 / (n as f64 - 1.0);
            let u = Field::from_fn(n, |y, x| (PI * grid(x)).sin() * (PI * grid(y)).sin());
            let a = u.map(|v| 1.0 + 0.5 * v);
            let f = Field::from_fn(n, |y, x| {
                let (xs, ys) = (grid(x), grid(y));
                let (sx, cx) = ((PI * xs).sin(), (PI * xs).cos());
                let (sy, cy) = ((PI * ys).sin(), (PI * ys).cos());
                let grad_dot = 0.5 * PI * PI * (cx * cx * sy * sy + sx * sx * cy * cy);
                let a_here = 1.0 + 0.5 * sx * sy;
                -grad_dot + 2.0 * PI * PI * a_here * sx * sy
            });
            (a, f, u)
        };
        let mut errs = Vec::new();
        for n in [32usize, 64] {
            let (a, f, u_true) = manufactured(n);
            let u = solve_darcy(&a, &f).unwrap();
            errs.push(rel_l2(&u_true, &u));
        }
        let ratio = errs[0] / errs[1];
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio:.2}");
    }

    #[test]
    fn darcy_requires_positive_permeability() {
        let mut a = Field::constant(16, 1.0);
        *a.at_mut(5, 5) = 0.0;
        let f = Field::constant(16, 1.0);
        assert!(matches!(solve_darcy(&a, &f), Err(Error::Numeric(_))));
    }

    #[test]
    fn ns_single_mode_viscous_decay() {
        // w(x) = sin(2πx) has zero self-advection; it decays like
        // exp(−ν(2π)²T) under pure diffusion
        let n = 32;
        let nu = 1e-3;
        let w0 = Field::from_fn(n, |_, x| (2.0 * PI * (x as f64 + 0.5) / n as f64).sin());
        let (w, _) = evolve_ns_impl(&w0, None, nu, 1.0, 128).unwrap();
        let decay = (-nu * (2.0 * PI).powi(2)).exp();
        let expect = w0.map(|v| v * decay);
        let rel = expect.l2_distance(&w) / expect.l2_norm();
        assert!(rel < 1e-4, "decay error {rel:.2e}");
    }

    #[test]
    fn ns_mean_vorticity_is_conserved() {
        // forcing has zero mean on the grid, so mean(w) must not drift
        let spec = PdeSpec::navier_stokes(32);
        let w0 = spec.draw_coefficient(3);
        let w = evolve_navier_stokes(&w0, 1e-3, 1.0, 128).unwrap();
        assert!((w.mean() - w0.mean()).abs() < 1e-8);
    }

    #[test]
    fn ns_step_halving_shrinks_difference() {
        let spec = PdeSpec::navier_stokes(32);
        let w0 = spec.draw_coefficient(9);
        let w64 = evolve_navier_stokes(&w0, 1e-3, 1.0, 64).unwrap();
        let w128 = evolve_navier_stokes(&w0, 1e-3, 1.0, 128).unwrap();
        let w256 = evolve_navier_stokes(&w0, 1e-3, 1.0, 256).unwrap();
        let d1 = w64.l2_distance(&w128);
        let d2 = w128.l2_distance(&w256);
        assert!(
            d1 / d2 >= 1.8,
            "halving the step should shrink the difference, got {:.2}",
            d1 / d2
        );

        // and the step-doubling residual must order the same way
        let mut spec64 = spec.clone();
        spec64.ns_steps = 64;
        let mut spec128 = spec.clone();
        spec128.ns_steps = 128;
        let r64 = pde_residual(&spec64, &w0, &w64).unwrap();
        let r128 = pde_residual(&spec128, &w0, &w128).unwrap();
        assert!(r64 > r128);
    }

    #[test]
    fn ns_cfl_subdivision_triggers_and_stays_stable() {
        let spec = PdeSpec::navier_stokes(32);
        let strong = spec.draw_coefficient(4).map(|v| v * 12.0);
        let (w, stats) =
            evolve_navier_stokes_detailed(&strong, 1e-3, 0.25, 2).unwrap();
        assert!(stats.max_cfl > 1.0, "test needs a CFL violation, got {}", stats.max_cfl);
        assert!(stats.substeps > 2, "subdivision should add substeps");
        assert!(w.is_finite());
        assert!((w.mean() - strong.mean()).abs() < 1e-8);
    }
}
