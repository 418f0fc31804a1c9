//! Linear algebra for the discrete operators.
//!
//! * [`HelmholtzOp`]: `-a Δ_h + c`, solved by tridiagonal elimination.
//! * [`BlockOp`]: the cooperative two-phase system
//!   `[[-Δ_h + ν + σ_u, -ν], [-ν, -d Δ_h + ν + σ_v]]`. [`block_solve`]
//!   eliminates `ψ` and runs matrix-free CG on the Schur complement;
//!   [`BlockOp::factorize`] gives a banded `LDLᵀ` factorization for loops that
//!   solve with the same operator many times.
//! * [`principal_eigenpair`]: principal Dirichlet eigenpair of `-Δ_h`.

use crate::error::{Error, Result};
use crate::grid::{dot, neg_laplacian_into, Field, Grid};

/// `-a Δ_h + c I` on a grid, with the elimination coefficients precomputed.
#[derive(Debug, Clone)]
pub struct HelmholtzOp {
    a: f64,
    c: f64,
    grid: Grid,
    // Thomas sweep: modified super-diagonal and reciprocal pivots.
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl HelmholtzOp {
    pub fn new(grid: Grid, a: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Helmholtz operator needs a > 0 and c >= 0, got a={a}, c={c}"
            )));
        }
        let n = grid.n();
        let inv_h2 = 1.0 / (grid.h() * grid.h());
        let diag = 2.0 * a * inv_h2 + c;
        let off = -a * inv_h2;
        let mut upper = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev_upper = 0.0;
        for i in 0..n {
            let pivot = diag - off * prev_upper;
            inv_pivot[i] = 1.0 / pivot;
            upper[i] = off / pivot;
            prev_upper = upper[i];
        }
        Ok(Self {
            a,
            c,
            grid,
            upper,
            inv_pivot,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn apply(&self, x: &Field) -> Result<Field> {
        self.grid.check(&x.grid())?;
        let mut out = Field::zeros(self.grid);
        self.apply_into(x.values(), out.values_mut());
        Ok(out)
    }

    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        neg_laplacian_into(self.grid.h(), x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = self.a * *o + self.c * xi;
        }
    }

    /// Solves `(-a Δ_h + c) x = rhs`.
    pub fn solve(&self, rhs: &Field) -> Result<Field> {
        self.grid.check(&rhs.grid())?;
        let mut x = rhs.clone();
        self.solve_in_place(x.values_mut());
        Ok(x)
    }

    pub(crate) fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        let off = -self.a / (self.grid.h() * self.grid.h());
        let mut prev = 0.0;
        for i in 0..n {
            x[i] = (x[i] - off * prev) * self.inv_pivot[i];
            prev = x[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.upper[i] * x[i + 1];
        }
    }
}

/// Convenience wrapper around [`HelmholtzOp::solve`].
pub fn helmholtz_solve(op: &HelmholtzOp, rhs: &Field) -> Result<Field> {
    op.solve(rhs)
}

/// The symmetric cooperative block operator
/// `[[-Δ_h + (ν + σ_u) I, -ν I], [-ν I, -d Δ_h + (ν + σ_v) I]]`.
///
/// With zero shifts this is the linear part of the stationary system; the
/// parabolic stepper uses `σ_u = 1/dt`, `σ_v = α/dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockOp {
    nu: f64,
    d: f64,
    shift_u: f64,
    shift_v: f64,
    grid: Grid,
}

impl BlockOp {
    pub fn new(grid: Grid, nu: f64, d: f64) -> Result<Self> {
        Self::with_shifts(grid, nu, d, 0.0, 0.0)
    }

    pub fn with_shifts(grid: Grid, nu: f64, d: f64, shift_u: f64, shift_v: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) || !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "block operator needs nu > 0 and d > 0, got nu={nu}, d={d}"
            )));
        }
        if !(shift_u >= 0.0 && shift_v >= 0.0) {
            return Err(Error::InvalidArgument(
                "block operator shifts must be nonnegative".into(),
            ));
        }
        Ok(Self {
            nu,
            d,
            shift_u,
            shift_v,
            grid,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn apply(&self, phi: &Field, psi: &Field) -> Result<(Field, Field)> {
        self.grid.check(&phi.grid())?;
        self.grid.check(&psi.grid())?;
        let mut f = Field::zeros(self.grid);
        let mut g = Field::zeros(self.grid);
        self.apply_into(phi.values(), psi.values(), f.values_mut(), g.values_mut());
        Ok((f, g))
    }

    pub(crate) fn apply_into(&self, phi: &[f64], psi: &[f64], f: &mut [f64], g: &mut [f64]) {
        let h = self.grid.h();
        neg_laplacian_into(h, phi, f);
        neg_laplacian_into(h, psi, g);
        for i in 0..phi.len() {
            f[i] += (self.nu + self.shift_u) * phi[i] - self.nu * psi[i];
            g[i] = self.d * g[i] + (self.nu + self.shift_v) * psi[i] - self.nu * phi[i];
        }
    }

    /// Banded `LDLᵀ` factorization in the interleaved ordering
    /// `(φ_1, ψ_1, φ_2, ψ_2, ...)`, half-bandwidth 2.
    pub fn factorize(&self) -> Result<BlockFactor> {
        let n = self.grid.n();
        BlockFactor::assemble(
            self.grid,
            self.nu,
            self.d,
            &vec![self.shift_u; n],
            &vec![self.shift_v; n],
        )
    }
}

/// Relative residual `‖rhs - B x‖∞ / ‖rhs‖∞` of the full block system.
pub fn block_residual(op: &BlockOp, phi: &Field, psi: &Field, f: &Field, g: &Field) -> Result<f64> {
    let (bf, bg) = op.apply(phi, psi)?;
    let scale = f.max_norm().max(g.max_norm());
    let res = f
        .values()
        .iter()
        .zip(bf.values())
        .chain(g.values().iter().zip(bg.values()))
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(if scale > 0.0 { res / scale } else { res })
}

const CG_REL_TOL: f64 = 1e-12;
const BLOCK_REL_RESIDUAL: f64 = 1e-10;

/// Solves the block system by Schur elimination of `ψ`:
/// `ψ = H_v^{-1}(ν φ + g)` with `H_v = -dΔ_h + ν + σ_v`, and
/// `(-Δ_h + ν + σ_u - ν² H_v^{-1}) φ = f + ν H_v^{-1} g` by unpreconditioned
/// matrix-free CG.
pub fn block_solve(op: &BlockOp, f: &Field, g: &Field) -> Result<(Field, Field)> {
    let grid = op.grid;
    grid.check(&f.grid())?;
    grid.check(&g.grid())?;
    let n = grid.n();
    let nu = op.nu;
    let hv = HelmholtzOp::new(grid, op.d, op.nu + op.shift_v)?;

    let mut hv_g = g.values().to_vec();
    hv.solve_in_place(&mut hv_g);
    let b: Vec<f64> = f.values().iter().zip(&hv_g).map(|(fi, hi)| fi + nu * hi).collect();

    let mut scratch = vec![0.0; n];
    let mut schur = |x: &[f64], out: &mut [f64]| {
        neg_laplacian_into(grid.h(), x, out);
        scratch.copy_from_slice(x);
        hv.solve_in_place(&mut scratch);
        for i in 0..n {
            out[i] += (nu + op.shift_u) * x[i] - nu * nu * scratch[i];
        }
    };

    let mut x = vec![0.0; n];
    let b_norm = dot(&b, &b).sqrt();
    if b_norm > 0.0 {
        let mut r = b.clone();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr = dot(&r, &r);
        let target = CG_REL_TOL * b_norm;
        let max_iter = 10 * n;
        let mut converged = false;
        for _ in 0..max_iter {
            schur(&p, &mut ap);
            let alpha = rr / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new = dot(&r, &r);
            if rr_new.sqrt() <= target {
                converged = true;
                break;
            }
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        if !converged {
            return Err(Error::NumericalFailure(format!(
                "Schur-complement CG did not converge in {max_iter} iterations"
            )));
        }
    }

    let mut psi: Vec<f64> = x.iter().zip(g.values()).map(|(xi, gi)| nu * xi + gi).collect();
    hv.solve_in_place(&mut psi);
    let phi = Field::from_values(grid, x)?;
    let psi = Field::from_values(grid, psi)?;

    let rel = block_residual(op, &phi, &psi, f, g)?;
    if rel > BLOCK_REL_RESIDUAL {
        return Err(Error::NumericalFailure(format!(
            "block solve relative residual {rel:e} exceeds {BLOCK_REL_RESIDUAL:e}"
        )));
    }
    Ok((phi, psi))
}

/// Symmetric positive definite banded matrix factored as `LDLᵀ`.
#[derive(Debug, Clone)]
pub struct BandedLdl {
    bandwidth: usize,
    // lower[i * (p + 1) + k] = L(i, i - k) for k in 1..=p; slot k = 0 holds D(i).
    lower: Vec<f64>,
}

impl BandedLdl {
    /// Factors the matrix whose lower band is given by `entry(i, k) = A(i, i - k)`.
    pub fn factor(
        size: usize,
        bandwidth: usize,
        entry: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let w = bandwidth + 1;
        let mut lower = vec![0.0; size * w];
        for i in 0..size {
            for k in 1..=bandwidth.min(i) {
                lower[i * w + k] = entry(i, k);
            }
            lower[i * w] = entry(i, 0);
        }
        for j in 0..size {
            let mut dj = lower[j * w];
            for k in 1..=bandwidth.min(j) {
                let l = lower[j * w + k];
                dj -= l * l * lower[(j - k) * w];
            }
            if !(dj > 0.0 && dj.is_finite()) {
                return Err(Error::NumericalFailure(format!(
                    "banded matrix is not positive definite (pivot {dj:e} at row {j})"
                )));
            }
            lower[j * w] = dj;
            for i in (j + 1)..size.min(j + bandwidth + 1) {
                // L(i, j) = (A(i, j) - Σ_k L(i, k) L(j, k) D(k)) / D(j)
                let mut s = lower[i * w + (i - j)];
                for k in i.saturating_sub(bandwidth)..j {
                    s -= lower[i * w + (i - k)] * lower[j * w + (j - k)] * lower[k * w];
                }
                lower[i * w + (i - j)] = s / dj;
            }
        }
        Ok(Self { bandwidth, lower })
    }

    pub fn size(&self) -> usize {
        self.lower.len() / (self.bandwidth + 1)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let w = self.bandwidth + 1;
        let n = x.len();
        for i in 0..n {
            let mut s = x[i];
            for k in 1..=self.bandwidth.min(i) {
                s -= self.lower[i * w + k] * x[i - k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.lower[i * w];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in 1..=self.bandwidth.min(n - 1 - i) {
                s -= self.lower[(i + k) * w + k] * x[i + k];
            }
            x[i] = s;
        }
    }
}

/// Factored block operator, possibly with nodewise diagonal shifts.
#[derive(Debug, Clone)]
pub struct BlockFactor {
    grid: Grid,
    ldl: BandedLdl,
    buf: Vec<f64>,
}

impl BlockFactor {
    /// Factors `[[-Δ_h + ν + diag_u, -ν], [-ν, -dΔ_h + ν + diag_v]]`.
    pub(crate) fn assemble(
        grid: Grid,
        nu: f64,
        d: f64,
        diag_u: &[f64],
        diag_v: &[f64],
    ) -> Result<Self> {
        let n = grid.n();
        let inv_h2 = 1.0 / (grid.h() * grid.h());
        let entry = |row: usize, k: usize| -> f64 {
            let node = row / 2;
            let is_v = row % 2 == 1;
            match (k, is_v) {
                (0, false) => 2.0 * inv_h2 + nu + diag_u[node],
                (0, true) => 2.0 * d * inv_h2 + nu + diag_v[node],
                // ψ_i against φ_i
                (1, true) => -nu,
                // φ_i against ψ_{i-1}
                (1, false) => 0.0,
                (2, false) => -inv_h2,
                (2, true) => -d * inv_h2,
                _ => 0.0,
            }
        };
        let ldl = BandedLdl::factor(2 * n, 2, entry)?;
        Ok(Self {
            grid,
            ldl,
            buf: vec![0.0; 2 * n],
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn solve(&mut self, f: &Field, g: &Field) -> Result<(Field, Field)> {
        self.grid.check(&f.grid())?;
        self.grid.check(&g.grid())?;
        let mut phi = Field::zeros(self.grid);
        let mut psi = Field::zeros(self.grid);
        self.solve_into(f.values(), g.values(), phi.values_mut(), psi.values_mut());
        Ok((phi, psi))
    }

    pub(crate) fn solve_into(&mut self, f: &[f64], g: &[f64], phi: &mut [f64], psi: &mut [f64]) {
        for i in 0..f.len() {
            self.buf[2 * i] = f[i];
            self.buf[2 * i + 1] = g[i];
        }
        self.ldl.solve_in_place(&mut self.buf);
        for i in 0..f.len() {
            phi[i] = self.buf[2 * i];
            psi[i] = self.buf[2 * i + 1];
        }
    }
}

const EIGEN_TOL: f64 = 1e-12;
const EIGEN_MAX_ITER: usize = 10_000;

/// Inverse power iteration for an operator whose inverse is positive.
///
/// `solve` applies the inverse in place. Returns the eigenvalue of the
/// inverse's dominant mode, `1 / μ`, and the positive eigenvector scaled to
/// unit (unweighted) 1-norm. The stopping estimate is the 1-norm ratio, which
/// converges at the same linear rate as the vector itself.
pub(crate) fn positive_inverse_iteration(
    size: usize,
    mut solve: impl FnMut(&mut [f64]),
) -> Result<(f64, Vec<f64>)> {
    let mut x = vec![1.0 / size as f64; size];
    let mut prev = f64::INFINITY;
    for _ in 0..EIGEN_MAX_ITER {
        let mut y = x.clone();
        solve(&mut y);
        let norm: f64 = y.iter().map(|v| v.abs()).sum();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NumericalFailure(
                "inverse iteration produced a degenerate iterate".into(),
            ));
        }
        // ‖x‖₁ = 1, so 1/norm estimates μ.
        let estimate = 1.0 / norm;
        for v in y.iter_mut() {
            *v /= norm;
        }
        x = y;
        if (estimate - prev).abs() < EIGEN_TOL * estimate.abs().max(1.0) {
            return Ok((estimate, x));
        }
        prev = estimate;
    }
    Err(Error::NumericalFailure(format!(
        "inverse power iteration did not converge in {EIGEN_MAX_ITER} iterations"
    )))
}

/// Smallest eigenvalue of `-Δ_h` and its positive eigenvector, normalized to
/// unit h-weighted 1-norm.
pub fn principal_eigenpair(grid: Grid) -> Result<(f64, Field)> {
    let op = HelmholtzOp::new(grid, 1.0, 0.0)?;
    let (_, x) = positive_inverse_iteration(grid.n(), |v| op.solve_in_place(v))?;
    let mut phi = Field::from_values(grid, x)?;
    let l1 = phi.l1_norm();
    for v in phi.values_mut() {
        *v = v.abs() / l1;
    }
    let lap = op.apply(&phi)?;
    let mu = lap.dot(&phi) / phi.dot(&phi);
    Ok((mu, phi))
}
