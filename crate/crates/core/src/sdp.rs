//! First-order solver for real semidefinite programs in standard form
//!
//! ```text
//! minimize    c^T x
//! subject to  A x = b,   x ∈ K = S₊^{n₁} × … × S₊^{n_p} × R₊^q
//! ```
//!
//! PSD blocks are stored in `svec` form (lower triangle, column-major, with
//! off-diagonals scaled by √2) so the Euclidean inner product equals the
//! trace inner product and `K` is self-dual.
//!
//! The iteration is ADMM on the splitting `x ∈ {Ax = b}`, `z ∈ K`, `x = z`,
//! with over-relaxation and residual-balancing penalty updates. The affine
//! step reuses a single Cholesky factorization of `A A^T`. The data are
//! equilibrated (Ruiz row/column scaling, one column factor per PSD block)
//! before iterating, and the fixed-point map is sped up by safeguarded
//! Anderson acceleration. All reported residuals refer to the original data.
//!
//! Termination:
//! - `Optimal` when the relative primal residual `‖Az − b‖ / (1 + ‖b‖)` and
//!   dual residual `‖c − A^T y − s‖ / (1 + ‖c‖)` are below `eps_residual`
//!   and the relative duality gap is below `eps_gap`. The returned `x` is
//!   always exactly in `K` and `s ∈ K` with `s ⟂ x`.
//! - `Infeasible` when the successive difference of the scaled dual
//!   iterate, or the dual iterate itself, yields a Farkas certificate: `y` with `b^T y = −1` and
//!   `dist(A^T y, K) · ‖b‖ ≤ eps_infeasible` (no feasible point has norm
//!   below `‖b‖ / eps_infeasible`).

use std::io::Write;

use nalgebra::{DMatrix, DVector};

/// Conic program data. Variables are laid out as the `svec` of every PSD
/// block in order, followed by the nonnegative variables.
#[derive(Debug, Clone)]
pub struct ConeProgram {
    pub psd_blocks: Vec<usize>,
    pub n_nonneg: usize,
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct SdpSettings {
    pub max_iterations: usize,
    pub eps_residual: f64,
    pub eps_gap: f64,
    pub eps_infeasible: f64,
    /// Over-relaxation factor in `(0, 2)`.
    pub relaxation: f64,
    pub rho: f64,
    pub adaptive_rho: bool,
    pub check_interval: usize,
    /// Anderson acceleration memory; 0 runs plain ADMM.
    pub anderson_memory: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        SdpSettings {
            max_iterations: 50_000,
            eps_residual: 1e-7,
            eps_gap: 1e-6,
            eps_infeasible: 1e-6,
            relaxation: 1.6,
            rho: 1.0,
            adaptive_rho: true,
            check_interval: 10,
            anderson_memory: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Primal point, always inside `K`.
    pub x: DVector<f64>,
    /// Equality multipliers.
    pub y: DVector<f64>,
    /// Dual slack, always inside `K`.
    pub s: DVector<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
}

pub fn svec_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Packs the lower triangle of a symmetric matrix.
pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(svec_dim(n));
    for j in 0..n {
        out.push(m[(j, j)]);
        for i in j + 1..n {
            out.push(std::f64::consts::SQRT_2 * m[(i, j)]);
        }
    }
    out
}

pub fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut idx = 0;
    for j in 0..n {
        m[(j, j)] = v[idx];
        idx += 1;
        for i in j + 1..n {
            let x = v[idx] * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            idx += 1;
        }
    }
    m
}

impl ConeProgram {
    pub fn n_vars(&self) -> usize {
        self.psd_blocks.iter().map(|&n| svec_dim(n)).sum::<usize>() + self.n_nonneg
    }

    pub fn n_constraints(&self) -> usize {
        self.a.nrows()
    }

    /// Offset of each PSD block inside the variable vector.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.psd_blocks
            .iter()
            .map(|&n| {
                let o = off;
                off += svec_dim(n);
                o
            })
            .collect()
    }

    fn check_shapes(&self) {
        let n = self.n_vars();
        assert_eq!(self.c.len(), n, "cost length");
        assert_eq!(self.a.ncols(), n, "constraint matrix columns");
        assert_eq!(self.a.nrows(), self.b.len(), "rhs length");
    }

    /// Euclidean projection onto `K`, in place.
    pub fn project_cone(&self, v: &mut DVector<f64>) {
        let mut off = 0;
        for &n in &self.psd_blocks {
            let d = svec_dim(n);
            let slice = &mut v.as_mut_slice()[off..off + d];
            project_psd(slice, n);
            off += d;
        }
        for x in v.as_mut_slice()[off..].iter_mut() {
            *x = x.max(0.0);
        }
    }

    fn cone_distance(&self, v: &DVector<f64>) -> f64 {
        let mut p = v.clone();
        self.project_cone(&mut p);
        (v - p).norm()
    }
}

fn project_psd(slice: &mut [f64], n: usize) {
    if n == 1 {
        slice[0] = slice[0].max(0.0);
        return;
    }
    let m = smat(slice, n);
    let eig = m.symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return;
    }
    let mut out = DMatrix::<f64>::zeros(n, n);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 0.0 {
            let v = eig.eigenvectors.column(k);
            out.ger(l, &v, &v, 1.0);
        }
    }
    slice.copy_from_slice(&svec(&out));
}

pub fn solve(problem: &ConeProgram, settings: &SdpSettings) -> SdpSolution {
    solve_inner(problem, settings, None)
}

/// Like [`solve`], streaming `iter,primal_res,dual_res,objective` lines at
/// every convergence check.
pub fn solve_logged(problem: &ConeProgram, settings: &SdpSettings, log: &mut dyn Write) -> SdpSolution {
    solve_inner(problem, settings, Some(log))
}

fn solve_inner(problem: &ConeProgram, settings: &SdpSettings, mut log: Option<&mut dyn Write>) -> SdpSolution {
    problem.check_shapes();
    let n = problem.n_vars();
    let m = problem.n_constraints();

    let (row_scale, col_scale) = equilibrate(problem);
    let mut a_hat = problem.a.clone();
    for i in 0..m {
        a_hat.row_mut(i).scale_mut(row_scale[i]);
    }
    for j in 0..n {
        a_hat.column_mut(j).scale_mut(col_scale[j]);
    }
    let mut b_hat = DVector::from_fn(m, |i, _| problem.b[i] * row_scale[i]);
    let dc = DVector::from_fn(n, |j, _| problem.c[j] * col_scale[j]);
    let c_scale = {
        let cn = dc.amax();
        if cn > 0.0 {
            cn
        } else {
            1.0
        }
    };
    let c_hat = dc / c_scale;
    // Primal scaling x = τ x̂ so the scaled right-hand side is O(1).
    let tau = {
        let bmax = b_hat.amax();
        if bmax > 0.0 {
            bmax
        } else {
            1.0
        }
    };
    b_hat /= tau;
    let a_hat_t = a_hat.transpose();

    let gram = &a_hat * &a_hat_t;
    let chol = match gram.clone().cholesky() {
        Some(c) => c,
        None => {
            let reg = gram + DMatrix::identity(m, m) * 1e-12;
            reg.cholesky().expect("regularized Gram matrix must be positive definite")
        }
    };

    let b_norm = problem.b.norm();
    let c_norm = problem.c.norm();
    let b_hat_norm = b_hat.norm().max(f64::MIN_POSITIVE);
    let c_hat_norm = c_hat.norm();

    let mut rho = settings.rho;
    let alpha = settings.relaxation;
    let mut z = DVector::<f64>::zeros(n);
    let mut u = DVector::<f64>::zeros(n);

    let mut result = SdpSolution {
        status: SdpStatus::MaxIterations,
        x: z.clone(),
        y: DVector::zeros(m),
        s: DVector::zeros(n),
        objective: 0.0,
        dual_objective: 0.0,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        gap: f64::INFINITY,
        iterations: 0,
    };

    let check = settings.check_interval.max(1);
    let infeas_interval = check * 5;
    let adapt_interval = check * 10;
    let mut accel = Anderson::new(settings.anderson_memory);

    for iter in 1..=settings.max_iterations {
        // affine step
        let w = &z - &u - &c_hat / rho;
        let rhs = &a_hat * &w - &b_hat;
        let nu = chol.solve(&rhs);
        let x = &w - &a_hat_t * &nu;

        // cone step
        let x_relaxed = &x * alpha + &z * (1.0 - alpha);
        let mut z_new = &x_relaxed + &u;
        problem.project_cone(&mut z_new);
        let u_new = &u + &x_relaxed - &z_new;

        let at_check = iter % check == 0 || iter == settings.max_iterations;
        if at_check {
            // Unscaled primal/dual pair.
            let y_hat = &nu * (-rho);
            let x_orig = DVector::from_fn(n, |j, _| z_new[j] * col_scale[j] * tau);
            let y = DVector::from_fn(m, |i, _| c_scale * row_scale[i] * y_hat[i]);
            let s = DVector::from_fn(n, |j, _| -rho * c_scale * u_new[j] / col_scale[j]);
            let primal = &problem.a * &x_orig - &problem.b;
            let dual = &problem.c - problem.a.tr_mul(&y) - &s;
            let pobj = problem.c.dot(&x_orig);
            let dobj = problem.b.dot(&y);
            let r_p = primal.norm() / (1.0 + b_norm);
            let r_d = dual.norm() / (1.0 + c_norm);
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());

            if let Some(out) = log.as_deref_mut() {
                let _ = writeln!(out, "{iter},{r_p:e},{r_d:e},{pobj:e}");
            }

            result.x = x_orig;
            result.y = y;
            result.s = s;
            result.objective = pobj;
            result.dual_objective = dobj;
            result.primal_residual = r_p;
            result.dual_residual = r_d;
            result.gap = gap;
            result.iterations = iter;

            if r_p <= settings.eps_residual && r_d <= settings.eps_residual && gap <= settings.eps_gap {
                result.status = SdpStatus::Optimal;
                return result;
            }

            if iter % infeas_interval == 0 {
                let delta = &u_new - &u;
                let from_delta = delta.norm() > 0.0 && {
                    let w = chol.solve(&(&a_hat * &delta));
                    certifies_infeasibility(problem, &a_hat, &b_hat, &w, b_hat_norm, settings)
                };
                // a diverging dual iterate points along the certificate too
                if from_delta || certifies_infeasibility(problem, &a_hat, &b_hat, &y_hat, b_hat_norm, settings) {
                    result.status = SdpStatus::Infeasible;
                    return result;
                }
            }

            if settings.adaptive_rho && iter % adapt_interval == 0 {
                // normalized residuals of the scaled problem
                let ax = &a_hat * &z_new;
                let prim = (&ax - &b_hat).norm() / ax.norm().max(b_hat_norm).max(1e-300);
                let aty = &a_hat_t * &y_hat;
                let s_hat = &u_new * (-rho);
                let dual_vec = &c_hat - &aty - &s_hat;
                let dual_scale = c_hat_norm.max(aty.norm()).max(s_hat.norm()).max(1e-300);
                let dual = dual_vec.norm() / dual_scale;
                if prim > 0.0 && dual > 0.0 {
                    let ratio = prim / dual;
                    if !(0.2..=5.0).contains(&ratio) {
                        let new_rho = (rho * ratio.sqrt()).clamp(1e-6, 1e6);
                        u = &u_new * (rho / new_rho);
                        rho = new_rho;
                        z = z_new;
                        accel.reset();
                        continue;
                    }
                }
            }
        }

        let (z_next, u_next) = accel.step(z, u, z_new, u_new);
        z = z_next;
        u = u_next;
    }
    result
}

/// Safeguarded type-II Anderson acceleration of the ADMM map on the stacked
/// state `(z, u)`. An extrapolated point is kept only if the fixed-point
/// residual at the next step does not grow; otherwise the plain iterate is
/// restored and the memory cleared.
struct Anderson {
    memory: usize,
    ds: Vec<DVector<f64>>,
    dg: Vec<DVector<f64>>,
    last: Option<(DVector<f64>, DVector<f64>)>,
    /// Plain iterate and residual norm behind the last extrapolation.
    pending: Option<(DVector<f64>, f64)>,
}

impl Anderson {
    fn new(memory: usize) -> Self {
        Anderson {
            memory,
            ds: Vec::new(),
            dg: Vec::new(),
            last: None,
            pending: None,
        }
    }

    fn reset(&mut self) {
        self.ds.clear();
        self.dg.clear();
        self.last = None;
        self.pending = None;
    }

    fn split(v: DVector<f64>, n: usize) -> (DVector<f64>, DVector<f64>) {
        (v.rows(0, n).into_owned(), v.rows(n, n).into_owned())
    }

    fn step(
        &mut self,
        z: DVector<f64>,
        u: DVector<f64>,
        z_new: DVector<f64>,
        u_new: DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        if self.memory == 0 {
            return (z_new, u_new);
        }
        let n = z.len();
        let state = DVector::from_iterator(2 * n, z.iter().chain(u.iter()).copied());
        let image = DVector::from_iterator(2 * n, z_new.iter().chain(u_new.iter()).copied());
        let g = &image - &state;
        let g_norm = g.norm();

        if let Some((plain, prev_norm)) = self.pending.take() {
            if !(g_norm <= prev_norm) {
                self.reset();
                return Self::split(plain, n);
            }
        }

        if let Some((s_prev, g_prev)) = self.last.take() {
            self.ds.push(&state - s_prev);
            self.dg.push(&g - g_prev);
            if self.ds.len() > self.memory {
                self.ds.remove(0);
                self.dg.remove(0);
            }
        }
        self.last = Some((state, g.clone()));

        let k = self.dg.len();
        if k == 0 {
            return Self::split(image, n);
        }
        // min ‖g − ΔG γ‖ by regularized normal equations
        let mut gram = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        for i in 0..k {
            rhs[i] = self.dg[i].dot(&g);
            for j in 0..=i {
                let v = self.dg[i].dot(&self.dg[j]);
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        let scale = (0..k).map(|i| gram[(i, i)]).fold(0.0, f64::max);
        if !(scale > 0.0) {
            return Self::split(image, n);
        }
        for i in 0..k {
            gram[(i, i)] += 1e-10 * scale;
        }
        let Some(gamma) = gram.cholesky().map(|c| c.solve(&rhs)) else {
            return Self::split(image, n);
        };
        if !gamma.iter().all(|v| v.is_finite()) || gamma.amax() > 1e8 {
            self.reset();
            return Self::split(image, n);
        }
        let mut extrapolated = image.clone();
        for i in 0..k {
            extrapolated -= (&self.ds[i] + &self.dg[i]) * gamma[i];
        }
        self.pending = Some((image, g_norm));
        Self::split(extrapolated, n)
    }
}

/// Ruiz equilibration: row factors `E` and column factors `D` such that the
/// rows and columns of `E A D` have roughly unit infinity norm. Columns of a
/// PSD block share one factor so `D` maps the cone onto itself.
fn equilibrate(problem: &ConeProgram) -> (Vec<f64>, Vec<f64>) {
    let m = problem.a.nrows();
    let n = problem.a.ncols();
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut off = 0;
    for &b in &problem.psd_blocks {
        groups.push((off, off + svec_dim(b)));
        off += svec_dim(b);
    }
    for j in off..n {
        groups.push((j, j + 1));
    }

    let mut e = vec![1.0; m];
    let mut d = vec![1.0; n];
    let mut work = problem.a.clone();
    for _ in 0..25 {
        let mut done = true;
        for i in 0..m {
            let r = work.row(i).amax();
            if r > 0.0 {
                let f = 1.0 / r.sqrt();
                done &= (r - 1.0).abs() < 1e-3;
                e[i] *= f;
                work.row_mut(i).scale_mut(f);
            }
        }
        for &(lo, hi) in &groups {
            let r = work.columns(lo, hi - lo).amax();
            if r > 0.0 {
                let f = 1.0 / r.sqrt();
                done &= (r - 1.0).abs() < 1e-3;
                for j in lo..hi {
                    d[j] *= f;
                    work.column_mut(j).scale_mut(f);
                }
            }
        }
        if done {
            break;
        }
    }
    // Final row normalization keeps the Gram matrix well conditioned.
    for i in 0..m {
        let r = work.row(i).norm();
        if r > 0.0 {
            e[i] /= r;
        }
    }
    (e, d)
}

/// Tests whether the direction `delta` (successive difference of the scaled
/// dual iterate) yields a Farkas certificate for the scaled problem.
fn certifies_infeasibility(
    problem: &ConeProgram,
    a_hat: &DMatrix<f64>,
    b_hat: &DVector<f64>,
    w: &DVector<f64>,
    b_hat_norm: f64,
    settings: &SdpSettings,
) -> bool {
    // the certificate is y = −w, scaled so that b^T y = −1
    let by = -b_hat.dot(w);
    if !(by < 0.0) {
        return false;
    }
    let y = w * (1.0 / by);
    let aty = a_hat.tr_mul(&y);
    problem.cone_distance(&aty) * b_hat_norm <= settings.eps_infeasible
}
