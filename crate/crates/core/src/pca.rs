//! Gotay's presymplectic constraint algorithm on finite-dimensional systems,
//! Gauss-Newton projection onto the Palatini constraint set, and the
//! Lagrange-multiplier criticality check.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::algebra::LieAlgebraSpec;
use crate::dynamics::{boundary_hamiltonian, extended_action, hamiltonian_gradient, palatini_bulk, palatini_residuals};
use crate::error::{Error, Result};
use crate::fields::{BoundaryState, Block, BulkField, VierbeinField};
use crate::lattice::LatticeField;
use crate::linalg;
use crate::mesh::CollarMesh;

/// Relative singular-value threshold for every rank decision.
pub const RANK_TOL: f64 = 1e-8;
/// Step for finite-difference Jacobians of constraint functions.
pub const CONSTRAINT_FD_STEP: f64 = 1e-4;

/// A finite-dimensional presymplectic system `(R^n, Omega, H)`.
pub trait PresymplecticSystem {
    fn dim(&self) -> usize;
    fn omega(&self, x: &[f64]) -> DMatrix<f64>;
    fn hamiltonian(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        let mut y = x.to_vec();
        (0..x.len())
            .map(|i| {
                y[i] = x[i] + h;
                let hp = self.hamiltonian(&y);
                y[i] = x[i] - h;
                let hm = self.hamiltonian(&y);
                y[i] = x[i];
                (hp - hm) / (2.0 * h)
            })
            .collect()
    }
}

/// Constant form with a Hamiltonian and gradient given as plain functions.
#[derive(Clone)]
pub struct ModelSystem {
    pub omega: DMatrix<f64>,
    pub h: fn(&[f64]) -> f64,
    pub grad: fn(&[f64]) -> Vec<f64>,
}

impl PresymplecticSystem for ModelSystem {
    fn dim(&self) -> usize {
        self.omega.nrows()
    }
    fn omega(&self, _x: &[f64]) -> DMatrix<f64> {
        self.omega.clone()
    }
    fn hamiltonian(&self, x: &[f64]) -> f64 {
        (self.h)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }
}

/// `dq ^ dp` on coordinates `(q, p, extra...)`.
fn canonical_plus_kernel(extra: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 + extra, 2 + extra);
    w[(0, 1)] = 1.0;
    w[(1, 0)] = -1.0;
    w
}

/// Free particle `H = p^2 / 2` on `(q, p)`.
pub fn free_particle() -> ModelSystem {
    ModelSystem { omega: canonical_plus_kernel(0), h: |x| 0.5 * x[1] * x[1], grad: |x| vec![0.0, x[1]] }
}

/// `H = p^2/2 + beta^2/2 + beta q` on `(q, p, beta)` with `Omega = dq ^ dp`.
pub fn regular_model() -> ModelSystem {
    ModelSystem {
        omega: canonical_plus_kernel(1),
        h: |x| 0.5 * x[1] * x[1] + 0.5 * x[2] * x[2] + x[2] * x[0],
        grad: |x| vec![x[2], x[1], x[2] + x[0]],
    }
}

/// `H = p^2/2 + beta q` on `(q, p, beta)`: `q = 0`, then `p = 0`.
pub fn two_level_model() -> ModelSystem {
    ModelSystem {
        omega: canonical_plus_kernel(1),
        h: |x| 0.5 * x[1] * x[1] + x[2] * x[0],
        grad: |x| vec![x[2], x[1], x[0]],
    }
}

/// Orthonormal basis of `ker Omega` (singular values below `tol * sigma_max`).
pub fn kernel(omega: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    linalg::null_space(omega, tol)
}

/// Constraints produced level by level: level `l` holds reference kernel
/// vectors `z`, and its functions are `c(y) = <P_{K(y)} z, dH(y)>` with
/// `K(y)` the kernel of `Omega` restricted to the tangent space of the
/// previous level at `y`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSet {
    pub levels: Vec<Vec<Vec<f64>>>,
}

impl ConstraintSet {
    pub fn count(&self) -> usize {
        self.levels.iter().map(|l| l.len()).sum()
    }

    /// Values of all constraints of the first `upto` levels.
    pub fn values_upto<S: PresymplecticSystem + ?Sized>(&self, sys: &S, upto: usize, y: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        for l in 0..upto.min(self.levels.len()) {
            if self.levels[l].is_empty() {
                continue;
            }
            let k = self.restricted_kernel(sys, l, y);
            let dh = DVector::from_column_slice(&sys.gradient(y));
            for z in &self.levels[l] {
                let zv = DVector::from_column_slice(z);
                let pz = &k * (k.transpose() * zv);
                out.push(pz.dot(&dh));
            }
        }
        out
    }

    pub fn values<S: PresymplecticSystem + ?Sized>(&self, sys: &S, y: &[f64]) -> Vec<f64> {
        self.values_upto(sys, self.levels.len(), y)
    }

    /// Central-difference Jacobian of the first `upto` levels.
    pub fn jacobian_upto<S: PresymplecticSystem + ?Sized>(&self, sys: &S, upto: usize, y: &[f64]) -> DMatrix<f64> {
        let n = y.len();
        let rows = self.levels.iter().take(upto).map(|l| l.len()).sum();
        let mut jac = DMatrix::zeros(rows, n);
        if rows == 0 {
            return jac;
        }
        let h = CONSTRAINT_FD_STEP;
        let mut yy = y.to_vec();
        for i in 0..n {
            yy[i] = y[i] + h;
            let cp = self.values_upto(sys, upto, &yy);
            yy[i] = y[i] - h;
            let cm = self.values_upto(sys, upto, &yy);
            yy[i] = y[i];
            for r in 0..rows {
                jac[(r, i)] = (cp[r] - cm[r]) / (2.0 * h);
            }
        }
        jac
    }

    /// Orthonormal basis of the tangent space of level `upto` at `y`.
    pub fn tangent<S: PresymplecticSystem + ?Sized>(&self, sys: &S, upto: usize, y: &[f64]) -> DMatrix<f64> {
        let jac = self.jacobian_upto(sys, upto, y);
        if jac.nrows() == 0 {
            DMatrix::identity(y.len(), y.len())
        } else {
            linalg::null_space(&jac, RANK_TOL)
        }
    }

    /// Kernel of `Omega` restricted to the tangent space of level `upto`.
    pub fn restricted_kernel<S: PresymplecticSystem + ?Sized>(&self, sys: &S, upto: usize, y: &[f64]) -> DMatrix<f64> {
        let t = self.tangent(sys, upto, y);
        if t.ncols() == 0 {
            return t;
        }
        let w = sys.omega(y);
        let restricted = t.transpose() * &w * &t;
        let c = linalg::null_space(&restricted, RANK_TOL);
        if c.ncols() == 0 {
            return DMatrix::zeros(y.len(), 0);
        }
        t * c
    }

    fn rank_upto<S: PresymplecticSystem + ?Sized>(&self, sys: &S, upto: usize, y: &[f64]) -> usize {
        linalg::rank(&self.jacobian_upto(sys, upto, y), RANK_TOL)
    }
}

/// New constraints proposed at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaStep {
    /// Reference kernel vectors defining the new constraint functions.
    pub kernel: Vec<Vec<f64>>,
    /// Their values at the point.
    pub values: Vec<f64>,
}

/// One step of the algorithm from a point on the current constraint set.
pub fn pca_step<S: PresymplecticSystem + ?Sized>(sys: &S, point: &[f64], current: &ConstraintSet, tol: f64) -> Result<PcaStep> {
    let c = current.values(sys, point);
    let viol = linalg::max_abs(&c);
    if viol > tol {
        return Err(Error::OffConstraint(viol));
    }
    let k = current.restricted_kernel(sys, current.levels.len(), point);
    let dh = DVector::from_column_slice(&sys.gradient(point));
    let kernel: Vec<Vec<f64>> = (0..k.ncols()).map(|i| k.column(i).iter().cloned().collect()).collect();
    let values = (0..k.ncols()).map(|i| k.column(i).dot(&dh)).collect();
    Ok(PcaStep { kernel, values })
}

/// One level of a [`PcaResult`].
#[derive(Debug, Clone, PartialEq)]
pub struct PcaLevel {
    pub dimension: usize,
    pub constraint_count: usize,
    pub kernel_dim: usize,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    /// `M_0, M_1, ...`; when stabilized the final level appears twice.
    pub levels: Vec<PcaLevel>,
    pub stabilized: bool,
    pub final_kernel_dim: usize,
    /// Number of strict reductions `M_k -> M_{k+1}`.
    pub constraint_levels: usize,
    pub constraints: ConstraintSet,
}

/// Minimum-norm Gauss-Newton onto the zero set of the first `upto` levels.
pub fn newton_project<S: PresymplecticSystem + ?Sized>(
    sys: &S,
    set: &ConstraintSet,
    upto: usize,
    x0: &[f64],
    tol: f64,
    level: usize,
) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut c = set.values_upto(sys, upto, &x);
    for _ in 0..50 {
        let r = linalg::norm(&c);
        if r <= tol {
            return Ok(x);
        }
        let jac = set.jacobian_upto(sys, upto, &x);
        let rhs = DVector::from_iterator(c.len(), c.iter().map(|v| -v));
        let dx = linalg::lstsq_min_norm(&jac, &rhs, RANK_TOL);
        let mut t = 1.0;
        let (mut xn, mut cn);
        loop {
            xn = x.iter().zip(dx.iter()).map(|(a, b)| a + t * b).collect::<Vec<_>>();
            cn = set.values_upto(sys, upto, &xn);
            if linalg::norm(&cn) < r || t < 1e-3 {
                break;
            }
            t *= 0.5;
        }
        if !cn.iter().all(|v| v.is_finite()) || linalg::norm(&cn) > 1e8 * (1.0 + r) {
            return Err(Error::NewtonDivergence { level, residual: linalg::norm(&cn) });
        }
        x = xn;
        c = cn;
    }
    let r = linalg::norm(&c);
    if r <= tol {
        Ok(x)
    } else {
        Err(Error::NewtonDivergence { level, residual: r })
    }
}

/// Iterate [`pca_step`] with Newton projection until the constraint set stops shrinking.
pub fn pca_run<S: PresymplecticSystem + ?Sized>(sys: &S, seed: &[f64], max_levels: usize, tol: f64) -> Result<PcaResult> {
    if seed.len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: seed.len() });
    }
    if !seed.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("seed point must be finite"));
    }
    let n = sys.dim();
    let mut set = ConstraintSet::default();
    let mut x = seed.to_vec();
    let mut rank = 0;
    let mut levels = vec![PcaLevel {
        dimension: n,
        constraint_count: 0,
        kernel_dim: set.restricted_kernel(sys, 0, &x).ncols(),
        point: x.clone(),
    }];
    let mut stabilized = false;
    let mut reductions = 0;
    for level in 1..=max_levels {
        let step = pca_step(sys, &x, &set, tol.max(1e-6))?;
        if step.kernel.is_empty() {
            stabilized = true;
            break;
        }
        let mut trial = set.clone();
        trial.levels.push(step.kernel);
        let xn = newton_project(sys, &trial, trial.levels.len(), &x, tol, level)?;
        let new_rank = trial.rank_upto(sys, trial.levels.len(), &xn);
        if new_rank == rank {
            stabilized = true;
            break;
        }
        set = trial;
        x = xn;
        rank = new_rank;
        reductions += 1;
        levels.push(PcaLevel {
            dimension: n - rank,
            constraint_count: set.count(),
            kernel_dim: set.restricted_kernel(sys, set.levels.len(), &x).ncols(),
            point: x.clone(),
        });
    }
    if stabilized {
        let last = levels.last().cloned().expect("at least M0");
        levels.push(last);
    }
    let final_kernel_dim = levels.last().map_or(0, |l| l.kernel_dim);
    Ok(PcaResult { levels, stabilized, final_kernel_dim, constraint_levels: reductions, constraints: set })
}

/// Euclidean gradient in [`BoundaryState::pack`] coordinates from the
/// variational derivatives of [`hamiltonian_gradient`].
pub fn packed_gradient(mesh: &CollarMesh, spec: &LieAlgebraSpec, var: &BoundaryState) -> Vec<f64> {
    let vol = mesh.cell_volume();
    let mut low = var.clone();
    for b in Block::ALL {
        let f = low.field_mut(b);
        if !matches!(b, Block::E | Block::E0) {
            for s in 0..f.sites {
                for c in 0..f.comps {
                    let v = spec.lower(f.at(s, c));
                    f.at_mut(s, c).copy_from_slice(&v);
                }
            }
        }
        f.scale(vol);
    }
    low.pack()
}

/// The boundary Palatini system: `Omega = da ^ dp` on packed coordinates.
pub struct PalatiniSystem<'a> {
    pub mesh: &'a CollarMesh,
    pub spec: &'a LieAlgebraSpec,
    pub template: BoundaryState,
    omega: DMatrix<f64>,
}

impl<'a> PalatiniSystem<'a> {
    pub fn new(mesh: &'a CollarMesh, spec: &'a LieAlgebraSpec, template: BoundaryState) -> Self {
        let n = template.packed_len();
        let ra = template.block_range(Block::A);
        let rp = template.block_range(Block::P);
        let vol = mesh.cell_volume();
        let g = spec.dim;
        let mut omega = DMatrix::zeros(n, n);
        for (ia, ip) in ra.clone().zip(rp.clone()) {
            let (a, b) = ((ia - ra.start) % g, (ip - rp.start) % g);
            let base_a = ia - a;
            let base_p = ip - b;
            for c in 0..g {
                let w = vol * spec.pairing[(a, c)];
                omega[(base_a + a, base_p + c)] = w;
                omega[(base_p + c, base_a + a)] = -w;
            }
        }
        PalatiniSystem { mesh, spec, template, omega }
    }

    pub fn state(&self, x: &[f64]) -> BoundaryState {
        let mut s = self.template.clone();
        s.unpack(x).expect("packed length");
        s
    }
}

impl PresymplecticSystem for PalatiniSystem<'_> {
    fn dim(&self) -> usize {
        self.template.packed_len()
    }
    fn omega(&self, _x: &[f64]) -> DMatrix<f64> {
        self.omega.clone()
    }
    fn hamiltonian(&self, x: &[f64]) -> f64 {
        boundary_hamiltonian(self.mesh, self.spec, &self.state(x)).unwrap_or(f64::NAN)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match hamiltonian_gradient(self.mesh, self.spec, &self.state(x)) {
            Ok(g) => packed_gradient(self.mesh, self.spec, &g),
            Err(_) => vec![f64::NAN; x.len()],
        }
    }
}

/// Step for the finite-difference Jacobian in [`project_constraints`].
pub const PROJECTION_FD_STEP: f64 = 1e-4;

fn residual_vector(mesh: &CollarMesh, spec: &LieAlgebraSpec, tmpl: &BoundaryState, x: &[f64]) -> Result<Vec<f64>> {
    let mut s = tmpl.clone();
    s.unpack(x)?;
    Ok(palatini_residuals(mesh, spec, &s)?.flatten())
}

/// Gauss-Newton projection onto the joint zero set of the six residuals.
///
/// Each iteration first tries a minimum-norm step in the multiplier-type
/// slots `(a0, beta, Lambda, Lambda0, e, e0)` and keeps it if it solves the
/// linearized system; otherwise it takes the minimum-norm step in all
/// slots. Steps are halved while the residual does not decrease.
/// Converged when the largest residual norm is below `tol`.
pub fn project_constraints(mesh: &CollarMesh, spec: &LieAlgebraSpec, st: &BoundaryState, tol: f64, max_iter: usize) -> Result<BoundaryState> {
    let norms = |s: &BoundaryState| -> Result<f64> { Ok(palatini_residuals(mesh, spec, s)?.norms(mesh).max()) };
    let mut cur = st.clone();
    let mut worst = norms(&cur)?;
    if !worst.is_finite() {
        return Err(Error::InvalidArgument("residuals are not finite"));
    }
    if worst < tol {
        return Ok(cur);
    }
    let multiplier_cols: Vec<usize> = [Block::A0, Block::Beta, Block::Lambda, Block::Lambda0, Block::E, Block::E0]
        .iter()
        .flat_map(|&b| cur.block_range(b))
        .collect();
    for _ in 0..max_iter {
        let x = cur.pack();
        let r = residual_vector(mesh, spec, &cur, &x)?;
        let rn = linalg::norm(&r);
        let n = x.len();
        let mut jac = DMatrix::zeros(r.len(), n);
        let mut y = x.clone();
        for i in 0..n {
            y[i] = x[i] + PROJECTION_FD_STEP;
            let rp = residual_vector(mesh, spec, &cur, &y)?;
            y[i] = x[i] - PROJECTION_FD_STEP;
            let rm = residual_vector(mesh, spec, &cur, &y)?;
            y[i] = x[i];
            for k in 0..r.len() {
                jac[(k, i)] = (rp[k] - rm[k]) / (2.0 * PROJECTION_FD_STEP);
            }
        }
        let rhs = DVector::from_iterator(r.len(), r.iter().map(|v| -v));
        let js = DMatrix::from_fn(r.len(), multiplier_cols.len(), |k, c| jac[(k, multiplier_cols[c])]);
        let ds = linalg::lstsq_min_norm(&js, &rhs, RANK_TOL);
        let lin = linalg::norm((&rhs - &js * &ds).as_slice());
        let dx = if lin <= 1e-6 * rn {
            let mut full = DVector::zeros(n);
            for (c, &col) in multiplier_cols.iter().enumerate() {
                full[col] = ds[c];
            }
            full
        } else {
            linalg::lstsq_min_norm(&jac, &rhs, RANK_TOL)
        };
        let mut t = 1.0;
        let mut next;
        loop {
            let xn: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, b)| a + t * b).collect();
            next = cur.clone();
            next.unpack(&xn)?;
            let ok = palatini_residuals(mesh, spec, &next)
                .map(|res| linalg::norm(&res.flatten()) < rn)
                .unwrap_or(false);
            if ok || t < 1.0 / 1024.0 {
                break;
            }
            t *= 0.5;
        }
        cur = next;
        worst = norms(&cur)?;
        if worst < tol {
            return Ok(cur);
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: worst })
}

/// Gradient-block norms of an extended function at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityReport {
    pub blocks: Vec<(&'static str, f64)>,
    pub critical: bool,
    /// Largest entry of the constraint residual at the point.
    pub constraint_residual: f64,
    /// Largest mismatch between the multiplier block and the weighted constraint.
    pub multiplier_identity_gap: f64,
}

fn central_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let fp = f(&y);
            y[i] = x[i] - h;
            let fm = f(&y);
            y[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// `f(x, lambda, e)`.
pub type ExtendedObjective = dyn Fn(&[f64], &[f64], &[f64]) -> f64;
/// `x - Phi(e)`.
pub type ConstraintGap = dyn Fn(&[f64], &[f64]) -> Vec<f64>;

/// Finite-difference gradient blocks of `F(x) + <lambda, x - Phi(e)>`-type
/// functions `f(x, lambda, e)`. `phi_gap(x, e)` returns the constraint
/// residual so the multiplier block can be compared against it.
pub fn lagrange_criticality_check(
    f: &ExtendedObjective,
    phi_gap: &ConstraintGap,
    x: &[f64],
    lambda: &[f64],
    e: &[f64],
    tol: f64,
) -> CriticalityReport {
    let h = 1e-6;
    let gx = central_gradient(&|v| f(v, lambda, e), x, h);
    let gl = central_gradient(&|v| f(x, v, e), lambda, h);
    let ge = central_gradient(&|v| f(x, lambda, v), e, h);
    let gap = phi_gap(x, e);
    let identity = gl.iter().zip(gap.iter()).fold(0.0f64, |a, (u, v)| a.max(libm::fabs(u - v)));
    let blocks = vec![("x", linalg::norm(&gx)), ("lambda", linalg::norm(&gl)), ("e", linalg::norm(&ge))];
    let critical = blocks.iter().all(|(_, v)| *v < tol);
    CriticalityReport { blocks, critical, constraint_residual: linalg::max_abs(&gap), multiplier_identity_gap: identity }
}

/// Criticality of the extended Palatini action in `(A, P, Lambda, e)`.
///
/// The `A` block excludes the two end slices of the collar, where the
/// action carries its boundary terms. The `Lambda` block is taken with
/// unit forward differences, which are exact since the action is affine
/// in `Lambda`, and compared against `dt * vol * G (P - P(e))`.
pub fn palatini_criticality_check(
    mesh: &CollarMesh,
    spec: &LieAlgebraSpec,
    chi: &BulkField,
    multipliers: &[LatticeField],
    frames: &[VierbeinField],
    tol: f64,
) -> Result<CriticalityReport> {
    let nt = mesh.n_t;
    if multipliers.len() != nt || frames.len() != nt {
        return Err(Error::MeshMismatch);
    }
    let m = chi.m;
    let h = 1e-6;
    let action = |c: &BulkField, l: &[LatticeField], fr: &[VierbeinField]| -> f64 {
        extended_action(mesh, spec, c, l, fr).map(|v| v.total).unwrap_or(f64::NAN)
    };

    // A block on interior slices
    let mut ga = 0.0;
    for j in 1..nt.saturating_sub(1) {
        for i in 0..chi.a[j].data.len() {
            let mut c = chi.clone();
            c.a[j].data[i] += h;
            let fp = action(&c, multipliers, frames);
            c.a[j].data[i] -= 2.0 * h;
            let fm = action(&c, multipliers, frames);
            let g = (fp - fm) / (2.0 * h);
            ga += g * g;
        }
    }
    // P block on independent entries
    let x = chi.pack();
    let gp_full = central_gradient(
        &|v| {
            let mut c = chi.clone();
            c.unpack(v).expect("packed length");
            action(&c, multipliers, frames)
        },
        &x,
        h,
    );
    let per_slice = chi.packed_len() / nt;
    let na = chi.a[0].data.len();
    let mut gp = 0.0;
    for j in 0..nt {
        for v in &gp_full[j * per_slice + na..(j + 1) * per_slice] {
            gp += v * v;
        }
    }
    // Lambda block, exact for an affine dependence
    let pe = palatini_bulk(frames)?;
    let base = action(chi, multipliers, frames);
    let w = mesh.dt * mesh.cell_volume();
    let mut gl = 0.0;
    let mut identity = 0.0f64;
    let mut constraint = 0.0f64;
    for j in 0..nt {
        for s in 0..mesh.n_sites() {
            for mu in 0..m {
                for nu in (mu + 1)..m {
                    let comp = mu * m + nu;
                    let r: Vec<f64> = chi.p[j].at(s, comp).iter().zip(pe[j].at(s, comp)).map(|(a, b)| a - b).collect();
                    let rl = spec.lower(&r);
                    if j >= 1 {
                        constraint = constraint.max(linalg::max_abs(&r));
                    }
                    for a in 0..spec.dim {
                        let mut l = multipliers.to_vec();
                        l[j].at_mut(s, comp)[a] += 1.0;
                        let g = action(chi, &l, frames) - base;
                        gl += g * g;
                        let want = if j >= 1 { w * rl[a] } else { 0.0 };
                        identity = identity.max(libm::fabs(g - want));
                    }
                }
            }
        }
    }
    // frame block
    let mut ge = 0.0;
    for j in 0..nt {
        for i in 0..frames[j].data.len() {
            let mut fr = frames.to_vec();
            fr[j].data[i] += h;
            let fp = action(chi, multipliers, &fr);
            fr[j].data[i] -= 2.0 * h;
            let fm = action(chi, multipliers, &fr);
            let g = (fp - fm) / (2.0 * h);
            ge += g * g;
        }
    }
    let blocks = vec![("A", libm::sqrt(ga)), ("P", libm::sqrt(gp)), ("Lambda", libm::sqrt(gl)), ("e", libm::sqrt(ge))];
    if blocks.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidArgument("extended action not finite at the point"));
    }
    let critical = blocks.iter().all(|(_, v)| *v < tol);
    Ok(CriticalityReport { blocks, critical, constraint_residual: constraint, multiplier_identity_gap: identity })
}

/// Flat-vacuum extension through the collar: `A = 0`, identity frames,
/// `P = P(e)`, `Lambda = 0`.
pub fn flat_vacuum_bulk(mesh: &CollarMesh, spec: &LieAlgebraSpec) -> Result<(BulkField, Vec<LatticeField>, Vec<VierbeinField>)> {
    let m = mesh.d + 1;
    let n = mesh.n_sites();
    let frames = vec![VierbeinField::identity(n, m); mesh.n_t];
    let p = palatini_bulk(&frames)?;
    if p[0].dim != spec.dim {
        return Err(Error::UnsupportedAlgebra(spec.kind.name()));
    }
    let mut chi = BulkField::zeros(mesh, spec);
    chi.p = p;
    let lam = vec![LatticeField::zeros(n, m * m, spec.dim); mesh.n_t];
    Ok((chi, lam, frames))
}
