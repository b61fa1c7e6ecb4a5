//! Gauge transformations, the moment map `J = -d_a^* p` and tangent-level
//! checks of the reduction: Hamiltonian action, coisotropy, isotropy.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::algebra::{AlgebraKind, LieAlgebraSpec, MinkowskiMetric};
use crate::error::{Error, Result};
use crate::fields::{BoundaryState, BulkField};
use crate::lattice::LatticeField;
use crate::linalg;
use crate::mesh::CollarMesh;
use crate::rng::Rng;

/// Per-site group element in the defining representation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeElement {
    pub mats: Vec<DMatrix<f64>>,
    /// Generator with `g = exp(xi)` when known.
    pub generator: Option<LatticeField>,
}

impl GaugeElement {
    pub fn identity(sites: usize, rep_dim: usize) -> Self {
        GaugeElement { mats: vec![DMatrix::identity(rep_dim, rep_dim); sites], generator: None }
    }

    pub fn constant(sites: usize, g: DMatrix<f64>) -> Self {
        GaugeElement { mats: vec![g; sites], generator: None }
    }

    /// `g(x) = exp(xi(x))` site by site.
    pub fn from_generator(spec: &LieAlgebraSpec, xi: &LatticeField) -> Result<Self> {
        if xi.comps != 1 || xi.dim != spec.dim {
            return Err(Error::DimensionMismatch { expected: spec.dim, got: xi.comps * xi.dim });
        }
        let mats = (0..xi.sites).map(|s| linalg::expm(&spec.to_matrix(xi.at(s, 0)))).collect();
        Ok(GaugeElement { mats, generator: Some(xi.clone()) })
    }

    pub fn sites(&self) -> usize {
        self.mats.len()
    }

    /// Site-wise product `self * other`.
    pub fn compose(&self, other: &GaugeElement) -> GaugeElement {
        GaugeElement { mats: self.mats.iter().zip(other.mats.iter()).map(|(a, b)| a * b).collect(), generator: None }
    }

    pub fn is_identity(&self) -> bool {
        self.mats.iter().all(|g| {
            let n = g.nrows();
            (0..n).all(|i| (0..n).all(|j| g[(i, j)] == if i == j { 1.0 } else { 0.0 }))
        })
    }

    /// Largest entry of `g^T eta g - eta` over all sites.
    pub fn lorentz_defect(&self) -> f64 {
        let m = self.mats.first().map_or(0, |g| g.nrows());
        let eta = MinkowskiMetric::new(m).matrix();
        self.mats
            .iter()
            .map(|g| (g.transpose() * &eta * g - &eta).amax())
            .fold(0.0, f64::max)
    }

    fn inverses(&self) -> Result<Vec<DMatrix<f64>>> {
        self.mats
            .iter()
            .map(|g| linalg::inverse(g).ok_or(Error::InvalidArgument("gauge element is not invertible")))
            .collect()
    }
}

/// `Ad_{g^{-1}}` applied to every component of `f`.
fn adjoint_inverse(spec: &LieAlgebraSpec, ginv: &[DMatrix<f64>], g: &[DMatrix<f64>], f: &LatticeField) -> LatticeField {
    let mut out = f.clone();
    for s in 0..f.sites {
        for c in 0..f.comps {
            let x = spec.to_matrix(f.at(s, c));
            let y = &ginv[s] * x * &g[s];
            out.at_mut(s, c).copy_from_slice(&spec.from_matrix(&y));
        }
    }
    out
}

/// `g^{-1} a_k g + g^{-1} partial_k g`, with the inhomogeneous term replaced by
/// `partial_k xi` for abelian generators.
fn transform_connection(
    mesh: &CollarMesh,
    spec: &LieAlgebraSpec,
    gauge: &GaugeElement,
    ginv: &[DMatrix<f64>],
    a: &LatticeField,
    spatial: &[usize],
) -> LatticeField {
    let mut out = adjoint_inverse(spec, ginv, &gauge.mats, a);
    let n = a.sites;
    match (&gauge.generator, spec.is_abelian()) {
        (Some(xi), true) => {
            for (c, &k) in spatial.iter().enumerate() {
                let mut dxi = LatticeField::zeros(n, 1, spec.dim);
                mesh.partial_add(xi, k, 1.0, &mut dxi);
                for s in 0..n {
                    let o = out.at_mut(s, c);
                    for i in 0..spec.dim {
                        o[i] += dxi.at(s, 0)[i];
                    }
                }
            }
        }
        _ => {
            for (c, &k) in spatial.iter().enumerate() {
                for s in 0..n {
                    let gp = &gauge.mats[mesh.neighbor(s, k, true)];
                    let gm = &gauge.mats[mesh.neighbor(s, k, false)];
                    let dg = (gp - gm) / (2.0 * mesh.h[k]);
                    let v = spec.from_matrix(&(&ginv[s] * dg));
                    let o = out.at_mut(s, c);
                    for i in 0..spec.dim {
                        o[i] += v[i];
                    }
                }
            }
        }
    }
    out
}

fn check_gauge(mesh: &CollarMesh, spec: &LieAlgebraSpec, g: &GaugeElement) -> Result<()> {
    if g.sites() != mesh.n_sites() {
        return Err(Error::MeshMismatch);
    }
    let r = spec.rep_dim();
    if g.mats.iter().any(|x| x.nrows() != r || x.ncols() != r) {
        return Err(Error::DimensionMismatch { expected: r, got: g.mats[0].nrows() });
    }
    Ok(())
}

/// Act on a boundary state. Momenta and multipliers go by `Ad_{g^{-1}}`;
/// for Lorentz algebras the frame legs go by `e -> e g^{-T}`, which keeps
/// `P(e)` equivariant in the `xi_IJ` basis.
pub fn gauge_transform(mesh: &CollarMesh, spec: &LieAlgebraSpec, g: &GaugeElement, st: &BoundaryState) -> Result<BoundaryState> {
    check_gauge(mesh, spec, g)?;
    if g.is_identity() {
        return Ok(st.clone());
    }
    let ginv = g.inverses()?;
    let d = mesh.d;
    let spatial: Vec<usize> = (0..d).collect();
    let mut out = st.clone();
    out.a = transform_connection(mesh, spec, g, &ginv, &st.a, &spatial);
    out.a0 = adjoint_inverse(spec, &ginv, &g.mats, &st.a0);
    out.p = adjoint_inverse(spec, &ginv, &g.mats, &st.p);
    out.beta = adjoint_inverse(spec, &ginv, &g.mats, &st.beta);
    out.lambda = adjoint_inverse(spec, &ginv, &g.mats, &st.lambda);
    out.lambda0 = adjoint_inverse(spec, &ginv, &g.mats, &st.lambda0);
    if matches!(spec.kind, AlgebraKind::Lorentz(_)) && spec.rep_dim() == d + 1 {
        let mut v = st.vierbein();
        for s in 0..mesh.n_sites() {
            let e = v.matrix(s) * ginv[s].transpose();
            v.set_matrix(s, &e);
        }
        out.set_vierbein(&v);
    }
    Ok(out)
}

/// Act on every slice of a bulk field with a time-independent element.
pub fn gauge_transform_bulk(mesh: &CollarMesh, spec: &LieAlgebraSpec, g: &GaugeElement, chi: &BulkField) -> Result<BulkField> {
    check_gauge(mesh, spec, g)?;
    if g.is_identity() {
        return Ok(chi.clone());
    }
    let ginv = g.inverses()?;
    let m = chi.m;
    let mut out = chi.clone();
    for j in 0..chi.n_t() {
        let a = &chi.a[j];
        let a0 = a.component(0);
        let spatial = LatticeField::from_fn(a.sites, m - 1, a.dim, |s, k, i| a.at(s, k + 1)[i]);
        let ks: Vec<usize> = (0..m - 1).collect();
        let ta = transform_connection(mesh, spec, g, &ginv, &spatial, &ks);
        let t0 = adjoint_inverse(spec, &ginv, &g.mats, &a0);
        out.a[j].set_component(0, &t0);
        for k in 0..m - 1 {
            out.a[j].set_component(k + 1, &ta.component(k));
        }
        out.p[j] = adjoint_inverse(spec, &ginv, &g.mats, &chi.p[j]);
    }
    Ok(out)
}

/// `J(a, p) = -d_a^* p`.
pub fn moment_map(mesh: &CollarMesh, spec: &LieAlgebraSpec, a: &LatticeField, p: &LatticeField) -> Result<LatticeField> {
    Ok(mesh.d_a_star(spec, a, p)?.scaled(-1.0))
}

/// Infinitesimal gauge flow `(d_a xi, u)` with `<da, u> = -<p, [da, xi]>`.
pub fn gauge_direction(
    mesh: &CollarMesh,
    spec: &LieAlgebraSpec,
    a: &LatticeField,
    p: &LatticeField,
    xi: &LatticeField,
) -> Result<(LatticeField, LatticeField)> {
    let da = mesh.d_a(spec, a, xi)?;
    let mut u = LatticeField::zeros(p.sites, p.comps, p.dim);
    for s in 0..p.sites {
        for k in 0..p.comps {
            let mut t = vec![0.0; spec.dim];
            spec.bracket_transpose_into(xi.at(s, 0), p.at(s, k), &mut t);
            for (o, v) in u.at_mut(s, k).iter_mut().zip(t) {
                *o = -v;
            }
        }
    }
    Ok((da, u))
}

/// `omega((da1, dp1), (da2, dp2)) = <da1, dp2> - <da2, dp1>`.
pub fn omega_ap(
    mesh: &CollarMesh,
    spec: &LieAlgebraSpec,
    v1: (&LatticeField, &LatticeField),
    v2: (&LatticeField, &LatticeField),
) -> Result<f64> {
    Ok(mesh.pairing(spec, v1.0, v2.1)? - mesh.pairing(spec, v2.0, v1.1)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianActionReport {
    pub max_gap: f64,
    pub max_relative_gap: f64,
}

/// Compare the finite-difference differential of `J_xi = <J, xi>` with
/// `omega(xi_M, .)` along `directions` random tangent vectors.
#[allow(clippy::too_many_arguments)]
pub fn hamiltonian_action_check(
    mesh: &CollarMesh,
    spec: &LieAlgebraSpec,
    a: &LatticeField,
    p: &LatticeField,
    xi: &LatticeField,
    fd_step: f64,
    directions: usize,
    seed: u64,
) -> Result<HamiltonianActionReport> {
    if !(fd_step > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive"));
    }
    let jxi = |a: &LatticeField, p: &LatticeField| -> Result<f64> { mesh.pairing(spec, &moment_map(mesh, spec, a, p)?, xi) };
    let flow = gauge_direction(mesh, spec, a, p, xi)?;
    let mut rng = Rng::new(seed);
    let mut max_gap = 0.0f64;
    let mut max_rel = 0.0f64;
    for _ in 0..directions {
        let da = LatticeField::from_fn(a.sites, a.comps, a.dim, |_, _, _| rng.symmetric());
        let dp = LatticeField::from_fn(p.sites, p.comps, p.dim, |_, _, _| rng.symmetric());
        let shifted = |t: f64| -> Result<f64> {
            let mut a2 = a.clone();
            a2.axpy(t, &da);
            let mut p2 = p.clone();
            p2.axpy(t, &dp);
            jxi(&a2, &p2)
        };
        let fd = (shifted(fd_step)? - shifted(-fd_step)?) / (2.0 * fd_step);
        let w = omega_ap(mesh, spec, (&flow.0, &flow.1), (&da, &dp))?;
        let gap = libm::fabs(fd - w);
        max_gap = max_gap.max(gap);
        let scale = libm::fabs(w).max(libm::fabs(fd));
        if scale > 0.0 {
            max_rel = max_rel.max(gap / scale);
        }
    }
    Ok(HamiltonianActionReport { max_gap, max_relative_gap: max_rel })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoisotropyReport {
    pub coisotropic: bool,
    pub ambient_dim: usize,
    pub tangent_dim: usize,
    pub orthogonal_dim: usize,
    /// Sine of the largest principal angle between `T^omega` and `T`.
    pub max_sin_angle: f64,
    pub constraint_violation: f64,
}

/// Relative threshold for the rank decisions of [`coisotropy_check`].
pub const COISOTROPY_RANK_TOL: f64 = 1e-8;

fn null_space_checked(m: &DMatrix<f64>, rel: f64) -> Result<DMatrix<f64>> {
    if m.nrows() > 0 && m.ncols() > 0 {
        let sv = m.clone().singular_values();
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let thr = rel * smax;
        if let Some(&s) = sv.iter().find(|&&s| s > thr / 10.0 && s < thr * 10.0) {
            return Err(Error::AmbiguousRank { sigma: s, threshold: thr });
        }
    }
    Ok(linalg::null_space(m, rel))
}

/// Is the zero set of `constraints` coisotropic at `point` for the form `omega`?
///
/// `T` is the null space of the central-difference constraint Jacobian,
/// `T^omega = { v : omega(t, v) = 0 for all t in T }`, and the test is
/// `T^omega` contained in `T` up to `tol` in principal angles.
pub fn coisotropy_check(
    constraints: &dyn Fn(&[f64]) -> Vec<f64>,
    omega: &DMatrix<f64>,
    point: &[f64],
    tol: f64,
) -> Result<CoisotropyReport> {
    let n = point.len();
    if omega.nrows() != n || omega.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: omega.nrows() });
    }
    let c0 = constraints(point);
    let viol = linalg::max_abs(&c0);
    if viol > tol {
        return Err(Error::OffConstraint(viol));
    }
    let h = 1e-5;
    let mut jac = DMatrix::zeros(c0.len(), n);
    let mut y = point.to_vec();
    for i in 0..n {
        y[i] = point[i] + h;
        let cp = constraints(&y);
        y[i] = point[i] - h;
        let cm = constraints(&y);
        y[i] = point[i];
        for r in 0..c0.len() {
            jac[(r, i)] = (cp[r] - cm[r]) / (2.0 * h);
        }
    }
    let t = if jac.nrows() == 0 { DMatrix::identity(n, n) } else { null_space_checked(&jac, COISOTROPY_RANK_TOL)? };
    let tw = if t.ncols() == 0 {
        DMatrix::identity(n, n)
    } else {
        null_space_checked(&(t.transpose() * omega), COISOTROPY_RANK_TOL)?
    };
    let resid = &tw - &t * (t.transpose() * &tw);
    let max_sin = if resid.ncols() == 0 { 0.0 } else { resid.clone().singular_values().iter().cloned().fold(0.0, f64::max) };
    Ok(CoisotropyReport {
        coisotropic: max_sin < tol,
        ambient_dim: n,
        tangent_dim: t.ncols(),
        orthogonal_dim: tw.ncols(),
        max_sin_angle: max_sin,
        constraint_violation: viol,
    })
}

/// Canonical form on `(a, p)` coordinates laid out as `[a.data, p.data]`.
pub fn omega_matrix(mesh: &CollarMesh, spec: &LieAlgebraSpec, comps: usize) -> DMatrix<f64> {
    let n = mesh.n_sites() * comps * spec.dim;
    let vol = mesh.cell_volume();
    let g = spec.dim;
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for blk in 0..n / g {
        for a in 0..g {
            for b in 0..g {
                let v = vol * spec.pairing[(a, b)];
                w[(blk * g + a, n + blk * g + b)] = v;
                w[(n + blk * g + b, blk * g + a)] = -v;
            }
        }
    }
    w
}

/// Boundary data of one solution variation on both ends of the slab.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabSample {
    pub inner_a: LatticeField,
    pub inner_p: LatticeField,
    pub outer_a: LatticeField,
    pub outer_p: LatticeField,
}

fn project_out_gauge(mesh: &CollarMesh, spec: &LieAlgebraSpec, da: &LatticeField) -> Result<LatticeField> {
    let n = mesh.n_sites();
    let zero = LatticeField::zeros(n, mesh.d, spec.dim);
    let cols = n * spec.dim;
    let mut dmat = DMatrix::zeros(da.len(), cols);
    for c in 0..cols {
        let mut e = LatticeField::zeros(n, 1, spec.dim);
        e.data[c] = 1.0;
        let col = mesh.d_a(spec, &zero, &e)?;
        for r in 0..da.len() {
            dmat[(r, c)] = col.data[r];
        }
    }
    let b = nalgebra::DVector::from_column_slice(&da.data);
    let xi = linalg::lstsq_min_norm(&dmat, &b, 1e-12);
    let exact = &dmat * xi;
    let mut out = da.clone();
    for (o, v) in out.data.iter_mut().zip(exact.iter()) {
        *o -= v;
    }
    Ok(out)
}

/// Largest `|omega_outer - omega_inner|` over all pairs of samples, after
/// removing gauge directions `d xi` from the connection variations.
pub fn isotropy_check(mesh: &CollarMesh, spec: &LieAlgebraSpec, samples: &[SlabSample]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("need at least two tangent samples"));
    }
    if !spec.is_abelian() {
        return Err(Error::UnsupportedAlgebra(spec.kind.name()));
    }
    let proj = samples
        .iter()
        .map(|s| {
            Ok(SlabSample {
                inner_a: project_out_gauge(mesh, spec, &s.inner_a)?,
                inner_p: s.inner_p.clone(),
                outer_a: project_out_gauge(mesh, spec, &s.outer_a)?,
                outer_p: s.outer_p.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for i in 0..proj.len() {
        for j in 0..proj.len() {
            let (x, y) = (&proj[i], &proj[j]);
            let outer = omega_ap(mesh, spec, (&x.outer_a, &x.outer_p), (&y.outer_a, &y.outer_p))?;
            let inner = omega_ap(mesh, spec, (&x.inner_a, &x.inner_p), (&y.inner_a, &y.inner_p))?;
            worst = worst.max(libm::fabs(outer - inner));
        }
    }
    Ok(worst)
}

/// Variations of solutions of the abelian topological theory across the
/// collar: flat connection `d chi + c`, divergence-free momentum
/// `sum_k partial_k psi^{kj} + c'`, then `da/dt = d a0(t)`,
/// `dp_j/dt = sum_k partial_k beta^{kj}(t)` with random `a0(t)`, `beta(t)`.
pub fn abelian_solution_variations(mesh: &CollarMesh, spec: &LieAlgebraSpec, count: usize, seed: u64) -> Result<Vec<SlabSample>> {
    if !spec.is_abelian() {
        return Err(Error::UnsupportedAlgebra(spec.kind.name()));
    }
    let (n, d, g) = (mesh.n_sites(), mesh.d, spec.dim);
    let zero = LatticeField::zeros(n, d, g);
    let mut rng = Rng::new(seed);
    let mut rand = |comps: usize| LatticeField::from_fn(n, comps, g, |_, _, _| rng.symmetric());
    let skew_div = |psi: &LatticeField| -> LatticeField {
        // sum_k partial_k psi^{kj} with psi skew built from its k < j part
        let mut out = LatticeField::zeros(n, d, g);
        for j in 0..d {
            let mut acc = LatticeField::zeros(n, 1, g);
            for k in 0..d {
                if k == j {
                    continue;
                }
                let sign = if k < j { 1.0 } else { -1.0 };
                let (lo, hi) = if k < j { (k, j) } else { (j, k) };
                let comp = psi.component(lo * d + hi);
                mesh.partial_add(&comp, k, sign, &mut acc);
            }
            out.set_component(j, &acc);
        }
        out
    };
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let chi = rand(1);
        let mut a = mesh.d_a(spec, &zero, &chi)?;
        let c = rand(1);
        for s in 0..n {
            for k in 0..d {
                for i in 0..g {
                    a.at_mut(s, k)[i] += c.data[i];
                }
            }
        }
        let psi = rand(d * d);
        let mut p = skew_div(&psi);
        let c2 = rand(1);
        for s in 0..n {
            for k in 0..d {
                for i in 0..g {
                    p.at_mut(s, k)[i] += c2.data[i];
                }
            }
        }
        let (inner_a, inner_p) = (a.clone(), p.clone());
        for _ in 0..mesh.n_t {
            let a0 = rand(1);
            let beta = rand(d * d);
            a.axpy(mesh.dt, &mesh.d_a(spec, &zero, &a0)?);
            p.axpy(mesh.dt, &skew_div(&beta));
        }
        samples.push(SlabSample { inner_a, inner_p, outer_a: a, outer_p: p });
    }
    Ok(samples)
}

/// Gauge-equivalent state with `a0 = 0`: one rotation by `g = exp(-epsilon a0)`.
pub fn gauge_fix_temporal(mesh: &CollarMesh, spec: &LieAlgebraSpec, st: &BoundaryState) -> Result<BoundaryState> {
    let xi = st.a0.scaled(-mesh.epsilon());
    let g = GaugeElement::from_generator(spec, &xi)?;
    let mut out = gauge_transform(mesh, spec, &g, st)?;
    out.a0.data.iter_mut().for_each(|x| *x = 0.0);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_algebra;
    use crate::dynamics::{action_ym, curvature, flat_vacuum, palatini_residuals};
    use crate::fields::{palatini_map, random_bulk, random_state};

    fn su2_random(seed: u64) -> (CollarMesh, LieAlgebraSpec, BoundaryState) {
        let mesh = CollarMesh::uniform(2, 4, 0.3, 4, 0.05).unwrap();
        let g = build_algebra(AlgebraKind::Su2).unwrap();
        let st = random_state(seed, &mesh, &g, 0.5).unwrap();
        (mesh, g, st)
    }

    fn constant_element(spec: &LieAlgebraSpec, n: usize, v: &[f64]) -> GaugeElement {
        let xi = LatticeField::from_fn(n, 1, spec.dim, |_, _, i| v[i]);
        let mut g = GaugeElement::from_generator(spec, &xi).unwrap();
        g.generator = None;
        g
    }

    #[test]
    fn identity_leaves_state_bit_exact() {
        let (mesh, g, st) = su2_random(1);
        let id = GaugeElement::identity(mesh.n_sites(), 3);
        assert_eq!(gauge_transform(&mesh, &g, &id, &st).unwrap(), st);
    }

    #[test]
    fn constant_gauge_rotates_curvature_and_composes() {
        let (mesh, g, st) = su2_random(2);
        let n = mesh.n_sites();
        let ga = constant_element(&g, n, &[0.3, -0.5, 0.2]);
        let gb = constant_element(&g, n, &[-0.1, 0.4, 0.7]);
        let t = gauge_transform(&mesh, &g, &ga, &st).unwrap();
        let f = curvature(&mesh, &g, &st.a).unwrap();
        let ft = curvature(&mesh, &g, &t.a).unwrap();
        let ginv = ga.inverses().unwrap();
        let want = adjoint_inverse(&g, &ginv, &ga.mats, &f);
        assert!(ft.sub(&want).max_abs() < 1e-12);

        let two = gauge_transform(&mesh, &g, &gb, &t).unwrap();
        let once = gauge_transform(&mesh, &g, &ga.compose(&gb), &st).unwrap();
        let diff = two.pack().iter().zip(once.pack()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff < 1e-12);
    }

    #[test]
    fn lorentz_elements_preserve_eta_and_frames_are_equivariant() {
        let g = build_algebra(AlgebraKind::Lorentz(2)).unwrap();
        let mesh = CollarMesh::uniform(2, 3, 0.5, 4, 0.05).unwrap();
        let n = mesh.n_sites();
        let el = constant_element(&g, n, &[0.3, -0.2, 0.5]);
        assert!(el.lorentz_defect() < 1e-10);
        let st = random_state(5, &mesh, &g, 0.3).unwrap();
        let t = gauge_transform(&mesh, &g, &el, &st).unwrap();
        let pe = palatini_map(&st.vierbein()).unwrap();
        let pt = palatini_map(&t.vierbein()).unwrap();
        let ginv = el.inverses().unwrap();
        let want = adjoint_inverse(&g, &ginv, &el.mats, &pe);
        assert!(pt.sub(&want).max_abs() < 1e-12);
    }

    #[test]
    fn rotations_preserve_residual_norms() {
        let g = build_algebra(AlgebraKind::Lorentz(2)).unwrap();
        let mesh = CollarMesh::uniform(2, 3, 0.5, 4, 0.05).unwrap();
        let n = mesh.n_sites();
        // xi_12 generates spatial rotations
        let el = constant_element(&g, n, &[0.0, 0.0, 0.8]);
        for st in [random_state(6, &mesh, &g, 0.3).unwrap(), flat_vacuum(&mesh, &g).unwrap()] {
            let t = gauge_transform(&mesh, &g, &el, &st).unwrap();
            let r0 = palatini_residuals(&mesh, &g, &st).unwrap().norms(&mesh);
            let r1 = palatini_residuals(&mesh, &g, &t).unwrap().norms(&mesh);
            for (a, b) in r0.values().iter().zip(r1.values()) {
                assert!((a - b).abs() < 1e-10, "{r0:?} {r1:?}");
            }
        }
    }

    #[test]
    fn moment_map_identities() {
        let (mesh, g, st) = su2_random(3);
        let n = mesh.n_sites();
        let zero_p = LatticeField::zeros(n, 2, 3);
        assert_eq!(moment_map(&mesh, &g, &st.a, &zero_p).unwrap().max_abs(), 0.0);
        let mut rng = Rng::new(1);
        let xi = LatticeField::from_fn(n, 1, 3, |_, _, _| rng.symmetric());
        let j = moment_map(&mesh, &g, &st.a, &st.p).unwrap();
        let lhs = mesh.pairing(&g, &j, &xi).unwrap();
        let rhs = mesh.pairing(&g, &st.p, &mesh.d_a(&g, &st.a, &xi).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);

        let ab = build_algebra(AlgebraKind::Abelian(1)).unwrap();
        let m1 = CollarMesh::uniform(1, 8, 0.25, 4, 0.05).unwrap();
        let a = LatticeField::from_fn(8, 1, 1, |_, _, _| rng.symmetric());
        let p = LatticeField::from_fn(8, 1, 1, |_, _, _| rng.symmetric());
        let j = moment_map(&m1, &ab, &a, &p).unwrap();
        for s in 0..8 {
            let div = (p.data[(s + 1) % 8] - p.data[(s + 7) % 8]) / 0.5;
            assert!((j.data[s] + div).abs() < 1e-14);
        }
    }

    #[test]
    fn hamiltonian_action_gaps() {
        let (mesh, g, st) = su2_random(4);
        let n = mesh.n_sites();
        let zero = LatticeField::zeros(n, 1, 3);
        let r = hamiltonian_action_check(&mesh, &g, &st.a, &st.p, &zero, 1e-5, 5, 1).unwrap();
        assert_eq!(r.max_gap, 0.0);
        let mut rng = Rng::new(2);
        let xi = LatticeField::from_fn(n, 1, 3, |_, _, _| rng.symmetric());
        let r = hamiltonian_action_check(&mesh, &g, &st.a, &st.p, &xi, 1e-5, 5, 1).unwrap();
        assert!(r.max_relative_gap < 1e-6, "{r:?}");

        let ab = build_algebra(AlgebraKind::Abelian(2)).unwrap();
        let st = random_state(4, &mesh, &ab, 0.5).unwrap();
        let xi = LatticeField::from_fn(n, 1, 2, |_, _, _| rng.symmetric());
        let r = hamiltonian_action_check(&mesh, &ab, &st.a, &st.p, &xi, 1e-5, 5, 1).unwrap();
        assert!(r.max_gap < 1e-10, "{r:?}");
    }

    #[test]
    fn gauge_directions_pair_to_moment_map() {
        let (mesh, g, st) = su2_random(7);
        let n = mesh.n_sites();
        let xi = LatticeField::from_fn(n, 1, 3, |_, _, i| [0.3, -0.4, 0.1][i]);
        let ze = LatticeField::from_fn(n, 1, 3, |_, _, i| [-0.2, 0.5, 0.6][i]);
        let fx = gauge_direction(&mesh, &g, &st.a, &st.p, &xi).unwrap();
        let fz = gauge_direction(&mesh, &g, &st.a, &st.p, &ze).unwrap();
        let w = omega_ap(&mesh, &g, (&fz.0, &fz.1), (&fx.0, &fx.1)).unwrap();
        let j = moment_map(&mesh, &g, &st.a, &st.p).unwrap();
        let br = LatticeField::from_fn(n, 1, 3, |s, _, i| g.bracket(xi.at(s, 0), ze.at(s, 0)).unwrap()[i]);
        let want = mesh.pairing(&g, &j, &br).unwrap();
        assert!((w - want).abs() < 1e-12, "{w} {want}");
    }

    fn canonical(n: usize) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            w[(i, n + i)] = 1.0;
            w[(n + i, i)] = -1.0;
        }
        w
    }

    #[test]
    fn coisotropy_controls() {
        let w = canonical(2);
        let x = [0.0, 0.3, 0.0, -0.2];
        let hyper = |v: &[f64]| vec![v[0]];
        assert!(coisotropy_check(&hyper, &w, &x, 1e-8).unwrap().coisotropic);
        let sympl = |v: &[f64]| vec![v[0], v[2]];
        let r = coisotropy_check(&sympl, &w, &x, 1e-8).unwrap();
        assert!(!r.coisotropic);
        assert_eq!((r.tangent_dim, r.orthogonal_dim), (2, 2));
        assert!(matches!(coisotropy_check(&hyper, &w, &[1.0, 0.0, 0.0, 0.0], 1e-8), Err(Error::OffConstraint(_))));
    }

    #[test]
    fn gauss_constraint_set_is_coisotropic() {
        let ab = build_algebra(AlgebraKind::Abelian(1)).unwrap();
        let mesh = CollarMesh::uniform(1, 8, 0.25, 4, 0.05).unwrap();
        let mut rng = Rng::new(3);
        let a: Vec<f64> = (0..8).map(|_| rng.symmetric()).collect();
        let pc = rng.symmetric();
        let mut x = a.clone();
        x.extend(core::iter::repeat_n(pc, 8));
        let c = |v: &[f64]| {
            let a = LatticeField { sites: 8, comps: 1, dim: 1, data: v[..8].to_vec() };
            let p = LatticeField { sites: 8, comps: 1, dim: 1, data: v[8..].to_vec() };
            moment_map(&mesh, &ab, &a, &p).unwrap().data
        };
        let r = coisotropy_check(&c, &omega_matrix(&mesh, &ab, 1), &x, 1e-8).unwrap();
        assert!(r.coisotropic, "{r:?}");
        assert_eq!(r.tangent_dim, 16 - 6);
    }

    #[test]
    fn isotropy_of_abelian_solutions() {
        let ab = build_algebra(AlgebraKind::Abelian(1)).unwrap();
        let mesh = CollarMesh::uniform(2, 4, 0.5, 6, 0.05).unwrap();
        let samples = abelian_solution_variations(&mesh, &ab, 4, 9).unwrap();
        assert!(isotropy_check(&mesh, &ab, &samples).unwrap() < 1e-8);
        let same = vec![samples[0].clone(), samples[0].clone()];
        assert!(isotropy_check(&mesh, &ab, &same).unwrap() < 1e-12);

        // a pure gauge variation against a solution variation
        let mut rng = Rng::new(4);
        let xi = LatticeField::from_fn(16, 1, 1, |_, _, _| rng.symmetric());
        let zero = LatticeField::zeros(16, 2, 1);
        let da = mesh.d_a(&ab, &zero, &xi).unwrap();
        let gauge = SlabSample { inner_a: da.clone(), inner_p: LatticeField::zeros(16, 2, 1), outer_a: da, outer_p: LatticeField::zeros(16, 2, 1) };
        let mut pair = vec![gauge];
        pair.push(samples[1].clone());
        assert!(isotropy_check(&mesh, &ab, &pair).unwrap() < 1e-10);
        assert!(isotropy_check(&mesh, &ab, &pair[..1]).is_err());
    }

    #[test]
    fn temporal_gauge_fixing() {
        let ab = build_algebra(AlgebraKind::Abelian(1)).unwrap();
        let mesh = CollarMesh::uniform(1, 8, 0.25, 4, 0.05).unwrap();
        let mut st = random_state(1, &mesh, &ab, 0.4).unwrap();
        st.a0.data.iter_mut().for_each(|x| *x = 0.0);
        assert_eq!(gauge_fix_temporal(&mesh, &ab, &st).unwrap(), st);

        let mut rng = Rng::new(5);
        st.a0 = LatticeField::from_fn(8, 1, 1, |_, _, _| rng.symmetric());
        let fixed = gauge_fix_temporal(&mesh, &ab, &st).unwrap();
        assert_eq!(fixed.a0.max_abs(), 0.0);
        let zero = LatticeField::zeros(8, 1, 1);
        let mut want = st.a.clone();
        want.axpy(-mesh.epsilon(), &mesh.d_a(&ab, &zero, &st.a0).unwrap());
        assert!(fixed.a.sub(&want).max_abs() < 1e-14);

        let g = build_algebra(AlgebraKind::Lorentz(2)).unwrap();
        let m2 = CollarMesh::uniform(2, 3, 0.5, 4, 0.05).unwrap();
        let st = random_state(2, &m2, &g, 0.3).unwrap();
        let fixed = gauge_fix_temporal(&m2, &g, &st).unwrap();
        assert_eq!(fixed.skew_defect(), 0.0);
    }

    #[test]
    fn action_is_invariant_under_constant_gauge() {
        let g = build_algebra(AlgebraKind::Su2).unwrap();
        let mesh = CollarMesh::uniform(1, 8, 0.25, 8, 0.05).unwrap();
        let chi = random_bulk(3, &mesh, &g, 0.5).unwrap();
        let el = constant_element(&g, 8, &[0.4, 0.9, -0.3]);
        let t = gauge_transform_bulk(&mesh, &g, &el, &chi).unwrap();
        for lam in [0.0, 1.0] {
            let s0 = action_ym(&mesh, &g, &chi, lam).unwrap().total;
            let s1 = action_ym(&mesh, &g, &t, lam).unwrap().total;
            assert!((s0 - s1).abs() < 1e-12);
        }
    }
}
