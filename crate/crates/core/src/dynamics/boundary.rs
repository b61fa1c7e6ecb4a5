//! Boundary Hamiltonian of the Palatini system, its variational derivatives,
//! the six constraint residuals and the explicit integrator.

use alloc::vec;
use alloc::vec::Vec;

use super::{curvature, field_norm};
use crate::algebra::LieAlgebraSpec;
use crate::error::{Error, Result};
use crate::fields::{n_pairs, pair_index, palatini_map, BoundaryState};
use crate::lattice::LatticeField;
use crate::linalg;
use crate::mesh::CollarMesh;

fn check_state(mesh: &CollarMesh, spec: &LieAlgebraSpec, st: &BoundaryState) -> Result<()> {
    let (n, d, g) = (mesh.n_sites(), mesh.d, spec.dim);
    let m = d + 1;
    if g != n_pairs(m) {
        return Err(Error::UnsupportedAlgebra(alloc::format!(
            "{} has dimension {g}, frame terms need {}",
            spec.kind.name(),
            n_pairs(m)
        )));
    }
    let shapes = [
        (&st.a, d, g),
        (&st.a0, 1, g),
        (&st.p, d, g),
        (&st.beta, d * d, g),
        (&st.lambda, d * d, g),
        (&st.lambda0, d, g),
        (&st.e, d, m),
        (&st.e0, 1, m),
    ];
    for (f, c, dim) in shapes {
        if f.sites != n || f.comps != c || f.dim != dim || f.data.len() != n * c * dim {
            return Err(Error::MeshMismatch);
        }
    }
    Ok(())
}

/// `P(e)^{mu nu}` at one site as algebra coefficients.
fn pe_at(pe: &LatticeField, s: usize, m: usize, mu: usize, nu: usize) -> &[f64] {
    pe.at(s, mu * m + nu)
}

/// Extended boundary Hamiltonian
/// `<p, d_a a0 - 2 Lambda0> + <beta, F_a - Lambda> + 2 <Lambda0, P(e)^{k0}> + <Lambda, P(e)^{kj}>`,
/// with skew pairs summed over `k < j`.
pub fn boundary_hamiltonian(mesh: &CollarMesh, spec: &LieAlgebraSpec, st: &BoundaryState) -> Result<f64> {
    check_state(mesh, spec, st)?;
    let (n, d) = (mesh.n_sites(), mesh.d);
    let m = d + 1;
    let da0 = mesh.d_a(spec, &st.a, &st.a0)?;
    let f = curvature(mesh, spec, &st.a)?;
    let pe = palatini_map(&st.vierbein())?;
    let mut h = 0.0;
    let mut r = vec![0.0; spec.dim];
    for s in 0..n {
        for k in 0..d {
            for i in 0..spec.dim {
                r[i] = da0.at(s, k)[i] - 2.0 * st.lambda0.at(s, k)[i];
            }
            h += spec.pair(st.p.at(s, k), &r);
            h += 2.0 * spec.pair(st.lambda0.at(s, k), pe_at(&pe, s, m, k + 1, 0));
            for j in (k + 1)..d {
                let c = k * d + j;
                for i in 0..spec.dim {
                    r[i] = f.at(s, c)[i] - st.lambda.at(s, c)[i];
                }
                h += spec.pair(st.beta.at(s, c), &r);
                h += spec.pair(st.lambda.at(s, c), pe_at(&pe, s, m, k + 1, j + 1));
            }
        }
    }
    Ok(h * mesh.cell_volume())
}

/// `dP^{mu nu}_{IJ} / de^rho_K` for one frame, index
/// `((((mu * m + nu) * m + i) * m + j) * m + rho) * m + kk`.
pub fn palatini_tensor_derivative(e: &nalgebra::DMatrix<f64>) -> Result<Vec<f64>> {
    let m = e.nrows();
    let det = linalg::det(e);
    let inv = linalg::inverse(e).ok_or(Error::SingularVierbein { site: 0, det })?;
    let mut out = vec![0.0; m * m * m * m * m * m];
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for mu in 0..m {
        for nu in 0..m {
            for i in 0..m {
                for j in 0..m {
                    let wedge = e[(mu, i)] * e[(nu, j)] - e[(nu, i)] * e[(mu, j)];
                    for rho in 0..m {
                        for kk in 0..m {
                            let ddet = det * inv[(kk, rho)];
                            let dw = delta(mu, rho) * delta(i, kk) * e[(nu, j)]
                                + e[(mu, i)] * delta(nu, rho) * delta(j, kk)
                                - delta(nu, rho) * delta(i, kk) * e[(mu, j)]
                                - e[(nu, i)] * delta(mu, rho) * delta(j, kk);
                            out[(((((mu * m + nu) * m + i) * m + j) * m + rho) * m) + kk] =
                                0.5 * (ddet * wedge + det * dw);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Local derivative of the frame terms of the Hamiltonian density in `e^rho_K`:
/// rows `rho = 0` go to `e0`, rows `rho = k + 1` to `e_k`.
fn frame_gradient(spec: &LieAlgebraSpec, st: &BoundaryState) -> Result<(LatticeField, LatticeField)> {
    let d = st.d();
    let m = d + 1;
    let n = st.sites();
    let v = st.vierbein();
    let mut ge = LatticeField::zeros(n, d, m);
    let mut ge0 = LatticeField::zeros(n, 1, m);
    for s in 0..n {
        let mat = v.matrix(s);
        let det = linalg::det(&mat);
        if !(libm::fabs(det) > crate::fields::SINGULAR_DET) {
            return Err(Error::SingularVierbein { site: s, det });
        }
        let dp = palatini_tensor_derivative(&mat)?;
        // (mu, nu, weight, lowered multiplier)
        let mut terms: Vec<(usize, usize, f64, Vec<f64>)> = Vec::new();
        for k in 0..d {
            terms.push((k + 1, 0, 2.0, spec.lower(st.lambda0.at(s, k))));
            for j in (k + 1)..d {
                terms.push((k + 1, j + 1, 1.0, spec.lower(st.lambda.at(s, k * d + j))));
            }
        }
        for rho in 0..m {
            for kk in 0..m {
                let mut acc = 0.0;
                for (mu, nu, w, lam) in terms.iter() {
                    for i in 0..m {
                        for j in (i + 1)..m {
                            let l = lam[pair_index(m, i, j)];
                            if l != 0.0 {
                                acc += w * l * dp[(((((mu * m + nu) * m + i) * m + j) * m + rho) * m) + kk];
                            }
                        }
                    }
                }
                if rho == 0 {
                    ge0.at_mut(s, 0)[kk] = acc;
                } else {
                    ge.at_mut(s, rho - 1)[kk] = acc;
                }
            }
        }
    }
    Ok((ge, ge0))
}

/// Variational derivatives of [`boundary_hamiltonian`] in every slot.
///
/// Algebra-valued slots carry upper-index vectors `Y` with
/// `dH = <Y, dfield>` under the mesh pairing (skew slots summed over `k < j`,
/// stored skew); frame slots carry the plain per-site partial derivative.
pub fn hamiltonian_gradient(mesh: &CollarMesh, spec: &LieAlgebraSpec, st: &BoundaryState) -> Result<BoundaryState> {
    check_state(mesh, spec, st)?;
    let (n, d, g) = (mesh.n_sites(), mesh.d, spec.dim);
    let m = d + 1;
    let pe = palatini_map(&st.vierbein())?;
    let mut out = st.clone();

    // d/dp
    let mut gp = mesh.d_a(spec, &st.a, &st.a0)?;
    gp.axpy(-2.0, &st.lambda0);
    out.p = gp;

    // d/da_j = -sum_k D_k^* beta^{kj} + T(a0, p_j)
    let mut ga = LatticeField::zeros(n, d, g);
    for j in 0..d {
        let mut acc = LatticeField::zeros(n, 1, g);
        for k in 0..d {
            let b = st.beta.component(k * d + j);
            mesh.covariant_partial_adjoint_add(spec, &st.a, &b, k, -1.0, &mut acc);
        }
        for s in 0..n {
            let a0 = st.a0.at(s, 0).to_vec();
            let pj = st.p.at(s, j).to_vec();
            spec.bracket_transpose_into(&a0, &pj, acc.at_mut(s, 0));
        }
        ga.set_component(j, &acc);
    }
    out.a = ga;

    out.a0 = mesh.d_a_star(spec, &st.a, &st.p)?.scaled(-1.0);

    let f = curvature(mesh, spec, &st.a)?;
    out.beta = f.sub(&st.lambda);
    let mut gl = LatticeField::zeros(n, d * d, g);
    let mut gl0 = LatticeField::zeros(n, d, g);
    for s in 0..n {
        for k in 0..d {
            for i in 0..g {
                gl0.at_mut(s, k)[i] = 2.0 * (pe_at(&pe, s, m, k + 1, 0)[i] - st.p.at(s, k)[i]);
            }
            for j in 0..d {
                if j == k {
                    continue;
                }
                for i in 0..g {
                    gl.at_mut(s, k * d + j)[i] = pe_at(&pe, s, m, k + 1, j + 1)[i] - st.beta.at(s, k * d + j)[i];
                }
            }
        }
        for k in 0..d {
            out.beta.at_mut(s, k * d + k).iter_mut().for_each(|x| *x = 0.0);
        }
    }
    out.lambda = gl;
    out.lambda0 = gl0;
    let (ge, ge0) = frame_gradient(spec, st)?;
    out.e = ge;
    out.e0 = ge0;
    Ok(out)
}

/// Closed-form `(da/dt, dp/dt) = (d_a a0 - 2 Lambda0, sum_k D_k^* beta^{kj} - T(a0, p))`.
pub fn evolution_rhs(mesh: &CollarMesh, spec: &LieAlgebraSpec, st: &BoundaryState) -> Result<(LatticeField, LatticeField)> {
    check_state(mesh, spec, st)?;
    let (n, d, g) = (mesh.n_sites(), mesh.d, spec.dim);
    let mut adot = mesh.d_a(spec, &st.a, &st.a0)?;
    adot.axpy(-2.0, &st.lambda0);
    let mut pdot = LatticeField::zeros(n, d, g);
    for j in 0..d {
        let mut acc = LatticeField::zeros(n, 1, g);
        for k in 0..d {
            let b = st.beta.component(k * d + j);
            mesh.covariant_partial_adjoint_add(spec, &st.a, &b, k, 1.0, &mut acc);
        }
        let mut t = LatticeField::zeros(n, 1, g);
        for s in 0..n {
            spec.bracket_transpose_into(st.a0.at(s, 0), st.p.at(s, j), t.at_mut(s, 0));
        }
        acc.axpy(-1.0, &t);
        pdot.set_component(j, &acc);
    }
    Ok((adot, pdot))
}

/// The six constraint residual fields of the Palatini boundary system.
#[derive(Debug, Clone, PartialEq)]
pub struct PalatiniResiduals {
    /// `d_a^* p`
    pub gauss: LatticeField,
    /// `F_a - Lambda`
    pub flatness: LatticeField,
    /// `beta - P(e)^{kj}`
    pub beta: LatticeField,
    /// `p - P(e)^{k0}`
    pub p: LatticeField,
    /// Frame derivative of the Hamiltonian density in `e0`.
    pub torsion0: LatticeField,
    /// Frame derivative of the Hamiltonian density in `e`.
    pub torsion1: LatticeField,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualNorms {
    pub gauss: f64,
    pub flatness: f64,
    pub beta: f64,
    pub p: f64,
    pub torsion0: f64,
    pub torsion1: f64,
}

impl ResidualNorms {
    pub const NAMES: [&'static str; 6] = ["gauss", "flatness", "beta", "p", "torsion0", "torsion1"];

    pub fn values(&self) -> [f64; 6] {
        [self.gauss, self.flatness, self.beta, self.p, self.torsion0, self.torsion1]
    }

    pub fn max(&self) -> f64 {
        self.values().iter().fold(0.0f64, |a, b| a.max(*b))
    }
}

impl PalatiniResiduals {
    pub fn norms(&self, mesh: &CollarMesh) -> ResidualNorms {
        ResidualNorms {
            gauss: field_norm(mesh, &self.gauss),
            flatness: field_norm(mesh, &self.flatness),
            beta: field_norm(mesh, &self.beta),
            p: field_norm(mesh, &self.p),
            torsion0: field_norm(mesh, &self.torsion0),
            torsion1: field_norm(mesh, &self.torsion1),
        }
    }

    /// Independent residual entries, skew fields restricted to `k < j`.
    pub fn flatten(&self) -> Vec<f64> {
        let d = self.p.comps;
        let mut out = Vec::new();
        out.extend_from_slice(&self.gauss.data);
        for f in [&self.flatness, &self.beta] {
            for s in 0..f.sites {
                for k in 0..d {
                    for j in (k + 1)..d {
                        out.extend_from_slice(f.at(s, k * d + j));
                    }
                }
            }
        }
        out.extend_from_slice(&self.p.data);
        out.extend_from_slice(&self.torsion0.data);
        out.extend_from_slice(&self.torsion1.data);
        out
    }
}

pub fn palatini_residuals(mesh: &CollarMesh, spec: &LieAlgebraSpec, st: &BoundaryState) -> Result<PalatiniResiduals> {
    check_state(mesh, spec, st)?;
    let (n, d, g) = (mesh.n_sites(), mesh.d, spec.dim);
    let m = d + 1;
    let pe = palatini_map(&st.vierbein())?;
    let gauss = mesh.d_a_star(spec, &st.a, &st.p)?;
    let flatness = curvature(mesh, spec, &st.a)?.sub(&st.lambda);
    let mut beta = st.beta.clone();
    let mut p = st.p.clone();
    for s in 0..n {
        for k in 0..d {
            for i in 0..g {
                p.at_mut(s, k)[i] -= pe_at(&pe, s, m, k + 1, 0)[i];
            }
            for j in 0..d {
                for i in 0..g {
                    beta.at_mut(s, k * d + j)[i] -= pe_at(&pe, s, m, k + 1, j + 1)[i];
                }
            }
        }
    }
    let (torsion1, torsion0) = frame_gradient(spec, st)?;
    Ok(PalatiniResiduals { gauss, flatness, beta, p, torsion0, torsion1 })
}

/// Flat vacuum: `a = a0 = 0`, `Lambda = Lambda0 = 0`, identity frame and
/// momenta on the Palatini surface.
pub fn flat_vacuum(mesh: &CollarMesh, spec: &LieAlgebraSpec) -> Result<BoundaryState> {
    let mut st = BoundaryState::vacuum(mesh, spec);
    let d = mesh.d;
    let m = d + 1;
    let pe = palatini_map(&st.vierbein())?;
    if pe.dim != spec.dim {
        return Err(Error::UnsupportedAlgebra(spec.kind.name()));
    }
    for s in 0..mesh.n_sites() {
        for k in 0..d {
            st.p.at_mut(s, k).copy_from_slice(pe_at(&pe, s, m, k + 1, 0));
            for j in 0..d {
                let v = pe_at(&pe, s, m, k + 1, j + 1).to_vec();
                st.beta.at_mut(s, k * d + j).copy_from_slice(&v);
            }
        }
    }
    Ok(st)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldNorms {
    pub a: f64,
    pub p: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRecord {
    pub t: f64,
    pub state: BoundaryState,
    pub hamiltonian: f64,
    pub residuals: ResidualNorms,
    pub norms: FieldNorms,
}

/// Post-step projection settings for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub tol: f64,
    pub max_iter: usize,
}

/// Norm beyond which [`evolve`] reports divergence.
pub const DIVERGENCE_NORM: f64 = 1e6;

fn record(mesh: &CollarMesh, spec: &LieAlgebraSpec, t: f64, st: &BoundaryState) -> Result<EvolutionRecord> {
    Ok(EvolutionRecord {
        t,
        state: st.clone(),
        hamiltonian: boundary_hamiltonian(mesh, spec, st)?,
        residuals: palatini_residuals(mesh, spec, st)?.norms(mesh),
        norms: FieldNorms {
            a: field_norm(mesh, &st.a),
            p: field_norm(mesh, &st.p),
            beta: field_norm(mesh, &st.beta),
        },
    })
}

/// RK4 in `(a, p)` with the remaining slots frozen over each step.
/// Returns the initial record followed by one record per step.
pub fn evolve(
    mesh: &CollarMesh,
    spec: &LieAlgebraSpec,
    state0: &BoundaryState,
    n_steps: usize,
    dt: f64,
    projection: Option<Projection>,
) -> Result<Vec<EvolutionRecord>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("time step must be positive"));
    }
    let mut st = state0.clone();
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(record(mesh, spec, 0.0, &st)?);
    for step in 1..=n_steps {
        let (k1a, k1p) = evolution_rhs(mesh, spec, &st)?;
        let stage = |ka: &LatticeField, kp: &LatticeField, h: f64| {
            let mut s2 = st.clone();
            s2.a.axpy(h, ka);
            s2.p.axpy(h, kp);
            s2
        };
        let (k2a, k2p) = evolution_rhs(mesh, spec, &stage(&k1a, &k1p, 0.5 * dt))?;
        let (k3a, k3p) = evolution_rhs(mesh, spec, &stage(&k2a, &k2p, 0.5 * dt))?;
        let (k4a, k4p) = evolution_rhs(mesh, spec, &stage(&k3a, &k3p, dt))?;
        for (k, w) in [(&k1a, 1.0), (&k2a, 2.0), (&k3a, 2.0), (&k4a, 1.0)] {
            st.a.axpy(dt * w / 6.0, k);
        }
        for (k, w) in [(&k1p, 1.0), (&k2p, 2.0), (&k3p, 2.0), (&k4p, 1.0)] {
            st.p.axpy(dt * w / 6.0, k);
        }
        let norm = libm::sqrt(st.a.norm_sq() + st.p.norm_sq());
        if !(norm <= DIVERGENCE_NORM) {
            return Err(Error::Divergence { step, norm });
        }
        if let Some(pr) = projection {
            st = crate::pca::project_constraints(mesh, spec, &st, pr.tol, pr.max_iter)?;
        }
        out.push(record(mesh, spec, step as f64 * dt, &st)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_algebra, AlgebraKind};
    use crate::fields::{random_state, Block};

    fn lorentz2() -> (CollarMesh, LieAlgebraSpec) {
        (CollarMesh::uniform(2, 3, 0.4, 4, 0.05).unwrap(), build_algebra(AlgebraKind::Lorentz(2)).unwrap())
    }

    #[test]
    fn vacuum_hamiltonian_and_term_isolation() {
        let (mesh, g) = lorentz2();
        let st = BoundaryState::vacuum(&mesh, &g);
        assert_eq!(boundary_hamiltonian(&mesh, &g, &st).unwrap(), 0.0);

        let mut st = BoundaryState::vacuum(&mesh, &g);
        let rs = random_state(4, &mesh, &g, 0.5).unwrap();
        st.p = rs.p.clone();
        st.a0 = rs.a0.clone();
        let h = boundary_hamiltonian(&mesh, &g, &st).unwrap();
        let zero = LatticeField::zeros(mesh.n_sites(), 2, g.dim);
        let da0 = mesh.d_a(&g, &zero, &st.a0).unwrap();
        let want = mesh.pairing(&g, &st.p, &da0).unwrap();
        assert!((h - want).abs() < 1e-13);
    }

    #[test]
    fn hamiltonian_matches_four_term_assembly() {
        let (mesh, g) = lorentz2();
        let st = random_state(8, &mesh, &g, 0.4).unwrap();
        let h = boundary_hamiltonian(&mesh, &g, &st).unwrap();
        let n = mesh.n_sites();
        let vol = mesh.cell_volume();
        let pe = palatini_map(&st.vierbein()).unwrap();
        let f = curvature(&mesh, &g, &st.a).unwrap();
        let mut t = 0.0;
        let da0 = mesh.d_a(&g, &st.a, &st.a0).unwrap();
        t += mesh.pairing(&g, &st.p, &da0).unwrap() - 2.0 * mesh.pairing(&g, &st.p, &st.lambda0).unwrap();
        // only (k, j) = (0, 1) in d = 2
        for s in 0..n {
            let fb: Vec<f64> = (0..3).map(|i| f.at(s, 1)[i] - st.lambda.at(s, 1)[i]).collect();
            t += vol * g.pair(st.beta.at(s, 1), &fb);
            t += vol * g.pair(st.lambda.at(s, 1), pe.at(s, 3 + 2));
            for k in 0..2 {
                t += 2.0 * vol * g.pair(st.lambda0.at(s, k), pe.at(s, (k + 1) * 3));
            }
        }
        assert!((h - t).abs() < 1e-12);
    }

    fn fd_gradient(mesh: &CollarMesh, g: &LieAlgebraSpec, st: &BoundaryState) -> Vec<f64> {
        let x = st.pack();
        let step = 1e-5;
        (0..x.len())
            .map(|i| {
                let mut y = x.clone();
                let mut s = st.clone();
                y[i] += step;
                s.unpack(&y).unwrap();
                let hp = boundary_hamiltonian(mesh, g, &s).unwrap();
                y[i] -= 2.0 * step;
                s.unpack(&y).unwrap();
                let hm = boundary_hamiltonian(mesh, g, &s).unwrap();
                (hp - hm) / (2.0 * step)
            })
            .collect()
    }

    /// Euclidean gradient in packed coordinates from the variational one.
    fn euclidean(mesh: &CollarMesh, g: &LieAlgebraSpec, var: &BoundaryState) -> Vec<f64> {
        let vol = mesh.cell_volume();
        let mut low = var.clone();
        for b in [Block::A, Block::A0, Block::P, Block::Beta, Block::Lambda, Block::Lambda0] {
            let f = low.field_mut(b);
            for s in 0..f.sites {
                for c in 0..f.comps {
                    let v = g.lower(f.at(s, c));
                    f.at_mut(s, c).copy_from_slice(&v);
                }
            }
            f.scale(vol);
        }
        low.e.scale(vol);
        low.e0.scale(vol);
        low.pack()
    }

    #[test]
    fn gradient_matches_finite_differences_every_slot() {
        for (kind, d) in [(AlgebraKind::Lorentz(2), 2), (AlgebraKind::Su2, 2), (AlgebraKind::Lorentz(1), 1)] {
            let g = build_algebra(kind).unwrap();
            let mesh = CollarMesh::uniform(d, 3, 0.4, 4, 0.05).unwrap();
            let st = random_state(21, &mesh, &g, 0.4).unwrap();
            let an = euclidean(&mesh, &g, &hamiltonian_gradient(&mesh, &g, &st).unwrap());
            let fd = fd_gradient(&mesh, &g, &st);
            let scale = fd.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            for (i, (x, y)) in an.iter().zip(fd.iter()).enumerate() {
                assert!((x - y).abs() < 1e-7 * scale.max(1.0), "{kind:?} coord {i}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn rhs_special_cases() {
        let (mesh, g) = lorentz2();
        let mut st = random_state(2, &mesh, &g, 0.3).unwrap();
        st.a0.scale(0.0);
        st.lambda0.scale(0.0);
        let (adot, _) = evolution_rhs(&mesh, &g, &st).unwrap();
        assert_eq!(adot.max_abs(), 0.0);

        let ab = build_algebra(AlgebraKind::Abelian(1)).unwrap();
        let mesh1 = CollarMesh::uniform(1, 8, 0.25, 4, 0.05).unwrap();
        let mut st = random_state(2, &mesh1, &ab, 0.3).unwrap();
        st.beta.scale(0.0);
        st.a0.scale(0.0);
        let (_, pdot) = evolution_rhs(&mesh1, &ab, &st).unwrap();
        assert_eq!(pdot.max_abs(), 0.0);
    }

    #[test]
    fn flat_vacuum_is_exact_zero_and_stationary() {
        for (kind, d) in [(AlgebraKind::Lorentz(1), 1), (AlgebraKind::Lorentz(2), 2), (AlgebraKind::Lorentz(3), 3)] {
            let g = build_algebra(kind).unwrap();
            let mesh = CollarMesh::uniform(d, 3, 0.5, 4, 0.05).unwrap();
            let st = flat_vacuum(&mesh, &g).unwrap();
            let r = palatini_residuals(&mesh, &g, &st).unwrap().norms(&mesh);
            assert!(r.max() < 1e-12, "{kind:?} {r:?}");
            let recs = evolve(&mesh, &g, &st, 20, 0.01, None).unwrap();
            assert_eq!(recs.len(), 21);
            let drift = recs.last().unwrap().state.pack().iter().zip(st.pack()).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            assert!(drift < 1e-12);
        }
    }

    #[test]
    fn beta_perturbation_moves_only_beta_residual() {
        let (mesh, g) = lorentz2();
        let st = flat_vacuum(&mesh, &g).unwrap();
        let mut pert = st.clone();
        let delta = 0.01;
        for s in 0..mesh.n_sites() {
            pert.beta.at_mut(s, 1)[0] += delta;
            pert.beta.at_mut(s, 2)[0] -= delta;
        }
        let r = palatini_residuals(&mesh, &g, &pert).unwrap().norms(&mesh);
        let mut dfield = LatticeField::zeros(mesh.n_sites(), 4, 3);
        for s in 0..mesh.n_sites() {
            dfield.at_mut(s, 1)[0] = delta;
            dfield.at_mut(s, 2)[0] = -delta;
        }
        assert!((r.beta - field_norm(&mesh, &dfield)).abs() < 1e-15);
        assert!(r.gauss + r.flatness + r.p + r.torsion0 + r.torsion1 < 1e-15);
    }

    #[test]
    fn abelian_linear_evolution_and_richardson() {
        let ab = build_algebra(AlgebraKind::Abelian(1)).unwrap();
        let mesh = CollarMesh::uniform(1, 8, 0.25, 4, 0.05).unwrap();
        let mut st = random_state(3, &mesh, &ab, 0.3).unwrap();
        st.lambda0.scale(0.0);
        let recs = evolve(&mesh, &ab, &st, 10, 0.02, None).unwrap();
        let zero = LatticeField::zeros(8, 1, 1);
        let da0 = mesh.d_a(&ab, &zero, &st.a0).unwrap();
        let mut want = st.a.clone();
        want.axpy(0.2, &da0);
        assert!(recs[10].state.a.sub(&want).max_abs() < 1e-14);

        // fourth-order convergence on a non-abelian state
        let g = build_algebra(AlgebraKind::Su2).unwrap();
        let mesh = CollarMesh::uniform(2, 3, 0.5, 4, 0.05).unwrap();
        let st = random_state(9, &mesh, &g, 0.8).unwrap();
        let run = |n: usize| {
            let r = evolve(&mesh, &g, &st, n, 0.4 / n as f64, None).unwrap();
            r.last().unwrap().state.pack()
        };
        let reference = run(64);
        let err = |v: Vec<f64>| v.iter().zip(reference.iter()).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        let e1 = err(run(4));
        let e2 = err(run(8));
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "{ratio}");
    }

    #[test]
    fn incompatible_algebra_rejected() {
        let g = build_algebra(AlgebraKind::Su2).unwrap();
        let mesh = CollarMesh::uniform(1, 4, 0.5, 4, 0.05).unwrap();
        let st = BoundaryState::vacuum(&mesh, &g);
        assert!(matches!(boundary_hamiltonian(&mesh, &g, &st), Err(Error::UnsupportedAlgebra(_))));
    }
}
