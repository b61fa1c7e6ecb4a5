//! Bulk Yang-Mills fields on the collar: Hamiltonian density, actions, the
//! Euler-Lagrange one-form and the topological-limit flow.

use alloc::vec;
use alloc::vec::Vec;

use super::{curvature, field_norm};
use crate::algebra::{LieAlgebraSpec, MinkowskiMetric};
use crate::error::{Error, Result};
use crate::fields::{palatini_map, random_bulk, BulkField, VierbeinField};
use crate::lattice::LatticeField;
use crate::mesh::CollarMesh;
use crate::rng::Rng;

/// Action split into time cells. `per_slice[j - 1]` is the cell ending at slice `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionValue {
    pub total: f64,
    pub per_slice: Vec<f64>,
}

impl ActionValue {
    fn from_cells(per_slice: Vec<f64>, dt: f64) -> Self {
        let total = per_slice.iter().sum::<f64>() * dt;
        ActionValue { total, per_slice }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) {
        return Err(Error::NegativeCoupling(lambda));
    }
    Ok(())
}

fn check_bulk(mesh: &CollarMesh, spec: &LieAlgebraSpec, chi: &BulkField) -> Result<()> {
    let m = mesh.d + 1;
    if chi.m != m || chi.n_t() != mesh.n_t || chi.p.len() != mesh.n_t {
        return Err(Error::MeshMismatch);
    }
    for (a, p) in chi.a.iter().zip(chi.p.iter()) {
        mesh.check_field(a)?;
        mesh.check_field(p)?;
        if a.comps != m || p.comps != m * m || a.dim != spec.dim || p.dim != spec.dim {
            return Err(Error::MeshMismatch);
        }
    }
    Ok(())
}

/// Per-site `H = 1/2 <P^{mu nu}, [A_mu, A_nu]> + lambda/4 eta_mu eta_nu <P^{mu nu}, P^{mu nu}>`
/// for one time slice (`A` with `m` components, `P` with `m * m`).
pub fn bulk_hamiltonian(spec: &LieAlgebraSpec, a: &LatticeField, p: &LatticeField, lambda: f64) -> Result<LatticeField> {
    check_lambda(lambda)?;
    let m = a.comps;
    if p.comps != m * m || p.sites != a.sites || a.dim != spec.dim || p.dim != spec.dim {
        return Err(Error::MeshMismatch);
    }
    let eta = MinkowskiMetric::new(m);
    let mut out = LatticeField::zeros(a.sites, 1, 1);
    let mut br = vec![0.0; spec.dim];
    for s in 0..a.sites {
        let mut h = 0.0;
        for mu in 0..m {
            for nu in 0..m {
                let pmn = p.at(s, mu * m + nu);
                if !spec.is_abelian() && mu != nu {
                    br.iter_mut().for_each(|x| *x = 0.0);
                    spec.bracket_into(a.at(s, mu), a.at(s, nu), &mut br);
                    h += 0.5 * spec.pair(pmn, &br);
                }
                if lambda != 0.0 {
                    h += 0.25 * lambda * eta.diag(mu) * eta.diag(nu) * spec.pair(pmn, pmn);
                }
            }
        }
        out.data[s] = h;
    }
    Ok(out)
}

/// First-order Yang-Mills action on the collar.
///
/// Cell `j >= 1` contributes `<P^{mu 0}, (A_j - A_{j-1}) / dt> + <P^{mu k}, partial_k A_mu> - H`
/// evaluated on slice `j`; slice 0 only enters through the time difference.
pub fn action_ym(mesh: &CollarMesh, spec: &LieAlgebraSpec, chi: &BulkField, lambda: f64) -> Result<ActionValue> {
    check_lambda(lambda)?;
    check_bulk(mesh, spec, chi)?;
    let m = chi.m;
    let d = mesh.d;
    let n = mesh.n_sites();
    let vol = mesh.cell_volume();
    let mut cells = Vec::with_capacity(mesh.n_t.saturating_sub(1));
    let mut dk = LatticeField::zeros(n, m, spec.dim);
    for j in 1..mesh.n_t {
        let (a, ap, p) = (&chi.a[j], &chi.a[j - 1], &chi.p[j]);
        let h = bulk_hamiltonian(spec, a, p, lambda)?;
        let mut s_sum = 0.0;
        for s in 0..n {
            for mu in 0..m {
                let diff: Vec<f64> =
                    a.at(s, mu).iter().zip(ap.at(s, mu)).map(|(x, y)| (x - y) / mesh.dt).collect();
                s_sum += spec.pair(p.at(s, mu * m), &diff);
            }
        }
        for k in 0..d {
            dk.data.iter_mut().for_each(|x| *x = 0.0);
            mesh.partial_add(a, k, 1.0, &mut dk);
            for s in 0..n {
                for mu in 0..m {
                    s_sum += spec.pair(p.at(s, mu * m + k + 1), dk.at(s, mu));
                }
            }
        }
        for s in 0..n {
            s_sum -= h.data[s];
        }
        cells.push(s_sum * vol);
    }
    Ok(ActionValue::from_cells(cells, mesh.dt))
}

/// Gradient of the slice Hamiltonian density in `A_mu`, in upper-index form.
fn hamiltonian_grad_a(spec: &LieAlgebraSpec, a: &LatticeField, p: &LatticeField, out: &mut LatticeField, alpha: f64) {
    let m = a.comps;
    let mut t = vec![0.0; spec.dim];
    for s in 0..a.sites {
        for mu in 0..m {
            t.iter_mut().for_each(|x| *x = 0.0);
            for nu in 0..m {
                spec.bracket_transpose_into(a.at(s, nu), p.at(s, mu * m + nu), &mut t);
                let neg: Vec<f64> = p.at(s, nu * m + mu).iter().map(|x| -x).collect();
                spec.bracket_transpose_into(a.at(s, nu), &neg, &mut t);
            }
            let o = out.at_mut(s, mu);
            for i in 0..spec.dim {
                o[i] += alpha * 0.5 * t[i];
            }
        }
    }
}

/// Euler-Lagrange one-form of [`action_ym`] evaluated on the variation `u`.
///
/// Built from the discrete Hamilton residuals: `D_nu A_mu - dH/dP` paired with
/// `dP` on cells `j >= 1`, and `-(P_{j+1} - P_j)/dt - partial_k P^{mu k} - dH/dA`
/// paired with `dA`. At the inner end the missing slice is taken as zero
/// momentum; at the outer end the time part is the boundary term.
pub fn el_oneform(mesh: &CollarMesh, spec: &LieAlgebraSpec, chi: &BulkField, u: &BulkField, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_bulk(mesh, spec, chi)?;
    check_bulk(mesh, spec, u)?;
    let m = chi.m;
    let d = mesh.d;
    let n = mesh.n_sites();
    let nt = mesh.n_t;
    let dt = mesh.dt;
    let eta = MinkowskiMetric::new(m);
    let mut total = 0.0;
    let mut ra = LatticeField::zeros(n, m, spec.dim);
    let mut br = vec![0.0; spec.dim];
    for j in 0..nt {
        // A residual
        ra.data.iter_mut().for_each(|x| *x = 0.0);
        if j + 1 < nt {
            for s in 0..n {
                for mu in 0..m {
                    let next = chi.p[j + 1].at(s, mu * m);
                    let o = ra.at_mut(s, mu);
                    for i in 0..spec.dim {
                        o[i] -= next[i];
                    }
                }
            }
            if j >= 1 {
                for s in 0..n {
                    for mu in 0..m {
                        let cur = chi.p[j].at(s, mu * m);
                        let o = ra.at_mut(s, mu);
                        for i in 0..spec.dim {
                            o[i] += cur[i];
                        }
                    }
                }
            }
        }
        if j >= 1 {
            let p = &chi.p[j];
            for k in 0..d {
                let pk = LatticeField::from_fn(n, m, spec.dim, |s, mu, i| p.at(s, mu * m + k + 1)[i]);
                mesh.partial_add(&pk, k, -dt, &mut ra);
            }
            hamiltonian_grad_a(spec, &chi.a[j], p, &mut ra, -dt);
        }
        total += mesh.pairing(spec, &ra, &u.a[j])?;

        // P residual
        if j >= 1 {
            let (a, ap, p) = (&chi.a[j], &chi.a[j - 1], &chi.p[j]);
            let mut dk = vec![LatticeField::zeros(n, m, spec.dim); d];
            for (k, f) in dk.iter_mut().enumerate() {
                mesh.partial_add(a, k, 1.0, f);
            }
            let mut acc = 0.0;
            for s in 0..n {
                for mu in 0..m {
                    for nu in 0..m {
                        let mut r: Vec<f64> = if nu == 0 {
                            a.at(s, mu).iter().zip(ap.at(s, mu)).map(|(x, y)| (x - y) / dt).collect()
                        } else {
                            dk[nu - 1].at(s, mu).to_vec()
                        };
                        br.iter_mut().for_each(|x| *x = 0.0);
                        spec.bracket_into(a.at(s, mu), a.at(s, nu), &mut br);
                        let pmn = p.at(s, mu * m + nu);
                        let w = 0.5 * lambda * eta.diag(mu) * eta.diag(nu);
                        for i in 0..spec.dim {
                            r[i] -= 0.5 * br[i] + w * pmn[i];
                        }
                        acc += spec.pair(&r, u.p[j].at(s, mu * m + nu));
                    }
                }
            }
            total += acc * dt * mesh.cell_volume();
        }
    }
    Ok(total)
}

/// Canonical boundary one-form `<P^{mu 0}, dA_mu>` on the outer slice.
pub fn boundary_term(mesh: &CollarMesh, spec: &LieAlgebraSpec, chi: &BulkField, u: &BulkField) -> Result<f64> {
    check_bulk(mesh, spec, chi)?;
    check_bulk(mesh, spec, u)?;
    let last = mesh.n_t - 1;
    let m = chi.m;
    let n = mesh.n_sites();
    let p0 = LatticeField::from_fn(n, m, spec.dim, |s, mu, i| chi.p[last].at(s, mu * m)[i]);
    mesh.pairing(spec, &p0, &u.a[last])
}

/// Outcome of comparing `dS(U)` with `EL(U) + <p, dphi>` on the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub el: f64,
    pub boundary: f64,
    pub gap: f64,
}

impl FundamentalCheck {
    pub fn relative_gap(&self) -> f64 {
        self.gap / libm::fabs(self.lhs).max(f64::MIN_POSITIVE)
    }
}

/// Finite-difference step used by [`fundamental_check`].
pub const FD_STEP: f64 = 1e-5;

/// Central difference of [`action_ym`] along the unit-normalized `u`
/// against the Euler-Lagrange form plus boundary term.
pub fn fundamental_check(
    mesh: &CollarMesh,
    spec: &LieAlgebraSpec,
    chi: &BulkField,
    u: &BulkField,
    lambda: f64,
) -> Result<FundamentalCheck> {
    check_bulk(mesh, spec, chi)?;
    check_bulk(mesh, spec, u)?;
    let x = chi.pack();
    let mut du = u.pack();
    let norm = libm::sqrt(du.iter().map(|v| v * v).sum::<f64>());
    if norm == 0.0 {
        return Err(Error::InvalidArgument("variation must be nonzero"));
    }
    du.iter_mut().for_each(|v| *v /= norm);
    let mut un = u.clone();
    un.unpack(&du)?;
    let shifted = |sign: f64| -> Result<f64> {
        let mut c = chi.clone();
        let y: Vec<f64> = x.iter().zip(du.iter()).map(|(a, b)| a + sign * FD_STEP * b).collect();
        c.unpack(&y)?;
        Ok(action_ym(mesh, spec, &c, lambda)?.total)
    };
    let lhs = (shifted(1.0)? - shifted(-1.0)?) / (2.0 * FD_STEP);
    let el = el_oneform(mesh, spec, chi, &un, lambda)?;
    let boundary = boundary_term(mesh, spec, chi, &un)?;
    let rhs = el + boundary;
    Ok(FundamentalCheck { lhs, rhs, el, boundary, gap: libm::fabs(lhs - rhs) })
}

/// `P(e)` on every slice.
pub fn palatini_bulk(frames: &[VierbeinField]) -> Result<Vec<LatticeField>> {
    frames.iter().map(palatini_map).collect()
}

/// Topological action restricted to `P = P(e)`.
pub fn palatini_action(mesh: &CollarMesh, spec: &LieAlgebraSpec, a: &[LatticeField], frames: &[VierbeinField]) -> Result<ActionValue> {
    let chi = BulkField { m: mesh.d + 1, a: a.to_vec(), p: palatini_bulk(frames)? };
    action_ym(mesh, spec, &chi, 0.0)
}

/// Topological action plus `<Lambda, P - P(e)>` summed over `mu < nu` on cells `j >= 1`.
pub fn extended_action(
    mesh: &CollarMesh,
    spec: &LieAlgebraSpec,
    chi: &BulkField,
    lambda_mult: &[LatticeField],
    frames: &[VierbeinField],
) -> Result<ActionValue> {
    let base = action_ym(mesh, spec, chi, 0.0)?;
    if lambda_mult.len() != mesh.n_t || frames.len() != mesh.n_t {
        return Err(Error::MeshMismatch);
    }
    let m = chi.m;
    let pe = palatini_bulk(frames)?;
    let mut cells = base.per_slice.clone();
    for j in 1..mesh.n_t {
        let lam = &lambda_mult[j];
        if !lam.same_shape(&chi.p[j]) || pe[j].dim != spec.dim {
            return Err(Error::MeshMismatch);
        }
        let mut s_sum = 0.0;
        for s in 0..mesh.n_sites() {
            for mu in 0..m {
                for nu in (mu + 1)..m {
                    let c = mu * m + nu;
                    let r: Vec<f64> = chi.p[j].at(s, c).iter().zip(pe[j].at(s, c)).map(|(x, y)| x - y).collect();
                    s_sum += spec.pair(lam.at(s, c), &r);
                }
            }
        }
        cells[j - 1] += s_sum * mesh.cell_volume();
    }
    Ok(ActionValue::from_cells(cells, mesh.dt))
}

/// Residual sizes of a topological-limit flow at the boundary slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaFlowDiagnostics {
    pub lambda: f64,
    pub flatness: f64,
    pub gauss: f64,
}

/// Temporal-gauge flow across the collar from `t = -epsilon` to `0`:
/// `da_k/dt = -lambda p_k`, `dp_k/dt = -sum_j (partial_j beta^{kj} + [a_j, beta^{kj}])`,
/// seeded with `a = 0`, a constant random `p` and a random fixed skew `beta`.
/// Returns `|F_a|` and `|d_a^* p|` at `t = 0`; both vanish at `lambda = 0`.
pub fn lambda_flow(mesh: &CollarMesh, spec: &LieAlgebraSpec, seed: u64, lambda: f64, amplitude: f64) -> Result<LambdaFlowDiagnostics> {
    check_lambda(lambda)?;
    let (n, d, g) = (mesh.n_sites(), mesh.d, spec.dim);
    let mut rng = Rng::new(seed);
    let p_const: Vec<f64> = (0..d * g).map(|_| amplitude * rng.symmetric()).collect();
    let mut p = LatticeField::from_fn(n, d, g, |_, k, i| p_const[k * g + i]);
    let mut beta = LatticeField::zeros(n, d * d, g);
    for s in 0..n {
        for k in 0..d {
            for j in (k + 1)..d {
                for i in 0..g {
                    let v = amplitude * rng.symmetric();
                    beta.at_mut(s, k * d + j)[i] = v;
                    beta.at_mut(s, j * d + k)[i] = -v;
                }
            }
        }
    }
    let mut a = LatticeField::zeros(n, d, g);
    let rhs = |a: &LatticeField, p: &LatticeField| -> (LatticeField, LatticeField) {
        let da = p.scaled(-lambda);
        let mut dp = LatticeField::zeros(n, d, g);
        for k in 0..d {
            let mut acc = LatticeField::zeros(n, 1, g);
            for j in 0..d {
                let b = LatticeField::from_fn(n, 1, g, |s, _, i| beta.at(s, k * d + j)[i]);
                mesh.covariant_partial_add(spec, a, &b, j, -1.0, &mut acc);
            }
            dp.set_component(k, &acc);
        }
        (da, dp)
    };
    let h = mesh.dt;
    for _ in 0..mesh.n_t {
        let (k1a, k1p) = rhs(&a, &p);
        let mut a2 = a.clone();
        a2.axpy(0.5 * h, &k1a);
        let mut p2 = p.clone();
        p2.axpy(0.5 * h, &k1p);
        let (k2a, k2p) = rhs(&a2, &p2);
        let mut a3 = a.clone();
        a3.axpy(0.5 * h, &k2a);
        let mut p3 = p.clone();
        p3.axpy(0.5 * h, &k2p);
        let (k3a, k3p) = rhs(&a3, &p3);
        let mut a4 = a.clone();
        a4.axpy(h, &k3a);
        let mut p4 = p.clone();
        p4.axpy(h, &k3p);
        let (k4a, k4p) = rhs(&a4, &p4);
        for (k, w) in [(&k1a, 1.0), (&k2a, 2.0), (&k3a, 2.0), (&k4a, 1.0)] {
            a.axpy(h * w / 6.0, k);
        }
        for (k, w) in [(&k1p, 1.0), (&k2p, 2.0), (&k3p, 2.0), (&k4p, 1.0)] {
            p.axpy(h * w / 6.0, k);
        }
    }
    let f = curvature(mesh, spec, &a)?;
    let gauss = mesh.d_a_star(spec, &a, &p)?;
    Ok(LambdaFlowDiagnostics { lambda, flatness: field_norm(mesh, &f), gauss: field_norm(mesh, &gauss) })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| libm::log(*v)).collect();
    let ly: Vec<f64> = y.iter().map(|v| libm::log(*v)).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in lx.iter().zip(ly.iter()) {
        num += (a - mx) * (b - my);
        den += (a - mx) * (a - mx);
    }
    num / den
}

/// Run [`lambda_flow`] for each coupling and fit the log-log slopes of both residuals.
pub fn lambda_sweep(
    mesh: &CollarMesh,
    spec: &LieAlgebraSpec,
    seed: u64,
    lambdas: &[f64],
    amplitude: f64,
) -> Result<(Vec<LambdaFlowDiagnostics>, f64, f64)> {
    if lambdas.len() < 2 || lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidArgument("need at least two positive couplings"));
    }
    let diags = lambdas
        .iter()
        .map(|&l| lambda_flow(mesh, spec, seed, l, amplitude))
        .collect::<Result<Vec<_>>>()?;
    let f: Vec<f64> = diags.iter().map(|d| d.flatness).collect();
    let g: Vec<f64> = diags.iter().map(|d| d.gauss).collect();
    Ok((diags.clone(), loglog_slope(lambdas, &f), loglog_slope(lambdas, &g)))
}

/// Random bulk field and variation pair for structural checks.
pub fn random_bulk_pair(mesh: &CollarMesh, spec: &LieAlgebraSpec, seed: u64, amplitude: f64) -> Result<(BulkField, BulkField)> {
    Ok((random_bulk(seed, mesh, spec, amplitude)?, random_bulk(seed ^ 0x9e37_79b9_7f4a_7c15, mesh, spec, 1.0)?))
}
