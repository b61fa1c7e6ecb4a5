//! Curvature, actions, the Euler-Lagrange form and boundary evolution.


mod boundary;
mod bulk;


pub use boundary::*;
pub use bulk::*;

use alloc::vec;

use crate::algebra::LieAlgebraSpec;
use crate::error::{Error, Result};
use crate::lattice::LatticeField;
use crate::mesh::CollarMesh;

/// `F_kj = partial_k a_j - partial_j a_k + [a_k, a_j]`, all `d * d` components.
pub fn curvature(mesh: &CollarMesh, spec: &LieAlgebraSpec, a: &LatticeField) -> Result<LatticeField> {
    mesh.check_field(a)?;
    let d = mesh.d;
    if a.comps != d || a.dim != spec.dim {
        return Err(Error::DimensionMismatch { expected: d * spec.dim, got: a.comps * a.dim });
    }
    let n = a.sites;
    let g = spec.dim;
    let mut da = vec![LatticeField::zeros(n, d, g); d];
    for (k, out) in da.iter_mut().enumerate() {
        mesh.partial_add(a, k, 1.0, out);
    }
    let mut f = LatticeField::zeros(n, d * d, g);
    let mut tmp = vec![0.0; g];
    for s in 0..n {
        for k in 0..d {
            for j in 0..d {
                if j == k {
                    continue;
                }
                tmp.iter_mut().for_each(|x| *x = 0.0);
                spec.bracket_into(a.at(s, k), a.at(s, j), &mut tmp);
                let dkj = da[k].at(s, j);
                let djk = da[j].at(s, k);
                let o = f.at_mut(s, k * d + j);
                for i in 0..g {
                    o[i] = dkj[i] - djk[i] + tmp[i];
                }
            }
        }
    }
    Ok(f)
}

/// Discrete L2 norm `sqrt(sum |x|^2 * cell volume)` of the raw coefficients.
pub fn field_norm(mesh: &CollarMesh, f: &LatticeField) -> f64 {
    libm::sqrt(f.norm_sq() * mesh.cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_algebra, AlgebraKind};
    use crate::rng::Rng;

    #[test]
    fn curvature_of_zero_and_pure_gradient() {
        let g = build_algebra(AlgebraKind::Abelian(1)).unwrap();
        let mesh = CollarMesh::new(alloc::vec![8, 8], alloc::vec![0.3, 0.2], 1, 0.1).unwrap();
        let n = mesh.n_sites();
        let z = LatticeField::zeros(n, 2, 1);
        assert_eq!(curvature(&mesh, &g, &z).unwrap().max_abs(), 0.0);
        let mut rng = Rng::new(4);
        let chi = LatticeField::from_fn(n, 1, 1, |_, _, _| rng.symmetric());
        let zero = LatticeField::zeros(n, 2, 1);
        let a = mesh.d_a(&g, &zero, &chi).unwrap();
        assert!(curvature(&mesh, &g, &a).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn curvature_matches_pointwise_oracle() {
        let g = build_algebra(AlgebraKind::Su2).unwrap();
        let mesh = CollarMesh::new(alloc::vec![4, 5], alloc::vec![0.3, 0.2], 1, 0.1).unwrap();
        let n = mesh.n_sites();
        let mut rng = Rng::new(6);
        let a = LatticeField::from_fn(n, 2, 3, |_, _, _| rng.symmetric());
        let f = curvature(&mesh, &g, &a).unwrap();
        for s in 0..n {
            let c = mesh.coords(s);
            let shift = |k: usize, up: bool| {
                let mut cc = c.clone();
                let nk = mesh.sites_per_dim[k];
                cc[k] = if up { (c[k] + 1) % nk } else { (c[k] + nk - 1) % nk };
                mesh.site_index(&cc)
            };
            for k in 0..2 {
                for j in 0..2 {
                    for i in 0..3 {
                        let dk = (a.at(shift(k, true), j)[i] - a.at(shift(k, false), j)[i]) / (2.0 * mesh.h[k]);
                        let dj = (a.at(shift(j, true), k)[i] - a.at(shift(j, false), k)[i]) / (2.0 * mesh.h[j]);
                        let mut br = 0.0;
                        for b in 0..3 {
                            for cc in 0..3 {
                                br += g.eps(i, b, cc) * a.at(s, k)[b] * a.at(s, j)[cc];
                            }
                        }
                        let want = if k == j { 0.0 } else { dk - dj + br };
                        assert!((f.at(s, k * 2 + j)[i] - want).abs() < 1e-13);
                    }
                }
            }
        }
    }
}
