use nalgebra::DMatrix;
use proptest::prelude::*;

use palatini_core::algebra::{build_algebra, AlgebraKind};
use palatini_core::fields::{metric_from_vierbein, palatini_tensor, random_bulk, random_state, restrict_to_boundary, VierbeinField};
use palatini_core::lattice::LatticeField;
use palatini_core::mesh::CollarMesh;
use palatini_core::reduction::{coisotropy_check, moment_map};

fn kinds() -> impl Strategy<Value = AlgebraKind> {
    prop_oneof![Just(AlgebraKind::Su2), Just(AlgebraKind::Lorentz(2)), Just(AlgebraKind::Lorentz(3)), Just(AlgebraKind::Abelian(2))]
}

fn vec_of(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn field(rng_vals: &[f64], sites: usize, comps: usize, dim: usize) -> LatticeField {
    LatticeField::from_fn(sites, comps, dim, |s, c, a| rng_vals[(s * comps + c) * dim + a])
}

/// Frames close enough to the identity to stay invertible.
fn frame(m: usize) -> impl Strategy<Value = DMatrix<f64>> {
    vec_of(m * m).prop_map(move |v| DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.0 } + 0.3 * v[i * m + j]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bracket_is_bilinear_and_skew(kind in kinds(), x in vec_of(6), y in vec_of(6), z in vec_of(6), s in -2.0f64..2.0) {
        let g = build_algebra(kind).unwrap();
        let n = g.dim;
        let (x, y, z) = (&x[..n], &y[..n], &z[..n]);
        let sx: Vec<f64> = x.iter().zip(z).map(|(a, b)| s * a + b).collect();
        let lhs = g.bracket(&sx, y).unwrap();
        let bx = g.bracket(x, y).unwrap();
        let bz = g.bracket(z, y).unwrap();
        let swapped = g.bracket(y, x).unwrap();
        for i in 0..n {
            prop_assert!((lhs[i] - (s * bx[i] + bz[i])).abs() < 1e-12);
            prop_assert!((bx[i] + swapped[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn pairing_is_ad_invariant(kind in kinds(), x in vec_of(6), y in vec_of(6), z in vec_of(6)) {
        let g = build_algebra(kind).unwrap();
        let n = g.dim;
        let (x, y, z) = (&x[..n], &y[..n], &z[..n]);
        let lhs = g.pair(&g.bracket(x, y).unwrap(), z);
        let rhs = -g.pair(y, &g.bracket(x, z).unwrap());
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn covariant_derivative_adjointness(kind in kinds(), vals in vec_of(3 * 9 * 2 * 6), d in 1usize..3) {
        let g = build_algebra(kind).unwrap();
        let mesh = CollarMesh::uniform(d, 3, 0.4, 2, 0.1).unwrap();
        let n = mesh.n_sites();
        let (dim, m) = (g.dim, n * d * g.dim);
        let a = field(&vals, n, d, dim);
        let p = field(&vals[m..], n, d, dim);
        let xi = field(&vals[2 * m..], n, 1, dim);
        let lhs = mesh.pairing(&g, &p, &mesh.d_a(&g, &a, &xi).unwrap()).unwrap();
        let rhs = -mesh.pairing(&g, &mesh.d_a_star(&g, &a, &p).unwrap(), &xi).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + lhs.abs()));
        let j = moment_map(&mesh, &g, &a, &p).unwrap();
        prop_assert!((mesh.pairing(&g, &j, &xi).unwrap() - lhs).abs() < 1e-11 * (1.0 + lhs.abs()));
    }

    #[test]
    fn palatini_tensor_is_doubly_skew(e in frame(4)) {
        let m = 4;
        let t = palatini_tensor(&e);
        let at = |mu: usize, nu: usize, i: usize, j: usize| t[((mu * m + nu) * m + i) * m + j];
        for mu in 0..m { for nu in 0..m { for i in 0..m { for j in 0..m {
            prop_assert!((at(mu, nu, i, j) + at(nu, mu, i, j)).abs() < 1e-14);
            prop_assert!((at(mu, nu, i, j) + at(mu, nu, j, i)).abs() < 1e-14);
        }}}}
    }

    #[test]
    fn frame_metric_is_lorentzian(e in frame(4)) {
        let mut v = VierbeinField::identity(1, 4);
        v.set_matrix(0, &e);
        let g = metric_from_vierbein(&v).unwrap().remove(0);
        let eig = g.symmetric_eigen().eigenvalues;
        prop_assert_eq!(eig.iter().filter(|&&x| x < 0.0).count(), 1);
        prop_assert_eq!(eig.iter().filter(|&&x| x > 0.0).count(), 3);
    }

    #[test]
    fn restriction_is_linear(s1 in 0u64..1000, s2 in 0u64..1000, alpha in -2.0f64..2.0) {
        let g = build_algebra(AlgebraKind::Su2).unwrap();
        let mesh = CollarMesh::uniform(2, 3, 0.5, 3, 0.1).unwrap();
        let x = random_bulk(s1, &mesh, &g, 1.0).unwrap();
        let y = random_bulk(s2, &mesh, &g, 1.0).unwrap();
        let mut z = x.clone();
        for j in 0..z.n_t() {
            z.a[j].scale(alpha);
            z.a[j].axpy(1.0, &y.a[j]);
            z.p[j].scale(alpha);
            z.p[j].axpy(1.0, &y.p[j]);
        }
        let (rx, ry, rz) = (restrict_to_boundary(&x).unwrap(), restrict_to_boundary(&y).unwrap(), restrict_to_boundary(&z).unwrap());
        let combo = |f: &LatticeField, h: &LatticeField| { let mut o = f.scaled(alpha); o.axpy(1.0, h); o };
        prop_assert!(rz.phi.sub(&combo(&rx.phi, &ry.phi)).max_abs() < 1e-14);
        prop_assert!(rz.p.sub(&combo(&rx.p, &ry.p)).max_abs() < 1e-14);
        prop_assert!(rz.beta.sub(&combo(&rx.beta, &ry.beta)).max_abs() < 1e-14);
    }

    #[test]
    fn boundary_state_pack_round_trip(seed in 0u64..1000) {
        let g = build_algebra(AlgebraKind::Lorentz(2)).unwrap();
        let mesh = CollarMesh::uniform(2, 3, 0.5, 3, 0.1).unwrap();
        let st = random_state(seed, &mesh, &g, 0.5).unwrap();
        let mut back = st.clone();
        back.unpack(&st.pack()).unwrap();
        prop_assert_eq!(back, st);
    }

    #[test]
    fn hypersurfaces_are_coisotropic(w in vec_of(6), x in vec_of(6)) {
        prop_assume!(w.iter().map(|v| v * v).sum::<f64>() > 1e-2);
        let omega = canonical(3);
        let c0: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
        let c = |v: &[f64]| vec![w.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() - c0];
        prop_assert!(coisotropy_check(&c, &omega, &x, 1e-8).unwrap().coisotropic);
    }

    #[test]
    fn conjugate_pairs_are_not_coisotropic(mask in 1usize..8, x in vec_of(6)) {
        let omega = canonical(3);
        let fixed: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
        let mut y = x.clone();
        for &i in &fixed { y[i] = 0.0; y[3 + i] = 0.0; }
        let c = |v: &[f64]| fixed.iter().flat_map(|&i| [v[i], v[3 + i]]).collect::<Vec<_>>();
        let r = coisotropy_check(&c, &omega, &y, 1e-8).unwrap();
        prop_assert!(!r.coisotropic);
        prop_assert_eq!(r.tangent_dim, 6 - 2 * fixed.len());
    }
}

fn canonical(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * n, 2 * n, |i, j| if j == i + n { 1.0 } else if i == j + n { -1.0 } else { 0.0 })
}
