//! Lie-algebra data: structure constants, the invariant pairing used to
//! contract internal indices, and a faithful matrix representation used by
//! finite gauge transformations.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// Which algebra to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgebraKind {
    /// `u(1)^n`, commutative.
    Abelian(usize),
    /// `su(2)` in the basis `[e_a, e_b] = eps_abc e_c`.
    Su2,
    /// Lorentz algebra `so(1,d)` in the basis `xi_{IJ}`, `I < J`.
    Lorentz(usize),
}

impl AlgebraKind {
    pub fn name(&self) -> String {
        match self {
            AlgebraKind::Abelian(n) => format!("abelian({n})"),
            AlgebraKind::Su2 => String::from("su2"),
            AlgebraKind::Lorentz(d) => format!("so(1,{d})"),
        }
    }
}

/// Diagonal Minkowski metric `diag(-1, +1, ..., +1)` on `m = 1 + d` dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinkowskiMetric {
    pub m: usize,
}

impl MinkowskiMetric {
    pub fn new(m: usize) -> Self {
        MinkowskiMetric { m }
    }

    #[inline]
    pub fn diag(&self, mu: usize) -> f64 {
        if mu == 0 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.m, |i, j| if i == j { self.diag(i) } else { 0.0 })
    }

    /// Lower (or equivalently raise, since `eta^2 = 1`) a single spacetime index.
    pub fn lower(&self, v: &[f64]) -> Vec<f64> {
        v.iter().enumerate().map(|(mu, x)| self.diag(mu) * x).collect()
    }
}

/// Structure constants and pairing of a finite-dimensional Lie algebra.
///
/// `structure[a * dim * dim + b * dim + c]` holds `eps^a_bc`, so that
/// `[xi_b, xi_c] = eps^a_bc xi_a`. All field components are stored with
/// the algebra index up; contractions go through `pairing`.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebraSpec {
    pub kind: AlgebraKind,
    pub dim: usize,
    pub structure: Vec<f64>,
    pub pairing: DMatrix<f64>,
    pub pairing_inverse: DMatrix<f64>,
    pub labels: Vec<String>,
    /// Defining representation, one matrix per basis element.
    pub generators: Vec<DMatrix<f64>>,
    gram_inverse: DMatrix<f64>,
}

/// Build an algebra of the requested kind.
pub fn build_algebra(kind: AlgebraKind) -> Result<LieAlgebraSpec> {
    let (generators, labels) = match kind {
        AlgebraKind::Abelian(0) => {
            return Err(Error::UnsupportedAlgebra(String::from("abelian(0)")))
        }
        AlgebraKind::Abelian(n) => {
            let gens = (0..n)
                .map(|i| DMatrix::from_fn(n, n, |r, c| if r == i && c == i { 1.0 } else { 0.0 }))
                .collect::<Vec<_>>();
            let labels = (0..n).map(|i| format!("u{i}")).collect();
            (gens, labels)
        }
        AlgebraKind::Su2 => {
            // real adjoint representation (L_a)_bc = -eps_abc
            let gens = (0..3)
                .map(|a| DMatrix::from_fn(3, 3, |b, c| -levi_civita3(a, b, c)))
                .collect::<Vec<_>>();
            let labels = vec![String::from("e1"), String::from("e2"), String::from("e3")];
            (gens, labels)
        }
        AlgebraKind::Lorentz(0) => return Err(Error::UnsupportedAlgebra(String::from("so(1,0)"))),
        AlgebraKind::Lorentz(d) => {
            let m = d + 1;
            let eta = MinkowskiMetric::new(m);
            let mut gens = Vec::new();
            let mut labels = Vec::new();
            for i in 0..m {
                for j in (i + 1)..m {
                    // (xi_IJ)^A_B = delta^A_I eta_JB - delta^A_J eta_IB
                    gens.push(DMatrix::from_fn(m, m, |a, b| {
                        let mut v = 0.0;
                        if a == i && b == j {
                            v += eta.diag(j);
                        }
                        if a == j && b == i {
                            v -= eta.diag(i);
                        }
                        v
                    }));
                    labels.push(format!("xi{i}{j}"));
                }
            }
            (gens, labels)
        }
    };
    let dim = generators.len();
    let gram = DMatrix::from_fn(dim, dim, |a, b| frobenius(&generators[a], &generators[b]));
    let gram_inverse = linalg::inverse(&gram).ok_or_else(|| {
        Error::UnsupportedAlgebra(format!("{}: degenerate representation", kind.name()))
    })?;

    let mut structure = vec![0.0; dim * dim * dim];
    for b in 0..dim {
        for c in 0..dim {
            let comm = &generators[b] * &generators[c] - &generators[c] * &generators[b];
            let coeffs = decompose(&generators, &gram_inverse, &comm);
            for a in 0..dim {
                structure[a * dim * dim + b * dim + c] = clean(coeffs[a]);
            }
        }
    }

    // Killing form trace(ad_a ad_b); identity when it degenerates.
    let mut killing = DMatrix::<f64>::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            let mut s = 0.0;
            for c in 0..dim {
                for e in 0..dim {
                    s += structure[c * dim * dim + a * dim + e] * structure[e * dim * dim + b * dim + c];
                }
            }
            killing[(a, b)] = s;
        }
    }
    let pairing = if linalg::rank(&killing, 1e-12) < dim {
        DMatrix::identity(dim, dim)
    } else {
        killing
    };
    let pairing_inverse = linalg::inverse(&pairing).expect("nondegenerate pairing");

    Ok(LieAlgebraSpec {
        kind,
        dim,
        structure,
        pairing,
        pairing_inverse,
        labels,
        generators,
        gram_inverse,
    })
}

fn levi_civita3(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

fn frobenius(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
}

fn decompose(gens: &[DMatrix<f64>], gram_inverse: &DMatrix<f64>, m: &DMatrix<f64>) -> Vec<f64> {
    let dim = gens.len();
    let rhs: Vec<f64> = gens.iter().map(|g| frobenius(g, m)).collect();
    (0..dim)
        .map(|a| (0..dim).map(|b| gram_inverse[(a, b)] * rhs[b]).sum())
        .collect()
}

// snap round-off in integer-valued constants
fn clean(x: f64) -> f64 {
    let r = libm::round(x);
    if libm::fabs(x - r) < 1e-12 {
        r
    } else {
        x
    }
}

impl LieAlgebraSpec {
    #[inline]
    pub fn eps(&self, a: usize, b: usize, c: usize) -> f64 {
        self.structure[a * self.dim * self.dim + b * self.dim + c]
    }

    pub fn is_abelian(&self) -> bool {
        self.structure.iter().all(|&x| x == 0.0)
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        self.check(y)?;
        let mut out = vec![0.0; self.dim];
        self.bracket_into(x, y, &mut out);
        Ok(out)
    }

    /// `out += [x, y]`, unchecked.
    #[inline]
    pub fn bracket_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for a in 0..n {
            let row = &self.structure[a * n * n..(a + 1) * n * n];
            let mut s = 0.0;
            for b in 0..n {
                if x[b] == 0.0 {
                    continue;
                }
                for c in 0..n {
                    s += row[b * n + c] * x[b] * y[c];
                }
            }
            out[a] += s;
        }
    }

    /// `out += T(x, y)` where `<T(x, y), z> = -<y, [x, z]>` for every `z`.
    ///
    /// This is the exact transpose of `ad_x` with respect to the pairing; for
    /// an ad-invariant pairing it coincides with `[x, y]`.
    #[inline]
    pub fn bracket_transpose_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let n = self.dim;
        let gy = self.lower(y);
        let mut v = vec![0.0; n];
        for b in 0..n {
            if gy[b] == 0.0 {
                continue;
            }
            for c in 0..n {
                if x[c] == 0.0 {
                    continue;
                }
                for d in 0..n {
                    v[d] += gy[b] * self.eps(b, c, d) * x[c];
                }
            }
        }
        for a in 0..n {
            let mut s = 0.0;
            for d in 0..n {
                s += self.pairing_inverse[(a, d)] * v[d];
            }
            out[a] -= s;
        }
    }

    /// Invariant pairing `<x, y>`.
    pub fn pair(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for a in 0..n {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                s += x[a] * self.pairing[(a, b)] * y[b];
            }
        }
        s
    }

    pub fn lower(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|a| (0..self.dim).map(|b| self.pairing[(a, b)] * x[b]).sum())
            .collect()
    }

    pub fn raise(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|a| (0..self.dim).map(|b| self.pairing_inverse[(a, b)] * x[b]).sum())
            .collect()
    }

    /// Matrix of `x` in the defining representation.
    pub fn to_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.generators[0].nrows();
        let mut m = DMatrix::zeros(n, n);
        for (a, g) in self.generators.iter().enumerate() {
            if x[a] != 0.0 {
                m += g * x[a];
            }
        }
        m
    }

    /// Orthogonal projection of a matrix onto the algebra, returned as coefficients.
    pub fn from_matrix(&self, m: &DMatrix<f64>) -> Vec<f64> {
        decompose(&self.generators, &self.gram_inverse, m)
    }

    pub fn rep_dim(&self) -> usize {
        self.generators[0].nrows()
    }

    /// Largest Jacobi-identity violation over all basis quadruples.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut s = 0.0;
                        for e in 0..n {
                            s += self.eps(e, b, c) * self.eps(a, e, d)
                                + self.eps(e, c, d) * self.eps(a, e, b)
                                + self.eps(e, d, b) * self.eps(a, e, c);
                        }
                        worst = worst.max(libm::fabs(s));
                    }
                }
            }
        }
        worst
    }

    /// Largest violation of `<[x,y],z> + <y,[x,z]> = 0` on basis triples.
    pub fn ad_invariance_residual(&self) -> f64 {
        let n = self.dim;
        let basis = |i: usize| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v
        };
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (x, y, z) = (basis(i), basis(j), basis(k));
                    let xy = self.bracket(&x, &y).unwrap();
                    let xz = self.bracket(&x, &z).unwrap();
                    worst = worst.max(libm::fabs(self.pair(&xy, &z) + self.pair(&y, &xz)));
                }
            }
        }
        worst
    }
}
