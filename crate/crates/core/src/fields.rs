//! Bulk and boundary field containers, vierbeins and the Palatini map.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;
use nalgebra::DMatrix;

use crate::algebra::{LieAlgebraSpec, MinkowskiMetric};
use crate::error::{Error, Result};
use crate::lattice::LatticeField;
use crate::linalg;
use crate::mesh::CollarMesh;
use crate::rng::Rng;

/// Index of the pair `I < J` in the lexicographic `xi_IJ` basis of `so(1, m-1)`.
pub fn pair_index(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < m);
    i * (2 * m - i - 1) / 2 + (j - i - 1)
}

/// Number of independent skew pairs in `m` dimensions.
pub fn n_pairs(m: usize) -> usize {
    m * (m - 1) / 2
}

/// Connection `A_mu` and momentum `P^{mu nu}` on every time slice of the collar.
///
/// Slice `j` sits at `mesh.slice_time(j)`; the last slice is the boundary.
/// `p[j]` stores all `m * m` components, index `mu * m + nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct BulkField {
    pub m: usize,
    pub a: Vec<LatticeField>,
    pub p: Vec<LatticeField>,
}

impl BulkField {
    pub fn zeros(mesh: &CollarMesh, spec: &LieAlgebraSpec) -> Self {
        let m = mesh.d + 1;
        let n = mesh.n_sites();
        BulkField {
            m,
            a: vec![LatticeField::zeros(n, m, spec.dim); mesh.n_t],
            p: vec![LatticeField::zeros(n, m * m, spec.dim); mesh.n_t],
        }
    }

    pub fn n_t(&self) -> usize {
        self.a.len()
    }

    /// Set `P^{mu nu} = v` and `P^{nu mu} = -v` at one site.
    pub fn set_p(&mut self, slice: usize, site: usize, mu: usize, nu: usize, v: &[f64]) {
        let m = self.m;
        self.p[slice].at_mut(site, mu * m + nu).copy_from_slice(v);
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        self.p[slice].at_mut(site, nu * m + mu).copy_from_slice(&neg);
    }

    /// Largest `|P^{mu nu} + P^{nu mu}|` over all slices and sites.
    pub fn skew_defect(&self) -> f64 {
        let m = self.m;
        let mut worst = 0.0f64;
        for p in &self.p {
            for s in 0..p.sites {
                for mu in 0..m {
                    for nu in 0..m {
                        for (x, y) in p.at(s, mu * m + nu).iter().zip(p.at(s, nu * m + mu)) {
                            worst = worst.max(libm::fabs(x + y));
                        }
                    }
                }
            }
        }
        worst
    }

    /// Number of independent coordinates: all of `A`, and `P^{mu nu}` for `mu < nu`.
    pub fn packed_len(&self) -> usize {
        let per = self.a[0].sites * self.a[0].dim;
        self.n_t() * per * (self.m + n_pairs(self.m))
    }

    pub fn pack(&self) -> Vec<f64> {
        let m = self.m;
        let mut out = Vec::with_capacity(self.packed_len());
        for j in 0..self.n_t() {
            out.extend_from_slice(&self.a[j].data);
            let p = &self.p[j];
            for s in 0..p.sites {
                for mu in 0..m {
                    for nu in (mu + 1)..m {
                        out.extend_from_slice(p.at(s, mu * m + nu));
                    }
                }
            }
        }
        out
    }

    pub fn unpack(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.packed_len() {
            return Err(Error::DimensionMismatch { expected: self.packed_len(), got: x.len() });
        }
        let m = self.m;
        let mut o = 0;
        for j in 0..self.n_t() {
            let na = self.a[j].data.len();
            self.a[j].data.copy_from_slice(&x[o..o + na]);
            o += na;
            let dim = self.p[j].dim;
            for s in 0..self.p[j].sites {
                for mu in 0..m {
                    for nu in (mu + 1)..m {
                        let v = &x[o..o + dim];
                        self.set_p(j, s, mu, nu, v);
                        o += dim;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Data induced on the boundary slice: the full connection, the normal
/// momentum `p^k = P^{k0}` and the tangential part `beta^{kj} = P^{kj}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRestriction {
    pub phi: LatticeField,
    pub p: LatticeField,
    pub beta: LatticeField,
}

pub fn restrict_to_boundary(chi: &BulkField) -> Result<BoundaryRestriction> {
    let last = chi.n_t().checked_sub(1).ok_or(Error::InvalidArgument("bulk field has no time slices"))?;
    let m = chi.m;
    let d = m - 1;
    let a = &chi.a[last];
    let pp = &chi.p[last];
    let mut p = LatticeField::zeros(a.sites, d, a.dim);
    let mut beta = LatticeField::zeros(a.sites, d * d, a.dim);
    for s in 0..a.sites {
        for k in 0..d {
            p.at_mut(s, k).copy_from_slice(pp.at(s, (k + 1) * m));
            for j in 0..d {
                beta.at_mut(s, k * d + j).copy_from_slice(pp.at(s, (k + 1) * m + j + 1));
            }
        }
    }
    Ok(BoundaryRestriction { phi: a.clone(), p, beta })
}

/// Which slot of a [`BoundaryState`] a packed coordinate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    A,
    A0,
    P,
    Beta,
    Lambda,
    Lambda0,
    E,
    E0,
}

impl Block {
    pub const ALL: [Block; 8] =
        [Block::A, Block::A0, Block::P, Block::Beta, Block::Lambda, Block::Lambda0, Block::E, Block::E0];
}

/// Boundary fields `(a, a0, p, beta, Lambda, Lambda0, e, e0)`.
///
/// `beta` and `lambda` hold all `d * d` spatial components (`k * d + j`) and
/// are kept skew. Internal indices of `lambda`, `lambda0` and the momenta
/// live in the algebra; the vierbein legs `e^k_I`, `e^0_I` carry a plain
/// internal index `I < m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryState {
    pub a: LatticeField,
    pub a0: LatticeField,
    pub p: LatticeField,
    pub beta: LatticeField,
    pub lambda: LatticeField,
    pub lambda0: LatticeField,
    pub e: LatticeField,
    pub e0: LatticeField,
}

impl BoundaryState {
    /// All fields zero and the vierbein equal to the identity.
    pub fn vacuum(mesh: &CollarMesh, spec: &LieAlgebraSpec) -> Self {
        let (n, d, g) = (mesh.n_sites(), mesh.d, spec.dim);
        let m = d + 1;
        BoundaryState {
            a: LatticeField::zeros(n, d, g),
            a0: LatticeField::zeros(n, 1, g),
            p: LatticeField::zeros(n, d, g),
            beta: LatticeField::zeros(n, d * d, g),
            lambda: LatticeField::zeros(n, d * d, g),
            lambda0: LatticeField::zeros(n, d, g),
            e: LatticeField::from_fn(n, d, m, |_, k, i| if i == k + 1 { 1.0 } else { 0.0 }),
            e0: LatticeField::from_fn(n, 1, m, |_, _, i| if i == 0 { 1.0 } else { 0.0 }),
        }
    }

    pub fn d(&self) -> usize {
        self.a.comps
    }

    pub fn sites(&self) -> usize {
        self.a.sites
    }

    pub fn field(&self, b: Block) -> &LatticeField {
        match b {
            Block::A => &self.a,
            Block::A0 => &self.a0,
            Block::P => &self.p,
            Block::Beta => &self.beta,
            Block::Lambda => &self.lambda,
            Block::Lambda0 => &self.lambda0,
            Block::E => &self.e,
            Block::E0 => &self.e0,
        }
    }

    pub fn field_mut(&mut self, b: Block) -> &mut LatticeField {
        match b {
            Block::A => &mut self.a,
            Block::A0 => &mut self.a0,
            Block::P => &mut self.p,
            Block::Beta => &mut self.beta,
            Block::Lambda => &mut self.lambda,
            Block::Lambda0 => &mut self.lambda0,
            Block::E => &mut self.e,
            Block::E0 => &mut self.e0,
        }
    }

    fn is_skew_block(b: Block) -> bool {
        matches!(b, Block::Beta | Block::Lambda)
    }

    fn block_len(&self, b: Block) -> usize {
        let f = self.field(b);
        if Self::is_skew_block(b) {
            let d = self.d();
            f.sites * n_pairs(d) * f.dim
        } else {
            f.data.len()
        }
    }

    /// Coordinate range of each block in [`Self::pack`].
    pub fn block_range(&self, b: Block) -> Range<usize> {
        let mut o = 0;
        for &x in Block::ALL.iter() {
            let n = self.block_len(x);
            if x == b {
                return o..o + n;
            }
            o += n;
        }
        unreachable!()
    }

    pub fn packed_len(&self) -> usize {
        Block::ALL.iter().map(|&b| self.block_len(b)).sum()
    }

    /// Independent coordinates; skew blocks contribute only `k < j`.
    pub fn pack(&self) -> Vec<f64> {
        let d = self.d();
        let mut out = Vec::with_capacity(self.packed_len());
        for &b in Block::ALL.iter() {
            let f = self.field(b);
            if Self::is_skew_block(b) {
                for s in 0..f.sites {
                    for k in 0..d {
                        for j in (k + 1)..d {
                            out.extend_from_slice(f.at(s, k * d + j));
                        }
                    }
                }
            } else {
                out.extend_from_slice(&f.data);
            }
        }
        out
    }

    pub fn unpack(&mut self, x: &[f64]) -> Result<()> {
        let len = self.packed_len();
        if x.len() != len {
            return Err(Error::DimensionMismatch { expected: len, got: x.len() });
        }
        let d = self.d();
        let mut o = 0;
        for &b in Block::ALL.iter() {
            let skew = Self::is_skew_block(b);
            let f = self.field_mut(b);
            if skew {
                let dim = f.dim;
                for s in 0..f.sites {
                    for k in 0..d {
                        f.at_mut(s, k * d + k).iter_mut().for_each(|v| *v = 0.0);
                        for j in (k + 1)..d {
                            let v = &x[o..o + dim];
                            f.at_mut(s, k * d + j).copy_from_slice(v);
                            for (t, y) in f.at_mut(s, j * d + k).iter_mut().zip(v) {
                                *t = -y;
                            }
                            o += dim;
                        }
                    }
                }
            } else {
                let n = f.data.len();
                f.data.copy_from_slice(&x[o..o + n]);
                o += n;
            }
        }
        Ok(())
    }

    /// Largest violation of the skew symmetry of `beta` and `lambda`.
    pub fn skew_defect(&self) -> f64 {
        let d = self.d();
        let mut worst = 0.0f64;
        for f in [&self.beta, &self.lambda] {
            for s in 0..f.sites {
                for k in 0..d {
                    for j in 0..d {
                        for (x, y) in f.at(s, k * d + j).iter().zip(f.at(s, j * d + k)) {
                            worst = worst.max(libm::fabs(x + y));
                        }
                    }
                }
            }
        }
        worst
    }

    /// Frame `e^mu_I` with row 0 from `e0` and rows `1..=d` from `e`.
    pub fn vierbein(&self) -> VierbeinField {
        let m = self.e.dim;
        let d = self.d();
        let mut data = Vec::with_capacity(self.sites() * m * m);
        for s in 0..self.sites() {
            data.extend_from_slice(self.e0.at(s, 0));
            for k in 0..d {
                data.extend_from_slice(self.e.at(s, k));
            }
        }
        VierbeinField { m, data }
    }

    pub fn set_vierbein(&mut self, v: &VierbeinField) {
        let m = v.m;
        for s in 0..self.sites() {
            let blk = &v.data[s * m * m..(s + 1) * m * m];
            self.e0.at_mut(s, 0).copy_from_slice(&blk[..m]);
            for k in 0..m - 1 {
                self.e.at_mut(s, k).copy_from_slice(&blk[(k + 1) * m..(k + 2) * m]);
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        Block::ALL.iter().all(|&b| self.field(b).is_finite())
    }
}

/// Per-site `m x m` frame `e^mu_I`, row-major (row = spacetime index).
#[derive(Debug, Clone, PartialEq)]
pub struct VierbeinField {
    pub m: usize,
    pub data: Vec<f64>,
}

impl VierbeinField {
    pub fn identity(sites: usize, m: usize) -> Self {
        let mut data = vec![0.0; sites * m * m];
        for s in 0..sites {
            for i in 0..m {
                data[s * m * m + i * m + i] = 1.0;
            }
        }
        VierbeinField { m, data }
    }

    pub fn sites(&self) -> usize {
        self.data.len() / (self.m * self.m)
    }

    pub fn matrix(&self, site: usize) -> DMatrix<f64> {
        let m = self.m;
        DMatrix::from_row_slice(m, m, &self.data[site * m * m..(site + 1) * m * m])
    }

    pub fn set_matrix(&mut self, site: usize, e: &DMatrix<f64>) {
        let m = self.m;
        for r in 0..m {
            for c in 0..m {
                self.data[site * m * m + r * m + c] = e[(r, c)];
            }
        }
    }
}

pub fn vierbein_determinant(e: &VierbeinField) -> LatticeField {
    let n = e.sites();
    LatticeField::from_fn(n, 1, 1, |s, _, _| linalg::det(&e.matrix(s)))
}

/// `P^{mu nu}_{IJ}` for a single frame, all `m^4` entries, index
/// `((mu * m + nu) * m + i) * m + j`.
pub fn palatini_tensor(e: &DMatrix<f64>) -> Vec<f64> {
    let m = e.nrows();
    let det = linalg::det(e);
    let mut out = vec![0.0; m * m * m * m];
    for mu in 0..m {
        for nu in 0..m {
            for i in 0..m {
                for j in 0..m {
                    out[((mu * m + nu) * m + i) * m + j] =
                        0.5 * det * (e[(mu, i)] * e[(nu, j)] - e[(nu, i)] * e[(mu, j)]);
                }
            }
        }
    }
    out
}

/// Threshold below which a frame counts as singular.
pub const SINGULAR_DET: f64 = 1e-12;

/// `P(e)` as a momentum field: component `mu * m + nu`, coefficient on
/// `xi_IJ` (`I < J`) equal to `P^{mu nu}_{IJ}`.
pub fn palatini_map(e: &VierbeinField) -> Result<LatticeField> {
    let m = e.m;
    let n = e.sites();
    let np = n_pairs(m);
    let mut out = LatticeField::zeros(n, m * m, np);
    for s in 0..n {
        let mat = e.matrix(s);
        let det = linalg::det(&mat);
        if !(libm::fabs(det) > SINGULAR_DET) {
            return Err(Error::SingularVierbein { site: s, det });
        }
        let t = palatini_tensor(&mat);
        for mu in 0..m {
            for nu in 0..m {
                let o = out.at_mut(s, mu * m + nu);
                for i in 0..m {
                    for j in (i + 1)..m {
                        o[pair_index(m, i, j)] = t[((mu * m + nu) * m + i) * m + j];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `g = e^{-T} eta e^{-1}` per site.
pub fn metric_from_vierbein(e: &VierbeinField) -> Result<Vec<DMatrix<f64>>> {
    let eta = MinkowskiMetric::new(e.m).matrix();
    (0..e.sites())
        .map(|s| {
            let mat = e.matrix(s);
            let inv = linalg::inverse(&mat)
                .ok_or(Error::SingularVierbein { site: s, det: linalg::det(&mat) })?;
            Ok(inv.transpose() * &eta * inv)
        })
        .collect()
}

fn random_lattice(rng: &mut Rng, sites: usize, comps: usize, dim: usize, amp: f64) -> LatticeField {
    LatticeField::from_fn(sites, comps, dim, |_, _, _| amp * rng.symmetric())
}

fn skew_random(rng: &mut Rng, sites: usize, d: usize, dim: usize, amp: f64) -> LatticeField {
    let mut f = LatticeField::zeros(sites, d * d, dim);
    for s in 0..sites {
        for k in 0..d {
            for j in (k + 1)..d {
                for a in 0..dim {
                    let v = amp * rng.symmetric();
                    f.at_mut(s, k * d + j)[a] = v;
                    f.at_mut(s, j * d + k)[a] = -v;
                }
            }
        }
    }
    f
}

/// Deterministic pseudo-random boundary state. The frame is the identity
/// plus `amplitude` times a uniform perturbation, redrawn per site until its
/// determinant is at least 0.1.
pub fn random_state(seed: u64, mesh: &CollarMesh, spec: &LieAlgebraSpec, amplitude: f64) -> Result<BoundaryState> {
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidArgument("amplitude must be non-negative"));
    }
    let mut rng = Rng::new(seed);
    let (n, d, g) = (mesh.n_sites(), mesh.d, spec.dim);
    let m = d + 1;
    let mut st = BoundaryState::vacuum(mesh, spec);
    st.a = random_lattice(&mut rng, n, d, g, amplitude);
    st.a0 = random_lattice(&mut rng, n, 1, g, amplitude);
    st.p = random_lattice(&mut rng, n, d, g, amplitude);
    st.beta = skew_random(&mut rng, n, d, g, amplitude);
    st.lambda = skew_random(&mut rng, n, d, g, amplitude);
    st.lambda0 = random_lattice(&mut rng, n, d, g, amplitude);
    let mut v = VierbeinField::identity(n, m);
    for s in 0..n {
        loop {
            let mat = DMatrix::from_fn(m, m, |r, c| {
                let id = if r == c { 1.0 } else { 0.0 };
                id + amplitude * rng.symmetric()
            });
            if linalg::det(&mat) >= 0.1 {
                v.set_matrix(s, &mat);
                break;
            }
        }
    }
    st.set_vierbein(&v);
    Ok(st)
}

/// Deterministic pseudo-random bulk field with skew `P`.
pub fn random_bulk(seed: u64, mesh: &CollarMesh, spec: &LieAlgebraSpec, amplitude: f64) -> Result<BulkField> {
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidArgument("amplitude must be non-negative"));
    }
    let mut rng = Rng::new(seed);
    let mut b = BulkField::zeros(mesh, spec);
    let x: Vec<f64> = (0..b.packed_len()).map(|_| amplitude * rng.symmetric()).collect();
    b.unpack(&x)?;
    Ok(b)
}
