//! Flat storage for algebra-valued lattice fields.

use alloc::vec;
use alloc::vec::Vec;

/// Values on every lattice site, laid out site-major, then component, then
/// algebra index. `comps` is 1 for scalars, `d` for covectors and `d * d`
/// for two-index spatial tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    pub sites: usize,
    pub comps: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl LatticeField {
    pub fn zeros(sites: usize, comps: usize, dim: usize) -> Self {
        LatticeField { sites, comps, dim, data: vec![0.0; sites * comps * dim] }
    }

    pub fn from_fn(sites: usize, comps: usize, dim: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(sites, comps, dim);
        for s in 0..sites {
            for c in 0..comps {
                for a in 0..dim {
                    out.data[(s * comps + c) * dim + a] = f(s, c, a);
                }
            }
        }
        out
    }

    #[inline]
    pub fn offset(&self, site: usize, comp: usize) -> usize {
        (site * self.comps + comp) * self.dim
    }

    #[inline]
    pub fn at(&self, site: usize, comp: usize) -> &[f64] {
        let o = self.offset(site, comp);
        &self.data[o..o + self.dim]
    }

    #[inline]
    pub fn at_mut(&mut self, site: usize, comp: usize) -> &mut [f64] {
        let o = self.offset(site, comp);
        &mut self.data[o..o + self.dim]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape(&self, other: &LatticeField) -> bool {
        self.sites == other.sites && self.comps == other.comps && self.dim == other.dim
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &LatticeField) {
        debug_assert!(self.same_shape(other));
        for (x, y) in self.data.iter_mut().zip(other.data.iter()) {
            *x += alpha * y;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for x in self.data.iter_mut() {
            *x *= alpha;
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    pub fn sub(&self, other: &LatticeField) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Plain Euclidean dot product of the raw coefficients.
    pub fn dot(&self, other: &LatticeField) -> f64 {
        self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(libm::fabs(*x)))
    }

    /// Extract a single component as a scalar field.
    pub fn component(&self, comp: usize) -> LatticeField {
        let mut out = LatticeField::zeros(self.sites, 1, self.dim);
        for s in 0..self.sites {
            out.at_mut(s, 0).copy_from_slice(self.at(s, comp));
        }
        out
    }

    pub fn set_component(&mut self, comp: usize, src: &LatticeField) {
        for s in 0..self.sites {
            let v: Vec<f64> = src.at(s, 0).to_vec();
            self.at_mut(s, comp).copy_from_slice(&v);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}
