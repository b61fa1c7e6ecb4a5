//! Periodic spatial lattice times a time axis, with central differences,
//! the gauge-covariant derivative and its exact discrete adjoint.

use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::LieAlgebraSpec;
use crate::error::{Error, Result};
use crate::lattice::LatticeField;

/// Collar `(-epsilon, 0] x T^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollarMesh {
    pub d: usize,
    pub sites_per_dim: Vec<usize>,
    pub h: Vec<f64>,
    pub n_t: usize,
    pub dt: f64,
    strides: Vec<usize>,
    plus: Vec<Vec<usize>>,
    minus: Vec<Vec<usize>>,
}

impl CollarMesh {
    pub fn new(sites_per_dim: Vec<usize>, h: Vec<f64>, n_t: usize, dt: f64) -> Result<Self> {
        let d = sites_per_dim.len();
        if d == 0 {
            return Err(Error::InvalidMesh("spatial dimension must be at least 1"));
        }
        if h.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: h.len() });
        }
        if sites_per_dim.iter().any(|&n| n < 3) {
            return Err(Error::InvalidMesh("need at least 3 sites per dimension"));
        }
        if h.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidMesh("spacing must be positive"));
        }
        if n_t == 0 || !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidMesh("collar depth must be positive"));
        }
        let mut strides = vec![1usize; d];
        for k in 1..d {
            strides[k] = strides[k - 1] * sites_per_dim[k - 1];
        }
        let n: usize = sites_per_dim.iter().product();
        let mut plus = vec![vec![0; n]; d];
        let mut minus = vec![vec![0; n]; d];
        for s in 0..n {
            for k in 0..d {
                let nk = sites_per_dim[k];
                let c = (s / strides[k]) % nk;
                let base = s - c * strides[k];
                plus[k][s] = base + ((c + 1) % nk) * strides[k];
                minus[k][s] = base + ((c + nk - 1) % nk) * strides[k];
            }
        }
        Ok(CollarMesh { d, sites_per_dim, h, n_t, dt, strides, plus, minus })
    }

    /// Isotropic mesh with `n` sites and spacing `h` along each of `d` axes.
    pub fn uniform(d: usize, n: usize, h: f64, n_t: usize, dt: f64) -> Result<Self> {
        Self::new(vec![n; d], vec![h; d], n_t, dt)
    }

    pub fn n_sites(&self) -> usize {
        self.plus.first().map_or(0, |v| v.len())
    }

    /// Volume element per site, `prod h_k`.
    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    pub fn total_volume(&self) -> f64 {
        self.cell_volume() * self.n_sites() as f64
    }

    pub fn epsilon(&self) -> f64 {
        self.n_t as f64 * self.dt
    }

    /// Time of slice `j`; the last slice sits on the boundary `t = 0`.
    pub fn slice_time(&self, j: usize) -> f64 {
        (j as f64 + 1.0 - self.n_t as f64) * self.dt
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        (0..self.d).map(|k| (site / self.strides[k]) % self.sites_per_dim[k]).collect()
    }

    /// Physical position of a site.
    pub fn position(&self, site: usize) -> Vec<f64> {
        self.coords(site).iter().zip(self.h.iter()).map(|(&c, &h)| c as f64 * h).collect()
    }

    pub fn site_index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .enumerate()
            .map(|(k, &c)| (c % self.sites_per_dim[k]) * self.strides[k])
            .sum()
    }

    #[inline]
    pub fn neighbor(&self, site: usize, k: usize, forward: bool) -> usize {
        if forward {
            self.plus[k][site]
        } else {
            self.minus[k][site]
        }
    }

    pub fn check_field(&self, f: &LatticeField) -> Result<()> {
        if f.sites != self.n_sites() || f.data.len() != f.sites * f.comps * f.dim {
            return Err(Error::MeshMismatch);
        }
        Ok(())
    }

    /// Periodic central difference along axis `k`, applied to every component.
    pub fn partial(&self, f: &LatticeField, k: usize) -> Result<LatticeField> {
        if k >= self.d {
            return Err(Error::AxisOutOfRange { axis: k, dim: self.d });
        }
        self.check_field(f)?;
        let mut out = LatticeField::zeros(f.sites, f.comps, f.dim);
        self.partial_add(f, k, 1.0, &mut out);
        Ok(out)
    }

    /// `out += alpha * partial_k f`, unchecked.
    pub fn partial_add(&self, f: &LatticeField, k: usize, alpha: f64, out: &mut LatticeField) {
        let w = alpha / (2.0 * self.h[k]);
        let block = f.comps * f.dim;
        for s in 0..f.sites {
            let sp = self.plus[k][s] * block;
            let sm = self.minus[k][s] * block;
            let o = s * block;
            for i in 0..block {
                out.data[o + i] += w * (f.data[sp + i] - f.data[sm + i]);
            }
        }
    }

    /// Covariant derivative along axis `k` of every component of `f`:
    /// `out += alpha * (partial_k f + [a_k, f])`.
    pub fn covariant_partial_add(
        &self,
        spec: &LieAlgebraSpec,
        a: &LatticeField,
        f: &LatticeField,
        k: usize,
        alpha: f64,
        out: &mut LatticeField,
    ) {
        self.partial_add(f, k, alpha, out);
        if spec.is_abelian() {
            return;
        }
        let mut tmp = vec![0.0; f.dim];
        for s in 0..f.sites {
            let ak = a.at(s, k);
            for c in 0..f.comps {
                tmp.iter_mut().for_each(|x| *x = 0.0);
                spec.bracket_into(ak, f.at(s, c), &mut tmp);
                let o = out.at_mut(s, c);
                for i in 0..f.dim {
                    o[i] += alpha * tmp[i];
                }
            }
        }
    }

    /// Adjoint partner of [`covariant_partial_add`]:
    /// `out += alpha * (partial_k g + T(a_k, g))`, so that
    /// `<g, D_k f> = -<D_k^* g, f>` under [`Self::pairing`].
    pub fn covariant_partial_adjoint_add(
        &self,
        spec: &LieAlgebraSpec,
        a: &LatticeField,
        g: &LatticeField,
        k: usize,
        alpha: f64,
        out: &mut LatticeField,
    ) {
        self.partial_add(g, k, alpha, out);
        if spec.is_abelian() {
            return;
        }
        let mut tmp = vec![0.0; g.dim];
        for s in 0..g.sites {
            let ak = a.at(s, k);
            for c in 0..g.comps {
                tmp.iter_mut().for_each(|x| *x = 0.0);
                spec.bracket_transpose_into(ak, g.at(s, c), &mut tmp);
                let o = out.at_mut(s, c);
                for i in 0..g.dim {
                    o[i] += alpha * tmp[i];
                }
            }
        }
    }

    fn check_connection(&self, spec: &LieAlgebraSpec, a: &LatticeField) -> Result<()> {
        self.check_field(a)?;
        if a.comps != self.d || a.dim != spec.dim {
            return Err(Error::DimensionMismatch { expected: self.d * spec.dim, got: a.comps * a.dim });
        }
        Ok(())
    }

    /// `(d_a xi)_k = partial_k xi + [a_k, xi]`.
    pub fn d_a(&self, spec: &LieAlgebraSpec, a: &LatticeField, xi: &LatticeField) -> Result<LatticeField> {
        self.check_connection(spec, a)?;
        self.check_field(xi)?;
        if xi.comps != 1 || xi.dim != spec.dim {
            return Err(Error::DimensionMismatch { expected: spec.dim, got: xi.comps * xi.dim });
        }
        let mut out = LatticeField::zeros(xi.sites, self.d, spec.dim);
        let mut tmp = LatticeField::zeros(xi.sites, 1, spec.dim);
        for k in 0..self.d {
            tmp.data.iter_mut().for_each(|x| *x = 0.0);
            self.covariant_partial_add(spec, a, xi, k, 1.0, &mut tmp);
            out.set_component(k, &tmp);
        }
        Ok(out)
    }

    /// Exact discrete adjoint of [`Self::d_a`]: `<p, d_a xi> = -<d_a^* p, xi>`.
    pub fn d_a_star(&self, spec: &LieAlgebraSpec, a: &LatticeField, p: &LatticeField) -> Result<LatticeField> {
        self.check_connection(spec, a)?;
        self.check_field(p)?;
        if p.comps != self.d || p.dim != spec.dim {
            return Err(Error::DimensionMismatch { expected: self.d * spec.dim, got: p.comps * p.dim });
        }
        let mut out = LatticeField::zeros(p.sites, 1, spec.dim);
        for k in 0..self.d {
            let pk = p.component(k);
            self.covariant_partial_adjoint_add(spec, a, &pk, k, 1.0, &mut out);
        }
        Ok(out)
    }

    /// `sum_x f(x) * prod h` over a real scalar field, in site order.
    pub fn integrate(&self, f: &LatticeField) -> Result<f64> {
        self.check_field(f)?;
        let mut s = 0.0;
        for x in f.data.iter() {
            s += x;
        }
        Ok(s * self.cell_volume())
    }

    /// Canonical pairing: algebra indices contracted with `spec.pairing`,
    /// components summed, then integrated over the lattice.
    pub fn pairing(&self, spec: &LieAlgebraSpec, p: &LatticeField, q: &LatticeField) -> Result<f64> {
        self.check_field(p)?;
        if !p.same_shape(q) {
            return Err(Error::MeshMismatch);
        }
        if p.dim != spec.dim {
            return Err(Error::DimensionMismatch { expected: spec.dim, got: p.dim });
        }
        let mut s = 0.0;
        for site in 0..p.sites {
            for c in 0..p.comps {
                s += spec.pair(p.at(site, c), q.at(site, c));
            }
        }
        Ok(s * self.cell_volume())
    }
}
