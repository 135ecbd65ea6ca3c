//! Component-major storage for covariant tensor fields on a grid.
//!
//! Component `c` of a rank-k field with indices `(i_0, .., i_{k-1})` is
//! `c = sum_s i_s * n^(k-1-s)`; its nodal values occupy
//! `data[c * nnodes .. (c + 1) * nnodes]`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symmetry {
    None,
    /// Symmetric rank-2 tensor.
    Sym2,
    /// Symmetric in the first two slots.
    SymFirstTwo,
    /// Rank 3, skew in the first and last slots (a 2-form with values in T*M).
    SkewFirstLast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    pub rank: usize,
    pub n: usize,
    pub nnodes: usize,
    pub sym: Symmetry,
    pub data: Vec<f64>,
}

pub fn ncomp(n: usize, rank: usize) -> usize {
    n.pow(rank as u32)
}

pub fn encode(n: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |c, &i| c * n + i)
}

pub fn decode(n: usize, rank: usize, mut c: usize) -> Vec<usize> {
    let mut idx = vec![0; rank];
    for s in (0..rank).rev() {
        idx[s] = c % n;
        c /= n;
    }
    idx
}

impl TensorField {
    pub fn zeros(rank: usize, n: usize, nnodes: usize) -> Self {
        TensorField { rank, n, nnodes, sym: Symmetry::None, data: vec![0.0; ncomp(n, rank) * nnodes] }
    }

    pub fn scalar(values: Vec<f64>, n: usize) -> Self {
        let nnodes = values.len();
        TensorField { rank: 0, n, nnodes, sym: Symmetry::None, data: values }
    }

    pub fn from_data(rank: usize, n: usize, nnodes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != ncomp(n, rank) * nnodes {
            return Err(Error::Shape(format!(
                "rank {rank} field on {nnodes} nodes needs {} values, got {}",
                ncomp(n, rank) * nnodes,
                data.len()
            )));
        }
        Ok(TensorField { rank, n, nnodes, sym: Symmetry::None, data })
    }

    pub fn ncomp(&self) -> usize {
        ncomp(self.n, self.rank)
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        &self.data[c * self.nnodes..(c + 1) * self.nnodes]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        let nn = self.nnodes;
        &mut self.data[c * nn..(c + 1) * nn]
    }

    pub fn at(&self, idx: &[usize]) -> &[f64] {
        self.comp(encode(self.n, idx))
    }

    pub fn at_mut(&mut self, idx: &[usize]) -> &mut [f64] {
        let c = encode(self.n, idx);
        self.comp_mut(c)
    }

    pub fn value(&self, idx: &[usize], node: usize) -> f64 {
        self.comp(encode(self.n, idx))[node]
    }

    pub fn comp_is_zero(&self, c: usize) -> bool {
        self.comp(c).iter().all(|v| *v == 0.0)
    }

    pub fn same_shape(&self, other: &TensorField) -> Result<()> {
        if self.rank != other.rank || self.n != other.n || self.nnodes != other.nnodes {
            return Err(Error::Shape(format!(
                "rank/dim/nodes ({}, {}, {}) vs ({}, {}, {})",
                self.rank, self.n, self.nnodes, other.rank, other.n, other.nnodes
            )));
        }
        Ok(())
    }

    /// Tag with a symmetry, projecting so that it holds exactly.
    pub fn with_symmetry(mut self, sym: Symmetry) -> Result<Self> {
        match sym {
            Symmetry::None => {}
            Symmetry::Sym2 | Symmetry::SymFirstTwo => {
                if self.rank < 2 || (sym == Symmetry::Sym2 && self.rank != 2) {
                    return Err(Error::Shape(format!("{sym:?} needs rank 2, got {}", self.rank)));
                }
                self.project(|idx| {
                    let mut t = idx.to_vec();
                    t.swap(0, 1);
                    (t, 1.0)
                });
            }
            Symmetry::SkewFirstLast => {
                if self.rank != 3 {
                    return Err(Error::Shape(format!("skew 2-form values need rank 3, got {}", self.rank)));
                }
                self.project(|idx| (vec![idx[2], idx[1], idx[0]], -1.0));
            }
        }
        self.sym = sym;
        Ok(self)
    }

    /// Average each component with its partner under an involution `idx -> (idx', sign)`.
    fn project(&mut self, partner: impl Fn(&[usize]) -> (Vec<usize>, f64)) {
        let nn = self.nnodes;
        for c in 0..self.ncomp() {
            let idx = decode(self.n, self.rank, c);
            let (pidx, sign) = partner(&idx);
            let p = encode(self.n, &pidx);
            if p < c {
                continue;
            }
            if p == c {
                if sign < 0.0 {
                    self.comp_mut(c).iter_mut().for_each(|v| *v = 0.0);
                }
                continue;
            }
            for q in 0..nn {
                let a = self.data[c * nn + q];
                let b = self.data[p * nn + q];
                let m = 0.5 * (a + sign * b);
                self.data[c * nn + q] = m;
                self.data[p * nn + q] = sign * m;
            }
        }
    }

    /// `out_{i_0..} = self_{i_perm[0], i_perm[1], ..}`.
    pub fn permute(&self, perm: &[usize]) -> TensorField {
        assert_eq!(perm.len(), self.rank);
        let mut out = TensorField::zeros(self.rank, self.n, self.nnodes);
        for c in 0..self.ncomp() {
            let idx = decode(self.n, self.rank, c);
            let src: Vec<usize> = perm.iter().map(|&p| idx[p]).collect();
            out.comp_mut(c).copy_from_slice(self.comp(encode(self.n, &src)));
        }
        out
    }

    pub fn scaled(&self, a: f64) -> TensorField {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= a);
        out
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &TensorField) {
        debug_assert_eq!(self.data.len(), other.data.len());
        if a == 0.0 {
            return;
        }
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
        if self.sym != other.sym {
            self.sym = Symmetry::None;
        }
    }

    pub fn add(&self, other: &TensorField) -> TensorField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &TensorField) -> TensorField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Multiply every component pointwise by a scalar field.
    pub fn times_scalar(&self, f: &[f64]) -> TensorField {
        let mut out = self.clone();
        for c in 0..out.ncomp() {
            out.comp_mut(c).iter_mut().zip(f).for_each(|(v, s)| *v *= s);
        }
        out
    }

    /// Zero every node where `keep` is false.
    pub fn masked(&self, keep: &[bool]) -> TensorField {
        let mut out = self.clone();
        for c in 0..out.ncomp() {
            out.comp_mut(c).iter_mut().zip(keep).for_each(|(v, k)| {
                if !k {
                    *v = 0.0
                }
            });
        }
        out
    }

    /// Tensor product `(a ⊗ b)_{I J} = a_I b_J`.
    pub fn tensor(&self, other: &TensorField) -> TensorField {
        let mut out = TensorField::zeros(self.rank + other.rank, self.n, self.nnodes);
        let nb = other.ncomp();
        for ca in 0..self.ncomp() {
            if self.comp_is_zero(ca) {
                continue;
            }
            for cb in 0..nb {
                let (a, b) = (self.comp(ca), other.comp(cb));
                let dst = out.comp_mut(ca * nb + cb);
                for q in 0..dst.len() {
                    dst[q] = a[q] * b[q];
                }
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rank != 2 {
            return false;
        }
        (0..self.n).all(|i| {
            (0..self.n).all(|j| {
                self.at(&[i, j]).iter().zip(self.at(&[j, i])).all(|(a, b)| (a - b).abs() <= tol)
            })
        })
    }
}
