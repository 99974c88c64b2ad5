//! The trace map `T` that lifts `N` particle positions in `R^{3N}` to the
//! space of positions plus scaled pair differences, its adjoint, and the
//! orthogonal actions that particle permutations induce on both spaces.
//!
//! Layout of `R^n`: the `N` single-particle blocks `1..=N` come first, followed
//! by the pair blocks `(i, j)` with `i < j` in lexicographic order. Every block
//! has three components. Particle indices are zero-based in this API.

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};

/// Spatial dimension of one particle.
pub const BLOCK: usize = 3;

/// Dimensions of the trace construction for `N` particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemDims {
    particles: usize,
}

impl SystemDims {
    pub fn new(particles: usize) -> Result<Self> {
        if particles < 2 {
            return Err(Error::InvalidInput(format!(
                "particle count must be at least 2, got {particles}"
            )));
        }
        Ok(Self { particles })
    }

    /// Number of particles `N`.
    pub fn particles(&self) -> usize {
        self.particles
    }

    /// `m = 3N`, the dimension of the configuration space.
    pub fn m(&self) -> usize {
        BLOCK * self.particles
    }

    /// `n = 3N(N+1)/2`, the dimension of the lifted space.
    pub fn n(&self) -> usize {
        BLOCK * self.particles * (self.particles + 1) / 2
    }

    /// `m' = 3(N-1)`.
    pub fn mprime(&self) -> usize {
        BLOCK * (self.particles - 1)
    }

    /// Number of pair blocks, `N(N-1)/2`.
    pub fn pairs(&self) -> usize {
        self.particles * (self.particles - 1) / 2
    }

    /// Block index in `R^n` of the pair `(i, j)`, `i < j`.
    pub fn pair_block(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.particles);
        let np = self.particles;
        np + i * np - i * (i + 1) / 2 + (j - i - 1)
    }

    /// Iterates over `(i, j, block)` for all pairs in storage order.
    pub fn pair_blocks(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let np = self.particles;
        (0..np)
            .flat_map(move |i| ((i + 1)..np).map(move |j| (i, j)))
            .enumerate()
            .map(move |(k, (i, j))| (i, j, np + k))
    }

    /// `y = T x`.
    pub fn apply_t(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.m(), x.len())?;
        let mut y = vec![0.0; self.n()];
        y[..self.m()].copy_from_slice(x);
        for (i, j, b) in self.pair_blocks() {
            for c in 0..BLOCK {
                y[BLOCK * b + c] =
                    (x[BLOCK * i + c] - x[BLOCK * j + c]) * std::f64::consts::FRAC_1_SQRT_2;
            }
        }
        Ok(y)
    }

    /// `x = T^t w`.
    pub fn apply_tt(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), w.len())?;
        let mut x = w[..self.m()].to_vec();
        for (i, j, b) in self.pair_blocks() {
            for c in 0..BLOCK {
                let v = w[BLOCK * b + c] * std::f64::consts::FRAC_1_SQRT_2;
                x[BLOCK * i + c] += v;
                x[BLOCK * j + c] -= v;
            }
        }
        Ok(x)
    }

    /// `||T x||^2` through the centre-of-mass form
    /// `(N+2)/2 ||x||^2 - 1/2 ||x_1 + ... + x_N||^2`.
    pub fn t_norm_sq(&self, x: &[f64]) -> Result<f64> {
        check_len(self.m(), x.len())?;
        let np = self.particles as f64;
        let norm_sq: f64 = x.iter().map(|v| v * v).sum();
        let com = self.center_sum(x);
        let com_sq: f64 = com.iter().map(|v| v * v).sum();
        Ok((0.5 * (np + 2.0) * norm_sq - 0.5 * com_sq).max(0.0))
    }

    /// `x_1 + ... + x_N`, the rank-three map.
    pub fn center_sum(&self, x: &[f64]) -> [f64; BLOCK] {
        let mut s = [0.0; BLOCK];
        for block in x.chunks_exact(BLOCK) {
            for c in 0..BLOCK {
                s[c] += block[c];
            }
        }
        s
    }

    /// Singular values of `T^t` in descending order: `m - 3` copies of
    /// `sqrt((N+2)/2)` followed by three ones.
    pub fn singular_values_tt(&self) -> Vec<f64> {
        let big = self.tt_norm();
        let mut s = vec![big; self.m() - BLOCK];
        s.extend_from_slice(&[1.0; BLOCK]);
        s
    }

    /// Spectral norm `||T^t|| = sqrt((N+2)/2)`.
    pub fn tt_norm(&self) -> f64 {
        (0.5 * (self.particles as f64 + 2.0)).sqrt()
    }

    /// Dense `n x m` matrix of `T`. Used for verification only.
    pub fn dense_t(&self) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(self.n(), self.m());
        for k in 0..self.m() {
            t[(k, k)] = 1.0;
        }
        for (i, j, b) in self.pair_blocks() {
            for c in 0..BLOCK {
                t[(BLOCK * b + c, BLOCK * i + c)] = std::f64::consts::FRAC_1_SQRT_2;
                t[(BLOCK * b + c, BLOCK * j + c)] = -std::f64::consts::FRAC_1_SQRT_2;
            }
        }
        t
    }

    /// Dense `n x n` matrix `T T^t`, assembled column by column from the
    /// matrix-free operators.
    pub fn t_tt(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut s = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for k in 0..n {
            e[k] = 1.0;
            let col = self
                .apply_tt(&e)
                .and_then(|v| self.apply_t(&v))
                .expect("lengths match by construction");
            s.set_column(k, &nalgebra::DVector::from_vec(col));
            e[k] = 0.0;
        }
        s
    }
}

/// A permutation of the particle indices `0..N`, stored as its image list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; images.len()];
        for &p in &images {
            if p >= images.len() || seen[p] {
                return Err(Error::InvalidInput(format!(
                    "not a bijection of 0..{}: {:?}",
                    images.len(),
                    images
                )));
            }
            seen[p] = true;
        }
        Ok(Self(images))
    }

    pub fn identity(len: usize) -> Self {
        Self((0..len).collect())
    }

    /// The transposition swapping `a` and `b`.
    pub fn transposition(len: usize, a: usize, b: usize) -> Result<Self> {
        if a >= len || b >= len {
            return Err(Error::InvalidInput(format!(
                "transposition ({a} {b}) out of range for {len} particles"
            )));
        }
        let mut p: Vec<usize> = (0..len).collect();
        p.swap(a, b);
        Ok(Self(p))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    /// Signature, computed from the cycle decomposition.
    pub fn sign(&self) -> i8 {
        let mut visited = vec![false; self.0.len()];
        let mut even = true;
        for start in 0..self.0.len() {
            if visited[start] {
                continue;
            }
            let mut len = 0;
            let mut k = start;
            while !visited[k] {
                visited[k] = true;
                k = self.0[k];
                len += 1;
            }
            if len % 2 == 0 {
                even = !even;
            }
        }
        if even {
            1
        } else {
            -1
        }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &p) in self.0.iter().enumerate() {
            inv[p] = i;
        }
        Self(inv)
    }

    /// The product whose induced actions are `act(self) ∘ act(other)`,
    /// i.e. the map `i -> other(self(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "permutations of different degree");
        Self(self.0.iter().map(|&i| other.0[i]).collect())
    }

    /// All `N!` permutations of `0..len` in lexicographic order.
    pub fn all(len: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let mut current: Vec<usize> = (0..len).collect();
        loop {
            out.push(Self(current.clone()));
            // next lexicographic permutation
            let Some(i) = (1..len).rev().find(|&i| current[i - 1] < current[i]) else {
                break;
            };
            let j = (i..len)
                .rev()
                .find(|&j| current[j] > current[i - 1])
                .unwrap();
            current.swap(i - 1, j);
            current[i..].reverse();
        }
        out
    }
}

/// The orthogonal actions `P` on `R^m` and `Q` on `R^n` induced by a
/// permutation, together with its sign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationAction {
    dims: SystemDims,
    perm: Permutation,
    sign: i8,
}

impl PermutationAction {
    pub fn new(dims: SystemDims, perm: Permutation) -> Result<Self> {
        check_len(dims.particles(), perm.len())?;
        let sign = perm.sign();
        Ok(Self { dims, perm, sign })
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn dims(&self) -> SystemDims {
        self.dims
    }

    pub fn inverse(&self) -> Self {
        Self {
            dims: self.dims,
            perm: self.perm.inverse(),
            sign: self.sign,
        }
    }

    /// `(P x)|_i = x_{pi(i)}`.
    pub fn act_p(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dims.m(), x.len())?;
        let mut out = vec![0.0; x.len()];
        for i in 0..self.dims.particles() {
            let src = self.perm.apply(i);
            out[BLOCK * i..BLOCK * (i + 1)].copy_from_slice(&x[BLOCK * src..BLOCK * (src + 1)]);
        }
        Ok(out)
    }

    /// `(Q y)|_i = y_{pi(i)}` on particle blocks; on pair blocks
    /// `(Q y)|_{ij} = y_{pi(i) pi(j)}` if `pi(i) < pi(j)`, else `-y_{pi(j) pi(i)}`.
    pub fn act_q(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dims.n(), y.len())?;
        let mut out = vec![0.0; y.len()];
        for i in 0..self.dims.particles() {
            let src = self.perm.apply(i);
            out[BLOCK * i..BLOCK * (i + 1)].copy_from_slice(&y[BLOCK * src..BLOCK * (src + 1)]);
        }
        for (i, j, b) in self.dims.pair_blocks() {
            let (pi, pj) = (self.perm.apply(i), self.perm.apply(j));
            let (src, s) = if pi < pj {
                (self.dims.pair_block(pi, pj), 1.0)
            } else {
                (self.dims.pair_block(pj, pi), -1.0)
            };
            for c in 0..BLOCK {
                out[BLOCK * b + c] = s * y[BLOCK * src + c];
            }
        }
        Ok(out)
    }

    /// Dense `n x n` matrix of `Q`.
    pub fn dense_q(&self) -> DMatrix<f64> {
        let n = self.dims.n();
        let mut q = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for k in 0..n {
            e[k] = 1.0;
            let col = self.act_q(&e).expect("length matches");
            for (r, v) in col.into_iter().enumerate() {
                q[(r, k)] = v;
            }
            e[k] = 0.0;
        }
        q
    }
}

/// Builds the actions of `perm` for the given system.
pub fn build_actions(dims: SystemDims, perm: Permutation) -> Result<PermutationAction> {
    PermutationAction::new(dims, perm)
}
