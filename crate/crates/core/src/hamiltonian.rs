//! Sector Hamiltonians in the Bloch-summed basis.
//!
//! For fixed total quasimomentum `K` the basis states are
//! `|K, m> = N^{-1/2} sum_n e^{iKn} |n>_e (x) T_n |m>_ph`, one per phonon
//! configuration `m`, where `T_n` translates the phonon configuration by `n` sites.
//! A real-space term acting on `|0>_e (x) |m>` that leaves the excitation on site
//! `p` with phonons `m'` contributes `e^{-iKp}` times its amplitude to the row of
//! the re-centered configuration `T_{-p} m'`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{translate_into, BasisIndexMap};
use crate::model::ModelParams;

/// Total quasimomentum `K = 2 pi j / N` with `j` in `(-N/2, N/2]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Momentum {
    index: i64,
    sites: usize,
}

impl Momentum {
    /// Normalizes `index` into `(-N/2, N/2]`.
    pub fn new(index: i64, sites: usize) -> Self {
        let n = sites as i64;
        let mut j = index.rem_euclid(n);
        if 2 * j > n {
            j -= n;
        }
        Self { index: j, sites }
    }

    /// All `N` allowed momenta, ascending.
    pub fn allowed(sites: usize) -> Vec<Momentum> {
        let n = sites as i64;
        let lo = -((n - 1) / 2);
        (lo..=n / 2).map(|j| Momentum::new(j, sites)).collect()
    }

    pub fn index(&self) -> i64 {
        self.index
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn value(&self) -> f64 {
        2.0 * PI * self.index as f64 / self.sites as f64
    }

    /// `K / pi`.
    pub fn over_pi(&self) -> f64 {
        2.0 * self.index as f64 / self.sites as f64
    }

    pub fn negate(&self) -> Self {
        Momentum::new(-self.index, self.sites)
    }

    /// True for `K = 0` and `K = pi`, the sectors that are their own partners.
    pub fn is_self_conjugate(&self) -> bool {
        self.negate() == *self
    }

    /// `e^{iK d}` evaluated on the ring, exact at quarter turns and exactly
    /// conjugate under `K -> -K`.
    pub fn bloch_phase(&self, d: i64) -> Complex64 {
        ring_phase(self.index * d, self.sites)
    }
}

impl fmt::Debug for Momentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K={}pi/{}", 2 * self.index, self.sites)
    }
}

/// `exp(2 pi i r / n)`.
pub(crate) fn ring_phase(r: i64, n: usize) -> Complex64 {
    let n = n as i64;
    let r = r.rem_euclid(n);
    if r == 0 {
        Complex64::new(1.0, 0.0)
    } else if 2 * r == n {
        Complex64::new(-1.0, 0.0)
    } else if 4 * r == n {
        Complex64::new(0.0, 1.0)
    } else if 4 * r == 3 * n {
        Complex64::new(0.0, -1.0)
    } else if 2 * r > n {
        ring_phase(n - r, n as usize).conj()
    } else {
        let theta = 2.0 * PI * r as f64 / n as f64;
        Complex64::new(theta.cos(), theta.sin())
    }
}

/// Hermitian sector matrix in compressed-row layout.
#[derive(Clone)]
pub struct SparseSectorHamiltonian {
    momentum: Momentum,
    params: ModelParams,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<Complex64>,
}

impl fmt::Debug for SparseSectorHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SparseSectorHamiltonian")
            .field("momentum", &self.momentum)
            .field("dim", &self.dim())
            .field("nnz", &self.nnz())
            .finish()
    }
}

/// A real-space term acting on the representative state: the excitation ends on
/// site `hop` (relative, -1, 0 or +1), phonon operators act, amplitude applies.
struct Collector<'a> {
    basis: &'a BasisIndexMap,
    momentum: Momentum,
    column: u32,
    scratch: Vec<u8>,
    recentered: Vec<u8>,
    triplets: &'a mut Vec<(u32, u32, Complex64)>,
}

impl Collector<'_> {
    fn push(&mut self, hop: i64, amplitude: f64) {
        if amplitude == 0.0 {
            return;
        }
        translate_into(&self.scratch, -hop, &mut self.recentered);
        let row = self
            .basis
            .rank(&self.recentered)
            .expect("re-centered configuration lies in the truncated basis");
        let value = self.momentum.bloch_phase(-hop) * amplitude;
        self.triplets.push((row as u32, self.column, value));
    }

    /// Applies `sign * (a_s + a_s^dagger)` to `m` and records both branches.
    fn displacement(&mut self, m: &[u8], site: usize, hop: i64, coupling: f64, cap: usize) {
        let total: usize = m.iter().map(|&x| x as usize).sum();
        let occ = m[site];
        if total < cap {
            self.scratch.copy_from_slice(m);
            self.scratch[site] += 1;
            self.push(hop, coupling * ((occ as f64) + 1.0).sqrt());
        }
        if occ > 0 {
            self.scratch.copy_from_slice(m);
            self.scratch[site] -= 1;
            self.push(hop, coupling * (occ as f64).sqrt());
        }
    }
}

impl SparseSectorHamiltonian {
    /// Builds `H_0 + H_P + H_BM` in sector `momentum`. Terms that would exceed the
    /// phonon cap are dropped.
    pub fn assemble(
        momentum: Momentum,
        basis: &BasisIndexMap,
        params: &ModelParams,
    ) -> Result<Self> {
        params.validate()?;
        if basis.sites() != params.n_sites || momentum.sites() != params.n_sites {
            return Err(Error::DimensionMismatch {
                expected: params.n_sites,
                actual: basis.sites(),
            });
        }
        if basis.cap() != params.n_ph {
            return Err(Error::DimensionMismatch {
                expected: params.n_ph,
                actual: basis.cap(),
            });
        }
        let n = params.n_sites;
        let cap = params.n_ph;
        let dim = basis.len();
        let t = params.t_e;
        let peierls = params.g_p * params.omega_ph;
        let breathing = params.g_bm * params.omega_ph;

        let mut triplets: Vec<(u32, u32, Complex64)> = Vec::with_capacity(dim * (4 + 6 * n.min(3)));
        let mut diag = Vec::with_capacity(dim);
        {
            let mut col = Collector {
                basis,
                momentum,
                column: 0,
                scratch: vec![0; n],
                recentered: vec![0; n],
                triplets: &mut triplets,
            };
            let (right, left) = (1usize, n - 1);
            for (c, m) in basis.iter().enumerate() {
                col.column = c as u32;
                let phonons: usize = m.iter().map(|&x| x as usize).sum();
                diag.push(params.omega_ph * phonons as f64);

                // bare hopping to the right and left neighbours
                col.scratch.copy_from_slice(m);
                col.push(1, -t);
                col.scratch.copy_from_slice(m);
                col.push(-1, -t);

                // Peierls: hop 0 -> 1 carries (X_1 - X_0), hop 0 -> N-1 carries (X_0 - X_{N-1})
                if peierls != 0.0 {
                    col.displacement(m, right, 1, peierls, cap);
                    col.displacement(m, 0, 1, -peierls, cap);
                    col.displacement(m, 0, -1, peierls, cap);
                    col.displacement(m, left, -1, -peierls, cap);
                }
                // breathing mode: excitation stays, couples to (X_{N-1} - X_1)
                if breathing != 0.0 {
                    col.displacement(m, left, 0, breathing, cap);
                    col.displacement(m, right, 0, -breathing, cap);
                }
            }
        }
        for (c, &d) in diag.iter().enumerate() {
            triplets.push((c as u32, c as u32, Complex64::new(d, 0.0)));
        }
        Ok(Self::from_triplets(momentum, *params, dim, triplets))
    }

    /// Sorts, merges duplicates in generation order, and symmetrizes as
    /// `(A + A^dagger) / 2`, which is Hermitian bit for bit.
    fn from_triplets(
        momentum: Momentum,
        params: ModelParams,
        dim: usize,
        mut triplets: Vec<(u32, u32, Complex64)>,
    ) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(u32, u32, Complex64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }

        let lookup = |r: u32, c: u32| -> Complex64 {
            merged
                .binary_search_by_key(&(r, c), |&(rr, cc, _)| (rr, cc))
                .map(|i| merged[i].2)
                .unwrap_or_default()
        };
        // union of the pattern and its transpose
        let mut pattern: Vec<(u32, u32)> = merged
            .iter()
            .flat_map(|&(r, c, _)| [(r, c), (c, r)])
            .collect();
        pattern.sort_unstable();
        pattern.dedup();

        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(pattern.len());
        let mut values = Vec::with_capacity(pattern.len());
        for &(r, c) in &pattern {
            let v = (lookup(r, c) + lookup(c, r).conj()) * 0.5;
            if v == Complex64::default() {
                continue;
            }
            row_ptr[r as usize + 1] += 1;
            cols.push(c);
            values.push(v);
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            momentum,
            params,
            row_ptr,
            cols,
            values,
        }
    }

    pub fn momentum(&self) -> Momentum {
        self.momentum
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Matrix entry `(row, col)`, zero when not stored.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let (lo, hi) = (self.row_ptr[row], self.row_ptr[row + 1]);
        match self.cols[lo..hi].binary_search(&(col as u32)) {
            Ok(i) => self.values[lo + i],
            Err(_) => Complex64::default(),
        }
    }

    /// Iterates stored entries as `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k] as usize, self.values[k]))
        })
    }

    /// `out = H v`.
    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let dim = self.dim();
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        if out.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: out.len(),
            });
        }
        for (r, slot) in out.iter_mut().enumerate() {
            let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut acc = Complex64::default();
            for k in lo..hi {
                acc += self.values[k] * v[self.cols[k] as usize];
            }
            *slot = acc;
        }
        Ok(())
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::default(); self.dim()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Writes a little-endian debug dump:
    ///
    /// ```text
    /// magic     [u8; 4]  = b"PBMH"
    /// version   u32      = 1
    /// n_sites   u64
    /// k_index   i64      K = 2 pi k_index / n_sites
    /// dim       u64
    /// nnz       u64
    /// nnz x { row u32, col u32, re f64, im f64 }
    /// ```
    ///
    /// The layout is for inspection only and may change.
    pub fn write_dump(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(b"PBMH")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.momentum.sites() as u64).to_le_bytes())?;
        w.write_all(&self.momentum.index().to_le_bytes())?;
        w.write_all(&(self.dim() as u64).to_le_bytes())?;
        w.write_all(&(self.nnz() as u64).to_le_bytes())?;
        for (r, c, v) in self.triplets() {
            w.write_all(&(r as u32).to_le_bytes())?;
            w.write_all(&(c as u32).to_le_bytes())?;
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn dump_to_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_dump(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}
