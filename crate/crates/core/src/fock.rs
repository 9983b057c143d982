//! Truncated phonon Fock space on an `N`-site ring.
//!
//! A phonon basis state is an occupation vector `(m_0, ..., m_{N-1})` with total
//! phonon number at most `N_ph`. Sites are indexed from zero. The basis is kept in
//! lexicographic order (lowest site most significant) and ranked with a
//! stars-and-bars prefix count, so no hash table is needed.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported phonon cap; occupations are stored as `u8`.
pub const MAX_PHONONS: usize = u8::MAX as usize;

/// Occupation-number vector of one phonon Fock state.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhononConfig(Vec<u8>);

impl PhononConfig {
    pub fn new(occupations: Vec<u8>) -> Self {
        Self(occupations)
    }

    pub fn vacuum(sites: usize) -> Self {
        Self(vec![0; sites])
    }

    pub fn occupations(&self) -> &[u8] {
        &self.0
    }

    pub fn sites(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        total(&self.0)
    }

    /// Lattice translation by `shift` sites: the phonons on site `l` move to site
    /// `l + shift (mod N)`. In one-based notation the occupation at site `l` of the
    /// result is `m_{s(l, shift)}` with `s(l, n) = N - n + l` for `l <= n` and
    /// `l - n` otherwise.
    pub fn translate(&self, shift: i64) -> Self {
        let mut out = vec![0; self.0.len()];
        translate_into(&self.0, shift, &mut out);
        Self(out)
    }
}

impl fmt::Debug for PhononConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<u8>> for PhononConfig {
    fn from(v: Vec<u8>) -> Self {
        Self(v)
    }
}

pub(crate) fn total(occ: &[u8]) -> usize {
    occ.iter().map(|&m| m as usize).sum()
}

/// Writes the translate of `src` by `shift` into `dst`.
pub fn translate_into(src: &[u8], shift: i64, dst: &mut [u8]) {
    let n = src.len();
    debug_assert_eq!(n, dst.len());
    let s = shift.rem_euclid(n as i64) as usize;
    dst[s..].copy_from_slice(&src[..n - s]);
    dst[..s].copy_from_slice(&src[n - s..]);
}

/// `translate_config` as a free function.
pub fn translate_config(m: &PhononConfig, shift: i64) -> PhononConfig {
    m.translate(shift)
}

/// Returns 1 when `target` equals `m` translated by `shift`, otherwise 0.
pub fn overlap_translated(target: &PhononConfig, m: &PhononConfig, shift: i64) -> u8 {
    let n = m.sites();
    if target.sites() != n {
        return 0;
    }
    let s = shift.rem_euclid(n as i64) as usize;
    let t = target.occupations();
    let src = m.occupations();
    let equal = (0..n).all(|l| t[(l + s) % n] == src[l]);
    u8::from(equal)
}

/// Number of occupation vectors over `sites` sites with total at most `cap`,
/// i.e. `C(cap + sites, sites)`. `None` on overflow.
pub fn basis_dimension(sites: usize, cap: usize) -> Option<usize> {
    binomial(cap + sites, sites)
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    usize::try_from(acc).ok()
}

/// Enumerated, ranked basis of the truncated phonon space.
#[derive(Clone)]
pub struct BasisIndexMap {
    sites: usize,
    cap: usize,
    /// Flat occupation storage, `sites` entries per configuration.
    occupations: Vec<u8>,
    /// `counts[k][c]` = number of vectors over `k` sites with total at most `c`.
    counts: Vec<Vec<usize>>,
}

impl fmt::Debug for BasisIndexMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BasisIndexMap")
            .field("sites", &self.sites)
            .field("cap", &self.cap)
            .field("dim", &self.len())
            .finish()
    }
}

impl BasisIndexMap {
    /// Enumerates every configuration on `sites` sites with total phonon number
    /// at most `cap`, in lexicographic order.
    pub fn enumerate(sites: usize, cap: usize) -> Result<Self> {
        if sites < 2 {
            return Err(Error::InvalidParameter(format!(
                "lattice needs at least 2 sites, got {sites}"
            )));
        }
        if cap > MAX_PHONONS {
            return Err(Error::Sizing(format!(
                "phonon cap {cap} exceeds the 8-bit occupation limit {MAX_PHONONS}"
            )));
        }
        let dim = basis_dimension(sites, cap)
            .filter(|&d| d <= u32::MAX as usize)
            .ok_or_else(|| {
                Error::Sizing(format!(
                    "phonon basis for N={sites}, N_ph={cap} exceeds the index range"
                ))
            })?;
        let storage = dim.checked_mul(sites).ok_or_else(|| {
            Error::Sizing(format!("phonon basis for N={sites}, N_ph={cap} is too large"))
        })?;

        let mut counts = vec![vec![0usize; cap + 1]; sites + 1];
        for (k, row) in counts.iter_mut().enumerate() {
            for (c, slot) in row.iter_mut().enumerate() {
                // every entry is bounded by dim, so this cannot overflow
                *slot = basis_dimension(k, c).unwrap_or(usize::MAX);
            }
        }

        let mut occupations = Vec::with_capacity(storage);
        let mut current = vec![0u8; sites];
        loop {
            occupations.extend_from_slice(&current);
            if !next_lexicographic(&mut current, cap) {
                break;
            }
        }
        debug_assert_eq!(occupations.len(), storage);

        Ok(Self {
            sites,
            cap,
            occupations,
            counts,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.occupations.len() / self.sites
    }

    pub fn is_empty(&self) -> bool {
        self.occupations.is_empty()
    }

    /// Occupations of the configuration at `index`.
    pub fn occupations(&self, index: usize) -> &[u8] {
        &self.occupations[index * self.sites..(index + 1) * self.sites]
    }

    pub fn config(&self, index: usize) -> PhononConfig {
        PhononConfig(self.occupations(index).to_vec())
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> + '_ {
        self.occupations.chunks_exact(self.sites)
    }

    /// Index of an occupation vector, or `None` when it lies outside the basis.
    pub fn rank(&self, occ: &[u8]) -> Option<usize> {
        if occ.len() != self.sites {
            return None;
        }
        let mut remaining = self.cap;
        let mut index = 0usize;
        for (i, &m) in occ.iter().enumerate() {
            let m = m as usize;
            if m > remaining {
                return None;
            }
            // configurations whose site-i occupation is below m, with the same prefix
            let tail = self.sites - i - 1;
            index += self.below(tail, remaining, m);
            remaining -= m;
        }
        Some(index)
    }

    pub fn rank_config(&self, config: &PhononConfig) -> Option<usize> {
        self.rank(config.occupations())
    }

    // sum_{v < m} counts[tail][remaining - v]
    fn below(&self, tail: usize, remaining: usize, m: usize) -> usize {
        // hockey stick: sum_{c=r-m+1}^{r} C(c+tail, tail) = C(r+tail+1, tail+1) - C(r-m+tail+1, tail+1)
        if m == 0 {
            return 0;
        }
        let upper = self.counts[tail + 1][remaining];
        let lower = if remaining >= m {
            self.counts[tail + 1][remaining - m]
        } else {
            0
        };
        upper - lower
    }
}

/// Advances `occ` to the lexicographic successor among vectors with total
/// at most `cap`. Returns `false` past the last one.
fn next_lexicographic(occ: &mut [u8], cap: usize) -> bool {
    let n = occ.len();
    if total(occ) < cap {
        occ[n - 1] += 1;
        return true;
    }
    // at the cap: move one quantum left of the last occupied site
    match occ.iter().rposition(|&m| m > 0) {
        Some(last) if last > 0 => {
            occ[last - 1] += 1;
            occ[last..].fill(0);
            true
        }
        _ => false,
    }
}
