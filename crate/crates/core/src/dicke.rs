//! Collective angular-momentum (Dicke) algebra for N two-level emitters.
//!
//! The emitter Hilbert space is the computational basis of N qubits; emitter
//! 0 occupies the most significant bit and `|1>` is the excited state. The
//! collective operators are `J_z = (1/2) sum_i sigma_i^z` and
//! `J^2 = J_x^2 + J_y^2 + J_z^2`, with simultaneous eigenspaces labelled by
//! `(j, m)`. Angular momenta are stored doubled (`two_j = 2j`, `two_m = 2m`)
//! so that half-integer values stay exact integers.
//!
//! Closed forms implemented here:
//! * sector multiplicity `d_j = binom(N, N/2 - j) - binom(N, N/2 - j - 1)`,
//!   equal to `(2j+1)/(N+1) * binom(N+1, N/2-j)`;
//! * uniform pair coherence of a sector state,
//!   `C0(j, m) = (j(j+1) - m^2 - N/2) / (N(N-1))`;
//! * uniform pair inversion correlation,
//!   `Czz(j, m) = (4 m^2 - N) / (N(N-1))`.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::SystemParams;

/// Largest emitter count for which explicit `2^N` matrices are built.
pub const MAX_EXPLICIT_EMITTERS: usize = 12;

/// Exact binomial coefficient in `u128`.
pub fn binomial(n: usize, k: usize) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        // acc * (n - k + i) is an exact multiple of i at every step
        acc = acc
            .checked_mul((n - k + i) as u128)
            .ok_or_else(|| Error::CombinatorialOverflow(format!("binomial({n}, {k})")))?;
        acc /= i as u128;
    }
    Ok(acc)
}

/// Validated `(j, m)` label for a collective-spin sector of N emitters.
///
/// Stored doubled: `two_j = 2j`, `two_m = 2m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JMLabel {
    n: usize,
    two_j: u32,
    two_m: i32,
}

impl JMLabel {
    pub fn new(n: usize, two_j: u32, two_m: i32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidLabel("N must be >= 1".into()));
        }
        if two_j as usize > n {
            return Err(Error::InvalidLabel(format!("2j = {two_j} exceeds N = {n}")));
        }
        if (two_j as usize) % 2 != n % 2 {
            return Err(Error::InvalidLabel(format!(
                "2j = {two_j} has the wrong parity for N = {n}"
            )));
        }
        if two_m.unsigned_abs() > two_j {
            return Err(Error::InvalidLabel(format!("|2m| = {} exceeds 2j = {two_j}", two_m.abs())));
        }
        if (two_m.rem_euclid(2)) as u32 != two_j % 2 {
            return Err(Error::InvalidLabel(format!(
                "2m = {two_m} has the wrong parity for 2j = {two_j}"
            )));
        }
        Ok(JMLabel { n, two_j, two_m })
    }

    /// Label of the symmetric (maximal-j) sector with `k` excitations.
    pub fn symmetric(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidLabel(format!("k = {k} exceeds N = {n}")));
        }
        JMLabel::new(n, n as u32, 2 * k as i32 - n as i32)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn two_j(&self) -> u32 {
        self.two_j
    }
    pub fn two_m(&self) -> i32 {
        self.two_m
    }
    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }
    pub fn m(&self) -> f64 {
        self.two_m as f64 / 2.0
    }
    /// `j(j+1)`, the eigenvalue of `J^2`.
    pub fn j_squared(&self) -> f64 {
        let tj = self.two_j as f64;
        tj * (tj + 2.0) / 4.0
    }
    /// Number of excitations `k = m + N/2` (defined since 2m and N share parity).
    pub fn excitations(&self) -> usize {
        ((self.two_m + self.n as i32) / 2) as usize
    }
}

impl std::fmt::Display for JMLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.two_j % 2 == 0 {
            write!(f, "j={},m={}", self.two_j / 2, self.two_m / 2)
        } else {
            write!(f, "j={}/2,m={}/2", self.two_j, self.two_m)
        }
    }
}

/// All allowed `2j` values for N emitters, descending from N to 0 or 1.
pub fn two_j_values(n: usize) -> Vec<u32> {
    (0..=n as u32).rev().filter(|tj| (*tj as usize) % 2 == n % 2).collect()
}

/// Number of distinct sectors with a given `j` (independent of `m`):
/// `d_j = binom(N, k) - binom(N, k-1)` with `k = N/2 - j`.
pub fn multiplicity(n: usize, two_j: u32) -> Result<u128> {
    if two_j as usize > n || (two_j as usize) % 2 != n % 2 {
        return Err(Error::InvalidLabel(format!("2j = {two_j} invalid for N = {n}")));
    }
    let k = (n - two_j as usize) / 2;
    let a = binomial(n, k)?;
    let b = if k == 0 { 0 } else { binomial(n, k - 1)? };
    Ok(a - b)
}

/// Uniform pair coherence `<sigma_i^+ sigma_j^->` of a state that is an even
/// mixture over one `(j, m)` eigenspace. Requires N >= 2.
pub fn c0_of_jm(label: &JMLabel) -> Result<f64> {
    let n = label.n;
    if n < 2 {
        return Err(Error::InvalidLabel("pair correlations need N >= 2".into()));
    }
    let nf = n as f64;
    Ok((label.j_squared() - label.m() * label.m() - nf / 2.0) / (nf * (nf - 1.0)))
}

/// Uniform pair inversion correlation `<sigma_i^z sigma_j^z>` of an even
/// mixture over one `(j, m)` eigenspace. Requires N >= 2.
pub fn czz_of_jm(label: &JMLabel) -> Result<f64> {
    let n = label.n;
    if n < 2 {
        return Err(Error::InvalidLabel("pair correlations need N >= 2".into()));
    }
    let nf = n as f64;
    Ok((4.0 * label.m() * label.m() - nf) / (nf * (nf - 1.0)))
}

/// Collective and correlated emission rates of the symmetric Dicke state with
/// `k` excitations: `(I0 * k, I0 * (N - k) * k)`.
///
/// The correlated part peaks at half inversion, where it reaches
/// `I0 * N^2 / 4`.
pub fn dicke_emission_rates(n: usize, k: usize, params: &SystemParams) -> Result<(f64, f64)> {
    if k > n {
        return Err(Error::InvalidLabel(format!("k = {k} exceeds N = {n}")));
    }
    let i0 = params.single_emitter_rate();
    Ok((i0 * k as f64, i0 * ((n - k) * k) as f64))
}

fn check_explicit_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    if n > MAX_EXPLICIT_EMITTERS {
        return Err(Error::DimensionLimit { dim: 1usize << n, limit: 1usize << MAX_EXPLICIT_EMITTERS });
    }
    Ok(())
}

/// Amplitude vector of the symmetric Dicke state `|D_{N,k}>`: the equal
/// superposition of all computational states with `k` excited emitters.
pub fn dicke_state(n: usize, k: usize) -> Result<Array1<C64>> {
    check_explicit_size(n)?;
    if k > n {
        return Err(Error::InvalidLabel(format!("k = {k} exceeds N = {n}")));
    }
    let dim = 1usize << n;
    let amp = 1.0 / (binomial(n, k)? as f64).sqrt();
    let mut v = Array1::<C64>::zeros(dim);
    for s in 0..dim {
        if (s as u64).count_ones() as usize == k {
            v[s] = C64::new(amp, 0.0);
        }
    }
    Ok(v)
}

/// One simultaneous eigenspace of `(J^2, J_z)`.
#[derive(Debug, Clone)]
pub struct Sector {
    pub label: JMLabel,
    /// Computational-basis states (bitmasks) spanning the `m` block.
    pub member_states: Vec<usize>,
    /// Orthonormal eigenvectors as columns, expressed over `member_states`.
    /// Shape: (member_states.len(), multiplicity).
    pub vectors: Array2<f64>,
}

/// Simultaneous eigenbasis of `(J^2, J_z)` for N emitters.
///
/// `J_z` is diagonal in the computational basis, so the construction
/// diagonalizes the explicit `J^2` block within each excitation-number
/// subspace and groups eigenvectors by eigenvalue (tolerance 1e-9).
#[derive(Debug, Clone)]
pub struct JmBasis {
    n: usize,
    sectors: Vec<Sector>,
}

impl JmBasis {
    pub fn new(n: usize) -> Result<Self> {
        check_explicit_size(n)?;
        let mut sectors = Vec::new();
        for k in 0..=n {
            let members: Vec<usize> =
                (0..(1usize << n)).filter(|s| (*s as u64).count_ones() as usize == k).collect();
            let dim = members.len();
            let index_of = |s: usize| members.binary_search(&s).expect("member state");
            // J^2 = J^- J^+ + J_z (J_z + 1) restricted to the block:
            // diagonal m^2 + m + (N - k); off-diagonal 1 for every
            // single-excitation move between basis states.
            let m = k as f64 - n as f64 / 2.0;
            let mut block = Array2::<f64>::zeros((dim, dim));
            for (a, &s) in members.iter().enumerate() {
                block[(a, a)] = m * m + m + (n - k) as f64;
                for i in 0..n {
                    let bi = 1usize << (n - 1 - i);
                    if s & bi == 0 {
                        continue;
                    }
                    for jbit in 0..n {
                        let bj = 1usize << (n - 1 - jbit);
                        if s & bj != 0 {
                            continue;
                        }
                        let b = index_of((s & !bi) | bj);
                        block[(a, b)] += 1.0;
                    }
                }
            }
            let (vals, vecs) = linalg::eigh_real(&block.view())?;
            // group eigenvectors by j(j+1)
            let mut groups: Vec<(u32, Vec<usize>)> = Vec::new();
            for (idx, &ev) in vals.iter().enumerate() {
                // ev = j(j+1)  =>  2j = sqrt(4 ev + 1) - 1
                let two_j = ((4.0 * ev + 1.0).sqrt() - 1.0).round() as u32;
                let expect = (two_j as f64) * (two_j as f64 + 2.0) / 4.0;
                if (ev - expect).abs() > 1e-9 {
                    return Err(Error::Internal(format!(
                        "J^2 eigenvalue {ev} is not of the form j(j+1) (N = {n}, k = {k})"
                    )));
                }
                match groups.last_mut() {
                    Some((tj, idxs)) if *tj == two_j => idxs.push(idx),
                    _ => groups.push((two_j, vec![idx])),
                }
            }
            for (two_j, idxs) in groups {
                let label = JMLabel::new(n, two_j, 2 * k as i32 - n as i32)?;
                let expected = multiplicity(n, two_j)? as usize;
                if idxs.len() != expected {
                    return Err(Error::Internal(format!(
                        "sector {label} has degeneracy {} but multiplicity {expected}",
                        idxs.len()
                    )));
                }
                let mut vectors = Array2::<f64>::zeros((dim, idxs.len()));
                for (col, &idx) in idxs.iter().enumerate() {
                    // canonical sign: largest-magnitude component positive
                    let mut best = 0usize;
                    for r in 1..dim {
                        if vecs[(r, idx)].abs() > vecs[(best, idx)].abs() {
                            best = r;
                        }
                    }
                    let sign = if vecs[(best, idx)] < 0.0 { -1.0 } else { 1.0 };
                    for r in 0..dim {
                        vectors[(r, col)] = sign * vecs[(r, idx)];
                    }
                }
                sectors.push(Sector { label, member_states: members.clone(), vectors });
            }
        }
        // deterministic order: descending j, then descending m
        sectors.sort_by(|a, b| {
            (b.label.two_j, b.label.two_m).cmp(&(a.label.two_j, a.label.two_m))
        });
        Ok(JmBasis { n, sectors })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn sector(&self, label: &JMLabel) -> Option<&Sector> {
        self.sectors.iter().find(|s| s.label == *label)
    }

    /// Normalized even mixture over the `(j, m)` eigenspace:
    /// `rho_jm = P_jm / d_jm` on the full `2^N` space.
    pub fn rho_jm(&self, label: &JMLabel) -> Result<Array2<C64>> {
        let sector = self
            .sector(label)
            .ok_or_else(|| Error::InvalidLabel(format!("no sector {label} for N = {}", self.n)))?;
        let dim = 1usize << self.n;
        let d = sector.vectors.ncols();
        let mut rho = Array2::<C64>::zeros((dim, dim));
        for col in 0..d {
            for (a, &sa) in sector.member_states.iter().enumerate() {
                let va = sector.vectors[(a, col)];
                if va == 0.0 {
                    continue;
                }
                for (b, &sb) in sector.member_states.iter().enumerate() {
                    rho[(sa, sb)] += C64::new(va * sector.vectors[(b, col)] / d as f64, 0.0);
                }
            }
        }
        Ok(rho)
    }

    /// `Tr[rho P_jm]`: the population carried by the `(j, m)` eigenspace.
    pub fn sector_weight(&self, rho: &Array2<C64>, label: &JMLabel) -> Result<f64> {
        let sector = self
            .sector(label)
            .ok_or_else(|| Error::InvalidLabel(format!("no sector {label} for N = {}", self.n)))?;
        let dim = 1usize << self.n;
        if rho.dim() != (dim, dim) {
            return Err(Error::ShapeMismatch(format!(
                "expected {dim}x{dim} emitter state, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let mut total = 0.0;
        for col in 0..sector.vectors.ncols() {
            let mut quad = C64::new(0.0, 0.0);
            for (a, &sa) in sector.member_states.iter().enumerate() {
                let va = sector.vectors[(a, col)];
                if va == 0.0 {
                    continue;
                }
                for (b, &sb) in sector.member_states.iter().enumerate() {
                    quad += va * sector.vectors[(b, col)] * rho[(sa, sb)];
                }
            }
            total += quad.re;
        }
        Ok(total)
    }
}

// ---------------------------------------------------------------------------
// Explicit operators on the 2^N emitter space (small N; tests and reductions)
// ---------------------------------------------------------------------------

/// Which single-emitter operator to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitterOp {
    Plus,
    Minus,
    Z,
}

/// Explicit matrix of `sigma_i^{+,-,z}` acting on emitter `i` (0-based,
/// emitter 0 = most significant bit).
pub fn emitter_op(n: usize, i: usize, which: EmitterOp) -> Result<Array2<C64>> {
    check_explicit_size(n)?;
    if i >= n {
        return Err(Error::InvalidParameter(format!("emitter index {i} out of range for N = {n}")));
    }
    let dim = 1usize << n;
    let bit = 1usize << (n - 1 - i);
    let mut m = Array2::<C64>::zeros((dim, dim));
    for s in 0..dim {
        match which {
            EmitterOp::Plus => {
                if s & bit == 0 {
                    m[(s | bit, s)] = C64::new(1.0, 0.0);
                }
            }
            EmitterOp::Minus => {
                if s & bit != 0 {
                    m[(s & !bit, s)] = C64::new(1.0, 0.0);
                }
            }
            EmitterOp::Z => {
                let z = if s & bit != 0 { 1.0 } else { -1.0 };
                m[(s, s)] = C64::new(z, 0.0);
            }
        }
    }
    Ok(m)
}

/// Diagonal of `J_z = (1/2) sum_i sigma_i^z` in the computational basis.
pub fn jz_diagonal(n: usize) -> Result<Array1<f64>> {
    check_explicit_size(n)?;
    let dim = 1usize << n;
    Ok(Array1::from_shape_fn(dim, |s| (s as u64).count_ones() as f64 - n as f64 / 2.0))
}

/// Explicit real matrix of `J^2` in the computational basis.
pub fn jsq_matrix(n: usize) -> Result<Array2<f64>> {
    check_explicit_size(n)?;
    let dim = 1usize << n;
    let mut m = Array2::<f64>::zeros((dim, dim));
    for s in 0..dim {
        let k = (s as u64).count_ones() as usize;
        let mz = k as f64 - n as f64 / 2.0;
        m[(s, s)] = mz * mz + mz + (n - k) as f64;
        for i in 0..n {
            let bi = 1usize << (n - 1 - i);
            if s & bi == 0 {
                continue;
            }
            for j in 0..n {
                let bj = 1usize << (n - 1 - j);
                if s & bj != 0 {
                    continue;
                }
                m[((s & !bi) | bj, s)] += 1.0;
            }
        }
    }
    Ok(m)
}

/// Permutation matrix swapping emitters `a` and `b`.
pub fn swap_op(n: usize, a: usize, b: usize) -> Result<Array2<f64>> {
    check_explicit_size(n)?;
    if a >= n || b >= n {
        return Err(Error::InvalidParameter(format!("swap indices ({a}, {b}) out of range")));
    }
    let dim = 1usize << n;
    let ba = 1usize << (n - 1 - a);
    let bb = 1usize << (n - 1 - b);
    let mut m = Array2::<f64>::zeros((dim, dim));
    for s in 0..dim {
        let has_a = s & ba != 0;
        let has_b = s & bb != 0;
        let mut t = s;
        if has_a != has_b {
            t = (s ^ ba) ^ bb;
        }
        m[(t, s)] = 1.0;
    }
    Ok(m)
}
