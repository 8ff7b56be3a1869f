//! Reduced density matrices and entanglement entropies on the constrained basis.
//!
//! A subsystem state is a "local" bitstring: local bit `k` is vertex
//! `subset_a[k]` (subset sorted ascending). Only sub-bitstrings that occur
//! in the support of the state are kept, since the blockaded space has no
//! tensor-product structure.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dynamics::eigh_dense;
use crate::error::{Result, ScarError};
use crate::operators::StateVector;
use crate::{fibonacci, PHI};

/// Eigenvalues in `[-PSD_TOL, 0)` are clipped to zero; anything lower is an error.
pub const PSD_TOL: f64 = 1e-12;
/// Eigenvalues at or below this are skipped in `-Σ p ln p`.
pub const ENTROPY_CUTOFF: f64 = 1e-14;

/// Subsystem `A` given as a vertex set; `B` is the complement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    subset_a: Vec<usize>,
    n: usize,
}

impl Bipartition {
    pub fn new(subset_a: &[usize], n_vertices: usize) -> Result<Self> {
        let mut s = subset_a.to_vec();
        s.sort_unstable();
        s.dedup();
        if let Some(&v) = s.iter().find(|&&v| v >= n_vertices) {
            return Err(ScarError::VertexOutOfRange {
                vertex: v,
                n: n_vertices,
            });
        }
        if s.is_empty() || s.len() == n_vertices {
            return Err(ScarError::InvalidArgument(
                "bipartition subset must be nonempty and proper".into(),
            ));
        }
        Ok(Bipartition {
            subset_a: s,
            n: n_vertices,
        })
    }

    pub fn subset_a(&self) -> &[usize] {
        &self.subset_a
    }

    pub fn complement(&self) -> Bipartition {
        let b: Vec<usize> = (0..self.n).filter(|v| !self.subset_a.contains(v)).collect();
        Bipartition {
            subset_a: b,
            n: self.n,
        }
    }

    fn mask_a(&self) -> u64 {
        self.subset_a.iter().fold(0, |m, &v| m | (1 << v))
    }

    /// Restriction of `bits` to `A`, packed into local bits.
    pub fn local_bits(&self, bits: u64) -> u64 {
        self.subset_a
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &v)| acc | (((bits >> v) & 1) << k))
    }
}

/// Reduced density matrix over the realized local bitstrings of `A`.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    subset_a: Vec<usize>,
    states: Vec<u64>,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Realized local bitstrings (ascending); row/column order of the matrix.
    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn subset_a(&self) -> &[usize] {
        &self.subset_a
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Element `⟨row|ρ|col⟩` by local bitstring; zero for unrealized strings.
    pub fn entry(&self, row: u64, col: u64) -> Complex64 {
        match (self.states.binary_search(&row), self.states.binary_search(&col)) {
            (Ok(r), Ok(c)) => self.matrix[(r, c)],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh_dense(&self.matrix).values
    }

    /// Eigenvalues with eigenvectors (columns), ascending.
    pub fn eigensystem(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let e = eigh_dense(&self.matrix);
        (e.values, e.vectors)
    }
}

/// Support of `v` grouped by the `B` configuration: `b_bits → [(local a, amp)]`.
fn group_by_b(v: &StateVector, part: &Bipartition) -> BTreeMap<u64, Vec<(u64, Complex64)>> {
    let mask_b = !part.mask_a();
    let mut groups: BTreeMap<u64, Vec<(u64, Complex64)>> = BTreeMap::new();
    for (&s, &a) in v.basis().states().iter().zip(v.amplitudes()) {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        groups
            .entry(s & mask_b)
            .or_default()
            .push((part.local_bits(s), a));
    }
    groups
}

fn realized(groups: &BTreeMap<u64, Vec<(u64, Complex64)>>) -> Vec<u64> {
    let mut states: Vec<u64> = groups.values().flatten().map(|&(a, _)| a).collect();
    states.sort_unstable();
    states.dedup();
    states
}

fn check_part(v: &StateVector, part: &Bipartition) -> Result<()> {
    if part.n != v.basis().n_vertices() {
        return Err(ScarError::DimensionMismatch {
            expected: v.basis().n_vertices(),
            found: part.n,
        });
    }
    Ok(())
}

/// Partial trace over the complement of `part`.
pub fn rdm(v: &StateVector, part: &Bipartition) -> Result<DensityMatrix> {
    check_part(v, part)?;
    let groups = group_by_b(v, part);
    let states = realized(&groups);
    let d = states.len();
    let mut m = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
    for entries in groups.values() {
        let idx: Vec<usize> = entries
            .iter()
            .map(|(a, _)| states.binary_search(a).expect("realized"))
            .collect();
        for (i, &(_, x)) in entries.iter().enumerate() {
            for (j, &(_, y)) in entries.iter().enumerate() {
                m[(idx[i], idx[j])] += x * y.conj();
            }
        }
    }
    Ok(DensityMatrix {
        subset_a: part.subset_a.clone(),
        states,
        matrix: m,
    })
}

/// Von Neumann entropy (natural log).
pub fn entropy(rho: &DensityMatrix) -> Result<f64> {
    let ev = rho.eigenvalues();
    if let Some(&low) = ev.iter().find(|&&p| p < -PSD_TOL) {
        return Err(ScarError::NotPositive(low));
    }
    Ok(entropy_of_probabilities(&ev))
}

/// `−Σ p ln p` over `p > ENTROPY_CUTOFF`.
pub fn entropy_of_probabilities(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > ENTROPY_CUTOFF)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// Schmidt coefficients across `part`, descending.
pub fn schmidt_values(v: &StateVector, part: &Bipartition) -> Result<Vec<f64>> {
    check_part(v, part)?;
    let groups = group_by_b(v, part);
    let states = realized(&groups);
    let (rows, cols) = (states.len(), groups.len());
    if rows == 0 {
        return Ok(Vec::new());
    }
    let mut m = DMatrix::from_element(rows, cols, Complex64::new(0.0, 0.0));
    for (c, entries) in groups.values().enumerate() {
        for &(a, x) in entries {
            m[(states.binary_search(&a).expect("realized"), c)] = x;
        }
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Entropy from Schmidt coefficients.
pub fn schmidt_entropy(values: &[f64]) -> f64 {
    let p: Vec<f64> = values.iter().map(|s| s * s).collect();
    entropy_of_probabilities(&p)
}

/// Closed-form entropy of `m` contiguous sites of the ring state with `L` pairs.
pub fn analytic_standard_entropy(l: usize, m: usize) -> Result<f64> {
    if l < 2 || m < 1 || m > l {
        return Err(ScarError::InvalidArgument(format!(
            "need 1 ≤ m ≤ L and L ≥ 2, got L={l}, m={m}"
        )));
    }
    let (l, m) = (l as i64, m as i64);
    let f = |n: i64| fibonacci(n) as f64;
    let chi = f(l - 1) + f(l + 1);
    let term = |count: f64, weight: f64| {
        if count == 0.0 || weight == 0.0 {
            0.0
        } else {
            count * weight * (weight / chi).ln()
        }
    };
    let s = term(f(m), f(l - m + 2))
        + term(2.0 * f(m - 1), f(l - m + 1))
        + term(f(m - 2), f(l - m));
    Ok(-s / chi)
}

/// Large-`L` limit of [`analytic_standard_entropy`] at fixed `m`.
pub fn asymptotic_standard_entropy(m: usize) -> f64 {
    (m as f64 - 2.0 * PHI / 5f64.sqrt()) * PHI.ln() + 0.5 * 5f64.ln()
}

/// Page value `ln d_a − d_a / (2 d_b)`.
pub fn page_value(d_a: usize, d_b: usize) -> Result<f64> {
    if d_a == 0 || d_b == 0 || d_a > d_b {
        return Err(ScarError::InvalidArgument(format!(
            "page value needs 1 ≤ d_a ≤ d_b, got ({d_a}, {d_b})"
        )));
    }
    Ok((d_a as f64).ln() - d_a as f64 / (2.0 * d_b as f64))
}

/// Single-site probabilities `(p0, p1)` in the large-`L` limit.
pub fn asymptotic_single_site() -> (f64, f64) {
    let s5 = 5f64.sqrt();
    (PHI / s5, 1.0 / (s5 * PHI))
}

/// Amplitude ratio of the dominant eigenvector of the pair RDM at separation `L`.
pub fn eta() -> f64 {
    (PHI.powi(4) - 2.0 * PHI * PHI + 5.0).sqrt() - PHI
}

/// Dominant eigenvalue of the pair RDM at separation `L` in the large-`L` limit.
pub fn p1() -> f64 {
    (2.0 * PHI * PHI + eta()) / (2.0 * 5f64.sqrt() * PHI)
}
