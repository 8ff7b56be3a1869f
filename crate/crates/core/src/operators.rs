//! Sparse operators on a blockaded basis and the state vectors they act on.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::BlockadedBasis;
use crate::error::{Result, ScarError};
use crate::geometry::Graph;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Operator in compressed sparse row form over a blockaded basis.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    basis: Arc<BlockadedBasis>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    hermitian: bool,
}

impl SparseOperator {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped. The Hermitian flag is computed from the result.
    pub fn from_triplets(
        basis: Arc<BlockadedBasis>,
        mut triplets: Vec<(usize, usize, Complex64)>,
    ) -> Result<Self> {
        let dim = basis.dim();
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= dim || c >= dim) {
            return Err(ScarError::DimensionMismatch {
                expected: dim,
                found: r.max(c) + 1,
            });
        }
        if triplets.iter().any(|(_, _, v)| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(ScarError::InvalidArgument("non-finite matrix entry".into()));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, Complex64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|t| t.2 != ZERO);
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(merged.len());
        let mut vals = Vec::with_capacity(merged.len());
        for (r, c, v) in merged {
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut op = SparseOperator {
            basis,
            row_ptr,
            cols,
            vals,
            hermitian: false,
        };
        op.hermitian = op.check_hermitian();
        Ok(op)
    }

    /// Diagonal operator with the given real entries.
    pub fn diagonal(basis: Arc<BlockadedBasis>, diag: &[f64]) -> Result<Self> {
        if diag.len() != basis.dim() {
            return Err(ScarError::DimensionMismatch {
                expected: basis.dim(),
                found: diag.len(),
            });
        }
        let triplets = diag
            .iter()
            .enumerate()
            .map(|(k, &d)| (k, k, Complex64::new(d, 0.0)))
            .collect();
        SparseOperator::from_triplets(basis, triplets)
    }

    pub fn identity(basis: Arc<BlockadedBasis>) -> Self {
        let d = vec![1.0; basis.dim()];
        SparseOperator::diagonal(basis, &d).expect("identity has matching dimension")
    }

    pub fn basis(&self) -> &Arc<BlockadedBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Stored `(column, value)` entries of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => ZERO,
        }
    }

    /// All stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        (0..self.dim())
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    fn check_hermitian(&self) -> bool {
        let scale = self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
        (0..self.dim()).all(|r| {
            self.row(r)
                .all(|(c, v)| (self.get(c, r).conj() - v).norm() <= 1e-14 * scale)
        })
    }

    /// `y = A x` on raw slices.
    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *out = acc;
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; x.len()];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        let mut m = DMatrix::from_element(d, d, ZERO);
        for r in 0..d {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut sums = vec![0.0; self.dim()];
        for (c, v) in self.cols.iter().zip(&self.vals) {
            sums[*c] += v.norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Diagonal entries (real parts).
    pub fn diagonal_entries(&self) -> Vec<f64> {
        (0..self.dim()).map(|r| self.get(r, r).re).collect()
    }

    /// `self + diag(d)`.
    pub fn add_diagonal(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.dim() {
            return Err(ScarError::DimensionMismatch {
                expected: self.dim(),
                found: d.len(),
            });
        }
        let mut t = self.triplets();
        t.extend(
            d.iter()
                .enumerate()
                .filter(|(_, &x)| x != 0.0)
                .map(|(k, &x)| (k, k, Complex64::new(x, 0.0))),
        );
        SparseOperator::from_triplets(self.basis.clone(), t)
    }

    /// `self + other` on a shared basis.
    pub fn add(&self, other: &SparseOperator) -> Result<Self> {
        if self.basis.states() != other.basis.states() {
            return Err(ScarError::BasisMismatch);
        }
        let mut t = self.triplets();
        t.extend(other.triplets());
        SparseOperator::from_triplets(self.basis.clone(), t)
    }

    pub fn scale(&self, s: f64) -> Self {
        let t = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| (r, c, v * s))
            .collect();
        SparseOperator::from_triplets(self.basis.clone(), t).expect("same shape")
    }

    /// Operator product `self * other`.
    pub fn compose(&self, other: &SparseOperator) -> Result<Self> {
        if self.basis.states() != other.basis.states() {
            return Err(ScarError::BasisMismatch);
        }
        let mut t = Vec::new();
        for r in 0..self.dim() {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    t.push((r, c, a * b));
                }
            }
        }
        SparseOperator::from_triplets(self.basis.clone(), t)
    }
}

/// Complex amplitudes over a blockaded basis.
#[derive(Clone, Debug)]
pub struct StateVector {
    basis: Arc<BlockadedBasis>,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(basis: Arc<BlockadedBasis>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(ScarError::DimensionMismatch {
                expected: basis.dim(),
                found: amps.len(),
            });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(ScarError::Numerical("non-finite amplitude".into()));
        }
        Ok(StateVector { basis, amps })
    }

    pub fn zeros(basis: Arc<BlockadedBasis>) -> Self {
        let d = basis.dim();
        StateVector {
            basis,
            amps: vec![ZERO; d],
        }
    }

    /// Computational basis state `|bits⟩`.
    pub fn basis_state(basis: Arc<BlockadedBasis>, bits: u64) -> Result<Self> {
        let k = basis.index_of(bits).ok_or(ScarError::NotInBasis(bits))?;
        let mut v = StateVector::zeros(basis);
        v.amps[k] = ONE;
        Ok(v)
    }

    pub fn basis(&self) -> &Arc<BlockadedBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    /// Amplitude of bitstring `bits` (zero if outside the basis).
    pub fn amplitude_of(&self, bits: u64) -> Complex64 {
        self.basis.index_of(bits).map_or(ZERO, |k| self.amps[k])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm and returns the previous norm.
    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(ScarError::Numerical("cannot normalize a zero vector".into()));
        }
        for a in &mut self.amps {
            *a /= n;
        }
        Ok(n)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// `‖self − other‖₂`.
    pub fn distance(&self, other: &StateVector) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// `⟨self|O|self⟩`.
    pub fn expectation(&self, op: &SparseOperator) -> Result<Complex64> {
        let ov = apply(op, self)?;
        self.inner(&ov)
    }

    fn check_same(&self, other: &StateVector) -> Result<()> {
        if self.amps.len() != other.amps.len() {
            return Err(ScarError::DimensionMismatch {
                expected: self.amps.len(),
                found: other.amps.len(),
            });
        }
        if !Arc::ptr_eq(&self.basis, &other.basis) && self.basis.states() != other.basis.states()
        {
            return Err(ScarError::BasisMismatch);
        }
        Ok(())
    }
}

fn check_basis(g: &Graph, basis: &BlockadedBasis) -> Result<()> {
    if basis.graph() != g {
        Err(ScarError::BasisMismatch)
    } else {
        Ok(())
    }
}

/// PXP Hamiltonian `Σ_i w_i X_i Π_{j∼i} P_j` restricted to the blockaded basis.
///
/// `couplings` defaults to 1 on every vertex; `vertex_subset` restricts the sum.
pub fn build_pxp(
    g: &Graph,
    basis: &Arc<BlockadedBasis>,
    couplings: Option<&[f64]>,
    vertex_subset: Option<&[usize]>,
) -> Result<SparseOperator> {
    check_basis(g, basis)?;
    let n = g.n_vertices();
    if let Some(w) = couplings {
        if w.len() != n {
            return Err(ScarError::DimensionMismatch {
                expected: n,
                found: w.len(),
            });
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(ScarError::InvalidArgument("non-finite coupling".into()));
        }
    }
    let vertices: Vec<usize> = match vertex_subset {
        Some(s) => {
            if let Some(&v) = s.iter().find(|&&v| v >= n) {
                return Err(ScarError::VertexOutOfRange { vertex: v, n });
            }
            s.to_vec()
        }
        None => (0..n).collect(),
    };
    let masks = g.neighbor_masks();
    let mut triplets = Vec::new();
    for (r, &f) in basis.states().iter().enumerate() {
        for &i in &vertices {
            let w = couplings.map_or(1.0, |w| w[i]);
            if w == 0.0 || f & masks[i] != 0 {
                continue;
            }
            let c = basis
                .index_of(f ^ (1 << i))
                .expect("flip with empty neighborhood stays blockaded");
            triplets.push((r, c, Complex64::new(w, 0.0)));
        }
    }
    SparseOperator::from_triplets(basis.clone(), triplets)
}

fn check_vertex(basis: &BlockadedBasis, v: usize) -> Result<()> {
    let n = basis.n_vertices();
    if v >= n {
        Err(ScarError::VertexOutOfRange { vertex: v, n })
    } else {
        Ok(())
    }
}

/// Diagonal `Z_a Z_b` (+1 when bits `a` and `b` agree).
pub fn build_zz(basis: &Arc<BlockadedBasis>, a: usize, b: usize) -> Result<SparseOperator> {
    check_vertex(basis, a)?;
    check_vertex(basis, b)?;
    if a == b {
        return Err(ScarError::InvalidArgument(format!(
            "ZZ needs distinct vertices, got ({a},{b})"
        )));
    }
    SparseOperator::diagonal(basis.clone(), &zz_diagonal(basis, a, b))
}

/// Diagonal of `Z_a Z_b`.
pub fn zz_diagonal(basis: &BlockadedBasis, a: usize, b: usize) -> Vec<f64> {
    basis
        .states()
        .iter()
        .map(|&s| if (s >> a) & 1 == (s >> b) & 1 { 1.0 } else { -1.0 })
        .collect()
}

/// Diagonal of `Z_v` (`+1` for bit 0, `−1` for bit 1).
pub fn z_diagonal(basis: &BlockadedBasis, v: usize) -> Vec<f64> {
    basis
        .states()
        .iter()
        .map(|&s| if (s >> v) & 1 == 0 { 1.0 } else { -1.0 })
        .collect()
}

/// Diagonal 0/1 mask: 1 when every listed pair has matching bits.
pub fn pair_projector_mask(basis: &BlockadedBasis, pairs: &[(usize, usize)]) -> Result<Vec<bool>> {
    let mut used = 0u64;
    for &(a, b) in pairs {
        check_vertex(basis, a)?;
        check_vertex(basis, b)?;
        if a == b || (used >> a) & 1 == 1 || (used >> b) & 1 == 1 {
            return Err(ScarError::InvalidArgument(format!(
                "pair ({a},{b}) overlaps another pair"
            )));
        }
        used |= (1 << a) | (1 << b);
    }
    Ok(basis
        .states()
        .iter()
        .map(|&s| pairs.iter().all(|&(a, b)| (s >> a) & 1 == (s >> b) & 1))
        .collect())
}

/// Projector onto matching bits for every listed pair.
pub fn build_pair_projector(
    basis: &Arc<BlockadedBasis>,
    pairs: &[(usize, usize)],
) -> Result<SparseOperator> {
    let mask = pair_projector_mask(basis, pairs)?;
    let d: Vec<f64> = mask.into_iter().map(|m| if m { 1.0 } else { 0.0 }).collect();
    SparseOperator::diagonal(basis.clone(), &d)
}

pub fn apply(op: &SparseOperator, v: &StateVector) -> Result<StateVector> {
    if op.dim() != v.dim() {
        return Err(ScarError::DimensionMismatch {
            expected: op.dim(),
            found: v.dim(),
        });
    }
    if op.basis().states() != v.basis().states() {
        return Err(ScarError::BasisMismatch);
    }
    Ok(StateVector {
        basis: v.basis.clone(),
        amps: op.matvec(&v.amps),
    })
}

/// `Z_site |v⟩`.
pub fn apply_z(v: &StateVector, site: usize) -> Result<StateVector> {
    check_vertex(&v.basis, site)?;
    let mut out = v.clone();
    for (a, &s) in out.amps.iter_mut().zip(v.basis.states()) {
        if (s >> site) & 1 == 1 {
            *a = -*a;
        }
    }
    Ok(out)
}

/// Spectral reflection `C = Π_i Z_i`, applied as a sign per Hamming weight.
pub fn apply_c(v: &StateVector) -> StateVector {
    let mut out = v.clone();
    for (a, &s) in out.amps.iter_mut().zip(v.basis.states()) {
        if s.count_ones() % 2 == 1 {
            *a = -*a;
        }
    }
    out
}
