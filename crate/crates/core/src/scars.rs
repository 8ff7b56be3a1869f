//! Doubled scar states: construction, verification, and eigenspace counting.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::basis::{embed_product, enumerate_blockaded_with, BasisLimits, BlockadedBasis};
use crate::dynamics::{eigh_dense, DENSE_MAX_DIM};
use crate::error::{Result, ScarError};
use crate::geometry::{chain, check_lambda_condition, Boundary, Geometry, Graph, PairingPattern};
use crate::operators::{apply, apply_c, pair_projector_mask, SparseOperator, StateVector};

/// Residual threshold for accepting a sector eigenvector as a full eigenvector.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-9;
/// Relative threshold for grouping degenerate eigenvalues.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Singular-value threshold for linear independence.
pub const GRAM_TOL: f64 = 1e-8;

/// A certified (graph, pairing) together with its half-graph and bases.
#[derive(Clone, Debug)]
pub struct ScarSpec {
    pub graph: Graph,
    pub pairing: PairingPattern,
    pub half_graph: Graph,
    pub half_basis: Arc<BlockadedBasis>,
    pub full_basis: Arc<BlockadedBasis>,
}

impl ScarSpec {
    pub fn new(graph: Graph, pairing: PairingPattern) -> Result<Self> {
        Self::with_limits(graph, pairing, BasisLimits::default())
    }

    pub fn with_limits(graph: Graph, pairing: PairingPattern, limits: BasisLimits) -> Result<Self> {
        let half_graph = check_lambda_condition(&graph, &pairing)?.ok_or_else(|| {
            ScarError::InvalidPairing("pairing does not satisfy the folded-neighborhood condition".into())
        })?;
        let half_basis = enumerate_blockaded_with(&half_graph, limits)?;
        let full_basis = enumerate_blockaded_with(&graph, limits)?;
        Ok(ScarSpec {
            graph,
            pairing,
            half_graph,
            half_basis,
            full_basis,
        })
    }

    pub fn from_geometry(geom: &Geometry) -> Result<Self> {
        Self::from_geometry_with(geom, BasisLimits::default())
    }

    pub fn from_geometry_with(geom: &Geometry, limits: BasisLimits) -> Result<Self> {
        let (g, p) = geom.build()?;
        let p = p.ok_or_else(|| {
            ScarError::UnsupportedGeometry(format!("{} carries no pairing", geom.label()))
        })?;
        Self::with_limits(g, p, limits)
    }

    /// Number of pairs `L`.
    pub fn half_len(&self) -> usize {
        self.pairing.len()
    }
}

/// Normalized doubled state `Σ_f (−1)^{|f|} |f⟩|f⟩ / √|F|` on the full basis.
pub fn build_lambda(spec: &ScarSpec) -> Result<StateVector> {
    let mut v = StateVector::zeros(spec.full_basis.clone());
    let amp = 1.0 / (spec.half_basis.dim() as f64).sqrt();
    for &f in spec.half_basis.states() {
        let k = embed_product(&spec.half_basis, &spec.pairing, &spec.full_basis, f)?;
        let sign = if f.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        v.amplitudes_mut()[k] = Complex64::new(sign * amp, 0.0);
    }
    Ok(v)
}

/// `‖(H − E) v‖₂`.
pub fn residual(h: &SparseOperator, v: &StateVector, energy: f64) -> Result<f64> {
    let hv = apply(h, v)?;
    Ok(hv
        .amplitudes()
        .iter()
        .zip(v.amplitudes())
        .map(|(a, b)| (a - b * energy).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Symmetry operators that can be checked against a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    /// `C = Π Z_i`.
    Reflection,
    /// Ring translation by one site.
    Translation,
    /// Ring inversion `v → N−1−v`.
    Inversion,
    /// `SWAP_{i,ī}` for pair `k`.
    Swap(usize),
    /// `Z_i Z_ī` for pair `k`.
    PairZz(usize),
}

/// `‖S v − v‖` for each supported symmetry; ring-only entries are `None` elsewhere.
#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    pub reflection: f64,
    pub translation: Option<f64>,
    pub inversion: Option<f64>,
    pub swap: Vec<f64>,
    pub pair_zz: Vec<f64>,
}

impl SymmetryReport {
    pub fn max_deviation(&self) -> f64 {
        [self.reflection]
            .into_iter()
            .chain(self.translation)
            .chain(self.inversion)
            .chain(self.swap.iter().copied())
            .chain(self.pair_zz.iter().copied())
            .fold(0.0, f64::max)
    }
}

fn is_ring(g: &Graph) -> bool {
    g.n_vertices() >= 3 && chain(g.n_vertices(), Boundary::Periodic).map_or(false, |r| &r == g)
}

/// `‖S v − v‖` for a single symmetry.
pub fn symmetry_deviation(spec: &ScarSpec, v: &StateVector, sym: Symmetry) -> Result<f64> {
    let n = spec.graph.n_vertices();
    match sym {
        Symmetry::Reflection => apply_c(v).distance(v),
        Symmetry::Translation => {
            if !is_ring(&spec.graph) {
                return Err(ScarError::SymmetryUndefined("translation".into()));
            }
            let perm: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
            permutation_deviation(v, &perm)
        }
        Symmetry::Inversion => {
            if !is_ring(&spec.graph) {
                return Err(ScarError::SymmetryUndefined("inversion".into()));
            }
            let perm: Vec<usize> = (0..n).map(|i| n - 1 - i).collect();
            permutation_deviation(v, &perm)
        }
        Symmetry::Swap(k) => {
            let &(a, b) = spec.pairing.pairs().get(k).ok_or_else(|| {
                ScarError::InvalidArgument(format!("pair index {k} out of range"))
            })?;
            let mut perm: Vec<usize> = (0..n).collect();
            perm.swap(a, b);
            permutation_deviation(v, &perm)
        }
        Symmetry::PairZz(k) => {
            let &(a, b) = spec.pairing.pairs().get(k).ok_or_else(|| {
                ScarError::InvalidArgument(format!("pair index {k} out of range"))
            })?;
            let basis = v.basis();
            Ok(v.amplitudes()
                .iter()
                .zip(basis.states())
                .filter(|(_, &s)| (s >> a) & 1 != (s >> b) & 1)
                .map(|(x, _)| 4.0 * x.norm_sqr())
                .sum::<f64>()
                .sqrt())
        }
    }
}

/// `‖P v − v‖` for the site permutation `perm`; amplitude pushed outside the
/// basis counts fully toward the deviation.
fn permutation_deviation(v: &StateVector, perm: &[usize]) -> Result<f64> {
    let basis = v.basis();
    let mut moved = vec![Complex64::new(0.0, 0.0); v.dim()];
    let mut lost = 0.0;
    for (k, &s) in basis.states().iter().enumerate() {
        let t = permute_bits(s, perm);
        match basis.index_of(t) {
            Some(j) => moved[j] = v.amplitudes()[k],
            None => lost += v.amplitudes()[k].norm_sqr(),
        }
    }
    let diff: f64 = moved
        .iter()
        .zip(v.amplitudes())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok((diff + lost).sqrt())
}

/// Moves bit `i` of `s` to position `perm[i]`.
pub fn permute_bits(s: u64, perm: &[usize]) -> u64 {
    perm.iter()
        .enumerate()
        .filter(|(i, _)| (s >> i) & 1 == 1)
        .fold(0, |acc, (_, &p)| acc | (1 << p))
}

pub fn check_symmetries(spec: &ScarSpec, v: &StateVector) -> Result<SymmetryReport> {
    let ring = is_ring(&spec.graph);
    let l = spec.half_len();
    Ok(SymmetryReport {
        reflection: symmetry_deviation(spec, v, Symmetry::Reflection)?,
        translation: if ring {
            Some(symmetry_deviation(spec, v, Symmetry::Translation)?)
        } else {
            None
        },
        inversion: if ring {
            Some(symmetry_deviation(spec, v, Symmetry::Inversion)?)
        } else {
            None
        },
        swap: (0..l)
            .map(|k| symmetry_deviation(spec, v, Symmetry::Swap(k)))
            .collect::<Result<_>>()?,
        pair_zz: (0..l)
            .map(|k| symmetry_deviation(spec, v, Symmetry::PairZz(k)))
            .collect::<Result<_>>()?,
    })
}

/// Orthonormal basis of the joint eigenspace of `H` and all listed `Z_a Z_b` (+1).
#[derive(Clone, Debug)]
pub struct ZzEigenspace {
    pub dimension: usize,
    pub energies: Vec<f64>,
    pub states: Vec<StateVector>,
}

/// Counts states with `H ψ = E ψ` and `Z_a Z_b ψ = ψ` for every listed pair.
///
/// `H` is diagonalized inside the joint +1 sector; each degenerate eigenspace
/// is then filtered by the residual of the full `H` via an SVD.
pub fn simultaneous_zz_eigenspace(
    h: &SparseOperator,
    pairs: &[(usize, usize)],
) -> Result<ZzEigenspace> {
    if !h.is_hermitian() {
        return Err(ScarError::NotHermitian);
    }
    let basis = h.basis();
    let mask = pair_projector_mask(basis, pairs)?;
    let sector: Vec<usize> = (0..h.dim()).filter(|&k| mask[k]).collect();
    let ns = sector.len();
    if ns > DENSE_MAX_DIM {
        return Err(ScarError::DimensionLimit {
            what: "ZZ sector dimension",
            size: ns,
            limit: DENSE_MAX_DIM,
        });
    }
    let mut pos = vec![usize::MAX; h.dim()];
    for (i, &k) in sector.iter().enumerate() {
        pos[k] = i;
    }
    let mut hs = DMatrix::from_element(ns, ns, Complex64::new(0.0, 0.0));
    for (i, &k) in sector.iter().enumerate() {
        for (c, v) in h.row(k) {
            if pos[c] != usize::MAX {
                hs[(i, pos[c])] = v;
            }
        }
    }
    let eig = eigh_dense(&hs);
    let tol = DEGENERACY_TOL * h.one_norm().max(1.0);

    let mut energies = Vec::new();
    let mut states = Vec::new();
    let mut start = 0;
    while start < ns {
        let mut end = start + 1;
        while end < ns && eig.values[end] - eig.values[end - 1] <= tol {
            end += 1;
        }
        let m = end - start;
        let energy = eig.values[start..end].iter().sum::<f64>() / m as f64;
        // Embed the group's sector eigenvectors in the full space.
        let mut q = DMatrix::from_element(h.dim(), m, Complex64::new(0.0, 0.0));
        for j in 0..m {
            for (i, &k) in sector.iter().enumerate() {
                q[(k, j)] = eig.vectors[(i, start + j)];
            }
        }
        let mut resid = DMatrix::from_element(h.dim(), m, Complex64::new(0.0, 0.0));
        for j in 0..m {
            let col: Vec<Complex64> = q.column(j).iter().copied().collect();
            let hq = h.matvec(&col);
            for r in 0..h.dim() {
                resid[(r, j)] = hq[r] - col[r] * energy;
            }
        }
        let svd = resid.svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        // nalgebra returns min(D, m) singular values; with D ≥ m this is m.
        for (idx, &sigma) in svd.singular_values.iter().enumerate() {
            if sigma <= EIGEN_RESIDUAL_TOL {
                let coeffs: Vec<Complex64> = (0..m).map(|j| v_t[(idx, j)].conj()).collect();
                let amps: Vec<Complex64> = (0..h.dim())
                    .map(|r| (0..m).map(|j| q[(r, j)] * coeffs[j]).sum())
                    .collect();
                let mut st = StateVector::new(basis.clone(), amps)?;
                st.normalize()?;
                states.push(st);
                energies.push(energy);
            }
        }
        start = end;
    }
    Ok(ZzEigenspace {
        dimension: states.len(),
        energies,
        states,
    })
}

/// Singular values (descending) of the Gram matrix `G_ij = ⟨ψ_i|ψ_j⟩`.
pub fn gram_singular_values(states: &[StateVector]) -> Result<Vec<f64>> {
    let n = states.len();
    let mut g = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = states[i].inner(&states[j])?;
        }
    }
    let mut sv: Vec<f64> = g.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Number of linearly independent states (Gram singular values above [`GRAM_TOL`]).
pub fn independent_count(states: &[StateVector]) -> Result<usize> {
    Ok(gram_singular_values(states)?
        .into_iter()
        .filter(|&s| s > GRAM_TOL)
        .count())
}

/// Builds the doubled state of `pairing` on a shared full basis.
pub fn lambda_for_pairing(
    graph: &Graph,
    pairing: &PairingPattern,
    full_basis: &Arc<BlockadedBasis>,
) -> Result<StateVector> {
    let mut spec = ScarSpec::new(graph.clone(), pairing.clone())?;
    if spec.full_basis.states() != full_basis.states() {
        return Err(ScarError::BasisMismatch);
    }
    spec.full_basis = full_basis.clone();
    build_lambda(&spec)
}
