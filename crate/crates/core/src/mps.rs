//! Bond-dimension-2 MPS for the ring and dangler doubled states, and the
//! entropies of their entanglement-minimizing cuts.
//!
//! MPS site `i` carries the two spins `(s_i, s_ī)`. In the MPS vertex order,
//! vertex `2i` is `s_i` and vertex `2i+1` is `s_ī`; in the geometry order
//! they are `i` and `i + L`.

use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::basis::{enumerate_blockaded, BlockadedBasis};
use crate::entanglement::{entropy_of_probabilities, schmidt_entropy, schmidt_values, Bipartition};
use crate::error::{Result, ScarError};
use crate::geometry::{Geometry, Graph};
use crate::operators::StateVector;
use crate::scars::{build_lambda, ScarSpec};
use crate::PHI;

/// Largest `L` accepted by [`finite_size_min_cut_entropy`].
pub const MIN_CUT_MAX_L: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpsMode {
    /// Periodic trace; reproduces the ring state.
    Trace,
    /// Boundary vectors; reproduces the dangler state.
    Boundary,
}

/// Site-independent tensors `M^{st}` and boundary vectors.
#[derive(Clone, Debug)]
pub struct LambdaMps {
    pub m00: Matrix2<f64>,
    pub m11: Matrix2<f64>,
    pub v_left: Vector2<f64>,
    pub v_right: Vector2<f64>,
}

impl Default for LambdaMps {
    fn default() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        LambdaMps {
            m00: Matrix2::new(0.5, 0.5, 0.5, 0.5),
            m11: Matrix2::new(0.0, 0.0, -2.0, 0.0),
            v_left: Vector2::new(r, r),
            v_right: Vector2::new(r, r),
        }
    }
}

impl LambdaMps {
    /// `M^{st}`; the mixed tensors vanish.
    pub fn tensor(&self, s: u8, t: u8) -> Matrix2<f64> {
        match (s, t) {
            (0, 0) => self.m00,
            (1, 1) => self.m11,
            _ => Matrix2::zeros(),
        }
    }

    /// Unnormalized amplitude of the configuration `[(s_1, s_1̄), …]`.
    pub fn contract(&self, config: &[(u8, u8)], mode: MpsMode) -> f64 {
        let prod = config
            .iter()
            .fold(Matrix2::identity(), |acc, &(s, t)| acc * self.tensor(s, t));
        match mode {
            MpsMode::Trace => prod.trace(),
            MpsMode::Boundary => (self.v_left.transpose() * prod * self.v_right)[(0, 0)],
        }
    }
}

/// Geometry built by the given mode: ring for trace, dangler for boundary.
pub fn mode_geometry(l: usize, mode: MpsMode) -> Geometry {
    match mode {
        MpsMode::Trace => Geometry::RingDoubled { half_len: l },
        MpsMode::Boundary => Geometry::Dangler { half_len: l },
    }
}

/// `perm[geometry vertex] = MPS vertex`.
pub fn mps_site_permutation(l: usize) -> Vec<usize> {
    (0..2 * l)
        .map(|v| if v < l { 2 * v } else { 2 * (v - l) + 1 })
        .collect()
}

/// The mode's graph relabeled into MPS vertex order.
pub fn mps_graph(l: usize, mode: MpsMode) -> Result<Graph> {
    let (g, _) = mode_geometry(l, mode).build()?;
    g.relabel(&mps_site_permutation(l))
}

/// Normalized MPS state on the blockaded basis of [`mps_graph`].
pub fn mps_amplitudes(l: usize, mode: MpsMode) -> Result<StateVector> {
    if l < 2 {
        return Err(ScarError::InvalidArgument(format!(
            "MPS construction needs L ≥ 2, got {l}"
        )));
    }
    let basis = enumerate_blockaded(&mps_graph(l, mode)?)?;
    mps_on_basis(l, mode, &basis)
}

fn mps_on_basis(l: usize, mode: MpsMode, basis: &Arc<BlockadedBasis>) -> Result<StateVector> {
    let mps = LambdaMps::default();
    let amps = basis
        .states()
        .iter()
        .map(|&s| {
            let config: Vec<(u8, u8)> = (0..l)
                .map(|i| (((s >> (2 * i)) & 1) as u8, ((s >> (2 * i + 1)) & 1) as u8))
                .collect();
            Complex64::new(mps.contract(&config, mode), 0.0)
        })
        .collect();
    let mut v = StateVector::new(basis.clone(), amps)?;
    v.normalize()?;
    Ok(v)
}

/// Maps an MPS-ordered state onto the basis of the geometry graph.
pub fn to_geometry_order(v: &StateVector, l: usize, target: &Arc<BlockadedBasis>) -> Result<StateVector> {
    let perm = mps_site_permutation(l);
    let mut inverse = vec![0; perm.len()];
    for (g, &m) in perm.iter().enumerate() {
        inverse[m] = g;
    }
    let mut out = StateVector::zeros(target.clone());
    for (&s, &a) in v.basis().states().iter().zip(v.amplitudes()) {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let t = crate::scars::permute_bits(s, &inverse);
        let k = target.index_of(t).ok_or(ScarError::NotInBasis(t))?;
        out.amplitudes_mut()[k] = a;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutKind {
    /// Keeps every correlated pair on one side.
    Regular,
    /// Separates the middle pair; unavoidable for odd `L` half cuts.
    PairSplitting,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainGeometry {
    Ring,
    Dangler,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(l: usize) -> Parity {
        if l % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// `γ` of the regular-cut Schmidt spectrum `{½ + γ, ½ − γ}`.
pub fn gamma() -> f64 {
    (1.0 / (2.0 * 5f64.sqrt()) - 0.05).sqrt()
}

/// Asymptotic entropy of one regular cut.
pub fn s_min() -> f64 {
    let g = gamma();
    entropy_of_probabilities(&[0.5 + g, 0.5 - g])
}

/// Asymptotic entropy of one pair-splitting cut.
pub fn s_min_prime() -> f64 {
    let s5 = 5f64.sqrt();
    entropy_of_probabilities(&[PHI / s5, 1.0 / (s5 * PHI)])
}

/// Large-`L` half-system min-cut entropy. Even `L` uses regular cuts and odd
/// `L` needs a pair-splitting cut; other combinations are rejected.
pub fn min_cut_entropy_asymptotic(cut: CutKind, geometry: ChainGeometry, parity: Parity) -> Result<f64> {
    match (cut, geometry, parity) {
        (CutKind::Regular, ChainGeometry::Dangler, Parity::Even) => Ok(s_min()),
        (CutKind::PairSplitting, ChainGeometry::Dangler, Parity::Odd) => Ok(s_min_prime()),
        (CutKind::Regular, ChainGeometry::Ring, Parity::Even) => Ok(2.0 * s_min()),
        (CutKind::PairSplitting, ChainGeometry::Ring, Parity::Odd) => Ok(s_min() + s_min_prime()),
        _ => Err(ScarError::InvalidArgument(format!(
            "{cut:?} cut does not give a half-system bipartition for {parity:?} L"
        ))),
    }
}

/// Subsystem `A` of the half-system min cut in geometry labels: pairs
/// `0..k` on both sides, plus the A-member of pair `k` for a pair-splitting cut.
pub fn min_cut_subset(l: usize, cut: CutKind) -> Result<Vec<usize>> {
    let parity_ok = match cut {
        CutKind::Regular => l % 2 == 0,
        CutKind::PairSplitting => l % 2 == 1,
    };
    if !parity_ok || l < 2 {
        return Err(ScarError::Parity(format!(
            "{cut:?} half cut is not defined for L = {l}"
        )));
    }
    let k = l / 2;
    let mut a: Vec<usize> = (0..k).chain(l..l + k).collect();
    if cut == CutKind::PairSplitting {
        a.push(k);
    }
    a.sort_unstable();
    Ok(a)
}

/// Exact half-system min-cut entropy of the finite ring or dangler state.
pub fn finite_size_min_cut_entropy(l: usize, geometry: ChainGeometry, cut: CutKind) -> Result<f64> {
    if l > MIN_CUT_MAX_L {
        return Err(ScarError::DimensionLimit {
            what: "min-cut system half length",
            size: l,
            limit: MIN_CUT_MAX_L,
        });
    }
    let subset = min_cut_subset(l, cut)?;
    let geom = match geometry {
        ChainGeometry::Ring => Geometry::RingDoubled { half_len: l },
        ChainGeometry::Dangler => Geometry::Dangler { half_len: l },
    };
    let spec = ScarSpec::from_geometry(&geom)?;
    let v = build_lambda(&spec)?;
    let part = Bipartition::new(&subset, 2 * l)?;
    Ok(schmidt_entropy(&schmidt_values(&v, &part)?))
}

/// Min-cut entropy of the comparison scar state of prior work (documented constant).
pub const PRIOR_SCAR_MIN_CUT_ENTROPY: f64 = 2.0 * std::f64::consts::LN_2;
