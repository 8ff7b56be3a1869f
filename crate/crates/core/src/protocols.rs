//! Postselected state preparation, quenches, OTOC proxies, and random
//! Zeeman perturbations.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::BlockadedBasis;
use crate::dynamics::{evolve, PropagatorConfig};
use crate::entanglement::{entropy, rdm, Bipartition};
use crate::error::{Result, ScarError};
use crate::geometry::{apply_w, disjoint_double, Graph, PairingPattern, WMove};
use crate::operators::{apply_z, build_pxp, pair_projector_mask, z_diagonal, zz_diagonal, SparseOperator, StateVector};
use crate::scars::{build_lambda, ScarSpec};

/// Default `⟨Z_1 Z_1̄⟩` threshold defining the butterfly time.
pub const BUTTERFLY_THRESHOLD: f64 = 0.99;

/// Tolerance on the norm of input states.
const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrepStep {
    pub k: usize,
    pub t: f64,
    /// Probability of the `k`-th success given all previous ones (1 at k = 0).
    pub conditional_probability: f64,
    pub p_k: f64,
    pub infidelity: f64,
}

#[derive(Clone, Debug)]
pub struct PrepTrace {
    /// Row `0` describes `ψ_0`; row `k` the state after `k` successes.
    pub steps: Vec<PrepStep>,
    /// Set when the projected state vanished and the run stopped early.
    pub annihilated: bool,
    pub final_state: StateVector,
}

fn require_normalized(v: &StateVector, what: &str) -> Result<()> {
    if (v.norm() - 1.0).abs() > NORM_TOL {
        return Err(ScarError::InvalidArgument(format!(
            "{what} must be normalized (norm {})",
            v.norm()
        )));
    }
    Ok(())
}

/// Repeats `ψ ← P⁺ e^{−iHτ} ψ` with renormalization, recording the
/// postselection probability and the infidelity to `target`.
pub fn prepare(
    h: &SparseOperator,
    measured_pairs: &[(usize, usize)],
    tau: f64,
    k_max: usize,
    psi0: &StateVector,
    target: &StateVector,
    cfg: &PropagatorConfig,
) -> Result<PrepTrace> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(ScarError::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    if measured_pairs.is_empty() {
        return Err(ScarError::InvalidArgument("no measured pairs".into()));
    }
    require_normalized(psi0, "initial state")?;
    require_normalized(target, "target state")?;
    let mask = pair_projector_mask(h.basis(), measured_pairs)?;

    let mut psi = psi0.clone();
    let mut p_k = 1.0;
    let mut steps = vec![PrepStep {
        k: 0,
        t: 0.0,
        conditional_probability: 1.0,
        p_k,
        infidelity: infidelity(target, &psi)?,
    }];
    let mut annihilated = false;
    for k in 1..=k_max {
        let mut next = evolve(h, &psi, tau, cfg)?;
        for (a, &keep) in next.amplitudes_mut().iter_mut().zip(&mask) {
            if !keep {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        let cond = next.norm_sqr().min(1.0);
        if cond <= f64::MIN_POSITIVE {
            annihilated = true;
            steps.push(PrepStep {
                k,
                t: k as f64 * tau,
                conditional_probability: 0.0,
                p_k: 0.0,
                infidelity: 1.0,
            });
            break;
        }
        next.normalize()?;
        psi = next;
        p_k *= cond;
        steps.push(PrepStep {
            k,
            t: k as f64 * tau,
            conditional_probability: cond,
            p_k,
            infidelity: infidelity(target, &psi)?,
        });
    }
    Ok(PrepTrace {
        steps,
        annihilated,
        final_state: psi,
    })
}

fn infidelity(target: &StateVector, psi: &StateVector) -> Result<f64> {
    Ok((1.0 - target.fidelity(psi)?).clamp(0.0, 1.0))
}

/// `⊗ (|00⟩ − |11⟩)/√2` on pairs `0, 2, 4, …` and `|00⟩` on the others.
pub fn bell_initial_state(
    l: usize,
    full_basis: &Arc<BlockadedBasis>,
    pairing: &PairingPattern,
) -> Result<StateVector> {
    if l % 2 != 0 {
        return Err(ScarError::Parity(format!("Bell initial state needs even L, got {l}")));
    }
    if pairing.len() != l || full_basis.n_vertices() != 2 * l {
        return Err(ScarError::DimensionMismatch {
            expected: 2 * l,
            found: full_basis.n_vertices(),
        });
    }
    let bell_pairs: Vec<(usize, usize)> = pairing.pairs().iter().copied().step_by(2).collect();
    let n_bell = bell_pairs.len();
    let amp = 0.5f64.powf(n_bell as f64 / 2.0);
    let mut v = StateVector::zeros(full_basis.clone());
    for choice in 0u64..(1 << n_bell) {
        let bits = bell_pairs
            .iter()
            .enumerate()
            .filter(|(j, _)| (choice >> j) & 1 == 1)
            .fold(0u64, |acc, (_, &(a, b))| acc | (1 << a) | (1 << b));
        let k = full_basis.index_of(bits).ok_or_else(|| {
            ScarError::InvalidPairing(format!(
                "Bell configuration {} violates the blockade",
                full_basis.format_state(bits)
            ))
        })?;
        let sign = if choice.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        v.amplitudes_mut()[k] = Complex64::new(sign * amp, 0.0);
    }
    Ok(v)
}

/// Time series of pair correlators and cut entropies after a quench.
#[derive(Clone, Debug, Serialize)]
pub struct QuenchTrace {
    pub times: Vec<f64>,
    pub pairs: Vec<(usize, usize)>,
    /// `correlators[t][p] = ⟨Z_a Z_b⟩` for pair `p` at time index `t`.
    pub correlators: Vec<Vec<f64>>,
    /// `entropies[t][c]` for cut `c`.
    pub entropies: Vec<Vec<f64>>,
}

impl QuenchTrace {
    /// Correlator series of pair `p`.
    pub fn correlator_series(&self, p: usize) -> Vec<f64> {
        self.correlators.iter().map(|row| row[p]).collect()
    }

    /// First grid time at which pair `p` drops below `threshold`.
    pub fn first_crossing(&self, p: usize, threshold: f64) -> Option<f64> {
        self.times
            .iter()
            .zip(&self.correlators)
            .find(|(_, row)| row[p] < threshold)
            .map(|(&t, _)| t)
    }
}

/// Evolves `psi_init` over the ascending grid `times` (starting at t = 0)
/// and records `⟨Z_a Z_b⟩` for every pair and the entropy of every cut.
pub fn quench(
    h: &SparseOperator,
    psi_init: &StateVector,
    times: &[f64],
    pairs: &[(usize, usize)],
    cuts: &[Bipartition],
    cfg: &PropagatorConfig,
) -> Result<QuenchTrace> {
    require_normalized(psi_init, "initial state")?;
    let basis = h.basis();
    let n = basis.n_vertices();
    if let Some(&(a, b)) = pairs.iter().find(|&&(a, b)| a >= n || b >= n) {
        return Err(ScarError::VertexOutOfRange { vertex: a.max(b), n });
    }
    let zz: Vec<Vec<f64>> = pairs.iter().map(|&(a, b)| zz_diagonal(basis, a, b)).collect();
    let mut psi = psi_init.clone();
    let mut t_prev = 0.0;
    let mut correlators = Vec::with_capacity(times.len());
    let mut entropies = Vec::with_capacity(times.len());
    for &t in times {
        if t < t_prev {
            return Err(ScarError::InvalidArgument("time grid must be ascending and ≥ 0".into()));
        }
        if t > t_prev {
            psi = evolve(h, &psi, t - t_prev, cfg)?;
            t_prev = t;
        }
        let probs: Vec<f64> = psi.amplitudes().iter().map(|a| a.norm_sqr()).collect();
        correlators.push(
            zz.iter()
                .map(|d| d.iter().zip(&probs).map(|(z, p)| z * p).sum())
                .collect(),
        );
        entropies.push(
            cuts.iter()
                .map(|c| entropy(&rdm(&psi, c)?))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Ok(QuenchTrace {
        times: times.to_vec(),
        pairs: pairs.to_vec(),
        correlators,
        entropies,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OtocMode {
    /// Coupled (dangler-type) Hamiltonian; agrees with the OTOC for `t < t_B`.
    Approx,
    /// Decoupled copies of `G_A`; agrees with the OTOC at all times.
    Exact,
}

/// Graph, pairing, and initial state for the OTOC quench built from `g_a`.
///
/// Approximate mode links the two copies with `W+(0, L+1)`, which needs the
/// edge `(0, 1)` in `g_a`; for an open chain this is the dangler.
#[derive(Clone, Debug)]
pub struct OtocSetup {
    pub spec: ScarSpec,
    pub hamiltonian: SparseOperator,
    pub initial_state: StateVector,
    /// Vertex carrying the `Z` kick (`L − 1`).
    pub kicked_vertex: usize,
}

pub fn otoc_setup(g_a: &Graph, mode: OtocMode) -> Result<OtocSetup> {
    let l = g_a.n_vertices();
    if l < 2 {
        return Err(ScarError::InvalidGraph("OTOC needs at least 2 vertices in G_A".into()));
    }
    let (doubled, pairing) = disjoint_double(g_a)?;
    let graph = match mode {
        OtocMode::Exact => doubled,
        OtocMode::Approx => apply_w(&doubled, &pairing, WMove::plus(0, l + 1))?,
    };
    let spec = ScarSpec::new(graph, pairing)?;
    let hamiltonian = build_pxp(&spec.graph, &spec.full_basis, None, None)?;
    let lambda = build_lambda(&spec)?;
    let kicked_vertex = l - 1;
    let initial_state = apply_z(&lambda, kicked_vertex)?;
    Ok(OtocSetup {
        spec,
        hamiltonian,
        initial_state,
        kicked_vertex,
    })
}

/// `⟨Z_i Z_ī⟩(t)` for every pair after the kick `Z_{L−1}` on the doubled state.
/// Row `t` holds one value per pair.
pub fn otoc_all(
    g_a: &Graph,
    times: &[f64],
    mode: OtocMode,
    cfg: &PropagatorConfig,
) -> Result<QuenchTrace> {
    let setup = otoc_setup(g_a, mode)?;
    let pairs = setup.spec.pairing.pairs().to_vec();
    quench(&setup.hamiltonian, &setup.initial_state, times, &pairs, &[], cfg)
}

/// OTOC proxy series for pair `i` (a vertex of `g_a`).
pub fn otoc(
    g_a: &Graph,
    i: usize,
    times: &[f64],
    mode: OtocMode,
    cfg: &PropagatorConfig,
) -> Result<Vec<f64>> {
    if i >= g_a.n_vertices() {
        return Err(ScarError::VertexOutOfRange {
            vertex: i,
            n: g_a.n_vertices(),
        });
    }
    Ok(otoc_all(g_a, times, mode, cfg)?.correlator_series(i))
}

/// First grid time where `series` drops below `threshold`.
pub fn butterfly_time(times: &[f64], series: &[f64], threshold: f64) -> Option<f64> {
    times
        .iter()
        .zip(series)
        .find(|(_, &z)| z < threshold)
        .map(|(&t, _)| t)
}

/// Zeeman fields `δ_i ~ N(μ, σ²)` for `n` vertices.
///
/// Uses `ChaCha8Rng::seed_from_u64(seed)` and the Box–Muller transform on
/// consecutive uniform pairs `(u1, u2)`: `√(−2 ln(1 − u1))·cos(2π u2)`, then
/// `·sin(2π u2)`. The output is identical on every platform.
pub fn zeeman_fields(n: usize, mu: f64, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() || !mu.is_finite() {
        return Err(ScarError::InvalidArgument(format!(
            "need finite mu and sigma ≥ 0, got ({mu}, {sigma})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        out.push(mu + sigma * r * theta.cos());
        if out.len() < n {
            out.push(mu + sigma * r * theta.sin());
        }
    }
    Ok(out)
}

/// `H + Σ_i δ_i Z_i` with fields from [`zeeman_fields`].
pub fn perturb(h: &SparseOperator, g: &Graph, mu: f64, sigma: f64, seed: u64) -> Result<SparseOperator> {
    let basis = h.basis();
    if basis.graph() != g {
        return Err(ScarError::BasisMismatch);
    }
    let fields = zeeman_fields(g.n_vertices(), mu, sigma, seed)?;
    let mut diag = vec![0.0; h.dim()];
    for (v, &d) in fields.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        for (x, z) in diag.iter_mut().zip(z_diagonal(basis, v)) {
            *x += d * z;
        }
    }
    h.add_diagonal(&diag)
}
