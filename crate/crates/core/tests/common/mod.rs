//! Strategies and property checks shared by the proptest suite and the
//! acceptance gate.
#![allow(dead_code)]

use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scarlab::basis::{enumerate_blockaded, BlockadedBasis};
use scarlab::dynamics::{evolve, PropagatorConfig};
use scarlab::entanglement::{entropy, rdm, schmidt_entropy, schmidt_values, Bipartition};
use scarlab::geometry::{apply_w, disjoint_double, Graph, PairingPattern, WMove};
use scarlab::operators::{apply, apply_c, build_pxp, StateVector};
use scarlab::scars::{build_lambda, ScarSpec};

pub const CASES: u32 = 64;

/// Random simple graph on `2..=max_n` vertices.
pub fn graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |mask| {
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if mask[k] {
                        edges.push((i, j));
                    }
                    k += 1;
                }
            }
            Graph::new(n, edges).unwrap()
        })
    })
}

/// Random certified (graph, pairing): a doubled random `G_A` with up to
/// `max_half` vertices, followed by a few random `W+` moves that apply.
pub fn certified(max_half: usize) -> impl Strategy<Value = (Graph, PairingPattern)> {
    (graph(max_half), proptest::collection::vec((0usize..64, 0usize..64), 0..4)).prop_map(
        |(g_a, moves)| {
            let l = g_a.n_vertices();
            let (mut g, p) = disjoint_double(&g_a).unwrap();
            for (a, b) in moves {
                let (a, b) = (a % (2 * l), b % (2 * l));
                if let Ok(next) = apply_w(&g, &p, WMove::plus(a, b)) {
                    g = next;
                }
            }
            (g, p)
        },
    )
}

pub fn random_state(basis: &Arc<BlockadedBasis>, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<Complex64> = (0..basis.dim())
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let mut v = StateVector::new(basis.clone(), amps).unwrap();
    v.normalize().unwrap();
    v
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

/// `γ(f,g) = (−1)^{|f|} ⟨g|H|f⟩` is antisymmetric.
pub fn gamma_antisymmetry(g: &Graph) -> Result<(), TestCaseError> {
    let basis = enumerate_blockaded(g).unwrap();
    let h = build_pxp(g, &basis, None, None).unwrap();
    let sign = |s: u64| if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    for (r, c, x) in h.triplets() {
        let (gs, fs) = (basis.state(r), basis.state(c));
        let gamma_fg = sign(fs) * x;
        let gamma_gf = sign(gs) * h.get(c, r);
        if (gamma_fg + gamma_gf).norm() > 1e-14 {
            return Err(fail(format!("γ not antisymmetric at ({fs:b}, {gs:b})")));
        }
    }
    Ok(())
}

/// `C H C = −H` tested on a random vector.
pub fn reflection_anticommutes(g: &Graph, seed: u64) -> Result<(), TestCaseError> {
    let basis = enumerate_blockaded(g).unwrap();
    let h = build_pxp(g, &basis, None, None).unwrap();
    let v = random_state(&basis, seed);
    let chc = apply_c(&apply(&h, &apply_c(&v)).unwrap());
    let hv = apply(&h, &v).unwrap();
    let err: f64 = chc
        .amplitudes()
        .iter()
        .zip(hv.amplitudes())
        .map(|(a, b)| (a + b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if err > 1e-12 {
        return Err(fail(format!("‖CHCv + Hv‖ = {err:e}")));
    }
    Ok(())
}

/// Evolution keeps the norm and `U(−t) U(t) = 1`.
pub fn evolve_reversible(g: &Graph, seed: u64, t: f64) -> Result<(), TestCaseError> {
    let basis = enumerate_blockaded(g).unwrap();
    let h = build_pxp(g, &basis, None, None).unwrap();
    let v = random_state(&basis, seed);
    let cfg = PropagatorConfig::default();
    let w = evolve(&h, &v, t, &cfg).unwrap();
    if (w.norm() - 1.0).abs() > 1e-10 {
        return Err(fail(format!("norm drift {:e}", w.norm() - 1.0)));
    }
    let back = evolve(&h, &w, -t, &cfg).unwrap();
    let d = back.distance(&v).unwrap();
    if d > 1e-8 {
        return Err(fail(format!("‖U(−t)U(t)v − v‖ = {d:e} at t = {t}")));
    }
    Ok(())
}

/// Entropy from the RDM spectrum equals the Schmidt entropy.
pub fn schmidt_rdm_consistent(g: &Graph, seed: u64, mask: u64) -> Result<(), TestCaseError> {
    let n = g.n_vertices();
    let basis = enumerate_blockaded(g).unwrap();
    let v = random_state(&basis, seed);
    let mut subset: Vec<usize> = (0..n).filter(|&i| (mask >> i) & 1 == 1).collect();
    if subset.is_empty() {
        subset.push(0);
    }
    if subset.len() == n {
        subset.pop();
    }
    let part = Bipartition::new(&subset, n).unwrap();
    let rho = rdm(&v, &part).unwrap();
    let s_rdm = entropy(&rho).unwrap();
    let sv = schmidt_values(&v, &part).unwrap();
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let s_sv = schmidt_entropy(&sv);
    if (s_rdm - s_sv).abs() > 1e-10 || (total - 1.0).abs() > 1e-10 || (rho.trace() - 1.0).abs() > 1e-12 {
        return Err(fail(format!("S_rdm {s_rdm}, S_schmidt {s_sv}, Σλ² {total}")));
    }
    Ok(())
}

/// Swapping which member of each pair is the A side leaves the state unchanged.
pub fn a_side_invariance(g: &Graph, p: &PairingPattern, flips: u64) -> Result<(), TestCaseError> {
    let flip: Vec<bool> = (0..p.len()).map(|k| (flips >> k) & 1 == 1).collect();
    let q = p.with_sides_swapped(&flip);
    let a = build_lambda(&ScarSpec::new(g.clone(), p.clone()).unwrap()).unwrap();
    let b = build_lambda(&ScarSpec::new(g.clone(), q).unwrap()).unwrap();
    if a.amplitudes() != b.amplitudes() {
        return Err(fail(format!("amplitudes differ, max {:e}", a.distance(&b).unwrap())));
    }
    Ok(())
}
