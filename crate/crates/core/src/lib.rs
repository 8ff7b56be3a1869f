//! Exact volume-entangled scar eigenstates of PXP Hamiltonians on arbitrary
//! interaction graphs.
//!
//! Bitstring convention used throughout: vertex `v` is bit `v` of a `u64`,
//! vertex 0 being the least significant bit. Text output writes vertex 0
//! leftmost.

pub mod basis;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod geometry;
pub mod mps;
pub mod operators;
pub mod protocols;
pub mod scars;

pub mod cli;

pub use basis::{embed_product, enumerate_blockaded, BlockadedBasis};
pub use error::{Result, ScarError};
pub use geometry::{
    apply_w, check_lambda_condition, disjoint_double, search_pairings, Boundary, CylinderVariant,
    Geometry, Graph, PairingPattern, WMove,
};
pub use operators::{apply, apply_z, build_pair_projector, build_pxp, build_zz, SparseOperator, StateVector};
pub use scars::{build_lambda, residual, ScarSpec};

/// Fibonacci numbers with `F_1 = F_2 = 1`, extended by `F_{-1} = 1`, `F_0 = 0`.
pub fn fibonacci(n: i64) -> u64 {
    match n {
        -1 => 1,
        n if n < -1 => panic!("fibonacci index {n} below -1"),
        _ => {
            let (mut a, mut b) = (0u64, 1u64);
            for _ in 0..n {
                (a, b) = (b, a + b);
            }
            a
        }
    }
}

/// Golden ratio.
pub const PHI: f64 = 1.618_033_988_749_895;
