//! Blockaded (independent-set) basis of an interaction graph.

use std::sync::Arc;

use crate::error::{Result, ScarError};
use crate::geometry::{Graph, PairingPattern};

/// Default vertex cap for enumeration.
pub const DEFAULT_MAX_VERTICES: usize = 34;

/// Default cap on the number of basis states.
pub const DEFAULT_MAX_DIM: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisLimits {
    pub max_vertices: usize,
    pub max_dim: usize,
}

impl Default for BasisLimits {
    fn default() -> Self {
        BasisLimits {
            max_vertices: DEFAULT_MAX_VERTICES,
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

/// Independent-set bitstrings of a graph in ascending numeric order.
///
/// Bit `v` of a bitstring is vertex `v`. Lookup is a binary search.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockadedBasis {
    graph: Graph,
    states: Vec<u64>,
}

impl BlockadedBasis {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n_vertices(&self) -> usize {
        self.graph.n_vertices()
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, k: usize) -> u64 {
        self.states[k]
    }

    pub fn index_of(&self, bits: u64) -> Option<usize> {
        self.states.binary_search(&bits).ok()
    }

    pub fn contains(&self, bits: u64) -> bool {
        self.index_of(bits).is_some()
    }

    /// Bitstring rendered with vertex 0 leftmost.
    pub fn format_state(&self, bits: u64) -> String {
        format_bits(bits, self.n_vertices())
    }
}

/// Renders `bits` over `n` vertices, vertex 0 first.
pub fn format_bits(bits: u64, n: usize) -> String {
    (0..n)
        .map(|v| if (bits >> v) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Parses a string written with vertex 0 leftmost.
pub fn parse_bits(s: &str) -> Result<u64> {
    if s.len() > 64 {
        return Err(ScarError::InvalidArgument(format!("bitstring {s:?} too long")));
    }
    s.chars().enumerate().try_fold(0u64, |acc, (v, c)| match c {
        '0' => Ok(acc),
        '1' => Ok(acc | (1 << v)),
        _ => Err(ScarError::InvalidArgument(format!("bad bitstring {s:?}"))),
    })
}

pub fn enumerate_blockaded(g: &Graph) -> Result<Arc<BlockadedBasis>> {
    enumerate_blockaded_with(g, BasisLimits::default())
}

/// Enumerates independent sets, deciding vertices from the highest label down
/// and trying 0 before 1, which yields ascending numeric order directly.
pub fn enumerate_blockaded_with(g: &Graph, limits: BasisLimits) -> Result<Arc<BlockadedBasis>> {
    let n = g.n_vertices();
    if n > limits.max_vertices {
        return Err(ScarError::DimensionLimit {
            what: "vertex count",
            size: n,
            limit: limits.max_vertices,
        });
    }
    let masks = g.neighbor_masks();
    let mut states = Vec::new();
    // Explicit stack of (next vertex to decide + 1, bits so far, forbidden mask).
    let mut stack = vec![(n, 0u64, 0u64)];
    while let Some((v, bits, forbidden)) = stack.pop() {
        if v == 0 {
            if states.len() == limits.max_dim {
                return Err(ScarError::DimensionLimit {
                    what: "blockaded dimension",
                    size: states.len() + 1,
                    limit: limits.max_dim,
                });
            }
            states.push(bits);
            continue;
        }
        let u = v - 1;
        // Pushed in reverse so that the 0 branch is explored first.
        if (forbidden >> u) & 1 == 0 {
            stack.push((u, bits | (1 << u), forbidden | masks[u]));
        }
        stack.push((u, bits, forbidden));
    }
    Ok(Arc::new(BlockadedBasis {
        graph: g.clone(),
        states,
    }))
}

/// Index in `full` of the doubled bitstring with bits `i` and `ī` equal to `f_i`.
pub fn embed_product(
    half: &BlockadedBasis,
    pairing: &PairingPattern,
    full: &BlockadedBasis,
    f: u64,
) -> Result<usize> {
    if half.n_vertices() != pairing.len() || full.n_vertices() != pairing.n_vertices() {
        return Err(ScarError::InvalidPairing(format!(
            "pairing of {} pairs does not match half ({}) / full ({}) vertex counts",
            pairing.len(),
            half.n_vertices(),
            full.n_vertices()
        )));
    }
    if !half.contains(f) {
        return Err(ScarError::NotInBasis(f));
    }
    let doubled = double_bits(pairing, f);
    full.index_of(doubled).ok_or_else(|| {
        ScarError::InvalidPairing(format!(
            "doubled string {} violates the blockade; geometry is not certified",
            full.format_state(doubled)
        ))
    })
}

/// Doubles a half-system bitstring through the pairing.
pub fn double_bits(pairing: &PairingPattern, f: u64) -> u64 {
    pairing
        .pairs()
        .iter()
        .enumerate()
        .filter(|(k, _)| (f >> k) & 1 == 1)
        .fold(0u64, |acc, (_, &(a, b))| acc | (1 << a) | (1 << b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{chain, Boundary, Geometry};

    fn brute_force(g: &Graph) -> Vec<u64> {
        (0..1u64 << g.n_vertices())
            .filter(|&b| g.is_independent(b))
            .collect()
    }

    /// Counts independent sets by deciding vertex 0 and recursing on the rest.
    fn recursive_count(g: &Graph, alive: u64) -> u64 {
        if alive == 0 {
            return 1;
        }
        let v = alive.trailing_zeros() as usize;
        let without = alive & !(1 << v);
        recursive_count(g, without) + recursive_count(g, without & !g.neighbor_mask(v))
    }

    fn fib(n: usize) -> u64 {
        let (mut a, mut b) = (0u64, 1u64);
        for _ in 0..n {
            (a, b) = (b, a + b);
        }
        a
    }

    #[test]
    fn ring_of_four() {
        let b = enumerate_blockaded(&chain(4, Boundary::Periodic).unwrap()).unwrap();
        let got: Vec<String> = b.states().iter().map(|&s| b.format_state(s)).collect();
        let mut expected = vec!["0000", "1000", "0100", "0010", "0001", "1010", "0101"];
        expected.sort_by_key(|s| parse_bits(s).unwrap());
        assert_eq!(got, expected);
        assert_eq!(b.dim(), (fib(3) + fib(5)) as usize);
    }

    #[test]
    fn small_cases() {
        let b = enumerate_blockaded(&chain(3, Boundary::Open).unwrap()).unwrap();
        assert_eq!(b.dim(), 5);
        let b = enumerate_blockaded(&Graph::empty(3)).unwrap();
        assert_eq!(b.states(), &[0, 1, 2, 3, 4, 5, 6, 7]);
        let b = enumerate_blockaded(&chain(2, Boundary::Periodic).unwrap()).unwrap();
        assert_eq!(b.dim(), 3);
    }

    #[test]
    fn matches_brute_force_and_recursion() {
        for geom in [
            Geometry::Dangler { half_len: 4 },
            Geometry::Grid { width: 4, height: 2 },
            Geometry::RingDoubled { half_len: 5 },
        ] {
            let (g, _) = geom.build().unwrap();
            let b = enumerate_blockaded(&g).unwrap();
            assert_eq!(b.states(), brute_force(&g).as_slice());
            let all = (1u64 << g.n_vertices()) - 1;
            assert_eq!(b.dim() as u64, recursive_count(&g, all));
            assert_eq!(b.state(0), 0);
        }
    }

    #[test]
    fn fibonacci_dimensions() {
        for l in 2..=20 {
            let pbc = enumerate_blockaded(&chain(l, Boundary::Periodic).unwrap()).unwrap();
            assert_eq!(pbc.dim() as u64, fib(l - 1) + fib(l + 1), "pbc {l}");
            let obc = enumerate_blockaded(&chain(l, Boundary::Open).unwrap()).unwrap();
            assert_eq!(obc.dim() as u64, fib(l + 2), "obc {l}");
        }
    }

    #[test]
    fn index_round_trip_and_edge_order_independence() {
        let g = chain(9, Boundary::Periodic).unwrap();
        let b = enumerate_blockaded(&g).unwrap();
        for (k, &s) in b.states().iter().enumerate() {
            assert_eq!(b.index_of(s), Some(k));
        }
        let mut edges: Vec<_> = g.edges().collect();
        edges.reverse();
        let g2 = Graph::new(9, edges.into_iter().map(|(u, v)| (v, u))).unwrap();
        assert_eq!(enumerate_blockaded(&g2).unwrap().states(), b.states());
    }

    #[test]
    fn limits_are_enforced() {
        let g = chain(10, Boundary::Open).unwrap();
        let tight = BasisLimits {
            max_vertices: 34,
            max_dim: 100,
        };
        assert!(matches!(
            enumerate_blockaded_with(&g, tight),
            Err(ScarError::DimensionLimit { .. })
        ));
        let few = BasisLimits {
            max_vertices: 8,
            max_dim: 1000,
        };
        assert!(enumerate_blockaded_with(&g, few).is_err());
    }

    #[test]
    fn embedding() {
        let (g, p) = Geometry::RingDoubled { half_len: 4 }.build().unwrap();
        let p = p.unwrap();
        let full = enumerate_blockaded(&g).unwrap();
        let half = enumerate_blockaded(&chain(4, Boundary::Periodic).unwrap()).unwrap();
        assert_eq!(embed_product(&half, &p, &full, 0).unwrap(), 0);
        let f = parse_bits("1010").unwrap();
        let idx = embed_product(&half, &p, &full, f).unwrap();
        assert_eq!(full.format_state(full.state(idx)), "10101010");
        assert!(embed_product(&half, &p, &full, parse_bits("1100").unwrap()).is_err());

        let (g, p) = Geometry::Dangler { half_len: 3 }.build().unwrap();
        let p = p.unwrap();
        let full = enumerate_blockaded(&g).unwrap();
        let half = enumerate_blockaded(&chain(3, Boundary::Open).unwrap()).unwrap();
        let idx = embed_product(&half, &p, &full, parse_bits("101").unwrap()).unwrap();
        assert_eq!(full.format_state(full.state(idx)), "101101");
    }

    #[test]
    fn uncertified_embedding_fails() {
        // Pairing (0,1),(2,3) on a 4-ring: doubling f=1 sets adjacent vertices.
        let g = chain(4, Boundary::Periodic).unwrap();
        let p = PairingPattern::new(vec![(0, 1), (2, 3)]).unwrap();
        let full = enumerate_blockaded(&g).unwrap();
        let half = enumerate_blockaded(&Graph::empty(2)).unwrap();
        assert!(embed_product(&half, &p, &full, 1).is_err());
    }

    #[test]
    fn bit_convention() {
        assert_eq!(parse_bits("1000").unwrap(), 1);
        assert_eq!(format_bits(2, 4), "0100");
        assert!(parse_bits("10x").is_err());
    }
}
