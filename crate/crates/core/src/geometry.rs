//! Interaction graphs, pairing patterns, and the edge-rewriting moves that
//! preserve a doubled-system eigenstate.
//!
//! Vertices are dense `0..n` integers. Bitstrings elsewhere in the crate use
//! bit `v` for vertex `v` (vertex 0 is the least significant bit), which caps
//! graphs at 64 vertices.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, ScarError};

/// Largest vertex count representable in a `u64` bitstring.
pub const MAX_GRAPH_VERTICES: usize = 64;

/// Default vertex cap for [`search_pairings`]; the number of perfect matchings
/// grows as `(n-1)!!` (16 vertices already means ~2·10^6 matchings).
pub const DEFAULT_SEARCH_MAX_VERTICES: usize = 16;

/// Simple undirected graph. Edges are stored as `(u, v)` with `u < v`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    /// Builds a graph, normalizing edge orientation and dropping duplicates.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n > MAX_GRAPH_VERTICES {
            return Err(ScarError::InvalidGraph(format!(
                "{n} vertices exceeds the {MAX_GRAPH_VERTICES}-vertex bitstring limit"
            )));
        }
        let mut g = Graph::empty(n);
        for (u, v) in edges {
            if u == v {
                return Err(ScarError::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            if u >= n || v >= n {
                return Err(ScarError::InvalidGraph(format!(
                    "edge ({u},{v}) has an endpoint outside 0..{n}"
                )));
            }
            g.edges.insert((u.min(v), u.max(v)));
        }
        Ok(g)
    }

    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges in ascending `(u, v)` order with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Bitmask of the neighbors of `v`.
    pub fn neighbor_mask(&self, v: usize) -> u64 {
        self.neighbors(v).into_iter().fold(0, |m, u| m | (1 << u))
    }

    /// Neighbor masks for every vertex, indexed by vertex.
    pub fn neighbor_masks(&self) -> Vec<u64> {
        let mut masks = vec![0u64; self.n];
        for &(u, v) in &self.edges {
            masks[u] |= 1 << v;
            masks[v] |= 1 << u;
        }
        masks
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// True when no edge has both endpoints set in `bits`.
    pub fn is_independent(&self, bits: u64) -> bool {
        self.edges
            .iter()
            .all(|&(u, v)| (bits >> u) & 1 == 0 || (bits >> v) & 1 == 0)
    }

    pub(crate) fn insert_edge(&mut self, u: usize, v: usize) -> bool {
        self.edges.insert((u.min(v), u.max(v)))
    }

    pub(crate) fn delete_edge(&mut self, u: usize, v: usize) -> bool {
        self.edges.remove(&(u.min(v), u.max(v)))
    }

    /// Returns the graph with vertex `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Graph> {
        check_permutation(perm, self.n)?;
        Graph::new(self.n, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])))
    }

    /// Disjoint union; the vertices of `other` are shifted by `self.n_vertices()`.
    pub fn disjoint_union(&self, other: &Graph) -> Result<Graph> {
        let shift = self.n;
        Graph::new(
            self.n + other.n,
            self.edges()
                .chain(other.edges().map(|(u, v)| (u + shift, v + shift))),
        )
    }

    /// True when `perm` maps the edge set onto itself.
    pub fn is_automorphism(&self, perm: &[usize]) -> bool {
        check_permutation(perm, self.n).is_ok()
            && self.edges.iter().all(|&(u, v)| self.has_edge(perm[u], perm[v]))
    }

    /// Backtracking isomorphism test. Fine for the small graphs used here.
    pub fn is_isomorphic(&self, other: &Graph) -> bool {
        self.find_isomorphism(other).is_some()
    }

    /// Finds `perm` with `self.relabel(perm) == other`, if one exists.
    pub fn find_isomorphism(&self, other: &Graph) -> Option<Vec<usize>> {
        if self.n != other.n || self.n_edges() != other.n_edges() {
            return None;
        }
        let deg_a: Vec<usize> = (0..self.n).map(|v| self.degree(v)).collect();
        let deg_b: Vec<usize> = (0..other.n).map(|v| other.degree(v)).collect();
        let mut sa = deg_a.clone();
        let mut sb = deg_b.clone();
        sa.sort_unstable();
        sb.sort_unstable();
        if sa != sb {
            return None;
        }
        let adj_a = self.neighbor_masks();
        let adj_b = other.neighbor_masks();
        // Visit high-degree vertices first; they prune the most.
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by_key(|&v| std::cmp::Reverse(deg_a[v]));
        let mut map = vec![usize::MAX; self.n];
        let mut used = 0u64;

        fn extend(
            depth: usize,
            order: &[usize],
            deg_a: &[usize],
            deg_b: &[usize],
            adj_a: &[u64],
            adj_b: &[u64],
            map: &mut [usize],
            used: &mut u64,
        ) -> bool {
            if depth == order.len() {
                return true;
            }
            let v = order[depth];
            for w in 0..deg_b.len() {
                if (*used >> w) & 1 == 1 || deg_b[w] != deg_a[v] {
                    continue;
                }
                let consistent = order[..depth].iter().all(|&u| {
                    let a = (adj_a[v] >> u) & 1;
                    let b = (adj_b[w] >> map[u]) & 1;
                    a == b
                });
                if !consistent {
                    continue;
                }
                map[v] = w;
                *used |= 1 << w;
                if extend(depth + 1, order, deg_a, deg_b, adj_a, adj_b, map, used) {
                    return true;
                }
                *used &= !(1 << w);
                map[v] = usize::MAX;
            }
            false
        }

        if extend(
            0, &order, &deg_a, &deg_b, &adj_a, &adj_b, &mut map, &mut used,
        ) {
            Some(map)
        } else {
            None
        }
    }

    /// Text form: vertex count on the first line, then `u v` per edge.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for (u, v) in self.edges() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    /// Parses the text form. Blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Graph> {
        let mut lines = data_lines(text);
        let header = lines
            .next()
            .ok_or_else(|| ScarError::InvalidGraph("empty graph file".into()))?;
        let n: usize = header
            .parse()
            .map_err(|_| ScarError::InvalidGraph(format!("bad vertex count {header:?}")))?;
        let mut edges = Vec::new();
        for line in lines {
            edges.push(parse_pair(line).map_err(ScarError::InvalidGraph)?);
        }
        Graph::new(n, edges)
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
}

fn parse_pair(line: &str) -> std::result::Result<(usize, usize), String> {
    let mut it = line.split_whitespace();
    let mut next = || -> std::result::Result<usize, String> {
        it.next()
            .ok_or_else(|| format!("expected two integers in {line:?}"))?
            .parse()
            .map_err(|_| format!("bad integer in {line:?}"))
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(format!("trailing tokens in {line:?}"));
    }
    Ok((a, b))
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(ScarError::InvalidArgument(format!(
            "permutation has length {}, expected {n}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(ScarError::InvalidArgument(
                "relabeling is not a permutation".into(),
            ));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Perfect matching of `0..2L` into correlated pairs `(i, ī)`.
///
/// The first member of each pair is its A-side label. Pair `k` becomes
/// vertex `k` of the derived half-graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PairingPattern {
    pairs: Vec<(usize, usize)>,
    partner: Vec<usize>,
    pair_of: Vec<usize>,
}

impl PairingPattern {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let n = 2 * pairs.len();
        let mut partner = vec![usize::MAX; n];
        let mut pair_of = vec![usize::MAX; n];
        for (k, &(a, b)) in pairs.iter().enumerate() {
            if a == b {
                return Err(ScarError::InvalidPairing(format!(
                    "vertex {a} paired with itself"
                )));
            }
            for v in [a, b] {
                if v >= n {
                    return Err(ScarError::InvalidPairing(format!(
                        "vertex {v} outside 0..{n}"
                    )));
                }
                if partner[v] != usize::MAX {
                    return Err(ScarError::InvalidPairing(format!(
                        "vertex {v} appears in more than one pair"
                    )));
                }
            }
            partner[a] = b;
            partner[b] = a;
            pair_of[a] = k;
            pair_of[b] = k;
        }
        Ok(PairingPattern {
            pairs,
            partner,
            pair_of,
        })
    }

    /// Number of pairs `L`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn n_vertices(&self) -> usize {
        self.partner.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn partner(&self, v: usize) -> usize {
        self.partner[v]
    }

    /// Index of the pair containing `v`.
    pub fn pair_index(&self, v: usize) -> usize {
        self.pair_of[v]
    }

    /// Same pairs with the A/Ā designation flipped wherever `flip[k]` is set.
    pub fn with_sides_swapped(&self, flip: &[bool]) -> PairingPattern {
        let pairs = self
            .pairs
            .iter()
            .zip(flip.iter().chain(std::iter::repeat(&false)))
            .map(|(&(a, b), &f)| if f { (b, a) } else { (a, b) })
            .collect();
        PairingPattern::new(pairs).expect("side swap keeps a valid pairing")
    }

    /// Pairs as unordered sets, sorted; used to compare patterns.
    pub fn canonical(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = self
            .pairs
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();
        v.sort_unstable();
        v
    }

    pub fn to_text(&self) -> String {
        self.pairs.iter().map(|(a, b)| format!("{a} {b}\n")).collect()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let pairs = data_lines(text)
            .map(parse_pair)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(ScarError::InvalidPairing)?;
        PairingPattern::new(pairs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveSign {
    Plus,
    Minus,
}

/// Edge-rewriting move `W±(a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WMove {
    pub sign: MoveSign,
    pub a: usize,
    pub b: usize,
}

impl WMove {
    pub fn plus(a: usize, b: usize) -> Self {
        WMove {
            sign: MoveSign::Plus,
            a,
            b,
        }
    }

    pub fn minus(a: usize, b: usize) -> Self {
        WMove {
            sign: MoveSign::Minus,
            a,
            b,
        }
    }
}

/// Applies a `W±` move. `W+(a,b)` adds edge `(a,b)` and `W-(a,b)` removes it;
/// both require the cross edges `(a, b̄)` and `(ā, b)` to be present. Moves
/// that would act trivially are rejected.
pub fn apply_w(g: &Graph, pairing: &PairingPattern, mv: WMove) -> Result<Graph> {
    let WMove { sign, a, b } = mv;
    let sign_char = match sign {
        MoveSign::Plus => '+',
        MoveSign::Minus => '-',
    };
    let trivial = |reason: String| ScarError::TrivialMove {
        sign: sign_char,
        a,
        b,
        reason,
    };
    if a == b {
        return Err(trivial("a and b coincide".into()));
    }
    let n = g.n_vertices();
    for v in [a, b] {
        if v >= n {
            return Err(ScarError::VertexOutOfRange { vertex: v, n });
        }
    }
    if pairing.n_vertices() != n {
        return Err(ScarError::InvalidPairing(format!(
            "pairing covers {} vertices, graph has {n}",
            pairing.n_vertices()
        )));
    }
    let a_bar = pairing.partner(a);
    let b_bar = pairing.partner(b);
    if !g.has_edge(a, b_bar) {
        return Err(trivial(format!("missing edge ({a},{b_bar})")));
    }
    if !g.has_edge(a_bar, b) {
        return Err(trivial(format!("missing edge ({a_bar},{b})")));
    }
    let mut out = g.clone();
    match sign {
        MoveSign::Plus => {
            if !out.insert_edge(a, b) {
                return Err(trivial(format!("edge ({a},{b}) already present")));
            }
        }
        MoveSign::Minus => {
            if !out.delete_edge(a, b) {
                return Err(trivial(format!("edge ({a},{b}) absent")));
            }
        }
    }
    Ok(out)
}

/// Applies a sequence of moves left to right.
pub fn apply_moves(g: &Graph, pairing: &PairingPattern, moves: &[WMove]) -> Result<Graph> {
    moves
        .iter()
        .try_fold(g.clone(), |acc, &mv| apply_w(&acc, pairing, mv))
}

/// Two relabeled copies of `g_a`; the copy of vertex `i` is `i + L`.
pub fn disjoint_double(g_a: &Graph) -> Result<(Graph, PairingPattern)> {
    let l = g_a.n_vertices();
    let g = g_a.disjoint_union(g_a)?;
    let pairing = PairingPattern::new((0..l).map(|i| (i, i + l)).collect())?;
    Ok((g, pairing))
}

/// Checks whether `(g, pairing)` hosts a doubled eigenstate.
///
/// For every pair `(i, ī)` the neighborhoods of `i` and `ī` are folded onto
/// pair indices; if the folded sets agree for all pairs the derived half-graph
/// (vertex `k` = pair `k`) is returned. Pairs joined by an edge yield `None`.
pub fn check_lambda_condition(g: &Graph, pairing: &PairingPattern) -> Result<Option<Graph>> {
    if pairing.n_vertices() != g.n_vertices() {
        return Err(ScarError::InvalidPairing(format!(
            "pairing covers {} vertices, graph has {}",
            pairing.n_vertices(),
            g.n_vertices()
        )));
    }
    let masks = g.neighbor_masks();
    let fold = |mask: u64| -> u64 {
        let mut out = 0u64;
        let mut m = mask;
        while m != 0 {
            let v = m.trailing_zeros() as usize;
            out |= 1 << pairing.pair_index(v);
            m &= m - 1;
        }
        out
    };
    let mut half_edges = Vec::new();
    for (k, &(a, b)) in pairing.pairs().iter().enumerate() {
        if g.has_edge(a, b) {
            return Ok(None);
        }
        let fa = fold(masks[a]);
        if fa != fold(masks[b]) {
            return Ok(None);
        }
        let mut m = fa;
        while m != 0 {
            let j = m.trailing_zeros() as usize;
            if j > k {
                half_edges.push((k, j));
            }
            m &= m - 1;
        }
    }
    Ok(Some(Graph::new(pairing.len(), half_edges)?))
}

/// Exhaustively enumerates perfect matchings of `g` and keeps those that pass
/// [`check_lambda_condition`], in lexicographic order of the pair list.
pub fn search_pairings(g: &Graph, max_vertices: usize) -> Result<Vec<(PairingPattern, Graph)>> {
    let n = g.n_vertices();
    if n % 2 != 0 {
        return Err(ScarError::Parity(format!(
            "perfect matchings need an even vertex count, got {n}"
        )));
    }
    if n > max_vertices {
        return Err(ScarError::DimensionLimit {
            what: "pairing search vertex count",
            size: n,
            limit: max_vertices,
        });
    }
    let masks = g.neighbor_masks();
    let mut partner = vec![usize::MAX; n];
    let mut pairs = Vec::with_capacity(n / 2);
    let mut found = Vec::new();
    search_rec(g, &masks, &mut partner, &mut pairs, &mut found)?;
    Ok(found)
}

fn search_rec(
    g: &Graph,
    masks: &[u64],
    partner: &mut [usize],
    pairs: &mut Vec<(usize, usize)>,
    found: &mut Vec<(PairingPattern, Graph)>,
) -> Result<()> {
    let Some(i) = partner.iter().position(|&p| p == usize::MAX) else {
        let pattern = PairingPattern::new(pairs.clone())?;
        if let Some(half) = check_lambda_condition(g, &pattern)? {
            found.push((pattern, half));
        }
        return Ok(());
    };
    for j in (i + 1)..partner.len() {
        if partner[j] != usize::MAX || (masks[i] >> j) & 1 == 1 {
            continue;
        }
        partner[i] = j;
        partner[j] = i;
        pairs.push((i, j));
        if partial_condition_holds(masks, partner) {
            search_rec(g, masks, partner, pairs, found)?;
        }
        pairs.pop();
        partner[i] = usize::MAX;
        partner[j] = usize::MAX;
    }
    Ok(())
}

/// Prunes partial matchings: any pair whose two neighborhoods are fully
/// matched must already fold to the same set of partners.
fn partial_condition_holds(masks: &[u64], partner: &[usize]) -> bool {
    let matched: u64 = partner
        .iter()
        .enumerate()
        .filter(|(_, &p)| p != usize::MAX)
        .fold(0, |m, (v, _)| m | (1 << v));
    for (a, &b) in partner.iter().enumerate() {
        if b == usize::MAX || b < a {
            continue;
        }
        if masks[a] & !matched != 0 || masks[b] & !matched != 0 {
            continue;
        }
        // Fold each neighbor onto the smaller label of its pair.
        let fold = |mask: u64| -> u64 {
            let mut out = 0u64;
            let mut m = mask;
            while m != 0 {
                let v = m.trailing_zeros() as usize;
                out |= 1 << v.min(partner[v]);
                m &= m - 1;
            }
            out
        };
        if fold(masks[a]) != fold(masks[b]) {
            return false;
        }
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    Open,
    Periodic,
}

impl FromStr for Boundary {
    type Err = ScarError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "obc" | "open" => Ok(Boundary::Open),
            "pbc" | "periodic" => Ok(Boundary::Periodic),
            _ => Err(ScarError::UnsupportedGeometry(format!("boundary {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CylinderVariant {
    /// Half-graph is a ladder periodic with period L; pairs `(x,y) ↔ (x+L, y)`.
    PbcLadder,
    /// Half-graph is a Möbius ladder; pairs `(x,y) ↔ (x+L, M-1-y)`.
    Moebius,
    /// Half-graph is an open ladder stitched across two seams; pairs
    /// `(x,y) ↔ (2·offset + 2L-1-x, M-1-y)` (x mod 2L). Needs even `M`.
    ObcLadder { offset: usize },
}

impl FromStr for CylinderVariant {
    type Err = ScarError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pbc_ladder" | "pbc" => Ok(CylinderVariant::PbcLadder),
            "moebius" | "mobius" => Ok(CylinderVariant::Moebius),
            "obc_ladder" | "obc" => Ok(CylinderVariant::ObcLadder { offset: 0 }),
            _ => {
                if let Some(rest) = s.strip_prefix("obc_ladder:") {
                    let offset = rest.parse().map_err(|_| {
                        ScarError::UnsupportedGeometry(format!("cylinder variant {s:?}"))
                    })?;
                    Ok(CylinderVariant::ObcLadder { offset })
                } else {
                    Err(ScarError::UnsupportedGeometry(format!(
                        "cylinder variant {s:?}"
                    )))
                }
            }
        }
    }
}

impl fmt::Display for CylinderVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CylinderVariant::PbcLadder => write!(f, "pbc_ladder"),
            CylinderVariant::Moebius => write!(f, "moebius"),
            CylinderVariant::ObcLadder { offset: 0 } => write!(f, "obc_ladder"),
            CylinderVariant::ObcLadder { offset } => write!(f, "obc_ladder:{offset}"),
        }
    }
}

/// Geometry descriptor.
///
/// Lattice vertices `(x, y)` with `0 ≤ x < width`, `0 ≤ y < height` are
/// labeled `y * width + x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Geometry {
    Chain { len: usize, boundary: Boundary },
    /// `2L`-site ring paired as `(i, i+L)`.
    RingDoubled { half_len: usize },
    /// Two open `L`-chains plus the cross edge `(0, L+1)`.
    Dangler { half_len: usize },
    /// `width × height` open square lattice (`width = 2L`), paired by a 180° rotation.
    Grid { width: usize, height: usize },
    /// `circumference × height` lattice, periodic along the circumference.
    Cylinder {
        circumference: usize,
        height: usize,
        variant: CylinderVariant,
    },
    /// Two disjoint copies of an `L`-chain paired as `(i, i+L)`.
    DecoupledChains { half_len: usize, boundary: Boundary },
}

impl Geometry {
    /// Builds the graph and, where one exists, the pairing of its doubled eigenstate.
    pub fn build(&self) -> Result<(Graph, Option<PairingPattern>)> {
        match *self {
            Geometry::Chain { len, boundary } => {
                require_size("chain length", len)?;
                Ok((chain(len, boundary)?, None))
            }
            Geometry::RingDoubled { half_len } => {
                require_size("ring half length", half_len)?;
                let l = half_len;
                let g = chain(2 * l, Boundary::Periodic)?;
                let p = PairingPattern::new((0..l).map(|i| (i, i + l)).collect())?;
                Ok((g, Some(p)))
            }
            Geometry::Dangler { half_len } => {
                require_size("dangler half length", half_len)?;
                let (doubled, p) = disjoint_double(&chain(half_len, Boundary::Open)?)?;
                let g = apply_w(&doubled, &p, WMove::plus(0, half_len + 1))?;
                Ok((g, Some(p)))
            }
            Geometry::Grid { width, height } => {
                require_size("grid width", width)?;
                require_size("grid height", height)?;
                if width % 2 != 0 {
                    return Err(ScarError::Parity(format!(
                        "grid width must be even (2L), got {width}"
                    )));
                }
                if height % 2 != 0 {
                    return Err(ScarError::Parity(format!(
                        "grid pairing needs an even height, got {height}"
                    )));
                }
                let g = lattice(width, height, false)?;
                let p = rotation_pairing(width, height, 0)?;
                Ok((g, Some(p)))
            }
            Geometry::Cylinder {
                circumference,
                height,
                variant,
            } => {
                require_size("cylinder circumference", circumference)?;
                require_size("cylinder height", height)?;
                if circumference % 2 != 0 {
                    return Err(ScarError::Parity(format!(
                        "cylinder circumference must be even (2L), got {circumference}"
                    )));
                }
                let g = lattice(circumference, height, true)?;
                let (w, h, l) = (circumference, height, circumference / 2);
                let p = match variant {
                    CylinderVariant::PbcLadder => PairingPattern::new(
                        lattice_pairs(l, h, |x, y| (x + l, y), w),
                    )?,
                    CylinderVariant::Moebius => PairingPattern::new(
                        lattice_pairs(l, h, |x, y| (x + l, h - 1 - y), w),
                    )?,
                    CylinderVariant::ObcLadder { offset } => {
                        if h % 2 != 0 {
                            return Err(ScarError::Parity(format!(
                                "obc_ladder construction works only for even height, got {h}"
                            )));
                        }
                        if offset >= l {
                            return Err(ScarError::InvalidArgument(format!(
                                "obc_ladder offset {offset} must be below L = {l}"
                            )));
                        }
                        rotation_pairing(w, h, offset)?
                    }
                };
                Ok((g, Some(p)))
            }
            Geometry::DecoupledChains { half_len, boundary } => {
                require_size("chain length", half_len)?;
                let (g, p) = disjoint_double(&chain(half_len, boundary)?)?;
                Ok((g, Some(p)))
            }
        }
    }

    /// Short name used in CLI output.
    pub fn label(&self) -> String {
        match self {
            Geometry::Chain { len, boundary } => format!(
                "chain-{}-{len}",
                if *boundary == Boundary::Open { "obc" } else { "pbc" }
            ),
            Geometry::RingDoubled { half_len } => format!("ring-L{half_len}"),
            Geometry::Dangler { half_len } => format!("dangler-L{half_len}"),
            Geometry::Grid { width, height } => format!("grid-{width}x{height}"),
            Geometry::Cylinder {
                circumference,
                height,
                variant,
            } => format!("cylinder-{circumference}x{height}-{variant}"),
            Geometry::DecoupledChains { half_len, boundary } => format!(
                "decoupled-{}-L{half_len}",
                if *boundary == Boundary::Open { "obc" } else { "pbc" }
            ),
        }
    }
}

fn require_size(what: &str, n: usize) -> Result<()> {
    if n < 2 {
        Err(ScarError::UnsupportedGeometry(format!(
            "{what} must be at least 2, got {n}"
        )))
    } else {
        Ok(())
    }
}

/// Chain of `len` sites; the periodic 2-site chain collapses to one edge.
pub fn chain(len: usize, boundary: Boundary) -> Result<Graph> {
    let mut edges: Vec<(usize, usize)> = (0..len.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Periodic && len > 1 {
        edges.push((len - 1, 0));
    }
    Graph::new(len, edges)
}

fn lattice(width: usize, height: usize, periodic_x: bool) -> Result<Graph> {
    let idx = |x: usize, y: usize| y * width + x;
    let mut edges = Vec::new();
    for y in 0..height {
        for x in 0..width {
            if x + 1 < width {
                edges.push((idx(x, y), idx(x + 1, y)));
            } else if periodic_x && width > 1 {
                edges.push((idx(x, y), idx(0, y)));
            }
            if y + 1 < height {
                edges.push((idx(x, y), idx(x, y + 1)));
            }
        }
    }
    Graph::new(width * height, edges)
}

/// Pairs `(x, y)` for `x < l` (the A side) with `partner(x, y)`, `x` taken mod `width`.
fn lattice_pairs<F>(l: usize, height: usize, partner: F, width: usize) -> Vec<(usize, usize)>
where
    F: Fn(usize, usize) -> (usize, usize),
{
    let mut pairs = Vec::with_capacity(l * height);
    for y in 0..height {
        for x in 0..l {
            let (px, py) = partner(x, y);
            pairs.push((y * width + x, py * width + (px % width)));
        }
    }
    pairs
}

/// 180° rotation pairing of a `width × height` lattice whose A side is the
/// column block `offset..offset+L` (taken mod `width`).
fn rotation_pairing(width: usize, height: usize, offset: usize) -> Result<PairingPattern> {
    let l = width / 2;
    let mut pairs = Vec::with_capacity(l * height);
    for y in 0..height {
        for dx in 0..l {
            let x = (offset + dx) % width;
            let px = (2 * offset + 2 * width - 1 - x) % width;
            pairs.push((y * width + x, (height - 1 - y) * width + px));
        }
    }
    PairingPattern::new(pairs)
}

/// All `L` translates of the open-ladder pairing on a `2L × M` cylinder.
pub fn obc_ladder_translates(circumference: usize, height: usize) -> Result<Vec<PairingPattern>> {
    let l = circumference / 2;
    (0..l)
        .map(|offset| {
            Geometry::Cylinder {
                circumference,
                height,
                variant: CylinderVariant::ObcLadder { offset },
            }
            .build()
            .map(|(_, p)| p.expect("cylinder always carries a pairing"))
        })
        .collect()
}
