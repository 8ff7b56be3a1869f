//! C ABI over the core library.
//!
//! Every object is an opaque heap handle released by its `*_free` function.
//! Fallible calls return a [`ScarStatus`] and write results through out
//! pointers; on failure the message is kept per thread and can be read with
//! [`scar_last_error`]. Panics are caught at the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use scarlab::basis::{enumerate_blockaded, BlockadedBasis};
use scarlab::dynamics::{evolve, PropagatorConfig};
use scarlab::entanglement::{entropy, rdm, Bipartition};
use scarlab::geometry::{Graph, PairingPattern};
use scarlab::operators::{build_pxp, SparseOperator, StateVector};
use scarlab::scars::{lambda_for_pairing, residual};
use scarlab::ScarError;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScarStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionLimit = 3,
    Numerical = 4,
    Panic = 5,
}

pub struct ScarGraph(Graph);
pub struct ScarPairing(PairingPattern);
pub struct ScarBasis(Arc<BlockadedBasis>);
pub struct ScarOperator(SparseOperator);
pub struct ScarState(StateVector);

enum Failure {
    Null(&'static str),
    Lib(ScarError),
}

impl From<ScarError> for Failure {
    fn from(e: ScarError) -> Self {
        Failure::Lib(e)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard<F>(f: F) -> ScarStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ScarStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            ScarStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            match e.exit_code() {
                3 => ScarStatus::DimensionLimit,
                4 => ScarStatus::Numerical,
                _ => ScarStatus::InvalidArgument,
            }
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            ScarStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    *out = value;
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn scar_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn scar_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Graph on `n` vertices from `n_edges` pairs stored flat in `edges`.
///
/// # Safety
/// `edges` must point to `2 * n_edges` values.
#[no_mangle]
pub unsafe extern "C" fn scar_graph_new(
    n: usize,
    edges: *const usize,
    n_edges: usize,
    out: *mut *mut ScarGraph,
) -> ScarStatus {
    guard(|| {
        let flat = slice(edges, 2 * n_edges, "edges")?;
        let g = Graph::new(n, flat.chunks(2).map(|e| (e[0], e[1])))?;
        put(out, ScarGraph(g), "out")
    })
}

/// Builds a named geometry (`ring`, `dangler`, `chain-obc`, `grid`, ...)
/// with `L` pairs. `height` of 0 means the default; `variant` may be null.
/// `out_pairing` receives null for geometries without a pairing.
///
/// # Safety
/// `name` and a non-null `variant` must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn scar_geometry_build(
    name: *const c_char,
    l: usize,
    height: usize,
    variant: *const c_char,
    out_graph: *mut *mut ScarGraph,
    out_pairing: *mut *mut ScarPairing,
) -> ScarStatus {
    guard(|| {
        let name = c_str(name, "name")?;
        let variant = if variant.is_null() { None } else { Some(c_str(variant, "variant")?) };
        let height = (height > 0).then_some(height);
        let geom = scarlab::cli::parse_geometry(name, l, height, variant)?;
        let (g, p) = geom.build()?;
        if out_graph.is_null() || out_pairing.is_null() {
            return Err(Failure::Null("out"));
        }
        put(out_graph, ScarGraph(g), "out_graph")?;
        *out_pairing = match p {
            Some(p) => Box::into_raw(Box::new(ScarPairing(p))),
            None => ptr::null_mut(),
        };
        Ok(())
    })
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(ScarError::InvalidArgument(format!("{what} is not UTF-8"))))
}

/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn scar_graph_n_vertices(graph: *const ScarGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.n_vertices())
}

/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scar_graph_free(graph: *mut ScarGraph) {
    free(graph)
}

/// Pairing from `n_pairs` pairs `(a, ā)` stored flat in `pairs`.
///
/// # Safety
/// `pairs` must point to `2 * n_pairs` values.
#[no_mangle]
pub unsafe extern "C" fn scar_pairing_new(
    pairs: *const usize,
    n_pairs: usize,
    out: *mut *mut ScarPairing,
) -> ScarStatus {
    guard(|| {
        let flat = slice(pairs, 2 * n_pairs, "pairs")?;
        let p = PairingPattern::new(flat.chunks(2).map(|e| (e[0], e[1])).collect())?;
        put(out, ScarPairing(p), "out")
    })
}

/// # Safety
/// `pairing` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn scar_pairing_len(pairing: *const ScarPairing) -> usize {
    pairing.as_ref().map_or(0, |p| p.0.len())
}

/// # Safety
/// `pairing` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scar_pairing_free(pairing: *mut ScarPairing) {
    free(pairing)
}

/// Blockaded basis of `graph`.
///
/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn scar_basis_new(graph: *const ScarGraph, out: *mut *mut ScarBasis) -> ScarStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        put(out, ScarBasis(enumerate_blockaded(&g.0)?), "out")
    })
}

/// # Safety
/// `basis` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn scar_basis_dim(basis: *const ScarBasis) -> usize {
    basis.as_ref().map_or(0, |b| b.0.dim())
}

/// Bitstring of basis state `k` (bit `v` is vertex `v`).
///
/// # Safety
/// `basis` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn scar_basis_state(basis: *const ScarBasis, k: usize, out: *mut u64) -> ScarStatus {
    guard(|| {
        let b = deref(basis, "basis")?;
        if k >= b.0.dim() {
            return Err(ScarError::InvalidArgument(format!("index {k} out of range {}", b.0.dim())).into());
        }
        write(out, b.0.state(k), "out")
    })
}

/// # Safety
/// `basis` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scar_basis_free(basis: *mut ScarBasis) {
    free(basis)
}

/// PXP Hamiltonian of the basis graph.
///
/// # Safety
/// `basis` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn scar_pxp_new(basis: *const ScarBasis, out: *mut *mut ScarOperator) -> ScarStatus {
    guard(|| {
        let b = deref(basis, "basis")?;
        put(out, ScarOperator(build_pxp(b.0.graph(), &b.0, None, None)?), "out")
    })
}

/// # Safety
/// `op` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scar_operator_free(op: *mut ScarOperator) {
    free(op)
}

/// Doubled state of `pairing` on `basis`; the pairing must certify the graph.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn scar_lambda_new(
    basis: *const ScarBasis,
    pairing: *const ScarPairing,
    out: *mut *mut ScarState,
) -> ScarStatus {
    guard(|| {
        let b = deref(basis, "basis")?;
        let p = deref(pairing, "pairing")?;
        put(out, ScarState(lambda_for_pairing(b.0.graph(), &p.0, &b.0)?), "out")
    })
}

/// Basis state `bits` on `basis`.
///
/// # Safety
/// `basis` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn scar_state_product(
    basis: *const ScarBasis,
    bits: u64,
    out: *mut *mut ScarState,
) -> ScarStatus {
    guard(|| {
        let b = deref(basis, "basis")?;
        put(out, ScarState(StateVector::basis_state(b.0.clone(), bits)?), "out")
    })
}

/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn scar_state_dim(state: *const ScarState) -> usize {
    state.as_ref().map_or(0, |s| s.0.dim())
}

/// Copies the amplitudes into `re` and `im`, each of length `len = dim`.
///
/// # Safety
/// `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn scar_state_amplitudes(
    state: *const ScarState,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> ScarStatus {
    guard(|| {
        let s = deref(state, "state")?;
        if len != s.0.dim() {
            return Err(ScarError::DimensionMismatch { expected: s.0.dim(), found: len }.into());
        }
        if re.is_null() || im.is_null() {
            return Err(Failure::Null("re/im"));
        }
        for (k, a) in s.0.amplitudes().iter().enumerate() {
            *re.add(k) = a.re;
            *im.add(k) = a.im;
        }
        Ok(())
    })
}

/// `‖(H − E)ψ‖`.
///
/// # Safety
/// Handles must be live.
#[no_mangle]
pub unsafe extern "C" fn scar_residual(
    op: *const ScarOperator,
    state: *const ScarState,
    energy: f64,
    out: *mut f64,
) -> ScarStatus {
    guard(|| {
        let h = deref(op, "op")?;
        let s = deref(state, "state")?;
        write(out, residual(&h.0, &s.0, energy)?, "out")
    })
}

/// `e^{−iHt} ψ` with the default propagator settings.
///
/// # Safety
/// Handles must be live.
#[no_mangle]
pub unsafe extern "C" fn scar_evolve(
    op: *const ScarOperator,
    state: *const ScarState,
    t: f64,
    out: *mut *mut ScarState,
) -> ScarStatus {
    guard(|| {
        let h = deref(op, "op")?;
        let s = deref(state, "state")?;
        put(out, ScarState(evolve(&h.0, &s.0, t, &PropagatorConfig::default())?), "out")
    })
}

/// Von Neumann entropy of the vertices listed in `subset`.
///
/// # Safety
/// `subset` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn scar_entropy(
    state: *const ScarState,
    subset: *const usize,
    len: usize,
    out: *mut f64,
) -> ScarStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let sub = slice(subset, len, "subset")?;
        let part = Bipartition::new(sub, s.0.basis().n_vertices())?;
        write(out, entropy(&rdm(&s.0, &part)?)?, "out")
    })
}

/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scar_state_free(state: *mut ScarState) {
    free(state)
}
