//! Krylov time evolution and dense exact diagonalization.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Result, ScarError};
use crate::operators::{SparseOperator, StateVector};

/// Largest dimension accepted by the dense eigensolvers.
pub const DENSE_MAX_DIM: usize = 5000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorConfig {
    /// Maximum Lanczos subspace dimension per substep.
    pub krylov_dim: usize,
    /// Bound on the a-posteriori error estimate of a single substep.
    pub step_tolerance: f64,
    /// Largest substep attempted.
    pub max_substep: f64,
    /// Substeps smaller than this signal non-convergence.
    pub min_substep: f64,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            krylov_dim: 30,
            step_tolerance: 1e-10,
            max_substep: 2.0,
            min_substep: 1e-8,
        }
    }
}

impl PropagatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.krylov_dim < 2 {
            return Err(ScarError::InvalidArgument("krylov_dim must be at least 2".into()));
        }
        if !(self.step_tolerance > 0.0) {
            return Err(ScarError::InvalidArgument("step_tolerance must be positive".into()));
        }
        if !(self.max_substep > 0.0) || !(self.min_substep > 0.0) {
            return Err(ScarError::InvalidArgument("substep bounds must be positive".into()));
        }
        Ok(())
    }
}

/// Returns `exp(-i H t) v`.
pub fn evolve(
    h: &SparseOperator,
    v: &StateVector,
    t: f64,
    cfg: &PropagatorConfig,
) -> Result<StateVector> {
    cfg.validate()?;
    if !h.is_hermitian() {
        return Err(ScarError::NotHermitian);
    }
    if h.dim() != v.dim() {
        return Err(ScarError::DimensionMismatch {
            expected: h.dim(),
            found: v.dim(),
        });
    }
    if !t.is_finite() {
        return Err(ScarError::InvalidArgument("non-finite time".into()));
    }
    let mut psi = v.amplitudes().to_vec();
    let mut ws = Workspace::new(h.dim(), cfg.krylov_dim.min(h.dim()).max(1));
    let mut done = 0.0;
    let total = t.abs();
    let sign = t.signum();
    let mut dt = cfg.max_substep.min(total);
    while done < total {
        let remaining = total - done;
        dt = dt.min(remaining);
        let taken = ws.step(h, &mut psi, sign * dt, cfg)?;
        done += taken.abs();
        // Next attempt starts from twice the accepted step.
        dt = (2.0 * taken.abs()).min(cfg.max_substep);
        if remaining - taken.abs() < 1e-15 * total.max(1.0) {
            break;
        }
    }
    StateVector::new(v.basis().clone(), psi)
}

/// Evolves `v` to each time in ascending `times` (relative to `v` at t = 0).
pub fn evolve_trajectory(
    h: &SparseOperator,
    v: &StateVector,
    times: &[f64],
    cfg: &PropagatorConfig,
) -> Result<Vec<StateVector>> {
    let mut out = Vec::with_capacity(times.len());
    let mut current = v.clone();
    let mut t_prev = 0.0;
    for &t in times {
        if t < t_prev {
            return Err(ScarError::InvalidArgument("time grid must be ascending and ≥ 0".into()));
        }
        if t > t_prev {
            current = evolve(h, &current, t - t_prev, cfg)?;
        }
        out.push(current.clone());
        t_prev = t;
    }
    Ok(out)
}

struct Workspace {
    basis: Vec<Vec<Complex64>>,
    w: Vec<Complex64>,
}

impl Workspace {
    fn new(dim: usize, m: usize) -> Self {
        Workspace {
            basis: vec![vec![ZERO; dim]; m],
            w: vec![ZERO; dim],
        }
    }

    /// Takes one adaptive substep of length at most `dt` and returns the
    /// signed length actually taken.
    fn step(
        &mut self,
        h: &SparseOperator,
        psi: &mut [Complex64],
        dt: f64,
        cfg: &PropagatorConfig,
    ) -> Result<f64> {
        let beta0 = norm(psi);
        if beta0 == 0.0 {
            return Ok(dt);
        }
        let m_max = self.basis.len();
        for (b, p) in self.basis[0].iter_mut().zip(psi.iter()) {
            *b = p / beta0;
        }
        let mut alpha = Vec::with_capacity(m_max);
        let mut beta = Vec::with_capacity(m_max);
        let mut m = 0;
        // Happy breakdown means the subspace is invariant and the step is exact.
        let mut exact = false;
        while m < m_max {
            h.matvec_into(&self.basis[m], &mut self.w);
            // Full reorthogonalization, done twice for stability.
            let mut a = 0.0;
            for _ in 0..2 {
                for i in 0..=m {
                    let c = dot(&self.basis[i], &self.w);
                    if i == m {
                        a += c.re;
                    }
                    axpy(-c, &self.basis[i], &mut self.w);
                }
            }
            alpha.push(a);
            let b = norm(&self.w);
            m += 1;
            if b <= 1e-13 * beta0.max(1.0) {
                exact = true;
                beta.push(0.0);
                break;
            }
            beta.push(b);
            if m < m_max {
                for (dst, src) in self.basis[m].iter_mut().zip(&self.w) {
                    *dst = src / b;
                }
            }
        }
        let mut tri = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            tri[(i, i)] = alpha[i];
            if i + 1 < m {
                tri[(i, i + 1)] = beta[i];
                tri[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(tri);
        let beta_m = beta[m - 1];
        let mut tau = dt;
        loop {
            let coeffs = krylov_coefficients(&eig, tau);
            let err = if exact {
                0.0
            } else {
                beta0 * beta_m * coeffs[m - 1].norm()
            };
            if err <= cfg.step_tolerance {
                for p in psi.iter_mut() {
                    *p = ZERO;
                }
                for (j, c) in coeffs.iter().enumerate() {
                    axpy(c * beta0, &self.basis[j], psi);
                }
                return Ok(tau);
            }
            tau *= 0.5;
            if tau.abs() < cfg.min_substep {
                return Err(ScarError::Numerical(format!(
                    "Krylov propagator did not converge (error {err:e} at substep {:e})",
                    2.0 * tau.abs()
                )));
            }
        }
    }
}

/// `exp(-i T t) e_1` from the eigendecomposition of the tridiagonal `T`.
fn krylov_coefficients(eig: &SymmetricEigen<f64, nalgebra::Dyn>, t: f64) -> Vec<Complex64> {
    let s = &eig.eigenvectors;
    let m = s.nrows();
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &theta)| Complex64::from_polar(1.0, -theta * t) * s[(0, k)])
        .collect();
    (0..m)
        .map(|j| (0..m).map(|k| phases[k] * s[(j, k)]).sum())
        .collect()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(c: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues in ascending order with eigenvectors as matching columns.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl Eigensystem {
    /// Dense propagation `exp(-i H t) v` through the eigenbasis.
    pub fn propagate(&self, v: &[Complex64], t: f64) -> Vec<Complex64> {
        let u = &self.vectors;
        let coeffs: Vec<Complex64> = (0..u.ncols())
            .map(|k| {
                let c: Complex64 = u.column(k).iter().zip(v).map(|(a, b)| a.conj() * b).sum();
                c * Complex64::from_polar(1.0, -self.values[k] * t)
            })
            .collect();
        (0..u.nrows())
            .map(|r| (0..u.ncols()).map(|k| u[(r, k)] * coeffs[k]).sum())
            .collect()
    }
}

/// Full spectrum of a Hermitian operator.
pub fn exact_eigs(h: &SparseOperator) -> Result<Eigensystem> {
    if h.dim() > DENSE_MAX_DIM {
        return Err(ScarError::DimensionLimit {
            what: "dense diagonalization dimension",
            size: h.dim(),
            limit: DENSE_MAX_DIM,
        });
    }
    if !h.is_hermitian() {
        return Err(ScarError::NotHermitian);
    }
    Ok(eigh_dense(&h.to_dense()))
}

/// Dense Hermitian eigensolver; takes a real path when the matrix is real.
pub fn eigh_dense(m: &DMatrix<Complex64>) -> Eigensystem {
    let n = m.nrows();
    let (values, vectors) = if m.iter().all(|z| z.im == 0.0) {
        let re = m.map(|z| z.re);
        let eig = SymmetricEigen::new(re);
        (eig.eigenvalues, eig.eigenvectors.map(|x| Complex64::new(x, 0.0)))
    } else {
        let eig = SymmetricEigen::new(m.clone());
        (eig.eigenvalues, eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let sorted_vectors = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    Eigensystem {
        values: sorted_values,
        vectors: sorted_vectors,
    }
}

/// `‖H v − λ v‖` for every eigenpair; used by tests and diagnostics.
pub fn eigen_residuals(h: &SparseOperator, eig: &Eigensystem) -> Vec<f64> {
    (0..eig.values.len())
        .map(|k| {
            let v: Vec<Complex64> = eig.vectors.column(k).iter().copied().collect();
            let hv = h.matvec(&v);
            let diff = DVector::from_iterator(
                v.len(),
                hv.iter().zip(&v).map(|(a, b)| a - b * eig.values[k]),
            );
            diff.norm()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_blockaded;
    use crate::geometry::{chain, Boundary, Geometry};
    use crate::operators::build_pxp;

    fn ring_h(n: usize) -> SparseOperator {
        let g = chain(n, Boundary::Periodic).unwrap();
        let b = enumerate_blockaded(&g).unwrap();
        build_pxp(&g, &b, None, None).unwrap()
    }

    fn random_state(h: &SparseOperator, seed: u64) -> StateVector {
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let amps = (0..h.dim()).map(|_| Complex64::new(next(), next())).collect();
        let mut v = StateVector::new(h.basis().clone(), amps).unwrap();
        v.normalize().unwrap();
        v
    }

    #[test]
    fn krylov_matches_dense_oracle() {
        let h = ring_h(12);
        let eig = exact_eigs(&h).unwrap();
        let v = random_state(&h, 3);
        for t in [0.3, 2.0, 7.5] {
            let k = evolve(&h, &v, t, &PropagatorConfig::default()).unwrap();
            let d = eig.propagate(v.amplitudes(), t);
            let err: f64 = k
                .amplitudes()
                .iter()
                .zip(&d)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-9, "t={t} err={err}");
        }
    }

    #[test]
    fn reversible_and_unitary() {
        let h = ring_h(10);
        let v = random_state(&h, 7);
        let cfg = PropagatorConfig::default();
        let fwd = evolve(&h, &v, 13.0, &cfg).unwrap();
        assert!((fwd.norm() - 1.0).abs() < 1e-10);
        let back = evolve(&h, &fwd, -13.0, &cfg).unwrap();
        assert!(back.distance(&v).unwrap() < 1e-9);
    }

    #[test]
    fn tiny_spaces_use_happy_breakdown() {
        let g = chain(2, Boundary::Open).unwrap();
        let b = enumerate_blockaded(&g).unwrap();
        let h = build_pxp(&g, &b, None, None).unwrap();
        let v = StateVector::basis_state(b, 0).unwrap();
        let out = evolve(&h, &v, 1.0, &PropagatorConfig::default()).unwrap();
        let eig = exact_eigs(&h).unwrap();
        let d = eig.propagate(v.amplitudes(), 1.0);
        for (a, b) in out.amplitudes().iter().zip(&d) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = ring_h(4);
        let op = SparseOperator::from_triplets(
            h.basis().clone(),
            vec![(0, 1, Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        let v = StateVector::basis_state(h.basis().clone(), 0).unwrap();
        assert!(matches!(
            evolve(&op, &v, 1.0, &PropagatorConfig::default()),
            Err(ScarError::NotHermitian)
        ));
        assert!(matches!(exact_eigs(&op), Err(ScarError::NotHermitian)));
    }

    #[test]
    fn spectrum_is_reflection_symmetric_and_accurate() {
        let (g, _) = Geometry::Dangler { half_len: 5 }.build().unwrap();
        let b = enumerate_blockaded(&g).unwrap();
        let h = build_pxp(&g, &b, None, None).unwrap();
        let eig = exact_eigs(&h).unwrap();
        let n = eig.values.len();
        for k in 0..n {
            assert!((eig.values[k] + eig.values[n - 1 - k]).abs() < 1e-10);
        }
        assert!(eigen_residuals(&h, &eig).iter().all(|&r| r < 1e-9));
        assert!(eig.values.iter().any(|e| e.abs() < 1e-10));
    }

    #[test]
    fn diagonal_toy() {
        let h = ring_h(2);
        let d = SparseOperator::diagonal(h.basis().clone(), &[2.0, -1.0, 0.5]).unwrap();
        let eig = exact_eigs(&d).unwrap();
        assert_eq!(eig.values, vec![-1.0, 0.5, 2.0]);
    }

    #[test]
    fn config_validation() {
        let cfg = PropagatorConfig {
            krylov_dim: 1,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = PropagatorConfig {
            step_tolerance: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn trajectory_is_sequential_evolution() {
        let h = ring_h(8);
        let v = random_state(&h, 11);
        let cfg = PropagatorConfig::default();
        let traj = evolve_trajectory(&h, &v, &[0.0, 1.0, 2.5], &cfg).unwrap();
        assert!(traj[0].distance(&v).unwrap() == 0.0);
        let direct = evolve(&h, &v, 2.5, &cfg).unwrap();
        assert!(traj[2].distance(&direct).unwrap() < 1e-9);
        assert!(evolve_trajectory(&h, &v, &[1.0, 0.5], &cfg).is_err());
    }
}
