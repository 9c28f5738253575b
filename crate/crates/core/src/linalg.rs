//! Complex Hermitian eigendecomposition for small dense matrices.
//!
//! Noise covariances of microphone arrays are at most a few dozen rows, so a
//! cyclic Jacobi sweep is accurate and fast enough. Results are made
//! deterministic: eigenvalues are sorted descending and every eigenvector is
//! rotated so that its largest-magnitude entry is real and positive.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a Hermitian matrix, `A = V diag(values) V'`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: CMatrix,
}

/// Returns `(A + A') / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).map(|z| z * 0.5)
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Only the Hermitian part of `a` is used.
pub fn hermitian_eigen(a: &CMatrix) -> Result<HermitianEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::invalid(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }

    let mut m = hermitian_part(a);
    for i in 0..n {
        m[(i, i)].im = 0.0;
    }
    let mut v = CMatrix::identity(n, n);

    let scale = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.total_cmp(&m[(i, i)].re));

    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut pivot = 0;
        let mut best = -1.0;
        for row in 0..n {
            let mag = v[(row, src)].norm();
            // strict comparison with a small margin keeps the first of near-ties
            if mag > best * (1.0 + 1e-12) {
                best = mag;
                pivot = row;
            }
        }
        let phase = if best > 0.0 {
            v[(pivot, src)].conj() / best
        } else {
            Complex64::new(1.0, 0.0)
        };
        for row in 0..n {
            vectors[(row, col)] = v[(row, src)] * phase;
        }
        vectors[(pivot, col)].im = 0.0;
    }

    Ok(HermitianEigen { values, vectors })
}

/// Zeroes `m[(p, q)]` with the unitary rotation `J` acting on rows/columns
/// `p` and `q`: `m <- J' m J`, `v <- v J`.
fn rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let b = apq.norm();
    if b == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    if b <= 1e-300 || b < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        m[(p, q)] = Complex64::new(0.0, 0.0);
        m[(q, p)] = Complex64::new(0.0, 0.0);
        return;
    }

    // The phase factor e^{-i beta} turns the 2x2 block real symmetric,
    // then a real Givens rotation finishes the job.
    let phase = apq.conj() / b;
    let zeta = (aqq - app) / (2.0 * b);
    let t = if zeta >= 0.0 {
        1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
    } else {
        -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let j_pp = Complex64::new(c, 0.0);
    let j_pq = Complex64::new(s, 0.0);
    let j_qp = phase * (-s);
    let j_qq = phase * c;

    let n = m.nrows();
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * j_pp + mkq * j_qp;
        m[(k, q)] = mkp * j_pq + mkq * j_qq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = j_pp.conj() * mpk + j_qp.conj() * mqk;
        m[(q, k)] = j_pq.conj() * mpk + j_qq.conj() * mqk;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)].im = 0.0;
    m[(q, q)].im = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * j_pp + vkq * j_qp;
        v[(k, q)] = vkp * j_pq + vkq * j_qq;
    }
}

/// Rebuilds `V diag(values) V'`.
pub fn reconstruct(eig: &HermitianEigen) -> CMatrix {
    let n = eig.values.len();
    let mut scaled = eig.vectors.clone();
    for (j, &lambda) in eig.values.iter().enumerate() {
        for i in 0..n {
            scaled[(i, j)] *= lambda;
        }
    }
    scaled * eig.vectors.adjoint()
}

/// `x' A y` for complex vectors.
pub fn quadratic_form(x: &CVector, a: &CMatrix, y: &CVector) -> Complex64 {
    x.dotc(&(a * y))
}
