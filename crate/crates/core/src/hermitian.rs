//! Dense complex Hermitian linear algebra for small quantum states.
//!
//! Everything here works on row-major [`ComplexMatrix`] values. The eigensolver
//! is a cyclic complex Jacobi method, which is exact enough for the state
//! dimensions this crate deals with (at most [`DEFAULT_DIM_CAP`]) and has no
//! external dependencies.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::simplex::{check_simplex, xlog2x_neg};

/// Max-abs asymmetry tolerated by Hermitian checks.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Allowed deviation of a density operator's trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue a density operator may have.
pub const PSD_TOL: f64 = 1e-10;
/// Eigenvalues in `[-CLAMP_WINDOW, 0)` are treated as roundoff and clamped to zero.
pub const CLAMP_WINDOW: f64 = 1e-9;
/// Default cap on matrix dimension.
pub const DEFAULT_DIM_CAP: usize = 4096;

const JACOBI_OFFDIAG_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries; `data.len()` must be a perfect square.
    pub fn new(data: Vec<Complex64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != data.len() {
            return Err(Error::NotSquare { len: data.len() });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, data })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim])
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m.data[i * d.len() + i] = Complex64::new(x, 0.0);
        }
        m
    }

    /// Rank-one projector `|psi><psi|` (not normalized).
    pub fn outer(psi: &[Complex64]) -> Self {
        Self::from_fn(psi.len(), |i, j| psi[i] * psi[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.data[i * self.dim + j] = z;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self += w * other`.
    pub fn add_scaled(&mut self, w: f64, other: &ComplexMatrix) -> Result<()> {
        self.check_same_dim(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * w;
        }
        Ok(())
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<Self> {
        let mut out = self.clone();
        out.add_scaled(-1.0, other)?;
        Ok(out)
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<Self> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &ComplexMatrix) -> Result<Complex64> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        Ok(acc)
    }

    /// `u * self * u^dagger`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self> {
        u.matmul(self)?.matmul(&u.adjoint())
    }

    /// Largest `|m_ij - conj(m_ji)|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let max_asymmetry = self.max_asymmetry();
        if max_asymmetry > HERMITIAN_TOL {
            return Err(Error::NotHermitian { max_asymmetry });
        }
        Ok(())
    }

    fn check_same_dim(&self, other: &ComplexMatrix) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }
}

/// Kronecker product with the default dimension cap.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    tensor_product_capped(a, b, DEFAULT_DIM_CAP)
}

/// Kronecker product; entry `(i*db + k, j*db + l)` is `a(i,j) * b(k,l)`.
pub fn tensor_product_capped(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    cap: usize,
) -> Result<ComplexMatrix> {
    let dim = a.dim.checked_mul(b.dim).unwrap_or(usize::MAX);
    if dim > cap {
        return Err(Error::Resource {
            what: "matrix dimension",
            requested: dim,
            cap,
        });
    }
    let db = b.dim;
    Ok(ComplexMatrix::from_fn(dim, |r, c| {
        a.get(r / db, c / db) * b.get(r % db, c % db)
    }))
}

/// Spectral decomposition `m = V diag(values) V^dagger`, eigenvalues descending,
/// eigenvectors stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V diag(f(values)) V^dagger`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, |i, j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &w) in fv.iter().enumerate() {
                if w != 0.0 {
                    acc += v.get(i, k) * v.get(j, k).conj() * w;
                }
            }
            acc
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|x| x)
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
pub fn eigh(m: &ComplexMatrix) -> Result<HermitianEigen> {
    m.check_hermitian()?;
    let n = m.dim;
    let mut a = m.data.clone();
    // symmetrize away sub-tolerance asymmetry
    for i in 0..n {
        a[i * n + i] = Complex64::new(a[i * n + i].re, 0.0);
        for j in (i + 1)..n {
            let avg = (a[i * n + j] + a[j * n + i].conj()) * 0.5;
            a[i * n + j] = avg;
            a[j * n + i] = avg.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n).data;
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    let tol = JACOBI_OFFDIAG_TOL * scale;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let mag = apq.norm();
                if mag < 1e-300 {
                    continue;
                }
                let phase = apq / mag; // e^{i phi}
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U = diag(1, e^{-i phi}) * [[c, s], [-s, c]] on the (p, q) plane
                let upp = Complex64::new(c, 0.0);
                let upq = Complex64::new(s, 0.0);
                let uqp = -phase.conj() * s;
                let uqq = phase.conj() * c;
                // A <- A U
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * upp + akq * uqp;
                    a[k * n + q] = akp * upq + akq * uqq;
                }
                // A <- U^dagger A
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = upp.conj() * apk + uqp.conj() * aqk;
                    a[q * n + k] = upq.conj() * apk + uqq.conj() * aqk;
                }
                a[p * n + q] = Complex64::new(0.0, 0.0);
                a[q * n + p] = Complex64::new(0.0, 0.0);
                a[p * n + p] = Complex64::new(a[p * n + p].re, 0.0);
                a[q * n + q] = Complex64::new(a[q * n + q].re, 0.0);
                // V <- V U
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * upp + vkq * uqp;
                    v[k * n + q] = vkp * upq + vkq * uqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].re.total_cmp(&a[i * n + i].re));
    let values = order.iter().map(|&i| a[i * n + i].re).collect();
    let vectors = ComplexMatrix::from_fn(n, |r, c| v[r * n + order[c]]);
    Ok(HermitianEigen { values, vectors })
}

/// All eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(eigh(m)?.values)
}

/// Entropy in bits of a spectrum, clamping roundoff negativity.
pub fn spectral_entropy(spectrum: &[f64]) -> Result<f64> {
    let mut h = 0.0;
    for &x in spectrum {
        if x < -CLAMP_WINDOW {
            return Err(Error::NegativeEigenvalue(x));
        }
        h += xlog2x_neg(x.clamp(0.0, 1.0));
    }
    Ok(h)
}

/// Hermitian, unit-trace, positive semi-definite matrix.
///
/// The spectrum is computed once during validation and cached.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    spectrum: Vec<f64>,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let spectrum = hermitian_eigenvalues(&matrix)?;
        let min = spectrum.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::NegativeEigenvalue(min));
        }
        Ok(Self { matrix, spectrum })
    }

    /// Diagonal (classical) state.
    pub fn diagonal(p: &[f64]) -> Result<Self> {
        check_simplex(p, "diagonal state")?;
        Self::new(ComplexMatrix::diag(p))
    }

    /// Computational-basis projector `|k><k|` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut p = vec![0.0; dim];
        p[k] = 1.0;
        let matrix = ComplexMatrix::diag(&p);
        let mut spectrum = vec![0.0; dim];
        spectrum[0] = 1.0;
        Self { matrix, spectrum }
    }

    /// Maximally mixed state `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let w = 1.0 / dim as f64;
        Self {
            matrix: ComplexMatrix::diag(&vec![w; dim]),
            spectrum: vec![w; dim],
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    /// Eigenvalues, descending.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    // the constructor already bounds negativity by PSD_TOL < CLAMP_WINDOW
    spectral_entropy(&rho.spectrum).unwrap_or(f64::NAN)
}

/// Convex combination `sum_i w_i rho_i`.
pub fn mix(weights: &[f64], states: &[DensityOperator]) -> Result<DensityOperator> {
    check_simplex(weights, "mixing weights")?;
    if weights.len() != states.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            got: states.len(),
        });
    }
    let dim = states[0].dim();
    let mut acc = ComplexMatrix::zeros(dim);
    for (w, s) in weights.iter().zip(states) {
        acc.add_scaled(*w, &s.matrix)?;
    }
    DensityOperator::new(acc)
}

/// Tensor product of density operators.
pub fn tensor_states(a: &DensityOperator, b: &DensityOperator) -> Result<DensityOperator> {
    DensityOperator::new(tensor_product(&a.matrix, &b.matrix)?)
}
