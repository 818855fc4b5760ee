//! Dense linear-algebra helpers on top of nalgebra: eigenvalues, spectral
//! norm, eigenvector conditioning, and SISO transmission zeros.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

const SCHUR_MAX_ITER: usize = 10_000;

fn check_square_finite(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidArgument(format!("matrix is {}x{}, expected square", a.nrows(), a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigensolveFailure("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Eigenvalues sorted by descending real part, then ascending imaginary part.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<C64>> {
    check_square_finite(a)?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    // Tight tolerances can stall on clustered eigenvalues (ΓA has −1/τ̄
    // repeated |G|−1 times), so loosen step by step.
    let schur = [f64::EPSILON, 1e-15, 1e-14, 1e-13]
        .iter()
        .find_map(|eps| a.clone().try_schur(*eps, SCHUR_MAX_ITER))
        .ok_or_else(|| Error::EigensolveFailure("Schur iteration did not converge".into()))?;
    let mut eig: Vec<C64> = schur.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| y.re.total_cmp(&x.re).then(x.im.total_cmp(&y.im)));
    Ok(eig)
}

pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Largest singular value; zero for empty matrices.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

/// 2-norm condition number of a unit-column eigenvector matrix.
///
/// Eigenvalues closer than a relative 1e-6 are grouped; each group of size
/// k must have a k-dimensional numerical null space of `A - λI`, otherwise
/// the matrix is defective and the result is infinite.
pub fn eigenvector_condition(a: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    let eig = eigenvalues(a)?;
    if n == 0 {
        return Ok(1.0);
    }
    let scale = spectral_norm(a).max(1.0);
    let tol = 1e-6 * scale;

    let mut clusters: Vec<Vec<C64>> = Vec::new();
    for &l in &eig {
        match clusters.iter_mut().find(|c| (c[0] - l).norm() <= tol) {
            Some(c) => c.push(l),
            None => clusters.push(vec![l]),
        }
    }

    let ac: DMatrix<C64> = a.map(|v| C64::new(v, 0.0));
    let mut cols: Vec<DVector<C64>> = Vec::with_capacity(n);
    for cluster in &clusters {
        let k = cluster.len();
        let mean = cluster.iter().sum::<C64>() / k as f64;
        let shifted = &ac - DMatrix::<C64>::identity(n, n) * mean;
        let svd = shifted
            .try_svd(false, true, f64::EPSILON, SCHUR_MAX_ITER)
            .ok_or_else(|| Error::EigensolveFailure("SVD did not converge".into()))?;
        let vt = svd.v_t.expect("requested V^H");
        // Singular values are sorted descending; the null space is the tail.
        if svd.singular_values[n - k] > tol {
            return Ok(f64::INFINITY);
        }
        for row in n - k..n {
            cols.push(vt.row(row).transpose().map(|z| z.conj()));
        }
    }
    let p = DMatrix::from_columns(&cols);
    let sv = p.singular_values();
    let (hi, lo) = (sv.max(), sv.min());
    Ok(if lo > 0.0 { hi / lo } else { f64::INFINITY })
}

/// Characteristic polynomial det(sI - A), highest degree first, by
/// Faddeev-LeVerrier. Adequate for the small systems handled here.
pub fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[0] = 1.0;
    let mut m = DMatrix::<f64>::zeros(n, n);
    let id = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        m = a * &m + &id * coeffs[k - 1];
        coeffs[k] = -(a * &m).trace() / k as f64;
    }
    coeffs
}

/// Roots of a polynomial given highest degree first, via companion-matrix
/// eigenvalues. Leading coefficients below 1e-12 of the largest are dropped.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<C64>> {
    let big = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if big == 0.0 {
        return Ok(Vec::new());
    }
    let start = coeffs.iter().position(|c| c.abs() > 1e-12 * big).unwrap_or(coeffs.len());
    let p = &coeffs[start..];
    let deg = p.len().saturating_sub(1);
    if deg == 0 {
        return Ok(Vec::new());
    }
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for j in 0..deg {
        comp[(0, j)] = -p[j + 1] / p[0];
    }
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    eigenvalues(&comp)
}

/// Finite transmission zeros of the SISO channel (A, b, c, d = 0).
///
/// With c·b ≠ 0 the Rosenbrock pencil [[A - sI, b], [c, 0]] reduces to the
/// ordinary eigenproblem of P·A restricted to ker(c), where
/// P = I - b (c·b)⁻¹ c. Otherwise the zeros are taken as the roots of the
/// transfer-function numerator det(sI - A + b c) - det(sI - A).
pub fn siso_zeros(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<Vec<C64>> {
    check_square_finite(a)?;
    let n = a.nrows();
    let cb = c.dot(b);
    if cb.abs() > 1e-10 * c.norm() * b.norm() {
        if n == 1 {
            return Ok(Vec::new());
        }
        let kernel = orthogonal_complement(c);
        let proj = DMatrix::<f64>::identity(n, n) - (b * c.transpose()) / cb;
        let reduced = kernel.transpose() * proj * a * &kernel;
        return eigenvalues(&reduced);
    }
    let bc = b * c.transpose();
    let closed = char_poly(&(a - bc));
    let open = char_poly(a);
    let num: Vec<f64> = closed.iter().zip(&open).map(|(x, y)| x - y).collect();
    poly_roots(&num)
}

/// Orthonormal basis (n x (n-1)) of the complement of a nonzero vector,
/// from the trailing columns of a Householder reflector.
fn orthogonal_complement(c: &DVector<f64>) -> DMatrix<f64> {
    let n = c.len();
    let unit = c / c.norm();
    let mut v = unit.clone();
    let sign = if unit[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign;
    let h = DMatrix::<f64>::identity(n, n) - (&v * v.transpose()) * (2.0 / v.dot(&v));
    h.columns(1, n - 1).into_owned()
}
