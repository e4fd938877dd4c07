//! Dense Hermitian eigendecomposition with a reproducible phase convention.

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance on `|H - H^dagger|` accepted by [`diagonalize`].
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;

/// Eigenvalues in ascending order with matching orthonormal eigenvector
/// columns.
#[derive(Clone, Debug)]
pub struct Eigen<T: ComplexField<RealField = f64>> {
    pub values: DVector<f64>,
    pub vectors: DMatrix<T>,
}

/// Diagonalizes a Hermitian matrix.
///
/// Each eigenvector is rotated so that its largest-magnitude component
/// (lowest index on ties) is real and positive.
pub fn diagonalize<T: ComplexField<RealField = f64>>(h: &DMatrix<T>) -> Result<Eigen<T>> {
    if !h.is_square() {
        return Err(Error::Argument(format!(
            "matrix must be square, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let n = h.nrows();
    if n == 0 {
        return Ok(Eigen { values: DVector::zeros(0), vectors: DMatrix::zeros(0, 0) });
    }
    let scale = h.iter().map(|x| x.clone().modulus()).fold(0.0, f64::max);
    let deviation = hermiticity_deviation(h);
    let tolerance = HERMITICITY_TOLERANCE * scale.max(f64::MIN_POSITIVE);
    if deviation > tolerance {
        return Err(Error::NotHermitian { deviation, tolerance });
    }

    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::<T>::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        let mut pivot = 0;
        let mut best = -1.0;
        for (k, x) in v.iter().enumerate() {
            let m = x.clone().modulus();
            if m > best * (1.0 + 1e-12) {
                best = m;
                pivot = k;
            }
        }
        // Multiply by conj(v_p) / |v_p| so that v_p becomes |v_p|.
        let p = v[pivot].clone();
        let phase = p.clone().conjugate().unscale(p.modulus());
        vectors.set_column(col, &(v * phase));
    }
    Ok(Eigen { values, vectors })
}

/// `max |H_ij - conj(H_ji)|`.
pub fn hermiticity_deviation<T: ComplexField<RealField = f64>>(h: &DMatrix<T>) -> f64 {
    let n = h.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let d = (h[(i, j)].clone() - h[(j, i)].clone().conjugate()).modulus();
            worst = worst.max(d);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Complex;

    #[test]
    fn diagonal_input() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 2.0]));
        let e = diagonalize(&h).unwrap();
        assert_eq!(e.values.as_slice(), &[-1.0, 2.0, 3.0]);
        // Columns are unit vectors e_1, e_2, e_0.
        for (col, row) in [(0, 1), (1, 2), (2, 0)] {
            assert_eq!(e.vectors[(row, col)], 1.0);
        }
    }

    #[test]
    fn two_level_closed_form() {
        let (v, delta) = (0.7, 1.9);
        let h = DMatrix::from_row_slice(2, 2, &[0.0, v, v, delta]);
        let e = diagonalize(&h).unwrap();
        let root = (delta * delta + 4.0 * v * v).sqrt();
        assert_relative_eq!(e.values[0], (delta - root) / 2.0, epsilon = 1e-14);
        assert_relative_eq!(e.values[1], (delta + root) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.1, 0.0]);
        assert!(matches!(diagonalize(&h), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn complex_phase_convention() {
        let i = Complex::new(0.0, 1.0);
        let one = Complex::new(1.0, 0.0);
        let h = DMatrix::from_row_slice(2, 2, &[one, i, -i, one * 3.0]);
        let e = diagonalize(&h).unwrap();
        for c in 0..2 {
            let col = e.vectors.column(c);
            let pivot = col.iter().map(|x| x.norm()).enumerate()
                .max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
            assert!(col[pivot].im.abs() < 1e-15 && col[pivot].re > 0.0);
        }
    }
}
