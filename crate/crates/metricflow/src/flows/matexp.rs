//! Dense matrix exponential by scaling and squaring.
//!
//! Degree-13 Pade approximant with the classical coefficient table; the
//! input is scaled by a power of two until its 1-norm is below the degree-13
//! threshold, the approximant is evaluated, and the result squared back.
//! Accuracy on the small matrices used here is near machine precision; the
//! unit tests pin 1e-13 against closed forms.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^A` for a square matrix with finite entries.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::InvalidConfig(format!(
            "matrix exponential needs a nonempty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in matrix exponential".into()));
    }
    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > THETA13 {
        ((norm / THETA13).log2().ceil() as i32).max(0)
    } else {
        0
    };
    let scaled = a * 2f64.powi(-s);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let id = DMatrix::<f64>::identity(n, n);
    let b = &PADE13;
    let u_inner = &a6 * (b[13] * &a6 + b[11] * &a4 + b[9] * &a2)
        + b[7] * &a6
        + b[5] * &a4
        + b[3] * &a2
        + b[1] * &id;
    let u = &scaled * u_inner;
    let v = &a6 * (b[12] * &a6 + b[10] * &a4 + b[8] * &a2)
        + b[6] * &a6
        + b[4] * &a4
        + b[2] * &a2
        + b[0] * &id;
    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut r = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("Pade denominator is singular".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    #[test]
    fn rotation_generator() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let e = expm(&a).unwrap();
        let (c, s) = (1f64.cos(), 1f64.sin());
        let exact = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
        assert!(max_abs_diff(&e, &exact) < 1e-13);
    }

    #[test]
    fn nilpotent_truncates() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e = expm(&a).unwrap();
        let exact = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(max_abs_diff(&e, &exact) < 1e-15);
    }

    #[test]
    fn diagonal_exponentiates_entrywise() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 2.0]);
        let e = expm(&a).unwrap();
        let exact =
            DMatrix::from_row_slice(2, 2, &[(-1f64).exp(), 0.0, 0.0, 2f64.exp()]);
        assert!(max_abs_diff(&e, &exact) < 1e-13);
    }

    #[test]
    fn zero_matrix_gives_identity() {
        let a = DMatrix::<f64>::zeros(3, 3);
        let e = expm(&a).unwrap();
        assert!(max_abs_diff(&e, &DMatrix::identity(3, 3)) < 1e-15);
    }

    #[test]
    fn large_norm_triggers_squaring() {
        // 40 > theta13 forces the scaling branch.
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 40.0, -40.0, 0.0]);
        let e = expm(&a).unwrap();
        let (c, s) = (40f64.cos(), 40f64.sin());
        let exact = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
        assert!(max_abs_diff(&e, &exact) < 1e-12);
    }

    #[test]
    fn inverse_property() {
        let a = DMatrix::from_row_slice(3, 3, &[0.1, 0.7, -0.3, 0.2, -0.5, 0.4, 0.0, 0.6, 0.2]);
        let e = expm(&a).unwrap();
        let em = expm(&(-&a)).unwrap();
        assert!(max_abs_diff(&(&e * &em), &DMatrix::identity(3, 3)) < 1e-13);
    }

    #[test]
    fn semigroup_property() {
        let a = DMatrix::from_row_slice(2, 2, &[0.3, 1.1, -0.9, -0.2]);
        let whole = expm(&(&a * 0.7)).unwrap();
        let half1 = expm(&(&a * 0.3)).unwrap();
        let half2 = expm(&(&a * 0.4)).unwrap();
        assert!(max_abs_diff(&whole, &(&half2 * &half1)) < 1e-13);
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        let a = DMatrix::<f64>::zeros(2, 3);
        assert!(expm(&a).is_err());
        let b = DMatrix::from_row_slice(2, 2, &[0.0, f64::NAN, 0.0, 0.0]);
        assert!(expm(&b).is_err());
    }
}
