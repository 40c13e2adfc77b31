//! Plain sequential loops. They are both the test oracles for the kernels and
//! the native baselines the harness times against.

/// `y[i] = alpha * x[i] + y[i]` for every `i`.
pub fn axpy_reference(alpha: f64, x: &[f64], y: &mut [f64]) {
    assert_eq!(x.len(), y.len());
    for i in 0..y.len() {
        y[i] += alpha * x[i];
    }
}

/// `C = alpha * A * B + beta * C` for row-major `A` (m x k, row stride
/// `lda`), `B` (k x n, `ldb`) and `C` (m x n, `ldc`). Each dot product is
/// accumulated from zero in ascending `p`.
#[allow(clippy::too_many_arguments)]
pub fn gemm_reference(
    m: usize,
    n: usize,
    k: usize,
    alpha: f64,
    a: &[f64],
    lda: usize,
    b: &[f64],
    ldb: usize,
    beta: f64,
    c: &mut [f64],
    ldc: usize,
) {
    for r in 0..m {
        for col in 0..n {
            let mut sum = 0.0;
            for p in 0..k {
                sum += a[r * lda + p] * b[p * ldb + col];
            }
            c[r * ldc + col] = alpha * sum + beta * c[r * ldc + col];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axpy_small() {
        let mut y = [10.0, 20.0, 30.0];
        axpy_reference(2.0, &[1.0, 2.0, 3.0], &mut y);
        assert_eq!(y, [12.0, 24.0, 36.0]);
        axpy_reference(0.0, &[1.0, 2.0, 3.0], &mut y);
        assert_eq!(y, [12.0, 24.0, 36.0]);
    }

    #[test]
    fn gemm_two_by_two() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [5.0, 6.0, 7.0, 8.0];
        let mut c = [0.0; 4];
        gemm_reference(2, 2, 2, 1.0, &a, 2, &b, 2, 0.0, &mut c, 2);
        // 1*5+2*7, 1*6+2*8, 3*5+4*7, 3*6+4*8
        assert_eq!(c, [19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn gemm_one_by_one() {
        let mut c = [4.0];
        gemm_reference(1, 1, 1, 2.0, &[3.0], 1, &[5.0], 1, 0.5, &mut c, 1);
        assert_eq!(c, [2.0 * 3.0 * 5.0 + 0.5 * 4.0]);
    }

    #[test]
    fn gemm_respects_leading_dims() {
        // 1x2 times 2x1 with padded strides
        let a = [1.0, 2.0, -1.0];
        let b = [3.0, -1.0, 4.0, -1.0];
        let mut c = [0.0, 9.0];
        gemm_reference(1, 1, 2, 1.0, &a, 3, &b, 2, 0.0, &mut c, 2);
        assert_eq!(c, [11.0, 9.0]);
    }
}
