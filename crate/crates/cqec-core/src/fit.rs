//! Small least-squares helpers: polynomial fits for short-time expansions
//! and log-linear fits for decay rates.

use alloc::vec;
use alloc::vec::Vec;

/// Least-squares polynomial fit of the given degree. Returns coefficients
/// `c[0] + c[1] x + ... + c[degree] x^degree`, or None when the system is
/// under-determined or singular. The abscissa is rescaled internally so the
/// normal equations stay well conditioned on small windows.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Option<Vec<f64>> {
    let n = xs.len();
    if n != ys.len() || n < degree + 1 {
        return None;
    }
    let scale = xs
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.abs()))
        .max(1e-300);

    // normal equations in the scaled variable u = x / scale
    let cols = degree + 1;
    let mut ata = vec![vec![0.0f64; cols]; cols];
    let mut aty = vec![0.0f64; cols];
    for (&x, &y) in xs.iter().zip(ys) {
        let u = x / scale;
        let mut pow = vec![1.0f64; cols];
        for k in 1..cols {
            pow[k] = pow[k - 1] * u;
        }
        for i in 0..cols {
            aty[i] += pow[i] * y;
            for j in 0..cols {
                ata[i][j] += pow[i] * pow[j];
            }
        }
    }
    let coeffs_scaled = solve(&mut ata, &mut aty)?;

    let mut coeffs = Vec::with_capacity(cols);
    let mut s = 1.0;
    for c in coeffs_scaled {
        coeffs.push(c / s);
        s *= scale;
    }
    Some(coeffs)
}

/// Gaussian elimination with partial pivoting on the (small) normal system.
fn solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(core::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0f64; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// Ordinary least-squares line fit, returning (intercept, slope).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let c = polyfit(xs, ys, 1)?;
    Some((c[0], c[1]))
}

/// Decay rate lambda of data following y ~ A exp(-lambda t), from a linear
/// fit of ln y. All samples must be strictly positive.
pub fn fitted_decay_rate(ts: &[f64], ys: &[f64]) -> Option<f64> {
    if ys.iter().any(|&y| y <= 0.0) {
        return None;
    }
    let logs: Vec<f64> = ys.iter().map(|&y| libm::log(y)).collect();
    let (_, slope) = linear_fit(ts, &logs)?;
    Some(-slope)
}
