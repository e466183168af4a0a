//! Dense point arithmetic. Points are finitely supported sequences: a shorter
//! vector is read as padded with zeros, which is how points of `prob(ℕ)` of
//! different support lengths are combined.

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len().max(y.len());
    (0..n)
        .map(|i| x.get(i).copied().unwrap_or(0.0) - y.get(i).copied().unwrap_or(0.0))
        .collect()
}

/// `y += a·x`, growing `y` if needed.
pub fn axpy(a: f64, x: &[f64], y: &mut Vec<f64>) {
    if y.len() < x.len() {
        y.resize(x.len(), 0.0);
    }
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale(a: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| a * v).collect()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn l1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn linf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `λx + (1−λ)y`
pub fn lerp(lambda: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = scale(1.0 - lambda, y);
    axpy(lambda, x, &mut out);
    out
}

/// `Σ wᵢ pᵢ` by pairwise (tree) summation in the given order.
pub fn weighted_sum(weights: &[f64], points: &[&[f64]]) -> Vec<f64> {
    debug_assert_eq!(weights.len(), points.len());
    match points.len() {
        0 => Vec::new(),
        1 => scale(weights[0], points[0]),
        n => {
            let mid = n / 2;
            let mut left = weighted_sum(&weights[..mid], &points[..mid]);
            let right = weighted_sum(&weights[mid..], &points[mid..]);
            axpy(1.0, &right, &mut left);
            left
        }
    }
}

pub fn is_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}
