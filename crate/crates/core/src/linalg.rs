//! Small dense-vector helpers. Problems here are tiny, so plain slices suffice.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// `M^T w` for a matrix stored as rows.
pub fn transpose_mul(rows: &[Vec<f64>], w: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (row, &wk) in rows.iter().zip(w) {
        if wk == 0.0 {
            continue;
        }
        for (o, r) in out.iter_mut().zip(row) {
            *o += wk * r;
        }
    }
    out
}

/// Running mean update `mean += (x - mean) / count`.
pub fn update_mean(mean: &mut [f64], x: &[f64], count: usize) {
    let c = count as f64;
    for (m, v) in mean.iter_mut().zip(x) {
        *m += (v - *m) / c;
    }
}
