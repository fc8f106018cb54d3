//! Small dense kernels on row-major `Vec<f64>` buffers.

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// out += W x, with W stored row-major as (rows, cols).
pub(crate) fn matvec_add(w: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(out.len(), rows);
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        *o += acc;
    }
}

/// out += W^T y, with W stored row-major as (rows, cols); y has len rows.
pub(crate) fn matvec_t_add(w: &[f64], rows: usize, cols: usize, y: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(y.len(), rows);
    debug_assert_eq!(out.len(), cols);
    for (r, &yr) in y.iter().enumerate().take(rows) {
        if yr == 0.0 {
            continue;
        }
        let row = &w[r * cols..(r + 1) * cols];
        for (o, a) in out.iter_mut().zip(row) {
            *o += yr * a;
        }
    }
}

/// acc += a b^T, with acc stored row-major as (len(a), len(b)).
pub(crate) fn outer_add(acc: &mut [f64], a: &[f64], b: &[f64]) {
    debug_assert_eq!(acc.len(), a.len() * b.len());
    let cols = b.len();
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        let row = &mut acc[i * cols..(i + 1) * cols];
        for (o, bv) in row.iter_mut().zip(b) {
            *o += ai * bv;
        }
    }
}

/// Numerically stable log-softmax normalizer: max + ln(sum exp(x - max)).
pub(crate) fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}
