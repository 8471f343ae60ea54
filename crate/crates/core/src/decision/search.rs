//! One-dimensional search primitives shared by the inner and outer solvers.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// `n` evenly spaced points on `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|k| if k == n - 1 { hi } else { lo + step * k as f64 })
                .collect()
        }
    }
}

/// NaN compares below everything so that undefined points never win.
pub(crate) fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`.
///
/// Runs at most `iters` iterations, stopping early once the bracket is below
/// `xtol`. Returns the best point evaluated, which is never worse than either
/// endpoint.
pub fn golden_max<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    iters: usize,
    xtol: f64,
) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut best = (lo, sanitize(f(lo)));
    let fb = sanitize(f(hi));
    if fb > best.1 {
        best = (hi, fb);
    }
    if !(hi > lo) {
        return best;
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = sanitize(f(c));
    let mut fd = sanitize(f(d));
    for _ in 0..iters {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = sanitize(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = sanitize(f(d));
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Bisection root of a continuous `f` with a sign change on `[lo, hi]`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Option<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa.is_nan() || fb.is_nan() {
        return None;
    }
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..300 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= xtol * (1.0 + mid.abs()) {
            return Some(mid);
        }
        let fm = f(mid);
        if fm.is_nan() {
            return None;
        }
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}
