//! Small numerical utilities shared across the kernels: SVD-based ranks and
//! null spaces, a scaling-and-squaring matrix exponential, smooth cutoffs,
//! quadrature, finite differences with one Richardson step, and bracketed
//! one-dimensional searches.

use nalgebra::{DMatrix, DVector};

/// Singular values of `m`, sorted in decreasing order.
pub fn singular_values_sorted(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Smallest singular value of `m`.
pub fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    singular_values_sorted(m).last().copied().unwrap_or(0.0)
}

/// Numerical rank with threshold `rel_tol` · (largest singular value).
pub fn svd_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = singular_values_sorted(m);
    let lead = sv.first().copied().unwrap_or(0.0);
    if lead == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * lead).count()
}

/// Orthonormal basis of the kernel of `m`, as matrix columns.
///
/// Kernel vectors are the right singular vectors whose singular value falls at
/// or below `rel_tol` times the leading one.
pub fn nullspace(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    // Pad wide matrices with zero rows: the thin SVD of a wide matrix only
    // returns min(nrows, ncols) right singular vectors, which misses the
    // kernel directions beyond the row count.
    let padded = if m.nrows() < m.ncols() {
        let mut p = DMatrix::zeros(m.ncols(), m.ncols());
        p.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let sv = &svd.singular_values;
    let lead = sv.iter().cloned().fold(0.0_f64, f64::max);
    let ncols = m.ncols();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for i in 0..v_t.nrows() {
        let s = sv[i];
        if lead == 0.0 || s <= rel_tol * lead {
            cols.push(v_t.row(i).transpose());
        }
    }
    let mut out = DMatrix::zeros(ncols, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// Thin QR orthonormalization of the columns of `m`.
pub fn orthonormalize_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    // Fix signs so the map m -> q is deterministic and orientation-stable.
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            for i in 0..q.nrows() {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Condition estimate σ_max/σ_min of `m`.
pub fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let sv = singular_values_sorted(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
///
/// Accurate to machine precision for the small (≤ 6×6) generators used here.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "expm needs a square matrix");
    let norm = m.amax() * n as f64;
    let k = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = m / 2f64.powi(k as i32);
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for j in 1..=16 {
        term = (&term * &scaled) / j as f64;
        sum += &term;
    }
    let mut result = sum;
    for _ in 0..k {
        result = &result * &result;
    }
    result
}

/// Composite Simpson quadrature of `f` over `[a, b]` with `n` subintervals
/// (`n` is rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n.max(2) } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// C^∞ step: 0 for x ≤ 0, 1 for x ≥ 1, strictly increasing in between, with
/// all derivatives vanishing at both ends.
pub fn smoothstep(x: f64) -> f64 {
    fn bump(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (-1.0 / t).exp()
        }
    }
    let num = bump(x);
    let den = num + bump(1.0 - x);
    if den == 0.0 {
        // Only reachable for x outside [0, 1] by rounding.
        if x > 0.5 {
            1.0
        } else {
            0.0
        }
    } else {
        num / den
    }
}

/// Derivative stencil side for [`matrix_derivative`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    Central,
    ForwardOnly,
    BackwardOnly,
}

/// d/dt of a matrix-valued map at `t`, second-order stencil plus one
/// Richardson extrapolation step.
pub fn matrix_derivative(
    f: &dyn Fn(f64) -> DMatrix<f64>,
    t: f64,
    h: f64,
    stencil: Stencil,
) -> DMatrix<f64> {
    let d = |h: f64| -> DMatrix<f64> {
        match stencil {
            Stencil::Central => (f(t + h) - f(t - h)) / (2.0 * h),
            Stencil::ForwardOnly => (f(t) * -3.0 + f(t + h) * 4.0 - f(t + 2.0 * h)) / (2.0 * h),
            Stencil::BackwardOnly => (f(t) * 3.0 - f(t - h) * 4.0 + f(t - 2.0 * h)) / (2.0 * h),
        }
    };
    // Both stencils are O(h²); one Richardson step removes the h² term.
    (d(h / 2.0) * 4.0 - d(h)) / 3.0
}

/// Bisection for a sign change of `f` on `[lo, hi]` down to bracket width
/// `width`. Requires f(lo) and f(hi) of opposite (or zero) sign.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Golden-section minimization of a unimodal `f` on `[lo, hi]` down to bracket
/// width `width`. Returns (argmin, min).
pub fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > width {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (lo + hi);
    let fm = f(xm);
    if f1.min(f2) < fm {
        if f1 <= f2 {
            (x1, f1)
        } else {
            (x2, f2)
        }
    } else {
        (xm, fm)
    }
}

/// Pfaffian of a 4×4 antisymmetric matrix.
pub fn pfaffian4(a: &nalgebra::Matrix4<f64>) -> f64 {
    a[(0, 1)] * a[(2, 3)] - a[(0, 2)] * a[(1, 3)] + a[(0, 3)] * a[(1, 2)]
}

/// Real numbers rendered with 12 significant digits, locale-free.
pub fn fmt_real(x: f64) -> String {
    format!("{:.11e}", x)
}
