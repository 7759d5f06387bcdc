//! Maslov index for pairs of Lagrangian paths, by crossing forms.
//!
//! For a pair (λ, λ′) with isolated regular crossings the index is
//!
//!   μ(λ, λ′) = ½ sign Γ(a) + Σ_{a<t<b} sign Γ(t) + ½ sign Γ(b),
//!
//! where Γ(t) = Q(λ, t) − Q(λ′, t) restricted to λ(t) ∩ λ′(t) and Q is the
//! quadratic form of the subspace motion in graph coordinates over an
//! orthogonal Lagrangian complement. `sign` is the signature; values live in
//! (1/2)ℤ and all bookkeeping is exact once each crossing is classified.
//!
//! A path whose intersection dimension with its partner is constant
//! contributes nothing; that case is detected before crossing isolation and
//! short-circuits to zero.
//!
//! The module also provides the independent counting oracle
//! [`maslov_via_conjugate_points`]: for λ = ℝⁿ×0 constant and
//! λ′(r) = A(r)⁻¹(ℝⁿ×0) with A a symplectic transport path, the index equals
//!
//!   ½ dim(λ(0) ∩ λ′(0)) + Σ_{0<r<1} dim(λ(r) ∩ λ′(r)) + ½ dim(λ(1) ∩ λ′(1)),
//!
//! and every intersection dimension is the nullity of the lower-left n×n
//! block of A(r). The two routes share no code beyond the SVD helpers, which
//! is what makes the cross-check meaningful.

use crate::error::Error;
use crate::halfint::HalfInt;
use crate::numeric::{self, Stencil};
use crate::symplectic::{
    intersection_basis, intersection_dimension, LagrangianFrame, LagrangianPath, SymplecticSpace,
};
use crate::Result;
use nalgebra::DMatrix;

/// Tunables for crossing detection and classification.
#[derive(Debug, Clone, Copy)]
pub struct MaslovOptions {
    /// Coarse scan resolution over the path domain.
    pub scan_samples: usize,
    /// Finite-difference step for the crossing-form derivative.
    pub fd_step: f64,
    /// Crossing times are refined to brackets of this width.
    pub refine_width: f64,
    /// Relative singular-value gap below which a parameter is a crossing.
    pub confirm_rel: f64,
    /// Gap values in [confirm_rel, ambiguous_rel) cannot be classified.
    pub ambiguous_rel: f64,
    /// Crossing-form eigenvalues below this (relative) size are degenerate.
    pub degeneracy_rel: f64,
}

impl Default for MaslovOptions {
    fn default() -> Self {
        MaslovOptions {
            scan_samples: 512,
            fd_step: 1e-5,
            refine_width: 1e-10,
            confirm_rel: 1e-8,
            ambiguous_rel: 1e-7,
            degeneracy_rel: 1e-7,
        }
    }
}

/// Where a crossing sits in the parameter interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingSite {
    LeftEndpoint,
    Interior,
    RightEndpoint,
}

/// One isolated regular crossing of a path pair.
#[derive(Debug, Clone)]
pub struct CrossingRecord {
    pub t: f64,
    pub site: CrossingSite,
    /// dim(λ(t) ∩ λ′(t)) at the crossing.
    pub dim: usize,
    /// Signature of the relative crossing form on the intersection.
    pub signature: i64,
}

impl CrossingRecord {
    /// Contribution to the index: half weight at endpoints, full inside.
    pub fn contribution(&self) -> HalfInt {
        match self.site {
            CrossingSite::Interior => HalfInt::from_int(self.signature),
            _ => HalfInt::halves(self.signature),
        }
    }
}

enum ScanOutcome {
    /// Intersection dimension constant over the whole domain.
    ConstantDimension,
    Crossings(Vec<CrossingRecord>),
}

/// Relative transversality gap of the pair at `t`: smallest singular value of
/// the concatenated orthonormal bases, normalized by the largest. Zero exactly
/// at crossings.
fn relative_gap(a: &LagrangianPath, b: &LagrangianPath, t: f64) -> Result<f64> {
    let fa = a.frame_at(t)?;
    let fb = b.frame_at(t)?;
    let n = fa.space().n();
    let mut cat = DMatrix::zeros(2 * n, 2 * n);
    cat.view_mut((0, 0), (2 * n, n)).copy_from(fa.basis());
    cat.view_mut((0, n), (2 * n, n)).copy_from(fb.basis());
    let sv = numeric::singular_values_sorted(&cat);
    let hi = sv[0];
    let lo = sv[sv.len() - 1];
    if hi == 0.0 {
        return Err(Error::invalid("zero concatenated frame"));
    }
    Ok(lo / hi)
}

/// Graph-coordinate motion form of a single path at `t0`.
///
/// Returns the n×n symmetric matrix Q with Q(v) = d/dt ω(v, w(t)) for
/// v + w(t) ∈ λ(t), in the coordinates of the orthonormal frame at `t0`.
fn motion_form(path: &LagrangianPath, t0: f64, opts: &MaslovOptions) -> Result<DMatrix<f64>> {
    let frame = path.frame_at(t0)?;
    let b0 = frame.basis().clone();
    let w = frame.orthogonal_complement();
    let (lo, hi) = path.domain();
    let graph = {
        let path = path.clone();
        let b0 = b0.clone();
        let w = w.clone();
        move |t: f64| -> DMatrix<f64> {
            let b = path.raw_basis(t);
            let p = &b0.transpose() * &b;
            let r = &w.transpose() * &b;
            let p_inv = p
                .lu()
                .try_inverse()
                .expect("graph projection invertible near the base point");
            r * p_inv
        }
    };
    // Endpoint crossings only see one side of the parameter interval.
    let margin = 2.1 * opts.fd_step;
    let stencil = if t0 - lo < margin {
        Stencil::ForwardOnly
    } else if hi - t0 < margin {
        Stencil::BackwardOnly
    } else {
        Stencil::Central
    };
    let tdot = numeric::matrix_derivative(&graph, t0, opts.fd_step, stencil);
    let q = -(&tdot + tdot.transpose()) * 0.5;
    Ok(q)
}

/// Relative crossing form Γ restricted to the intersection, returned with the
/// intersection dimension and the signature.
fn crossing_data(
    a: &LagrangianPath,
    b: &LagrangianPath,
    t0: f64,
    site: CrossingSite,
    opts: &MaslovOptions,
) -> Result<CrossingRecord> {
    let fa = a.frame_at(t0)?;
    let fb = b.frame_at(t0)?;
    let dim = intersection_dimension(&fa, &fb)?;
    if dim == 0 {
        return Err(Error::Resolution {
            what: "crossing candidate has trivial intersection after refinement".into(),
            t: t0,
        });
    }
    let v = intersection_basis(&fa, &fb);
    let qa = motion_form(a, t0, opts)?;
    let qb = motion_form(b, t0, opts)?;
    // Coordinates of the intersection vectors in each frame.
    let ca = fa.basis().transpose() * &v;
    let cb = fb.basis().transpose() * &v;
    let gamma_a = ca.transpose() * qa * &ca;
    let gamma_b = cb.transpose() * qb * &cb;
    let gamma = gamma_a - gamma_b;
    let sym = (&gamma + gamma.transpose()) * 0.5;
    let eigen = sym.symmetric_eigen();
    let scale = eigen.eigenvalues.amax().max(1.0);
    let mut signature = 0i64;
    for &ev in eigen.eigenvalues.iter() {
        if ev.abs() < opts.degeneracy_rel * scale {
            return Err(Error::DegenerateCrossing { t: t0, eigenvalue: ev });
        }
        signature += if ev > 0.0 { 1 } else { -1 };
    }
    Ok(CrossingRecord { t: t0, site, dim, signature })
}

fn scan_pair(
    a: &LagrangianPath,
    b: &LagrangianPath,
    opts: &MaslovOptions,
) -> Result<ScanOutcome> {
    if a.space() != b.space() {
        return Err(Error::invalid("paths live in different spaces"));
    }
    if (a.domain().0 - b.domain().0).abs() > 1e-12 || (a.domain().1 - b.domain().1).abs() > 1e-12 {
        return Err(Error::invalid("paths must share their parameter interval"));
    }
    let (lo, hi) = a.domain();
    let m = opts.scan_samples.max(16);
    let h = (hi - lo) / m as f64;
    let ts: Vec<f64> = (0..=m).map(|i| lo + i as f64 * h).collect();
    let gaps: Vec<f64> = ts.iter().map(|&t| relative_gap(a, b, t)).collect::<Result<_>>()?;

    let crossing_here: Vec<bool> = gaps.iter().map(|&g| g < opts.confirm_rel).collect();
    if crossing_here.iter().all(|&c| c) {
        // Candidate for the constant-dimension rule.
        let mut dims = Vec::with_capacity(ts.len());
        for &t in &ts {
            dims.push(intersection_dimension(&a.frame_at(t)?, &b.frame_at(t)?)?);
        }
        let d0 = dims[0];
        if dims.iter().all(|&d| d == d0) && d0 > 0 {
            return Ok(ScanOutcome::ConstantDimension);
        }
        return Err(Error::Resolution {
            what: "non-isolated crossings with varying intersection dimension".into(),
            t: lo,
        });
    }
    // Interior samples may not sit inside a crossing plateau.
    for i in 1..ts.len() {
        if crossing_here[i - 1] && crossing_here[i] && !(i == 1 || i == ts.len() - 1) {
            return Err(Error::Resolution {
                what: "crossings are not isolated at scan resolution".into(),
                t: ts[i],
            });
        }
    }

    let max_slope = gaps
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / h)
        .fold(0.0f64, f64::max);
    let cand_tol = (4.0 * h * max_slope).max(1e-6).min(0.25);

    let mut records: Vec<CrossingRecord> = Vec::new();
    let mut times: Vec<f64> = Vec::new();

    // Endpoints first.
    if gaps[0] < opts.confirm_rel {
        records.push(crossing_data(a, b, lo, CrossingSite::LeftEndpoint, opts)?);
    } else if gaps[0] < opts.ambiguous_rel {
        return Err(Error::Resolution { what: "ambiguous endpoint gap".into(), t: lo });
    }
    if gaps[m] < opts.confirm_rel {
        records.push(crossing_data(a, b, hi, CrossingSite::RightEndpoint, opts)?);
    } else if gaps[m] < opts.ambiguous_rel {
        return Err(Error::Resolution { what: "ambiguous endpoint gap".into(), t: hi });
    }

    // Interior candidates: local minima of the gap, and all samples below the
    // adaptive candidate threshold.
    let gap_fn = |t: f64| relative_gap(a, b, t).unwrap_or(f64::INFINITY);
    let mut flagged: Vec<usize> = Vec::new();
    for i in 1..m {
        let local_min = gaps[i] <= gaps[i - 1] && gaps[i] <= gaps[i + 1];
        if (local_min && gaps[i] < cand_tol.max(0.05)) || gaps[i] < cand_tol {
            flagged.push(i);
        }
    }
    for &i in &flagged {
        let bl = ts[i] - h;
        let br = ts[i] + h;
        let (t_star, g_star) = numeric::golden_min(&gap_fn, bl.max(lo), br.min(hi), opts.refine_width);
        if g_star < opts.confirm_rel {
            let endpoint_window = 16.0 * opts.refine_width;
            if t_star - lo < endpoint_window || hi - t_star < endpoint_window {
                // Already handled as an endpoint crossing.
                continue;
            }
            if times.iter().any(|&t| (t - t_star).abs() < 1e-8 * (hi - lo).max(1.0)) {
                continue;
            }
            times.push(t_star);
        } else if g_star < opts.ambiguous_rel {
            return Err(Error::Resolution {
                what: format!("gap {g_star:.3e} between crossing and transversality thresholds"),
                t: t_star,
            });
        }
    }
    times.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for t in times {
        records.push(crossing_data(a, b, t, CrossingSite::Interior, opts)?);
    }
    records.sort_by(|x, y| x.t.partial_cmp(&y.t).unwrap());
    Ok(ScanOutcome::Crossings(records))
}

/// All isolated regular crossings of the pair, in parameter order. A pair with
/// constant intersection dimension reports no crossings.
pub fn maslov_crossings(
    a: &LagrangianPath,
    b: &LagrangianPath,
    opts: &MaslovOptions,
) -> Result<Vec<CrossingRecord>> {
    match scan_pair(a, b, opts)? {
        ScanOutcome::ConstantDimension => Ok(Vec::new()),
        ScanOutcome::Crossings(r) => Ok(r),
    }
}

/// The Maslov index μ(λ, λ′) of a pair of Lagrangian paths over a shared
/// interval.
pub fn maslov_index_pair(
    a: &LagrangianPath,
    b: &LagrangianPath,
    opts: &MaslovOptions,
) -> Result<HalfInt> {
    match scan_pair(a, b, opts)? {
        ScanOutcome::ConstantDimension => Ok(HalfInt::ZERO),
        ScanOutcome::Crossings(records) => {
            Ok(records.iter().map(CrossingRecord::contribution).sum())
        }
    }
}

/// The index offset i(γ) = μ(λ, λ′) − ½ dim L used when translating frame
/// data of a Lagrangian L into an index of a chord.
pub fn coherent_index_from_frame_data(
    a: &LagrangianPath,
    b: &LagrangianPath,
    dim_l: usize,
    opts: &MaslovOptions,
) -> Result<HalfInt> {
    Ok(maslov_index_pair(a, b, opts)? - HalfInt::halves(dim_l as i64))
}

/// Nullity of the lower-left n×n block of a 2n×2n transport matrix, measured
/// against the scale of the full matrix.
fn lower_left_nullity(a: &DMatrix<f64>, n: usize, rel_tol: f64) -> usize {
    let block = a.view((n, 0), (n, n)).into_owned();
    let scale = numeric::singular_values_sorted(a)[0].max(1e-300);
    let sv = numeric::singular_values_sorted(&block);
    sv.iter().filter(|&&s| s <= rel_tol * scale).count()
}

/// Counting-formula oracle for transport-type pairs.
///
/// `transport` must return symplectic matrices A(r) on r ∈ [0, 1] with the
/// lower-left block vanishing only at isolated parameters. The result is the
/// endpoint-halved sum of intersection dimensions described in the module
/// docs.
pub fn maslov_via_conjugate_points(
    transport: &dyn Fn(f64) -> DMatrix<f64>,
    n: usize,
) -> Result<HalfInt> {
    let opts = MaslovOptions::default();
    let gap = |r: f64| -> f64 {
        let a = transport(r);
        let block = a.view((n, 0), (n, n)).into_owned();
        let scale = numeric::singular_values_sorted(&a)[0].max(1e-300);
        numeric::smallest_singular_value(&block) / scale
    };
    let m = opts.scan_samples.max(16);
    let h = 1.0 / m as f64;
    let gaps: Vec<f64> = (0..=m).map(|i| gap(i as f64 * h)).collect();
    for i in 1..m {
        if gaps[i] < opts.confirm_rel && gaps[i + 1] < opts.confirm_rel && i + 1 < m {
            return Err(Error::Resolution {
                what: "conjugate parameters are not isolated at scan resolution".into(),
                t: i as f64 * h,
            });
        }
    }
    let max_slope = gaps
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / h)
        .fold(0.0f64, f64::max);
    let cand_tol = (4.0 * h * max_slope).max(1e-6).min(0.25);

    let mut twice = 0i64;
    twice += lower_left_nullity(&transport(0.0), n, opts.confirm_rel) as i64;
    twice += lower_left_nullity(&transport(1.0), n, opts.confirm_rel) as i64;

    let mut seen: Vec<f64> = Vec::new();
    for i in 1..m {
        let local_min = gaps[i] <= gaps[i - 1] && gaps[i] <= gaps[i + 1];
        if !((local_min && gaps[i] < cand_tol.max(0.05)) || gaps[i] < cand_tol) {
            continue;
        }
        let (r_star, g_star) =
            numeric::golden_min(&gap, (i as f64 - 1.0) * h, (i as f64 + 1.0) * h, opts.refine_width);
        if g_star < opts.confirm_rel {
            if r_star < 32.0 * opts.refine_width || 1.0 - r_star < 32.0 * opts.refine_width {
                continue;
            }
            if seen.iter().any(|&r| (r - r_star).abs() < 1e-8) {
                continue;
            }
            seen.push(r_star);
            twice += 2 * lower_left_nullity(&transport(r_star), n, opts.confirm_rel) as i64;
        } else if g_star < opts.ambiguous_rel {
            return Err(Error::Resolution {
                what: format!("conjugate-point gap {g_star:.3e} unresolved"),
                t: r_star,
            });
        }
    }
    Ok(HalfInt::halves(twice))
}

/// The Lagrangian pair fed to the crossing-form route when cross-checking the
/// counting oracle: λ = ℝⁿ×0 constant and λ′(r) = A(r)⁻¹(ℝⁿ×0).
pub fn transport_pair(
    space: SymplecticSpace,
    transport: impl Fn(f64) -> DMatrix<f64> + 'static,
) -> Result<(LagrangianPath, LagrangianPath)> {
    let horizontal = space.horizontal();
    let constant = LagrangianPath::constant(&horizontal, (0.0, 1.0))?;
    let n = space.n();
    let moved = LagrangianPath::new(space, (0.0, 1.0), move |r| {
        let a = transport(r);
        let mut rhs = DMatrix::zeros(2 * n, n);
        for i in 0..n {
            rhs[(i, i)] = 1.0;
        }
        a.lu().solve(&rhs).expect("transport matrix invertible")
    })?;
    Ok((constant, moved))
}

/// The model pair in (ℝ⁴, ds∧dx₁ + dx₂∧dx₃): λ(s) the tangent space of the
/// moving handle component with second-derivative parameter `c`, λ′ the
/// constant ℝ×0×0×ℝ. In the basis used here (e₁ = ∂s, e₂ = ∂x₂, f₁ = ∂x₁,
/// f₂ = ∂x₃) the frames are λ(s) = span{e₁ + s·c·f₁, e₂}, λ′ = span{e₁, f₂}.
pub fn local_model_pair(c: f64) -> Result<(LagrangianPath, LagrangianPath)> {
    let space = SymplecticSpace::new(2)?;
    let moving = LagrangianPath::new(space, (0.0, 1.0), move |s| {
        let mut b = DMatrix::zeros(4, 2);
        b[(0, 0)] = 1.0;
        b[(2, 0)] = s * c;
        b[(1, 1)] = 1.0;
        b
    })?;
    let mut fixed_basis = DMatrix::zeros(4, 2);
    fixed_basis[(0, 0)] = 1.0;
    fixed_basis[(3, 1)] = 1.0;
    let fixed_frame = LagrangianFrame::new(space, fixed_basis)?;
    let fixed = LagrangianPath::constant(&fixed_frame, (0.0, 1.0))?;
    Ok((moving, fixed))
}

/// Index offsets of the two critical chords of a local Morse datum with
/// minimum curvature `c_min` > 0 and maximum curvature `c_max` < 0: the
/// returned pair is (offset at the minimum, offset at the maximum), expected
/// to come out as (0, 1).
pub fn local_model_offsets(c_min: f64, c_max: f64) -> Result<(HalfInt, HalfInt)> {
    if c_min <= 0.0 || c_max >= 0.0 {
        return Err(Error::invalid("offsets need c_min > 0 and c_max < 0"));
    }
    let opts = MaslovOptions::default();
    let (a, b) = local_model_pair(c_min)?;
    let mu_min = maslov_index_pair(&a, &b, &opts)?;
    let (a, b) = local_model_pair(c_max)?;
    let mu_max = maslov_index_pair(&a, &b, &opts)?;
    let half = HalfInt::halves(1);
    Ok((half - mu_min, half - mu_max))
}
