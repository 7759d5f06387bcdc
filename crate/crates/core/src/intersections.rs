//! Intersection circles of a twisted fiber sphere with the fiber over the
//! antipodal base point.
//!
//! With the staircase profile of winding parameter r, the twisted fiber
//! meets the antipodal fiber where the doubled angle 2rψ(t) + π completes
//! full turns. All solutions land on the linear region of the profile, at
//! covector radii (2j−1)π for j = 1..r, so the intersection is a union of r
//! round circles in the fiber plane. Each circle carries the action and the
//! normalized index of its unit-time geodesics; those two columns drive the
//! filtration bookkeeping downstream.

use crate::error::Error;
use crate::halfint::HalfInt;
use crate::numeric;
use crate::sphere::{self, Covector, Geodesic};
use crate::twist::TwistProfile;
use crate::Result;
use nalgebra::Vector3;

/// One intersection circle: the covectors of a fixed length in the fiber
/// plane over the base point, all of whose unit-time geodesics end on the
/// antipode.
#[derive(Debug, Clone, Copy)]
pub struct CleanCircle {
    /// Position in the action ordering, starting at 1.
    pub j: usize,
    /// Covector length; equals (2j−1)π for the staircase profile.
    pub radius: f64,
    /// Action of the unit-time geodesics, ½·radius².
    pub action: f64,
    /// Normalized index i′ in the convention that pins the first circle
    /// at 2.
    pub index_prime: i64,
    /// Turns of the geodesics around their great circle: j − ½.
    pub winding: HalfInt,
}

/// The full table of intersection circles for one winding parameter,
/// ordered by increasing action.
#[derive(Debug, Clone)]
pub struct IntersectionTable {
    pub r: usize,
    pub circles: Vec<CleanCircle>,
}

/// Base point and fiber-plane frame shared by every circle computation.
fn base_frame() -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    (Vector3::x(), Vector3::y(), Vector3::z())
}

/// A covector of the given length at angle θ in the fiber plane.
fn circle_point(radius: f64, theta: f64) -> Result<Covector> {
    let (x, e1, e2) = base_frame();
    Covector::new(x, (e1 * theta.cos() + e2 * theta.sin()) * radius)
}

/// Normalized index of the circle of the given radius: the Morse index of
/// its geodesics minus half the circle dimension, shifted by the constant
/// +2 that makes the first circle's index equal to 2.
fn normalized_index(radius: f64) -> Result<i64> {
    let geo = Geodesic::new(circle_point(radius, 0.0)?)?;
    let morse = sphere::morse_index(&geo)?;
    let raw = morse - HalfInt::halves(1);
    match raw.as_integer() {
        Some(i) => Ok(i + 2),
        None => Err(Error::invalid(
            "circle index must be an integer after subtracting half the circle dimension",
        )),
    }
}

/// Solves 2rψ(t) + π ∈ 2πℤ on the staircase profile of winding parameter r
/// and assembles the circle table. The level function decreases from
/// 2πr + π to π across the support, so each full-turn level 2πk, k = 1..r,
/// is hit exactly once; increasing radius order corresponds to decreasing k.
///
/// r = 0 is the untwisted configuration: the fibers over antipodal points
/// are disjoint and the table is empty.
pub fn compute_circles(r: usize) -> Result<IntersectionTable> {
    if r == 0 {
        return Ok(IntersectionTable { r: 0, circles: Vec::new() });
    }
    let profile = TwistProfile::staircase(r as u32)?;
    let pi = std::f64::consts::PI;
    let two_r = 2.0 * r as f64;
    let level = |t: f64| two_r * profile.value(t) + pi;
    let mut circles = Vec::with_capacity(r);
    for k in (1..=r).rev() {
        let target = 2.0 * pi * k as f64;
        let radius =
            numeric::bisect(|t| level(t) - target, 0.0, profile.support_radius(), 1e-12)
                .ok_or_else(|| {
                    Error::ProfileInconsistency(format!(
                        "level {k} of the angle congruence has no root on the support"
                    ))
                })?;
        if radius >= profile.exact_region() {
            return Err(Error::ProfileInconsistency(format!(
                "level {k} root {radius:.6} sits beyond the linear region {:.6}",
                profile.exact_region()
            )));
        }
        let j = r - k + 1;
        circles.push(CleanCircle {
            j,
            radius,
            action: 0.5 * radius * radius,
            index_prime: normalized_index(radius)?,
            winding: HalfInt::halves(2 * j as i64 - 1),
        });
    }
    Ok(IntersectionTable { r, circles })
}

/// Index column of the table, recomputed from the geodesic machinery:
/// Morse index, minus half the circle dimension, plus the normalizing
/// shift. Gaps between consecutive circles are the intrinsic data; the
/// absolute values are presentation.
pub fn index_table(table: &IntersectionTable) -> Result<Vec<(usize, i64)>> {
    table
        .circles
        .iter()
        .map(|c| Ok((c.j, normalized_index(c.radius)?)))
        .collect()
}

/// Verification record for one circle.
#[derive(Debug, Clone)]
pub struct CircleCheck {
    pub radius: f64,
    pub samples: usize,
    /// Largest distance from a sampled geodesic endpoint to the antipode of
    /// the base point.
    pub max_endpoint_defect: f64,
    /// Endpoint nullities m(c_ξ, 1) of the sampled geodesics, in sample
    /// order. A clean circle needs every entry equal to 1, matching the
    /// dimension of the rotation family.
    pub multiplicities: Vec<usize>,
    /// Largest deviation between the finite-difference variation of
    /// neighboring circle points and the transported Jacobi field.
    pub max_jacobi_defect: f64,
    pub passed: bool,
}

/// Aggregate verification of a whole table.
#[derive(Debug, Clone)]
pub struct CleanReport {
    pub r: usize,
    pub checks: Vec<CircleCheck>,
    pub passed: bool,
}

const ENDPOINT_TOL: f64 = 1e-8;
const JACOBI_TOL: f64 = 1e-4;

/// Checks one circle of covectors of the given length:
///
/// * every sampled geodesic must end on the antipode at time one;
/// * the endpoint nullity m(c_ξ, 1) must be exactly 1, so the null space is
///   no bigger than the one-dimensional rotation family;
/// * the rotation family must realize that Jacobi field: differencing
///   neighboring circle points along the flow has to match the transported
///   solution with initial data (δu, δv) = (0, L·E₂).
///
/// A closed geodesic circle (an even multiple of π) fails the endpoint
/// membership clause while still passing the multiplicity clause; the
/// report records both.
pub fn verify_circle(radius: f64, samples: usize) -> Result<CircleCheck> {
    if !(radius > 0.0) {
        return Err(Error::invalid("circle radius must be positive"));
    }
    if samples < 2 {
        return Err(Error::invalid("need at least two samples per circle"));
    }
    let (x, _, _) = base_frame();
    let antipode = -x;
    let dtheta = 1e-3;
    let nodes = 8usize;
    let mut max_endpoint_defect = 0.0f64;
    let mut max_jacobi_defect = 0.0f64;
    let mut multiplicities = Vec::with_capacity(samples);
    for s in 0..samples {
        let theta = 2.0 * std::f64::consts::PI * s as f64 / samples as f64;
        let xi = circle_point(radius, theta)?;
        let geo = Geodesic::new(xi)?;
        max_endpoint_defect = max_endpoint_defect.max((geo.position(1.0) - antipode).norm());
        let conj = sphere::conjugate_points(&geo)?;
        let endpoint = conj
            .iter()
            .find(|d| (d.r - 1.0).abs() < 1e-6)
            .map(|d| d.multiplicity)
            .unwrap_or(0);
        multiplicities.push(endpoint);

        // The rotation family through this sample, differenced against the
        // transported Jacobi solution in the parallel frame at θ.
        let transport = sphere::sphere_jacobi_transport(&geo)?;
        let plus = Geodesic::new(circle_point(radius, theta + dtheta)?)?;
        let minus = Geodesic::new(circle_point(radius, theta - dtheta)?)?;
        for node in 1..=nodes {
            let r = node as f64 / nodes as f64;
            let a = transport.matrix(r);
            // State layout (p₁, p₂, q₁, q₂) with p = δv and q = δu
            // components in the frame (E₁, E₂); initial data p = (0, L).
            let state = a * nalgebra::DVector::from_vec(vec![0.0, radius, 0.0, 0.0]);
            let (f1, f2) = geo.frame(r);
            let expected_du = f1 * state[2] + f2 * state[3];
            let expected_dv = f1 * state[0] + f2 * state[1];
            let (pp, pm) = (plus.point(r), minus.point(r));
            let fd_du = (pp.u() - pm.u()) / (2.0 * dtheta);
            let fd_dv = (pp.v() - pm.v()) / (2.0 * dtheta);
            let defect = (fd_du - expected_du).norm().max((fd_dv - expected_dv).norm());
            max_jacobi_defect = max_jacobi_defect.max(defect);
        }
    }
    let passed = max_endpoint_defect < ENDPOINT_TOL
        && multiplicities.iter().all(|&m| m == 1)
        && max_jacobi_defect < JACOBI_TOL;
    Ok(CircleCheck {
        radius,
        samples,
        max_endpoint_defect,
        multiplicities,
        max_jacobi_defect,
        passed,
    })
}

/// Runs [`verify_circle`] over every circle of a table.
pub fn verify_clean(table: &IntersectionTable, samples_per_circle: usize) -> Result<CleanReport> {
    let mut checks = Vec::with_capacity(table.circles.len());
    for c in &table.circles {
        checks.push(verify_circle(c.radius, samples_per_circle)?);
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(CleanReport { r: table.r, checks, passed })
}
