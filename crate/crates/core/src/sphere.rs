//! Round-sphere cotangent geometry.
//!
//! Points of T*S² are pairs (u, v) ∈ ℝ³×ℝ³ with |u| = 1 and ⟨u, v⟩ = 0; the
//! symplectic form is η = Σ dvᵢ ∧ duᵢ. The kinetic Hamiltonian H = ½|v|²
//! generates the geodesic flow, which is closed-form on the round sphere and
//! doubles as the reference solution for every integrator in this module.
//!
//! The circle action used by the twist construction rotates (u, v) about the
//! axis u×v; on the level |v| = const it agrees with the geodesic flow after
//! rescaling time by the speed.
//!
//! Jacobi fields along a geodesic are carried by a linear symplectic
//! transport A(r) solving Ȧ = [[0, R], [I, 0]]·A in a parallel frame, where
//! R = diag(0, −L²) for speed L. Conjugate parameters are the zeros of the
//! lower-left block; their multiplicities feed both the Morse index of a
//! chord and the independent index cross-checks.

use crate::error::Error;
use crate::halfint::HalfInt;
use crate::numeric;
use crate::Result;
use nalgebra::{DMatrix, Vector2, Vector3};

/// Acceptance tolerance for membership in the unit cotangent constraint.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// A point of T*S²: base point `u` on the unit sphere and a covector `v`
/// tangent to the sphere at `u` (identified with a vector via the metric).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covector {
    u: Vector3<f64>,
    v: Vector3<f64>,
}

impl Covector {
    /// Strict constructor: rejects inputs off the constraint manifold by more
    /// than [`MEMBERSHIP_TOL`], then retracts exactly onto it.
    pub fn new(u: Vector3<f64>, v: Vector3<f64>) -> Result<Self> {
        let nu = u.norm();
        if (nu - 1.0).abs() > MEMBERSHIP_TOL {
            return Err(Error::invalid(format!("base point norm {nu} is not 1")));
        }
        if u.dot(&v).abs() > MEMBERSHIP_TOL * v.norm().max(1.0) {
            return Err(Error::invalid("covector is not tangent to the sphere"));
        }
        Ok(Self::project(u, v))
    }

    /// Retraction onto the constraint manifold: normalize the base point and
    /// remove the radial component of the covector. Used by integrators whose
    /// raw steps drift off the constraint by truncation error.
    pub fn project(u: Vector3<f64>, v: Vector3<f64>) -> Self {
        let u = u.normalize();
        let v = v - u * u.dot(&v);
        Covector { u, v }
    }

    pub fn u(&self) -> Vector3<f64> {
        self.u
    }

    pub fn v(&self) -> Vector3<f64> {
        self.v
    }

    pub fn speed(&self) -> f64 {
        self.v.norm()
    }

    /// Kinetic energy ½|v|².
    pub fn energy(&self) -> f64 {
        0.5 * self.v.norm_squared()
    }

    pub fn is_zero_section(&self) -> bool {
        self.v.norm() < 1e-12
    }

    /// Residuals (|u| − 1, ⟨u, v⟩) of the defining constraints.
    pub fn constraint_residuals(&self) -> (f64, f64) {
        (self.u.norm() - 1.0, self.u.dot(&self.v))
    }

    /// Euclidean distance in the ambient ℝ⁶.
    pub fn distance(&self, other: &Covector) -> f64 {
        ((self.u - other.u).norm_squared() + (self.v - other.v).norm_squared()).sqrt()
    }
}

/// Time-t geodesic flow of H = ½|v|². Closed form: the base point travels the
/// great circle in the (u, v̂) plane with angular speed |v|.
pub fn geodesic_flow(xi: &Covector, t: f64) -> Covector {
    let speed = xi.speed();
    if speed < 1e-14 {
        return *xi;
    }
    let (s, c) = (speed * t).sin_cos();
    let u = xi.u * c + xi.v * (s / speed);
    let v = xi.u * (-speed * s) + xi.v * c;
    Covector::project(u, v)
}

fn rodrigues(w: &Vector3<f64>, axis: &Vector3<f64>, theta: f64) -> Vector3<f64> {
    let (s, c) = theta.sin_cos();
    w * c + axis.cross(w) * s + axis * (axis.dot(w) * (1.0 - c))
}

/// Angle-θ rotation of (u, v) about the axis u×v. Undefined on the zero
/// section. Coincides with the geodesic flow at time θ/|v|.
pub fn circle_action(xi: &Covector, theta: f64) -> Result<Covector> {
    if xi.is_zero_section() {
        return Err(Error::ZeroSection);
    }
    let axis = xi.u.cross(&xi.v).normalize();
    Ok(Covector::project(
        rodrigues(&xi.u, &axis, theta),
        rodrigues(&xi.v, &axis, theta),
    ))
}

/// Rotation of (u, v) about the interpolated axis s·u + (1−s)·(u×v). The two
/// summands are orthogonal, so the axis only degenerates when s = 0 and v
/// vanishes simultaneously.
pub fn circle_action_family(xi: &Covector, s: f64, theta: f64) -> Result<Covector> {
    let raw = xi.u * s + xi.u.cross(&xi.v) * (1.0 - s);
    let norm = raw.norm();
    if norm < 1e-12 {
        return Err(Error::DegenerateAxis { s, speed: xi.speed() });
    }
    let axis = raw / norm;
    Ok(Covector::project(
        rodrigues(&xi.u, &axis, theta),
        rodrigues(&xi.v, &axis, theta),
    ))
}

/// Both sides of the time-rescaling identity for reparametrized kinetic
/// flows: the left side integrates (u̇, v̇) = g(½|v|²)·(v, −|v|²u) with
/// fixed-step projected fourth-order steps, the right side is the closed-form
/// flow at the rescaled time t·g(e). The energy is conserved, so the
/// rescaling factor is constant along each orbit and the two sides agree.
pub fn reparametrized_flow_check(
    xi: &Covector,
    factor: &dyn Fn(f64) -> f64,
    t_end: f64,
    steps: usize,
) -> (Covector, Covector) {
    let field = |u: &Vector3<f64>, v: &Vector3<f64>| -> (Vector3<f64>, Vector3<f64>) {
        let g = factor(0.5 * v.norm_squared());
        (v * g, -u * (v.norm_squared() * g))
    };
    let h = t_end / steps.max(1) as f64;
    let g0 = factor(xi.energy());
    let mut state = *xi;
    for _ in 0..steps {
        let (u, v) = (state.u, state.v);
        let (k1u, k1v) = field(&u, &v);
        let (k2u, k2v) = field(&(u + k1u * (h / 2.0)), &(v + k1v * (h / 2.0)));
        let (k3u, k3v) = field(&(u + k2u * (h / 2.0)), &(v + k2v * (h / 2.0)));
        let (k4u, k4v) = field(&(u + k3u * h), &(v + k3v * h));
        let nu = u + (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (h / 6.0);
        let nv = v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        state = Covector::project(nu, nv);
    }
    (state, geodesic_flow(xi, t_end * g0))
}

/// Action of the constant path at a fixed point ξ of a twisted fiber map:
/// −H(ξ) plus the quadrature of (i_X θ)(φ_t(ξ)) = 2H(φ_t(ξ)) over one time
/// unit. Energy conservation makes the result equal H(ξ) up to quadrature
/// error, which is the identity callers test.
pub fn action_of_constant_path(xi: &Covector) -> f64 {
    let integral = numeric::simpson(|t| 2.0 * geodesic_flow(xi, t).energy(), 0.0, 1.0, 128);
    -xi.energy() + integral
}

/// A nonconstant geodesic arc, parametrized over r ∈ [0, 1] by the time-r
/// flow of its initial covector. Its length equals the initial speed.
#[derive(Debug, Clone, Copy)]
pub struct Geodesic {
    start: Covector,
}

impl Geodesic {
    pub fn new(start: Covector) -> Result<Self> {
        if start.is_zero_section() {
            return Err(Error::ZeroSection);
        }
        Ok(Geodesic { start })
    }

    pub fn start(&self) -> Covector {
        self.start
    }

    pub fn speed(&self) -> f64 {
        self.start.speed()
    }

    /// e(c) = ½·|ċ(0)|².
    pub fn energy(&self) -> f64 {
        self.start.energy()
    }

    pub fn point(&self, r: f64) -> Covector {
        geodesic_flow(&self.start, r)
    }

    pub fn position(&self, r: f64) -> Vector3<f64> {
        self.point(r).u()
    }

    /// Parallel orthonormal frame (E₁, E₂) of the pulled-back tangent bundle:
    /// E₁ follows the unit velocity, E₂ is the constant binormal.
    pub fn frame(&self, r: f64) -> (Vector3<f64>, Vector3<f64>) {
        let p = self.point(r);
        let e1 = p.v() / p.speed();
        let e2 = self.start.u.cross(&self.start.v).normalize();
        (e1, e2)
    }
}

/// Linear symplectic transport A(r) for Ȧ = [[0, R(r)], [I, 0]]·A, A(0) = I,
/// in block coordinates (p, q). Integrated once on a fixed grid; arbitrary
/// parameters reuse the nearest stored node plus one partial step.
pub struct JacobiTransport {
    n: usize,
    step: f64,
    r_max: f64,
    grid: Vec<DMatrix<f64>>,
    generator: Box<dyn Fn(f64) -> DMatrix<f64>>,
}

impl JacobiTransport {
    pub fn new(
        n: usize,
        r_max: f64,
        step: f64,
        curvature: impl Fn(f64) -> DMatrix<f64> + 'static,
    ) -> Result<Self> {
        if !(r_max > 0.0) || !(step > 0.0) || step > r_max {
            return Err(Error::invalid("transport needs 0 < step <= r_max"));
        }
        let generator = move |r: f64| -> DMatrix<f64> {
            let rm = curvature(r);
            assert_eq!(rm.nrows(), n);
            assert_eq!(rm.ncols(), n);
            let mut m = DMatrix::zeros(2 * n, 2 * n);
            m.view_mut((0, n), (n, n)).copy_from(&rm);
            for i in 0..n {
                m[(n + i, i)] = 1.0;
            }
            m
        };
        let count = (r_max / step).ceil() as usize;
        let mut grid = Vec::with_capacity(count + 1);
        let mut a = DMatrix::identity(2 * n, 2 * n);
        grid.push(a.clone());
        for k in 0..count {
            let r = k as f64 * step;
            let h = (r_max - r).min(step);
            a = rk4_step(&generator, r, h, &a);
            grid.push(a.clone());
        }
        Ok(JacobiTransport { n, step, r_max, grid, generator: Box::new(generator) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// A(r) for r ∈ [0, r_max].
    pub fn matrix(&self, r: f64) -> DMatrix<f64> {
        let r = r.clamp(0.0, self.r_max);
        let k = ((r / self.step).floor() as usize).min(self.grid.len() - 1);
        let base_r = k as f64 * self.step;
        let a = &self.grid[k];
        let h = r - base_r;
        if h < 1e-15 {
            return a.clone();
        }
        rk4_step(&self.generator, base_r, h, a)
    }

    /// ‖A(r)ᵀ J A(r) − J‖ relative to ‖A‖², a direct integration-accuracy
    /// monitor: the exact transport is symplectic.
    pub fn symplectic_defect(&self, r: f64) -> f64 {
        let a = self.matrix(r);
        let n = self.n;
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            j[(i, n + i)] = 1.0;
            j[(n + i, i)] = -1.0;
        }
        let defect = a.transpose() * &j * &a - &j;
        defect.norm() / a.norm_squared().max(1.0)
    }

    pub fn lower_left(&self, r: f64) -> DMatrix<f64> {
        self.matrix(r).view((self.n, 0), (self.n, self.n)).into_owned()
    }

    /// σ_min/σ_max of the lower-left block; vanishes at conjugate parameters.
    pub fn block_gap(&self, r: f64) -> f64 {
        let b = self.lower_left(r);
        let sv = numeric::singular_values_sorted(&b);
        let hi = sv[0];
        if hi <= 0.0 {
            return 0.0;
        }
        sv[sv.len() - 1] / hi
    }

    /// Nullity of the lower-left block relative to its own leading singular
    /// value.
    pub fn nullity(&self, r: f64) -> usize {
        let b = self.lower_left(r);
        let sv = numeric::singular_values_sorted(&b);
        let tol = 1e-8 * sv[0];
        sv.iter().filter(|&&s| s <= tol).count()
    }
}

fn rk4_step(
    m: &dyn Fn(f64) -> DMatrix<f64>,
    r: f64,
    h: f64,
    a: &DMatrix<f64>,
) -> DMatrix<f64> {
    let k1 = m(r) * a;
    let k2 = m(r + h / 2.0) * (a + &k1 * (h / 2.0));
    let k3 = m(r + h / 2.0) * (a + &k2 * (h / 2.0));
    let k4 = m(r + h) * (a + &k3 * h);
    a + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// A curvature family r ↦ R(r) for the first-order Jacobi system
/// ṗ = R(r)·q, q̇ = p, together with the integration step.
pub struct JacobiSystem {
    n: usize,
    step: f64,
    curvature: std::rc::Rc<dyn Fn(f64) -> DMatrix<f64>>,
}

impl JacobiSystem {
    /// Validates symmetry of R at a handful of samples.
    pub fn new(
        n: usize,
        step: f64,
        curvature: impl Fn(f64) -> DMatrix<f64> + 'static,
    ) -> Result<Self> {
        if n == 0 || !(step > 0.0 && step <= 1.0) {
            return Err(Error::invalid("jacobi system needs n >= 1 and 0 < step <= 1"));
        }
        for k in 0..=8 {
            let r = k as f64 / 8.0;
            let m = curvature(r);
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::invalid("curvature block has wrong shape"));
            }
            if (&m - m.transpose()).amax() > 1e-12 {
                return Err(Error::invalid(format!("curvature not symmetric at r = {r}")));
            }
        }
        Ok(JacobiSystem { n, step, curvature: std::rc::Rc::new(curvature) })
    }

    pub fn transport(&self, r_max: f64) -> Result<JacobiTransport> {
        let rule = self.curvature.clone();
        JacobiTransport::new(self.n, r_max, self.step, move |r| rule(r))
    }
}

/// A(r) for a Jacobi system, with the symplecticity monitor applied at r.
pub fn jacobi_transport(system: &JacobiSystem, r: f64) -> Result<DMatrix<f64>> {
    let tr = system.transport(r.max(1.0))?;
    let defect = tr.symplectic_defect(r);
    if defect > 1e-6 {
        return Err(Error::IntegrationAccuracy {
            what: "jacobi transport".into(),
            defect,
            tolerance: 1e-6,
        });
    }
    Ok(tr.matrix(r))
}

/// Conjugate parameters of a transport path on (cut, r_max], with their
/// multiplicities. The left cut excludes the universal nullity at r = 0;
/// callers guarantee no conjugate parameter hides in (0, cut].
#[derive(Debug, Clone)]
pub struct ConjugateData {
    /// Isolated interior conjugate parameters in increasing order.
    pub interior: Vec<(f64, usize)>,
    /// Nullity at r_max itself (0 when the endpoint is regular).
    pub endpoint: usize,
}

impl ConjugateData {
    pub fn interior_multiplicity(&self) -> usize {
        self.interior.iter().map(|&(_, m)| m).sum()
    }
}

pub fn transport_conjugate_scan(tr: &JacobiTransport, cut: f64) -> Result<ConjugateData> {
    const CONFIRM: f64 = 1e-8;
    const AMBIGUOUS: f64 = 1e-7;
    const REFINE: f64 = 1e-10;
    let r_max = tr.r_max();
    if !(cut > 0.0 && cut < r_max) {
        return Err(Error::invalid("conjugate scan needs 0 < cut < r_max"));
    }
    let defect = tr.symplectic_defect(r_max);
    if defect > 1e-6 {
        return Err(Error::IntegrationAccuracy {
            what: "jacobi transport".into(),
            defect,
            tolerance: 1e-6,
        });
    }
    let m = 512usize;
    let h = (r_max - cut) / m as f64;
    let gaps: Vec<f64> = (0..=m).map(|i| tr.block_gap(cut + i as f64 * h)).collect();
    for i in 1..m {
        if gaps[i] < CONFIRM && gaps[i + 1] < CONFIRM {
            return Err(Error::Resolution {
                what: "conjugate parameters not isolated at scan resolution".into(),
                t: cut + i as f64 * h,
            });
        }
    }
    let max_slope = gaps
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / h)
        .fold(0.0f64, f64::max);
    let cand_tol = (4.0 * h * max_slope).max(1e-6).min(0.25);
    let gap_fn = |r: f64| tr.block_gap(r);

    let mut interior: Vec<(f64, usize)> = Vec::new();
    for i in 1..m {
        let local_min = gaps[i] <= gaps[i - 1] && gaps[i] <= gaps[i + 1];
        if !((local_min && gaps[i] < cand_tol.max(0.05)) || gaps[i] < cand_tol) {
            continue;
        }
        let lo = (cut + (i as f64 - 1.0) * h).max(cut);
        let hi = (cut + (i as f64 + 1.0) * h).min(r_max);
        let (r_star, g_star) = numeric::golden_min(&gap_fn, lo, hi, REFINE);
        if r_max - r_star < 32.0 * REFINE.max(1e-9) {
            // Decay into the far endpoint; the endpoint nullity owns this
            // neighborhood.
            continue;
        }
        if g_star < CONFIRM {
            if interior.iter().any(|&(r, _)| (r - r_star).abs() < 1e-8) {
                continue;
            }
            interior.push((r_star, tr.nullity(r_star)));
        } else if g_star < AMBIGUOUS {
            return Err(Error::Resolution {
                what: format!("conjugate gap {g_star:.3e} unresolved"),
                t: r_star,
            });
        }
    }
    interior.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let endpoint = if gaps[m] < CONFIRM {
        tr.nullity(r_max)
    } else if gaps[m] < AMBIGUOUS {
        return Err(Error::Resolution { what: "ambiguous endpoint gap".into(), t: r_max });
    } else {
        0
    };
    Ok(ConjugateData { interior, endpoint })
}

/// Transport of sphere Jacobi fields along a geodesic arc, in the parallel
/// frame of [`Geodesic::frame`]: curvature block diag(0, −L²). The step
/// shrinks with the speed so the accumulated phase error stays two orders
/// of magnitude below the conjugate-detection threshold: the dip of the
/// block gap at a conjugate parameter bottoms out near L⁴·h⁴/120, and
/// h ≤ 0.01/L keeps that under 10⁻⁹.
pub fn sphere_jacobi_transport(geo: &Geodesic) -> Result<JacobiTransport> {
    let l2 = geo.speed() * geo.speed();
    let step = (0.01 / geo.speed()).min(1e-3);
    JacobiTransport::new(2, 1.0, step, move |_r| {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, -l2]))
    })
}

fn sphere_conjugate_cut(geo: &Geodesic) -> f64 {
    // First conjugate parameter sits at π/L; stay well left of it.
    (0.5 * std::f64::consts::PI / geo.speed()).min(0.02)
}

/// One conjugate parameter of a geodesic arc: m(c, r) > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateDatum {
    pub r: f64,
    pub multiplicity: usize,
}

/// All conjugate parameters in (0, 1], including the far endpoint when it is
/// conjugate. The r = 0 endpoint is always conjugate for trivial reasons and
/// is not reported.
pub fn conjugate_points(geo: &Geodesic) -> Result<Vec<ConjugateDatum>> {
    let tr = sphere_jacobi_transport(geo)?;
    let data = transport_conjugate_scan(&tr, sphere_conjugate_cut(geo))?;
    let mut out: Vec<ConjugateDatum> = data
        .interior
        .iter()
        .map(|&(r, multiplicity)| ConjugateDatum { r, multiplicity })
        .collect();
    if data.endpoint > 0 {
        out.push(ConjugateDatum { r: 1.0, multiplicity: data.endpoint });
    }
    Ok(out)
}

/// Morse index of the geodesic arc by the conjugate-point count
/// m(c) = Σ_{0<r<1} m(c, r) + ½·m(c, 1).
pub fn morse_index(geo: &Geodesic) -> Result<HalfInt> {
    let tr = sphere_jacobi_transport(geo)?;
    let data = transport_conjugate_scan(&tr, sphere_conjugate_cut(geo))?;
    Ok(HalfInt::halves(
        2 * data.interior_multiplicity() as i64 + data.endpoint as i64,
    ))
}

/// Index data of the fiber-to-fiber Lagrangian path pair attached to a
/// geodesic arc: a constant copy of the fiber tangent space and the
/// flow-transported fiber, in the parallel symplectic trivialization. The
/// crossing-form route over these paths must reproduce the conjugate-point
/// counts.
pub struct IndexData {
    /// Constant path at the fiber subspace (the p-block plane).
    pub fiber_path: crate::symplectic::LagrangianPath,
    /// r ↦ A(r)⁻¹·(fiber), the fiber dragged back by the linearized flow.
    pub transported_path: crate::symplectic::LagrangianPath,
    pub conjugate: ConjugateData,
    /// Counting-formula index: the full-rank crossing at r = 0 contributes 1,
    /// interior conjugate parameters their multiplicity, the far endpoint
    /// half its nullity.
    pub index: HalfInt,
    /// `index` − ½·dim(sphere pair) = `index` − 1; equals the Morse index.
    pub coherent_index: HalfInt,
}

pub fn index_path_data(xi: &Covector) -> Result<IndexData> {
    let geo = Geodesic::new(*xi)?;
    let tr = std::rc::Rc::new(sphere_jacobi_transport(&geo)?);
    let conjugate = transport_conjugate_scan(&tr, sphere_conjugate_cut(&geo))?;
    let space = crate::symplectic::SymplecticSpace::new(2)?;
    let fiber_path =
        crate::symplectic::LagrangianPath::constant(&space.horizontal(), (0.0, 1.0))?;
    let tr_rule = tr.clone();
    let transported_path =
        crate::symplectic::LagrangianPath::new(space, (0.0, 1.0), move |r| {
            let a = tr_rule.matrix(r);
            let mut rhs = DMatrix::zeros(4, 2);
            rhs[(0, 0)] = 1.0;
            rhs[(1, 1)] = 1.0;
            a.lu().solve(&rhs).expect("transport matrix invertible")
        })?;
    let twice = 2 + 2 * conjugate.interior_multiplicity() as i64 + conjugate.endpoint as i64;
    let index = HalfInt::halves(twice);
    let coherent_index = index - HalfInt::from_int(1);
    Ok(IndexData { fiber_path, transported_path, conjugate, index, coherent_index })
}

fn rot90(p: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-p.y, p.x)
}

/// Exponential-type chart of T*S² centered at a base point x: the cotangent
/// lift of (q ∈ ℝ²) ↦ cos|q|·x + sin|q|·q̂_E, defined for |q| < π. Chart
/// coordinates are (p, q) with p the covector block, and the lift is an exact
/// symplectomorphism onto T*(S² minus the antipode of x).
#[derive(Debug, Clone, Copy)]
pub struct ExpChart {
    x: Vector3<f64>,
    e1: Vector3<f64>,
    e2: Vector3<f64>,
}

impl ExpChart {
    pub fn new(x: Vector3<f64>, e1: Vector3<f64>) -> Result<Self> {
        if (x.norm() - 1.0).abs() > MEMBERSHIP_TOL {
            return Err(Error::invalid("chart center must be a unit vector"));
        }
        if (e1.norm() - 1.0).abs() > MEMBERSHIP_TOL || x.dot(&e1).abs() > MEMBERSHIP_TOL {
            return Err(Error::invalid("chart frame vector must be unit and tangent"));
        }
        let x = x.normalize();
        let e1 = (e1 - x * x.dot(&e1)).normalize();
        let e2 = x.cross(&e1);
        Ok(ExpChart { x, e1, e2 })
    }

    /// Chart at (1, 0, 0) with frame ((0, 1, 0), (0, 0, 1)).
    pub fn standard() -> Self {
        ExpChart {
            x: Vector3::new(1.0, 0.0, 0.0),
            e1: Vector3::new(0.0, 1.0, 0.0),
            e2: Vector3::new(0.0, 0.0, 1.0),
        }
    }

    /// Chart centered at the antipode, keeping the first frame vector. The
    /// second frame vector flips so the frame stays adapted.
    pub fn antipodal(&self) -> Self {
        ExpChart { x: -self.x, e1: self.e1, e2: -self.e2 }
    }

    pub fn center(&self) -> Vector3<f64> {
        self.x
    }

    fn lift_tangent(&self, a: Vector2<f64>) -> Vector3<f64> {
        self.e1 * a.x + self.e2 * a.y
    }

    fn project_tangent(&self, w: &Vector3<f64>) -> Vector2<f64> {
        Vector2::new(w.dot(&self.e1), w.dot(&self.e2))
    }

    /// Chart map (p, q) ↦ (u, v). Requires |q| < π.
    pub fn to_cotangent(&self, p: Vector2<f64>, q: Vector2<f64>) -> Result<Covector> {
        let t = q.norm();
        if t >= std::f64::consts::PI {
            return Err(Error::Puncture);
        }
        if t < 1e-14 {
            return Covector::new(self.x, self.lift_tangent(p));
        }
        let qhat = q / t;
        let qe = self.lift_tangent(qhat);
        let (s, c) = t.sin_cos();
        let u = self.x * c + qe * s;
        let gamma_prime = self.x * (-s) + qe * c;
        let normal = self.x.cross(&qe);
        let p_r = p.dot(&qhat);
        let p_perp = p.dot(&rot90(qhat));
        // t/sin t, stable near zero.
        let stretch = if t < 1e-6 { 1.0 + t * t / 6.0 } else { t / s };
        let v = gamma_prime * p_r + normal * (p_perp * stretch);
        Covector::new(u, v)
    }

    /// Inverse chart map. Fails on the fiber over the antipode of the center.
    pub fn from_cotangent(&self, xi: &Covector) -> Result<(Vector2<f64>, Vector2<f64>)> {
        let cos_t = xi.u().dot(&self.x).clamp(-1.0, 1.0);
        // Splitting u into radial and tangential parts keeps the angle
        // well-conditioned near the center, where acos alone loses half the
        // significant digits.
        let tangential = xi.u() - self.x * cos_t;
        let s = tangential.norm();
        let t = s.atan2(cos_t);
        if std::f64::consts::PI - t < 1e-9 {
            return Err(Error::Puncture);
        }
        if t < 1e-9 {
            return Ok((self.project_tangent(&xi.v()), Vector2::zeros()));
        }
        let qe = tangential / s;
        let qhat = self.project_tangent(&qe);
        let q = qhat * t;
        let gamma_prime = self.x * (-s) + qe * cos_t;
        let normal = self.x.cross(&qe);
        let p_r = xi.v().dot(&gamma_prime);
        let shrink = if t < 1e-6 { 1.0 - t * t / 6.0 } else { s / t };
        let p_perp = xi.v().dot(&normal) * shrink;
        let p = qhat * p_r + rot90(qhat) * p_perp;
        Ok((p, q))
    }
}

/// Orthonormal basis of the tangent space of the constraint manifold at ξ,
/// as a 6×4 matrix in ambient coordinates (u, v).
pub fn tangent_basis(xi: &Covector) -> DMatrix<f64> {
    // Constraint gradients: d(|u|² − 1) ∝ (u, 0), d⟨u, v⟩ = (v, u).
    let mut g = DMatrix::zeros(2, 6);
    for i in 0..3 {
        g[(0, i)] = xi.u[i];
        g[(1, i)] = xi.v[i];
        g[(1, 3 + i)] = xi.u[i];
    }
    let ns = numeric::nullspace(&g, 1e-12);
    assert_eq!(ns.ncols(), 4, "constraint gradients must be independent");
    ns
}

/// Ambient value of η = Σ dvᵢ ∧ duᵢ on two tangent vectors written as
/// (δu, δv) ∈ ℝ⁶.
pub fn eta_ambient(a: &nalgebra::DVector<f64>, b: &nalgebra::DVector<f64>) -> f64 {
    let mut total = 0.0;
    for i in 0..3 {
        total += a[3 + i] * b[i] - a[i] * b[3 + i];
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample_covector(speed: f64) -> Covector {
        let u = Vector3::new(1.0, 0.0, 0.0);
        let v = Vector3::new(0.0, speed, 0.0);
        Covector::new(u, v).unwrap()
    }

    fn skewed_covector(speed: f64) -> Covector {
        let u = Vector3::new(0.6, 0.48, 0.64).normalize();
        let raw = Vector3::new(-0.3, 0.9, 0.2);
        let v = raw - u * u.dot(&raw);
        Covector::new(u, v * (speed / v.norm())).unwrap()
    }

    #[test]
    fn constructor_validates_constraints() {
        assert!(Covector::new(Vector3::new(1.1, 0.0, 0.0), Vector3::zeros()).is_err());
        assert!(
            Covector::new(Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.5, 1.0, 0.0)).is_err()
        );
        let xi = sample_covector(2.0);
        let (ru, rv) = xi.constraint_residuals();
        assert!(ru.abs() < 1e-15 && rv.abs() < 1e-15);
    }

    #[test]
    fn geodesic_flow_conserves_and_closes() {
        let xi = skewed_covector(1.7);
        for &t in &[0.3, 1.0, 2.5] {
            let y = geodesic_flow(&xi, t);
            let (ru, rv) = y.constraint_residuals();
            assert!(ru.abs() < 1e-12 && rv.abs() < 1e-12);
            assert_abs_diff_eq!(y.energy(), xi.energy(), epsilon = 1e-12);
            // Group property.
            let z = geodesic_flow(&geodesic_flow(&xi, 0.4), t - 0.4);
            assert!(y.distance(&z) < 1e-12);
        }
        let period = 2.0 * std::f64::consts::PI / xi.speed();
        assert!(geodesic_flow(&xi, period).distance(&xi) < 1e-12);
    }

    #[test]
    fn circle_action_matches_rescaled_flow() {
        let xi = skewed_covector(2.3);
        for &theta in &[0.2, 1.4, 3.0, 5.9] {
            let a = circle_action(&xi, theta).unwrap();
            let b = geodesic_flow(&xi, theta / xi.speed());
            assert!(a.distance(&b) < 1e-12, "theta = {theta}");
        }
        let full = circle_action(&xi, 2.0 * std::f64::consts::PI).unwrap();
        assert!(full.distance(&xi) < 1e-12);
        assert!(matches!(
            circle_action(&Covector::new(Vector3::x(), Vector3::zeros()).unwrap(), 1.0),
            Err(Error::ZeroSection)
        ));
    }

    #[test]
    fn action_family_interpolates() {
        let xi = skewed_covector(1.1);
        let a = circle_action_family(&xi, 0.0, 0.8).unwrap();
        let b = circle_action(&xi, 0.8).unwrap();
        assert!(a.distance(&b) < 1e-12);
        // s = 1 rotates the fiber and fixes the base point.
        let c = circle_action_family(&xi, 1.0, 0.8).unwrap();
        assert!((c.u() - xi.u()).norm() < 1e-12);
        assert_abs_diff_eq!(c.speed(), xi.speed(), epsilon = 1e-12);
        // Degenerate only on the zero section at s = 0.
        let zero = Covector::new(Vector3::x(), Vector3::zeros()).unwrap();
        assert!(matches!(
            circle_action_family(&zero, 0.0, 1.0),
            Err(Error::DegenerateAxis { .. })
        ));
        assert!(circle_action_family(&zero, 0.5, 1.0).is_ok());
    }

    #[test]
    fn reparametrized_flow_tracks_closed_form() {
        let xi = skewed_covector(1.9);
        // Trivial rescaling: both sides are the plain flow.
        let (left, right) = reparametrized_flow_check(&xi, &|_| 1.0, 2.0, 2000);
        assert!(left.distance(&right) < 1e-8);
        assert!(left.distance(&geodesic_flow(&xi, 2.0)) < 1e-8);
        // Speed normalization: factor 1/|v| turns the flow into the circle
        // action at angle t.
        let (left, right) =
            reparametrized_flow_check(&xi, &|e| 1.0 / (2.0 * e).sqrt(), 1.3, 2000);
        assert!(left.distance(&right) < 1e-8);
        assert!(left.distance(&circle_action(&xi, 1.3).unwrap()) < 1e-8);
        // Constant rescaling of zero: left side never moves.
        let (left, _) = reparametrized_flow_check(&xi, &|_| 0.0, 2.0, 100);
        assert!(left.distance(&xi) < 1e-12);
        let general = reparametrized_flow_check(&xi, &|e| 0.3 + 0.2 * e, 2.0, 2000);
        assert!(general.0.distance(&general.1) < 1e-8);
    }

    #[test]
    fn constant_path_action_equals_energy() {
        for &speed in &[std::f64::consts::PI, 3.0 * std::f64::consts::PI, 0.7] {
            let xi = skewed_covector(speed);
            assert_abs_diff_eq!(
                action_of_constant_path(&xi),
                0.5 * speed * speed,
                epsilon = 1e-8
            );
        }
        let zero = Covector::new(Vector3::x(), Vector3::zeros()).unwrap();
        assert_abs_diff_eq!(action_of_constant_path(&zero), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn jacobi_transport_closed_forms() {
        // Zero curvature: pure shear.
        let sys = JacobiSystem::new(1, 1e-3, |_| DMatrix::from_element(1, 1, 0.0)).unwrap();
        let a = jacobi_transport(&sys, 1.0).unwrap();
        let expected = nalgebra::dmatrix![1.0, 0.0; 1.0, 1.0];
        assert!((a - expected).amax() < 1e-9);
        let id = jacobi_transport(&sys, 0.0).unwrap();
        assert!((id - DMatrix::identity(2, 2)).amax() < 1e-12);
        // Constant focusing curvature −π²: the lower-left block is
        // sin(πr)/π, vanishing at r = 1.
        let pi = std::f64::consts::PI;
        let sys =
            JacobiSystem::new(1, 1e-3, move |_| DMatrix::from_element(1, 1, -pi * pi)).unwrap();
        let a = jacobi_transport(&sys, 1.0).unwrap();
        assert!(a[(1, 0)].abs() < 1e-8);
        let a = jacobi_transport(&sys, 0.5).unwrap();
        assert_abs_diff_eq!(a[(1, 0)], 1.0 / pi, epsilon = 1e-8);
        // Asymmetric curvature is rejected at construction.
        assert!(JacobiSystem::new(
            2,
            1e-3,
            |_| DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])
        )
        .is_err());
    }

    #[test]
    fn transport_matches_closed_form_blocks() {
        let speed = 3.0 * std::f64::consts::PI;
        let geo = Geodesic::new(sample_covector(speed)).unwrap();
        let tr = sphere_jacobi_transport(&geo).unwrap();
        for &r in &[0.2, 0.5, 0.77, 1.0] {
            let b = tr.lower_left(r);
            assert_abs_diff_eq!(b[(0, 0)], r, epsilon = 1e-7);
            assert_abs_diff_eq!(b[(1, 1)], (speed * r).sin() / speed, epsilon = 1e-7);
            assert!(b[(0, 1)].abs() < 1e-9 && b[(1, 0)].abs() < 1e-9);
            assert!(tr.symplectic_defect(r) < 1e-6);
        }
    }

    #[test]
    fn conjugate_points_of_odd_half_turns() {
        // Speed (2j−1)π: interior conjugate parameters k/(2j−1) for
        // k = 1, …, 2j−2, each of multiplicity one, plus a simple one at the
        // right endpoint. Morse index (2j−2) + ½.
        for j in 1..=4usize {
            let speed = (2.0 * j as f64 - 1.0) * std::f64::consts::PI;
            let geo = Geodesic::new(skewed_covector(speed)).unwrap();
            let pts = conjugate_points(&geo).unwrap();
            assert_eq!(pts.len(), 2 * j - 1, "j = {j}");
            for (k, datum) in pts.iter().enumerate() {
                assert_eq!(datum.multiplicity, 1);
                assert_abs_diff_eq!(
                    datum.r,
                    (k as f64 + 1.0) / (2.0 * j as f64 - 1.0),
                    epsilon = 1e-7
                );
            }
            assert_eq!(morse_index(&geo).unwrap(), HalfInt::halves(4 * j as i64 - 3));
            let data = index_path_data(&geo.start()).unwrap();
            assert_eq!(data.index, HalfInt::halves(4 * j as i64 - 1));
            assert_eq!(data.coherent_index, morse_index(&geo).unwrap());
        }
    }

    #[test]
    fn short_arcs_have_no_conjugate_points() {
        let geo = Geodesic::new(skewed_covector(0.5 * std::f64::consts::PI)).unwrap();
        assert!(conjugate_points(&geo).unwrap().is_empty());
        assert_eq!(morse_index(&geo).unwrap(), HalfInt::ZERO);
        let data = index_path_data(&geo.start()).unwrap();
        assert_eq!(data.conjugate.endpoint, 0);
        assert_eq!(data.coherent_index, HalfInt::ZERO);
    }

    /// The crossing-form route over the path pair returned by
    /// index_path_data agrees with the conjugate-point counting route.
    #[test]
    fn crossing_forms_match_conjugate_counts() {
        use crate::maslov::{coherent_index_from_frame_data, maslov_index_pair, MaslovOptions};
        let opts = MaslovOptions::default();
        for j in 1..=3usize {
            let speed = (2.0 * j as f64 - 1.0) * std::f64::consts::PI;
            let geo = Geodesic::new(skewed_covector(speed)).unwrap();
            let data = index_path_data(&geo.start()).unwrap();
            let mu =
                maslov_index_pair(&data.fiber_path, &data.transported_path, &opts).unwrap();
            assert_eq!(mu, data.index, "j = {j}");
            let coherent = coherent_index_from_frame_data(
                &data.fiber_path,
                &data.transported_path,
                2,
                &opts,
            )
            .unwrap();
            assert_eq!(coherent, morse_index(&geo).unwrap(), "j = {j}");
        }
    }

    #[test]
    fn chart_round_trips() {
        let chart = ExpChart::standard();
        let cases = [
            (Vector2::new(0.3, -0.7), Vector2::new(1.2, 0.4)),
            (Vector2::new(-2.0, 0.1), Vector2::new(0.0, 2.9)),
            (Vector2::new(0.0, 0.0), Vector2::new(0.5, 0.5)),
            (Vector2::new(1.0, 1.0), Vector2::new(0.0, 0.0)),
            (Vector2::new(0.4, 0.2), Vector2::new(1e-10, 0.0)),
        ];
        for (p, q) in cases {
            let xi = chart.to_cotangent(p, q).unwrap();
            let (p2, q2) = chart.from_cotangent(&xi).unwrap();
            assert!((p - p2).norm() < 1e-9, "p {p:?} -> {p2:?}");
            assert!((q - q2).norm() < 1e-9, "q {q:?} -> {q2:?}");
        }
        // Fiber over the antipode is outside the chart.
        let far = Covector::new(-Vector3::x(), Vector3::new(0.0, 1.0, 0.0)).unwrap();
        assert!(matches!(chart.from_cotangent(&far), Err(Error::Puncture)));
        assert!(chart
            .to_cotangent(Vector2::zeros(), Vector2::new(std::f64::consts::PI, 0.0))
            .is_err());
    }

    #[test]
    fn chart_preserves_the_symplectic_form() {
        // Central differences of the chart map, tested against the flat form.
        let chart = ExpChart::new(
            Vector3::new(0.0, 0.6, 0.8),
            Vector3::new(1.0, 0.0, 0.0),
        )
        .unwrap();
        let embed = |z: [f64; 4]| -> nalgebra::DVector<f64> {
            let xi = chart
                .to_cotangent(Vector2::new(z[0], z[1]), Vector2::new(z[2], z[3]))
                .unwrap();
            let mut out = nalgebra::DVector::zeros(6);
            for i in 0..3 {
                out[i] = xi.u()[i];
                out[3 + i] = xi.v()[i];
            }
            out
        };
        let base = [0.7, -0.4, 0.9, 0.3];
        let h = 1e-4;
        let deriv = |k: usize| -> nalgebra::DVector<f64> {
            let mut plus = base;
            let mut minus = base;
            plus[k] += h;
            minus[k] -= h;
            (embed(plus) - embed(minus)) / (2.0 * h)
        };
        let d: Vec<_> = (0..4).map(deriv).collect();
        // Flat form on (p, q): ω(e_i, e_{2+i}) = 1.
        for i in 0..4 {
            for j in 0..4 {
                let expected = match (i, j) {
                    (0, 2) | (1, 3) => 1.0,
                    (2, 0) | (3, 1) => -1.0,
                    _ => 0.0,
                };
                let got = eta_ambient(&d[i], &d[j]);
                assert!(
                    (got - expected).abs() < 1e-6,
                    "pair ({i}, {j}): got {got}, expected {expected}"
                );
            }
        }
    }

    #[test]
    fn tangent_basis_spans_the_constraint_kernel() {
        let xi = skewed_covector(1.3);
        let b = tangent_basis(&xi);
        assert_eq!((b.transpose() * &b - DMatrix::identity(4, 4)).norm() < 1e-10, true);
        for c in 0..4 {
            let col = b.column(c);
            let du = Vector3::new(col[0], col[1], col[2]);
            let dv = Vector3::new(col[3], col[4], col[5]);
            assert!(xi.u().dot(&du).abs() < 1e-10);
            assert!((xi.v().dot(&du) + xi.u().dot(&dv)).abs() < 1e-10);
        }
    }
}
