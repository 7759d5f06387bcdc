//! Model twist maps of T*S².
//!
//! A twist is the fiberwise circle action at an angle profile ψ(|v|),
//! extended over the zero section by the antipodal map. All profiles satisfy
//! ψ(0) = π and ψ(t) + ψ(−t) = 2π, vanish beyond a support radius, and
//! differ only in how the angle interpolates between π and 0:
//!
//! * the staircase profile used by the intersection tables is linear,
//!   ψ(t) = π − t/(2r), far into its domain and blends to zero at 2πr;
//! * the collar profile used by the surgery charts is exactly π − t on
//!   [0, ε] and vanishes beyond 2ε;
//! * the plateau profile is constantly π near the zero section, which makes
//!   the square of its twist a candidate for untwisting through the rotated
//!   axis family.

use crate::error::Error;
use crate::numeric;
use crate::sphere::{circle_action, circle_action_family, eta_ambient, tangent_basis, Covector};
use crate::Result;
use nalgebra::{DMatrix, DVector, Vector2, Vector3};

#[derive(Debug, Clone, Copy, PartialEq)]
enum ProfileKind {
    /// Linear slope −1/(2r) on [0, δ], δ = 2π(r − ¼), blended to 0 at 2πr.
    Staircase { r: u32, delta: f64 },
    /// π − t on [0, ε], blended to 0 on [ε, 2ε].
    Collar { eps: f64 },
    /// Constant π on [0, inner], blended to 0 on [inner, outer].
    Plateau { inner: f64, outer: f64 },
}

/// Angle profile of a twist; see the module docs for the three shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistProfile {
    kind: ProfileKind,
    support: f64,
}

impl TwistProfile {
    /// The staircase profile of winding parameter r ≥ 1.
    pub fn staircase(r: u32) -> Result<Self> {
        if r < 1 {
            return Err(Error::invalid("staircase profile needs r >= 1"));
        }
        let delta = 2.0 * std::f64::consts::PI * (r as f64 - 0.25);
        Ok(TwistProfile {
            kind: ProfileKind::Staircase { r, delta },
            support: 2.0 * std::f64::consts::PI * r as f64,
        })
    }

    /// The collar profile with ψ(t) = π − t for t ≤ ε. Needs ε < π/2 so the
    /// support stays inside the injectivity radius of the charts.
    pub fn collar(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5 * std::f64::consts::PI) {
            return Err(Error::invalid("collar profile needs 0 < eps < pi/2"));
        }
        Ok(TwistProfile { kind: ProfileKind::Collar { eps }, support: 2.0 * eps })
    }

    /// The plateau profile: constant π out to `inner`, zero beyond `outer`.
    pub fn plateau(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < outer) {
            return Err(Error::invalid("plateau profile needs 0 < inner < outer"));
        }
        Ok(TwistProfile { kind: ProfileKind::Plateau { inner, outer }, support: outer })
    }

    pub fn support_radius(&self) -> f64 {
        self.support
    }

    /// Right edge of the region where the closed-form piece of ψ holds
    /// exactly (δ, ε, or the plateau end).
    pub fn exact_region(&self) -> f64 {
        match self.kind {
            ProfileKind::Staircase { delta, .. } => delta,
            ProfileKind::Collar { eps } => eps,
            ProfileKind::Plateau { inner, .. } => inner,
        }
    }

    pub fn winding(&self) -> Option<u32> {
        match self.kind {
            ProfileKind::Staircase { r, .. } => Some(r),
            _ => None,
        }
    }

    /// ψ(t), defined on all of ℝ through ψ(t) + ψ(−t) = 2π.
    pub fn value(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 2.0 * std::f64::consts::PI - self.value(-t);
        }
        if t >= self.support {
            return 0.0;
        }
        let pi = std::f64::consts::PI;
        match self.kind {
            ProfileKind::Staircase { r, delta } => {
                let linear = pi - t / (2.0 * r as f64);
                let blend = 1.0 - numeric::smoothstep((t - delta) / (self.support - delta));
                linear * blend
            }
            ProfileKind::Collar { eps } => {
                (pi - t) * (1.0 - numeric::smoothstep((t - eps) / eps))
            }
            ProfileKind::Plateau { inner, outer } => {
                pi * (1.0 - numeric::smoothstep((t - inner) / (outer - inner)))
            }
        }
    }
}

/// The model twist attached to a profile.
#[derive(Debug, Clone, Copy)]
pub struct ModelTwist {
    profile: TwistProfile,
}

impl ModelTwist {
    pub fn new(profile: TwistProfile) -> Self {
        ModelTwist { profile }
    }

    pub fn profile(&self) -> &TwistProfile {
        &self.profile
    }

    /// The twist map: circle action at angle ψ(|v|) off the zero section,
    /// the antipodal map on it.
    pub fn apply(&self, xi: &Covector) -> Covector {
        if xi.is_zero_section() {
            return Covector::project(-xi.u(), Vector3::zeros());
        }
        let angle = self.profile.value(xi.speed());
        if angle == 0.0 {
            // Outside the support the twist is the identity, bit for bit.
            return *xi;
        }
        circle_action(xi, angle).expect("nonzero covector accepted by the circle action")
    }

    /// k-fold composition; negative k uses the inverse rotation −ψ. The
    /// speed is invariant under each step, so the angle never changes along
    /// the iteration.
    pub fn power(&self, k: i64, xi: &Covector) -> Covector {
        if xi.is_zero_section() {
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            return Covector::project(xi.u() * sign, Vector3::zeros());
        }
        let angle = self.profile.value(xi.speed()) * k.signum() as f64;
        if angle == 0.0 {
            return *xi;
        }
        let mut out = *xi;
        for _ in 0..k.unsigned_abs() {
            out = circle_action(&out, angle).expect("speed preserved off the zero section");
        }
        out
    }
}

/// Result of a symplecticity sweep over a sample set.
#[derive(Debug, Clone, Copy)]
pub struct SymplecticCheck {
    /// Largest |η(Df·bᵢ, Df·bⱼ) − η(bᵢ, bⱼ)| over all samples and basis
    /// pairs.
    pub max_defect: f64,
    /// Samples skipped because the map failed to evaluate nearby.
    pub skipped: usize,
}

/// Central-difference pullback check of η = Σ dvᵢ∧duᵢ for an arbitrary point
/// map of the constraint manifold. Both the map and the bare retraction are
/// differenced along the same retracted curves, so the curvature of the
/// retraction cancels between η(Df·, Df·) and the baseline.
pub fn check_symplectic(
    map: &dyn Fn(&Covector) -> Result<Covector>,
    samples: &[Covector],
    h: f64,
) -> Result<SymplecticCheck> {
    if !(h > 0.0 && h < 1e-1) {
        return Err(Error::invalid("finite-difference step out of range"));
    }
    let diff = |plus: &Covector, minus: &Covector| {
        let mut d = DVector::zeros(6);
        for i in 0..3 {
            d[i] = (plus.u()[i] - minus.u()[i]) / (2.0 * h);
            d[3 + i] = (plus.v()[i] - minus.v()[i]) / (2.0 * h);
        }
        d
    };
    let mut max_defect = 0.0f64;
    let mut skipped = 0usize;
    'samples: for xi in samples {
        let basis = tangent_basis(xi);
        let mut raw: Vec<DVector<f64>> = Vec::with_capacity(4);
        let mut pushed: Vec<DVector<f64>> = Vec::with_capacity(4);
        for c in 0..4 {
            let col = basis.column(c);
            let du = Vector3::new(col[0], col[1], col[2]);
            let dv = Vector3::new(col[3], col[4], col[5]);
            let plus = Covector::project(xi.u() + du * h, xi.v() + dv * h);
            let minus = Covector::project(xi.u() - du * h, xi.v() - dv * h);
            let (fp, fm) = match (map(&plus), map(&minus)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => {
                    skipped += 1;
                    continue 'samples;
                }
            };
            raw.push(diff(&plus, &minus));
            pushed.push(diff(&fp, &fm));
        }
        for i in 0..4 {
            for j in (i + 1)..4 {
                let before = eta_ambient(&raw[i], &raw[j]);
                let after = eta_ambient(&pushed[i], &pushed[j]);
                max_defect = max_defect.max((after - before).abs());
            }
        }
    }
    Ok(SymplecticCheck { max_defect, skipped })
}

/// One stage of the two-parameter family connecting the squared twist to the
/// identity: rotation about the axis s·u + (1−s)·u×v by angle 2·scale·ψ(|v|).
/// (s, scale) = (0, 1) is the squared twist; (1, 0) is the identity.
pub fn square_isotopy_stage(
    m: &ModelTwist,
    s: f64,
    scale: f64,
    xi: &Covector,
) -> Result<Covector> {
    let angle = 2.0 * scale * m.profile().value(xi.speed());
    circle_action_family(xi, s, angle)
}

/// The fiber over the chart center, dragged back by the twist and expressed
/// in the chart: the graph point (p, −ψ(|p|)·p/|p|) over a nonzero covector
/// block p in the punctured disc of radius π.
pub fn twisted_fiber_graph(m: &ModelTwist, p: Vector2<f64>) -> Result<(Vector2<f64>, Vector2<f64>)> {
    let t = p.norm();
    if t < 1e-12 || t >= std::f64::consts::PI {
        return Err(Error::Puncture);
    }
    Ok((p, p * (-m.profile().value(t) / t)))
}

/// The fiber dragged the other way (positive angle) and expressed in the
/// chart centered at the antipode: (p, −(π − ψ(|p|))·p/|p|), valid for |p|
/// below the support radius of the collar profile. The momentum read in
/// this chart points toward the center for the positive drag and away from
/// it for the negative one, so the two drags fill the two mirror graphs
/// ±(π − ψ(|p|))·p/|p|; this function is the toward-center branch.
pub fn twisted_fiber_graph_antipodal(
    m: &ModelTwist,
    p: Vector2<f64>,
) -> Result<(Vector2<f64>, Vector2<f64>)> {
    let t = p.norm();
    if t < 1e-12 {
        return Err(Error::Puncture);
    }
    if t >= m.profile().support_radius() {
        return Err(Error::invalid("antipodal graph needs |p| below the support radius"));
    }
    Ok((p, p * (-(std::f64::consts::PI - m.profile().value(t)) / t)))
}

/// 4×4 Jacobian determinant of a point map at ξ, in orthonormal tangent
/// bases at the source and image: a regularity certificate for sampled
/// stages of isotopies.
pub fn tangent_jacobian_det(
    map: &dyn Fn(&Covector) -> Result<Covector>,
    xi: &Covector,
    h: f64,
) -> Result<f64> {
    let image = map(xi)?;
    let basis = tangent_basis(xi);
    let image_basis = tangent_basis(&image);
    let mut jac = DMatrix::zeros(4, 4);
    for c in 0..4 {
        let col = basis.column(c);
        let du = Vector3::new(col[0], col[1], col[2]);
        let dv = Vector3::new(col[3], col[4], col[5]);
        let fp = map(&Covector::project(xi.u() + du * h, xi.v() + dv * h))?;
        let fm = map(&Covector::project(xi.u() - du * h, xi.v() - dv * h))?;
        let mut d = DVector::zeros(6);
        for i in 0..3 {
            d[i] = (fp.u()[i] - fm.u()[i]) / (2.0 * h);
            d[3 + i] = (fp.v()[i] - fm.v()[i]) / (2.0 * h);
        }
        let coords = image_basis.transpose() * d;
        jac.set_column(c, &coords);
    }
    Ok(jac.determinant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Sampler;
    use crate::sphere::geodesic_flow;
    use approx::assert_abs_diff_eq;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn staircase_profile_shape() {
        let p = TwistProfile::staircase(1).unwrap();
        assert_abs_diff_eq!(p.value(0.0), PI, epsilon = 1e-15);
        // Linear piece is exact out to δ = 3π/2.
        for &t in &[0.0, 0.3, 1.0, 1.5 * PI] {
            assert_abs_diff_eq!(p.value(t), PI - t / 2.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(p.value(1.5 * PI), PI / 4.0, epsilon = 1e-15);
        assert_eq!(p.value(2.0 * PI), 0.0);
        assert_eq!(p.value(7.0), 0.0);
        for r in 1..=4u32 {
            let p = TwistProfile::staircase(r).unwrap();
            assert_abs_diff_eq!(p.value(0.0), PI, epsilon = 1e-15);
            assert_eq!(p.value(2.0 * PI * r as f64 + 1e-12), 0.0);
            // Monotone nonincreasing and odd about the zero level.
            let mut prev = f64::INFINITY;
            for k in 0..=400 {
                let t = k as f64 / 400.0 * (p.support_radius() + 1.0);
                let v = p.value(t);
                assert!(v <= prev + 1e-12, "r = {r}, t = {t}");
                assert_abs_diff_eq!(p.value(t) + p.value(-t), 2.0 * PI, epsilon = 1e-12);
                prev = v;
            }
        }
    }

    #[test]
    fn collar_profile_shape() {
        let p = TwistProfile::collar(1.2).unwrap();
        assert_abs_diff_eq!(p.value(1.0), PI - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.value(1.2), PI - 1.2, epsilon = 1e-15);
        assert_eq!(p.value(2.4), 0.0);
        assert!(p.value(1.8) > 0.0 && p.value(1.8) < PI - 1.2);
        assert!(TwistProfile::collar(2.0).is_err());
        assert!(TwistProfile::collar(-0.1).is_err());
    }

    #[test]
    fn plateau_profile_shape() {
        let p = TwistProfile::plateau(0.5, 1.5).unwrap();
        assert_eq!(p.value(0.0), PI);
        assert_eq!(p.value(0.5), PI);
        assert_eq!(p.value(1.5), 0.0);
        assert!(p.value(1.0) > 0.0 && p.value(1.0) < PI);
    }

    fn sample_set(seed: u64, count: usize, speeds: (f64, f64)) -> Vec<Covector> {
        let mut s = Sampler::new(seed);
        (0..count).map(|_| s.covector(speeds)).collect()
    }

    #[test]
    fn twist_identity_outside_support_is_exact() {
        let m = ModelTwist::new(TwistProfile::staircase(1).unwrap());
        for xi in sample_set(5, 32, (2.0 * PI, 9.0)) {
            let out = m.apply(&xi);
            assert_eq!(out.u(), xi.u());
            assert_eq!(out.v(), xi.v());
        }
    }

    #[test]
    fn twist_fixes_zero_section_antipodally() {
        let m = ModelTwist::new(TwistProfile::staircase(2).unwrap());
        let xi = Covector::new(Vector3::new(0.0, 0.6, 0.8), Vector3::zeros()).unwrap();
        let out = m.apply(&xi);
        assert_eq!(out.u(), -xi.u());
        assert!(out.is_zero_section());
        assert_eq!(m.power(2, &xi).u(), xi.u());
        assert_eq!(m.power(-3, &xi).u(), -xi.u());
    }

    #[test]
    fn squared_twist_is_antipodal_on_the_linear_region() {
        // ψ(π) = π/2 for the r = 1 staircase, so two applications rotate by
        // π: the antipodal image on the orbit.
        let m = ModelTwist::new(TwistProfile::staircase(1).unwrap());
        let mut s = Sampler::new(9);
        for _ in 0..16 {
            let xi = s.covector((PI, PI));
            let twice = m.apply(&m.apply(&xi));
            assert!((twice.u() + xi.u()).norm() < 1e-9);
            assert!((twice.v() + xi.v()).norm() < 1e-9);
        }
    }

    #[test]
    fn twist_powers_compose_and_invert() {
        let m = ModelTwist::new(TwistProfile::staircase(2).unwrap());
        let mut s = Sampler::new(21);
        for _ in 0..16 {
            let xi = s.covector((0.3, 5.0));
            assert_eq!(m.power(0, &xi), xi);
            let back = m.power(-1, &m.apply(&xi));
            assert!(back.distance(&xi) < 1e-10);
            // Full staircase unwinding: 2r twists on the linear region act
            // as the time-(−1) flow.
            let slow = s.covector((0.1, PI));
            let unwound = m.power(4, &slow);
            let reference = geodesic_flow(&slow, -1.0);
            assert!(unwound.distance(&reference) < 1e-9, "speed {}", slow.speed());
        }
    }

    #[test]
    fn twist_is_symplectic_and_controls_detect_scaling() {
        let samples = {
            let mut v = sample_set(31, 160, (1e-3, 7.0));
            v.extend(sample_set(32, 40, (1e-4, 1e-3)));
            v
        };
        let identity = check_symplectic(&|xi| Ok(*xi), &samples, 1e-4).unwrap();
        assert!(identity.max_defect < 1e-12);
        let m = ModelTwist::new(TwistProfile::staircase(1).unwrap());
        let twist_check = check_symplectic(&|xi| Ok(m.apply(xi)), &samples, 1e-4).unwrap();
        assert!(twist_check.max_defect < 1e-6, "defect {}", twist_check.max_defect);
        assert_eq!(twist_check.skipped, 0);
        // Fiber doubling scales η and must be flagged.
        let doubled =
            check_symplectic(&|xi| Covector::new(xi.u(), xi.v() * 2.0), &samples, 1e-4).unwrap();
        assert!(doubled.max_defect > 0.5, "defect {}", doubled.max_defect);
    }

    #[test]
    fn isotopy_stage_endpoints() {
        let m = ModelTwist::new(TwistProfile::plateau(0.6, 2.0).unwrap());
        let mut s = Sampler::new(44);
        for _ in 0..24 {
            let xi = s.covector((0.05, 2.5));
            let start = square_isotopy_stage(&m, 0.0, 1.0, &xi).unwrap();
            let squared = m.apply(&m.apply(&xi));
            assert!(start.distance(&squared) < 1e-9);
            let end = square_isotopy_stage(&m, 1.0, 0.0, &xi).unwrap();
            assert!(end.distance(&xi) < 1e-12);
            // Arbitrary stages fix everything outside the support.
            let far = s.covector((2.0, 6.0));
            let stage = square_isotopy_stage(&m, 0.37, 0.81, &far).unwrap();
            assert!(stage.distance(&far) < 1e-12);
        }
        let zero = Covector::new(Vector3::x(), Vector3::zeros()).unwrap();
        assert!(matches!(
            square_isotopy_stage(&m, 0.0, 1.0, &zero),
            Err(Error::DegenerateAxis { .. })
        ));
    }

    #[test]
    fn isotopy_stages_are_locally_regular() {
        let m = ModelTwist::new(TwistProfile::plateau(0.6, 2.0).unwrap());
        let mut s = Sampler::new(45);
        for _ in 0..100 {
            let xi = s.covector((0.1, 2.5));
            let (sp, sc) = (s.uniform(0.0, 1.0), s.uniform(0.0, 1.0));
            let stage = move |p: &Covector| square_isotopy_stage(&m, sp, sc, p);
            let det = tangent_jacobian_det(&stage, &xi, 1e-4).unwrap();
            assert!(det.abs() > 1e-3, "det {det} at stage ({sp}, {sc})");
        }
    }

    #[test]
    fn graph_formula_values() {
        let m = ModelTwist::new(TwistProfile::collar(1.2).unwrap());
        let (p, q) = twisted_fiber_graph(&m, Vector2::new(1.0, 0.0)).unwrap();
        assert_eq!(p, Vector2::new(1.0, 0.0));
        assert_abs_diff_eq!(q.x, -(PI - 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(q.y, 0.0, epsilon = 1e-15);
        // Beyond the support the fiber is untouched.
        let far = Vector2::new(2.7, 1.0);
        let (_, q) = twisted_fiber_graph(&m, far).unwrap();
        assert_eq!(q, Vector2::zeros());
        assert!(twisted_fiber_graph(&m, Vector2::zeros()).is_err());
        // Antipodal chart: at |p| = ε the graph meets the plane {(p, −p)}.
        let pe = Vector2::new(1.2, 0.0);
        let (_, qe) = twisted_fiber_graph_antipodal(&m, pe).unwrap();
        assert!((qe + pe).norm() < 1e-12);
    }

    /// Pulling a fiber point back through the twist and reading it in the
    /// chart at the center lands on the graph formula.
    #[test]
    fn chart_coherence_of_the_dragged_fiber() {
        let m = ModelTwist::new(TwistProfile::collar(1.2).unwrap());
        let chart = crate::sphere::ExpChart::standard();
        let x = chart.center();
        let mut s = Sampler::new(77);
        for _ in 0..100 {
            let a = s.uniform(-1.0, 1.0);
            let b = s.uniform(-1.0, 1.0);
            let scale = s.uniform(0.05, PI - 0.05) / (a * a + b * b).sqrt().max(1e-9);
            let w = Vector3::new(0.0, a, b) * scale;
            let fiber_point = Covector::new(x, w).unwrap();
            let pulled = m.power(-1, &fiber_point);
            let (p, q) = chart.from_cotangent(&pulled).unwrap();
            let (_, q_graph) = twisted_fiber_graph(&m, p).unwrap();
            assert!((q - q_graph).norm() < 1e-6, "defect {}", (q - q_graph).norm());
            assert_abs_diff_eq!(p.norm(), w.norm(), epsilon = 1e-9);
        }
    }
}
