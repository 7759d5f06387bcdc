//! Swept Lagrangian handles, the figure-eight immersion, branched-cover
//! lifts, chain configurations of spheres, and the graph identities that
//! tie the handle model to the twist model.
//!
//! Three local models meet here. A plane curve swept by the diagonal
//! circle action of ℝ⁴ yields a Lagrangian annulus (the handle); the sweep
//! identifies (y, t) with (−y, t + π), so embeddedness of the surface
//! reduces to curve-level scans. A figure-eight immersion of S² into ℂ²
//! misses the branch curve z₁² + z₂² = ½ of the covering
//! z₁² + z₂² = z₃^{m+1} + ½ and therefore lifts; the lifts and their deck
//! translates intersect pairwise like a chain. Finally, the handle curve
//! built from a collar twist profile reproduces the chart graphs of the
//! twisted fiber, which is the formula-level content of the surgery
//! description of the twist.

use nalgebra::{DMatrix, DVector, Matrix4, Vector2, Vector3};
use num_complex::Complex64;

use crate::error::Error;
use crate::numeric;
use crate::sampling::Sampler;
use crate::sphere::ExpChart;
use crate::twist::{twisted_fiber_graph, twisted_fiber_graph_antipodal, ModelTwist};
use crate::Result;

const TAU: f64 = std::f64::consts::TAU;
const PI: f64 = std::f64::consts::PI;

/// Minimal |z₁² + z₂² − ½| before winding and root tracking are refused.
const BRANCH_PROXIMITY: f64 = 1e-3;

// ---------------------------------------------------------------------------
// Plane curves and swept handles
// ---------------------------------------------------------------------------

/// Smoothed corner joining the positive horizontal axis to the negative
/// vertical axis: c(t) = (a(t), −a(−t)) where a ramps from 0 to the
/// identity across [−ρ, ρ]. The ramp slope is a symmetric smoothstep, so
/// a(ρ) = ρ holds exactly and the two axis tails are met without a jump in
/// any derivative.
#[derive(Debug, Clone, Copy)]
pub struct ProfileCurve {
    rho: f64,
}

impl ProfileCurve {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid("blend radius must be positive"));
        }
        Ok(ProfileCurve { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Every point off the axes lies within this radius of the origin.
    pub fn compact_support_radius(&self) -> f64 {
        self.rho * std::f64::consts::SQRT_2
    }

    /// Antiderivative of the blended slope: 0 for t ≤ −ρ, t for t ≥ ρ.
    pub fn ramp(&self, t: f64) -> f64 {
        let r = self.rho;
        if t <= -r {
            0.0
        } else if t >= r {
            t
        } else {
            numeric::simpson(|x| numeric::smoothstep((x + r) / (2.0 * r)), -r, t, 512)
        }
    }

    /// Curve point (a(t), −a(−t)); the first component is nonnegative and
    /// the second nonpositive, which rules out antipodal pairs outright.
    pub fn point(&self, t: f64) -> [f64; 2] {
        [self.ramp(t), -self.ramp(-t)]
    }
}

/// One sample of the circle sweep of a plane point.
pub fn sweep_point(y: &[f64; 2], t: f64) -> [f64; 4] {
    let (s, c) = t.sin_cos();
    [y[0] * c, y[0] * s, y[1] * c, y[1] * s]
}

/// Sampled swept surface: `grid[i][j]` sits over curve sample i and sweep
/// angle 2πj/nt. The raw grid is stored so that controls can inject
/// non-sweep data.
#[derive(Debug, Clone)]
pub struct HandlePatch {
    curve: Vec<[f64; 2]>,
    grid: Vec<Vec<[f64; 4]>>,
}

impl HandlePatch {
    /// Honest sweep of a sampled curve.
    pub fn from_curve_samples(curve: Vec<[f64; 2]>, nt: usize) -> Result<Self> {
        if curve.len() < 4 || nt < 8 {
            return Err(Error::invalid("patch needs at least 4 curve samples and 8 angles"));
        }
        let grid = curve
            .iter()
            .map(|y| (0..nt).map(|j| sweep_point(y, TAU * j as f64 / nt as f64)).collect())
            .collect();
        Ok(HandlePatch { curve, grid })
    }

    /// Uniform parameter sampling of a smoothed corner over [−span, span].
    pub fn from_profile(curve: &ProfileCurve, span: f64, ns: usize, nt: usize) -> Result<Self> {
        if !(span > curve.rho()) {
            return Err(Error::invalid("span must cover the blend zone"));
        }
        if ns < 4 {
            return Err(Error::invalid("patch needs at least 4 curve samples"));
        }
        let pts = (0..ns)
            .map(|i| {
                let t = -span + 2.0 * span * i as f64 / (ns - 1) as f64;
                curve.point(t)
            })
            .collect();
        Self::from_curve_samples(pts, nt)
    }

    /// Raw grid constructor for negative controls; rows must match the
    /// curve samples in count.
    pub fn from_grid(curve: Vec<[f64; 2]>, grid: Vec<Vec<[f64; 4]>>) -> Result<Self> {
        if grid.len() != curve.len() || curve.len() < 4 {
            return Err(Error::invalid("grid rows must match curve samples"));
        }
        let nt = grid.first().map(|r| r.len()).unwrap_or(0);
        if nt < 8 || grid.iter().any(|r| r.len() != nt) {
            return Err(Error::invalid("grid must be rectangular with at least 8 angles"));
        }
        Ok(HandlePatch { curve, grid })
    }

    pub fn curve(&self) -> &[[f64; 2]] {
        &self.curve
    }

    pub fn grid(&self) -> &[Vec<[f64; 4]>] {
        &self.grid
    }
}

fn omega_r4(u: &[f64; 4], v: &[f64; 4]) -> f64 {
    u[0] * v[2] - u[2] * v[0] + u[1] * v[3] - u[3] * v[1]
}

/// Max |ω(∂s, ∂t)| over the grid, ω = dx₁∧dx₃ + dx₂∧dx₄, evaluated on unit
/// finite-difference tangents so the defect is scale free. Interior curve
/// samples use central differences, the ends one-sided ones; the sweep
/// angle is periodic.
pub fn handle_lagrangian_defect(patch: &HandlePatch) -> Result<f64> {
    let g = &patch.grid;
    let (ns, nt) = (g.len(), g[0].len());
    let diff = |a: &[f64; 4], b: &[f64; 4]| {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
    };
    let unit = |w: [f64; 4]| -> Result<[f64; 4]> {
        let n = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2] + w[3] * w[3]).sqrt();
        if n < 1e-14 {
            return Err(Error::Degenerate { what: "handle grid cell".into(), cond: n });
        }
        Ok([w[0] / n, w[1] / n, w[2] / n, w[3] / n])
    };
    let mut worst = 0.0f64;
    for i in 0..ns {
        for j in 0..nt {
            let du = if i == 0 {
                diff(&g[1][j], &g[0][j])
            } else if i == ns - 1 {
                diff(&g[ns - 1][j], &g[ns - 2][j])
            } else {
                diff(&g[i + 1][j], &g[i - 1][j])
            };
            let dv = diff(&g[i][(j + 1) % nt], &g[i][(j + nt - 1) % nt]);
            let w = omega_r4(&unit(du)?, &unit(dv)?).abs();
            worst = worst.max(w);
        }
    }
    Ok(worst)
}

/// Verdict of the self-intersection scan.
#[derive(Debug, Clone)]
pub struct EmbeddednessScan {
    pub embedded: bool,
    /// Colliding pair of curve points when the verdict is negative.
    pub witness: Option<([f64; 2], [f64; 2])>,
    /// Smallest distance found by the scans.
    pub margin: f64,
    /// Largest gap between consecutive curve samples.
    pub spacing: f64,
}

/// Self-intersection scan of the swept surface at curve resolution. The
/// sweep sends (y, t) and (−y, t + π) to the same point and collapses
/// y = 0 to the origin for every angle, so surface collisions are exactly
/// curve collisions, antipodal pairs, and origin passages; the scan covers
/// all three. Non-neighboring means at least four parameter steps apart.
/// A margin between half and one and a half sample spacings is refused as
/// unresolved rather than guessed.
pub fn handle_embeddedness(patch: &HandlePatch) -> Result<EmbeddednessScan> {
    let c = &patch.curve;
    let n = c.len();
    let d2 = |a: &[f64; 2], b: &[f64; 2]| {
        let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
        dx * dx + dy * dy
    };
    let spacing = (0..n - 1).map(|i| d2(&c[i], &c[i + 1]).sqrt()).fold(0.0f64, f64::max);
    let mut margin = f64::INFINITY;
    let mut witness = None;
    for i in 0..n {
        for j in i..n {
            if j - i >= 4 {
                let d = d2(&c[i], &c[j]).sqrt();
                if d < margin {
                    margin = d;
                    witness = Some((c[i], c[j]));
                }
            }
            let anti = [-c[j][0], -c[j][1]];
            let d = d2(&c[i], &anti).sqrt();
            if d < margin {
                margin = d;
                witness = Some((c[i], c[j]));
            }
        }
    }
    if margin >= 1.5 * spacing {
        Ok(EmbeddednessScan { embedded: true, witness: None, margin, spacing })
    } else if margin < 0.5 * spacing {
        Ok(EmbeddednessScan { embedded: false, witness, margin, spacing })
    } else {
        Err(Error::Unresolved(format!(
            "self-distance {margin:.3e} is within the sampling band of {spacing:.3e}"
        )))
    }
}

// ---------------------------------------------------------------------------
// The figure-eight immersion
// ---------------------------------------------------------------------------

/// f(t₁, t₂, t₃) = (t₂(1 + it₁), t₃(1 + it₁)) on the unit sphere.
pub fn figure_eight(t: &Vector3<f64>) -> Result<[Complex64; 2]> {
    if (t.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("figure-eight input must lie on the unit sphere"));
    }
    let w = Complex64::new(1.0, t.x);
    Ok([w * t.y, w * t.z])
}

/// z₁² + z₂² − ½, whose zero set is the branch curve.
pub fn branch_value(z: &[Complex64; 2]) -> Complex64 {
    z[0] * z[0] + z[1] * z[1] - Complex64::new(0.5, 0.0)
}

/// Distance proxy |z₁² + z₂² − ½| from the branch curve.
pub fn branch_margin(z: &[Complex64; 2]) -> f64 {
    branch_value(z).norm()
}

/// Deterministic spiral covering of the unit sphere.
pub fn sphere_samples(n: usize) -> Vec<Vector3<f64>> {
    let golden = PI * (3.0 - 5.0f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let th = golden * k as f64;
            Vector3::new(z, r * th.cos(), r * th.sin())
        })
        .collect()
}

fn unit_frame(t: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let a = if t.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e = (a - t * t.dot(&a)).normalize();
    (e, t.cross(&e))
}

fn omega0_c2(u: &[Complex64; 2], v: &[Complex64; 2]) -> f64 {
    (u[0].conj() * v[0] + u[1].conj() * v[1]).im
}

/// Finite-difference scan of the immersion over a spiral sample set.
#[derive(Debug, Clone, Copy)]
pub struct FigureEightScan {
    /// Max |f*ω₀| on unit tangent pairs, ω₀ the standard form of ℂ².
    pub lagrangian_defect: f64,
    /// Smallest singular value of the differential over the samples.
    pub min_immersion_sv: f64,
    /// Smallest |z₁² + z₂² − ½| over the image.
    pub min_branch_margin: f64,
    /// |f(±1, 0, 0)|, the residual at the double point.
    pub double_point_defect: f64,
}

pub fn figure_eight_scan(samples: usize) -> Result<FigureEightScan> {
    if samples < 16 {
        return Err(Error::invalid("scan needs at least 16 samples"));
    }
    let h = 1e-5;
    let mut lag = 0.0f64;
    let mut sv = f64::INFINITY;
    let mut branch = f64::INFINITY;
    for t in sphere_samples(samples) {
        let (e, f2) = unit_frame(&t);
        let circle = |dir: &Vector3<f64>, s: f64| {
            let p = t * s.cos() + dir * s.sin();
            figure_eight(&p).expect("great-circle points stay on the sphere")
        };
        let fd = |dir: &Vector3<f64>| {
            let plus = circle(dir, h);
            let minus = circle(dir, -h);
            [(plus[0] - minus[0]) / (2.0 * h), (plus[1] - minus[1]) / (2.0 * h)]
        };
        let (d1, d2) = (fd(&e), fd(&f2));
        let (n1, n2) = (
            (d1[0].norm_sqr() + d1[1].norm_sqr()).sqrt(),
            (d2[0].norm_sqr() + d2[1].norm_sqr()).sqrt(),
        );
        lag = lag.max((omega0_c2(&d1, &d2) / (n1 * n2)).abs());
        let j = DMatrix::from_row_slice(
            4,
            2,
            &[d1[0].re, d2[0].re, d1[0].im, d2[0].im, d1[1].re, d2[1].re, d1[1].im, d2[1].im],
        );
        sv = sv.min(numeric::smallest_singular_value(&j));
        branch = branch.min(branch_margin(&figure_eight(&t)?));
    }
    let double = figure_eight(&Vector3::new(1.0, 0.0, 0.0))?;
    let double_neg = figure_eight(&Vector3::new(-1.0, 0.0, 0.0))?;
    let dp = (double[0].norm_sqr() + double[1].norm_sqr()).sqrt()
        + (double_neg[0].norm_sqr() + double_neg[1].norm_sqr()).sqrt();
    Ok(FigureEightScan {
        lagrangian_defect: lag,
        min_immersion_sv: sv,
        min_branch_margin: branch,
        double_point_defect: dp,
    })
}

// ---------------------------------------------------------------------------
// Linking numbers and the branched cover
// ---------------------------------------------------------------------------

/// Signed turns of z₁² + z₂² − ½ around the origin along a sampled loop,
/// treated cyclically. The sign is fixed so that continuing a fiber
/// coordinate of the covering along a loop of linking number ℓ multiplies
/// it by the deck factor ℓ times; with that orientation the loop swept by
/// the figure-eight along a meridian links once.
pub fn linking_number(points: &[[Complex64; 2]]) -> Result<i64> {
    if points.len() < 3 {
        return Err(Error::invalid("winding needs at least 3 loop samples"));
    }
    let g: Vec<Complex64> = points.iter().map(branch_value).collect();
    if let Some(bad) = g.iter().map(|v| v.norm()).reduce(f64::min) {
        if bad < BRANCH_PROXIMITY {
            return Err(Error::Proximity { distance: bad });
        }
    }
    let mut total = 0.0;
    for k in 0..g.len() {
        let step = (g[(k + 1) % g.len()] / g[k]).arg();
        if step.abs() > 2.5 {
            return Err(Error::Resolution {
                what: format!("argument step {step:.3} too coarse for winding"),
                t: k as f64 / g.len() as f64,
            });
        }
        total += step;
    }
    let turns = -total / TAU;
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.1 {
        return Err(Error::Resolution {
            what: format!("winding drift {:.3e} above 0.1", (turns - rounded).abs()),
            t: 1.0,
        });
    }
    Ok(rounded as i64)
}

/// The covering z₁² + z₂² = z₃^{m+1} + ½ of ℂ², branched over the curve
/// z₁² + z₂² = ½, with cyclic covering group of order m + 1.
#[derive(Debug, Clone, Copy)]
pub struct BranchedCover {
    m: usize,
    zeta: Complex64,
}

impl BranchedCover {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 || m > 32 {
            return Err(Error::invalid("chain length m must be between 1 and 32"));
        }
        let order = (m + 1) as f64;
        Ok(BranchedCover { m, zeta: Complex64::from_polar(1.0, -TAU / order) })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of sheets, m + 1.
    pub fn order(&self) -> usize {
        self.m + 1
    }

    /// |z₁² + z₂² − z₃^{m+1} − ½|.
    pub fn rule_residual(&self, z: &[Complex64; 3]) -> f64 {
        (z[0] * z[0] + z[1] * z[1] - z[2].powu(self.order() as u32) - Complex64::new(0.5, 0.0))
            .norm()
    }

    /// Deck factor on the fiber coordinate: the primitive root of unity
    /// picked up by continuing a lift around a loop of linking number one.
    pub fn deck_factor(&self) -> Complex64 {
        self.zeta
    }

    /// Generator of the covering group: rotates z₃ by the deck factor.
    pub fn deck(&self, z: &[Complex64; 3]) -> [Complex64; 3] {
        [z[0], z[1], z[2] * self.zeta]
    }

    /// k-fold deck map, reduced modulo the order.
    pub fn deck_pow(&self, z: &[Complex64; 3], k: usize) -> [Complex64; 3] {
        let k = k % self.order();
        let rot = Complex64::from_polar(1.0, -TAU * k as f64 / self.order() as f64);
        [z[0], z[1], z[2] * rot]
    }

    /// All fiber points over a base point: the (m+1)-th roots of
    /// z₁² + z₂² − ½.
    pub fn fiber_roots(&self, w: &[Complex64; 2]) -> Vec<Complex64> {
        let g = branch_value(w);
        let principal = g.powf(1.0 / self.order() as f64);
        (0..self.order())
            .map(|k| principal * Complex64::from_polar(1.0, TAU * k as f64 / self.order() as f64))
            .collect()
    }
}

/// Continuously tracked lift of a base path.
#[derive(Debug, Clone)]
pub struct LiftedPath {
    pub points: Vec<[Complex64; 3]>,
    pub params: Vec<f64>,
}

impl LiftedPath {
    pub fn start(&self) -> &[Complex64; 3] {
        self.points.first().expect("lift has at least the seed")
    }

    pub fn end(&self) -> &[Complex64; 3] {
        self.points.last().expect("lift has at least the seed")
    }
}

/// Tracks z₃ = (z₁² + z₂² − ½)^{1/(m+1)} along a path by stepwise nearest
/// root selection. When the nearest and second-nearest sheets come within
/// a factor 0.4 of each other the step is halved; below step 10⁻¹² the
/// tracking is reported unresolved. The endpoint must satisfy the
/// hypersurface rule to 10⁻⁸.
pub fn lift_path(
    cover: &BranchedCover,
    path: impl Fn(f64) -> [Complex64; 2],
    seed: Complex64,
) -> Result<LiftedPath> {
    let w0 = path(0.0);
    let g0 = branch_value(&w0);
    if g0.norm() < BRANCH_PROXIMITY {
        return Err(Error::Proximity { distance: g0.norm() });
    }
    if (seed.powu(cover.order() as u32) - g0).norm() > 1e-8 * g0.norm().max(1.0) {
        return Err(Error::invalid("seed does not satisfy the rule at the path start"));
    }
    let base_step: f64 = 1.0 / 256.0;
    let mut step = base_step;
    let mut s = 0.0;
    let mut z3 = seed;
    let mut points = vec![[w0[0], w0[1], seed]];
    let mut params = vec![0.0];
    while s < 1.0 {
        let s_next = (s + step).min(1.0);
        let w = path(s_next);
        let g = branch_value(&w);
        if g.norm() < BRANCH_PROXIMITY {
            return Err(Error::Proximity { distance: g.norm() });
        }
        let mut best = (f64::INFINITY, Complex64::new(0.0, 0.0));
        let mut second = f64::INFINITY;
        for root in cover.fiber_roots(&w) {
            let d = (root - z3).norm();
            if d < best.0 {
                second = best.0;
                best = (d, root);
            } else if d < second {
                second = d;
            }
        }
        if best.0 < 0.4 * second {
            z3 = best.1;
            s = s_next;
            points.push([w[0], w[1], z3]);
            params.push(s);
            step = (step * 1.5).min(base_step);
        } else {
            step *= 0.5;
            if step < 1e-12 {
                return Err(Error::Unresolved(format!(
                    "sheet tracking ambiguous near s = {s:.6}"
                )));
            }
        }
    }
    let end = points.last().expect("at least the seed");
    let residual = cover.rule_residual(end);
    if residual > 1e-8 {
        return Err(Error::Unresolved(format!("lift endpoint off the rule by {residual:.3e}")));
    }
    Ok(LiftedPath { points, params })
}

/// Deck exponent picked up by a lifted loop: end z₃ = deck^k(start z₃).
pub fn monodromy_exponent(cover: &BranchedCover, lift: &LiftedPath) -> Result<usize> {
    let (a, b) = (lift.start(), lift.end());
    if (a[0] - b[0]).norm() + (a[1] - b[1]).norm() > 1e-9 {
        return Err(Error::invalid("monodromy needs a closed base loop"));
    }
    let ratio = b[2] / a[2];
    let order = cover.order() as f64;
    let k = (ratio.arg() / (-TAU / order)).round().rem_euclid(order) as usize % cover.order();
    let expected = Complex64::from_polar(1.0, -TAU * k as f64 / order);
    if (ratio - expected).norm() > 1e-6 {
        return Err(Error::Resolution {
            what: format!("deck ratio {ratio} is not a root of unity"),
            t: 1.0,
        });
    }
    Ok(k)
}

// ---------------------------------------------------------------------------
// Chains of lifted spheres
// ---------------------------------------------------------------------------

/// Shared lift data for one covering: the fiber coordinate of the lifted
/// figure-eight depends only on the first sphere coordinate, so one tracked
/// table serves every sample and every deck translate.
pub struct AmAtlas {
    cover: BranchedCover,
    table: Vec<Complex64>,
}

/// (1 + it₁)²(1 − t₁²) − ½, the branch value along the figure-eight.
fn axis_branch_value(t1: f64) -> Complex64 {
    let w = Complex64::new(1.0, t1);
    w * w * (1.0 - t1 * t1) - Complex64::new(0.5, 0.0)
}

const ATLAS_STEPS: usize = 4096;

impl AmAtlas {
    pub fn new(m: usize) -> Result<Self> {
        let cover = BranchedCover::new(m)?;
        let mut table = Vec::with_capacity(ATLAS_STEPS + 1);
        let mut z3 = axis_branch_value(-1.0).powf(1.0 / cover.order() as f64);
        table.push(z3);
        for i in 1..=ATLAS_STEPS {
            let t1 = -1.0 + 2.0 * i as f64 / ATLAS_STEPS as f64;
            let g = axis_branch_value(t1);
            let mut best = (f64::INFINITY, z3);
            let mut second = f64::INFINITY;
            let principal = g.powf(1.0 / cover.order() as f64);
            for k in 0..cover.order() {
                let root =
                    principal * Complex64::from_polar(1.0, TAU * k as f64 / cover.order() as f64);
                let d = (root - z3).norm();
                if d < best.0 {
                    second = best.0;
                    best = (d, root);
                } else if d < second {
                    second = d;
                }
            }
            if best.0 >= 0.4 * second {
                return Err(Error::Unresolved(format!(
                    "fiber table ambiguous at t1 = {t1:.6}"
                )));
            }
            z3 = best.1;
            table.push(z3);
        }
        Ok(AmAtlas { cover, table })
    }

    pub fn cover(&self) -> &BranchedCover {
        &self.cover
    }

    /// Continuous branch of (axis branch value)^{1/(m+1)} seeded at
    /// t₁ = −1 with the principal root.
    pub fn fiber_coordinate(&self, t1: f64) -> Complex64 {
        let t1 = t1.clamp(-1.0, 1.0);
        let x = (t1 + 1.0) / 2.0 * ATLAS_STEPS as f64;
        let i = (x.floor() as usize).min(ATLAS_STEPS - 1);
        let predict = self.table[i] + (self.table[i + 1] - self.table[i]) * (x - i as f64);
        // Snap the interpolant to the exact sheet.
        let g = axis_branch_value(t1);
        let principal = g.powf(1.0 / self.cover.order() as f64);
        let mut best = (f64::INFINITY, predict);
        for k in 0..self.cover.order() {
            let root = principal
                * Complex64::from_polar(1.0, TAU * k as f64 / self.cover.order() as f64);
            let d = (root - predict).norm();
            if d < best.0 {
                best = (d, root);
            }
        }
        best.1
    }

    /// Point of the k-th sphere of the chain over a unit vector, k from 1
    /// to m. The input is projected to the sphere before evaluation.
    pub fn point(&self, k: usize, t: &Vector3<f64>) -> Result<[Complex64; 3]> {
        if k == 0 || k > self.cover.m() {
            return Err(Error::invalid("sphere index out of range"));
        }
        let t = t.normalize();
        let f = figure_eight(&t)?;
        let z = [f[0], f[1], self.fiber_coordinate(t.x)];
        Ok(self.cover.deck_pow(&z, k - 1))
    }
}

fn flatten6(z: &[Complex64; 3]) -> [f64; 6] {
    [z[0].re, z[0].im, z[1].re, z[1].im, z[2].re, z[2].im]
}

fn dist6(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    (0..6).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum::<f64>().sqrt()
}

/// Sampled chain of spheres with pairwise intersection counts.
pub struct AmConfiguration {
    pub m: usize,
    pub spheres: Vec<Vec<[Complex64; 3]>>,
    /// counts[i][j] for distinct i, j; the diagonal stays empty.
    pub counts: Vec<Vec<Option<usize>>>,
    /// Smallest principal angle between tangent planes over all located
    /// intersection points, in radians.
    pub min_transversality: Option<f64>,
}

/// Proximity radius for the coarse pair scan.
const COARSE_RADIUS: f64 = 0.6;
/// Two refined intersection points closer than this count as one.
const DISTINCT_RADIUS: f64 = 1e-2;

fn fd_sphere_tangents(
    atlas: &AmAtlas,
    k: usize,
    t: &Vector3<f64>,
    h: f64,
) -> Result<([Complex64; 3], [Complex64; 3])> {
    let (e, f2) = unit_frame(t);
    let eval = |dir: &Vector3<f64>, s: f64| -> Result<[Complex64; 3]> {
        atlas.point(k, &(t * s.cos() + dir * s.sin()))
    };
    let fd = |dir: &Vector3<f64>| -> Result<[Complex64; 3]> {
        let plus = eval(dir, h)?;
        let minus = eval(dir, -h)?;
        Ok([
            (plus[0] - minus[0]) / (2.0 * h),
            (plus[1] - minus[1]) / (2.0 * h),
            (plus[2] - minus[2]) / (2.0 * h),
        ])
    };
    Ok((fd(&e)?, fd(&f2)?))
}

/// Smallest principal angle between the tangent planes of spheres ki and
/// kj at parameters ta, tb.
fn tangent_plane_angle(
    atlas: &AmAtlas,
    ki: usize,
    kj: usize,
    ta: &Vector3<f64>,
    tb: &Vector3<f64>,
) -> Result<f64> {
    let basisify = |d: ([Complex64; 3], [Complex64; 3])| {
        let (u, v) = (flatten6(&d.0), flatten6(&d.1));
        let mut m = DMatrix::zeros(6, 2);
        for r in 0..6 {
            m[(r, 0)] = u[r];
            m[(r, 1)] = v[r];
        }
        numeric::orthonormalize_columns(&m)
    };
    let qa = basisify(fd_sphere_tangents(atlas, ki, ta, 1e-5)?);
    let qb = basisify(fd_sphere_tangents(atlas, kj, tb, 1e-5)?);
    let overlap = qa.transpose() * qb;
    let sigma = numeric::singular_values_sorted(&overlap);
    let cosine = sigma.first().copied().unwrap_or(0.0).min(1.0);
    Ok(cosine.acos())
}

struct PairCount {
    count: usize,
    min_angle: Option<f64>,
}

fn count_pair_intersections(
    atlas: &AmAtlas,
    ki: usize,
    kj: usize,
    ts: &[Vector3<f64>],
    flat_i: &[[f64; 6]],
    flat_j: &[[f64; 6]],
) -> Result<PairCount> {
    // Coarse proximity pairs.
    let mut seeds: Vec<(usize, usize, f64)> = Vec::new();
    for a in 0..flat_i.len() {
        for b in 0..flat_j.len() {
            let d = dist6(&flat_i[a], &flat_j[b]);
            if d < COARSE_RADIUS {
                seeds.push((a, b, d));
            }
        }
    }
    if seeds.is_empty() {
        return Ok(PairCount { count: 0, min_angle: None });
    }
    // Cluster seeds by image location, keeping the best seed per cluster.
    let mut clusters: Vec<(usize, usize, f64)> = Vec::new();
    let mut reps: Vec<[f64; 6]> = Vec::new();
    for (a, b, d) in seeds {
        let z = flat_i[a];
        if let Some(idx) = reps.iter().position(|r| dist6(r, &z) < 0.5) {
            if d < clusters[idx].2 {
                clusters[idx] = (a, b, d);
            }
        } else {
            reps.push(z);
            clusters.push((a, b, d));
        }
    }
    let mut refined: Vec<[f64; 6]> = Vec::new();
    let mut min_angle: Option<f64> = None;
    for (a, b, _) in clusters {
        let (ta, tb) = (ts[a], ts[b]);
        match refine_intersection(atlas, ki, kj, &ta, &tb)? {
            Some((point, sa, sb)) => {
                let angle = tangent_plane_angle(atlas, ki, kj, &sa, &sb)?;
                min_angle = Some(min_angle.map_or(angle, |m: f64| m.min(angle)));
                let z = flatten6(&point);
                if !refined.iter().any(|r| dist6(r, &z) < DISTINCT_RADIUS) {
                    refined.push(z);
                }
            }
            None => {}
        }
    }
    // Distinct points must be well separated from each other for the
    // clustering radius to be meaningful.
    for x in 0..refined.len() {
        for y in x + 1..refined.len() {
            let d = dist6(&refined[x], &refined[y]);
            if d < 10.0 * DISTINCT_RADIUS {
                return Err(Error::Unresolved(format!(
                    "intersection points {d:.3e} apart are too close to count"
                )));
            }
        }
    }
    Ok(PairCount { count: refined.len(), min_angle })
}

/// Gauss-Newton refinement of a near-intersection of spheres ki and kj.
/// Returns the intersection point and the refined sphere parameters, or
/// None when the residual stalls far from zero (no intersection nearby).
#[allow(clippy::type_complexity)]
fn refine_intersection(
    atlas: &AmAtlas,
    ki: usize,
    kj: usize,
    ta: &Vector3<f64>,
    tb: &Vector3<f64>,
) -> Result<Option<([Complex64; 3], Vector3<f64>, Vector3<f64>)>> {
    let (ea1, ea2) = unit_frame(ta);
    let (eb1, eb2) = unit_frame(tb);
    let place = |t0: &Vector3<f64>, e1: &Vector3<f64>, e2: &Vector3<f64>, u: f64, v: f64| {
        (t0 + e1 * u + e2 * v).normalize()
    };
    let residual = |x: &DVector<f64>| -> Result<DVector<f64>> {
        let pa = atlas.point(ki, &place(ta, &ea1, &ea2, x[0], x[1]))?;
        let pb = atlas.point(kj, &place(tb, &eb1, &eb2, x[2], x[3]))?;
        let (fa, fb) = (flatten6(&pa), flatten6(&pb));
        Ok(DVector::from_iterator(6, (0..6).map(|r| fa[r] - fb[r])))
    };
    let mut x = DVector::zeros(4);
    let mut r = residual(&x)?;
    let fd = 1e-6;
    for _ in 0..60 {
        if r.norm() < 1e-11 {
            break;
        }
        let mut jac = DMatrix::zeros(6, 4);
        for c in 0..4 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += fd;
            xm[c] -= fd;
            let (rp, rm) = (residual(&xp)?, residual(&xm)?);
            for row in 0..6 {
                jac[(row, c)] = (rp[row] - rm[row]) / (2.0 * fd);
            }
        }
        let jtj = jac.transpose() * &jac + DMatrix::identity(4, 4) * 1e-12;
        let rhs = -(jac.transpose() * &r);
        let Some(delta) = jtj.lu().solve(&rhs) else { break };
        let mut alpha = 1.0;
        let mut advanced = false;
        for _ in 0..10 {
            let candidate = &x + &delta * alpha;
            let rc = residual(&candidate)?;
            if rc.norm() < r.norm() {
                x = candidate;
                r = rc;
                advanced = true;
                break;
            }
            alpha *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    let res = r.norm();
    if res < 1e-10 {
        let sa = place(ta, &ea1, &ea2, x[0], x[1]);
        let sb = place(tb, &eb1, &eb2, x[2], x[3]);
        Ok(Some((atlas.point(ki, &sa)?, sa, sb)))
    } else if res > 1e-2 {
        Ok(None)
    } else {
        Err(Error::Unresolved(format!(
            "intersection residual {res:.3e} neither converged nor cleared"
        )))
    }
}

/// Builds the chain of m lifted spheres on n spiral samples each and counts
/// pairwise intersections by proximity clustering and local refinement.
pub fn build_am_configuration(m: usize, n: usize) -> Result<AmConfiguration> {
    if n < 400 {
        return Err(Error::invalid("chain counting needs at least 400 samples per sphere"));
    }
    let atlas = AmAtlas::new(m)?;
    let ts = sphere_samples(n);
    let mut spheres = Vec::with_capacity(m);
    let mut flats = Vec::with_capacity(m);
    for k in 1..=m {
        let cloud: Vec<[Complex64; 3]> =
            ts.iter().map(|t| atlas.point(k, t)).collect::<Result<_>>()?;
        flats.push(cloud.iter().map(flatten6).collect::<Vec<_>>());
        spheres.push(cloud);
    }
    let mut counts = vec![vec![None; m]; m];
    let mut min_angle: Option<f64> = None;
    for i in 0..m {
        for j in i + 1..m {
            let pair = count_pair_intersections(&atlas, i + 1, j + 1, &ts, &flats[i], &flats[j])?;
            counts[i][j] = Some(pair.count);
            counts[j][i] = Some(pair.count);
            if let Some(a) = pair.min_angle {
                min_angle = Some(min_angle.map_or(a, |v: f64| v.min(a)));
            }
        }
    }
    Ok(AmConfiguration { m, spheres, counts, min_transversality: min_angle })
}

/// CSV export of the sampled spheres: sphere id, sample id, six real
/// coordinates.
pub fn am_clouds_csv(config: &AmConfiguration) -> String {
    let mut out = String::from("sphere,sample,re_z1,im_z1,re_z2,im_z2,re_z3,im_z3\n");
    for (k, cloud) in config.spheres.iter().enumerate() {
        for (i, z) in cloud.iter().enumerate() {
            let f = flatten6(z);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                k + 1,
                i,
                numeric::fmt_real(f[0]),
                numeric::fmt_real(f[1]),
                numeric::fmt_real(f[2]),
                numeric::fmt_real(f[3]),
                numeric::fmt_real(f[4]),
                numeric::fmt_real(f[5]),
            ));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// The correction profile and the corrected form
// ---------------------------------------------------------------------------

/// Radial profile β with β = 0 on [0, ε/2] and [2/ε, ∞), β = 1 on
/// [ε, 1/ε], β ≤ 1 everywhere, and vanishing first radial moment
/// ∫₀^∞ r β(r) dr = 0. Past the plateau the profile descends smoothly to
/// zero and then dips into a negative lobe; the lobe amplitude is the one
/// free scalar, the moment is linear in it, and the solve is a quotient of
/// two integrals.
#[derive(Debug, Clone, Copy)]
pub struct CorrectionProfile {
    eps: f64,
    lobe: f64,
}

impl CorrectionProfile {
    pub fn new(eps: f64) -> Result<Self> {
        if !(0.05..=0.45).contains(&eps) {
            return Err(Error::invalid("window parameter must lie in [0.05, 0.45]"));
        }
        let mut profile = CorrectionProfile { eps, lobe: 0.0 };
        let inv = 1.0 / eps;
        let rise = numeric::simpson(|r| r * profile.rise(r), eps / 2.0, eps, 2048);
        let plateau = (inv * inv - eps * eps) / 2.0;
        let fall = numeric::simpson(|r| r * profile.fall(r), inv, 1.25 * inv, 2048);
        let lobe_moment = numeric::simpson(|r| r * profile.bump(r), 1.25 * inv, 2.0 * inv, 4096);
        profile.lobe = (rise + plateau + fall) / lobe_moment;
        Ok(profile)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn rise(&self, r: f64) -> f64 {
        numeric::smoothstep((r - self.eps / 2.0) / (self.eps / 2.0))
    }

    /// Smooth descent from 1 at 1/ε to 0 at 1.25/ε.
    fn fall(&self, r: f64) -> f64 {
        1.0 - numeric::smoothstep((r - 1.0 / self.eps) / (0.25 / self.eps))
    }

    /// Unit bump supported on [1.25/ε, 2/ε].
    fn bump(&self, r: f64) -> f64 {
        let w = 0.375 / self.eps;
        numeric::smoothstep((r - 1.25 / self.eps) / w)
            * numeric::smoothstep((2.0 / self.eps - r) / w)
    }

    pub fn value(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        if r <= self.eps / 2.0 {
            0.0
        } else if r < self.eps {
            self.rise(r)
        } else if r <= 1.0 / self.eps {
            1.0
        } else if r < 2.0 / self.eps {
            self.fall(r) - self.lobe * self.bump(r)
        } else {
            0.0
        }
    }

    /// First radial moment recomputed with a finer quadrature than the
    /// construction used.
    pub fn moment_residual(&self) -> f64 {
        let eps = self.eps;
        let rise = numeric::simpson(|r| r * self.value(r), 0.0, eps, 4096);
        let plateau = ((1.0 / eps) * (1.0 / eps) - eps * eps) / 2.0;
        let lobe = numeric::simpson(|r| r * self.value(r), 1.0 / eps, 2.0 / eps, 8192);
        rise + plateau + lobe
    }
}

/// ω′ = (standard form of ℂ³) − β(|z₃|)·(area form of the z₃ plane),
/// evaluated on real 6-vectors ordered (Re z₁, Im z₁, ..., Im z₃).
pub fn corrected_form(profile: &CorrectionProfile, z3_modulus: f64, u: &[f64; 6], v: &[f64; 6]) -> f64 {
    let mut total = 0.0;
    for j in 0..3 {
        let term = u[2 * j] * v[2 * j + 1] - u[2 * j + 1] * v[2 * j];
        if j == 2 {
            total += (1.0 - profile.value(z3_modulus)) * term;
        } else {
            total += term;
        }
    }
    total
}

/// Orthonormal tangent frame of the hypersurface at a point, as the kernel
/// of the real 2×6 Jacobian of (Re rule, Im rule).
fn hypersurface_frame(cover: &BranchedCover, z: &[Complex64; 3]) -> Option<DMatrix<f64>> {
    let grad = [
        2.0 * z[0],
        2.0 * z[1],
        -Complex64::new(cover.order() as f64, 0.0) * z[2].powu(cover.m() as u32),
    ];
    let mut jac = DMatrix::zeros(2, 6);
    for (j, d) in grad.iter().enumerate() {
        jac[(0, 2 * j)] = d.re;
        jac[(0, 2 * j + 1)] = -d.im;
        jac[(1, 2 * j)] = d.im;
        jac[(1, 2 * j + 1)] = d.re;
    }
    let kernel = numeric::nullspace(&jac, 1e-10);
    if kernel.ncols() != 4 {
        return None;
    }
    Some(kernel)
}

/// Pullback and nondegeneracy scan of the corrected form over the chain
/// spheres.
#[derive(Debug, Clone, Copy)]
pub struct CorrectionReport {
    /// Max |ω′| on unit tangent pairs of the spheres.
    pub lagrangian_defect: f64,
    /// Min |Pfaffian| of ω′ on hypersurface tangent frames.
    pub nondegeneracy_margin: f64,
    /// Samples where the tangent frame construction failed.
    pub skipped: usize,
}

pub fn correction_form_defects(
    profile: &CorrectionProfile,
    atlas: &AmAtlas,
    samples: usize,
) -> Result<CorrectionReport> {
    if samples < 16 {
        return Err(Error::invalid("scan needs at least 16 samples"));
    }
    let ts = sphere_samples(samples);
    let mut defect = 0.0f64;
    let mut margin = f64::INFINITY;
    let mut skipped = 0usize;
    for k in 1..=atlas.cover().m() {
        for t in &ts {
            let z = atlas.point(k, t)?;
            let (d1, d2) = fd_sphere_tangents(atlas, k, t, 1e-5)?;
            let (u, v) = (flatten6(&d1), flatten6(&d2));
            let (nu, nv) = (
                u.iter().map(|x| x * x).sum::<f64>().sqrt(),
                v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            );
            defect = defect.max((corrected_form(profile, z[2].norm(), &u, &v) / (nu * nv)).abs());
            match hypersurface_frame(atlas.cover(), &z) {
                Some(q) => {
                    let mut w = Matrix4::zeros();
                    for a in 0..4 {
                        for b in 0..4 {
                            let (mut qa, mut qb) = ([0.0; 6], [0.0; 6]);
                            for r in 0..6 {
                                qa[r] = q[(r, a)];
                                qb[r] = q[(r, b)];
                            }
                            w[(a, b)] = corrected_form(profile, z[2].norm(), &qa, &qb);
                        }
                    }
                    margin = margin.min(numeric::pfaffian4(&w).abs());
                }
                None => skipped += 1,
            }
        }
    }
    Ok(CorrectionReport { lagrangian_defect: defect, nondegeneracy_margin: margin, skipped })
}

// ---------------------------------------------------------------------------
// Graph identities between the handle and the twist
// ---------------------------------------------------------------------------

/// Defects of the formula-level identities between the twisted fiber and
/// the swept handle.
#[derive(Debug, Clone, Copy)]
pub struct GraphIdentityReport {
    /// Twisted fiber samples against the chart graphs, both charts.
    pub chart_defect: f64,
    /// Handle sweep points, read back as covectors, returned to the fiber
    /// by the forward twist: distance of the final base point from the
    /// chart center.
    pub membership_defect: f64,
    /// Distance of the positive drag from the plane {q = −p} in the far
    /// chart window.
    pub window_defect: f64,
    /// Distance of the negative drag from the swapped plane {q = p}; the
    /// swap (p, q) ↦ (q, −p) carries the window plane onto this one.
    pub swap_defect: f64,
    /// Lagrangian defect of the swept handle curve built from the profile.
    pub handle_defect: f64,
}

/// Checks that the twist profile has the collar shape ψ(t) = π − t on its
/// exact region with support twice that region, and returns the region.
fn collar_region(m: &ModelTwist) -> Result<f64> {
    let profile = m.profile();
    let eps = profile.exact_region();
    let mid = 0.5 * eps;
    if (profile.support_radius() - 2.0 * eps).abs() > 1e-12
        || (profile.value(mid) - (PI - mid)).abs() > 1e-12
    {
        return Err(Error::invalid("graph identities need the collar shape (pi - t near zero)"));
    }
    Ok(eps)
}

/// Handle curve induced by a collar twist profile:
/// c(t) = (ρ(π − ψ(t))·t, −ψ(t)) with ρ a cutoff vanishing below ε/4 and
/// equal to one above ε/2. Samples are emitted at approximately uniform
/// chord length.
pub fn handle_curve_from_twist(m: &ModelTwist, n: usize) -> Result<Vec<[f64; 2]>> {
    let eps = collar_region(m)?;
    if n < 32 {
        return Err(Error::invalid("curve needs at least 32 samples"));
    }
    let cutoff = move |s: f64| numeric::smoothstep((s - eps / 4.0) / (eps / 4.0));
    let profile = m.profile();
    let point = move |t: f64| -> [f64; 2] {
        let psi = profile.value(t);
        [cutoff(PI - psi) * t, -psi]
    };
    let (t0, t1) = (1e-3, PI - 0.05);
    let fine = 16 * n;
    let mut arc = 0.0;
    let mut prev = point(t0);
    for i in 1..=fine {
        let t = t0 + (t1 - t0) * i as f64 / fine as f64;
        let p = point(t);
        arc += ((p[0] - prev[0]).powi(2) + (p[1] - prev[1]).powi(2)).sqrt();
        prev = p;
    }
    let target = arc / n as f64;
    let mut out = vec![point(t0)];
    let mut acc = 0.0;
    prev = point(t0);
    for i in 1..=fine {
        let t = t0 + (t1 - t0) * i as f64 / fine as f64;
        let p = point(t);
        acc += ((p[0] - prev[0]).powi(2) + (p[1] - prev[1]).powi(2)).sqrt();
        prev = p;
        if acc >= target || i == fine {
            out.push(p);
            acc = 0.0;
        }
    }
    Ok(out)
}

/// Formula-level identities tying the twist to the handle. The negative
/// drag of the fiber matches the near-chart graph, the positive drag
/// matches the far-chart graph; sweep samples of the induced handle curve
/// return to the fiber under the forward twist; near the window both drags
/// fill the two mirror planes exchanged by the swap (p, q) ↦ (q, −p).
pub fn surgery_graph_identity(m: &ModelTwist) -> Result<GraphIdentityReport> {
    let eps = collar_region(m)?;
    let chart = ExpChart::standard();
    let far = chart.antipodal();
    let mut smp = Sampler::new(0x7a11);

    let mut chart_defect = 0.0f64;
    for _ in 0..100 {
        let phi = smp.uniform(0.0, TAU);
        let r = smp.uniform(0.05, PI - 0.05);
        let p = Vector2::new(r * phi.cos(), r * phi.sin());
        let fiber = chart.to_cotangent(p, Vector2::zeros())?;
        let dragged = m.power(-1, &fiber);
        let (pp, qq) = chart.from_cotangent(&dragged)?;
        let (_, graph) = twisted_fiber_graph(m, pp)?;
        chart_defect = chart_defect.max((qq - graph).norm());
        if r < 1.9 * eps {
            let forward = m.power(1, &fiber);
            let (pa, qa) = far.from_cotangent(&forward)?;
            let (_, graph_far) = twisted_fiber_graph_antipodal(m, pa)?;
            chart_defect = chart_defect.max((qa - graph_far).norm());
        }
    }

    let mut window_defect = 0.0f64;
    let mut swap_defect = 0.0f64;
    for _ in 0..100 {
        let phi = smp.uniform(0.0, TAU);
        let r = smp.uniform(0.05 * eps, 0.9 * eps);
        let p = Vector2::new(r * phi.cos(), r * phi.sin());
        let fiber = chart.to_cotangent(p, Vector2::zeros())?;
        let (pa, qa) = far.from_cotangent(&m.power(1, &fiber))?;
        window_defect = window_defect.max((qa + pa).norm());
        let (pb, qb) = far.from_cotangent(&m.power(-1, &fiber))?;
        swap_defect = swap_defect.max((qb - pb).norm());
    }

    let curve = handle_curve_from_twist(m, 256)?;
    let patch = HandlePatch::from_curve_samples(curve, 64)?;
    let handle_defect = handle_lagrangian_defect(&patch)?;

    // Sweep points with the cutoff at one are covectors of the twisted
    // fiber; the forward twist must return them to the fiber over the
    // chart center.
    let mut membership_defect = 0.0f64;
    let profile = m.profile();
    let steps = 48;
    for i in 0..steps {
        let t = eps / 2.0 + (PI - 0.1 - eps / 2.0) * i as f64 / (steps - 1) as f64;
        let psi = profile.value(t);
        if PI - psi < eps / 2.0 {
            continue;
        }
        for j in 0..8 {
            let u = Vector2::new((TAU * j as f64 / 8.0).cos(), (TAU * j as f64 / 8.0).sin());
            let eta = chart.to_cotangent(u * t, -u * psi)?;
            let back = m.power(1, &eta);
            membership_defect = membership_defect.max((back.u() - chart.center()).norm());
        }
    }

    Ok(GraphIdentityReport {
        chart_defect,
        membership_defect,
        window_defect,
        swap_defect,
        handle_defect,
    })
}
