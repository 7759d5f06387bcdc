//! Machine-readable check results, suite runners, and table emitters.
//!
//! A suite is a fixed ordered list of named checks, each reporting a scalar
//! defect against a pinned tolerance. Checks never panic on numerical
//! trouble: errors that mean "could not decide" surface as inconclusive,
//! everything else as a failure with the message in the witness field. For
//! a fixed configuration the whole document is byte-stable, so two runs
//! with the same seed can be compared with a plain string equality.

use serde::Serialize;
use std::time::Instant;

use crate::error::Error;
use crate::floer;
use crate::halfint::HalfInt;
use crate::intersections;
use crate::maslov::{
    local_model_offsets, local_model_pair, maslov_index_pair, maslov_via_conjugate_points,
    transport_pair, MaslovOptions,
};
use crate::numeric;
use crate::sampling::Sampler;
use crate::sphere::{
    circle_action, conjugate_points, geodesic_flow, morse_index, Covector, ExpChart, Geodesic,
};
use crate::surgery;
use crate::symplectic::{LagrangianPath, SymplecticSpace};
use crate::twist::{
    check_symplectic, square_isotopy_stage, tangent_jacobian_det, ModelTwist, TwistProfile,
};
use crate::Result;

use nalgebra::{DMatrix, Vector2};

const PI: f64 = std::f64::consts::PI;
const TAU: f64 = std::f64::consts::TAU;

/// Check-family tags used by every suite. Filtering a report by prefix
/// ("surgery.", "tables.") groups related checks.
pub mod anchors {
    pub const MASLOV_PINS: &str = "maslov.pins";
    pub const MASLOV_AXIOMS: &str = "maslov.axioms";
    pub const MASLOV_ORACLE: &str = "maslov.oracle";
    pub const SPHERE_FLOW: &str = "sphere.flow";
    pub const SPHERE_ACTION: &str = "sphere.action";
    pub const SPHERE_CONJUGATE: &str = "sphere.conjugate";
    pub const SPHERE_CHARTS: &str = "sphere.charts";
    pub const TWIST_SYMPLECTIC: &str = "twist.symplectic";
    pub const TWIST_PERIODICITY: &str = "twist.periodicity";
    pub const TWIST_PINS: &str = "twist.pins";
    pub const TWIST_ISOTOPY: &str = "twist.isotopy";
    pub const TABLES_RADII: &str = "tables.radii";
    pub const TABLES_ACTIONS: &str = "tables.actions";
    pub const TABLES_INDICES: &str = "tables.indices";
    pub const CLEAN_CIRCLES: &str = "clean.circles";
    pub const CLEAN_CONTROLS: &str = "clean.controls";
    pub const FLOER_PAGE: &str = "floer.page";
    pub const FLOER_SURVIVORS: &str = "floer.survivors";
    pub const FLOER_BRUTE: &str = "floer.brute";
    pub const FLOER_RANKS: &str = "floer.ranks";
    pub const SURGERY_HANDLE: &str = "surgery.handle";
    pub const SURGERY_EIGHT: &str = "surgery.eight";
    pub const SURGERY_LINKING: &str = "surgery.linking";
    pub const SURGERY_LIFT: &str = "surgery.lift";
    pub const SURGERY_CHAIN: &str = "surgery.chain";
    pub const SURGERY_CORRECTION: &str = "surgery.correction";
    pub const SURGERY_GRAPHS: &str = "surgery.graphs";
}

/// Pinned numerical tolerances shared by the suites.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    /// Pullback defect allowed for symplectic bundle maps.
    pub symplectic: f64,
    /// Radius agreement for intersection tables.
    pub radius: f64,
    /// Action agreement for intersection tables.
    pub action: f64,
    /// Endpoint membership defect for clean circles.
    pub endpoint: f64,
    /// Transported against differenced Jacobi fields.
    pub jacobi: f64,
    /// Exact map identities (powers, flows, graphs at machine scale).
    pub identity: f64,
    /// Chart-level graph identities.
    pub graph: f64,
    /// Lagrangian defect of swept handles.
    pub handle: f64,
    /// Sheet tracking and lift endpoint agreement.
    pub lift: f64,
    /// First radial moment of the correction profile.
    pub moment: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            symplectic: 1e-6,
            radius: 1e-9,
            action: 1e-8,
            endpoint: 1e-8,
            jacobi: 1e-4,
            identity: 1e-9,
            graph: 1e-6,
            handle: 1e-9,
            lift: 1e-8,
            moment: 1e-8,
        }
    }
}

/// Configuration echoed into every report.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub timing: bool,
    pub tolerances: Tolerances,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 0, timing: false, tolerances: Tolerances::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Metrics {
    /// Largest observed defect; -1 when the check never produced a number.
    pub max_defect: f64,
    pub tolerance: f64,
    /// Zero unless timing was requested, to keep reports byte-stable.
    pub runtime_ms: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub anchor: &'static str,
    pub status: Status,
    pub metrics: Metrics,
    pub witness: String,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub tool_version: &'static str,
    pub suite: String,
    pub config: SuiteConfig,
    pub results: Vec<CheckResult>,
    pub summary: Summary,
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0 && self.summary.inconclusive == 0
    }

    /// One line per check, terminal friendly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let tag = match r.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Inconclusive => "inconclusive",
            };
            out.push_str(&format!(
                "[{tag}] {:<44} {:<18} defect {:>12} tol {:>8} {}\n",
                r.name,
                r.anchor,
                if r.metrics.max_defect < 0.0 {
                    "-".to_string()
                } else {
                    format!("{:.3e}", r.metrics.max_defect)
                },
                format!("{:.1e}", r.metrics.tolerance),
                r.witness
            ));
        }
        out.push_str(&format!(
            "{} passed, {} failed, {} inconclusive\n",
            self.summary.passed, self.summary.failed, self.summary.inconclusive
        ));
        out
    }
}

/// Suite selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    Maslov,
    Geometry,
    Twist,
    Intersections,
    Floer,
    Surgery,
    All,
}

impl SuiteKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "maslov" => Ok(SuiteKind::Maslov),
            "geometry" => Ok(SuiteKind::Geometry),
            "twist" => Ok(SuiteKind::Twist),
            "intersections" => Ok(SuiteKind::Intersections),
            "floer" => Ok(SuiteKind::Floer),
            "surgery" => Ok(SuiteKind::Surgery),
            "all" => Ok(SuiteKind::All),
            other => Err(Error::Usage(format!(
                "unknown suite '{other}'; expected maslov, geometry, twist, intersections, floer, surgery or all"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SuiteKind::Maslov => "maslov",
            SuiteKind::Geometry => "geometry",
            SuiteKind::Twist => "twist",
            SuiteKind::Intersections => "intersections",
            SuiteKind::Floer => "floer",
            SuiteKind::Surgery => "surgery",
            SuiteKind::All => "all",
        }
    }
}

struct Runner<'a> {
    config: &'a SuiteConfig,
    results: Vec<CheckResult>,
}

impl<'a> Runner<'a> {
    fn new(config: &'a SuiteConfig) -> Self {
        Runner { config, results: Vec::new() }
    }

    /// Runs one check. The body returns (worst defect, witness line); a
    /// result at or below the tolerance passes. Errors that mean "could
    /// not decide" are reported as inconclusive, everything else fails.
    fn check(
        &mut self,
        name: &str,
        anchor: &'static str,
        tolerance: f64,
        body: impl FnOnce() -> Result<(f64, String)>,
    ) {
        let start = Instant::now();
        let (status, max_defect, witness) = match body() {
            Ok((defect, witness)) => {
                let status = if defect.is_finite() && defect <= tolerance {
                    Status::Pass
                } else {
                    Status::Fail
                };
                (status, defect, witness)
            }
            Err(
                e @ (Error::Unresolved(_)
                | Error::Resolution { .. }
                | Error::Proximity { .. }
                | Error::IntegrationAccuracy { .. }),
            ) => (Status::Inconclusive, -1.0, e.to_string()),
            Err(e) => (Status::Fail, -1.0, e.to_string()),
        };
        let runtime_ms = if self.config.timing { start.elapsed().as_millis() as u64 } else { 0 };
        self.results.push(CheckResult {
            name: name.to_string(),
            anchor,
            status,
            metrics: Metrics { max_defect, tolerance, runtime_ms },
            witness,
        });
    }
}

fn halves_defect(got: HalfInt, expected: HalfInt) -> f64 {
    (got.twice() - expected.twice()).abs() as f64 / 2.0
}

/// Runs one suite (or all of them, in a fixed order) and collects the
/// results into a deterministic document.
pub fn run_suite(kind: SuiteKind, config: &SuiteConfig) -> Result<ReportDocument> {
    let mut runner = Runner::new(config);
    match kind {
        SuiteKind::Maslov => maslov_suite(&mut runner),
        SuiteKind::Geometry => geometry_suite(&mut runner),
        SuiteKind::Twist => twist_suite(&mut runner),
        SuiteKind::Intersections => intersections_suite(&mut runner),
        SuiteKind::Floer => floer_suite(&mut runner),
        SuiteKind::Surgery => surgery_suite(&mut runner),
        SuiteKind::All => {
            maslov_suite(&mut runner);
            geometry_suite(&mut runner);
            twist_suite(&mut runner);
            intersections_suite(&mut runner);
            floer_suite(&mut runner);
            surgery_suite(&mut runner);
        }
    }
    let results = runner.results;
    let summary = Summary {
        passed: results.iter().filter(|r| r.status == Status::Pass).count(),
        failed: results.iter().filter(|r| r.status == Status::Fail).count(),
        inconclusive: results.iter().filter(|r| r.status == Status::Inconclusive).count(),
    };
    Ok(ReportDocument {
        tool_version: env!("CARGO_PKG_VERSION"),
        suite: kind.name().to_string(),
        config: *config,
        results,
        summary,
    })
}

// ---------------------------------------------------------------------------
// Suite bodies
// ---------------------------------------------------------------------------

fn maslov_suite(runner: &mut Runner) {
    let seed = runner.config.seed;
    let opts = MaslovOptions::default();

    runner.check("rotating line has index one", anchors::MASLOV_PINS, 0.0, || {
        let sp = SymplecticSpace::new(1)?;
        let rot = LagrangianPath::new(sp, (0.0, PI), |s| {
            DMatrix::from_column_slice(2, 1, &[s.cos(), s.sin()])
        })?;
        let fixed = LagrangianPath::constant(&sp.horizontal(), (0.0, PI))?;
        let mu = maslov_index_pair(&rot, &fixed, &MaslovOptions::default())?;
        Ok((halves_defect(mu, HalfInt::from_int(1)), format!("mu = {mu}")))
    });

    runner.check("local model pair has index one half", anchors::MASLOV_PINS, 0.0, || {
        let (a, b) = local_model_pair(1.0)?;
        let mu = maslov_index_pair(&a, &b, &MaslovOptions::default())?;
        let d1 = halves_defect(mu, HalfInt::halves(1));
        let (lo, hi) = local_model_offsets(1.0, -1.0)?;
        let d2 = halves_defect(lo, HalfInt::ZERO) + halves_defect(hi, HalfInt::from_int(1));
        Ok((d1 + d2, format!("mu = {mu}, offsets = ({lo}, {hi})")))
    });

    let axiom_opts = opts.clone();
    runner.check("index is invariant under pinned homotopy", anchors::MASLOV_AXIOMS, 0.0, || {
        let mut smp = Sampler::new(seed ^ 0x11);
        let mut worst = 0.0f64;
        let mut used = 0;
        for trial in 0..16 {
            let family = smp.pinned_family(SymplecticSpace::new(2)?, 0.8);
            let base = family.path(0.0)?;
            let partner = smp.lagrangian_path(SymplecticSpace::new(2)?, (0.0, 1.0), 0.8)?;
            let mu0 = match maslov_index_pair(&base, &partner, &axiom_opts) {
                Ok(v) => v,
                Err(_) => continue,
            };
            for u in [0.3, 0.7, 1.0] {
                let path = family.path(u)?;
                match maslov_index_pair(&path, &partner, &axiom_opts) {
                    Ok(mu) => worst = worst.max(halves_defect(mu, mu0)),
                    Err(_) => continue,
                }
            }
            used += 1;
            if used >= 10 && trial >= 10 {
                break;
            }
        }
        if used < 6 {
            return Err(Error::Unresolved(format!("only {used} classifiable families")));
        }
        Ok((worst, format!("{used} deformation families")))
    });

    let cat_opts = opts.clone();
    runner.check("index adds under concatenation", anchors::MASLOV_AXIOMS, 0.0, || {
        let mut smp = Sampler::new(seed ^ 0x22);
        let mut worst = 0.0f64;
        let mut used = 0;
        for _ in 0..20 {
            let Ok((a, b, mu)) = smp.regular_pair(SymplecticSpace::new(2)?, 0.9, &cat_opts, 4)
            else {
                continue;
            };
            for cut in [0.29, 0.61] {
                let left = maslov_index_pair(&a.restrict(0.0, cut)?, &b.restrict(0.0, cut)?, &cat_opts);
                let right =
                    maslov_index_pair(&a.restrict(cut, 1.0)?, &b.restrict(cut, 1.0)?, &cat_opts);
                if let (Ok(l), Ok(r)) = (left, right) {
                    worst = worst.max(halves_defect(l + r, mu));
                    used += 1;
                }
            }
            if used >= 12 {
                break;
            }
        }
        if used < 6 {
            return Err(Error::Unresolved(format!("only {used} classifiable splits")));
        }
        Ok((worst, format!("{used} split pairs")))
    });

    let conj_opts = opts.clone();
    runner.check("index is symplectically natural", anchors::MASLOV_AXIOMS, 0.0, || {
        let mut smp = Sampler::new(seed ^ 0x33);
        let mut worst = 0.0f64;
        let mut used = 0;
        for _ in 0..20 {
            let space = SymplecticSpace::new(2)?;
            let Ok((a, b, mu)) = smp.regular_pair(space, 0.9, &conj_opts, 4) else { continue };
            // Both paths move by the same symplectic matrix.
            let m = smp.symplectic_matrix(space, 0.7);
            let (m_a, m_b) = (m.clone(), m);
            let ta = a.map_frames(move |_| m_a.clone());
            let tb = b.map_frames(move |_| m_b.clone());
            if let Ok(mu_t) = maslov_index_pair(&ta, &tb, &conj_opts) {
                worst = worst.max(halves_defect(mu_t, mu));
                used += 1;
            }
            if used >= 10 {
                break;
            }
        }
        if used < 6 {
            return Err(Error::Unresolved(format!("only {used} classifiable conjugations")));
        }
        Ok((worst, format!("{used} conjugated pairs")))
    });

    runner.check("crossing count matches the conjugate point oracle", anchors::MASLOV_ORACLE, 0.0, || {
        let mut worst = 0.0f64;
        let mut families = 0;
        for omega in [PI, 2.0 * PI, 3.0 * PI, 1.4 * PI, 2.6 * PI] {
            let transport = move |r: f64| {
                DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        (omega * r).cos(),
                        -omega * (omega * r).sin(),
                        (omega * r).sin() / omega,
                        (omega * r).cos(),
                    ],
                )
            };
            let via_oracle = maslov_via_conjugate_points(&transport, 1)?;
            let sp = SymplecticSpace::new(1)?;
            let (a, b) = transport_pair(sp, transport)?;
            let via_pair = maslov_index_pair(&a, &b, &MaslovOptions::default())?;
            worst = worst.max(halves_defect(via_pair, via_oracle));
            families += 1;
        }
        Ok((worst, format!("{families} sine transports")))
    });
}

fn geometry_suite(runner: &mut Runner) {
    let seed = runner.config.seed;

    runner.check("unit geodesics close after a full turn", anchors::SPHERE_FLOW, 1e-9, || {
        let mut smp = Sampler::new(seed ^ 0x51);
        let mut worst = 0.0f64;
        for _ in 0..32 {
            let xi = smp.covector((0.999, 1.001, ));
            let unit = Covector::new(xi.u(), xi.v() / xi.speed())?;
            let back = geodesic_flow(&unit, TAU);
            worst = worst.max(back.distance(&unit));
        }
        Ok((worst, "32 unit covectors".into()))
    });

    let sym_tol = runner.config.tolerances.symplectic;
    runner.check("circle action preserves the canonical form", anchors::SPHERE_ACTION, sym_tol, || {
        let mut smp = Sampler::new(seed ^ 0x52);
        let samples: Vec<Covector> = (0..80).map(|_| smp.covector((0.1, 6.0))).collect();
        let check = check_symplectic(&|xi| circle_action(xi, 0.7), &samples, 1e-4)?;
        Ok((check.max_defect, format!("{} samples, {} skipped", samples.len(), check.skipped)))
    });

    runner.check("conjugate points sit at odd multiples of pi", anchors::SPHERE_CONJUGATE, 1e-9, || {
        let mut worst = 0.0f64;
        let mut seen = 0;
        for j in 1..=3usize {
            let speed = (2 * j - 1) as f64 * PI;
            let start = Covector::new(
                nalgebra::Vector3::new(1.0, 0.0, 0.0),
                nalgebra::Vector3::new(0.0, speed, 0.0),
            )?;
            let geo = Geodesic::new(start)?;
            let found = conjugate_points(&geo)?;
            for (k, datum) in found.iter().enumerate() {
                let expected = (k + 1) as f64 / (2 * j - 1) as f64;
                worst = worst.max((datum.r - expected).abs());
                seen += 1;
            }
            if found.len() != 2 * j - 1 {
                return Ok((1.0, format!("j = {j}: {} conjugate points", found.len())));
            }
        }
        Ok((worst, format!("{seen} conjugate points across 3 speeds")))
    });

    runner.check("morse indices follow the ladder", anchors::SPHERE_CONJUGATE, 0.0, || {
        let mut worst = 0.0f64;
        for j in 1..=3usize {
            let speed = (2 * j - 1) as f64 * PI;
            let start = Covector::new(
                nalgebra::Vector3::new(1.0, 0.0, 0.0),
                nalgebra::Vector3::new(0.0, speed, 0.0),
            )?;
            let geo = Geodesic::new(start)?;
            let idx = morse_index(&geo)?;
            let expected = HalfInt::halves(4 * j as i64 - 3);
            worst = worst.max(halves_defect(idx, expected));
        }
        Ok((worst, "j = 1..3".into()))
    });

    runner.check("exponential charts round trip", anchors::SPHERE_CHARTS, 1e-9, || {
        let chart = ExpChart::standard();
        let mut smp = Sampler::new(seed ^ 0x53);
        let mut worst = 0.0f64;
        for _ in 0..64 {
            let phi = smp.uniform(0.0, TAU);
            let r = smp.uniform(1e-3, PI - 1e-2);
            let p = Vector2::new(r * phi.cos(), r * phi.sin());
            let psi = smp.uniform(0.0, TAU);
            let s = smp.uniform(0.0, 2.0);
            let q = Vector2::new(s * psi.cos(), s * psi.sin());
            let xi = chart.to_cotangent(p, q)?;
            let (p2, q2) = chart.from_cotangent(&xi)?;
            worst = worst.max((p2 - p).norm() + (q2 - q).norm());
        }
        Ok((worst, "64 chart points".into()))
    });
}

fn twist_suite(runner: &mut Runner) {
    let seed = runner.config.seed;
    let sym_tol = runner.config.tolerances.symplectic;

    runner.check("model twist preserves the canonical form", anchors::TWIST_SYMPLECTIC, sym_tol, || {
        let mut smp = Sampler::new(seed ^ 0x61);
        let mut samples: Vec<Covector> = (0..120).map(|_| smp.covector((1e-3, 7.0))).collect();
        samples.extend((0..30).map(|_| smp.covector((1e-4, 1e-3))));
        let mut worst = 0.0f64;
        for profile in [TwistProfile::staircase(1)?, TwistProfile::collar(1.2)?] {
            let m = ModelTwist::new(profile);
            let check = check_symplectic(&|xi| Ok(m.apply(xi)), &samples, 1e-4)?;
            worst = worst.max(check.max_defect);
        }
        Ok((worst, "150 samples, staircase and collar".into()))
    });

    let id_tol = runner.config.tolerances.identity;
    runner.check("2r twists unwind to the reverse flow", anchors::TWIST_PERIODICITY, id_tol, || {
        let mut smp = Sampler::new(seed ^ 0x62);
        let mut worst = 0.0f64;
        for r in 1..=3u32 {
            let m = ModelTwist::new(TwistProfile::staircase(r)?);
            for _ in 0..16 {
                let xi = smp.covector((0.1, PI));
                let unwound = m.power(2 * r as i64, &xi);
                let reference = geodesic_flow(&xi, -1.0);
                worst = worst.max(unwound.distance(&reference));
            }
        }
        Ok((worst, "r = 1..3, 16 covectors each".into()))
    });

    runner.check("zero section maps antipodally", anchors::TWIST_PINS, 1e-12, || {
        let m = ModelTwist::new(TwistProfile::staircase(1)?);
        let mut smp = Sampler::new(seed ^ 0x63);
        let mut worst = 0.0f64;
        for _ in 0..16 {
            let u = {
                let xi = smp.covector((0.5, 1.0));
                xi.u()
            };
            let zero = Covector::new(u, nalgebra::Vector3::zeros())?;
            let out = m.apply(&zero);
            worst = worst.max((out.u() + zero.u()).norm());
            worst = worst.max(out.v().norm());
            worst = worst.max((m.power(2, &zero).u() - zero.u()).norm());
        }
        Ok((worst, "16 zero-section points".into()))
    });

    // Each stage is a fiberwise isometry, so the Jacobian determinant in
    // orthonormal tangent frames must be a unit (the frames carry no
    // coherent orientation, so only its magnitude is pinned).
    runner.check("square root stages stay regular", anchors::TWIST_ISOTOPY, 1e-6, || {
        let m = ModelTwist::new(TwistProfile::staircase(1)?);
        let mut smp = Sampler::new(seed ^ 0x64);
        let mut worst = 0.0f64;
        for i in 0..5 {
            let s = i as f64 / 4.0;
            for k in 0..5 {
                let scale = k as f64 / 4.0;
                for _ in 0..4 {
                    let xi = smp.covector((0.2, 5.0));
                    let det = tangent_jacobian_det(
                        &|p| square_isotopy_stage(&m, s, scale, p),
                        &xi,
                        1e-4,
                    )?;
                    worst = worst.max((det.abs() - 1.0).abs());
                }
            }
        }
        Ok((worst, "25 stages, 4 covectors each".into()))
    });
}

fn intersections_suite(runner: &mut Runner) {
    let radius_tol = runner.config.tolerances.radius;
    let action_tol = runner.config.tolerances.action;
    let endpoint_tol = runner.config.tolerances.endpoint;
    let jacobi_tol = runner.config.tolerances.jacobi;

    // The tables are shared across the checks; computing them is the
    // expensive part (one Jacobi transport per circle).
    let tables = match (1..=6).map(intersections::compute_circles).collect::<Result<Vec<_>>>() {
        Ok(t) => std::rc::Rc::new(t),
        Err(e) => {
            let msg = e.to_string();
            runner.check("circle tables are computable", anchors::TABLES_RADII, 0.0, || {
                Err(Error::invalid(msg))
            });
            return;
        }
    };

    let t = tables.clone();
    runner.check("circle radii sit at odd multiples of pi", anchors::TABLES_RADII, radius_tol, move || {
        let mut worst = 0.0f64;
        for table in t.iter() {
            for c in &table.circles {
                let expected = (2 * c.j - 1) as f64 * PI;
                worst = worst.max((c.radius - expected).abs());
            }
        }
        Ok((worst, "r = 1..6".into()))
    });

    let t = tables.clone();
    runner.check("actions equal half the radius squared", anchors::TABLES_ACTIONS, action_tol, move || {
        let mut worst = 0.0f64;
        for table in t.iter() {
            for c in &table.circles {
                worst = worst.max((c.action - 0.5 * c.radius * c.radius).abs());
            }
        }
        Ok((worst, "r = 1..6".into()))
    });

    let t = tables.clone();
    runner.check("index ladder climbs by two", anchors::TABLES_INDICES, 0.0, move || {
        let mut defect = 0.0f64;
        for table in t.iter() {
            let indices = intersections::index_table(table)?;
            for (j, i_prime) in &indices {
                if *i_prime != 2 * *j as i64 {
                    defect += 1.0;
                }
            }
            for c in &table.circles {
                if c.winding.twice() != 2 * c.j as i64 - 1 {
                    defect += 1.0;
                }
            }
        }
        Ok((defect, "primed indices 2j, windings j - 1/2".into()))
    });

    let t = tables.clone();
    runner.check("intersection circles are clean", anchors::CLEAN_CIRCLES, endpoint_tol, move || {
        let report = intersections::verify_clean(&t[2], 16)?;
        let mut endpoint = 0.0f64;
        let mut jacobi = 0.0f64;
        for c in &report.checks {
            endpoint = endpoint.max(c.max_endpoint_defect);
            jacobi = jacobi.max(c.max_jacobi_defect);
        }
        if jacobi > jacobi_tol {
            return Ok((jacobi, format!("jacobi defect {jacobi:.3e} out of band")));
        }
        Ok((endpoint, format!("jacobi defect {jacobi:.3e}")))
    });

    runner.check("even multiples of pi are rejected", anchors::CLEAN_CONTROLS, 0.0, || {
        match intersections::verify_circle(TAU, 8) {
            Ok(check) if !check.passed => Ok((0.0, "radius 2 pi fails membership".into())),
            Ok(_) => Ok((1.0, "radius 2 pi wrongly accepted".into())),
            Err(_) => Ok((0.0, "radius 2 pi rejected".into())),
        }
    });
}

fn floer_suite(runner: &mut Runner) {
    let tables = match (1..=6).map(intersections::compute_circles).collect::<Result<Vec<_>>>() {
        Ok(t) => std::rc::Rc::new(t),
        Err(e) => {
            let msg = e.to_string();
            runner.check("circle tables are computable", anchors::FLOER_PAGE, 0.0, || {
                Err(Error::invalid(msg))
            });
            return;
        }
    };

    let t = tables.clone();
    runner.check("first page has two cells per circle", anchors::FLOER_PAGE, 0.0, move || {
        let mut defect = 0.0f64;
        for (i, table) in t.iter().enumerate() {
            let r = i + 1;
            let page = floer::e1_page(table)?;
            let mut expected = std::collections::BTreeSet::new();
            for p in 1..=r as i64 {
                expected.insert((p, p));
                expected.insert((p, p + 1));
            }
            let support: std::collections::BTreeSet<_> = page.support().into_iter().collect();
            if support != expected || page.total_dimension() != 2 * r {
                defect += 1.0;
            }
        }
        Ok((defect, "r = 1..6".into()))
    });

    let t = tables.clone();
    runner.check("corner cells survive every page", anchors::FLOER_SURVIVORS, 0.0, move || {
        let mut defect = 0.0f64;
        for (i, table) in t.iter().enumerate() {
            let r = i + 1;
            let page = floer::e1_page(table)?;
            for cell in [(1, 1), (r as i64, r as i64 + 1)] {
                let cert = floer::survives_to_infinity(&page, cell)?;
                if cert.verdict != floer::Verdict::Survives {
                    defect += 1.0;
                }
            }
        }
        Ok((defect, "cells (1,1) and (r,r+1), r = 1..6".into()))
    });

    runner.check("limit groups are forced nonzero", anchors::FLOER_SURVIVORS, 0.0, || {
        let mut defect = 0.0f64;
        for r in 1..=6usize {
            let witness = floer::hf_nonvanishing(r)?;
            if !witness.nonvanishing || !witness.witnesses.contains(&(1, 1)) {
                defect += 1.0;
            }
        }
        let zero = floer::hf_nonvanishing(0)?;
        if zero.nonvanishing {
            defect += 1.0;
        }
        Ok((defect, "r = 0..6".into()))
    });

    runner.check("every admissible boundary keeps the survivors", anchors::FLOER_BRUTE, 0.0, || {
        let mut defect = 0.0f64;
        let mut ops = 0;
        for r in 1..=3usize {
            let outcome = floer::brute_force_soundness(r)?;
            if !outcome.sound || outcome.operators != 1 << (r - 1) {
                defect += 1.0;
            }
            ops += outcome.operators;
        }
        Ok((defect, format!("{ops} boundary operators enumerated")))
    });

    runner.check("rank feasibility of the two level complex", anchors::FLOER_RANKS, 0.0, || {
        let mut defect = 0.0f64;
        if floer::rank_feasibility_t2(4, 2)? != vec![(2, 0)] {
            defect += 1.0;
        }
        if floer::rank_feasibility_t2(0, 2)?.len() != 3 {
            defect += 1.0;
        }
        if !floer::rank_feasibility_t2(6, 2)?.is_empty() {
            defect += 1.0;
        }
        Ok((defect, "totals 4, 0, 6 against chain size 2".into()))
    });

    let t = tables.clone();
    runner.check("page dimensions are even", anchors::FLOER_PAGE, 0.0, move || {
        let mut defect = 0.0f64;
        for table in t.iter() {
            let page = floer::e1_page(table)?;
            if !floer::parity_check(&page) {
                defect += 1.0;
            }
        }
        Ok((defect, "r = 1..6".into()))
    });
}

fn surgery_suite(runner: &mut Runner) {
    let handle_tol = runner.config.tolerances.handle;
    let lift_tol = runner.config.tolerances.lift;
    let moment_tol = runner.config.tolerances.moment;
    let graph_tol = runner.config.tolerances.graph;

    runner.check("swept corner is lagrangian", anchors::SURGERY_HANDLE, handle_tol, || {
        let curve = surgery::ProfileCurve::new(1.0)?;
        let patch = surgery::HandlePatch::from_profile(&curve, 2.5, 100, 100)?;
        let defect = surgery::handle_lagrangian_defect(&patch)?;
        Ok((defect, "100 x 100 grid".into()))
    });

    runner.check("swept corner is embedded", anchors::SURGERY_HANDLE, 0.0, || {
        let curve = surgery::ProfileCurve::new(1.0)?;
        let patch = surgery::HandlePatch::from_profile(&curve, 2.5, 257, 16)?;
        let scan = surgery::handle_embeddedness(&patch)?;
        let defect = if scan.embedded { 0.0 } else { 1.0 };
        Ok((defect, format!("margin {:.3e}, spacing {:.3e}", scan.margin, scan.spacing)))
    });

    runner.check("figure eight pulls back to zero", anchors::SURGERY_EIGHT, 1e-9, || {
        let scan = surgery::figure_eight_scan(2000)?;
        if scan.min_immersion_sv <= 0.5 {
            return Ok((1.0, format!("immersion sv {:.3}", scan.min_immersion_sv)));
        }
        if (scan.min_branch_margin - 0.5).abs() > 1e-3 {
            return Ok((1.0, format!("branch margin {:.6}", scan.min_branch_margin)));
        }
        Ok((
            scan.lagrangian_defect,
            format!(
                "immersion sv {:.3}, branch margin {:.6}",
                scan.min_immersion_sv, scan.min_branch_margin
            ),
        ))
    });

    runner.check("meridian image links the branch curve once", anchors::SURGERY_LINKING, 0.0, || {
        let meridian: Vec<_> = (0..512)
            .map(|i| {
                let th = PI * i as f64 / 512.0;
                surgery::figure_eight(&nalgebra::Vector3::new(th.cos(), th.sin(), 0.0))
            })
            .collect::<Result<_>>()?;
        let lk = surgery::linking_number(&meridian)?;
        let mut doubled = meridian.clone();
        doubled.extend(meridian.iter().copied());
        let lk2 = surgery::linking_number(&doubled)?;
        let defect = (lk - 1).abs() as f64 + (lk2 - 2).abs() as f64;
        Ok((defect, format!("single {lk}, doubled {lk2}")))
    });

    runner.check("meridian lift advances one sheet", anchors::SURGERY_LIFT, lift_tol, || {
        let cover = surgery::BranchedCover::new(2)?;
        let path = |s: f64| {
            let th = PI * s;
            surgery::figure_eight(&nalgebra::Vector3::new(th.cos(), th.sin(), 0.0))
                .expect("meridian stays on the sphere")
        };
        let seed_root = surgery::branch_value(&path(0.0)).powf(1.0 / cover.order() as f64);
        let lift = surgery::lift_path(&cover, path, seed_root)?;
        let expected = cover.deck(lift.start());
        let defect = (lift.end()[2] - expected[2]).norm();
        Ok((defect, format!("{} tracked points", lift.points.len())))
    });

    runner.check("monodromy exponent follows the linking number", anchors::SURGERY_LIFT, 0.0, || {
        let cover = surgery::BranchedCover::new(2)?;
        let mut defect = 0.0f64;
        for k in 0..=3usize {
            let path = move |s: f64| {
                let th = PI * (s * k as f64).fract();
                surgery::figure_eight(&nalgebra::Vector3::new(th.cos(), th.sin(), 0.0))
                    .expect("meridian stays on the sphere")
            };
            let seed_root = surgery::branch_value(&path(0.0)).powf(1.0 / cover.order() as f64);
            let lift = surgery::lift_path(&cover, path, seed_root)?;
            let expo = surgery::monodromy_exponent(&cover, &lift)?;
            if expo != k % cover.order() {
                defect += 1.0;
            }
        }
        Ok((defect, "loops of linking 0..3 over the 3-sheeted cover".into()))
    });

    runner.check("adjacent chain spheres meet exactly once", anchors::SURGERY_CHAIN, 0.0, || {
        let config = surgery::build_am_configuration(2, 1600)?;
        let count = config.counts[0][1];
        let defect = if count == Some(1) { 0.0 } else { 1.0 };
        let angle = config.min_transversality.unwrap_or(0.0);
        if angle <= 0.1 {
            return Ok((1.0, format!("transversality angle {angle:.3}")));
        }
        Ok((defect, format!("count {count:?}, angle {angle:.3}")))
    });

    runner.check("correction profile balances the moment", anchors::SURGERY_CORRECTION, moment_tol, || {
        let beta = surgery::CorrectionProfile::new(0.2)?;
        Ok((beta.moment_residual().abs(), "window 0.2".into()))
    });

    runner.check("corrected form vanishes on the chain", anchors::SURGERY_CORRECTION, 1e-8, || {
        let beta = surgery::CorrectionProfile::new(0.2)?;
        let atlas = surgery::AmAtlas::new(2)?;
        let report = surgery::correction_form_defects(&beta, &atlas, 300)?;
        if report.nondegeneracy_margin <= 0.05 || report.skipped > 0 {
            return Ok((
                1.0,
                format!(
                    "margin {:.3e}, skipped {}",
                    report.nondegeneracy_margin, report.skipped
                ),
            ));
        }
        Ok((
            report.lagrangian_defect,
            format!("pfaffian margin {:.3e}", report.nondegeneracy_margin),
        ))
    });

    runner.check("twisted fiber fills the chart graphs", anchors::SURGERY_GRAPHS, graph_tol, || {
        let m = ModelTwist::new(TwistProfile::collar(0.8)?);
        let report = surgery::surgery_graph_identity(&m)?;
        let window = report.window_defect.max(report.swap_defect);
        if window > 1e-5 {
            return Ok((window, format!("window planes off by {window:.3e}")));
        }
        if report.handle_defect > 1e-9 {
            return Ok((report.handle_defect, "handle sweep defect out of band".into()));
        }
        Ok((
            report.chart_defect.max(report.membership_defect),
            format!(
                "window {:.2e}, swap {:.2e}, handle {:.2e}",
                report.window_defect, report.swap_defect, report.handle_defect
            ),
        ))
    });
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Actions,
    Indices,
    E1Page,
}

impl TableKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "actions" => Ok(TableKind::Actions),
            "indices" => Ok(TableKind::Indices),
            "e1page" => Ok(TableKind::E1Page),
            other => Err(Error::Usage(format!(
                "unknown table '{other}'; expected actions, indices or e1page"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Json,
    Csv,
    Md,
}

impl TableFormat {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "json" => Ok(TableFormat::Json),
            "csv" => Ok(TableFormat::Csv),
            "md" => Ok(TableFormat::Md),
            other => {
                Err(Error::Usage(format!("unknown format '{other}'; expected json, csv or md")))
            }
        }
    }
}

enum CellValue {
    Int(i64),
    Real(f64),
}

impl CellValue {
    fn render(&self) -> String {
        match self {
            CellValue::Int(v) => v.to_string(),
            CellValue::Real(v) => numeric::fmt_real(*v),
        }
    }
}

struct Table {
    kind: &'static str,
    r: usize,
    columns: Vec<&'static str>,
    rows: Vec<Vec<CellValue>>,
}

impl Table {
    fn render(&self, format: TableFormat) -> String {
        match format {
            TableFormat::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(CellValue::render).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
                out
            }
            TableFormat::Md => {
                let mut out = format!("| {} |\n", self.columns.join(" | "));
                out.push_str(&format!(
                    "|{}\n",
                    self.columns.iter().map(|_| " --- |").collect::<String>()
                ));
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(CellValue::render).collect();
                    out.push_str(&format!("| {} |\n", cells.join(" | ")));
                }
                out
            }
            TableFormat::Json => {
                // Keys inside each row are emitted in sorted order.
                let mut order: Vec<usize> = (0..self.columns.len()).collect();
                order.sort_by_key(|&i| self.columns[i]);
                let mut out = String::from("{\n");
                out.push_str(&format!("  \"kind\": \"{}\",\n", self.kind));
                out.push_str(&format!("  \"r\": {},\n", self.r));
                out.push_str("  \"rows\": [\n");
                for (ri, row) in self.rows.iter().enumerate() {
                    let fields: Vec<String> = order
                        .iter()
                        .map(|&i| format!("\"{}\": {}", self.columns[i], row[i].render()))
                        .collect();
                    let comma = if ri + 1 < self.rows.len() { "," } else { "" };
                    out.push_str(&format!("    {{{}}}{comma}\n", fields.join(", ")));
                }
                out.push_str("  ]\n}\n");
                out
            }
        }
    }
}

/// Renders one of the standard tables for winding parameter r. All floats
/// are formatted with [`numeric::fmt_real`]; line endings are LF.
pub fn emit_table(kind: TableKind, r: usize, format: TableFormat) -> Result<String> {
    let table = intersections::compute_circles(r)?;
    let built = match kind {
        TableKind::Actions => Table {
            kind: "actions",
            r,
            columns: vec!["j", "radius", "action", "index_prime"],
            rows: table
                .circles
                .iter()
                .map(|c| {
                    vec![
                        CellValue::Int(c.j as i64),
                        CellValue::Real(c.radius),
                        CellValue::Real(c.action),
                        CellValue::Int(c.index_prime),
                    ]
                })
                .collect(),
        },
        TableKind::Indices => Table {
            kind: "indices",
            r,
            columns: vec!["j", "morse_halves", "index_prime", "degree_low", "degree_high"],
            rows: table
                .circles
                .iter()
                .map(|c| {
                    vec![
                        CellValue::Int(c.j as i64),
                        CellValue::Int(4 * c.j as i64 - 3),
                        CellValue::Int(c.index_prime),
                        CellValue::Int(c.index_prime),
                        CellValue::Int(c.index_prime + 1),
                    ]
                })
                .collect(),
        },
        TableKind::E1Page => {
            let page = floer::e1_page(&table)?;
            Table {
                kind: "e1page",
                r,
                columns: vec!["p", "q", "dimension"],
                rows: page
                    .support()
                    .into_iter()
                    .map(|cell| {
                        vec![
                            CellValue::Int(cell.0),
                            CellValue::Int(cell.1),
                            CellValue::Int(page.dimension(cell) as i64),
                        ]
                    })
                    .collect(),
            }
        }
    };
    Ok(built.render(format))
}
