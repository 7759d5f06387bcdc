//! Linear symplectic phase space (ℝ^{2n}, ω), Lagrangian frames, and paths of
//! Lagrangian subspaces.
//!
//! Conventions, fixed once here and used everywhere:
//! ω(x, y) = xᵀ J y with J = [[0, I], [−I, 0]] in the basis
//! (e_1, …, e_n, f_1, …, f_n), so ω(e_i, f_i) = +1 and J² = −1.

use crate::error::Error;
use crate::numeric;
use crate::Result;
use nalgebra::DMatrix;
use std::rc::Rc;

/// Relative singular-value threshold for rank decisions on frames.
pub const RANK_REL_TOL: f64 = 1e-8;

/// Condition-number ceiling above which an input frame is rejected.
pub const FRAME_CONDITION_LIMIT: f64 = 1e12;

/// Isotropy tolerance ‖BᵀJB‖ for a frame with orthonormal columns.
pub const ISOTROPY_TOL: f64 = 1e-10;

/// The standard symplectic ℝ^{2n}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticSpace {
    n: usize,
}

impl SymplecticSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("symplectic space needs n >= 1"));
        }
        Ok(SymplecticSpace { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// The matrix J with ω(x, y) = xᵀ J y.
    pub fn j_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            j[(i, n + i)] = 1.0;
            j[(n + i, i)] = -1.0;
        }
        j
    }

    /// ω(x, y) for column vectors of length 2n.
    pub fn omega(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        (x.transpose() * self.j_matrix() * y)[(0, 0)]
    }

    /// The Lagrangian ℝⁿ×0 as a frame.
    pub fn horizontal(&self) -> LagrangianFrame {
        let mut b = DMatrix::zeros(2 * self.n, self.n);
        for i in 0..self.n {
            b[(i, i)] = 1.0;
        }
        LagrangianFrame::new(*self, b).expect("horizontal frame is Lagrangian")
    }

    /// The Lagrangian 0×ℝⁿ as a frame.
    pub fn vertical_complement(&self) -> LagrangianFrame {
        let mut b = DMatrix::zeros(2 * self.n, self.n);
        for i in 0..self.n {
            b[(self.n + i, i)] = 1.0;
        }
        LagrangianFrame::new(*self, b).expect("vertical frame is Lagrangian")
    }
}

/// A Lagrangian subspace of ℝ^{2n}, stored as a 2n×n basis matrix with
/// orthonormal columns.
#[derive(Debug, Clone)]
pub struct LagrangianFrame {
    space: SymplecticSpace,
    basis: DMatrix<f64>,
}

impl LagrangianFrame {
    /// Builds a frame from any spanning 2n×n matrix. The columns are
    /// orthonormalized; isotropy and rank are verified.
    pub fn new(space: SymplecticSpace, basis: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = basis.shape();
        if rows != space.dim() || cols != space.n() {
            return Err(Error::invalid(format!(
                "frame must be {}x{}, got {}x{}",
                space.dim(),
                space.n(),
                rows,
                cols
            )));
        }
        let cond = numeric::condition_estimate(&basis);
        if !cond.is_finite() || cond > FRAME_CONDITION_LIMIT {
            return Err(Error::Degenerate { what: "input frame basis".into(), cond });
        }
        let q = numeric::orthonormalize_columns(&basis);
        let defect = (q.transpose() * space.j_matrix() * &q).amax();
        if defect > ISOTROPY_TOL {
            return Err(Error::invalid(format!(
                "frame is not isotropic: |B^T J B| = {defect:.3e}"
            )));
        }
        Ok(LagrangianFrame { space, basis: q })
    }

    pub fn space(&self) -> SymplecticSpace {
        self.space
    }

    /// The orthonormal basis matrix (2n×n).
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Image of this frame under an invertible matrix `m` (2n×2n).
    pub fn transform(&self, m: &DMatrix<f64>) -> Result<Self> {
        LagrangianFrame::new(self.space, m * &self.basis)
    }

    /// An orthogonal Lagrangian complement: the span of J·B.
    pub fn orthogonal_complement(&self) -> DMatrix<f64> {
        self.space.j_matrix() * &self.basis
    }
}

/// dim(λ ∩ λ′) for two Lagrangian frames, via the rank of the concatenated
/// basis matrix: dim = 2n − rank[B | B′].
pub fn intersection_dimension(a: &LagrangianFrame, b: &LagrangianFrame) -> Result<usize> {
    if a.space() != b.space() {
        return Err(Error::invalid("frames live in different spaces"));
    }
    let n = a.space().n();
    let mut cat = DMatrix::zeros(2 * n, 2 * n);
    cat.view_mut((0, 0), (2 * n, n)).copy_from(a.basis());
    cat.view_mut((0, n), (2 * n, n)).copy_from(b.basis());
    Ok(2 * n - numeric::svd_rank(&cat, RANK_REL_TOL))
}

/// Orthonormal basis (as columns) of λ ∩ λ′.
pub fn intersection_basis(a: &LagrangianFrame, b: &LagrangianFrame) -> DMatrix<f64> {
    let n = a.space().n();
    // Kernel vectors (x; y) of [B | -B'] satisfy Bx = B'y, so Bx spans λ ∩ λ'.
    let mut cat = DMatrix::zeros(2 * n, 2 * n);
    cat.view_mut((0, 0), (2 * n, n)).copy_from(a.basis());
    cat.view_mut((0, n), (2 * n, n)).copy_from(&(-b.basis()));
    let ker = numeric::nullspace(&cat, RANK_REL_TOL);
    if ker.ncols() == 0 {
        return DMatrix::zeros(2 * n, 0);
    }
    let coeffs = ker.rows(0, n).into_owned();
    numeric::orthonormalize_columns(&(a.basis() * coeffs))
}

/// A path of Lagrangian subspaces over a closed parameter interval.
///
/// The rule returns any spanning 2n×n basis; it does not have to be
/// orthonormal or vary continuously as a matrix, only the subspace must vary
/// smoothly.
#[derive(Clone)]
pub struct LagrangianPath {
    space: SymplecticSpace,
    domain: (f64, f64),
    rule: Rc<dyn Fn(f64) -> DMatrix<f64>>,
}

impl std::fmt::Debug for LagrangianPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LagrangianPath")
            .field("space", &self.space)
            .field("domain", &self.domain)
            .finish()
    }
}

impl LagrangianPath {
    pub fn new(
        space: SymplecticSpace,
        domain: (f64, f64),
        rule: impl Fn(f64) -> DMatrix<f64> + 'static,
    ) -> Result<Self> {
        if !(domain.0 < domain.1) {
            return Err(Error::invalid("path domain must satisfy a < b"));
        }
        let path = LagrangianPath { space, domain, rule: Rc::new(rule) };
        // Validate the endpoints eagerly; interior samples are validated lazily.
        path.frame_at(domain.0)?;
        path.frame_at(domain.1)?;
        Ok(path)
    }

    /// A constant path at the given frame.
    pub fn constant(frame: &LagrangianFrame, domain: (f64, f64)) -> Result<Self> {
        let basis = frame.basis().clone();
        LagrangianPath::new(frame.space(), domain, move |_| basis.clone())
    }

    pub fn space(&self) -> SymplecticSpace {
        self.space
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Raw basis at `t` (no validation, used by scan loops).
    pub fn raw_basis(&self, t: f64) -> DMatrix<f64> {
        (self.rule)(t)
    }

    /// Validated orthonormal frame at `t`.
    pub fn frame_at(&self, t: f64) -> Result<LagrangianFrame> {
        LagrangianFrame::new(self.space, (self.rule)(t))
    }

    /// The same path restricted to a subinterval.
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        let (lo, hi) = self.domain;
        if a < lo - 1e-12 || b > hi + 1e-12 || !(a < b) {
            return Err(Error::invalid("restriction outside the path domain"));
        }
        Ok(LagrangianPath { space: self.space, domain: (a, b), rule: self.rule.clone() })
    }

    /// The path t ↦ M(t)·λ(t) for a matrix-valued map `m`.
    pub fn map_frames(&self, m: impl Fn(f64) -> DMatrix<f64> + 'static) -> Self {
        let rule = self.rule.clone();
        LagrangianPath {
            space: self.space,
            domain: self.domain,
            rule: Rc::new(move |t| m(t) * rule(t)),
        }
    }

    /// The time-reversed path on the same domain.
    pub fn reversed(&self) -> Self {
        let rule = self.rule.clone();
        let (a, b) = self.domain;
        LagrangianPath {
            space: self.space,
            domain: (a, b),
            rule: Rc::new(move |t| rule(a + b - t)),
        }
    }
}
