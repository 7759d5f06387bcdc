//! Seeded random generators for frames, symplectic matrices and paths.
//!
//! Everything is driven by an explicit stream cipher RNG so that any failure
//! reproduces from its seed alone.

use crate::maslov::{maslov_index_pair, MaslovOptions};
use crate::numeric;
use crate::symplectic::{LagrangianFrame, LagrangianPath, SymplecticSpace};
use crate::{Error, HalfInt, Result};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub struct Sampler {
    rng: ChaCha20Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha20Rng::seed_from_u64(seed) }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return lo;
        }
        self.rng.gen_range(lo..hi)
    }

    pub fn symmetric_matrix(&mut self, n: usize, scale: f64) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x = self.uniform(-scale, scale);
                s[(i, j)] = x;
                s[(j, i)] = x;
            }
        }
        s
    }

    /// exp(J·S) for random symmetric S: a symplectic matrix, reachable from
    /// the identity.
    pub fn symplectic_matrix(&mut self, space: SymplecticSpace, scale: f64) -> DMatrix<f64> {
        let s = self.symmetric_matrix(2 * space.n(), scale);
        numeric::expm(&(space.j_matrix() * s))
    }

    pub fn lagrangian_frame(&mut self, space: SymplecticSpace) -> LagrangianFrame {
        loop {
            let m = self.symplectic_matrix(space, 1.0);
            let b = m * space.horizontal().basis();
            if let Ok(f) = LagrangianFrame::new(space, b) {
                return f;
            }
        }
    }

    /// Smooth one-generator Lagrangian path t ↦ exp((t − lo)·J·S)·B₀.
    pub fn lagrangian_path(
        &mut self,
        space: SymplecticSpace,
        domain: (f64, f64),
        scale: f64,
    ) -> Result<LagrangianPath> {
        let g = space.j_matrix() * self.symmetric_matrix(2 * space.n(), scale);
        let b0 = self.lagrangian_frame(space).basis().clone();
        let lo = domain.0;
        LagrangianPath::new(space, domain, move |t| {
            numeric::expm(&(&g * (t - lo))) * &b0
        })
    }

    /// Uniformly seeded point of T*S² with speed drawn from `speed_range`.
    pub fn covector(&mut self, speed_range: (f64, f64)) -> crate::sphere::Covector {
        let dir = |s: &mut Self| loop {
            let w = nalgebra::Vector3::new(
                s.uniform(-1.0, 1.0),
                s.uniform(-1.0, 1.0),
                s.uniform(-1.0, 1.0),
            );
            let n = w.norm();
            if n > 0.1 && n <= 1.0 {
                return w / n;
            }
        };
        loop {
            let u = dir(self);
            let raw = dir(self);
            let tangent = raw - u * u.dot(&raw);
            if tangent.norm() < 0.1 {
                continue;
            }
            let speed = self.uniform(speed_range.0, speed_range.1);
            let v = tangent * (speed / tangent.norm());
            if let Ok(xi) = crate::sphere::Covector::new(u, v) {
                return xi;
            }
        }
    }

    /// A pair of independent paths whose crossings all classify, together
    /// with the computed index. Degenerate draws are discarded and resampled;
    /// the draw sequence is part of the seed's reproducible stream.
    pub fn regular_pair(
        &mut self,
        space: SymplecticSpace,
        scale: f64,
        opts: &MaslovOptions,
        max_tries: usize,
    ) -> Result<(LagrangianPath, LagrangianPath, HalfInt)> {
        for _ in 0..max_tries {
            let a = self.lagrangian_path(space, (0.0, 1.0), scale)?;
            let b = self.lagrangian_path(space, (0.0, 1.0), scale)?;
            if let Ok(mu) = maslov_index_pair(&a, &b, opts) {
                return Ok((a, b, mu));
            }
        }
        Err(Error::Unresolved(format!(
            "no classifiable pair in {max_tries} draws"
        )))
    }

    /// Family of paths with endpoints pinned for every deformation parameter:
    /// λ_u(t) = exp(t·G₁)·exp(u·sin(πt)·G₂)·B₀ on [0, 1].
    pub fn pinned_family(&mut self, space: SymplecticSpace, scale: f64) -> PinnedFamily {
        let g1 = space.j_matrix() * self.symmetric_matrix(2 * space.n(), scale);
        let g2 = space.j_matrix() * self.symmetric_matrix(2 * space.n(), scale);
        let b0 = self.lagrangian_frame(space).basis().clone();
        PinnedFamily { space, g1, g2, b0 }
    }
}

/// See [`Sampler::pinned_family`]: sin(π·0) = sin(π·1) = 0 makes both
/// endpoints independent of the deformation parameter.
pub struct PinnedFamily {
    space: SymplecticSpace,
    g1: DMatrix<f64>,
    g2: DMatrix<f64>,
    b0: DMatrix<f64>,
}

impl PinnedFamily {
    pub fn path(&self, u: f64) -> Result<LagrangianPath> {
        let g1 = self.g1.clone();
        let g2 = self.g2.clone();
        let b0 = self.b0.clone();
        LagrangianPath::new(self.space, (0.0, 1.0), move |t| {
            let bend = numeric::expm(&(&g2 * (u * (std::f64::consts::PI * t).sin())));
            numeric::expm(&(&g1 * t)) * bend * &b0
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_draws_are_reproducible() {
        let space = SymplecticSpace::new(2).unwrap();
        let a = Sampler::new(7).symplectic_matrix(space, 1.0);
        let b = Sampler::new(7).symplectic_matrix(space, 1.0);
        assert_eq!(a, b);
        let c = Sampler::new(8).symplectic_matrix(space, 1.0);
        assert_ne!(a, c);
    }

    #[test]
    fn random_symplectic_matrices_preserve_the_form() {
        let space = SymplecticSpace::new(3).unwrap();
        let mut s = Sampler::new(11);
        let j = space.j_matrix();
        for _ in 0..5 {
            let m = s.symplectic_matrix(space, 1.2);
            let defect = (m.transpose() * &j * &m - &j).norm();
            assert!(defect < 1e-10, "defect {defect}");
        }
    }

    #[test]
    fn pinned_family_has_fixed_endpoints() {
        let space = SymplecticSpace::new(2).unwrap();
        let fam = Sampler::new(3).pinned_family(space, 0.8);
        let p0 = fam.path(0.0).unwrap();
        let p1 = fam.path(1.0).unwrap();
        for t in [0.0, 1.0] {
            let f0 = p0.frame_at(t).unwrap();
            let f1 = p1.frame_at(t).unwrap();
            assert_eq!(
                crate::symplectic::intersection_dimension(&f0, &f1).unwrap(),
                2
            );
        }
    }
}
