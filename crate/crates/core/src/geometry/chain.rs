use serde::{Deserialize, Serialize};

use super::{AffineMap, Point, TpsWarp};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stage {
    Affine(AffineMap),
    Tps(TpsWarp),
}

impl Stage {
    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        match self {
            Stage::Affine(a) => a.apply(p),
            Stage::Tps(t) => t.apply(p),
        }
    }

    fn affine_part(&self) -> &AffineMap {
        match self {
            Stage::Affine(a) => a,
            Stage::Tps(t) => &t.affine,
        }
    }
}

/// Stopping rule for the numeric inverse of chains containing splines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InverseOptions {
    pub max_iterations: usize,
    /// Forward residual, in pixels, at which iteration stops.
    pub tolerance: f64,
}

impl Default for InverseOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20,
            tolerance: 0.01,
        }
    }
}

/// Stages applied left to right, mapping canonical coordinates into a frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarpChain {
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub inverse_options: InverseOptions,
}

impl Default for WarpChain {
    fn default() -> Self {
        Self::identity()
    }
}

impl WarpChain {
    pub fn identity() -> Self {
        Self::new(Vec::new())
    }

    pub fn new(stages: Vec<Stage>) -> Self {
        Self {
            stages,
            inverse_options: InverseOptions::default(),
        }
    }

    pub fn from_affine(map: AffineMap) -> Self {
        Self::new(vec![Stage::Affine(map)])
    }

    pub fn with_inverse_options(mut self, options: InverseOptions) -> Self {
        self.inverse_options = options;
        self
    }

    pub fn then(mut self, stage: Stage) -> Self {
        self.stages.push(stage);
        self
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        self.stages.iter().fold(p, |q, s| s.apply(q))
    }

    pub fn is_affine(&self) -> bool {
        self.stages.iter().all(|s| matches!(s, Stage::Affine(_)))
    }

    /// Product of all affine parts (spline stages contribute their affine term).
    /// Equals the chain exactly when [`WarpChain::is_affine`] holds.
    pub fn affine_approximation(&self) -> AffineMap {
        self.stages
            .iter()
            .fold(AffineMap::identity(), |acc, s| acc.then(s.affine_part()))
    }

    /// Precomputes what [`WarpChain::inverse`] needs.
    pub fn inverter(&self) -> Result<ChainInverse<'_>> {
        let seed = self.affine_approximation().inverse()?;
        Ok(ChainInverse { chain: self, seed })
    }

    /// Numeric inverse of a single point; see [`ChainInverse::apply`].
    pub fn inverse(&self, p: Point) -> Result<Point> {
        Ok(self.inverter()?.apply(p))
    }
}

/// Backward mapping for a chain.
///
/// Affine chains are inverted in closed form. With spline stages, the point is
/// seeded at the inverse of the affine approximation and refined by Newton
/// steps on `chain(q) - p` with a finite-difference Jacobian, until the forward
/// residual drops below the tolerance or the iteration cap is hit.
pub struct ChainInverse<'a> {
    chain: &'a WarpChain,
    seed: AffineMap,
}

const JACOBIAN_STEP: f64 = 1e-3;

impl ChainInverse<'_> {
    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        let mut q = self.seed.apply(p);
        if self.chain.is_affine() {
            return q;
        }
        let opts = self.chain.inverse_options;
        let mut f = self.chain.apply(q);
        let mut r = f - p;
        let mut err = r.x.hypot(r.y);
        for _ in 0..opts.max_iterations {
            if err <= opts.tolerance {
                break;
            }
            let fx = self.chain.apply(Point::new(q.x + JACOBIAN_STEP, q.y)) - f;
            let fy = self.chain.apply(Point::new(q.x, q.y + JACOBIAN_STEP)) - f;
            let (j00, j10) = (fx.x / JACOBIAN_STEP, fx.y / JACOBIAN_STEP);
            let (j01, j11) = (fy.x / JACOBIAN_STEP, fy.y / JACOBIAN_STEP);
            let det = j00 * j11 - j01 * j10;
            let mut step = if det.abs() > 1e-12 {
                Point::new((j11 * r.x - j01 * r.y) / det, (j00 * r.y - j10 * r.x) / det)
            } else {
                self.seed.apply_linear(r)
            };
            // Backtrack so the residual never grows.
            loop {
                let candidate = q - step;
                let fc = self.chain.apply(candidate);
                let rc = fc - p;
                let ec = rc.x.hypot(rc.y);
                if ec < err || step.x.hypot(step.y) < 1e-9 {
                    q = candidate;
                    f = fc;
                    r = rc;
                    err = ec;
                    break;
                }
                step = Point::new(step.x * 0.5, step.y * 0.5);
            }
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{affine_from_params, tps_fit};
    use crate::rng::SeededRng;
    use proptest::prelude::*;

    fn random_affine(rng: &mut SeededRng) -> AffineMap {
        affine_from_params(
            Point::new(rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0)),
            rng.symmetric(0.0, 30.0),
            rng.symmetric(1.0, 0.15),
            Point::new(rng.symmetric(0.0, 20.0), rng.symmetric(0.0, 20.0)),
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn affine_chain_matches_premultiplied_matrix(seed in any::<u64>(), len in 1usize..6) {
            let mut rng = SeededRng::new(seed, 0);
            let maps: Vec<AffineMap> = (0..len).map(|_| random_affine(&mut rng)).collect();
            let chain = WarpChain::new(maps.iter().copied().map(Stage::Affine).collect());
            let product = maps.iter().fold(AffineMap::identity(), |acc, m| acc.then(m));
            for _ in 0..20 {
                let p = Point::new(rng.uniform(-50.0, 150.0), rng.uniform(-50.0, 150.0));
                prop_assert!(chain.apply(p).distance(product.apply(p)) <= 1e-9);
            }
        }
    }

    #[test]
    fn tps_chain_inverse_is_accurate() {
        let mut rng = SeededRng::new(5, 0);
        let mut within = 0;
        let mut total = 0;
        for _ in 0..20 {
            // Dream-scale deformation of a 60 px object: 4x4 grid, +-10% jitter.
            let size = 60.0;
            let mut src = Vec::new();
            let mut dst = Vec::new();
            for j in 0..4 {
                for i in 0..4 {
                    let p = Point::new(20.0 + i as f64 * size / 3.0, 30.0 + j as f64 * size / 3.0);
                    src.push(p);
                    dst.push(Point::new(
                        p.x + rng.symmetric(0.0, 0.1 * size),
                        p.y + rng.symmetric(0.0, 0.1 * size),
                    ));
                }
            }
            let chain = WarpChain::new(vec![
                Stage::Tps(tps_fit(&src, &dst).unwrap()),
                Stage::Affine(random_affine(&mut rng)),
            ]);
            let inv = chain.inverter().unwrap();
            for j in 0..30 {
                for i in 0..30 {
                    let q = Point::new(20.0 + 2.0 * i as f64, 30.0 + 2.0 * j as f64);
                    let p = chain.apply(q);
                    let back = inv.apply(p);
                    total += 1;
                    if chain.apply(back).distance(p) <= 0.05 {
                        within += 1;
                    }
                }
            }
        }
        assert!(within as f64 >= 0.99 * total as f64, "{within}/{total}");
    }

    #[test]
    fn identity_inverse_is_exact() {
        let chain = WarpChain::identity();
        let p = Point::new(3.25, -7.5);
        assert_eq!(chain.inverse(p).unwrap(), p);
    }
}
