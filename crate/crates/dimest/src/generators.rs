//! Seeded samplers for benchmark supports of known intrinsic dimension,
//! plus additive Gaussian noise.
//!
//! Every sampler draws from a ChaCha stream keyed by the spec seed, so a
//! given (spec, n) pair always produces the identical cloud.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Supported sample supports.
///
/// - `Hypercube`: uniform on `[0,1]^k x {0}^(d-k)`.
/// - `Sphere`: uniform on the unit sphere in `R^d` (so `k = d - 1`).
/// - `Affine`: uniform on a `k`-cube isometrically embedded in `R^d` by a
///   seeded orthonormal frame plus a seeded offset.
/// - `SwissRoll`: `(t cos t, h, t sin t)` with `t ~ U[1.5π, 4.5π]`,
///   `h ~ U[0, 21]`, in `R^3`.
/// - `Helix`: helicoid sheet `(v cos u, v sin u, u/2)` with `u ~ U[0, 4π]`,
///   `v ~ U[0, 1]`, in `R^3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Hypercube,
    Sphere,
    Affine,
    SwissRoll,
    Helix,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            GeneratorKind::Hypercube => "hypercube",
            GeneratorKind::Sphere => "sphere",
            GeneratorKind::Affine => "affine",
            GeneratorKind::SwissRoll => "swiss_roll",
            GeneratorKind::Helix => "helix",
        };
        f.write_str(name)
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hypercube" => Ok(GeneratorKind::Hypercube),
            "sphere" => Ok(GeneratorKind::Sphere),
            "affine" => Ok(GeneratorKind::Affine),
            "swiss_roll" | "swiss-roll" => Ok(GeneratorKind::SwissRoll),
            "helix" => Ok(GeneratorKind::Helix),
            other => Err(Error::invalid(format!(
                "unknown generator kind {other:?}; expected one of \
                 hypercube, sphere, affine, swiss_roll, helix"
            ))),
        }
    }
}

/// A fully seeded description of a sample distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    /// Dimension of the ambient space the points live in.
    pub ambient_dim: usize,
    /// Dimension of the support itself.
    pub intrinsic_dim: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, ambient_dim: usize, intrinsic_dim: usize, seed: u64) -> Self {
        GeneratorSpec {
            kind,
            ambient_dim,
            intrinsic_dim,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (d, k) = (self.ambient_dim, self.intrinsic_dim);
        if d == 0 {
            return Err(Error::invalid("ambient_dim must be at least 1"));
        }
        if k == 0 || k > d {
            return Err(Error::invalid(format!(
                "intrinsic_dim must satisfy 1 <= k <= d, got k={k}, d={d}"
            )));
        }
        match self.kind {
            GeneratorKind::Sphere if k != d - 1 => Err(Error::invalid(format!(
                "sphere requires intrinsic_dim = ambient_dim - 1, got k={k}, d={d}"
            ))),
            GeneratorKind::SwissRoll if (d, k) != (3, 2) => Err(Error::invalid(format!(
                "swiss_roll is a surface in R^3, requires d=3 and k=2, got d={d}, k={k}"
            ))),
            GeneratorKind::Helix if (d, k) != (3, 2) => Err(Error::invalid(format!(
                "helix is a surface in R^3, requires d=3 and k=2, got d={d}, k={k}"
            ))),
            _ => Ok(()),
        }
    }

    /// Draws `n` i.i.d. points.
    pub fn sample(&self, n: usize) -> Result<PointCloud> {
        self.validate()?;
        if n == 0 {
            return Err(Error::invalid("sample size must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let d = self.ambient_dim;
        let k = self.intrinsic_dim;
        let mut coords = Vec::with_capacity(n * d);
        match self.kind {
            GeneratorKind::Hypercube => {
                for _ in 0..n {
                    for _ in 0..k {
                        coords.push(rng.random::<f64>());
                    }
                    coords.resize(coords.len() + (d - k), 0.0);
                }
            }
            GeneratorKind::Sphere => {
                for _ in 0..n {
                    loop {
                        let v: Vec<f64> =
                            (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                        if norm > 1e-12 {
                            coords.extend(v.iter().map(|x| x / norm));
                            break;
                        }
                    }
                }
            }
            GeneratorKind::Affine => {
                let (frame, offset) = affine_frame(&mut rng, d, k);
                for _ in 0..n {
                    let u: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
                    for row in 0..d {
                        let mut x = offset[row];
                        for (col, uc) in u.iter().enumerate() {
                            x += frame[(row, col)] * uc;
                        }
                        coords.push(x);
                    }
                }
            }
            GeneratorKind::SwissRoll => {
                for _ in 0..n {
                    let t = rng.random_range(1.5 * std::f64::consts::PI..4.5 * std::f64::consts::PI);
                    let h = rng.random_range(0.0..21.0);
                    coords.extend_from_slice(&[t * t.cos(), h, t * t.sin()]);
                }
            }
            GeneratorKind::Helix => {
                for _ in 0..n {
                    let u = rng.random_range(0.0..4.0 * std::f64::consts::PI);
                    let v = rng.random_range(0.0..1.0);
                    coords.extend_from_slice(&[v * u.cos(), v * u.sin(), 0.5 * u]);
                }
            }
        }
        PointCloud::from_flat(coords, d)
    }
}

/// Seeded orthonormal `d x k` frame and offset for the affine embedding.
fn affine_frame(rng: &mut ChaCha8Rng, d: usize, k: usize) -> (DMatrix<f64>, Vec<f64>) {
    let gaussian = DMatrix::from_fn(d, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let frame = gaussian.qr().q();
    let offset: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
    (frame, offset)
}

/// Additive isotropic Gaussian noise with standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec { sigma: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::invalid(format!(
                "noise sigma must be a nonnegative real, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Adds per-coordinate `N(0, sigma^2)` noise. `sigma = 0` returns a
/// coordinate-identical copy without touching the generator.
pub fn add_noise(cloud: &PointCloud, noise: &NoiseSpec, seed: u64) -> Result<PointCloud> {
    noise.validate()?;
    if noise.sigma == 0.0 {
        return Ok(cloud.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<f64> = cloud
        .coords()
        .iter()
        .map(|v| v + noise.sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    PointCloud::from_flat(coords, cloud.ambient_dim())
}
