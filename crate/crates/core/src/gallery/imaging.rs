//! Super-resolution of point emitters: a fine `s × s` scene is blurred by a
//! truncated Gaussian PSF, summed into coarse pixels and corrupted by white
//! noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::penalty::Penalty;
use crate::problem::CompositeProblem;
use crate::sparse::SparseMatrix;

/// Square 0-1 emitter mask, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub side: usize,
    pub pixels: Vec<f64>,
}

impl Scene {
    pub fn empty(side: usize) -> Self {
        Self {
            side,
            pixels: vec![0.0; side * side],
        }
    }

    /// A `+` of emitters every `spacing` pixels along the two centre lines,
    /// leaving a margin of one eighth of the side. The lines cross on an
    /// emitter whenever `spacing` divides `side/2 − side/8`.
    pub fn cross(side: usize, spacing: usize) -> Self {
        let mut s = Self::empty(side);
        let c = side / 2;
        let margin = side / 8;
        for i in (margin..side - margin).step_by(spacing.max(1)) {
            s.pixels[c * side + i] = 1.0;
            s.pixels[i * side + c] = 1.0;
        }
        s
    }

    /// One emitter at the centre pixel.
    pub fn single(side: usize) -> Self {
        let mut s = Self::empty(side);
        s.pixels[(side / 2) * side + side / 2] = 1.0;
        s
    }

    /// Each pixel lit independently with probability `density`.
    pub fn random(side: usize, density: f64, seed: u64) -> Self {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pixels = (0..side * side)
            .map(|_| {
                if rng.random_bool(density.clamp(0.0, 1.0)) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Self { side, pixels }
    }

    pub fn emitters(&self) -> usize {
        self.pixels.iter().filter(|&&v| v != 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagingModel {
    pub fine: usize,
    pub coarse: usize,
    /// Variance of the Gaussian PSF in fine pixels².
    pub psf_variance: f64,
    /// Kernel half-width; the stamp is `(2r+1)²`.
    pub psf_radius: usize,
    /// Noise RMS relative to the clean signal RMS.
    pub noise: f64,
    pub seed: u64,
    pub lambda: f64,
    pub tau: f64,
}

impl Default for ImagingModel {
    fn default() -> Self {
        Self {
            fine: 128,
            coarse: 16,
            psf_variance: 8.0,
            psf_radius: 12,
            noise: 0.01,
            seed: 0,
            lambda: 1e-9,
            tau: 0.1,
        }
    }
}

pub struct ImagingProblem {
    pub problem: CompositeProblem,
    pub truth: Vec<f64>,
    pub clean: Vec<f64>,
    pub fine: usize,
    pub coarse: usize,
}

impl ImagingModel {
    fn validate(&self) -> Result<()> {
        if self.fine == 0 || self.coarse == 0 || !self.fine.is_multiple_of(self.coarse) {
            return Err(Error::InvalidParameter(format!(
                "fine size {} must be a positive multiple of coarse size {}",
                self.fine, self.coarse
            )));
        }
        if !(self.psf_variance > 0.0) || !(self.noise >= 0.0) {
            return Err(Error::InvalidParameter(
                "PSF variance must be positive and noise nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Normalized 1D factor of the separable PSF.
    pub fn kernel(&self) -> Vec<f64> {
        let r = self.psf_radius as isize;
        let k: Vec<f64> = (-r..=r)
            .map(|d| (-(d * d) as f64 / (2.0 * self.psf_variance)).exp())
            .collect();
        let s: f64 = k.iter().sum();
        k.into_iter().map(|v| v / s).collect()
    }

    /// `Kₓ[c][f]`: mass that fine column `f` sends into coarse column `c`.
    fn binned_kernel(&self) -> Vec<Vec<(usize, f64)>> {
        let k = self.kernel();
        let r = self.psf_radius as isize;
        let bin = self.fine / self.coarse;
        (0..self.fine)
            .map(|f| {
                let mut acc = vec![0.0; self.coarse];
                for d in -r..=r {
                    let p = f as isize + d;
                    if (0..self.fine as isize).contains(&p) {
                        acc[p as usize / bin] += k[(d + r) as usize];
                    }
                }
                acc.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect()
            })
            .collect()
    }

    /// Blur followed by binning, `coarse² × fine²`.
    pub fn operator(&self) -> Result<SparseMatrix> {
        self.validate()?;
        let kx = self.binned_kernel();
        let (f, c) = (self.fine, self.coarse);
        let mut t = Vec::new();
        for fy in 0..f {
            for fx in 0..f {
                for &(cy, vy) in &kx[fy] {
                    for &(cx, vx) in &kx[fx] {
                        t.push((cy * c + cx, fy * f + fx, vy * vx));
                    }
                }
            }
        }
        Ok(SparseMatrix::from_triplets(c * c, f * f, t)?)
    }
}

pub fn build_imaging(model: &ImagingModel, scene: &Scene) -> Result<ImagingProblem> {
    if scene.side != model.fine {
        return Err(Error::InvalidParameter(format!(
            "scene is {}×{} but the model expects {}×{}",
            scene.side, scene.side, model.fine, model.fine
        )));
    }
    let a = model.operator()?;
    let clean = a.mul_vec(&scene.pixels);
    let rms = (clean.iter().map(|v| v * v).sum::<f64>() / clean.len() as f64).sqrt();
    let sd = model.noise * rms;
    let mut b = clean.clone();
    if sd > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
        let normal = Normal::new(0.0, sd).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        for v in &mut b {
            *v += normal.sample(&mut rng);
        }
    }
    let n = model.fine * model.fine;
    let problem = CompositeProblem::new(
        a,
        b,
        SparseMatrix::identity(n),
        Penalty::power_law(model.lambda, model.tau)?,
        0.5,
    )?;
    Ok(ImagingProblem {
        problem,
        truth: scene.pixels.clone(),
        clean,
        fine: model.fine,
        coarse: model.coarse,
    })
}

/// `(Error+, Error−)`: pixels active in `recovered` but not in `truth`, and
/// the reverse. A pixel is active when its value exceeds `threshold`.
pub fn emitter_errors(recovered: &[f64], truth: &[f64], threshold: f64) -> Result<(usize, usize)> {
    if recovered.len() != truth.len() {
        return Err(Error::InvalidParameter(format!(
            "images differ in size: {} vs {}",
            recovered.len(),
            truth.len()
        )));
    }
    let mut plus = 0;
    let mut minus = 0;
    for (&r, &t) in recovered.iter().zip(truth) {
        match (r > threshold, t > threshold) {
            (true, false) => plus += 1,
            (false, true) => minus += 1,
            _ => {}
        }
    }
    Ok((plus, minus))
}

/// Keep the `k` largest entries of `x` at value 1 and zero the rest.
pub fn top_k_support(x: &[f64], k: usize) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut out = vec![0.0; x.len()];
    for &i in idx.iter().take(k) {
        out[i] = 1.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ImagingModel {
        ImagingModel {
            fine: 32,
            coarse: 32,
            noise: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn zero_scene_gives_zero_data() {
        let m = ImagingModel {
            fine: 32,
            coarse: 4,
            ..Default::default()
        };
        let ip = build_imaging(&m, &Scene::empty(32)).unwrap();
        assert!(ip.problem.b().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_emitter_is_the_stamp() {
        let m = small();
        let ip = build_imaging(&m, &Scene::single(32)).unwrap();
        let k = m.kernel();
        let r = m.psf_radius;
        let c = 16;
        for y in 0..32usize {
            for x in 0..32usize {
                let (dy, dx) = (y as isize - c as isize, x as isize - c as isize);
                let expect = if dy.unsigned_abs() <= r && dx.unsigned_abs() <= r {
                    k[(dy + r as isize) as usize] * k[(dx + r as isize) as usize]
                } else {
                    0.0
                };
                assert!((ip.problem.b()[y * 32 + x] - expect).abs() < 1e-15);
            }
        }
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn column_sums_are_mass_preserving_inside() {
        let m = ImagingModel {
            fine: 64,
            coarse: 8,
            ..Default::default()
        };
        let a = m.operator().unwrap();
        let sums = a.transpose().mul_vec(&vec![1.0; a.rows()]);
        let r = m.psf_radius;
        for y in r..64 - r {
            for x in r..64 - r {
                assert!((sums[y * 64 + x] - 1.0).abs() < 1e-13);
            }
        }
        assert!(sums[0] < 1.0);
    }

    #[test]
    fn noise_level_matches_request() {
        let m = ImagingModel {
            fine: 64,
            coarse: 8,
            noise: 0.05,
            seed: 3,
            ..Default::default()
        };
        let ip = build_imaging(&m, &Scene::cross(64, 1)).unwrap();
        let diff: Vec<f64> = ip.problem.b().iter().zip(&ip.clean).map(|(a, b)| a - b).collect();
        let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
        let ratio = rms(&diff) / rms(&ip.clean);
        assert!((ratio - 0.05).abs() < 0.02, "{ratio}");
        let again = build_imaging(&m, &Scene::cross(64, 1)).unwrap();
        assert_eq!(again.problem.b(), ip.problem.b());
    }

    #[test]
    fn error_counts() {
        let truth = Scene::cross(16, 2).pixels;
        let k = truth.iter().filter(|&&v| v > 0.5).count();
        assert_eq!(emitter_errors(&truth, &truth, 0.5).unwrap(), (0, 0));
        assert_eq!(emitter_errors(&vec![0.0; 256], &truth, 0.5).unwrap(), (0, k));
        assert_eq!(emitter_errors(&vec![1.0; 256], &truth, 0.5).unwrap(), (256 - k, 0));
        assert!(emitter_errors(&[0.0], &truth, 0.5).is_err());
    }

    #[test]
    fn cross_counts() {
        assert_eq!(Scene::cross(128, 1).emitters(), 191);
        assert_eq!(Scene::cross(128, 8).emitters(), 23);
        assert_eq!(Scene::cross(128, 8).pixels[64 * 128 + 64], 1.0);
    }

    #[test]
    fn top_k_keeps_largest() {
        assert_eq!(top_k_support(&[0.1, 0.9, -1.0, 0.5], 2), vec![0.0, 1.0, 0.0, 1.0]);
    }
}
