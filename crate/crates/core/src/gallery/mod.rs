//! Builders for the experiment families: cohesive fracture in one and two
//! dimensions, the elliptic M-matrix problem, heat-equation control and
//! super-resolution imaging.

pub mod control;
pub mod fracture1d;
pub mod fracture2d;
pub mod imaging;
pub mod mmatrix;
pub mod quasistatic;

pub use control::{build_control, ControlModel};
pub use fracture1d::Fracture1DModel;
pub use fracture2d::{BoundaryDatum, Fracture2DModel, Material, TetherMode};
pub use imaging::{build_imaging, emitter_errors, top_k_support, ImagingModel, ImagingProblem, Scene};
pub use mmatrix::build_mmatrix;
pub use quasistatic::{
    quasi_static_run, Phase, PhaseStep, PhaseThresholds, QuasiStaticModel, QuasiStaticRun, QuasiStaticSettings,
};

/// Uniform time grid `0, dt, 2dt, …` up to and including `t_end`.
pub fn time_grid(t_end: f64, dt: f64) -> Vec<f64> {
    let steps = (t_end / dt + 1e-9).floor() as usize;
    (0..=steps).map(|k| (k as f64 * dt * 1e12).round() / 1e12).collect()
}
