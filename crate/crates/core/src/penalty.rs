//! Concave sparsity penalties and their smoothing.
//!
//! Three penalty families are supported, all even, nondecreasing on the
//! positive half-line and concave there:
//!
//! * power law `λ|t|^τ` with `τ ∈ (0, 1]`,
//! * SCAD (smoothly clipped absolute deviation) with shape `τ > 1`,
//! * MCP (minimax concave penalty) with shape `τ > 1`.
//!
//! [`SmoothedPenalty`] replaces `φ(√t)` by a linear function on `[0, ε²]`,
//! which makes `t ↦ Ψ_ε(t²)` continuously differentiable and yields the
//! reweighting weight used by the monotone iteration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PenaltyKind {
    PowerLaw,
    Scad,
    Mcp,
}

impl std::fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PenaltyKind::PowerLaw => "powerlaw",
            PenaltyKind::Scad => "scad",
            PenaltyKind::Mcp => "mcp",
        })
    }
}

impl std::str::FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "powerlaw" | "power" | "lp" | "ltau" => Ok(PenaltyKind::PowerLaw),
            "scad" => Ok(PenaltyKind::Scad),
            "mcp" => Ok(PenaltyKind::Mcp),
            other => Err(Error::InvalidParameter(format!("unknown penalty kind `{other}`"))),
        }
    }
}

/// A scalar penalty `φ` with weight `lambda` and shape `tau`.
///
/// `lambda = 0` is admitted and yields the zero penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    kind: PenaltyKind,
    lambda: f64,
    tau: f64,
}

impl Penalty {
    pub fn new(kind: PenaltyKind, lambda: f64, tau: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "penalty weight must be finite and nonnegative, got {lambda}"
            )));
        }
        let ok = match kind {
            PenaltyKind::PowerLaw => tau > 0.0 && tau <= 1.0,
            PenaltyKind::Scad | PenaltyKind::Mcp => tau > 1.0 && tau.is_finite(),
        };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "shape tau = {tau} is not admissible for the {kind} penalty"
            )));
        }
        Ok(Self { kind, lambda, tau })
    }

    pub fn power_law(lambda: f64, tau: f64) -> Result<Self> {
        Self::new(PenaltyKind::PowerLaw, lambda, tau)
    }

    pub fn scad(lambda: f64, tau: f64) -> Result<Self> {
        Self::new(PenaltyKind::Scad, lambda, tau)
    }

    pub fn mcp(lambda: f64, tau: f64) -> Result<Self> {
        Self::new(PenaltyKind::Mcp, lambda, tau)
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Same penalty with a different weight.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.kind, lambda, self.tau)
    }

    /// Same penalty with a different shape.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.kind, self.lambda, tau)
    }

    /// Threshold `λτ` beyond which SCAD and MCP are constant.
    pub fn plateau_start(&self) -> Option<f64> {
        match self.kind {
            PenaltyKind::PowerLaw => None,
            PenaltyKind::Scad | PenaltyKind::Mcp => Some(self.lambda * self.tau),
        }
    }

    pub fn phi(&self, t: f64) -> f64 {
        let s = t.abs();
        let (l, tau) = (self.lambda, self.tau);
        match self.kind {
            PenaltyKind::PowerLaw => {
                if s == 0.0 {
                    0.0
                } else {
                    l * s.powf(tau)
                }
            }
            PenaltyKind::Scad => {
                if s <= l {
                    l * s
                } else if s < l * tau {
                    (l * tau * s - 0.5 * (s * s + l * l)) / (tau - 1.0)
                } else {
                    0.5 * l * l * (tau + 1.0)
                }
            }
            PenaltyKind::Mcp => {
                if s < l * tau {
                    l * (s - s * s / (2.0 * l * tau))
                } else {
                    0.5 * l * l * tau
                }
            }
        }
    }

    /// Derivative of `φ`, an odd function.
    ///
    /// Fails at `t = 0` for the power law with `τ < 1`, where the derivative
    /// is unbounded; callers should use [`SmoothedPenalty::weight`] instead.
    pub fn phi_prime(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return match self.kind {
                PenaltyKind::PowerLaw if self.tau < 1.0 && self.lambda > 0.0 => Err(Error::DerivativeDomain),
                _ => Ok(0.0),
            };
        }
        Ok(t.signum() * self.slope(t.abs()))
    }

    /// `φ'(s)` for `s > 0`.
    pub(crate) fn slope(&self, s: f64) -> f64 {
        let (l, tau) = (self.lambda, self.tau);
        match self.kind {
            PenaltyKind::PowerLaw => {
                if tau == 1.0 {
                    l
                } else {
                    l * tau * s.powf(tau - 1.0)
                }
            }
            PenaltyKind::Scad => {
                if s <= l {
                    l
                } else if s < l * tau {
                    (l * tau - s) / (tau - 1.0)
                } else {
                    0.0
                }
            }
            PenaltyKind::Mcp => {
                if s < l * tau {
                    l * (1.0 - s / (l * tau))
                } else {
                    0.0
                }
            }
        }
    }

    pub fn smoothed(&self, epsilon: f64) -> Result<SmoothedPenalty> {
        SmoothedPenalty::new(*self, epsilon)
    }

    /// Scalar proximal map `argmin_z ½(z − v)² + η φ(z)`.
    ///
    /// Ties between `z = 0` and a nonzero candidate resolve to `0`.
    pub fn prox(&self, v: f64, eta: f64) -> f64 {
        debug_assert!(eta > 0.0);
        if v == 0.0 {
            return 0.0;
        }
        let c = eta * self.lambda;
        if c == 0.0 {
            return v;
        }
        let s = v.abs();
        let z = match self.kind {
            PenaltyKind::PowerLaw => self.prox_power_abs(s, eta),
            PenaltyKind::Scad | PenaltyKind::Mcp => self.prox_piecewise_abs(s, eta),
        };
        v.signum() * z
    }

    fn prox_objective(&self, z: f64, s: f64, eta: f64) -> f64 {
        0.5 * (z - s) * (z - s) + eta * self.phi(z)
    }

    fn prox_power_abs(&self, s: f64, eta: f64) -> f64 {
        let tau = self.tau;
        let c = eta * self.lambda;
        if tau == 1.0 {
            return (s - c).max(0.0);
        }
        // Stationary points solve h(z) = z + cτ z^{τ-1} = s on z > 0; h is convex
        // with minimum at z_min, and the local minimiser is the larger root.
        let ct = c * tau;
        let z_min = (ct * (1.0 - tau)).powf(1.0 / (2.0 - tau));
        let h = |z: f64| z + ct * z.powf(tau - 1.0) - s;
        if h(z_min) >= 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (z_min, s);
        let mut z = s;
        for _ in 0..200 {
            let hz = h(z);
            let dh = 1.0 + ct * (tau - 1.0) * z.powf(tau - 2.0);
            if hz > 0.0 {
                hi = z;
            } else {
                lo = z;
            }
            let newton = z - hz / dh;
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - z).abs() <= 1e-15 * z.max(1e-300) || hi - lo <= 1e-15 * hi {
                z = next;
                break;
            }
            z = next;
        }
        if self.prox_objective(z, s, eta) < self.prox_objective(0.0, s, eta) {
            z
        } else {
            0.0
        }
    }

    /// SCAD and MCP are piecewise quadratic on `z ≥ 0`; minimise each piece in
    /// closed form and keep the best candidate.
    fn prox_piecewise_abs(&self, s: f64, eta: f64) -> f64 {
        let (l, tau) = (self.lambda, self.tau);
        let edge = l * tau;
        let mut candidates: Vec<f64> = vec![0.0, edge, s.max(edge)];
        match self.kind {
            PenaltyKind::Scad => {
                candidates.push((s - eta * l).clamp(0.0, l));
                candidates.push(l);
                let curv = 1.0 - eta / (tau - 1.0);
                if curv > 0.0 {
                    let z = (s - eta * l * tau / (tau - 1.0)) / curv;
                    candidates.push(z.clamp(l, edge));
                }
            }
            PenaltyKind::Mcp => {
                let curv = 1.0 - eta / tau;
                if curv > 0.0 {
                    candidates.push(((s - eta * l) / curv).clamp(0.0, edge));
                }
            }
            PenaltyKind::PowerLaw => unreachable!(),
        }
        let mut best = 0.0;
        let mut best_val = self.prox_objective(0.0, s, eta);
        for &z in &candidates {
            let val = self.prox_objective(z, s, eta);
            if val < best_val || (val == best_val && z < best) {
                best = z;
                best_val = val;
            }
        }
        best
    }
}

/// `Ψ_ε`: the penalty as a function of the squared argument, linearised on
/// `[0, ε²]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedPenalty {
    base: Penalty,
    epsilon: f64,
    phi_eps: f64,
    slope_eps: f64,
}

impl SmoothedPenalty {
    pub fn new(base: Penalty, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothing radius must be positive, got {epsilon}"
            )));
        }
        Ok(Self {
            base,
            epsilon,
            phi_eps: base.phi(epsilon),
            slope_eps: base.slope(epsilon),
        })
    }

    pub fn base(&self) -> &Penalty {
        &self.base
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `Ψ_ε(t)` for `t ≥ 0`.
    pub fn psi(&self, t: f64) -> f64 {
        let eps = self.epsilon;
        if t <= eps * eps {
            self.slope_eps / (2.0 * eps) * t + self.phi_eps - 0.5 * self.slope_eps * eps
        } else {
            self.base.phi(t.sqrt())
        }
    }

    /// `Ψ_ε'(t)` for `t > 0` (the right derivative at `0`).
    pub fn psi_prime(&self, t: f64) -> f64 {
        let eps = self.epsilon;
        if t <= eps * eps {
            self.slope_eps / (2.0 * eps)
        } else {
            let s = t.sqrt();
            self.base.slope(s) / (2.0 * s)
        }
    }

    /// Reweighting factor `1 / max{ε/φ'(ε), |y|/φ'(|y|)} = 2Ψ_ε'(y²)`.
    ///
    /// A vanishing slope makes the corresponding ratio infinite, so the weight
    /// is zero on the SCAD/MCP plateau.
    pub fn weight(&self, y: f64) -> f64 {
        let at_eps = self.slope_eps / self.epsilon;
        let s = y.abs();
        if s == 0.0 {
            return at_eps;
        }
        at_eps.min(self.base.slope(s) / s)
    }
}
