//! System-independent state machinery: evaluators, displacement, inner
//! products, moments and the label-continuity modulus.

mod integrals;
mod probe;
mod state;

pub use integrals::{
    continuity_modulus, inner_product, moment_p, moment_q, norm, overlap_integral, tail_integrability, Part,
};
pub use probe::{probe_overlap, GaussProbe, Probe};
pub use state::{displace, Band, StateEvaluator, Tail, TailEnvelope, TailTerm};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            hbar: 1.0,
            mass: 1.0,
            omega: 0.0,
        }
    }
}

impl PhysicalParams {
    pub fn new(hbar: f64, mass: f64, omega: f64) -> crate::Result<Self> {
        let p = PhysicalParams { hbar, mass, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(crate::Error::InvalidParameter(format!("hbar must be > 0, got {}", self.hbar)));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(crate::Error::InvalidParameter(format!("mass must be > 0, got {}", self.mass)));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(crate::Error::InvalidParameter(format!("omega must be >= 0, got {}", self.omega)));
        }
        Ok(())
    }
}

/// Coherent-state labels (q, p) plus the evolution parameter τ.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseLabel {
    pub q: f64,
    pub p: f64,
    pub tau: f64,
}

impl PhaseLabel {
    pub fn new(q: f64, p: f64, tau: f64) -> Self {
        PhaseLabel { q, p, tau }
    }

    pub fn qp(q: f64, p: f64) -> Self {
        PhaseLabel { q, p, tau: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.p.is_finite() && self.tau.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Free,
    InvertedOscillator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Scheme {
    Window { k0: f64, k1: f64 },
    Gaussian { center: f64, a: f64 },
    Bump { k0: f64, k1: f64 },
}

/// Which regularization, for which system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiducialSpec {
    pub system: System,
    pub scheme: Scheme,
    pub params: PhysicalParams,
}

impl FiducialSpec {
    pub fn validate(&self) -> crate::Result<()> {
        self.params.validate()?;
        match self.scheme {
            Scheme::Window { k0, k1 } | Scheme::Bump { k0, k1 } => {
                if !(k0 < k1) || !k0.is_finite() || !k1.is_finite() {
                    return Err(crate::Error::InvalidWindow { k0, k1 });
                }
                if self.system == System::InvertedOscillator {
                    return Err(crate::Error::InvalidParameter(
                        "the inverted oscillator only has the Gaussian regularization".into(),
                    ));
                }
            }
            Scheme::Gaussian { center, a } => {
                if !(a > 0.0) || !a.is_finite() {
                    return Err(crate::Error::InvalidWidth(a));
                }
                if !center.is_finite() {
                    return Err(crate::Error::InvalidParameter("non-finite Gaussian center".into()));
                }
            }
        }
        Ok(())
    }
}
