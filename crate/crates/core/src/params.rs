//! Physical, regularization and tolerance parameters.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    /// Adiabatic exponent of `p = rho^gamma`.
    pub gamma: f64,
    /// Shear viscosity.
    pub mu: f64,
    /// Bulk-type viscosity.
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegParams {
    /// Artificial diffusion in the transport equations.
    pub eps: f64,
    /// Artificial pressure weight of `delta (rho + b)^beta`.
    pub delta: f64,
    pub beta: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub tol_lin: f64,
    pub max_lin: usize,
}

/// Verdict tolerances, all relative to a problem scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub tol_energy: f64,
    pub tol_dom: f64,
    pub tol_mp: f64,
    pub tol_mass: f64,
    /// Negative values above `-tol_neg * scale` are clipped to zero.
    pub tol_neg: f64,
}

/// Lower and upper domination constants `c_lower rho <= b <= c_upper rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domination {
    pub lower: f64,
    pub upper: f64,
}

impl PhysParams {
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.gamma > 1.0) {
            out.push(format!("adiabatic exponent must exceed 1, got {}", self.gamma));
        }
        if !(self.mu > 0.0) {
            out.push(format!("shear viscosity must be positive, got {}", self.mu));
        }
        if !(2.0 * self.mu + self.lambda > 0.0) {
            out.push(format!(
                "2 mu + lambda must be positive, got {}",
                2.0 * self.mu + self.lambda
            ));
        }
        out
    }
}

impl Default for RegParams {
    fn default() -> Self {
        RegParams {
            eps: 0.0,
            delta: 0.0,
            beta: 4.0,
            picard_tol: 1e-11,
            picard_max: 50,
            tol_lin: 1e-13,
            max_lin: 2000,
        }
    }
}

impl RegParams {
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            out.push(format!("artificial diffusion must be nonnegative, got {}", self.eps));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            out.push(format!("artificial pressure weight must be nonnegative, got {}", self.delta));
        }
        if !(self.beta > 1.0) {
            out.push(format!("artificial pressure exponent must exceed 1, got {}", self.beta));
        }
        if !(self.picard_tol > 0.0) || self.picard_max == 0 {
            out.push("fixed-point tolerance and iteration budget must be positive".into());
        }
        if !(self.tol_lin > 0.0) || self.max_lin == 0 {
            out.push("linear tolerance and iteration budget must be positive".into());
        }
        out
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_energy: 1e-8,
            tol_dom: 1e-8,
            tol_mp: 1e-8,
            tol_mass: 1e-8,
            tol_neg: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Vec<String> {
        let all = [
            ("tol_energy", self.tol_energy),
            ("tol_dom", self.tol_dom),
            ("tol_mp", self.tol_mp),
            ("tol_mass", self.tol_mass),
            ("tol_neg", self.tol_neg),
        ];
        all.iter()
            .filter(|(_, v)| !(*v > 0.0))
            .map(|(k, v)| format!("{k} must be positive, got {v}"))
            .collect()
    }
}

impl Domination {
    pub fn validate(&self) -> Vec<String> {
        if self.lower > 0.0 && self.lower < self.upper && self.upper.is_finite() {
            Vec::new()
        } else {
            vec![format!(
                "domination constants need 0 < lower < upper < inf, got {} and {}",
                self.lower, self.upper
            )]
        }
    }

    /// Vacuum value of `b / rho`.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

pub(crate) fn check(errors: Vec<String>) -> Result<()> {
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(errors.join("; ")))
    }
}
