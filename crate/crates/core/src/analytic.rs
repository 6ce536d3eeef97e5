//! Separation-of-variables solution of the Laplace equation on the full
//! square `[0, L]²` held at `t_cold` on three sides and `t_hot` on the top.
//!
//! Half-domain coordinates are used throughout: `x` is measured from the
//! symmetry plane (`X = L/2 + x`), so the mesh domain `[0, L/2] × [0, L]`
//! maps directly onto the series.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Parameters of the hot-top square problem and its series truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Case1Exact {
    /// Full square side, metres.
    pub side: f64,
    pub t_hot: f64,
    pub t_cold: f64,
    /// W/(m·K).
    pub conductivity: f64,
    /// Maximum number of (odd) series terms.
    pub max_terms: usize,
    /// Truncate once a term's magnitude bound falls below this.
    pub tol: f64,
}

impl Default for Case1Exact {
    fn default() -> Self {
        Case1Exact {
            side: 0.4,
            t_hot: 20.0,
            t_cold: 0.0,
            conductivity: 1.0,
            max_terms: 10_000,
            tol: 1e-12,
        }
    }
}

/// One entry of the reference temperature table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub x: f64,
    pub y: f64,
    pub temperature: f64,
    /// Rounded to 0.1 °C.
    pub rounded: f64,
}

/// sinh(a) / sinh(b) for 0 ≤ a ≤ b without overflow.
fn sinh_ratio(a: f64, b: f64) -> f64 {
    (a - b).exp() * (-(-2.0 * a).exp_m1()) / (-(-2.0 * b).exp_m1())
}

/// coth(t) − 1 for t > 0.
fn coth_minus_one(t: f64) -> f64 {
    let e = (-2.0 * t).exp();
    2.0 * e / (1.0 - e)
}

pub fn round_to_tenth(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

impl Case1Exact {
    pub fn validate(&self) -> Result<(), AnalyticError> {
        if !(self.side > 0.0) || self.max_terms == 0 || !(self.tol > 0.0) || !(self.conductivity > 0.0) {
            return Err(AnalyticError::InvalidArgument(format!(
                "need side > 0, max_terms >= 1, tol > 0, conductivity > 0; got {self:?}"
            )));
        }
        Ok(())
    }

    fn half(&self) -> f64 {
        0.5 * self.side
    }

    fn delta_t(&self) -> f64 {
        self.t_hot - self.t_cold
    }

    /// Temperature (°C) at half-domain point (x, y).
    pub fn exact_temperature(&self, x: f64, y: f64) -> Result<f64, AnalyticError> {
        let eps = 1e-12;
        if !(x >= -eps && x <= self.half() + eps) {
            return Err(AnalyticError::InvalidArgument(format!(
                "x = {x} lies outside [0, {}]",
                self.half()
            )));
        }
        self.exact_temperature_full(self.half() + x.clamp(0.0, self.half()), y)
    }

    /// Temperature (°C) at full-square coordinates (X, y), X ∈ [0, L].
    pub fn exact_temperature_full(&self, big_x: f64, y: f64) -> Result<f64, AnalyticError> {
        self.validate()?;
        let l = self.side;
        let eps = 1e-12;
        if !(big_x >= -eps && big_x <= l + eps && y >= -eps && y <= l + eps) {
            return Err(AnalyticError::InvalidArgument(format!(
                "point ({big_x}, {y}) lies outside [0, {l}]^2"
            )));
        }
        let big_x = big_x.clamp(0.0, l);
        let y = y.clamp(0.0, l);
        if y == l && big_x > 0.0 && big_x < l {
            // the sine series of a constant sums to 1 on the open interval
            return Ok(self.t_hot);
        }
        let mut sum = 0.0;
        for k in 0..self.max_terms {
            let m = (2 * k + 1) as f64;
            let bound = sinh_ratio(m * PI * y / l, m * PI) / m;
            sum += (m * PI * big_x / l).sin() * bound;
            if bound < self.tol {
                break;
            }
        }
        Ok(self.t_cold + self.delta_t() * 4.0 / PI * sum)
    }

    /// Exact temperatures on the interior intersections of a square grid of
    /// the given spacing: x from the symmetry plane (inclusive) to the cold
    /// side (exclusive), y strictly between the cold bottom and hot top.
    pub fn reference_grid(&self, spacing: f64) -> Result<Vec<ReferencePoint>, AnalyticError> {
        self.validate()?;
        let cells = |length: f64| -> Result<usize, AnalyticError> {
            let n = length / spacing;
            if !(spacing > 0.0) || (n - n.round()).abs() > 1e-9 || n.round() < 1.0 {
                return Err(AnalyticError::InvalidArgument(format!(
                    "spacing {spacing} m does not divide {length} m"
                )));
            }
            Ok(n.round() as usize)
        };
        let nx = cells(self.half())?;
        let ny = cells(self.side)?;
        let mut out = Vec::with_capacity(nx * (ny - 1));
        for j in 1..ny {
            for i in 0..nx {
                let (x, y) = (i as f64 * spacing, j as f64 * spacing);
                let temperature = self.exact_temperature(x, y)?;
                out.push(ReferencePoint { x, y, temperature, rounded: round_to_tenth(temperature) });
            }
        }
        Ok(out)
    }

    /// Inward heat-flux density (W/m²) through the hot top edge at
    /// half-domain position x, 0 ≤ x < L/2.
    pub fn exact_top_edge_flux(&self, x: f64) -> Result<f64, AnalyticError> {
        self.validate()?;
        if !(x >= 0.0 && x < self.half()) {
            return Err(AnalyticError::InvalidArgument(format!(
                "x = {x} must lie in [0, {})",
                self.half()
            )));
        }
        // Σ_odd sin(mφ) = 1 / (2 sin φ); the coth − 1 remainder decays like e^{-2mπ}
        let phi = PI * (self.half() + x) / self.side;
        let mut sum = 0.5 / phi.sin();
        for k in 0..self.max_terms {
            let m = (2 * k + 1) as f64;
            let c = coth_minus_one(m * PI);
            sum += c * (m * phi).sin();
            if c < self.tol {
                break;
            }
        }
        Ok(self.conductivity * self.delta_t() * 4.0 / self.side * sum)
    }

    /// Heat flow (W/m) entering through the top edge over
    /// `0 ≤ x ≤ L/2 − exclusion`, i.e. with a strip next to the singular
    /// corner left out.
    pub fn exact_masked_heat_flow(&self, exclusion: f64) -> Result<f64, AnalyticError> {
        self.validate()?;
        if !(exclusion > 0.0 && exclusion < self.half()) {
            return Err(AnalyticError::InvalidArgument(format!(
                "exclusion {exclusion} m must lie in (0, {})",
                self.half()
            )));
        }
        // term-wise: ∫ sin(mπX/L) dX over [L/2, L − e] = (L / mπ) cos(mθ), θ = πe/L,
        // and Σ_odd cos(mθ)/m = ½ ln cot(θ/2)
        let theta = PI * exclusion / self.side;
        let mut sum = 0.5 * (1.0 / (0.5 * theta).tan()).ln();
        for k in 0..self.max_terms {
            let m = (2 * k + 1) as f64;
            let c = coth_minus_one(m * PI) / m;
            sum += c * (m * theta).cos();
            if c < self.tol {
                break;
            }
        }
        Ok(self.conductivity * self.delta_t() * 4.0 / PI * sum)
    }
}
