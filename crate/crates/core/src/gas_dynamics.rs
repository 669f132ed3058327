//! Thermodynamic closure and eigenstructure of the steady Euler system in
//! Lagrangian coordinates.
//!
//! The unknown is `U = (u, v, p)`; the density is never stored but recovered
//! from the Bernoulli law `(u² + v²)/2 + γp/((γ−1)ρ) = b`, where `b` is the
//! Bernoulli constant carried by each streamline.  In the coordinates
//! `(ξ, η)` the system reads `A(U) ∂ξU + B(U) ∂ηU = 0`, with characteristic
//! speeds `dη/dξ = λ` given by `det(λA − B) = 0`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::dual::{Dual3, Real};
use crate::error::{Error, Result};

/// Relative margin kept from the sonic line and from the edge of the cone
/// where `λ₁ < 0 < λ₃`.
pub const CONE_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasConstants {
    pub gamma: f64,
    pub c_nu: f64,
    /// Pressure of the static gas, imposed on the wall `η = 0`.
    pub p_bar: f64,
}

impl Default for GasConstants {
    fn default() -> Self {
        Self {
            gamma: 1.4,
            c_nu: 1.0,
            p_bar: 1.0,
        }
    }
}

/// Lagrangian flow state: velocity, pressure and the streamline's Bernoulli
/// constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowState {
    pub u: f64,
    pub v: f64,
    pub p: f64,
    pub b: f64,
}

impl FlowState {
    pub const fn new(u: f64, v: f64, p: f64, b: f64) -> Self {
        Self { u, v, p, b }
    }

    pub fn uvp(&self) -> Vector3<f64> {
        Vector3::new(self.u, self.v, self.p)
    }

    /// Same Bernoulli constant, new `(u, v, p)`.
    pub fn with_uvp(&self, x: &Vector3<f64>) -> Self {
        Self::new(x[0], x[1], x[2], self.b)
    }

    /// Max-norm distance in `(u, v, p)`.
    pub fn dist_max(&self, other: &FlowState) -> f64 {
        (self.u - other.u)
            .abs()
            .max((self.v - other.v).abs())
            .max((self.p - other.p).abs())
    }

    /// ℓ¹ distance in `(u, v, p)`; this is the pointwise norm used for all
    /// L¹ distances between solutions.
    pub fn dist_l1(&self, other: &FlowState) -> f64 {
        (self.u - other.u).abs() + (self.v - other.v).abs() + (self.p - other.p).abs()
    }

    pub fn speed_sq(&self) -> f64 {
        self.u * self.u + self.v * self.v
    }
}

impl GasConstants {
    pub fn new(gamma: f64, c_nu: f64, p_bar: f64) -> Result<Self> {
        let gas = Self { gamma, c_nu, p_bar };
        gas.validate()?;
        Ok(gas)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) {
            return Err(Error::InvalidParameter(format!("gamma = {} must exceed 1", self.gamma)));
        }
        if !(self.c_nu > 0.0) {
            return Err(Error::InvalidParameter(format!("c_nu = {} must be positive", self.c_nu)));
        }
        if !(self.p_bar > 0.0) {
            return Err(Error::InvalidParameter(format!("p_bar = {} must be positive", self.p_bar)));
        }
        Ok(())
    }

    /// Bernoulli constant of `(u, v, p, ρ)`.
    pub fn bernoulli(&self, u: f64, v: f64, p: f64, rho: f64) -> f64 {
        0.5 * (u * u + v * v) + self.gamma * p / ((self.gamma - 1.0) * rho)
    }

    pub fn state_from_primitive(&self, u: f64, v: f64, p: f64, rho: f64) -> FlowState {
        FlowState::new(u, v, p, self.bernoulli(u, v, p, rho))
    }

    /// The uniform supersonic state `(ū, 0, p̄, ρ̄₊)` along the wall pressure.
    pub fn reference_state(&self, u_bar: f64, rho_plus: f64) -> FlowState {
        self.state_from_primitive(u_bar, 0.0, self.p_bar, rho_plus)
    }

    /// `c² = (γ−1)(b − q²/2)`; independent of the pressure.
    pub fn sound_speed_sq(&self, s: &FlowState) -> f64 {
        (self.gamma - 1.0) * (s.b - 0.5 * s.speed_sq())
    }

    /// Density from the Bernoulli law, requiring only `p > 0` and `b > q²/2`.
    pub fn density(&self, s: &FlowState) -> Result<f64> {
        let enthalpy = s.b - 0.5 * s.speed_sq();
        if !(s.p > 0.0) || !(enthalpy > 0.0) || !s.u.is_finite() || !s.v.is_finite() {
            return Err(Error::NonPhysicalState(format!(
                "p = {}, b − q²/2 = {}",
                s.p, enthalpy
            )));
        }
        Ok(self.gamma * s.p / ((self.gamma - 1.0) * enthalpy))
    }

    /// Density of a supersonic state; subsonic input is rejected as
    /// non-physical for this flow region.
    pub fn density_from_bernoulli(&self, s: &FlowState) -> Result<f64> {
        let rho = self.density(s)?;
        let c = self.sound_speed_sq(s).sqrt();
        if !(s.u > c) {
            return Err(Error::NonPhysicalState(format!(
                "u = {} does not exceed the sound speed {}",
                s.u, c
            )));
        }
        Ok(rho)
    }

    pub fn sound_speed(&self, s: &FlowState) -> Result<f64> {
        self.density(s)?;
        Ok(self.sound_speed_sq(s).sqrt())
    }

    pub fn mach(&self, s: &FlowState) -> Result<f64> {
        Ok(s.speed_sq().sqrt() / self.sound_speed(s)?)
    }

    pub fn entropy(&self, s: &FlowState) -> Result<f64> {
        let rho = self.density(s)?;
        Ok(self.c_nu * (s.p / rho.powf(self.gamma)).ln())
    }

    /// Checks `u > c(1+ε)` and `|v/u| < √(M²−1)(1−ε)`.
    pub fn check_admissible(&self, s: &FlowState) -> Result<()> {
        self.density(s)?;
        let c2 = self.sound_speed_sq(s);
        let c = c2.sqrt();
        if !(s.u > c * (1.0 + CONE_MARGIN)) {
            return Err(Error::StateOutsideCone(format!("u = {} not above c = {}", s.u, c)));
        }
        let cone = (s.speed_sq() / c2 - 1.0).sqrt();
        if !((s.v / s.u).abs() < cone * (1.0 - CONE_MARGIN)) {
            return Err(Error::StateOutsideCone(format!(
                "|v/u| = {} not below √(M²−1) = {}",
                (s.v / s.u).abs(),
                cone
            )));
        }
        Ok(())
    }

    pub fn is_admissible(&self, s: &FlowState) -> bool {
        self.check_admissible(s).is_ok()
    }

    /// `(λ₁, λ₂, λ₃)` with `λ₂ = 0` exactly.
    pub fn eigenvalues(&self, s: &FlowState) -> Result<[f64; 3]> {
        self.check_admissible(s)?;
        let (l1, l3) = outer_speeds(self.gamma, s.u, s.v, s.p, s.b);
        Ok([l1, 0.0, l3])
    }

    /// `λ_j` without the admissibility check; `j ∈ {1, 2, 3}`.
    pub fn eigenvalue_unchecked(&self, j: usize, s: &FlowState) -> f64 {
        match j {
            2 => 0.0,
            1 => outer_speeds(self.gamma, s.u, s.v, s.p, s.b).0,
            _ => outer_speeds(self.gamma, s.u, s.v, s.p, s.b).1,
        }
    }

    /// Exact gradient of `λ_j` in `(u, v, p)` with `ρ` eliminated through the
    /// Bernoulli law.
    pub fn eigenvalue_gradient(&self, j: usize, s: &FlowState) -> Vector3<f64> {
        if j == 2 {
            return Vector3::zeros();
        }
        let (l1, l3) = outer_speeds(
            self.gamma,
            Dual3::var(s.u, 0),
            Dual3::var(s.v, 1),
            Dual3::var(s.p, 2),
            Dual3::cst(s.b),
        );
        let g = if j == 1 { l1.g } else { l3.g };
        Vector3::new(g[0], g[1], g[2])
    }

    /// Right eigenvectors `(r₁, r₂, r₃)`; `r₁`, `r₃` normalized so that
    /// `r_j·∇λ_j = 1`, `r₂ = (u, v, 0)`.
    pub fn eigenvectors(&self, s: &FlowState) -> Result<[Vector3<f64>; 3]> {
        self.check_admissible(s)?;
        Ok([
            self.eigenvector_unchecked(1, s),
            self.eigenvector_unchecked(2, s),
            self.eigenvector_unchecked(3, s),
        ])
    }

    pub fn eigenvector_unchecked(&self, j: usize, s: &FlowState) -> Vector3<f64> {
        if j == 2 {
            return Vector3::new(s.u, s.v, 0.0);
        }
        let d = self.eigen_direction(j, s);
        d / self.eigenvalue_gradient(j, s).dot(&d)
    }

    /// Normalization constant `κ_j` multiplying `(λ_j/ρ + v, −u, −λ_j u)`.
    pub fn normalization(&self, j: usize, s: &FlowState) -> f64 {
        let d = self.eigen_direction(j, s);
        1.0 / self.eigenvalue_gradient(j, s).dot(&d)
    }

    fn eigen_direction(&self, j: usize, s: &FlowState) -> Vector3<f64> {
        let rho = self.gamma * s.p / ((self.gamma - 1.0) * (s.b - 0.5 * s.speed_sq()));
        let lam = self.eigenvalue_unchecked(j, s);
        Vector3::new(lam / rho + s.v, -s.u, -lam * s.u)
    }

    /// Coefficient matrices of the symmetric form `A ∂ξU + B ∂ηU = 0`.
    pub fn symmetric_matrices(&self, s: &FlowState) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
        let rho = self.density(s)?;
        let c2 = self.sound_speed_sq(s);
        let a = Matrix3::new(
            s.u,
            0.0,
            1.0 / rho,
            0.0,
            s.u,
            0.0,
            1.0 / rho,
            0.0,
            s.u / (rho * rho * c2),
        );
        let b = Matrix3::new(0.0, 0.0, -s.v, 0.0, 0.0, s.u, -s.v, s.u, 0.0);
        Ok((a, b))
    }

    /// Conserved densities `W = (1/(ρu), u + p/(ρu), v)` of the divergence form.
    pub fn conserved(&self, s: &FlowState) -> Result<Vector3<f64>> {
        let rho = self.density(s)?;
        let m = rho * s.u;
        Ok(Vector3::new(1.0 / m, s.u + s.p / m, s.v))
    }

    /// Fluxes `F = (−v/u, −pv/u, p)` so that `∂ξW + ∂ηF = 0`.
    pub fn flux(&self, s: &FlowState) -> Vector3<f64> {
        let t = s.v / s.u;
        Vector3::new(-t, -s.p * t, s.p)
    }

    /// Rankine–Hugoniot residual `σ[W] − [F]` for a jump from `below` to `above`.
    pub fn rankine_hugoniot_residual(
        &self,
        below: &FlowState,
        above: &FlowState,
        sigma: f64,
    ) -> Result<Vector3<f64>> {
        let dw = self.conserved(above)? - self.conserved(below)?;
        let df = self.flux(above) - self.flux(below);
        Ok(dw * sigma - df)
    }
}

/// `(λ₁, λ₃) = γp u/(u² − c²) · (v/u ∓ √(M² − 1))`, using `ρc² = γp`.
fn outer_speeds<T: Real>(gamma: f64, u: T, v: T, p: T, b: T) -> (T, T) {
    let q2 = u * u + v * v;
    let c2 = T::cst(gamma - 1.0) * (b - T::cst(0.5) * q2);
    let root = (q2 / c2 - T::cst(1.0)).sqrt();
    let pre = T::cst(gamma) * p * u / (u * u - c2);
    let t = v / u;
    (pre * (t - root), pre * (t + root))
}
