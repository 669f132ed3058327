//! Elementary wave curves, the interior Riemann solver and the lateral
//! (wall) Riemann solver.
//!
//! Strengths of genuinely nonlinear waves are measured as the increment of
//! the characteristic speed, `α = λ_j(above) − λ_j(below)`: rarefactions
//! follow the integral curve of `r_j` (normalized so that `r_j·∇λ_j = 1`),
//! shocks follow the Hugoniot locus parametrized by the same increment. The
//! two branches join with second-order contact at `α = 0`.  Contact strengths
//! are logarithmic: `(u, v) ↦ e^α (u, v)` with `p` and `v/u` fixed.

use nalgebra::{Matrix3, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gas_dynamics::{FlowState, GasConstants};
use crate::numerics::{newton, newton_scalar, NewtonOptions};

/// Below this `|Δλ|` the shock branch is replaced by the integral curve; the
/// two agree to third order.
const TINY_SHOCK: f64 = 1e-6;
/// Largest rarefaction sub-step; `|α| = 0.1` is integrated in 32 steps.
const MAX_RAREFACTION_STEP: f64 = 0.1 / 32.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WaveFamily {
    One,
    Two,
    Three,
}

impl WaveFamily {
    pub const ALL: [WaveFamily; 3] = [WaveFamily::One, WaveFamily::Two, WaveFamily::Three];

    pub fn index(self) -> usize {
        match self {
            WaveFamily::One => 1,
            WaveFamily::Two => 2,
            WaveFamily::Three => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            1 => Some(WaveFamily::One),
            2 => Some(WaveFamily::Two),
            3 => Some(WaveFamily::Three),
            _ => None,
        }
    }

    pub fn is_genuinely_nonlinear(self) -> bool {
        self != WaveFamily::Two
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    Rarefaction,
    Shock,
    Contact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveDirection {
    /// `Φ_j(α; U)`: the result lies above `U`.
    Forward,
    /// `Ψ₃(β; U)`: the result lies below `U`.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveBranch {
    pub kind: CurveKind,
    pub family: WaveFamily,
    pub direction: CurveDirection,
}

impl CurveBranch {
    pub fn classify(family: WaveFamily, strength: f64, direction: CurveDirection) -> Self {
        let kind = if !family.is_genuinely_nonlinear() {
            CurveKind::Contact
        } else if strength >= 0.0 {
            CurveKind::Rarefaction
        } else {
            CurveKind::Shock
        };
        Self {
            kind,
            family,
            direction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Max-norm residual of the wave-composition identity.
    pub tol_riemann: f64,
    pub max_iter: usize,
    /// Largest max-norm jump accepted by the interior Riemann solver.
    pub max_jump: f64,
    /// Radius of the neighbourhood of the reference state in which the
    /// lateral problem is solved.
    pub lateral_radius: f64,
    /// Continuation step for the Hugoniot solve when a direct Newton solve
    /// fails.
    pub continuation_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_riemann: 1e-10,
            max_iter: 50,
            max_jump: 0.5,
            lateral_radius: 0.5,
            continuation_step: 1e-3,
        }
    }
}

/// A single elementary wave of a Riemann solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementaryWave {
    pub family: WaveFamily,
    pub strength: f64,
    pub kind: CurveKind,
    pub below: FlowState,
    pub above: FlowState,
    /// Speed of the lower edge (shock: the Rankine–Hugoniot speed).
    pub speed_lo: f64,
    /// Speed of the upper edge.
    pub speed_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiemannSolution {
    pub below: FlowState,
    pub above: FlowState,
    pub strengths: [f64; 3],
    pub middle: [FlowState; 2],
    pub waves: [ElementaryWave; 3],
}

impl RiemannSolution {
    /// Self-similar value at `η/ξ = s`.
    pub fn sample(&self, curves: &WaveCurves, s: f64) -> Result<FlowState> {
        let mut state = self.below;
        for w in &self.waves {
            if s < w.speed_lo {
                return Ok(state);
            }
            if w.kind == CurveKind::Rarefaction && s < w.speed_hi {
                // inside the fan: λ_j(state) = s
                return curves.rarefaction_point(w.family, &w.below, s - w.speed_lo);
            }
            state = w.above;
        }
        Ok(state)
    }
}

/// Wave-curve machinery bound to a gas and a set of tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveCurves {
    pub gas: GasConstants,
    pub tol: Tolerances,
}

impl WaveCurves {
    pub fn new(gas: GasConstants, tol: Tolerances) -> Self {
        Self { gas, tol }
    }

    /// `Φ_j(α; U)`.
    pub fn forward_curve(&self, family: WaveFamily, alpha: f64, base: &FlowState) -> Result<FlowState> {
        Ok(self.forward_wave(family, alpha, base)?.above)
    }

    /// `Φ_j(α; U)` together with the wave speeds.
    pub fn forward_wave(&self, family: WaveFamily, alpha: f64, base: &FlowState) -> Result<ElementaryWave> {
        self.gas.check_admissible(base)?;
        match family {
            WaveFamily::Two => {
                let above = contact_point(alpha, base, base.b);
                self.check_on_curve(&above, alpha)?;
                Ok(self.contact_wave(alpha, base, above))
            }
            _ => {
                let j = family.index();
                let lam_below = self.gas.eigenvalue_unchecked(j, base);
                if alpha == 0.0 {
                    return Ok(ElementaryWave {
                        family,
                        strength: 0.0,
                        kind: CurveKind::Rarefaction,
                        below: *base,
                        above: *base,
                        speed_lo: lam_below,
                        speed_hi: lam_below,
                    });
                }
                if alpha > 0.0 {
                    let above = self.rarefaction_point(family, base, alpha)?;
                    Ok(ElementaryWave {
                        family,
                        strength: alpha,
                        kind: CurveKind::Rarefaction,
                        below: *base,
                        above,
                        speed_lo: lam_below,
                        speed_hi: self.gas.eigenvalue_unchecked(j, &above),
                    })
                } else {
                    let (above, sigma) = self.hugoniot_point(family, base, alpha)?;
                    Ok(ElementaryWave {
                        family,
                        strength: alpha,
                        kind: CurveKind::Shock,
                        below: *base,
                        above,
                        speed_lo: sigma,
                        speed_hi: sigma,
                    })
                }
            }
        }
    }

    /// Contact wave of strength `α` from `base`, with the Bernoulli constant
    /// switching to `b_above` across it.
    pub fn contact(&self, alpha: f64, base: &FlowState, b_above: f64) -> Result<ElementaryWave> {
        let above = contact_point(alpha, base, b_above);
        self.gas.check_admissible(&above).map_err(|_| Error::CurveLeftCone { strength: alpha })?;
        Ok(self.contact_wave(alpha, base, above))
    }

    fn contact_wave(&self, alpha: f64, below: &FlowState, above: FlowState) -> ElementaryWave {
        ElementaryWave {
            family: WaveFamily::Two,
            strength: alpha,
            kind: CurveKind::Contact,
            below: *below,
            above,
            speed_lo: 0.0,
            speed_hi: 0.0,
        }
    }

    fn check_on_curve(&self, s: &FlowState, strength: f64) -> Result<()> {
        self.gas
            .check_admissible(s)
            .map_err(|_| Error::CurveLeftCone { strength })
    }

    /// `Ψ₃(β; U)`: the state `W` below `U` with `Φ₃(β; W) = U`.
    pub fn backward_curve_3(&self, beta: f64, base: &FlowState) -> Result<FlowState> {
        Ok(self.backward_wave_3(beta, base)?.below)
    }

    pub fn backward_wave_3(&self, beta: f64, base: &FlowState) -> Result<ElementaryWave> {
        self.gas.check_admissible(base)?;
        let lam_above = self.gas.eigenvalue_unchecked(3, base);
        if beta == 0.0 {
            return Ok(ElementaryWave {
                family: WaveFamily::Three,
                strength: 0.0,
                kind: CurveKind::Rarefaction,
                below: *base,
                above: *base,
                speed_lo: lam_above,
                speed_hi: lam_above,
            });
        }
        if beta > 0.0 {
            let below = self.rarefaction_point(WaveFamily::Three, base, -beta)?;
            Ok(ElementaryWave {
                family: WaveFamily::Three,
                strength: beta,
                kind: CurveKind::Rarefaction,
                below,
                above: *base,
                speed_lo: self.gas.eigenvalue_unchecked(3, &below),
                speed_hi: lam_above,
            })
        } else {
            // The Hugoniot locus is symmetric; the increment is read from above.
            let (below, sigma) = self.hugoniot_point(WaveFamily::Three, base, -beta)?;
            Ok(ElementaryWave {
                family: WaveFamily::Three,
                strength: beta,
                kind: CurveKind::Shock,
                below,
                above: *base,
                speed_lo: sigma,
                speed_hi: sigma,
            })
        }
    }

    /// Integral curve of `r_j` through `base`, followed for a change `dλ` of
    /// `λ_j` (either sign). Classical fourth-order Runge–Kutta.
    pub fn rarefaction_point(&self, family: WaveFamily, base: &FlowState, dlambda: f64) -> Result<FlowState> {
        let j = family.index();
        if dlambda == 0.0 {
            return Ok(*base);
        }
        let steps = ((dlambda.abs() / MAX_RAREFACTION_STEP).ceil() as usize).max(1);
        let h = dlambda / steps as f64;
        let gas = &self.gas;
        let rhs = |x: &Vector3<f64>| -> Result<Vector3<f64>> {
            let s = base.with_uvp(x);
            gas.density(&s).map_err(|_| Error::CurveLeftCone { strength: dlambda })?;
            Ok(gas.eigenvector_unchecked(j, &s))
        };
        let mut x = base.uvp();
        for _ in 0..steps {
            let k1 = rhs(&x)?;
            let k2 = rhs(&(x + k1 * (0.5 * h)))?;
            let k3 = rhs(&(x + k2 * (0.5 * h)))?;
            let k4 = rhs(&(x + k3 * h))?;
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        let out = base.with_uvp(&x);
        self.check_on_curve(&out, dlambda)?;
        Ok(out)
    }

    /// Point `V` on the `j`-Hugoniot locus of `base` with
    /// `λ_j(V) − λ_j(base) = dλ`, and the shock speed `σ` with
    /// `σ[W] = [F]`. Both signs of `dλ` are accepted (Lax and non-Lax
    /// branches).
    pub fn hugoniot_point(&self, family: WaveFamily, base: &FlowState, dlambda: f64) -> Result<(FlowState, f64)> {
        let j = family.index();
        assert!(j != 2, "the contact family has no Hugoniot parametrization by λ");
        if dlambda.abs() < TINY_SHOCK {
            let v = self.rarefaction_point(family, base, dlambda)?;
            let sigma = 0.5 * (self.gas.eigenvalue_unchecked(j, base) + self.gas.eigenvalue_unchecked(j, &v));
            return Ok((v, sigma));
        }
        let lam0 = self.gas.eigenvalue_unchecked(j, base);
        let r = self.gas.eigenvector_unchecked(j, base);
        let rn = r.norm();
        let guess = SVector::<f64, 5>::new(r[0] / rn, r[1] / rn, r[2] / rn, lam0 + 0.5 * dlambda, dlambda * rn);
        let x = match self.hugoniot_newton(j, base, dlambda, guess) {
            Ok(x) => x,
            Err(_) => self.hugoniot_continuation(j, base, dlambda, guess)?,
        };
        let w = Vector3::new(x[0], x[1], x[2]);
        let v = base.with_uvp(&(base.uvp() + w * x[4]));
        self.check_on_curve(&v, dlambda)?;
        Ok((v, x[3]))
    }

    fn hugoniot_newton(
        &self,
        j: usize,
        base: &FlowState,
        dlambda: f64,
        guess: SVector<f64, 5>,
    ) -> Result<SVector<f64, 5>> {
        let gas = &self.gas;
        let w0 = gas.conserved(base)?;
        let f0 = gas.flux(base);
        let lam0 = gas.eigenvalue_unchecked(j, base);
        let t_scale = guess[4].abs().max(1e-300);
        let opts = NewtonOptions {
            tol: 1e-14 + 1e-15 / t_scale,
            max_iter: self.tol.max_iter,
            ..NewtonOptions::default()
        };
        newton(
            "Hugoniot locus",
            |x: &SVector<f64, 5>| {
                let w = Vector3::new(x[0], x[1], x[2]);
                let t = x[4];
                if t == 0.0 || t.signum() != dlambda.signum() {
                    return Err(Error::CurveLeftCone { strength: dlambda });
                }
                let v = base.with_uvp(&(base.uvp() + w * t));
                let dw = (gas.conserved(&v)? - w0) / t;
                let df = (gas.flux(&v) - f0) / t;
                let rh = dw * x[3] - df;
                Ok(SVector::<f64, 5>::new(
                    rh[0],
                    rh[1],
                    rh[2],
                    w.norm_squared() - 1.0,
                    gas.eigenvalue_unchecked(j, &v) - lam0 - dlambda,
                ))
            },
            guess,
            None,
            opts,
        )
    }

    fn hugoniot_continuation(
        &self,
        j: usize,
        base: &FlowState,
        dlambda: f64,
        guess: SVector<f64, 5>,
    ) -> Result<SVector<f64, 5>> {
        let step = self.tol.continuation_step.max(TINY_SHOCK);
        let n = ((dlambda.abs() / step).ceil() as usize).max(1);
        let first = dlambda.signum() * TINY_SHOCK.max(step.min(dlambda.abs()));
        let mut x = guess;
        x[3] = self.gas.eigenvalue_unchecked(j, base) + 0.5 * first;
        x[4] = guess[4] / dlambda * first;
        let mut prev: Option<(f64, SVector<f64, 5>)> = None;
        for k in 1..=n {
            let target = dlambda * k as f64 / n as f64;
            let predictor = match prev {
                Some((t_prev, x_prev)) => {
                    let t_cur = dlambda * (k - 1) as f64 / n as f64;
                    x + (x - x_prev) * ((target - t_cur) / (t_cur - t_prev))
                }
                None => x,
            };
            let sol = self.hugoniot_newton(j, base, target, predictor)?;
            prev = Some((dlambda * (k - 1) as f64 / n as f64, x));
            x = sol;
        }
        Ok(x)
    }

    fn compose(&self, alpha: &[f64; 3], below: &FlowState, b_above: f64) -> Result<[ElementaryWave; 3]> {
        let w1 = self.forward_wave(WaveFamily::One, alpha[0], below)?;
        let w2 = self.contact(alpha[1], &w1.above, b_above)?;
        let w3 = self.forward_wave(WaveFamily::Three, alpha[2], &w2.above)?;
        Ok([w1, w2, w3])
    }

    /// Linearized strengths `R⁻¹ (U_above − U_below)`.
    pub fn linearized_strengths(&self, below: &FlowState, above: &FlowState) -> [f64; 3] {
        let mid = FlowState::new(
            0.5 * (below.u + above.u),
            0.5 * (below.v + above.v),
            0.5 * (below.p + above.p),
            above.b,
        );
        let r = Matrix3::from_columns(&[
            self.gas.eigenvector_unchecked(1, below),
            self.gas.eigenvector_unchecked(2, &mid),
            self.gas.eigenvector_unchecked(3, above),
        ]);
        let rhs = above.uvp() - below.uvp();
        match r.lu().solve(&rhs) {
            Some(a) => [a[0], a[1], a[2]],
            None => [0.0; 3],
        }
    }

    /// Solves the Riemann problem with `below` at smaller `η`.
    pub fn solve_riemann(&self, below: &FlowState, above: &FlowState) -> Result<RiemannSolution> {
        self.solve_riemann_from(below, above, None)
    }

    /// As [`solve_riemann`](Self::solve_riemann), starting Newton from
    /// `guess` (e.g. the incoming strengths at an interaction).
    pub fn solve_riemann_from(
        &self,
        below: &FlowState,
        above: &FlowState,
        guess: Option<[f64; 3]>,
    ) -> Result<RiemannSolution> {
        self.gas.check_admissible(below)?;
        self.gas.check_admissible(above)?;
        let dist = below.dist_max(above);
        if dist > self.tol.max_jump {
            return Err(Error::StatesTooFar {
                distance: dist,
                limit: self.tol.max_jump,
            });
        }
        let target = above.uvp();
        let x0 = guess.unwrap_or_else(|| self.linearized_strengths(below, above));
        let opts = NewtonOptions {
            tol: 0.01 * self.tol.tol_riemann,
            max_iter: self.tol.max_iter,
            ..NewtonOptions::default()
        };
        let x = newton(
            "Riemann solver",
            |a: &SVector<f64, 3>| {
                let waves = self.compose(&[a[0], a[1], a[2]], below, above.b)?;
                Ok(waves[2].above.uvp() - target)
            },
            SVector::<f64, 3>::new(x0[0], x0[1], x0[2]),
            None,
            opts,
        )?;
        let strengths = [x[0], x[1], x[2]];
        let mut waves = self.compose(&strengths, below, above.b)?;
        // pin the top state to the data; the residual is below tol_riemann
        waves[2].above = *above;
        Ok(RiemannSolution {
            below: *below,
            above: *above,
            strengths,
            middle: [waves[0].above, waves[1].above],
            waves,
        })
    }

    /// Lateral Riemann problem at the wall: the strength `β` of the single
    /// 3-wave separating the wall state (pressure `p̄`) from `u_plus`, and the
    /// wall state `Ψ₃(β; u_plus)`.
    pub fn solve_lateral_riemann(&self, u_plus: &FlowState, reference: &FlowState) -> Result<(f64, FlowState)> {
        let wave = self.lateral_wave(u_plus, reference)?;
        Ok((wave.strength, wave.below))
    }

    pub fn lateral_wave(&self, u_plus: &FlowState, reference: &FlowState) -> Result<ElementaryWave> {
        self.gas.check_admissible(u_plus)?;
        let dist = u_plus.dist_max(reference);
        if dist > self.tol.lateral_radius {
            return Err(Error::StatesTooFar {
                distance: dist,
                limit: self.tol.lateral_radius,
            });
        }
        let p_bar = self.gas.p_bar;
        if u_plus.p == p_bar {
            return self.backward_wave_3(0.0, u_plus);
        }
        // p(Ψ₃(β)) ≈ p₊ − β (r₃)_p
        let slope = -self.gas.eigenvector_unchecked(3, u_plus)[2];
        let beta0 = (u_plus.p - p_bar) / -slope;
        let opts = NewtonOptions {
            tol: 1e-3 * self.tol.tol_riemann * p_bar.max(1.0),
            max_iter: self.tol.max_iter,
            ..NewtonOptions::default()
        };
        let beta = newton_scalar(
            "lateral Riemann solver",
            |beta| Ok(self.backward_curve_3(beta, u_plus)?.p - p_bar),
            beta0,
            Some(slope),
            opts,
        )?;
        let mut wave = self.backward_wave_3(beta, u_plus)?;
        wave.below.p = p_bar;
        Ok(wave)
    }

    /// Linear response `dβ/dp₊ = −1/(κ₃ λ₃ u)` of the lateral solver at a
    /// wall state.
    pub fn lateral_gain(&self, state: &FlowState) -> f64 {
        1.0 / self.gas.eigenvector_unchecked(3, state)[2]
    }

    /// Reflection coefficient `K₂ = −dα₃/dα₁` for a weak 1-wave arriving at
    /// the wall from the wall state `u_left` (central difference, step 1e−6).
    pub fn reflection_coefficient(&self, u_left: &FlowState, reference: &FlowState) -> Result<f64> {
        let h = 1e-6;
        let reflect = |a1: f64| -> Result<f64> {
            let incident = self.forward_curve(WaveFamily::One, a1, u_left)?;
            Ok(self.solve_lateral_riemann(&incident, reference)?.0)
        };
        Ok(-(reflect(h)? - reflect(-h)?) / (2.0 * h))
    }
}

fn contact_point(alpha: f64, base: &FlowState, b_above: f64) -> FlowState {
    let e = alpha.exp();
    FlowState::new(base.u * e, base.v * e, base.p, b_above)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curves() -> WaveCurves {
        WaveCurves::new(GasConstants::default(), Tolerances::default())
    }

    fn reference() -> FlowState {
        GasConstants::default().reference_state(2.0, 1.0)
    }

    #[test]
    fn curves_start_at_base_point() {
        let wc = curves();
        let u = reference();
        for f in WaveFamily::ALL {
            assert_eq!(wc.forward_curve(f, 0.0, &u).unwrap(), u);
        }
        assert_eq!(wc.backward_curve_3(0.0, &u).unwrap(), u);
    }

    #[test]
    fn contact_keeps_riemann_invariants() {
        let wc = curves();
        let u = GasConstants::default().state_from_primitive(2.0, 0.1, 1.0, 1.0);
        let v = wc.forward_curve(WaveFamily::Two, 0.04, &u).unwrap();
        assert_eq!(v.p, u.p);
        assert!((v.v / v.u - u.v / u.u).abs() < 1e-15);
    }

    #[test]
    fn tangents_match_eigenvectors() {
        let wc = curves();
        let u = GasConstants::default().state_from_primitive(2.1, 0.05, 1.02, 1.0);
        for f in WaveFamily::ALL {
            let r = wc.gas.eigenvector_unchecked(f.index(), &u);
            let mut errs = Vec::new();
            for h in [1e-3, 1e-4] {
                for sign in [1.0, -1.0] {
                    let v = wc.forward_curve(f, sign * h, &u).unwrap();
                    let tangent = (v.uvp() - u.uvp()) / (sign * h);
                    errs.push((tangent - r).amax());
                }
            }
            assert!(errs.iter().all(|e| *e < 10.0 * 1e-3), "{:?}: {:?}", f, errs);
            // O(h): the error drops by about 10 with h
            assert!(errs[2] < 0.2 * errs[0] + 1e-9);
        }
        let mut errs = Vec::new();
        for h in [1e-3, 1e-4] {
            let v = wc.backward_curve_3(h, &u).unwrap();
            let tangent = (v.uvp() - u.uvp()) / h;
            errs.push((tangent + wc.gas.eigenvector_unchecked(3, &u)).amax());
        }
        assert!(errs[0] < 1e-2 && errs[1] < 0.2 * errs[0] + 1e-9);
    }

    #[test]
    fn shocks_satisfy_rankine_hugoniot_and_lax() {
        let wc = curves();
        let u = reference();
        for f in [WaveFamily::One, WaveFamily::Three] {
            for a in [-0.002, -0.03, -0.1] {
                let w = wc.forward_wave(f, a, &u).unwrap();
                let res = wc.gas.rankine_hugoniot_residual(&w.below, &w.above, w.speed_lo).unwrap();
                assert!(res.amax() < 1e-9);
                let j = f.index();
                let lb = wc.gas.eigenvalue_unchecked(j, &w.below);
                let la = wc.gas.eigenvalue_unchecked(j, &w.above);
                assert!(lb > w.speed_lo && w.speed_lo > la, "{f:?} {a}: {lb} {} {la}", w.speed_lo);
                assert!((la - lb - a).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn backward_curve_inverts_forward_curve() {
        let wc = curves();
        let u = reference();
        for a in [-0.05, -0.01, 0.01, 0.05] {
            let v = wc.forward_curve(WaveFamily::Three, a, &u).unwrap();
            let back = wc.backward_curve_3(a, &v).unwrap();
            assert!(back.dist_max(&u) < 1e-8, "{a}: {}", back.dist_max(&u));
        }
    }

    #[test]
    fn riemann_trivial_and_manufactured() {
        let wc = curves();
        let u = reference();
        let sol = wc.solve_riemann(&u, &u).unwrap();
        assert!(sol.strengths.iter().all(|a| a.abs() < 1e-12));

        let u1 = wc.forward_curve(WaveFamily::One, 0.03, &u).unwrap();
        let u2 = wc.forward_curve(WaveFamily::Two, -0.02, &u1).unwrap();
        let v = wc.forward_curve(WaveFamily::Three, 0.01, &u2).unwrap();
        let sol = wc.solve_riemann(&u, &v).unwrap();
        let expect = [0.03, -0.02, 0.01];
        for k in 0..3 {
            assert!((sol.strengths[k] - expect[k]).abs() < 1e-8, "{:?}", sol.strengths);
        }

        let w = FlowState::new(u.u * 0.05f64.exp(), u.v * 0.05f64.exp(), u.p, u.b);
        let sol = wc.solve_riemann(&u, &w).unwrap();
        assert!((sol.strengths[0]).abs() < 1e-8);
        assert!((sol.strengths[1] - 0.05).abs() < 1e-8);
        assert!((sol.strengths[2]).abs() < 1e-8);
    }

    #[test]
    fn riemann_places_bernoulli_jump_on_contact() {
        let wc = curves();
        let gas = wc.gas;
        let below = gas.state_from_primitive(2.0, 0.0, 1.0, 1.0);
        let above = gas.state_from_primitive(2.02, 0.01, 1.01, 1.05);
        let sol = wc.solve_riemann(&below, &above).unwrap();
        assert_eq!(sol.middle[0].b, below.b);
        assert_eq!(sol.middle[1].b, above.b);
        assert_eq!(sol.waves[2].below.b, above.b);
    }

    #[test]
    fn far_states_are_rejected() {
        let wc = curves();
        let below = reference();
        let above = FlowState::new(2.8, 0.0, 1.0, 5.5);
        assert!(matches!(wc.solve_riemann(&below, &above), Err(Error::StatesTooFar { .. })));
    }

    #[test]
    fn lateral_problem_at_reference_is_trivial() {
        let wc = curves();
        let u = reference();
        let (beta, wall) = wc.solve_lateral_riemann(&u, &u).unwrap();
        assert_eq!(beta, 0.0);
        assert_eq!(wall, u);
    }

    #[test]
    fn lateral_problem_enforces_wall_pressure() {
        let wc = curves();
        let u_plus = FlowState::new(2.01, 0.02, 1.03, 5.5);
        let (beta, wall) = wc.solve_lateral_riemann(&u_plus, &reference()).unwrap();
        assert!((wall.p - 1.0).abs() < 1e-10);
        let back = wc.forward_curve(WaveFamily::Three, beta, &wall).unwrap();
        assert!(back.dist_max(&u_plus) < 1e-9);
    }

    #[test]
    fn reflection_coefficient_at_reference_is_one() {
        let wc = curves();
        let k2 = wc.reflection_coefficient(&reference(), &reference()).unwrap();
        assert!(k2 > 0.0);
        assert!((k2.abs() - 1.0).abs() < 1e-4, "K2 = {k2}");
    }

    #[test]
    fn branch_classification() {
        let b = CurveBranch::classify(WaveFamily::One, -0.1, CurveDirection::Forward);
        assert_eq!(b.kind, CurveKind::Shock);
        let b = CurveBranch::classify(WaveFamily::Three, 0.1, CurveDirection::Backward);
        assert_eq!(b.kind, CurveKind::Rarefaction);
        let b = CurveBranch::classify(WaveFamily::Two, -0.1, CurveDirection::Forward);
        assert_eq!(b.kind, CurveKind::Contact);
    }
}
