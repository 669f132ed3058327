//! Glimm functional, Lyapunov functional and the associated diagnostics.

use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::front_tracking::{Event, FrontTracker, PiecewiseSolution, WaveFront};
use crate::gas_dynamics::FlowState;
use crate::numerics::{newton, NewtonOptions};
use crate::wave_curves::{CurveKind, WaveCurves, WaveFamily};

/// Weights of the Glimm and Lyapunov functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConstants {
    /// Weight of 1-waves in the Glimm functional.
    pub k_plus: f64,
    /// Weight of the interaction potential in the Glimm functional.
    pub kappa: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Strength weights `c_i` of the Lyapunov integrand `q_i = c_i h_i`.
    pub c_a: [f64; 3],
}

impl Default for WeightConstants {
    fn default() -> Self {
        Self {
            k_plus: 2.0,
            kappa: 200.0,
            kappa1: 1.0,
            kappa2: 1.0,
            c_a: [4.0, 1.0, 1.0],
        }
    }
}

/// The three parts of the Glimm functional.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GlimmTotals {
    pub v: f64,
    pub q_a: f64,
    pub q_b: f64,
}

impl GlimmTotals {
    pub fn q(&self) -> f64 {
        self.q_a + self.q_b
    }

    pub fn total(&self, w: &WeightConstants) -> f64 {
        self.v + w.kappa * self.q()
    }
}

impl Add for GlimmTotals {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            q_a: self.q_a + o.q_a,
            q_b: self.q_b + o.q_b,
        }
    }
}

impl Sub for GlimmTotals {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            v: self.v - o.v,
            q_a: self.q_a - o.q_a,
            q_b: self.q_b - o.q_b,
        }
    }
}

/// `b_α = k₊α` for 1-waves, `α` otherwise.
pub fn weighted_strength(f: &WaveFront, w: &WeightConstants) -> f64 {
    if f.family == WaveFamily::One {
        w.k_plus * f.strength
    } else {
        f.strength
    }
}

/// Whether `lower` (smaller `η`) and `upper` approach each other: a faster
/// family below a slower one, or two fronts of the same genuinely nonlinear
/// family at least one of which is a shock.
pub fn approaching(lower: &WaveFront, upper: &WaveFront) -> bool {
    lower.family > upper.family
        || (lower.family == upper.family
            && lower.family.is_genuinely_nonlinear()
            && (lower.kind == CurveKind::Shock || upper.kind == CurveKind::Shock))
}

pub fn pair_potential(lower: &WaveFront, upper: &WaveFront, w: &WeightConstants) -> f64 {
    if approaching(lower, upper) {
        (weighted_strength(lower, w) * weighted_strength(upper, w)).abs()
    } else {
        0.0
    }
}

/// Contribution of a 1-front heading for the wall.
pub fn wall_potential(f: &WaveFront, w: &WeightConstants) -> f64 {
    if f.family == WaveFamily::One && f.speed < 0.0 {
        weighted_strength(f, w).abs()
    } else {
        0.0
    }
}

/// Glimm totals of a front list ordered by position (O(n²)).
pub fn glimm_totals(fronts: &[WaveFront], w: &WeightConstants) -> GlimmTotals {
    let mut t = GlimmTotals::default();
    for (k, f) in fronts.iter().enumerate() {
        t.v += weighted_strength(f, w).abs();
        t.q_b += wall_potential(f, w);
        for g in &fronts[k + 1..] {
            t.q_a += pair_potential(f, g, w);
        }
    }
    t
}

/// Glimm totals and, for a pair, the Lyapunov functional and the L¹
/// distance at one `ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSnapshot {
    pub xi: f64,
    #[serde(rename = "V")]
    pub v_total: f64,
    #[serde(rename = "Q_A")]
    pub q_approach: f64,
    #[serde(rename = "Q_b")]
    pub q_boundary: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "Phi")]
    pub phi: Option<f64>,
    #[serde(rename = "L1")]
    pub l1: Option<f64>,
    /// Range of the weights `W_i` over all evaluation intervals.
    pub w_min: Option<f64>,
    pub w_max: Option<f64>,
}

pub fn glimm_functional(sol: &PiecewiseSolution, w: &WeightConstants) -> FunctionalSnapshot {
    let t = glimm_totals(&sol.fronts, w);
    FunctionalSnapshot {
        xi: sol.xi,
        v_total: t.v,
        q_approach: t.q_a,
        q_boundary: t.q_b,
        g: t.total(w),
        phi: None,
        l1: None,
        w_min: None,
        w_max: None,
    }
}

/// Credit granted to an event against the monotonicity of the Glimm
/// functional: the jump of waves pruned earlier and absorbed into the
/// incoming fronts, at the largest rate it can change `𝒢`.
pub fn glimm_credit(event: &Event, w: &WeightConstants) -> f64 {
    w.k_plus * (1.0 + w.kappa * (1.0 + event.glimm_before.v)) * event.defect_in
}

/// Connection of two states along the shock curves `S₁`, `C₂`, `S₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HugoniotDecomposition {
    pub h: [f64; 3],
    pub middle: [FlowState; 2],
    /// Shock speeds of the three jumps (`λ₂ = 0`).
    pub speeds: [f64; 3],
}

fn hugoniot_jump(curves: &WaveCurves, family: WaveFamily, h: f64, base: &FlowState) -> Result<(FlowState, f64)> {
    if h == 0.0 {
        return Ok((*base, curves.gas.eigenvalue_unchecked(family.index(), base)));
    }
    curves.hugoniot_point(family, base, h)
}

fn hugoniot_compose(curves: &WaveCurves, h: &[f64; 3], base: &FlowState, b_above: f64) -> Result<([FlowState; 3], [f64; 3])> {
    let (m1, s1) = hugoniot_jump(curves, WaveFamily::One, h[0], base)?;
    let m2 = curves.contact(h[1], &m1, b_above)?.above;
    let (top, s3) = hugoniot_jump(curves, WaveFamily::Three, h[2], &m2)?;
    Ok(([m1, m2, top], [s1, 0.0, s3]))
}

/// Strengths `h` with `S₃(h₃) ∘ C₂(h₂) ∘ S₁(h₁) U = V`, both branches of
/// each Hugoniot locus allowed.
pub fn hugoniot_decompose(curves: &WaveCurves, u: &FlowState, v: &FlowState) -> Result<HugoniotDecomposition> {
    if u.uvp() == v.uvp() {
        let (_, speeds) = hugoniot_compose(curves, &[0.0; 3], u, v.b)?;
        let mut middle = [*u; 2];
        middle[1].b = v.b;
        return Ok(HugoniotDecomposition {
            h: [0.0; 3],
            middle,
            speeds,
        });
    }
    let guess = curves.linearized_strengths(u, v);
    let target = v.uvp();
    let opts = NewtonOptions {
        tol: 1e-13 * target.amax().max(1.0),
        max_iter: curves.tol.max_iter,
        ..NewtonOptions::default()
    };
    let h = newton::<3, _>(
        "Hugoniot decomposition",
        |x| {
            let (states, _) = hugoniot_compose(curves, &[x[0], x[1], x[2]], u, v.b)?;
            Ok(states[2].uvp() - target)
        },
        Vector3::new(guess[0], guess[1], guess[2]),
        None,
        opts,
    )?;
    let h = [h[0], h[1], h[2]];
    let (states, speeds) = hugoniot_compose(curves, &h, u, v.b)?;
    Ok(HugoniotDecomposition {
        h,
        middle: [states[0], states[1]],
        speeds,
    })
}

/// Exact `∫₀^∞ |U − V| dη` with the ℓ¹ norm in `(u, v, p)`.
pub fn l1_distance(a: &PiecewiseSolution, b: &PiecewiseSolution) -> Result<f64> {
    check_tails(a, b)?;
    let cuts = merged_cuts(a, b);
    let mut total = 0.0;
    for k in 0..cuts.len().saturating_sub(1) {
        let (lo, hi) = (cuts[k], cuts[k + 1]);
        if hi > lo {
            total += a.trace_at(lo).dist_l1(&b.trace_at(lo)) * (hi - lo);
        }
    }
    Ok(total)
}

const TAIL_TOL: f64 = 1e-9;

fn check_tails(a: &PiecewiseSolution, b: &PiecewiseSolution) -> Result<()> {
    let (ta, tb) = (a.tail_state(), b.tail_state());
    if ta.dist_max(&tb) > TAIL_TOL || (ta.b - tb.b).abs() > TAIL_TOL {
        return Err(Error::TailMismatch(format!("{ta:?} vs {tb:?}")));
    }
    if (a.xi - b.xi).abs() > 1e-12 * a.xi.abs().max(1.0) {
        return Err(Error::InvalidParameter(format!("solutions at xi = {} and {}", a.xi, b.xi)));
    }
    Ok(())
}

/// `0` and all front positions of both solutions, sorted.
fn merged_cuts(a: &PiecewiseSolution, b: &PiecewiseSolution) -> Vec<f64> {
    let mut cuts: Vec<f64> = std::iter::once(0.0)
        .chain(a.positions())
        .chain(b.positions())
        .map(|x| x.max(0.0))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts
}

/// Strength totals per family of the fronts of one solution at or below
/// a moving cut, advanced monotonically.
struct FamilySweep<'a> {
    fronts: &'a [WaveFront],
    xi: f64,
    next: usize,
    below: [f64; 3],
    total: [f64; 3],
}

impl<'a> FamilySweep<'a> {
    fn new(sol: &'a PiecewiseSolution) -> Self {
        let mut total = [0.0; 3];
        for f in &sol.fronts {
            total[f.family.index() - 1] += f.strength.abs();
        }
        Self {
            fronts: &sol.fronts,
            xi: sol.xi,
            next: 0,
            below: [0.0; 3],
            total,
        }
    }

    fn advance(&mut self, eta: f64) {
        while self.next < self.fronts.len() && self.fronts[self.next].position(self.xi) <= eta {
            let f = &self.fronts[self.next];
            self.below[f.family.index() - 1] += f.strength.abs();
            self.next += 1;
        }
    }

    fn above(&self, j: usize) -> f64 {
        (self.total[j] - self.below[j]).max(0.0)
    }
}

/// `W_i = 1 + κ₁𝒜_i + κ₂(𝒬(U) + 𝒬(V))` on an interval whose lower end has
/// been swept into `su`, `sv`.
fn weights_at(su: &FamilySweep, sv: &FamilySweep, q: &[f64; 3], q_sum: f64, w: &WeightConstants) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        let mut a = 0.0;
        for j in 0..3 {
            if j > i {
                a += su.below[j] + sv.below[j];
            } else if j < i {
                a += su.above(j) + sv.above(j);
            }
        }
        a += if q[i] < 0.0 {
            su.below[i] + sv.above(i)
        } else {
            sv.below[i] + su.above(i)
        };
        out[i] = 1.0 + w.kappa1 * a + w.kappa2 * q_sum;
    }
    out
}

/// `Φ(U, V) = Σᵢ ∫₀^∞ |q_i| W_i dη`, summed exactly over the intervals cut by
/// the fronts of both solutions.
pub fn lyapunov_phi(
    curves: &WaveCurves,
    su: &PiecewiseSolution,
    sv: &PiecewiseSolution,
    w: &WeightConstants,
) -> Result<FunctionalSnapshot> {
    check_tails(su, sv)?;
    let gu = glimm_totals(&su.fronts, w);
    let gv = glimm_totals(&sv.fronts, w);
    let q_sum = gu.q() + gv.q();
    let cuts = merged_cuts(su, sv);
    let mut fu = FamilySweep::new(su);
    let mut fv = FamilySweep::new(sv);
    let (mut phi, mut l1) = (0.0, 0.0);
    let (mut w_min, mut w_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..cuts.len() {
        let lo = cuts[k];
        let hi = cuts.get(k + 1).copied().unwrap_or(f64::INFINITY);
        if !(hi > lo) && k + 1 < cuts.len() {
            continue;
        }
        fu.advance(lo);
        fv.advance(lo);
        let (a, b) = (su.trace_at(lo), sv.trace_at(lo));
        let q = if hi.is_finite() {
            let h = hugoniot_decompose(curves, &a, &b)?.h;
            [w.c_a[0] * h[0], w.c_a[1] * h[1], w.c_a[2] * h[2]]
        } else {
            [0.0; 3]
        };
        let wi = weights_at(&fu, &fv, &q, q_sum, w);
        for i in 0..3 {
            w_min = w_min.min(wi[i]);
            w_max = w_max.max(wi[i]);
        }
        if hi.is_finite() {
            let len = hi - lo;
            phi += (0..3).map(|i| q[i].abs() * wi[i]).sum::<f64>() * len;
            l1 += a.dist_l1(&b) * len;
        }
    }
    let g = glimm_functional(su, w);
    Ok(FunctionalSnapshot {
        phi: Some(phi),
        l1: Some(l1),
        w_min: Some(w_min),
        w_max: Some(w_max),
        ..g
    })
}

/// Wall contributions `E_{b,i} = |q_i(b)| W_i(b) λ_i(b)` to `dΦ/dξ`, with
/// `λ_i(b)` the speeds of the Hugoniot decomposition of the wall states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTerms {
    pub e: [f64; 3],
    pub decomposition: HugoniotDecomposition,
    pub weights: [f64; 3],
}

impl BoundaryTerms {
    pub fn total(&self) -> f64 {
        self.e.iter().sum()
    }
}

pub fn boundary_terms(
    curves: &WaveCurves,
    su: &PiecewiseSolution,
    sv: &PiecewiseSolution,
    w: &WeightConstants,
) -> Result<BoundaryTerms> {
    let q_sum = glimm_totals(&su.fronts, w).q() + glimm_totals(&sv.fronts, w).q();
    let d = hugoniot_decompose(curves, &su.wall_state(), &sv.wall_state())?;
    let q = [w.c_a[0] * d.h[0], w.c_a[1] * d.h[1], w.c_a[2] * d.h[2]];
    let mut fu = FamilySweep::new(su);
    let mut fv = FamilySweep::new(sv);
    fu.advance(0.0);
    fv.advance(0.0);
    let weights = weights_at(&fu, &fv, &q, q_sum, w);
    let mut e = [0.0; 3];
    for i in 0..3 {
        e[i] = q[i].abs() * weights[i] * d.speeds[i];
    }
    Ok(BoundaryTerms {
        e,
        decomposition: d,
        weights,
    })
}

/// Calibrated weights and the sweep maxima they were derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub weights: WeightConstants,
    pub eps0: f64,
    /// `max |K₂|` over the wall states of the sweep.
    pub max_reflection: f64,
    /// `max |λ₃/λ₁|` over the sweep.
    pub max_speed_ratio: f64,
    /// `max |h₃|/|h₁|` over pairs of wall states.
    pub max_wall_ratio: f64,
    /// `max ‖R⁻¹‖₁`: bound on the total strength per unit jump.
    pub strength_scale: f64,
    pub samples: usize,
}

/// Sweeps states around `reference` within relative radius `eps0` and
/// fixes the weights:
/// `k₊ = 2 max|K₂|`, `c = (4 max|λ₃/λ₁| max|h₃/h₁|, 1, 1)`, `κ = 10/ε₀`,
/// `κ₁ = 1`, and `κ₂` as large as `W_i ≤ 2` permits for solutions with
/// `TV ≤ ε₀` whose total strength at most doubles.
pub fn calibrate(curves: &WaveCurves, reference: &FlowState, eps0: f64) -> Result<Calibration> {
    if !(eps0 > 0.0 && eps0 < 0.5) {
        return Err(Error::InvalidParameter(format!("eps0 = {eps0} must lie in (0, 0.5)")));
    }
    let gas = &curves.gas;
    let grid = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let ubar = reference.u;
    let mut wall_states = Vec::new();
    let mut all_states = Vec::new();
    for &a in &grid {
        for &t in &grid {
            for &c in &[-0.5, 0.0, 0.5] {
                let base = FlowState::new(ubar * (1.0 + eps0 * a), 0.1 * ubar * t, gas.p_bar, reference.b * (1.0 + eps0 * c));
                for &dp in &grid {
                    let mut s = base;
                    s.p = gas.p_bar * (1.0 + eps0 * dp);
                    if gas.is_admissible(&s) {
                        all_states.push(s);
                    }
                }
                if gas.is_admissible(&base) {
                    wall_states.push(base);
                }
            }
        }
    }

    let mut max_reflection: f64 = 0.0;
    for s in &wall_states {
        max_reflection = max_reflection.max(curves.reflection_coefficient(s, reference)?.abs());
    }

    let mut max_speed_ratio: f64 = 0.0;
    let mut strength_scale: f64 = 0.0;
    for s in &all_states {
        let l = gas.eigenvalues(s)?;
        max_speed_ratio = max_speed_ratio.max((l[2] / l[0]).abs());
        let r = Matrix3::from_columns(&gas.eigenvectors(s)?);
        if let Some(inv) = r.try_inverse() {
            let norm = (0..3).map(|c| inv.column(c).abs().sum()).fold(0.0, f64::max);
            strength_scale = strength_scale.max(norm);
        }
    }

    let mut max_wall_ratio: f64 = 0.0;
    let mut samples = 0;
    for (k, a) in wall_states.iter().enumerate() {
        for b in &wall_states[k + 1..] {
            let Ok(d) = hugoniot_decompose(curves, a, b) else { continue };
            if d.h[0].abs() > 1e-10 {
                max_wall_ratio = max_wall_ratio.max(d.h[2].abs() / d.h[0].abs());
                samples += 1;
            }
        }
    }

    let k_plus = 2.0 * max_reflection;
    let kappa1 = 1.0;
    let v_max = 2.0 * strength_scale * eps0;
    let q_max = k_plus * v_max * (1.0 + 0.5 * k_plus * v_max);
    let room = 1.0 - kappa1 * 2.0 * v_max;
    if !(room > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps0 = {eps0} too large: strength bound {v_max} leaves no room for W <= 2"
        )));
    }
    let weights = WeightConstants {
        k_plus,
        kappa: 10.0 / eps0,
        kappa1,
        kappa2: room / (2.0 * q_max),
        c_a: [4.0 * max_speed_ratio * max_wall_ratio, 1.0, 1.0],
    };
    Ok(Calibration {
        weights,
        eps0,
        max_reflection,
        max_speed_ratio,
        max_wall_ratio,
        strength_scale,
        samples,
    })
}

/// One row of a Lyapunov audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub xi: f64,
    #[serde(rename = "Phi")]
    pub phi: f64,
    #[serde(rename = "L1")]
    pub l1: f64,
    pub w_min: f64,
    pub w_max: f64,
    /// Glimm totals of the two solutions.
    pub glimm_u: GlimmTotals,
    pub glimm_v: GlimmTotals,
    #[serde(rename = "G_U")]
    pub g_u: f64,
    #[serde(rename = "G_V")]
    pub g_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayAudit {
    pub rows: Vec<AuditRow>,
    /// `max (Φ(ξ₂) − Φ(ξ₁)) / (δ (ξ₂ − ξ₁))` over grid pairs, floored at 0.
    pub c2_observed: f64,
    /// `max(Φ/L1, L1/Φ)` over rows with `L1 > 0`.
    pub c1_observed: f64,
    pub delta: f64,
}

impl DecayAudit {
    pub fn passes(&self, c2: f64) -> bool {
        self.c2_observed <= c2
    }

    /// `sup L1(ξ) / L1(0)`.
    pub fn stability_ratio(&self) -> f64 {
        let l0 = self.rows.first().map_or(0.0, |r| r.l1);
        if l0 == 0.0 {
            return if self.rows.iter().all(|r| r.l1 == 0.0) { 1.0 } else { f64::INFINITY };
        }
        self.rows.iter().map(|r| r.l1 / l0).fold(0.0, f64::max)
    }
}

/// Runs both solutions through the increasing grid `xis` and tabulates
/// `Φ` and the L¹ distance.
pub fn phi_decay_audit(
    tu: &FrontTracker,
    su: &PiecewiseSolution,
    tv: &FrontTracker,
    sv: &PiecewiseSolution,
    xis: &[f64],
    w: &WeightConstants,
) -> Result<DecayAudit> {
    let curves = &tu.curves;
    let (mut u, mut v) = (su.clone(), sv.clone());
    let mut rows = Vec::with_capacity(xis.len());
    for &xi in xis {
        tu.run(&mut u, xi)?;
        tv.run(&mut v, xi)?;
        let snap = lyapunov_phi(curves, &u, &v, w)?;
        let (glimm_u, glimm_v) = (glimm_totals(&u.fronts, w), glimm_totals(&v.fronts, w));
        rows.push(AuditRow {
            xi,
            phi: snap.phi.unwrap_or(0.0),
            l1: snap.l1.unwrap_or(0.0),
            w_min: snap.w_min.unwrap_or(1.0),
            w_max: snap.w_max.unwrap_or(1.0),
            glimm_u,
            glimm_v,
            g_u: glimm_u.total(w),
            g_v: glimm_v.total(w),
        });
    }
    let delta = su.delta.max(sv.delta);
    let mut c2: f64 = 0.0;
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            if b.xi > a.xi {
                c2 = c2.max((b.phi - a.phi) / (delta * (b.xi - a.xi)));
            }
        }
    }
    let c1 = rows
        .iter()
        .filter(|r| r.l1 > 0.0)
        .map(|r| if r.phi > 0.0 { (r.phi / r.l1).max(r.l1 / r.phi) } else { f64::INFINITY })
        .fold(1.0, f64::max);
    Ok(DecayAudit {
        rows,
        c2_observed: c2,
        c1_observed: c1,
        delta,
    })
}

/// Local integrals comparing a front-tracking solution with the Riemann
/// parametrix `H♯` and the frozen linear parametrix `H♭`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViscosityReport {
    pub tau: f64,
    pub zeta: f64,
    pub radius: f64,
    pub step: f64,
    pub lambda_hat: f64,
    pub i_sharp: f64,
    pub i_flat: f64,
    /// Variation of `U(τ)` on `(ζ−β, ζ) ∪ (ζ, ζ+β)`.
    pub tv_punctured: f64,
    /// Variation of `U(τ)` on `(ζ−β, ζ+β)`.
    pub tv_window: f64,
}

const FAN_CELLS: usize = 64;

pub fn viscosity_check(
    tracker: &FrontTracker,
    sol: &PiecewiseSolution,
    zeta: f64,
    radius: f64,
    step: f64,
) -> Result<ViscosityReport> {
    if !(zeta - radius > 0.0) || !(radius > 0.0) || !(step > 0.0) {
        return Err(Error::OutOfDomain(format!(
            "window [{}, {}] with step {step}",
            zeta - radius,
            zeta + radius
        )));
    }
    let curves = &tracker.curves;
    let gas = &curves.gas;
    let tau = sol.xi;
    let mut later = sol.clone();
    tracker.run(&mut later, tau + step)?;

    let mut lam: f64 = 0.0;
    for s in sol.states.iter().chain(&later.states) {
        let l = gas.eigenvalues(s)?;
        lam = lam.max(l[0].abs()).max(l[2].abs());
    }
    let lambda_hat = 1.2 * lam;
    let (lo, hi) = (zeta - radius + step * lambda_hat, zeta + radius - step * lambda_hat);
    if !(hi > lo) {
        return Err(Error::OutOfDomain(format!("step {step} too large for radius {radius}")));
    }

    let pos = sol.positions();
    let on_zeta = |x: f64| (x - zeta).abs() <= 1e-12 * zeta.max(1.0);
    let (mut tv_punctured, mut tv_window) = (0.0, 0.0);
    for (k, &x) in pos.iter().enumerate() {
        if x > zeta - radius && x < zeta + radius {
            let jump = sol.states[k].dist_l1(&sol.states[k + 1]);
            tv_window += jump;
            if !on_zeta(x) {
                tv_punctured += jump;
            }
        }
    }

    let k_minus = pos.partition_point(|&x| x < zeta && !on_zeta(x));
    let u_minus = sol.states[k_minus];
    let k_plus = pos.partition_point(|&x| x < zeta || on_zeta(x));
    let u_plus = sol.states[k_plus];
    let u_tilde = u_plus;
    let riemann = curves.solve_riemann(&u_minus, &u_plus)?;

    let later_pos = later.positions();
    let mut cuts: Vec<f64> = later_pos.clone();
    cuts.extend(pos.iter().copied());
    cuts.push(zeta - lambda_hat * step);
    cuts.push(zeta + lambda_hat * step);
    let mut fans = Vec::new();
    for wv in &riemann.waves {
        cuts.push(zeta + wv.speed_lo * step);
        cuts.push(zeta + wv.speed_hi * step);
        if wv.kind == CurveKind::Rarefaction && wv.speed_hi > wv.speed_lo {
            fans.push((zeta + wv.speed_lo * step, zeta + wv.speed_hi * step));
        }
    }
    let h_sharp = |eta: f64| -> Result<FlowState> {
        if (eta - zeta).abs() <= lambda_hat * step {
            riemann.sample(curves, (eta - zeta) / step)
        } else {
            Ok(sol.trace_at(eta))
        }
    };
    let i_sharp = integrate_abs(&later, lo, hi, cuts, &fans, h_sharp)? / step;

    let (a_mat, b_mat) = gas.symmetric_matrices(&u_tilde)?;
    let speeds = gas.eigenvalues(&u_tilde)?;
    let r = Matrix3::from_columns(&gas.eigenvectors(&u_tilde)?);
    let l = r
        .try_inverse()
        .ok_or_else(|| Error::NonPhysicalState("singular eigenvector matrix".into()))?;
    debug_assert!({
        let m = a_mat.try_inverse().unwrap() * b_mat;
        (0..3).all(|j| (m * r.column(j) - r.column(j) * speeds[j]).amax() < 1e-8 * (1.0 + m.amax()))
    });
    let window = (zeta - radius, zeta + radius);
    let initial = |eta: f64| sol.trace_at(eta.clamp(window.0, window.1)).uvp();
    let mut cuts: Vec<f64> = later_pos;
    for sp in speeds {
        for &x in &pos {
            if x > window.0 && x < window.1 {
                cuts.push(x + sp * step);
            }
        }
    }
    let h_flat = |eta: f64| -> Result<FlowState> {
        let mut m = Vector3::zeros();
        for j in 0..3 {
            let coeff = l.row(j).transpose().dot(&initial(eta - speeds[j] * step));
            m += r.column(j) * coeff;
        }
        Ok(u_tilde.with_uvp(&m))
    };
    let i_flat = integrate_abs(&later, lo, hi, cuts, &[], h_flat)? / step;

    Ok(ViscosityReport {
        tau,
        zeta,
        radius,
        step,
        lambda_hat,
        i_sharp,
        i_flat,
        tv_punctured,
        tv_window,
    })
}

/// `∫_lo^hi |sol − h| dη` for piecewise-constant `sol`; `h` is constant
/// between `cuts` except on `fans`, where it is resolved by midpoint cells.
fn integrate_abs<F>(sol: &PiecewiseSolution, lo: f64, hi: f64, mut cuts: Vec<f64>, fans: &[(f64, f64)], h: F) -> Result<f64>
where
    F: Fn(f64) -> Result<FlowState>,
{
    cuts.retain(|&x| x > lo && x < hi);
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for seg in cuts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if !(b > a) {
            continue;
        }
        let mid = 0.5 * (a + b);
        let in_fan = fans.iter().any(|&(f0, f1)| mid > f0 && mid < f1);
        let n = if in_fan { FAN_CELLS } else { 1 };
        let dx = (b - a) / n as f64;
        for c in 0..n {
            let x = a + (c as f64 + 0.5) * dx;
            total += sol.trace_at(x).dist_l1(&h(x)?) * dx;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front_tracking::{InitialData, TrackingParams};
    use crate::gas_dynamics::GasConstants;
    use crate::wave_curves::Tolerances;

    fn curves() -> WaveCurves {
        WaveCurves::new(GasConstants::default(), Tolerances::default())
    }

    fn reference() -> FlowState {
        GasConstants::default().reference_state(2.0, 1.0)
    }

    fn single(family: WaveFamily, alpha: f64, eta: f64, w: &WeightConstants) -> PiecewiseSolution {
        let wc = curves();
        let wave = wc.forward_wave(family, alpha, &reference()).unwrap();
        let front = WaveFront::from_wave(0, &wave, 1, 0.0, eta);
        PiecewiseSolution::from_parts(0.0, 0.01, vec![wave.below, wave.above], vec![front], w).unwrap()
    }

    #[test]
    fn glimm_of_empty_solution_vanishes() {
        let w = WeightConstants::default();
        let sol = PiecewiseSolution::from_parts(0.0, 0.01, vec![reference()], vec![], &w).unwrap();
        let g = glimm_functional(&sol, &w);
        assert_eq!((g.v_total, g.q_approach, g.q_boundary, g.g), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn glimm_of_single_fronts() {
        let w = WeightConstants::default();
        let alpha = -0.01;
        let g1 = glimm_functional(&single(WaveFamily::One, alpha, 1.0, &w), &w);
        assert!((g1.v_total - w.k_plus * alpha.abs()).abs() < 1e-15);
        assert!((g1.q_boundary - w.k_plus * alpha.abs()).abs() < 1e-15);
        assert_eq!(g1.q_approach, 0.0);
        let g3 = glimm_functional(&single(WaveFamily::Three, alpha, 1.0, &w), &w);
        assert!((g3.v_total - alpha.abs()).abs() < 1e-15);
        assert_eq!(g3.q_approach + g3.q_boundary, 0.0);
        assert_eq!(g3.g, g3.v_total);
    }

    #[test]
    fn decomposition_of_equal_states_is_zero() {
        let d = hugoniot_decompose(&curves(), &reference(), &reference()).unwrap();
        assert_eq!(d.h, [0.0; 3]);
    }

    #[test]
    fn decomposition_recovers_contact() {
        let wc = curves();
        let v = wc.forward_curve(WaveFamily::Two, 0.03, &reference()).unwrap();
        let d = hugoniot_decompose(&wc, &reference(), &v).unwrap();
        assert!(d.h[0].abs() < 1e-8 && d.h[2].abs() < 1e-8);
        assert!((d.h[1] - 0.03).abs() < 1e-8);
    }

    #[test]
    fn decomposition_follows_both_shock_branches() {
        let wc = curves();
        for (family, k) in [(WaveFamily::One, 0), (WaveFamily::Three, 2)] {
            for h in [-0.02, 0.02] {
                let (v, _) = wc.hugoniot_point(family, &reference(), h).unwrap();
                let d = hugoniot_decompose(&wc, &reference(), &v).unwrap();
                for i in 0..3 {
                    let expect = if i == k { h } else { 0.0 };
                    assert!((d.h[i] - expect).abs() < 1e-9, "{family:?} {h}: {:?}", d.h);
                }
            }
        }
    }

    #[test]
    fn phi_of_identical_solutions_vanishes() {
        let w = WeightConstants::default();
        let s = single(WaveFamily::Three, 0.01, 1.0, &w);
        let snap = lyapunov_phi(&curves(), &s, &s, &w).unwrap();
        assert_eq!(snap.phi, Some(0.0));
        assert_eq!(snap.l1, Some(0.0));
    }

    #[test]
    fn phi_of_contact_bump_matches_hand_sum() {
        let w = WeightConstants {
            kappa1: 0.7,
            c_a: [3.0, 1.5, 1.0],
            ..WeightConstants::default()
        };
        let wc = curves();
        let r = reference();
        let a = 0.02;
        let up = wc.forward_wave(WaveFamily::Two, a, &r).unwrap();
        let down = wc.forward_wave(WaveFamily::Two, -a, &up.above).unwrap();
        assert!(down.above.dist_max(&r) < 1e-15);
        let fronts = vec![
            WaveFront::from_wave(0, &up, 1, 0.0, 1.0),
            WaveFront::from_wave(1, &down, 1, 0.0, 2.5),
        ];
        let v = PiecewiseSolution::from_parts(0.0, 0.01, vec![r, up.above, r], fronts, &w).unwrap();
        let u = PiecewiseSolution::from_parts(0.0, 0.01, vec![r], vec![], &w).unwrap();
        let snap = lyapunov_phi(&wc, &u, &v, &w).unwrap();
        // only q₂ = c₂a on (1, 2.5); the front at 1 is a V-front below with q₂ > 0
        let expect = w.c_a[1] * a * 1.5 * (1.0 + w.kappa1 * a);
        assert!((snap.phi.unwrap() - expect).abs() < 1e-12, "{snap:?} vs {expect}");
        let l1 = (up.above.u - r.u).abs() * 1.5 + (up.above.v - r.v).abs() * 1.5;
        assert!((snap.l1.unwrap() - l1).abs() < 1e-15);
    }

    #[test]
    fn tail_mismatch_is_reported() {
        let w = WeightConstants::default();
        let s = single(WaveFamily::Three, 0.01, 1.0, &w);
        let c = PiecewiseSolution::from_parts(0.0, 0.01, vec![reference()], vec![], &w).unwrap();
        assert!(matches!(lyapunov_phi(&curves(), &s, &c, &w), Err(Error::TailMismatch(_))));
        assert!(matches!(l1_distance(&s, &c), Err(Error::TailMismatch(_))));
    }

    fn wall_only(state: FlowState, w: &WeightConstants) -> PiecewiseSolution {
        PiecewiseSolution::from_parts(0.0, 0.01, vec![state], vec![], w).unwrap()
    }

    #[test]
    fn boundary_terms_of_a_pure_contact_vanish() {
        let w = WeightConstants::default();
        let r = reference();
        let other = GasConstants::default().state_from_primitive(2.1, 0.0, 1.0, 0.9);
        let e = boundary_terms(&curves(), &wall_only(r, &w), &wall_only(other, &w), &w).unwrap();
        assert_eq!(e.decomposition.h[0], 0.0);
        assert!(e.decomposition.h[2].abs() < 1e-10);
        assert!(e.decomposition.h[1] != 0.0);
        assert_eq!(e.e[1], 0.0);
        assert!(e.total().abs() < 1e-9);
    }

    #[test]
    fn boundary_terms_are_dissipative_after_calibration() {
        let wc = curves();
        let r = reference();
        let cal = calibrate(&wc, &r, 0.05).unwrap();
        let w = cal.weights;
        let gas = GasConstants::default();
        for (dv, du) in [(0.05, 0.0), (-0.05, 0.02), (0.1, -0.04), (0.01, 0.0)] {
            let other = FlowState::new(r.u + du, r.v + dv, gas.p_bar, r.b);
            let e = boundary_terms(&wc, &wall_only(r, &w), &wall_only(other, &w), &w).unwrap();
            let h = e.decomposition.h;
            assert!(h[0] != 0.0);
            assert!(h[2].abs() <= cal.max_wall_ratio * 1.5 * h[0].abs(), "{h:?}");
            assert_eq!(e.e[1], 0.0);
            assert!(e.e[0] < 0.0 && e.e[2] > 0.0);
            assert!(e.total() <= 0.0, "{e:?}");
        }
    }

    #[test]
    fn calibration_bounds_the_weights() {
        let cal = calibrate(&curves(), &reference(), 0.05).unwrap();
        let w = cal.weights;
        assert!(w.k_plus > cal.max_reflection);
        assert!(cal.max_reflection >= 1.0);
        assert!((w.kappa - 200.0).abs() < 1e-12);
        let v_max = 2.0 * cal.strength_scale * cal.eps0;
        let q_max = w.k_plus * v_max * (1.0 + 0.5 * w.k_plus * v_max);
        assert!(1.0 + w.kappa1 * 2.0 * v_max + w.kappa2 * 2.0 * q_max <= 2.0 + 1e-12);
    }

    fn tracker(delta: f64) -> FrontTracker {
        FrontTracker::new(curves(), reference(), WeightConstants::default(), TrackingParams::with_delta(delta)).unwrap()
    }

    #[test]
    fn viscosity_check_of_constant_solution_is_zero() {
        let t = tracker(0.01);
        let sol = t.sample_initial_data(&InitialData::constant(reference())).unwrap();
        let rep = viscosity_check(&t, &sol, 1.0, 0.5, 0.05).unwrap();
        assert_eq!((rep.i_sharp, rep.i_flat, rep.tv_window), (0.0, 0.0, 0.0));
    }

    #[test]
    fn viscosity_check_on_a_shock() {
        let t = tracker(0.01);
        let r = reference();
        let (above, sigma) = t.curves.hugoniot_point(WaveFamily::Three, &r, -0.02).unwrap();
        let data = InitialData::piecewise(vec![1.0], vec![r, above]).unwrap();
        let mut sol = t.sample_initial_data(&data).unwrap();
        t.run(&mut sol, 0.1).unwrap();
        let zeta = 1.0 + 0.1 * sigma;
        let rep = viscosity_check(&t, &sol, zeta, 0.4, 0.05).unwrap();
        assert!(rep.i_sharp < 1e-9, "{rep:?}");
        assert_eq!(rep.tv_punctured, 0.0);
        assert!(rep.tv_window > 0.0);
    }

    #[test]
    fn viscosity_check_rejects_windows_touching_the_wall() {
        let t = tracker(0.01);
        let sol = t.sample_initial_data(&InitialData::constant(reference())).unwrap();
        assert!(matches!(viscosity_check(&t, &sol, 0.3, 0.5, 0.05), Err(Error::OutOfDomain(_))));
    }
}
