//! Passage between the Lagrangian picture `(ξ, η)` and the physical plane
//! `(x, y)`.
//!
//! With `∂η/∂x = −ρv` and `∂η/∂y = ρu`, streamlines are the level sets of
//! `η`, and the characteristic discontinuity `η = 0` is the free boundary
//! `y = g(x)` with `g' = v/u` along it. For the piecewise-constant solutions
//! produced by front tracking every quantity here is piecewise linear, so
//! all integrals are evaluated in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::front_tracking::PiecewiseSolution;
use crate::gas_dynamics::{FlowState, GasConstants};

const BOUNDARY_TOL: f64 = 1e-12;

/// Piecewise-linear `g` with `g(0) = 0`, stored at its kinks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundary {
    pub points: Vec<(f64, f64)>,
}

impl FreeBoundary {
    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.points;
        if pts.len() < 2 {
            return pts.first().map_or(0.0, |p| p.1);
        }
        let k = pts.partition_point(|p| p.0 <= x).clamp(1, pts.len() - 1);
        let (a, b) = (pts[k - 1], pts[k]);
        a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
    }

    pub fn kinks(&self) -> usize {
        self.points.len().saturating_sub(2)
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }
}

/// Strip `x0 ≤ x ≤ x1` of an Eulerian field: straight interfaces between
/// constant states above the free boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerianSlice {
    pub x0: f64,
    pub x1: f64,
    /// `g(x0)`, `g(x1)`.
    pub g: (f64, f64),
    /// Interfaces as `(y(x0), y(x1))`, bottom to top.
    pub interfaces: Vec<(f64, f64)>,
    /// `interfaces.len() + 1` states; `states[0]` borders the free boundary.
    pub states: Vec<FlowState>,
}

impl EulerianSlice {
    fn lerp(&self, ends: (f64, f64), x: f64) -> f64 {
        if self.x1 == self.x0 {
            return ends.0;
        }
        ends.0 + (ends.1 - ends.0) * (x - self.x0) / (self.x1 - self.x0)
    }

    pub fn boundary(&self, x: f64) -> f64 {
        self.lerp(self.g, x)
    }

    pub fn interface(&self, k: usize, x: f64) -> f64 {
        self.lerp(self.interfaces[k], x)
    }

    /// Index of the state at `(x, y)`; interfaces belong to the region above.
    pub fn region(&self, x: f64, y: f64) -> usize {
        (0..self.interfaces.len())
            .take_while(|&k| self.interface(k, x) <= y)
            .count()
    }
}

/// Piecewise-constant Eulerian flow above a free boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerianField {
    pub gas: GasConstants,
    pub slices: Vec<EulerianSlice>,
    pub boundary: FreeBoundary,
    /// Static gas `(0, 0, p̄, ρ̄₋)` below the boundary; display only.
    pub static_gas: Option<FlowState>,
}

impl EulerianField {
    pub fn new(gas: GasConstants, slices: Vec<EulerianSlice>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::InvalidParameter("Eulerian field without slices".into()));
        }
        let mut points = vec![(slices[0].x0, slices[0].g.0)];
        for s in &slices {
            if s.states.len() != s.interfaces.len() + 1 || !(s.x1 >= s.x0) {
                return Err(Error::InvalidParameter(format!("malformed slice at x = {}", s.x0)));
            }
            let last = *points.last().unwrap();
            if (last.0 - s.x0).abs() > BOUNDARY_TOL || (last.1 - s.g.0).abs() > BOUNDARY_TOL {
                return Err(Error::InvalidParameter(format!("free boundary breaks at x = {}", s.x0)));
            }
            for st in &s.states {
                mass_flux(&gas, st)?;
            }
            if s.x1 > s.x0 {
                push_vertex(&mut points, (s.x1, s.g.1));
            }
        }
        Ok(Self {
            gas,
            slices,
            boundary: FreeBoundary { points },
            static_gas: None,
        })
    }

    /// Attaches the static gas `(0, 0, p̄, ρ̄₋)` below the boundary.
    pub fn with_static_gas(mut self, rho_minus: f64) -> Self {
        self.static_gas = Some(self.gas.state_from_primitive(0.0, 0.0, self.gas.p_bar, rho_minus));
        self
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.slices[0].x0, self.slices.last().unwrap().x1)
    }

    fn slice(&self, x: f64) -> Result<&EulerianSlice> {
        let (a, b) = self.x_range();
        if !(x >= a - BOUNDARY_TOL && x <= b + BOUNDARY_TOL) {
            return Err(Error::OutOfDomain(format!("x = {x} outside [{a}, {b}]")));
        }
        let k = self.slices.partition_point(|s| s.x1 < x);
        Ok(&self.slices[k.min(self.slices.len() - 1)])
    }

    pub fn state_at(&self, x: f64, y: f64) -> Result<FlowState> {
        let s = self.slice(x)?;
        let g = s.boundary(x);
        if y < g - BOUNDARY_TOL {
            return Err(Error::BelowBoundary { x, y, g });
        }
        Ok(s.states[s.region(x, y)])
    }

    /// `∫ ρu dy − ρv dx` along a polyline inside the flow region.
    pub fn line_integral(&self, path: &[(f64, f64)]) -> Result<f64> {
        let mut total = 0.0;
        for seg in path.windows(2) {
            total += self.segment_integral(seg[0], seg[1])?;
        }
        Ok(total)
    }

    fn segment_integral(&self, p: (f64, f64), q: (f64, f64)) -> Result<f64> {
        let (dx, dy) = (q.0 - p.0, q.1 - p.1);
        let at = |t: f64| (p.0 + t * dx, p.1 + t * dy);
        let mut ts = vec![0.0, 1.0];
        for s in &self.slices {
            for x in [s.x0, s.x1] {
                if dx != 0.0 {
                    ts.push((x - p.0) / dx);
                }
            }
            let line_cut = |ends: (f64, f64), ts: &mut Vec<f64>| {
                // y(x) = a + m x on the slice; solve p.1 + t dy = a + m (p.0 + t dx)
                let m = if s.x1 > s.x0 { (ends.1 - ends.0) / (s.x1 - s.x0) } else { 0.0 };
                let a = ends.0 - m * s.x0;
                let den = dy - m * dx;
                if den != 0.0 {
                    ts.push((a + m * p.0 - p.1) / den);
                }
            };
            line_cut(s.g, &mut ts);
            for &iface in &s.interfaces {
                line_cut(iface, &mut ts);
            }
        }
        ts.retain(|t| (0.0..=1.0).contains(t));
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let mut total = 0.0;
        for w in ts.windows(2) {
            let (mx, my) = at(0.5 * (w[0] + w[1]));
            let st = self.state_at(mx, my)?;
            let rho = self.gas.density(&st)?;
            total += (w[1] - w[0]) * rho * (st.u * dy - st.v * dx);
        }
        Ok(total)
    }

    /// `η(x, y)`, integrating `ρu dy` upward from the free boundary.
    pub fn eta(&self, x: f64, y: f64) -> Result<f64> {
        let s = self.slice(x)?;
        let g = s.boundary(x);
        if y < g - BOUNDARY_TOL {
            return Err(Error::BelowBoundary { x, y, g });
        }
        let mut eta = 0.0;
        let mut lo = g;
        for (k, st) in s.states.iter().enumerate() {
            let hi = if k < s.interfaces.len() { s.interface(k, x).min(y) } else { y };
            if hi > lo {
                eta += mass_flux(&self.gas, st)? * (hi - lo);
                lo = hi;
            }
            if hi >= y {
                break;
            }
        }
        Ok(eta)
    }

    /// Height `y(x, η)` of the streamline `η`.
    pub fn streamline(&self, x: f64, eta: f64) -> Result<f64> {
        let s = self.slice(x)?;
        let mut y = s.boundary(x);
        let mut left = eta;
        for (k, st) in s.states.iter().enumerate() {
            let flux = mass_flux(&self.gas, st)?;
            if k < s.interfaces.len() {
                let top = s.interface(k, x).max(y);
                let cap = flux * (top - y);
                if left <= cap {
                    return Ok(y + left / flux);
                }
                left -= cap;
                y = top;
            } else {
                return Ok(y + left / flux);
            }
        }
        Ok(y)
    }

    /// Closed quadrilaterals `(state, corners)` of every region, the top one
    /// cut at `y_top`.
    pub fn polygons(&self, y_top: f64) -> Vec<(FlowState, [(f64, f64); 4])> {
        let mut out = Vec::new();
        for s in &self.slices {
            if !(s.x1 > s.x0) {
                continue;
            }
            let mut lower = s.g;
            for (k, st) in s.states.iter().enumerate() {
                let upper = s.interfaces.get(k).copied().unwrap_or((y_top, y_top));
                out.push((*st, [(s.x0, lower.0), (s.x1, lower.1), (s.x1, upper.1), (s.x0, upper.0)]));
                lower = upper;
            }
        }
        out
    }
}

fn push_vertex(points: &mut Vec<(f64, f64)>, p: (f64, f64)) {
    let n = points.len();
    if n >= 2 {
        let (a, b) = (points[n - 2], points[n - 1]);
        let s0 = (b.1 - a.1) / (b.0 - a.0);
        let s1 = (p.1 - b.1) / (p.0 - b.0);
        if s0 == s1 {
            points[n - 1] = p;
            return;
        }
    }
    points.push(p);
}

/// `ρu`, which must be positive for the transform to be invertible.
pub fn mass_flux(gas: &GasConstants, s: &FlowState) -> Result<f64> {
    let rho_u = gas.density(s)? * s.u;
    if !(rho_u > 0.0) {
        return Err(Error::DegenerateTransform { rho_u });
    }
    Ok(rho_u)
}

/// `η` at `(x, y)`.
pub fn eta_from_eulerian(field: &EulerianField, x: f64, y: f64) -> Result<f64> {
    field.eta(x, y)
}

/// Segments of a run on which the front configuration is frozen:
/// `history` as returned by `run_with_history`, closed at `xi_end`.
fn frozen_intervals(history: &[PiecewiseSolution], xi_end: f64) -> Vec<(f64, f64, &PiecewiseSolution)> {
    let mut out = Vec::new();
    for (k, sol) in history.iter().enumerate() {
        let x1 = history.get(k + 1).map_or(xi_end, |n| n.xi).min(xi_end);
        if x1 > sol.xi {
            out.push((sol.xi, x1, sol));
        }
    }
    out
}

/// `g(x) = ∫₀ˣ (v/u)(ξ, 0) dξ` from the wall trace of a run.
pub fn free_boundary_from_lagrangian(history: &[PiecewiseSolution], xi_end: f64) -> FreeBoundary {
    let mut points = vec![(history.first().map_or(0.0, |s| s.xi), 0.0)];
    for (x0, x1, sol) in frozen_intervals(history, xi_end) {
        let w = sol.wall_state();
        let g0 = points.last().unwrap().1;
        push_vertex(&mut points, (x1, g0 + w.v / w.u * (x1 - x0)));
    }
    if points.len() == 1 {
        points.push((xi_end, 0.0));
    }
    FreeBoundary { points }
}

/// `y(ξ, η)` at the front positions of `sol`, measured from `g`.
fn front_heights(gas: &GasConstants, sol: &PiecewiseSolution, xi: f64, g: f64) -> Result<Vec<f64>> {
    let mut y = g;
    let mut eta = 0.0;
    let mut out = Vec::with_capacity(sol.fronts.len());
    for (k, f) in sol.fronts.iter().enumerate() {
        let pos = f.position(xi).max(eta);
        y += (pos - eta) / mass_flux(gas, &sol.states[k])?;
        eta = pos;
        out.push(y);
    }
    Ok(out)
}

/// Eulerian image of a run with `x = ξ` and `dy = dη/(ρu)` along
/// `x = const`.
pub fn to_eulerian(gas: &GasConstants, history: &[PiecewiseSolution], xi_end: f64) -> Result<EulerianField> {
    let boundary = free_boundary_from_lagrangian(history, xi_end);
    let mut slices = Vec::new();
    for (x0, x1, sol) in frozen_intervals(history, xi_end) {
        let (g0, g1) = (boundary.eval(x0), boundary.eval(x1));
        let lo = front_heights(gas, sol, x0, g0)?;
        let hi = front_heights(gas, sol, x1, g1)?;
        slices.push(EulerianSlice {
            x0,
            x1,
            g: (g0, g1),
            interfaces: lo.into_iter().zip(hi).collect(),
            states: sol.states.clone(),
        });
    }
    if slices.is_empty() {
        let sol = history
            .last()
            .ok_or_else(|| Error::InvalidParameter("empty run history".into()))?;
        let ys = front_heights(gas, sol, sol.xi, 0.0)?;
        slices.push(EulerianSlice {
            x0: sol.xi,
            x1: sol.xi,
            g: (0.0, 0.0),
            interfaces: ys.iter().map(|&y| (y, y)).collect(),
            states: sol.states.clone(),
        });
    }
    let mut field = EulerianField::new(*gas, slices)?;
    field.boundary = boundary;
    Ok(field)
}

/// Largest deviation of Lagrangian → Eulerian → Lagrangian over the run:
/// inside every frozen interval, each region's midpoint streamline is
/// mapped to `y` and back, and both `η` and the state are compared.
pub fn roundtrip_residual(field: &EulerianField, history: &[PiecewiseSolution], xi_end: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (x0, x1, sol) in frozen_intervals(history, xi_end) {
        for t in [0.25, 0.5, 0.75] {
            let at_x = sol.at(x0 + t * (x1 - x0));
            let mut lo = 0.0;
            let mut probes = Vec::new();
            for p in at_x.positions() {
                if p - lo > 1e-9 {
                    probes.push(0.5 * (lo + p));
                }
                lo = p;
            }
            probes.push(lo + 1.0);
            for eta in probes {
                let y = field.streamline(at_x.xi, eta)?;
                worst = worst.max((field.eta(at_x.xi, y)? - eta).abs());
                let (lag, eul) = (at_x.trace_at(eta), field.state_at(at_x.xi, y)?);
                worst = worst.max(lag.dist_max(&eul)).max((lag.b - eul.b).abs());
            }
        }
    }
    Ok(worst)
}

/// `max |Δg − (v/u) Δx|` over the boundary segments, with `v/u` from the
/// region adjacent to the boundary.
pub fn slope_law_residual(field: &EulerianField) -> f64 {
    field
        .slices
        .iter()
        .map(|s| (s.g.1 - s.g.0 - s.states[0].v / s.states[0].u * (s.x1 - s.x0)).abs())
        .fold(0.0, f64::max)
}

/// Piecewise-constant Eulerian data on the inflow line `x = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerianProfile {
    pub breakpoints: Vec<f64>,
    pub states: Vec<FlowState>,
}

impl EulerianProfile {
    /// Lagrangian breakpoints `η(y_k) = ∫₀^{y_k} ρu dy`.
    pub fn lagrangian_breakpoints(&self, gas: &GasConstants) -> Result<Vec<f64>> {
        if self.states.len() != self.breakpoints.len() + 1 {
            return Err(Error::InvalidParameter("profile needs one more state than breakpoints".into()));
        }
        let mut eta = 0.0;
        let mut y = 0.0;
        let mut out = Vec::with_capacity(self.breakpoints.len());
        for (k, &b) in self.breakpoints.iter().enumerate() {
            eta += mass_flux(gas, &self.states[k])? * (b - y);
            y = b;
            out.push(eta);
        }
        mass_flux(gas, self.states.last().unwrap())?;
        Ok(out)
    }

    /// `η` of the height `y`.
    pub fn eta_at(&self, gas: &GasConstants, y: f64) -> Result<f64> {
        let mut eta = 0.0;
        let mut lo = 0.0;
        for (k, st) in self.states.iter().enumerate() {
            let hi = self.breakpoints.get(k).copied().unwrap_or(f64::INFINITY).min(y);
            if hi > lo {
                eta += mass_flux(gas, st)? * (hi - lo);
                lo = hi;
            }
        }
        Ok(eta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEquivalence {
    pub eta_breakpoints: [Vec<f64>; 2],
    /// L¹ distance of the two Lagrangian traces on the compared range.
    pub distance: f64,
    pub eta_max: f64,
    pub equivalent: bool,
}

/// Compares the Lagrangian traces `V^j(0, η)` of two inflow profiles on
/// `η ≤ min_j η_j(y_max)` (`y_max` defaults to the last breakpoint).
pub fn initial_trace_equivalence(
    gas: &GasConstants,
    a: &EulerianProfile,
    b: &EulerianProfile,
    y_max: Option<f64>,
) -> Result<TraceEquivalence> {
    let ea = a.lagrangian_breakpoints(gas)?;
    let eb = b.lagrangian_breakpoints(gas)?;
    let top = y_max.unwrap_or_else(|| {
        a.breakpoints
            .last()
            .copied()
            .unwrap_or(0.0)
            .max(b.breakpoints.last().copied().unwrap_or(0.0))
            + 1.0
    });
    let eta_max = a.eta_at(gas, top)?.min(b.eta_at(gas, top)?);
    let mut cuts: Vec<f64> = std::iter::once(0.0)
        .chain(ea.iter().copied())
        .chain(eb.iter().copied())
        .chain(std::iter::once(eta_max))
        .filter(|&e| e <= eta_max)
        .collect();
    cuts.sort_by(f64::total_cmp);
    let value = |bps: &[f64], st: &[FlowState], eta: f64| st[bps.partition_point(|&e| e <= eta)];
    let mut distance = 0.0;
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            let m = 0.5 * (w[0] + w[1]);
            distance += value(&ea, &a.states, m).dist_l1(&value(&eb, &b.states, m)) * (w[1] - w[0]);
        }
    }
    Ok(TraceEquivalence {
        eta_breakpoints: [ea, eb],
        distance,
        eta_max,
        equivalent: distance < 1e-10,
    })
}
