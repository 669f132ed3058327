//! Wave-front tracking on the quarter plane `{ξ > 0, η > 0}` with the wall
//! condition `p = p̄` on `η = 0`.
//!
//! A [`PiecewiseSolution`] is a finite list of straight fronts in the
//! `(ξ, η)` plane separating constant states. The solver jumps from one
//! crossing to the next: two adjacent fronts meeting in the interior are
//! replaced by the solution of the Riemann problem between the outer states,
//! and a 1-front reaching the wall is replaced by the reflected 3-wave of
//! the lateral Riemann problem. Rarefactions are split into fans of fronts
//! of strength at most `δ`, and fronts whose generation exceeds `N(δ)` are
//! discarded.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{glimm_totals, pair_potential, wall_potential, weighted_strength, GlimmTotals, WeightConstants};
use crate::gas_dynamics::FlowState;
use crate::wave_curves::{CurveKind, ElementaryWave, WaveCurves, WaveFamily};

/// Strengths below this are rounding noise and vanish without trace.
pub const ZERO_STRENGTH: f64 = 1e-13;
/// Relative tolerance under which two event times count as simultaneous.
const TIE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveFront {
    pub id: u64,
    pub family: WaveFamily,
    pub strength: f64,
    pub kind: CurveKind,
    pub speed: f64,
    pub generation: u32,
    /// The front passes through `(origin_xi, origin_eta)`.
    pub origin_xi: f64,
    pub origin_eta: f64,
    pub below: FlowState,
    pub above: FlowState,
    /// Strength of discarded waves whose jump this front absorbed.
    #[serde(default)]
    pub defect: f64,
}

impl WaveFront {
    /// Front carrying `wave` through `(xi, eta)`; rarefactions travel at the
    /// characteristic speed of their upper state.
    pub fn from_wave(id: u64, wave: &ElementaryWave, generation: u32, xi: f64, eta: f64) -> Self {
        let speed = match wave.kind {
            CurveKind::Contact => 0.0,
            CurveKind::Shock => wave.speed_lo,
            CurveKind::Rarefaction => wave.speed_hi,
        };
        Self {
            id,
            family: wave.family,
            strength: wave.strength,
            kind: wave.kind,
            speed,
            generation,
            origin_xi: xi,
            origin_eta: eta,
            below: wave.below,
            above: wave.above,
            defect: 0.0,
        }
    }

    pub fn position(&self, xi: f64) -> f64 {
        self.origin_eta + self.speed * (xi - self.origin_xi)
    }
}

/// Accumulated approximation errors of the scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorLedger {
    /// L¹ error of the piecewise-constant approximation of the data.
    pub initial_data: f64,
    /// Total strength of fronts discarded for exceeding the generation limit.
    pub removed_generation: f64,
    /// Total strength of outgoing waves below the weak-wave cutoff.
    pub removed_weak: f64,
    pub fronts_removed: usize,
    /// Largest rarefaction front emitted; bounds the speed error of fans.
    pub max_rarefaction_front: f64,
}

impl ErrorLedger {
    pub fn pruning_total(&self) -> f64 {
        self.removed_generation + self.removed_weak
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingParams {
    pub delta: f64,
    /// Maximal generation `N`; `None` uses `⌈log₂(1/δ)⌉ + 4`.
    #[serde(default)]
    pub generation_limit: Option<u32>,
    /// Bound on the initial total variation.
    pub eps0: f64,
    /// Allowed growth factor of the total variation.
    pub c_tv: f64,
    pub max_events: usize,
    /// Outgoing waves weaker than this are discarded; `None` uses `δ³`.
    #[serde(default)]
    pub weak_cutoff: Option<f64>,
}

impl Default for TrackingParams {
    fn default() -> Self {
        Self {
            delta: 1e-3,
            generation_limit: None,
            eps0: 0.05,
            c_tv: 8.0,
            max_events: 2_000_000,
            weak_cutoff: None,
        }
    }
}

impl TrackingParams {
    pub fn with_delta(delta: f64) -> Self {
        Self {
            delta,
            ..Self::default()
        }
    }

    pub fn max_generation(&self) -> u32 {
        self.generation_limit
            .unwrap_or_else(|| (1.0 / self.delta).log2().ceil().max(0.0) as u32 + 4)
    }

    pub fn cutoff(&self) -> f64 {
        self.weak_cutoff.unwrap_or(self.delta.powi(3)).max(ZERO_STRENGTH)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        if !(self.eps0 > 0.0) || !(self.c_tv >= 1.0) {
            return Err(Error::InvalidParameter("eps0 must be positive and c_tv at least 1".into()));
        }
        Ok(())
    }
}

/// Piecewise-constant initial data: `states[k]` on `(breakpoints[k−1], breakpoints[k])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub breakpoints: Vec<f64>,
    pub states: Vec<FlowState>,
    /// L¹ error already committed when the data were produced by sampling.
    #[serde(default)]
    pub sampling_error: f64,
}

impl InitialData {
    pub fn constant(state: FlowState) -> Self {
        Self {
            breakpoints: Vec::new(),
            states: vec![state],
            sampling_error: 0.0,
        }
    }

    pub fn piecewise(breakpoints: Vec<f64>, states: Vec<FlowState>) -> Result<Self> {
        let d = Self {
            breakpoints,
            states,
            sampling_error: 0.0,
        };
        d.validate()?;
        Ok(d)
    }

    /// Midpoint sampling of `f` on `(0, eta_max)` with a cell size small
    /// enough that the L¹ error, bounded by `TV·h`, stays below `delta`.
    /// Above `eta_max` the data take the value `f(eta_max)`.
    pub fn sample<F: Fn(f64) -> FlowState>(f: F, eta_max: f64, delta: f64) -> Result<Self> {
        if !(eta_max > 0.0) || !(delta > 0.0) {
            return Err(Error::InvalidParameter("sampling window and delta must be positive".into()));
        }
        let mut n = 16usize;
        loop {
            let h = eta_max / n as f64;
            let samples: Vec<FlowState> = (0..n).map(|k| f((k as f64 + 0.5) * h)).collect();
            let tail = f(eta_max);
            let tv: f64 = samples.windows(2).map(|w| w[0].dist_l1(&w[1])).sum::<f64>()
                + samples[n - 1].dist_l1(&tail);
            if tv * h <= delta || n >= 1 << 22 {
                let mut breakpoints = Vec::new();
                let mut states = vec![samples[0]];
                for k in 1..n {
                    if samples[k] != *states.last().unwrap() {
                        breakpoints.push(k as f64 * h);
                        states.push(samples[k]);
                    }
                }
                if tail != *states.last().unwrap() {
                    breakpoints.push(eta_max);
                    states.push(tail);
                }
                return Ok(Self {
                    breakpoints,
                    states,
                    sampling_error: tv * h,
                });
            }
            n *= 2;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.states.len() != self.breakpoints.len() + 1 {
            return Err(Error::InvalidParameter(
                "initial data need exactly one more state than breakpoints".into(),
            ));
        }
        if self.breakpoints.iter().any(|b| !(*b > 0.0) || !b.is_finite())
            || self.breakpoints.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidParameter(
                "breakpoints must be positive and strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Total variation of `(u, v, p)` along `η > 0`.
    pub fn total_variation(&self) -> f64 {
        self.states.windows(2).map(|w| w[0].dist_l1(&w[1])).sum()
    }

    pub fn value(&self, eta: f64) -> FlowState {
        let k = self.breakpoints.partition_point(|b| *b <= eta);
        self.states[k]
    }
}

/// Front-tracking state at a fixed `ξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSolution {
    pub xi: f64,
    pub delta: f64,
    pub max_generation: u32,
    /// `states[k]` lies between `fronts[k−1]` and `fronts[k]`; `states[0]`
    /// is the wall state.
    pub states: Vec<FlowState>,
    pub fronts: Vec<WaveFront>,
    pub ledger: ErrorLedger,
    pub initial_tv: f64,
    pub glimm: GlimmTotals,
    next_id: u64,
}

impl PiecewiseSolution {
    /// Assembles a solution from explicit fronts (ordered by position at
    /// `xi`) and the `fronts.len() + 1` states around them.
    pub fn from_parts(xi: f64, delta: f64, states: Vec<FlowState>, fronts: Vec<WaveFront>, w: &WeightConstants) -> Result<Self> {
        if states.len() != fronts.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} states for {} fronts",
                states.len(),
                fronts.len()
            )));
        }
        let pos: Vec<f64> = fronts.iter().map(|f| f.position(xi)).collect();
        if pos.windows(2).any(|p| p[1] < p[0]) || pos.first().is_some_and(|&p| p < 0.0) {
            return Err(Error::InvalidParameter("fronts not ordered in eta".into()));
        }
        let next_id = fronts.iter().map(|f| f.id + 1).max().unwrap_or(0);
        let mut sol = Self {
            xi,
            delta,
            max_generation: u32::MAX,
            states,
            fronts,
            ledger: ErrorLedger::default(),
            initial_tv: 0.0,
            glimm: glimm_totals(&[], w),
            next_id,
        };
        sol.initial_tv = sol.total_variation();
        sol.glimm = glimm_totals(&sol.fronts, w);
        Ok(sol)
    }

    pub fn wall_state(&self) -> FlowState {
        self.states[0]
    }

    pub fn tail_state(&self) -> FlowState {
        *self.states.last().unwrap()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.fronts.iter().map(|f| f.position(self.xi)).collect()
    }

    /// Value at `(self.xi, eta)`, right-continuous in `η`.
    pub fn trace_at(&self, eta: f64) -> FlowState {
        let k = self.fronts.partition_point(|f| f.position(self.xi) <= eta);
        self.states[k]
    }

    /// Total variation of `(u, v, p)` in `η`.
    pub fn total_variation(&self) -> f64 {
        self.states.windows(2).map(|w| w[0].dist_l1(&w[1])).sum()
    }

    /// The same front configuration viewed at a later `ξ` with no crossing
    /// in between.
    pub fn at(&self, xi: f64) -> Self {
        let mut s = self.clone();
        s.xi = xi;
        s
    }

    fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    InteriorInteraction,
    BoundaryReflection,
    FrontRemoval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub xi: f64,
    pub eta: f64,
    pub kind: EventKind,
    pub in_ids: Vec<u64>,
    pub out_ids: Vec<u64>,
    #[serde(rename = "G_before")]
    pub g_before: f64,
    #[serde(rename = "G_after")]
    pub g_after: f64,
    /// Another event was due at the same `ξ` and was deferred.
    #[serde(default)]
    pub simultaneous: bool,
    /// Discarded strength carried into the event by the incoming fronts.
    #[serde(default)]
    pub defect_in: f64,
    #[serde(default)]
    pub glimm_before: GlimmTotals,
    #[serde(default)]
    pub glimm_after: GlimmTotals,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

#[derive(Debug, Clone, Copy)]
enum Pending {
    Wall { xi: f64 },
    Pair { xi: f64, lower: usize },
}

impl Pending {
    fn xi(&self) -> f64 {
        match *self {
            Pending::Wall { xi } | Pending::Pair { xi, .. } => xi,
        }
    }
}

/// One outgoing wave before it becomes a front.
#[derive(Debug, Clone, Copy)]
struct Outgoing {
    wave: ElementaryWave,
    generation: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    Keep,
    TooOld,
    TooWeak,
}

/// The front-tracking scheme for a fixed gas, reference state and weights.
#[derive(Debug, Clone, Copy)]
pub struct FrontTracker {
    pub curves: WaveCurves,
    pub reference: FlowState,
    pub weights: WeightConstants,
    pub params: TrackingParams,
}

impl FrontTracker {
    pub fn new(curves: WaveCurves, reference: FlowState, weights: WeightConstants, params: TrackingParams) -> Result<Self> {
        params.validate()?;
        curves.gas.check_admissible(&reference)?;
        Ok(Self {
            curves,
            reference,
            weights,
            params,
        })
    }

    /// Builds the front configuration at `ξ = 0`: Riemann problems at every
    /// jump of the data and the lateral problem at the wall.
    pub fn sample_initial_data(&self, data: &InitialData) -> Result<PiecewiseSolution> {
        data.validate()?;
        let tv = data.total_variation();
        if tv > self.params.eps0 {
            return Err(Error::DataTooLarge {
                tv,
                limit: self.params.eps0,
            });
        }
        for s in &data.states {
            self.curves.gas.check_admissible(s)?;
        }
        let mut sol = PiecewiseSolution {
            xi: 0.0,
            delta: self.params.delta,
            max_generation: self.params.max_generation(),
            states: Vec::new(),
            fronts: Vec::new(),
            ledger: ErrorLedger {
                initial_data: data.sampling_error,
                ..ErrorLedger::default()
            },
            initial_tv: 0.0,
            glimm: GlimmTotals::default(),
            next_id: 0,
        };

        let first = data.states[0];
        let wall = self.curves.lateral_wave(&first, &self.reference)?;
        sol.states.push(wall.below);
        self.append(&mut sol, 0.0, vec![Outgoing { wave: wall, generation: 1 }], first);

        for (k, eta) in data.breakpoints.iter().enumerate() {
            let below = *sol.states.last().unwrap();
            let rs = self.curves.solve_riemann(&below, &data.states[k + 1])?;
            let outgoing = rs.waves.iter().map(|w| Outgoing { wave: *w, generation: 1 }).collect();
            self.append(&mut sol, *eta, outgoing, data.states[k + 1]);
        }
        sol.initial_tv = sol.total_variation();
        sol.glimm = glimm_totals(&sol.fronts, &self.weights);
        Ok(sol)
    }

    fn append(&self, sol: &mut PiecewiseSolution, eta: f64, outgoing: Vec<Outgoing>, top: FlowState) {
        let below = *sol.states.last().unwrap();
        let candidates = self.candidates(sol, 0.0, eta, outgoing);
        let (fronts, regions, _) = self.settle(sol, candidates, below, top);
        if !fronts.is_empty() {
            sol.states.extend(regions);
            sol.states.push(top);
            sol.fronts.extend(fronts);
        }
    }

    /// Turns outgoing waves into candidate fronts: rarefactions are split
    /// into fans and every piece is tagged with its fate.
    fn candidates(&self, sol: &mut PiecewiseSolution, xi: f64, eta: f64, outgoing: Vec<Outgoing>) -> Vec<(WaveFront, Fate)> {
        let cutoff = self.params.cutoff();
        let delta = self.params.delta;
        let mut out = Vec::new();
        for Outgoing { wave: w, generation } in outgoing {
            let b_jump = w.family == WaveFamily::Two && w.below.b != w.above.b;
            if !b_jump && w.strength.abs() < ZERO_STRENGTH {
                continue;
            }
            let fate = if b_jump {
                Fate::Keep
            } else if generation > sol.max_generation {
                Fate::TooOld
            } else if w.strength.abs() < cutoff {
                Fate::TooWeak
            } else {
                Fate::Keep
            };
            let pieces = if w.kind == CurveKind::Rarefaction && w.strength > delta * (1.0 + 1e-9) {
                self.split_fan(&w, (w.strength / delta - 1e-9).ceil() as usize)
            } else {
                vec![w]
            };
            for p in pieces {
                let id = sol.fresh_id();
                out.push((WaveFront::from_wave(id, &p, generation, xi, eta), fate));
            }
        }
        out
    }

    fn split_fan(&self, w: &ElementaryWave, m: usize) -> Vec<ElementaryWave> {
        let piece = w.strength / m as f64;
        let j = w.family.index();
        let gas = &self.curves.gas;
        let mut lo = w.below;
        let mut out = Vec::with_capacity(m);
        for k in 0..m {
            let hi = if k + 1 == m {
                w.above
            } else {
                self.curves.rarefaction_point(w.family, &lo, piece).unwrap_or(w.above)
            };
            out.push(ElementaryWave {
                family: w.family,
                strength: piece,
                kind: CurveKind::Rarefaction,
                below: lo,
                above: hi,
                speed_lo: gas.eigenvalue_unchecked(j, &lo),
                speed_hi: gas.eigenvalue_unchecked(j, &hi),
            });
            lo = hi;
        }
        out
    }

    /// Books the discarded candidates and chains the kept ones from `below`
    /// to `top`. Returns the kept fronts, the regions strictly between them
    /// and the discarded strength no kept front could absorb. The jump left
    /// by a discarded wave is carried by the next kept front above it (the
    /// topmost kept front for trailing ones).
    fn settle(
        &self,
        sol: &mut PiecewiseSolution,
        candidates: Vec<(WaveFront, Fate)>,
        below: FlowState,
        top: FlowState,
    ) -> (Vec<WaveFront>, Vec<FlowState>, f64) {
        let mut kept: Vec<WaveFront> = Vec::with_capacity(candidates.len());
        let mut pending = 0.0;
        for (mut f, fate) in candidates {
            match fate {
                Fate::Keep => {
                    if f.kind == CurveKind::Rarefaction {
                        sol.ledger.max_rarefaction_front = sol.ledger.max_rarefaction_front.max(f.strength.abs());
                    }
                    f.defect += pending;
                    pending = 0.0;
                    kept.push(f);
                }
                Fate::TooOld => {
                    sol.ledger.removed_generation += f.strength.abs();
                    sol.ledger.fronts_removed += 1;
                    pending += f.strength.abs();
                }
                Fate::TooWeak => {
                    sol.ledger.removed_weak += f.strength.abs();
                    sol.ledger.fronts_removed += 1;
                    pending += f.strength.abs();
                }
            }
        }
        if let Some(last) = kept.last_mut() {
            last.defect += pending;
            pending = 0.0;
        }
        let n = kept.len();
        let mut regions = Vec::with_capacity(n.saturating_sub(1));
        let mut current = below;
        for (k, f) in kept.iter_mut().enumerate() {
            f.below = current;
            if k + 1 == n {
                f.above = top;
            } else {
                regions.push(f.above);
            }
            current = f.above;
        }
        (kept, regions, pending)
    }

    fn next_event(&self, sol: &PiecewiseSolution) -> Option<(Pending, bool)> {
        let xi = sol.xi;
        let mut best: Option<(Pending, f64)> = None;
        let mut simultaneous = false;
        let mut consider = |cand: Pending, eta: f64, best: &mut Option<(Pending, f64)>| {
            let t = cand.xi();
            match best {
                None => *best = Some((cand, eta)),
                Some((b, b_eta)) => {
                    let tb = b.xi();
                    let tol = TIE_TOL * t.abs().max(tb.abs()).max(1.0);
                    if (t - tb).abs() <= tol {
                        simultaneous = true;
                        let b_wall = matches!(b, Pending::Wall { .. });
                        let c_wall = matches!(cand, Pending::Wall { .. });
                        // wall first, then lower η; pairs are visited bottom-up so
                        // equal η keeps the lower id
                        if (c_wall && !b_wall) || (c_wall == b_wall && eta < *b_eta) {
                            *best = Some((cand, eta));
                        }
                    } else if t < tb {
                        *best = Some((cand, eta));
                    }
                }
            }
        };
        if let Some(f) = sol.fronts.first() {
            if f.family == WaveFamily::One && f.speed < 0.0 {
                let t = xi + f.position(xi).max(0.0) / -f.speed;
                consider(Pending::Wall { xi: t }, 0.0, &mut best);
            }
        }
        for i in 0..sol.fronts.len().saturating_sub(1) {
            let a = &sol.fronts[i];
            let b = &sol.fronts[i + 1];
            if a.speed > b.speed {
                let gap = (b.position(xi) - a.position(xi)).max(0.0);
                let t = xi + gap / (a.speed - b.speed);
                consider(Pending::Pair { xi: t, lower: i }, a.position(t), &mut best);
            }
        }
        best.map(|(p, _)| (p, simultaneous))
    }

    /// Advances `sol` to the next crossing and resolves it. Returns the
    /// logged events: the interaction or reflection, followed by a removal
    /// entry when outgoing fronts were discarded.
    pub fn advance_to_next_event(&self, sol: &mut PiecewiseSolution) -> Result<Vec<Event>> {
        let (pending, simultaneous) = self.next_event(sol).ok_or(Error::NoEvent)?;
        let events = self.resolve(sol, pending, simultaneous)?;
        self.check_growth(sol)?;
        Ok(events)
    }

    fn check_growth(&self, sol: &PiecewiseSolution) -> Result<()> {
        if sol.initial_tv > 0.0 {
            let tv = sol.total_variation();
            let limit = self.params.c_tv * sol.initial_tv;
            if tv > limit {
                return Err(Error::BlowUp { tv, limit });
            }
        }
        Ok(())
    }

    fn resolve(&self, sol: &mut PiecewiseSolution, pending: Pending, simultaneous: bool) -> Result<Vec<Event>> {
        let xi = pending.xi().max(sol.xi);
        sol.xi = xi;
        let (lo, hi, eta, kind, below, top, outgoing) = match pending {
            Pending::Wall { .. } => {
                let incident = sol.fronts[0];
                let u_plus = sol.states[1];
                let wave = self.curves.lateral_wave(&u_plus, &self.reference)?;
                let out = vec![Outgoing {
                    wave,
                    generation: incident.generation + 1,
                }];
                (0, 0, 0.0, EventKind::BoundaryReflection, wave.below, u_plus, out)
            }
            Pending::Pair { lower, .. } => {
                let a = sol.fronts[lower];
                let b = sol.fronts[lower + 1];
                let eta = (0.5 * (a.position(xi) + b.position(xi))).max(0.0);
                let below = sol.states[lower];
                let above = sol.states[lower + 2];
                let mut guess = [0.0; 3];
                guess[a.family.index() - 1] += a.strength;
                guess[b.family.index() - 1] += b.strength;
                let rs = self.curves.solve_riemann_from(&below, &above, Some(guess))?;
                let out = rs
                    .waves
                    .iter()
                    .map(|w| {
                        let inherited = [a, b].iter().filter(|f| f.family == w.family).map(|f| f.generation).min();
                        Outgoing {
                            wave: *w,
                            generation: inherited.unwrap_or(a.generation.max(b.generation) + 1),
                        }
                    })
                    .collect();
                (lower, lower + 1, eta, EventKind::InteriorInteraction, below, above, out)
            }
        };

        let candidates = self.candidates(sol, xi, eta, outgoing);
        let emitted: Vec<WaveFront> = candidates.iter().map(|(f, _)| *f).collect();
        let discarded: Vec<u64> = candidates.iter().filter(|(_, fate)| *fate != Fate::Keep).map(|(f, _)| f.id).collect();
        let (fronts, regions, orphan) = self.settle(sol, candidates, below, top);

        let w = &self.weights;
        let g_before = sol.glimm.total(w);
        let (others_below, rest) = sol.fronts.split_at(lo);
        let (incoming, others_above) = rest.split_at(hi - lo + 1);
        let base = sol.glimm - block_totals(others_below, others_above, incoming, w);
        let g_mid = (base + block_totals(others_below, others_above, &emitted, w)).total(w);
        let after = base + block_totals(others_below, others_above, &fronts, w);
        let g_after = after.total(w);
        let in_ids: Vec<u64> = incoming.iter().map(|f| f.id).collect();
        let credit: f64 = incoming.iter().map(|f| f.defect).sum();
        let glimm_before = sol.glimm;
        let glimm_mid = base + block_totals(others_below, others_above, &emitted, w);
        sol.glimm = after;

        let out_ids: Vec<u64> = fronts.iter().map(|f| f.id).collect();
        let n_new = fronts.len();
        sol.fronts.splice(lo..=hi, fronts);
        let has_above = lo + n_new < sol.fronts.len();
        match kind {
            EventKind::BoundaryReflection => {
                if n_new == 0 {
                    sol.states.splice(0..2, [below]);
                } else {
                    sol.states.splice(0..1, std::iter::once(below).chain(regions));
                }
                if n_new == 0 && has_above {
                    sol.fronts[0].defect += orphan;
                }
            }
            _ => {
                if n_new == 0 {
                    // merged region: the lower state, unless it is the tail
                    if has_above {
                        sol.states.splice(lo..lo + 3, [below]);
                        sol.fronts[lo].defect += orphan;
                    } else {
                        sol.states.splice(lo..lo + 3, [top]);
                        if lo > 0 {
                            sol.fronts[lo - 1].defect += orphan;
                        }
                    }
                } else {
                    sol.states.splice(lo + 1..lo + 2, regions);
                }
            }
        }
        if lo > 0 {
            sol.fronts[lo - 1].above = sol.states[lo];
        }
        if lo + n_new < sol.fronts.len() {
            sol.fronts[lo + n_new].below = sol.states[lo + n_new];
        }

        let mut events = Vec::with_capacity(2);
        if discarded.is_empty() {
            events.push(Event {
                xi,
                eta,
                kind,
                in_ids,
                out_ids,
                g_before,
                g_after,
                simultaneous,
                defect_in: credit,
                glimm_before,
                glimm_after: after,
            });
        } else {
            events.push(Event {
                xi,
                eta,
                kind,
                in_ids,
                out_ids: emitted.iter().map(|f| f.id).collect(),
                g_before,
                g_after: g_mid,
                simultaneous,
                defect_in: credit,
                glimm_before,
                glimm_after: glimm_mid,
            });
            events.push(Event {
                xi,
                eta,
                kind: EventKind::FrontRemoval,
                in_ids: discarded,
                out_ids: Vec::new(),
                g_before: g_mid,
                g_after,
                simultaneous,
                defect_in: 0.0,
                glimm_before: glimm_mid,
                glimm_after: after,
            });
        }
        Ok(events)
    }

    /// Runs until `xi_end`; crossings later than `xi_end` are left pending.
    pub fn run(&self, sol: &mut PiecewiseSolution, xi_end: f64) -> Result<EventLog> {
        let mut log = EventLog::default();
        self.run_inner(sol, xi_end, &mut log, None)?;
        Ok(log)
    }

    /// As [`run`](Self::run), also returning the solution at the start and
    /// right after every event; the front configuration is frozen in between.
    pub fn run_with_history(&self, sol: &mut PiecewiseSolution, xi_end: f64) -> Result<(EventLog, Vec<PiecewiseSolution>)> {
        let mut log = EventLog::default();
        let mut history = vec![sol.clone()];
        self.run_inner(sol, xi_end, &mut log, Some(&mut history))?;
        Ok((log, history))
    }

    fn run_inner(
        &self,
        sol: &mut PiecewiseSolution,
        xi_end: f64,
        log: &mut EventLog,
        mut history: Option<&mut Vec<PiecewiseSolution>>,
    ) -> Result<()> {
        if !(xi_end >= sol.xi) {
            return Err(Error::InvalidParameter(format!("xi_end = {xi_end} precedes xi = {}", sol.xi)));
        }
        let mut processed = 0usize;
        while let Some((pending, simultaneous)) = self.next_event(sol) {
            if pending.xi() > xi_end {
                break;
            }
            if processed >= self.params.max_events {
                return Err(Error::InvalidParameter(format!(
                    "event budget of {} exhausted at xi = {}",
                    self.params.max_events, sol.xi
                )));
            }
            let events = self.resolve(sol, pending, simultaneous)?;
            self.check_growth(sol)?;
            log.events.extend(events);
            if let Some(h) = history.as_deref_mut() {
                h.push(sol.clone());
            }
            processed += 1;
        }
        sol.xi = xi_end;
        Ok(())
    }
}

/// Glimm contributions of `block`: its own strength, wall potential and
/// approaching pairs within the block and with the fronts around it.
fn block_totals(below: &[WaveFront], above: &[WaveFront], block: &[WaveFront], w: &WeightConstants) -> GlimmTotals {
    let mut t = GlimmTotals::default();
    for (k, f) in block.iter().enumerate() {
        t.v += weighted_strength(f, w).abs();
        t.q_b += wall_potential(f, w);
        t.q_a += below.iter().map(|o| pair_potential(o, f, w)).sum::<f64>();
        t.q_a += above.iter().map(|o| pair_potential(f, o, w)).sum::<f64>();
        t.q_a += block[k + 1..].iter().map(|g| pair_potential(f, g, w)).sum::<f64>();
    }
    t
}
