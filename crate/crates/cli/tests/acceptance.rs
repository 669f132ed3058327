//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported as `FAIL` like any other
//! but do not fail the process; every other `FAIL` does.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steadyfront::eulerian_bridge::{
    initial_trace_equivalence, roundtrip_residual, slope_law_residual, to_eulerian, EulerianProfile,
};
use steadyfront::front_tracking::{FrontTracker, InitialData, PiecewiseSolution, TrackingParams};
use steadyfront::functionals::{
    boundary_terms, calibrate, glimm_credit, hugoniot_decompose, l1_distance, phi_decay_audit, viscosity_check,
    Calibration,
};
use steadyfront::{FlowState, GasConstants, Tolerances, WaveCurves, WaveFamily};
use steadyfront_cli::commands::fit_rate;
use steadyfront_cli::generators::{multi_bump, standard_benchmark};

const KNOWN_FAILURES: &[&str] = &["reflection trichotomy", "glimm monotonicity", "delta sweep rate"];

struct Report {
    lines: Vec<(String, bool)>,
}

impl Report {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag}  {name}: {detail}");
        self.lines.push((name.to_string(), pass));
    }
}

fn gas() -> GasConstants {
    GasConstants::default()
}

fn reference() -> FlowState {
    gas().reference_state(2.0, 1.0)
}

fn curves() -> WaveCurves {
    WaveCurves::new(gas(), Tolerances::default())
}

fn tracker(cal: &Calibration, delta: f64) -> FrontTracker {
    FrontTracker::new(curves(), reference(), cal.weights, TrackingParams::with_delta(delta)).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, radius: f64) -> FlowState {
    let mut d = || rng.gen_range(-radius..radius);
    gas().state_from_primitive(2.0 * (1.0 + d()), 2.0 * d(), 1.0 + d(), 1.0 + d())
}

fn eigenstructure(rep: &mut Report) {
    let g = gas();
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut det_max, mut norm_dev, mut lin_deg, mut lambda2_exact, mut n) = (0.0f64, 0.0f64, 0.0f64, true, 0);
    while n < 1000 {
        let s = random_state(&mut rng, 0.2);
        if !g.is_admissible(&s) {
            continue;
        }
        n += 1;
        let (a, b) = g.symmetric_matrices(&s).unwrap();
        let lam = g.eigenvalues(&s).unwrap();
        lambda2_exact &= lam[1] == 0.0;
        for l in lam {
            det_max = det_max.max((a * l - b).determinant().abs());
        }
        let r = g.eigenvectors(&s).unwrap();
        for j in 1..=3 {
            let h = 1e-6;
            let mut dl = 0.0;
            for k in 0..3 {
                let mut up = s.uvp();
                let mut dn = s.uvp();
                up[k] += h;
                dn[k] -= h;
                let d = (g.eigenvalue_unchecked(j, &s.with_uvp(&up)) - g.eigenvalue_unchecked(j, &s.with_uvp(&dn)))
                    / (2.0 * h);
                dl += d * r[j - 1][k];
            }
            if j == 2 {
                lin_deg = lin_deg.max(dl.abs());
            } else {
                norm_dev = norm_dev.max((dl - 1.0).abs());
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    rep.record(
        "eigenstructure",
        det_max < 1e-9 && lambda2_exact && norm_dev < 1e-5 && lin_deg < 1e-10 && secs < 5.0,
        format!(
            "{n} states, max|det| {det_max:.2e}, lambda2 exact {lambda2_exact}, max|r.grad l - 1| {norm_dev:.2e}, \
             |r2.grad l2| {lin_deg:.1e}, {secs:.2} s"
        ),
    );
}

fn riemann_roundtrip(rep: &mut Report) {
    let wc = curves();
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let base = random_state(&mut rng, 0.1);
        let alpha: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.05..0.05));
        let mut top = base;
        for (f, a) in WaveFamily::ALL.iter().zip(alpha) {
            top = wc.forward_curve(*f, a, &top).unwrap();
        }
        let sol = wc.solve_riemann(&base, &top).unwrap();
        for k in 0..3 {
            worst = worst.max((sol.strengths[k] - alpha[k]).abs());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    rep.record(
        "riemann roundtrip",
        worst < 1e-8 && secs < 30.0,
        format!("1000 triples, max strength error {worst:.2e}, {secs:.2} s"),
    );
}

fn lateral_remainder(rep: &mut Report) {
    let wc = curves();
    let r = reference();
    let k = wc.lateral_gain(&r);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let dirs: Vec<[f64; 4]> = (0..200).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
    let radii = [1e-2, 1e-3, 1e-4];
    let mut worst = Vec::new();
    for rad in radii {
        let mut w: f64 = 0.0;
        for d in &dirs {
            let n = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let s = gas().state_from_primitive(
                2.0 + rad * d[0] / n,
                rad * d[1] / n,
                1.0 + rad * d[2] / n,
                1.0 + rad * d[3] / n,
            );
            let (beta, _) = wc.solve_lateral_riemann(&s, &r).unwrap();
            w = w.max((beta - k * (s.p - r.p)).abs());
        }
        worst.push(w);
    }
    let exponent = fit_rate(&radii, &worst).unwrap_or(0.0);
    rep.record(
        "lateral remainder",
        exponent >= 1.9,
        format!(
            "max|beta - K(p - pbar)| at radii 1e-2/1e-3/1e-4: {:.2e}/{:.2e}/{:.2e}, fit exponent {exponent:.3}",
            worst[0], worst[1], worst[2]
        ),
    );
}

fn reflection_trichotomy(rep: &mut Report) {
    let wc = curves();
    let g = gas();
    let r = reference();
    let mut ok = true;
    let mut parts = Vec::new();
    let mut unnormalized = true;
    for f in [-0.1, -0.05, 0.0, 0.05, 0.1] {
        let vl = f * 2.0;
        let ul = g.state_from_primitive(2.0, vl, 1.0, 1.0);
        let k2 = wc.reflection_coefficient(&ul, &r).unwrap();
        let lam = g.eigenvalues(&ul).unwrap();
        let ratio = (lam[0] / lam[2]).abs();
        if vl == 0.0 {
            ok &= (k2.abs() - 1.0).abs() < 1e-4;
            unnormalized &= (ratio - 1.0).abs() < 1e-4;
        } else {
            ok &= (k2.abs() - 1.0).signum() == -vl.signum();
            unnormalized &= (ratio - 1.0).signum() == -vl.signum();
        }
        parts.push(format!("v_l={vl:+.2}: K2={k2:.6}"));
    }
    rep.record(
        "reflection trichotomy",
        ok,
        format!(
            "{}; |lambda1/lambda3| alone follows the stated ordering: {unnormalized}",
            parts.join(", ")
        ),
    );
}

fn boundary_identities(rep: &mut Report, cal: &Calibration) {
    let wc = curves();
    let w = &cal.weights;
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (mut e2_zero, mut case1, mut dissipative, mut max_ratio) = (true, 0.0f64, true, 0.0f64);
    let wall = |s: FlowState| -> PiecewiseSolution {
        let s = FlowState { p: 1.0, ..s };
        PiecewiseSolution::from_parts(0.0, 1e-3, vec![s], vec![], w).unwrap()
    };
    for _ in 0..300 {
        let a = random_state(&mut rng, 0.02);
        let b = FlowState { b: a.b, ..random_state(&mut rng, 0.02) };
        let (sa, sb) = (wall(a), wall(b));
        let bt = boundary_terms(&wc, &sa, &sb, w).unwrap();
        e2_zero &= bt.e[1] == 0.0;
        dissipative &= bt.e[0] + bt.e[2] <= 1e-14;
        let h = bt.decomposition.h;
        if h[0].abs() > 1e-12 {
            max_ratio = max_ratio.max(h[2].abs() / h[0].abs());
        }
        // Case 1: a pure contact at the wall.
        let c = wc.forward_curve(WaveFamily::Two, rng.gen_range(-0.02..0.02), &wall(a).states[0]).unwrap();
        let d = hugoniot_decompose(&wc, &wall(a).states[0], &c).unwrap();
        if d.h[0].abs() < 1e-12 {
            case1 = case1.max(d.h[2].abs());
        }
    }
    rep.record(
        "boundary identities",
        e2_zero && case1 < 1e-10 && dissipative && max_ratio <= cal.max_wall_ratio * (1.0 + 1e-9),
        format!(
            "E_b2 == 0: {e2_zero}, case 1 max|h3| {case1:.1e}, E_b1 + E_b3 <= 0: {dissipative}, \
             max|h3/h1| {max_ratio:.4} (calibrated bound {:.4}, c1 {:.4})",
            cal.max_wall_ratio, cal.weights.c_a[0]
        ),
    );
}

fn glimm_monotonicity(rep: &mut Report, cal: &Calibration) {
    let delta = 1e-3;
    let t = tracker(cal, delta);
    let w = cal.weights;
    let (mut violations, mut events, mut worst_excess, mut worst_pruning) = (0usize, 0usize, 0.0f64, 0.0f64);
    let mut with_qb_growth = 0usize;
    for seed in 1..=20u64 {
        let data = multi_bump(&gas(), &reference(), seed, 6, 0.04, (0.1, 0.5)).unwrap();
        let mut sol = t.sample_initial_data(&data).unwrap();
        let log = t.run(&mut sol, 1.0).unwrap();
        for e in &log.events {
            events += 1;
            let excess = e.g_after - e.g_before - glimm_credit(e, &w);
            if excess > 1e-12 {
                violations += 1;
                worst_excess = worst_excess.max(excess);
                let (b, a) = (e.glimm_before, e.glimm_after);
                let without_qb = (a.v - b.v) + w.kappa * (a.q_a - b.q_a) - glimm_credit(e, &w);
                if a.q_b > b.q_b && without_qb <= 1e-12 {
                    with_qb_growth += 1;
                }
            }
        }
        worst_pruning = worst_pruning.max(sol.ledger.pruning_total());
    }
    rep.record(
        "glimm monotonicity",
        violations == 0 && worst_pruning <= 10.0 * delta,
        format!(
            "20 seeds, {events} events, {violations} increases beyond credit (max {worst_excess:.2e}), \
             max pruning {worst_pruning:.2e} (limit {:.0e}); {with_qb_growth} of the increases vanish without the growth of Q_b",
            10.0 * delta
        ),
    );
}

fn perturbed(data: &InitialData) -> InitialData {
    let mut states = data.states.clone();
    states[2].p += 0.002;
    states[2].u += 0.001;
    InitialData::piecewise(data.breakpoints.clone(), states).unwrap()
}

fn lyapunov_and_stability(rep: &mut Report, cal: &Calibration) {
    let delta = 1e-3;
    let t = tracker(cal, delta);
    let w = cal.weights;
    let xis: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
    let mut audits = Vec::new();
    for seed in 1..=5u64 {
        let data = multi_bump(&gas(), &reference(), seed, 6, 0.04, (0.1, 0.5)).unwrap();
        let su = t.sample_initial_data(&data).unwrap();
        let sv = t.sample_initial_data(&perturbed(&data)).unwrap();
        audits.push(phi_decay_audit(&t, &su, &t, &sv, &xis, &w).unwrap());
    }
    let rows = audits.iter().flat_map(|a| a.rows.iter());
    let (w_lo, w_hi) = rows.clone().fold((f64::INFINITY, 0.0f64), |(l, h), r| (l.min(r.w_min), h.max(r.w_max)));
    let c1s: Vec<f64> = audits.iter().map(|a| a.c1_observed).collect();
    let c1 = c1s.iter().fold(1.0f64, |m, &c| m.max(c));
    let c1_min = c1s.iter().fold(f64::INFINITY, |m, &c| m.min(c));
    let sandwich = rows.clone().all(|r| r.l1 / c1 <= r.phi * (1.0 + 1e-12) && r.phi <= c1 * r.l1 * (1.0 + 1e-12));
    let c2s: Vec<f64> = audits.iter().map(|a| a.c2_observed).collect();
    let c2 = c2s.iter().fold(0.0f64, |m, &c| m.max(c));
    let decays = audits.iter().all(|a| a.passes(100.0));
    rep.record(
        "lyapunov sandwich and decay",
        w_lo >= 1.0 && w_hi <= 2.0 && sandwich && decays && c1 / c1_min <= 2.0,
        format!(
            "5 pairs x 21 stations, W in [{w_lo:.4}, {w_hi:.4}], C1 {c1:.3} (per pair {}), C2_obs max {c2:.3} \
             (per pair {}), C1 spread {:.3}",
            fmt_list(&c1s),
            fmt_list(&c2s),
            c1 / c1_min
        ),
    );
    let ratios: Vec<f64> = audits.iter().map(|a| a.stability_ratio()).collect();
    let worst = ratios.iter().fold(0.0f64, |m, &c| m.max(c));
    rep.record(
        "l1 stability",
        worst <= c1 * c1,
        format!("C_obs per pair {}, max {worst:.3} <= C1^2 = {:.3}", fmt_list(&ratios), c1 * c1),
    );
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/")
}

fn delta_cauchy(rep: &mut Report, cal: &Calibration) {
    let deltas = [4e-3, 2e-3, 1e-3, 5e-4];
    let data = standard_benchmark(1).unwrap();
    let runs: Vec<PiecewiseSolution> = deltas
        .iter()
        .map(|&d| {
            let t = tracker(cal, d);
            let mut s = t.sample_initial_data(&data).unwrap();
            t.run(&mut s, 1.0).unwrap();
            s
        })
        .collect();
    let dist: Vec<f64> = runs.windows(2).map(|w| l1_distance(&w[0], &w[1]).unwrap()).collect();
    let monotone = dist.windows(2).all(|w| w[1] <= w[0]);
    let rate = fit_rate(&deltas[..3], &dist).unwrap_or(f64::NAN);

    let delta = 1e-3;
    let t = tracker(cal, delta);
    let mut c_same: f64 = 0.0;
    for seed in 1..=3u64 {
        let d = multi_bump(&gas(), &reference(), seed, 6, 0.04, (0.1, 0.5)).unwrap();
        let (mut u, mut v) = (t.sample_initial_data(&d).unwrap(), t.sample_initial_data(&d).unwrap());
        for xi in [0.25, 0.5, 1.0] {
            t.run(&mut u, xi).unwrap();
            t.run(&mut v, xi).unwrap();
            c_same = c_same.max(l1_distance(&u, &v).unwrap() / (delta * xi));
        }
    }
    rep.record(
        "delta cauchy",
        monotone && c_same <= 1.0,
        format!(
            "distances at xi = 1: {:.3e}/{:.3e}/{:.3e}, monotone {monotone}, fitted rate {rate:.3}; \
             identical data: max L1/(delta xi) {c_same:.2e}",
            dist[0], dist[1], dist[2]
        ),
    );
}

fn sweep_rate(rep: &mut Report, cal: &Calibration) {
    let deltas = [4e-3, 2e-3, 1e-3, 5e-4];
    let mut rates = Vec::new();
    for seed in 1..=3u64 {
        let data = standard_benchmark(seed).unwrap();
        let runs: Vec<PiecewiseSolution> = deltas
            .iter()
            .map(|&d| {
                let t = tracker(cal, d);
                let mut s = t.sample_initial_data(&data).unwrap();
                t.run(&mut s, 1.0).unwrap();
                s
            })
            .collect();
        let dist: Vec<f64> = runs.windows(2).map(|w| l1_distance(&w[0], &w[1]).unwrap()).collect();
        rates.push(fit_rate(&deltas[..3], &dist).unwrap_or(f64::NAN));
    }
    rep.record(
        "delta sweep rate",
        rates.iter().all(|&r| r >= 0.8),
        format!("fitted exponents on benchmark seeds 1/2/3: {} (threshold 0.8)", fmt_list(&rates)),
    );
}

fn viscosity(rep: &mut Report, cal: &Calibration) {
    let wc = curves();
    let r = reference();
    let mut details = Vec::new();

    let delta = 1e-3;
    let t = FrontTracker::new(wc, r, cal.weights, TrackingParams { eps0: 0.1, ..TrackingParams::with_delta(delta) })
        .unwrap();
    let mut sharp_ok = true;
    for (fam, a) in [(WaveFamily::One, -0.02), (WaveFamily::Two, 0.02), (WaveFamily::Three, -0.02)] {
        let above = wc.forward_curve(fam, a, &r).unwrap();
        let data = InitialData::piecewise(vec![0.5], vec![r, above]).unwrap();
        let mut sol = t.sample_initial_data(&data).unwrap();
        t.run(&mut sol, 0.1).unwrap();
        let zeta = sol.positions()[0];
        let v = viscosity_check(&t, &sol, zeta, 0.05, delta).unwrap();
        sharp_ok &= v.i_sharp <= delta;
        details.push(format!("{}-front I_sharp {:.1e}", fam.index(), v.i_sharp));
    }

    let mut flat_ok = true;
    for d in [4e-3, 1e-3] {
        let t = FrontTracker::new(wc, r, cal.weights, TrackingParams { eps0: 0.1, ..TrackingParams::with_delta(d) })
            .unwrap();
        let above = wc.forward_curve(WaveFamily::Three, 0.02, &r).unwrap();
        let data = InitialData::piecewise(vec![0.5], vec![r, above]).unwrap();
        let mut sol = t.sample_initial_data(&data).unwrap();
        t.run(&mut sol, 0.2).unwrap();
        let pos = sol.positions();
        let (lo, hi) = (pos[0], *pos.last().unwrap());
        let zeta = 0.5 * (lo + hi);
        let v = viscosity_check(&t, &sol, zeta, 0.5 * (hi - lo) + 0.05, d).unwrap();
        let c = v.i_flat / (v.tv_window * v.tv_window);
        flat_ok &= c <= 1.0;
        details.push(format!("fan at delta {d:.0e}: I_flat/TV^2 {c:.3}"));
    }

    let data = InitialData::constant(r);
    let mut sol = t.sample_initial_data(&data).unwrap();
    t.run(&mut sol, 0.3).unwrap();
    let v = viscosity_check(&t, &sol, 0.5, 0.2, delta).unwrap();
    let zeros = v.i_sharp == 0.0 && v.i_flat == 0.0;
    details.push(format!("constant: {:.1e}/{:.1e}", v.i_sharp, v.i_flat));
    rep.record(
        "viscosity checks",
        sharp_ok && flat_ok && zeros,
        format!("{} (bounds: I_sharp <= delta, I_flat <= TV^2)", details.join(", ")),
    );
}

fn eulerian(rep: &mut Report, cal: &Calibration) {
    let g = gas();
    let r = reference();
    let wc = curves();
    let t = FrontTracker::new(wc, r, cal.weights, TrackingParams { eps0: 0.1, ..TrackingParams::with_delta(1e-3) })
        .unwrap();
    let mut worst_rt: f64 = 0.0;
    let mut worst_slope: f64 = 0.0;
    let datas = [
        InitialData::piecewise(vec![0.5], vec![r, g.state_from_primitive(2.0, 0.0, 1.01, 1.0)]).unwrap(),
        multi_bump(&g, &r, 3, 4, 0.03, (0.1, 0.5)).unwrap(),
    ];
    for data in &datas {
        let mut sol = t.sample_initial_data(data).unwrap();
        let (_, history) = t.run_with_history(&mut sol, 1.0).unwrap();
        let field = to_eulerian(&g, &history, 1.0).unwrap();
        worst_rt = worst_rt.max(roundtrip_residual(&field, &history, 1.0).unwrap());
        worst_slope = worst_slope.max(slope_law_residual(&field));
    }
    let profile = EulerianProfile {
        breakpoints: vec![0.2, 0.45],
        states: vec![
            g.state_from_primitive(2.01, 0.01, 1.0, 1.0),
            g.state_from_primitive(1.99, -0.01, 1.01, 0.99),
            r,
        ],
    };
    let eq = initial_trace_equivalence(&g, &profile, &profile.clone(), None).unwrap();
    rep.record(
        "eulerian bridge",
        worst_rt < 1e-10 && worst_slope < 1e-14 && eq.equivalent,
        format!(
            "roundtrip residual {worst_rt:.2e}, max|dg - (v/u) dx| {worst_slope:.1e}, identical data verdict: {}",
            if eq.equivalent { "equivalent" } else { "not equivalent" }
        ),
    );
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut rep = Report { lines: Vec::new() };
    let cal = calibrate(&curves(), &reference(), 0.05).unwrap();
    println!(
        "calibration: k+ {:.4}, c_a {:?}, kappa {:.1}, kappa1 {:.1}, kappa2 {:.4}",
        cal.weights.k_plus, cal.weights.c_a, cal.weights.kappa, cal.weights.kappa1, cal.weights.kappa2
    );
    eigenstructure(&mut rep);
    riemann_roundtrip(&mut rep);
    lateral_remainder(&mut rep);
    reflection_trichotomy(&mut rep);
    boundary_identities(&mut rep, &cal);
    glimm_monotonicity(&mut rep, &cal);
    lyapunov_and_stability(&mut rep, &cal);
    delta_cauchy(&mut rep, &cal);
    sweep_rate(&mut rep, &cal);
    viscosity(&mut rep, &cal);
    eulerian(&mut rep, &cal);

    let failed: Vec<&str> = rep.lines.iter().filter(|(_, p)| !p).map(|(n, _)| n.as_str()).collect();
    let unexpected: Vec<&str> = failed.iter().copied().filter(|n| !KNOWN_FAILURES.contains(n)).collect();
    let unexpected_passes: Vec<&str> =
        KNOWN_FAILURES.iter().copied().filter(|k| !failed.contains(k)).collect();
    println!(
        "{} criteria, {} passed, {} failed ({} known), {:.1} s",
        rep.lines.len(),
        rep.lines.len() - failed.len(),
        failed.len(),
        failed.len() - unexpected.len(),
        start.elapsed().as_secs_f64()
    );
    if !unexpected_passes.is_empty() {
        println!("known failures now passing: {}", unexpected_passes.join(", "));
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
