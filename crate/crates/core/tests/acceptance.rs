//! Acceptance criteria, one line each. Tolerances are fixed here, not tuned.
//! Failures are reported but only change the exit status with `--strict`
//! or `ACCEPTANCE_STRICT` set.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use worldsheet::dynamics::linear_degeneracy_residual;
use worldsheet::error::{Assumption, Error};
use worldsheet::extremal::{
    annihilation_check, framework_matrices, induced_metric, m_matrix_spectrum, me_form_residual, quadratic_through,
    random_jet, AmbientMetric, FlatExtension,
};
use worldsheet::geometry::{spherical_to_cartesian, MetricField};
use worldsheet::initial_data::{lambda0_from_data, EpsilonFamily, InitialData};
use worldsheet::numerics::total_variation;
use worldsheet::solver::characteristic::{solve_characteristic, CharacteristicConfig};
use worldsheet::solver::dalembert::{kinked_string, standing_wave, DAlembert};
use worldsheet::solver::{SolveResult, Snapshot, Termination};
use worldsheet::spherical::{solve_spherical, spherical_linear_degeneracy, DEFAULT_POLAR_MARGIN};
use worldsheet::transform::{build_map, conservation_identity_residual, solve_lambda_exact, LambdaInitial};
use worldsheet::verify::{random_spherical, random_state};

type Outcome = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ambients() -> Vec<(usize, usize, FlatExtension)> {
    let mut out = Vec::new();
    for base in [MetricField::schwarzschild(1.0).unwrap(), MetricField::minkowski()] {
        for (n, p) in [(3, 1), (3, 2), (4, 1)] {
            out.push((n, p, FlatExtension { base, extra: n - 3 }));
        }
    }
    out
}

fn projection_spectrum() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut total, mut bad, mut worst) = (0, 0, 0.0f64);
    for (n, p, amb) in ambients() {
        for _ in 0..1700 {
            let jet = random_jet(&mut rng, &amb, p, 1e-3).map_err(err)?;
            let t = amb.tensor(jet.position.as_slice()).map_err(err)?;
            let ind = induced_metric(&jet, &t, 1e-14).map_err(err)?;
            let s = m_matrix_spectrum(&framework_matrices(&jet, &t, &ind));
            for z in &s.eigenvalues {
                worst = worst.max(z.re.abs().min((z.re - 1.0).abs()).max(z.im.abs()));
            }
            if s.rank != n - p || s.count_near(0.0, 1e-9) != p + 1 || s.count_near(1.0, 1e-9) != n - p {
                bad += 1;
            }
            total += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        bad == 0 && worst <= 1e-9 && secs < 30.0,
        format!("{total} jets, {bad} wrong, max eigenvalue offset {worst:.2e} (tol 1e-9), {secs:.1} s (limit 30 s)"),
    ))
}

fn projection_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut total, mut worst, mut annih) = (0, 0.0f64, 0.0f64);
    let mut ratios = Vec::new();
    let mut residuals = Vec::new();
    for (_, p, amb) in ambients() {
        for _ in 0..167 {
            let jet = random_jet(&mut rng, &amb, p, 1e-2).map_err(err)?;
            let imm = quadratic_through(&jet);
            let u0 = vec![0.0; p + 1];
            let r = me_form_residual(&imm, &u0, &amb, 1e-4).map_err(err)?;
            worst = worst.max(r);
            residuals.push(r);
            let coarse = me_form_residual(&imm, &u0, &amb, 2e-2).map_err(err)?;
            let fine = me_form_residual(&imm, &u0, &amb, 1e-2).map_err(err)?;
            if fine > 1e-9 {
                ratios.push(coarse / fine);
            }
            let t = amb.tensor(jet.position.as_slice()).map_err(err)?;
            let ind = induced_metric(&jet, &t, 1e-14).map_err(err)?;
            let (a, b) = annihilation_check(&framework_matrices(&jet, &t, &ind), &jet);
            annih = annih.max(a).max(b);
            total += 1;
        }
    }
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    residuals.sort_by(f64::total_cmp);
    let over = residuals.iter().filter(|r| **r >= 1e-7).count();
    Ok((
        worst < 1e-7 && (median / 4.0 - 1.0).abs() <= 0.15 && annih < 1e-10,
        format!(
            "{total} jets: residual at h=1e-4 max {worst:.2e}, median {:.2e}, {over} at or above tol 1e-7; \
             median halving ratio {median:.3} (4 +- 15%), annihilation {annih:.2e} (tol 1e-10)",
            residuals[residuals.len() / 2]
        ),
    ))
}

fn linear_degeneracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut cart, mut sph) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        cart = cart.max(linear_degeneracy_residual(&random_state(&mut rng, 1.0), 1.0, 1e-4).map_err(err)?);
        let j = random_spherical(&mut rng, 1.0);
        sph = sph.max(spherical_linear_degeneracy(&j, 1.0, 1e-4, DEFAULT_POLAR_MARGIN).map_err(err)?);
    }
    Ok((
        cart <= 1e-7 && sph <= 1e-7,
        format!("10000 states per chart: Cartesian {cart:.2e}, spherical {sph:.2e} (tol 1e-7)"),
    ))
}

fn bump_speeds() -> LambdaInitial {
    LambdaInitial::from_fn(-12.0, 12.0, 2401, false, |x| (-1.0 + 0.2 * x.tanh(), 1.0 + 0.2 / x.cosh().powi(2))).unwrap()
}

/// Second-order upwind differences with SSP-RK3 for
/// `l-_t + l+ l-_x = 0`, `l+_t + l- l+_x = 0`; end nodes held fixed.
fn upwind_transport(lam: &LambdaInitial, a: f64, b: f64, cells: usize, t_final: f64) -> (Vec<f64>, Vec<f64>) {
    let n = cells + 1;
    let h = (b - a) / cells as f64;
    let mut lm: Vec<f64> = (0..n).map(|i| lam.eval(a + i as f64 * h).minus).collect();
    let mut lp: Vec<f64> = (0..n).map(|i| lam.eval(a + i as f64 * h).plus).collect();
    let d = |f: &[f64], i: usize, c: f64| {
        if c > 0.0 {
            (3.0 * f[i] - 4.0 * f[i - 1] + f[i - 2]) / (2.0 * h)
        } else {
            (-3.0 * f[i] + 4.0 * f[i + 1] - f[i + 2]) / (2.0 * h)
        }
    };
    let rhs = |m: &[f64], p: &[f64]| {
        let mut dm = vec![0.0; n];
        let mut dp = vec![0.0; n];
        for i in 2..n - 2 {
            dm[i] = -p[i] * d(m, i, p[i]);
            dp[i] = -m[i] * d(p, i, m[i]);
        }
        (dm, dp)
    };
    let smax = lm.iter().chain(&lp).fold(0.0f64, |s, v| s.max(v.abs()));
    let steps = (t_final / (0.4 * h / smax)).ceil() as usize;
    let dt = t_final / steps as f64;
    let comb = |x: &[f64], y: &[f64], dy: &[f64], a: f64, b: f64| -> Vec<f64> {
        (0..n).map(|i| a * x[i] + b * (y[i] + dt * dy[i])).collect()
    };
    for _ in 0..steps {
        let (k1m, k1p) = rhs(&lm, &lp);
        let m1 = comb(&lm, &lm, &k1m, 0.0, 1.0);
        let p1 = comb(&lp, &lp, &k1p, 0.0, 1.0);
        let (k2m, k2p) = rhs(&m1, &p1);
        let m2 = comb(&lm, &m1, &k2m, 0.75, 0.25);
        let p2 = comb(&lp, &p1, &k2p, 0.75, 0.25);
        let (k3m, k3p) = rhs(&m2, &p2);
        lm = comb(&lm, &m2, &k3m, 1.0 / 3.0, 2.0 / 3.0);
        lp = comb(&lp, &p2, &k3p, 1.0 / 3.0, 2.0 / 3.0);
    }
    (lm, lp)
}

fn exact_transport() -> Outcome {
    let lam = bump_speeds();
    let map = build_map(&lam, 4801).map_err(err)?;
    let t = 2.0;
    let probes: Vec<f64> = (0..=32).map(|i| -4.0 + 0.25 * i as f64).collect();
    let mut errs = Vec::new();
    for cells in [960usize, 1920, 3840] {
        let (lm, lp) = upwind_transport(&lam, -12.0, 12.0, cells, t);
        let h = 24.0 / cells as f64;
        let mut e = 0.0f64;
        for &x in &probes {
            let i = ((x + 12.0) / h).round() as usize;
            let s = solve_lambda_exact(&map, t, x).map_err(err)?;
            e = e.max((s.minus - lm[i]).abs()).max((s.plus - lp[i]).abs());
        }
        errs.push(e);
    }
    let orders = [(errs[0] / errs[1]).log2(), (errs[1] / errs[2]).log2()];
    let points: Vec<(f64, f64)> = [0.5, 1.0, 2.0].iter().flat_map(|&t| [-1.0, 0.0, 0.7, 1.5].map(|x| (t, x))).collect();
    let res: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| conservation_identity_residual(&map, &points, h))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let ratios = [res[0] / res[1], res[1] / res[2]];
    let cons_ok = ratios.iter().all(|r| (r / 4.0 - 1.0).abs() <= 0.15);
    Ok((
        orders.iter().all(|&o| o >= 1.8) && cons_ok,
        format!(
            "upwind oracle errors {:.2e} {:.2e} {:.2e}, orders {:.2} {:.2} (>= 1.8); conservation ratios {:.3} {:.3} (4 +- 15%)",
            errs[0], errs[1], errs[2], orders[0], orders[1], ratios[0], ratios[1]
        ),
    ))
}

fn diffeomorphism() -> Outcome {
    let mut corpus: Vec<(String, InitialData)> = Vec::new();
    for eps in [1e-3, 1e-2, 1e-1] {
        corpus.push((format!("pulse {eps:e}"), EpsilonFamily::pulse([10.0, 0.0, 0.0], eps, 8.0).sample(801).map_err(err)?));
    }
    let mut lp = EpsilonFamily::closed_loop([10.0, 0.0, 0.0], 0.1);
    lp.profile = worldsheet::initial_data::FamilyProfile::ClosedLoop { swirl: 0.3 };
    corpus.push(("loop".into(), lp.sample(512).map_err(err)?));

    let (mut worst_ratio, mut min_jac, mut bv_excess) = (0.0f64, f64::INFINITY, 0.0f64);
    for (_, data) in &corpus {
        let lam = lambda0_from_data(data, 1.0).map_err(err)?;
        let map = build_map(&lam, 801).map_err(err)?;
        let (_, h, _) = map.grid();
        let (a, b) = if data.periodic { (0.0, std::f64::consts::TAU) } else { (-3.0, 3.0) };
        let tv0m = total_variation(&lam.nodes().map(|n| n.1).collect::<Vec<_>>());
        let tv0p = total_variation(&lam.nodes().map(|n| n.2).collect::<Vec<_>>());
        for &t in &[0.5, 1.5, 3.0] {
            let (mut m, mut p) = (Vec::new(), Vec::new());
            for i in 0..=600 {
                let th = a + (b - a) * i as f64 / 600.0;
                let vt = map.theta(t, th).map_err(err)?;
                worst_ratio = worst_ratio.max((map.phi(t, vt) - th).abs() / (5.0 * h * h));
                min_jac = min_jac.min(map.jacobian(t, th).map_err(err)?);
                let s = solve_lambda_exact(&map, t, th).map_err(err)?;
                m.push(s.minus);
                p.push(s.plus);
            }
            bv_excess = bv_excess
                .max(total_variation(&m) / tv0m.max(1e-300) - 1.0)
                .max(total_variation(&p) / tv0p.max(1e-300) - 1.0);
        }
    }
    Ok((
        worst_ratio <= 1.0 && min_jac > 0.0 && bv_excess <= 1e-3,
        format!(
            "{} data sets: round trip / 5h^2 = {worst_ratio:.2e} (<= 1), min Jacobian {min_jac:.3e} (> 0), \
             BV growth {bv_excess:.1e} (<= 1e-3)",
            corpus.len()
        ),
    ))
}

fn flat_error(exact: &DAlembert, res: &SolveResult, comps: &[usize]) -> Result<f64, String> {
    let snap = res.last();
    let mut e = 0.0f64;
    for (th, jet) in snap.theta.iter().zip(&snap.jets) {
        let x = exact.jet(snap.t, *th).map_err(err)?;
        for &c in comps {
            e = e.max((x.u[c] - jet.u[c]).abs());
        }
    }
    Ok(e)
}

fn flat_oracle() -> Outcome {
    let kink = DAlembert::new(kinked_string(0.8, 1.0), -8.0, 8.0, 200).map_err(err)?;
    let data = kink.data().sample(-8.0, 8.0, 3201, false).map_err(err)?;
    let mut ke = Vec::new();
    for n in [201, 401, 801] {
        let cfg = CharacteristicConfig { nodes: n, t_final: 2.0, ..Default::default() };
        let r = solve_characteristic(&data, 0.0, &cfg, None, None).map_err(err)?;
        if !r.termination.reached() {
            return Ok((false, format!("kinked string stopped: {:?}", r.termination)));
        }
        ke.push((16.0 / (n - 1) as f64, flat_error(&kink, &r, &[0, 1, 2, 3])?));
    }
    let ko = [(ke[0].1 / ke[1].1).log2(), (ke[1].1 / ke[2].1).log2()];
    let c = ke.iter().map(|(h, e)| e / (h * h)).fold(0.0f64, f64::max);

    let a = 0.4;
    let wave = DAlembert::new(standing_wave(a).map_err(err)?, -6.0, 6.0, 60).map_err(err)?;
    let data = wave.data().sample(-6.0, 6.0, 2401, false).map_err(err)?;
    let mut we = Vec::new();
    for n in [241, 481, 961] {
        let cfg = CharacteristicConfig { nodes: n, t_final: 2.0, ..Default::default() };
        let r = solve_characteristic(&data, 0.0, &cfg, None, None).map_err(err)?;
        let snap = r.last();
        let e = snap
            .theta
            .iter()
            .zip(&snap.jets)
            .map(|(th, j)| (j.u[2] - a * th.sin() * snap.t.cos()).abs())
            .fold(0.0f64, f64::max);
        we.push(e);
    }
    let wo = [(we[0] / we[1]).log2(), (we[1] / we[2]).log2()];
    Ok((
        ko.iter().chain(&wo).all(|&o| o >= 1.8),
        format!(
            "kinked string errors {:.2e} {:.2e} {:.2e}, orders {:.2} {:.2}, C = max err/h^2 = {c:.3}; \
             standing wave errors {:.2e} {:.2e} {:.2e}, orders {:.2} {:.2} (>= 1.8)",
            ke[0].1, ke[1].1, ke[2].1, ko[0], ko[1], we[0], we[1], we[2], wo[0], wo[1]
        ),
    ))
}

/// Largest Cartesian position difference between two snapshots at the nodes of `b`.
fn deviation(a: &Snapshot, b: &Snapshot, a_spherical: bool, b_spherical: bool) -> f64 {
    let to_cart = |u: &[f64; 4], sph: bool| if sph { spherical_to_cartesian(u) } else { *u };
    let mut worst = 0.0f64;
    for (th, jb) in b.theta.iter().zip(&b.jets) {
        if let Some(ja) = a.sample(*th) {
            let (xa, xb) = (to_cart(&ja.u, a_spherical), to_cart(&jb.u, b_spherical));
            for c in 0..4 {
                worst = worst.max((xa[c] - xb[c]).abs());
            }
        }
    }
    worst
}

fn cross_chart() -> Outcome {
    let data = EpsilonFamily::pulse([6.0, 0.0, 0.0], 0.3, 30.0).sample(2401).map_err(err)?;
    let run = |nodes: usize, every: usize, spherical: bool| -> Result<SolveResult, String> {
        let cfg = CharacteristicConfig { nodes, t_final: 20.0, snapshot_every: every, ..Default::default() };
        let r = if spherical {
            solve_spherical(&data, 1.0, &cfg, DEFAULT_POLAR_MARGIN)
        } else {
            solve_characteristic(&data, 1.0, &cfg, None, None)
        }
        .map_err(err)?;
        if r.termination.reached() {
            Ok(r)
        } else {
            Err(format!("run stopped: {:?}", r.termination))
        }
    };
    let (c1, c2) = (run(1201, 100, false)?, run(2401, 200, false)?);
    let (s1, s2) = (run(1201, 100, true)?, run(2401, 200, true)?);
    let mut checked = 0;
    let mut worst_ratio = 0.0f64;
    let mut summary = String::new();
    for k in 1..c2.snapshots.len().min(c1.snapshots.len()) {
        let t = c2.snapshots[k].t;
        if (c1.snapshots[k].t - t).abs() > 1e-9 || (s2.snapshots[k].t - t).abs() > 1e-9 {
            return Err(format!("snapshot times disagree at index {k}"));
        }
        let est_c = deviation(&c2.snapshots[k], &c1.snapshots[k], false, false) / 3.0;
        let est_s = deviation(&s2.snapshots[k], &s1.snapshots[k], true, true) / 3.0;
        let dev = deviation(&c2.snapshots[k], &s2.snapshots[k], false, true);
        worst_ratio = worst_ratio.max(dev / (est_c + est_s));
        checked += 1;
        if k + 1 == c2.snapshots.len() {
            summary = format!("at t = {t:.2}: deviation {dev:.2e}, error estimates {est_c:.2e} + {est_s:.2e}");
        }
    }
    Ok((
        checked > 0 && worst_ratio <= 1.0,
        format!("{checked} times in (0, 20]: max deviation / estimated error {worst_ratio:.3} (<= 1); {summary}"),
    ))
}

fn global_existence() -> Outcome {
    let margin = 0.1;
    let mut lines = Vec::new();
    let mut ok = true;
    let mut qv = Vec::new();
    for eps in [1e-2, 1e-3] {
        let data = EpsilonFamily::pulse([10.0, 0.0, 0.0], eps, 200.0).sample(4097).map_err(err)?;
        let cfg = CharacteristicConfig { nodes: 4096, t_final: 100.0, horizon_margin: margin, ..Default::default() };
        let start = Instant::now();
        let r = solve_characteristic(&data, 1.0, &cfg, Some(eps), None).map_err(err)?;
        let secs = start.elapsed().as_secs_f64();
        let d = &r.diagnostics;
        let ratio = d.v_inf / d.v_inf_initial;
        let this = r.termination.reached()
            && r.extremes.max_delta < 0.0
            && r.extremes.min_horizon_gap >= margin / 2.0
            && ratio <= 2.0
            && secs < 60.0;
        ok &= this;
        qv.push((eps, d.q_v));
        lines.push(format!(
            "eps {eps:e}: {} at t = {:.1}, max Delta {:.2e}, min |S|-2m {:.3}, sup ratio {ratio:.4}, {secs:.1} s",
            r.termination.label(),
            r.final_time,
            r.extremes.max_delta,
            r.extremes.min_horizon_gap
        ));
    }
    let exponent = (qv[0].1 / qv[1].1).ln() / (qv[0].0 / qv[1].0).ln();
    ok &= (exponent - 2.0).abs() <= 0.2;

    // informational: the closed loop stays periodic, so nothing leaves the grid.
    // Its period is ~2pi, so the step is far smaller than for the pulse; keep it short.
    let lp = EpsilonFamily::closed_loop([10.0, 0.0, 0.0], 1e-2).sample(1024).map_err(err)?;
    let cfg = CharacteristicConfig { nodes: 1024, t_final: 20.0, ..Default::default() };
    let info = match solve_characteristic(&lp, 1.0, &cfg, Some(1e-2), None) {
        Ok(r) => format!(
            "loop (not gated): {} at t = {:.1}, sup ratio {:.4}",
            r.termination.label(),
            r.final_time,
            r.diagnostics.v_inf / r.diagnostics.v_inf_initial
        ),
        Err(e) => format!("loop (not gated): {e}"),
    };
    Ok((ok, format!("{}; Q_V exponent {exponent:.3} (2 +- 0.2); {info}", lines.join("; "))))
}

fn crossing_data() -> InitialData {
    let n = 201;
    let h = 0.1;
    let theta = |i: usize| -10.0 + h * i as f64;
    let p = (0..n).map(|i| [0.0, 20.0, theta(i), 0.0]).collect();
    let q = (0..n).map(|i| [1.0, 0.0, 3.0 * theta(i).tanh(), 0.0]).collect();
    InitialData::new(-10.0, h, false, p, q, None).unwrap()
}

fn negative_controls() -> Outcome {
    let data = crossing_data();
    let mut cfg = CharacteristicConfig { nodes: 400, t_final: 5.0, enforce_assumptions: false, ..Default::default() };
    let r = solve_characteristic(&data, 1.0, &cfg, None, None).map_err(err)?;
    let collapsed = matches!(r.termination, Termination::GapCollapse { t, .. } if t < cfg.t_final);
    cfg.enforce_assumptions = true;
    let refused = matches!(
        solve_characteristic(&data, 1.0, &cfg, None, None),
        Err(Error::AssumptionViolated { which: Assumption::Ordering, .. })
    );
    let inside = EpsilonFamily::pulse([2.05, 0.0, 0.0], 1e-2, 20.0).sample(401).map_err(err)?;
    let rejected = matches!(
        solve_characteristic(&inside, 1.0, &CharacteristicConfig::default(), None, None),
        Err(Error::AssumptionViolated { which: Assumption::Exterior, .. })
    );
    Ok((
        collapsed && refused && rejected,
        format!(
            "crossing speeds: {} at t = {:.3}, refused when enforced: {refused}; data inside 2m + margin rejected: {rejected}",
            r.termination.label(),
            r.final_time
        ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("projection spectrum", projection_spectrum),
        ("projection identity", projection_identity),
        ("linear degeneracy", linear_degeneracy),
        ("exact transport", exact_transport),
        ("characteristic map", diffeomorphism),
        ("flat-space oracle", flat_oracle),
        ("cross-chart agreement", cross_chart),
        ("small-data global runs", global_existence),
        ("negative controls", negative_controls),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!passed);
        println!(
            "{} {}. {name}: {detail} [{:.1} s]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    let strict = std::env::args().any(|a| a == "--strict") || std::env::var_os("ACCEPTANCE_STRICT").is_some();
    if failed > 0 && strict {
        std::process::exit(1);
    }
}
