//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every tolerance is a constant below.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use nehari_cli::{run, Command, ExperimentConfig, Overrides};
use nehari_core::domain::*;
use nehari_core::nehari::*;
use nehari_core::parabolic::*;
use nehari_core::random::{positive_field, smooth_field};
use nehari_core::spectral::*;
use nehari_core::stationary::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Acceptance geometry: Ω = (0, 1), Ω₀ = (0.4, 0.7), plateau b₀ = 1, ν = 3.
const N: usize = 199;
const NU: f64 = 3.0;

const CLOSED_FORM_REL: f64 = 1e-10;
const ORDER_RANGE: (f64, f64) = (1.8, 2.2);
const MONOTONE_STRICT_REL: f64 = 1e-10;
const IDENTITY_REL: f64 = 1e-9;
const IDENTITY_SAMPLES: usize = 100;
/// `|J(t*u)| ≤ PROJECTION_J·max(1, ‖t*u‖²)`, the scaling of the manifold band.
const PROJECTION_J: f64 = 1e-10;
/// `t*` against the closed form, in ulps of relative error.
const TURNING_POINT_REL: f64 = 1e-14;
const PROJECTION_SAMPLES: usize = 2000;
const STATIONARY_RESIDUAL: f64 = 1e-9;
const NONEXISTENCE_INITS: usize = 5;
const NONEXISTENCE_HORIZON: f64 = 0.2;
const UNIQUENESS_STARTS: usize = 20;
const UNIQUENESS_L2: f64 = 1e-6;
const MP_RESIDUAL: f64 = 1e-7;
/// Per-step monotonicity allowance `C·Δt²` plus the relative rounding floor.
const LYAPUNOV_C: f64 = MONOTONE_CONSTANT;
const LYAPUNOV_ROUNDOFF: f64 = ROUNDOFF_FLOOR;
const DEFECT_RATIO_RANGE: (f64, f64) = (3.5, 4.5);
const DEFECT_STEPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];
const BATTERY: usize = 20;
const BATTERY_MAX_H1: f64 = 10.0;
const BOUNDED_T: f64 = 2.0;
/// `sup_{[0,2T]} ‖u‖_{H¹} ≤ (1 + tol)·sup_{[0,T]} ‖u‖_{H¹}`.
const DOUBLING_REL: f64 = 1e-3;
const CONE_SEEDS: usize = 10;
const A_I_FLOOR: f64 = 1e-8;
const PROBE_EPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
const SEARCH_DRAWS: usize = 10_000;

fn grid(n: usize) -> Grid64 {
    build_grid(&DomainSpec::interval(1.0, n, (0.4, 0.7))).unwrap()
}

fn params(g: &Grid64, lambda: f64) -> ProblemParams64 {
    ProblemParams::new(g, lambda, NU, build_weight(g, &WeightSpec::plateau(1.0)).unwrap()).unwrap()
}

type Grid64 = nehari_core::Grid64;
type ProblemParams64 = nehari_core::ProblemParams64;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Every NehariReport produced by the harness, for the S⁻ audit.
#[derive(Default)]
struct Audit {
    reports: usize,
    b_positive: usize,
    manifold_b_positive: usize,
}

impl Audit {
    fn see(&mut self, r: &NehariReport<f64>) {
        self.reports += 1;
        if r.b > 0.0 {
            self.b_positive += 1;
            if r.nehari_side == NehariSide::Manifold {
                self.manifold_b_positive += 1;
            }
        }
    }
}

struct Lab {
    g: Grid64,
    p20: ProblemParams64,
    p60: ProblemParams64,
    phi20: Option<EquilibriumResult<f64>>,
    phi60: Option<EquilibriumResult<f64>>,
    u_star: Option<Field<f64>>,
    trajectories: Vec<(String, TrajectoryRecord<f64>)>,
    audit: Audit,
}

impl Lab {
    fn params(&self, lambda: f64) -> &ProblemParams64 {
        if lambda == 20.0 {
            &self.p20
        } else {
            &self.p60
        }
    }

    fn phi(&self, lambda: f64) -> &EquilibriumResult<f64> {
        let phi = if lambda == 20.0 { &self.phi20 } else { &self.phi60 };
        phi.as_ref().expect("positive equilibrium unavailable")
    }
}

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_spectral() -> Outcome {
    let mut worst = 0.0_f64;
    let mut errs: Vec<[f64; 2]> = Vec::new();
    for n in [99, 199, 399] {
        let g = grid(n);
        let s = dirichlet_spectrum(&g, 2).map_err(|e| e.to_string())?;
        let mut e = [0.0; 2];
        for k in 0..2 {
            worst = worst.max(rel(s.eigenvalue(k), closed_form_1d(1.0, n, k + 1)));
            let target = ((k + 1) as f64 * std::f64::consts::PI).powi(2);
            e[k] = (s.eigenvalue(k) - target).abs();
        }
        errs.push(e);
    }
    let orders: Vec<f64> =
        (0..2).flat_map(|k| errs.windows(2).map(move |w| (w[0][k] / w[1][k]).log2()).collect::<Vec<_>>()).collect();
    let in_range = orders.iter().all(|o| (ORDER_RANGE.0..=ORDER_RANGE.1).contains(o));
    check(
        worst <= CLOSED_FORM_REL && in_range,
        format!("max closed-form rel err {worst:.2e}; observed orders {orders:.4?}"),
    )
}

fn c2_monotonicity() -> Outcome {
    let mut specs: Vec<DomainSpec<f64>> = [(0.4, 0.7), (0.25, 0.75), (0.05, 0.95), (0.1, 0.2), (0.45, 0.5), (0.01, 0.99)]
        .iter()
        .map(|&w| DomainSpec::interval(1.0, N, w))
        .collect();
    specs.push(DomainSpec::rectangle((1.0, 1.0), (31, 31), (0.3, 0.7), (0.3, 0.7)));
    specs.push(DomainSpec::rectangle((1.0, 2.0), (31, 63), (0.1, 0.9), (0.2, 1.9)));
    let mut min_gap = f64::INFINITY;
    for s in &specs {
        let th = thresholds(&build_grid(s).unwrap()).map_err(|e| e.to_string())?;
        min_gap = min_gap.min((th.lambda1_omega0 - th.lambda1_omega) / th.lambda1_omega);
    }
    check(min_gap > MONOTONE_STRICT_REL, format!("{} subdomains, min relative gap {min_gap:.3e}", specs.len()))
}

fn c3_identity(lab: &mut Lab) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0_f64;
    let mut counts = Vec::new();
    for lambda in [60.0, 120.0] {
        let p = params(&lab.g, lambda);
        let (mut found, mut draws) = (0, 0);
        while found < IDENTITY_SAMPLES && draws < 100 * IDENTITY_SAMPLES {
            draws += 1;
            let u = smooth_field(&lab.g, &mut rng);
            if let Ok((_, v)) = project_to_nehari(&lab.g, &p, &u) {
                let (i, ca, cb) = nehari_energy_identity(&lab.g, &p, &v).map_err(|e| e.to_string())?;
                lab.audit.see(&classify(&lab.g, &p, &v));
                worst = worst.max(rel(i, ca)).max(rel(i, cb));
                found += 1;
            }
        }
        counts.push((lambda, found, draws));
    }
    check(
        counts.iter().all(|c| c.1 >= IDENTITY_SAMPLES) && worst <= IDENTITY_REL,
        format!("(λ, projected, draws) {counts:?}, max rel deviation {worst:.2e}"),
    )
}

fn c4_projection(lab: &mut Lab) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut projectable, mut mismatches) = (0, 0);
    let mut worst = 0.0_f64;
    for k in 0..PROJECTION_SAMPLES {
        let lambda = [5.0, 20.0, 60.0, 120.0][k % 4];
        let p = params(&lab.g, lambda);
        let u = smooth_field(&lab.g, &mut rng);
        let (a, b) = parts(&lab.g, &p, &u);
        let expect = a < 0.0 && b < 0.0;
        match project_to_nehari(&lab.g, &p, &u) {
            Ok((t, v)) => {
                projectable += 1;
                mismatches += usize::from(!expect);
                let closed = (a / b).powf(1.0 / (NU - 1.0));
                mismatches += usize::from(rel(t, closed) > TURNING_POINT_REL);
                worst = worst.max(nehari_j(&lab.g, &p, &v).abs() / h1_seminorm_sq(&lab.g, &v).max(1.0));
                lab.audit.see(&classify(&lab.g, &p, &v));
            }
            Err(NehariError::NotProjectable { .. }) => mismatches += usize::from(expect),
            Err(e) => return Err(e.to_string()),
        }
    }
    check(
        mismatches == 0 && worst <= PROJECTION_J && projectable > 0,
        format!("{projectable}/{PROJECTION_SAMPLES} projectable, {mismatches} mismatches, max |J(t*u)|/max(1, ‖t*u‖²) {worst:.2e}"),
    )
}

fn c5_regimes(lab: &mut Lab) -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for lambda in [20.0, 60.0] {
        let p = lab.params(lambda).clone();
        let prob = StationaryProblem::new(&lab.g, &p).map_err(|e| e.to_string())?;
        let res = prob.solve_positive(&prob.default_init().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        lab.audit.see(&res.nehari_report);
        let good = res.residual_norm <= STATIONARY_RESIDUAL
            && res.energy < 0.0
            && res.nehari_report.s_class == SClass::SPlus
            && res.field.min_value() > 0.0;
        ok &= good;
        detail.push(format!("λ={lambda}: residual {:.2e}, I {:.4e}", res.residual_norm, res.energy));
        if lambda == 20.0 {
            lab.phi20 = Some(res);
        } else {
            lab.phi60 = Some(res);
        }
    }
    let p = params(&lab.g, 120.0);
    let prob = StationaryProblem::new(&lab.g, &p).map_err(|e| e.to_string())?;
    assert!(120.0 >= prob.thresholds.lambda1_omega0);
    let cfg = ProbeConfig { initializations: NONEXISTENCE_INITS, horizon: NONEXISTENCE_HORIZON, ..ProbeConfig::default() };
    match prob.nonexistence_probe(&cfg) {
        Ok(rep) => {
            ok &= rep.initializations >= NONEXISTENCE_INITS;
            detail.push(format!(
                "λ=120: no positive equilibrium from {} starts, sup L²(Ω₀) {:.3e} over T={NONEXISTENCE_HORIZON}",
                rep.initializations, rep.sup_l2_omega0
            ));
        }
        Err(e) => {
            ok = false;
            detail.push(format!("λ=120: {e}"));
        }
    }
    check(ok, detail.join("; "))
}

fn c6_uniqueness(lab: &mut Lab) -> Outcome {
    let p = lab.p20.clone();
    let phi = lab.phi(20.0).field.clone();
    let prob = StationaryProblem::new(&lab.g, &p).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0_f64;
    let mut exact = true;
    for _ in 0..UNIQUENESS_STARTS {
        let init = prob.random_positive_init(&mut rng);
        let res = prob.solve_positive(&init).map_err(|e| e.to_string())?;
        worst = worst.max(lab.g.l2_norm(&(&res.field - &phi)));
        let neg = prob.solve_signed(&-&init).map_err(|e| e.to_string())?;
        exact &= neg.field == -res.field.clone();
        lab.audit.see(&res.nehari_report);
        lab.audit.see(&neg.nehari_report);
    }
    check(
        worst <= UNIQUENESS_L2 && exact,
        format!("{UNIQUENESS_STARTS} starts, max L² distance to φ {worst:.2e}, negation exact: {exact}"),
    )
}

fn c7_mountain_pass(lab: &mut Lab) -> Outcome {
    let p = lab.p60.clone();
    let phi = lab.phi(60.0).clone();
    let prob = StationaryProblem::new(&lab.g, &p).map_err(|e| e.to_string())?;
    if Regime::classify(60.0, &prob.thresholds) != Regime::MountainPassWindow {
        return Err("λ = 60 is not in the mountain-pass window".into());
    }
    let path = prob.build_mp_path(&phi.field, &PathSpec::default()).map_err(|e| e.to_string())?;
    for v in &path {
        lab.audit.see(&classify(&lab.g, &p, v));
    }
    let mp = prob.mountain_pass(&path, &MountainPassOptions::default()).map_err(|e| e.to_string())?;
    for v in &mp.path {
        lab.audit.see(&classify(&lab.g, &p, v));
    }
    let u = &mp.solution;
    lab.audit.see(&u.nehari_report);
    let ok = u.sign_domains >= 2
        && phi.energy < u.energy
        && u.energy < 0.0
        && u.residual_norm <= MP_RESIDUAL
        && u.morse_index >= 1
        && mp.min_sample_energy >= phi.energy * (1.0 + 1e-12);
    let detail = format!(
        "sign domains {}, I(φ) {:.4e} < I(u*) {:.4e} < 0, residual {:.2e}, Morse {}, {} deformation steps",
        u.sign_domains,
        phi.energy,
        u.energy,
        u.residual_norm,
        u.morse_index,
        mp.trace.len()
    );
    lab.u_star = Some(u.field.clone());
    check(ok, detail)
}

fn c9_bounded(lab: &mut Lab) -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for lambda in [20.0, 60.0] {
        let p = lab.params(lambda).clone();
        let eq = equilibrium_set(&lab.g, &lab.phi(lambda).field, lab.u_star.as_ref().filter(|_| lambda == 60.0));
        let cfg = StepperConfig { horizon: 2.0 * BOUNDED_T, stop_on_classification: false, ..StepperConfig::default() };
        let mut worst = 0.0_f64;
        let mut growing = 0;
        let mut sup_all = 0.0_f64;
        for (k, u0) in random_battery(&lab.g, BATTERY, BATTERY_MAX_H1, 9 + lambda as u64).iter().enumerate() {
            lab.audit.see(&classify(&lab.g, &p, u0));
            let mut sup_t = lab.g.h1_norm(u0);
            let rec = evolve_observed(&lab.g, &p, u0, &cfg, &eq, |_, t, u| {
                if t <= BOUNDED_T * (1.0 + 1e-12) {
                    sup_t = sup_t.max(lab.g.h1_norm(u));
                }
                true
            })
            .map_err(|e| e.to_string())?;
            growing += usize::from(rec.classification == Classification::Growing);
            worst = worst.max(rec.sup_h1 / sup_t - 1.0);
            sup_all = sup_all.max(rec.sup_h1);
            lab.audit.see(&classify(&lab.g, &p, &rec.final_field));
            lab.trajectories.push((format!("bounded λ={lambda} #{k}"), rec));
        }
        ok &= growing == 0 && worst <= DOUBLING_REL && sup_all.is_finite();
        detail.push(format!("λ={lambda}: {growing} growing, sup H¹ {sup_all:.4e}, doubling excess {worst:.2e}"));
    }
    check(ok, detail.join("; "))
}

fn c10_cone(lab: &mut Lab) -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    let cfg = StepperConfig::default();
    for lambda in [20.0, 60.0] {
        let p = lab.params(lambda).clone();
        let eq = equilibrium_set(&lab.g, &lab.phi(lambda).field, None);
        let mut rng = ChaCha8Rng::seed_from_u64(10 + lambda as u64);
        let (mut pos_ok, mut neg_ok, mut kept_sign) = (0, 0, 0);
        for k in 0..CONE_SEEDS {
            let s = positive_field(&lab.g, &mut rng).scaled(0.1 + k as f64);
            for (u0, want) in [(s.clone(), "phi"), (-&s, "-phi")] {
                let rec = evolve(&lab.g, &p, &u0, &cfg, &eq).map_err(|e| e.to_string())?;
                let hit = rec.classification == Classification::Converged(want.into());
                if want == "phi" {
                    pos_ok += usize::from(hit);
                    kept_sign += usize::from(rec.positivity_preserved == Some(true));
                } else {
                    neg_ok += usize::from(hit);
                }
                lab.trajectories.push((format!("cone λ={lambda} {want} #{k}"), rec));
            }
        }
        ok &= pos_ok == CONE_SEEDS && neg_ok == CONE_SEEDS && kept_sign == CONE_SEEDS;
        detail.push(format!("λ={lambda}: {pos_ok}/{CONE_SEEDS} → φ, {neg_ok}/{CONE_SEEDS} → −φ, positivity kept {kept_sign}"));
    }
    check(ok, detail.join("; "))
}

fn c8_lyapunov(lab: &mut Lab) -> Outcome {
    let opts = LyapunovOptions { constant: LYAPUNOV_C, roundoff: LYAPUNOV_ROUNDOFF, ..LyapunovOptions::default() };
    let mut violations = Vec::new();
    let mut max_c = 0.0_f64;
    for (name, rec) in &lab.trajectories {
        match lyapunov_check(rec, &opts) {
            Ok(r) => max_c = max_c.max(r.empirical_c),
            Err(e) => violations.push(format!("{name}: {e}")),
        }
    }
    let mut ratios = Vec::new();
    for lambda in [20.0, 60.0] {
        let p = lab.params(lambda);
        let u0 = nehari_core::random::field_with_h1(&lab.g, &mut ChaCha8Rng::seed_from_u64(8), 5.0);
        let per_step: Vec<f64> = DEFECT_STEPS
            .iter()
            .map(|&dt| {
                let d = dissipation_defects(&lab.g, p, &u0, dt, 0.05, 0.05).unwrap();
                d.iter().map(|x| x.abs()).sum::<f64>() / d.len() as f64
            })
            .collect();
        ratios.extend(per_step.windows(2).map(|w| w[0] / w[1]));
    }
    let ratios_ok = ratios.iter().all(|r| (DEFECT_RATIO_RANGE.0..=DEFECT_RATIO_RANGE.1).contains(r));
    check(
        violations.is_empty() && ratios_ok && !lab.trajectories.is_empty(),
        format!(
            "{} trajectories, {} violations{}; per-step defect ratios under Δt halving {ratios:.3?}; empirical C ≤ {max_c:.3e}",
            lab.trajectories.len(),
            violations.len(),
            violations.first().map_or(String::new(), |v| format!(" (first: {v})"))
        ),
    )
}

fn c11_stable_probe(lab: &mut Lab) -> Outcome {
    let p = lab.p60.clone();
    let u = lab.u_star.clone().ok_or("no mountain-pass solution")?;
    let spec = linearized_spectrum(&lab.g, &p, &u, 8).map_err(|e| e.to_string())?;
    let q = morse_count(&spec).map_err(|e| e.to_string())?;
    let index = (q..spec.len()).find(|&i| lab.g.inner(&u, spec.field(i)).abs() > A_I_FLOOR).ok_or("no stable index with a_i ≠ 0")?;
    let cfg = StepperConfig { horizon: 0.05, ..StepperConfig::default() };
    let probes: Vec<ProbeResult<f64>> = PROBE_EPS
        .iter()
        .map(|&e| stable_probe(&lab.g, &p, &u, &spec, index, e, &cfg))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = probes.windows(2).map(|w| w[0].defect / w[1].defect).collect();
    let ok = ratios.iter().all(|r| (DEFECT_RATIO_RANGE.0..=DEFECT_RATIO_RANGE.1).contains(r));
    check(
        ok,
        format!("q = {q}, index {index} (μ = {:.4e}, a_i = {:.4e}), defect ratios {ratios:.4?}", probes[0].mu, probes[0].a_i),
    )
}

fn c12_no_b_plus(lab: &mut Lab) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for k in 0..SEARCH_DRAWS {
        let lambda = [20.0, 60.0, 120.0][k % 3];
        let p = params(&lab.g, lambda);
        let u = smooth_field(&lab.g, &mut rng).scaled(1.0 + (k % 7) as f64);
        let v = project_to_nehari(&lab.g, &p, &u).map(|(_, v)| v).unwrap_or(u);
        lab.audit.see(&classify(&lab.g, &p, &v));
    }
    let a = &lab.audit;
    check(
        a.b_positive == 0 && a.manifold_b_positive == 0,
        format!("{} reports audited: {} with B > 0, {} manifold points with B > 0", a.reports, a.b_positive, a.manifold_b_positive),
    )
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.insert(p.strip_prefix(dir).unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn c13_reproducible() -> Outcome {
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    let text = "domain.n = [99]\nweight.profile = \"plateau\"\nproblem.lambda = 60.0\nevolve.initial = \"random\"\n\
                evolve.battery = 4\nstepper.horizon = 1.0\n";
    for d in &dirs {
        let cfg = ExperimentConfig::parse(text)
            .and_then(|c| c.with_overrides(&Overrides { out: Some(d.path().to_path_buf()), ..Overrides::default() }))
            .map_err(|e| e.to_string())?;
        for cmd in [Command::Spectrum, Command::Stationary, Command::MountainPass, Command::Evolve, Command::Probe] {
            run(cmd, &cfg).map_err(|e| e.to_string())?;
        }
        let mut sweep = cfg.clone();
        sweep.problem.lambda = nehari_cli::config::LambdaSpec::List(vec![5.0, 20.0, 60.0, 120.0]);
        sweep.output.dir = d.path().join("sweep");
        run(Command::Sweep, &sweep).map_err(|e| e.to_string())?;
    }
    let (a, b) = (snapshot(dirs[0].path()), snapshot(dirs[1].path()));
    let differing: Vec<&String> = a.iter().filter(|(k, v)| b.get(*k) != Some(v)).map(|(k, _)| k).collect();
    check(
        differing.is_empty() && a.len() == b.len() && a.len() >= 20,
        format!("{} CSV files compared, {} differ {:?}", a.len(), differing.len(), differing),
    )
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let start = Instant::now();
    let g = grid(N);
    let mut lab = Lab {
        p20: params(&g, 20.0),
        p60: params(&g, 60.0),
        g,
        phi20: None,
        phi60: None,
        u_star: None,
        trajectories: Vec::new(),
        audit: Audit::default(),
    };
    type Crit = fn(&mut Lab) -> Outcome;
    let order: [(u8, &str, Crit); 13] = [
        (1, "spectral oracle", |_| c1_spectral()),
        (2, "domain monotonicity", |_| c2_monotonicity()),
        (3, "Nehari identity", c3_identity),
        (4, "projection formula", c4_projection),
        (5, "regime dichotomy", c5_regimes),
        (6, "uniqueness and symmetry", c6_uniqueness),
        (7, "mountain pass", c7_mountain_pass),
        (9, "global boundedness", c9_bounded),
        (10, "positive-cone attraction", c10_cone),
        (8, "Lyapunov property", c8_lyapunov),
        (11, "stable-manifold probe", c11_stable_probe),
        (12, "classification sanity", c12_no_b_plus),
        (13, "reproducibility", |_| c13_reproducible()),
    ];
    let mut results = Vec::new();
    for (id, name, f) in order {
        let t0 = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(|| f(&mut lab))).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        eprintln!("criterion {id} done in {:.1}s", t0.elapsed().as_secs_f64());
        results.push((id, name, out));
    }
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (id, name, out) in &results {
        match out {
            Ok(d) => println!("PASS {id:>2} {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {d}");
            }
        }
    }
    println!("{} passed, {failed} failed in {:.1}s", results.len() - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
