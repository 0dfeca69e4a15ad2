//! Subcommands. Each returns the manifest it wrote plus a few summary lines
//! for the terminal.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use nehari_core::domain::Field;
use nehari_core::io::{self as cio, fmt_float};
use nehari_core::nehari::{fiber_scan, NehariReport, ProblemParams};
use nehari_core::parabolic::{
    basin_scan, evolve, lyapunov_check, random_battery, stable_probe, Equilibrium, LyapunovOptions, ProbeResult,
};
use nehari_core::random::field_with_h1;
use nehari_core::spectral::{
    dirichlet_spectrum_with, linearized_spectrum_with, morse_count, subdomain_spectrum_with, thresholds, Regime,
    SpectrumResult, Thresholds,
};
use nehari_core::stationary::{
    equilibrium_set, EquilibriumResult, MountainPassResult, StationaryError, StationaryProblem,
};
use nehari_core::{Field64, Grid64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, InitialPreset};
use crate::manifest::{append_run_index, write_json, RunManifest};
use crate::{plots, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Stationary,
    MountainPass,
    Evolve,
    Probe,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Stationary => "stationary",
            Self::MountainPass => "mountain-pass",
            Self::Evolve => "evolve",
            Self::Probe => "probe",
            Self::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub lines: Vec<String>,
}

/// File name of the stored mountain-pass solution read by `probe`.
pub const U_STAR_FILE: &str = "mountain_pass_field.csv";

pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    if command == Command::Sweep {
        return cmd_sweep(cfg, &dir);
    }
    let lambda = cfg.single_lambda(command.name())?;
    let grid = cfg.grid()?;
    let th = thresholds(&grid)?;
    let mut m = RunManifest::new(command.name(), cfg, lambda, &th);
    let mut ctx = Context { cfg, grid: &grid, th, dir: &dir, lambda, artifacts: Vec::new(), lines: Vec::new() };
    match command {
        Command::Spectrum => ctx.spectrum()?,
        Command::Stationary => ctx.stationary().map(|_| ())?,
        Command::MountainPass => ctx.mountain_pass_cmd()?,
        Command::Evolve => ctx.evolve()?,
        Command::Probe => ctx.probe()?,
        Command::Sweep => unreachable!("handled above"),
    }
    m.artifacts = std::mem::take(&mut ctx.artifacts);
    let lines = std::mem::take(&mut ctx.lines);
    let file = m.write(&dir)?;
    append_run_index(&dir, &m, &file)?;
    Ok(RunReport { manifest: m, lines })
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    grid: &'a Grid64,
    th: Thresholds<f64>,
    dir: &'a Path,
    lambda: f64,
    artifacts: Vec<String>,
    lines: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
struct NehariRecord {
    a: f64,
    b: f64,
    j: f64,
    i: f64,
    nehari_side: String,
    s_class: String,
    l_class: Option<String>,
    b_class: Option<String>,
    projectable: bool,
}

impl From<&NehariReport<f64>> for NehariRecord {
    fn from(r: &NehariReport<f64>) -> Self {
        Self {
            a: r.a,
            b: r.b,
            j: r.j,
            i: r.i,
            nehari_side: r.nehari_side.label().into(),
            s_class: r.s_class.label().into(),
            l_class: r.l_class.map(|c| c.label().into()),
            b_class: r.b_class.map(|c| c.label().into()),
            projectable: r.projectable,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct EquilibriumRecord {
    residual: f64,
    energy: f64,
    morse_index: usize,
    sign_domains: usize,
    iterations: usize,
    min_value: f64,
    max_value: f64,
    nehari: NehariRecord,
}

impl From<&EquilibriumResult<f64>> for EquilibriumRecord {
    fn from(r: &EquilibriumResult<f64>) -> Self {
        Self {
            residual: r.residual_norm,
            energy: r.energy,
            morse_index: r.morse_index,
            sign_domains: r.sign_domains,
            iterations: r.iterations,
            min_value: r.field.min_value(),
            max_value: r.field.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)),
            nehari: (&r.nehari_report).into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct NonexistenceRecord {
    initializations: usize,
    outcomes: Vec<String>,
    sup_l2_omega0: f64,
    strictly_increasing: bool,
    positivity_preserved: bool,
}

#[derive(Debug, Clone, Serialize)]
struct StationarySummary {
    lambda: f64,
    nu: f64,
    regime: String,
    outcome: String,
    phi: Option<EquilibriumRecord>,
    nonexistence: Option<NonexistenceRecord>,
}

/// What the stationary stage found.
enum StationaryOutcome {
    Trivial,
    Positive(EquilibriumResult<f64>),
    NoPositive,
}

impl<'a> Context<'a> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let p = self.path(name);
        File::create(&p).map(BufWriter::new).map_err(|e| CliError::io(&p, e))
    }

    fn field_csv(&mut self, name: &str, u: &Field64) -> Result<(), CliError> {
        cio::write_field(self.grid, u, self.create(name)?)?;
        self.artifacts.push(name.into());
        Ok(())
    }

    fn spectrum_csv(&mut self, name: &str, s: &SpectrumResult<f64>) -> Result<(), CliError> {
        cio::write_spectrum(s, self.create(name)?)?;
        self.artifacts.push(name.into());
        Ok(())
    }

    fn json<S: Serialize>(&mut self, name: &str, v: &S) -> Result<(), CliError> {
        write_json(&self.path(name), v)?;
        self.artifacts.push(name.into());
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let p = self.path(name);
        std::fs::write(&p, body).map_err(|e| CliError::io(&p, e))?;
        self.artifacts.push(name.into());
        Ok(())
    }

    fn regime(&self) -> Regime {
        Regime::classify(self.lambda, &self.th)
    }

    fn mismatch(&self, command: &str, required: &str) -> CliError {
        CliError::RegimeMismatch {
            command: command.into(),
            required: required.into(),
            regime: self.regime().label().into(),
            lambda: self.lambda,
        }
    }

    fn params(&self) -> Result<ProblemParams<f64>, CliError> {
        self.cfg.params(self.grid, self.lambda)
    }

    fn problem<'p>(&'p self, params: &'p ProblemParams<f64>) -> StationaryProblem<'p, f64> {
        StationaryProblem::with_thresholds(self.grid, params, self.th).with_newton(self.cfg.newton_options())
    }

    fn spectrum(&mut self) -> Result<(), CliError> {
        let k = self.cfg.solver.eigenpairs.min(self.grid.len());
        let opts = self.cfg.eigen_options();
        let om = dirichlet_spectrum_with(self.grid, k, &opts)?;
        let om0 = subdomain_spectrum_with(self.grid, k.min(self.grid.omega0_count()), &opts)?;
        self.spectrum_csv("spectrum_omega.csv", &om)?;
        self.spectrum_csv("spectrum_omega0.csv", &om0)?;
        for i in 0..om.len() {
            self.field_csv(&format!("eigenfield_omega_{}.csv", i + 1), om.field(i))?;
        }
        for i in 0..om0.len() {
            self.field_csv(&format!("eigenfield_omega0_{}.csv", i + 1), om0.field(i))?;
        }
        self.lines.push(format!("lambda1(omega)  = {}", fmt_float(self.th.lambda1_omega)));
        self.lines.push(format!("lambda2(omega)  = {}", fmt_float(self.th.lambda2_omega)));
        self.lines.push(format!("lambda1(omega0) = {}", fmt_float(self.th.lambda1_omega0)));
        self.lines.push(format!("regime          = {}", self.regime().label()));
        Ok(())
    }

    /// Positive solve in the admissible regime, trivial solve below it and the
    /// nonexistence probe above it.
    fn stationary(&mut self) -> Result<StationaryOutcome, CliError> {
        let params = self.params()?;
        let regime = self.regime();
        let (outcome, summary) = {
            let prob = self.problem(&params);
            let init = prob.default_init()?;
            match regime {
                Regime::Subcritical => match prob.solve_positive_forced(&init) {
                    Err(StationaryError::ConvergedToZero { .. }) => (StationaryOutcome::Trivial, None),
                    Ok(res) => (StationaryOutcome::Positive(res), None),
                    Err(e) => return Err(e.into()),
                },
                Regime::Admissible | Regime::MountainPassWindow => {
                    (StationaryOutcome::Positive(prob.solve_positive(&init)?), None)
                }
                Regime::Supercritical => {
                    let rep = prob.nonexistence_probe(&self.cfg.nonexistence_config())?;
                    let rec = NonexistenceRecord {
                        initializations: rep.initializations,
                        outcomes: rep.outcomes.clone(),
                        sup_l2_omega0: rep.sup_l2_omega0,
                        strictly_increasing: rep.strictly_increasing,
                        positivity_preserved: rep.positivity_preserved,
                    };
                    (StationaryOutcome::NoPositive, Some((rec, rep.l2_omega0)))
                }
            }
        };
        let (label, phi) = match &outcome {
            StationaryOutcome::Trivial => ("trivial", None),
            StationaryOutcome::Positive(r) => ("positive", Some(r)),
            StationaryOutcome::NoPositive => ("no-positive", None),
        };
        if let Some(r) = phi {
            self.field_csv("phi.csv", &r.field)?;
            let ts: Vec<f64> = (1..=60).map(|k| k as f64 * 0.05).collect();
            let fib = fiber_scan(self.grid, &params, &r.field, &ts).map_err(StationaryError::from)?;
            cio::write_fiber(&fib, self.create("fiber_phi.csv")?)?;
            self.artifacts.push("fiber_phi.csv".into());
            let script = plots::fibering_map(self.dir, "fiber_phi.csv")?;
            self.artifacts.push(script);
            self.lines.push(format!("I(phi) = {}  residual = {}", fmt_float(r.energy), fmt_float(r.residual_norm)));
        }
        if let Some((_, series)) = &summary {
            let mut body = String::from("t,l2_omega0\n");
            for (t, v) in series {
                body.push_str(&format!("{},{}\n", fmt_float(*t), fmt_float(*v)));
            }
            self.text("nonexistence_l2_omega0.csv", &body)?;
        }
        self.lines.push(format!("outcome = {label}"));
        let s = StationarySummary {
            lambda: self.lambda,
            nu: self.cfg.problem.nu,
            regime: regime.label().into(),
            outcome: label.into(),
            phi: phi.map(Into::into),
            nonexistence: summary.map(|(r, _)| r),
        };
        self.json("stationary_summary.json", &s)?;
        Ok(outcome)
    }

    fn mountain_pass_cmd(&mut self) -> Result<(), CliError> {
        if self.regime() != Regime::MountainPassWindow {
            return Err(self.mismatch("mountain-pass", Regime::MountainPassWindow.label()));
        }
        self.mountain_pass().map(|_| ())
    }

    fn mountain_pass(&mut self) -> Result<(EquilibriumResult<f64>, MountainPassResult<f64>), CliError> {
        let params = self.params()?;
        let (phi, initial, mp) = {
            let prob = self.problem(&params);
            let phi = prob.solve_positive(&prob.default_init()?)?;
            let path = prob.build_mp_path(&phi.field, &self.cfg.path_spec())?;
            let initial: Vec<f64> = path.iter().map(|v| nehari_core::nehari::energy(self.grid, &params, v)).collect();
            let mp = prob.mountain_pass(&path, &self.cfg.mountain_pass_options())?;
            (phi, initial, mp)
        };
        self.field_csv("phi.csv", &phi.field)?;
        cio::write_path_energies(&initial, self.create("path_initial_energies.csv")?)?;
        cio::write_path_energies(&mp.path_energies, self.create("path_final_energies.csv")?)?;
        self.artifacts.push("path_initial_energies.csv".into());
        self.artifacts.push("path_final_energies.csv".into());
        let s1 = plots::path_profile(self.dir, "path_initial_energies.csv", "plot_path_initial.py")?;
        let s2 = plots::path_profile(self.dir, "path_final_energies.csv", "plot_path_final.py")?;
        self.artifacts.extend([s1, s2]);
        self.field_csv(U_STAR_FILE, &mp.solution.field)?;
        let mut trace = String::from("iteration,max_index,max_energy,grad_norm\n");
        for t in &mp.trace {
            trace.push_str(&format!("{},{},{},{}\n", t.iteration, t.max_index, fmt_float(t.max_energy), fmt_float(t.grad_norm)));
        }
        self.text("deformation_trace.csv", &trace)?;
        #[derive(Serialize)]
        struct MpSummary {
            lambda: f64,
            phi_energy: f64,
            path_max_initial: f64,
            iterations: usize,
            u_star: EquilibriumRecord,
        }
        let s = MpSummary {
            lambda: self.lambda,
            phi_energy: phi.energy,
            path_max_initial: initial.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)),
            iterations: mp.trace.len(),
            u_star: (&mp.solution).into(),
        };
        self.json("mountain_pass_summary.json", &s)?;
        self.lines.push(format!(
            "I(phi) = {}  I(u*) = {}  sign domains = {}  Morse = {}",
            fmt_float(phi.energy),
            fmt_float(mp.solution.energy),
            mp.solution.sign_domains,
            mp.solution.morse_index
        ));
        Ok((phi, mp))
    }

    /// `{0}` plus `±φ` when a positive equilibrium exists.
    fn equilibria(&self, params: &ProblemParams<f64>) -> Result<(Vec<Equilibrium<f64>>, Option<Field64>), CliError> {
        if !self.regime().is_admissible() {
            return Ok((vec![Equilibrium::new("0", Field::zeros(self.grid))], None));
        }
        let prob = self.problem(params);
        let phi = prob.solve_positive(&prob.default_init()?)?.field;
        Ok((equilibrium_set(self.grid, &phi, None), Some(phi)))
    }

    fn initial_field(&self, preset: InitialPreset) -> Result<Field64, CliError> {
        let e = &self.cfg.evolve;
        Ok(match preset {
            InitialPreset::PositiveEigen | InitialPreset::NegativeEigen => {
                let s = dirichlet_spectrum_with(self.grid, 1, &self.cfg.eigen_options())?;
                let sign = if preset == InitialPreset::PositiveEigen { 1.0 } else { -1.0 };
                s.field(0).scaled(sign * e.amplitude)
            }
            InitialPreset::Random => field_with_h1(self.grid, &mut ChaCha8Rng::seed_from_u64(self.cfg.seed), e.random_h1),
            InitialPreset::Zero => Field::zeros(self.grid),
        })
    }

    fn evolve(&mut self) -> Result<(), CliError> {
        let params = self.params()?;
        let (eq, _) = self.equilibria(&params)?;
        let u0 = self.initial_field(self.cfg.evolve.initial)?;
        let step_cfg = self.cfg.stepper_config();
        let rec = evolve(self.grid, &params, &u0, &step_cfg, &eq)?;
        cio::write_trajectory(&rec, self.create("trajectory.csv")?)?;
        self.artifacts.push("trajectory.csv".into());
        let script = plots::energy_vs_time(self.dir, "trajectory.csv")?;
        self.artifacts.push(script);
        self.field_csv("final_field.csv", &rec.final_field)?;
        let lyap = lyapunov_check(&rec, &LyapunovOptions::default());
        #[derive(Serialize)]
        struct LyapunovRecord {
            monotone: bool,
            max_increment: Option<f64>,
            empirical_c: Option<f64>,
            violations: Vec<usize>,
        }
        let lyap = match lyap {
            Ok(r) => LyapunovRecord {
                monotone: true,
                max_increment: Some(r.max_increment),
                empirical_c: Some(r.empirical_c),
                violations: vec![],
            },
            Err(nehari_core::parabolic::ParabolicError::MonotonicityViolation { steps }) => {
                LyapunovRecord { monotone: false, max_increment: None, empirical_c: None, violations: steps }
            }
            Err(nehari_core::parabolic::ParabolicError::TooFewSamples(_)) => {
                LyapunovRecord { monotone: true, max_increment: None, empirical_c: None, violations: vec![] }
            }
            Err(e) => return Err(e.into()),
        };
        let mut basin = None;
        if self.cfg.evolve.battery > 0 {
            let seeds = random_battery(self.grid, self.cfg.evolve.battery, self.cfg.evolve.battery_max_h1, self.cfg.seed);
            let rows = basin_scan(self.grid, &params, &seeds, &step_cfg, &eq)?;
            cio::write_basin(&rows, self.create("basin.csv")?)?;
            self.artifacts.push("basin.csv".into());
            basin = Some(rows.iter().map(|r| r.classification.label()).collect::<Vec<_>>());
        }
        #[derive(Serialize)]
        struct EvolveSummary {
            lambda: f64,
            initial: String,
            classification: String,
            final_time: f64,
            steps: usize,
            final_energy: f64,
            final_residual: f64,
            sup_h1: f64,
            positivity_preserved: Option<bool>,
            lyapunov: LyapunovRecord,
            basin: Option<Vec<String>>,
        }
        let s = EvolveSummary {
            lambda: self.lambda,
            initial: self.cfg.evolve.initial.label().into(),
            classification: rec.classification.label(),
            final_time: rec.final_time(),
            steps: rec.steps,
            final_energy: rec.samples.last().map_or(f64::NAN, |s| s.energy),
            final_residual: rec.final_residual,
            sup_h1: rec.sup_h1,
            positivity_preserved: rec.positivity_preserved,
            lyapunov: lyap,
            basin,
        };
        self.lines.push(format!("classification = {}  t = {}", s.classification, fmt_float(s.final_time)));
        self.json("evolve_summary.json", &s)?;
        Ok(())
    }

    fn probe(&mut self) -> Result<(), CliError> {
        if self.regime() != Regime::MountainPassWindow {
            return Err(self.mismatch("probe", Regime::MountainPassWindow.label()));
        }
        let stored = self.path(U_STAR_FILE);
        if !stored.is_file() {
            return Err(CliError::MissingArtifact(stored));
        }
        let u_star = cio::read_field(self.grid, File::open(&stored).map_err(|e| CliError::io(&stored, e))?)?;
        let params = self.params()?;
        let k = self.cfg.solver.eigenpairs.min(self.grid.len());
        let spec = linearized_spectrum_with(self.grid, &params, &u_star, k, &self.cfg.eigen_options())?;
        self.spectrum_csv("linearized_spectrum.csv", &spec)?;
        let q = morse_count(&spec)?;
        let index = match self.cfg.probe.index {
            Some(i) => i,
            None => (q..spec.len())
                .find(|&i| self.grid.inner(&u_star, spec.field(i)).abs() > 1e-8)
                .ok_or(nehari_core::parabolic::ParabolicError::NoUnstableEigenvalueComputed)?,
        };
        let dwell_cfg = nehari_core::parabolic::StepperConfig { horizon: self.cfg.probe.dwell_horizon, ..self.cfg.stepper_config() };
        let probes: Vec<ProbeResult<f64>> = self
            .cfg
            .probe
            .epsilons
            .iter()
            .map(|&e| stable_probe(self.grid, &params, &u_star, &spec, index, e, &dwell_cfg))
            .collect::<Result<_, _>>()?;
        let mut body = String::from("epsilon,index,mu,a_i,prediction,measured,defect,dwell_time,dwell_radius\n");
        for p in &probes {
            body.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                fmt_float(p.epsilon),
                p.index,
                fmt_float(p.mu),
                fmt_float(p.a_i),
                fmt_float(p.prediction),
                fmt_float(p.measured),
                fmt_float(p.defect),
                fmt_float(p.dwell_time),
                fmt_float(p.dwell_radius)
            ));
        }
        self.text("stable_probe.csv", &body)?;
        let ratios: Vec<f64> = probes.windows(2).map(|w| w[0].defect / w[1].defect).collect();
        // departure along the unstable direction, both ways
        let (mut eq, _) = self.equilibria(&params)?;
        eq.push(Equilibrium::new("u*", u_star.clone()));
        eq.push(Equilibrium::new("-u*", -&u_star));
        let eps = self.cfg.probe.epsilons[0];
        let seeds = vec![u_star.add_scaled(eps, spec.field(0)), u_star.add_scaled(-eps, spec.field(0))];
        let rows = basin_scan(self.grid, &params, &seeds, &self.cfg.stepper_config(), &eq)?;
        #[derive(Serialize)]
        struct ProbeSummary {
            lambda: f64,
            morse_count: usize,
            index: usize,
            mu: f64,
            a_i: f64,
            defect_ratios: Vec<f64>,
            unstable_departure: Vec<String>,
        }
        let s = ProbeSummary {
            lambda: self.lambda,
            morse_count: q,
            index,
            mu: probes[0].mu,
            a_i: probes[0].a_i,
            defect_ratios: ratios.clone(),
            unstable_departure: rows.iter().map(|r| r.classification.label()).collect(),
        };
        self.lines.push(format!("Morse count = {q}  index = {index}  defect ratios = {ratios:?}"));
        self.json("probe_summary.json", &s)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    lambda: f64,
    regime: String,
    outcome: String,
    subdir: String,
    phi_energy: Option<f64>,
    u_star_energy: Option<f64>,
}

fn sweep_item(cfg: &ExperimentConfig, dir: &Path, lambda: f64, subdir: &str) -> Result<(SweepRow, RunManifest), CliError> {
    let sub = dir.join(subdir);
    std::fs::create_dir_all(&sub).map_err(|e| CliError::io(&sub, e))?;
    let mut item_cfg = cfg.clone();
    item_cfg.problem.lambda = crate::config::LambdaSpec::Single(lambda);
    item_cfg.output.dir = sub.clone();
    let grid = item_cfg.grid()?;
    let th = thresholds(&grid)?;
    let mut m = RunManifest::new("stationary", &item_cfg, lambda, &th);
    let mut ctx = Context { cfg: &item_cfg, grid: &grid, th, dir: &sub, lambda, artifacts: Vec::new(), lines: Vec::new() };
    let outcome = ctx.stationary()?;
    let regime = ctx.regime();
    let (label, phi_energy, u_star_energy) = match outcome {
        StationaryOutcome::Trivial => ("trivial-only", None, None),
        StationaryOutcome::NoPositive => ("no-positive", None, None),
        StationaryOutcome::Positive(phi) if regime == Regime::MountainPassWindow => {
            let (_, mp) = ctx.mountain_pass()?;
            let sign_changing = mp.solution.sign_domains >= 2;
            (if sign_changing { "positive+sign-changing" } else { "positive" }, Some(phi.energy), Some(mp.solution.energy))
        }
        StationaryOutcome::Positive(phi) => ("positive", Some(phi.energy), None),
    };
    m.artifacts = std::mem::take(&mut ctx.artifacts);
    m.write(&sub)?;
    let row = SweepRow {
        lambda,
        regime: regime.label().into(),
        outcome: label.into(),
        subdir: subdir.into(),
        phi_energy,
        u_star_energy,
    };
    Ok((row, m))
}

fn cmd_sweep(cfg: &ExperimentConfig, dir: &Path) -> Result<RunReport, CliError> {
    let lambdas = cfg.problem.lambda.values();
    let names: Vec<String> = lambdas.iter().enumerate().map(|(i, l)| format!("lambda_{i:02}_{l}")).collect();
    let results: Vec<(SweepRow, RunManifest)> = lambdas
        .par_iter()
        .zip(names.par_iter())
        .map(|(&l, name)| sweep_item(cfg, dir, l, name))
        .collect::<Result<_, _>>()?;
    // single writer for the shared index
    for (row, m) in &results {
        append_run_index(dir, m, &format!("{}/manifest_stationary.json", row.subdir))?;
    }
    let mut body = String::from("lambda,regime,outcome,phi_energy,u_star_energy,subdir\n");
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), fmt_float);
    let mut lines = Vec::new();
    for (row, _) in &results {
        body.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_float(row.lambda),
            row.regime,
            row.outcome,
            opt(row.phi_energy),
            opt(row.u_star_energy),
            row.subdir
        ));
        lines.push(format!("lambda = {:<8} {:<22} {}", row.lambda, row.regime, row.outcome));
    }
    let sweep_csv = dir.join("sweep.csv");
    std::fs::write(&sweep_csv, body).map_err(|e| CliError::io(&sweep_csv, e))?;
    let grid = cfg.grid()?;
    let th = thresholds(&grid)?;
    let mut m = RunManifest::new("sweep", cfg, lambdas[0], &th);
    m.regime = "sweep".into();
    m.admissible = false;
    m.artifacts.push("sweep.csv".into());
    m.artifacts.extend(results.iter().map(|(r, _)| format!("{}/manifest_stationary.json", r.subdir)));
    let file = m.write(dir)?;
    append_run_index(dir, &m, &file)?;
    Ok(RunReport { manifest: m, lines })
}
