//! The six scenarios. Each returns a [`Report`] of tolerance checks plus
//! telemetry; nothing here reads the clock, so output depends only on the
//! configuration.

use std::fmt::Write as _;
use std::fs;

use palatini_core::algebra::{build_algebra, AlgebraKind, LieAlgebraSpec};
use palatini_core::dynamics::{
    action_ym, boundary_hamiltonian, evolution_rhs, evolve, flat_vacuum, fundamental_check, lambda_sweep,
    random_bulk_pair, EvolutionRecord, Projection,
};
use palatini_core::fields::{n_pairs, random_state, Block, BoundaryState};
use palatini_core::lattice::LatticeField;
use palatini_core::mesh::CollarMesh;
use palatini_core::pca::{free_particle, pca_run, project_constraints, regular_model, two_level_model, ModelSystem};
use palatini_core::reduction::{
    abelian_solution_variations, coisotropy_check, gauge_transform_bulk, hamiltonian_action_check, isotropy_check, moment_map,
    omega_matrix, GaugeElement,
};
use palatini_core::rng::Rng;
use serde::Serialize;

use crate::config::{RunConfig, Scenario};
use crate::io::{emit_plotdata, format_algebra, telemetry_lines, write_snapshot, Telemetry};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub check: String,
    pub value: f64,
    pub limit: f64,
    pub op: &'static str,
    pub pass: bool,
}

impl Check {
    /// Passes when `value < limit`; NaN fails.
    pub fn below(name: &str, value: f64, limit: f64) -> Check {
        Check { check: name.into(), value, limit, op: "<", pass: value < limit }
    }

    pub fn equals(name: &str, value: usize, want: usize) -> Check {
        Check { check: name.into(), value: value as f64, limit: want as f64, op: "==", pass: value == want }
    }

    pub fn holds(name: &str, ok: bool) -> Check {
        Check::equals(name, ok as usize, 1)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub telemetry: String,
    pub plotdata: Option<String>,
    pub snapshot: Option<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn summary(&self, cfg: &RunConfig) -> String {
        let mut s = String::new();
        writeln!(s, "scenario {}", cfg.scenario).unwrap();
        writeln!(s, "algebra {}", format_algebra(cfg.algebra)).unwrap();
        writeln!(s, "mesh d={} sites={} h={} n_t={} dt={}", cfg.d, cfg.sites, cfg.h, cfg.n_t, cfg.dt).unwrap();
        writeln!(s, "seed {}", cfg.seed).unwrap();
        for n in &self.notes {
            writeln!(s, "note {n}").unwrap();
        }
        for c in &self.checks {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            if c.op == "<" {
                writeln!(s, "{verdict} {} {:.6e} < {:.3e}", c.check, c.value, c.limit).unwrap();
            } else {
                writeln!(s, "{verdict} {} {} == {}", c.check, c.value, c.limit).unwrap();
            }
        }
        writeln!(s, "result {}", if self.passed() { "PASS" } else { "FAIL" }).unwrap();
        s
    }
}

fn setup(cfg: &RunConfig) -> Result<(CollarMesh, LieAlgebraSpec), CliError> {
    let mesh = CollarMesh::uniform(cfg.d, cfg.sites, cfg.h, cfg.n_t, cfg.dt)?;
    Ok((mesh, build_algebra(cfg.algebra)?))
}

fn frame_compatible(cfg: &RunConfig, spec: &LieAlgebraSpec) -> bool {
    spec.dim == n_pairs(cfg.d + 1)
}

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    match cfg.scenario {
        Scenario::YmEvolve => ym_evolve(cfg),
        Scenario::PalatiniEvolve => palatini_evolve(cfg),
        Scenario::PcaAnalyze => pca_analyze(cfg),
        Scenario::CheckInvariants => check_invariants(cfg),
        Scenario::LambdaSweep => sweep(cfg),
        Scenario::ReductionReport => reduction_report(cfg),
    }
}

/// Writes `summary.txt`, `telemetry.jsonl` and, when present, `plot.csv`
/// and `snapshot.txt` under `cfg.out`.
pub fn write_artifacts(cfg: &RunConfig, report: &Report) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("summary.txt"), report.summary(cfg))?;
    fs::write(cfg.out.join("telemetry.jsonl"), &report.telemetry)?;
    if let Some(p) = &report.plotdata {
        fs::write(cfg.out.join("plot.csv"), p)?;
    }
    if let Some(s) = &report.snapshot {
        fs::write(cfg.out.join("snapshot.txt"), s)?;
    }
    Ok(())
}

fn require_frames(cfg: &RunConfig, spec: &LieAlgebraSpec) -> Result<(), CliError> {
    if frame_compatible(cfg, spec) {
        Ok(())
    } else {
        Err(CliError::Config {
            field: "algebra.kind".into(),
            message: format!("{} has dimension {}, boundary evolution in d={} needs {}", spec.kind.name(), spec.dim, cfg.d, n_pairs(cfg.d + 1)),
        })
    }
}

fn evolution_report(mesh: &CollarMesh, cfg: &RunConfig, records: &[EvolutionRecord]) -> Result<Report, CliError> {
    let last = &records.last().expect("evolve returns the initial record").state;
    let fields: Vec<(&str, &LatticeField)> = vec![("a", &last.a), ("a0", &last.a0), ("p", &last.p), ("beta", &last.beta)];
    Ok(Report {
        telemetry: telemetry_lines(&records.iter().map(Telemetry::from).collect::<Vec<_>>()),
        plotdata: Some(emit_plotdata(records)?),
        snapshot: Some(write_snapshot(mesh, cfg.algebra, last.a.dim, &fields)),
        ..Default::default()
    })
}

fn ym_evolve(cfg: &RunConfig) -> Result<Report, CliError> {
    let (mesh, spec) = setup(cfg)?;
    require_frames(cfg, &spec)?;
    let st = random_state(cfg.seed, &mesh, &spec, cfg.amplitude)?;
    let recs = evolve(&mesh, &spec, &st, cfg.steps, cfg.step_dt, None)?;
    let h0 = recs[0].hamiltonian;
    let drift = recs.iter().map(|r| (r.hamiltonian - h0).abs()).fold(0.0, f64::max) / h0.abs().max(1.0);
    let mut rep = evolution_report(&mesh, cfg, &recs)?;
    rep.checks.push(Check::below("hamiltonian_drift", drift, cfg.tol));
    Ok(rep)
}

fn palatini_evolve(cfg: &RunConfig) -> Result<Report, CliError> {
    let (mesh, spec) = setup(cfg)?;
    require_frames(cfg, &spec)?;
    let vac = flat_vacuum(&mesh, &spec)?;
    let mut rep;
    if cfg.perturbation > 0.0 {
        let mut rng = Rng::new(cfg.seed);
        let mut x = vac.pack();
        x.iter_mut().for_each(|v| *v += cfg.perturbation * rng.symmetric());
        let mut st = vac.clone();
        st.unpack(&x)?;
        let start = project_constraints(&mesh, &spec, &st, cfg.tol, 50)?;
        let proj = Projection { tol: cfg.tol, max_iter: 50 };
        let recs = evolve(&mesh, &spec, &start, cfg.steps, cfg.step_dt, Some(proj))?;
        rep = evolution_report(&mesh, cfg, &recs)?;
        rep.notes.push(format!("perturbation {} projected after every step", cfg.perturbation));
        let worst = recs.iter().map(|r| r.residuals.max()).fold(0.0, f64::max);
        rep.checks.push(Check::below("max_residual", worst, cfg.tol));
    } else {
        let recs = evolve(&mesh, &spec, &vac, cfg.steps, cfg.step_dt, None)?;
        rep = evolution_report(&mesh, cfg, &recs)?;
        let worst = recs.iter().map(|r| r.residuals.max()).fold(0.0, f64::max);
        let drift = recs.iter().map(|r| max_diff(&r.state, &vac)).fold(0.0, f64::max);
        rep.checks.push(Check::below("max_residual", worst, cfg.tol));
        rep.checks.push(Check::below("vacuum_drift", drift, cfg.tol));
    }
    Ok(rep)
}

fn max_diff(a: &BoundaryState, b: &BoundaryState) -> f64 {
    a.pack().iter().zip(b.pack()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[derive(Serialize)]
struct PcaLine {
    model: &'static str,
    level: usize,
    dimension: usize,
    constraint_count: usize,
    kernel_dim: usize,
}

fn pca_analyze(cfg: &RunConfig) -> Result<Report, CliError> {
    let models: [(&str, ModelSystem, usize, usize); 3] =
        [("free-particle", free_particle(), 2, 0), ("regular", regular_model(), 3, 1), ("two-level", two_level_model(), 3, 2)];
    let mut rng = Rng::new(cfg.seed);
    let mut rep = Report::default();
    let mut lines = Vec::new();
    for (name, sys, dim, expected) in models {
        let seed: Vec<f64> = (0..dim).map(|_| rng.symmetric()).collect();
        let r = pca_run(&sys, &seed, 6, cfg.tol)?;
        rep.checks.push(Check::equals(&format!("{name}_levels"), r.constraint_levels, expected));
        rep.checks.push(Check::holds(&format!("{name}_stabilized"), r.stabilized));
        if name == "regular" {
            rep.checks.push(Check::equals("regular_final_kernel", r.final_kernel_dim, 0));
        }
        for (level, l) in r.levels.iter().enumerate() {
            rep.notes.push(format!(
                "{name} level {level}: dimension {} constraints {} kernel {}",
                l.dimension, l.constraint_count, l.kernel_dim
            ));
            lines.push(PcaLine { model: name, level, dimension: l.dimension, constraint_count: l.constraint_count, kernel_dim: l.kernel_dim });
        }
    }
    rep.telemetry = telemetry_lines(&lines);
    Ok(rep)
}

fn random_field(rng: &mut Rng, n: usize, comps: usize, dim: usize) -> LatticeField {
    LatticeField::from_fn(n, comps, dim, |_, _, _| rng.symmetric())
}

fn check_invariants(cfg: &RunConfig) -> Result<Report, CliError> {
    let (mesh, spec) = setup(cfg)?;
    let mut rep = Report::default();
    let tol = cfg.tol;
    rep.checks.push(Check::below("jacobi", spec.jacobi_residual(), tol));
    rep.checks.push(Check::below("ad_invariance", spec.ad_invariance_residual(), tol));

    let n = mesh.n_sites();
    let mut rng = Rng::new(cfg.seed);
    let (mut adj, mut mm) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let a = random_field(&mut rng, n, cfg.d, spec.dim);
        let p = random_field(&mut rng, n, cfg.d, spec.dim);
        let xi = random_field(&mut rng, n, 1, spec.dim);
        let lhs = mesh.pairing(&spec, &p, &mesh.d_a(&spec, &a, &xi)?)?;
        let rhs = -mesh.pairing(&spec, &mesh.d_a_star(&spec, &a, &p)?, &xi)?;
        adj = adj.max((lhs - rhs).abs() / lhs.abs().max(1.0));
        let j = mesh.pairing(&spec, &moment_map(&mesh, &spec, &a, &p)?, &xi)?;
        mm = mm.max((j - lhs).abs() / lhs.abs().max(1.0));
    }
    rep.checks.push(Check::below("adjointness", adj, tol));
    rep.checks.push(Check::below("moment_map_identity", mm, tol));

    let mut fund = 0.0f64;
    for i in 0..5 {
        let (chi, u) = random_bulk_pair(&mesh, &spec, cfg.seed.wrapping_add(i), cfg.amplitude)?;
        fund = fund.max(fundamental_check(&mesh, &spec, &chi, &u, 1.0)?.relative_gap());
    }
    rep.checks.push(Check::below("fundamental_formula", fund, tol));

    let a = random_field(&mut rng, n, cfg.d, spec.dim);
    let p = random_field(&mut rng, n, cfg.d, spec.dim);
    let xi = random_field(&mut rng, n, 1, spec.dim);
    let act = hamiltonian_action_check(&mesh, &spec, &a, &p, &xi, 1e-5, 5, cfg.seed)?;
    rep.checks.push(Check::below("hamiltonian_action", act.max_relative_gap, tol));

    if frame_compatible(cfg, &spec) {
        let st = random_state(cfg.seed, &mesh, &spec, cfg.amplitude)?;
        rep.checks.push(Check::below("variational_consistency", variational_gap(&mesh, &spec, &st)?, tol));
    } else {
        rep.notes.push(format!("variational consistency skipped: {} carries no frame terms in d={}", spec.kind.name(), cfg.d));
    }
    rep.telemetry = telemetry_lines(&rep.checks);
    Ok(rep)
}

/// Relative gap between the closed-form `(adot, pdot)` and Hamilton's
/// equations with finite-difference gradients of the boundary Hamiltonian.
pub fn variational_gap(mesh: &CollarMesh, spec: &LieAlgebraSpec, st: &BoundaryState) -> Result<f64, CliError> {
    let h = 1e-6;
    let (adot, pdot) = evolution_rhs(mesh, spec, st)?;
    let x = st.pack();
    let mut s = st.clone();
    let mut ham = |y: &[f64]| -> Result<f64, CliError> {
        s.unpack(y)?;
        Ok(boundary_hamiltonian(mesh, spec, &s)?)
    };
    let vol = mesh.cell_volume();
    let mut num = 0.0;
    for (b, closed, sign) in [(Block::P, &adot, 1.0), (Block::A, &pdot, -1.0)] {
        let mut grad = Vec::new();
        for idx in st.block_range(b) {
            let mut y = x.clone();
            y[idx] = x[idx] + h;
            let hp = ham(&y)?;
            y[idx] = x[idx] - h;
            grad.push((hp - ham(&y)?) / (2.0 * h));
        }
        for (c, want) in grad.chunks(spec.dim).zip(closed.data.chunks(spec.dim)) {
            for (g, w) in spec.raise(c).iter().zip(want) {
                num += (sign * g / vol - w).powi(2);
            }
        }
    }
    let den: f64 = adot.data.iter().chain(&pdot.data).map(|v| v * v).sum();
    Ok((num / den.max(f64::MIN_POSITIVE)).sqrt())
}

#[derive(Serialize)]
struct SweepLine {
    lambda: f64,
    flatness: f64,
    gauss: f64,
}

fn sweep(cfg: &RunConfig) -> Result<Report, CliError> {
    let (mesh, spec) = setup(cfg)?;
    let (diags, sf, sg) = lambda_sweep(&mesh, &spec, cfg.seed, &cfg.lambdas, cfg.amplitude)?;
    let mut order: Vec<usize> = (0..diags.len()).collect();
    order.sort_by(|&i, &j| cfg.lambdas[j].total_cmp(&cfg.lambdas[i]));
    let monotone = order.windows(2).all(|w| diags[w[1]].flatness < diags[w[0]].flatness && diags[w[1]].gauss < diags[w[0]].gauss);
    let mut rep = Report::default();
    rep.checks.push(Check::holds("monotone_decrease", monotone));
    rep.checks.push(Check::below("flatness_slope_minus_1", (sf - 1.0).abs(), cfg.tol));
    rep.checks.push(Check::below("gauss_slope_minus_1", (sg - 1.0).abs(), cfg.tol));
    rep.notes.push(format!("fitted slopes flatness {sf:.6} gauss {sg:.6}"));
    rep.telemetry = telemetry_lines(&diags.iter().map(|d| SweepLine { lambda: d.lambda, flatness: d.flatness, gauss: d.gauss }).collect::<Vec<_>>());
    Ok(rep)
}

fn reduction_report(cfg: &RunConfig) -> Result<Report, CliError> {
    let (mesh, spec) = setup(cfg)?;
    let mut rep = Report::default();
    let n = mesh.n_sites();
    let mut rng = Rng::new(cfg.seed);

    let a = random_field(&mut rng, n, cfg.d, spec.dim);
    let p = random_field(&mut rng, n, cfg.d, spec.dim);
    let xi = random_field(&mut rng, n, 1, spec.dim);
    let act = hamiltonian_action_check(&mesh, &spec, &a, &p, &xi, 1e-5, 5, cfg.seed)?;
    rep.checks.push(Check::below("hamiltonian_action", act.max_relative_gap, 1e-6));

    let (chi, _) = random_bulk_pair(&mesh, &spec, cfg.seed, cfg.amplitude)?;
    let gen = random_field(&mut rng, 1, 1, spec.dim);
    let xi = LatticeField::from_fn(n, 1, spec.dim, |_, _, i| gen.data[i]);
    let mut g = GaugeElement::from_generator(&spec, &xi)?;
    g.generator = None;
    let moved = gauge_transform_bulk(&mesh, &spec, &g, &chi)?;
    let s0 = action_ym(&mesh, &spec, &chi, 1.0)?.total;
    let s1 = action_ym(&mesh, &spec, &moved, 1.0)?.total;
    rep.checks.push(Check::below("constant_gauge_invariance", (s0 - s1).abs() / s0.abs().max(1.0), 1e-12));

    if matches!(cfg.algebra, AlgebraKind::Abelian(_)) {
        let samples = abelian_solution_variations(&mesh, &spec, 10, cfg.seed)?;
        rep.checks.push(Check::below("isotropy", isotropy_check(&mesh, &spec, &samples)?, cfg.tol));

        let len = n * cfg.d * spec.dim;
        let point: Vec<f64> = samples[0].inner_a.data.iter().chain(&samples[0].inner_p.data).copied().collect();
        let (d, dim) = (cfg.d, spec.dim);
        let gauss = |v: &[f64]| -> Vec<f64> {
            let a = LatticeField { sites: n, comps: d, dim, data: v[..len].to_vec() };
            let p = LatticeField { sites: n, comps: d, dim, data: v[len..].to_vec() };
            moment_map(&mesh, &spec, &a, &p).map(|f| f.data).unwrap_or_default()
        };
        let w = omega_matrix(&mesh, &spec, cfg.d);
        let on = coisotropy_check(&gauss, &w, &point, cfg.tol)?;
        rep.checks.push(Check::holds("gauss_set_coisotropic", on.coisotropic));
        rep.notes.push(format!(
            "J^-1(0): ambient {} tangent {} orthogonal {} max principal-angle sine {:.3e}",
            on.ambient_dim, on.tangent_dim, on.orthogonal_dim, on.max_sin_angle
        ));
        let mut y = point.clone();
        y[0] = 0.0;
        y[len] = 0.0;
        let planted = |v: &[f64]| vec![v[0], v[len]];
        let control = coisotropy_check(&planted, &w, &y, cfg.tol)?;
        rep.notes.push(format!(
            "control: ambient {} tangent {} orthogonal {} max principal-angle sine {:.3e}",
            control.ambient_dim, control.tangent_dim, control.orthogonal_dim, control.max_sin_angle
        ));
        rep.checks.push(Check::holds("symplectic_control_rejected", !control.coisotropic));
    } else {
        rep.notes.push(format!("isotropy and coisotropy checks need an abelian algebra, got {}", spec.kind.name()));
    }
    rep.telemetry = telemetry_lines(&rep.checks);
    Ok(rep)
}
