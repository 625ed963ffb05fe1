//! Command-line runner.
//!
//! Subcommands: `run` (fractional-step scheme), `collisionless` (plain
//! split-step propagation), `tau-study` (relaxation-mesh refinement table),
//! `verify` (identity and oracle suite), `poisson-bench` (fast solver vs
//! direct quadrature). Any argument of the form `--section.key=value`
//! overrides the corresponding config-file key.
//!
//! Exit codes: 0 success, 1 validation/configuration error, 2 numerical
//! blow-up, 3 verify failure.

use num_complex::Complex64;
use qhd2d::config::{DopingSpec, SimConfig};
use qhd2d::diagnostics;
use qhd2d::error::QhdError;
use qhd2d::fields::{make_grid, RealField, WaveField};
use qhd2d::ic::make_initial_condition;
use qhd2d::poisson::{self, PoissonMode};
use qhd2d::polar::{self, default_vacuum_eps};
use qhd2d::propagator::StepParams;
use qhd2d::scheme::{self, SchemeConfig};
use qhd2d::{output, snapshot};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

fn usage() -> String {
    "usage: qhd2d <run|collisionless|tau-study|verify|poisson-bench> [options]\n\
     \n\
     common options:\n\
       --config <path>          config file (key = value under [section] headers)\n\
       --out <dir>              output directory (overrides config and QHD2D_OUT_DIR)\n\
       --section.key=value      override any config key\n\
     tau-study options:\n\
       --taus 0.1,0.05,0.025    strip lengths to compare\n\
       --jobs <n>               worker threads for independent runs\n\
     poisson-bench options:\n\
       --n <size>               grid size (default 64, max 128)\n"
        .into()
}

struct Cli {
    subcommand: String,
    config_path: Option<String>,
    out_dir: Option<String>,
    taus: Vec<f64>,
    jobs: Option<usize>,
    bench_n: usize,
    overrides: Vec<(String, String)>,
}

fn parse_cli(args: &[String]) -> Result<Cli, String> {
    let mut cli = Cli {
        subcommand: String::new(),
        config_path: None,
        out_dir: None,
        taus: vec![0.1, 0.05, 0.025],
        jobs: None,
        bench_n: 64,
        overrides: Vec::new(),
    };
    let mut it = args.iter().peekable();
    match it.next() {
        Some(cmd) => cli.subcommand = cmd.clone(),
        None => return Err("missing subcommand".into()),
    }
    while let Some(arg) = it.next() {
        if let Some(rest) = arg.strip_prefix("--") {
            // --section.key=value overrides
            if let Some(eq) = rest.find('=') {
                let (path, value) = (&rest[..eq], &rest[eq + 1..]);
                if path.contains('.') {
                    cli.overrides.push((path.into(), value.into()));
                    continue;
                }
            }
            match rest {
                "config" => {
                    cli.config_path = it.next().cloned();
                    if cli.config_path.is_none() {
                        return Err("--config needs a path".into());
                    }
                }
                "out" => {
                    cli.out_dir = it.next().cloned();
                    if cli.out_dir.is_none() {
                        return Err("--out needs a directory".into());
                    }
                }
                "taus" => {
                    let spec = it.next().ok_or("--taus needs a comma list")?;
                    cli.taus = spec
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| format!("bad --taus value: {e}"))?;
                }
                "jobs" => {
                    let v = it.next().ok_or("--jobs needs a count")?;
                    cli.jobs = Some(v.parse().map_err(|e| format!("bad --jobs: {e}"))?);
                }
                "n" => {
                    let v = it.next().ok_or("--n needs a size")?;
                    cli.bench_n = v.parse().map_err(|e| format!("bad --n: {e}"))?;
                }
                other => return Err(format!("unknown option --{other}")),
            }
        } else {
            return Err(format!("unexpected argument '{arg}'"));
        }
    }
    Ok(cli)
}

fn exit_code_for(err: &QhdError) -> ExitCode {
    match err {
        QhdError::BlowUp { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match parse_cli(&args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}\n{}", usage());
            return ExitCode::from(1);
        }
    };
    let result = match cli.subcommand.as_str() {
        "run" => cmd_run(&cli, true),
        "collisionless" => cmd_run(&cli, false),
        "tau-study" => cmd_tau_study(&cli),
        "verify" => return cmd_verify(),
        "poisson-bench" => cmd_poisson_bench(&cli),
        other => {
            eprintln!("error: unknown subcommand '{other}'\n{}", usage());
            return ExitCode::from(1);
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn load_config(cli: &Cli) -> qhd2d::Result<SimConfig> {
    let mut cfg = match &cli.config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                QhdError::Config(format!("cannot read config file '{path}': {e}"))
            })?;
            SimConfig::parse(&text)?
        }
        None => SimConfig::default(),
    };
    for (path, value) in &cli.overrides {
        cfg.apply_override(path, value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn resolve_out_dir(cli: &Cli, cfg: &SimConfig) -> PathBuf {
    if let Some(d) = &cli.out_dir {
        return d.into();
    }
    if let Some(d) = &cfg.out_dir {
        return d.into();
    }
    if let Ok(d) = std::env::var("QHD2D_OUT_DIR") {
        if !d.is_empty() {
            return d.into();
        }
    }
    "qhd2d_out".into()
}

fn build_setup(cfg: &SimConfig) -> qhd2d::Result<(Arc<qhd2d::Grid>, WaveField, StepParams)> {
    let grid = make_grid(cfg.nx, cfg.ny, cfg.lx, cfg.ly)?;
    let psi0 = make_initial_condition(cfg, &grid)?;
    let doping = match &cfg.doping {
        DopingSpec::None => None,
        DopingSpec::File(path) => {
            let (field, _) = snapshot::read_real(Path::new(path))?;
            if !field.grid.same_as(&grid) {
                return Err(QhdError::Dimension(format!(
                    "doping file '{path}' grid does not match the configured grid"
                )));
            }
            Some(field)
        }
    };
    let params = StepParams {
        dt: cfg.dt,
        p: cfg.p,
        hbar: cfg.hbar,
        poisson_mode: cfg.poisson_mode,
        nonlinearity_on: cfg.nonlinearity,
        potential_on: cfg.potential,
        doping,
    };
    Ok((grid, psi0, params))
}

fn write_resolved_config(dir: &Path, cfg: &SimConfig, out_dir: &Path) -> qhd2d::Result<()> {
    let mut resolved = cfg.clone();
    resolved.out_dir = Some(out_dir.to_string_lossy().into_owned());
    std::fs::write(dir.join("resolved.cfg"), resolved.serialize())?;
    Ok(())
}

fn cmd_run(cli: &Cli, collisions_allowed: bool) -> qhd2d::Result<()> {
    let cfg = load_config(cli)?;
    let out_dir = resolve_out_dir(cli, &cfg);
    std::fs::create_dir_all(&out_dir)?;
    write_resolved_config(&out_dir, &cfg, &out_dir)?;
    let (_grid, psi0, params) = build_setup(&cfg)?;
    let scheme_cfg = SchemeConfig {
        tau: cfg.tau,
        dt: cfg.dt,
        t_max: cfg.t_max,
        step_params: params,
        collision_on: collisions_allowed && cfg.collision_on,
        diagnostics_cadence: cfg.cadence,
    };

    let mut snap_index = 0usize;
    let mut step_count = 0usize;
    let snapshot_every = cfg.snapshot_every;
    let snap_dir = out_dir.clone();
    if snapshot_every > 0 {
        snapshot::write_wave(&snap_dir.join("snap_000000.qhd"), &psi0, 0.0)?;
        snap_index = 1;
    }
    let mut observer = |t: f64, psi: &WaveField| {
        step_count += 1;
        if snapshot_every > 0 && step_count % snapshot_every == 0 {
            let name = format!("snap_{snap_index:06}.qhd");
            if let Err(e) = snapshot::write_wave(&snap_dir.join(name), psi, t) {
                eprintln!("warning: snapshot write failed: {e}");
            }
            snap_index += 1;
        }
    };
    let run = scheme::run_with(&psi0, &scheme_cfg, &mut observer)?;

    output::write_diagnostics_csv(&out_dir.join("diagnostics.csv"), &run.records)?;
    if !run.strips.is_empty() {
        output::write_strips_csv(&out_dir.join("strips.csv"), &run.strips)?;
        let report = scheme::energy_inequality_check(&run, cfg.tau)?;
        eprintln!(
            "energy inequality: max violation {:.3e}, slack {:.3e} -> {}",
            report.max_violation,
            report.slack,
            if report.holds { "holds" } else { "VIOLATED" }
        );
    }
    let mass0 = psi0.mass();
    let mass1 = run.psi.mass();
    eprintln!(
        "done: t_max = {}, relative mass drift {:.3e}, wrote {}",
        cfg.t_max,
        (mass1 - mass0).abs() / mass0.max(f64::MIN_POSITIVE),
        out_dir.display()
    );
    Ok(())
}

fn cmd_tau_study(cli: &Cli) -> qhd2d::Result<()> {
    let cfg = load_config(cli)?;
    if let Some(jobs) = cli.jobs {
        // ignore failure when a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let out_dir = resolve_out_dir(cli, &cfg);
    std::fs::create_dir_all(&out_dir)?;
    write_resolved_config(&out_dir, &cfg, &out_dir)?;
    let (_grid, psi0, params) = build_setup(&cfg)?;
    let base = SchemeConfig {
        tau: cfg.tau,
        dt: cfg.dt,
        t_max: cfg.t_max,
        step_params: params,
        collision_on: true,
        diagnostics_cadence: 0,
    };
    let rows = scheme::tau_convergence_study(&psi0, &base, &cli.taus)?;
    output::write_tau_table_csv(&out_dir.join("tau_study.csv"), &rows)?;
    eprintln!("tau      rho_diff      j_diff        order");
    for r in &rows {
        eprintln!(
            "{:<8} {:<13.6e} {:<13.6e} {}",
            r.tau,
            r.rho_diff,
            r.j_diff,
            r.order_est.map(|v| format!("{v:.3}")).unwrap_or_default()
        );
    }
    Ok(())
}

struct Verifier {
    failures: usize,
}

impl Verifier {
    fn check(&mut self, name: &str, value: f64, threshold: f64) {
        let ok = value <= threshold;
        if !ok {
            self.failures += 1;
        }
        println!(
            "{} {name}: {value:.3e} (threshold {threshold:.1e})",
            if ok { "PASS" } else { "FAIL" }
        );
    }

    fn check_bool(&mut self, name: &str, ok: bool, detail: String) {
        if !ok {
            self.failures += 1;
        }
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn cmd_verify() -> ExitCode {
    match run_verify() {
        Ok(failures) if failures == 0 => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("verify: {failures} check(s) failed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn run_verify() -> qhd2d::Result<usize> {
    let mut v = Verifier { failures: 0 };
    let pi = std::f64::consts::PI;

    // polar identities on the three reference states
    let g = make_grid(64, 64, 2.0 * pi, 2.0 * pi)?;
    let plane = WaveField::from_fn(&g, 1.0, |x, y| Complex64::from_polar(1.0, 2.0 * x + y));
    v.check(
        "null form (plane wave)",
        polar::null_form_residual(&plane, default_vacuum_eps(&plane)),
        1e-10,
    );
    let gg = make_grid(128, 128, 12.0, 12.0)?;
    let gauss = WaveField::from_fn(&gg, 1.0, |x, y| {
        Complex64::new((-((x - 6.0).powi(2) + (y - 6.0).powi(2))).exp(), 0.0)
    });
    v.check(
        "null form (real gaussian)",
        polar::null_form_residual(&gauss, default_vacuum_eps(&gauss)),
        1e-10,
    );
    let gl = 4.0 * pi;
    let gv = make_grid(128, 128, gl, gl)?;
    let vortex = WaveField::from_fn(&gv, 1.0, |x, y| {
        let (cx, cy) = (x - gl / 2.0, y - gl / 2.0);
        let env = (-(cx * cx + cy * cy)).exp();
        Complex64::new(cx * env, cy * env)
    });
    v.check(
        "null form (vortex)",
        polar::null_form_residual(&vortex, default_vacuum_eps(&vortex)),
        1e-6,
    );
    let m = polar::moments(&vortex, default_vacuum_eps(&vortex));
    v.check("irrotationality (vortex)", polar::irrotationality_residual(&m), 1e-5);
    let m = polar::moments(&gauss, default_vacuum_eps(&gauss));
    v.check("irrotationality (real gaussian)", polar::irrotationality_residual(&m), 1e-10);

    // quantum-pressure forms
    let gc = make_grid(64, 64, 2.0 * pi, 2.0 * pi)?;
    let cosine = WaveField::from_fn(&gc, 1.0, |x, _| {
        Complex64::new((1.0 + 0.1 * x.cos()).sqrt(), 0.0)
    });
    let (ac, bc) = diagnostics::bohm_residuals(&cosine)?;
    v.check("bohm forms A vs C (cosine)", ac, 1e-8);
    v.check("bohm forms B vs C (cosine)", bc, 1e-8);
    let floored = WaveField::from_fn(&gg, 1.0, |x, y| {
        let r2 = (x - 6.0).powi(2) + (y - 6.0).powi(2);
        Complex64::new((0.1 + (-r2).exp()).sqrt(), 0.0)
    });
    let (ac, bc) = diagnostics::bohm_residuals(&floored)?;
    v.check("bohm forms A vs C (floored gaussian)", ac, 1e-6);
    v.check("bohm forms B vs C (floored gaussian)", bc, 1e-6);

    // pressure identity
    let ramp = RealField::from_fn(&gc, |x, y| 10.0 * (x * 7.3 + y * 3.1).sin().abs());
    for p in [2.0, 3.0, 5.0] {
        v.check(
            &format!("pressure identity (p = {p})"),
            diagnostics::pressure_identity_residual(&ramp, p),
            1e-12,
        );
    }

    // logarithmic Sobolev inequality on unit- and double-mass gaussians
    let gls = make_grid(64, 64, 16.0, 16.0)?;
    for mass in [1.0, 2.0] {
        let f = RealField::from_fn(&gls, |x, y| {
            mass * (-((x - 8.0).powi(2) + (y - 8.0).powi(2))).exp() / pi
        });
        let chk = diagnostics::log_sobolev_check(&f)?;
        v.check_bool(
            &format!("log-Sobolev (M = {mass})"),
            chk.holds,
            format!("lhs {:.6} >= rhs {:.6}", chk.lhs, chk.rhs),
        );
    }

    // poisson fast path vs direct quadrature
    let gp = make_grid(64, 64, 12.0, 12.0)?;
    let rho = RealField::from_fn(&gp, |x, y| {
        (-((x - 6.0).powi(2) + (y - 6.0).powi(2))).exp()
    });
    let fast = poisson::solve(&rho, None, PoissonMode::FreeSpacePadded)?.v;
    let oracle = poisson::solve(&rho, None, PoissonMode::QuadratureOracle)?.v;
    let mut worst = 0.0f64;
    for (a, b) in fast.values.iter().zip(&oracle.values) {
        worst = worst.max((a - b).abs());
    }
    v.check("poisson fast path vs oracle (abs)", worst, 1e-8);
    let periodic = poisson::solve(&rho, None, PoissonMode::PeriodicZeroMean)?.v;
    let lap = periodic.laplacian();
    let mean = rho.mean();
    let mut worst = 0.0f64;
    for (l, r) in lap.values.iter().zip(&rho.values) {
        worst = worst.max((-l - (r - mean)).abs());
    }
    v.check(
        "periodic -lap V = rho - mean (rel)",
        worst / rho.max_abs(),
        1e-10,
    );

    // collision update contract on the branch-safe state
    let psi = WaveField::from_fn(&gv, 1.0, |x, y| {
        let r2 = (x - gl / 2.0).powi(2) + (y - gl / 2.0).powi(2);
        Complex64::from_polar((-r2).exp(), 0.5 * x.sin())
    });
    let tau = 0.1;
    let eps = default_vacuum_eps(&psi);
    let (updated, report) = polar::collision_update(&psi, tau, eps)?;
    v.check(
        "collision update mass drift (rel)",
        (report.mass_post - report.mass_pre).abs() / report.mass_pre,
        1e-13,
    );
    let m0 = polar::moments(&psi, eps);
    let m1 = polar::moments(&updated, eps);
    let mut diff = 0.0;
    for i in 0..gv.len() {
        diff += (m1.j.x[i] - (1.0 - tau) * m0.j.x[i]).powi(2)
            + (m1.j.y[i] - (1.0 - tau) * m0.j.y[i]).powi(2);
    }
    let rel = (diff * gv.cell_area()).sqrt() / m0.j.norm_l2();
    v.check("collision update J scaling (rel)", rel, 1e-6);
    let (gx, gy) = psi.gradient();
    let mut gn = 0.0;
    for i in 0..gv.len() {
        gn += gx.values[i].norm_sqr() + gy.values[i].norm_sqr();
    }
    let gn = (gn * gv.cell_area()).sqrt();
    v.check_bool(
        "collision update gradient residual",
        report.grad_residual_l2 <= 2.0 * tau * gn,
        format!("{:.3e} <= 2 tau ||grad psi|| = {:.3e}", report.grad_residual_l2, 2.0 * tau * gn),
    );

    Ok(v.failures)
}

fn cmd_poisson_bench(cli: &Cli) -> qhd2d::Result<()> {
    let n = cli.bench_n;
    if n * n > poisson::ORACLE_MAX_POINTS {
        return Err(QhdError::Refusal(format!(
            "bench size {n}^2 exceeds the oracle guard"
        )));
    }
    let l = 12.0;
    let g = make_grid(n, n, l, l)?;
    let rho = RealField::from_fn(&g, |x, y| {
        (-((x - l / 2.0).powi(2) + (y - l / 2.0).powi(2))).exp()
    });
    let t0 = std::time::Instant::now();
    let fast = poisson::solve(&rho, None, PoissonMode::FreeSpacePadded)?.v;
    let t_fast = t0.elapsed();
    let t0 = std::time::Instant::now();
    let oracle = poisson::solve(&rho, None, PoissonMode::QuadratureOracle)?.v;
    let t_oracle = t0.elapsed();
    let mut worst = 0.0f64;
    for (a, b) in fast.values.iter().zip(&oracle.values) {
        worst = worst.max((a - b).abs());
    }
    println!(
        "poisson {n}x{n}: fast {:?}, oracle {:?}, max abs diff {worst:.3e}",
        t_fast, t_oracle
    );
    Ok(())
}
