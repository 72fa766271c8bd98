use std::io::Write;

use serde::Serialize;
use vise_core::simulate::{trajectory_records, write_trajectory_csv};
use vise_core::sweep::{lattice_delta_grid, pit_region, Axis, AxisKind, FixedParams, SweepSpec, SWEEP_HEADER};
use vise_core::{
    expected_society_increment, numeric_argmax_t, optimal_threshold, run, stationarity_check, validate, Configuration,
    EnvironmentParams, ExpectationReport, OptimalThresholdResult, SimulationConfig, SocietyParams,
};

use crate::error::{CliError, CliResult};
use crate::manifest::Run;
use crate::{ExpectArgs, OptimalArgs, PitArgs, SimulateArgs, SocietyArgs, SweepArgs, ThresholdArgs};

pub fn configuration(s: &SocietyArgs, t: f64) -> CliResult<Configuration> {
    let society = match (s.ell, s.delta) {
        (Some(ell), None) => SocietyParams::new(s.n, ell, s.alpha, t),
        (None, Some(delta)) => SocietyParams::from_delta(s.n, delta, s.alpha, t)?,
        _ => return Err(CliError::validation("give exactly one of --ell and --delta")),
    };
    Ok(validate(society, EnvironmentParams::new(s.mu, s.sigma)?)?)
}

/// `t` from the flags, or `t₀` with its derivation.
fn resolve_threshold(cfg: &Configuration, th: &ThresholdArgs) -> CliResult<(f64, Option<OptimalThresholdResult>)> {
    match th.t {
        Some(t) => Ok((t, None)),
        None => {
            let opt = optimal_threshold(cfg)?;
            Ok((opt.t0, Some(opt)))
        }
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"))
}

#[derive(Serialize)]
struct ExpectOutput<'a> {
    society: &'a SocietyArgs,
    ell: u32,
    t: f64,
    optimal: Option<OptimalThresholdResult>,
    derived: vise_core::DerivedShares,
    report: ExpectationReport,
}

pub fn expect(a: ExpectArgs) -> CliResult<()> {
    let mut run = Run::new("expect", &a.output.out_dir, a.output.name.as_deref())?;
    let base = configuration(&a.society, 0.0)?;
    let (t, optimal) = resolve_threshold(&base, &a.threshold)?;
    let cfg = base.with_t(t);
    let report = expected_society_increment(&cfg);
    let out = ExpectOutput {
        society: &a.society,
        ell: cfg.society.ell,
        t,
        optimal,
        derived: cfg.derived,
        report,
    };
    run.set_params(&out)?;

    let mut stdout = std::io::stdout().lock();
    if a.json {
        serde_json::to_writer_pretty(&mut stdout, &out)?;
        writeln!(stdout)?;
    } else {
        writeln!(
            stdout,
            "n = {}, ell = {}, alpha = {}, mu = {}, sigma = {}, t = {t:.6}",
            cfg.society.n, cfg.society.ell, cfg.society.alpha, cfg.env.mu, cfg.env.sigma
        )?;
        if let Some(o) = optimal {
            writeln!(stdout, "t0 = {:.6} (case: {})", o.t0, o.case_tag)?;
        }
        writeln!(stdout, "egoist   M(dE) = {}", opt_num(report.egoist))?;
        writeln!(stdout, "group    M(dG) = {}", opt_num(report.group_member))?;
        writeln!(stdout, "society  M(d)  = {:.6}", report.society)?;
        writeln!(
            stdout,
            "P(group votes yes) = {}",
            opt_num(report.support_prob.map(|p| p.value()))
        )?;
        writeln!(stdout, "t~ = {}", opt_num(report.t_tilde))?;
    }
    run.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct OptimalOutput<'a> {
    society: &'a SocietyArgs,
    ell: u32,
    result: OptimalThresholdResult,
    numeric: Option<vise_core::ArgmaxResult>,
    stationarity: Option<vise_core::StationarityDiagnostics>,
}

pub fn optimal_t(a: OptimalArgs) -> CliResult<()> {
    let mut run = Run::new("optimal-t", &a.output.out_dir, a.output.name.as_deref())?;
    let cfg = configuration(&a.society, 0.0)?;
    run.set_params(&a.society)?;
    let result = match optimal_threshold(&cfg) {
        Ok(r) => r,
        Err(e) => {
            run.finish()?;
            return Err(e.into());
        }
    };
    let (numeric, stationarity) = if a.numeric {
        (
            Some(numeric_argmax_t(&cfg, None, 1e-10)?),
            Some(stationarity_check(&cfg, result.t0)?),
        )
    } else {
        (None, None)
    };
    let out = OptimalOutput {
        society: &a.society,
        ell: cfg.society.ell,
        result,
        numeric,
        stationarity,
    };
    run.set_params(&out)?;

    let mut stdout = std::io::stdout().lock();
    if a.json {
        serde_json::to_writer_pretty(&mut stdout, &out)?;
        writeln!(stdout)?;
    } else {
        writeln!(stdout, "t0 = {:.6}", result.t0)?;
        writeln!(stdout, "case = {}", result.case_tag)?;
        writeln!(stdout, "general formula = {:.12}", result.general_t0)?;
        if let Some(s) = result.special_t0 {
            writeln!(stdout, "regime formula = {s:.12}")?;
        }
        writeln!(stdout, "society M(d) at t0 = {:.6}", result.society_value_at_t0)?;
        if let (Some(n), Some(s)) = (numeric, stationarity) {
            writeln!(stdout, "numeric argmax = {:.9} ({:?})", n.t, n.method)?;
            writeln!(
                stdout,
                "stationarity: dM/dt {:.3e}, second difference {:.3e}, ok = {}",
                s.first_derivative,
                s.second_difference,
                s.stationary && s.is_maximum
            )?;
        }
    }
    run.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct Comparison {
    role: &'static str,
    simulated: f64,
    std_error: f64,
    analytic: f64,
    z: f64,
}

#[derive(Serialize)]
struct SimulateOutput {
    config: SimulationConfig,
    optimal: Option<OptimalThresholdResult>,
    stats: vise_core::TrajectoryStats,
    analytic: ExpectationReport,
    comparison: Vec<Comparison>,
}

pub fn simulate(a: SimulateArgs) -> CliResult<()> {
    let mut run = Run::new("simulate", &a.output.out_dir, a.output.name.as_deref())?;
    let base = configuration(&a.society, 0.0)?;
    let (t, optimal) = resolve_threshold(&base, &a.threshold)?;
    let cfg = base.with_t(t);
    let sim = SimulationConfig {
        society: cfg.society,
        env: cfg.env,
        steps: a.steps,
        replications: a.replications,
        seed: a.seed,
    };
    run.set_params(&sim)?;
    run.set_seed(a.seed);

    let stats = run_sim(&sim)?;
    let analytic = expected_society_increment(&cfg);
    let mut comparison = Vec::new();
    let pairs = [
        ("egoist", stats.mean_egoist_step, analytic.egoist),
        ("group", stats.mean_group_step, analytic.group_member),
        ("society", Some(stats.mean_society_step), Some(analytic.society)),
    ];
    for (role, est, exact) in pairs {
        if let (Some(e), Some(x)) = (est, exact) {
            comparison.push(Comparison {
                role,
                simulated: e.mean,
                std_error: e.std_error,
                analytic: x,
                z: e.z_score(x),
            });
        }
    }

    let stem = run.stem().to_string();
    if a.trajectory {
        let records = trajectory_records(&sim, 0)?;
        let w = run.create(&format!("{stem}_trajectory.csv"))?;
        write_trajectory_csv(w, &records)?;
    }
    let out = SimulateOutput {
        config: sim,
        optimal,
        stats,
        analytic,
        comparison,
    };
    run.write_json(&format!("{stem}.json"), &out)?;

    let mut stdout = std::io::stdout().lock();
    writeln!(
        stdout,
        "{} replications x {} steps, seed {}, t = {t:.6}, acceptance rate {:.6}",
        sim.replications, sim.steps, sim.seed, out.stats.acceptance_rate
    )?;
    for c in &out.comparison {
        writeln!(
            stdout,
            "{:<8} simulated {:+.6} +/- {:.6}  analytic {:+.6}  z = {:.2}",
            c.role, c.simulated, c.std_error, c.analytic, c.z
        )?;
    }
    run.finish()?;
    Ok(())
}

fn run_sim(sim: &SimulationConfig) -> CliResult<vise_core::TrajectoryStats> {
    if sim.steps == 0 || sim.replications == 0 {
        return Err(CliError::validation("--steps and --replications must be positive"));
    }
    Ok(run(sim)?)
}

fn parse_axis(text: &str) -> CliResult<Axis> {
    let parts: Vec<&str> = text.split(':').collect();
    let [kind, lo, hi, step] = parts[..] else {
        return Err(CliError::validation(format!("axis {text:?} is not KIND:LO:HI:STEP")));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::validation(format!("axis {text:?}: {s:?} is not a number")))
    };
    let kind: AxisKind = kind.trim().parse()?;
    Ok(Axis::new(kind, num(lo)?, num(hi)?, num(step)?)?)
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    spec: &'a SweepSpec,
    axes: Vec<&'static str>,
    shape: &'a [usize],
    rows: usize,
    columns: [&'static str; 18],
}

pub fn sweep(a: SweepArgs) -> CliResult<()> {
    let mut run = Run::new("sweep", &a.output.out_dir, a.output.name.as_deref())?;
    let spec = SweepSpec {
        fixed: FixedParams {
            n: a.n,
            sigma: a.sigma,
            delta: a.delta,
            alpha: a.alpha,
            mu: a.mu,
            t: a.t,
        },
        axes: a.axes.iter().map(|s| parse_axis(s)).collect::<CliResult<_>>()?,
        t_mode: a.t_mode.into(),
    };
    run.set_params(&spec)?;
    let table = vise_core::sweep(&spec)?;
    let stem = run.stem().to_string();
    table.write_csv(run.create(&format!("{stem}.csv"))?)?;
    run.write_json(
        &format!("{stem}.json"),
        &SweepOutput {
            spec: &spec,
            axes: table.axes.iter().map(|k| k.name()).collect(),
            shape: &table.shape,
            rows: table.rows.len(),
            columns: SWEEP_HEADER,
        },
    )?;
    let flagged = table.rows.iter().filter(|r| !r.flags.is_empty()).count();
    println!(
        "{} grid points ({flagged} flagged) written to {stem}.csv",
        table.rows.len()
    );
    run.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct PitParams {
    alpha: f64,
    n: u32,
    t_mode: &'static str,
    mu_over_sigma: crate::presets::Range,
}

pub fn pit(a: PitArgs) -> CliResult<()> {
    let mut run = Run::new("pit", &a.output.out_dir, a.output.name.as_deref())?;
    let range = crate::presets::Range {
        lo: a.mu_lo,
        hi: a.mu_hi,
        step: a.mu_step,
    };
    let mode: vise_core::sweep::TMode = a.t_mode.into();
    run.set_params(&PitParams {
        alpha: a.alpha,
        n: a.n,
        t_mode: mode.name(),
        mu_over_sigma: range,
    })?;
    let mu = range.values()?;
    let result = pit_region(a.alpha, a.n, mode, &mu, &lattice_delta_grid(a.n))?;
    let stem = run.stem().to_string();
    result.write_csv(run.create(&format!("{stem}.csv"))?)?;
    let summary = result.summary();
    run.write_json(&format!("{stem}.json"), &summary)?;
    println!(
        "delta_max = {} (alpha = {}, n = {}, t = {}, {} pit cells, {} flagged)",
        summary
            .delta_max
            .map_or_else(|| "none".to_string(), |d| format!("{d:.2}")),
        a.alpha,
        a.n,
        if mode == vise_core::sweep::TMode::Optimal {
            "t0"
        } else {
            "0"
        },
        summary.pit_cells,
        summary.flagged_cells
    );
    run.finish()?;
    Ok(())
}
