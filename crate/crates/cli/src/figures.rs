//! `vise figure <id>`: data files behind each figure, from the bundled presets.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use vise_core::sweep::{
    lattice_delta_grid, majority_threshold_classes, max_delta_curve, pit_region, sweep, Axis, AxisKind, FixedParams,
    SweepSpec, TMode,
};
use vise_core::{expected_society_increment, validate, EnvironmentParams, SocietyParams};

use crate::error::{CliError, CliResult};
use crate::manifest::Run;
use crate::presets::{figure_preset, presets_version, Range};
use crate::FigureArgs;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Figure1 {
    n: u32,
    ell: u32,
    alpha: f64,
    mu: f64,
    sigma: f64,
    t: Range,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Surface {
    n: u32,
    alpha: f64,
    mu_over_sigma: f64,
    sigma: f64,
    t_over_sigma: Range,
    delta: Range,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sections {
    n: u32,
    alpha: f64,
    mu_over_sigma: f64,
    sigma: f64,
    t_over_sigma: Range,
    deltas: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverAlpha {
    mu: f64,
    delta: Range,
    alpha: Range,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverMu {
    alpha: f64,
    delta: Range,
    mu: Range,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Figure5 {
    n: u32,
    sigma: f64,
    a: OverAlpha,
    b: OverMu,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Figure6 {
    n: u32,
    mu: f64,
    sigma: f64,
    alphas: Vec<f64>,
    delta: Range,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Figure7 {
    n: u32,
    alphas: Vec<f64>,
    mu_over_sigma: Range,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Figure8 {
    ns: Vec<u32>,
}

#[derive(Serialize)]
struct Params<'a, T> {
    figure: u8,
    presets_version: i64,
    overrides: &'a [String],
    values: &'a T,
}

fn axis(kind: AxisKind, r: Range) -> CliResult<Axis> {
    Ok(Axis::new(kind, r.lo, r.hi, r.step)?)
}

fn write_sweep(run: &mut Run, name: &str, spec: &SweepSpec) -> CliResult<()> {
    let table = sweep(spec)?;
    table.write_csv(run.create(name)?)?;
    Ok(())
}

/// Resolves the preset for figure `id` and records it in the manifest.
fn load<T: DeserializeOwned + Serialize>(run: &mut Run, id: u8, overrides: &[String], version: i64) -> CliResult<T> {
    let values: T = figure_preset(id, overrides)?;
    run.set_params(&Params {
        figure: id,
        presets_version: version,
        overrides,
        values: &values,
    })?;
    Ok(values)
}

pub fn figure(a: FigureArgs) -> CliResult<()> {
    let stem = a.output.name.clone().unwrap_or_else(|| format!("figure{}", a.id));
    let mut run = Run::new("figure", &a.output.out_dir, Some(&stem))?;
    let version = presets_version()?;
    let (id, sets) = (a.id, &a.overrides);
    match id {
        1 => {
            let f = load::<Figure1>(&mut run, id, sets, version)?;
            figure1(&mut run, &stem, f)?
        }
        2 | 3 => {
            let f = load::<Surface>(&mut run, id, sets, version)?;
            surface(&mut run, &stem, f)?
        }
        4 => {
            let f = load::<Sections>(&mut run, id, sets, version)?;
            sections(&mut run, &stem, f)?
        }
        5 => {
            let f = load::<Figure5>(&mut run, id, sets, version)?;
            figure5(&mut run, &stem, f)?
        }
        6 => {
            let f = load::<Figure6>(&mut run, id, sets, version)?;
            figure6(&mut run, &stem, f)?
        }
        7 => {
            let f = load::<Figure7>(&mut run, id, sets, version)?;
            figure7(&mut run, &stem, f)?
        }
        8 => {
            let f = load::<Figure8>(&mut run, id, sets, version)?;
            figure8(&mut run, &stem, f)?
        }
        _ => return Err(CliError::validation(format!("figure {id} does not exist"))),
    }
    let manifest = run.finish()?;
    println!("figure {} data written; manifest {}", a.id, manifest.display());
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    t: f64,
    egoist: f64,
    group: f64,
    society: f64,
}

fn figure1(run: &mut Run, stem: &str, f: Figure1) -> CliResult<()> {
    let base = validate(
        SocietyParams::new(f.n, f.ell, f.alpha, 0.0),
        EnvironmentParams::new(f.mu, f.sigma)?,
    )?;
    if f.ell == 0 || f.ell == f.n {
        return Err(CliError::validation("figure 1 needs both egoists and a group"));
    }
    let mut w = csv::Writer::from_writer(run.create(&format!("{stem}.csv"))?);
    for t in f.t.values()? {
        let r = expected_society_increment(&base.with_t(t));
        w.serialize(CurveRow {
            t,
            egoist: r.egoist.expect("ell > 0"),
            group: r.group_member.expect("g > 0"),
            society: r.society,
        })
        .map_err(vise_core::ViseError::from)?;
    }
    w.flush()?;
    Ok(())
}

fn surface(run: &mut Run, stem: &str, f: Surface) -> CliResult<()> {
    let spec = SweepSpec {
        fixed: FixedParams {
            n: f.n,
            sigma: f.sigma,
            delta: None,
            alpha: Some(f.alpha),
            mu: Some(f.mu_over_sigma * f.sigma),
            t: None,
        },
        axes: vec![
            axis(AxisKind::TOverSigma, f.t_over_sigma)?,
            axis(AxisKind::Delta, f.delta)?,
        ],
        t_mode: TMode::Fixed,
    };
    write_sweep(run, &format!("{stem}.csv"), &spec)
}

fn sections(run: &mut Run, stem: &str, f: Sections) -> CliResult<()> {
    for &delta in &f.deltas {
        let spec = SweepSpec {
            fixed: FixedParams {
                n: f.n,
                sigma: f.sigma,
                delta: Some(delta),
                alpha: Some(f.alpha),
                mu: Some(f.mu_over_sigma * f.sigma),
                t: None,
            },
            axes: vec![axis(AxisKind::TOverSigma, f.t_over_sigma)?],
            t_mode: TMode::Fixed,
        };
        write_sweep(run, &format!("{stem}_delta{delta:.2}.csv"), &spec)?;
    }
    Ok(())
}

fn figure5(run: &mut Run, stem: &str, f: Figure5) -> CliResult<()> {
    let a = SweepSpec {
        fixed: FixedParams {
            n: f.n,
            sigma: f.sigma,
            delta: None,
            alpha: None,
            mu: Some(f.a.mu),
            t: None,
        },
        axes: vec![axis(AxisKind::Delta, f.a.delta)?, axis(AxisKind::Alpha, f.a.alpha)?],
        t_mode: TMode::Optimal,
    };
    write_sweep(run, &format!("{stem}a.csv"), &a)?;
    // the mu axis is given in capital units; sweeps take mu/sigma
    let mu = Range {
        lo: f.b.mu.lo / f.sigma,
        hi: f.b.mu.hi / f.sigma,
        step: f.b.mu.step / f.sigma,
    };
    let b = SweepSpec {
        fixed: FixedParams {
            n: f.n,
            sigma: f.sigma,
            delta: None,
            alpha: Some(f.b.alpha),
            mu: None,
            t: None,
        },
        axes: vec![axis(AxisKind::Delta, f.b.delta)?, axis(AxisKind::MuOverSigma, mu)?],
        t_mode: TMode::Optimal,
    };
    write_sweep(run, &format!("{stem}b.csv"), &b)
}

fn figure6(run: &mut Run, stem: &str, f: Figure6) -> CliResult<()> {
    for &alpha in &f.alphas {
        let spec = SweepSpec {
            fixed: FixedParams {
                n: f.n,
                sigma: f.sigma,
                delta: None,
                alpha: Some(alpha),
                mu: Some(f.mu),
                t: None,
            },
            axes: vec![axis(AxisKind::Delta, f.delta)?],
            t_mode: TMode::Optimal,
        };
        write_sweep(run, &format!("{stem}_alpha{alpha:.2}.csv"), &spec)?;
    }
    Ok(())
}

fn figure7(run: &mut Run, stem: &str, f: Figure7) -> CliResult<()> {
    let mu = f.mu_over_sigma.values()?;
    let deltas = lattice_delta_grid(f.n);
    for &alpha in &f.alphas {
        for mode in [TMode::Fixed, TMode::Optimal] {
            let pit = pit_region(alpha, f.n, mode, &mu, &deltas)?;
            let name = format!("{stem}_alpha{alpha:.2}_{}", mode.name());
            pit.write_csv(run.create(&format!("{name}.csv"))?)?;
            run.write_json(&format!("{name}.json"), &pit.summary())?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct StepRow {
    n: u32,
    votes: u32,
    alpha: f64,
    delta_max: Option<f64>,
}

fn figure8(run: &mut Run, stem: &str, f: Figure8) -> CliResult<()> {
    for &n in &f.ns {
        let classes = majority_threshold_classes(n)?;
        let alphas: Vec<f64> = classes.iter().map(|c| c.representative).collect();
        let curve = max_delta_curve(n, &alphas)?;
        let mut w = csv::Writer::from_writer(run.create(&format!("{stem}_n{n}.csv"))?);
        for (c, p) in classes.iter().zip(&curve) {
            w.serialize(StepRow {
                n,
                votes: c.votes,
                alpha: p.alpha,
                delta_max: p.delta_max,
            })
            .map_err(vise_core::ViseError::from)?;
        }
        w.flush()?;
    }
    Ok(())
}
