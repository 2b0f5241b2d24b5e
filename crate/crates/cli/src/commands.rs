use crate::config::RunConfig;
use crate::error::CliError;
use scca::exec::derive_seed;
use scca::experiments::{
    run_consistency, run_robustness, ConsistencyConfig, Regime, RobustnessConfig, TauSchedule,
};
use scca::function_space::{BasisKind, BasisSystem, FunctionalSample, Grid};
use scca::io::{
    curves_on_grid_csv, gnuplot_script, parse_grid, read_curves, read_sample, sample_csv,
    write_atomic, write_json, Series,
};
use scca::robust::AssociationSpec;
use scca::scca::{fit as fit_pair, select_tau, FitOptions, ObjectiveContext, SmoothingParams};
use serde::Serialize;
use std::path::Path;

const DEFAULT_D: usize = 15;
const DEFAULT_FOLDS: usize = 5;
const DEFAULT_N: usize = 100;

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    Ok(write_atomic(&dir.join(name), contents.as_bytes())?)
}

fn write_json_to<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    Ok(write_json(&dir.join(name), value)?)
}

fn default_tau(n: usize) -> f64 {
    TauSchedule::default().at(n)
}

struct Data {
    x: FunctionalSample,
    y: FunctionalSample,
    grid: Grid,
}

fn load_data(cfg: &RunConfig) -> Result<Data, CliError> {
    let xp = cfg.require_path(&cfg.x, "x")?;
    let yp = cfg.require_path(&cfg.y, "y")?;
    let grid = match &cfg.grid {
        Some(g) => parse_grid(g)?,
        None => Grid::uniform(0.0, 1.0, read_curves(&xp)?.values.ncols())?,
    };
    let x = read_sample(&xp, &grid)?;
    let y = read_sample(&yp, &grid)?;
    if x.n() != y.n() {
        return Err(CliError::Input(format!(
            "row count mismatch: {} has {} curves, {} has {}",
            xp.display(),
            x.n(),
            yp.display(),
            y.n()
        )));
    }
    Ok(Data { x, y, grid })
}

fn fit_options(
    cfg: &RunConfig,
    spec: &AssociationSpec,
    command: &str,
) -> Result<FitOptions, CliError> {
    let mut robust = cfg.optimizer.unwrap_or_default();
    if *spec != AssociationSpec::CovPearson {
        robust.seed = cfg.require_seed(command)?;
    }
    Ok(FitOptions {
        force_alternating: false,
        robust,
    })
}

fn context(
    cfg: &RunConfig,
    data: &Data,
    tau: f64,
) -> Result<(ObjectiveContext, BasisSystem), CliError> {
    let kind = cfg.basis.unwrap_or(BasisKind::Fourier);
    let d = cfg.d.unwrap_or(DEFAULT_D);
    let basis = BasisSystem::new(kind, d, &data.grid)?;
    let spec = cfg.spec.unwrap_or_default();
    let ctx = ObjectiveContext::from_samples(
        &data.x,
        &data.y,
        &basis,
        spec,
        SmoothingParams::common(tau, d),
    )?;
    Ok((ctx, basis))
}

pub fn fit(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load_data(cfg)?;
    let tau = cfg.tau.unwrap_or_else(|| default_tau(data.x.n()));
    let (ctx, basis) = context(cfg, &data, tau)?;
    let opts = fit_options(cfg, &ctx.spec, "fit")?;
    let f = fit_pair(&ctx, &opts)?;

    let out = cfg.out_dir();
    let phi = basis.curve(&f.phi_coef());
    let psi = basis.curve(&f.psi_coef());
    write_json_to(&out, "fit.json", &f)?;
    write(
        &out,
        "directions_x.csv",
        &curves_on_grid_csv(&data.grid, &[("phi", &phi)]),
    )?;
    write(
        &out,
        "directions_y.csv",
        &curves_on_grid_csv(&data.grid, &[("psi", &psi)]),
    )?;
    let mut gp = gnuplot_script(
        "directions_x.csv",
        "directions_x.png",
        "First canonical direction, X",
        "t",
        "phi(t)",
        &[Series {
            x_col: 1,
            y_col: 2,
            title: "phi".into(),
        }],
        false,
    );
    gp.push_str(&gnuplot_script(
        "directions_y.csv",
        "directions_y.png",
        "First canonical direction, Y",
        "t",
        "psi(t)",
        &[Series {
            x_col: 1,
            y_col: 2,
            title: "psi".into(),
        }],
        false,
    ));
    write(&out, "directions.gp", &gp)?;
    println!(
        "lambda_hat={} assoc_unpenalized={} spec={} tau={} d={}",
        f.lambda_hat,
        f.assoc_unpenalized,
        ctx.spec.to_json(),
        tau,
        ctx.d()
    );
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    n: usize,
    seed: u64,
    lambda0: f64,
    grid: &'a [f64],
    model: &'a scca::simulation::ProcessModel,
    contamination: Option<&'a scca::simulation::ContaminationModel>,
    contaminated_rows: Vec<usize>,
    true_phi: &'a [f64],
    true_psi: &'a [f64],
    files: [&'a str; 4],
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let seed = cfg.require_seed("simulate")?;
    let model_cfg = cfg.model.clone().unwrap_or_default();
    let model = model_cfg.build()?;
    let grid = match &cfg.grid {
        Some(g) => parse_grid(g)?,
        None => model_cfg.grid(&model)?,
    };
    let n = cfg.n.unwrap_or(DEFAULT_N);
    let (mut x, mut y) = model.sample_pair(n, &grid, seed)?;
    let contaminated_rows = match &cfg.contamination {
        Some(c) => c.apply(&mut x, &mut y, derive_seed(seed, 0xC0))?,
        None => Vec::new(),
    };
    let (phi, psi) = model.true_direction_curves(&grid)?;

    let out = cfg.out_dir();
    let grid_csv: String = grid.points().iter().map(|t| format!("{t}\n")).collect();
    write(&out, "x.csv", &sample_csv(&x))?;
    write(&out, "y.csv", &sample_csv(&y))?;
    write(&out, "grid.csv", &grid_csv)?;
    write(
        &out,
        "true_directions.csv",
        &curves_on_grid_csv(&grid, &[("phi1", &phi), ("psi1", &psi)]),
    )?;
    write(
        &out,
        "true_directions.gp",
        &gnuplot_script(
            "true_directions.csv",
            "true_directions.png",
            "True canonical directions",
            "t",
            "value",
            &[
                Series {
                    x_col: 1,
                    y_col: 2,
                    title: "phi1".into(),
                },
                Series {
                    x_col: 1,
                    y_col: 3,
                    title: "psi1".into(),
                },
            ],
            false,
        ),
    )?;
    let manifest = Manifest {
        n,
        seed,
        lambda0: model.lambda0(),
        grid: grid.points(),
        model: &model,
        contamination: cfg.contamination.as_ref(),
        contaminated_rows,
        true_phi: &phi,
        true_psi: &psi,
        files: ["x.csv", "y.csv", "grid.csv", "true_directions.csv"],
    };
    write_json_to(&out, "manifest.json", &manifest)?;
    println!(
        "wrote {n} curve pairs on {} grid points to {}",
        grid.len(),
        out.display()
    );
    Ok(())
}

fn consistency_config(cfg: &RunConfig) -> Result<ConsistencyConfig, CliError> {
    let mut c = cfg.consistency.clone().unwrap_or_default();
    c.seed = match (cfg.seed, &cfg.consistency) {
        (Some(s), _) => s,
        (None, Some(block)) => block.seed,
        (None, None) => {
            return Err(CliError::Input(
                "consistency is stochastic and needs --seed".into(),
            ))
        }
    };
    if let Some(r) = cfg.reps {
        c.replicates = r;
    }
    if let Some(s) = &cfg.spec {
        c.specs = vec![*s];
    }
    if let Some(b) = cfg.basis {
        c.basis = b;
    }
    if let Some(d) = cfg.d {
        for r in &mut c.regimes {
            if let Regime::PenaltyOnly { d: old } = r {
                *old = d;
            }
        }
    }
    if let Some(t) = cfg.tau {
        c.tau.scale = t;
    }
    if let Some(n) = cfg.n {
        c.ns = vec![n];
    }
    if let Some(m) = &cfg.model {
        c.model = m.clone();
    }
    if let Some(o) = cfg.optimizer {
        c.optimizer = o;
    }
    Ok(c)
}

pub fn consistency(cfg: &RunConfig) -> Result<(), CliError> {
    let c = consistency_config(cfg)?;
    let report = run_consistency(&c)?;
    let out = cfg.out_dir();
    write(&out, "consistency.csv", &report.to_csv())?;
    write(&out, "consistency_summary.csv", &report.summary_csv())?;
    write(&out, "consistency_summary.json", &report.summary_json())?;

    let summary = report.summary_csv();
    let header = summary.lines().next().unwrap_or_default();
    let mut gp = String::new();
    let mut regimes: Vec<String> = Vec::new();
    for line in summary.lines().skip(1) {
        let r = line.split(',').next().unwrap_or_default().to_string();
        if !regimes.contains(&r) {
            regimes.push(r);
        }
    }
    for r in &regimes {
        let file = format!("consistency_{r}.csv");
        let mut body = format!("{header}\n");
        for line in summary
            .lines()
            .skip(1)
            .filter(|l| l.split(',').next() == Some(r))
        {
            body.push_str(line);
            body.push('\n');
        }
        write(&out, &file, &body)?;
        gp.push_str(&gnuplot_script(
            &file,
            &format!("consistency_{r}.png"),
            &format!("Convergence, {r}"),
            "n",
            "median",
            &[
                Series {
                    x_col: 2,
                    y_col: 7,
                    title: "L^X".into(),
                },
                Series {
                    x_col: 2,
                    y_col: 9,
                    title: "L^Y".into(),
                },
                Series {
                    x_col: 2,
                    y_col: 11,
                    title: "|lambda - lambda0|".into(),
                },
                Series {
                    x_col: 2,
                    y_col: 15,
                    title: "tau Psi(phi1)".into(),
                },
            ],
            true,
        ));
    }
    write(&out, "consistency.gp", &gp)?;
    print!("{summary}");
    Ok(())
}

fn robustness_config(cfg: &RunConfig) -> Result<RobustnessConfig, CliError> {
    let mut c = cfg.robustness.clone().unwrap_or_default();
    c.seed = match (cfg.seed, &cfg.robustness) {
        (Some(s), _) => s,
        (None, Some(block)) => block.seed,
        (None, None) => {
            return Err(CliError::Input(
                "robustness is stochastic and needs --seed".into(),
            ))
        }
    };
    if let Some(r) = cfg.reps {
        c.replicates = r;
    }
    if let Some(s) = &cfg.spec {
        c.specs = vec![*s];
    }
    if let Some(b) = cfg.basis {
        c.basis = b;
    }
    if let Some(d) = cfg.d {
        c.d = d;
    }
    if let Some(t) = cfg.tau {
        c.tau = Some(t);
    }
    if let Some(n) = cfg.n {
        c.n = n;
    }
    if let Some(m) = &cfg.model {
        c.model = m.clone();
    }
    if let Some(k) = &cfg.contamination {
        c.contamination = k.clone();
    }
    if let Some(o) = cfg.optimizer {
        c.optimizer = o;
    }
    Ok(c)
}

pub fn robustness(cfg: &RunConfig) -> Result<(), CliError> {
    let c = robustness_config(cfg)?;
    let report = run_robustness(&c)?;
    let out = cfg.out_dir();
    let summary = report.summary_csv();
    write(&out, "robustness.csv", &report.to_csv())?;
    write(&out, "robustness_summary.csv", &summary)?;
    write(&out, "robustness_summary.json", &report.summary_json())?;

    let header = summary.lines().next().unwrap_or_default();
    let mut gp = String::new();
    for (i, spec) in c.specs.iter().enumerate() {
        let file = format!("robustness_spec{i}.csv");
        let json = scca::io::csv_field(&spec.to_json());
        let mut body = format!("{header}\n");
        for line in summary.lines().skip(1).filter(|l| l.ends_with(&json)) {
            body.push_str(line);
            body.push('\n');
        }
        write(&out, &file, &body)?;
        gp.push_str(&gnuplot_script(
            &file,
            &format!("robustness_spec{i}.png"),
            &format!("Angle error to phi1, {}", spec.name()),
            "contamination fraction",
            "median angle (degrees)",
            &[
                Series {
                    x_col: 1,
                    y_col: 5,
                    title: spec.name().into(),
                },
                Series {
                    x_col: 1,
                    y_col: 7,
                    title: "classical".into(),
                },
            ],
            false,
        ));
    }
    write(&out, "robustness.gp", &gp)?;
    print!("{summary}");
    Ok(())
}

pub fn tau_select(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load_data(cfg)?;
    let grid: Vec<f64> = cfg
        .tau_grid
        .clone()
        .unwrap_or_else(|| (0..9).map(|k| 10f64.powf(-4.0 + 0.5 * k as f64)).collect());
    let (ctx, _) = context(cfg, &data, 0.0)?;
    let mut opts = fit_options(cfg, &ctx.spec, "tau-select")?;
    opts.robust.seed = cfg.require_seed("tau-select")?;
    let folds = cfg.folds.unwrap_or(DEFAULT_FOLDS);
    let sel = select_tau(&ctx, &grid, folds, &opts)?;

    let out = cfg.out_dir();
    let mut csv = String::from("tau,criterion,failures\n");
    for c in &sel.table {
        csv.push_str(&format!(
            "{},{},{}\n",
            c.tau,
            scca::io::fmt_opt(c.criterion),
            c.failures.len()
        ));
    }
    write(&out, "tau_selection.csv", &csv)?;
    write_json_to(&out, "tau_selection.json", &sel)?;
    write(
        &out,
        "tau_selection.gp",
        &gnuplot_script(
            "tau_selection.csv",
            "tau_selection.png",
            "Held-out association",
            "tau",
            "mean held-out association",
            &[Series {
                x_col: 1,
                y_col: 2,
                title: ctx.spec.name().into(),
            }],
            true,
        ),
    )?;
    println!(
        "tau={} folds={} spec={} d={}",
        sel.tau,
        folds,
        ctx.spec.to_json(),
        ctx.d()
    );
    Ok(())
}
