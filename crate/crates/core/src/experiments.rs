//! Replicated simulation studies: convergence (penalty-only and sieve
//! regimes) and contamination robustness.

use crate::error::{Result, SccaError};
use crate::exec::{derive_seed, map_indexed, Execution};
use crate::function_space::{BasisKind, BasisSystem, Grid};
use crate::io::{csv_field, fmt_opt};
use crate::linalg::quad_form;
use crate::metrics::{
    angle_metric, discrepancy_suprema, lx_metric, ConvergenceReport, PopulationScale, ReportRow,
    SummaryStat,
};
use crate::robust::AssociationSpec;
use crate::scca::{
    fit, fit_classical, FitOptions, ObjectiveContext, RobustOptions, SmoothingParams,
};
use crate::simulation::{ContaminationModel, GeneratorBasis, ProcessModel, Tail};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Parameters of [`ProcessModel::canonical`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub k: usize,
    pub rho0: f64,
    pub spectrum: Vec<f64>,
    pub tail: Tail,
    pub generator: Option<GeneratorBasis>,
    /// Observation grid size on the model domain.
    pub grid_points: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            k: 4,
            rho0: 0.7,
            spectrum: vec![1.0, 0.5, 0.25, 0.125],
            tail: Tail::Gaussian,
            generator: None,
            grid_points: 101,
        }
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<ProcessModel> {
        let mut m =
            ProcessModel::canonical(self.k, self.rho0, &self.spectrum)?.with_tail(self.tail)?;
        if let Some(g) = self.generator {
            m = m.with_generator(g)?;
        }
        Ok(m)
    }

    pub fn grid(&self, model: &ProcessModel) -> Result<Grid> {
        Grid::uniform(model.domain.0, model.domain.1, self.grid_points)
    }
}

/// How the basis dimension depends on `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    /// Fixed, generous `d`; smoothing comes from `tau` alone.
    PenaltyOnly { d: usize },
    /// `d_n = ceil(scale * n^exponent)`, raised to odd for Fourier.
    Sieve { scale: f64, exponent: f64 },
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::PenaltyOnly { .. } => "penalty_only",
            Regime::Sieve { .. } => "sieve",
        }
    }

    pub fn dim(&self, n: usize, kind: BasisKind) -> usize {
        match *self {
            Regime::PenaltyOnly { d } => d,
            Regime::Sieve { scale, exponent } => {
                let d = (scale * (n as f64).powf(exponent)).ceil() as usize;
                match kind {
                    BasisKind::Fourier if d.is_multiple_of(2) => d + 1,
                    _ => d,
                }
            }
        }
    }
}

/// `tau_n = scale * n^(-exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TauSchedule {
    pub scale: f64,
    pub exponent: f64,
}

impl Default for TauSchedule {
    fn default() -> Self {
        TauSchedule {
            scale: 1.0,
            exponent: 1.0 / 3.0,
        }
    }
}

impl TauSchedule {
    pub fn at(&self, n: usize) -> f64 {
        self.scale * (n as f64).powf(-self.exponent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConsistencyConfig {
    pub model: ModelConfig,
    pub ns: Vec<usize>,
    pub replicates: usize,
    pub regimes: Vec<Regime>,
    pub specs: Vec<AssociationSpec>,
    pub basis: BasisKind,
    pub tau: TauSchedule,
    /// Optimizer settings of each robust fit; the seed is replaced by the
    /// replicate seed and execution is sequential inside a replicate.
    pub optimizer: RobustOptions,
    /// Random candidates for the discrepancy diagnostics; 0 disables them.
    pub discrepancy_dirs: usize,
    pub seed: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        ConsistencyConfig {
            model: ModelConfig::default(),
            ns: vec![100, 400, 1600],
            replicates: 50,
            regimes: vec![
                Regime::PenaltyOnly { d: 15 },
                Regime::Sieve {
                    scale: 2.0,
                    exponent: 0.25,
                },
            ],
            specs: vec![AssociationSpec::gk_bounded_mad()],
            basis: BasisKind::Fourier,
            tau: TauSchedule::default(),
            optimizer: experiment_optimizer(),
            discrepancy_dirs: 20,
            seed: 1,
            execution: Execution::default(),
        }
    }
}

/// Seed of replicate `rep` at sample size `n`, shared by every regime and spec.
pub fn replicate_seed(master: u64, n: usize, rep: usize) -> u64 {
    derive_seed(derive_seed(master, n as u64), rep as u64)
}

struct Cell {
    regime: Regime,
    n: usize,
    d: usize,
    tau: f64,
    spec: AssociationSpec,
    basis: BasisSystem,
    truth: (DVector<f64>, DVector<f64>),
    population: PopulationScale,
}

/// Simulation, fit and metrics for every `(regime, n, spec)` cell.
/// Failed replicates are recorded with their error and the run continues.
pub fn run_consistency(cfg: &ConsistencyConfig) -> Result<ConvergenceReport> {
    if cfg.ns.is_empty() || cfg.replicates == 0 || cfg.regimes.is_empty() || cfg.specs.is_empty() {
        return Err(SccaError::InvalidArgument(
            "need at least one n, replicate, regime and spec".into(),
        ));
    }
    for s in &cfg.specs {
        s.validate()?;
    }
    let model = cfg.model.build()?;
    let grid = cfg.model.grid(&model)?;

    let mut cells = Vec::new();
    for regime in &cfg.regimes {
        for &n in &cfg.ns {
            let d = regime.dim(n, cfg.basis);
            let basis = BasisSystem::new(cfg.basis, d, &grid)?;
            let truth = model.projected_truth(&basis)?;
            let population =
                PopulationScale::from_operators(&model.population_in_basis(&basis)?, 1.0);
            for spec in &cfg.specs {
                cells.push(Cell {
                    regime: *regime,
                    n,
                    d,
                    tau: cfg.tau.at(n),
                    spec: *spec,
                    basis: basis.clone(),
                    truth: truth.clone(),
                    population: population.clone(),
                });
            }
        }
    }

    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.replicates).map(move |r| (c, r)))
        .collect();
    let rows = map_indexed(cfg.execution, jobs.len(), |j| {
        let (c, rep) = jobs[j];
        consistency_replicate(cfg, &model, &grid, &cells[c], rep)
    });
    Ok(ConvergenceReport { rows })
}

fn consistency_replicate(
    cfg: &ConsistencyConfig,
    model: &ProcessModel,
    grid: &Grid,
    cell: &Cell,
    rep: usize,
) -> ReportRow {
    let seed = replicate_seed(cfg.seed, cell.n, rep);
    let (phi0, psi0) = &cell.truth;
    let mut row = ReportRow {
        regime: cell.regime.name().to_string(),
        n: cell.n,
        d: cell.d,
        tau: cell.tau,
        spec: cell.spec.to_json(),
        replicate: rep,
        seed,
        lx: None,
        ly: None,
        lx_degenerate: false,
        ly_degenerate: false,
        lambda_hat: None,
        lambda_err: None,
        angle_x: None,
        angle_y: None,
        tau_psi_phi: cell.tau * quad_form(cell.basis.penalty(), phi0),
        c_x: None,
        c_y: None,
        c_xy: None,
        error: None,
    };
    let result = (|| -> Result<()> {
        let (x, y) = model.sample_pair(cell.n, grid, seed)?;
        let ctx = ObjectiveContext::from_samples(
            &x,
            &y,
            &cell.basis,
            cell.spec,
            SmoothingParams::common(cell.tau, cell.d),
        )?;
        let opts = fit_options(&cfg.optimizer, seed);
        let f = fit(&ctx, &opts)?;
        let (a, b) = (f.phi_coef(), f.psi_coef());
        let lx = lx_metric(&a, phi0, &ctx.scores_x, &cell.spec);
        let ly = lx_metric(&b, psi0, &ctx.scores_y, &cell.spec);
        row.lx = Some(lx.value);
        row.ly = Some(ly.value);
        row.lx_degenerate = lx.degenerate;
        row.ly_degenerate = ly.degenerate;
        row.lambda_hat = Some(f.lambda_hat);
        row.lambda_err = Some((f.lambda_hat - model.lambda0()).abs());
        row.angle_x = Some(angle_metric(&a, phi0, cell.basis.gram()));
        row.angle_y = Some(angle_metric(&b, psi0, cell.basis.gram()));
        if cfg.discrepancy_dirs > 0 {
            let disc = discrepancy_suprema(
                &ctx.scores_x,
                &ctx.scores_y,
                &cell.spec,
                cell.tau,
                cell.basis.penalty(),
                &cell.population,
                cfg.discrepancy_dirs,
                &[(a, b)],
                derive_seed(seed, 0xD15C),
            );
            row.c_x = Some(disc.c_x);
            row.c_y = Some(disc.c_y);
            row.c_xy = Some(disc.c_xy);
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

/// Leaner than [`RobustOptions::default`] so replicated studies fit a
/// single-core time budget.
pub fn experiment_optimizer() -> RobustOptions {
    RobustOptions {
        random_starts: 1,
        max_evals_per_half_sweep: 500,
        gain_tol: 1e-5,
        ..Default::default()
    }
}

fn fit_options(optimizer: &RobustOptions, seed: u64) -> FitOptions {
    FitOptions {
        force_alternating: false,
        robust: RobustOptions {
            seed,
            execution: Execution::Sequential,
            ..*optimizer
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobustnessConfig {
    pub model: ModelConfig,
    pub n: usize,
    pub replicates: usize,
    /// Contamination fractions; each overrides `contamination.fraction`.
    pub fractions: Vec<f64>,
    pub contamination: ContaminationModel,
    pub specs: Vec<AssociationSpec>,
    pub basis: BasisKind,
    pub d: usize,
    /// Defaults to the consistency schedule at `n`.
    pub tau: Option<f64>,
    pub optimizer: RobustOptions,
    pub seed: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            model: ModelConfig::default(),
            n: 400,
            replicates: 50,
            fractions: vec![0.0, 0.1],
            contamination: ContaminationModel::default(),
            specs: vec![
                AssociationSpec::gk_bounded_mad(),
                AssociationSpec::m_scatter(),
            ],
            basis: BasisKind::Fourier,
            d: 15,
            tau: None,
            optimizer: experiment_optimizer(),
            seed: 1,
            execution: Execution::default(),
        }
    }
}

impl RobustnessConfig {
    pub fn tau_value(&self) -> f64 {
        self.tau
            .unwrap_or_else(|| TauSchedule::default().at(self.n))
    }
}

/// One robust fit paired with the classical fit on the same contaminated sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub fraction: f64,
    pub replicate: usize,
    pub seed: u64,
    pub spec: String,
    pub angle_x: Option<f64>,
    pub angle_y: Option<f64>,
    pub lambda_hat: Option<f64>,
    pub classical_angle_x: Option<f64>,
    pub classical_angle_y: Option<f64>,
    pub classical_lambda_hat: Option<f64>,
    pub error: Option<String>,
}

impl RobustnessRow {
    /// Robust X-direction error strictly below the classical one.
    pub fn win(&self) -> Option<bool> {
        Some(self.angle_x? < self.classical_angle_x?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSummary {
    pub fraction: f64,
    pub spec: String,
    pub pairs: usize,
    pub wins: usize,
    pub win_fraction: f64,
    pub angle_x: Option<SummaryStat>,
    pub classical_angle_x: Option<SummaryStat>,
    pub lambda_bias: Option<SummaryStat>,
    pub classical_lambda_bias: Option<SummaryStat>,
    pub failures: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub lambda0: f64,
    pub rows: Vec<RobustnessRow>,
}

impl RobustnessReport {
    pub fn summaries(&self) -> Vec<RobustnessSummary> {
        let mut keys: Vec<(u64, String)> = Vec::new();
        for r in &self.rows {
            let k = (r.fraction.to_bits(), r.spec.clone());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        keys.into_iter()
            .map(|(f, spec)| {
                let rows: Vec<&RobustnessRow> = self
                    .rows
                    .iter()
                    .filter(|r| r.fraction.to_bits() == f && r.spec == spec)
                    .collect();
                let pairs = rows.iter().filter(|r| r.win().is_some()).count();
                let wins = rows.iter().filter(|r| r.win() == Some(true)).count();
                let stat = |g: &dyn Fn(&RobustnessRow) -> Option<f64>| {
                    SummaryStat::of(&rows.iter().filter_map(|r| g(r)).collect::<Vec<_>>())
                };
                RobustnessSummary {
                    fraction: f64::from_bits(f),
                    pairs,
                    wins,
                    win_fraction: if pairs > 0 {
                        wins as f64 / pairs as f64
                    } else {
                        0.0
                    },
                    angle_x: stat(&|r| r.angle_x),
                    classical_angle_x: stat(&|r| r.classical_angle_x),
                    lambda_bias: stat(&|r| r.lambda_hat.map(|l| l - self.lambda0)),
                    classical_lambda_bias: stat(&|r| {
                        r.classical_lambda_hat.map(|l| l - self.lambda0)
                    }),
                    failures: rows.iter().filter(|r| r.error.is_some()).count(),
                    spec,
                }
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "fraction,replicate,seed,angle_x,angle_y,lambda_hat,classical_angle_x,classical_angle_y,classical_lambda_hat,win,error,spec\n",
        );
        for r in &self.rows {
            let fields = [
                r.fraction.to_string(),
                r.replicate.to_string(),
                r.seed.to_string(),
                fmt_opt(r.angle_x),
                fmt_opt(r.angle_y),
                fmt_opt(r.lambda_hat),
                fmt_opt(r.classical_angle_x),
                fmt_opt(r.classical_angle_y),
                fmt_opt(r.classical_lambda_hat),
                r.win().map(|w| w.to_string()).unwrap_or_default(),
                csv_field(r.error.as_deref().unwrap_or("")),
                csv_field(&r.spec),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "fraction,pairs,wins,win_fraction,angle_median,angle_iqr,classical_angle_median,classical_angle_iqr,lambda_bias_median,classical_lambda_bias_median,failures,spec\n",
        );
        let med = |s: &Option<SummaryStat>| fmt_opt(s.map(|s| s.median));
        let iqr = |s: &Option<SummaryStat>| fmt_opt(s.and_then(|s| s.iqr));
        for s in self.summaries() {
            let fields = [
                s.fraction.to_string(),
                s.pairs.to_string(),
                s.wins.to_string(),
                s.win_fraction.to_string(),
                med(&s.angle_x),
                iqr(&s.angle_x),
                med(&s.classical_angle_x),
                iqr(&s.classical_angle_x),
                med(&s.lambda_bias),
                med(&s.classical_lambda_bias),
                s.failures.to_string(),
                csv_field(&s.spec),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summaries()).expect("summary serializes")
    }
}

/// Classical against each robust spec on identically contaminated samples.
pub fn run_robustness(cfg: &RobustnessConfig) -> Result<RobustnessReport> {
    if cfg.replicates == 0 || cfg.fractions.is_empty() || cfg.specs.is_empty() {
        return Err(SccaError::InvalidArgument(
            "need at least one replicate, fraction and spec".into(),
        ));
    }
    for &f in &cfg.fractions {
        ContaminationModel {
            fraction: f,
            ..cfg.contamination.clone()
        }
        .validate()?;
    }
    for s in &cfg.specs {
        s.validate()?;
    }
    let model = cfg.model.build()?;
    let grid = cfg.model.grid(&model)?;
    let basis = BasisSystem::new(cfg.basis, cfg.d, &grid)?;
    let (phi0, psi0) = model.projected_truth(&basis)?;
    let tau = cfg.tau_value();
    let smoothing = SmoothingParams::common(tau, cfg.d);
    smoothing.validate()?;

    let jobs: Vec<(usize, usize)> = (0..cfg.fractions.len())
        .flat_map(|f| (0..cfg.replicates).map(move |r| (f, r)))
        .collect();
    let per_job: Vec<Vec<RobustnessRow>> = map_indexed(cfg.execution, jobs.len(), |j| {
        let (fi, rep) = jobs[j];
        let fraction = cfg.fractions[fi];
        let seed = replicate_seed(cfg.seed, cfg.n, rep);
        let blank = |spec: &AssociationSpec| RobustnessRow {
            fraction,
            replicate: rep,
            seed,
            spec: spec.to_json(),
            angle_x: None,
            angle_y: None,
            lambda_hat: None,
            classical_angle_x: None,
            classical_angle_y: None,
            classical_lambda_hat: None,
            error: None,
        };
        let contamination = ContaminationModel {
            fraction,
            ..cfg.contamination.clone()
        };
        let prepared = (|| -> Result<ObjectiveContext> {
            let (mut x, mut y) = model.sample_pair(cfg.n, &grid, seed)?;
            contamination
                .apply(&mut x, &mut y, derive_seed(seed, 0xC0))
                .map(|_| ())?;
            ObjectiveContext::from_samples(&x, &y, &basis, AssociationSpec::CovPearson, smoothing)
        })();
        let ctx = match prepared {
            Ok(c) => c,
            Err(e) => {
                return cfg
                    .specs
                    .iter()
                    .map(|s| RobustnessRow {
                        error: Some(e.to_string()),
                        ..blank(s)
                    })
                    .collect();
            }
        };
        let gram = basis.gram();
        let classical = fit_classical(&ctx);
        cfg.specs
            .iter()
            .map(|spec| {
                let mut row = blank(spec);
                match &classical {
                    Ok(c) => {
                        row.classical_angle_x = Some(angle_metric(&c.phi_coef(), &phi0, gram));
                        row.classical_angle_y = Some(angle_metric(&c.psi_coef(), &psi0, gram));
                        row.classical_lambda_hat = Some(c.lambda_hat);
                    }
                    Err(e) => row.error = Some(format!("classical: {e}")),
                }
                match fit(&ctx.with_spec(*spec), &fit_options(&cfg.optimizer, seed)) {
                    Ok(f) => {
                        row.angle_x = Some(angle_metric(&f.phi_coef(), &phi0, gram));
                        row.angle_y = Some(angle_metric(&f.psi_coef(), &psi0, gram));
                        row.lambda_hat = Some(f.lambda_hat);
                    }
                    Err(e) => row.error = Some(e.to_string()),
                }
                row
            })
            .collect()
    });
    Ok(RobustnessReport {
        lambda0: model.lambda0(),
        rows: per_job.into_iter().flatten().collect(),
    })
}
