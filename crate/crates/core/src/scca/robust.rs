//! Robust SCCA: alternating sphere-constrained Nelder–Mead with restarts.

use super::classical::{
    classical_directions, pairwise_scatter, penalized_principal_direction, spectral_directions,
};
use super::fit::{FitMethod, FitTrace, RestartRecord, SccaFit};
use super::nelder_mead::{maximize, NelderMeadOptions};
use super::objective::{project, BlockObjective, ObjectiveContext};
use crate::error::{Result, SccaError};
use crate::exec::{derive_seed, map_indexed, rng_from_seed, Execution};
use crate::function_space::normalize_l2;
use crate::linalg::quad_form;
use crate::robust::AssociationSpec;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobustOptions {
    /// Number of random J-unit starting pairs.
    pub random_starts: usize,
    pub max_sweeps: usize,
    /// Stop sweeping once a sweep gains less than this.
    pub gain_tol: f64,
    /// Evaluation budget of one block maximization.
    pub max_evals_per_half_sweep: usize,
    pub seed: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for RobustOptions {
    fn default() -> Self {
        RobustOptions {
            random_starts: 10,
            max_sweeps: 100,
            gain_tol: 1e-8,
            max_evals_per_half_sweep: 2000,
            seed: 0,
            execution: Execution::Parallel,
        }
    }
}

struct Start {
    label: String,
    alpha: DVector<f64>,
    beta: DVector<f64>,
}

/// Maximizes the penalized association of `ctx.spec` over J-unit pairs.
pub fn fit_robust(ctx: &ObjectiveContext, opts: &RobustOptions) -> Result<SccaFit> {
    if ctx.n() < 10 {
        return Err(SccaError::InvalidSample(format!(
            "robust fit needs at least 10 curves, got {}",
            ctx.n()
        )));
    }
    if ctx.d() > ctx.n() {
        return Err(SccaError::InvalidArgument(format!(
            "basis dimension {} exceeds sample size {}",
            ctx.d(),
            ctx.n()
        )));
    }
    let chart = SphereChart::new(&ctx.gram)?;
    let starts = starting_points(ctx, opts);

    let records: Vec<(RestartRecord, DVector<f64>, DVector<f64>)> =
        map_indexed(opts.execution, starts.len(), |i| {
            let s = &starts[i];
            run_restart(ctx, &chart, opts, &s.label, s.alpha.clone(), s.beta.clone())
        });

    // best objective, lowest index on ties
    let mut best: Option<usize> = None;
    for (i, (r, _, _)) in records.iter().enumerate() {
        if r.end_objective > 0.0
            && best.is_none_or(|b| r.end_objective > records[b].0.end_objective)
        {
            best = Some(i);
        }
    }
    let best = best.ok_or(SccaError::NoNondegenerateProjection)?;
    let (alpha, beta) = (records[best].1.clone(), records[best].2.clone());
    let trace = FitTrace {
        restarts: records.into_iter().map(|(r, _, _)| r).collect(),
        best_restart: Some(best),
    };
    SccaFit::assemble(
        ctx,
        &alpha,
        &beta,
        FitMethod::Alternating,
        Some(opts.seed),
        trace,
    )
}

fn starting_points(ctx: &ObjectiveContext, opts: &RobustOptions) -> Vec<Start> {
    let mut starts = Vec::new();
    if let Ok((a, b, _)) = classical_directions(ctx) {
        starts.push(Start {
            label: "classical".into(),
            alpha: a,
            beta: b,
        });
    }
    if ctx.spec != AssociationSpec::CovPearson {
        let (cxx, cyy, cxy) = pairwise_scatter(ctx);
        if let Ok((a, b, _)) = spectral_directions(ctx, cxx, cyy, &cxy) {
            starts.push(Start {
                label: "plug_in".into(),
                alpha: a,
                beta: b,
            });
        }
    }
    let pa =
        penalized_principal_direction(&ctx.scores_x, &ctx.gram, &ctx.penalty, ctx.smoothing.tau1);
    let pb =
        penalized_principal_direction(&ctx.scores_y, &ctx.gram, &ctx.penalty, ctx.smoothing.tau2);
    if let (Some(a), Some(b)) = (pa, pb) {
        starts.push(Start {
            label: "principal".into(),
            alpha: a,
            beta: b,
        });
    }
    let d = ctx.d();
    for k in 0..opts.random_starts {
        let mut rng = rng_from_seed(derive_seed(opts.seed, k as u64));
        let a = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(&mut rng)));
        starts.push(Start {
            label: format!("random-{k}"),
            alpha: a.clone(),
            beta: a,
        });
    }
    starts
        .into_iter()
        .filter_map(|s| {
            let alpha = normalize_l2(&s.alpha, &ctx.gram).ok()?;
            let beta = normalize_l2(&s.beta, &ctx.gram).ok()?;
            Some(Start { alpha, beta, ..s })
        })
        .collect()
}

/// Tangent charts of the J-unit sphere.
pub(crate) struct SphereChart {
    /// Lower Cholesky factor of J.
    l: DMatrix<f64>,
}

impl SphereChart {
    pub(crate) fn new(gram: &DMatrix<f64>) -> Result<Self> {
        let l = gram
            .clone()
            .cholesky()
            .ok_or_else(|| SccaError::Numerical("Gram matrix is not positive definite".into()))?
            .l();
        Ok(SphereChart { l })
    }

    /// J-orthonormal basis (columns) of the J-complement of the J-unit `a`.
    pub(crate) fn tangent_basis(&self, a: &DVector<f64>) -> DMatrix<f64> {
        let d = a.len();
        // whitened point w = L' a is Euclidean-unit; complete it with a
        // Householder reflection mapping e1 to w
        let w = self.l.transpose() * a;
        let mut v = w.clone();
        v[0] -= 1.0;
        let vv = v.dot(&v);
        let mut h = DMatrix::<f64>::identity(d, d);
        if vv > 1e-30 {
            h -= (&v * v.transpose()) * (2.0 / vv);
        }
        let tangent_white = h.columns(1, d - 1).clone_owned();
        self.l
            .transpose()
            .solve_upper_triangular(&tangent_white)
            .expect("Cholesky factor is invertible")
    }
}

struct RestartState {
    alpha: DVector<f64>,
    beta: DVector<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    psi_a: f64,
    psi_b: f64,
    current: f64,
    evaluations: usize,
}

impl RestartState {
    /// Best move of one block with the other held fixed:
    /// `(candidate, value, chart distance)`.
    fn propose(
        &mut self,
        ctx: &ObjectiveContext,
        chart: &SphereChart,
        opts: &RobustOptions,
        x_block: bool,
        step: f64,
    ) -> (DVector<f64>, f64, f64) {
        let (fixed, psi_fixed, center) = if x_block {
            (&self.q, self.psi_b, &self.alpha)
        } else {
            (&self.p, self.psi_a, &self.beta)
        };
        let mut block = BlockObjective::new(ctx, fixed, psi_fixed, !x_block);
        let (cand, value, evals, moved) =
            maximize_block(ctx, chart, opts, center, step, |c, psi| block.value(c, psi));
        self.evaluations += evals;
        (cand, value, moved)
    }

    fn accept(&mut self, ctx: &ObjectiveContext, x_block: bool, cand: DVector<f64>, value: f64) {
        if value <= self.current {
            return;
        }
        if x_block {
            self.p = project(&ctx.scores_x, &cand);
            self.psi_a = quad_form(&ctx.penalty, &cand);
            self.alpha = cand;
        } else {
            self.q = project(&ctx.scores_y, &cand);
            self.psi_b = quad_form(&ctx.penalty, &cand);
            self.beta = cand;
        }
        self.current = value;
    }
}

/// Alternating block maximization from one start. The first sweep tries both
/// blocks and keeps the better move; later sweeps keep that block order.
fn run_restart(
    ctx: &ObjectiveContext,
    chart: &SphereChart,
    opts: &RobustOptions,
    label: &str,
    alpha: DVector<f64>,
    beta: DVector<f64>,
) -> (RestartRecord, DVector<f64>, DVector<f64>) {
    let p = project(&ctx.scores_x, &alpha);
    let q = project(&ctx.scores_y, &beta);
    let psi_a = quad_form(&ctx.penalty, &alpha);
    let psi_b = quad_form(&ctx.penalty, &beta);
    let current = ctx.parts_from_projections(&p, &q, psi_a, psi_b).value;
    let mut st = RestartState {
        alpha,
        beta,
        p,
        q,
        psi_a,
        psi_b,
        current,
        evaluations: 0,
    };
    let start_objective = current;
    let mut sweeps = vec![current];
    let mut step = 0.25;
    let mut x_first = true;

    for sweep in 0..opts.max_sweeps {
        let before = st.current;
        let move_first = if sweep == 0 {
            let (a, va, ma) = st.propose(ctx, chart, opts, true, step);
            let (b, vb, mb) = st.propose(ctx, chart, opts, false, step);
            x_first = va >= vb;
            if x_first {
                st.accept(ctx, true, a, va);
                ma
            } else {
                st.accept(ctx, false, b, vb);
                mb
            }
        } else {
            let (c, v, m) = st.propose(ctx, chart, opts, x_first, step);
            st.accept(ctx, x_first, c, v);
            m
        };
        let (c, v, move_second) = st.propose(ctx, chart, opts, !x_first, step);
        st.accept(ctx, !x_first, c, v);

        sweeps.push(st.current);
        step = (2.0 * move_first.max(move_second)).clamp(1e-3, 0.25);
        if st.current - before < opts.gain_tol {
            break;
        }
    }

    let record = RestartRecord {
        label: label.to_string(),
        start_objective,
        end_objective: st.current,
        sweeps,
        evaluations: st.evaluations,
        phi: st.alpha.iter().copied().collect(),
        psi: st.beta.iter().copied().collect(),
    };
    (record, st.alpha, st.beta)
}

/// Nelder–Mead over the tangent chart at `center`; candidates are pulled
/// back to the sphere by J-normalization. Returns the best point, its value,
/// the evaluation count and the chart distance moved.
fn maximize_block<F>(
    ctx: &ObjectiveContext,
    chart: &SphereChart,
    opts: &RobustOptions,
    center: &DVector<f64>,
    step: f64,
    mut f: F,
) -> (DVector<f64>, f64, usize, f64)
where
    F: FnMut(&DVector<f64>, f64) -> f64,
{
    let d = center.len();
    if d < 2 {
        let v = f(center, quad_form(&ctx.penalty, center));
        return (center.clone(), v, 1, 0.0);
    }
    let tangent = chart.tangent_basis(center);
    let point = |t: &[f64]| -> DVector<f64> {
        let tv = DVector::from_column_slice(t);
        let norm = (1.0 + tv.dot(&tv)).sqrt();
        (center + &tangent * tv) / norm
    };
    let nm = NelderMeadOptions {
        initial_step: step,
        max_evals: opts.max_evals_per_half_sweep,
        f_tol: 1e-10,
        ..Default::default()
    };
    let result = maximize(
        |t| {
            let cand = point(t);
            let psi = quad_form(&ctx.penalty, &cand);
            f(&cand, psi)
        },
        &vec![0.0; d - 1],
        &nm,
    );
    let moved = result.x.iter().map(|v| v * v).sum::<f64>().sqrt();
    (point(&result.x), result.value, result.evals, moved)
}
