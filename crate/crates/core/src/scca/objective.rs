use crate::error::{Result, SccaError};
use crate::function_space::{BasisId, BasisSystem, FunctionalSample};
use crate::linalg::quad_form;
use crate::robust::{gk_rho, is_degenerate, AssociationSpec, ScaleSpec};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Smoothing parameters `kappa = (tau, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub tau1: f64,
    pub tau2: f64,
    pub d: usize,
}

impl SmoothingParams {
    /// Same `tau` for both blocks.
    pub fn common(tau: f64, d: usize) -> Self {
        SmoothingParams {
            tau1: tau,
            tau2: tau,
            d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for t in [self.tau1, self.tau2] {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(SccaError::InvalidArgument(format!(
                    "tau must be >= 0, got {t}"
                )));
            }
        }
        Ok(())
    }

    pub fn with_tau(self, tau: f64) -> Self {
        SmoothingParams {
            tau1: tau,
            tau2: tau,
            ..self
        }
    }
}

/// Everything needed to evaluate the penalized association of a pair of
/// coefficient vectors.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    pub scores_x: DMatrix<f64>,
    pub scores_y: DMatrix<f64>,
    pub gram: DMatrix<f64>,
    pub penalty: DMatrix<f64>,
    pub spec: AssociationSpec,
    pub smoothing: SmoothingParams,
    pub basis: BasisId,
}

/// Objective value with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveParts {
    pub value: f64,
    pub gamma: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub psi_x: f64,
    pub psi_y: f64,
    pub degenerate: bool,
}

impl ObjectiveContext {
    pub fn new(
        scores_x: DMatrix<f64>,
        scores_y: DMatrix<f64>,
        basis: &BasisSystem,
        spec: AssociationSpec,
        smoothing: SmoothingParams,
    ) -> Result<Self> {
        Self::from_parts(
            scores_x,
            scores_y,
            basis.gram().clone(),
            basis.penalty().clone(),
            basis.id(),
            spec,
            smoothing,
        )
    }

    pub fn from_parts(
        scores_x: DMatrix<f64>,
        scores_y: DMatrix<f64>,
        gram: DMatrix<f64>,
        penalty: DMatrix<f64>,
        basis: BasisId,
        spec: AssociationSpec,
        smoothing: SmoothingParams,
    ) -> Result<Self> {
        smoothing.validate()?;
        spec.validate()?;
        let d = gram.nrows();
        if scores_x.nrows() != scores_y.nrows() {
            return Err(SccaError::InvalidSample(format!(
                "X has {} curves but Y has {}",
                scores_x.nrows(),
                scores_y.nrows()
            )));
        }
        if scores_x.ncols() != d
            || scores_y.ncols() != d
            || penalty.nrows() != d
            || gram.ncols() != d
        {
            return Err(SccaError::InvalidArgument("inconsistent dimensions".into()));
        }
        if scores_x.nrows() < 2 {
            return Err(SccaError::InvalidSample("need at least 2 curves".into()));
        }
        Ok(ObjectiveContext {
            scores_x,
            scores_y,
            gram,
            penalty,
            spec,
            smoothing: SmoothingParams { d, ..smoothing },
            basis,
        })
    }

    pub fn from_samples(
        x: &FunctionalSample,
        y: &FunctionalSample,
        basis: &BasisSystem,
        spec: AssociationSpec,
        smoothing: SmoothingParams,
    ) -> Result<Self> {
        if x.n() != y.n() {
            return Err(SccaError::InvalidSample(format!(
                "X has {} curves but Y has {}",
                x.n(),
                y.n()
            )));
        }
        Self::new(x.project(basis)?, y.project(basis)?, basis, spec, smoothing)
    }

    pub fn n(&self) -> usize {
        self.scores_x.nrows()
    }

    pub fn d(&self) -> usize {
        self.gram.nrows()
    }

    pub fn with_smoothing(&self, smoothing: SmoothingParams) -> Self {
        ObjectiveContext {
            smoothing: SmoothingParams {
                d: self.d(),
                ..smoothing
            },
            ..self.clone()
        }
    }

    pub fn with_spec(&self, spec: AssociationSpec) -> Self {
        ObjectiveContext {
            spec,
            ..self.clone()
        }
    }

    /// Restricts to the given rows.
    pub fn subset(&self, rows: &[usize]) -> Self {
        ObjectiveContext {
            scores_x: self.scores_x.select_rows(rows),
            scores_y: self.scores_y.select_rows(rows),
            ..self.clone()
        }
    }

    pub fn project_x(&self, alpha: &DVector<f64>) -> Vec<f64> {
        project(&self.scores_x, alpha)
    }

    pub fn project_y(&self, beta: &DVector<f64>) -> Vec<f64> {
        project(&self.scores_y, beta)
    }

    pub fn roughness(&self, coef: &DVector<f64>) -> f64 {
        quad_form(&self.penalty, coef)
    }

    /// Penalized association `gamma^2 / ((s_x^2 + tau1 Psi)(s_y^2 + tau2 Psi))`.
    pub fn objective(&self, alpha: &DVector<f64>, beta: &DVector<f64>) -> f64 {
        self.parts(alpha, beta).value
    }

    pub fn parts(&self, alpha: &DVector<f64>, beta: &DVector<f64>) -> ObjectiveParts {
        let p = self.project_x(alpha);
        let q = self.project_y(beta);
        self.parts_from_projections(&p, &q, self.roughness(alpha), self.roughness(beta))
    }

    pub(crate) fn parts_from_projections(
        &self,
        p: &[f64],
        q: &[f64],
        psi_x: f64,
        psi_y: f64,
    ) -> ObjectiveParts {
        evaluate(
            &self.spec,
            p,
            q,
            psi_x,
            psi_y,
            self.smoothing.tau1,
            self.smoothing.tau2,
        )
    }

    /// Unpenalized association at `(alpha, beta)`.
    pub fn unpenalized(&self, alpha: &DVector<f64>, beta: &DVector<f64>) -> f64 {
        let p = self.project_x(alpha);
        let q = self.project_y(beta);
        evaluate(&self.spec, &p, &q, 0.0, 0.0, 0.0, 0.0).value
    }
}

pub(crate) fn project(scores: &DMatrix<f64>, coef: &DVector<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    project_into(scores, coef, &mut out);
    out
}

pub(crate) fn project_into(scores: &DMatrix<f64>, coef: &DVector<f64>, out: &mut Vec<f64>) {
    out.clear();
    out.resize(scores.nrows(), 0.0);
    for (j, c) in coef.iter().enumerate() {
        if *c != 0.0 {
            for (o, s) in out.iter_mut().zip(scores.column(j).iter()) {
                *o += c * s;
            }
        }
    }
}

/// The objective as a function of one block's coefficients, the other
/// block's projection held fixed. GK specs reuse the fixed margin's scale.
pub(crate) struct BlockObjective<'a> {
    ctx: &'a ObjectiveContext,
    fixed: &'a [f64],
    psi_fixed: f64,
    /// The fixed block is X, so candidates are Y directions.
    fixed_is_x: bool,
    gk: Option<(ScaleSpec, bool, f64, bool)>,
    proj: Vec<f64>,
    plus: Vec<f64>,
    minus: Vec<f64>,
    buf: Vec<f64>,
}

impl<'a> BlockObjective<'a> {
    pub(crate) fn new(
        ctx: &'a ObjectiveContext,
        fixed: &'a [f64],
        psi_fixed: f64,
        fixed_is_x: bool,
    ) -> Self {
        let mut buf = Vec::with_capacity(fixed.len());
        let gk = match &ctx.spec {
            AssociationSpec::GkBounded { scale } | AssociationSpec::GkStar { scale } => {
                let sigma = scale.estimate_with(fixed, &mut buf);
                let bounded = matches!(ctx.spec, AssociationSpec::GkBounded { .. });
                Some((*scale, bounded, sigma, is_degenerate(sigma, fixed)))
            }
            _ => None,
        };
        BlockObjective {
            ctx,
            fixed,
            psi_fixed,
            fixed_is_x,
            gk,
            proj: Vec::with_capacity(fixed.len()),
            plus: Vec::with_capacity(fixed.len()),
            minus: Vec::with_capacity(fixed.len()),
            buf,
        }
    }

    pub(crate) fn value(&mut self, coef: &DVector<f64>, psi: f64) -> f64 {
        let ctx = self.ctx;
        let scores = if self.fixed_is_x {
            &ctx.scores_y
        } else {
            &ctx.scores_x
        };
        project_into(scores, coef, &mut self.proj);
        let (psi_x, psi_y) = if self.fixed_is_x {
            (self.psi_fixed, psi)
        } else {
            (psi, self.psi_fixed)
        };
        let (tau1, tau2) = (ctx.smoothing.tau1, ctx.smoothing.tau2);
        let Some((scale, bounded, sigma_fixed, fixed_degenerate)) = self.gk else {
            let (p, q) = if self.fixed_is_x {
                (self.fixed, &self.proj[..])
            } else {
                (&self.proj[..], self.fixed)
            };
            return evaluate(&ctx.spec, p, q, psi_x, psi_y, tau1, tau2).value;
        };
        let sigma = scale.estimate_with(&self.proj, &mut self.buf);
        if fixed_degenerate || is_degenerate(sigma, &self.proj) {
            return 0.0;
        }
        let (u, su, v, sv) = if self.fixed_is_x {
            (self.fixed, sigma_fixed, &self.proj[..], sigma)
        } else {
            (&self.proj[..], sigma, self.fixed, sigma_fixed)
        };
        self.plus.clear();
        self.minus.clear();
        for (a, b) in u.iter().zip(v) {
            self.plus.push(a / su + b / sv);
            self.minus.push(a / su - b / sv);
        }
        let sp = scale.estimate_with(&self.plus, &mut self.buf);
        let sm = scale.estimate_with(&self.minus, &mut self.buf);
        let gamma = su * sv * gk_rho(sp * sp, sm * sm, bounded);
        let den = (su * su + tau1 * psi_x) * (sv * sv + tau2 * psi_y);
        let value = if den > 0.0 { gamma * gamma / den } else { 0.0 };
        if value.is_finite() {
            value
        } else {
            0.0
        }
    }
}

/// Degenerate margins carry no co-association, so the value is 0 whatever
/// the penalty terms are.
pub(crate) fn evaluate(
    spec: &AssociationSpec,
    p: &[f64],
    q: &[f64],
    psi_x: f64,
    psi_y: f64,
    tau1: f64,
    tau2: f64,
) -> ObjectiveParts {
    match spec.coassociation(p, q) {
        Ok(c) => {
            let den =
                (c.sigma_u * c.sigma_u + tau1 * psi_x) * (c.sigma_v * c.sigma_v + tau2 * psi_y);
            let value = if den > 0.0 {
                c.gamma * c.gamma / den
            } else {
                0.0
            };
            ObjectiveParts {
                value: if value.is_finite() { value } else { 0.0 },
                gamma: c.gamma,
                sigma_x: c.sigma_u,
                sigma_y: c.sigma_v,
                psi_x,
                psi_y,
                degenerate: false,
            }
        }
        Err(_) => ObjectiveParts {
            value: 0.0,
            gamma: 0.0,
            sigma_x: 0.0,
            sigma_y: 0.0,
            psi_x,
            psi_y,
            degenerate: true,
        },
    }
}
