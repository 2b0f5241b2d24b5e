//! Gaussian and elliptical functional processes with known first canonical pair.

use crate::error::{Result, SccaError};
use crate::exec::rng_from_seed;
use crate::function_space::{normalize_l2, BasisKind, BasisSystem, FunctionalSample, Grid};
use crate::linalg::sym_eigen_sorted;
use nalgebra::{DMatrix, DVector};
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tail {
    Gaussian,
    /// Multivariate t: Gaussian scores divided by `sqrt(chi2_df / df)`.
    T {
        df: f64,
    },
}

/// Basis used to synthesize curves from scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorBasis {
    pub kind: BasisKind,
    pub d: usize,
}

/// `X = mean_x + sum_k s_k g_{c_k}` and likewise for `Y`, where the joint
/// score vector `(s_x, s_y)` has covariance `score_cov`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub domain: (f64, f64),
    pub generator: GeneratorBasis,
    /// Generator basis index carrying each of the `K` scores.
    pub components: Vec<usize>,
    pub mean_x: Vec<f64>,
    pub mean_y: Vec<f64>,
    /// `2K x 2K`, X scores first.
    pub score_cov: Vec<Vec<f64>>,
    pub tail: Tail,
    /// Canonical directions in score coordinates.
    pub true_phi_scores: Vec<f64>,
    pub true_psi_scores: Vec<f64>,
    pub rho0: f64,
}

impl ProcessModel {
    /// `K` components with diagonal score covariance `spectrum` in both
    /// blocks and correlation `rho0` between the two first scores only. The
    /// first canonical pair is the first generator function for both `X`
    /// and `Y`, with `lambda0 = rho0^2`.
    pub fn canonical(k: usize, rho0: f64, spectrum: &[f64]) -> Result<Self> {
        Self::canonical_on(
            k,
            rho0,
            spectrum,
            (0.0, 2.0 * std::f64::consts::PI),
            (0..k).collect(),
        )
    }

    pub fn canonical_on(
        k: usize,
        rho0: f64,
        spectrum: &[f64],
        domain: (f64, f64),
        components: Vec<usize>,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho0) {
            return Err(SccaError::InvalidArgument(format!(
                "rho0 must lie in [0, 1], got {rho0}"
            )));
        }
        if k == 0 || spectrum.len() != k || components.len() != k {
            return Err(SccaError::InvalidArgument(format!(
                "need K = {k} spectrum values and components"
            )));
        }
        if spectrum.iter().any(|s| !(*s > 0.0)) || spectrum.windows(2).any(|w| w[1] > w[0]) {
            return Err(SccaError::InvalidArgument(
                "spectrum must be positive and decreasing".into(),
            ));
        }
        let max_comp = *components.iter().max().unwrap();
        let mut gd = max_comp + 1;
        if gd.is_multiple_of(2) {
            gd += 1;
        }
        let mut cov = vec![vec![0.0; 2 * k]; 2 * k];
        for i in 0..k {
            cov[i][i] = spectrum[i];
            cov[k + i][k + i] = spectrum[i];
        }
        cov[0][k] = rho0 * spectrum[0];
        cov[k][0] = rho0 * spectrum[0];
        let mut e1 = vec![0.0; k];
        e1[0] = 1.0;
        let model = ProcessModel {
            domain,
            generator: GeneratorBasis {
                kind: BasisKind::Fourier,
                d: gd,
            },
            components,
            mean_x: vec![0.0; gd],
            mean_y: vec![0.0; gd],
            score_cov: cov,
            tail: Tail::Gaussian,
            true_phi_scores: e1.clone(),
            true_psi_scores: e1,
            rho0,
        };
        model.verify()?;
        Ok(model)
    }

    pub fn with_tail(mut self, tail: Tail) -> Result<Self> {
        if let Tail::T { df } = tail {
            if !(df > 0.0) {
                return Err(SccaError::InvalidArgument(format!(
                    "t degrees of freedom must be > 0, got {df}"
                )));
            }
        }
        self.tail = tail;
        Ok(self)
    }

    pub fn with_means(mut self, mean_x: Vec<f64>, mean_y: Vec<f64>) -> Result<Self> {
        if mean_x.len() != self.generator.d || mean_y.len() != self.generator.d {
            return Err(SccaError::InvalidArgument(
                "mean coefficient length mismatch".into(),
            ));
        }
        self.mean_x = mean_x;
        self.mean_y = mean_y;
        Ok(self)
    }

    /// Same scores synthesized with another generator basis (for example
    /// B-splines, to separate sieve bias from sampling error).
    pub fn with_generator(mut self, generator: GeneratorBasis) -> Result<Self> {
        if self.components.iter().any(|c| *c >= generator.d) {
            return Err(SccaError::InvalidArgument(
                "component index outside generator basis".into(),
            ));
        }
        if self.mean_x.iter().chain(&self.mean_y).any(|m| *m != 0.0) {
            return Err(SccaError::InvalidArgument(
                "reset means before changing generator".into(),
            ));
        }
        self.mean_x = vec![0.0; generator.d];
        self.mean_y = vec![0.0; generator.d];
        self.generator = generator;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn lambda0(&self) -> f64 {
        self.rho0 * self.rho0
    }

    pub fn score_cov_matrix(&self) -> DMatrix<f64> {
        let m = self.score_cov.len();
        DMatrix::from_fn(m, m, |i, j| self.score_cov[i][j])
    }

    /// Solves the population canonical problem on `score_cov` and checks it
    /// reproduces the labelled `(phi, psi, rho0^2)`.
    pub fn verify(&self) -> Result<()> {
        let k = self.k();
        let cov = self.score_cov_matrix();
        if cov.nrows() != 2 * k {
            return Err(SccaError::InconsistentModel(
                "score covariance must be 2K x 2K".into(),
            ));
        }
        let (values, _) = sym_eigen_sorted(&cov);
        if values[0] < -1e-10 * values[2 * k - 1].abs().max(1.0) {
            return Err(SccaError::InconsistentModel(
                "score covariance is not PSD".into(),
            ));
        }
        let pop = population_cca(&cov, k)?;
        if (pop.lambda - self.lambda0()).abs() > 1e-8 {
            return Err(SccaError::InconsistentModel(format!(
                "population canonical association {} differs from rho0^2 = {}",
                pop.lambda,
                self.lambda0()
            )));
        }
        if self.rho0 > 0.0 {
            let check = |label: &DVector<f64>, found: &DVector<f64>, block: &DMatrix<f64>| {
                // compare in the block's covariance metric
                let c = (label.transpose() * block * found)[(0, 0)].abs()
                    / ((label.transpose() * block * label)[(0, 0)]
                        * (found.transpose() * block * found)[(0, 0)])
                        .sqrt();
                c > 1.0 - 1e-8
            };
            let sxx = cov.view((0, 0), (k, k)).clone_owned();
            let syy = cov.view((k, k), (k, k)).clone_owned();
            let phi = DVector::from_column_slice(&self.true_phi_scores);
            let psi = DVector::from_column_slice(&self.true_psi_scores);
            if !check(&phi, &pop.phi, &sxx) || !check(&psi, &pop.psi, &syy) {
                return Err(SccaError::InconsistentModel(
                    "labelled canonical directions do not solve the population problem".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn generator_basis(&self, grid: &Grid) -> Result<BasisSystem> {
        if (grid.start() - self.domain.0).abs() > 1e-9 || (grid.end() - self.domain.1).abs() > 1e-9
        {
            return Err(SccaError::InvalidGrid(format!(
                "grid [{}, {}] does not match model domain [{}, {}]",
                grid.start(),
                grid.end(),
                self.domain.0,
                self.domain.1
            )));
        }
        BasisSystem::new(self.generator.kind, self.generator.d, grid)
    }

    /// Generator-basis coefficients of the curve `sum_k w_k g_{c_k}` whose
    /// inner product with X reproduces the score combination `w' s_x`.
    pub fn direction_coefficients(
        &self,
        score_weights: &[f64],
        generator: &BasisSystem,
    ) -> DVector<f64> {
        let d = self.generator.d;
        let mut target = DVector::zeros(d);
        for (w, c) in score_weights.iter().zip(&self.components) {
            target[*c] = *w;
        }
        // <u, X> = coef' G s-embedding, so coef = G^{-1} target
        match generator.gram().clone().cholesky() {
            Some(ch) => ch.solve(&target),
            None => target,
        }
    }

    /// Curves on `grid` of the true first canonical directions, L2-unit.
    pub fn true_direction_curves(&self, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
        let g = self.generator_basis(grid)?;
        let unit = |w: &[f64]| -> Result<Vec<f64>> {
            let c = normalize_l2(&self.direction_coefficients(w, &g), g.gram())?;
            Ok(g.curve(&c))
        };
        Ok((unit(&self.true_phi_scores)?, unit(&self.true_psi_scores)?))
    }

    /// Joint square root `A` with `A A' = score_cov`.
    fn cov_root(&self) -> DMatrix<f64> {
        let cov = self.score_cov_matrix();
        let (values, vectors) = sym_eigen_sorted(&cov);
        let mut root = vectors.clone();
        for (j, v) in values.iter().enumerate() {
            root.column_mut(j).scale_mut(v.max(0.0).sqrt());
        }
        root
    }

    /// Draws `n` independent pairs `(X_i, Y_i)` on `grid`; deterministic in `seed`.
    pub fn sample_pair(
        &self,
        n: usize,
        grid: &Grid,
        seed: u64,
    ) -> Result<(FunctionalSample, FunctionalSample)> {
        if n < 2 {
            return Err(SccaError::InvalidArgument(format!("need n >= 2, got {n}")));
        }
        let basis = self.generator_basis(grid)?;
        let k = self.k();
        let root = self.cov_root();
        let mut rng = rng_from_seed(seed);
        let chi = match self.tail {
            Tail::T { df } => {
                Some(ChiSquared::new(df).map_err(|e| SccaError::InvalidArgument(e.to_string()))?)
            }
            Tail::Gaussian => None,
        };

        let mut scores_x = DMatrix::zeros(n, k);
        let mut scores_y = DMatrix::zeros(n, k);
        for i in 0..n {
            let z =
                DVector::from_iterator(2 * k, (0..2 * k).map(|_| StandardNormal.sample(&mut rng)));
            let mut s = &root * z;
            if let (Some(chi), Tail::T { df }) = (&chi, self.tail) {
                let w: f64 = chi.sample(&mut rng);
                s /= (w / df).sqrt();
            }
            for j in 0..k {
                scores_x[(i, j)] = s[j];
                scores_y[(i, j)] = s[k + j];
            }
        }

        let rows = |c: &[usize]| -> DMatrix<f64> {
            let mut m = DMatrix::zeros(c.len(), grid.len());
            for (r, &idx) in c.iter().enumerate() {
                m.set_row(r, &basis.eval().row(idx));
            }
            m
        };
        let funcs = rows(&self.components);
        let mean_curve = |coef: &[f64]| basis.curve(&DVector::from_column_slice(coef));
        let mx = mean_curve(&self.mean_x);
        let my = mean_curve(&self.mean_y);

        let mut vx = scores_x * &funcs;
        let mut vy = scores_y * &funcs;
        for i in 0..n {
            for t in 0..grid.len() {
                vx[(i, t)] += mx[t];
                vy[(i, t)] += my[t];
            }
        }
        Ok((
            FunctionalSample::new(grid.clone(), vx)?,
            FunctionalSample::new(grid.clone(), vy)?,
        ))
    }

    /// Population covariance operators expressed on a fitting basis:
    /// `Var(<u,X>) = alpha' gamma11 alpha` etc., for Gaussian tails
    /// (t tails scale all three by `df / (df - 2)`).
    pub fn population_in_basis(&self, fit_basis: &BasisSystem) -> Result<PopulationOperators> {
        let grid = fit_basis.grid();
        let gen = self.generator_basis(grid)?;
        let k = self.k();
        // P[j, c] = <xi_j, g_{comp_c}>
        let mut funcs = DMatrix::zeros(k, grid.len());
        for (r, &idx) in self.components.iter().enumerate() {
            funcs.set_row(r, &gen.eval().row(idx));
        }
        let p = fit_basis.project(&funcs)?.transpose();
        let cov = self.score_cov_matrix();
        let sxx = cov.view((0, 0), (k, k)).clone_owned();
        let syy = cov.view((k, k), (k, k)).clone_owned();
        let sxy = cov.view((0, k), (k, k)).clone_owned();
        let factor = match self.tail {
            Tail::Gaussian => 1.0,
            Tail::T { df } if df > 2.0 => df / (df - 2.0),
            Tail::T { .. } => f64::INFINITY,
        };
        Ok(PopulationOperators {
            gamma11: &p * sxx * p.transpose() * factor,
            gamma22: &p * syy * p.transpose() * factor,
            gamma12: &p * sxy * p.transpose() * factor,
        })
    }

    /// Best L2 approximation in `fit_basis` of the true directions.
    pub fn projected_truth(&self, fit_basis: &BasisSystem) -> Result<(DVector<f64>, DVector<f64>)> {
        let (phi, psi) = self.true_direction_curves(fit_basis.grid())?;
        Ok((
            project_curve(&phi, fit_basis)?,
            project_curve(&psi, fit_basis)?,
        ))
    }
}

/// Coefficients of the L2 projection of a gridded curve onto the basis span.
pub fn project_curve(curve: &[f64], basis: &BasisSystem) -> Result<DVector<f64>> {
    let row = DMatrix::from_row_slice(1, curve.len(), curve);
    let inner: DVector<f64> = basis.project(&row)?.transpose().column(0).into_owned();
    basis
        .gram()
        .clone()
        .cholesky()
        .map(|c| c.solve(&inner))
        .ok_or_else(|| SccaError::Numerical("Gram matrix not positive definite".into()))
}

#[derive(Debug, Clone)]
pub struct PopulationOperators {
    pub gamma11: DMatrix<f64>,
    pub gamma22: DMatrix<f64>,
    pub gamma12: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct PopulationCca {
    pub lambda: f64,
    pub phi: DVector<f64>,
    pub psi: DVector<f64>,
}

/// First canonical pair of a `2K x 2K` covariance via symmetric inverse
/// square roots of the diagonal blocks.
pub fn population_cca(cov: &DMatrix<f64>, k: usize) -> Result<PopulationCca> {
    let sxx = cov.view((0, 0), (k, k)).clone_owned();
    let syy = cov.view((k, k), (k, k)).clone_owned();
    let sxy = cov.view((0, k), (k, k)).clone_owned();
    let inv_sqrt = |m: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let (values, vectors) = sym_eigen_sorted(m);
        if values[0] <= 0.0 {
            return Err(SccaError::InconsistentModel(
                "singular marginal covariance".into(),
            ));
        }
        let d = DMatrix::from_diagonal(&values.map(|v| 1.0 / v.sqrt()));
        Ok(&vectors * d * vectors.transpose())
    };
    let wx = inv_sqrt(&sxx)?;
    let wy = inv_sqrt(&syy)?;
    let m = &wx * sxy * &wy;
    // leading eigenvector of M M' gives the whitened X direction
    let (values, vectors) = sym_eigen_sorted(&(&m * m.transpose()));
    let lambda = values[k - 1].max(0.0);
    let a = vectors.column(k - 1).clone_owned();
    let b = m.transpose() * &a;
    let phi = &wx * a;
    let psi = if b.norm() > 0.0 {
        &wy * b
    } else {
        DVector::zeros(k)
    };
    Ok(PopulationCca { lambda, phi, psi })
}
