use crate::exec::rng_from_seed;
use crate::linalg::{bilinear, quad_form};
use crate::robust::AssociationSpec;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Population scale and co-association on the fitting basis:
/// `sigma^2(u) = c u' gamma11 u`, `gamma(u, v) = c u' gamma12 v`.
#[derive(Debug, Clone)]
pub struct PopulationScale {
    pub gamma11: DMatrix<f64>,
    pub gamma22: DMatrix<f64>,
    pub gamma12: DMatrix<f64>,
    pub c: f64,
}

impl PopulationScale {
    pub fn from_operators(ops: &crate::simulation::PopulationOperators, c: f64) -> Self {
        PopulationScale {
            gamma11: ops.gamma11.clone(),
            gamma22: ops.gamma22.clone(),
            gamma12: ops.gamma12.clone(),
            c,
        }
    }
}

/// Monte-Carlo lower bounds of the three suprema; `directions` counts the
/// candidates actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discrepancies {
    pub c_x: f64,
    pub c_y: f64,
    pub c_xy: f64,
    pub directions: usize,
}

/// Largest `|s_n^2(u) - sigma^2(u)|` (and the Y and cross analogues) over
/// `n_dirs` random directions normalized to unit penalized population norm
/// `sigma^2(u) + tau Psi(u) = 1`, plus the supplied `extra` pairs.
#[allow(clippy::too_many_arguments)]
pub fn discrepancy_suprema(
    scores_x: &DMatrix<f64>,
    scores_y: &DMatrix<f64>,
    spec: &AssociationSpec,
    tau: f64,
    penalty: &DMatrix<f64>,
    population: &PopulationScale,
    n_dirs: usize,
    extra: &[(DVector<f64>, DVector<f64>)],
    seed: u64,
) -> Discrepancies {
    let d = scores_x.ncols();
    let norm = |u: &DVector<f64>, g: &DMatrix<f64>| -> Option<DVector<f64>> {
        let s = population.c * quad_form(g, u) + tau * quad_form(penalty, u);
        (s > 0.0 && s.is_finite()).then(|| u / s.sqrt())
    };
    let mut rng = rng_from_seed(seed);
    let mut pairs: Vec<(DVector<f64>, DVector<f64>)> = extra.to_vec();
    for _ in 0..n_dirs {
        let u = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(&mut rng)));
        let v = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(&mut rng)));
        pairs.push((u, v));
    }

    let mut out = Discrepancies {
        c_x: 0.0,
        c_y: 0.0,
        c_xy: 0.0,
        directions: 0,
    };
    for (u, v) in &pairs {
        let (Some(u), Some(v)) = (norm(u, &population.gamma11), norm(v, &population.gamma22))
        else {
            continue;
        };
        out.directions += 1;
        let p: Vec<f64> = (scores_x * &u).iter().copied().collect();
        let q: Vec<f64> = (scores_y * &v).iter().copied().collect();
        let sx = spec.scale_of(&p).unwrap_or(0.0);
        let sy = spec.scale_of(&q).unwrap_or(0.0);
        out.c_x = out
            .c_x
            .max((sx * sx - population.c * quad_form(&population.gamma11, &u)).abs());
        out.c_y = out
            .c_y
            .max((sy * sy - population.c * quad_form(&population.gamma22, &v)).abs());
        let g = spec.coassociation(&p, &q).map(|c| c.gamma).unwrap_or(0.0);
        out.c_xy = out
            .c_xy
            .max((g - population.c * bilinear(&population.gamma12, &u, &v)).abs());
    }
    out
}
