//! Scale functionals and bivariate co-association measures.

mod gk;
mod scale;
mod scatter;
mod spec;

pub use gk::{coassoc_gk, GkEstimate};
pub(crate) use gk::{gk_rho, is_degenerate};
pub use scale::{
    mad_raw, mean, median, median_in_place, sd, ScaleSpec, ScoreFamily, BISQUARE_TUNING,
    MAD_NORMAL_CONSTANT, MSCALE_BREAKDOWN,
};
pub use scatter::{
    assoc_from_scatter, scale_m, scatter_m, scatter_ogk, BivariateScatter, MScatterTuning,
};
pub use spec::{pearson, AssociationSpec, CoAssociation};
