//! Canonical correlation analysis.
//!
//! The crate covers linear CCA (standard eigenproblem, generalized
//! eigenproblem and SVD routes), ridge-regularised CCA with repeated k-fold
//! cross-validation, kernel CCA (direct and PGSO-reduced), sparse CCA
//! (penalised matrix decomposition and the primal-dual least-squares
//! formulation), and evaluation tools: Bartlett-Lawley significance tests,
//! structure correlations, biplot tables and held-out generalisation scores.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod kernel;
pub mod linear;
pub mod numerics;
pub mod regularized;
pub mod sparse;
mod util;

pub use dataset::{
    CovarianceBlocks, FoldAssignment, PairedDataset, RecipeId, Relation, Standardization,
    SyntheticRecipe, Transform,
};
pub use error::{CcaError, Result};
pub use kernel::{GramPair, KernelCcaModel, KernelSpec, RelationTable};
pub use linear::{CcaModel, Projection, Solver};
pub use numerics::{EigenResult, PgsoFactor, SvdResult, SymMatrix};
pub use regularized::{CvSurface, RegularizationConfig};
pub use sparse::{PmdResult, PrimalDualResult};
