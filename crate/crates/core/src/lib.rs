//! Symmetric mountain-pass numerics on grid-discretized energy functionals.
//!
//! * [`grid`]: domains, grid functions, discrete norms.
//! * [`rearrange`]: polarization, Schwarz symmetrization, iterated approximation.
//! * [`energy`]: the λ-family `f(λ; u) = A(u) - λ B(u)` and hypothesis checks.
//! * [`minimax`]: paths, mountain-pass estimates, the deformation engine.
//! * [`trick`]: λ scans and bounded almost-symmetric Palais-Smale sequences.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod functional;
pub mod grid;
pub mod io;
mod linalg;
pub mod minimax;
pub mod rearrange;
pub mod trick;

pub use energy::{
    check_h3, check_h4, random_profile, EnergySpec, GradientWeight, H3Report, H4Report, LambdaFamily, RadialWeight,
};
pub use error::{Error, Result};
pub use functional::{Functional, QuarticSurrogate, SlopeMetric};
pub use grid::{embed_constant, lp_norm, reflect, sobolev_seminorm, v_norm, x_norm, Domain, GridFunction, NormKind};
pub use minimax::{
    descend_path, make_initial_path, mountain_pass_value, path_max, redistribute, reparametrize_collapse, restart_seed,
    MPEstimate, MinimaxConfig, Path, PathFamily,
};
pub use rearrange::{
    approximate_curve, approximate_symmetrization, compatible_polarizers, polarize, schwarz, theta, Normal, Polarizer,
    PolarizerSequence, SymmetrizationConfig,
};
pub use trick::{
    corollary2_sequence, extract_sbps, refine_to_critical, scan_c, select_denjoy_points, CriticalPointRecord, PSReport,
    RefineConfig, ScanConfig, TrickConfig,
};
