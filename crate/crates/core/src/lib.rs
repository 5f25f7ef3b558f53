//! Median-type John–Nirenberg theory on finite metric measure spaces.
//!
//! Spaces are finite point sets with positive weights and a metric. Balls
//! are open (`d < r`) and are identified with their member sets wherever a
//! quantity only depends on the members.

pub mod boman;
pub mod covering;
pub mod czd;
pub mod generators;
pub mod median;
pub mod norms;
pub mod packing;
pub mod pointset;
pub mod space;
pub mod verify;

pub use boman::{
    chain_ratio, global_jn_verify, grid_boman_decomposition, jn_equivalence_check, verify_boman, BomanDecomposition,
    BomanError,
};
pub use covering::{five_cover, Cover, CoverError};
pub use czd::{
    alpha_of, cz_decompose, cz_family, cz_nested, good_lambda_sides, local_jn_verify, median_maximal, sharp_maximal,
    CzDecomposition, CzError, CzParams,
};
pub use generators::{canonical_function, cantor_space, grid_space, FunctionKind, GenError, WeightProfile};
pub use median::{
    deviation_median, is_s_median, maximal_median, median_oscillation, MedianError, Oscillation, SampleFunction,
};
pub use norms::{
    bmo_median_norm, integral_oscillation, jn_integral_norm, jn_median_norm, lp_norm, weak_lp_norm, JnNorm,
    NormError, PackingMode, PackingOptions,
};
pub use pointset::PointSet;
pub use space::{build_space, Ball, DoublingProfile, MetricInput, Space, SpaceError};
