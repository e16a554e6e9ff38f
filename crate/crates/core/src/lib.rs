//! Three-setting generalized Bell inequality for `N` qubits.
//!
//! * [`tensor`]: plane-restricted correlation tensors and the GHZ–Werner family,
//! * [`statevector`]: dense state-vector expectation values used as an oracle,
//! * [`grid`]: measurement-setting grids,
//! * [`bounds`]: `(E, E)`, `T_max`, the `2^N T_max` bound and classification,
//! * [`lhv`]: deterministic local hidden-variable strategies and the proof checks,
//! * [`cli`]: the `trisetting` command-line front end.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod grid;
pub mod lhv;
pub mod statevector;
pub mod tensor;

pub use bounds::{
    classify, ee_inner_product, t_max, three_setting_bound, violation_window, BoundsReport,
    TMaxMethod, ViolationWindow,
};
pub use error::{BellError, Result};
pub use grid::SettingGrid;
pub use lhv::{
    factored_inner_product, lhv_inner_product, max_lhv_inner_product, mixture_inner_product,
    projection_decomposition, trig_identity_suite, ConvexLhvModel, DeterministicStrategy,
    SearchMode,
};
pub use statevector::{statevector_correlation_oracle, PauliAxis};
pub use tensor::{evaluate, ghz_werner_tensor, sum_squared_components, CorrelationTensor, DirectionSet};
