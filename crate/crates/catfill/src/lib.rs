//! Executable filling-volume geometry in products of hyperbolic and
//! Euclidean spaces.
//!
//! The library builds cycles (round spheres in maximal flats, distance
//! spheres in `H^2 x Q` slices, tube boundaries, digitized circles on
//! horospheres), fills them by two independent routes - the cone toward a
//! boundary direction with a horosphere cap, and an exact minimal-filling
//! linear program on discretized regions - and fits log-log scaling
//! exponents of filling volume against cycle volume. Below the Euclidean
//! rank the measured exponent is `(k+1)/k`; at and above the rank the cone
//! construction makes it linear. Neutering the space (removing horoballs)
//! restores Euclidean exponents on horosphere cycles.
//!
//! Each major capability has a runnable example under `examples/`; start
//! with `rank_dichotomy`. The thin `catfill` binary drives the same
//! machinery from config files (`exponent`, `cone`, `lpfill`, `jacobi`).
//!
//! ```
//! use catfill::chain::slice_sphere;
//! use catfill::space::ProductSpace;
//!
//! let (h2, _) = ProductSpace::parse("H2").unwrap();
//! let circle = slice_sphere(&h2, 2.0, 1, 0.05).unwrap();
//! let len = circle.k_volume(&h2);
//! let exact = 2.0 * std::f64::consts::PI * 2.0f64.sinh();
//! assert!((len - exact).abs() / exact < 1e-3);
//! ```

pub mod chain;
pub mod cone;
pub mod config;
pub mod error;
pub mod fit;
pub mod lp;
pub mod plot;
pub mod roots;
pub mod simplex;
pub mod space;

pub use chain::SimplicialChain;
pub use cone::{cone_fill, ConeParams, ConeReport};
pub use error::{Error, Result};
pub use fit::{fit_exponent, run_family, ExperimentSpec, ExponentEstimate};
pub use lp::{min_fill, CellComplex, FillResult};
pub use roots::RootSystem;
pub use space::{BoundaryDirection, Factor, FlatSpec, HoroballFamily, ProductSpace, SpacePoint};
