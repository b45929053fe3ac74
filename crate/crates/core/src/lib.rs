//! European option pricing under the relativistic Black-Scholes model, where information
//! travels at a finite speed `c` and the classical model is the `c -> infinity` limit.

pub mod black_scholes;
pub mod calibration;
pub mod error;
pub mod market;
pub mod normal;
pub mod params;
pub mod quadrature;
pub mod relativistic;

pub use black_scholes::{bs_call, bs_d1_d2, bs_price, bs_put, lognormal_density};
pub use calibration::{flatten_smile, flatten_table, implied_vol, IVQuery, IVSolution, Model};
pub use error::{Error, QuadratureError, Result};
pub use normal::{norm_cdf, norm_pdf};
pub use params::{DerivedParams, ModelParams, OptionKind, OptionSpec};
pub use quadrature::{QuadratureConfig, QuadratureResult};
pub use relativistic::{
    rel_call, rel_density, rel_parity_rhs, rel_price, rel_put, PricingConfig, RelPrice,
};
