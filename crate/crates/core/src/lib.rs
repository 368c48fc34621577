//! Achievable-rate evaluation and coding simulation for discrete memoryless
//! relay channels.
//!
//! The crate covers a small probability toolkit ([`prob`]), the relay channel
//! model ([`channel`]), the stationary block process of a correlation-preserving
//! block-Markov scheme ([`process`]), its rate conditions together with the
//! compress-and-forward forms they generalize ([`rates`]), a local optimizer
//! ([`optimize`]) and a desk-scale Monte Carlo simulator ([`sim`]).
//!
//! All information quantities are in nats.

pub mod channel;
pub mod error;
pub mod params;
pub mod prob;
pub mod process;
pub mod rates;
pub mod optimize;
pub mod sim;
pub mod simplex;

pub use channel::{load_channel, RelayChannel};
pub use error::{Error, Result};
pub use params::{load_caf_params, load_new_scheme_params, load_params, SchemeParams};
pub use prob::{Alphabet, ConditionalKernel, JointDistribution, Var};
pub use process::{BlockProcess, ElevenVarJoint, NewSchemeParams};
pub use rates::{
    check_degeneration, compute_rate_terms, evaluate_caf, evaluate_new_scheme, repair_auxiliary,
    verify_appendix_b_bounds, CafForm, CafParams, CafReport, RateReport, RateTerms,
};
pub use optimize::{optimize, Optimizer, Scheme, SearchBudget, SearchMode, SearchResult};
pub use sim::{estimate_error_probability, SimConfig, SimModel, SimResult};
