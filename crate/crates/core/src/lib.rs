//! Price-limit cascade contagion on bipartite investor-stock networks.
//!
//! A stock "fails" when its value drops by the price limit `c`. Failed
//! stocks become illiquid, and every investor holding one revalues the rest
//! of its portfolio by the market confidence `alpha` times the share of its
//! book that is still tradable. The crate simulates these cascades, locates
//! the critical confidence separating stable markets from collapsing ones,
//! and provides the structural metrics (nestedness, branching, k-core)
//! and randomization experiments used to explain that boundary.

pub mod contagion;
pub mod critical;
pub mod error;
pub mod metrics;
pub mod network;
mod par;
pub mod randomize;
pub mod stats;
pub mod synth;
pub mod waves;

pub use contagion::{run_all_single_shocks, run_cascade, CascadeParams, CascadeResult, CascadeWorkspace};
pub use critical::{
    driving_node_probability, find_alpha_c, neighbor_alpha_c, neighbor_alpha_c_simplified, BisectionSettings,
    CriticalConfidence,
};
pub use error::{CascadeError, CriticalError, NetworkError, RewireError, WaveError};
pub use network::{load_holdings, stock_projection, BipartiteNetwork, HoldingRecord, StockGraph};
