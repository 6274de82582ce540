//! Online maximization over a stream of functions revealed one per round:
//! linear optimizers, the online hybrid, the Hedge layer over switching
//! times, and the online Frank-Wolfe baseline.

mod hedge;
mod hybrid;
mod olo;
mod runner;

pub use hedge::Hedge;
pub use hybrid::{OnlineHybridState, StageAudit, StageIterates, STAGE_TOL};
pub use olo::{DoublingOlo, FtrlOptimizer, OLO_FEASIBILITY_TOL};
pub use runner::{
    run_online_baseline, run_online_experiment, stream_gradient_bound, OnlineMode, OnlineOptions, OnlineRun,
    OnlineStep,
};
