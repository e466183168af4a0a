//! Reiter-condition experiments on `ℓᵖ(G)`: densities, displacement
//! minimization over Cayley balls, Markov operator norms, and the free-group
//! obstruction on `prob(ℕ)`.

mod counterexample;
mod density;
mod kesten;
mod minimize;
mod table;

pub use counterexample::{counterexample_run, CounterexampleOptions, CounterexampleReport, FloorRow};
pub use density::{reiter_objective, GroupDensity, NORMALIZATION_TOLERANCE};
pub use kesten::{kesten_estimate, KestenEstimate, KestenOptions};
pub use minimize::{reiter_minimize, Init, Method, MinimizeOptions, ReiterResult, TracePoint, LP_MAX_BALL};
