//! Round-based federated training.
//!
//! Each round the server samples clients, every selected client trains its
//! copy of the incoming global parameters for `K` local epochs, uploads the
//! full parameter vector, the server averages the uploads elementwise, and
//! the result is broadcast to every client (selected or not).
//!
//! Selected clients train independently and may run in parallel; aggregation
//! is a barrier and is itself sequential, summing in ascending `client_id`
//! order.

mod aggregate;
mod client;
mod selection;
mod server;

pub use aggregate::{aggregate, Aggregation};
pub use client::{client_local_train, ClientState, ClientUpdate};
pub use selection::select_clients;
pub use server::{build_clients, run_federated, run_round, FailurePolicy, FederatedRun, RoundConfig, RoundReport};
