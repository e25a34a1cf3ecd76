//! Budgeted multi-modal information gathering.
//!
//! A simulated rover carries sensors with different footprints, noise and
//! costs. It keeps a per-cell belief over a latent variable, updated through a
//! tree-structured Bayesian network, and chooses motion and sensor actions
//! with one of several planners (random, fixed schedules, lawnmower, greedy
//! expected utility, Monte Carlo tree search) to maximize information gained
//! within a budget.
//!
//! Module map:
//!
//! - [`knowledge`]: tree networks, exact inference, absorption, entropy.
//! - [`world`]: ground-truth generation and sensor simulation.
//! - [`belief`]: belief grids, spatial kernel, mission metrics.
//! - [`learning`]: Dirichlet-parameterized terrain/water model.
//! - [`planning`]: action spaces and planners.
//! - [`mission`]: mission loop, experiments, statistics, presets.

pub mod belief;
pub mod geom;
pub mod knowledge;
pub mod learning;
pub mod mission;
pub mod par;
pub mod planning;
pub mod rng;
pub mod world;
