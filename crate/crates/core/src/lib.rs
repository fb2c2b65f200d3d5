//! Discrepancy cocycle walks over badly approximable rotations, their skew
//! products over the two-sided Bernoulli shift, and the triple-correlation
//! averages built from them.
//!
//! Modules build on each other in order: [`rotation`] supplies exact circle
//! arithmetic, [`walk`] the integer-valued walk and its occupation
//! statistics, [`eset`] the symmetric interval set and its schedules,
//! [`symbolic`] the skew-product maps on sampled symbol windows, and
//! [`averages`] the three independent evaluation routes for the averages.

pub mod eset;
pub mod rotation;
pub mod sampling;
pub mod walk;
pub mod averages;
pub mod symbolic;
