pub mod bounds;
pub mod cpt;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod ou;
pub mod photon;
pub mod quadrature;
pub mod rng;
pub mod units;
