//! CPT response: detuning to excited-state population, and population to
//! detected photon rate.

pub mod calibration;
pub mod lindblad;
pub mod lineshape;

pub use calibration::{calibrate_rate, expected_count, RateCalibration, SignalModel};
pub use lindblad::{rho_ee_lindblad, steady_state, LambdaSystemParams, SteadyState};
pub use lineshape::{fit_lorentzian_dip, rho_ee_lorentzian, Branch, CptLineshape, LorentzianFit};
