//! Physical constants (SI, CODATA 2018 exact where defined).

use std::f64::consts::PI;

pub const MU0: f64 = 1.256_637_062_12e-6;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * PI);
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Superconducting flux quantum h/(2e).
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);

pub const TWO_PI: f64 = 2.0 * PI;
