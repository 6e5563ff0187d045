//! Physical constants (CODATA 2018, SI).

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
pub const VACUUM_PERMEABILITY: f64 = 1.256_637_062_12e-6;

/// Angular frequency of a vacuum wavelength.
pub fn angular_frequency(wavelength_m: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / wavelength_m
}

/// Converts a photon energy in eV to an angular frequency.
pub fn ev_to_angular_frequency(energy_ev: f64) -> f64 {
    energy_ev * ELEMENTARY_CHARGE / HBAR
}
