//! Device parameter chain: SQUID factor, transmon and magnon frequencies,
//! squeezing, zero-point moment, qubit-magnon couplings, linewidth and
//! thermal occupation.
//!
//! Energies enter as frequencies in Hz (E/h). Functions named `*_frequency`
//! document their unit; couplings and linewidths are returned in rad/s.

use std::f64::consts::PI;

use serde::Serialize;

use crate::constants::{BOLTZMANN, FLUX_QUANTUM, HBAR, MU0, TWO_PI};
use crate::error::{Error, Result};

/// Transmon regime threshold on E_J^Σ S / E_C below which a warning is raised.
pub const TRANSMON_RATIO_MIN: f64 = 20.0;
/// Spin count below which the macrospin description is rejected.
pub const MIN_SPIN_COUNT: f64 = 1e6;
/// Largest ac flux amplitude accepted by the small-angle coupling.
pub const PHI_AC_MAX: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransmonDesign {
    /// Charging energy E_C/h in Hz.
    pub e_c: f64,
    /// Total Josephson energy E_J^Σ/h in Hz.
    pub e_j_sigma: f64,
    /// SQUID asymmetry in [0, 1].
    pub a_j: f64,
    /// Reduced dc flux bias (rad).
    pub phi_b: f64,
    /// Reduced ac flux amplitude (rad); zero when undriven.
    pub phi_ac: f64,
}

impl Default for TransmonDesign {
    fn default() -> Self {
        Self { e_c: 150e6, e_j_sigma: 35e9, a_j: 0.9, phi_b: PI / 2.0, phi_ac: 0.0 }
    }
}

impl TransmonDesign {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.a_j) {
            return Err(Error::arg(format!("a_J = {} outside [0, 1]", self.a_j)));
        }
        if !(self.e_c > 0.0) || !(self.e_j_sigma > 0.0) {
            return Err(Error::arg("transmon energies must be positive"));
        }
        if !self.phi_b.is_finite() || !self.phi_ac.is_finite() {
            return Err(Error::arg("flux bias must be finite"));
        }
        Ok(())
    }

    /// E_J^Σ S(φ_b) / E_C.
    pub fn transmon_ratio(&self) -> f64 {
        self.e_j_sigma * squid_factor(self.a_j, self.phi_b) / self.e_c
    }

    pub fn in_transmon_regime(&self) -> bool {
        self.transmon_ratio() >= TRANSMON_RATIO_MIN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MagnetSpec {
    /// Long semi-axis (m).
    pub l_x: f64,
    /// Short semi-axes L_y = L_z (m).
    pub l_z: f64,
    /// Magnet center to the nearest point of the loop (m).
    pub d: f64,
    /// SQUID loop radius (m).
    pub r_loop: f64,
    /// Transverse demagnetization factor.
    pub n_t: f64,
    /// Saturation magnetization (A/m).
    pub m_s: f64,
    /// Spin density (1/m^3).
    pub rho_s: f64,
    /// Gyromagnetic ratio modulus (rad/s/T).
    pub gamma0: f64,
    /// Geometrical flux factor (1/m).
    pub i_x: f64,
}

impl Default for MagnetSpec {
    fn default() -> Self {
        let l_z = 3.9e-6;
        Self {
            l_x: 16e-6,
            l_z,
            d: l_z + 10e-9,
            r_loop: 25e-6,
            n_t: 0.45,
            m_s: 0.246 / MU0,
            rho_s: 2.1e28,
            gamma0: TWO_PI * 28.0e9,
            i_x: -0.12e6,
        }
    }
}

impl MagnetSpec {
    pub fn volume(&self) -> f64 {
        4.0 * PI * self.l_x * self.l_z * self.l_z / 3.0
    }

    pub fn spin_count(&self) -> f64 {
        self.rho_s * self.volume()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_z > 0.0) || self.l_x < self.l_z {
            return Err(Error::arg(format!(
                "semi-axes must satisfy L_x >= L_z > 0 (L_x = {}, L_z = {})",
                self.l_x, self.l_z
            )));
        }
        if self.d < self.l_z {
            return Err(Error::arg(format!("loop distance d = {} inside the magnet (L_z = {})", self.d, self.l_z)));
        }
        if !(self.r_loop > 0.0) {
            return Err(Error::arg("loop radius must be positive"));
        }
        if !(1.0 / 3.0 - 1e-12..0.5).contains(&self.n_t) {
            return Err(Error::arg(format!("N_T = {} outside [1/3, 1/2)", self.n_t)));
        }
        if !(self.m_s > 0.0) || !(self.rho_s > 0.0) || !(self.gamma0 > 0.0) {
            return Err(Error::arg("material constants must be positive"));
        }
        if self.spin_count() < MIN_SPIN_COUNT {
            return Err(Error::Precondition(format!(
                "spin count {:.3e} too small for a macrospin description",
                self.spin_count()
            )));
        }
        if !self.i_x.is_finite() {
            return Err(Error::arg("I_x must be finite"));
        }
        Ok(())
    }

    /// μ₀γ₀M_s(3N_T − 1), the anisotropy shift of the magnon dispersion (rad/s).
    fn anisotropy_shift(&self) -> f64 {
        MU0 * self.gamma0 * self.m_s * (3.0 * self.n_t - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Environment {
    /// Temperature (K).
    pub temperature: f64,
    /// Qubit lifetime (s).
    pub t1: f64,
    /// Qubit pure dephasing time (s).
    pub t_phi: f64,
    /// Gilbert damping.
    pub alpha_g: f64,
    /// Inhomogeneous magnon linewidth (rad/s).
    pub kappa_tilde: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Self { temperature: 10e-3, t1: 100e-6, t_phi: 100e-6, alpha_g: 1e-4, kappa_tilde: TWO_PI * 0.1e6 }
    }
}

impl Environment {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("temperature", self.temperature),
            ("T1", self.t1),
            ("T_phi", self.t_phi),
            ("alpha_G", self.alpha_g),
            ("kappa_tilde", self.kappa_tilde),
        ] {
            if !(v > 0.0) {
                return Err(Error::arg(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Every physical input of the device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviceConfig {
    pub qubit1: TransmonDesign,
    pub qubit2: TransmonDesign,
    pub magnet: MagnetSpec,
    pub env: Environment,
    /// Critical field of the loop superconductor (T).
    pub b_c: f64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            qubit1: TransmonDesign::default(),
            qubit2: TransmonDesign::default(),
            magnet: MagnetSpec::default(),
            env: Environment::default(),
            b_c: 10.0,
        }
    }
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<()> {
        self.qubit1.validate()?;
        self.qubit2.validate()?;
        self.magnet.validate()?;
        self.env.validate()?;
        if !(self.b_c >= 0.0) {
            return Err(Error::arg("critical field must be non-negative"));
        }
        Ok(())
    }
}

/// S(φ_b) = sqrt(cos²φ_b + a_J² sin²φ_b).
pub fn squid_factor(a_j: f64, phi_b: f64) -> f64 {
    let (s, c) = phi_b.sin_cos();
    (c * c + a_j * a_j * s * s).sqrt()
}

/// Transmon frequency ω_q/2π in Hz. Callers check [`TransmonDesign::in_transmon_regime`].
pub fn qubit_frequency(design: &TransmonDesign) -> f64 {
    let s = squid_factor(design.a_j, design.phi_b);
    (8.0 * design.e_c * design.e_j_sigma * s).sqrt() - design.e_c
}

fn check_field(h0: f64, magnet: &MagnetSpec) -> Result<f64> {
    let bound = (3.0 * magnet.n_t - 1.0) * magnet.m_s;
    if !(h0 > bound) || !(h0 > 0.0) {
        return Err(Error::Precondition(format!(
            "H0 = {h0:.6e} A/m does not exceed the stability bound (3N_T-1)M_s = {bound:.6e} A/m"
        )));
    }
    Ok(1.0 - magnet.m_s / h0 * (3.0 * magnet.n_t - 1.0))
}

/// Whether H0 > M_s/2, the isotropic saturation criterion. It is stricter than the
/// shape-dependent stability bound enforced by [`magnon_frequency`] and is reported,
/// not enforced.
pub fn exceeds_half_saturation(h0: f64, magnet: &MagnetSpec) -> bool {
    h0 > magnet.m_s / 2.0
}

/// Kittel frequency ω_m (rad/s) at bias field H0 (A/m).
pub fn magnon_frequency(h0: f64, magnet: &MagnetSpec) -> Result<f64> {
    let k = check_field(h0, magnet)?;
    Ok(MU0 * magnet.gamma0 * h0 * k.sqrt())
}

/// Bias field H0 (A/m) producing magnon frequency ω_m (rad/s).
pub fn field_for_frequency(omega_m: f64, magnet: &MagnetSpec) -> Result<f64> {
    if !(omega_m > 0.0) || !omega_m.is_finite() {
        return Err(Error::arg(format!("magnon frequency must be positive, got {omega_m}")));
    }
    let b = magnet.anisotropy_shift();
    // Positive root of x² − b x − ω² = 0 with x = μ₀γ₀H₀, written to avoid cancellation.
    let disc = (b * b + 4.0 * omega_m * omega_m).sqrt();
    let x = if b >= 0.0 { 0.5 * (b + disc) } else { 2.0 * omega_m * omega_m / (disc - b) };
    Ok(x / (MU0 * magnet.gamma0))
}

/// Squeezing factor e^r.
pub fn squeezing(h0: f64, magnet: &MagnetSpec) -> Result<f64> {
    let k = check_field(h0, magnet)?;
    Ok(k.powf(-0.25))
}

/// Isotropic zero-point moment ħγ₀√(N_s/2) in J/T.
pub fn mu_zpf(magnet: &MagnetSpec) -> f64 {
    HBAR * magnet.gamma0 * (magnet.spin_count() / 2.0).sqrt()
}

/// Transverse demagnetization factor of a prolate spheroid with aspect L_x/L_z.
pub fn demag_factor(aspect: f64) -> Result<f64> {
    if !(aspect >= 1.0) || !aspect.is_finite() {
        return Err(Error::arg(format!("aspect ratio must be >= 1, got {aspect}")));
    }
    let e2 = aspect * aspect - 1.0;
    let n_long = if e2 < 1e-6 {
        // First-order expansion about the sphere; the closed form cancels badly here.
        1.0 / 3.0 - 2.0 * e2 / 15.0
    } else {
        let e = e2.sqrt();
        ((aspect / e) * (aspect + e).ln() - 1.0) / e2
    };
    Ok(0.5 * (1.0 - n_long))
}

/// Aspect ratio whose transverse demagnetization factor equals `n_t`, by bisection.
pub fn aspect_for_demag(n_t: f64) -> Result<f64> {
    if !(1.0 / 3.0..0.5).contains(&n_t) {
        return Err(Error::arg(format!("N_T = {n_t} outside [1/3, 1/2)")));
    }
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    while demag_factor(hi)? < n_t {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::arg("N_T too close to 1/2"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if demag_factor(mid)? < n_t {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Flux-fluctuation prefactor −μ₀ I_x μ_zpf e^r / Φ₀ (dimensionless).
fn flux_prefactor(magnet: &MagnetSpec, e_r: f64) -> f64 {
    -MU0 * magnet.i_x * mu_zpf(magnet) * e_r / FLUX_QUANTUM
}

/// Exchange coupling J (rad/s).
pub fn coupling_j(design: &TransmonDesign, magnet: &MagnetSpec, h0: f64) -> Result<f64> {
    let e_r = squeezing(h0, magnet)?;
    let s = squid_factor(design.a_j, design.phi_b);
    if s == 0.0 {
        return Err(Error::Precondition("SQUID factor vanishes".into()));
    }
    let energy = (2.0 * design.e_c * design.e_j_sigma.powi(3) / s.powi(5)).powf(0.25);
    Ok(flux_prefactor(magnet, e_r) * design.a_j / 4.0 * energy * TWO_PI)
}

/// Radiation-pressure coupling g (rad/s).
pub fn coupling_g(design: &TransmonDesign, magnet: &MagnetSpec, h0: f64) -> Result<f64> {
    let e_r = squeezing(h0, magnet)?;
    let s = squid_factor(design.a_j, design.phi_b);
    if s == 0.0 {
        return Err(Error::Precondition("SQUID factor vanishes".into()));
    }
    let energy = (2.0 * design.e_c * design.e_j_sigma / s.powi(3)).sqrt();
    let angular = (2.0 * design.phi_b).sin() * (1.0 - design.a_j * design.a_j);
    Ok(flux_prefactor(magnet, e_r) / 8.0 * energy * angular * TWO_PI)
}

/// Amplitude g̃ (rad/s) of the radiation-pressure coupling under a small ac flux
/// drive about zero dc bias.
pub fn coupling_g_tilde(design: &TransmonDesign, magnet: &MagnetSpec, h0: f64) -> Result<f64> {
    if design.phi_ac.abs() > PHI_AC_MAX {
        return Err(Error::Regime(format!(
            "ac flux amplitude {} exceeds the small-angle limit {PHI_AC_MAX}",
            design.phi_ac
        )));
    }
    let e_r = squeezing(h0, magnet)?;
    let energy = (8.0 * design.e_c * design.e_j_sigma).sqrt();
    Ok(flux_prefactor(magnet, e_r) / 8.0 * energy * design.phi_ac * TWO_PI)
}

/// Magnon linewidth κ = α_G ω_m + κ̃ (rad/s).
pub fn linewidth(omega_m: f64, env: &Environment) -> f64 {
    env.alpha_g * omega_m + env.kappa_tilde
}

/// Bose-Einstein occupation at angular frequency ω and temperature T (K).
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) || !(temperature > 0.0) {
        return Err(Error::arg("thermal occupation needs positive frequency and temperature"));
    }
    Ok(1.0 / (HBAR * omega / (BOLTZMANN * temperature)).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn squid_factor_examples() {
        assert_eq!(squid_factor(0.3, 0.0), 1.0);
        assert!((squid_factor(0.9, PI / 2.0) - 0.9).abs() < 1e-15);
        assert!((squid_factor(0.0, PI / 4.0) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn qubit_frequency_working_points() {
        let iswap = TransmonDesign::default();
        assert!((qubit_frequency(&iswap) / 1e9 - 6.0).abs() < 0.05);
        let cz = TransmonDesign { a_j: 0.0, phi_b: PI / 4.0, ..iswap };
        assert!((qubit_frequency(&cz) / 1e9 - 5.3).abs() < 0.05);
        let flat = TransmonDesign { phi_b: 0.0, a_j: 0.37, ..iswap };
        let want = (8.0 * flat.e_c * flat.e_j_sigma).sqrt() - flat.e_c;
        assert!((qubit_frequency(&flat) - want).abs() < 1e-3);
        assert!(iswap.in_transmon_regime());
    }

    #[test]
    fn isotropic_magnet_has_no_squeezing() {
        let m = MagnetSpec { n_t: 1.0 / 3.0, ..MagnetSpec::default() };
        let h0 = 1e5;
        let w = magnon_frequency(h0, &m).unwrap();
        assert!(rel(w, MU0 * m.gamma0 * h0) < 1e-15);
        assert!((squeezing(h0, &m).unwrap() - 1.0).abs() < 1e-15);
        let w0 = TWO_PI * 3e9;
        assert!(rel(field_for_frequency(w0, &m).unwrap(), w0 / (MU0 * m.gamma0)) < 1e-14);
    }

    #[test]
    fn frequency_vanishes_at_stability_bound() {
        let m = MagnetSpec::default();
        let bound = (3.0 * m.n_t - 1.0) * m.m_s;
        let w = magnon_frequency(bound * (1.0 + 1e-10), &m).unwrap();
        assert!(w < TWO_PI * 1e5);
        assert!(magnon_frequency(bound * 0.999, &m).is_err());
    }

    #[test]
    fn squeezing_identity() {
        let m = MagnetSpec::default();
        for f in [20e6, 143e6, 1e9, 5.64e9] {
            let h0 = field_for_frequency(TWO_PI * f, &m).unwrap();
            let e_r = squeezing(h0, &m).unwrap();
            let alt = (MU0 * m.gamma0 * h0 / magnon_frequency(h0, &m).unwrap()).sqrt();
            assert!(rel(e_r, alt) < 1e-12);
        }
    }

    #[test]
    fn squeezing_at_working_points() {
        let m = MagnetSpec::default();
        let h_cz = field_for_frequency(TWO_PI * 143e6, &m).unwrap();
        let e_r = squeezing(h_cz, &m).unwrap();
        assert!(rel(e_r, 4.2) <= 0.05, "e^r = {e_r}");
        let h_is = field_for_frequency(TWO_PI * 5.64e9, &m).unwrap();
        assert!((squeezing(h_is, &m).unwrap() - 1.11).abs() < 0.01);
        assert!(exceeds_half_saturation(h_is, &m));
        assert!(!exceeds_half_saturation(h_cz, &m));
    }

    #[test]
    fn zero_point_moment() {
        let m = MagnetSpec::default();
        assert!(rel(mu_zpf(&m), 6.1e-17) < 0.02);
        let double = MagnetSpec { l_x: 2.0 * m.l_x, ..m };
        assert!(rel(mu_zpf(&double), 2f64.sqrt() * mu_zpf(&m)) < 1e-14);
        let tiny = MagnetSpec { rho_s: 2.0 / m.volume(), ..m };
        assert!(rel(mu_zpf(&tiny), HBAR * m.gamma0) < 1e-14);
    }

    #[test]
    fn demag_limits() {
        assert!((demag_factor(1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((demag_factor(1.0 + 1e-6).unwrap() - 1.0 / 3.0).abs() < 1e-6);
        assert!((demag_factor(1e6).unwrap() - 0.5).abs() < 1e-9);
        assert!(demag_factor(0.5).is_err());
        let mut prev = 1.0 / 3.0;
        for k in 1..60 {
            let n = demag_factor(1.0 + 0.25 * k as f64).unwrap();
            assert!(n > prev);
            prev = n;
        }
        let a = aspect_for_demag(0.45).unwrap();
        assert!((demag_factor(a).unwrap() - 0.45).abs() < 1e-12);
    }

    /// Oracle: N_L = (a b²/2) ∫₀^∞ ds / ((a²+s)^{3/2}(b²+s)), by Gauss-Legendre
    /// on the substitution s = b² t/(1−t).
    fn demag_quadrature(aspect: f64) -> f64 {
        let (a, b) = (aspect, 1.0);
        let n = 4000;
        let mut acc = 0.0;
        for k in 0..n {
            let t = (k as f64 + 0.5) / n as f64;
            let s = b * b * t / (1.0 - t);
            let ds = b * b / ((1.0 - t) * (1.0 - t));
            acc += ds / ((a * a + s).powf(1.5) * (b * b + s));
        }
        let n_long = 0.5 * a * b * b * acc / n as f64;
        0.5 * (1.0 - n_long)
    }

    #[test]
    fn demag_matches_quadrature() {
        for aspect in [1.0, 1.5, 3.2, 4.1, 10.0] {
            assert!((demag_factor(aspect).unwrap() - demag_quadrature(aspect)).abs() < 1e-5, "aspect {aspect}");
        }
    }

    #[test]
    fn couplings_vanish_on_selectors() {
        let m = MagnetSpec::default();
        let h0 = field_for_frequency(TWO_PI * 5e9, &m).unwrap();
        let sym = TransmonDesign { a_j: 0.0, phi_b: 0.7, ..TransmonDesign::default() };
        assert_eq!(coupling_j(&sym, &m, h0).unwrap(), 0.0);
        let half = TransmonDesign { a_j: 0.5, phi_b: PI / 2.0, ..TransmonDesign::default() };
        assert!(coupling_g(&half, &m, h0).unwrap().abs() < 1e-6);
        let one = TransmonDesign { a_j: 1.0, phi_b: 0.7, ..TransmonDesign::default() };
        assert_eq!(coupling_g(&one, &m, h0).unwrap(), 0.0);
        let undriven = TransmonDesign { a_j: 0.0, phi_b: 0.0, phi_ac: 0.0, ..TransmonDesign::default() };
        assert_eq!(coupling_g_tilde(&undriven, &m, h0).unwrap(), 0.0);
    }

    #[test]
    fn j_scales_linearly_with_ix() {
        let m = MagnetSpec::default();
        let h0 = field_for_frequency(TWO_PI * 5e9, &m).unwrap();
        let q = TransmonDesign::default();
        let j1 = coupling_j(&q, &m, h0).unwrap();
        let j2 = coupling_j(&q, &MagnetSpec { i_x: 2.0 * m.i_x, ..m }, h0).unwrap();
        assert!(rel(j2, 2.0 * j1) < 1e-14);
    }

    #[test]
    fn iswap_working_point_j() {
        let m = MagnetSpec::default();
        let q = TransmonDesign::default();
        let wq = TWO_PI * qubit_frequency(&q);
        let h0 = field_for_frequency(0.94 * wq, &m).unwrap();
        let j = coupling_j(&q, &m, h0).unwrap() / TWO_PI;
        // Chain arithmetic gives ≈ 13.4 MHz for the stated material defaults.
        assert!((j / 1e6 - 13.45).abs() < 0.1, "J/2π = {j}");
        assert!(j > 0.0);
    }

    #[test]
    fn cz_working_point_g() {
        let m = MagnetSpec::default();
        let q = TransmonDesign { a_j: 0.0, phi_b: PI / 4.0, ..TransmonDesign::default() };
        let wq = TWO_PI * qubit_frequency(&q);
        let wm = 0.027 * wq;
        let h0 = field_for_frequency(wm, &m).unwrap();
        let g = coupling_g(&q, &m, h0).unwrap();
        assert!(rel(g / TWO_PI, 12e6) < 0.1);
        let g_z = 2.0 * g * g / wm / TWO_PI;
        assert!(rel(g_z, 2.1e6) <= 0.15, "g_Z/2π = {g_z}");
    }

    #[test]
    fn g_tilde_small_angle_oracle() {
        let m = MagnetSpec::default();
        let h0 = field_for_frequency(TWO_PI * 5.8e9, &m).unwrap();
        for phi_ac in [0.01, 0.05, 0.1] {
            let drive = TransmonDesign { a_j: 0.0, phi_b: 0.0, phi_ac, ..TransmonDesign::default() };
            let gt = coupling_g_tilde(&drive, &m, h0).unwrap();
            let bent = TransmonDesign { phi_b: phi_ac, ..drive };
            let g = coupling_g(&bent, &m, h0).unwrap();
            assert!(rel(g, gt) < 0.01, "phi_ac {phi_ac}: {g} vs {gt}");
        }
        let big = TransmonDesign { phi_ac: 0.6, ..TransmonDesign::default() };
        assert!(coupling_g_tilde(&big, &m, h0).is_err());
    }

    #[test]
    fn icnot_g_tilde() {
        let m = MagnetSpec::default();
        let target = TransmonDesign::default();
        let wq2 = TWO_PI * qubit_frequency(&target);
        let h0 = field_for_frequency(0.97 * wq2, &m).unwrap();
        let drive = TransmonDesign { a_j: 0.0, phi_b: 0.0, phi_ac: PI / 10.0, ..target };
        let gt = coupling_g_tilde(&drive, &m, h0).unwrap() / TWO_PI;
        assert!(rel(gt, 1.2e6) <= 0.2, "g̃/2π = {gt}");
        let j2 = coupling_j(&target, &m, h0).unwrap() / TWO_PI;
        assert!((j2 / gt - 10.0).abs() < 2.0);
    }

    #[test]
    fn linewidth_examples() {
        let env = Environment::default();
        assert_eq!(linewidth(0.0, &env), env.kappa_tilde);
        let k = linewidth(TWO_PI * 5.64e9, &env) / TWO_PI;
        assert!((k - 0.664e6).abs() < 1e3);
        let a = linewidth(TWO_PI * 1e9, &env) - env.kappa_tilde;
        let b = linewidth(TWO_PI * 2e9, &env) - env.kappa_tilde;
        assert!(rel(b, 2.0 * a) < 1e-14);
    }

    #[test]
    fn thermal_occupation_examples() {
        let n = thermal_occupation(TWO_PI * 143e6, 10e-3).unwrap();
        assert!(rel(n, 1.0) <= 0.05, "n_th = {n}");
        assert!(thermal_occupation(TWO_PI * 5.64e9, 10e-3).unwrap() < 2e-12);
        assert!(thermal_occupation(TWO_PI * 1e12, 1e-3).unwrap() < 1e-300);
    }

    proptest! {
        #[test]
        fn field_round_trip(log_f in 7.0f64..10.0, n_t in 0.334f64..0.499) {
            let m = MagnetSpec { n_t, ..MagnetSpec::default() };
            let w = TWO_PI * 10f64.powf(log_f);
            let h0 = field_for_frequency(w, &m).unwrap();
            prop_assert!(rel(magnon_frequency(h0, &m).unwrap(), w) < 1e-10);
            prop_assert!(squeezing(h0, &m).unwrap() >= 1.0);
        }

        #[test]
        fn squid_factor_bounds(a_j in 0.0f64..1.0, phi in -3.2f64..3.2) {
            let s = squid_factor(a_j, phi);
            prop_assert!(s >= a_j.min(1.0) - 1e-15 && s <= 1.0 + 1e-15);
        }
    }
}
