//! Gate Hamiltonians, effective couplings, gate times, ideal unitaries and
//! Lindblad operators for the iSWAP, CZ and iCNOT regimes.
//!
//! Every Hamiltonian is returned in rad/s (ħ = 1) on a (q1, q2, m) layout.
//! Only the already rotated gate Hamiltonians are simulated; single-qubit
//! frame rotations are never applied numerically.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::algebra::{annihilation, embed, ComplexMatrix, SpaceLayout, C64};
use crate::constants::TWO_PI;
use crate::device::{
    coupling_g, coupling_g_tilde, coupling_j, exceeds_half_saturation, field_for_frequency, linewidth,
    qubit_frequency, squeezing, thermal_occupation, DeviceConfig, TransmonDesign,
};
use crate::{Error, Result};

/// Hard limit on the dispersive small parameters.
pub const REGIME_LIMIT: f64 = 0.3;
/// Above this ratio a working point is flagged but still simulated.
pub const REGIME_WARN: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateKind {
    Iswap,
    SqrtIswap,
    Cz,
    Icnot,
}

impl GateKind {
    pub const ALL: [GateKind; 4] = [GateKind::Iswap, GateKind::SqrtIswap, GateKind::Cz, GateKind::Icnot];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Iswap => "iswap",
            GateKind::SqrtIswap => "sqrt-iswap",
            GateKind::Cz => "cz",
            GateKind::Icnot => "icnot",
        }
    }

    /// Fock sizes (q1, q2, m) used for the production simulations.
    pub fn default_dims(self) -> [usize; 3] {
        match self {
            GateKind::Iswap | GateKind::SqrtIswap | GateKind::Icnot => [3, 3, 4],
            GateKind::Cz => [3, 3, 6],
        }
    }

    /// Whether the gate shares the exchange-coupled iSWAP Hamiltonian.
    pub fn is_exchange(self) -> bool {
        matches!(self, GateKind::Iswap | GateKind::SqrtIswap)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iswap" => Ok(GateKind::Iswap),
            "sqrt-iswap" | "sqrt_iswap" | "sqrtiswap" => Ok(GateKind::SqrtIswap),
            "cz" => Ok(GateKind::Cz),
            "icnot" => Ok(GateKind::Icnot),
            other => Err(Error::arg(format!("unknown gate `{other}` (expected iswap, sqrt-iswap, cz or icnot)"))),
        }
    }
}

/// Parameters of one gate Hamiltonian, all in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    #[serde(skip)]
    pub layout: SpaceLayout,
    pub omega_q1: f64,
    pub omega_q2: f64,
    pub omega_m: f64,
    /// Anharmonicity E_C/ħ.
    pub e_c: f64,
    pub j1: f64,
    pub j2: f64,
    pub g1: f64,
    pub g2: f64,
    pub g_tilde1: f64,
    /// Drive frequency of the iCNOT scheme; zero otherwise.
    pub omega_ac: f64,
}

impl ModelSpec {
    pub fn delta_m(&self) -> f64 {
        self.omega_m - self.omega_ac
    }

    pub fn delta_q2(&self) -> f64 {
        self.omega_q2 - self.omega_ac
    }
}

/// Ladder operators embedded in a (q1, q2, m) layout.
pub struct LadderOps {
    pub c1: ComplexMatrix,
    pub c2: ComplexMatrix,
    pub m: ComplexMatrix,
}

impl LadderOps {
    pub fn new(layout: &SpaceLayout) -> Result<Self> {
        if layout.len() != 3 {
            return Err(Error::dim(format!("expected a (q1, q2, m) layout, got {} subsystems", layout.len())));
        }
        let op = |i: usize| embed(&annihilation(layout.dim(i))?, i, layout);
        Ok(LadderOps { c1: op(0)?, c2: op(1)?, m: op(2)? })
    }

    pub fn qubit(&self, i: usize) -> &ComplexMatrix {
        if i == 0 {
            &self.c1
        } else {
            &self.c2
        }
    }

    pub fn number(op: &ComplexMatrix) -> ComplexMatrix {
        &op.dagger() * op
    }

    /// c†c†cc.
    pub fn kerr(op: &ComplexMatrix) -> ComplexMatrix {
        let cd = op.dagger();
        let cdcd = &cd * &cd;
        let cc = op * op;
        &cdcd * &cc
    }

    /// c†m + c m†.
    pub fn exchange(&self, i: usize) -> ComplexMatrix {
        let c = self.qubit(i);
        &(&c.dagger() * &self.m) + &(c * &self.m.dagger())
    }

    /// c†c (m† + m).
    pub fn radiation_pressure(&self, i: usize) -> ComplexMatrix {
        let c = self.qubit(i);
        let x = &self.m + &self.m.dagger();
        &Self::number(c) * &x
    }
}

fn check_layout(layout: &SpaceLayout) -> Result<()> {
    let d = layout.dims();
    if d.len() != 3 || d[0] < 3 || d[1] < 3 || d[2] < 4 {
        return Err(Error::dim(format!("gate Hamiltonians need dims (≥3, ≥3, ≥4), got {d:?}")));
    }
    Ok(())
}

/// Lab-frame Hamiltonian ω_m m†m + Σᵢ[ω_qᵢ nᵢ − (E_C/2)cᵢ†cᵢ†cᵢcᵢ + Jᵢ(cᵢ†m + cᵢm†) + gᵢ nᵢ(m† + m)].
pub fn build_h_tot(spec: &ModelSpec) -> Result<ComplexMatrix> {
    check_layout(&spec.layout)?;
    let ops = LadderOps::new(&spec.layout)?;
    let mut h = LadderOps::number(&ops.m).scale_real(spec.omega_m);
    for (i, (wq, j, g)) in [(spec.omega_q1, spec.j1, spec.g1), (spec.omega_q2, spec.j2, spec.g2)].into_iter().enumerate() {
        let c = ops.qubit(i);
        h.axpy(C64::from(wq), &LadderOps::number(c));
        h.axpy(C64::from(-spec.e_c / 2.0), &LadderOps::kerr(c));
        h.axpy(C64::from(j), &ops.exchange(i));
        h.axpy(C64::from(g), &ops.radiation_pressure(i));
    }
    Ok(h)
}

/// ω(m†m + n₁ + n₂), the generator of the common rotating frame.
pub fn frame_shift(layout: &SpaceLayout, omega: f64) -> Result<ComplexMatrix> {
    let ops = LadderOps::new(layout)?;
    let total = &(&LadderOps::number(&ops.m) + &LadderOps::number(&ops.c1)) + &LadderOps::number(&ops.c2);
    Ok(total.scale_real(omega))
}

/// Frame frequency ω_q + J²/(ω_q − ω_m) of the iSWAP scheme.
pub fn iswap_frame(spec: &ModelSpec) -> f64 {
    spec.omega_q2 + spec.j2 * spec.j2 / (spec.omega_q2 - spec.omega_m)
}

/// Exchange Hamiltonian in a frame rotating at `omega_frame`, with the
/// radiation-pressure terms dropped: in that frame they oscillate at the
/// frame frequency and average out.
pub fn build_h_rotating(spec: &ModelSpec, omega_frame: f64) -> Result<ComplexMatrix> {
    check_layout(&spec.layout)?;
    let ops = LadderOps::new(&spec.layout)?;
    let mut h = LadderOps::number(&ops.m).scale_real(spec.omega_m - omega_frame);
    for (i, (wq, j)) in [(spec.omega_q1, spec.j1), (spec.omega_q2, spec.j2)].into_iter().enumerate() {
        let c = ops.qubit(i);
        h.axpy(C64::from(wq - omega_frame), &LadderOps::number(c));
        h.axpy(C64::from(-spec.e_c / 2.0), &LadderOps::kerr(c));
        h.axpy(C64::from(j), &ops.exchange(i));
    }
    Ok(h)
}

/// Rotated iSWAP Hamiltonian for identical qubits:
/// (ω_m − ω_q − J²/Δ) m†m − Σᵢ[(J²/Δ) nᵢ + (E_C/2)cᵢ†cᵢ†cᵢcᵢ] + J Σᵢ(cᵢ†m + cᵢm†), Δ = ω_q − ω_m.
pub fn build_h_tot_iswap(spec: &ModelSpec) -> Result<ComplexMatrix> {
    check_regime(GateKind::Iswap, spec)?;
    let identical = (spec.omega_q1 - spec.omega_q2).abs() <= 1e-12 * spec.omega_q2.abs()
        && (spec.j1 - spec.j2).abs() <= 1e-12 * spec.j2.abs().max(f64::MIN_POSITIVE);
    if !identical {
        return Err(Error::Regime("the iSWAP frame assumes identical qubits (ω_q1 = ω_q2, J1 = J2)".into()));
    }
    let ops = LadderOps::new(&spec.layout)?;
    let (wq, j) = (spec.omega_q2, spec.j2);
    let stark = j * j / (wq - spec.omega_m);
    let mut h = LadderOps::number(&ops.m).scale_real(spec.omega_m - wq - stark);
    for i in 0..2 {
        let c = ops.qubit(i);
        h.axpy(C64::from(-stark), &LadderOps::number(c));
        h.axpy(C64::from(-spec.e_c / 2.0), &LadderOps::kerr(c));
        h.axpy(C64::from(j), &ops.exchange(i));
    }
    Ok(h)
}

/// Rotated CZ Hamiltonian ω_m m†m + Σᵢ[(gᵢ²/ω_m) nᵢ − (E_C/2)cᵢ†cᵢ†cᵢcᵢ + gᵢ nᵢ(m† + m)].
pub fn build_h_tot_cz(spec: &ModelSpec) -> Result<ComplexMatrix> {
    check_regime(GateKind::Cz, spec)?;
    let ops = LadderOps::new(&spec.layout)?;
    let mut h = LadderOps::number(&ops.m).scale_real(spec.omega_m);
    for (i, g) in [spec.g1, spec.g2].into_iter().enumerate() {
        let c = ops.qubit(i);
        h.axpy(C64::from(g * g / spec.omega_m), &LadderOps::number(c));
        h.axpy(C64::from(-spec.e_c / 2.0), &LadderOps::kerr(c));
        h.axpy(C64::from(g), &ops.radiation_pressure(i));
    }
    Ok(h)
}

/// Rotated iCNOT Hamiltonian in the drive frame:
/// δ_m m†m + (g̃₁²/4δ_m) n₁ + δ_q2 n₂ − Σᵢ(E_C/2)cᵢ†cᵢ†cᵢcᵢ + (g̃₁/2) n₁(m† + m) + J₂(c₂†m + c₂m†).
pub fn build_h_tot_icnot(spec: &ModelSpec) -> Result<ComplexMatrix> {
    check_regime(GateKind::Icnot, spec)?;
    let ops = LadderOps::new(&spec.layout)?;
    let dm = spec.delta_m();
    let mut h = LadderOps::number(&ops.m).scale_real(dm);
    h.axpy(C64::from(spec.g_tilde1 * spec.g_tilde1 / (4.0 * dm)), &LadderOps::number(&ops.c1));
    h.axpy(C64::from(spec.delta_q2()), &LadderOps::number(&ops.c2));
    for i in 0..2 {
        h.axpy(C64::from(-spec.e_c / 2.0), &LadderOps::kerr(ops.qubit(i)));
    }
    h.axpy(C64::from(spec.g_tilde1 / 2.0), &ops.radiation_pressure(0));
    h.axpy(C64::from(spec.j2), &ops.exchange(1));
    Ok(h)
}

/// Rotated total Hamiltonian of a gate.
pub fn build_gate_hamiltonian(kind: GateKind, spec: &ModelSpec) -> Result<ComplexMatrix> {
    match kind {
        GateKind::Iswap | GateKind::SqrtIswap => build_h_tot_iswap(spec),
        GateKind::Cz => build_h_tot_cz(spec),
        GateKind::Icnot => build_h_tot_icnot(spec),
    }
}

fn ratio_check(name: &str, ratio: f64, warnings: &mut Vec<String>) -> Result<()> {
    if !ratio.is_finite() || ratio > REGIME_LIMIT {
        return Err(Error::Regime(format!("{name} = {ratio:.3} exceeds {REGIME_LIMIT}")));
    }
    if ratio > REGIME_WARN {
        warnings.push(format!("{name} = {ratio:.3} exceeds {REGIME_WARN}; dispersive corrections are large"));
    }
    Ok(())
}

/// Validity of the perturbative treatment behind each gate. Returns warnings
/// for marginal points and an error beyond [`REGIME_LIMIT`].
pub fn check_regime(kind: GateKind, spec: &ModelSpec) -> Result<Vec<String>> {
    let mut w = Vec::new();
    match kind {
        GateKind::Iswap | GateKind::SqrtIswap => {
            if spec.g1 != 0.0 || spec.g2 != 0.0 {
                return Err(Error::Regime("the iSWAP regime needs g1 = g2 = 0".into()));
            }
            ratio_check("J1/|ω_q1 − ω_m|", (spec.j1 / (spec.omega_q1 - spec.omega_m)).abs(), &mut w)?;
            ratio_check("J2/|ω_q2 − ω_m|", (spec.j2 / (spec.omega_q2 - spec.omega_m)).abs(), &mut w)?;
        }
        GateKind::Cz => {
            if spec.j1 != 0.0 || spec.j2 != 0.0 {
                return Err(Error::Regime("the CZ regime needs J1 = J2 = 0".into()));
            }
            ratio_check("g1/ω_m", (spec.g1 / spec.omega_m).abs(), &mut w)?;
            ratio_check("g2/ω_m", (spec.g2 / spec.omega_m).abs(), &mut w)?;
        }
        GateKind::Icnot => {
            if spec.j1 != 0.0 || spec.g2 != 0.0 {
                return Err(Error::Regime("the iCNOT regime needs J1 = g2 = 0".into()));
            }
            ratio_check("J2/|ω_q2 − ω_m|", (spec.j2 / (spec.omega_q2 - spec.omega_m)).abs(), &mut w)?;
            ratio_check("g̃1/|2δ_m|", (spec.g_tilde1 / (2.0 * spec.delta_m())).abs(), &mut w)?;
            ratio_check("g̃1/(4ω_ac)", (spec.g_tilde1 / (4.0 * spec.omega_ac)).abs(), &mut w)?;
        }
    }
    Ok(w)
}

/// g_S, g_Z or g̃_NOT (rad/s).
pub fn effective_coupling(kind: GateKind, spec: &ModelSpec) -> Result<f64> {
    let nonzero = |x: f64, what: &str| {
        if x == 0.0 || !x.is_finite() {
            Err(Error::Precondition(format!("{what} vanishes")))
        } else {
            Ok(x)
        }
    };
    match kind {
        GateKind::Iswap | GateKind::SqrtIswap => {
            let d1 = nonzero(spec.omega_q1 - spec.omega_m, "ω_q1 − ω_m")?;
            let d2 = nonzero(spec.omega_q2 - spec.omega_m, "ω_q2 − ω_m")?;
            Ok(spec.j1 * spec.j2 / 2.0 * (1.0 / d1 + 1.0 / d2))
        }
        GateKind::Cz => {
            let wm = nonzero(spec.omega_m, "ω_m")?;
            Ok(2.0 * spec.g1 * spec.g2 / wm)
        }
        GateKind::Icnot => {
            let dm = nonzero(spec.delta_m(), "δ_m")?;
            let dqm = nonzero(spec.delta_q2() - dm, "δ_q2 − δ_m")?;
            Ok(spec.g_tilde1 * spec.j2 / 4.0 * (1.0 / dqm - 1.0 / dm))
        }
    }
}

/// Gate time (s) from the effective coupling (rad/s).
pub fn gate_time(kind: GateKind, coupling: f64) -> Result<f64> {
    if coupling == 0.0 || !coupling.is_finite() {
        return Err(Error::Precondition(format!("gate time needs a finite nonzero coupling, got {coupling}")));
    }
    let g = coupling.abs();
    Ok(match kind {
        GateKind::Iswap | GateKind::Icnot => PI / (2.0 * g),
        GateKind::SqrtIswap => PI / (4.0 * g),
        GateKind::Cz => PI / g,
    })
}

/// Target unitary in the basis |q1 q2⟩ = |00⟩, |01⟩, |10⟩, |11⟩. The phase
/// −i belongs to a positive coupling, +i to a negative one.
pub fn ideal_unitary(kind: GateKind, sign: f64) -> ComplexMatrix {
    let ph = if sign >= 0.0 { C64::new(0.0, -1.0) } else { C64::new(0.0, 1.0) };
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    match kind {
        GateKind::Iswap => ComplexMatrix::from_rows(&[
            &[one, zero, zero, zero],
            &[zero, zero, ph, zero],
            &[zero, ph, zero, zero],
            &[zero, zero, zero, one],
        ]),
        GateKind::SqrtIswap => {
            let c = C64::from(std::f64::consts::FRAC_1_SQRT_2);
            let s = ph * std::f64::consts::FRAC_1_SQRT_2;
            ComplexMatrix::from_rows(&[
                &[one, zero, zero, zero],
                &[zero, c, s, zero],
                &[zero, s, c, zero],
                &[zero, zero, zero, one],
            ])
        }
        GateKind::Cz => ComplexMatrix::real_diagonal(&[1.0, 1.0, 1.0, -1.0]),
        GateKind::Icnot => ComplexMatrix::from_rows(&[
            &[one, zero, zero, zero],
            &[zero, one, zero, zero],
            &[zero, zero, zero, ph],
            &[zero, zero, ph, zero],
        ]),
    }
}

/// Two-qubit effective Hamiltonian (4×4, rad/s) generating the ideal gate:
/// g_S(σ₁⁺σ₂⁻ + h.c.), −g_Z n₁n₂ or g̃_NOT n₁σ₂ˣ. The decoupled magnon factor is omitted.
pub fn build_h_effective(kind: GateKind, coupling: f64) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(4, 4);
    let g = C64::from(coupling);
    match kind {
        GateKind::Iswap | GateKind::SqrtIswap => {
            h[(1, 2)] = g;
            h[(2, 1)] = g;
        }
        GateKind::Cz => h[(3, 3)] = -g,
        GateKind::Icnot => {
            h[(2, 3)] = g;
            h[(3, 2)] = g;
        }
    }
    h
}

/// Rates entering the Lindblad operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipationRates {
    /// Magnon linewidth κ (1/s).
    pub kappa: f64,
    pub n_th: f64,
    pub t1: f64,
    pub t_phi: f64,
}

impl DissipationRates {
    pub fn none() -> Self {
        DissipationRates { kappa: 0.0, n_th: 0.0, t1: f64::INFINITY, t_phi: f64::INFINITY }
    }
}

/// L₁ = √(κ(1+n_th)) m, L₂ = √(κ n_th) m†, L₃,₄ = √(1/T₁) cᵢ, L₅,₆ = √(1/T_φ) cᵢ†cᵢ,
/// each paired with unit rate.
pub fn build_dissipators(layout: &SpaceLayout, rates: &DissipationRates) -> Result<Vec<(f64, ComplexMatrix)>> {
    let r = rates;
    if !(r.kappa >= 0.0 && r.n_th >= 0.0 && r.t1 > 0.0 && r.t_phi > 0.0) {
        return Err(Error::arg(format!("dissipation rates must be non-negative, got {r:?}")));
    }
    let ops = LadderOps::new(layout)?;
    let inv = |t: f64| if t.is_infinite() { 0.0 } else { 1.0 / t };
    let ops_list = vec![
        ops.m.scale_real((r.kappa * (1.0 + r.n_th)).sqrt()),
        ops.m.dagger().scale_real((r.kappa * r.n_th).sqrt()),
        ops.c1.scale_real(inv(r.t1).sqrt()),
        ops.c2.scale_real(inv(r.t1).sqrt()),
        LadderOps::number(&ops.c1).scale_real(inv(r.t_phi).sqrt()),
        LadderOps::number(&ops.c2).scale_real(inv(r.t_phi).sqrt()),
    ];
    Ok(ops_list.into_iter().map(|l| (1.0, l)).collect())
}

/// Device presets for each gate: the qubit designs used for that regime.
pub fn device_preset(kind: GateKind) -> DeviceConfig {
    let mut device = DeviceConfig::default();
    match kind {
        GateKind::Iswap | GateKind::SqrtIswap => {}
        GateKind::Cz => {
            let q = TransmonDesign { a_j: 0.0, phi_b: PI / 4.0, ..TransmonDesign::default() };
            device.qubit1 = q;
            device.qubit2 = q;
        }
        GateKind::Icnot => {
            device.qubit1 = TransmonDesign { a_j: 0.0, phi_b: 0.0, phi_ac: PI / 10.0, ..TransmonDesign::default() };
        }
    }
    device
}

/// Reference operating ratio ω_m/ω_q of each gate.
pub fn reference_ratio(kind: GateKind) -> f64 {
    match kind {
        GateKind::Iswap | GateKind::SqrtIswap => 0.94,
        GateKind::Cz => 0.027,
        GateKind::Icnot => 0.97,
    }
}

/// Reference effective coupling (rad/s) used in direct-coupling mode:
/// g_S/2π = 0.49 MHz, g_Z/2π = 2.1 MHz, g̃_NOT/2π = 46 kHz.
pub fn reference_coupling(kind: GateKind) -> f64 {
    TWO_PI
        * match kind {
            GateKind::Iswap | GateKind::SqrtIswap => 0.49e6,
            GateKind::Cz => 2.1e6,
            GateKind::Icnot => 46e3,
        }
}

/// Direct values replacing the derived chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Overrides {
    /// Geometrical factor I_x (1/m).
    pub i_x: Option<f64>,
    /// Exchange coupling J (rad/s) for every qubit the gate couples by exchange.
    pub j: Option<f64>,
    /// Radiation-pressure coupling g (rad/s) for both CZ qubits.
    pub g: Option<f64>,
    /// Drive coupling g̃ (rad/s) of the iCNOT control qubit.
    pub g_tilde: Option<f64>,
    /// Effective coupling magnitude (rad/s); the gate's primary coupling is
    /// rescaled to reach it, keeping its sign.
    pub coupling: Option<f64>,
}

/// A fully derived operating point of one gate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkingPoint {
    pub kind: GateKind,
    /// ω_m / ω_q2 (the target qubit for iCNOT, either qubit otherwise).
    pub ratio: f64,
    pub omega_q1: f64,
    pub omega_q2: f64,
    pub omega_m: f64,
    /// Bias field H0 (A/m).
    pub h0: f64,
    pub e_r: f64,
    pub n_th: f64,
    pub kappa: f64,
    pub e_c: f64,
    pub j1: f64,
    pub j2: f64,
    pub g1: f64,
    pub g2: f64,
    pub g_tilde1: f64,
    pub omega_ac: f64,
    pub i_x: f64,
    /// g_S, g_Z or g̃_NOT (rad/s).
    pub coupling: f64,
    pub t_gate: f64,
    pub t1: f64,
    pub t_phi: f64,
    pub half_saturation: bool,
    pub warnings: Vec<String>,
}

impl WorkingPoint {
    pub fn model_spec(&self, dims: [usize; 3]) -> Result<ModelSpec> {
        Ok(ModelSpec {
            layout: SpaceLayout::qqm(dims[0], dims[1], dims[2])?,
            omega_q1: self.omega_q1,
            omega_q2: self.omega_q2,
            omega_m: self.omega_m,
            e_c: self.e_c,
            j1: self.j1,
            j2: self.j2,
            g1: self.g1,
            g2: self.g2,
            g_tilde1: self.g_tilde1,
            omega_ac: self.omega_ac,
        })
    }

    pub fn rates(&self) -> DissipationRates {
        DissipationRates { kappa: self.kappa, n_th: self.n_th, t1: self.t1, t_phi: self.t_phi }
    }
}

/// Residual couplings below this fraction of the gate coupling are rounding
/// noise of the flux selectors (e.g. sin 2φ_b at φ_b = π/2) and are zeroed.
const SELECTOR_NOISE: f64 = 1e-9;

fn zero_if_noise(x: f64, scale: f64, what: &str, kind: GateKind) -> Result<f64> {
    if x.abs() <= SELECTOR_NOISE * scale.abs() {
        Ok(0.0)
    } else {
        Err(Error::Regime(format!("{kind} regime needs {what} = 0, the device gives {:.4e} rad/s", x)))
    }
}

/// Runs the parameter chain for gate `kind` at ω_m = ratio · ω_q2.
pub fn derive_working_point(
    device: &DeviceConfig,
    kind: GateKind,
    ratio: f64,
    overrides: &Overrides,
) -> Result<WorkingPoint> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::arg(format!("ω_m/ω_q must be positive, got {ratio}")));
    }
    let mut magnet = device.magnet;
    if let Some(i_x) = overrides.i_x {
        magnet.i_x = i_x;
    }
    let (q1, q2) = (device.qubit1, device.qubit2);
    let omega_q1 = TWO_PI * qubit_frequency(&q1);
    let omega_q2 = TWO_PI * qubit_frequency(&q2);
    let omega_m = ratio * omega_q2;
    let h0 = field_for_frequency(omega_m, &magnet)?;
    let e_r = squeezing(h0, &magnet)?;
    let n_th = thermal_occupation(omega_m, device.env.temperature)?;
    let kappa = linewidth(omega_m, &device.env);
    let mut j1 = coupling_j(&q1, &magnet, h0)?;
    let mut j2 = coupling_j(&q2, &magnet, h0)?;
    let mut g1 = coupling_g(&q1, &magnet, h0)?;
    let mut g2 = coupling_g(&q2, &magnet, h0)?;
    let mut g_tilde1 = 0.0;
    match kind {
        GateKind::Iswap | GateKind::SqrtIswap => {
            let scale = j1.abs().max(j2.abs());
            g1 = zero_if_noise(g1, scale, "g1", kind)?;
            g2 = zero_if_noise(g2, scale, "g2", kind)?;
            if let Some(j) = overrides.j {
                j1 = j;
                j2 = j;
            }
        }
        GateKind::Cz => {
            let scale = g1.abs().max(g2.abs());
            j1 = zero_if_noise(j1, scale, "J1", kind)?;
            j2 = zero_if_noise(j2, scale, "J2", kind)?;
            if let Some(g) = overrides.g {
                g1 = g;
                g2 = g;
            }
        }
        GateKind::Icnot => {
            g_tilde1 = coupling_g_tilde(&q1, &magnet, h0)?;
            j1 = zero_if_noise(j1, j2, "J1", kind)?;
            g2 = zero_if_noise(g2, j2, "g2", kind)?;
            // The static flux bias of the driven qubit is zero, so g1 = 0 as well.
            g1 = zero_if_noise(g1, j2, "g1", kind)?;
            if let Some(j) = overrides.j {
                j2 = j;
            }
            if let Some(gt) = overrides.g_tilde {
                g_tilde1 = gt;
            }
        }
    }
    let omega_ac = if kind == GateKind::Icnot { omega_q2 + j2 * j2 / (omega_q2 - omega_m) } else { 0.0 };
    let mut point = WorkingPoint {
        kind,
        ratio,
        omega_q1,
        omega_q2,
        omega_m,
        h0,
        e_r,
        n_th,
        kappa,
        e_c: TWO_PI * q1.e_c,
        j1,
        j2,
        g1,
        g2,
        g_tilde1,
        omega_ac,
        i_x: magnet.i_x,
        coupling: 0.0,
        t_gate: 0.0,
        t1: device.env.t1,
        t_phi: device.env.t_phi,
        half_saturation: exceeds_half_saturation(h0, &magnet),
        warnings: Vec::new(),
    };
    let probe = point.model_spec([3, 3, 4])?;
    let mut coupling = effective_coupling(kind, &probe)?;
    if let Some(target) = overrides.coupling {
        if !(target > 0.0) {
            return Err(Error::arg(format!("effective coupling override must be positive, got {target}")));
        }
        let factor = target / coupling.abs();
        match kind {
            GateKind::Iswap | GateKind::SqrtIswap => {
                point.j1 *= factor.sqrt();
                point.j2 *= factor.sqrt();
            }
            GateKind::Cz => {
                point.g1 *= factor.sqrt();
                point.g2 *= factor.sqrt();
            }
            GateKind::Icnot => point.g_tilde1 *= factor,
        }
        coupling = effective_coupling(kind, &point.model_spec([3, 3, 4])?)?;
    }
    point.coupling = coupling;
    point.t_gate = gate_time(kind, coupling)?;
    point.warnings = check_regime(kind, &point.model_spec([3, 3, 4])?)?;
    if !point.half_saturation {
        point.warnings.push(format!("H0 = {:.4e} A/m is below M_s/2", point.h0));
    }
    Ok(point)
}

/// iSWAP point with qubit 1 re-biased to φ_b = π/3: its frequency, J1 and
/// g1 are recomputed at the same bias field, everything else is kept.
pub fn detuned_variant(device: &DeviceConfig, point: &WorkingPoint, dims: [usize; 3]) -> Result<ModelSpec> {
    if !point.kind.is_exchange() {
        return Err(Error::arg("the detuned variant applies to the iSWAP scheme"));
    }
    let mut magnet = device.magnet;
    magnet.i_x = point.i_x;
    let q1 = TransmonDesign { phi_b: PI / 3.0, ..device.qubit1 };
    let mut spec = point.model_spec(dims)?;
    spec.omega_q1 = TWO_PI * qubit_frequency(&q1);
    // Keep any override rescaling of J1 applied to the resonant point.
    let j1_device = coupling_j(&device.qubit1, &magnet, point.h0)?;
    let scale = if j1_device != 0.0 { point.j1 / j1_device } else { 1.0 };
    spec.j1 = coupling_j(&q1, &magnet, point.h0)? * scale;
    spec.g1 = coupling_g(&q1, &magnet, point.h0)?;
    Ok(spec)
}

/// Everything needed to simulate one gate.
#[derive(Debug, Clone)]
pub struct GateScenario {
    pub kind: GateKind,
    pub point: WorkingPoint,
    pub spec: ModelSpec,
    pub h_total: ComplexMatrix,
    /// 4×4 effective two-qubit Hamiltonian.
    pub h_effective: ComplexMatrix,
    pub u_ideal: ComplexMatrix,
    pub t_gate: f64,
    pub dissipators: Vec<(f64, ComplexMatrix)>,
}

impl GateScenario {
    pub fn from_point(point: WorkingPoint, dims: [usize; 3], dissipation: bool) -> Result<Self> {
        let kind = point.kind;
        let spec = point.model_spec(dims)?;
        let h_total = build_gate_hamiltonian(kind, &spec)?;
        let rates = if dissipation { point.rates() } else { DissipationRates::none() };
        let dissipators = build_dissipators(&spec.layout, &rates)?;
        Ok(GateScenario {
            kind,
            h_effective: build_h_effective(kind, point.coupling),
            u_ideal: ideal_unitary(kind, point.coupling.signum()),
            t_gate: point.t_gate,
            point,
            spec,
            h_total,
            dissipators,
        })
    }

    pub fn build(
        device: &DeviceConfig,
        kind: GateKind,
        ratio: f64,
        dims: [usize; 3],
        overrides: &Overrides,
    ) -> Result<Self> {
        Self::from_point(derive_working_point(device, kind, ratio, overrides)?, dims, true)
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.spec.layout
    }

    pub fn jump_operators(&self) -> Vec<ComplexMatrix> {
        self.dissipators.iter().filter(|(_, l)| !l.is_zero()).map(|(r, l)| l.scale_real(r.sqrt())).collect()
    }

    /// Same scenario without dissipation.
    pub fn closed(&self) -> Self {
        let mut s = self.clone();
        s.dissipators = build_dissipators(&s.spec.layout, &DissipationRates::none()).expect("layout already checked");
        s
    }
}
