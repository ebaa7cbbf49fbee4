//! Scenario orchestration: frequency sweeps, optimum finding, observable
//! traces and the named scenario checks.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{fock_state, kron_all, matrix_exp, projector, thermal_state, ComplexMatrix, SpaceLayout, C64};
use crate::config::RunConfig;
use crate::constants::TWO_PI;
use crate::device::{qubit_frequency, DeviceConfig};
use crate::error::{Error, Result};
use crate::fidelity::{average_gate_fidelity, tomography, ChannelTomography};
use crate::lindblad::{observable_trace, GateChannel, LindbladProblem, MagnonInit, Method, Observable, TraceRow};
use crate::model::{
    build_h_rotating, derive_working_point, detuned_variant, device_preset, iswap_frame, reference_ratio, GateKind,
    GateScenario, LadderOps, Overrides, WorkingPoint,
};

/// Magnon occupation of the thermal CZ scenario.
pub const THERMAL_CZ_N_TH: f64 = 0.99;
/// Magnon Fock size of the thermal CZ scenario.
pub const THERMAL_CZ_MAGNON_DIM: usize = 12;
/// Largest detuned/resonant swap amplitude accepted as decoupled.
pub const DECOUPLING_LIMIT: f64 = 0.1;
/// Time steps per gate time in the decoupling check.
const DECOUPLING_STEPS: usize = 200;

/// Why a sweep point produced no fidelity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointError {
    pub kind: String,
    pub message: String,
}

impl From<Error> for PointError {
    fn from(e: Error) -> Self {
        PointError { kind: e.kind().into(), message: e.to_string() }
    }
}

/// One sweep point. Quantities that could not be computed are NaN and
/// `error` says why.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub omega_m_ratio: f64,
    pub omega_m_hz: f64,
    pub e_r: f64,
    pub n_th: f64,
    pub kappa_hz: f64,
    /// g_S, g_Z or g̃_NOT divided by 2π.
    pub coupling_hz: f64,
    pub t_gate_s: f64,
    pub avg_fidelity: f64,
    /// Leakage out of the computational space averaged over Haar inputs.
    pub leakage: f64,
    pub wall_time_s: f64,
    pub error: Option<PointError>,
}

impl SweepRow {
    fn pending(ratio: f64, omega_q2: f64) -> Self {
        SweepRow {
            omega_m_ratio: ratio,
            omega_m_hz: ratio * omega_q2 / TWO_PI,
            e_r: f64::NAN,
            n_th: f64::NAN,
            kappa_hz: f64::NAN,
            coupling_hz: f64::NAN,
            t_gate_s: f64::NAN,
            avg_fidelity: f64::NAN,
            leakage: f64::NAN,
            wall_time_s: 0.0,
            error: None,
        }
    }

    fn fill_point(&mut self, p: &WorkingPoint) {
        self.omega_m_hz = p.omega_m / TWO_PI;
        self.e_r = p.e_r;
        self.n_th = p.n_th;
        self.kappa_hz = p.kappa / TWO_PI;
        self.coupling_hz = p.coupling.abs() / TWO_PI;
        self.t_gate_s = p.t_gate;
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// F̄ and leakage of one gate at one operating point.
#[derive(Debug, Clone, Serialize)]
pub struct GateEvaluation {
    pub kind: GateKind,
    pub ratio: f64,
    pub dims: [usize; 3],
    pub magnon_init: MagnonInit,
    pub coupling_hz: f64,
    pub t_gate_s: f64,
    pub n_th: f64,
    pub e_r: f64,
    pub avg_fidelity: f64,
    pub average_leakage: f64,
    pub max_leakage: f64,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub scenario: GateScenario,
    #[serde(skip)]
    pub tomography: ChannelTomography,
}

/// Full pipeline at one point: working point, gate scenario with
/// dissipation, channel, tomography and F̄. `init` of `None` starts the
/// magnon in the thermal state of its bath.
pub fn evaluate_gate(
    device: &DeviceConfig,
    kind: GateKind,
    ratio: f64,
    dims: [usize; 3],
    overrides: &Overrides,
    init: Option<MagnonInit>,
) -> Result<GateEvaluation> {
    let start = Instant::now();
    let point = derive_working_point(device, kind, ratio, overrides)?;
    let init = init.unwrap_or(MagnonInit::Thermal(point.n_th));
    let scenario = GateScenario::from_point(point, dims, true)?;
    evaluate_scenario(scenario, init, start)
}

fn evaluate_scenario(scenario: GateScenario, init: MagnonInit, start: Instant) -> Result<GateEvaluation> {
    let p = &scenario.point;
    let channel = GateChannel::new(&scenario, init)?;
    let tomo = tomography(&channel)?;
    let f = average_gate_fidelity(&tomo, &scenario.u_ideal)?;
    Ok(GateEvaluation {
        kind: scenario.kind,
        ratio: p.ratio,
        dims: [scenario.layout().dim(0), scenario.layout().dim(1), scenario.layout().dim(2)],
        magnon_init: init,
        coupling_hz: p.coupling.abs() / TWO_PI,
        t_gate_s: scenario.t_gate,
        n_th: p.n_th,
        e_r: p.e_r,
        avg_fidelity: f,
        average_leakage: tomo.average_leakage(),
        max_leakage: tomo.max_leakage(),
        wall_time_s: start.elapsed().as_secs_f64(),
        tomography: tomo,
        scenario,
    })
}

/// One sweep point through the full pipeline. Never fails: errors are
/// recorded in the row.
pub fn run_point(device: &DeviceConfig, cfg: &RunConfig, ratio: f64) -> SweepRow {
    let start = Instant::now();
    let mut row = SweepRow::pending(ratio, TWO_PI * qubit_frequency(&device.qubit2));
    let outcome = (|| -> Result<()> {
        let point = derive_working_point(device, cfg.gate, ratio, &cfg.overrides_for(cfg.gate))?;
        row.fill_point(&point);
        let init = cfg.magnon_init.resolve(point.n_th);
        let scenario = GateScenario::from_point(point, cfg.dims, true)?;
        let eval = evaluate_scenario(scenario, init, start)?;
        row.avg_fidelity = eval.avg_fidelity;
        row.leakage = eval.average_leakage;
        Ok(())
    })();
    row.wall_time_s = start.elapsed().as_secs_f64();
    if let Err(e) = outcome {
        row.error = Some(e.into());
    }
    row
}

/// One row per configured ratio, in input order regardless of `parallel`.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let device = cfg.resolved_device()?;
    let ratios = cfg.sweep.ratios();
    let rows = if cfg.parallel {
        ratios.par_iter().map(|&r| run_point(&device, cfg, r)).collect()
    } else {
        ratios.iter().map(|&r| run_point(&device, cfg, r)).collect()
    };
    Ok(rows)
}

/// Row of largest F̄ by scan, without interpolation; ties go to the larger
/// magnon frequency. Failed rows are ignored.
pub fn find_optimum(rows: &[SweepRow]) -> Result<&SweepRow> {
    if rows.len() < 3 {
        return Err(Error::Precondition(format!("optimum search needs at least 3 rows, got {}", rows.len())));
    }
    rows.iter()
        .filter(|r| r.is_ok() && r.avg_fidelity.is_finite())
        .max_by(|a, b| {
            a.avg_fidelity.total_cmp(&b.avg_fidelity).then(a.omega_m_hz.total_cmp(&b.omega_m_hz))
        })
        .ok_or_else(|| Error::Precondition("every sweep point failed".into()))
}

/// Single-qubit input of a dynamics label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QubitInput {
    Zero,
    One,
    Plus,
    Minus,
}

impl QubitInput {
    fn ket(self, dim: usize) -> Result<ComplexMatrix> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            QubitInput::Zero => fock_state(dim, 0),
            QubitInput::One => fock_state(dim, 1),
            QubitInput::Plus | QubitInput::Minus => {
                let s = if self == QubitInput::Plus { h } else { -h };
                let mut v = ComplexMatrix::zeros(dim, 1);
                v[(0, 0)] = C64::new(h, 0.0);
                v[(1, 0)] = C64::new(s, 0.0);
                Ok(v)
            }
        }
    }
}

/// Parses `|ab>`, `|ab⟩` or `ab` with a, b ∈ {0, 1, +, -}.
pub fn parse_input_label(label: &str) -> Result<[QubitInput; 2]> {
    let inner = label.trim().trim_start_matches('|').trim_end_matches('>').trim_end_matches('⟩');
    let parsed: Vec<QubitInput> = inner
        .chars()
        .map(|ch| match ch {
            '0' => Ok(QubitInput::Zero),
            '1' => Ok(QubitInput::One),
            '+' => Ok(QubitInput::Plus),
            '-' | '−' => Ok(QubitInput::Minus),
            _ => Err(()),
        })
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::arg(format!("unknown input state label `{label}`")))?;
    match parsed[..] {
        [a, b] => Ok([a, b]),
        _ => Err(Error::arg(format!("input state label `{label}` must name two qubits"))),
    }
}

/// ρ_q1 ⊗ ρ_q2 ⊗ ρ_m for a two-qubit label.
pub fn input_state(label: &str, layout: &SpaceLayout, magnon: MagnonInit) -> Result<ComplexMatrix> {
    let [a, b] = parse_input_label(label)?;
    let rho_m = match magnon {
        MagnonInit::Vacuum => projector(&fock_state(layout.dim(2), 0)?)?,
        MagnonInit::Thermal(n) => thermal_state(layout.dim(2), n)?,
    };
    Ok(kron_all(&[projector(&a.ket(layout.dim(0))?)?, projector(&b.ket(layout.dim(1))?)?, rho_m]))
}

#[derive(Debug, Clone, Serialize)]
pub struct DynamicsTable {
    pub kind: GateKind,
    pub input: String,
    pub ratio: f64,
    pub t_gate_s: f64,
    /// Observable labels, one per entry of each row's `values`.
    pub columns: Vec<String>,
    pub rows: Vec<TraceRow>,
}

/// ⟨n_q1⟩, ⟨n_q2⟩, ⟨n_m⟩ and ⟨σ_x⁽²⁾⟩ along the dissipative gate evolution
/// from `label`, at `times` or on the configured uniform grid.
pub fn run_dynamics(cfg: &RunConfig, label: &str, times: Option<Vec<f64>>) -> Result<DynamicsTable> {
    parse_input_label(label)?;
    let device = cfg.resolved_device()?;
    let ratio = cfg.dynamics_ratio();
    let point = derive_working_point(&device, cfg.gate, ratio, &cfg.overrides_for(cfg.gate))?;
    let init = cfg.magnon_init.resolve(point.n_th);
    let scenario = GateScenario::from_point(point, cfg.dims, true)?;
    let times = times.unwrap_or_else(|| {
        let t_max = cfg.dynamics.t_max.unwrap_or(scenario.t_gate);
        let n = cfg.dynamics.points;
        (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
    });
    let problem = LindbladProblem::from_scenario(&scenario)?;
    let rho0 = input_state(label, scenario.layout(), init)?;
    let observables =
        [Observable::QubitNumber(0), Observable::QubitNumber(1), Observable::MagnonNumber, Observable::SigmaX(1)];
    let rows = observable_trace(&problem, &rho0, &times, &observables, Method::Auto)?;
    Ok(DynamicsTable {
        kind: cfg.gate,
        input: label.to_string(),
        ratio,
        t_gate_s: scenario.t_gate,
        columns: observables.iter().map(|o| o.label()).collect(),
        rows,
    })
}

/// Swap amplitudes of the resonant and the detuned iSWAP configuration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecouplingCheck {
    /// Largest ⟨n_q2⟩ from |10⟩ over [0, 2T_S], both qubits resonant.
    pub resonant_amplitude: f64,
    /// The same with qubit 1 re-biased to φ_b = π/3.
    pub detuned_amplitude: f64,
    pub amplitude_ratio: f64,
    /// Frequency shift of qubit 1 (Hz).
    pub detuning_hz: f64,
    pub window_s: f64,
    pub passed: bool,
}

/// Closed-system swap amplitudes from |10⟩ with the magnon in vacuum, in
/// the frame rotating at the resonant iSWAP frame frequency.
pub fn decoupling_check(device: &DeviceConfig, overrides: &Overrides, ratio: f64) -> Result<DecouplingCheck> {
    let dims = GateKind::Iswap.default_dims();
    let point = derive_working_point(device, GateKind::Iswap, ratio, overrides)?;
    let resonant = point.model_spec(dims)?;
    let detuned = detuned_variant(device, &point, dims)?;
    let frame = iswap_frame(&resonant);
    let window = 2.0 * point.t_gate;
    let amplitude = |spec: &crate::model::ModelSpec| -> Result<f64> {
        let h = build_h_rotating(spec, frame)?;
        let dt = window / (2 * DECOUPLING_STEPS) as f64;
        let u = matrix_exp(&h.scale(C64::new(0.0, -dt)))?;
        let ops = LadderOps::new(&spec.layout)?;
        let n2 = LadderOps::number(&ops.c2);
        let mut psi = kron_all(&[fock_state(dims[0], 1)?, fock_state(dims[1], 0)?, fock_state(dims[2], 0)?]);
        let mut peak: f64 = 0.0;
        for _ in 0..2 * DECOUPLING_STEPS {
            psi = &u * &psi;
            let value = (&(&psi.dagger() * &n2) * &psi)[(0, 0)].re;
            peak = peak.max(value);
        }
        Ok(peak)
    };
    let resonant_amplitude = amplitude(&resonant)?;
    let detuned_amplitude = amplitude(&detuned)?;
    let amplitude_ratio = detuned_amplitude / resonant_amplitude;
    Ok(DecouplingCheck {
        resonant_amplitude,
        detuned_amplitude,
        amplitude_ratio,
        detuning_hz: (detuned.omega_q1 - resonant.omega_q1) / TWO_PI,
        window_s: window,
        passed: amplitude_ratio <= DECOUPLING_LIMIT,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    /// √iSWAP at T_S/2, used to prepare Bell states.
    pub sqrt_iswap: GateEvaluation,
    /// CZ with the magnon starting in vacuum.
    pub cz_vacuum: GateEvaluation,
    /// CZ with a thermal magnon at n_th = 0.99 and magnon dim 12.
    pub cz_thermal: GateEvaluation,
    /// The vacuum CZ fidelity is not below the thermal one.
    pub thermal_ordering_ok: bool,
    pub decoupling: DecouplingCheck,
}

/// Device for a scenario of gate `kind`: the configured device when it
/// targets the same gate family, else that gate's qubit preset with the
/// configured magnet, environment and critical field.
pub fn scenario_device(cfg: &RunConfig, kind: GateKind) -> Result<DeviceConfig> {
    let device = cfg.resolved_device()?;
    if kind == cfg.gate || (kind.is_exchange() && cfg.gate.is_exchange()) {
        return Ok(device);
    }
    let preset = device_preset(kind);
    Ok(DeviceConfig { qubit1: preset.qubit1, qubit2: preset.qubit2, ..device })
}

/// √iSWAP fidelity, vacuum and thermal CZ fidelities, and the decoupling
/// check, each at its gate's reference ratio.
pub fn run_scenarios(cfg: &RunConfig) -> Result<ScenarioReport> {
    let iswap_device = scenario_device(cfg, GateKind::SqrtIswap)?;
    let cz_device = scenario_device(cfg, GateKind::Cz)?;
    let sqrt = GateKind::SqrtIswap;
    let sqrt_iswap = evaluate_gate(
        &iswap_device,
        sqrt,
        reference_ratio(sqrt),
        sqrt.default_dims(),
        &cfg.overrides_for(sqrt),
        Some(MagnonInit::Vacuum),
    )?;
    let cz = GateKind::Cz;
    let cz_ov = cfg.overrides_for(cz);
    let cz_vacuum =
        evaluate_gate(&cz_device, cz, reference_ratio(cz), cz.default_dims(), &cz_ov, Some(MagnonInit::Vacuum))?;
    let cz_thermal = evaluate_gate(
        &cz_device,
        cz,
        reference_ratio(cz),
        [3, 3, THERMAL_CZ_MAGNON_DIM],
        &cz_ov,
        Some(MagnonInit::Thermal(THERMAL_CZ_N_TH)),
    )?;
    let decoupling =
        decoupling_check(&iswap_device, &cfg.overrides_for(GateKind::Iswap), reference_ratio(GateKind::Iswap))?;
    Ok(ScenarioReport {
        thermal_ordering_ok: cz_vacuum.avg_fidelity >= cz_thermal.avg_fidelity,
        sqrt_iswap,
        cz_vacuum,
        cz_thermal,
        decoupling,
    })
}
