//! Structured reports behind the `params`, `geometry` and `verify-sw`
//! commands.

use serde::Serialize;

use crate::config::RunConfig;
use crate::device::{DeviceConfig, MagnetSpec};
use crate::error::Result;
use crate::geometry::{
    dipole_inplane_closed_form, magnet_geometrical_factor, volume_matched_sphere, Axis, CriticalFieldReport,
    LoopPlacement, PotentialModel, PotentialVariant,
};
use crate::model::{derive_working_point, GateKind, GateScenario, WorkingPoint};
use crate::sw::{
    closed_form_discrepancy, commutator_residual, commutator_residual_unprojected, dynamics_agreement,
    reduced_coupling, sw_hamiltonian, two_level_reduction, AgreementInputs, AgreementReport, GeneratorSpec,
};

/// Fock sizes of the generator checks: two levels of margin above the
/// computational states on every subsystem.
pub const SW_DIMS: [usize; 3] = [4, 4, 6];
/// Time steps of the closed-system dynamics comparison.
pub const AGREEMENT_STEPS: usize = 200;

#[derive(Debug, Clone, Serialize)]
pub struct ParamsReport {
    pub device: DeviceConfig,
    pub point: WorkingPoint,
}

/// Device and derived working point at the configured dynamics ratio.
pub fn params_report(cfg: &RunConfig) -> Result<ParamsReport> {
    let device = cfg.resolved_device()?;
    let point = derive_working_point(&device, cfg.gate, cfg.dynamics_ratio(), &cfg.overrides_for(cfg.gate))?;
    Ok(ParamsReport { device, point })
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    /// I_x carried by the device configuration (1/m).
    pub i_x_configured: f64,
    pub i_x_point_dipole: f64,
    pub i_x_ellipsoid_exact: f64,
    pub i_x_surface_charge: f64,
    /// Point dipole at the origin: disc quadrature and closed form.
    pub dipole_quadrature: f64,
    pub dipole_closed_form: f64,
    pub dipole_rel_error: f64,
    /// Equal-volume sphere with the same gap to the loop.
    pub sphere_i_x: f64,
    pub sphere_flux_ratio: f64,
    /// Ratio of the gate couplings, which scale as I_x².
    pub sphere_coupling_ratio: f64,
    pub critical_field: CriticalFieldReport,
}

pub fn geometry_report(magnet: &MagnetSpec, b_c: f64) -> Result<GeometryReport> {
    magnet.validate()?;
    let exact = magnet_geometrical_factor(magnet, PotentialVariant::EllipsoidExact)?;
    let placement = LoopPlacement::for_magnet(magnet);
    let dipole_quadrature = PotentialModel::point_dipole([0.0; 3]).geometrical_factor(&placement, Axis::X)?;
    let dipole_closed_form = dipole_inplane_closed_form(magnet.d, magnet.r_loop);
    let sphere_i_x = magnet_geometrical_factor(&volume_matched_sphere(magnet), PotentialVariant::EllipsoidExact)?;
    let flux_ratio = sphere_i_x / exact;
    let critical_field = PotentialModel::from_magnet(magnet, PotentialVariant::EllipsoidExact).critical_field_check(
        magnet.m_s,
        &placement,
        b_c,
    )?;
    Ok(GeometryReport {
        i_x_configured: magnet.i_x,
        i_x_point_dipole: magnet_geometrical_factor(magnet, PotentialVariant::PointDipole)?,
        i_x_ellipsoid_exact: exact,
        i_x_surface_charge: magnet_geometrical_factor(magnet, PotentialVariant::EllipsoidSurfaceCharge)?,
        dipole_quadrature,
        dipole_closed_form,
        dipole_rel_error: ((dipole_quadrature - dipole_closed_form) / dipole_closed_form).abs(),
        sphere_i_x,
        sphere_flux_ratio: flux_ratio,
        sphere_coupling_ratio: flux_ratio * flux_ratio,
        critical_field,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementEntry {
    pub inputs: AgreementInputs,
    pub report: AgreementReport,
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SwReport {
    pub kind: GateKind,
    pub ratio: f64,
    pub commutator_residual: f64,
    pub commutator_residual_unprojected: f64,
    /// Largest entry difference between each commutator piece and its closed form.
    pub closed_form: Vec<(String, f64)>,
    /// Coupling read off the transformed Hamiltonian (−g_Z for CZ), rad/s.
    pub reduced_coupling: f64,
    /// The same coefficient from the analytic effective coupling, rad/s.
    pub expected_coupling: f64,
    pub coupling_rel_error: f64,
    pub agreement: Vec<AgreementEntry>,
}

/// Generator, second-order Hamiltonian and dynamics checks for the
/// configured gate at its dynamics ratio.
pub fn sw_report(cfg: &RunConfig) -> Result<SwReport> {
    let kind = cfg.gate;
    let device = cfg.resolved_device()?;
    let ratio = cfg.dynamics_ratio();
    let point = derive_working_point(&device, kind, ratio, &cfg.overrides_for(kind))?;
    let gen = GeneratorSpec::from_model(kind, &point.model_spec(SW_DIMS)?);
    gen.validate()?;
    let red = two_level_reduction(&sw_hamiltonian(&gen)?, &gen.layout)?;
    let reduced = reduced_coupling(kind, &red);
    let expected = if kind == GateKind::Cz { -point.coupling } else { point.coupling };
    let scenario = GateScenario::from_point(point, kind.default_dims(), false)?;
    let agreement = [AgreementInputs::SingleExcitation, AgreementInputs::Basis, AgreementInputs::Product]
        .into_iter()
        .map(|inputs| {
            let report = dynamics_agreement(&scenario, inputs, AGREEMENT_STEPS)?;
            Ok(AgreementEntry { inputs, within_bound: report.max_distance <= report.bound, report })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SwReport {
        kind,
        ratio,
        commutator_residual: commutator_residual(&gen)?,
        commutator_residual_unprojected: commutator_residual_unprojected(&gen)?,
        closed_form: closed_form_discrepancy(&gen)?.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        reduced_coupling: reduced,
        expected_coupling: expected,
        coupling_rel_error: ((reduced - expected) / expected).abs(),
        agreement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn geometry_report_is_consistent() {
        let r = geometry_report(&MagnetSpec::default(), 10.0).unwrap();
        assert!(r.dipole_rel_error < 1e-6);
        assert!((r.i_x_surface_charge / r.i_x_ellipsoid_exact - 1.0).abs() < 1e-4);
        assert!((r.sphere_coupling_ratio - r.sphere_flux_ratio.powi(2)).abs() < 1e-12);
        assert!(r.critical_field.ok);
    }

    #[test]
    fn sw_report_for_each_gate() {
        for gate in ["iswap", "cz", "icnot"] {
            let cfg = parse_config(&format!("gate = \"{gate}\"\n")).unwrap();
            let r = sw_report(&cfg).unwrap();
            assert!(r.commutator_residual <= 1e-10, "{gate}: {}", r.commutator_residual);
            assert!(r.coupling_rel_error <= 1e-9, "{gate}: {}", r.coupling_rel_error);
            assert_eq!(r.agreement.len(), 3);
        }
    }

    #[test]
    fn params_report_uses_dynamics_ratio() {
        let cfg = parse_config("gate = \"cz\"\ndynamics.ratio = 0.03\n").unwrap();
        let r = params_report(&cfg).unwrap();
        assert_eq!(r.point.ratio, 0.03);
        assert_eq!(r.point.kind, GateKind::Cz);
    }
}
