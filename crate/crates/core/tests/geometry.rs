use magnongate::device::MagnetSpec;
use magnongate::geometry::{
    dipole_inplane_closed_form, magnet_geometrical_factor, volume_matched_sphere, Axis, LoopPlacement, PotentialModel,
    PotentialVariant, QuadratureOrders,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn surface_charge_factor_matches_closed_form_ellipsoid() {
    let magnet = MagnetSpec::default();
    let exact = magnet_geometrical_factor(&magnet, PotentialVariant::EllipsoidExact).unwrap();
    let quad = magnet_geometrical_factor(&magnet, PotentialVariant::EllipsoidSurfaceCharge).unwrap();
    assert!(rel(quad, exact) < 1e-4, "surface charge {quad} vs closed form {exact}");
    assert!((quad * 1e-6 + 0.12).abs() < 0.06, "I_x = {} /um", quad * 1e-6);
}

#[test]
fn doubling_quadrature_order_changes_factor_below_tenth_percent() {
    let magnet = MagnetSpec::default();
    let placement = LoopPlacement::for_magnet(&magnet);
    for variant in [PotentialVariant::PointDipole, PotentialVariant::EllipsoidExact] {
        let base = PotentialModel::from_magnet(&magnet, variant);
        let lo = base.geometrical_factor(&placement, Axis::X).unwrap();
        let hi = base.with_orders(QuadratureOrders::uniform(32)).geometrical_factor(&placement, Axis::X).unwrap();
        assert!(rel(lo, hi) < 1e-3, "{variant:?}: {lo} vs {hi}");
    }
}

#[test]
fn doubling_surface_order_changes_gradient_below_tenth_percent() {
    let magnet = MagnetSpec::default();
    let lo = PotentialModel::from_magnet(&magnet, PotentialVariant::EllipsoidSurfaceCharge);
    let hi = lo.with_orders(QuadratureOrders { surface: 32, ..lo.orders });
    for r in [[0.0, 0.0, magnet.d], [0.0, 10e-6, 20e-6], [0.0, -3e-6, 45e-6]] {
        let a = lo.unit_potential_gradient(Axis::X, r).unwrap();
        let b = hi.unit_potential_gradient(Axis::X, r).unwrap();
        let scale = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-3 * scale, "{r:?}: {a:?} vs {b:?}");
        }
    }
}

#[test]
fn sphere_model_reproduces_dipole_factor() {
    let sphere = volume_matched_sphere(&MagnetSpec::default());
    let placement = LoopPlacement::for_magnet(&sphere);
    let dipole = dipole_inplane_closed_form(sphere.d, sphere.r_loop);
    for variant in [PotentialVariant::EllipsoidExact, PotentialVariant::EllipsoidSurfaceCharge] {
        let m = PotentialModel::from_magnet(&sphere, variant);
        let ix = m.geometrical_factor(&placement, Axis::X).unwrap();
        assert!(rel(ix, dipole) < 5e-3, "{variant:?}: {ix} vs {dipole}");
    }
}

#[test]
fn sphere_beats_ellipsoid_of_equal_volume() {
    let magnet = MagnetSpec::default();
    let ellipsoid = magnet_geometrical_factor(&magnet, PotentialVariant::EllipsoidExact).unwrap();
    let sphere = magnet_geometrical_factor(&volume_matched_sphere(&magnet), PotentialVariant::EllipsoidExact).unwrap();
    let flux_ratio = sphere / ellipsoid;
    assert!(flux_ratio > 1.0, "flux ratio {flux_ratio}");
}
