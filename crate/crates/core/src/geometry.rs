//! Flux geometry: magnetic scalar potential of the magnet, flux factor of the
//! SQUID loop and the stray-field check.
//!
//! A magnet with moment μ has scalar potential P(r) = Σ μᵢ pᵢ(r) and field
//! B = −μ₀∇P. The loop picks up Iᵢ = −4π ∫ ∇pᵢ·dA per unit moment.
//! The magnet is an ellipsoid with semi-axes (a, b, c) along (x, y, z),
//! centered at the origin.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::MU0;
use crate::device::MagnetSpec;
use crate::quadrature::{carlson_rd, ellip_e, ellip_k, graded_both_ends, graded_breaks, Rule};
use crate::{Error, Result};

pub type Vec3 = [f64; 3];

/// Minimum number of Gauss nodes per panel.
pub const MIN_ORDER: usize = 16;

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add_scaled(a: Vec3, s: f64, b: Vec3) -> Vec3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn unit(a: Vec3) -> Vec3 {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Cartesian axis of the magnetic moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> Vec3 {
        let mut e = [0.0; 3];
        e[self.index()] = 1.0;
        e
    }
}

/// Flat circular loop: the disc spanned by the SQUID.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopPlacement {
    pub center: Vec3,
    pub normal: Vec3,
    pub radius: f64,
}

impl LoopPlacement {
    pub fn new(center: Vec3, normal: Vec3, radius: f64) -> Result<Self> {
        let p = LoopPlacement { center, normal, radius };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !((norm(self.normal) - 1.0).abs() <= 1e-12) {
            return Err(Error::arg(format!("loop normal must be a unit vector, |n| = {}", norm(self.normal))));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::arg(format!("loop radius must be positive, got {}", self.radius)));
        }
        if self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::arg("loop center must be finite"));
        }
        Ok(())
    }

    /// Loop in the x = 0 plane whose closest point to the magnet center sits
    /// at (0, 0, d): center (0, 0, d + R), normal along x.
    pub fn standard(d: f64, radius: f64) -> Self {
        LoopPlacement { center: [0.0, 0.0, d + radius], normal: [1.0, 0.0, 0.0], radius }
    }

    /// Loop in the plane x = d, centered on the x axis.
    pub fn coaxial(d: f64, radius: f64) -> Self {
        LoopPlacement { center: [d, 0.0, 0.0], normal: [1.0, 0.0, 0.0], radius }
    }

    pub fn for_magnet(magnet: &MagnetSpec) -> Self {
        Self::standard(magnet.d, magnet.r_loop)
    }

    /// Point of the disc closest to the origin, and whether it lies on the rim.
    pub fn closest_point(&self) -> (Vec3, bool) {
        let n = self.normal;
        let h = dot(sub([0.0; 3], self.center), n);
        let q = add_scaled([0.0; 3], -h, n);
        let rel = sub(q, self.center);
        let r = norm(rel);
        if r <= self.radius * (1.0 - 1e-12) {
            (q, false)
        } else {
            (add_scaled(self.center, self.radius / r, rel), true)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialVariant {
    /// Point dipole at the origin; the ellipsoid only marks the excluded body.
    PointDipole,
    /// Closed-form exterior potential of a uniformly magnetized ellipsoid.
    EllipsoidExact,
    /// Surface-charge quadrature of the same ellipsoid.
    EllipsoidSurfaceCharge,
}

/// Gauss nodes per panel for the disc and surface quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadratureOrders {
    pub disc_radial: usize,
    pub disc_angular: usize,
    pub surface: usize,
}

impl Default for QuadratureOrders {
    fn default() -> Self {
        QuadratureOrders { disc_radial: MIN_ORDER, disc_angular: MIN_ORDER, surface: MIN_ORDER }
    }
}

impl QuadratureOrders {
    pub fn uniform(n: usize) -> Self {
        QuadratureOrders { disc_radial: n, disc_angular: n, surface: n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialModel {
    pub variant: PotentialVariant,
    pub semi_axes: Vec3,
    pub orders: QuadratureOrders,
}

impl PotentialModel {
    pub fn new(variant: PotentialVariant, semi_axes: Vec3, orders: QuadratureOrders) -> Result<Self> {
        let m = PotentialModel { variant, semi_axes, orders };
        m.validate()?;
        Ok(m)
    }

    pub fn point_dipole(semi_axes: Vec3) -> Self {
        PotentialModel { variant: PotentialVariant::PointDipole, semi_axes, orders: QuadratureOrders::default() }
    }

    pub fn ellipsoid(semi_axes: Vec3) -> Self {
        PotentialModel { variant: PotentialVariant::EllipsoidExact, semi_axes, orders: QuadratureOrders::default() }
    }

    pub fn surface_charge(semi_axes: Vec3) -> Self {
        PotentialModel {
            variant: PotentialVariant::EllipsoidSurfaceCharge,
            semi_axes,
            orders: QuadratureOrders::default(),
        }
    }

    /// Prolate magnet with semi-axes (L_x, L_z, L_z).
    pub fn from_magnet(magnet: &MagnetSpec, variant: PotentialVariant) -> Self {
        PotentialModel { variant, semi_axes: [magnet.l_x, magnet.l_z, magnet.l_z], orders: QuadratureOrders::default() }
    }

    pub fn with_orders(mut self, orders: QuadratureOrders) -> Self {
        self.orders = orders;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let o = self.orders;
        if o.disc_radial < MIN_ORDER || o.disc_angular < MIN_ORDER || o.surface < MIN_ORDER {
            return Err(Error::arg(format!("quadrature orders must be at least {MIN_ORDER}, got {o:?}")));
        }
        let positive = self.semi_axes.iter().all(|a| *a > 0.0 && a.is_finite());
        let allowed_point = self.variant == PotentialVariant::PointDipole && self.semi_axes.iter().all(|a| *a == 0.0);
        if !positive && !allowed_point {
            return Err(Error::arg(format!("semi-axes must be positive, got {:?}", self.semi_axes)));
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * PI * self.semi_axes.iter().product::<f64>()
    }

    /// Σ (xᵢ/aᵢ)², or +∞ at a point body for any r ≠ 0.
    fn shape_function(&self, r: Vec3) -> f64 {
        let a = self.semi_axes;
        if a.iter().all(|x| *x == 0.0) {
            return if norm(r) > 0.0 { f64::INFINITY } else { 0.0 };
        }
        (r[0] / a[0]).powi(2) + (r[1] / a[1]).powi(2) + (r[2] / a[2]).powi(2)
    }

    pub fn is_outside(&self, r: Vec3) -> bool {
        self.shape_function(r) > 1.0
    }

    /// Length scale on which the exterior field varies near r: the distance
    /// to the dipole for the point body, otherwise the gap to the surface plus
    /// the smallest radius of curvature, which bounds the depth of the
    /// singularities of the continued exterior potential.
    pub fn clearance(&self, r: Vec3) -> f64 {
        let a = self.semi_axes;
        if a.iter().all(|x| *x == 0.0) {
            return norm(r);
        }
        let (theta, phi) = self.surface_angles(r);
        let gap = norm(sub(r, self.surface_point(theta, phi)));
        let amin = a.iter().copied().fold(f64::INFINITY, f64::min);
        let amax = a.iter().copied().fold(0.0, f64::max);
        gap + amin * amin / amax
    }

    /// Surface parametrization with its pole on the x axis:
    /// r' = (a cos θ, b sin θ cos φ, c sin θ sin φ).
    fn surface_point(&self, theta: f64, phi: f64) -> Vec3 {
        let [a, b, c] = self.semi_axes;
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        [a * ct, b * st * cp, c * st * sp]
    }

    /// Parametric angles of the scaled radial projection of r onto the surface.
    fn surface_angles(&self, r: Vec3) -> (f64, f64) {
        let [a, b, c] = self.semi_axes;
        let u = [r[0] / a, r[1] / b, r[2] / c];
        let theta = (u[1] * u[1] + u[2] * u[2]).sqrt().atan2(u[0]);
        let phi = u[2].atan2(u[1]);
        (theta, phi)
    }

    /// ∇pᵢ at r for a unit moment along `axis` (1/m³).
    pub fn unit_potential_gradient(&self, axis: Axis, r: Vec3) -> Result<Vec3> {
        if !self.is_outside(r) {
            return Err(Error::Geometry(format!(
                "point ({:.6e}, {:.6e}, {:.6e}) m is not outside the magnet",
                r[0], r[1], r[2]
            )));
        }
        Ok(match self.variant {
            PotentialVariant::PointDipole => dipole_gradient(axis.unit(), r),
            PotentialVariant::EllipsoidExact => self.exact_gradient(axis.index(), r),
            PotentialVariant::EllipsoidSurfaceCharge => self.surface_gradient(axis.index(), r),
        })
    }

    /// Largest root λ of Σ xⱼ²/(aⱼ² + λ) = 1 (ellipsoidal coordinate of r).
    /// The left side is convex and decreasing, so Newton started left of the
    /// root at |r|² − max aⱼ² converges monotonically.
    fn ellipsoidal_lambda(&self, r: Vec3) -> f64 {
        let a2 = self.semi_axes.map(|a| a * a);
        let a2max = a2.iter().copied().fold(0.0, f64::max);
        let mut lam = (dot(r, r) - a2max).max(0.0);
        for _ in 0..200 {
            let (mut val, mut slope) = (-1.0, 0.0);
            for j in 0..3 {
                let q = r[j] * r[j] / (a2[j] + lam);
                val += q;
                slope -= q / (a2[j] + lam);
            }
            if val <= 0.0 || slope == 0.0 {
                break;
            }
            let step = -val / slope;
            lam += step;
            if step <= 1e-16 * (lam + a2max) {
                break;
            }
        }
        lam
    }

    /// Exterior potential of a uniformly magnetized ellipsoid with unit moment
    /// along axis i: pᵢ = (3/8π) xᵢ Fᵢ(λ), Fᵢ = (2/3) R_D(aⱼ²+λ, aₖ²+λ, aᵢ²+λ).
    fn exact_gradient(&self, i: usize, r: Vec3) -> Vec3 {
        let a2 = self.semi_axes.map(|a| a * a);
        let lam = self.ellipsoidal_lambda(r);
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let f = 2.0 / 3.0 * carlson_rd(a2[j] + lam, a2[k] + lam, a2[i] + lam);
        let r_lam = ((a2[0] + lam) * (a2[1] + lam) * (a2[2] + lam)).sqrt();
        let df = -1.0 / ((a2[i] + lam) * r_lam);
        let denom: f64 = (0..3).map(|m| r[m] * r[m] / (a2[m] + lam).powi(2)).sum();
        let pref = 3.0 / (8.0 * PI);
        let mut g = [0.0; 3];
        for m in 0..3 {
            let dlam = 2.0 * r[m] / (a2[m] + lam) / denom;
            g[m] = pref * (if m == i { f } else { 0.0 } + r[i] * df * dlam);
        }
        g
    }

    /// ∇pᵢ(r) = −(1/4π) ∮ σ (r − r')/|r − r'|³ dA' with σ = M·n̂ and M = 1/V.
    fn surface_gradient(&self, i: usize, r: Vec3) -> Vec3 {
        let [a, b, c] = self.semi_axes;
        let (theta0, phi0) = self.surface_angles(r);
        let gap = norm(sub(r, self.surface_point(theta0, phi0))).max(1e-6 * a.min(b).min(c));
        let (st, ct) = theta0.sin_cos();
        let (sp, cp) = phi0.sin_cos();
        let d_theta = norm([-a * st, b * ct * cp, c * ct * sp]);
        let d_phi = st * (b * b * sp * sp + c * c * cp * cp).sqrt();
        let h_theta = (gap / d_theta).min(PI);
        let h_phi = if d_phi > 0.0 { (gap / d_phi).min(PI) } else { PI };
        let n = self.orders.surface;
        let theta_rule = Rule::composite(&graded_breaks(0.0, PI, theta0, h_theta), n);
        let phi_rule = Rule::composite(&graded_breaks(phi0 - PI, phi0 + PI, phi0, h_phi), n);
        let m = 1.0 / self.volume();
        let phi_trig: Vec<(f64, f64, f64)> =
            phi_rule.nodes.iter().zip(&phi_rule.weights).map(|(&p, &w)| (p.sin(), p.cos(), w)).collect();
        let mut g = [0.0; 3];
        for (&th, &wt) in theta_rule.nodes.iter().zip(&theta_rule.weights) {
            let (st, ct) = th.sin_cos();
            for &(sp, cp, wp) in &phi_trig {
                let normal = [b * c * st * ct, a * c * st * st * cp, a * b * st * st * sp];
                let sigma_da = m * normal[i] * wt * wp;
                let rp = [a * ct, b * st * cp, c * st * sp];
                let diff = sub(r, rp);
                let d2 = dot(diff, diff);
                let k = sigma_da / (d2 * d2.sqrt());
                g[0] += k * diff[0];
                g[1] += k * diff[1];
                g[2] += k * diff[2];
            }
        }
        g.map(|x| -x / (4.0 * PI))
    }

    /// Iᵢ = −4π ∫ ∇pᵢ·dA over the loop disc (1/m).
    pub fn geometrical_factor(&self, placement: &LoopPlacement, axis: Axis) -> Result<f64> {
        self.validate()?;
        placement.validate()?;
        let flux = disc_flux(placement, self.orders, |p| self.clearance(p), |p| {
            if !self.is_outside(p) {
                return Err(Error::Geometry(format!(
                    "loop disc intersects the magnet at quadrature node ({:.6e}, {:.6e}, {:.6e}) m",
                    p[0], p[1], p[2]
                )));
            }
            self.unit_potential_gradient(axis, p)
        })?;
        Ok(-4.0 * PI * flux)
    }

    /// B_z (T) on the z axis produced by the saturated moment μ_z = M_s V.
    pub fn stray_field_bz(&self, m_s: f64, z: f64) -> Result<f64> {
        let r = [0.0, 0.0, z];
        if !self.is_outside(r) {
            return Err(Error::Geometry(format!("z = {z:e} m lies inside the magnet")));
        }
        self.field_bz(m_s, r)
    }

    fn field_bz(&self, m_s: f64, r: Vec3) -> Result<f64> {
        let g = self.unit_potential_gradient(Axis::Z, r)?;
        Ok(-MU0 * m_s * self.volume() * g[2])
    }

    /// Largest |B_z| from the saturated moment over the loop disc, compared with B_c.
    pub fn critical_field_check(&self, m_s: f64, placement: &LoopPlacement, b_c: f64) -> Result<CriticalFieldReport> {
        self.validate()?;
        placement.validate()?;
        let mut points = vec![placement.closest_point().0];
        points.extend(disc_nodes(placement, self.orders, |p| self.clearance(p)).into_iter().map(|(p, _)| p));
        let fields: Vec<f64> = points
            .par_iter()
            .map(|&p| self.field_bz(m_s, p).map(f64::abs))
            .collect::<Result<Vec<_>>>()?;
        let max_bz = fields.into_iter().fold(0.0, f64::max);
        Ok(CriticalFieldReport { ok: max_bz <= b_c, max_bz, b_c, margin: b_c / max_bz })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalFieldReport {
    /// True iff the largest |B_z| on the loop stays at or below B_c.
    pub ok: bool,
    pub max_bz: f64,
    pub b_c: f64,
    /// B_c / max |B_z|.
    pub margin: f64,
}

/// ∇(m̂·r / 4π|r|³) for a point dipole at the origin.
pub fn dipole_gradient(moment: Vec3, r: Vec3) -> Vec3 {
    let r2 = dot(r, r);
    let r1 = r2.sqrt();
    let r3 = r2 * r1;
    let mr = dot(moment, r);
    let mut g = [0.0; 3];
    for k in 0..3 {
        g[k] = (moment[k] / r3 - 3.0 * mr * r[k] / (r3 * r2)) / (4.0 * PI);
    }
    g
}

/// Flux factor −4π ∫ ∇p·dA of a point dipole with arbitrary moment direction.
pub fn dipole_flux_factor(moment: Vec3, placement: &LoopPlacement, orders: QuadratureOrders) -> Result<f64> {
    placement.validate()?;
    let flux = disc_flux(placement, orders, norm, |p| {
        if norm(p) == 0.0 {
            return Err(Error::Geometry("loop disc passes through the dipole".into()));
        }
        Ok(dipole_gradient(moment, p))
    })?;
    Ok(-4.0 * PI * flux)
}

/// Polar quadrature of the disc centered on its point closest to the source:
/// radial Gauss panels graded geometrically from that point, angular panels
/// over the full circle or, for a rim point, the inward half circle.
fn disc_nodes(placement: &LoopPlacement, orders: QuadratureOrders, clearance: impl Fn(Vec3) -> f64) -> Vec<(Vec3, f64)> {
    let n = placement.normal;
    let radius = placement.radius;
    let (hot, on_rim) = placement.closest_point();
    let rel = sub(hot, placement.center);
    let e1 = if norm(rel) > 1e-9 * radius {
        unit(rel)
    } else {
        let trial = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        unit(cross(n, trial))
    };
    let e2 = cross(n, e1);
    let h = clearance(hot).max(1e-9 * radius);
    let angles = if on_rim {
        // Inward directions from a rim point span (π/2, 3π/2) relative to e1.
        let h_ang = (h / (2.0 * radius)).clamp(1e-9, 0.25);
        let breaks: Vec<f64> = graded_both_ends(0.5 * PI, 1.5 * PI, h_ang);
        Rule::composite(&breaks, orders.disc_angular)
    } else {
        let breaks: Vec<f64> = (0..=8).map(|k| k as f64 * PI / 4.0).collect();
        Rule::composite(&breaks, orders.disc_angular)
    };
    let c_off = dot(rel, rel) - radius * radius;
    let mut nodes = Vec::new();
    for (&alpha, &wa) in angles.nodes.iter().zip(&angles.weights) {
        let (sa, ca) = alpha.sin_cos();
        let u = [ca * e1[0] + sa * e2[0], ca * e1[1] + sa * e2[1], ca * e1[2] + sa * e2[2]];
        let b = dot(rel, u);
        let len = -b + (b * b - c_off).max(0.0).sqrt();
        if len <= 0.0 {
            continue;
        }
        let radial = Rule::composite(&graded_breaks(0.0, len, 0.0, 0.25 * h), orders.disc_radial);
        for (&s, &ws) in radial.nodes.iter().zip(&radial.weights) {
            nodes.push((add_scaled(hot, s, u), wa * ws * s));
        }
    }
    nodes
}

fn disc_flux(
    placement: &LoopPlacement,
    orders: QuadratureOrders,
    clearance: impl Fn(Vec3) -> f64,
    gradient: impl Fn(Vec3) -> Result<Vec3> + Sync,
) -> Result<f64> {
    let n = placement.normal;
    let nodes = disc_nodes(placement, orders, clearance);
    let parts = nodes
        .par_iter()
        .map(|&(p, w)| gradient(p).map(|g| w * dot(g, n)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(parts.iter().sum())
}

/// Closed form of I_x for a point dipole and the standard placement
/// (disc in the x = 0 plane, nearest point at distance d, radius R):
/// I_x = −4D/(D²−R²) [E(k) − (1−k²)K(k)], D = d + R, k = R/D.
pub fn dipole_inplane_closed_form(d: f64, radius: f64) -> f64 {
    let big_d = d + radius;
    let k = radius / big_d;
    -4.0 * big_d / (big_d * big_d - radius * radius) * (ellip_e(k) - (1.0 - k * k) * ellip_k(k))
}

/// Closed form of I_x for a point dipole and a coaxial disc in the plane x = d.
pub fn dipole_coaxial_closed_form(d: f64, radius: f64) -> f64 {
    2.0 * PI * radius * radius / (radius * radius + d * d).powf(1.5)
}

/// I_x of the configured magnet and loop.
pub fn magnet_geometrical_factor(magnet: &MagnetSpec, variant: PotentialVariant) -> Result<f64> {
    PotentialModel::from_magnet(magnet, variant).geometrical_factor(&LoopPlacement::for_magnet(magnet), Axis::X)
}

/// Sphere of the same volume as the configured magnet, with the same gap to the loop.
pub fn volume_matched_sphere(magnet: &MagnetSpec) -> MagnetSpec {
    let r = (magnet.l_x * magnet.l_z * magnet.l_z).cbrt();
    let gap = magnet.d - magnet.l_z;
    MagnetSpec { l_x: r, l_z: r, d: r + gap, n_t: 1.0 / 3.0, ..*magnet }
}
