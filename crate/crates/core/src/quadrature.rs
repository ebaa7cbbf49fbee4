//! Gauss-Legendre rules, geometrically graded panels and Carlson elliptic integrals.

use std::f64::consts::PI;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// A composite rule: absolute nodes and weights.
#[derive(Debug, Clone, Default)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Applies an n-point Gauss rule on each consecutive pair of `breaks`.
    pub fn composite(breaks: &[f64], n: usize) -> Rule {
        let (gx, gw) = gauss_legendre(n);
        let mut rule = Rule::default();
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in gx.iter().zip(&gw) {
                rule.nodes.push(mid + half * x);
                rule.weights.push(half * w);
            }
        }
        rule
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Breakpoints on [lo, hi] refined geometrically toward `focus`: panel widths
/// grow as h0, 2h0, 4h0, ... away from the focus on each side.
pub fn graded_breaks(lo: f64, hi: f64, focus: f64, h0: f64) -> Vec<f64> {
    let focus = focus.clamp(lo, hi);
    let span = hi - lo;
    let h0 = h0.max(span * 1e-12).min(span);
    let mut left = vec![focus];
    let mut w = h0;
    let mut x = focus;
    while x > lo {
        x = (x - w).max(lo);
        left.push(x);
        w *= 2.0;
    }
    let mut breaks: Vec<f64> = left.into_iter().rev().collect();
    let mut w = h0;
    let mut x = focus;
    while x < hi {
        x = (x + w).min(hi);
        breaks.push(x);
        w *= 2.0;
    }
    breaks.dedup();
    breaks
}

/// Breakpoints on [lo, hi] refined geometrically toward both ends.
pub fn graded_both_ends(lo: f64, hi: f64, h0: f64) -> Vec<f64> {
    let mid = 0.5 * (lo + hi);
    let mut a = graded_breaks(lo, mid, lo, h0);
    let b = graded_breaks(mid, hi, hi, h0);
    a.pop();
    a.extend(b);
    a
}

/// Carlson's symmetric integral R_F(x, y, z); at most one argument may be zero.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
    const ERRTOL: f64 = 0.0008;
    let (mut xt, mut yt, mut zt) = (x, y, z);
    let (mut ave, mut dx, mut dy, mut dz);
    loop {
        let (sx, sy, sz) = (xt.sqrt(), yt.sqrt(), zt.sqrt());
        let lam = sx * (sy + sz) + sy * sz;
        xt = 0.25 * (xt + lam);
        yt = 0.25 * (yt + lam);
        zt = 0.25 * (zt + lam);
        ave = (xt + yt + zt) / 3.0;
        dx = (ave - xt) / ave;
        dy = (ave - yt) / ave;
        dz = (ave - zt) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) <= ERRTOL {
            break;
        }
    }
    let e2 = dx * dy - dz * dz;
    let e3 = dx * dy * dz;
    (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / ave.sqrt()
}

/// Carlson's symmetric integral R_D(x, y, z) = 3/2 ∫ dt / ((t+z) sqrt((t+x)(t+y)(t+z))).
pub fn carlson_rd(x: f64, y: f64, z: f64) -> f64 {
    const ERRTOL: f64 = 0.0005;
    const C1: f64 = 3.0 / 14.0;
    const C2: f64 = 1.0 / 6.0;
    const C3: f64 = 9.0 / 22.0;
    const C4: f64 = 3.0 / 26.0;
    const C5: f64 = 0.25 * C3;
    const C6: f64 = 1.5 * C4;
    let (mut xt, mut yt, mut zt) = (x, y, z);
    let mut sum = 0.0;
    let mut fac = 1.0;
    let (mut ave, mut dx, mut dy, mut dz);
    loop {
        let (sx, sy, sz) = (xt.sqrt(), yt.sqrt(), zt.sqrt());
        let lam = sx * (sy + sz) + sy * sz;
        sum += fac / (sz * (zt + lam));
        fac *= 0.25;
        xt = 0.25 * (xt + lam);
        yt = 0.25 * (yt + lam);
        zt = 0.25 * (zt + lam);
        ave = 0.2 * (xt + yt + 3.0 * zt);
        dx = (ave - xt) / ave;
        dy = (ave - yt) / ave;
        dz = (ave - zt) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) <= ERRTOL {
            break;
        }
    }
    let ea = dx * dy;
    let eb = dz * dz;
    let ec = ea - eb;
    let ed = ea - 6.0 * eb;
    let ee = ed + ec + ec;
    3.0 * sum
        + fac * (1.0 + ed * (-C1 + C5 * ed - C6 * dz * ee) + dz * (C2 * ee + dz * (-C3 * ec + dz * C4 * ea)))
            / (ave * ave.sqrt())
}

/// Complete elliptic integral of the first kind, modulus k.
pub fn ellip_k(k: f64) -> f64 {
    if k.abs() >= 1.0 {
        return f64::INFINITY;
    }
    carlson_rf(0.0, 1.0 - k * k, 1.0)
}

/// Complete elliptic integral of the second kind, modulus k.
pub fn ellip_e(k: f64) -> f64 {
    if k.abs() >= 1.0 {
        return 1.0;
    }
    let q = 1.0 - k * k;
    carlson_rf(0.0, q, 1.0) - k * k / 3.0 * carlson_rd(0.0, q, 1.0)
}
