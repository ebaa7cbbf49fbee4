//! Numerical checks of the second-order Schrieffer-Wolff treatment.
//!
//! H = H₀ + H_int with H₀ = ω_m m†m + Σᵢ[ω_qᵢ nᵢ − (E_C/2)cᵢ†cᵢ†cᵢcᵢ] and
//! H_int = Σᵢ[Jᵢ(cᵢ†m + cᵢm†) + gᵢ nᵢ(m + m†)]. The generator S = S_J + S_g with
//! S_J = Σᵢ Jᵢ(χᵢ(nᵢ)cᵢ†m − m†cᵢχᵢ(nᵢ)), χᵢ(n) = 1/(ω_qᵢ − ω_m − E_C(n − 1)),
//! and S_g = Σᵢ (gᵢ/ω_m) nᵢ(m† − m) solves [S, H₀] = −H_int, so that
//! H_SW = H₀ + ½[S, H_int] to second order. Every ½[S_a, H_b] piece is compared
//! with an operator closed form derived independently.

use serde::Serialize;

use crate::algebra::{
    annihilation, embed, kron, matrix_exp, partial_trace, ComplexMatrix, SpaceLayout, C64,
};
use crate::fidelity::single_qubit_inputs;
use crate::lindblad::computational_indices;
use crate::model::{GateKind, GateScenario, ModelSpec};
use crate::{Error, Result};

/// Quanta kept between the interior subspace and the truncation edge.
pub const INTERIOR_MARGIN: usize = 2;

/// Parameters of the generator, all in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorSpec {
    #[serde(skip)]
    pub layout: SpaceLayout,
    pub j1: f64,
    pub j2: f64,
    pub g1: f64,
    pub g2: f64,
    pub omega_m: f64,
    pub omega_q1: f64,
    pub omega_q2: f64,
    pub e_c: f64,
}

impl GeneratorSpec {
    /// The Hamiltonian a gate's effective description is derived from. For the
    /// iCNOT scheme this is the drive frame: ω_m → δ_m, ω_q2 → δ_q2,
    /// ω_q1 → g̃²/4δ_m and g₁ → g̃/2.
    pub fn from_model(kind: GateKind, spec: &ModelSpec) -> Self {
        let base = GeneratorSpec {
            layout: spec.layout.clone(),
            j1: spec.j1,
            j2: spec.j2,
            g1: spec.g1,
            g2: spec.g2,
            omega_m: spec.omega_m,
            omega_q1: spec.omega_q1,
            omega_q2: spec.omega_q2,
            e_c: spec.e_c,
        };
        match kind {
            GateKind::Iswap | GateKind::SqrtIswap | GateKind::Cz => base,
            GateKind::Icnot => {
                let dm = spec.delta_m();
                GeneratorSpec {
                    omega_m: dm,
                    omega_q1: spec.g_tilde1 * spec.g_tilde1 / (4.0 * dm),
                    omega_q2: spec.delta_q2(),
                    g1: spec.g_tilde1 / 2.0,
                    ..base
                }
            }
        }
    }

    fn j(&self, i: usize) -> f64 {
        [self.j1, self.j2][i]
    }

    fn g(&self, i: usize) -> f64 {
        [self.g1, self.g2][i]
    }

    fn omega_q(&self, i: usize) -> f64 {
        [self.omega_q1, self.omega_q2][i]
    }

    /// χᵢ(n) = 1/(ω_qᵢ − ω_m − E_C(n − 1)).
    pub fn susceptibility(&self, i: usize, n: f64) -> f64 {
        1.0 / (self.omega_q(i) - self.omega_m - self.e_c * (n - 1.0))
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.layout.dims();
        if d.len() != 3 {
            return Err(Error::dim("the generator needs a (q1, q2, m) layout"));
        }
        if (self.g1 != 0.0 || self.g2 != 0.0) && self.omega_m == 0.0 {
            return Err(Error::Precondition("S_g needs ω_m ≠ 0".into()));
        }
        for (i, &d_i) in d.iter().enumerate().take(2) {
            if self.j(i) == 0.0 {
                continue;
            }
            let scale = self.omega_q(i).abs().max(self.omega_m.abs()).max(self.e_c.abs());
            // χ is evaluated up to n + 2 for interior occupations n.
            for n in 0..=d_i + 1 {
                let den = self.omega_q(i) - self.omega_m - self.e_c * (n as f64 - 1.0);
                if den.abs() <= 1e-12 * scale {
                    return Err(Error::Precondition(format!("susceptibility of qubit {} is singular at n = {n}", i + 1)));
                }
            }
        }
        Ok(())
    }
}

/// Embedded ladder operators and number-diagonal helpers.
struct Ops {
    layout: SpaceLayout,
    c: [ComplexMatrix; 2],
    n: [ComplexMatrix; 2],
    m: ComplexMatrix,
    big_n: ComplexMatrix,
    x: ComplexMatrix,
    id: ComplexMatrix,
}

impl Ops {
    fn new(layout: &SpaceLayout) -> Result<Self> {
        let op = |i: usize| embed(&annihilation(layout.dim(i))?, i, layout);
        let c = [op(0)?, op(1)?];
        let m = op(2)?;
        let n = [&c[0].dagger() * &c[0], &c[1].dagger() * &c[1]];
        let big_n = &m.dagger() * &m;
        let x = &m + &m.dagger();
        Ok(Ops { layout: layout.clone(), c, n, m, big_n, x, id: ComplexMatrix::identity(layout.total_dim()) })
    }

    /// f(nᵢ) as a diagonal matrix; f only sees occupations present in the space.
    fn func(&self, i: usize, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.layout.total_dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for k in 0..n {
            let occ = self.layout.occupations(k)[i] as f64;
            out[(k, k)] = C64::from(f(occ));
        }
        out
    }

    fn cd(&self, i: usize) -> ComplexMatrix {
        self.c[i].dagger()
    }

    fn md(&self) -> ComplexMatrix {
        self.m.dagger()
    }
}

fn prod(ms: &[&ComplexMatrix]) -> ComplexMatrix {
    let mut out = ms[0].clone();
    for m in &ms[1..] {
        out = &out * *m;
    }
    out
}

/// Unperturbed Hamiltonian H₀.
pub fn h0(spec: &GeneratorSpec) -> Result<ComplexMatrix> {
    let o = Ops::new(&spec.layout)?;
    let mut h = o.big_n.scale_real(spec.omega_m);
    for i in 0..2 {
        h.axpy(C64::from(spec.omega_q(i)), &o.n[i]);
        let kerr = prod(&[&o.cd(i), &o.cd(i), &o.c[i], &o.c[i]]);
        h.axpy(C64::from(-spec.e_c / 2.0), &kerr);
    }
    Ok(h)
}

/// Exchange part Σᵢ Jᵢ(cᵢ†m + cᵢm†).
pub fn h_exchange(spec: &GeneratorSpec) -> Result<ComplexMatrix> {
    let o = Ops::new(&spec.layout)?;
    let mut h = ComplexMatrix::zeros(o.id.rows(), o.id.rows());
    for i in 0..2 {
        let t = &(&o.cd(i) * &o.m) + &(&o.c[i] * &o.md());
        h.axpy(C64::from(spec.j(i)), &t);
    }
    Ok(h)
}

/// Radiation-pressure part Σᵢ gᵢ nᵢ(m + m†).
pub fn h_pressure(spec: &GeneratorSpec) -> Result<ComplexMatrix> {
    let o = Ops::new(&spec.layout)?;
    let mut h = ComplexMatrix::zeros(o.id.rows(), o.id.rows());
    for i in 0..2 {
        h.axpy(C64::from(spec.g(i)), &(&o.n[i] * &o.x));
    }
    Ok(h)
}

pub fn h_int(spec: &GeneratorSpec) -> Result<ComplexMatrix> {
    Ok(&h_exchange(spec)? + &h_pressure(spec)?)
}

/// S_J alone.
pub fn generator_exchange(spec: &GeneratorSpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    let o = Ops::new(&spec.layout)?;
    let mut s = ComplexMatrix::zeros(o.id.rows(), o.id.rows());
    for i in 0..2 {
        if spec.j(i) == 0.0 {
            continue;
        }
        let chi = o.func(i, |n| spec.susceptibility(i, n));
        let a = prod(&[&chi, &o.cd(i), &o.m]);
        s.axpy(C64::from(spec.j(i)), &(&a - &a.dagger()));
    }
    Ok(s)
}

/// S_g alone.
pub fn generator_pressure(spec: &GeneratorSpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    let o = Ops::new(&spec.layout)?;
    let mut s = ComplexMatrix::zeros(o.id.rows(), o.id.rows());
    let p = &o.md() - &o.m;
    for i in 0..2 {
        if spec.g(i) != 0.0 {
            s.axpy(C64::from(spec.g(i) / spec.omega_m), &(&o.n[i] * &p));
        }
    }
    Ok(s)
}

/// S = S_J + S_g (anti-Hermitian).
pub fn build_generator(spec: &GeneratorSpec) -> Result<ComplexMatrix> {
    Ok(&generator_exchange(spec)? + &generator_pressure(spec)?)
}

/// Flat indices whose occupations all stay `margin` quanta below the cutoff.
pub fn interior_indices(layout: &SpaceLayout, margin: usize) -> Vec<usize> {
    (0..layout.total_dim())
        .filter(|&k| layout.occupations(k).iter().zip(layout.dims()).all(|(&n, &d)| n + margin < d))
        .collect()
}

fn restricted_residual(spec: &GeneratorSpec, indices: Option<&[usize]>) -> Result<f64> {
    let s = build_generator(spec)?;
    let hi = h_int(spec)?;
    let lhs = &s.commutator(&h0(spec)?)? + &hi;
    let (num, den) = match indices {
        Some(idx) => (lhs.submatrix(idx).frobenius_norm(), hi.submatrix(idx).frobenius_norm()),
        None => (lhs.frobenius_norm(), hi.frobenius_norm()),
    };
    if den == 0.0 {
        return Ok(num);
    }
    Ok(num / den)
}

/// ‖P([S, H₀] + H_int)P‖_F / ‖P H_int P‖_F on the interior subspace.
pub fn commutator_residual(spec: &GeneratorSpec) -> Result<f64> {
    let idx = interior_indices(&spec.layout, INTERIOR_MARGIN);
    if idx.is_empty() {
        return Err(Error::dim("the interior subspace is empty; enlarge the truncation"));
    }
    restricted_residual(spec, Some(&idx))
}

/// The same ratio on the full truncated space.
pub fn commutator_residual_unprojected(spec: &GeneratorSpec) -> Result<f64> {
    restricted_residual(spec, None)
}

/// The four second-order pieces ½[S_a, H_b].
#[derive(Debug, Clone)]
pub struct SwPieces {
    /// ½[S_J, H_J]
    pub jj: ComplexMatrix,
    /// ½[S_J, H_g]
    pub jg: ComplexMatrix,
    /// ½[S_g, H_J]
    pub gj: ComplexMatrix,
    /// ½[S_g, H_g]
    pub gg: ComplexMatrix,
}

impl SwPieces {
    pub fn total(&self) -> ComplexMatrix {
        &(&(&self.jj + &self.jg) + &self.gj) + &self.gg
    }

    pub fn iter(&self) -> [(&'static str, &ComplexMatrix); 4] {
        [("H_JJ", &self.jj), ("H_Jg", &self.jg), ("H_gJ", &self.gj), ("H_gg", &self.gg)]
    }
}

/// Pieces evaluated as matrix commutators.
pub fn sw_pieces(spec: &GeneratorSpec) -> Result<SwPieces> {
    let sj = generator_exchange(spec)?;
    let sg = generator_pressure(spec)?;
    let hj = h_exchange(spec)?;
    let hg = h_pressure(spec)?;
    let half = |a: &ComplexMatrix, b: &ComplexMatrix| -> Result<ComplexMatrix> { Ok(a.commutator(b)?.scale_real(0.5)) };
    Ok(SwPieces { jj: half(&sj, &hj)?, jg: half(&sj, &hg)?, gj: half(&sg, &hj)?, gg: half(&sg, &hg)? })
}

/// H_SW = H₀ + ½[S, H_int].
pub fn sw_hamiltonian(spec: &GeneratorSpec) -> Result<ComplexMatrix> {
    Ok(&h0(spec)? + &sw_pieces(spec)?.total())
}

/// Operator closed forms of the four pieces, written with number functions to
/// the left of ladder operators (χ(n) c† = c† χ(n + 1)). Exact on the interior.
pub fn closed_form_pieces(spec: &GeneratorSpec) -> Result<SwPieces> {
    spec.validate()?;
    let o = Ops::new(&spec.layout)?;
    let dim = o.id.rows();
    let (m, md, big_n, id) = (&o.m, &o.md(), &o.big_n, &o.id);
    let m2 = m * m;
    let md2 = md * md;
    let chi = |i: usize, shift: f64| o.func(i, move |n| spec.susceptibility(i, n + shift));
    let mut jj = ComplexMatrix::zeros(dim, dim);
    let mut jg = ComplexMatrix::zeros(dim, dim);
    let mut gj = ComplexMatrix::zeros(dim, dim);
    let mut gg = ComplexMatrix::zeros(dim, dim);
    for i in 0..2 {
        let (c, cd, n) = (&o.c[i], &o.cd(i), &o.n[i]);
        let (ji, gi) = (spec.j(i), spec.g(i));
        if ji != 0.0 {
            // J²/2 [(χ(n) − χ(n−1))c†²m² + 2χ(n)n(N+1) − 2χ(n+1)(n+1)N + (χ(n+2) − χ(n+1))c²m†²]
            let (x0, xm1, x1, x2) = (chi(i, 0.0), chi(i, -1.0), chi(i, 1.0), chi(i, 2.0));
            let mut t = prod(&[&(&x0 - &xm1), cd, cd, &m2]);
            t += &prod(&[&x0, n, &(big_n + id)]).scale_real(2.0);
            t -= &prod(&[&x1, &(n + id), big_n]).scale_real(2.0);
            t += &prod(&[&(&x2 - &x1), c, c, &md2]);
            jj.axpy(C64::from(ji * ji / 2.0), &t);
            for j in 0..2 {
                if j == i || spec.j(j) == 0.0 {
                    continue;
                }
                // ½JᵢJⱼ(χᵢ cᵢ†cⱼ + cᵢχᵢ cⱼ†)
                let t = &prod(&[&x0, cd, &o.c[j]]) + &prod(&[c, &x0, &o.cd(j)]);
                jj.axpy(C64::from(ji * spec.j(j) / 2.0), &t);
            }
        }
        if ji != 0.0 && gi != 0.0 {
            // Same qubit: ½Jg[χ(n)(n − N − 1 − m²)c† − χ(n+1)(N + m†² − n)c]
            let (x0, x1) = (chi(i, 0.0), chi(i, 1.0));
            let a = prod(&[&x0, &(&(&(n - big_n) - id) - &m2), cd]);
            let b = prod(&[&x1, &(&(big_n + &md2) - n), c]);
            jg.axpy(C64::from(ji * gi / 2.0), &(&a - &b));
            // Same qubit: (gJ/2ω_m)[c†(N − n − m²) + c(N + 1 − n − m†²)]
            let a = cd * &(&(big_n - n) - &m2);
            let b = c * &(&(&(big_n + id) - n) - &md2);
            gj.axpy(C64::from(gi * ji / (2.0 * spec.omega_m)), &(&a + &b));
        }
        for j in 0..2 {
            if j == i {
                continue;
            }
            let jj_ = spec.j(j);
            if gi != 0.0 && jj_ != 0.0 {
                // ½[S_J,j, H_g,i] = ½Jⱼgᵢ nᵢ(χⱼ cⱼ† + cⱼχⱼ)
                let xj = chi(j, 0.0);
                let t = prod(&[n, &(&(&xj * &o.cd(j)) + &(&o.c[j] * &xj))]);
                jg.axpy(C64::from(jj_ * gi / 2.0), &t);
                // ½[S_g,i, H_J,j] = −(gᵢJⱼ/2ω_m) nᵢ(cⱼ + cⱼ†)
                let t = n * &(&o.c[j] + &o.cd(j));
                gj.axpy(C64::from(-gi * jj_ / (2.0 * spec.omega_m)), &t);
            }
        }
    }
    // −(Σᵢ gᵢnᵢ)²/ω_m
    if spec.g1 != 0.0 || spec.g2 != 0.0 {
        let s = &o.n[0].scale_real(spec.g1) + &o.n[1].scale_real(spec.g2);
        gg = (&s * &s).scale_real(-1.0 / spec.omega_m);
    }
    Ok(SwPieces { jj, jg, gj, gg })
}

/// Largest interior discrepancy between the commutator pieces and their closed
/// forms, relative to the largest interior entry of the commutator piece.
pub fn closed_form_discrepancy(spec: &GeneratorSpec) -> Result<Vec<(&'static str, f64)>> {
    let idx = interior_indices(&spec.layout, INTERIOR_MARGIN);
    let num = sw_pieces(spec)?;
    let closed = closed_form_pieces(spec)?;
    Ok(num
        .iter()
        .into_iter()
        .zip(closed.iter())
        .map(|((name, a), (_, b))| {
            let (a, b) = (a.submatrix(&idx), b.submatrix(&idx));
            let scale = a.max_abs().max(b.max_abs());
            let diff = (&a - &b).max_abs();
            (name, if scale == 0.0 { diff } else { diff / scale })
        })
        .collect())
}

/// Qubit {0, 1}² projection of a (q1, q2, m) operator, split by magnon number.
#[derive(Debug, Clone)]
pub struct TwoLevelReduction {
    /// blocks[k] is the 4×4 block at magnon occupation k.
    pub blocks: Vec<ComplexMatrix>,
    /// Weight between different magnon occupations, relative to the projection.
    pub off_block: f64,
}

pub fn two_level_reduction(h: &ComplexMatrix, layout: &SpaceLayout) -> Result<TwoLevelReduction> {
    let d = layout.dims();
    if d.len() != 3 || d[0] < 2 || d[1] < 2 {
        return Err(Error::dim(format!("two-level reduction needs a (q1, q2, m) layout, got {d:?}")));
    }
    if h.shape() != (layout.total_dim(), layout.total_dim()) {
        return Err(Error::dim("operator does not match the layout"));
    }
    let mut blocks = Vec::with_capacity(d[2]);
    let mut total = 0.0;
    let mut off = 0.0;
    let sectors: Vec<Vec<usize>> = (0..d[2])
        .map(|k| {
            let mut v = Vec::with_capacity(4);
            for q1 in 0..2 {
                for q2 in 0..2 {
                    v.push(layout.flat_index(&[q1, q2, k]));
                }
            }
            v
        })
        .collect();
    for (ka, ra) in sectors.iter().enumerate() {
        for (kb, rb) in sectors.iter().enumerate() {
            for &r in ra {
                for &c in rb {
                    let w = h[(r, c)].norm_sqr();
                    total += w;
                    if ka != kb {
                        off += w;
                    }
                }
            }
        }
        blocks.push(h.submatrix(ra));
    }
    let off_block = if total == 0.0 { 0.0 } else { (off / total).sqrt() };
    if off_block > 1e-6 {
        return Err(Error::Precondition(format!(
            "operator mixes magnon occupations inside the qubit subspace (relative weight {off_block:.2e})"
        )));
    }
    Ok(TwoLevelReduction { blocks, off_block })
}

/// Two-qubit coupling read off the magnon-vacuum block: the |01⟩↔|10⟩
/// element for the exchange gates, the n₁n₂ coefficient for CZ, and the
/// n₁-conditioned σ₂ˣ element for iCNOT.
pub fn reduced_coupling(kind: GateKind, red: &TwoLevelReduction) -> f64 {
    let b = &red.blocks[0];
    match kind {
        GateKind::Iswap | GateKind::SqrtIswap => b[(2, 1)].re,
        GateKind::Cz => (b[(3, 3)] - b[(2, 2)] - b[(1, 1)] + b[(0, 0)]).re,
        GateKind::Icnot => (b[(2, 3)] - b[(0, 1)]).re,
    }
}

/// Dispersive small parameter of a gate (J/Δ, g/ω_m or the larger iCNOT ratio).
pub fn small_parameter(kind: GateKind, spec: &ModelSpec) -> f64 {
    match kind {
        GateKind::Iswap | GateKind::SqrtIswap => (spec.j1 / (spec.omega_q1 - spec.omega_m))
            .abs()
            .max((spec.j2 / (spec.omega_q2 - spec.omega_m)).abs()),
        GateKind::Cz => (spec.g1 / spec.omega_m).abs().max((spec.g2 / spec.omega_m).abs()),
        GateKind::Icnot => (spec.j2 / (spec.omega_q2 - spec.omega_m))
            .abs()
            .max((spec.g_tilde1 / (2.0 * spec.delta_m())).abs()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgreementReport {
    /// Largest trace distance over inputs and times.
    pub max_distance: f64,
    pub small_parameter: f64,
    /// 10 × small_parameter².
    pub bound: f64,
}

/// Initial two-qubit states used by [`dynamics_agreement`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgreementInputs {
    /// |01⟩ and |10⟩: a single excitation shared by the two qubits.
    SingleExcitation,
    /// |00⟩, |01⟩, |10⟩, |11⟩: population dynamics only.
    Basis,
    /// The 16 product states {ρ₀, ρ₁, ρ₊, ρ_{i−}}⊗², which also probe relative phases.
    Product,
}

impl AgreementInputs {
    fn states(self) -> Vec<ComplexMatrix> {
        let singles = single_qubit_inputs();
        let picks: Vec<usize> = match self {
            AgreementInputs::SingleExcitation => vec![1, 4],
            AgreementInputs::Basis => vec![0, 1, 4, 5],
            AgreementInputs::Product => (0..16).collect(),
        };
        picks.into_iter().map(|j| kron(&singles[j / 4], &singles[j % 4])).collect()
    }
}

/// Largest trace distance over [0, T_gate] between the two-transmon state
/// evolved by the closed gate Hamiltonian (magnon starting in vacuum, then
/// traced out) and by the effective two-qubit Hamiltonian.
pub fn dynamics_agreement(scenario: &GateScenario, inputs: AgreementInputs, steps: usize) -> Result<AgreementReport> {
    if steps == 0 {
        return Err(Error::arg("dynamics agreement needs at least one time step"));
    }
    let layout = scenario.layout();
    let (d1, d2, dm) = (layout.dim(0), layout.dim(1), layout.dim(2));
    let dt = scenario.t_gate / steps as f64;
    let minus_i_dt = C64::new(0.0, -dt);
    let u_tot = matrix_exp(&scenario.h_total.scale(minus_i_dt))?;
    let u_eff = matrix_exp(&scenario.h_effective.scale(minus_i_dt))?;
    let idx = computational_indices(d2);
    let embed_q = |rho: &ComplexMatrix| {
        let mut big = ComplexMatrix::zeros(d1 * d2, d1 * d2);
        for r in 0..4 {
            for c in 0..4 {
                big[(idx[r], idx[c])] = rho[(r, c)];
            }
        }
        big
    };
    let mut vac = ComplexMatrix::zeros(dm, dm);
    vac[(0, 0)] = C64::new(1.0, 0.0);
    let mut worst: f64 = 0.0;
    for rho_q in inputs.states() {
        let mut full = kron(&embed_q(&rho_q), &vac);
        let mut eff = rho_q;
        for _ in 0..steps {
            full = &(&u_tot * &full) * &u_tot.dagger();
            eff = &(&u_eff * &eff) * &u_eff.dagger();
            let reduced = partial_trace(&full, layout, &[0, 1])?;
            let dist = crate::algebra::trace_distance(&reduced.hermitize(), &embed_q(&eff).hermitize())?;
            worst = worst.max(dist);
        }
    }
    let eps = small_parameter(scenario.kind, &scenario.spec);
    Ok(AgreementReport { max_distance: worst, small_parameter: eps, bound: 10.0 * eps * eps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TWO_PI;
    use crate::model::effective_coupling;

    fn spec(j: [f64; 2], g: [f64; 2]) -> GeneratorSpec {
        GeneratorSpec {
            layout: SpaceLayout::qqm(4, 4, 6).unwrap(),
            j1: j[0],
            j2: j[1],
            g1: g[0],
            g2: g[1],
            omega_m: TWO_PI * 5.4e9,
            omega_q1: TWO_PI * 6.1e9,
            omega_q2: TWO_PI * 5.9e9,
            e_c: TWO_PI * 150e6,
        }
    }

    const J: f64 = TWO_PI * 20e6;
    const G: f64 = TWO_PI * 15e6;

    #[test]
    fn generator_is_anti_hermitian_and_linear() {
        assert!(build_generator(&spec([0.0; 2], [0.0; 2])).unwrap().is_zero());
        let s = build_generator(&spec([J, 0.7 * J], [G, -G])).unwrap();
        let sum = &s + &s.dagger();
        assert!(sum.max_abs() <= 1e-12 * s.max_abs());
        let s1 = generator_exchange(&spec([J, J], [0.0; 2])).unwrap();
        let s2 = generator_exchange(&spec([2.0 * J, 2.0 * J], [0.0; 2])).unwrap();
        assert!((s2.frobenius_norm() / s1.frobenius_norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn commutator_identity_on_interior() {
        for (j, g) in [([J, 0.7 * J], [0.0, 0.0]), ([0.0, 0.0], [G, 0.5 * G]), ([J, J], [G, G])] {
            let r = commutator_residual(&spec(j, g)).unwrap();
            assert!(r <= 1e-10, "residual {r}");
        }
        // The g-only identity is closed-form and holds without projection.
        assert!(commutator_residual_unprojected(&spec([0.0; 2], [G, G])).unwrap() <= 1e-12);
    }

    #[test]
    fn pieces_match_closed_forms() {
        for (j, g) in [([J, 0.7 * J], [0.0, 0.0]), ([0.0, 0.0], [G, 0.5 * G]), ([J, 0.0], [0.0, G]), ([J, 0.6 * J], [G, -0.8 * G])] {
            for (name, err) in closed_form_discrepancy(&spec(j, g)).unwrap() {
                assert!(err <= 1e-9, "{name}: {err}");
            }
        }
    }

    #[test]
    fn coupling_families_select_pieces() {
        let p = sw_pieces(&spec([J, 0.7 * J], [0.0; 2])).unwrap();
        assert!(!p.jj.is_zero());
        assert!(p.jg.is_zero() && p.gj.is_zero() && p.gg.is_zero());
        let s = spec([0.0; 2], [G, 0.5 * G]);
        let p = sw_pieces(&s).unwrap();
        assert!(p.jj.is_zero() && p.jg.is_zero() && p.gj.is_zero());
        let o = Ops::new(&s.layout).unwrap();
        let want = &(&(&o.n[0] * &o.n[0]).scale_real(G * G) + &(&o.n[1] * &o.n[1]).scale_real(0.25 * G * G))
            + &(&o.n[0] * &o.n[1]).scale_real(2.0 * 0.5 * G * G);
        let want = want.scale_real(-1.0 / s.omega_m);
        let idx = interior_indices(&s.layout, INTERIOR_MARGIN);
        let diff = (&p.gg.submatrix(&idx) - &want.submatrix(&idx)).max_abs();
        assert!(diff <= 1e-9 * want.max_abs());
        let h = sw_hamiltonian(&s).unwrap();
        assert!(h.hermitian_defect() < 1e-12);
    }

    #[test]
    fn singular_susceptibility_is_rejected() {
        let mut s = spec([J, J], [0.0; 2]);
        s.omega_q1 = s.omega_m + s.e_c;
        assert!(matches!(build_generator(&s), Err(Error::Precondition(_))));
    }

    fn model(kind: GateKind) -> ModelSpec {
        let base = ModelSpec {
            layout: SpaceLayout::qqm(4, 4, 6).unwrap(),
            omega_q1: TWO_PI * 6.0e9,
            omega_q2: TWO_PI * 6.0e9,
            omega_m: TWO_PI * 5.64e9,
            e_c: TWO_PI * 150e6,
            j1: TWO_PI * 13.45e6,
            j2: TWO_PI * 13.45e6,
            g1: 0.0,
            g2: 0.0,
            g_tilde1: 0.0,
            omega_ac: 0.0,
        };
        match kind {
            GateKind::Iswap | GateKind::SqrtIswap => base,
            GateKind::Cz => ModelSpec {
                omega_q1: TWO_PI * 5.3e9,
                omega_q2: TWO_PI * 5.3e9,
                omega_m: TWO_PI * 143e6,
                j1: 0.0,
                j2: 0.0,
                g1: TWO_PI * 12.4e6,
                g2: TWO_PI * 12.4e6,
                ..base
            },
            GateKind::Icnot => {
                let (wq2, wm, j2) = (TWO_PI * 6.0e9, TWO_PI * 5.82e9, TWO_PI * 13.41e6);
                ModelSpec {
                    omega_q1: TWO_PI * 6.33e9,
                    omega_m: wm,
                    j1: 0.0,
                    j2,
                    g_tilde1: TWO_PI * 1.248e6,
                    omega_ac: wq2 + j2 * j2 / (wq2 - wm),
                    ..base
                }
            }
        }
    }

    #[test]
    fn two_level_reductions_reproduce_effective_couplings() {
        for kind in [GateKind::Iswap, GateKind::Cz, GateKind::Icnot] {
            let m = model(kind);
            let g = GeneratorSpec::from_model(kind, &m);
            let red = two_level_reduction(&sw_hamiltonian(&g).unwrap(), &g.layout).unwrap();
            let got = reduced_coupling(kind, &red);
            let want = match kind {
                GateKind::Cz => -effective_coupling(kind, &m).unwrap(),
                _ => effective_coupling(kind, &m).unwrap(),
            };
            assert!(((got - want) / want).abs() <= 1e-9, "{kind}: {got} vs {want}");
        }
    }

    #[test]
    fn reduction_rejects_magnon_mixing() {
        let g = GeneratorSpec::from_model(GateKind::Cz, &model(GateKind::Cz));
        // The untransformed Hamiltonian still contains n(m + m†).
        let h = &h0(&g).unwrap() + &h_int(&g).unwrap();
        assert!(two_level_reduction(&h, &g.layout).is_err());
    }

    fn iswap_scenario(ratio: f64) -> GateScenario {
        let mut point = crate::model::derive_working_point(
            &crate::model::device_preset(GateKind::Iswap),
            GateKind::Iswap,
            0.94,
            &Default::default(),
        )
        .unwrap();
        let delta = point.omega_q2 - point.omega_m;
        point.j1 = ratio * delta;
        point.j2 = ratio * delta;
        let spec = point.model_spec([3, 3, 4]).unwrap();
        point.coupling = effective_coupling(GateKind::Iswap, &spec).unwrap();
        point.t_gate = crate::model::gate_time(GateKind::Iswap, point.coupling).unwrap();
        GateScenario::from_point(point, [3, 3, 4], false).unwrap()
    }

    #[test]
    fn dynamics_agreement_scales_with_dispersive_parameter() {
        let zero = {
            let mut s = iswap_scenario(0.05);
            s.h_total = ComplexMatrix::zeros(s.h_total.rows(), s.h_total.rows());
            s.h_effective = ComplexMatrix::zeros(4, 4);
            dynamics_agreement(&s, AgreementInputs::Product, 8).unwrap()
        };
        assert!(zero.max_distance <= 1e-9);
        let mut last = 0.0;
        for ratio in [0.02, 0.05, 0.1] {
            let rep = dynamics_agreement(&iswap_scenario(ratio), AgreementInputs::SingleExcitation, 40).unwrap();
            assert!(rep.max_distance <= rep.bound, "ratio {ratio}: {rep:?}");
            assert!(rep.max_distance > last);
            last = rep.max_distance;
            if ratio == 0.05 {
                assert!(rep.max_distance <= 0.025);
            }
        }
    }

    #[test]
    fn doubly_excited_error_comes_from_anharmonic_leakage() {
        // |11⟩ couples to |20⟩, |02⟩ at ~g_S and is detuned by E_C, so its
        // error amplitude falls as E_C grows while single excitations do not care.
        let at = |e_c: f64, inputs| {
            let mut s = iswap_scenario(0.05);
            s.point.e_c = e_c;
            let s = GateScenario::from_point(s.point, [3, 3, 4], false).unwrap();
            dynamics_agreement(&s, inputs, 40).unwrap().max_distance
        };
        let (lo, hi) = (TWO_PI * 150e6, TWO_PI * 1.5e9);
        assert!(at(hi, AgreementInputs::Basis) < 0.6 * at(lo, AgreementInputs::Basis));
        let (a, b) = (at(lo, AgreementInputs::SingleExcitation), at(hi, AgreementInputs::SingleExcitation));
        assert!((a - b).abs() < 1e-3 * a);
    }
}
