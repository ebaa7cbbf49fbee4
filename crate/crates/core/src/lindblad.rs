//! Liouvillian construction, density-matrix propagation and the gate channel
//! ℰ[ρ] = Tr_m[exp(ℒT)(ρ ⊗ ρ_m)].
//!
//! Density matrices are vectorized by stacking columns, so vec(AρB) = (Bᵀ⊗A) vec ρ
//! and ℒ = −i(I⊗H − Hᵀ⊗I) + Σₙ[L̄ₙ⊗Lₙ − ½ I⊗Lₙ†Lₙ − ½ (Lₙ†Lₙ)ᵀ⊗I].
//!
//! The superoperator is kept sparse. Its sparsity graph splits into invariant
//! blocks (conserved excitation differences between ket and bra), and each
//! block is exponentiated densely when small enough; larger blocks fall back to
//! an adaptive Dormand-Prince 5(4) integration of the full vectorized equation.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{
    embed, fock_state, matrix_exp, min_eigenvalue, partial_trace, projector, thermal_state,
    ComplexMatrix, CsrMatrix, SpaceLayout, C64,
};
use crate::model::GateScenario;
use crate::{Error, Result};

/// Largest invariant block exponentiated densely by [`Method::Auto`].
pub const EXP_BLOCK_MAX: usize = 1600;
/// Tolerated trace drift of a propagated state.
pub const TRACE_TOL: f64 = 1e-8;
/// Tolerated negative eigenvalue of a propagated state.
pub const POSITIVITY_TOL: f64 = 1e-7;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Hamiltonian (rad/s) plus jump operators with their rates absorbed (√(1/s)).
#[derive(Debug, Clone)]
pub struct LindbladProblem {
    pub hamiltonian: ComplexMatrix,
    pub jump_operators: Vec<ComplexMatrix>,
    pub layout: SpaceLayout,
}

impl LindbladProblem {
    pub fn new(hamiltonian: ComplexMatrix, jump_operators: Vec<ComplexMatrix>, layout: SpaceLayout) -> Result<Self> {
        let d = layout.total_dim();
        if hamiltonian.shape() != (d, d) {
            return Err(Error::dim(format!("Hamiltonian {:?} vs layout dimension {d}", hamiltonian.shape())));
        }
        if let Some(l) = jump_operators.iter().find(|l| l.shape() != (d, d)) {
            return Err(Error::dim(format!("jump operator {:?} vs layout dimension {d}", l.shape())));
        }
        let defect = hamiltonian.hermitian_defect();
        if defect > 1e-12 {
            return Err(Error::arg(format!("Hamiltonian is not Hermitian (relative defect {defect:.2e})")));
        }
        Ok(LindbladProblem { hamiltonian, jump_operators, layout })
    }

    pub fn from_scenario(scenario: &GateScenario) -> Result<Self> {
        Self::new(scenario.h_total.clone(), scenario.jump_operators(), scenario.layout().clone())
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    /// Sparse D²×D² superoperator.
    pub fn liouvillian_sparse(&self) -> Result<CsrMatrix> {
        let d = self.dim();
        let nz = |a: &ComplexMatrix| -> Vec<(usize, usize, C64)> {
            let mut out = Vec::new();
            for r in 0..d {
                for c in 0..d {
                    let v = a[(r, c)];
                    if v != ZERO {
                        out.push((r, c, v));
                    }
                }
            }
            out
        };
        // Effective non-Hermitian generator K = −iH − ½ Σ L†L enters as I⊗K + K̄⊗I.
        let mut k = self.hamiltonian.scale(C64::new(0.0, -1.0));
        for l in &self.jump_operators {
            k.axpy(C64::new(-0.5, 0.0), &(&l.dagger() * l));
        }
        let mut trip = Vec::new();
        for &(r, c, v) in &nz(&k) {
            for j in 0..d {
                // I⊗K: ρ_rj ← K_rc ρ_cj
                trip.push((j * d + r, j * d + c, v));
                // K̄⊗I acts as ρ K†: ρ_jr ← ρ_jc (K†)_cr = conj(K_rc)
                trip.push((r * d + j, c * d + j, v.conj()));
            }
        }
        for l in &self.jump_operators {
            let entries = nz(l);
            for &(a, b, x) in &entries {
                for &(i, k2, y) in &entries {
                    // L̄⊗L: ρ_ia ← L_ik ρ_kb conj(L_ab)
                    trip.push((a * d + i, b * d + k2, x.conj() * y));
                }
            }
        }
        CsrMatrix::from_triplets(d * d, trip)
    }
}

/// Dense superoperator of `problem`.
pub fn liouvillian(problem: &LindbladProblem) -> Result<ComplexMatrix> {
    Ok(problem.liouvillian_sparse()?.to_dense())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Block exponential when every invariant block is at most [`EXP_BLOCK_MAX`], else the integrator.
    Auto,
    Exponential,
    Integrator,
}

/// Dormand-Prince step control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Consecutive rejected steps tolerated before giving up.
    pub max_halvings: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-8, atol: 1e-11, max_halvings: 60 }
    }
}

impl Tolerances {
    pub fn tightened(self, factor: f64) -> Self {
        Tolerances { rtol: self.rtol / factor, atol: self.atol / factor, ..self }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropagationReport {
    #[serde(skip)]
    pub final_state: ComplexMatrix,
    pub trace_drift: f64,
    pub min_eigenvalue: f64,
    /// Accepted integrator steps, or 1 for an exact exponential.
    pub step_count: usize,
}

/// exp(ℒt) restricted to the invariant blocks of ℒ.
#[derive(Debug, Clone)]
pub struct Propagator {
    n: usize,
    blocks: Vec<(Vec<usize>, ComplexMatrix)>,
}

impl Propagator {
    pub fn new(l: &CsrMatrix, t: f64) -> Result<Self> {
        Self::from_blocks(l, &l.components(), t)
    }

    fn from_blocks(l: &CsrMatrix, comps: &[Vec<usize>], t: f64) -> Result<Self> {
        let blocks = comps
            .par_iter()
            .map(|idx| {
                let dense = l.block(idx).to_dense().scale_real(t);
                Ok((idx.clone(), matrix_exp(&dense)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Propagator { n: l.dim(), blocks })
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.n];
        for (idx, p) in &self.blocks {
            let nb = idx.len();
            for r in 0..nb {
                let row = p.row(r);
                let mut acc = ZERO;
                for c in 0..nb {
                    acc += row[c] * x[idx[c]];
                }
                y[idx[r]] = acc;
            }
        }
        y
    }
}

/// The superoperator plus a chosen way of advancing vectorized states.
#[derive(Debug, Clone)]
pub struct Evolution {
    l: CsrMatrix,
    blocks: Vec<Vec<usize>>,
    exact: bool,
    tol: Tolerances,
    cache: HashMap<u64, Propagator>,
}

impl Evolution {
    pub fn new(problem: &LindbladProblem, method: Method, tol: Tolerances) -> Result<Self> {
        let l = problem.liouvillian_sparse()?;
        let blocks = l.components();
        let largest = blocks.iter().map(Vec::len).max().unwrap_or(0);
        let exact = match method {
            Method::Auto => largest <= EXP_BLOCK_MAX,
            Method::Exponential => true,
            Method::Integrator => false,
        };
        Ok(Evolution { l, blocks, exact, tol, cache: HashMap::new() })
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn largest_block(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Advances `x` by `dt`, returning the new vector and the step count.
    pub fn advance(&mut self, x: &[C64], dt: f64) -> Result<(Vec<C64>, usize)> {
        if dt == 0.0 {
            return Ok((x.to_vec(), 0));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::arg(format!("propagation time must be non-negative, got {dt}")));
        }
        if self.exact {
            let key = dt.to_bits();
            if !self.cache.contains_key(&key) {
                let p = Propagator::from_blocks(&self.l, &self.blocks, dt)?;
                self.cache.insert(key, p);
            }
            Ok((self.cache[&key].apply(x), 1))
        } else {
            dopri5(&self.l, x, dt, &self.tol)
        }
    }

    /// Prepares the propagator for `dt` so later calls through `&self` are cheap.
    pub fn prepare(&mut self, dt: f64) -> Result<()> {
        if self.exact && dt > 0.0 {
            let key = dt.to_bits();
            if !self.cache.contains_key(&key) {
                let p = Propagator::from_blocks(&self.l, &self.blocks, dt)?;
                self.cache.insert(key, p);
            }
        }
        Ok(())
    }

    /// Advance through a prepared propagator or the integrator, without mutation.
    pub fn advance_prepared(&self, x: &[C64], dt: f64) -> Result<(Vec<C64>, usize)> {
        if dt == 0.0 {
            return Ok((x.to_vec(), 0));
        }
        if self.exact {
            match self.cache.get(&dt.to_bits()) {
                Some(p) => Ok((p.apply(x), 1)),
                None => Err(Error::Precondition(format!("no propagator prepared for t = {dt}"))),
            }
        } else {
            dopri5(&self.l, x, dt, &self.tol)
        }
    }
}

/// Dormand-Prince 5(4) integration of dy/dt = L y over [0, t].
pub fn dopri5(l: &CsrMatrix, y0: &[C64], t: f64, tol: &Tolerances) -> Result<(Vec<C64>, usize)> {
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let n = y0.len();
    if n != l.dim() {
        return Err(Error::dim(format!("state of length {n} vs superoperator dimension {}", l.dim())));
    }
    if t == 0.0 {
        return Ok((y0.to_vec(), 0));
    }
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<C64>> = vec![vec![ZERO; n]; 7];
    let mut stage = vec![ZERO; n];
    let mut y_new = vec![ZERO; n];
    l.matvec_into(&y, &mut k[0]);
    let norm = l.inf_norm().max(1.0 / t);
    let mut h = (0.5 / norm).min(t);
    let mut time = 0.0;
    let mut accepted = 0usize;
    let mut rejects = 0usize;
    let mut last_rejected = false;
    while time < t {
        if time + h > t {
            h = t - time;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, a) in A[s][..s].iter().enumerate() {
                    if *a != 0.0 {
                        acc += k[j][i] * (h * a);
                    }
                }
                stage[i] = acc;
            }
            let (_, tail) = k.split_at_mut(s);
            l.matvec_into(&stage, &mut tail[0]);
            if s == 6 {
                y_new.copy_from_slice(&stage);
            }
        }
        let mut err = 0.0;
        for i in 0..n {
            let mut e = ZERO;
            for (j, c) in E.iter().enumerate() {
                if *c != 0.0 {
                    e += k[j][i] * c;
                }
            }
            let scale = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
            err += (e.norm() * h / scale).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Propagation("non-finite error estimate".into()));
        }
        if err <= 1.0 {
            time += h;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            accepted += 1;
            rejects = 0;
            let mut fac = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            h *= fac;
        } else {
            rejects += 1;
            last_rejected = true;
            if rejects > tol.max_halvings {
                return Err(Error::Propagation(format!(
                    "step size control failed after {rejects} consecutive rejections at t = {time:.3e}"
                )));
            }
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.5);
        }
        if h <= t * 1e-14 && time < t {
            return Err(Error::Propagation(format!("step size underflow at t = {time:.3e}")));
        }
    }
    Ok((y, accepted))
}

/// Density-matrix checks shared by every entry point.
pub fn check_density_matrix(rho: &ComplexMatrix, d: usize, tol: f64) -> Result<()> {
    if rho.shape() != (d, d) {
        return Err(Error::dim(format!("density matrix {:?} vs dimension {d}", rho.shape())));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(Error::arg(format!("density matrix trace {tr} is not 1")));
    }
    if !rho.is_hermitian(tol) {
        return Err(Error::arg("density matrix is not Hermitian"));
    }
    let lo = min_eigenvalue(rho)?;
    if lo < -tol {
        return Err(Error::arg(format!("density matrix has eigenvalue {lo:.3e}")));
    }
    Ok(())
}

fn report(rho0: &ComplexMatrix, v: &[C64], d: usize, steps: usize) -> Result<PropagationReport> {
    let rho = ComplexMatrix::unvectorize(v, d)?;
    let trace_drift = (rho.trace() - rho0.trace()).norm();
    let min_eigenvalue = min_eigenvalue(&rho.hermitize())?;
    Ok(PropagationReport { final_state: rho, trace_drift, min_eigenvalue, step_count: steps })
}

/// ρ(t) with the automatic method and default tolerances.
pub fn propagate(problem: &LindbladProblem, rho0: &ComplexMatrix, t: f64) -> Result<PropagationReport> {
    propagate_with(problem, rho0, t, Method::Auto, Tolerances::default())
}

pub fn propagate_with(
    problem: &LindbladProblem,
    rho0: &ComplexMatrix,
    t: f64,
    method: Method,
    tol: Tolerances,
) -> Result<PropagationReport> {
    let d = problem.dim();
    check_density_matrix(rho0, d, 1e-10)?;
    let mut evo = Evolution::new(problem, method, tol)?;
    let (v, steps) = evo.advance(&rho0.vectorize(), t)?;
    report(rho0, &v, d, steps)
}

/// Initial magnon state attached to the qubits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MagnonInit {
    Vacuum,
    Thermal(f64),
}

impl MagnonInit {
    pub fn state(self, dim: usize) -> Result<ComplexMatrix> {
        match self {
            MagnonInit::Vacuum => projector(&fock_state(dim, 0)?),
            MagnonInit::Thermal(n) => thermal_state(dim, n),
        }
    }
}

/// One evaluation of the gate channel.
#[derive(Debug, Clone)]
pub struct ChannelOutput {
    /// Reduced two-transmon state, all levels kept.
    pub qubit_state: ComplexMatrix,
    /// 4×4 computational block, not renormalized.
    pub block: ComplexMatrix,
    /// 1 − tr(block).
    pub leakage: f64,
    pub trace_drift: f64,
    pub min_eigenvalue: f64,
    pub step_count: usize,
}

/// Flat indices of |q1 q2⟩, q ∈ {0, 1}, inside a (d1·d2)-dimensional two-transmon space.
pub fn computational_indices(d2: usize) -> [usize; 4] {
    [0, 1, d2, d2 + 1]
}

/// ℰ[ρ] = Tr_m[exp(ℒT)(ρ ⊗ ρ_m)] on two-transmon states.
#[derive(Debug, Clone)]
pub struct GateChannel {
    layout: SpaceLayout,
    magnon_state: ComplexMatrix,
    t: f64,
    evolution: Evolution,
}

impl GateChannel {
    pub fn new(scenario: &GateScenario, init: MagnonInit) -> Result<Self> {
        Self::with_method(scenario, init, Method::Auto, Tolerances::default())
    }

    pub fn with_method(scenario: &GateScenario, init: MagnonInit, method: Method, tol: Tolerances) -> Result<Self> {
        let problem = LindbladProblem::from_scenario(scenario)?;
        Self::from_problem(&problem, init, scenario.t_gate, method, tol)
    }

    pub fn from_problem(
        problem: &LindbladProblem,
        init: MagnonInit,
        t: f64,
        method: Method,
        tol: Tolerances,
    ) -> Result<Self> {
        let layout = problem.layout.clone();
        if layout.len() != 3 {
            return Err(Error::dim("the gate channel needs a (q1, q2, m) layout"));
        }
        let magnon_state = init.state(layout.dim(2))?;
        let mut evolution = Evolution::new(problem, method, tol)?;
        evolution.prepare(t)?;
        Ok(GateChannel { layout, magnon_state, t, evolution })
    }

    pub fn gate_time(&self) -> f64 {
        self.t
    }

    pub fn qubit_dims(&self) -> (usize, usize) {
        (self.layout.dim(0), self.layout.dim(1))
    }

    pub fn is_exact(&self) -> bool {
        self.evolution.is_exact()
    }

    /// Full (q1, q2, m) state after the gate.
    pub fn apply_full(&self, rho_full: &ComplexMatrix) -> Result<PropagationReport> {
        let d = self.layout.total_dim();
        if rho_full.shape() != (d, d) {
            return Err(Error::dim(format!("state {:?} vs dimension {d}", rho_full.shape())));
        }
        let (v, steps) = self.evolution.advance_prepared(&rho_full.vectorize(), self.t)?;
        report(rho_full, &v, d, steps)
    }

    /// Channel output for a two-transmon density matrix of size d1·d2.
    pub fn apply(&self, rho_qq: &ComplexMatrix) -> Result<ChannelOutput> {
        let (d1, d2) = self.qubit_dims();
        if rho_qq.shape() != (d1 * d2, d1 * d2) {
            return Err(Error::dim(format!("two-transmon state {:?} vs {}", rho_qq.shape(), d1 * d2)));
        }
        let full = crate::algebra::kron(rho_qq, &self.magnon_state);
        let rep = self.apply_full(&full)?;
        let qubit_state = partial_trace(&rep.final_state, &self.layout, &[0, 1])?;
        let block = qubit_state.submatrix(&computational_indices(d2));
        let leakage = 1.0 - block.trace().re;
        Ok(ChannelOutput {
            qubit_state,
            block,
            leakage,
            trace_drift: rep.trace_drift,
            min_eigenvalue: rep.min_eigenvalue,
            step_count: rep.step_count,
        })
    }

    /// Embeds a 4×4 computational-space state into the d1·d2 transmon space and applies the channel.
    pub fn apply_computational(&self, rho: &ComplexMatrix) -> Result<ChannelOutput> {
        if rho.shape() != (4, 4) {
            return Err(Error::dim(format!("expected a 4x4 two-qubit state, got {:?}", rho.shape())));
        }
        let (d1, d2) = self.qubit_dims();
        let idx = computational_indices(d2);
        let mut big = ComplexMatrix::zeros(d1 * d2, d1 * d2);
        for r in 0..4 {
            for c in 0..4 {
                big[(idx[r], idx[c])] = rho[(r, c)];
            }
        }
        self.apply(&big)
    }
}

/// Expectation values recorded along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Observable {
    /// c†c of qubit 0 or 1.
    QubitNumber(usize),
    MagnonNumber,
    /// |0⟩⟨1| + |1⟩⟨0| of qubit 0 or 1.
    SigmaX(usize),
}

impl Observable {
    pub fn label(self) -> String {
        match self {
            Observable::QubitNumber(i) => format!("n_q{}", i + 1),
            Observable::MagnonNumber => "n_m".into(),
            Observable::SigmaX(i) => format!("sx_q{}", i + 1),
        }
    }

    pub fn matrix(self, layout: &SpaceLayout) -> Result<ComplexMatrix> {
        let (index, local) = match self {
            Observable::QubitNumber(i) | Observable::SigmaX(i) if i > 1 => {
                return Err(Error::arg(format!("qubit index {i} out of range")))
            }
            Observable::QubitNumber(i) => (i, crate::algebra::number(layout.dim(i))?),
            Observable::MagnonNumber => (2, crate::algebra::number(layout.dim(2))?),
            Observable::SigmaX(i) => {
                let d = layout.dim(i);
                let mut sx = ComplexMatrix::zeros(d, d);
                sx[(0, 1)] = C64::new(1.0, 0.0);
                sx[(1, 0)] = C64::new(1.0, 0.0);
                (i, sx)
            }
        };
        embed(&local, index, layout)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub values: Vec<f64>,
    pub trace: f64,
}

/// Expectation values of `observables` at the sorted, non-negative `times`.
pub fn observable_trace(
    problem: &LindbladProblem,
    rho0: &ComplexMatrix,
    times: &[f64],
    observables: &[Observable],
    method: Method,
) -> Result<Vec<TraceRow>> {
    let d = problem.dim();
    check_density_matrix(rho0, d, 1e-10)?;
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::arg("times must be sorted and non-negative"));
    }
    let ops = observables.iter().map(|o| o.matrix(&problem.layout)).collect::<Result<Vec<_>>>()?;
    let mut evo = Evolution::new(problem, method, Tolerances::default())?;
    let mut v = rho0.vectorize();
    let mut now = 0.0;
    let step = uniform_step(times);
    let mut rows = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        // On a uniform grid every increment reuses one propagator.
        let dt = match step {
            Some(h) if i > 0 => h,
            _ => t - now,
        };
        v = evo.advance(&v, dt)?.0;
        now = t;
        let rho = ComplexMatrix::unvectorize(&v, d)?;
        let values = ops.iter().map(|o| o.expectation(&rho).map(|z| z.re)).collect::<Result<Vec<_>>>()?;
        rows.push(TraceRow { t, values, trace: rho.trace().re });
    }
    Ok(rows)
}

fn uniform_step(times: &[f64]) -> Option<f64> {
    if times.len() < 3 {
        return None;
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let uniform = times.iter().enumerate().all(|(i, t)| (t - (times[0] + h * i as f64)).abs() <= 1e-9 * h);
    uniform.then_some(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{annihilation, kron, matrix_exp};
    use crate::model::{derive_working_point, device_preset, GateKind, Overrides};

    fn cx(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn single(dim: usize) -> SpaceLayout {
        SpaceLayout::from_dims(&[dim]).unwrap()
    }

    #[test]
    fn zero_generator_is_zero() {
        let p = LindbladProblem::new(ComplexMatrix::zeros(3, 3), vec![], single(3)).unwrap();
        assert!(liouvillian(&p).unwrap().is_zero());
    }

    #[test]
    fn sparse_matches_kronecker_formula() {
        let d = 3;
        let h = ComplexMatrix::from_fn(d, d, c_of).hermitize();
        let l1 = ComplexMatrix::from_fn(d, d, |r, c| cx((r * 2 + c) as f64 * 0.1, (r as f64 - c as f64) * 0.05));
        let p = LindbladProblem::new(h.clone(), vec![l1.clone()], single(d)).unwrap();
        let got = liouvillian(&p).unwrap();
        let id = ComplexMatrix::identity(d);
        let ldl = &l1.dagger() * &l1;
        let mut want = (&kron(&id, &h) - &kron(&h.transpose(), &id)).scale(cx(0.0, -1.0));
        want += &kron(&l1.conj(), &l1);
        want.axpy(cx(-0.5, 0.0), &kron(&id, &ldl));
        want.axpy(cx(-0.5, 0.0), &kron(&ldl.transpose(), &id));
        assert!((&got - &want).max_abs() < 1e-14);
        // Trace preservation: the row vector vec(I)† annihilates ℒ.
        let vid = id.vectorize();
        for col in 0..d * d {
            let s: C64 = (0..d * d).map(|r| vid[r].conj() * got[(r, col)]).sum();
            assert!(s.norm() < 1e-14);
        }
        // A zero eigenvalue exists: ℒ is singular.
        let e = matrix_exp(&got.scale_real(50.0)).unwrap();
        assert!(e.max_abs() > 1e-3);
    }

    fn c_of(r: usize, c: usize) -> C64 {
        C64::new((r + 2 * c) as f64 * 0.3, (r as f64 - c as f64) * 0.2)
    }

    #[test]
    fn t1_decay_matches_exponential() {
        let t1: f64 = 2.0e-6;
        let sm = annihilation(2).unwrap();
        let p = LindbladProblem::new(ComplexMatrix::zeros(2, 2), vec![sm.scale_real((1.0 / t1).sqrt())], single(2))
            .unwrap();
        let rho0 = ComplexMatrix::real_diagonal(&[0.0, 1.0]);
        for method in [Method::Exponential, Method::Integrator] {
            for t in [0.0, 0.3e-6, 1e-6, 5e-6] {
                let r = propagate_with(&p, &rho0, t, method, Tolerances::default()).unwrap();
                assert!((r.final_state[(1, 1)].re - (-t / t1).exp()).abs() < 1e-8, "{method:?} {t}");
                assert!(r.trace_drift < TRACE_TOL);
            }
        }
    }

    #[test]
    fn dephasing_oracle() {
        let t_phi: f64 = 3.0e-6;
        let n = crate::algebra::number(3).unwrap();
        let h = n.scale_real(2.0 * std::f64::consts::PI * 5e6);
        let p = LindbladProblem::new(h, vec![n.scale_real((1.0 / t_phi).sqrt())], single(3)).unwrap();
        let plus = ComplexMatrix::column(&[cx(0.5f64.sqrt(), 0.0), cx(0.5f64.sqrt(), 0.0), cx(0.0, 0.0)]);
        let rho0 = projector(&plus).unwrap();
        for t in [0.2e-6, 1.7e-6] {
            let r = propagate(&p, &rho0, t).unwrap();
            let want = 0.5 * (-t / (2.0 * t_phi)).exp();
            assert!((r.final_state[(0, 1)].norm() - want).abs() < 1e-9);
        }
    }

    #[test]
    fn thermal_relaxation_oracle() {
        let (kappa, n_th, dim): (f64, f64, usize) = (2.0e6, 0.4, 14);
        let a = annihilation(dim).unwrap();
        let jumps = vec![a.scale_real((kappa * (1.0 + n_th)).sqrt()), a.dagger().scale_real((kappa * n_th).sqrt())];
        let p = LindbladProblem::new(ComplexMatrix::zeros(dim, dim), jumps, single(dim)).unwrap();
        let rho0 = projector(&fock_state(dim, 1).unwrap()).unwrap();
        let num = crate::algebra::number(dim).unwrap();
        for t in [0.1e-6, 0.5e-6, 2e-6] {
            let r = propagate(&p, &rho0, t).unwrap();
            let n = num.expectation(&r.final_state).unwrap().re;
            let want = n_th + (1.0 - n_th) * (-kappa * t).exp();
            assert!((n - want).abs() < 1e-6, "t {t}: {n} vs {want}");
        }
    }

    #[test]
    fn initial_state_checks() {
        let p = LindbladProblem::new(ComplexMatrix::zeros(2, 2), vec![], single(2)).unwrap();
        assert!(propagate(&p, &ComplexMatrix::real_diagonal(&[0.5, 0.6]), 1.0).is_err());
        assert!(propagate(&p, &ComplexMatrix::real_diagonal(&[1.5, -0.5]), 1.0).is_err());
        assert!(LindbladProblem::new(ComplexMatrix::zeros(3, 3), vec![], single(2)).is_err());
        let r = propagate(&p, &ComplexMatrix::real_diagonal(&[0.25, 0.75]), 0.0).unwrap();
        assert_eq!(r.final_state, ComplexMatrix::real_diagonal(&[0.25, 0.75]));
    }

    #[test]
    fn exponential_and_integrator_agree_on_gate_problem() {
        let device = device_preset(GateKind::Iswap);
        let wp = derive_working_point(&device, GateKind::Iswap, 0.94, &Overrides::default()).unwrap();
        let s = GateScenario::from_point(wp, [3, 3, 4], true).unwrap();
        let p = LindbladProblem::from_scenario(&s).unwrap();
        let rho0 = projector(&kron(&kron(&fock_state(3, 1).unwrap(), &fock_state(3, 0).unwrap()), &fock_state(4, 0).unwrap()))
            .unwrap();
        let t = s.t_gate / 3.0;
        let a = propagate_with(&p, &rho0, t, Method::Exponential, Tolerances::default()).unwrap();
        let b = propagate_with(&p, &rho0, t, Method::Integrator, Tolerances::default()).unwrap();
        let diff = (&a.final_state - &b.final_state).frobenius_norm();
        assert!(diff < 1e-6, "difference {diff}");
        assert!(a.trace_drift < TRACE_TOL && b.trace_drift < TRACE_TOL);
        assert!(a.min_eigenvalue > -POSITIVITY_TOL);
    }

    #[test]
    fn identity_channel_without_couplings() {
        let device = device_preset(GateKind::Cz);
        let mut wp = derive_working_point(&device, GateKind::Cz, 0.05, &Overrides::default()).unwrap();
        wp.g1 = 0.0;
        wp.g2 = 0.0;
        wp.e_c = 0.0;
        let s = GateScenario::from_point(wp, [3, 3, 4], false).unwrap();
        let ch = GateChannel::new(&s, MagnonInit::Vacuum).unwrap();
        let psi = ComplexMatrix::column(&[cx(0.6, 0.0), cx(0.0, 0.8), cx(0.0, 0.0), cx(0.0, 0.0)]);
        let rho = projector(&psi).unwrap();
        let out = ch.apply_computational(&rho).unwrap();
        assert!((&out.block - &rho).max_abs() < 1e-10);
        assert!(out.leakage.abs() < 1e-10);
    }

    #[test]
    fn observable_trace_starts_at_initial_values() {
        let t1: f64 = 1e-6;
        let sm = annihilation(2).unwrap();
        let layout = SpaceLayout::qqm(2, 2, 2).unwrap();
        let jumps = vec![embed(&sm, 0, &layout).unwrap().scale_real((1.0 / t1).sqrt())];
        let p = LindbladProblem::new(ComplexMatrix::zeros(8, 8), jumps, layout.clone()).unwrap();
        let rho0 = projector(&kron(&kron(&fock_state(2, 1).unwrap(), &fock_state(2, 0).unwrap()), &fock_state(2, 0).unwrap()))
            .unwrap();
        let times: Vec<f64> = (0..11).map(|i| i as f64 * 0.2e-6).collect();
        let obs = [Observable::QubitNumber(0), Observable::MagnonNumber, Observable::SigmaX(1)];
        let rows = observable_trace(&p, &rho0, &times, &obs, Method::Auto).unwrap();
        assert_eq!(rows[0].values, vec![1.0, 0.0, 0.0]);
        for r in &rows {
            assert!((r.trace - 1.0).abs() < 1e-12);
            assert!((r.values[0] - (-r.t / t1).exp()).abs() < 1e-9);
        }
        assert!(observable_trace(&p, &rho0, &[1.0, 0.5], &obs, Method::Auto).is_err());
    }
}
