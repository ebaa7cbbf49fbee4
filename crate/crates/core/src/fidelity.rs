//! Average gate fidelity of a two-qubit channel from 16 product-state
//! evaluations, a Haar Monte-Carlo cross-check and the Choi matrix.
//!
//! F̄ = (Σⱼ tr[Uⱼ† U† ℰ[Uⱼ] U] + d²) / (d²(d + 1)) with d = 4 and Uⱼ the
//! two-qubit Pauli products. ℰ[Uⱼ] follows by linearity from the channel on
//! {ρ₀, ρ₁, ρ₊, ρ_{i−}}⊗{ρ₀, ρ₁, ρ₊, ρ_{i−}}. Outputs are never renormalized,
//! so leakage counts as infidelity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{kron, projector, ComplexMatrix, C64};
use crate::lindblad::{ChannelOutput, GateChannel};
use crate::{Error, Result};

/// Two-qubit dimension.
pub const D: usize = 4;
/// Largest imaginary residue of F̄ discarded silently.
pub const IMAG_TOL: f64 = 1e-9;

/// A map on 4×4 two-qubit density matrices, possibly trace-decreasing.
pub trait Channel: Sync {
    /// Computational-block output and the weight that left the block.
    fn apply(&self, rho: &ComplexMatrix) -> Result<(ComplexMatrix, f64)>;
}

impl Channel for GateChannel {
    fn apply(&self, rho: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
        let ChannelOutput { block, leakage, .. } = self.apply_computational(rho)?;
        Ok((block, leakage))
    }
}

/// ρ ↦ VρV†.
pub struct UnitaryChannel(pub ComplexMatrix);

impl Channel for UnitaryChannel {
    fn apply(&self, rho: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
        Ok((&(&self.0 * rho) * &self.0.dagger(), 0.0))
    }
}

/// ρ ↦ (1 − p)ρ + p tr(ρ) I/4.
pub struct DepolarizingChannel(pub f64);

impl Channel for DepolarizingChannel {
    fn apply(&self, rho: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
        let p = self.0;
        let mut out = rho.scale_real(1.0 - p);
        out.axpy(rho.trace() * (p / D as f64), &ComplexMatrix::identity(D));
        Ok((out, 0.0))
    }
}

/// Any closure acting on 4×4 states.
pub struct FnChannel<F>(pub F);

impl<F> Channel for FnChannel<F>
where
    F: Fn(&ComplexMatrix) -> Result<(ComplexMatrix, f64)> + Sync,
{
    fn apply(&self, rho: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
        (self.0)(rho)
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// ρ₀, ρ₁, ρ₊ and ρ_{i−} with |i−⟩ = (|0⟩ − i|1⟩)/√2.
pub fn single_qubit_inputs() -> [ComplexMatrix; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let ket = |a: C64, b: C64| projector(&ComplexMatrix::column(&[a, b])).expect("column vector");
    [
        ket(c(1.0, 0.0), c(0.0, 0.0)),
        ket(c(0.0, 0.0), c(1.0, 0.0)),
        ket(c(h, 0.0), c(h, 0.0)),
        ket(c(h, 0.0), c(0.0, -h)),
    ]
}

/// σ⁰ = I, σˣ, σʸ, σᶻ.
pub fn pauli(k: usize) -> ComplexMatrix {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match k {
        0 => ComplexMatrix::identity(2),
        1 => ComplexMatrix::from_rows(&[&[z, o], &[o, z]]),
        2 => ComplexMatrix::from_rows(&[&[z, -i], &[i, z]]),
        3 => ComplexMatrix::from_rows(&[&[o, z], &[z, -o]]),
        _ => panic!("Pauli index {k} out of range"),
    }
}

/// σᵏ⊗σˡ for j = 4k + l.
pub fn pauli_product(j: usize) -> ComplexMatrix {
    kron(&pauli(j / 4), &pauli(j % 4))
}

/// Sign s with σʸ = s(2ρ_{i−} − ρ₀ − ρ₁), chosen so that the identity
/// decomposition reproduces σʸ exactly. With |i−⟩ = (|0⟩ − i|1⟩)/√2 it is −1.
pub fn sigma_y_sign() -> f64 {
    let [r0, r1, _, rim] = single_qubit_inputs();
    let raw = &(&rim.scale_real(2.0) - &r0) - &r1;
    let y = pauli(2);
    if (&raw - &y).max_abs() < 1e-12 {
        1.0
    } else if (&raw + &y).max_abs() < 1e-12 {
        -1.0
    } else {
        unreachable!("2ρ_(i−) − ρ₀ − ρ₁ is ±σʸ by construction")
    }
}

/// Coefficients of σᵏ in the basis {ρ₀, ρ₁, ρ₊, ρ_{i−}}.
fn decomposition(k: usize, sy: f64) -> [f64; 4] {
    match k {
        0 => [1.0, 1.0, 0.0, 0.0],
        1 => [-1.0, -1.0, 2.0, 0.0],
        2 => [-sy, -sy, 0.0, 2.0 * sy],
        3 => [1.0, -1.0, 0.0, 0.0],
        _ => panic!("Pauli index {k} out of range"),
    }
}

/// Channel outputs on the 16 product inputs, indexed 4a + b for ρ_a⊗ρ_b.
#[derive(Debug, Clone)]
pub struct ChannelTomography {
    pub outputs: Vec<ComplexMatrix>,
    pub leakage: Vec<f64>,
    pub sigma_y_sign: f64,
}

impl ChannelTomography {
    pub fn mean_leakage(&self) -> f64 {
        self.leakage.iter().sum::<f64>() / self.leakage.len() as f64
    }

    pub fn max_leakage(&self) -> f64 {
        self.leakage.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Leakage averaged over Haar-random pure inputs. Leakage is linear in
    /// the input, so this is its value on I/4 = ¼Σ|ab⟩⟨ab| over a, b ∈ {0, 1}.
    /// Negative rounding residue of a number-conserving channel reads as 0.
    pub fn average_leakage(&self) -> f64 {
        ([0, 1, 4, 5].iter().map(|&j| self.leakage[j]).sum::<f64>() / 4.0).max(0.0)
    }
}

/// Evaluates `channel` once on each product input.
pub fn tomography(channel: &dyn Channel) -> Result<ChannelTomography> {
    let singles = single_qubit_inputs();
    let results = (0..16)
        .into_par_iter()
        .map(|j| channel.apply(&kron(&singles[j / 4], &singles[j % 4])))
        .collect::<Result<Vec<_>>>()?;
    let (outputs, leakage) = results.into_iter().unzip();
    Ok(ChannelTomography { outputs, leakage, sigma_y_sign: sigma_y_sign() })
}

/// ℰ[σᵏ⊗σˡ] for j = 4k + l.
pub fn channel_on_pauli(tomo: &ChannelTomography, j: usize) -> ComplexMatrix {
    let a = decomposition(j / 4, tomo.sigma_y_sign);
    let b = decomposition(j % 4, tomo.sigma_y_sign);
    let mut out = ComplexMatrix::zeros(D, D);
    for (p, ca) in a.iter().enumerate() {
        for (q, cb) in b.iter().enumerate() {
            let w = ca * cb;
            if w != 0.0 {
                out.axpy(c(w, 0.0), &tomo.outputs[4 * p + q]);
            }
        }
    }
    out
}

fn check_unitary(u: &ComplexMatrix) -> Result<()> {
    if u.shape() != (D, D) {
        return Err(Error::dim(format!("target unitary must be 4x4, got {:?}", u.shape())));
    }
    let defect = (&(&u.dagger() * u) - &ComplexMatrix::identity(D)).max_abs();
    if defect > 1e-9 {
        return Err(Error::arg(format!("target is not unitary (defect {defect:.2e})")));
    }
    Ok(())
}

/// F̄ of the tomographed channel against the target `u`.
pub fn average_gate_fidelity(tomo: &ChannelTomography, u: &ComplexMatrix) -> Result<f64> {
    check_unitary(u)?;
    let ud = u.dagger();
    let mut sum = c(0.0, 0.0);
    for j in 0..16 {
        let p = pauli_product(j);
        let rotated = &(&ud * &channel_on_pauli(tomo, j)) * u;
        sum += (&p.dagger() * &rotated).trace();
    }
    let d2 = (D * D) as f64;
    let f = (sum + d2) / (d2 * (D as f64 + 1.0));
    if f.im.abs() > IMAG_TOL {
        return Err(Error::Precondition(format!("average fidelity has imaginary part {:.3e}", f.im)));
    }
    Ok(f.re)
}

/// (|tr(U†V)|² + d)/(d² + d) for unitaries U and V.
pub fn unitary_fidelity(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
    check_unitary(u)?;
    check_unitary(v)?;
    let t = (&u.dagger() * v).trace().norm_sqr();
    Ok((t + D as f64) / ((D * D + D) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Haar-random pure state from four complex normal deviates.
pub fn haar_state(rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let amps: Vec<C64> = (0..D)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            c(re, im)
        })
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    ComplexMatrix::column(&amps.iter().map(|a| a / norm).collect::<Vec<_>>())
}

/// Monte-Carlo estimate of ∫dψ ⟨ψ|U†ℰ[|ψ⟩⟨ψ|]U|ψ⟩ over Haar-random states.
pub fn haar_mc_fidelity(channel: &dyn Channel, u: &ComplexMatrix, samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    check_unitary(u)?;
    if samples < 2 {
        return Err(Error::arg("Monte-Carlo fidelity needs at least two samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<ComplexMatrix> = (0..samples).map(|_| haar_state(&mut rng)).collect();
    let values = states
        .par_iter()
        .map(|psi| {
            let (out, _) = channel.apply(&projector(psi)?)?;
            let target = u * psi;
            Ok((&(&target.dagger() * &out) * &target)[(0, 0)].re)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(MonteCarloEstimate { mean, stderr: (var / n).sqrt(), samples })
}

/// Normalized Choi matrix (1/d) Σᵢⱼ |i⟩⟨j| ⊗ ℰ[|i⟩⟨j|], input factor first.
pub fn choi_matrix(tomo: &ChannelTomography) -> ComplexMatrix {
    let paulis: Vec<ComplexMatrix> = (0..16).map(|j| channel_on_pauli(tomo, j)).collect();
    let products: Vec<ComplexMatrix> = (0..16).map(pauli_product).collect();
    let mut choi = ComplexMatrix::zeros(D * D, D * D);
    for i in 0..D {
        for j in 0..D {
            // |i⟩⟨j| = Σ_P (P_ji / d) P
            let mut e = ComplexMatrix::zeros(D, D);
            for (p, out) in products.iter().zip(&paulis) {
                let w = p[(j, i)] / D as f64;
                if w != c(0.0, 0.0) {
                    e.axpy(w, out);
                }
            }
            for r in 0..D {
                for s in 0..D {
                    choi[(i * D + r, j * D + s)] = e[(r, s)] / D as f64;
                }
            }
        }
    }
    choi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{matrix_exp, min_eigenvalue, partial_trace, SpaceLayout};
    use proptest::prelude::*;
    use rand::Rng;

    fn random_unitary(seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = ComplexMatrix::from_fn(D, D, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .hermitize();
        matrix_exp(&h.scale(c(0.0, -2.0))).unwrap()
    }

    #[test]
    fn sigma_y_sign_is_negative() {
        assert_eq!(sigma_y_sign(), -1.0);
    }

    #[test]
    fn identity_channel_recovers_paulis() {
        let tomo = tomography(&UnitaryChannel(ComplexMatrix::identity(D))).unwrap();
        for j in 0..16 {
            assert!((&channel_on_pauli(&tomo, j) - &pauli_product(j)).max_abs() < 1e-9, "j {j}");
        }
        assert!((channel_on_pauli(&tomo, 0).trace().re - 4.0).abs() < 1e-12);
        let f = average_gate_fidelity(&tomo, &ComplexMatrix::identity(D)).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        assert_eq!(tomo.max_leakage(), 0.0);
        for (k, out) in tomo.outputs.iter().enumerate() {
            let singles = single_qubit_inputs();
            assert!((out - &kron(&singles[k / 4], &singles[k % 4])).max_abs() < 1e-15);
        }
    }

    #[test]
    fn depolarizing_channel_gives_one_over_d() {
        let tomo = tomography(&DepolarizingChannel(1.0)).unwrap();
        for out in &tomo.outputs {
            assert!((out - &ComplexMatrix::identity(D).scale_real(0.25)).max_abs() < 1e-15);
        }
        for seed in 0..3 {
            let f = average_gate_fidelity(&tomo, &random_unitary(seed)).unwrap();
            assert!((f - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn unitary_channels_match_analytic_formula_and_monte_carlo() {
        for seed in 0..5 {
            let v = random_unitary(100 + seed);
            let u = random_unitary(200 + seed);
            let ch = UnitaryChannel(v.clone());
            let tomo = tomography(&ch).unwrap();
            let f = average_gate_fidelity(&tomo, &u).unwrap();
            assert!((f - unitary_fidelity(&u, &v).unwrap()).abs() < 1e-10);
            let mc = haar_mc_fidelity(&ch, &u, 4000, seed).unwrap();
            assert!((mc.mean - f).abs() <= 3.0 * mc.stderr, "seed {seed}: {} ± {} vs {f}", mc.mean, mc.stderr);
            // Traceless inputs stay traceless under a unitary channel.
            for j in 1..16 {
                assert!(channel_on_pauli(&tomo, j).trace().norm() < 1e-12);
            }
        }
    }

    #[test]
    fn monte_carlo_is_seeded_and_scales() {
        let ch = UnitaryChannel(random_unitary(11));
        let u = ComplexMatrix::identity(D);
        let a = haar_mc_fidelity(&ch, &u, 1000, 7).unwrap();
        let b = haar_mc_fidelity(&ch, &u, 1000, 7).unwrap();
        assert_eq!(a, b);
        let big = haar_mc_fidelity(&ch, &u, 16000, 7).unwrap();
        let ratio = a.stderr / big.stderr;
        assert!((ratio - 4.0).abs() < 0.6, "stderr ratio {ratio}");
        let id = haar_mc_fidelity(&UnitaryChannel(u.clone()), &u, 1000, 1).unwrap();
        assert!((id.mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn leakage_lowers_fidelity() {
        // Amplitude leaks out of |11⟩ with probability p: the block loses weight.
        let p: f64 = 0.1;
        let ch = FnChannel(|rho: &ComplexMatrix| {
            let k = ComplexMatrix::real_diagonal(&[1.0, 1.0, 1.0, (1.0 - p).sqrt()]);
            let out = &(&k * rho) * &k;
            let leak = 1.0 - out.trace().re;
            Ok((out, leak))
        });
        let tomo = tomography(&ch).unwrap();
        let u = ComplexMatrix::identity(D);
        let f = average_gate_fidelity(&tomo, &u).unwrap();
        let renorm = ChannelTomography {
            outputs: tomo.outputs.iter().map(|o| o.scale_real(1.0 / o.trace().re)).collect(),
            ..tomo.clone()
        };
        assert!(f < 1.0);
        assert!(f <= average_gate_fidelity(&renorm, &u).unwrap());
        assert!(tomo.max_leakage() > 0.0);
        // Only |11⟩ leaks, a quarter of the maximally mixed input.
        assert!((tomo.average_leakage() - p / 4.0).abs() < 1e-14);
    }

    #[test]
    fn choi_of_unitary_is_rank_one_and_trace_preserving() {
        let v = random_unitary(3);
        let tomo = tomography(&UnitaryChannel(v)).unwrap();
        let choi = choi_matrix(&tomo);
        assert!((choi.trace().re - 1.0).abs() < 1e-12);
        assert!(min_eigenvalue(&choi).unwrap() > -1e-10);
        let layout = SpaceLayout::from_dims(&[4, 4]).unwrap();
        let marginal = partial_trace(&choi, &layout, &[0]).unwrap();
        assert!((&marginal - &ComplexMatrix::identity(D).scale_real(0.25)).max_abs() < 1e-12);
        let purity = (&choi * &choi).trace().re;
        assert!((purity - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_unitary_targets() {
        let tomo = tomography(&DepolarizingChannel(0.0)).unwrap();
        assert!(average_gate_fidelity(&tomo, &ComplexMatrix::identity(D).scale_real(2.0)).is_err());
        assert!(average_gate_fidelity(&tomo, &ComplexMatrix::identity(3)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn fidelity_is_phase_invariant_and_bounded(seed in 0u64..10_000, phase in 0.0f64..std::f64::consts::TAU, p in 0.0f64..1.0) {
            let u = random_unitary(seed);
            let v = random_unitary(seed + 1);
            let ch = FnChannel(move |rho: &ComplexMatrix| {
                let (out, _) = UnitaryChannel(v.clone()).apply(rho)?;
                DepolarizingChannel(p).apply(&out)
            });
            let tomo = tomography(&ch).unwrap();
            let f = average_gate_fidelity(&tomo, &u).unwrap();
            let g = average_gate_fidelity(&tomo, &u.scale(C64::from_polar(1.0, phase))).unwrap();
            prop_assert!((f - g).abs() < 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
        }
    }
}
