//! Imperfect zero-photon detection.
//!
//! A detector of efficiency η is a perfect detector behind a beam splitter
//! that feeds an environment mode; its Langevin operator L̂ has
//! ⟨L̂L̂†⟩ = 1 − η in the vacuum and distinct L̂'s are uncorrelated. Keeping
//! terms up to first order in 1 − η, a run that reports "no photon"
//! everywhere leaves the signal in a mixture of the ideal chain (branch 0)
//! and N branches where the k-th ancilla photon went into the k-th
//! environment instead of the signal (the k-th â† is missing).

use crate::engineer::{chain_dim, operator_chain, Recipe};
use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::par::Exec;

/// Branches with more than this many absorbed photons are dropped (they
/// carry weight (1 − η)² or smaller).
pub const MAX_ABSORPTIONS: usize = 1;
/// Below this efficiency the first-order expansion is not trusted.
pub const TRUSTED_ETA_MIN: f64 = 0.9;

#[derive(Clone, Debug)]
pub struct LossBranches {
    /// R^N · D(α_{N+1}) â†T^n̂ ⋯ D(α_1)|0⟩, unnormalized.
    pub ideal: FockState,
    /// Entry k − 1 is the chain with the k-th â† removed, times R^{N−1}.
    pub absorbed: Vec<FockState>,
    pub eta: f64,
}

impl LossBranches {
    pub fn len(&self) -> usize {
        self.absorbed.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Environment mode each branch leaves excited; `None` for branch 0.
    /// Distinct labels mean the branches are orthogonal once the
    /// environment is traced out.
    pub fn environment_labels(&self) -> Vec<Option<usize>> {
        std::iter::once(None).chain((1..=self.absorbed.len()).map(Some)).collect()
    }

    /// Σ_k ‖φ_k‖² / ‖φ_0‖².
    pub fn absorbed_weight_ratio(&self) -> f64 {
        let total: f64 = self.absorbed.iter().map(|b| b.norm_sqr()).sum();
        total / self.ideal.norm_sqr()
    }

    pub fn is_trusted(&self) -> bool {
        self.eta >= TRUSTED_ETA_MIN
    }
}

pub fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::BadEta(eta));
    }
    Ok(())
}

/// Builds the N + 1 branches in a workspace of dimension `dim`.
pub fn branch_states(recipe: &Recipe, dim: usize, eta: f64) -> Result<LossBranches> {
    branch_states_with(recipe, dim, eta, Exec::default())
}

pub fn branch_states_with(recipe: &Recipe, dim: usize, eta: f64, exec: Exec) -> Result<LossBranches> {
    check_eta(eta)?;
    recipe.validate()?;
    let ideal = operator_chain(recipe, dim, None)?;
    let absorbed = exec.try_map(recipe.steps(), |i| operator_chain(recipe, dim, Some(i + 1)))?;
    Ok(LossBranches { ideal, absorbed, eta })
}

/// F = ⟨Ψ|ρ|Ψ⟩ for the branch mixture
/// ρ ∝ |φ_0⟩⟨φ_0| + (1 − η) Σ_k |φ_k⟩⟨φ_k|.
pub fn fidelity_from_branches(target: &FockState, branches: &LossBranches) -> Result<f64> {
    let ideal_norm = branches.ideal.norm_sqr();
    let overlap = target.with_dim(branches.ideal.dim()).inner(&branches.ideal)?.norm_sqr();
    let absorbed: f64 = branches.absorbed.iter().map(|b| b.norm_sqr()).sum();
    let weight = 1.0 - branches.eta;
    Ok(overlap / (ideal_norm + weight * absorbed))
}

/// Fidelity of the lossy chain with the recipe's target at efficiency η.
pub fn fidelity_with_loss(recipe: &Recipe, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let target = target_state(recipe)?;
    let branches = branch_states(recipe, chain_dim(recipe)?, eta)?;
    fidelity_from_branches(&target, &branches)
}

/// F for each η, sharing one set of branch states.
pub fn fidelity_sweep(recipe: &Recipe, etas: &[f64]) -> Result<Vec<f64>> {
    for &eta in etas {
        check_eta(eta)?;
    }
    let target = target_state(recipe)?;
    let mut branches = branch_states(recipe, chain_dim(recipe)?, 1.0)?;
    etas.iter()
        .map(|&eta| {
            branches.eta = eta;
            fidelity_from_branches(&target, &branches)
        })
        .collect()
}

fn target_state(recipe: &Recipe) -> Result<FockState> {
    FockState::new(recipe.coeffs.clone())?.normalize()
}

/// `eta,fidelity` rows.
pub fn sweep_csv(etas: &[f64], fidelities: &[f64]) -> String {
    let mut out = String::from("eta,fidelity\n");
    for (e, f) in etas.iter().zip(fidelities) {
        out.push_str(&format!("{},{}\n", crate::io::fmt17(*e), crate::io::fmt17(*f)));
    }
    out
}

/// d F / d η = ratio / (1 + (1 − η)·ratio)², valid when branch 0 is the
/// target up to normalization.
pub fn fidelity_derivative(ratio: f64, eta: f64) -> f64 {
    let d = 1.0 + (1.0 - eta) * ratio;
    ratio / (d * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;
    use crate::engineer::{plan, simulate_recipe, PlanOptions};
    use crate::tsrc::{generate_tsrc, TsrcSpec};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn single_photon_recipe(t: f64) -> Recipe {
        Recipe {
            coeffs: vec![c(0.0), c(1.0)],
            roots: vec![c(0.0)],
            alphas: vec![c(0.0), c(0.0)],
            transmittance: t,
            success_prob: 1.0 - t * t,
            residual: 0.0,
        }
    }

    #[test]
    fn single_step_branches_by_hand() {
        let t = 0.8;
        let b = branch_states(&single_photon_recipe(t), 4, 0.9).unwrap();
        assert_eq!(b.len(), 2);
        assert!((b.ideal.amplitudes()[1] - c(0.6)).norm() < 1e-15);
        assert!((b.absorbed[0].amplitudes()[0] - c(1.0)).norm() < 1e-15);
        // F = R² / (R² + (1 − η))
        let f = fidelity_from_branches(&FockState::number(1, 4), &b).unwrap();
        assert!((f - 0.36 / (0.36 + 0.1)).abs() < 1e-15);
    }

    #[test]
    fn branches_of_a_five_step_recipe() {
        let target = generate_tsrc(&TsrcSpec::new(5, 0.0, 11)).unwrap();
        let r = plan(&target, &PlanOptions::default()).unwrap();
        let dim = chain_dim(&r).unwrap();
        let b = branch_states(&r, dim, 0.95).unwrap();
        assert_eq!(b.len(), 6);
        let labels = b.environment_labels();
        for i in 0..labels.len() {
            for j in 0..i {
                assert_ne!(labels[i], labels[j]);
            }
        }
        let (oracle, _) = simulate_recipe(&r, dim).unwrap();
        let ideal = b.ideal.normalize().unwrap();
        assert!(ideal.fidelity(&oracle).unwrap() >= 1.0 - 1e-10);
        let seq = branch_states_with(&r, dim, 0.95, Exec::Sequential).unwrap();
        assert_eq!(seq.absorbed, b.absorbed);
    }

    #[test]
    fn perfect_detectors_give_unit_fidelity() {
        let target = generate_tsrc(&TsrcSpec::new(4, 0.3, 2)).unwrap();
        let r = plan(&target, &PlanOptions::default()).unwrap();
        assert!((fidelity_with_loss(&r, 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_increases_with_eta() {
        let target = generate_tsrc(&TsrcSpec::new(3, 0.0, 4)).unwrap();
        let r = plan(&target, &PlanOptions::default()).unwrap();
        let etas: Vec<f64> = (0..=10).map(|i| 0.9 + 0.01 * i as f64).collect();
        let f = fidelity_sweep(&r, &etas).unwrap();
        assert!(f.windows(2).all(|w| w[1] > w[0]));
        let csv = sweep_csv(&etas, &f);
        assert!(csv.starts_with("eta,fidelity\n"));
        assert_eq!(csv.lines().count(), 12);
    }

    #[test]
    fn bad_eta_rejected() {
        let r = single_photon_recipe(0.8);
        for eta in [0.0, -0.1, 1.0001, f64::NAN] {
            assert!(matches!(fidelity_with_loss(&r, eta), Err(Error::BadEta(_))));
        }
    }
}
