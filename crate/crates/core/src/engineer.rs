//! Conditional-measurement synthesis of a finite superposition of number
//! states.
//!
//! A target Σ C_n|n⟩ factors as (C_N/√N!) Π_k (â† − β_k*)|0⟩ where the β_k*
//! are the roots of Σ (C_n/√n!) zⁿ. Each factor is realized by a displaced
//! photon-addition step: mix the signal with a single-photon ancilla on a
//! beam splitter of amplitude transmittance T and keep the run when the
//! ancilla port registers no photon, which applies R·â†·T^n̂ to the signal
//! (R = √(1 − T²)). The chain
//!
//! D(α_{N+1}) â†T^n̂ D(α_N) ⋯ â†T^n̂ D(α_1)|0⟩
//!
//! reproduces the target for
//! α_{N+1} = β_N, α_k = T^{N−k+1}(β_{k−1} − β_k) for 2 ≤ k ≤ N and
//! α_1 = −Σ_{l=1}^{N} T^{−l} α_{l+1}.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ln_factorial, ln_factorial_table, workspace_dim, FockState, LEAKAGE_TOLERANCE, ZERO_NORM};
use crate::io::{complex_vec, f17};
use crate::par::Exec;
use crate::roots::{characteristic_roots, eval, sort_by_modulus_then_phase, MIN_LEADING};

/// Oracle fidelity below 1 − this rejects a recipe.
pub const VERIFICATION_TOLERANCE: f64 = 1e-6;
/// Golden-section stopping width in T.
pub const T_RESOLUTION: f64 = 1e-4;
const DIM_RETRIES: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    /// Normalized target amplitudes C_0..C_N.
    #[serde(with = "complex_vec")]
    pub coeffs: Vec<C64>,
    /// β_1..β_N.
    #[serde(with = "complex_vec")]
    pub roots: Vec<C64>,
    /// α_1..α_{N+1}.
    #[serde(with = "complex_vec")]
    pub alphas: Vec<C64>,
    #[serde(with = "f17")]
    pub transmittance: f64,
    #[serde(with = "f17")]
    pub success_prob: f64,
    /// max_k |Σ (C_n/√n!) (β_k*)ⁿ|.
    #[serde(with = "f17")]
    pub residual: f64,
}

impl Recipe {
    /// Number of photon-addition steps.
    pub fn steps(&self) -> usize {
        self.roots.len()
    }

    pub fn reflectance(&self) -> f64 {
        reflectance(self.transmittance)
    }

    /// Structural checks for a recipe read from disk.
    pub fn validate(&self) -> Result<()> {
        let n = self.roots.len();
        if self.coeffs.len() != n + 1 || self.alphas.len() != n + 1 {
            return Err(Error::ConfigInvalid(format!(
                "recipe with {n} roots needs {} coeffs and alphas, got {} and {}",
                n + 1,
                self.coeffs.len(),
                self.alphas.len()
            )));
        }
        check_open_transmittance(self.transmittance)?;
        Ok(())
    }

    /// Largest coherent amplitude the chain passes through.
    pub fn max_displacement(&self) -> f64 {
        let t = self.transmittance;
        let mut mu = C64::new(0.0, 0.0);
        let mut max = 0.0f64;
        for (k, a) in self.alphas.iter().enumerate() {
            mu = if k == 0 { *a } else { mu * t + a };
            max = max.max(mu.norm()).max(a.norm());
        }
        max
    }

    /// Workspace dimension for simulating this recipe.
    pub fn workspace_dim(&self) -> usize {
        workspace_dim(self.steps(), self.max_displacement())
    }
}

pub fn reflectance(t: f64) -> f64 {
    (1.0 - t * t).max(0.0).sqrt()
}

fn check_open_transmittance(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::BadTransmittance(t));
    }
    Ok(())
}

/// C_n/√n!, the coefficients of the polynomial whose roots are the β_k*.
pub fn creation_polynomial(coeffs: &[C64]) -> Vec<C64> {
    coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| c * (-0.5 * ln_factorial(n)).exp())
        .collect()
}

/// β_1..β_N for the target amplitudes, ordered by modulus then phase.
pub fn target_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let lead = *coeffs.last().ok_or_else(|| Error::ConfigInvalid("empty target".into()))?;
    if lead.norm() < MIN_LEADING {
        return Err(Error::LeadingCoefficientZero(lead.norm()));
    }
    let poly = creation_polynomial(coeffs);
    let top = *poly.last().expect("non-empty");
    let monic: Vec<C64> = poly.iter().map(|c| c / top).collect();
    let mut betas: Vec<C64> = characteristic_roots(&monic)?.into_iter().map(|z| z.conj()).collect();
    sort_by_modulus_then_phase(&mut betas);
    Ok(betas)
}

/// max_k |Σ (C_n/√n!)(β_k*)ⁿ|.
pub fn root_residual(coeffs: &[C64], betas: &[C64]) -> f64 {
    let poly = creation_polynomial(coeffs);
    betas.iter().map(|b| eval(&poly, b.conj()).norm()).fold(0.0, f64::max)
}

/// α_1..α_{N+1} for roots β_1..β_N at transmittance T ∈ (0, 1).
pub fn displacement_parameters(betas: &[C64], t: f64) -> Result<Vec<C64>> {
    check_open_transmittance(t)?;
    let n = betas.len();
    let mut alphas = vec![C64::new(0.0, 0.0); n + 1];
    if n == 0 {
        return Ok(alphas);
    }
    alphas[n] = betas[n - 1];
    for k in 2..=n {
        alphas[k - 1] = (betas[k - 2] - betas[k - 1]) * t.powi((n - k + 1) as i32);
    }
    alphas[0] = -(1..=n).map(|l| alphas[l] * t.powi(-(l as i32))).sum::<C64>();
    Ok(alphas)
}

/// Coherent amplitudes μ_1..μ_N entering each attenuation step:
/// μ_1 = α_1, μ_{k+1} = Tμ_k + α_{k+1}.
pub fn coherent_offsets(alphas: &[C64], t: f64) -> Vec<C64> {
    let n = alphas.len().saturating_sub(1);
    let mut out = Vec::with_capacity(n);
    let mut mu = alphas[0];
    for k in 0..n {
        out.push(mu);
        mu = mu * t + alphas[k + 1];
    }
    out
}

/// ln P for the ideal chain, evaluated without truncation:
///
/// P = R^{2N} T^{N(N−1)} N!/|C_N|² · exp(−R² Σ_k |μ_k|²)
///
/// for a normalized target. Tracking the chain state as g(â†)e^{μâ†}|0⟩,
/// every attenuation scales the leading coefficient of g by T^{deg g} and
/// each displacement contributes exp((|Tμ|² − |Tμ + α|²)/2) to the norm.
pub fn ln_success_probability(coeffs: &[C64], alphas: &[C64], t: f64) -> f64 {
    let n = coeffs.len() - 1;
    if n == 0 {
        return 0.0;
    }
    let r2 = 1.0 - t * t;
    let nf = n as f64;
    let mu_sum: f64 = coherent_offsets(alphas, t).iter().map(|m| m.norm_sqr()).sum();
    nf * r2.ln() + nf * (nf - 1.0) * t.ln() + ln_factorial(n) - coeffs[n].norm_sqr().ln() - r2 * mu_sum
}

/// Closed-form success probability at transmittance `t` (see
/// [`ln_success_probability`]).
pub fn success_probability_closed_form(coeffs: &[C64], betas: &[C64], t: f64) -> Result<f64> {
    let alphas = displacement_parameters(betas, t)?;
    Ok(ln_success_probability(coeffs, &alphas, t).exp())
}

/// `lo:hi:step` scan for the transmittance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for TGrid {
    fn default() -> Self {
        TGrid { lo: 0.5, hi: 0.999, step: 0.001 }
    }
}

impl TGrid {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lo > 0.0 && self.lo < self.hi && self.hi < 1.0 && self.step > 0.0 && self.step.is_finite();
        if !ok {
            return Err(Error::ConfigInvalid(format!(
                "transmittance grid needs 0 < lo < hi < 1 and step > 0, got {}:{}:{}",
                self.lo, self.hi, self.step
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| (self.lo + i as f64 * self.step).min(self.hi)).collect()
    }
}

impl std::str::FromStr for TGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::ConfigInvalid(format!("bad t-grid {s:?}, expected lo:hi:step")))?;
        let [lo, hi, step] = parts[..] else {
            return Err(Error::ConfigInvalid(format!("bad t-grid {s:?}, expected lo:hi:step")));
        };
        let g = TGrid { lo, hi, step };
        g.validate()?;
        Ok(g)
    }
}

/// Maximizes `f` on [lo, hi] by golden-section search down to `tol`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Transmittance maximizing the success probability: grid scan, then golden
/// section around the best grid point. Returns (T*, P(T*)).
pub fn optimize_transmittance(coeffs: &[C64], grid: TGrid) -> Result<(f64, f64)> {
    optimize_transmittance_with(coeffs, grid, Exec::default())
}

pub fn optimize_transmittance_with(coeffs: &[C64], grid: TGrid, exec: Exec) -> Result<(f64, f64)> {
    grid.validate()?;
    let coeffs = normalized(coeffs)?;
    let betas = target_roots(&coeffs)?;
    let objective = |t: f64| -> f64 {
        match displacement_parameters(&betas, t) {
            Ok(a) => ln_success_probability(&coeffs, &a, t),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let points = grid.points();
    let values = exec.map(points.len(), |i| objective(points[i]));
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let (mut t_star, mut ln_p) = (points[best], values[best]);
    let lo = (t_star - grid.step).max(grid.lo);
    let hi = (t_star + grid.step).min(grid.hi);
    if hi - lo > T_RESOLUTION {
        let (t, v) = golden_section_max(objective, lo, hi, T_RESOLUTION);
        if v > ln_p {
            t_star = t;
            ln_p = v;
        }
    }
    Ok((t_star, ln_p.exp()))
}

fn normalized(coeffs: &[C64]) -> Result<Vec<C64>> {
    Ok(FockState::new(coeffs.to_vec())?.normalize()?.into_amplitudes())
}

/// The ideal chain with prefactor R^N, or with the `omit`-th â† (1-based,
/// counted from the D(α_1) end) removed and prefactor R^{N−1}.
pub fn operator_chain(recipe: &Recipe, dim: usize, omit: Option<usize>) -> Result<FockState> {
    let n = recipe.steps();
    let t = recipe.transmittance;
    let mut state = FockState::vacuum(dim).displace(recipe.alphas[0])?;
    for k in 1..=n {
        state = state.apply_attenuation(t)?;
        if omit != Some(k) {
            let before = state.norm_sqr();
            state = state.apply_creation();
            if state.leakage() > LEAKAGE_TOLERANCE * before.max(ZERO_NORM) {
                return Err(Error::TruncationOverflow { leakage: state.leakage() / before, dim });
            }
        }
        state = state.displace(recipe.alphas[k])?;
    }
    let power = if omit.is_some() { n.saturating_sub(1) } else { n };
    Ok(state.scaled(C64::new(recipe.reflectance().powi(power as i32), 0.0)))
}

/// (C_N/√N!)·Π_k (â† − β_k*)|0⟩ built with ladder operators.
pub fn product_form_state(coeffs: &[C64], betas: &[C64], dim: usize) -> Result<FockState> {
    let mut state = FockState::vacuum(dim);
    for b in betas {
        state = state.apply_creation().add_scaled(-b.conj(), &state)?;
    }
    let n = betas.len();
    let lead = coeffs[n] * (-0.5 * ln_factorial(n)).exp();
    Ok(state.scaled(lead))
}

/// Two-mode pure state over signal |p⟩ ⊗ ancilla |q⟩, signal-major.
#[derive(Clone, Debug)]
pub struct TwoModeState {
    pub signal_dim: usize,
    pub ancilla_dim: usize,
    pub amplitudes: Vec<C64>,
}

impl TwoModeState {
    pub fn product(signal: &FockState, ancilla: &FockState) -> Self {
        let (ds, da) = (signal.dim(), ancilla.dim());
        let mut amplitudes = vec![C64::new(0.0, 0.0); ds * da];
        for (p, s) in signal.amplitudes().iter().enumerate() {
            for (q, a) in ancilla.amplitudes().iter().enumerate() {
                amplitudes[p * da + q] = s * a;
            }
        }
        TwoModeState { signal_dim: ds, ancilla_dim: da, amplitudes }
    }

    pub fn get(&self, p: usize, q: usize) -> C64 {
        self.amplitudes[p * self.ancilla_dim + q]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Unnormalized signal state left after the ancilla is found in |q⟩.
    pub fn project_ancilla(&self, q: usize) -> Vec<C64> {
        (0..self.signal_dim).map(|p| self.get(p, q)).collect()
    }
}

/// ⟨p, q|U|n, m⟩ for the beam splitter â† → Tâ† − R b̂†, b̂† → Râ† + T b̂†,
/// read off the binomial expansion of
/// (Tâ† − R b̂†)ⁿ (Râ† + T b̂†)^m |00⟩ / √(n! m!).
fn beam_splitter_element(n: usize, m: usize, p: usize, q: usize, t: f64, ln_fact: &[f64]) -> f64 {
    if p + q != n + m {
        return 0.0;
    }
    let r = reflectance(t);
    let ln_binom = |a: usize, b: usize| ln_fact[a] - ln_fact[b] - ln_fact[a - b];
    let norm = 0.5 * (ln_fact[p] + ln_fact[q] - ln_fact[n] - ln_fact[m]);
    let mut sum = 0.0;
    // i photons of the signal and j of the ancilla leave through the signal port
    for j in 0..=m.min(p) {
        let i = p - j;
        if i > n {
            continue;
        }
        let sign = if (n - i) % 2 == 1 { -1.0 } else { 1.0 };
        let mag = (ln_binom(n, i) + ln_binom(m, j) + norm).exp();
        sum += sign * mag * t.powi((i + m - j) as i32) * r.powi((n - i + j) as i32);
    }
    sum
}

/// Full two-mode output of the beam splitter. The output space holds every
/// photon number the input can reach, so the map is exact.
pub fn beam_splitter(input: &TwoModeState, t: f64) -> Result<TwoModeState> {
    check_open_transmittance(t)?;
    let total = input.signal_dim + input.ancilla_dim - 1;
    let ln_fact = ln_factorial_table(total);
    let mut out = TwoModeState {
        signal_dim: total,
        ancilla_dim: total,
        amplitudes: vec![C64::new(0.0, 0.0); total * total],
    };
    for n in 0..input.signal_dim {
        for m in 0..input.ancilla_dim {
            let amp = input.get(n, m);
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            for p in 0..=n + m {
                let q = n + m - p;
                out.amplitudes[p * total + q] += amp * beam_splitter_element(n, m, p, q, t, &ln_fact);
            }
        }
    }
    Ok(out)
}

/// Signal amplitudes of the beam-splitter output with the ancilla found in
/// |q⟩, i.e. (⟨q|_b U)|input⟩, over signal photon numbers 0..signal+ancilla−1.
pub fn beam_splitter_projected(input: &TwoModeState, t: f64, q: usize) -> Result<Vec<C64>> {
    check_open_transmittance(t)?;
    let total = input.signal_dim + input.ancilla_dim - 1;
    let ln_fact = ln_factorial_table(total + q);
    let mut out = vec![C64::new(0.0, 0.0); total];
    for n in 0..input.signal_dim {
        for m in 0..input.ancilla_dim {
            let amp = input.get(n, m);
            if amp.norm_sqr() == 0.0 || n + m < q {
                continue;
            }
            let p = n + m - q;
            if p < total {
                out[p] += amp * beam_splitter_element(n, m, p, q, t, &ln_fact);
            }
        }
    }
    Ok(out)
}

/// One conditional photon addition: signal ⊗ |1⟩, beam splitter, ancilla
/// found in |0⟩. Returns the unnormalized conditional signal (in the input
/// dimension) and the post-selection probability.
pub fn conditional_step(signal: &FockState, t: f64) -> Result<(FockState, f64)> {
    let dim = signal.dim();
    let input = TwoModeState::product(signal, &FockState::number(1, 2));
    let projected = beam_splitter_projected(&input, t, 0)?;
    let kept = projected[..dim].to_vec();
    let lost: f64 = projected[dim..].iter().map(|a| a.norm_sqr()).sum();
    let total = input.norm_sqr();
    let prob_kept: f64 = kept.iter().map(|a| a.norm_sqr()).sum();
    if lost > LEAKAGE_TOLERANCE * (prob_kept + lost).max(ZERO_NORM) {
        return Err(Error::TruncationOverflow { leakage: lost / (prob_kept + lost), dim });
    }
    Ok((FockState::new(kept)?, (prob_kept + lost) / total))
}

/// Runs the recipe through the two-mode oracle. Returns the normalized
/// output and the product of all post-selection probabilities.
pub fn simulate_recipe(recipe: &Recipe, dim: usize) -> Result<(FockState, f64)> {
    recipe.validate()?;
    if dim < recipe.steps() + 1 {
        return Err(Error::ConfigInvalid(format!("dim {dim} cannot hold {} photons", recipe.steps())));
    }
    let t = recipe.transmittance;
    let mut state = FockState::vacuum(dim).displace(recipe.alphas[0])?.normalize()?;
    let mut probability = 1.0;
    for k in 1..=recipe.steps() {
        let (unnormalized, p) = conditional_step(&state, t)?;
        if p < ZERO_NORM {
            return Err(Error::ZeroProbability(p, k));
        }
        probability *= p;
        state = unnormalized.normalize()?.displace(recipe.alphas[k])?;
    }
    Ok((state.normalize()?, probability))
}

pub fn success_probability(recipe: &Recipe, dim: usize) -> Result<f64> {
    simulate_recipe(recipe, dim).map(|(_, p)| p)
}

/// ‖R^N D(α_{N+1}) â†T^n̂ ⋯ D(α_1)|0⟩‖², the operator-chain route to the
/// success probability.
pub fn success_probability_chain(recipe: &Recipe, dim: usize) -> Result<f64> {
    recipe.validate()?;
    Ok(operator_chain(recipe, dim, None)?.norm_sqr())
}

/// Fidelity of the oracle output with the recipe's target.
pub fn oracle_fidelity(recipe: &Recipe, dim: usize) -> Result<(f64, f64)> {
    let (out, p) = simulate_recipe(recipe, dim)?;
    let target = FockState::new(recipe.coeffs.clone())?.with_dim(dim);
    Ok((target.fidelity(&out)?, p))
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlanOptions {
    /// Use this transmittance instead of optimizing.
    pub fixed_t: Option<f64>,
    pub t_grid: TGrid,
    /// Override the automatic workspace dimension.
    pub dim: Option<usize>,
}

/// Full synthesis: roots, transmittance, displacements, oracle verification.
pub fn plan(target: &FockState, options: &PlanOptions) -> Result<Recipe> {
    target.require_normalized()?;
    let top = target.top_index().ok_or(Error::ZeroNorm)?;
    let coeffs = target.amplitudes()[..=top].to_vec();
    let betas = target_roots(&coeffs)?;
    let transmittance = match options.fixed_t {
        Some(t) => {
            check_open_transmittance(t)?;
            t
        }
        None if betas.is_empty() => options.t_grid.lo,
        None => optimize_transmittance(&coeffs, options.t_grid)?.0,
    };
    let alphas = displacement_parameters(&betas, transmittance)?;
    let mut recipe = Recipe {
        residual: root_residual(&coeffs, &betas),
        coeffs,
        roots: betas,
        alphas,
        transmittance,
        success_prob: 1.0,
    };
    let (fidelity, probability) = verify(&recipe, options.dim)?;
    if fidelity < 1.0 - VERIFICATION_TOLERANCE {
        return Err(Error::VerificationFailed(fidelity));
    }
    recipe.success_prob = probability;
    Ok(recipe)
}

/// Oracle fidelity and probability, growing the workspace on truncation.
fn verify(recipe: &Recipe, dim: Option<usize>) -> Result<(f64, f64)> {
    if let Some(d) = dim {
        return oracle_fidelity(recipe, d);
    }
    let mut d = recipe.workspace_dim();
    for attempt in 0..=DIM_RETRIES {
        match oracle_fidelity(recipe, d) {
            Err(Error::TruncationOverflow { .. }) if attempt < DIM_RETRIES => d += d / 2,
            other => return other,
        }
    }
    unreachable!()
}

/// Workspace dimension that holds the recipe's chain without overflow.
pub fn chain_dim(recipe: &Recipe) -> Result<usize> {
    let mut d = recipe.workspace_dim();
    for _ in 0..DIM_RETRIES {
        match operator_chain(recipe, d, None) {
            Err(Error::TruncationOverflow { .. }) => d += d / 2,
            Err(e) => return Err(e),
            Ok(_) => return Ok(d),
        }
    }
    Ok(d)
}

/// Table with columns k, |β_k|, φ_β, |α_k|, φ_α (β_k = |β_k|e^{iφ_β},
/// α_k = |α_k|e^{iφ_α}), three decimals.
pub fn recipe_table(recipe: &Recipe) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "N = {}, T = {:.3}, success probability = {:.3e}",
        recipe.steps(),
        recipe.transmittance,
        recipe.success_prob
    );
    let _ = writeln!(out, "{:>3} {:>9} {:>9} {:>9} {:>9}", "k", "|beta|", "phi_beta", "|alpha|", "phi_alpha");
    for (k, a) in recipe.alphas.iter().enumerate() {
        let beta = recipe
            .roots
            .get(k)
            .map(|b| format!("{:>9.3} {:>9.3}", b.norm(), b.arg()))
            .unwrap_or_else(|| format!("{:>9} {:>9}", "", ""));
        let _ = writeln!(out, "{:>3} {} {:>9.3} {:>9.3}", k + 1, beta, a.norm(), a.arg());
    }
    out
}
