//! Simultaneous root finding for complex polynomials (Aberth–Ehrlich) with a
//! Newton polish in the unscaled variable.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Smallest accepted |leading coefficient|.
pub const MIN_LEADING: f64 = 1e-9;
const MAX_ITERATIONS: usize = 2000;
/// Moduli closer than this (relative) count as equal when ordering roots.
const MODULUS_TIE: f64 = 1e-9;

/// p(z) = Σ c_n zⁿ by Horner.
pub fn eval(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// (p(z), p'(z)).
fn eval_with_derivative(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Coefficients of `lead · Π (z − r_k)`, lowest degree first.
pub fn expand_from_roots(lead: C64, roots: &[C64]) -> Vec<C64> {
    let mut out = vec![lead];
    for r in roots {
        let mut next = vec![C64::new(0.0, 0.0); out.len() + 1];
        for (i, c) in out.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        out = next;
    }
    out
}

/// Acceptance bound for |p(z)| at a computed root.
pub fn residual_bound(coeffs: &[C64], z: C64) -> f64 {
    let n = coeffs.len().saturating_sub(1) as i32;
    1e-10 * coeffs.iter().map(|c| c.norm()).sum::<f64>() * z.norm().max(1.0).powi(n)
}

/// Sorts by modulus, breaking (near-)ties by phase in (−π, π].
pub fn sort_by_modulus_then_phase(roots: &mut [C64]) {
    roots.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap_or(Ordering::Equal));
    let mut start = 0;
    while start < roots.len() {
        let base = roots[start].norm();
        let mut end = start + 1;
        while end < roots.len() && roots[end].norm() - base <= MODULUS_TIE * base.max(1.0) {
            end += 1;
        }
        roots[start..end].sort_by(|a, b| a.arg().partial_cmp(&b.arg()).unwrap_or(Ordering::Equal));
        start = end;
    }
}

/// All N roots of Σ c_n zⁿ (degree N = len − 1), sorted by modulus then phase.
pub fn characteristic_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    if coeffs.is_empty() {
        return Err(Error::ConfigInvalid("polynomial needs at least one coefficient".into()));
    }
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::ConfigInvalid("non-finite polynomial coefficient".into()));
    }
    let degree = coeffs.len() - 1;
    let lead = coeffs[degree];
    if lead.norm() < MIN_LEADING {
        return Err(Error::LeadingCoefficientZero(lead.norm()));
    }
    if degree == 0 {
        return Ok(Vec::new());
    }

    // Balance: z = s·w with s the geometric mean of the root moduli (or a
    // Cauchy-type bound when the constant term vanishes), monic in w.
    let s = balancing_scale(coeffs);
    let mut scaled = Vec::with_capacity(degree + 1);
    let mut sp = 1.0;
    for c in coeffs {
        scaled.push(c * sp);
        sp *= s;
    }
    let top = scaled[degree];
    for c in scaled.iter_mut() {
        *c /= top;
    }

    let mut w: Vec<C64> = (0..degree)
        .map(|k| C64::from_polar(1.0, TAU * k as f64 / degree as f64 + 0.4))
        .collect();
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let mut max_step: f64 = 0.0;
        for k in 0..degree {
            let (p, dp) = eval_with_derivative(&scaled, w[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: C64 = (0..degree).filter(|&j| j != k).map(|j| (w[k] - w[j]).inv()).sum();
            let step = ratio / (C64::new(1.0, 0.0) - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            w[k] -= step;
            max_step = max_step.max(step.norm() / w[k].norm().max(1e-300));
        }
        if max_step <= 4.0 * f64::EPSILON {
            converged = true;
            break;
        }
    }

    let mut roots: Vec<C64> = w.iter().map(|x| x * s).collect();
    for r in roots.iter_mut() {
        *r = newton_polish(coeffs, *r);
    }
    let all_small = roots.iter().all(|r| eval(coeffs, *r).norm() <= residual_bound(coeffs, *r));
    if !all_small || (!converged && !all_small) {
        return Err(Error::NoConvergence(MAX_ITERATIONS));
    }
    sort_by_modulus_then_phase(&mut roots);
    Ok(roots)
}

fn balancing_scale(coeffs: &[C64]) -> f64 {
    let degree = coeffs.len() - 1;
    let lead = coeffs[degree].norm();
    let c0 = coeffs[0].norm();
    if c0 > 0.0 {
        return (c0 / lead).powf(1.0 / degree as f64);
    }
    let bound = coeffs[..degree]
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(n, c)| (c.norm() / lead).powf(1.0 / (degree - n) as f64))
        .fold(0.0, f64::max);
    if bound > 0.0 {
        bound
    } else {
        1.0
    }
}

/// A few Newton steps, keeping the best point seen.
fn newton_polish(coeffs: &[C64], z0: C64) -> C64 {
    let mut best = z0;
    let mut best_res = eval(coeffs, z0).norm();
    let mut z = z0;
    for _ in 0..5 {
        let (p, dp) = eval_with_derivative(coeffs, z);
        if p.norm() == 0.0 || dp.norm() == 0.0 {
            break;
        }
        z -= p / dp;
        let res = eval(coeffs, z).norm();
        if res < best_res {
            best = z;
            best_res = res;
        } else {
            break;
        }
    }
    best
}
