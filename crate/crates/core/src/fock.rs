//! Single-mode states on a truncated Fock basis |0⟩..|dim−1⟩ and the operator
//! primitives the rest of the crate is built from.
//!
//! Every operation returns a fresh state. The `leakage` of the result is the
//! norm² the operation pushed past the truncation edge; it is not cumulative.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Relative norm² loss above which a displacement is rejected.
pub const LEAKAGE_TOLERANCE: f64 = 1e-8;
/// Norms at or below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-300;
/// Tolerance used when an operation requires a normalized input.
pub const NORMALIZED_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    amplitudes: Vec<C64>,
    leakage: f64,
}

impl FockState {
    /// Wraps raw amplitudes. Rejects an empty vector and non-finite entries.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::ConfigInvalid("state needs at least one amplitude".into()));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::ConfigInvalid("non-finite amplitude".into()));
        }
        Ok(FockState { amplitudes, leakage: 0.0 })
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::number(0, dim)
    }

    /// The number state |n⟩ in a space of dimension `dim` (> n).
    pub fn number(n: usize, dim: usize) -> Self {
        assert!(n < dim, "number state |{n}⟩ does not fit in dim {dim}");
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[n] = C64::new(1.0, 0.0);
        FockState { amplitudes, leakage: 0.0 }
    }

    /// Coherent state |α⟩ cut at `dim`, not renormalized; the missing tail is
    /// reported as leakage.
    pub fn coherent(alpha: C64, dim: usize) -> Self {
        let amplitudes: Vec<C64> = (0..dim).map(|n| coherent_coefficient(alpha, n)).collect();
        let kept: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        FockState { amplitudes, leakage: (1.0 - kept).max(0.0) }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORMALIZED_TOLERANCE
    }

    /// Fails with `NotNormalized` unless ⟨ψ|ψ⟩ = 1 within tolerance.
    pub fn require_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORMALIZED_TOLERANCE {
            return Err(Error::NotNormalized(n));
        }
        Ok(())
    }

    /// Highest index with a non-zero amplitude, if any.
    pub fn top_index(&self) -> Option<usize> {
        self.amplitudes.iter().rposition(|a| a.norm_sqr() > 0.0)
    }

    pub fn normalize(&self) -> Result<FockState> {
        let n = self.norm_sqr();
        if n <= ZERO_NORM {
            return Err(Error::ZeroNorm);
        }
        let s = 1.0 / n.sqrt();
        Ok(FockState {
            amplitudes: self.amplitudes.iter().map(|a| a * s).collect(),
            leakage: 0.0,
        })
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &FockState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch(self.dim(), other.dim()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |⟨a|b⟩|² / (‖a‖² ‖b‖²).
    pub fn fidelity(&self, other: &FockState) -> Result<f64> {
        let ip = self.inner(other)?;
        let d = self.norm_sqr() * other.norm_sqr();
        if d <= ZERO_NORM {
            return Err(Error::ZeroNorm);
        }
        Ok(ip.norm_sqr() / d)
    }

    /// Multiplies every amplitude by `c`.
    pub fn scaled(&self, c: C64) -> FockState {
        FockState {
            amplitudes: self.amplitudes.iter().map(|a| a * c).collect(),
            leakage: 0.0,
        }
    }

    /// self + c·other.
    pub fn add_scaled(&self, c: C64, other: &FockState) -> Result<FockState> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch(self.dim(), other.dim()));
        }
        Ok(FockState {
            amplitudes: self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a + c * b).collect(),
            leakage: 0.0,
        })
    }

    /// Copies the state into a space of dimension `dim`, padding with zeros.
    /// Shrinking drops amplitudes; the lost norm² is reported as leakage.
    pub fn with_dim(&self, dim: usize) -> FockState {
        let mut amplitudes = self.amplitudes.clone();
        let lost: f64 = amplitudes.iter().skip(dim).map(|a| a.norm_sqr()).sum();
        amplitudes.resize(dim, C64::new(0.0, 0.0));
        FockState { amplitudes, leakage: lost }
    }

    /// â†: a_{n+1} ← √(n+1)·a_n. The top amplitude is dropped into leakage.
    pub fn apply_creation(&self) -> FockState {
        let dim = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for n in 0..dim - 1 {
            out[n + 1] = self.amplitudes[n] * ((n + 1) as f64).sqrt();
        }
        let leakage = self.amplitudes[dim - 1].norm_sqr() * dim as f64;
        FockState { amplitudes: out, leakage }
    }

    /// â: a_n ← √(n+1)·a_{n+1}.
    pub fn apply_annihilation(&self) -> FockState {
        let dim = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for (n, slot) in out.iter_mut().enumerate().take(dim.saturating_sub(1)) {
            *slot = self.amplitudes[n + 1] * ((n + 1) as f64).sqrt();
        }
        FockState { amplitudes: out, leakage: 0.0 }
    }

    /// T^n̂: a_n ← Tⁿ·a_n.
    pub fn apply_attenuation(&self, t: f64) -> Result<FockState> {
        check_transmittance(t)?;
        let mut w = 1.0;
        let amplitudes = self
            .amplitudes
            .iter()
            .map(|a| {
                let v = a * w;
                w *= t;
                v
            })
            .collect();
        Ok(FockState { amplitudes, leakage: 0.0 })
    }

    /// D(β)|ψ⟩ using the truncated displacement matrix. Fails when more than
    /// [`LEAKAGE_TOLERANCE`] of the norm² leaves the workspace.
    pub fn displace(&self, beta: C64) -> Result<FockState> {
        if beta == C64::new(0.0, 0.0) {
            return Ok(FockState { amplitudes: self.amplitudes.clone(), leakage: 0.0 });
        }
        let out = displace_amplitudes(beta, &self.amplitudes);
        let before = self.norm_sqr();
        let after: f64 = out.iter().map(|a| a.norm_sqr()).sum();
        let leakage = (before - after).max(0.0);
        if leakage > LEAKAGE_TOLERANCE * before {
            return Err(Error::TruncationOverflow { leakage: leakage / before, dim: self.dim() });
        }
        Ok(FockState { amplitudes: out, leakage })
    }

    /// ⟨β|ψ⟩ = Σ e^{−|β|²/2} (β*)ⁿ/√n! · a_n. The sum is exact for a state
    /// that lives in the truncated space; terms are built in log space so
    /// large |β| does not underflow.
    pub fn coherent_overlap(&self, beta: C64) -> C64 {
        if beta.norm_sqr() == 0.0 {
            return self.amplitudes[0];
        }
        let (r, phi) = beta.to_polar();
        let x = r * r;
        let ln_r = r.ln();
        let mut ln_fact = 0.0;
        let mut acc = C64::new(0.0, 0.0);
        for (n, a) in self.amplitudes.iter().enumerate() {
            if n > 0 {
                ln_fact += (n as f64).ln();
            }
            let ln_mag = -0.5 * x + n as f64 * ln_r - 0.5 * ln_fact;
            if ln_mag < -745.0 {
                continue;
            }
            acc += C64::from_polar(ln_mag.exp(), -(n as f64) * phi) * a;
        }
        acc
    }
}

/// ⟨n|α⟩ for the (infinite) coherent state.
pub fn coherent_coefficient(alpha: C64, n: usize) -> C64 {
    let x = alpha.norm_sqr();
    if x == 0.0 {
        return if n == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    }
    let (r, phi) = alpha.to_polar();
    let ln_mag = -0.5 * x + n as f64 * r.ln() - 0.5 * ln_factorial(n);
    C64::from_polar(ln_mag.exp(), n as f64 * phi)
}

pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// ln k! for k = 0..=n.
pub fn ln_factorial_table(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    for k in 0..=n {
        if k > 1 {
            acc += (k as f64).ln();
        }
        out.push(acc);
    }
    out
}

pub(crate) fn check_transmittance(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::BadTransmittance(t));
    }
    Ok(())
}

/// Workspace dimension that keeps the tail of a state supported on
/// n ≤ `top_index`, displaced by up to `max_displacement`, below ~1e−12.
///
/// D(β)|n⟩ extends to the classical edge (√n + |β|)², so the margin carries a
/// 2|β|√n spread term on top of the coherent-state allowance |β|² + 6|β| + 8.
pub fn workspace_dim(top_index: usize, max_displacement: f64) -> usize {
    let a = max_displacement.abs();
    let spread = 2.0 * a * (top_index as f64).sqrt();
    top_index + 1 + (a * a + 6.0 * a + spread).ceil() as usize + 8
}

/// Dense dim×dim matrix of ⟨m|D(β)|n⟩, row-major.
#[derive(Clone, Debug)]
pub struct DisplacementMatrix {
    dim: usize,
    elements: Vec<C64>,
}

impl DisplacementMatrix {
    pub fn new(beta: C64, dim: usize) -> Self {
        let mut elements = vec![C64::new(0.0, 0.0); dim * dim];
        let (r, phi) = beta.to_polar();
        let x = r * r;
        for k in 0..dim {
            let column = scaled_laguerre(k, x, dim - k);
            let below = C64::from_polar(1.0, k as f64 * phi);
            let above = if k % 2 == 0 { below.conj() } else { -below.conj() };
            for (n, f) in column.iter().enumerate() {
                elements[(n + k) * dim + n] = below * f;
                if k > 0 {
                    elements[n * dim + n + k] = above * f;
                }
            }
        }
        DisplacementMatrix { dim, elements }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.elements[m * self.dim + n]
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        self.elements
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(d, a)| d * a).sum())
            .collect()
    }
}

/// Relative amplitude below which input components are skipped by
/// [`displace_amplitudes`]; their contribution is under f64 resolution.
const NEGLIGIBLE_AMPLITUDE: f64 = 1e-20;

/// D(β)·v in the truncated basis, one diagonal band at a time without
/// storing the matrix. Each band's recurrence stops at the last input index
/// that carries weight, so a state with short support costs O(dim·support).
pub fn displace_amplitudes(beta: C64, v: &[C64]) -> Vec<C64> {
    let dim = v.len();
    let mut out = vec![C64::new(0.0, 0.0); dim];
    let scale = v.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let Some(top) = v.iter().rposition(|a| a.norm() > NEGLIGIBLE_AMPLITUDE * scale) else {
        return out;
    };
    let (r, phi) = beta.to_polar();
    let x = r * r;
    let roots = sqrt_table(dim + 1);
    let mut column = Vec::with_capacity(dim);
    let mut ln_fact_k = 0.0;
    for k in 0..dim {
        if k > 1 {
            ln_fact_k += (k as f64).ln();
        }
        // below the diagonal rows n + k take v[n] with n <= top; above it
        // rows n take v[n + k] with n + k <= top
        let len = (dim - k).min(top + 1);
        scaled_laguerre_into(k, x, len, ln_fact_k, &roots, &mut column);
        let below = C64::from_polar(1.0, k as f64 * phi);
        let above = if k % 2 == 0 { below.conj() } else { -below.conj() };
        for (n, f) in column.iter().enumerate() {
            if *f == 0.0 {
                continue;
            }
            out[n + k] += below * f * v[n];
            if k > 0 && n + k <= top {
                out[n] += above * f * v[n + k];
            }
        }
    }
    out
}

/// √i for i = 0..len.
fn sqrt_table(len: usize) -> Vec<f64> {
    (0..len).map(|i| (i as f64).sqrt()).collect()
}

/// f_n = √(n!/(n+k)!) · x^{k/2} e^{−x/2} L_n^{(k)}(x) for n = 0..len, i.e. the
/// modulus-and-sign part of ⟨n+k|D(β)|n⟩ with x = |β|².
fn scaled_laguerre(k: usize, x: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    scaled_laguerre_into(k, x, len, ln_factorial(k), &sqrt_table(k + len + 1), &mut out);
    out
}

/// Runs the three-term Laguerre recurrence on the normalized values and keeps
/// a separate log-scale so neither the starting value nor intermediate growth
/// over- or underflows. `ln_fact_k` is ln k! and `roots[i]` must hold √i up
/// to k + len.
fn scaled_laguerre_into(k: usize, x: f64, len: usize, ln_fact_k: f64, roots: &[f64], out: &mut Vec<f64>) {
    out.clear();
    if len == 0 {
        return;
    }
    let kf = k as f64;
    let ln_pow = if k == 0 { 0.0 } else { 0.5 * kf * x.ln() };
    let mut ln_scale = ln_pow - 0.5 * x - 0.5 * ln_fact_k;
    const BIG: f64 = 1e150;
    let ln_big = BIG.ln();
    // |g| never exceeds BIG, so below this scale every value underflows.
    let emit = |g: f64, s: f64, factor: f64| {
        if s + ln_big < -745.2 {
            0.0
        } else if factor > 0.0 {
            g * factor
        } else if g == 0.0 {
            0.0
        } else {
            g.signum() * (g.abs().ln() + s).exp()
        }
    };
    let scale_factor = |s: f64| if s > -700.0 { s.exp() } else { 0.0 };
    let mut factor = scale_factor(ln_scale);

    let mut prev = 1.0;
    out.push(emit(prev, ln_scale, factor));
    if len == 1 {
        return;
    }
    let mut cur = (1.0 + kf - x) / roots[k + 1];
    out.push(emit(cur, ln_scale, factor));
    for n in 1..len - 1 {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + kf - x) * cur - roots[n] * roots[n + k] * prev)
            / (roots[n + 1] * roots[n + k + 1]);
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            prev /= BIG;
            cur /= BIG;
            ln_scale += ln_big;
            factor = scale_factor(ln_scale);
        }
        out.push(emit(cur, ln_scale, factor));
    }
}
