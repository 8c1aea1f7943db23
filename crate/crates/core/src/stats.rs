//! Photon-counting and phase-space observables of a single-mode state, and the
//! N-scaling ensemble sweep.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::io::{f17, fmt17};
use crate::par::Exec;
use crate::tsrc::{derive_seed, generate_tsrc, EnsembleSpec};

/// ⟨n̂⟩ at or below this makes Q and g²(0) undefined.
pub const VACUUM_MEAN: f64 = 1e-15;
/// |Q| at or below this is classified as Poissonian.
pub const POISSONIAN_DEAD_BAND: f64 = 1e-12;
/// Quadrature standard deviation of the vacuum; anything below is squeezed.
pub const VACUUM_QUADRATURE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub p: Vec<f64>,
    #[serde(with = "f17")]
    pub mean_n: f64,
    /// Standard deviation of n̂.
    #[serde(with = "f17")]
    pub delta_n: f64,
    /// `None` on the vacuum.
    pub mandel_q: Option<f64>,
    pub g2: Option<f64>,
    /// Standard deviation of X₁.
    #[serde(with = "f17")]
    pub x1_var: f64,
    /// Standard deviation of X₂.
    #[serde(with = "f17")]
    pub x2_var: f64,
    #[serde(with = "f17")]
    pub entropy: f64,
}

impl StatsReport {
    pub fn is_squeezed(&self) -> bool {
        self.x1_var.min(self.x2_var) < VACUUM_QUADRATURE
    }

    pub fn statistics(&self) -> Option<PhotonStatistics> {
        self.mandel_q.map(PhotonStatistics::classify)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhotonStatistics {
    SubPoissonian,
    Poissonian,
    SuperPoissonian,
}

impl PhotonStatistics {
    pub fn classify(q: f64) -> Self {
        if q < -POISSONIAN_DEAD_BAND {
            PhotonStatistics::SubPoissonian
        } else if q > POISSONIAN_DEAD_BAND {
            PhotonStatistics::SuperPoissonian
        } else {
            PhotonStatistics::Poissonian
        }
    }
}

/// P_n = |a_n|².
pub fn photon_distribution(state: &FockState) -> Result<Vec<f64>> {
    state.require_normalized()?;
    Ok(state.amplitudes().iter().map(|a| a.norm_sqr()).collect())
}

fn mean_of(p: &[f64]) -> f64 {
    p.iter().enumerate().map(|(n, pn)| n as f64 * pn).sum()
}

/// Σ P_n (n − ⟨n̂⟩)², accumulated about the mean.
fn variance_of(p: &[f64], mean: f64) -> f64 {
    p.iter()
        .enumerate()
        .map(|(n, pn)| {
            let d = n as f64 - mean;
            d * d * pn
        })
        .sum()
}

/// (⟨n̂⟩, ⟨Δn̂⟩) with ⟨Δn̂⟩ the standard deviation.
pub fn mean_and_variance(state: &FockState) -> Result<(f64, f64)> {
    let p = photon_distribution(state)?;
    let mean = mean_of(&p);
    Ok((mean, variance_of(&p, mean).sqrt()))
}

/// Q = (Δn̂² − ⟨n̂⟩)/⟨n̂⟩.
pub fn mandel_q(state: &FockState) -> Result<f64> {
    let p = photon_distribution(state)?;
    mandel_from(&p)
}

fn mandel_from(p: &[f64]) -> Result<f64> {
    let mean = mean_of(p);
    if mean <= VACUUM_MEAN {
        return Err(Error::VacuumUndefined(mean));
    }
    Ok((variance_of(p, mean) - mean) / mean)
}

/// g²(0) = (⟨n̂²⟩ − ⟨n̂⟩)/⟨n̂⟩².
pub fn g2_zero(state: &FockState) -> Result<f64> {
    let p = photon_distribution(state)?;
    g2_from(&p)
}

fn g2_from(p: &[f64]) -> Result<f64> {
    let mean = mean_of(p);
    if mean <= VACUUM_MEAN {
        return Err(Error::VacuumUndefined(mean));
    }
    // Σ n(n−1) P_n is ⟨n̂²⟩ − ⟨n̂⟩ without the cancellation
    let factorial_moment: f64 = p
        .iter()
        .enumerate()
        .map(|(n, pn)| (n as f64) * (n as f64 - 1.0) * pn)
        .sum();
    Ok(factorial_moment / (mean * mean))
}

/// ⟨â⟩ and ⟨â²⟩.
fn ladder_moments(state: &FockState) -> (C64, C64) {
    let a = state.amplitudes();
    let mut first = C64::new(0.0, 0.0);
    let mut second = C64::new(0.0, 0.0);
    for n in 1..a.len() {
        first += a[n - 1].conj() * a[n] * (n as f64).sqrt();
        if n >= 2 {
            second += a[n - 2].conj() * a[n] * ((n * (n - 1)) as f64).sqrt();
        }
    }
    (first, second)
}

/// (ΔX₁, ΔX₂) for X₁ = (â + â†)/2 and X₂ = (â − â†)/2i.
///
/// ⟨X₁²⟩ = (2 Re⟨â²⟩ + 2⟨n̂⟩ + 1)/4, ⟨X₂²⟩ = (−2 Re⟨â²⟩ + 2⟨n̂⟩ + 1)/4,
/// ⟨X₁⟩ = Re⟨â⟩, ⟨X₂⟩ = Im⟨â⟩.
pub fn quadrature_variances(state: &FockState) -> Result<(f64, f64)> {
    let p = photon_distribution(state)?;
    let mean = mean_of(&p);
    let (a1, a2) = ladder_moments(state);
    let x1_sq = (2.0 * a2.re + 2.0 * mean + 1.0) / 4.0;
    let x2_sq = (-2.0 * a2.re + 2.0 * mean + 1.0) / 4.0;
    let v1 = (x1_sq - a1.re * a1.re).max(0.0);
    let v2 = (x2_sq - a1.im * a1.im).max(0.0);
    Ok((v1.sqrt(), v2.sqrt()))
}

/// S = −Σ P_n ln P_n over every index, with 0·ln 0 = 0.
pub fn shannon_entropy(state: &FockState) -> Result<f64> {
    let p = photon_distribution(state)?;
    Ok(entropy_of(&p))
}

fn entropy_of(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

pub fn stats_report(state: &FockState) -> Result<StatsReport> {
    let p = photon_distribution(state)?;
    let mean = mean_of(&p);
    let delta = variance_of(&p, mean).sqrt();
    let (x1, x2) = quadrature_variances(state)?;
    Ok(StatsReport {
        mandel_q: mandel_from(&p).ok(),
        g2: g2_from(&p).ok(),
        entropy: entropy_of(&p),
        mean_n: mean,
        delta_n: delta,
        x1_var: x1,
        x2_var: x2,
        p,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Window {
    /// Square |Re β|, |Im β| ≤ 1.5(√⟨n̂⟩ + 2).
    Auto,
    Explicit { re_min: f64, re_max: f64, im_min: f64, im_max: f64 },
}

impl Window {
    fn resolve(self, state: &FockState) -> Result<(f64, f64, f64, f64)> {
        match self {
            Window::Auto => {
                let (mean, _) = mean_and_variance(state)?;
                let r = 1.5 * (mean.sqrt() + 2.0);
                Ok((-r, r, -r, r))
            }
            Window::Explicit { re_min, re_max, im_min, im_max } => {
                let ok = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite())
                    && re_min < re_max
                    && im_min < im_max;
                if !ok {
                    return Err(Error::ConfigInvalid("husimi window must satisfy min < max".into()));
                }
                Ok((re_min, re_max, im_min, im_max))
            }
        }
    }
}

/// Q(β) sampled at the centres of a resolution × resolution cell grid.
#[derive(Clone, Debug, PartialEq)]
pub struct HusimiGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub resolution: usize,
    /// Row-major with the imaginary axis as the row index.
    pub values: Vec<f64>,
}

impl HusimiGrid {
    pub fn cell_area(&self) -> f64 {
        let r = self.resolution as f64;
        (self.re_max - self.re_min) / r * (self.im_max - self.im_min) / r
    }

    pub fn point(&self, i_re: usize, i_im: usize) -> C64 {
        let r = self.resolution as f64;
        let re = self.re_min + (i_re as f64 + 0.5) * (self.re_max - self.re_min) / r;
        let im = self.im_min + (i_im as f64 + 0.5) * (self.im_max - self.im_min) / r;
        C64::new(re, im)
    }

    /// Midpoint-rule integral of Q over the window.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    /// `re_beta,im_beta,q_value` rows after a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_beta,im_beta,q_value\n");
        for i_im in 0..self.resolution {
            for i_re in 0..self.resolution {
                let b = self.point(i_re, i_im);
                let q = self.values[i_im * self.resolution + i_re];
                let _ = writeln!(out, "{},{},{}", fmt17(b.re), fmt17(b.im), fmt17(q));
            }
        }
        out
    }
}

/// Q(β) = |⟨β|ψ⟩|²/π.
pub fn husimi_value(state: &FockState, beta: C64) -> f64 {
    state.coherent_overlap(beta).norm_sqr() / PI
}

pub fn husimi(state: &FockState, window: Window, resolution: usize) -> Result<HusimiGrid> {
    husimi_with(state, window, resolution, Exec::default())
}

pub fn husimi_with(state: &FockState, window: Window, resolution: usize, exec: Exec) -> Result<HusimiGrid> {
    if resolution == 0 {
        return Err(Error::ConfigInvalid("husimi resolution must be positive".into()));
    }
    let (re_min, re_max, im_min, im_max) = window.resolve(state)?;
    let mut grid = HusimiGrid { re_min, re_max, im_min, im_max, resolution, values: Vec::new() };
    let rows = exec.map(resolution, |i_im| {
        (0..resolution)
            .map(|i_re| husimi_value(state, grid.point(i_re, i_im)))
            .collect::<Vec<_>>()
    });
    grid.values = rows.into_iter().flatten().collect();
    Ok(grid)
}

/// Running mean and variance (Welford).
#[derive(Clone, Copy, Debug, Default)]
pub struct Welford {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// NaN when empty.
    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

/// One line of the sweep table. `realization` is −1 for the ensemble mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub realization: i64,
    pub mean_n: f64,
    pub delta_n: f64,
    pub mandel_q: f64,
    pub g2: f64,
    pub x1_var: f64,
    pub x2_var: f64,
    pub entropy: f64,
}

pub const SWEEP_COLUMNS: &str = "n,realization,mean_n,delta_n,mandel_q,g2,x1_var,x2_var,entropy";

impl SweepRow {
    fn single(n: usize, realization: i64, r: &StatsReport) -> Self {
        SweepRow {
            n,
            realization,
            mean_n: r.mean_n,
            delta_n: r.delta_n,
            mandel_q: r.mandel_q.unwrap_or(f64::NAN),
            g2: r.g2.unwrap_or(f64::NAN),
            x1_var: r.x1_var,
            x2_var: r.x2_var,
            entropy: r.entropy,
        }
    }

    fn mean_of(n: usize, reports: &[StatsReport]) -> Self {
        let mut acc = [Welford::default(); 7];
        for r in reports {
            let vals = [
                Some(r.mean_n),
                Some(r.delta_n),
                r.mandel_q,
                r.g2,
                Some(r.x1_var),
                Some(r.x2_var),
                Some(r.entropy),
            ];
            for (w, v) in acc.iter_mut().zip(vals) {
                if let Some(v) = v {
                    w.push(v);
                }
            }
        }
        SweepRow {
            n,
            realization: -1,
            mean_n: acc[0].mean(),
            delta_n: acc[1].mean(),
            mandel_q: acc[2].mean(),
            g2: acc[3].mean(),
            x1_var: acc[4].mean(),
            x2_var: acc[5].mean(),
            entropy: acc[6].mean(),
        }
    }

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            self.realization,
            fmt17(self.mean_n),
            fmt17(self.delta_n),
            fmt17(self.mandel_q),
            fmt17(self.g2),
            fmt17(self.x1_var),
            fmt17(self.x2_var),
            fmt17(self.entropy)
        )
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_COLUMNS);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

/// Stats of every realization of `spec`, in realization order.
pub fn ensemble_reports(spec: &EnsembleSpec, exec: Exec) -> Result<Vec<StatsReport>> {
    if spec.realizations == 0 {
        return Err(Error::ConfigInvalid("realizations must be at least 1".into()));
    }
    exec.try_map(spec.realizations, |j| report_for(spec, j))
}

fn report_for(spec: &EnsembleSpec, j: usize) -> Result<StatsReport> {
    let s = spec.base.with_seed(derive_seed(spec.base.seed, j));
    let state = generate_tsrc(&s).map_err(|e| match e {
        Error::DegenerateDraw { .. } => Error::DegenerateDraw { realization: Some(j) },
        other => other,
    })?;
    stats_report(&state)
}

/// For each N: the single-run row (realization 0) and, when
/// `all_realizations` is set, every other realization, followed by the
/// ensemble-mean row (realization −1).
pub fn scaling_sweep(
    n_values: &[usize],
    template: &EnsembleSpec,
    all_realizations: bool,
    exec: Exec,
) -> Result<Vec<SweepRow>> {
    if n_values.is_empty() {
        return Err(Error::ConfigInvalid("sweep needs at least one N".into()));
    }
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::ConfigInvalid("sweep N values must be strictly ascending".into()));
    }
    if template.realizations == 0 {
        return Err(Error::ConfigInvalid("realizations must be at least 1".into()));
    }
    let per_n = template.realizations;
    let flat = exec.try_map(n_values.len() * per_n, |k| {
        let spec = EnsembleSpec { base: template.base.with_n(n_values[k / per_n]), ..*template };
        report_for(&spec, k % per_n)
    })?;
    let mut rows = Vec::new();
    for (i, &n) in n_values.iter().enumerate() {
        let reports = &flat[i * per_n..(i + 1) * per_n];
        let shown = if all_realizations { per_n } else { 1 };
        for (j, r) in reports.iter().take(shown).enumerate() {
            rows.push(SweepRow::single(n, j as i64, r));
        }
        rows.push(SweepRow::mean_of(n, reports));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsrc::{from_moduli, TsrcSpec};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn superpose(pairs: &[(usize, C64)], dim: usize) -> FockState {
        let mut a = vec![c(0.0, 0.0); dim];
        for &(n, v) in pairs {
            a[n] = v;
        }
        FockState::new(a).unwrap().normalize().unwrap()
    }

    fn random_complex_state(dim: usize, seed: u64) -> FockState {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = (0..dim).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        FockState::new(a).unwrap().normalize().unwrap()
    }

    type Matrix = Vec<Vec<C64>>;

    fn expect(m: &Matrix, psi: &[C64]) -> C64 {
        let mut acc = c(0.0, 0.0);
        for (i, row) in m.iter().enumerate() {
            let mv: C64 = row.iter().zip(psi).map(|(x, y)| x * y).sum();
            acc += psi[i].conj() * mv;
        }
        acc
    }

    fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
        let d = a.len();
        (0..d).map(|i| (0..d).map(|j| (0..d).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
    }

    /// Expectations through explicit number and quadrature matrices, on a
    /// space two levels larger than the state so â↠stays exact.
    fn dense_observables(state: &FockState) -> (f64, f64, f64, f64, f64) {
        let d = state.dim() + 2;
        let psi: Vec<C64> = state.with_dim(d).into_amplitudes();
        let mut a: Matrix = vec![vec![c(0.0, 0.0); d]; d];
        for n in 1..d {
            a[n - 1][n] = c((n as f64).sqrt(), 0.0);
        }
        let ad: Matrix = (0..d).map(|i| (0..d).map(|j| a[j][i].conj()).collect()).collect();
        let num = matmul(&ad, &a);
        let num2 = matmul(&num, &num);
        let x1: Matrix = (0..d).map(|i| (0..d).map(|j| (a[i][j] + ad[i][j]) * 0.5).collect()).collect();
        let x2: Matrix =
            (0..d).map(|i| (0..d).map(|j| (a[i][j] - ad[i][j]) / c(0.0, 2.0)).collect()).collect();
        let n1 = expect(&num, &psi).re;
        let n2 = expect(&num2, &psi).re;
        let v1 = expect(&matmul(&x1, &x1), &psi).re - expect(&x1, &psi).re.powi(2);
        let v2 = expect(&matmul(&x2, &x2), &psi).re - expect(&x2, &psi).re.powi(2);
        (n1, n2, v1.sqrt(), v2.sqrt(), expect(&matmul(&x1, &x1), &psi).re + expect(&matmul(&x2, &x2), &psi).re)
    }

    #[test]
    fn distribution_examples() {
        let p = photon_distribution(&FockState::vacuum(4)).unwrap();
        assert_eq!(p, vec![1.0, 0.0, 0.0, 0.0]);
        let s = superpose(&[(0, c(1.0, 0.0)), (3, c(1.0, 0.0))], 5);
        let p = photon_distribution(&s).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[3] - 0.5).abs() < 1e-15);
        let unnormalized = FockState::new(vec![c(2.0, 0.0)]).unwrap();
        assert!(matches!(photon_distribution(&unnormalized), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn tsrc_distribution_sums_to_one_and_is_seeded() {
        let spec = TsrcSpec::new(10, 0.0, 3);
        let p = photon_distribution(&generate_tsrc(&spec).unwrap()).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p, photon_distribution(&generate_tsrc(&spec).unwrap()).unwrap());
    }

    #[test]
    fn mean_and_variance_examples() {
        let (m, d) = mean_and_variance(&FockState::number(5, 8)).unwrap();
        assert_eq!((m, d), (5.0, 0.0));
        let s = superpose(&[(0, c(1.0, 0.0)), (2, c(1.0, 0.0))], 3);
        let (m, d) = mean_and_variance(&s).unwrap();
        assert!((m - 1.0).abs() < 1e-15 && (d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn number_states() {
        for n in 1..6 {
            let s = FockState::number(n, 10);
            assert_eq!(mandel_q(&s).unwrap(), -1.0);
            let (x1, x2) = quadrature_variances(&s).unwrap();
            let expect = ((2 * n + 1) as f64).sqrt() / 2.0;
            assert!((x1 - expect).abs() < 1e-14 && (x2 - expect).abs() < 1e-14);
            assert_eq!(shannon_entropy(&s).unwrap(), 0.0);
        }
        assert_eq!(g2_zero(&FockState::number(1, 3)).unwrap(), 0.0);
        assert_eq!(quadrature_variances(&FockState::vacuum(3)).unwrap(), (0.5, 0.5));
    }

    #[test]
    fn vacuum_has_no_q() {
        let v = FockState::vacuum(4);
        assert!(matches!(mandel_q(&v), Err(Error::VacuumUndefined(_))));
        assert!(matches!(g2_zero(&v), Err(Error::VacuumUndefined(_))));
        let r = stats_report(&v).unwrap();
        assert_eq!((r.mandel_q, r.g2), (None, None));
    }

    #[test]
    fn coherent_state_is_poissonian() {
        let s = FockState::coherent(C64::from_polar(2.0, 0.4), 64).normalize().unwrap();
        assert!(mandel_q(&s).unwrap().abs() < 1e-6);
        assert!((g2_zero(&s).unwrap() - 1.0).abs() < 1e-6);
        let (x1, x2) = quadrature_variances(&s).unwrap();
        assert!((x1 - 0.5).abs() < 1e-6 && (x2 - 0.5).abs() < 1e-6);
        assert_eq!(PhotonStatistics::classify(0.0), PhotonStatistics::Poissonian);
    }

    #[test]
    fn uniform_distribution_maximizes_entropy() {
        for n in [1usize, 5, 40] {
            let s = from_moduli(&vec![1.0; n + 1], 0.0).unwrap();
            assert!((shannon_entropy(&s).unwrap() - ((n + 1) as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn formula_and_matrix_paths_agree() {
        for seed in 0..20 {
            let dim = 2 + (seed as usize % 7);
            let s = random_complex_state(dim, seed);
            let (n1, n2, v1, v2, x_sum) = dense_observables(&s);
            let r = stats_report(&s).unwrap();
            assert!((r.mean_n - n1).abs() < 1e-12);
            assert!((r.delta_n - (n2 - n1 * n1).sqrt()).abs() < 1e-12);
            assert!((r.g2.unwrap() - (n2 - n1) / (n1 * n1)).abs() < 1e-12);
            assert!((r.x1_var - v1).abs() < 1e-12, "{} vs {}", r.x1_var, v1);
            assert!((r.x2_var - v2).abs() < 1e-12);
            assert!((r.mean_n - (x_sum - 0.5)).abs() < 1e-10);
        }
    }

    #[test]
    fn husimi_examples() {
        let v = FockState::vacuum(10);
        assert!((husimi_value(&v, c(0.0, 0.0)) - 1.0 / PI).abs() < 1e-15);
        let b = c(0.7, -1.1);
        assert!((husimi_value(&v, b) - (-b.norm_sqr()).exp() / PI).abs() < 1e-15);
        let s = random_complex_state(6, 2);
        assert!((husimi_value(&s, c(0.0, 0.0)) - s.amplitudes()[0].norm_sqr() / PI).abs() < 1e-16);
        let g = husimi(&v, Window::Auto, 80).unwrap();
        assert!((g.integral() - 1.0).abs() < 1e-3);
        assert!(husimi(&v, Window::Explicit { re_min: 1.0, re_max: 0.0, im_min: 0.0, im_max: 1.0 }, 5).is_err());
        assert!(husimi(&v, Window::Auto, 0).is_err());
    }

    #[test]
    fn husimi_csv_layout() {
        let g = husimi(&FockState::vacuum(2), Window::Explicit { re_min: -1.0, re_max: 1.0, im_min: -1.0, im_max: 1.0 }, 2)
            .unwrap();
        let csv = g.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "re_beta,im_beta,q_value");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("-5.0000000000000000e-1,-5.0000000000000000e-1,"));
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, 7.0, -3.0];
        let mut w = Welford::default();
        xs.iter().for_each(|&x| w.push(x));
        let m = xs.iter().sum::<f64>() / 5.0;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 4.0;
        assert!((w.mean() - m).abs() < 1e-15 && (w.sample_variance() - v).abs() < 1e-14);
    }

    #[test]
    fn single_realization_sweep() {
        let t = EnsembleSpec::new(TsrcSpec::new(0, 0.0, 11), 1);
        let rows = scaling_sweep(&[5], &t, false, Exec::default()).unwrap();
        assert_eq!(rows.len(), 2);
        let (a, b) = (rows[0], rows[1]);
        assert_eq!(a.realization, 0);
        assert_eq!(b.realization, -1);
        assert_eq!(
            (a.mean_n, a.delta_n, a.mandel_q, a.g2, a.x1_var, a.x2_var, a.entropy),
            (b.mean_n, b.delta_n, b.mandel_q, b.g2, b.x1_var, b.x2_var, b.entropy)
        );
        assert!(scaling_sweep(&[5, 3], &t, false, Exec::default()).is_err());
        assert!(scaling_sweep(&[], &t, false, Exec::default()).is_err());
    }

    #[test]
    fn sweep_is_deterministic_across_strategies() {
        let t = EnsembleSpec::new(TsrcSpec::new(0, 0.0, 4), 6);
        let a = scaling_sweep(&[2, 5, 9], &t, true, Exec::Sequential).unwrap();
        let b = scaling_sweep(&[2, 5, 9], &t, true, Exec::Parallel).unwrap();
        assert_eq!(sweep_csv(&a), sweep_csv(&b));
        assert_eq!(a.len(), 3 * 7);
        assert!(sweep_csv(&a).starts_with(SWEEP_COLUMNS));
    }

    proptest! {
        #[test]
        fn q_and_g2_are_related(seed in 0u64..10_000, dim in 2usize..40) {
            let s = random_complex_state(dim, seed);
            let r = stats_report(&s).unwrap();
            let q = r.mandel_q.unwrap();
            prop_assert!((q - (r.g2.unwrap() - 1.0) * r.mean_n).abs() <= 1e-10);
        }

        #[test]
        fn uncertainty_sum(seed in 0u64..10_000, dim in 1usize..30) {
            let r = stats_report(&random_complex_state(dim, seed)).unwrap();
            prop_assert!(r.x1_var.powi(2) + r.x2_var.powi(2) >= 0.5 - 1e-12);
        }

        #[test]
        fn number_functionals_ignore_phase(seed in 0u64..10_000, n in 1usize..30, theta in -3.0f64..3.0) {
            let a = generate_tsrc(&TsrcSpec::new(n, theta, seed)).unwrap();
            let b = generate_tsrc(&TsrcSpec::new(n, theta + 1.3, seed)).unwrap();
            let (ra, rb) = (stats_report(&a).unwrap(), stats_report(&b).unwrap());
            for (x, y) in ra.p.iter().zip(&rb.p) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
            prop_assert!((ra.mean_n - rb.mean_n).abs() <= 1e-12);
            prop_assert!((ra.delta_n - rb.delta_n).abs() <= 1e-12);
            prop_assert!((ra.mandel_q.unwrap() - rb.mandel_q.unwrap()).abs() <= 1e-12);
            prop_assert!((ra.g2.unwrap() - rb.g2.unwrap()).abs() <= 1e-12);
            prop_assert!((ra.entropy - rb.entropy).abs() <= 1e-12);
            let g = a.scaled(C64::from_polar(1.0, 0.9));
            prop_assert!((stats_report(&g).unwrap().mean_n - ra.mean_n).abs() <= 1e-12);
        }
    }
}
