//! Continuum Fourier transform of the near kernel and its uniformity sweeps.
//!
//! The transform `Khat(y) = int e^{2 pi i x.y} K1(x) dx` is reduced to
//! radial integrals by exact angular integration: expanding the symbol in
//! circular harmonics turns the angular factor into Bessel functions
//! (`int_0^{2pi} e^{i(m a + z cos a)} da = 2 pi i^m J_m(z)`), so each
//! harmonic contributes `int_0^{2/beta} r^{beta-1} chi(beta r) J_|m|(2 pi r
//! rho) dr`. Radial Gauss-Legendre panels are capped at a quarter
//! oscillation wavelength (`1/(4 rho)`) and geometrically graded towards
//! the endpoint singularity `r^{beta-1}`.
//!
//! Cancellation enters through the `m = 0` channel only: there the kernel
//! is integrated in the regularized form (`J_0 - 1`, i.e. `e^{2 pi i x.y} -
//! 1`) with the radial mass `int r^{beta-1} chi dr` added back exactly, so
//! the value at `y = 0` vanishes identically for mean-zero symbols and the
//! non-cancelling contrast growth is captured in closed form.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use serde::Serialize;
use std::io::Write;
use thiserror::Error;

use crate::fftutil::fft_nd;
use crate::field::{lq_norm, Field};
use crate::kernel::{KernelSpec, SphereSymbol};
use crate::operator::{
    alias_free_radius, apply_t1, sample_kernel_lattice, KernelPart, OperatorError, QuadraturePlan,
};
use crate::quad::{gauss_legendre, Accumulator};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("symbol transform requires 0 < beta < 1, got {0}")]
    OutOfValidity(f64),
    #[error("symbol transform implemented for n in {{1, 2}}, got {0}")]
    UnsupportedDimension(usize),
    #[error("empty input grid")]
    EmptyGrid,
    #[error("non-finite frequency input")]
    NonFinite,
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Frequency regime of the case split in the symbol bound proof.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `|y| < beta/2`
    Low,
    /// `beta/2 <= |y| <= beta`
    Mid,
    /// `|y| > beta`
    High,
}

impl Regime {
    pub fn classify(y_norm: f64, beta: f64) -> Regime {
        if y_norm < beta / 2.0 {
            Regime::Low
        } else if y_norm <= beta {
            Regime::Mid
        } else {
            Regime::High
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::Low => "low",
            Regime::Mid => "mid",
            Regime::High => "high",
        }
    }
}

/// One evaluated frequency sample.
#[derive(Clone, Debug)]
pub struct SymbolSample {
    pub y: Vec<f64>,
    pub value: Complex<f64>,
    pub beta: f64,
    pub regime: Regime,
    pub quad_error_estimate: f64,
}

enum RadialKind {
    Sin,
    CosMinusOne,
    BesselJ(u32),
    BesselJ0MinusOne,
}

impl RadialKind {
    #[inline]
    fn eval(&self, z: f64) -> f64 {
        match self {
            RadialKind::Sin => z.sin(),
            RadialKind::CosMinusOne => z.cos() - 1.0,
            RadialKind::BesselJ(m) => bessel_j(*m, z),
            RadialKind::BesselJ0MinusOne => libm::j0(z) - 1.0,
        }
    }

    /// Crude magnitude bound near `z = 0`, used to size the dropped tail.
    fn small_z_bound(&self, z: f64) -> f64 {
        match self {
            RadialKind::Sin => z.min(1.0),
            RadialKind::CosMinusOne | RadialKind::BesselJ0MinusOne => (z * z / 2.0).min(2.0),
            RadialKind::BesselJ(m) => {
                let mut t: f64 = 1.0;
                for k in 1..=*m {
                    t *= z / (2.0 * k as f64);
                    if t < 1e-300 {
                        return 0.0;
                    }
                }
                t.min(0.9)
            }
        }
    }
}

#[inline]
fn bessel_j(m: u32, x: f64) -> f64 {
    match m {
        0 => libm::j0(x),
        1 => libm::j1(x),
        m => libm::jn(m as i32, x),
    }
}

/// `int_0^{rtop} r^{beta-1} chi(scale r) osc(2 pi r rho) dr` with an error
/// estimate from 8-vs-16 point panel differences plus the bound on the
/// dropped segment near zero.
fn radial_oscillatory(spec: &KernelSpec, kind: &RadialKind, rho: f64) -> (f64, f64) {
    let beta = spec.beta;
    let rtop = spec.near_support_radius();
    let omega_arg = 2.0 * std::f64::consts::PI * rho;

    // drop [0, rfloor] when its contribution bound is negligible
    let mut rfloor = rtop;
    let mut dropped;
    loop {
        rfloor *= 0.5;
        // integrand bound on [0, rfloor]: r^{beta-1} * small_z_bound(omega_arg * r)
        // monotone kinds: bound by value at the right endpoint times the mass
        let env = kind.small_z_bound(omega_arg * rfloor);
        dropped = env * rfloor.powf(beta) / beta;
        if dropped < 1e-16 || rfloor < rtop * 2.0f64.powi(-60) {
            break;
        }
    }

    let (x16, w16) = gl_cached(16);
    let (x8, w8) = gl_cached(8);
    let wmax = if rho > 0.0 {
        1.0 / (4.0 * rho)
    } else {
        f64::INFINITY
    };

    let mut acc = Accumulator::new();
    let mut err = dropped;
    let mut hi = rtop;
    while hi > rfloor {
        let lo = (hi * 0.5).max(rfloor);
        // oscillation-capped subdivision of the geometric panel [lo, hi]
        let span = hi - lo;
        let pieces = (span / wmax).ceil().max(1.0) as usize;
        let width = span / pieces as f64;
        for p in 0..pieces {
            let a = lo + p as f64 * width;
            let b = a + width;
            let c = 0.5 * (a + b);
            let hl = 0.5 * (b - a);
            let mut v16 = 0.0;
            for (xi, wi) in x16.iter().zip(&w16) {
                let r = c + hl * xi;
                v16 += wi * r.powf(beta - 1.0) * chi_at(spec, r) * kind.eval(omega_arg * r);
            }
            v16 *= hl;
            let mut v8 = 0.0;
            for (xi, wi) in x8.iter().zip(&w8) {
                let r = c + hl * xi;
                v8 += wi * r.powf(beta - 1.0) * chi_at(spec, r) * kind.eval(omega_arg * r);
            }
            v8 *= hl;
            acc.add(v16);
            err += (v16 - v8).abs();
        }
        hi = lo;
    }
    (acc.value(), err)
}

#[inline]
fn chi_at(spec: &KernelSpec, r: f64) -> f64 {
    spec.profile.chi(spec.cutoff_scale * r)
}

fn gl_cached(m: usize) -> (Vec<f64>, Vec<f64>) {
    use std::sync::OnceLock;
    static GL8: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static GL16: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    match m {
        8 => GL8.get_or_init(|| gauss_legendre(8)).clone(),
        16 => GL16.get_or_init(|| gauss_legendre(16)).clone(),
        other => gauss_legendre(other),
    }
}

/// `int_0^{2/scale} r^{beta-1} chi(scale r) dr`: the flat part in closed
/// form plus panel quadrature over the ramp.
fn radial_mass(spec: &KernelSpec) -> f64 {
    let beta = spec.beta;
    let r1 = 1.0 / spec.cutoff_scale;
    let flat = r1.powf(beta) / beta;
    let (x16, w16) = gl_cached(16);
    let mut ramp = 0.0;
    let pieces = 32;
    let width = r1 / pieces as f64;
    for p in 0..pieces {
        let a = r1 + p as f64 * width;
        let c = a + 0.5 * width;
        let hl = 0.5 * width;
        let mut v = 0.0;
        for (xi, wi) in x16.iter().zip(&w16) {
            let r = c + hl * xi;
            v += wi * r.powf(beta - 1.0) * chi_at(spec, r);
        }
        ramp += v * hl;
    }
    flat + ramp
}

/// Reusable transform of one (symbol, spec) pair: harmonics are computed
/// once and shared across frequency samples.
pub struct SymbolTransform {
    spec: KernelSpec,
    harmonics: Vec<(i64, Complex<f64>)>,
    radial_mass: f64,
}

impl SymbolTransform {
    pub fn new(omega: &SphereSymbol, spec: &KernelSpec) -> Result<Self, SpectralError> {
        if !(spec.beta > 0.0 && spec.beta < 1.0) {
            return Err(SpectralError::OutOfValidity(spec.beta));
        }
        if !(1..=2).contains(&spec.n) {
            return Err(SpectralError::UnsupportedDimension(spec.n));
        }
        Ok(SymbolTransform {
            spec: spec.clone(),
            harmonics: omega.harmonics(),
            radial_mass: radial_mass(spec),
        })
    }

    /// Sphere mean of the symbol (cancellation residual per unit measure);
    /// nonzero values flag a contrast symbol.
    pub fn mean_harmonic(&self) -> Complex<f64> {
        self.harmonics
            .iter()
            .find(|(m, _)| *m == 0)
            .map(|(_, c)| *c)
            .unwrap_or_else(|| Complex::new(0.0, 0.0))
    }

    pub fn eval(&self, y: &[f64]) -> Result<SymbolSample, SpectralError> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite);
        }
        let n = self.spec.n;
        let rho = y.iter().take(n).map(|v| v * v).sum::<f64>().sqrt();
        let mut value = Complex::new(0.0, 0.0);
        let mut err = 0.0;

        if n == 1 {
            // even/odd decomposition: Khat = 2 c0 (int k (cos-1) + mass) + 2 i c1 sign(y) int k sin
            let sign = if y[0] < 0.0 { -1.0 } else { 1.0 };
            for (m, c) in &self.harmonics {
                match m {
                    0 => {
                        let (v, e) = radial_oscillatory(&self.spec, &RadialKind::CosMinusOne, rho);
                        value += c * 2.0 * (v + self.radial_mass);
                        err += 2.0 * c.norm() * e;
                    }
                    1 => {
                        let (v, e) = radial_oscillatory(&self.spec, &RadialKind::Sin, rho);
                        value += c * Complex::new(0.0, 2.0 * sign * v);
                        err += 2.0 * c.norm() * e;
                    }
                    _ => {}
                }
            }
        } else {
            let phi = y[1].atan2(y[0]);
            let two_pi = 2.0 * std::f64::consts::PI;
            // radial integrals per distinct |m|
            let mut memo: Vec<(u32, (f64, f64))> = Vec::new();
            for (m, c) in &self.harmonics {
                let am = m.unsigned_abs() as u32;
                let (v, e) = match memo.iter().find(|(k, _)| *k == am) {
                    Some((_, ve)) => *ve,
                    None => {
                        let kind = if am == 0 {
                            RadialKind::BesselJ0MinusOne
                        } else {
                            RadialKind::BesselJ(am)
                        };
                        let ve = radial_oscillatory(&self.spec, &kind, rho);
                        memo.push((am, ve));
                        ve
                    }
                };
                let radial = if am == 0 { v + self.radial_mass } else { v };
                // i^{|m|}, the same factor for m and -m
                let ipow = match am % 4 {
                    0 => Complex::new(1.0, 0.0),
                    1 => Complex::new(0.0, 1.0),
                    2 => Complex::new(-1.0, 0.0),
                    _ => Complex::new(0.0, -1.0),
                };
                let ang = Complex::from_polar(1.0, *m as f64 * phi);
                value += c * ang * ipow * two_pi * radial;
                err += c.norm() * two_pi * e;
            }
        }
        Ok(SymbolSample {
            y: y.to_vec(),
            value,
            beta: self.spec.beta,
            regime: Regime::classify(rho, self.spec.beta),
            quad_error_estimate: err,
        })
    }
}

/// One-off evaluation of the near-kernel symbol at `y`.
pub fn symbol_k1(
    omega: &SphereSymbol,
    spec: &KernelSpec,
    y: &[f64],
) -> Result<SymbolSample, SpectralError> {
    SymbolTransform::new(omega, spec)?.eval(y)
}

/// Default frequency grid: logarithmic in `|y|` over `[beta/10, 1000 beta]`
/// and `[0.1, 100]`, plus `y = 0`; three directions in the plane.
pub fn default_y_grid(n: usize, beta: f64) -> Vec<Vec<f64>> {
    let mut radii = vec![0.0];
    let mut push_log = |lo: f64, hi: f64, count: usize| {
        for i in 0..count {
            let t = i as f64 / (count - 1) as f64;
            radii.push(lo * (hi / lo).powf(t));
        }
    };
    push_log(beta / 10.0, 1000.0 * beta, 21);
    push_log(0.1, 100.0, 21);
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup();
    let mut out = Vec::new();
    match n {
        1 => {
            for r in radii {
                out.push(vec![r]);
            }
        }
        _ => {
            let dirs = [0.0, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2];
            for r in radii {
                if r == 0.0 {
                    out.push(vec![0.0, 0.0]);
                    continue;
                }
                for d in dirs {
                    out.push(vec![r * d.cos(), r * d.sin()]);
                }
            }
        }
    }
    out
}

/// One CSV row of a symbol sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SymbolRow {
    pub beta: f64,
    pub y_norm: f64,
    pub regime: &'static str,
    pub abs_value: f64,
    pub re: f64,
    pub im: f64,
    pub quad_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegimeSupremum {
    pub beta: f64,
    pub regime: &'static str,
    pub supremum: f64,
}

/// Sweep outcome: per-(beta, regime) suprema, the cross-beta ratio of the
/// global suprema, and the pass verdict under the configured factors.
#[derive(Clone, Debug, Serialize)]
pub struct SymbolSweep {
    pub symbol: String,
    pub n: usize,
    pub cancellation_ok: bool,
    pub rows: Vec<SymbolRow>,
    pub suprema: Vec<RegimeSupremum>,
    pub per_beta_sup: Vec<(f64, f64)>,
    pub cross_beta_ratio: f64,
    pub uniformity_factor: f64,
    pub baseline_factor: f64,
    pub pass: bool,
}

impl SymbolSweep {
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "beta,y_norm,regime,abs_value,re,im,quad_err")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.beta, r.y_norm, r.regime, r.abs_value, r.re, r.im, r.quad_err
            )?;
        }
        Ok(())
    }
}

/// Sweep `|Khat|` over a beta list, asserting the uniformity of the
/// suprema across beta. With `y_grid = None` each beta uses its own
/// default grid.
pub fn symbol_sweep(
    omega: &SphereSymbol,
    betas: &[f64],
    y_grid: Option<&[Vec<f64>]>,
    beta0: f64,
    uniformity_factor: f64,
    baseline_factor: f64,
) -> Result<SymbolSweep, SpectralError> {
    if betas.is_empty() || y_grid.is_some_and(|g| g.is_empty()) {
        return Err(SpectralError::EmptyGrid);
    }
    let n = omega.dimension();
    let mut rows: Vec<SymbolRow> = Vec::new();
    let mut cancellation_ok = true;
    for &beta in betas {
        if !(beta > 0.0 && beta <= 1.0 - beta0) {
            return Err(SpectralError::OutOfValidity(beta));
        }
        let spec = KernelSpec::with_beta0(n, beta, 1.0, beta0)
            .map_err(OperatorError::from)?;
        let transform = SymbolTransform::new(omega, &spec)?;
        if transform.mean_harmonic().norm() > 1e-8 {
            cancellation_ok = false;
        }
        let grid: Vec<Vec<f64>> = match y_grid {
            Some(g) => g.to_vec(),
            None => default_y_grid(n, beta),
        };
        let mut beta_rows: Vec<SymbolRow> = grid
            .par_iter()
            .map(|y| {
                let s = transform.eval(y).expect("finite grid point");
                let rho = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                SymbolRow {
                    beta,
                    y_norm: rho,
                    regime: s.regime.label(),
                    abs_value: s.value.norm(),
                    re: s.value.re,
                    im: s.value.im,
                    quad_err: s.quad_error_estimate,
                }
            })
            .collect();
        rows.append(&mut beta_rows);
    }

    let mut suprema = Vec::new();
    let mut per_beta_sup = Vec::new();
    for &beta in betas {
        let mut global: f64 = 0.0;
        for regime in ["low", "mid", "high"] {
            let sup = rows
                .iter()
                .filter(|r| r.beta == beta && r.regime == regime)
                .map(|r| r.abs_value)
                .fold(0.0, f64::max);
            suprema.push(RegimeSupremum {
                beta,
                regime: match regime {
                    "low" => "low",
                    "mid" => "mid",
                    _ => "high",
                },
                supremum: sup,
            });
            global = global.max(sup);
        }
        per_beta_sup.push((beta, global));
    }
    let max_sup = per_beta_sup.iter().map(|p| p.1).fold(0.0, f64::max);
    let min_sup = per_beta_sup.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let cross_beta_ratio = if min_sup > 0.0 { max_sup / min_sup } else { f64::INFINITY };

    // baseline rule: nothing may exceed the beta = 0.5 supremum by more
    // than the baseline factor (only applies when 0.5 is in the sweep)
    let baseline = per_beta_sup
        .iter()
        .find(|(b, _)| (*b - 0.5).abs() < 1e-12)
        .map(|(_, s)| *s);
    let baseline_ok = match baseline {
        Some(b) if b > 0.0 => per_beta_sup.iter().all(|(_, s)| *s <= baseline_factor * b),
        _ => true,
    };
    let pass = cross_beta_ratio <= uniformity_factor && baseline_ok;
    Ok(SymbolSweep {
        symbol: omega.name().to_string(),
        n,
        cancellation_ok,
        rows,
        suprema,
        per_beta_sup,
        cross_beta_ratio,
        uniformity_factor,
        baseline_factor,
        pass,
    })
}

/// Both sides of the Parseval identity for the near part: the grid norm of
/// `T_1 f` against the frequency-side norm of the product of the sampled
/// kernel transform with the source transform.
pub fn plancherel_check(
    omega: &SphereSymbol,
    spec: &KernelSpec,
    f: &Field,
    plan: &QuadraturePlan,
) -> Result<(f64, f64), SpectralError> {
    let lhs = lq_norm(&apply_t1(omega, spec, f, plan)?.field, 2.0).map_err(OperatorError::from)?;

    let need = spec.near_support_radius();
    let free = alias_free_radius(f);
    if free < need {
        return Err(SpectralError::Operator(OperatorError::Wraparound {
            padding: free,
            required: need,
        }));
    }
    let kernel = sample_kernel_lattice(omega, spec, f, KernelPart::Near, need);
    let shape = f.shape().to_vec();
    let mut kf: Vec<Complex<f64>> = kernel.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut ff: Vec<Complex<f64>> = f.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_nd(&mut kf, &shape, false);
    fft_nd(&mut ff, &shape, false);
    let total = f.len() as f64;
    let l2: f64 = kf
        .iter()
        .zip(&ff)
        .map(|(a, b)| (a * b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let n = f.dimension() as i32;
    let rhs = f.spacing().powi(3 * n).sqrt() / total.sqrt() * l2;
    Ok((lhs, rhs))
}
