//! Sphere symbols and the convolution kernel they generate.
//!
//! A kernel here is `K(y) = S(y/|y|) / |y|^{n-beta}` for an angular symbol
//! `S` that is bounded, even in the radial variable (degree-0 homogeneous),
//! integrates to zero over the unit sphere and has an integrable modulus of
//! continuity. The near/far splitting multiplies `K` by a smooth radial
//! cutoff at scale `1/beta`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;
use thiserror::Error;

use crate::quad::gauss_legendre;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("symbol {name:?} produced a non-finite value at {at:?}")]
    InvalidSymbol { name: String, at: Vec<f64> },
    #[error("dimension {0} is not supported (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("kernel is singular at the origin")]
    Singularity,
    #[error("invalid kernel parameters: {0}")]
    InvalidSpec(String),
    #[error("symbol table error: {0}")]
    Table(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Declared symmetry of a sphere symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Odd,
    Even,
    None,
}

/// Closed-form moduli of continuity carried by the built-in symbols.
#[derive(Clone, Debug)]
pub enum ModulusForm {
    /// Identically zero below the sphere diameter (locally constant symbols).
    ZeroBelowDiameter,
    /// `omega(delta) = min(delta, 2 B1)`.
    Chord,
    /// `omega(delta) = 2 delta sqrt(1 - delta^2/4)` up to its maximum, then flat.
    DoubleAngle,
}

impl ModulusForm {
    fn eval(&self, delta: f64, bound: f64) -> f64 {
        let cap = 2.0 * bound;
        let v = match self {
            ModulusForm::ZeroBelowDiameter => {
                if delta >= 2.0 {
                    cap
                } else {
                    0.0
                }
            }
            ModulusForm::Chord => delta,
            ModulusForm::DoubleAngle => {
                if delta >= std::f64::consts::SQRT_2 {
                    2.0
                } else {
                    2.0 * delta * (1.0 - delta * delta / 4.0).sqrt()
                }
            }
        };
        v.min(cap)
    }
}

#[derive(Clone, Debug)]
enum SymbolKind {
    /// `u_j` on the unit sphere (axis index is zero-based).
    RieszAxis(usize),
    /// `sign(u)` on the two-point sphere of the line.
    Sign,
    /// Constant one; violates cancellation, kept for contrast runs.
    Const,
    /// `cos(2 theta)` in the plane.
    Cos2Theta,
    /// Piecewise-linear interpolation of `(angle, value)` pairs in the plane.
    Tabulated { angles: Vec<f64>, values: Vec<f64> },
}

/// The angular part of the kernel: evaluation on the unit sphere plus
/// declared metadata. Evaluation depends only on direction; callers
/// normalize before invoking `evaluate`.
#[derive(Clone, Debug)]
pub struct SphereSymbol {
    name: String,
    n: usize,
    kind: SymbolKind,
    declared_bound: f64,
    parity: Parity,
    analytic_omega: Option<ModulusForm>,
}

impl SphereSymbol {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn declared_bound(&self) -> f64 {
        self.declared_bound
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// True for the `u_j` symbols (any axis), which the frequency-domain
    /// reference operator is defined for.
    pub fn is_riesz(&self) -> bool {
        matches!(self.kind, SymbolKind::RieszAxis(_))
    }

    /// Evaluate at a unit direction `u` (`|u| = 1`, length `n`).
    pub fn evaluate(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.n);
        match &self.kind {
            SymbolKind::RieszAxis(j) => u[*j],
            SymbolKind::Sign => {
                if u[0] >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            SymbolKind::Const => 1.0,
            SymbolKind::Cos2Theta => {
                let t = u[1].atan2(u[0]);
                (2.0 * t).cos()
            }
            SymbolKind::Tabulated { angles, values } => {
                let mut t = u[1].atan2(u[0]);
                if t < 0.0 {
                    t += 2.0 * PI;
                }
                interp_periodic(angles, values, t)
            }
        }
    }

    /// Circular-harmonic coefficients `c_m` with `S(theta) = sum c_m e^{i m theta}`
    /// for planar symbols, and the even/odd decomposition for `n = 1`
    /// (`c_0 = (S(1)+S(-1))/2`, `c_1 = (S(1)-S(-1))/2`). Used by the
    /// frequency-symbol quadrature.
    pub(crate) fn harmonics(&self) -> Vec<(i64, rustfft::num_complex::Complex<f64>)> {
        use rustfft::num_complex::Complex;
        match (&self.kind, self.n) {
            (SymbolKind::Sign, 1) => vec![(1, Complex::new(1.0, 0.0))],
            (SymbolKind::Const, 1) => vec![(0, Complex::new(1.0, 0.0))],
            (SymbolKind::RieszAxis(0), 1) => vec![(1, Complex::new(1.0, 0.0))],
            (SymbolKind::Const, 2) => vec![(0, Complex::new(1.0, 0.0))],
            (SymbolKind::RieszAxis(0), 2) => vec![
                (1, Complex::new(0.5, 0.0)),
                (-1, Complex::new(0.5, 0.0)),
            ],
            (SymbolKind::RieszAxis(1), 2) => vec![
                (1, Complex::new(0.0, -0.5)),
                (-1, Complex::new(0.0, 0.5)),
            ],
            (SymbolKind::Cos2Theta, 2) => vec![
                (2, Complex::new(0.5, 0.0)),
                (-2, Complex::new(0.5, 0.0)),
            ],
            (SymbolKind::Tabulated { .. }, 2) => self.harmonics_by_sampling(64),
            _ => self.harmonics_by_sampling(64),
        }
    }

    fn harmonics_by_sampling(&self, max_m: i64) -> Vec<(i64, rustfft::num_complex::Complex<f64>)> {
        use rustfft::num_complex::Complex;
        if self.n == 1 {
            let p = self.evaluate(&[1.0]);
            let q = self.evaluate(&[-1.0]);
            let mut out = Vec::new();
            if (p + q).abs() > 0.0 {
                out.push((0, Complex::new(0.5 * (p + q), 0.0)));
            }
            if (p - q).abs() > 0.0 {
                out.push((1, Complex::new(0.5 * (p - q), 0.0)));
            }
            return out;
        }
        let samples = 4 * (max_m as usize).max(64);
        let mut out = Vec::new();
        for m in -max_m..=max_m {
            let mut re = 0.0;
            let mut im = 0.0;
            for i in 0..samples {
                let t = 2.0 * PI * i as f64 / samples as f64;
                let v = self.evaluate(&[t.cos(), t.sin()]);
                re += v * (m as f64 * t).cos();
                im -= v * (m as f64 * t).sin();
            }
            let c = Complex::new(re, im) / samples as f64;
            if c.norm() > 1e-13 * self.declared_bound.max(1.0) {
                out.push((m, c));
            }
        }
        out
    }
}

fn interp_periodic(angles: &[f64], values: &[f64], t: f64) -> f64 {
    let m = angles.len();
    // angles ascending in [0, 2pi); wrap the last segment around.
    let idx = match angles.binary_search_by(|a| a.partial_cmp(&t).unwrap()) {
        Ok(i) => return values[i],
        Err(0) => m - 1,
        Err(i) => i - 1,
    };
    let a0 = angles[idx];
    let (a1, v1) = if idx + 1 == m {
        (angles[0] + 2.0 * PI, values[0])
    } else {
        (angles[idx + 1], values[idx + 1])
    };
    let span = a1 - a0;
    let w = if span > 0.0 {
        ((t - a0) / span).clamp(0.0, 1.0)
    } else {
        0.0
    };
    values[idx] * (1.0 - w) + v1 * w
}

/// Built-in symbols by name: "sign" (n = 1), "riesz-1"/"riesz-2"/"riesz-3"
/// (axis symbols, any supported n), "const", "cos2theta" (n = 2).
pub fn builtin_symbol(name: &str, n: usize) -> Result<SphereSymbol, KernelError> {
    if !(1..=3).contains(&n) {
        return Err(KernelError::UnsupportedDimension(n));
    }
    let mk_riesz = |axis: usize| SphereSymbol {
        name: name.to_string(),
        n,
        kind: SymbolKind::RieszAxis(axis),
        declared_bound: 1.0,
        parity: Parity::Odd,
        analytic_omega: Some(if n == 1 {
            ModulusForm::ZeroBelowDiameter
        } else {
            ModulusForm::Chord
        }),
    };
    match name {
        "sign" => {
            if n != 1 {
                return Err(KernelError::Table(format!("symbol sign requires n=1, got {n}")));
            }
            Ok(SphereSymbol {
                name: "sign".into(),
                n,
                kind: SymbolKind::Sign,
                declared_bound: 1.0,
                parity: Parity::Odd,
                analytic_omega: Some(ModulusForm::ZeroBelowDiameter),
            })
        }
        "riesz-1" => Ok(mk_riesz(0)),
        "riesz-2" => {
            if n < 2 {
                return Err(KernelError::Table("riesz-2 requires n >= 2".into()));
            }
            Ok(mk_riesz(1))
        }
        "riesz-3" => {
            if n < 3 {
                return Err(KernelError::Table("riesz-3 requires n = 3".into()));
            }
            Ok(mk_riesz(2))
        }
        "const" => Ok(SphereSymbol {
            name: "const".into(),
            n,
            kind: SymbolKind::Const,
            declared_bound: 1.0,
            parity: Parity::Even,
            analytic_omega: Some(ModulusForm::ZeroBelowDiameter),
        }),
        "cos2theta" => {
            if n != 2 {
                return Err(KernelError::Table("cos2theta requires n=2".into()));
            }
            Ok(SphereSymbol {
                name: "cos2theta".into(),
                n,
                kind: SymbolKind::Cos2Theta,
                declared_bound: 1.0,
                parity: Parity::Even,
                analytic_omega: Some(ModulusForm::DoubleAngle),
            })
        }
        other => Err(KernelError::Table(format!("unknown symbol {other:?}"))),
    }
}

/// Load a planar symbol from a two-column CSV of `angle,value` rows
/// (angles in radians, ascending in `[0, 2pi)`).
pub fn tabulated_symbol_from_csv(path: &Path, name: &str) -> Result<SphereSymbol, KernelError> {
    let text = std::fs::read_to_string(path)?;
    let mut angles = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',');
        let a: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| KernelError::Table(format!("line {}: bad angle", lineno + 1)))?;
        let v: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| KernelError::Table(format!("line {}: bad value", lineno + 1)))?;
        if !a.is_finite() || !v.is_finite() {
            return Err(KernelError::Table(format!("line {}: non-finite entry", lineno + 1)));
        }
        angles.push(a);
        values.push(v);
    }
    if angles.len() < 3 {
        return Err(KernelError::Table("need at least 3 rows".into()));
    }
    if angles.windows(2).any(|w| w[1] <= w[0]) || angles[0] < 0.0 || *angles.last().unwrap() >= 2.0 * PI {
        return Err(KernelError::Table("angles must be ascending in [0, 2pi)".into()));
    }
    let bound = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(SphereSymbol {
        name: name.to_string(),
        n: 2,
        kind: SymbolKind::Tabulated { angles, values },
        declared_bound: bound,
        parity: Parity::None,
        analytic_omega: None,
    })
}

/// Named radial ramp used for the near/far splitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutoffProfile {
    /// 1 on `|s| <= 1`, `cos^2(pi (|s|-1)/2)` on `1 <= |s| <= 2`, 0 beyond.
    /// Slope bounded by `pi/2 < 2`.
    CosSquared,
}

impl CutoffProfile {
    /// The base ramp `chi(s)`.
    pub fn chi(self, s: f64) -> f64 {
        let a = s.abs();
        if a <= 1.0 {
            1.0
        } else if a >= 2.0 {
            0.0
        } else {
            let c = (PI * (a - 1.0) / 2.0).cos();
            c * c
        }
    }
}

/// Kernel parameters: dimension, exponent shift, truncation radius, the
/// guard for the near-kernel validity window, and the cutoff.
///
/// `cutoff_scale` is the dilation parameter of the ramp (`chi(scale * s)`);
/// it defaults to `beta`, which is the splitting used everywhere, and is
/// only set differently by scaling diagnostics.
#[derive(Clone, Debug)]
pub struct KernelSpec {
    pub n: usize,
    pub beta: f64,
    pub epsilon: f64,
    pub beta0: f64,
    pub profile: CutoffProfile,
    pub cutoff_scale: f64,
}

impl KernelSpec {
    pub fn new(n: usize, beta: f64, epsilon: f64) -> Result<Self, KernelError> {
        Self::with_beta0(n, beta, epsilon, 0.01)
    }

    pub fn with_beta0(n: usize, beta: f64, epsilon: f64, beta0: f64) -> Result<Self, KernelError> {
        if !(1..=3).contains(&n) {
            return Err(KernelError::UnsupportedDimension(n));
        }
        if !(beta > 0.0 && beta < n as f64) {
            return Err(KernelError::InvalidSpec(format!(
                "beta must lie in (0, n), got {beta}"
            )));
        }
        if !(epsilon > 0.0) {
            return Err(KernelError::InvalidSpec(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(beta0 > 0.0 && beta0 < 0.5) {
            return Err(KernelError::InvalidSpec(format!(
                "beta0 must lie in (0, 1/2), got {beta0}"
            )));
        }
        Ok(KernelSpec {
            n,
            beta,
            epsilon,
            beta0,
            profile: CutoffProfile::CosSquared,
            cutoff_scale: beta,
        })
    }

    /// Same spec with a decoupled ramp dilation (scaling diagnostics only).
    pub fn with_cutoff_scale(mut self, scale: f64) -> Self {
        self.cutoff_scale = scale;
        self
    }

    /// True when the near-kernel claims apply: `0 < beta <= 1 - beta0`.
    pub fn in_t1_window(&self) -> bool {
        self.beta <= 1.0 - self.beta0
    }

    /// Radius beyond which the near kernel vanishes (`2 / cutoff_scale`).
    pub fn near_support_radius(&self) -> f64 {
        2.0 / self.cutoff_scale
    }
}

/// `chi(cutoff_scale * s)`: equal to 1 for `|s| <= 1/beta` and 0 for
/// `|s| >= 2/beta` in the default configuration.
pub fn eval_cutoff(spec: &KernelSpec, s: f64) -> f64 {
    spec.profile.chi(spec.cutoff_scale * s)
}

#[inline]
fn norm(point: &[f64]) -> f64 {
    point.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Full kernel `S(y/|y|) / |y|^{n-beta}` (no truncation).
pub fn eval_kernel(omega: &SphereSymbol, spec: &KernelSpec, point: &[f64]) -> Result<f64, KernelError> {
    let r = norm(point);
    if r == 0.0 {
        return Err(KernelError::Singularity);
    }
    Ok(eval_kernel_unchecked(omega, spec, point, r))
}

#[inline]
pub(crate) fn eval_kernel_unchecked(
    omega: &SphereSymbol,
    spec: &KernelSpec,
    point: &[f64],
    r: f64,
) -> f64 {
    let mut u = [0.0f64; 3];
    for (ui, pi) in u.iter_mut().zip(point) {
        *ui = pi / r;
    }
    let ang = omega.evaluate(&u[..spec.n]);
    ang * r.powf(spec.beta - spec.n as f64)
}

/// Near kernel: full kernel times the radial ramp.
pub fn eval_k1(omega: &SphereSymbol, spec: &KernelSpec, point: &[f64]) -> Result<f64, KernelError> {
    let k = eval_kernel(omega, spec, point)?;
    Ok(k * eval_cutoff(spec, norm(point)))
}

/// Far kernel: full kernel times one minus the ramp.
pub fn eval_k2(omega: &SphereSymbol, spec: &KernelSpec, point: &[f64]) -> Result<f64, KernelError> {
    let k = eval_kernel(omega, spec, point)?;
    Ok(k * (1.0 - eval_cutoff(spec, norm(point))))
}

/// Estimated modulus of continuity on one grid of chord scales, plus the
/// quadrature of `omega(delta)/delta` over `(0, 1]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiniProfile {
    pub deltas: Vec<f64>,
    pub omega_values: Vec<f64>,
    pub dini_integral: f64,
}

impl DiniProfile {
    /// Build from nondecreasing samples; the integral uses a trapezoid rule
    /// on the stored grid with the leading segment `(0, delta_0]` closed by
    /// the linear-through-origin model `omega(delta) = omega(delta_0) delta/delta_0`.
    pub fn from_samples(deltas: Vec<f64>, omega_values: Vec<f64>) -> Self {
        assert_eq!(deltas.len(), omega_values.len());
        let dini_integral = composite_dini(&deltas, &omega_values);
        DiniProfile {
            deltas,
            omega_values,
            dini_integral,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.dini_integral.is_finite()
    }
}

fn composite_dini(deltas: &[f64], omega: &[f64]) -> f64 {
    if deltas.is_empty() {
        return 0.0;
    }
    // Linear-through-origin head: integral of (omega_0 d / d_0) / d over (0, d_0].
    let mut total = omega[0];
    for k in 1..deltas.len() {
        if deltas[k] > 1.0 {
            break;
        }
        let g0 = omega[k - 1] / deltas[k - 1];
        let g1 = omega[k] / deltas[k];
        total += 0.5 * (g0 + g1) * (deltas[k] - deltas[k - 1]);
    }
    total
}

/// Outcome of symbol validation: the sampled bound, the sphere-quadrature
/// cancellation residual and the modulus profile.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelReport {
    pub name: String,
    pub n: usize,
    pub b1: f64,
    pub cancellation_residual: f64,
    pub cancellation_tolerance: f64,
    pub dini: DiniProfile,
    pub admissible: bool,
}

/// Measure of the unit sphere in dimension `n` (so `sigma(S^0) = 2`).
pub fn sphere_measure(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("unsupported dimension"),
    }
}

/// Directions and quadrature weights on the unit sphere. Exact for
/// trigonometric symbols at modest order: the two-point sum for `n = 1`,
/// the uniform periodic trapezoid for `n = 2`, a Gauss–Legendre product
/// grid for `n = 3`.
pub fn sphere_quadrature(n: usize, quad_order: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>), KernelError> {
    match n {
        1 => Ok((vec![vec![1.0], vec![-1.0]], vec![1.0, 1.0])),
        2 => {
            let m = (quad_order.max(16)) * 4;
            let mut dirs = Vec::with_capacity(m);
            let mut w = Vec::with_capacity(m);
            for i in 0..m {
                let t = 2.0 * PI * i as f64 / m as f64;
                dirs.push(vec![t.cos(), t.sin()]);
                w.push(2.0 * PI / m as f64);
            }
            Ok((dirs, w))
        }
        3 => {
            let q = quad_order.max(16);
            let (nodes, wts) = gauss_legendre(q);
            let mphi = 2 * q;
            let mut dirs = Vec::with_capacity(q * mphi);
            let mut w = Vec::with_capacity(q * mphi);
            for (c, wc) in nodes.iter().zip(&wts) {
                let s = (1.0 - c * c).max(0.0).sqrt();
                for i in 0..mphi {
                    let phi = 2.0 * PI * i as f64 / mphi as f64;
                    dirs.push(vec![s * phi.cos(), s * phi.sin(), *c]);
                    w.push(wc * 2.0 * PI / mphi as f64);
                }
            }
            Ok((dirs, w))
        }
        other => Err(KernelError::UnsupportedDimension(other)),
    }
}

/// Validate the four admissibility conditions by dense sphere sampling:
/// boundedness, (declared) homogeneity, cancellation and the Dini modulus.
pub fn validate_symbol(omega: &SphereSymbol, quad_order: usize) -> Result<KernelReport, KernelError> {
    let n = omega.dimension();
    if !(1..=3).contains(&n) {
        return Err(KernelError::UnsupportedDimension(n));
    }
    let quad_order = quad_order.max(16);
    let (dirs, weights) = sphere_quadrature(n, quad_order)?;
    let mut b1 = 0.0f64;
    let mut residual = 0.0f64;
    let mut samples = Vec::with_capacity(dirs.len());
    for (u, w) in dirs.iter().zip(&weights) {
        let v = omega.evaluate(u);
        if !v.is_finite() {
            return Err(KernelError::InvalidSymbol {
                name: omega.name().to_string(),
                at: u.clone(),
            });
        }
        b1 = b1.max(v.abs());
        residual += w * v;
        samples.push((u.clone(), v));
    }

    let dini = match &omega.analytic_omega {
        Some(form) => {
            let deltas: Vec<f64> = (0..=10).rev().map(|k| 0.5f64.powi(k)).collect();
            let values: Vec<f64> = deltas.iter().map(|&d| form.eval(d, b1.max(omega.declared_bound()))).collect();
            DiniProfile::from_samples(deltas, values)
        }
        None => estimate_modulus(&samples, b1),
    };

    let tol = 1e-10 * b1.max(1e-300) * sphere_measure(n);
    let admissible = residual.abs() <= tol && dini.is_finite();
    Ok(KernelReport {
        name: omega.name().to_string(),
        n,
        b1,
        cancellation_residual: residual,
        cancellation_tolerance: tol,
        dini,
        admissible,
    })
}

/// Brute-force modulus estimate over all sample pairs at chord scales
/// `2^{-k}`, coarsest scale first. The grid floor keeps scales resolvable
/// by the sample density.
fn estimate_modulus(samples: &[(Vec<f64>, f64)], b1: f64) -> DiniProfile {
    let m = samples.len();
    // Smallest resolvable chord: a few times the typical sample spacing.
    let spacing = 2.0 * PI / m as f64;
    let mut kmax = 0;
    while kmax < 10 && 0.5f64.powi(kmax + 1) >= 4.0 * spacing {
        kmax += 1;
    }
    let deltas: Vec<f64> = (0..=kmax).rev().map(|k| 0.5f64.powi(k)).collect();
    let mut omega = vec![0.0f64; deltas.len()];
    for i in 0..m {
        for j in (i + 1)..m {
            let d2: f64 = samples[i]
                .0
                .iter()
                .zip(&samples[j].0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let d = d2.sqrt();
            let diff = (samples[i].1 - samples[j].1).abs();
            for (slot, &delta) in omega.iter_mut().zip(&deltas) {
                if d <= delta && diff > *slot {
                    *slot = diff;
                }
            }
        }
    }
    // sup over a larger chord set dominates: enforce monotonicity and the 2*B1 cap.
    let cap = 2.0 * b1;
    let mut run = 0.0f64;
    for v in omega.iter_mut() {
        run = run.max(*v).min(cap);
        *v = run;
    }
    DiniProfile::from_samples(deltas, omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kernel_direct_values() {
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.5, 0.1).unwrap();
        assert_abs_diff_eq!(eval_kernel(&sign, &spec, &[4.0]).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_kernel(&sign, &spec, &[-4.0]).unwrap(), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn kernel_value_in_the_plane() {
        // (3,4): angular part 3/5, radial part 5^{-7/4}; the reference value
        // comes from the nested-square-root route 5^{7/4} = 5 * sqrt(sqrt(125)).
        let riesz = builtin_symbol("riesz-1", 2).unwrap();
        let spec = KernelSpec::new(2, 0.25, 0.1).unwrap();
        let got = eval_kernel(&riesz, &spec, &[3.0, 4.0]).unwrap();
        let want = 0.6 / (5.0 * 125.0f64.sqrt().sqrt());
        assert_abs_diff_eq!(got, want, epsilon = 1e-15 * want.abs());
        assert!((got - 0.0358).abs() < 1e-4);
    }

    #[test]
    fn kernel_rejects_origin() {
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.5, 0.1).unwrap();
        assert!(matches!(
            eval_kernel(&sign, &spec, &[0.0]),
            Err(KernelError::Singularity)
        ));
    }

    #[test]
    fn cutoff_matches_profile() {
        let spec = KernelSpec::new(1, 0.5, 0.1).unwrap();
        assert_eq!(eval_cutoff(&spec, 1.0), 1.0);
        assert_eq!(eval_cutoff(&spec, 5.0), 0.0);
        // chi(1.5) on the cosine ramp.
        assert_abs_diff_eq!(eval_cutoff(&spec, 3.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn cutoff_slope_bounded_by_two() {
        let profile = CutoffProfile::CosSquared;
        let m = 100_000;
        let h = 4.0 / m as f64;
        let mut max_slope = 0.0f64;
        for i in 0..m {
            let s = -2.0 + i as f64 * h;
            let d = (profile.chi(s + h) - profile.chi(s)) / h;
            max_slope = max_slope.max(d.abs());
        }
        assert!(max_slope <= 2.0, "max slope {max_slope}");
        // the cosine ramp's slope peaks at pi/2
        assert!((max_slope - PI / 2.0).abs() < 1e-3);
    }

    #[test]
    fn splitting_is_pointwise_exact() {
        let riesz = builtin_symbol("riesz-1", 2).unwrap();
        let spec = KernelSpec::new(2, 0.4, 0.1).unwrap();
        for i in 1..200 {
            let p = [0.05 * i as f64, 0.031 * i as f64];
            let k = eval_kernel(&riesz, &spec, &p).unwrap();
            let k1 = eval_k1(&riesz, &spec, &p).unwrap();
            let k2 = eval_k2(&riesz, &spec, &p).unwrap();
            let scale = k1.abs().max(k2.abs()).max(k.abs()).max(1e-300);
            assert!((k1 + k2 - k).abs() <= 2.0 * f64::EPSILON * scale);
        }
    }

    #[test]
    fn split_supports() {
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.5, 0.1).unwrap();
        // near kernel vanishes beyond 2/beta = 4, far kernel inside 1/beta = 2
        assert_eq!(eval_k1(&sign, &spec, &[4.001]).unwrap(), 0.0);
        assert_eq!(eval_k2(&sign, &spec, &[1.999]).unwrap(), 0.0);
        assert!(eval_k1(&sign, &spec, &[1.0]).unwrap() != 0.0);
        assert!(eval_k2(&sign, &spec, &[5.0]).unwrap() != 0.0);
    }

    #[test]
    fn kernel_homogeneity() {
        let riesz = builtin_symbol("riesz-1", 2).unwrap();
        let spec = KernelSpec::new(2, 0.3, 0.1).unwrap();
        let y = [0.7, -1.1];
        let base = eval_kernel(&riesz, &spec, &y).unwrap();
        for &r in &[0.5, 2.0, 3.7, 128.0] {
            let scaled = eval_kernel(&riesz, &spec, &[r * y[0], r * y[1]]).unwrap();
            let want = r.powf(spec.beta - 2.0) * base;
            assert!((scaled - want).abs() <= 1e-12 * want.abs());
        }
    }

    #[test]
    fn validate_riesz_plane() {
        let riesz = builtin_symbol("riesz-1", 2).unwrap();
        let report = validate_symbol(&riesz, 64).unwrap();
        assert!((report.b1 - 1.0).abs() < 1e-12);
        assert!(report.cancellation_residual.abs() <= report.cancellation_tolerance);
        assert!(report.admissible);
        // omega(delta) = delta for the axis symbol, so the Dini integral is 1.
        assert_abs_diff_eq!(report.dini.dini_integral, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn validate_rejects_constant() {
        let c = builtin_symbol("const", 2).unwrap();
        let report = validate_symbol(&c, 64).unwrap();
        assert_abs_diff_eq!(report.cancellation_residual, 2.0 * PI, epsilon = 1e-10);
        assert!(!report.admissible);
    }

    #[test]
    fn brute_force_modulus_matches_chord_law() {
        // Strip the declared modulus so the estimator path runs, then compare
        // with the analytic law sup |cos a - cos b| = delta over chords <= delta.
        let mut riesz = builtin_symbol("riesz-1", 2).unwrap();
        riesz.analytic_omega = None;
        let report = validate_symbol(&riesz, 1024).unwrap();
        let spacing = 2.0 * PI / 4096.0;
        for (d, w) in report.dini.deltas.iter().zip(&report.dini.omega_values) {
            assert!(
                (w - d).abs() <= 2.5 * spacing,
                "omega({d}) = {w} deviates from the chord law"
            );
        }
        assert!(report.dini.dini_integral > 0.9 && report.dini.dini_integral <= 1.0 + 1e-9);
    }

    #[test]
    fn modulus_values_monotone_and_capped() {
        for (name, n) in [("sign", 1), ("riesz-1", 2), ("cos2theta", 2), ("const", 2)] {
            let s = builtin_symbol(name, n).unwrap();
            let rep = validate_symbol(&s, 64).unwrap();
            let d = &rep.dini;
            for w in d.omega_values.windows(2) {
                assert!(w[1] >= w[0]);
            }
            for v in &d.omega_values {
                assert!(*v >= 0.0 && *v <= 2.0 * rep.b1 + 1e-12);
            }
            assert!(d.is_finite());
        }
    }

    #[test]
    fn dimension_guard() {
        assert!(matches!(
            builtin_symbol("riesz-1", 4),
            Err(KernelError::UnsupportedDimension(4))
        ));
    }

    #[test]
    fn sphere_quadrature_is_exact_for_low_harmonics() {
        // n = 3 product rule integrates u_3^2 to sigma_2 / 3.
        let (dirs, w) = sphere_quadrature(3, 16).unwrap();
        let got: f64 = dirs.iter().zip(&w).map(|(u, wi)| wi * u[2] * u[2]).sum();
        assert_abs_diff_eq!(got, 4.0 * PI / 3.0, epsilon = 1e-10);
    }
}
