//! Evaluation of the truncated convolution operators on grids.
//!
//! The direct path is a midpoint quadrature over source cells with subcell
//! refinement where a cell straddles the truncation sphere `|y| = eps`; the
//! fast path is a circular FFT convolution against the kernel sampled at
//! cell centers. Offsets between cell centers live on the lattice `k h`, so
//! per-offset quadrature weights are precomputed once and reused across the
//! whole output grid.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use thiserror::Error;

use crate::fftutil::{centered_offset, fft_nd, frequency};
use crate::field::{lq_norm, Field, FieldError};
use crate::kernel::{eval_cutoff, eval_kernel_unchecked, KernelError, KernelSpec, SphereSymbol};

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("truncation radius eps = {eps} under-resolved by grid spacing h = {h} (need eps >= 2h)")]
    Resolution { eps: f64, h: f64 },
    #[error("outer radius {radius} does not cover the near-kernel support {required}")]
    Truncation { radius: f64, required: f64 },
    #[error("periodic box too small: padding {padding} around the support is below the kernel radius {required}")]
    Wraparound { padding: f64, required: f64 },
    #[error("dimension mismatch between spec (n = {spec}) and field (n = {field})")]
    DimensionMismatch { spec: usize, field: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Which kernel the operator applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelPart {
    /// `S(y/|y|)/|y|^{n-beta}`, no radial cutoff.
    Full,
    /// Full kernel times the ramp (supported in `|y| <= 2/beta`).
    Near,
    /// Full kernel times one minus the ramp (vanishes for `|y| <= 1/beta`).
    Far,
}

/// Quadrature geometry: outer truncation radius (None integrates over every
/// offset reachable on the grid, which is exact for compactly supported
/// sources) and the per-axis subcell refinement applied to cells straddling
/// the `eps`-sphere. `refine = 1` reduces to the plain center rule.
#[derive(Clone, Copy, Debug)]
pub struct QuadraturePlan {
    pub outer_radius: Option<f64>,
    pub refine: usize,
}

impl Default for QuadraturePlan {
    fn default() -> Self {
        QuadraturePlan {
            outer_radius: None,
            refine: 8,
        }
    }
}

/// Operator output together with the analytic bound on the part of the
/// integral dropped beyond the outer radius: `B1 ||f||_1 R^{beta-n}`, or 0
/// when nothing was dropped.
#[derive(Clone, Debug)]
pub struct Applied {
    pub field: Field,
    pub tail_bound: f64,
}

#[inline]
fn part_value(omega: &SphereSymbol, spec: &KernelSpec, part: KernelPart, y: &[f64], r: f64) -> f64 {
    let k = eval_kernel_unchecked(omega, spec, y, r);
    match part {
        KernelPart::Full => k,
        KernelPart::Near => k * eval_cutoff(spec, r),
        KernelPart::Far => k * (1.0 - eval_cutoff(spec, r)),
    }
}

fn validate(
    omega: &SphereSymbol,
    spec: &KernelSpec,
    f: &Field,
    plan: &QuadraturePlan,
    part: KernelPart,
) -> Result<(), OperatorError> {
    if omega.dimension() != spec.n {
        return Err(OperatorError::DimensionMismatch {
            spec: spec.n,
            field: omega.dimension(),
        });
    }
    if f.dimension() != spec.n {
        return Err(OperatorError::DimensionMismatch {
            spec: spec.n,
            field: f.dimension(),
        });
    }
    if spec.epsilon < 2.0 * f.spacing() {
        return Err(OperatorError::Resolution {
            eps: spec.epsilon,
            h: f.spacing(),
        });
    }
    if let Some(radius) = plan.outer_radius {
        if radius <= spec.epsilon {
            return Err(OperatorError::Truncation {
                radius,
                required: spec.epsilon,
            });
        }
        if matches!(part, KernelPart::Full | KernelPart::Near)
            && radius < spec.near_support_radius()
        {
            return Err(OperatorError::Truncation {
                radius,
                required: spec.near_support_radius(),
            });
        }
    }
    assert!(plan.refine >= 1, "refinement factor must be at least 1");
    Ok(())
}

/// Quadrature weight of one lattice offset `y = d h`: zero inside the
/// truncation sphere, the plain midpoint value `K(y) h^n` away from it, and
/// a subcell sum where the offset cell straddles `|y| = eps`.
fn offset_weight(
    omega: &SphereSymbol,
    spec: &KernelSpec,
    part: KernelPart,
    plan: &QuadraturePlan,
    y: &[f64],
    h: f64,
) -> f64 {
    let n = spec.n;
    let eps = spec.epsilon;
    let mut min2 = 0.0f64;
    let mut max2 = 0.0f64;
    for &c in y.iter().take(n) {
        let lo = c - 0.5 * h;
        let hi = c + 0.5 * h;
        let amin = if lo <= 0.0 && hi >= 0.0 {
            0.0
        } else {
            lo.abs().min(hi.abs())
        };
        let amax = lo.abs().max(hi.abs());
        min2 += amin * amin;
        max2 += amax * amax;
    }
    let dmin = min2.sqrt();
    let dmax = max2.sqrt();
    if dmax <= eps {
        return 0.0;
    }
    let r = y.iter().take(n).map(|c| c * c).sum::<f64>().sqrt();
    if let Some(radius) = plan.outer_radius {
        if r > radius {
            return 0.0;
        }
    }
    let cell = h.powi(n as i32);
    if dmin >= eps {
        return part_value(omega, spec, part, y, r) * cell;
    }
    // straddling cell: refined subcell centers, sharp indicator |y| >= eps
    let rf = plan.refine;
    let sub = h / rf as f64;
    let subcell = sub.powi(n as i32);
    let mut total = 0.0;
    let count = rf.pow(n as u32);
    let mut point = [0.0f64; 3];
    for s in 0..count {
        let mut rem = s;
        for (a, slot) in point.iter_mut().enumerate().take(n) {
            let k = rem % rf;
            rem /= rf;
            *slot = y[a] + ((k as f64 + 0.5) / rf as f64 - 0.5) * h;
        }
        let rs = point.iter().take(n).map(|c| c * c).sum::<f64>().sqrt();
        if rs >= eps {
            total += part_value(omega, spec, part, &point[..n], rs) * subcell;
        }
    }
    total
}

/// Precomputed per-offset weights for one (symbol, spec, plan, part, grid
/// geometry) combination. Index `d + N - 1` per axis.
pub struct KernelTable {
    n: usize,
    src_shape: Vec<usize>,
    wdims: Vec<usize>,
    weights: Vec<f64>,
    h: f64,
    tail_factor: f64, // B1 * R^{beta-n}, or 0 when nothing is dropped
}

/// Build the weight table for convolving sources on `f`'s grid.
pub fn build_kernel_table(
    omega: &SphereSymbol,
    spec: &KernelSpec,
    f: &Field,
    plan: &QuadraturePlan,
    part: KernelPart,
) -> Result<KernelTable, OperatorError> {
    validate(omega, spec, f, plan, part)?;
    let n = spec.n;
    let h = f.spacing();
    let shape = f.shape().to_vec();
    let wdims: Vec<usize> = shape.iter().map(|s| 2 * s - 1).collect();
    let total: usize = wdims.iter().product();
    let mut weights = vec![0.0f64; total];
    let weight_rows = wdims[0];
    let row_len = total / weight_rows;
    weights
        .par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(i0, chunk)| {
            let mut y = [0.0f64; 3];
            for (off, w) in chunk.iter_mut().enumerate() {
                let mut rem = off;
                let mut idx = [0usize; 3];
                for a in (1..n).rev() {
                    idx[a] = rem % wdims[a];
                    rem /= wdims[a];
                }
                idx[0] = i0;
                for a in 0..n {
                    let d = idx[a] as i64 - (shape[a] as i64 - 1);
                    y[a] = d as f64 * h;
                }
                *w = offset_weight(omega, spec, part, plan, &y[..n], h);
            }
        });

    // Did the outer radius actually drop anything reachable on this grid?
    let max_off2: f64 = shape
        .iter()
        .map(|&s| {
            let d = (s - 1) as f64 * h;
            d * d
        })
        .sum();
    let max_off = max_off2.sqrt() + h;
    let tail_factor = match plan.outer_radius {
        None => 0.0,
        Some(radius) if radius >= max_off => 0.0,
        Some(radius) if part == KernelPart::Near && radius >= spec.near_support_radius() => 0.0,
        Some(radius) => omega.declared_bound() * radius.powf(spec.beta - n as f64),
    };
    Ok(KernelTable {
        n,
        src_shape: shape,
        wdims,
        weights,
        h,
        tail_factor,
    })
}

/// Convolve `f` against a precomputed weight table. Output lives on `f`'s
/// grid; each output point is an independent deterministic sum over source
/// cells.
pub fn apply_with_table(table: &KernelTable, f: &Field) -> Result<Applied, OperatorError> {
    assert_eq!(f.shape(), &table.src_shape[..], "table was built for a different grid");
    assert!((f.spacing() - table.h).abs() <= f64::EPSILON * table.h);
    let src = f.values();
    let mut out = vec![0.0f64; src.len()];
    match table.n {
        1 => {
            let n0 = table.src_shape[0];
            out.par_iter_mut().enumerate().for_each(|(i, o)| {
                // w index i - j + n0 - 1 runs down from i + n0 - 1 to i
                let wrow = &table.weights[i..i + n0];
                let mut acc = 0.0;
                for (fj, wk) in src.iter().zip(wrow.iter().rev()) {
                    acc += fj * wk;
                }
                *o = acc;
            });
        }
        2 => {
            let (n0, n1) = (table.src_shape[0], table.src_shape[1]);
            let w1 = table.wdims[1];
            out.par_chunks_mut(n1).enumerate().for_each(|(i0, orow)| {
                for (i1, o) in orow.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for j0 in 0..n0 {
                        let wbase = (i0 + n0 - 1 - j0) * w1;
                        let frow = &src[j0 * n1..(j0 + 1) * n1];
                        let wrow = &table.weights[wbase + i1..wbase + i1 + n1];
                        let mut racc = 0.0;
                        for (fj, wk) in frow.iter().zip(wrow.iter().rev()) {
                            racc += fj * wk;
                        }
                        acc += racc;
                    }
                    *o = acc;
                }
            });
        }
        3 => {
            let (n0, n1, n2) = (
                table.src_shape[0],
                table.src_shape[1],
                table.src_shape[2],
            );
            let (w1, w2) = (table.wdims[1], table.wdims[2]);
            out.par_chunks_mut(n1 * n2).enumerate().for_each(|(i0, oplane)| {
                for i1 in 0..n1 {
                    for i2 in 0..n2 {
                        let mut acc = 0.0;
                        for j0 in 0..n0 {
                            for j1 in 0..n1 {
                                let wbase =
                                    ((i0 + n0 - 1 - j0) * w1 + (i1 + n1 - 1 - j1)) * w2;
                                let frow = &src[(j0 * n1 + j1) * n2..(j0 * n1 + j1 + 1) * n2];
                                let wrow = &table.weights[wbase + i2..wbase + i2 + n2];
                                let mut racc = 0.0;
                                for (fj, wk) in frow.iter().zip(wrow.iter().rev()) {
                                    racc += fj * wk;
                                }
                                acc += racc;
                            }
                        }
                        oplane[(i1 * n2) + i2] = acc;
                    }
                }
            });
        }
        _ => unreachable!(),
    }
    let field = Field::new(
        f.shape().to_vec(),
        f.spacing(),
        f.origin().to_vec(),
        out,
    )?;
    let tail_bound = table.tail_factor * lq_norm(f, 1.0)?;
    Ok(Applied { field, tail_bound })
}

/// Direct quadrature of the requested kernel part on `f`'s own grid.
pub fn apply(
    omega: &SphereSymbol,
    spec: &KernelSpec,
    f: &Field,
    plan: &QuadraturePlan,
    part: KernelPart,
) -> Result<Applied, OperatorError> {
    let table = build_kernel_table(omega, spec, f, plan, part)?;
    apply_with_table(&table, f)
}

/// `T_eps f` (full kernel).
pub fn apply_direct(
    omega: &SphereSymbol,
    spec: &KernelSpec,
    f: &Field,
    plan: &QuadraturePlan,
) -> Result<Applied, OperatorError> {
    apply(omega, spec, f, plan, KernelPart::Full)
}

/// Near part `T_1 f`.
pub fn apply_t1(
    omega: &SphereSymbol,
    spec: &KernelSpec,
    f: &Field,
    plan: &QuadraturePlan,
) -> Result<Applied, OperatorError> {
    apply(omega, spec, f, plan, KernelPart::Near)
}

/// Far part `T_2 f`.
pub fn apply_t2(
    omega: &SphereSymbol,
    spec: &KernelSpec,
    f: &Field,
    plan: &QuadraturePlan,
) -> Result<Applied, OperatorError> {
    apply(omega, spec, f, plan, KernelPart::Far)
}

/// Evaluate the operator at one (not necessarily grid-aligned) point.
/// Returns the value and the tail bound.
pub fn apply_at(
    omega: &SphereSymbol,
    spec: &KernelSpec,
    f: &Field,
    plan: &QuadraturePlan,
    part: KernelPart,
    x: &[f64],
) -> Result<(f64, f64), OperatorError> {
    validate(omega, spec, f, plan, part)?;
    let n = spec.n;
    let h = f.spacing();
    let mut acc = 0.0;
    let mut y = [0.0f64; 3];
    for (lin, v) in f.values().iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        let c = f.center(lin);
        for a in 0..n {
            y[a] = x[a] - c[a];
        }
        acc += offset_weight(omega, spec, part, plan, &y[..n], h) * v;
    }
    let tail = match plan.outer_radius {
        None => 0.0,
        Some(radius) => omega.declared_bound() * radius.powf(spec.beta - n as f64) * lq_norm(f, 1.0)?,
    };
    Ok((acc, tail))
}

/// Sample the requested kernel part at wrapped lattice offsets of `f`'s
/// periodic box with the sharp `eps <= |y| <= radius` indicator (plain
/// center rule, no refinement). Shared by the FFT path and the
/// frequency-side norm.
pub(crate) fn sample_kernel_lattice(
    omega: &SphereSymbol,
    spec: &KernelSpec,
    f: &Field,
    part: KernelPart,
    radius: f64,
) -> Vec<f64> {
    let n = spec.n;
    let h = f.spacing();
    let shape = f.shape();
    let total = f.len();
    let mut out = vec![0.0f64; total];
    let row_len = total / shape[0];
    out.par_chunks_mut(row_len).enumerate().for_each(|(k0, chunk)| {
        let mut y = [0.0f64; 3];
        for (off, slot) in chunk.iter_mut().enumerate() {
            let mut rem = off;
            let mut idx = [0usize; 3];
            for a in (1..n).rev() {
                idx[a] = rem % shape[a];
                rem /= shape[a];
            }
            idx[0] = k0;
            for a in 0..n {
                y[a] = centered_offset(idx[a], shape[a]) as f64 * h;
            }
            let r = y.iter().take(n).map(|c| c * c).sum::<f64>().sqrt();
            *slot = if r >= spec.epsilon && r <= radius {
                part_value(omega, spec, part, &y[..n], r)
            } else {
                0.0
            };
        }
    });
    out
}

/// Alias-free kernel radius for `f`'s periodic box: the smaller of half the
/// box and the padding between the support of `f` and the box faces.
pub(crate) fn alias_free_radius(f: &Field) -> f64 {
    let n = f.dimension();
    let h = f.spacing();
    let mut r: f64 = f64::INFINITY;
    let (slo, shi) = match f.support_box() {
        Some(b) => b,
        None => {
            // zero field: any radius works; cap at half the box
            let half = f
                .shape()
                .iter()
                .map(|&s| 0.5 * s as f64 * h)
                .fold(f64::INFINITY, f64::min);
            return half;
        }
    };
    for a in 0..n {
        let lo = f.origin()[a];
        let hi = lo + f.shape()[a] as f64 * h;
        let half = 0.5 * (hi - lo);
        let pad = (slo[a] - lo).min(hi - shi[a]);
        r = r.min(half).min(pad);
    }
    r
}

/// Circular convolution of `f` with the lattice-sampled kernel part via the
/// discrete Fourier transform. The effective kernel radius is the plan
/// radius when given, otherwise the largest alias-free radius of the box;
/// wraparound is rejected by support arithmetic.
pub fn apply_periodic_fft(
    omega: &SphereSymbol,
    spec: &KernelSpec,
    f: &Field,
    plan: &QuadraturePlan,
    part: KernelPart,
) -> Result<Applied, OperatorError> {
    validate(omega, spec, f, plan, part)?;
    let n = spec.n;
    let free = alias_free_radius(f);
    let radius = match plan.outer_radius {
        Some(r) => {
            if r > free {
                return Err(OperatorError::Wraparound {
                    padding: free,
                    required: r,
                });
            }
            r
        }
        None => {
            if part == KernelPart::Near {
                let need = spec.near_support_radius();
                if free < need {
                    return Err(OperatorError::Wraparound {
                        padding: free,
                        required: need,
                    });
                }
                need
            } else {
                free
            }
        }
    };

    let kernel = sample_kernel_lattice(omega, spec, f, part, radius);
    let shape = f.shape().to_vec();
    let mut kf: Vec<Complex<f64>> = kernel.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut ff: Vec<Complex<f64>> = f.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_nd(&mut kf, &shape, false);
    fft_nd(&mut ff, &shape, false);
    let meas = f.cell_measure();
    for (a, b) in ff.iter_mut().zip(&kf) {
        *a = *a * *b * meas;
    }
    fft_nd(&mut ff, &shape, true);
    let out: Vec<f64> = ff.iter().map(|c| c.re).collect();
    let field = Field::new(shape, f.spacing(), f.origin().to_vec(), out)?;

    let covered = part == KernelPart::Near && radius >= spec.near_support_radius();
    let tail_bound = if covered {
        0.0
    } else {
        omega.declared_bound() * radius.powf(spec.beta - n as f64) * lq_norm(f, 1.0)?
    };
    Ok(Applied { field, tail_bound })
}

/// Frequency-domain reference operator: the principal-value convolution
/// with `x_j / |x|^{n+1}` applied through its multiplier
/// `-i (xi_j/|xi|) / c_n`, `c_n = Gamma((n+1)/2) / pi^{(n+1)/2}`, with the
/// zero mode (and axis Nyquist bins, which have no odd partner) annihilated.
/// For `n = 1` this is convolution with `1/x`, multiplier `-i pi sign(xi)`.
pub fn riesz_reference(f: &Field, axis: usize, n: usize) -> Result<Field, OperatorError> {
    if f.dimension() != n {
        return Err(OperatorError::DimensionMismatch {
            spec: n,
            field: f.dimension(),
        });
    }
    assert!(axis < n);
    // 1/c_n for n = 1, 2, 3
    let inv_cn = match n {
        1 => std::f64::consts::PI,
        2 => 2.0 * std::f64::consts::PI,
        3 => std::f64::consts::PI * std::f64::consts::PI,
        other => return Err(OperatorError::Kernel(KernelError::UnsupportedDimension(other))),
    };
    let shape = f.shape().to_vec();
    let h = f.spacing();
    let mut ff: Vec<Complex<f64>> = f.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_nd(&mut ff, &shape, false);
    let total = f.len();
    for lin in 0..total {
        let mut rem = lin;
        let mut xi = [0.0f64; 3];
        let mut nyquist = false;
        for a in (0..n).rev() {
            let k = rem % shape[a];
            rem /= shape[a];
            if shape[a] % 2 == 0 && k == shape[a] / 2 {
                nyquist = true;
            }
            xi[a] = frequency(k, shape[a], h);
        }
        let norm = xi[..n].iter().map(|x| x * x).sum::<f64>().sqrt();
        let m = if norm == 0.0 || nyquist {
            Complex::new(0.0, 0.0)
        } else {
            Complex::new(0.0, -xi[axis] / norm * inv_cn)
        };
        ff[lin] *= m;
    }
    fft_nd(&mut ff, &shape, true);
    let out: Vec<f64> = ff.iter().map(|c| c.re).collect();
    Ok(Field::new(shape, h, f.origin().to_vec(), out)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::builtin_symbol;
    use approx::assert_abs_diff_eq;

    /// Indicator of [0,1] sampled on [-16,16) with 4096 cells (h = 1/128).
    fn indicator01() -> Field {
        let h = 1.0 / 128.0;
        let total = 4096;
        let origin = -16.0;
        let values: Vec<f64> = (0..total)
            .map(|i| {
                let x = origin + (i as f64 + 0.5) * h;
                if (0.0..1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Field::new(vec![total], h, vec![origin], values).unwrap()
    }

    #[test]
    fn odd_kernel_cancels_at_interval_midpoint() {
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.5, 0.1).unwrap();
        let f = indicator01();
        let plan = QuadraturePlan::default();
        let (v, tail) = apply_at(&sign, &spec, &f, &plan, KernelPart::Full, &[0.5]).unwrap();
        assert!(v.abs() < 1e-12, "midpoint value {v}");
        assert_eq!(tail, 0.0);
    }

    #[test]
    fn full_operator_matches_antiderivative() {
        // T f(0.3) = 2(sqrt(0.3) - sqrt(0.7)) for the sign kernel at beta = 1/2
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.5, 0.1).unwrap();
        let f = indicator01();
        let want = 2.0 * (0.3f64.sqrt() - 0.7f64.sqrt());
        // the sharp indicator on subcell centers misassigns up to half a
        // subcell of kernel mass at the truncation sphere, so the error is
        // first order in h/refine
        let mut errs = Vec::new();
        for refine in [1usize, 8, 64] {
            let plan = QuadraturePlan {
                outer_radius: None,
                refine,
            };
            let (v, _) = apply_at(&sign, &spec, &f, &plan, KernelPart::Full, &[0.3]).unwrap();
            errs.push((v - want).abs());
        }
        assert!(errs[2] < 1e-3, "refine=64 error {}", errs[2]);
        assert!(errs[2] < errs[1] && errs[1] < errs[0], "errors should shrink: {errs:?}");
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.5, 0.1).unwrap();
        let f = Field::zeros(vec![256], 1.0 / 32.0, vec![-4.0]);
        let out = apply_direct(&sign, &spec, &f, &QuadraturePlan::default()).unwrap();
        assert!(out.field.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn far_part_vanishes_inside_support_gap() {
        // all offsets reaching the support have |y| <= 0.7 < 1/beta = 2
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.5, 0.1).unwrap();
        let f = indicator01();
        let plan = QuadraturePlan::default();
        let (v, _) = apply_at(&sign, &spec, &f, &plan, KernelPart::Far, &[0.3]).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn far_part_matches_adaptive_quadrature() {
        // T_2 f(3.5) integrates sin^2(pi (y-2)/4) / sqrt(y) over y in [2.5, 3.5].
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.5, 0.1).unwrap();
        let f = indicator01();
        let plan = QuadraturePlan::default();
        let (v, _) = apply_at(&sign, &spec, &f, &plan, KernelPart::Far, &[3.5]).unwrap();
        let g = |y: f64| {
            let ramp = (std::f64::consts::PI * (y - 2.0) / 4.0).sin().powi(2);
            ramp / y.sqrt()
        };
        let want = simpson(&g, 2.5, 3.5, 1 << 12);
        assert!(v > 0.0);
        assert!((v - want).abs() < 1e-4, "got {v}, want {want}");
    }

    fn simpson(g: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut s = g(a) + g(b);
        for i in 1..panels {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(x);
        }
        s * h / 3.0
    }

    #[test]
    fn splitting_identity_pointwise() {
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.5, 0.125).unwrap();
        let f = indicator01();
        let plan = QuadraturePlan::default();
        let t = apply_direct(&sign, &spec, &f, &plan).unwrap().field;
        let t1 = apply_t1(&sign, &spec, &f, &plan).unwrap().field;
        let t2 = apply_t2(&sign, &spec, &f, &plan).unwrap().field;
        for i in 0..f.len() {
            let lhs = t1.values()[i] + t2.values()[i];
            let scale = t.values()[i]
                .abs()
                .max(t1.values()[i].abs())
                .max(t2.values()[i].abs())
                .max(1e-300);
            assert!((lhs - t.values()[i]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn linearity() {
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.4, 0.1).unwrap();
        let plan = QuadraturePlan::default();
        let f = indicator01();
        let mut g = f.clone();
        for (i, v) in g.values_mut().iter_mut().enumerate() {
            *v = ((i as f64) * 0.01).sin() * if i % 3 == 0 { 1.0 } else { 0.2 };
        }
        let table = build_kernel_table(&sign, &spec, &f, &plan, KernelPart::Full).unwrap();
        let tf = apply_with_table(&table, &f).unwrap().field;
        let tg = apply_with_table(&table, &g).unwrap().field;
        let mut combo = f.clone();
        for (i, v) in combo.values_mut().iter_mut().enumerate() {
            *v = 2.5 * f.values()[i] + g.values()[i];
        }
        let tc = apply_with_table(&table, &combo).unwrap().field;
        let scale = tf
            .values()
            .iter()
            .zip(tg.values())
            .map(|(a, b)| 2.5 * a.abs() + b.abs())
            .fold(0.0f64, f64::max);
        for i in 0..f.len() {
            let want = 2.5 * tf.values()[i] + tg.values()[i];
            assert!((tc.values()[i] - want).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn translation_equivariance() {
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.5, 0.1).unwrap();
        let plan = QuadraturePlan::default();
        let f = indicator01();
        let shift = 64usize;
        let mut g = Field::zeros(f.shape().to_vec(), f.spacing(), f.origin().to_vec());
        for i in 0..f.len() - shift {
            g.values_mut()[i + shift] = f.values()[i];
        }
        let table = build_kernel_table(&sign, &spec, &f, &plan, KernelPart::Full).unwrap();
        let tf = apply_with_table(&table, &f).unwrap().field;
        let tg = apply_with_table(&table, &g).unwrap().field;
        for i in 0..f.len() - shift {
            assert_eq!(tg.values()[i + shift], tf.values()[i]);
        }
    }

    #[test]
    fn skew_adjoint_for_odd_symbol() {
        use crate::field::inner_product;
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.35, 0.1).unwrap();
        let plan = QuadraturePlan::default();
        let h = 1.0 / 64.0;
        let total = 1024;
        let origin = -8.0;
        let mk = |c: f64, w: f64| {
            let values: Vec<f64> = (0..total)
                .map(|i| {
                    let x = origin + (i as f64 + 0.5) * h;
                    (-(x - c) * (x - c) / (w * w)).exp()
                })
                .collect();
            Field::new(vec![total], h, vec![origin], values).unwrap()
        };
        let f = mk(-0.5, 0.4);
        let g = mk(0.7, 0.6);
        let table = build_kernel_table(&sign, &spec, &f, &plan, KernelPart::Full).unwrap();
        let tf = apply_with_table(&table, &f).unwrap().field;
        let tg = apply_with_table(&table, &g).unwrap().field;
        let sym = inner_product(&tf, &g) + inner_product(&f, &tg);
        let scale = lq_norm(&f, 2.0).unwrap() * lq_norm(&g, 2.0).unwrap();
        assert!(sym.abs() <= 1e-10 * scale, "sym = {sym}");
    }

    #[test]
    fn scaling_law_for_full_kernel() {
        // T^{eps} f(2.) (x) = 2^{-beta} (T^{2 eps} f)(2x) on the halved grid
        let sign = builtin_symbol("sign", 1).unwrap();
        let beta = 0.4;
        let f = indicator01();
        // g(x) = f(2x) on the grid with half the spacing and halved origin
        let g_vals = f.values().to_vec();
        let g = Field::new(
            vec![f.len()],
            f.spacing() / 2.0,
            vec![f.origin()[0] / 2.0],
            g_vals,
        )
        .unwrap();
        let spec_f = KernelSpec::new(1, beta, 0.25).unwrap();
        let spec_g = KernelSpec::new(1, beta, 0.125).unwrap();
        let plan = QuadraturePlan::default();
        let tf = apply_direct(&sign, &spec_f, &f, &plan).unwrap().field;
        let tg = apply_direct(&sign, &spec_g, &g, &plan).unwrap().field;
        let factor = 2.0f64.powf(-beta);
        for i in 0..f.len() {
            // g's cell i sits at x, f's cell i sits at 2x
            let want = factor * tf.values()[i];
            let got = tg.values()[i];
            let scale = want.abs().max(1e-10);
            assert!((got - want).abs() <= 1e-10 * scale, "cell {i}: {got} vs {want}");
        }
    }

    #[test]
    fn fft_path_matches_direct_with_matching_rule() {
        // With refine = 1 the two paths sum identical terms.
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.5, 0.125).unwrap();
        let h = 1.0 / 64.0;
        let total = 2048;
        let origin = -16.0;
        let values: Vec<f64> = (0..total)
            .map(|i| {
                let x: f64 = origin + (i as f64 + 0.5) * h;
                let v = (-x * x).exp();
                if v < 1e-14 {
                    0.0
                } else {
                    v
                }
            })
            .collect();
        let f = Field::new(vec![total], h, vec![origin], values).unwrap();
        let radius = 8.0;
        let plan = QuadraturePlan {
            outer_radius: Some(radius),
            refine: 1,
        };
        let direct = apply(&sign, &spec, &f, &plan, KernelPart::Full).unwrap().field;
        let fast = apply_periodic_fft(&sign, &spec, &f, &plan, KernelPart::Full)
            .unwrap()
            .field;
        let num: f64 = direct
            .values()
            .iter()
            .zip(fast.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let den: f64 = direct.values().iter().map(|a| a * a).sum();
        assert!((num / den.max(1e-300)).sqrt() < 1e-10);
    }

    #[test]
    fn fft_impulse_returns_kernel_samples() {
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.5, 0.25).unwrap();
        let h = 1.0 / 16.0;
        let total = 512;
        let origin = -16.0;
        let mut f = Field::zeros(vec![total], h, vec![origin]);
        // unit impulse: delta approximation 1/h at the cell whose center is origin+...
        let mid = total / 2;
        f.values_mut()[mid] = 1.0 / h;
        let plan = QuadraturePlan {
            outer_radius: Some(4.0),
            refine: 1,
        };
        let out = apply_periodic_fft(&sign, &spec, &f, &plan, KernelPart::Near)
            .unwrap()
            .field;
        // output at cell mid + d should be K1(d h) with the eps/radius indicator
        let x_mid = f.center(mid)[0];
        for d in [-40i64, -9, -4, 4, 9, 17, 40] {
            let idx = (mid as i64 + d) as usize;
            let y = [f.center(idx)[0] - x_mid];
            let r = y[0].abs();
            let want = if r >= spec.epsilon && r <= 4.0 {
                part_value(&sign, &spec, KernelPart::Near, &y, r)
            } else {
                0.0
            };
            assert!((out.values()[idx] - want).abs() <= 1e-10 * want.abs().max(1.0));
        }
    }

    #[test]
    fn fft_detects_wraparound() {
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.5, 0.125).unwrap();
        let h = 1.0 / 32.0;
        let total = 512; // box [-8, 8): no padding left around a full-box support
        let origin = -8.0;
        let values: Vec<f64> = (0..total).map(|_| 1.0).collect();
        let f = Field::new(vec![total], h, vec![origin], values).unwrap();
        let err = apply_periodic_fft(&sign, &spec, &f, &QuadraturePlan::default(), KernelPart::Near);
        assert!(matches!(err, Err(OperatorError::Wraparound { .. })));
    }

    #[test]
    fn riesz_reference_single_mode_1d() {
        // convolution with 1/x sends sin(2 pi x) to -pi cos(2 pi x)
        let total = 256;
        let h = 1.0 / total as f64 * 8.0; // box [0, 8): holds integer modes
        let values: Vec<f64> = (0..total)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                (2.0 * std::f64::consts::PI * x).sin()
            })
            .collect();
        let f = Field::new(vec![total], h, vec![0.0], values).unwrap();
        let out = riesz_reference(&f, 0, 1).unwrap();
        for i in 0..total {
            let x = (i as f64 + 0.5) * h;
            let want = -std::f64::consts::PI * (2.0 * std::f64::consts::PI * x).cos();
            assert_abs_diff_eq!(out.values()[i], want, epsilon = 1e-9);
        }
    }

    #[test]
    fn riesz_reference_kills_constants() {
        let f = Field::new(vec![64], 0.125, vec![0.0], vec![3.25; 64]).unwrap();
        let out = riesz_reference(&f, 0, 1).unwrap();
        assert!(out.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn riesz_reference_single_mode_2d() {
        // mode xi = (1, 0): multiplier -2 pi i, so cos -> 2 pi sin
        let nside = 32;
        let h = 1.0 / nside as f64 * 4.0; // box [0,4)^2
        // one cycle per unit length on a box of length 4: four full periods
        let mut values = vec![0.0; nside * nside];
        for i0 in 0..nside {
            for i1 in 0..nside {
                let x = (i0 as f64 + 0.5) * h;
                values[i0 * nside + i1] = (2.0 * std::f64::consts::PI * x).cos();
            }
        }
        let f = Field::new(vec![nside, nside], h, vec![0.0, 0.0], values).unwrap();
        let out = riesz_reference(&f, 0, 2).unwrap();
        for i0 in 0..nside {
            for i1 in 0..nside {
                let x = (i0 as f64 + 0.5) * h;
                let want = 2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * x).sin();
                assert_abs_diff_eq!(out.values()[i0 * nside + i1], want, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn resolution_guard() {
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.5, 0.01).unwrap();
        let f = indicator01(); // h = 1/128 > eps/2
        let err = apply_direct(&sign, &spec, &f, &QuadraturePlan::default());
        assert!(matches!(err, Err(OperatorError::Resolution { .. })));
    }

    #[test]
    fn truncation_guard() {
        let sign = builtin_symbol("sign", 1).unwrap();
        let spec = KernelSpec::new(1, 0.5, 0.1).unwrap(); // near support radius 4
        let f = indicator01();
        let plan = QuadraturePlan {
            outer_radius: Some(2.0),
            refine: 8,
        };
        let err = apply_t1(&sign, &spec, &f, &plan);
        assert!(matches!(err, Err(OperatorError::Truncation { .. })));
        // far part is fine with a short radius, but reports a nonzero tail bound
        let far = apply_t2(&sign, &spec, &f, &plan).unwrap();
        assert!(far.tail_bound > 0.0);
    }
}
