//! Grid-sampled functions on `R^n`.
//!
//! A `Field` stores samples at cell centers of a uniform grid with spacing
//! `h` on every axis; the sample for multi-index `i` sits at
//! `origin + (i + 1/2) h` and carries integration measure `h^n`. Fields are
//! implicitly zero outside their grid.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid exponent {0}; q must be positive")]
    InvalidExponent(f64),
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("shape/value mismatch: shape product {expected}, got {got} values")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("point lies outside the grid domain")]
    OutOfDomain,
    #[error("bad field file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An exponent `q` in `(1, inf)` together with its Hölder conjugate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentQ {
    pub q: f64,
    pub conjugate: f64,
}

impl ExponentQ {
    pub fn new(q: f64) -> Result<Self, FieldError> {
        if !(q > 1.0 && q.is_finite()) {
            return Err(FieldError::InvalidExponent(q));
        }
        Ok(ExponentQ {
            q,
            conjugate: q / (q - 1.0),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    n: usize,
    shape: Vec<usize>,
    h: f64,
    origin: Vec<f64>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(shape: Vec<usize>, h: f64, origin: Vec<f64>, values: Vec<f64>) -> Result<Self, FieldError> {
        let n = shape.len();
        assert!((1..=3).contains(&n), "supported dimensions are 1..=3");
        assert_eq!(origin.len(), n);
        assert!(h > 0.0);
        let total: usize = shape.iter().product();
        if values.len() != total {
            return Err(FieldError::ShapeMismatch {
                expected: total,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite);
        }
        Ok(Field {
            n,
            shape,
            h,
            origin,
            values,
        })
    }

    pub fn zeros(shape: Vec<usize>, h: f64, origin: Vec<f64>) -> Self {
        let total = shape.iter().product();
        Field::new(shape, h, origin, vec![0.0; total]).unwrap()
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Measure of one grid cell, `h^n`.
    pub fn cell_measure(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    /// Row-major linear index of a multi-index.
    pub fn linear_index(&self, idx: &[usize]) -> usize {
        let mut lin = 0;
        for (i, s) in idx.iter().zip(&self.shape) {
            debug_assert!(i < s);
            lin = lin * s + i;
        }
        lin
    }

    /// Multi-index of a row-major linear index.
    pub fn multi_index(&self, mut lin: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n];
        for a in (0..self.n).rev() {
            idx[a] = lin % self.shape[a];
            lin /= self.shape[a];
        }
        idx
    }

    /// Cell-center coordinates of a linear index.
    pub fn center(&self, lin: usize) -> Vec<f64> {
        let idx = self.multi_index(lin);
        idx.iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + (i as f64 + 0.5) * self.h)
            .collect()
    }

    /// Apply `g` pointwise, returning a new field.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> Field {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v = g(*v);
        }
        out
    }

    /// Bounding box `[lo, hi)` of the nonzero cells (cell-aligned), or None
    /// for the zero field.
    pub fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut lo = vec![usize::MAX; self.n];
        let mut hi = vec![0usize; self.n];
        let mut any = false;
        for (lin, v) in self.values.iter().enumerate() {
            if *v != 0.0 {
                any = true;
                let idx = self.multi_index(lin);
                for a in 0..self.n {
                    lo[a] = lo[a].min(idx[a]);
                    hi[a] = hi[a].max(idx[a]);
                }
            }
        }
        if !any {
            return None;
        }
        let lo_x = lo
            .iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + i as f64 * self.h)
            .collect();
        let hi_x = hi
            .iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + (i as f64 + 1.0) * self.h)
            .collect();
        Some((lo_x, hi_x))
    }
}

/// `(sum |f_i|^q h^n)^{1/q}`; `f64::INFINITY` selects the sup norm.
pub fn lq_norm(f: &Field, q: f64) -> Result<f64, FieldError> {
    if q.is_nan() || q <= 0.0 {
        return Err(FieldError::InvalidExponent(q));
    }
    if q.is_infinite() {
        return Ok(f.values().iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let meas = f.cell_measure();
    let s: f64 = f.values().iter().map(|v| v.abs().powf(q)).sum();
    Ok((s * meas).powf(1.0 / q))
}

/// Grid inner product `sum f_i g_i h^n`.
pub fn inner_product(f: &Field, g: &Field) -> f64 {
    debug_assert_eq!(f.shape(), g.shape());
    let s: f64 = f.values().iter().zip(g.values()).map(|(a, b)| a * b).sum();
    s * f.cell_measure()
}

/// Distribution function `|{ |f| > t }|` by cell-center counting.
pub fn distribution_measure(f: &Field, t: f64) -> f64 {
    let count = f.values().iter().filter(|v| v.abs() > t).count();
    count as f64 * f.cell_measure()
}

/// `p * int_0^inf t^{p-1} |{|f| > t}| dt` summed exactly over the sorted
/// value levels. Mathematically equal to `sum |f_i|^p h^n`; the two routes
/// differ only in rounding.
pub fn layer_cake_power_norm(f: &Field, p: f64) -> Result<f64, FieldError> {
    if p.is_nan() || p < 1.0 {
        return Err(FieldError::InvalidExponent(p));
    }
    let mut levels: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    levels.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // With a_1 >= a_2 >= ... and mu(t) = h^n * k on [a_{k+1}, a_k), the
    // integral telescopes to sum_k k (a_k^p - a_{k+1}^p) h^n.
    let mut total = 0.0;
    for (k, pair) in levels.windows(2).enumerate() {
        total += (k + 1) as f64 * (pair[0].powf(p) - pair[1].powf(p));
    }
    if let Some(last) = levels.last() {
        total += levels.len() as f64 * last.powf(p);
    }
    Ok(total * f.cell_measure())
}

const MAGIC: &str = "czx-field v1";

/// Write the `czx-field v1` format: a text header (`n`, `shape`, `h`,
/// `origin`), a blank line, then raw little-endian doubles in row-major
/// order.
pub fn write_field(f: &Field, path: &Path) -> Result<(), FieldError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "n={}", f.dimension())?;
    let shape: Vec<String> = f.shape().iter().map(|s| s.to_string()).collect();
    writeln!(w, "shape={}", shape.join(","))?;
    writeln!(w, "h={}", f.spacing())?;
    let origin: Vec<String> = f.origin().iter().map(|s| s.to_string()).collect();
    writeln!(w, "origin={}", origin.join(","))?;
    writeln!(w)?;
    for v in f.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<Field, FieldError> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);
    let mut line = String::new();

    let read_line = |r: &mut BufReader<std::fs::File>, line: &mut String| -> Result<String, FieldError> {
        line.clear();
        r.read_line(line)?;
        Ok(line.trim_end_matches(['\n', '\r']).to_string())
    };

    let magic = read_line(&mut r, &mut line)?;
    if magic != MAGIC {
        return Err(FieldError::Parse(format!("bad magic {magic:?}")));
    }
    let mut n = None;
    let mut shape: Option<Vec<usize>> = None;
    let mut h = None;
    let mut origin: Option<Vec<f64>> = None;
    loop {
        let l = read_line(&mut r, &mut line)?;
        if l.is_empty() {
            break;
        }
        let (key, value) = l
            .split_once('=')
            .ok_or_else(|| FieldError::Parse(format!("bad header line {l:?}")))?;
        match key {
            "n" => n = Some(value.parse::<usize>().map_err(|e| FieldError::Parse(e.to_string()))?),
            "shape" => {
                shape = Some(
                    value
                        .split(',')
                        .map(|s| s.trim().parse::<usize>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| FieldError::Parse(e.to_string()))?,
                )
            }
            "h" => h = Some(value.parse::<f64>().map_err(|e| FieldError::Parse(e.to_string()))?),
            "origin" => {
                origin = Some(
                    value
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| FieldError::Parse(e.to_string()))?,
                )
            }
            other => return Err(FieldError::Parse(format!("unknown header key {other:?}"))),
        }
    }
    let n = n.ok_or_else(|| FieldError::Parse("missing n".into()))?;
    let shape = shape.ok_or_else(|| FieldError::Parse("missing shape".into()))?;
    let h = h.ok_or_else(|| FieldError::Parse("missing h".into()))?;
    let origin = origin.ok_or_else(|| FieldError::Parse("missing origin".into()))?;
    if shape.len() != n || origin.len() != n {
        return Err(FieldError::Parse("header dimension mismatch".into()));
    }
    let total: usize = shape.iter().product();
    let mut bytes = Vec::with_capacity(total * 8);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != total * 8 {
        return Err(FieldError::Parse(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            total * 8
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Field::new(shape, h, origin, values)
}

/// CSV export with columns `x1..xn,value`, row-major order.
pub fn export_csv(f: &Field, path: &Path) -> Result<(), FieldError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let header: Vec<String> = (1..=f.dimension()).map(|a| format!("x{a}")).collect();
    writeln!(w, "{},value", header.join(","))?;
    for (lin, v) in f.values().iter().enumerate() {
        let x = f.center(lin);
        let coords: Vec<String> = x.iter().map(|c| c.to_string()).collect();
        writeln!(w, "{},{}", coords.join(","), v)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Indicator of `[0, 1)` on `[0, 8)` with 2^k cells per unit.
    fn unit_indicator(cells_per_unit: usize) -> Field {
        let h = 1.0 / cells_per_unit as f64;
        let total = 8 * cells_per_unit;
        let values: Vec<f64> = (0..total)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                if x < 1.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Field::new(vec![total], h, vec![0.0], values).unwrap()
    }

    #[test]
    fn l2_norm_of_indicator() {
        let f = unit_indicator(1024);
        let got = lq_norm(&f, 2.0).unwrap();
        assert!((got - 1.0).abs() <= f.spacing());
    }

    #[test]
    fn zero_field_norm() {
        let f = Field::zeros(vec![64], 0.1, vec![0.0]);
        assert_eq!(lq_norm(&f, 2.0).unwrap(), 0.0);
        assert_eq!(lq_norm(&f, f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_l2_norm() {
        // ||e^{-pi x^2}||_2 = 2^{-1/4} from the Gaussian integral.
        let h = 1.0 / 128.0;
        let total = 2048;
        let origin = -(total as f64) * h / 2.0;
        let values: Vec<f64> = (0..total)
            .map(|i| {
                let x = origin + (i as f64 + 0.5) * h;
                (-std::f64::consts::PI * x * x).exp()
            })
            .collect();
        let f = Field::new(vec![total], h, vec![origin], values).unwrap();
        let got = lq_norm(&f, 2.0).unwrap();
        assert_abs_diff_eq!(got, 2.0f64.powf(-0.25), epsilon = 1e-12);
    }

    #[test]
    fn invalid_exponent_rejected() {
        let f = unit_indicator(8);
        assert!(matches!(lq_norm(&f, 0.0), Err(FieldError::InvalidExponent(_))));
        assert!(matches!(lq_norm(&f, -2.0), Err(FieldError::InvalidExponent(_))));
    }

    #[test]
    fn distribution_of_indicator() {
        let f = unit_indicator(512);
        assert_abs_diff_eq!(distribution_measure(&f, 0.5), 1.0, epsilon = 1e-12);
        assert_eq!(distribution_measure(&f, 2.0), 0.0);
    }

    #[test]
    fn layer_cake_matches_power_sum_for_indicator() {
        let f = unit_indicator(512);
        let lc = layer_cake_power_norm(&f, 2.0).unwrap();
        let direct = lq_norm(&f, 2.0).unwrap().powi(2);
        assert_abs_diff_eq!(lc, direct, epsilon = 1e-12);
        assert_abs_diff_eq!(lc, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn layer_cake_matches_power_sum_random_signs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..256)
            .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let f = Field::new(vec![256], 0.25, vec![0.0], values).unwrap();
        let lc = layer_cake_power_norm(&f, 3.0).unwrap();
        let direct: f64 = f.values().iter().map(|v| v.abs().powi(3)).sum::<f64>() * f.cell_measure();
        assert!((lc - direct).abs() <= 1e-12 * direct.max(1e-300));
    }

    #[test]
    fn roundtrip_field_file() {
        let dir = std::env::temp_dir().join("czx-field-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.czx");
        let f = unit_indicator(32);
        write_field(&f, &path).unwrap();
        let g = read_field(&path).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn csv_export_has_all_rows() {
        let dir = std::env::temp_dir().join("czx-field-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.csv");
        let f = Field::zeros(vec![4, 4], 0.5, vec![0.0, 0.0]);
        export_csv(&f, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert!(text.starts_with("x1,x2,value"));
    }

    #[test]
    fn conjugate_exponent_identity() {
        for q in [1.1, 1.5, 2.0, 3.0, 7.0, 41.0] {
            let e = ExponentQ::new(q).unwrap();
            assert!((1.0 / e.q + 1.0 / e.conjugate - 1.0).abs() <= 1e-14);
        }
        assert!(ExponentQ::new(1.0).is_err());
        assert!(ExponentQ::new(0.5).is_err());
    }
}
