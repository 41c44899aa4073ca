//! Dyadic Hardy–Littlewood maximal operator on grid fields.
//!
//! The supremum runs over the dyadic cubes of a power-of-two root box whose
//! cells coincide with the grid, so cube averages are cell-exact and the
//! weak (1,1) bound holds with constant exactly 1 by the stopping-cube
//! argument.

use thiserror::Error;

use crate::dyadic::DyadicCube;
use crate::field::{lq_norm, Field, FieldError};
use crate::report::{Status, VerdictReport, VerdictRow};

#[derive(Debug, Error)]
pub enum MaximalError {
    #[error("field shape {0:?} is not a power-of-two hypercube")]
    NotDyadicGrid(Vec<usize>),
    #[error("level threshold must be positive, got {0}")]
    InvalidLambda(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Per-level cube sums of `|f|` (or any cell function) over the dyadic tree
/// of the root box. Level `k` holds `2^{kn}` entries in row-major order.
pub(crate) struct CubePyramid {
    pub n: usize,
    pub levels: u32,
    /// `sums[k]` are cube sums of the cell values at level `k` (root is k = 0).
    pub sums: Vec<Vec<f64>>,
}

impl CubePyramid {
    /// Cell count per axis must be a power of two and equal on every axis.
    pub fn build(values: &[f64], shape: &[usize]) -> Result<CubePyramid, MaximalError> {
        let n = shape.len();
        let side = shape[0];
        if !side.is_power_of_two() || shape.iter().any(|&s| s != side) {
            return Err(MaximalError::NotDyadicGrid(shape.to_vec()));
        }
        let levels = side.trailing_zeros();
        let mut sums: Vec<Vec<f64>> = Vec::with_capacity(levels as usize + 1);
        sums.push(values.to_vec());
        // bottom-up: each coarse cube sums its 2^n children
        let mut fine_side = side;
        while fine_side > 1 {
            let coarse_side = fine_side / 2;
            let fine = &sums[sums.len() - 1];
            let total = coarse_side.pow(n as u32);
            let mut coarse = vec![0.0f64; total];
            for (lin, slot) in coarse.iter_mut().enumerate() {
                let mut idx = [0usize; 3];
                let mut rem = lin;
                for a in (0..n).rev() {
                    idx[a] = rem % coarse_side;
                    rem /= coarse_side;
                }
                let mut acc = 0.0;
                for mask in 0..(1usize << n) {
                    let mut flin = 0;
                    for a in 0..n {
                        let fa = 2 * idx[a] + ((mask >> a) & 1);
                        flin = flin * fine_side + fa;
                    }
                    acc += fine[flin];
                }
                *slot = acc;
            }
            sums.push(coarse);
            fine_side = coarse_side;
        }
        sums.reverse(); // root first
        Ok(CubePyramid { n, levels, sums })
    }

    /// Cell-exact average over the level-`k` cube with row-major linear
    /// index `lin`.
    pub fn average(&self, k: u32, lin: usize) -> f64 {
        let cells_per_cube = 1u64 << ((self.levels - k) as u64 * self.n as u64);
        self.sums[k as usize][lin] / cells_per_cube as f64
    }
}

/// The maximal field together with the tree geometry it was computed on.
#[derive(Clone, Debug)]
pub struct MaximalResult {
    pub mf: Field,
    pub levels_used: u32,
    pub root: DyadicCube,
}

/// Dyadic maximal function: at each cell, the maximum of the cell-exact
/// averages of `|f|` over the dyadic ancestors of that cell, computed
/// bottom-up in `O(N log N)`.
pub fn dyadic_maximal(f: &Field) -> Result<MaximalResult, MaximalError> {
    let n = f.dimension();
    let shape = f.shape();
    let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let pyramid = CubePyramid::build(&abs, shape)?;
    let side = shape[0];
    let levels = pyramid.levels;

    // top-down: running maximum of ancestor averages
    let mut best: Vec<f64> = vec![0.0; 1];
    for k in 0..=levels {
        let coarse_side = 1usize << k;
        let cube_cells = 1u64 << ((levels - k) as u64 * n as u64);
        let level_sums = &pyramid.sums[k as usize];
        let mut next = vec![0.0f64; coarse_side.pow(n as u32)];
        for (lin, slot) in next.iter_mut().enumerate() {
            let mut idx = [0usize; 3];
            let mut rem = lin;
            for a in (0..n).rev() {
                idx[a] = rem % coarse_side;
                rem /= coarse_side;
            }
            let mut parent_lin = 0;
            for a in 0..n {
                parent_lin = parent_lin * (coarse_side / 2).max(1) + idx[a] / 2;
            }
            let inherited = if k == 0 { 0.0 } else { best[parent_lin] };
            let avg = level_sums[lin] / cube_cells as f64;
            *slot = inherited.max(avg);
        }
        best = next;
    }

    let root = DyadicCube::root(
        n,
        side as f64 * f.spacing(),
        f.origin().to_vec(),
    );
    let mf = Field::new(shape.to_vec(), f.spacing(), f.origin().to_vec(), best)?;
    Ok(MaximalResult {
        mf,
        levels_used: levels,
        root,
    })
}

/// Weak (1,1) rows: `lambda |{M f > lambda}| <= ||f||_1`, dyadic constant 1.
pub fn weak11_check(f: &Field, lambdas: &[f64]) -> Result<VerdictReport, MaximalError> {
    for &l in lambdas {
        if !(l > 0.0) {
            return Err(MaximalError::InvalidLambda(l));
        }
    }
    let m = dyadic_maximal(f)?;
    let l1 = lq_norm(f, 1.0)?;
    let meas = f.cell_measure();
    let mut report = VerdictReport::new("weak11");
    for &lambda in lambdas {
        let count = m.mf.values().iter().filter(|v| **v > lambda).count();
        let measure = count as f64 * meas;
        report.rows.push(VerdictRow {
            instance: "field".into(),
            beta: f64::NAN,
            q: 1.0,
            quantity: format!("lambda={lambda}"),
            measured: lambda * measure,
            bound: l1,
            status: if lambda * measure <= l1 + 1e-12 * l1.max(1.0) {
                Status::Pass
            } else {
                Status::Fail
            },
        });
    }
    Ok(report)
}

/// Dyadic strong-type constant `2 (q/(q-1))^{1/q}` from the weak (1,1)
/// bound with constant 1 and the trivial sup bound.
pub fn dyadic_strong_constant(q: f64) -> f64 {
    2.0 * (q / (q - 1.0)).powf(1.0 / q)
}

/// Strong (q,q) rows: the ratio `||Mf||_q / ||f||_q` against the dyadic
/// constant; the ratio is logged for stability inspection.
pub fn strong_qq_check(f: &Field, q: f64) -> Result<VerdictReport, MaximalError> {
    if !(q > 1.0) {
        return Err(MaximalError::InvalidLambda(q));
    }
    let m = dyadic_maximal(f)?;
    let num = lq_norm(&m.mf, q)?;
    let den = lq_norm(f, q)?;
    let ratio = if den == 0.0 { 0.0 } else { num / den };
    let bound = dyadic_strong_constant(q);
    let mut report = VerdictReport::new("strong_qq");
    report.rows.push(VerdictRow {
        instance: "field".into(),
        beta: f64::NAN,
        q,
        quantity: "maximal_ratio".into(),
        measured: ratio,
        bound,
        status: if ratio <= bound { Status::Pass } else { Status::Fail },
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn indicator_on_oct(cells: usize) -> Field {
        // indicator of [0,1) on root [0,8) with `cells` cells total
        let h = 8.0 / cells as f64;
        let values: Vec<f64> = (0..cells)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                if x < 1.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Field::new(vec![cells], h, vec![0.0], values).unwrap()
    }

    fn value_at(m: &MaximalResult, x: f64) -> f64 {
        let h = m.mf.spacing();
        let idx = ((x - m.mf.origin()[0]) / h).floor() as usize;
        m.mf.values()[idx]
    }

    #[test]
    fn maximal_of_unit_indicator() {
        let f = indicator_on_oct(64);
        let m = dyadic_maximal(&f).unwrap();
        // x = 0.5: the finest containing cube already averages to 1
        assert_eq!(value_at(&m, 0.5), 1.0);
        // x = 1.5: ancestors [1,2) -> 0, [0,2) -> 1/2, [0,4) -> 1/4, [0,8) -> 1/8
        assert_eq!(value_at(&m, 1.5), 0.5);
        assert_eq!(value_at(&m, 2.5), 0.25);
        assert_eq!(value_at(&m, 6.0), 0.125);
    }

    #[test]
    fn maximal_of_constant_field() {
        let f = Field::new(vec![32], 0.25, vec![0.0], vec![0.7; 32]).unwrap();
        let m = dyadic_maximal(&f).unwrap();
        assert!(m.mf.values().iter().all(|v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn maximal_dominates_cell_value() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let values: Vec<f64> = (0..256).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let f = Field::new(vec![256], 0.125, vec![0.0], values).unwrap();
        let m = dyadic_maximal(&f).unwrap();
        for (v, mv) in f.values().iter().zip(m.mf.values()) {
            assert!(*mv >= v.abs() - 1e-15);
            assert!(*mv >= 0.0);
        }
    }

    #[test]
    fn sublinearity_pointwise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
            let values: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Field::new(vec![128], 0.5, vec![0.0], values).unwrap()
        };
        let f = mk(&mut rng);
        let g = mk(&mut rng);
        let mut sum = f.clone();
        for (s, gv) in sum.values_mut().iter_mut().zip(g.values()) {
            *s += gv;
        }
        let mf = dyadic_maximal(&f).unwrap().mf;
        let mg = dyadic_maximal(&g).unwrap().mf;
        let msum = dyadic_maximal(&sum).unwrap().mf;
        for i in 0..f.len() {
            assert!(msum.values()[i] <= mf.values()[i] + mg.values()[i] + 1e-14);
        }
    }

    #[test]
    fn weak11_examples() {
        let f = indicator_on_oct(64);
        // lambda = 1/4: {M > 1/4} = [0,2), measure 2 <= 4
        let rep = weak11_check(&f, &[0.25, 2.0]).unwrap();
        assert!(rep.all_pass());
        let m = dyadic_maximal(&f).unwrap();
        let meas: f64 = m
            .mf
            .values()
            .iter()
            .filter(|v| **v > 0.25)
            .count() as f64
            * f.cell_measure();
        assert!((meas - 2.0).abs() < 1e-12);
        // lambda = 2: Mf <= 1, superlevel empty
        let meas2: f64 = m.mf.values().iter().filter(|v| **v > 2.0).count() as f64;
        assert_eq!(meas2, 0.0);
    }

    #[test]
    fn weak11_constant_one_random_trials() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let cells = 1 << rng.gen_range(4..8);
            let h = 2.0f64.powi(rng.gen_range(-3..2));
            let values: Vec<f64> = (0..cells)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        rng.gen_range(-4.0..4.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            let f = Field::new(vec![cells], h, vec![0.0], values).unwrap();
            let l1 = lq_norm(&f, 1.0).unwrap();
            let m = dyadic_maximal(&f).unwrap();
            let lambda = rng.gen_range(0.01..2.0);
            let measure = m.mf.values().iter().filter(|v| **v > lambda).count() as f64
                * f.cell_measure();
            assert!(lambda * measure <= l1 + 1e-12 * l1.max(1.0));
        }
    }

    #[test]
    fn strong_qq_within_dyadic_constant() {
        let f = indicator_on_oct(512);
        for q in [1.5, 2.0, 3.0] {
            let rep = strong_qq_check(&f, q).unwrap();
            assert!(rep.all_pass(), "q = {q}: {:?}", rep.rows[0]);
        }
    }

    #[test]
    fn rejects_non_dyadic_grid() {
        let f = Field::new(vec![48], 0.125, vec![0.0], vec![0.0; 48]).unwrap();
        assert!(matches!(
            dyadic_maximal(&f),
            Err(MaximalError::NotDyadicGrid(_))
        ));
    }

    #[test]
    fn maximal_2d_peak_spreads() {
        let side = 16;
        let mut values = vec![0.0; side * side];
        values[(side / 2) * side + side / 2] = 16.0;
        let f = Field::new(vec![side, side], 0.5, vec![0.0, 0.0], values).unwrap();
        let m = dyadic_maximal(&f).unwrap();
        // root average is 16 / 256
        let root_avg = 16.0 / (side * side) as f64;
        for v in m.mf.values() {
            assert!(*v >= root_avg - 1e-15);
        }
        assert_eq!(
            m.mf.values()[(side / 2) * side + side / 2],
            16.0
        );
    }
}
