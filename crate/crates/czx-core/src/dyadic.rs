//! Dyadic cube addressing over a root box, plus geometric dilation.
//!
//! Cubes are half-open: level `k`, index `j` addresses
//! `[root_origin + j * s, root_origin + (j+1) * s)` with `s = root_side / 2^k`.
//! Dilations `aQ` keep the center and scale the side; they are plain
//! axis-aligned boxes, not dyadic cubes.

use crate::field::{Field, FieldError};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub index: Vec<i64>,
    pub root_side: f64,
    pub root_origin: Vec<f64>,
}

/// Axis-aligned box `[lo, hi)` used for dilations and membership tests.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(xi, (lo, hi))| *xi >= *lo && *xi < *hi)
    }

    /// True when the open interiors overlap with positive measure.
    pub fn intersects(&self, other: &AxisBox) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(other.lo.iter().zip(&other.hi))
            .all(|((alo, ahi), (blo, bhi))| alo.max(*blo) < ahi.min(*bhi))
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }
}

impl DyadicCube {
    pub fn root(dim: usize, root_side: f64, root_origin: Vec<f64>) -> Self {
        assert_eq!(root_origin.len(), dim);
        DyadicCube {
            level: 0,
            index: vec![0; dim],
            root_side,
            root_origin,
        }
    }

    pub fn dimension(&self) -> usize {
        self.index.len()
    }

    pub fn side(&self) -> f64 {
        self.root_side / (1u64 << self.level) as f64
    }

    pub fn geometry(&self) -> AxisBox {
        let s = self.side();
        let lo: Vec<f64> = self
            .index
            .iter()
            .zip(&self.root_origin)
            .map(|(&j, &o)| o + j as f64 * s)
            .collect();
        let hi = lo.iter().map(|l| l + s).collect();
        AxisBox { lo, hi }
    }

    pub fn center(&self) -> Vec<f64> {
        self.geometry().center()
    }

    /// Same center, side scaled by `a`.
    pub fn dilate(&self, a: f64) -> AxisBox {
        assert!(a > 0.0);
        let c = self.center();
        let half = 0.5 * a * self.side();
        AxisBox {
            lo: c.iter().map(|x| x - half).collect(),
            hi: c.iter().map(|x| x + half).collect(),
        }
    }

    pub fn parent(&self) -> Option<DyadicCube> {
        if self.level == 0 {
            return None;
        }
        DyadicCube {
            level: self.level - 1,
            index: self.index.iter().map(|j| j.div_euclid(2)).collect(),
            root_side: self.root_side,
            root_origin: self.root_origin.clone(),
        }
        .into()
    }

    /// The `2^n` children at the next level, in lexicographic corner order.
    pub fn children(&self) -> Vec<DyadicCube> {
        let dim = self.dimension();
        let mut out = Vec::with_capacity(1 << dim);
        for mask in 0..(1u32 << dim) {
            let index = self
                .index
                .iter()
                .enumerate()
                .map(|(a, &j)| 2 * j + ((mask >> a) & 1) as i64)
                .collect();
            out.push(DyadicCube {
                level: self.level + 1,
                index,
                root_side: self.root_side,
                root_origin: self.root_origin.clone(),
            });
        }
        out
    }

    /// The level-`k` cube containing `x`, or None when `x` is outside the root.
    pub fn locate(&self, x: &[f64], k: u32) -> Option<DyadicCube> {
        debug_assert_eq!(self.level, 0);
        let s = self.root_side / (1u64 << k) as f64;
        let cells = 1i64 << k;
        let mut index = Vec::with_capacity(self.dimension());
        for (xi, o) in x.iter().zip(&self.root_origin) {
            let j = ((xi - o) / s).floor() as i64;
            if j < 0 || j >= cells {
                return None;
            }
            index.push(j);
        }
        Some(DyadicCube {
            level: k,
            index,
            root_side: self.root_side,
            root_origin: self.root_origin.clone(),
        })
    }
}

/// The dyadic cubes containing `x`, finest (level `depth`) first, walking up
/// to level 1; the root itself is the trivial ancestor and is omitted.
pub fn dyadic_ancestors(root: &DyadicCube, x: &[f64], depth: u32) -> Result<Vec<DyadicCube>, FieldError> {
    assert_eq!(root.level, 0, "ancestors are addressed from a root cube");
    let mut cube = root.locate(x, depth).ok_or(FieldError::OutOfDomain)?;
    let mut out = Vec::with_capacity(depth as usize);
    while cube.level >= 1 {
        let parent = cube.parent();
        out.push(cube);
        match parent {
            Some(p) => cube = p,
            None => break,
        }
    }
    Ok(out)
}

/// Zero `f` on the dilation `aQ`: every cell whose box meets `aQ` with
/// positive measure is cleared, so the support separation holds cell-exactly.
pub fn restrict_outside(f: &Field, q: &DyadicCube, a: f64) -> Field {
    let region = q.dilate(a);
    let h = f.spacing();
    let mut out = f.clone();
    for lin in 0..f.len() {
        let c = f.center(lin);
        let cell = AxisBox {
            lo: c.iter().map(|x| x - 0.5 * h).collect(),
            hi: c.iter().map(|x| x + 0.5 * h).collect(),
        };
        if region.intersects(&cell) {
            out.values_mut()[lin] = 0.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::lq_norm;

    fn root8() -> DyadicCube {
        DyadicCube::root(1, 8.0, vec![0.0])
    }

    #[test]
    fn ancestors_of_binary_address() {
        let root = root8();
        let cubes = dyadic_ancestors(&root, &[1.5], 3).unwrap();
        let boxes: Vec<(f64, f64)> = cubes
            .iter()
            .map(|c| {
                let g = c.geometry();
                (g.lo[0], g.hi[0])
            })
            .collect();
        assert_eq!(boxes, vec![(1.0, 2.0), (0.0, 2.0), (0.0, 4.0)]);
    }

    #[test]
    fn ancestors_reject_outside_point() {
        let root = root8();
        assert!(matches!(
            dyadic_ancestors(&root, &[9.0], 3),
            Err(FieldError::OutOfDomain)
        ));
    }

    #[test]
    fn dilate_keeps_center() {
        // [1,2) dilated by 3 is (-0.5, 3.5) around center 1.5
        let root = root8();
        let q = root.locate(&[1.5], 3).unwrap();
        let d = q.dilate(3.0);
        assert_eq!(d.lo, vec![0.0]);
        assert_eq!(d.hi, vec![3.0]);
        let d1 = q.dilate(1.0);
        assert_eq!(d1, q.geometry());
    }

    #[test]
    fn children_partition_parent() {
        let root = DyadicCube::root(2, 8.0, vec![0.0, 0.0]);
        let q = root.locate(&[3.3, 5.1], 2).unwrap();
        let kids = q.children();
        assert_eq!(kids.len(), 4);
        let side_sum: f64 = kids.iter().map(|c| c.side().powi(2)).sum();
        assert!((side_sum - q.side().powi(2)).abs() < 1e-12);
        for kid in &kids {
            assert_eq!(kid.parent().unwrap(), q);
            let g = kid.geometry();
            let qg = q.geometry();
            assert!(g.lo.iter().zip(&qg.lo).all(|(a, b)| a >= b));
            assert!(g.hi.iter().zip(&qg.hi).all(|(a, b)| a <= b));
        }
        // children tile: each child center locates back to that child
        for kid in &kids {
            let c = kid.center();
            assert_eq!(&root.locate(&c, q.level + 1).unwrap(), kid);
        }
    }

    #[test]
    fn restrict_outside_clears_dilated_cube() {
        // Root [0,8), Q = [3,4), a = 4 -> 4Q = (1.5, 5.5); with h = 1/2 the
        // boundary is cell-aligned and the zeroed set is exactly [1.5, 5.5).
        let h = 0.5;
        let total = 16;
        let f = Field::new(vec![total], h, vec![0.0], vec![1.0; total]).unwrap();
        let root = root8();
        let q = root.locate(&[3.5], 3).unwrap();
        assert_eq!(q.geometry().lo, vec![3.0]);
        let g = restrict_outside(&f, &q, 4.0);
        for lin in 0..total {
            let x = g.center(lin)[0];
            let expected = if x > 1.5 && x < 5.5 { 0.0 } else { 1.0 };
            assert_eq!(g.values()[lin], expected, "at x = {x}");
        }
        // norm monotonicity under restriction
        assert!(lq_norm(&g, 2.0).unwrap() <= lq_norm(&f, 2.0).unwrap());
    }
}
