//! Deterministic corpus generation.
//!
//! Every member is produced from one 64-bit seed through a counter-based
//! generator (one ChaCha stream per member index), so parallel generation
//! is schedule-independent and a fixed config always yields byte-identical
//! fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::field::Field;
use crate::report::fnv1a_hex;

/// Shape families cycled through by member index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Gaussian,
    Indicator,
    Bumps,
    Chirp,
}

const FAMILIES: [Family; 4] = [
    Family::Gaussian,
    Family::Indicator,
    Family::Bumps,
    Family::Chirp,
];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub n: usize,
    pub shape: Vec<usize>,
    pub h: f64,
    pub origin: Vec<f64>,
    pub count: usize,
    /// Half-width of the centered region allowed to carry support, in
    /// absolute units.
    pub support_halfwidth: f64,
}

impl CorpusSpec {
    /// 4096 cells on `[-16, 16)`, support inside `[-4, 4]`.
    pub fn standard_1d(seed: u64, count: usize) -> CorpusSpec {
        CorpusSpec {
            seed,
            n: 1,
            shape: vec![4096],
            h: 1.0 / 128.0,
            origin: vec![-16.0],
            count,
            support_halfwidth: 4.0,
        }
    }

    /// 64 x 64 cells on `[-8, 8)^2`, support inside `[-2.5, 2.5]^2`.
    pub fn standard_2d(seed: u64, count: usize) -> CorpusSpec {
        CorpusSpec {
            seed,
            n: 2,
            shape: vec![64, 64],
            h: 0.25,
            origin: vec![-8.0, -8.0],
            count,
            support_halfwidth: 2.5,
        }
    }

    fn rng_for(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64 + 1);
        rng
    }

    pub fn family_of(&self, index: usize) -> Family {
        FAMILIES[index % FAMILIES.len()]
    }

    /// Generate member `index`. Values with magnitude below `1e-12` of the
    /// member amplitude are flushed to zero so supports are genuinely
    /// compact.
    pub fn member(&self, index: usize) -> Field {
        assert!(index < self.count, "corpus has {} members", self.count);
        let mut rng = self.rng_for(index);
        let family = self.family_of(index);
        let mut f = Field::zeros(self.shape.clone(), self.h, self.origin.clone());
        let hw = self.support_halfwidth;
        match family {
            Family::Gaussian => {
                let center: Vec<f64> = (0..self.n).map(|_| rng.gen_range(-0.4 * hw..0.4 * hw)).collect();
                let width = rng.gen_range(0.1 * hw..0.25 * hw);
                let amp = rng.gen_range(0.3..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                self.add_gaussian(&mut f, &center, width, amp);
            }
            Family::Indicator => {
                // dilated/translated cube indicator
                let side = rng.gen_range(0.2 * hw..0.8 * hw);
                let lo: Vec<f64> = (0..self.n)
                    .map(|_| rng.gen_range(-hw..hw - side))
                    .collect();
                let amp = rng.gen_range(0.5..2.0);
                for lin in 0..f.len() {
                    let x = f.center(lin);
                    if x.iter().zip(&lo).all(|(xi, l)| *xi >= *l && *xi < l + side) {
                        f.values_mut()[lin] = amp;
                    }
                }
            }
            Family::Bumps => {
                for _ in 0..8 {
                    let center: Vec<f64> =
                        (0..self.n).map(|_| rng.gen_range(-0.6 * hw..0.6 * hw)).collect();
                    let width = rng.gen_range(0.05 * hw..0.15 * hw);
                    let amp = rng.gen_range(0.2..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    self.add_gaussian(&mut f, &center, width, amp);
                }
            }
            Family::Chirp => {
                let a = rng.gen_range(0.5..2.0) / hw;
                let b = rng.gen_range(0.2..1.0) / (hw * hw);
                let width = 0.35 * hw;
                let amp = rng.gen_range(0.5..2.0);
                for lin in 0..f.len() {
                    let x = f.center(lin);
                    let r2: f64 = x.iter().map(|xi| xi * xi).sum();
                    let env = (-r2 / (width * width)).exp();
                    let phase = 2.0 * std::f64::consts::PI * (a * x[0] + b * x[0] * x[0]);
                    f.values_mut()[lin] += amp * env * phase.sin();
                }
            }
        }
        let peak = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = 1e-12 * peak;
        for v in f.values_mut() {
            if v.abs() < floor {
                *v = 0.0;
            }
        }
        // clamp any residual mass outside the support window to zero
        let hw_box = hw + 1e-9;
        for lin in 0..f.len() {
            let x = f.center(lin);
            if x.iter().any(|xi| xi.abs() > hw_box) {
                f.values_mut()[lin] = 0.0;
            }
        }
        f
    }

    fn add_gaussian(&self, f: &mut Field, center: &[f64], width: f64, amp: f64) {
        for lin in 0..f.len() {
            let x = f.center(lin);
            let r2: f64 = x
                .iter()
                .zip(center)
                .map(|(xi, ci)| (xi - ci) * (xi - ci))
                .sum();
            f.values_mut()[lin] += amp * (-r2 / (width * width)).exp();
        }
    }

    /// Members are all nonzero and share the spec geometry.
    pub fn members(&self) -> Vec<Field> {
        (0..self.count).map(|i| self.member(i)).collect()
    }

    /// FNV fingerprint of every member's raw bytes, for summaries.
    pub fn hash(&self) -> String {
        let mut bytes = Vec::new();
        for i in 0..self.count {
            let f = self.member(i);
            for v in f.values() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        fnv1a_hex(bytes.into_iter())
    }
}

/// A unit-peak Gaussian at the box center, handy for single-field
/// experiments.
pub fn centered_gaussian(shape: Vec<usize>, h: f64, origin: Vec<f64>, width: f64) -> Field {
    let mut f = Field::zeros(shape, h, origin);
    let center: Vec<f64> = f
        .origin()
        .iter()
        .zip(f.shape())
        .map(|(o, s)| o + 0.5 * *s as f64 * f.spacing())
        .collect();
    for lin in 0..f.len() {
        let x = f.center(lin);
        let r2: f64 = x
            .iter()
            .zip(&center)
            .map(|(xi, ci)| (xi - ci) * (xi - ci))
            .sum();
        f.values_mut()[lin] = (-r2 / (width * width)).exp();
    }
    for v in f.values_mut() {
        if v.abs() < 1e-12 {
            *v = 0.0;
        }
    }
    f
}
