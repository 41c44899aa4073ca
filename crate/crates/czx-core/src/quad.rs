//! Small quadrature toolbox: Gauss–Legendre rules on [-1, 1] and a
//! compensated accumulator for long panel sums.

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// Nodes are found by Newton iteration on the Legendre recurrence, seeded
/// with the Chebyshev approximation. Accurate to machine precision for the
/// orders used here (`m <= 64`).
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let half = m.div_ceil(2);
    for i in 0..half {
        // Chebyshev seed for the i-th root of P_m.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_eval(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[m - 1 - i] = x;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial `P_m` at `x`.
fn legendre_eval(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Neumaier compensated accumulator. Keeps panel sums accurate when millions
/// of terms of mixed sign are added.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        // An m-point rule is exact through degree 2m-1.
        let (x, w) = gauss_legendre(8);
        for deg in 0..16 {
            let got: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(deg)).sum();
            let want = if deg % 2 == 0 {
                2.0 / (deg as f64 + 1.0)
            } else {
                0.0
            };
            assert!((got - want).abs() < 1e-13, "deg {deg}: {got} vs {want}");
        }
    }

    #[test]
    fn gl_weights_sum_to_interval_length() {
        for m in [2, 5, 16, 24, 64] {
            let (_, w) = gauss_legendre(m);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn gl_handles_oscillatory_integrand() {
        // \int_{-1}^{1} cos(a x) dx = 2 sin(a)/a, resolved by 24 points for a <= 20.
        let (x, w) = gauss_legendre(24);
        let a = 20.0;
        let got: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * (a * xi).cos()).sum();
        let want = 2.0 * a.sin() / a;
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn accumulator_recovers_cancelling_sum() {
        let mut acc = Accumulator::new();
        for _ in 0..1_000_000 {
            acc.add(0.1);
            acc.add(-0.1);
        }
        acc.add(1.0);
        assert_eq!(acc.value(), 1.0);
    }
}
