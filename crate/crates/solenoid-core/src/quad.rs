//! Quadrature primitives shared by current evaluation and pairings.
//!
//! Two rules cover every integrand in the library:
//! * Gauss-Legendre on a finite interval, for leaf segments that are smooth
//!   but not periodic (suspension pieces between chart knots, plane windows).
//! * the periodic trapezoid rule, for integrands sampled over a full period,
//!   where it converges spectrally.
//!
//! Sums over cylinders are reduced with a fixed-shape pairwise tree so that
//! results do not depend on evaluation order or thread count.

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Computed by Newton iteration on the Legendre polynomial from the usual
/// Chebyshev-based initial guesses; accurate to machine precision for the
/// orders used here (n <= a few hundred).
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Initial guess: Chebyshev abscissa.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    let (_, d2) = legendre_with_derivative(n, x);
                    dp = d2;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .collect();
        half * tree_sum(&mut terms)
    }
}

/// Legendre polynomial P_n(x) and its derivative, by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrate a 1-periodic function over one period with the `n`-point
/// trapezoid rule (equal weights, left endpoints). Spectrally accurate for
/// smooth periodic integrands.
pub fn periodic_trapezoid(n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let h = 1.0 / n as f64;
    let mut terms: Vec<f64> = (0..n).map(|i| f(i as f64 * h)).collect();
    h * tree_sum(&mut terms)
}

/// Pairwise tree sum. The reduction shape depends only on the slice length,
/// so a sum over cylinder contributions collected in address order is
/// bit-identical between runs regardless of parallelism.
pub fn tree_sum(values: &mut [f64]) -> f64 {
    let mut len = values.len();
    if len == 0 {
        return 0.0;
    }
    while len > 1 {
        let half = len / 2;
        for i in 0..half {
            values[i] = values[2 * i] + values[2 * i + 1];
        }
        if len % 2 == 1 {
            values[half] = values[len - 1];
            len = half + 1;
        } else {
            len = half;
        }
    }
    values[0]
}
