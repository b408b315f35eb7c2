//! Analytic oracles shared by the integration tests.

#![allow(dead_code)]

use herdsim::sde::{integrate, IntegratorConfig, SdeSystem};
use herdsim::TimeSeries;

/// Cumulative distribution built by quadrature of an unnormalized density.
///
/// The integration variable is stretched with `x = lo + (hi - lo) s(u)`,
/// `s(u) = u^2 (3 - 2u)`, so integrable endpoint singularities such as
/// `x^(-1/2)` become finite before the trapezoid rule is applied.
pub struct QuadratureCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl QuadratureCdf {
    pub fn new<F: Fn(f64) -> f64>(density: F, lo: f64, hi: f64, nodes: usize) -> Self {
        let width = hi - lo;
        let mut xs = Vec::with_capacity(nodes + 1);
        let mut weights = Vec::with_capacity(nodes + 1);
        for i in 0..=nodes {
            let u = i as f64 / nodes as f64;
            let x = lo + width * u * u * (3.0 - 2.0 * u);
            let jacobian = width * 6.0 * u * (1.0 - u);
            let f = if jacobian == 0.0 { 0.0 } else { density(x) * jacobian };
            xs.push(x);
            weights.push(if f.is_finite() { f } else { 0.0 });
        }
        let du = 1.0 / nodes as f64;
        let mut cdf = vec![0.0; nodes + 1];
        for i in 1..=nodes {
            cdf[i] = cdf[i - 1] + 0.5 * du * (weights[i - 1] + weights[i]);
        }
        let total = cdf[nodes];
        for c in cdf.iter_mut() {
            *c /= total;
        }
        QuadratureCdf { xs, cdf }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[self.xs.len() - 1] {
            return 1.0;
        }
        let i = self.xs.partition_point(|&v| v <= x);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let w = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
        self.cdf[i - 1] + w * (self.cdf[i] - self.cdf[i - 1])
    }
}

/// Stationary law of the two-state model without feedback: Beta(eps1, eps2).
pub fn beta_oracle(eps1: f64, eps2: f64) -> QuadratureCdf {
    QuadratureCdf::new(|x| x.powf(eps1 - 1.0) * (1.0 - x).powf(eps2 - 1.0), 0.0, 1.0, 200_000)
}

/// Stationary mood law with unit clock: density `(1 - xi^2)^(eps_cc - 1)`.
pub fn mood_oracle(eps_cc: f64) -> QuadratureCdf {
    QuadratureCdf::new(|x| (1.0 - x * x).powf(eps_cc - 1.0), -1.0, 1.0, 200_000)
}

/// Distribution of `|r|` for a unit-scale q-Gaussian with exponent `lambda`.
///
/// The density is integrated in `v = 1 / (1 + r)` so that the whole
/// half-line maps onto a finite interval.
pub struct AbsQGaussianCdf {
    inner: QuadratureCdf,
}

impl AbsQGaussianCdf {
    pub fn new(lambda: f64) -> Self {
        let nu = lambda - 1.0;
        let density = move |v: f64| {
            let r = 1.0 / v - 1.0;
            (1.0 + r * r / nu).powf(-lambda / 2.0) / (v * v)
        };
        AbsQGaussianCdf { inner: QuadratureCdf::new(density, 0.0, 1.0, 400_000) }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        1.0 - self.inner.eval(1.0 / (1.0 + r))
    }
}

/// Exact law on `[lo, hi]` with density proportional to `x^-lambda`.
pub fn truncated_power_law_cdf(lambda: f64, lo: f64, hi: f64) -> impl Fn(f64) -> f64 {
    let antiderivative = move |x: f64| {
        if (lambda - 1.0).abs() < 1e-12 {
            x.ln()
        } else {
            x.powf(1.0 - lambda) / (1.0 - lambda)
        }
    };
    let (a, b) = (antiderivative(lo), antiderivative(hi));
    move |x: f64| ((antiderivative(x.clamp(lo, hi)) - a) / (b - a)).clamp(0.0, 1.0)
}

/// Every `stride`-th value of `column` after dropping `burn_in` leading samples.
pub fn thinned(series: &TimeSeries, column: &str, burn_in: usize, stride: usize) -> Vec<f64> {
    series.column(column).unwrap()[burn_in..].iter().step_by(stride).copied().collect()
}

/// Integrates in consecutive segments that continue from the previous end
/// state on fresh streams, handing each segment to `visit`.
///
/// Long runs then never hold more than one segment in memory.
pub fn integrate_in_segments<S, F>(system: &S, cfg: &IntegratorConfig, segments: u64, mut visit: F)
where
    S: SdeSystem,
    F: FnMut(u64, &TimeSeries),
{
    let mut cfg = cfg.clone();
    for k in 0..segments {
        cfg.stream = k;
        let series = integrate(system, &cfg).unwrap();
        let last = series.len() - 1;
        cfg.initial = series.columns.iter().map(|c| c[last]).collect();
        visit(k, &series);
    }
}
