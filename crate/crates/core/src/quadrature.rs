//! Composite Gauss–Legendre quadrature with adaptive panel bisection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule with `order` points; nodes found by Newton iteration on `P_order`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let nf = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Adaptive integral over `[a, b]`; see [`GaussLegendre::adaptive_panels`].
    pub fn adaptive<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        rel_tol: f64,
        abs_tol: f64,
    ) -> f64 {
        self.adaptive_panels(f, &[a, b], rel_tol, abs_tol)
    }

    /// Globally adaptive integral over the consecutive panels
    /// `[p_k, p_{k+1}]`. The panel with the largest error estimate (difference
    /// between the rule on the panel and on its two halves) is bisected until
    /// the summed estimate is below `max(abs_tol, rel_tol * |total|)` or
    /// [`MAX_PANELS`] panels are in use.
    pub fn adaptive_panels<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        breakpoints: &[f64],
        rel_tol: f64,
        abs_tol: f64,
    ) -> f64 {
        let mut heap: BinaryHeap<Panel> = breakpoints
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| self.panel(f, w[0], w[1]))
            .collect();
        let exact = |heap: &BinaryHeap<Panel>| -> (f64, f64) {
            heap.iter()
                .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
        };
        // running sums are refreshed exactly whenever they claim convergence
        let (mut total, mut err) = exact(&heap);
        loop {
            if err <= abs_tol.max(rel_tol * total.abs()) {
                (total, err) = exact(&heap);
                if err <= abs_tol.max(rel_tol * total.abs()) {
                    break;
                }
            }
            if heap.len() >= MAX_PANELS {
                break;
            }
            let Some(worst) = heap.pop() else { break };
            total -= worst.value;
            err -= worst.error;
            let mid = 0.5 * (worst.a + worst.b);
            let parts = if mid > worst.a && mid < worst.b {
                [self.panel(f, worst.a, mid), self.panel(f, mid, worst.b)]
            } else {
                // cannot split further in floating point
                let frozen = Panel {
                    error: 0.0,
                    ..worst
                };
                heap.push(frozen);
                total += frozen.value;
                continue;
            };
            for p in parts {
                total += p.value;
                err += p.error;
                heap.push(p);
            }
        }
        let mut parts: Vec<f64> = heap.into_iter().map(|p| p.value).collect();
        // ascending magnitude keeps tiny panels from being swamped early
        parts.sort_by(|x, y| x.abs().partial_cmp(&y.abs()).unwrap());
        parts.iter().sum()
    }

    fn panel<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> Panel {
        let mid = 0.5 * (a + b);
        let whole = self.integrate(f, a, b);
        let value = self.integrate(f, a, mid) + self.integrate(f, mid, b);
        Panel {
            a,
            b,
            value,
            error: (value - whole).abs(),
        }
    }
}

/// Upper limit on the number of panels of one adaptive integration.
pub const MAX_PANELS: usize = 4000;

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if order == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = order as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
