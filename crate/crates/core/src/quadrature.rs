//! Composite Gauss–Legendre quadrature.

/// Nodes and weights of the `order`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let nf = order as f64;
        for i in 0..order.div_ceil(2) {
            // Chebyshev-like initial guess, then Newton on P_order.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
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
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrates `f` over `[a, b]` split into panels of width at most
    /// `max_width`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, max_width: f64, mut f: F) -> f64 {
        if b <= a {
            return 0.0;
        }
        let panels = ((b - a) / max_width).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            let mut s = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += w * f(mid + 0.5 * h * x);
            }
            total += 0.5 * h * s;
        }
        total
    }
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if order == 0 {
        return (1.0, 0.0);
    }
    let n = order as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrates `f` over `[a, b]` with panel width halved until two successive
/// estimates agree to `tol`. Returns `None` if that never happens.
pub fn integrate_refined<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    initial_width: f64,
    tol: f64,
    mut f: F,
) -> Option<f64> {
    let mut width = initial_width;
    let mut prev = rule.integrate(a, b, width, &mut f);
    for _ in 0..8 {
        width *= 0.5;
        let next = rule.integrate(a, b, width, &mut f);
        if (next - prev).abs() <= tol {
            return Some(next);
        }
        prev = next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_exact_for_polynomials() {
        for order in [1, 2, 5, 10, 16] {
            let r = GaussLegendre::new(order);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "order {order}");
            let deg = 2 * order - 1;
            let v = r.integrate(0.0, 1.0, 1.0, |x| x.powi(deg as i32));
            assert!((v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13, "order {order}");
        }
    }

    #[test]
    fn gaussian_mass() {
        let r = GaussLegendre::new(16);
        let v = integrate_refined(&r, -12.0, 12.0, 0.5, 1e-14, |x| {
            crate::normal::normal_pdf(x, 0.0, 1.0)
        })
        .unwrap();
        assert!((v - 1.0).abs() < 1e-13);
    }
}
