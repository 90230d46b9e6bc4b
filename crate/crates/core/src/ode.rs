//! Fixed-step classical Runge-Kutta integration.

/// One RK4 step of `y' = f(t, y)`.
pub fn rk4_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(t, y);
    let y2: [f64; N] = std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]);
    let k2 = f(t + 0.5 * h, &y2);
    let y3: [f64; N] = std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]);
    let k3 = f(t + 0.5 * h, &y3);
    let y4: [f64; N] = std::array::from_fn(|i| y[i] + h * k3[i]);
    let k4 = f(t + h, &y4);
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Samples of an RK4 trajectory with derivatives, for cubic Hermite dense output.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dy: Vec<[f64; N]>,
}

/// Integrates from `t0` to `t1` (either direction) in `steps` equal steps.
pub fn integrate<const N: usize, F>(f: F, t0: f64, y0: [f64; N], t1: f64, steps: usize) -> Trajectory<N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let steps = steps.max(1);
    let h = (t1 - t0) / steps as f64;
    let mut t = Vec::with_capacity(steps + 1);
    let mut y = Vec::with_capacity(steps + 1);
    let mut dy = Vec::with_capacity(steps + 1);
    let mut cur = y0;
    for k in 0..=steps {
        // Recompute t from k to avoid accumulating rounding in the abscissae.
        let tk = if k == steps { t1 } else { t0 + k as f64 * h };
        t.push(tk);
        y.push(cur);
        dy.push(f(tk, &cur));
        if k < steps {
            cur = rk4_step(&f, tk, &cur, h);
        }
    }
    Trajectory { t, y, dy }
}

impl<const N: usize> Trajectory<N> {
    pub fn start(&self) -> f64 {
        self.t[0]
    }

    pub fn end(&self) -> f64 {
        *self.t.last().expect("trajectory has at least one sample")
    }

    /// Cubic Hermite interpolation; `None` outside the integrated range.
    pub fn at(&self, s: f64) -> Option<[f64; N]> {
        let (lo, hi) = if self.start() <= self.end() { (self.start(), self.end()) } else { (self.end(), self.start()) };
        if !(s >= lo && s <= hi) {
            return None;
        }
        let n = self.t.len();
        if n == 1 {
            return Some(self.y[0]);
        }
        let h = (self.end() - self.start()) / (n - 1) as f64;
        let k = (((s - self.start()) / h).floor().max(0.0) as usize).min(n - 2);
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let dt = t1 - t0;
        let x = (s - t0) / dt;
        let h00 = (1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x);
        let h10 = x * (1.0 - x) * (1.0 - x);
        let h01 = x * x * (3.0 - 2.0 * x);
        let h11 = x * x * (x - 1.0);
        Some(std::array::from_fn(|i| {
            h00 * self.y[k][i] + h10 * dt * self.dy[k][i] + h01 * self.y[k + 1][i] + h11 * dt * self.dy[k + 1][i]
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let tr = integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 2.0, 200);
        assert!((tr.y.last().unwrap()[0] - (-2.0f64).exp()).abs() < 1e-10);
        let mid = tr.at(1.2345).unwrap()[0];
        assert!((mid - (-1.2345f64).exp()).abs() < 1e-9);
        assert!(tr.at(2.5).is_none());
    }

    #[test]
    fn backwards_integration() {
        let tr = integrate(|t, _: &[f64; 1]| [t.cos()], 1.0, [1.0f64.sin()], 0.0, 100);
        assert!(tr.y.last().unwrap()[0].abs() < 1e-10);
        assert!((tr.at(0.5).unwrap()[0] - 0.5f64.sin()).abs() < 1e-9);
    }
}
