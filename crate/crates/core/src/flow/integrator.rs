//! Dormand–Prince 5(4) with PI step control and 4th-order dense output.

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Dense-output coefficients of one accepted step.
#[derive(Clone, Debug)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    rcont: [Vec<f64>; 5],
}

impl DenseStep {
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        (0..r1.len())
            .map(|i| r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i]))))
            .collect()
    }
}

#[derive(Debug)]
pub enum StepOutcome {
    Accepted(DenseStep),
    Rejected,
    /// Right-hand side or error estimate is not finite.
    NonFinite,
}

/// Integrator state for `y' = f(y)` (autonomous).
#[derive(Clone, Debug)]
pub struct Dopri5 {
    pub t: f64,
    pub y: Vec<f64>,
    pub h: f64,
    f: Vec<f64>,
    rel_tol: f64,
    abs_tol: f64,
    err_old: f64,
    last_rejected: bool,
    pub accepted: usize,
    pub rejected: usize,
}

impl Dopri5 {
    pub fn new<F: FnMut(&[f64]) -> Vec<f64>>(
        t: f64,
        y: Vec<f64>,
        rel_tol: f64,
        abs_tol: f64,
        h0: Option<f64>,
        f: &mut F,
    ) -> Self {
        let f0 = f(&y);
        let mut s = Self {
            t,
            y,
            h: 0.0,
            f: f0,
            rel_tol,
            abs_tol,
            err_old: 1e-4,
            last_rejected: false,
            accepted: 0,
            rejected: 0,
        };
        s.h = h0.unwrap_or_else(|| s.initial_step(f));
        s
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.abs_tol + self.rel_tol * a.abs().max(b.abs())
    }

    // Hairer–Wanner starting step heuristic.
    fn initial_step<F: FnMut(&[f64]) -> Vec<f64>>(&self, f: &mut F) -> f64 {
        let n = self.y.len() as f64;
        let norm = |v: &[f64]| {
            (v.iter()
                .zip(&self.y)
                .map(|(a, y)| (a / self.scale(*y, *y)).powi(2))
                .sum::<f64>()
                / n)
                .sqrt()
        };
        let d0 = norm(&self.y);
        let d1 = norm(&self.f);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1: Vec<f64> = self.y.iter().zip(&self.f).map(|(y, f)| y + h0 * f).collect();
        let f1 = f(&y1);
        let diff: Vec<f64> = f1.iter().zip(&self.f).map(|(a, b)| a - b).collect();
        let d2 = norm(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        if h1.is_finite() {
            (100.0 * h0).min(h1)
        } else {
            h0
        }
    }

    /// Attempts one step of size `self.h`, never passing `t_stop`.
    pub fn try_step<F: FnMut(&[f64]) -> Vec<f64>>(&mut self, f: &mut F, t_stop: f64) -> StepOutcome {
        let n = self.y.len();
        let h = self.h.min(t_stop - self.t);
        let y = &self.y;
        let k1 = &self.f;
        let stage = |coef: &[(f64, &Vec<f64>)]| -> Vec<f64> {
            (0..n)
                .map(|i| y[i] + h * coef.iter().map(|(a, k)| a * k[i]).sum::<f64>())
                .collect()
        };
        let k2 = f(&stage(&[(A21, k1)]));
        let k3 = f(&stage(&[(A31, k1), (A32, &k2)]));
        let k4 = f(&stage(&[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&stage(&[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(&stage(&[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = stage(&[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(&y_new);

        let mut err = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err += (e / self.scale(y[i], y_new[i])).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() || y_new.iter().chain(&k7).any(|v| !v.is_finite()) {
            self.h = h * FAC_MIN;
            self.rejected += 1;
            self.last_rejected = true;
            return StepOutcome::NonFinite;
        }

        let fac11 = err.powf(0.2 - BETA * 0.75);
        if err <= 1.0 {
            let fac = (fac11 / self.err_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_next = h / fac;
            if self.last_rejected {
                h_next = h_next.min(h);
            }
            self.err_old = err.max(1e-4);
            let r2: Vec<f64> = (0..n).map(|i| y_new[i] - y[i]).collect();
            let r3: Vec<f64> = (0..n).map(|i| h * k1[i] - r2[i]).collect();
            let r4: Vec<f64> = (0..n).map(|i| r2[i] - h * k7[i] - r3[i]).collect();
            let r5: Vec<f64> = (0..n)
                .map(|i| {
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                })
                .collect();
            let dense = DenseStep {
                t0: self.t,
                h,
                rcont: [y.clone(), r2, r3, r4, r5],
            };
            self.t = if h == t_stop - self.t { t_stop } else { self.t + h };
            self.y = y_new;
            self.f = k7;
            self.h = h_next;
            self.accepted += 1;
            self.last_rejected = false;
            StepOutcome::Accepted(dense)
        } else {
            self.h = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
            self.rejected += 1;
            self.last_rejected = true;
            StepOutcome::Rejected
        }
    }
}
