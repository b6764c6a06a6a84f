//! Local minimizers: Nelder–Mead, finite-difference gradient descent and
//! cyclic coordinate search with golden-section line refinement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptOptions {
    /// Maximum number of objective evaluations (at least one is always made).
    pub budget: usize,
    /// Stop as soon as a value at or below this is found.
    pub target: Option<f64>,
    /// Initial simplex offset, coordinate step, or first line-search step.
    pub step: f64,
    pub fd_epsilon: f64,
    pub ftol: f64,
    pub xtol: f64,
    pub gtol: f64,
}

impl Default for OptOptions {
    fn default() -> Self {
        Self {
            budget: 2000,
            target: None,
            step: 0.25,
            fd_epsilon: 1e-5,
            ftol: 1e-10,
            xtol: 1e-8,
            gtol: 1e-7,
        }
    }
}

impl OptOptions {
    pub fn with_budget(budget: usize) -> Self {
        Self {
            budget,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptResult {
    pub best_params: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Best value after each iteration, starting with `f(x0)`.
    pub trace: Vec<f64>,
}

/// Objective wrapper that counts calls and remembers the best point seen.
struct Tracked<'a> {
    f: &'a dyn Fn(&[f64]) -> f64,
    evals: usize,
    budget: usize,
    best_x: Vec<f64>,
    best_f: f64,
    target: Option<f64>,
    trace: Vec<f64>,
}

impl<'a> Tracked<'a> {
    fn new(f: &'a dyn Fn(&[f64]) -> f64, x0: &[f64], opts: &OptOptions) -> Self {
        let mut t = Self {
            f,
            evals: 0,
            budget: opts.budget.max(1),
            best_x: x0.to_vec(),
            best_f: f64::INFINITY,
            target: opts.target,
            trace: Vec::new(),
        };
        t.eval(x0);
        t.trace.push(t.best_f);
        t
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let mut v = (self.f)(x);
        if v.is_nan() {
            v = f64::INFINITY;
        }
        if v < self.best_f {
            self.best_f = v;
            self.best_x = x.to_vec();
        }
        v
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.budget || self.target.is_some_and(|t| self.best_f <= t)
    }

    fn mark(&mut self) {
        self.trace.push(self.best_f);
    }

    fn finish(self, converged: bool) -> OptResult {
        let converged = converged || self.target.is_some_and(|t| self.best_f <= t);
        OptResult {
            best_params: self.best_x,
            best_value: self.best_f,
            evaluations: self.evals,
            converged,
            trace: self.trace,
        }
    }
}

/// Nelder–Mead with reflection 1, expansion 2, contraction ½ and shrink ½.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], opts: &OptOptions) -> OptResult {
    let mut tr = Tracked::new(f, x0, opts);
    let n = x0.len();
    if n == 0 {
        return tr.finish(true);
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), tr.best_f)];
    for i in 0..n {
        if tr.exhausted() {
            return tr.finish(false);
        }
        let mut x = x0.to_vec();
        x[i] += opts.step;
        let v = tr.eval(&x);
        simplex.push((x, v));
    }
    let centroid = |s: &[(Vec<f64>, f64)]| -> Vec<f64> {
        let mut c = vec![0.0; n];
        for (x, _) in &s[..n] {
            for (ci, xi) in c.iter_mut().zip(x) {
                *ci += xi / n as f64;
            }
        }
        c
    };
    let along = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect()
    };
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        tr.mark();
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        // both tests must pass: a symmetric simplex straddling the minimum
        // has zero spread long before it has shrunk
        if spread.is_finite() && spread < opts.ftol && diameter < opts.xtol.max(opts.ftol.sqrt()) {
            return tr.finish(true);
        }
        if tr.exhausted() {
            return tr.finish(false);
        }
        let c = centroid(&simplex);
        let worst = simplex[n].clone();
        let xr = along(&c, &worst.0, -1.0);
        let fr = tr.eval(&xr);
        if fr < simplex[0].1 {
            if tr.exhausted() {
                simplex[n] = (xr, fr);
                continue;
            }
            let xe = along(&c, &worst.0, -2.0);
            let fe = tr.eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            if tr.exhausted() {
                continue;
            }
            let (xc, fc) = if fr < worst.1 {
                let xc = along(&c, &worst.0, -0.5);
                let fc = tr.eval(&xc);
                (xc, fc)
            } else {
                let xc = along(&c, &worst.0, 0.5);
                let fc = tr.eval(&xc);
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for k in 1..=n {
                    if tr.exhausted() {
                        break;
                    }
                    let xs = along(&best, &simplex[k].0, 0.5);
                    let fs = tr.eval(&xs);
                    simplex[k] = (xs, fs);
                }
            }
        }
    }
}

/// Steepest descent on central-difference gradients with Armijo backtracking.
pub fn fd_gradient_descent(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], opts: &OptOptions) -> OptResult {
    let mut tr = Tracked::new(f, x0, opts);
    let n = x0.len();
    if n == 0 {
        return tr.finish(true);
    }
    let mut x = x0.to_vec();
    let mut fx = tr.best_f;
    let mut step = opts.step.max(1e-3) * 4.0;
    loop {
        if tr.evals + 2 * n > tr.budget || tr.exhausted() {
            return tr.finish(false);
        }
        let g = central_gradient(&mut |p: &[f64]| tr.eval(p), &x, opts.fd_epsilon);
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm < opts.gtol {
            return tr.finish(true);
        }
        let g2: f64 = g.iter().map(|v| v * v).sum();
        let mut t = step;
        let mut moved = false;
        while !tr.exhausted() {
            let cand: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - t * gi).collect();
            let fc = tr.eval(&cand);
            if fc <= fx - 1e-4 * t * g2 {
                x = cand;
                fx = fc;
                moved = true;
                break;
            }
            t *= 0.5;
            if t * gnorm < 1e-14 {
                break;
            }
        }
        tr.mark();
        if !moved {
            return tr.finish(t * gnorm < 1e-14);
        }
        // let the step grow again after a successful first try
        step = if t == step { step * 2.0 } else { t };
    }
}

pub(crate) fn central_gradient(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + eps;
            let up = f(&p);
            p[i] = x[i] - eps;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * eps)
        })
        .collect()
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Cyclic coordinate descent: per axis, bracket a decrease by step doubling,
/// then refine the bracket by golden-section search.
pub fn coordinate_search(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], opts: &OptOptions) -> OptResult {
    let mut tr = Tracked::new(f, x0, opts);
    let n = x0.len();
    if n == 0 {
        return tr.finish(true);
    }
    let mut x = x0.to_vec();
    let mut fx = tr.best_f;
    let mut steps = vec![opts.step; n];
    loop {
        let before = fx;
        for i in 0..n {
            if tr.exhausted() {
                return tr.finish(false);
            }
            let h = steps[i];
            let mut probe = x.clone();
            probe[i] = x[i] + h;
            let fp = tr.eval(&probe);
            let (dir, mut f1) = if fp < fx {
                (1.0, fp)
            } else {
                if tr.exhausted() {
                    return tr.finish(false);
                }
                probe[i] = x[i] - h;
                let fm = tr.eval(&probe);
                if fm < fx {
                    (-1.0, fm)
                } else {
                    steps[i] *= 0.5;
                    continue;
                }
            };
            // expand: a < b < c along the axis with f(b) < f(a), f(b) <= f(c)
            let mut a = 0.0;
            let mut b = h;
            let mut c;
            loop {
                c = 2.0 * b;
                if tr.exhausted() {
                    break;
                }
                probe[i] = x[i] + dir * c;
                let fc = tr.eval(&probe);
                if fc >= f1 {
                    break;
                }
                a = b;
                b = c;
                f1 = fc;
            }
            // golden section on [a, c]
            let mut lo = a;
            let mut hi = c;
            for _ in 0..40 {
                if hi - lo < opts.xtol || tr.exhausted() {
                    break;
                }
                let m1 = hi - GOLDEN * (hi - lo);
                let m2 = lo + GOLDEN * (hi - lo);
                probe[i] = x[i] + dir * m1;
                let f_m1 = tr.eval(&probe);
                if tr.exhausted() {
                    break;
                }
                probe[i] = x[i] + dir * m2;
                let f_m2 = tr.eval(&probe);
                if f_m1 < f_m2 {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            // adopt the best point found on this axis
            if tr.best_f < fx {
                x = tr.best_x.clone();
                fx = tr.best_f;
            }
            steps[i] = (b.abs()).max(opts.xtol);
        }
        tr.mark();
        if steps.iter().all(|&s| s < opts.xtol) || (before - fx).abs() < opts.ftol && steps.iter().all(|&s| s < 1e-4) {
            return tr.finish(true);
        }
        if tr.exhausted() {
            return tr.finish(false);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptimizerKind {
    NelderMead,
    FdGradient,
    Coordinate,
}

/// Label → optimizer table.
pub fn registry() -> Vec<(&'static str, OptimizerKind)> {
    vec![
        ("tnc", OptimizerKind::Coordinate),
        ("cbla", OptimizerKind::Coordinate),
        ("bfsg", OptimizerKind::FdGradient),
        ("gc", OptimizerKind::FdGradient),
        ("slsqp", OptimizerKind::FdGradient),
        ("nm", OptimizerKind::NelderMead),
    ]
}

pub fn lookup(label: &str) -> Result<OptimizerKind> {
    registry()
        .into_iter()
        .find(|(l, _)| l.eq_ignore_ascii_case(label))
        .map(|(_, k)| k)
        .ok_or_else(|| Error::UnknownOptimizer(label.to_string()))
}

pub fn run(kind: OptimizerKind, f: &dyn Fn(&[f64]) -> f64, x0: &[f64], opts: &OptOptions) -> OptResult {
    match kind {
        OptimizerKind::NelderMead => nelder_mead(f, x0, opts),
        OptimizerKind::FdGradient => fd_gradient_descent(f, x0, opts),
        OptimizerKind::Coordinate => coordinate_search(f, x0, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn nelder_mead_examples() {
        let r = nelder_mead(&|x| (x[0] - 2.0).powi(2), &[0.0], &OptOptions::default());
        assert!((r.best_params[0] - 2.0).abs() < 1e-4 && r.converged);

        let r = nelder_mead(&rosenbrock, &[-1.0, 1.0], &OptOptions::with_budget(5000));
        assert!(r.best_value < 1e-6, "{}", r.best_value);

        let r = nelder_mead(&|_| 3.0, &[1.0, 2.0], &OptOptions::default());
        assert_eq!(r.best_params, vec![1.0, 2.0]);
        assert!(r.converged);
    }

    #[test]
    fn gradient_examples() {
        let bowl = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2);
        let r = fd_gradient_descent(&bowl, &[0.0, 0.0], &OptOptions::default());
        assert!(r.best_value < 1e-10, "{}", r.best_value);
        assert!((r.best_params[0] - 1.0).abs() < 1e-6);

        let g = central_gradient(&mut |x: &[f64]| bowl(x), &[0.5, 0.5], 1e-5);
        assert!((g[0] - (-1.0)).abs() < 1e-6 && (g[1] - 15.0).abs() < 1e-6);

        let r = fd_gradient_descent(&|_| 1.0, &[], &OptOptions::default());
        assert!(r.best_params.is_empty() && r.evaluations == 1);

        // accepted values never increase
        let r = fd_gradient_descent(&rosenbrock, &[-1.0, 1.0], &OptOptions::with_budget(3000));
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn coordinate_examples() {
        let sep = |x: &[f64]| (x[0] - 0.3).powi(2) + (x[1] + 1.7).powi(2);
        let r = coordinate_search(&sep, &[0.0, 0.0], &OptOptions::default());
        assert!(r.best_value < 1e-12, "{}", r.best_value);

        let r = coordinate_search(&sep, &[0.0, 0.0], &OptOptions::with_budget(1));
        assert_eq!(r.evaluations, 1);
        assert_eq!(r.best_params, vec![0.0, 0.0]);
    }

    #[test]
    fn never_worse_than_start() {
        let bumpy = |x: &[f64]| (3.0 * x[0]).sin() + (x[1] - 0.5).powi(2) + 0.1 * (7.0 * x[1]).cos();
        for (_, k) in registry() {
            for budget in [1, 5, 50, 500] {
                let f0 = bumpy(&[0.2, 0.9]);
                let r = run(k, &bumpy, &[0.2, 0.9], &OptOptions::with_budget(budget));
                assert!(r.best_value <= f0 + 1e-12);
                assert!(r.evaluations <= budget.max(1) + 1);
                assert!((bumpy(&r.best_params) - r.best_value).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn target_stops_early() {
        let r = nelder_mead(&|x| x[0] * x[0], &[1.0], &OptOptions { target: Some(0.5), ..OptOptions::default() });
        assert!(r.best_value <= 0.5 && r.evaluations < 10 && r.converged);
    }

    #[test]
    fn registry_labels() {
        assert_eq!(lookup("cbla").unwrap(), OptimizerKind::Coordinate);
        assert_eq!(lookup("SLSQP").unwrap(), OptimizerKind::FdGradient);
        assert!(matches!(lookup("powell"), Err(Error::UnknownOptimizer(_))));
        assert_eq!(registry().len(), 6);
    }
}
