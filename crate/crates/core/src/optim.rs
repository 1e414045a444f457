//! Derivative-free minimization with the Nelder-Mead simplex method.
//!
//! The update rules follow the classic reflection / expansion / contraction /
//! shrink scheme with coefficients (1, 2, 1/2, 1/2). Box bounds are enforced
//! by clipping every trial point into the box before evaluation.

#[derive(Debug, Clone)]
pub struct NelderMead {
    /// Stop once every vertex is within `xatol` of the best one (max-norm)...
    pub xatol: f64,
    /// ...and the spread of function values is below `fatol`.
    pub fatol: f64,
    pub max_evals: usize,
    /// Per-coordinate offset of the initial simplex vertices.
    pub initial_step: Vec<f64>,
    pub bounds: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

impl NelderMead {
    pub fn new(dim: usize) -> Self {
        Self { xatol: 1e-8, fatol: 1e-10, max_evals: 200 * dim.max(1), initial_step: vec![0.05; dim], bounds: None }
    }

    pub fn with_tolerances(mut self, xatol: f64, fatol: f64) -> Self {
        self.xatol = xatol;
        self.fatol = fatol;
        self
    }

    pub fn with_max_evals(mut self, max_evals: usize) -> Self {
        self.max_evals = max_evals;
        self
    }

    pub fn with_step(mut self, step: Vec<f64>) -> Self {
        self.initial_step = step;
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    fn clip(&self, x: &mut [f64]) {
        if let Some(b) = &self.bounds {
            for (xi, &(lo, hi)) in x.iter_mut().zip(b) {
                *xi = xi.clamp(lo, hi);
            }
        }
    }

    /// Minimizes `f` from `x0`. Non-finite values are treated as `+inf`.
    pub fn minimize<F>(&self, mut f: F, x0: &[f64]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        assert_eq!(self.initial_step.len(), n, "initial step has wrong dimension");
        let evals = std::cell::Cell::new(0usize);
        let mut eval = |x: &[f64]| {
            evals.set(evals.get() + 1);
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut start = x0.to_vec();
        self.clip(&mut start);
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let v0 = eval(&start);
        simplex.push((start.clone(), v0));
        for i in 0..n {
            let mut x = start.clone();
            x[i] += self.initial_step[i];
            self.clip(&mut x);
            if x[i] == start[i] {
                // Step pushed against a bound; go the other way.
                x[i] = start[i] - self.initial_step[i];
                self.clip(&mut x);
            }
            let v = eval(&x);
            simplex.push((x, v));
        }

        let mut converged = false;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = &simplex[0];
            let x_spread = simplex[1..]
                .iter()
                .flat_map(|(x, _)| x.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            let f_spread = simplex[1..].iter().map(|(_, v)| (v - best.1).abs()).fold(0.0, f64::max);
            if x_spread <= self.xatol && f_spread <= self.fatol {
                converged = true;
                break;
            }
            if evals.get() >= self.max_evals {
                break;
            }

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / n as f64;
                }
            }
            let worst = simplex[n].clone();
            let along = |t: f64| -> Vec<f64> {
                let mut p: Vec<f64> = centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect();
                self.clip(&mut p);
                p
            };

            let xr = along(1.0);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = along(2.0);
                let fe = eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < worst.1 {
                let xc = along(0.5);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
                continue;
            }
            let best_x = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let mut x: Vec<f64> = best_x.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                self.clip(&mut x);
                let v = eval(&x);
                *vertex = (x, v);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        Minimum { x, value, evals: evals.get(), converged }
    }

    /// Runs from every start point and keeps the lowest minimum.
    pub fn minimize_multistart<F>(&self, mut f: F, starts: &[Vec<f64>]) -> Option<Minimum>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let mut best: Option<Minimum> = None;
        let mut total = 0;
        for s in starts {
            let m = self.minimize(&mut f, s);
            total += m.evals;
            if best.as_ref().map_or(true, |b| m.value < b.value) {
                best = Some(m);
            }
        }
        best.map(|mut b| {
            b.evals = total;
            b
        })
    }
}

/// `count` points evenly covering `[lo, hi]`, endpoints included.
pub fn spread(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}
