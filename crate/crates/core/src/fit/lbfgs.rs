//! Limited-memory BFGS with Armijo backtracking on `[f64; N_PARAMS]`.

use std::collections::VecDeque;

use super::space::{Point, N_PARAMS};
use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when `‖g‖∞ ≤ gtol·max(1, |f|)`.
    pub gtol: f64,
    /// Stop when the relative decrease of `f` falls below this.
    pub ftol: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { memory: 10, max_iter: 200, gtol: 1e-8, ftol: 1e-12, max_backtracks: 40 }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Point,
    pub f: f64,
    pub grad: Point,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &Point) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimizes `fg`, which returns `Ok(None)` for points outside the domain.
pub fn minimize<F>(mut fg: F, x0: Point, opts: &LbfgsOptions) -> Result<LbfgsOutcome>
where
    F: FnMut(&Point) -> Result<Option<(f64, Point)>>,
{
    let (mut f, mut g) = fg(&x0)?.ok_or_else(|| crate::Error::InvalidParameter("start point outside domain".into()))?;
    let mut x = x0;
    let mut history: VecDeque<(Point, Point, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;
    let mut converged = inf_norm(&g) <= opts.gtol * f.abs().max(1.0);

    while !converged && iterations < opts.max_iter {
        // two-loop recursion
        let mut q = g;
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for i in 0..N_PARAMS {
                q[i] -= a * y[i];
            }
            alphas.push(a);
        }
        let gamma = history.back().map_or(1.0, |(s, y, _)| dot(s, y) / dot(y, y));
        let mut d: Point = std::array::from_fn(|i| gamma * q[i]);
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            for i in 0..N_PARAMS {
                d[i] += (a - b) * s[i];
            }
        }
        let mut d: Point = std::array::from_fn(|i| -d[i]);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.clear();
            d = std::array::from_fn(|i| -g[i]);
            slope = dot(&g, &d);
        }
        if history.is_empty() {
            // keep the first step O(1) in scaled coordinates
            let n = inf_norm(&d);
            if n > 1.0 {
                d.iter_mut().for_each(|v| *v /= n);
                slope /= n;
            }
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial: Point = std::array::from_fn(|i| x[i] + step * d[i]);
            if let Some((ft, gt)) = fg(&trial)? {
                if ft.is_finite() && ft <= f + 1e-4 * step * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        iterations += 1;
        let Some((xn, fn_, gn)) = accepted else {
            if !history.is_empty() {
                history.clear();
                continue;
            }
            break;
        };
        let s: Point = std::array::from_fn(|i| xn[i] - x[i]);
        let y: Point = std::array::from_fn(|i| gn[i] - g[i]);
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let decrease = f - fn_;
        x = xn;
        f = fn_;
        g = gn;
        converged = inf_norm(&g) <= opts.gtol * f.abs().max(1.0) || decrease <= opts.ftol * f.abs().max(1e-300);
    }
    Ok(LbfgsOutcome { x, f, grad: g, iterations, converged })
}
