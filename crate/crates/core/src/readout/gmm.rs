use rand::Rng;
use serde::{Deserialize, Serialize};

use super::shots::{validate_shots, IqShot};
use crate::error::{Error, Result};

pub const COMPONENTS: usize = 3;
pub const MIN_SHOTS_PER_CLUSTER: usize = 30;

type Cov = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: [f64; 2],
    pub covariance: Cov,
}

fn det(c: &Cov) -> f64 {
    c[0][0] * c[1][1] - c[0][1] * c[1][0]
}

fn min_eigenvalue(c: &Cov) -> f64 {
    let tr = c[0][0] + c[1][1];
    let d = ((c[0][0] - c[1][1]).powi(2) + 4.0 * c[0][1] * c[1][0]).max(0.0).sqrt();
    0.5 * (tr - d)
}

impl Component {
    /// `ln(w · N(x; μ, Σ))`.
    pub fn log_weighted_density(&self, x: &[f64; 2]) -> f64 {
        let c = &self.covariance;
        let d = det(c);
        let dx = [x[0] - self.mean[0], x[1] - self.mean[1]];
        let maha = (c[1][1] * dx[0] * dx[0] - 2.0 * c[0][1] * dx[0] * dx[1] + c[0][0] * dx[1] * dx[1]) / d;
        self.weight.ln() - (2.0 * std::f64::consts::PI).ln() - 0.5 * d.ln() - 0.5 * maha
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub components: [Component; COMPONENTS],
    /// `state_of[c]` is the qutrit level assigned to component `c`.
    pub state_of: [usize; COMPONENTS],
    /// Mean log-likelihood per shot after each EM iteration.
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
    /// Whether any covariance had to be regularized.
    pub regularized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self { max_iter: 500, rel_tol: 1e-8 }
    }
}

fn log_sum_exp(v: &[f64; COMPONENTS]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn responsibilities(components: &[Component; COMPONENTS], x: &[f64; 2]) -> ([f64; COMPONENTS], f64) {
    let l: [f64; COMPONENTS] = std::array::from_fn(|k| components[k].log_weighted_density(x));
    let z = log_sum_exp(&l);
    (l.map(|v| (v - z).exp()), z)
}

/// Seeds: a random shot, then repeatedly the shot farthest from all chosen
/// seeds.
fn farthest_point_seeds<R: Rng + ?Sized>(pts: &[[f64; 2]], rng: &mut R) -> [[f64; 2]; COMPONENTS] {
    let mut seeds = vec![pts[rng.random_range(0..pts.len())]];
    let d2 = |a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    while seeds.len() < COMPONENTS {
        let next = pts
            .iter()
            .max_by(|a, b| {
                let da = seeds.iter().map(|s| d2(a, s)).fold(f64::INFINITY, f64::min);
                let db = seeds.iter().map(|s| d2(b, s)).fold(f64::INFINITY, f64::min);
                da.total_cmp(&db)
            })
            .expect("non-empty");
        seeds.push(*next);
    }
    [seeds[0], seeds[1], seeds[2]]
}

struct Moments {
    weight: f64,
    mean: [f64; 2],
    cov: Cov,
}

fn weighted_moments(pts: &[[f64; 2]], w: impl Fn(usize) -> f64) -> Moments {
    let mut sw = 0.0;
    let mut m = [0.0; 2];
    for (s, p) in pts.iter().enumerate() {
        let ws = w(s);
        sw += ws;
        m[0] += ws * p[0];
        m[1] += ws * p[1];
    }
    if sw > 0.0 {
        m = [m[0] / sw, m[1] / sw];
    }
    let mut c = [[0.0; 2]; 2];
    for (s, p) in pts.iter().enumerate() {
        let ws = w(s);
        let d = [p[0] - m[0], p[1] - m[1]];
        c[0][0] += ws * d[0] * d[0];
        c[0][1] += ws * d[0] * d[1];
        c[1][1] += ws * d[1] * d[1];
    }
    if sw > 0.0 {
        c = [[c[0][0] / sw, c[0][1] / sw], [c[0][1] / sw, c[1][1] / sw]];
    }
    Moments { weight: sw, mean: m, cov: c }
}

/// Adds `reg` to the diagonal if `c` is not safely positive definite.
fn regularize(c: Cov, reg: [f64; 2], scale: f64) -> Result<(Cov, bool)> {
    let tiny = 1e-12 * scale;
    if min_eigenvalue(&c) > tiny && det(&c) > 0.0 {
        return Ok((c, false));
    }
    let r = [[c[0][0] + reg[0], c[0][1]], [c[1][0], c[1][1] + reg[1]]];
    if !(min_eigenvalue(&r) > 0.0 && det(&r) > 0.0) {
        return Err(Error::Numerical("covariance is singular even after regularization".into()));
    }
    Ok((r, true))
}

fn assign_states(components: &[Component; COMPONENTS], shots: &[IqShot]) -> [usize; COMPONENTS] {
    let labeled: Vec<(usize, &IqShot)> = shots.iter().filter_map(|s| s.label.map(|l| (l, s))).collect();
    if !labeled.is_empty() {
        // counts[c][l]: shots of label l whose most likely component is c
        let mut counts = [[0usize; COMPONENTS]; COMPONENTS];
        for (l, s) in &labeled {
            let (r, _) = responsibilities(components, &s.point());
            let c = (0..COMPONENTS).max_by(|&a, &b| r[a].total_cmp(&r[b])).expect("three components");
            counts[c][*l] += 1;
        }
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        return *perms
            .iter()
            .max_by_key(|p| (0..COMPONENTS).map(|c| counts[c][p[c]]).sum::<usize>())
            .expect("non-empty");
    }
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| components[a].mean[0].total_cmp(&components[b].mean[0]));
    let mut state_of = [0; COMPONENTS];
    for (state, &c) in order.iter().enumerate() {
        state_of[c] = state;
    }
    state_of
}

/// Three-component full-covariance EM. Components map to levels by the
/// best match to the labels when any shot is labeled, otherwise by
/// ascending mean `I`.
pub fn fit_gmm<R: Rng + ?Sized>(shots: &[IqShot], rng: &mut R) -> Result<GaussianMixture> {
    fit_gmm_with(shots, &EmOptions::default(), rng)
}

pub fn fit_gmm_with<R: Rng + ?Sized>(shots: &[IqShot], opts: &EmOptions, rng: &mut R) -> Result<GaussianMixture> {
    validate_shots(shots)?;
    if shots.len() < COMPONENTS * MIN_SHOTS_PER_CLUSTER {
        return Err(Error::InsufficientData(format!(
            "{} shots; need at least {} for {COMPONENTS} clusters",
            shots.len(),
            COMPONENTS * MIN_SHOTS_PER_CLUSTER
        )));
    }
    let pts: Vec<[f64; 2]> = shots.iter().map(IqShot::point).collect();
    let n = pts.len() as f64;
    let all = weighted_moments(&pts, |_| 1.0);
    let reg = [1e-6 * all.cov[0][0], 1e-6 * all.cov[1][1]];
    let scale = all.cov[0][0].max(all.cov[1][1]).max(f64::MIN_POSITIVE);
    let mut regularized = false;

    // initial components from a nearest-seed partition
    let seeds = farthest_point_seeds(&pts, rng);
    let nearest: Vec<usize> = pts
        .iter()
        .map(|p| {
            (0..COMPONENTS)
                .min_by(|&a, &b| {
                    let da = (p[0] - seeds[a][0]).powi(2) + (p[1] - seeds[a][1]).powi(2);
                    let db = (p[0] - seeds[b][0]).powi(2) + (p[1] - seeds[b][1]).powi(2);
                    da.total_cmp(&db)
                })
                .expect("three seeds")
        })
        .collect();
    let mut components = [Component { weight: 0.0, mean: [0.0; 2], covariance: [[0.0; 2]; 2] }; COMPONENTS];
    for k in 0..COMPONENTS {
        let m = weighted_moments(&pts, |s| f64::from(u8::from(nearest[s] == k)));
        let (cov, r) = if m.weight > 1.0 { regularize(m.cov, reg, scale)? } else { (all.cov, false) };
        regularized |= r;
        components[k] = Component { weight: (m.weight / n).max(1.0 / n), mean: if m.weight > 0.0 { m.mean } else { seeds[k] }, covariance: cov };
    }
    let wsum: f64 = components.iter().map(|c| c.weight).sum();
    components.iter_mut().for_each(|c| c.weight /= wsum);

    let mut history: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut resp = vec![[0.0; COMPONENTS]; pts.len()];
    for _ in 0..opts.max_iter {
        // E step
        let mut ll = 0.0;
        for (s, p) in pts.iter().enumerate() {
            let (r, z) = responsibilities(&components, p);
            resp[s] = r;
            ll += z;
        }
        let ll = ll / n;
        if !ll.is_finite() {
            return Err(Error::Numerical("GMM log-likelihood is not finite".into()));
        }
        // M step
        let mut step_regularized = false;
        for k in 0..COMPONENTS {
            let m = weighted_moments(&pts, |s| resp[s][k]);
            if !(m.weight > 0.0) {
                return Err(Error::Numerical(format!("GMM component {k} lost all weight")));
            }
            let (cov, r) = regularize(m.cov, reg, scale)?;
            step_regularized |= r;
            components[k] = Component { weight: m.weight / n, mean: m.mean, covariance: cov };
        }
        regularized |= step_regularized;
        if let Some(&prev) = history.last() {
            if ll < prev - 1e-10 * prev.abs().max(1.0) && !step_regularized {
                return Err(Error::Numerical(format!("EM log-likelihood decreased from {prev} to {ll}")));
            }
            history.push(ll);
            if (ll - prev).abs() < opts.rel_tol * ll.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        } else {
            history.push(ll);
        }
    }
    let state_of = assign_states(&components, shots);
    Ok(GaussianMixture { components, state_of, log_likelihood: history, converged, regularized })
}

impl GaussianMixture {
    /// Posterior probabilities of levels 0, 1, 2 for one shot.
    pub fn classify(&self, shot: &IqShot) -> [f64; COMPONENTS] {
        let (r, _) = responsibilities(&self.components, &shot.point());
        let mut p = [0.0; COMPONENTS];
        for (c, &v) in r.iter().enumerate() {
            p[self.state_of[c]] += v;
        }
        let s: f64 = p.iter().sum();
        p.map(|v| v / s)
    }

    /// Component of level `state`.
    pub fn component_for(&self, state: usize) -> &Component {
        let c = self.state_of.iter().position(|&s| s == state).expect("state map is a permutation");
        &self.components[c]
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::parse(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
    }
}

pub fn classify(gmm: &GaussianMixture, shot: &IqShot) -> [f64; COMPONENTS] {
    gmm.classify(shot)
}
