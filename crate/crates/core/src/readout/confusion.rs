use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::gmm::GaussianMixture;
use super::shots::IqShot;
use crate::error::{Error, Result};

pub const MAX_CONDITION: f64 = 1e6;
const COLUMN_TOL: f64 = 1e-12;

/// `c[i][j] = Pr(measure |i⟩ | prepared |j⟩)`; columns sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub c: [[f64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn new(c: [[f64; 3]; 3]) -> Result<Self> {
        for j in 0..3 {
            let s: f64 = (0..3).map(|i| c[i][j]).sum();
            if (s - 1.0).abs() > COLUMN_TOL {
                return Err(Error::InvalidData(format!("confusion column {j} sums to {s}")));
            }
        }
        if c.iter().flatten().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidData("confusion entries must lie in [0, 1]".into()));
        }
        Ok(Self { c })
    }

    /// From rows indexed by the prepared state, i.e. the transpose.
    pub fn from_prepared_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::new(std::array::from_fn(|i| std::array::from_fn(|j| rows[j][i])))
    }

    /// Assignment probabilities trained on 80,000 shots of the reference
    /// device, given per prepared state.
    pub fn reference() -> Self {
        Self::from_prepared_rows([
            [0.997125, 0.002625, 0.000250],
            [0.016750, 0.981250, 0.002000],
            [0.006125, 0.043375, 0.950500],
        ])
        .expect("reference matrix is stochastic")
    }

    pub fn identity() -> Self {
        Self { c: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.c[i][j])
    }

    /// 2-norm condition number.
    pub fn condition_number(&self) -> f64 {
        let sv = self.matrix().singular_values();
        let min = sv.min();
        if min == 0.0 { f64::INFINITY } else { sv.max() / min }
    }

    /// `C·p`.
    pub fn apply(&self, p: &[f64; 3]) -> [f64; 3] {
        let v = self.matrix() * Vector3::from(*p);
        [v[0], v[1], v[2]]
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::parse(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: Self = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
        Self::new(raw.c).map_err(|e| Error::parse(path, e))
    }
}

/// Column `j` is the mean classification vector of shots prepared in `j`.
pub fn build_confusion(gmm: &GaussianMixture, shots: &[IqShot]) -> Result<ConfusionMatrix> {
    let mut sums = [[0.0; 3]; 3];
    let mut counts = [0usize; 3];
    for s in shots {
        let Some(j) = s.label else { continue };
        if j > 2 {
            return Err(Error::InvalidData(format!("label {j} is not a qutrit level")));
        }
        let p = gmm.classify(s);
        for i in 0..3 {
            sums[i][j] += p[i];
        }
        counts[j] += 1;
    }
    if let Some(j) = counts.iter().position(|&n| n == 0) {
        return Err(Error::InsufficientData(format!("no training shots labeled {j}")));
    }
    let mut c: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| sums[i][j] / counts[j] as f64));
    // remove roundoff so columns add to one
    for j in 0..3 {
        let s: f64 = (0..3).map(|i| c[i][j]).sum();
        (0..3).for_each(|i| c[i][j] /= s);
    }
    ConfusionMatrix::new(c)
}

/// `C⁻¹·measured`; with `clamp`, negative entries are zeroed and the result
/// renormalized.
pub fn mitigate(c: &ConfusionMatrix, measured: &[f64; 3], clamp: bool) -> Result<[f64; 3]> {
    let cond = c.condition_number();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::Numerical(format!("confusion matrix condition number {cond:.3e} exceeds {MAX_CONDITION:e}")));
    }
    let x = c
        .matrix()
        .lu()
        .solve(&Vector3::from(*measured))
        .ok_or_else(|| Error::Numerical("confusion matrix is singular".into()))?;
    let mut p = [x[0], x[1], x[2]];
    if clamp {
        p.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        let s: f64 = p.iter().sum();
        if s > 0.0 {
            p.iter_mut().for_each(|v| *v /= s);
        }
    }
    Ok(p)
}

/// Column-wise mean of per-shot population vectors.
pub fn average_shots(per_shot: &[[f64; 3]]) -> Result<[f64; 3]> {
    if per_shot.is_empty() {
        return Err(Error::InsufficientData("no shots to average".into()));
    }
    let n = per_shot.len() as f64;
    Ok(std::array::from_fn(|k| per_shot.iter().map(|p| p[k]).sum::<f64>() / n))
}

/// Classifies, averages and mitigates one set of measurement shots.
pub fn mitigate_shots(gmm: &GaussianMixture, c: &ConfusionMatrix, shots: &[IqShot], clamp: bool) -> Result<[f64; 3]> {
    let per_shot: Vec<[f64; 3]> = shots.iter().map(|s| gmm.classify(s)).collect();
    mitigate(c, &average_shots(&per_shot)?, clamp)
}
