use std::path::Path;

use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::data::csv_error;

/// One demodulated readout shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqShot {
    pub i: f64,
    pub q: f64,
    pub label: Option<usize>,
}

impl IqShot {
    pub fn new(i: f64, q: f64) -> Self {
        Self { i, q, label: None }
    }

    pub fn labeled(i: f64, q: f64, label: usize) -> Self {
        Self { i, q, label: Some(label) }
    }

    pub fn point(&self) -> [f64; 2] {
        [self.i, self.q]
    }
}

pub fn validate_shots(shots: &[IqShot]) -> Result<()> {
    for (s, shot) in shots.iter().enumerate() {
        if !shot.i.is_finite() || !shot.q.is_finite() {
            return Err(Error::InvalidData(format!("shot {s} has non-finite IQ values")));
        }
        if shot.label.is_some_and(|l| l > 2) {
            return Err(Error::InvalidData(format!("shot {s} has label {:?}, expected 0, 1 or 2", shot.label)));
        }
    }
    Ok(())
}

/// `shot_index,I,Q[,label]`; the label column is written when any shot has one.
pub fn write_shots_csv(shots: &[IqShot], path: &Path) -> Result<()> {
    let labeled = shots.iter().any(|s| s.label.is_some());
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["shot_index", "I", "Q"];
    if labeled {
        header.push("label");
    }
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (k, s) in shots.iter().enumerate() {
        let mut row = vec![k.to_string(), s.i.to_string(), s.q.to_string()];
        if labeled {
            row.push(s.label.map(|l| l.to_string()).unwrap_or_default());
        }
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_shots_csv(path: &Path) -> Result<Vec<IqShot>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let labeled = match header.iter().collect::<Vec<_>>().as_slice() {
        ["shot_index", "I", "Q"] => false,
        ["shot_index", "I", "Q", "label"] => true,
        _ => return Err(Error::parse(path, "expected header shot_index,I,Q[,label]")),
    };
    let mut shots = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let f = |i: usize| rec[i].trim().parse::<f64>().map_err(|e| Error::parse(path, format!("line {}: {e}", shots.len() + 2)));
        let label = if labeled && !rec[3].trim().is_empty() {
            Some(rec[3].trim().parse::<usize>().map_err(|e| Error::parse(path, e))?)
        } else {
            None
        };
        shots.push(IqShot { i: f(1)?, q: f(2)?, label });
    }
    validate_shots(&shots).map_err(|e| Error::parse(path, e))?;
    Ok(shots)
}

/// Three Gaussian IQ clusters, one per state, for generating test shots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqModel {
    pub means: [[f64; 2]; 3],
    pub covariances: [[[f64; 2]; 2]; 3],
}

impl IqModel {
    /// Elliptical, partly overlapping clusters with misassignment of a few
    /// percent between neighbouring states.
    pub fn overlapping() -> Self {
        Self {
            means: [[-1.0, 0.0], [1.0, 0.2], [0.6, 2.2]],
            covariances: [
                [[0.16, 0.03], [0.03, 0.12]],
                [[0.2, -0.04], [-0.04, 0.16]],
                [[0.25, 0.05], [0.05, 0.3]],
            ],
        }
    }

    /// Isotropic clusters with unit S.D. and centres `separation` apart.
    pub fn separated(separation: f64) -> Self {
        let h = separation * 3f64.sqrt() / 2.0;
        Self {
            means: [[0.0, 0.0], [separation, 0.0], [separation / 2.0, h]],
            covariances: [[[1.0, 0.0], [0.0, 1.0]]; 3],
        }
    }

    pub fn shot<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> IqShot {
        let c = &self.covariances[state];
        // Cholesky factor of the 2×2 covariance
        let l11 = c[0][0].sqrt();
        let l21 = c[1][0] / l11;
        let l22 = (c[1][1] - l21 * l21).sqrt();
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let m = &self.means[state];
        IqShot::labeled(m[0] + l11 * z1, m[1] + l21 * z1 + l22 * z2, state)
    }

    /// `n` shots per prepared state, labeled.
    pub fn training_set<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<IqShot> {
        (0..3).flat_map(|s| std::iter::repeat_n(s, n)).map(|s| self.shot(s, rng)).collect()
    }

    /// `n` shots whose true states are drawn from `pops`; labels hold the
    /// true state.
    pub fn measurement<R: Rng + ?Sized>(&self, pops: &[f64; 3], n: usize, rng: &mut R) -> Result<Vec<IqShot>> {
        let dist = WeightedIndex::new(pops).map_err(|e| Error::InvalidParameter(format!("populations {pops:?}: {e}")))?;
        Ok((0..n)
            .map(|_| {
                let s = dist.sample(rng);
                self.shot(s, rng)
            })
            .collect())
    }
}
