use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    Euclidean,
    L1,
}

/// L1 or (optionally precision-weighted) Euclidean distance.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceSpec {
    pub kind: DistanceKind,
    precision: Option<Matrix>,
    /// Lower Cholesky factor L of the precision, so (a−b)ᵀP(a−b) = ‖Lᵀ(a−b)‖².
    factor: Option<Matrix>,
}

impl DistanceSpec {
    pub fn euclidean() -> Self {
        DistanceSpec {
            kind: DistanceKind::Euclidean,
            precision: None,
            factor: None,
        }
    }

    pub fn l1() -> Self {
        DistanceSpec {
            kind: DistanceKind::L1,
            precision: None,
            factor: None,
        }
    }

    /// √((a−b)ᵀ P (a−b)); P must be symmetric positive definite.
    pub fn with_precision(precision: Matrix) -> Result<Self> {
        precision.check_symmetric()?;
        let factor = precision.cholesky()?;
        Ok(DistanceSpec {
            kind: DistanceKind::Euclidean,
            precision: Some(precision),
            factor: Some(factor),
        })
    }

    pub fn precision(&self) -> Option<&Matrix> {
        self.precision.as_ref()
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::Dimension {
                expected: a.len(),
                found: b.len(),
            });
        }
        match (self.kind, &self.factor) {
            (DistanceKind::L1, _) => Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()),
            (DistanceKind::Euclidean, None) => {
                Ok(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
            }
            (DistanceKind::Euclidean, Some(l)) => {
                let d = a.len();
                if l.rows() != d {
                    return Err(Error::Dimension {
                        expected: l.rows(),
                        found: d,
                    });
                }
                let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                let mut ss = 0.0;
                for j in 0..d {
                    // (Lᵀ diff)_j = Σ_{i ≥ j} L_ij diff_i
                    let v: f64 = (j..d).map(|i| l[(i, j)] * diff[i]).sum();
                    ss += v * v;
                }
                Ok(ss.sqrt())
            }
        }
    }
}

pub fn distance(a: &[f64], b: &[f64], spec: &DistanceSpec) -> Result<f64> {
    spec.eval(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_norms() {
        assert_eq!(distance(&[1.0, 2.0], &[0.0, 0.0], &DistanceSpec::l1()).unwrap(), 3.0);
        assert_eq!(distance(&[3.0, 4.0], &[0.0, 0.0], &DistanceSpec::euclidean()).unwrap(), 5.0);
        assert_eq!(distance(&[3.0, 4.0], &[3.0, 4.0], &DistanceSpec::euclidean()).unwrap(), 0.0);
        assert!(distance(&[1.0], &[1.0, 2.0], &DistanceSpec::l1()).is_err());
    }

    #[test]
    fn precision_weighting() {
        let p = Matrix::from_rows(&[[2.0, 0.5], [0.5, 1.0]]).unwrap();
        let spec = DistanceSpec::with_precision(p.clone()).unwrap();
        let v = [0.7, -1.3];
        let direct = crate::numkernel::linalg::dot(&v, &p.matvec(&v)).sqrt();
        assert!((spec.eval(&v, &[0.0, 0.0]).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn indefinite_precision_rejected() {
        let p = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(DistanceSpec::with_precision(p).is_err());
    }
}
