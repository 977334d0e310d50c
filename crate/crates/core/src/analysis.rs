//! Detection probabilities and QKD figures of merit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::{CountMatrix, ExperimentResults};

/// Row-normalizes in-window counts; the no-window bucket is ignored.
pub fn probabilities(counts: &CountMatrix) -> Result<Vec<Vec<f64>>> {
    let d = counts.dimension();
    counts
        .counts
        .iter()
        .enumerate()
        .map(|(row, c)| {
            let total: u64 = c[..d].iter().sum();
            if total == 0 {
                return Err(Error::InsufficientData { row });
            }
            Ok(c[..d].iter().map(|&n| n as f64 / total as f64).collect())
        })
        .collect()
}

/// `Q = 1 - mean(F)` over the `2d` fidelities of both bases.
pub fn qber(fidelities: &[f64], d: usize) -> Result<f64> {
    if fidelities.len() != 2 * d {
        return Err(Error::Shape {
            expected: 2 * d,
            actual: fidelities.len(),
        });
    }
    if let Some(&f) = fidelities.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::Domain {
            name: "fidelity",
            value: f,
            domain: "[0, 1]",
        });
    }
    let mean = fidelities.iter().sum::<f64>() / (2 * d) as f64;
    Ok((1.0 - mean).clamp(0.0, 1.0))
}

/// `-x log2(x/(d-1)) - (1-x) log2(1-x)`, with `0 log 0 = 0`.
pub fn shannon_entropy_d(x: f64, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            name: "x",
            value: x,
            domain: "[0, 1]",
        });
    }
    if d < 2 {
        return Err(Error::Domain {
            name: "d",
            value: d as f64,
            domain: "[2, inf)",
        });
    }
    let error_term = if x == 0.0 {
        0.0
    } else {
        -x * (x / (d - 1) as f64).log2()
    };
    let success_term = if x == 1.0 { 0.0 } else { -(1.0 - x) * (1.0 - x).log2() };
    Ok(error_term + success_term)
}

/// Secret key rate in bits per sifted photon, `log2(d) - 2 h_d(Q)`. Not clamped.
pub fn secret_key_rate(d: usize, q: f64) -> Result<f64> {
    Ok((d as f64).log2() - 2.0 * shannon_entropy_d(q, d)?)
}

/// QBER at which the key rate reaches zero, by bisection on `[0, (d-1)/d]`.
pub fn key_rate_threshold(d: usize) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = (d - 1) as f64 / d as f64;
    if secret_key_rate(d, lo)? <= 0.0 || secret_key_rate(d, hi)? >= 0.0 {
        return Err(Error::Domain {
            name: "d",
            value: d as f64,
            domain: "rate must change sign on [0, (d-1)/d]",
        });
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if secret_key_rate(d, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRateReport {
    pub dimension: usize,
    /// `fidelities[basis][i]`, the matched-basis diagonal probabilities.
    pub fidelities: [Vec<f64>; 2],
    pub qber: f64,
    pub rate: f64,
    pub threshold: f64,
}

impl KeyRateReport {
    /// Builds the report from matched-basis probability matrices `p[basis]`.
    pub fn from_matched_probabilities(p: [&[Vec<f64>]; 2]) -> Result<Self> {
        let d = p[0].len();
        if p[1].len() != d {
            return Err(Error::Shape {
                expected: d,
                actual: p[1].len(),
            });
        }
        let diag = |m: &[Vec<f64>]| -> Vec<f64> { m.iter().enumerate().map(|(i, r)| r[i]).collect() };
        let fidelities = [diag(p[0]), diag(p[1])];
        KeyRateReport::from_fidelities(d, fidelities)
    }

    pub fn from_fidelities(d: usize, fidelities: [Vec<f64>; 2]) -> Result<Self> {
        let all: Vec<f64> = fidelities.iter().flatten().copied().collect();
        let q = qber(&all, d)?;
        Ok(KeyRateReport {
            dimension: d,
            qber: q,
            rate: secret_key_rate(d, q)?,
            threshold: key_rate_threshold(d)?,
            fidelities,
        })
    }

    pub fn mean_fidelity(&self, basis: usize) -> f64 {
        let f = &self.fidelities[basis];
        f.iter().sum::<f64>() / f.len() as f64
    }
}

/// Report from Monte Carlo counts; only the matched-basis tables are needed.
pub fn build_report(results: &ExperimentResults) -> Result<KeyRateReport> {
    let p00 = probabilities(results.get(0, 0).ok_or(Error::InsufficientData { row: 0 })?)?;
    let p11 = probabilities(results.get(1, 1).ok_or(Error::InsufficientData { row: 0 })?)?;
    KeyRateReport::from_matched_probabilities([&p00, &p11])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Basis;
    use crate::montecarlo::CountMatrix;

    /// Independent entropy evaluation in natural logs.
    fn entropy_ln(x: f64, d: f64) -> f64 {
        let mut h = 0.0;
        if x > 0.0 {
            h -= x * (x / (d - 1.0)).ln();
        }
        if x < 1.0 {
            h -= (1.0 - x) * (1.0 - x).ln();
        }
        h / std::f64::consts::LN_2
    }

    fn counts(rows: Vec<Vec<u64>>) -> CountMatrix {
        CountMatrix::from_rows(Basis::Computational, Basis::Computational, rows, 100, 1)
    }

    #[test]
    fn probability_rows() {
        let p = probabilities(&counts(vec![vec![98, 1, 1, 0, 7]; 4])).unwrap();
        assert_eq!(p[0], vec![0.98, 0.01, 0.01, 0.0]);
        let ideal = probabilities(&counts(
            (0..4)
                .map(|i| (0..5).map(|j| if i == j { 50 } else { 0 }).collect())
                .collect(),
        ))
        .unwrap();
        for (i, row) in ideal.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, if i == j { 1.0 } else { 0.0 });
            }
        }
        let mut rows = vec![vec![5, 0, 0, 0, 0]; 4];
        rows[2] = vec![0, 0, 0, 0, 9];
        assert_eq!(
            probabilities(&counts(rows)),
            Err(Error::InsufficientData { row: 2 })
        );
    }

    #[test]
    fn scaled_counts_give_identical_probabilities() {
        let rows = vec![vec![37, 2, 5, 1, 3], vec![1, 40, 0, 2, 0], vec![3, 3, 33, 1, 1], vec![0, 1, 1, 29, 2]];
        let base = probabilities(&counts(rows.clone())).unwrap();
        for k in [2u64, 3, 17, 1000] {
            let scaled = rows.iter().map(|r| r.iter().map(|c| c * k).collect()).collect();
            assert_eq!(probabilities(&counts(scaled)).unwrap(), base);
        }
    }

    #[test]
    fn qber_examples() {
        assert_eq!(qber(&[1.0; 8], 4).unwrap(), 0.0);
        let measured = [0.987, 0.984, 0.978, 0.986, 0.978, 0.948, 0.965, 0.945];
        let q = qber(&measured, 4).unwrap();
        assert!((q - 0.028).abs() <= 0.001, "{q}");
        let x = 0.037;
        assert!((qber(&[1.0 - x; 8], 4).unwrap() - x).abs() < 1e-15);
        assert!(matches!(qber(&[1.0; 7], 4), Err(Error::Shape { .. })));
        assert!(qber(&[1.2; 8], 4).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(shannon_entropy_d(0.0, 4).unwrap(), 0.0);
        assert!((shannon_entropy_d(0.5, 2).unwrap() - 1.0).abs() < 1e-15);
        let h = shannon_entropy_d(0.028, 4).unwrap();
        assert!((h - entropy_ln(0.028, 4.0)).abs() < 1e-12);
        assert!((h - 0.2287).abs() < 5e-4, "{h}");
        assert!(shannon_entropy_d(-0.1, 4).is_err());
        assert!(shannon_entropy_d(1.1, 4).is_err());
        assert!((shannon_entropy_d(1.0, 4).unwrap() - 3f64.log2()).abs() < 1e-15);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(secret_key_rate(2, 0.0).unwrap(), 1.0);
        assert_eq!(secret_key_rate(4, 0.0).unwrap(), 2.0);
        let r = secret_key_rate(4, 0.028).unwrap();
        assert!((r - 1.54).abs() <= 0.01, "{r}");
        // negative rates are reported as-is
        assert!(secret_key_rate(2, 0.3).unwrap() < 0.0);
    }

    #[test]
    fn thresholds() {
        let q2 = key_rate_threshold(2).unwrap();
        assert!((q2 - 0.1100).abs() < 5e-5, "{q2}");
        // cross-check with the independent entropy: 1 = 2 h(q)
        assert!((2.0 * entropy_ln(q2, 2.0) - 1.0).abs() < 1e-9);
        let q4 = key_rate_threshold(4).unwrap();
        assert!(secret_key_rate(4, q4).unwrap().abs() < 1e-9);
        assert!(q4 > q2);
        for d in [2, 4, 8, 16] {
            let qs = key_rate_threshold(d).unwrap();
            let mut prev = f64::INFINITY;
            for k in 0..=200 {
                let r = secret_key_rate(d, qs * k as f64 / 200.0).unwrap();
                assert!(r < prev);
                prev = r;
            }
        }
    }

    #[test]
    fn report_from_fidelities() {
        let f = [vec![0.987, 0.984, 0.978, 0.986], vec![0.978, 0.948, 0.965, 0.945]];
        let r = KeyRateReport::from_fidelities(4, f).unwrap();
        assert!((r.qber - 0.028).abs() <= 0.001);
        assert!((r.rate - 1.54).abs() <= 0.01);
        assert_eq!(r.rate, secret_key_rate(4, r.qber).unwrap());
        let ideal = KeyRateReport::from_fidelities(4, [vec![1.0; 4], vec![1.0; 4]]).unwrap();
        assert_eq!((ideal.qber, ideal.rate), (0.0, 2.0));
    }
}
