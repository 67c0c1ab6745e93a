//! Pointwise comparison of two series on the same grid.

use crate::series::SignalSeries;

use super::HarnessError;

/// Points at or below this fraction of the reference maximum are left out
/// of the relative deviation statistics.
pub const RELATIVE_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub times: Vec<f64>,
    /// Reference values (the first series).
    pub reference: Vec<f64>,
    /// `a - b` at each point.
    pub deviation: Vec<f64>,
    /// Combined standard error of the two series; zero when neither has one.
    pub stderr: Vec<f64>,
    /// Deviation in units of `stderr`, where that is positive.
    pub se_units: Vec<Option<f64>>,
    /// Largest `|a - b| / |a|` over points above the floor.
    pub max_rel: f64,
    pub mean_rel: f64,
    /// Points above the floor.
    pub considered: usize,
}

impl DeviationReport {
    /// Among points whose reference exceeds `min_value`, how many deviate
    /// by at most `max(se_mult · SE, rel_tol · reference)`. Returns
    /// `(within, eligible)`.
    pub fn count_within(&self, se_mult: f64, rel_tol: f64, min_value: f64) -> (usize, usize) {
        let mut within = 0;
        let mut eligible = 0;
        for i in 0..self.times.len() {
            if self.reference[i] <= min_value {
                continue;
            }
            eligible += 1;
            let bound = (se_mult * self.stderr[i]).max(rel_tol * self.reference[i].abs());
            if self.deviation[i].abs() <= bound {
                within += 1;
            }
        }
        (within, eligible)
    }
}

/// Compares `a` (the reference) with `b`. Grids must be identical.
pub fn compare_series(a: &SignalSeries, b: &SignalSeries) -> Result<DeviationReport, HarnessError> {
    if a.len() != b.len() {
        return Err(HarnessError::GridMismatch(format!(
            "{} points vs {}",
            a.len(),
            b.len()
        )));
    }
    if let Some(i) = (0..a.len()).find(|&i| a.times[i] != b.times[i]) {
        return Err(HarnessError::GridMismatch(format!(
            "t[{i}] = {:e} vs {:e}",
            a.times[i], b.times[i]
        )));
    }
    let se = |s: &SignalSeries, i: usize| s.stderr.get(i).copied().unwrap_or(0.0);
    let deviation: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    let stderr: Vec<f64> = (0..a.len()).map(|i| se(a, i).hypot(se(b, i))).collect();
    let se_units = deviation
        .iter()
        .zip(&stderr)
        .map(|(&d, &s)| (s > 0.0).then(|| d / s))
        .collect();

    let peak = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rel: Vec<f64> = (0..a.len())
        .filter(|&i| peak > 0.0 && a.values[i].abs() > RELATIVE_FLOOR * peak)
        .map(|i| (deviation[i] / a.values[i]).abs())
        .collect();
    let max_rel = rel.iter().fold(0.0f64, |m, &r| m.max(r));
    let mean_rel = if rel.is_empty() {
        0.0
    } else {
        rel.iter().sum::<f64>() / rel.len() as f64
    };
    Ok(DeviationReport {
        times: a.times.clone(),
        reference: a.values.clone(),
        deviation,
        stderr,
        se_units,
        max_rel,
        mean_rel,
        considered: rel.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_series_have_no_deviation() {
        let s = SignalSeries::with_stderr(vec![1.0, 2.0], vec![3.0, 4.0], vec![0.5, 0.5]).unwrap();
        let r = compare_series(&s, &s).unwrap();
        assert!(r.deviation.iter().all(|&d| d == 0.0));
        assert_eq!(r.max_rel, 0.0);
        assert_eq!(r.count_within(3.5, 0.0, 0.0), (2, 2));
    }

    #[test]
    fn se_units_and_relative_floor() {
        let a = SignalSeries::new(vec![1.0, 2.0, 3.0], vec![100.0, 0.5, 50.0]).unwrap();
        let b = SignalSeries::with_stderr(vec![1.0, 2.0, 3.0], vec![98.0, 0.0, 50.0], vec![1.0, 0.0, 2.0])
            .unwrap();
        let r = compare_series(&a, &b).unwrap();
        assert_eq!(r.se_units, vec![Some(2.0), None, Some(0.0)]);
        assert_eq!(r.considered, 2);
        assert!((r.max_rel - 0.02).abs() < 1e-15);
        assert!((r.mean_rel - 0.01).abs() < 1e-15);
        assert_eq!(r.count_within(1.5, 0.0, 10.0), (1, 2));
        assert_eq!(r.count_within(1.5, 0.05, 10.0), (2, 2));
    }

    #[test]
    fn grid_mismatch() {
        let a = SignalSeries::new(vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        let b = SignalSeries::new(vec![1.0, 2.5], vec![0.0, 0.0]).unwrap();
        let c = SignalSeries::new(vec![1.0], vec![0.0]).unwrap();
        assert!(matches!(compare_series(&a, &b), Err(HarnessError::GridMismatch(_))));
        assert!(matches!(compare_series(&a, &c), Err(HarnessError::GridMismatch(_))));
    }
}
