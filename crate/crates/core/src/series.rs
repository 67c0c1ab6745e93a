//! Time series of received-signal values shared by the analytic model, the
//! oracle and the simulator.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("{what} has {got} entries, expected {expected}")]
    Length {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("times must be positive and strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("value {value:e} at index {index} outside [0, {upper:e}]")]
    OutOfRange { index: usize, value: f64, upper: f64 },
}

/// Values sampled on a time grid, with optional per-point standard errors.
///
/// `stderr` is empty for deterministic (analytic or oracle) series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignalSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl SignalSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, SeriesError> {
        Self::with_stderr(times, values, Vec::new())
    }

    pub fn with_stderr(
        times: Vec<f64>,
        values: Vec<f64>,
        stderr: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        validate_grid(&times)?;
        if values.len() != times.len() {
            return Err(SeriesError::Length {
                what: "values",
                got: values.len(),
                expected: times.len(),
            });
        }
        if !stderr.is_empty() && stderr.len() != times.len() {
            return Err(SeriesError::Length {
                what: "stderr",
                got: stderr.len(),
                expected: times.len(),
            });
        }
        for (index, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(SeriesError::NonFinite {
                    what: "value",
                    index,
                });
            }
        }
        for (index, v) in stderr.iter().enumerate() {
            if !v.is_finite() {
                return Err(SeriesError::NonFinite {
                    what: "stderr",
                    index,
                });
            }
        }
        Ok(SignalSeries {
            times,
            values,
            stderr,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn has_stderr(&self) -> bool {
        !self.stderr.is_empty()
    }

    /// Checks `0 <= value <= upper` everywhere (1 for probabilities, `N_A`
    /// for molecule counts).
    pub fn check_bounds(&self, upper: f64) -> Result<(), SeriesError> {
        for (index, &value) in self.values.iter().enumerate() {
            if !(0.0..=upper).contains(&value) {
                return Err(SeriesError::OutOfRange {
                    index,
                    value,
                    upper,
                });
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> SignalSeries {
        SignalSeries {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            stderr: self.stderr.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Strictly increasing, positive, finite.
pub fn validate_grid(times: &[f64]) -> Result<(), SeriesError> {
    let mut prev = 0.0;
    for (i, &t) in times.iter().enumerate() {
        if !t.is_finite() {
            return Err(SeriesError::NonFinite {
                what: "time",
                index: i,
            });
        }
        if t <= prev {
            return Err(SeriesError::NotIncreasing(i));
        }
        prev = t;
    }
    Ok(())
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let (l0, l1) = (lo.ln(), hi.ln());
            let mut grid: Vec<f64> = (0..n)
                .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
                .collect();
            // Pin the endpoints exactly; exp(ln(x)) is not always x.
            grid[0] = lo;
            grid[n - 1] = hi;
            grid
        }
    }
}
