use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cross_validate, CvReport, Method};
use crate::datagen::Dataset;
use crate::error::{ensure, KsvmError, Result};
use crate::scalar::Scalar;

/// Inclusive range of base-2 exponents, written `start:end[:step]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpRange {
    pub start: i32,
    pub end: i32,
    pub step: i32,
}

impl ExpRange {
    pub fn new(start: i32, end: i32) -> Self {
        ExpRange { start, end, step: 1 }
    }

    pub fn single(exponent: i32) -> Self {
        ExpRange::new(exponent, exponent)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.step > 0, "exponent step must be positive");
        ensure!(self.start <= self.end, "exponent range {self} is empty");
        Ok(())
    }

    pub fn values(&self) -> Vec<i32> {
        (self.start..=self.end).step_by(self.step.max(1) as usize).collect()
    }

    pub fn contains(&self, exponent: i32) -> bool {
        self.values().contains(&exponent)
    }
}

impl fmt::Display for ExpRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.step == 1 {
            write!(f, "{}:{}", self.start, self.end)
        } else {
            write!(f, "{}:{}:{}", self.start, self.end, self.step)
        }
    }
}

impl FromStr for ExpRange {
    type Err = KsvmError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || KsvmError::precondition(format!("exponent range {s:?} is not start:end[:step]"));
        let parts: Vec<i32> = s
            .split(':')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let range = match parts[..] {
            [start, end] => ExpRange::new(start, end),
            [start, end, step] => ExpRange { start, end, step },
            _ => return Err(bad()),
        };
        range.validate()?;
        Ok(range)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSearchConfig {
    pub m_exponents: ExpRange,
    pub alpha_exponents: ExpRange,
    pub fold_count: usize,
    pub seed: u64,
}

impl Default for GridSearchConfig {
    /// `M` in 2^0..2^12 and `alpha` in 2^-12..2^1, which covers the starting
    /// point (2^0, 2^-1) and the reported optimum (2^7, 2^-9).
    fn default() -> Self {
        GridSearchConfig {
            m_exponents: ExpRange::new(0, 12),
            alpha_exponents: ExpRange::new(-12, 1),
            fold_count: 5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub m_exp: i32,
    pub alpha_exp: i32,
    pub report: CvReport,
}

impl GridCell {
    pub fn penalty(&self) -> f64 {
        2f64.powi(self.m_exp)
    }

    pub fn alpha(&self) -> f64 {
        2f64.powi(self.alpha_exp)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    /// Cells in `M`-major order, both exponents ascending.
    pub cells: Vec<GridCell>,
    pub best: usize,
}

impl GridResult {
    pub fn best_cell(&self) -> &GridCell {
        &self.cells[self.best]
    }

    /// Index of the lowest-error cell; ties go to the smaller `M`, then the
    /// smaller `alpha`.
    pub fn argmin(cells: &[GridCell]) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, c) in cells.iter().enumerate() {
            let better = match best {
                None => true,
                Some(b) => {
                    let (e, eb) = (c.report.overall_error, cells[b].report.overall_error);
                    e < eb || (e == eb && (c.m_exp, c.alpha_exp) < (cells[b].m_exp, cells[b].alpha_exp))
                }
            };
            if better {
                best = Some(i);
            }
        }
        best
    }

    /// Flat CSV with one row per (cell, fold).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("M_exp,alpha_exp,fold,flying_correct,flying_total,mobile_correct,mobile_total\n");
        for cell in &self.cells {
            for (fold, c) in cell.report.per_fold.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{fold},{},{},{},{}\n",
                    cell.m_exp, cell.alpha_exp, c.flying_correct, c.flying_total, c.mobile_correct, c.mobile_total
                ));
            }
        }
        out
    }
}

/// Cross-validates every `(2^m, 2^a)` cell of the grid with `method` as the
/// template. Cells run in parallel; results are returned in grid order.
pub fn grid_search<T: Scalar>(
    dataset: &Dataset<T>,
    config: &GridSearchConfig,
    method: &Method<T>,
) -> Result<GridResult> {
    config.m_exponents.validate()?;
    config.alpha_exponents.validate()?;
    let pairs: Vec<(i32, i32)> = config
        .m_exponents
        .values()
        .into_iter()
        .flat_map(|m| config.alpha_exponents.values().into_iter().map(move |a| (m, a)))
        .collect();
    let cells: Vec<GridCell> = pairs
        .par_iter()
        .map(|&(m_exp, alpha_exp)| {
            let cell_method = method.with_hyperparameters(T::pow2(m_exp), T::pow2(alpha_exp));
            let report = cross_validate(dataset, &cell_method, config.fold_count, config.seed)?;
            Ok(GridCell {
                m_exp,
                alpha_exp,
                report,
            })
        })
        .collect::<Result<_>>()?;
    let best = GridResult::argmin(&cells).ok_or_else(|| KsvmError::precondition("grid is empty"))?;
    Ok(GridResult { cells, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::ConfusionCounts;

    fn cell(m_exp: i32, alpha_exp: i32, wrong: usize) -> GridCell {
        let counts = ConfusionCounts {
            flying_correct: 10 - wrong,
            flying_total: 10,
            mobile_correct: 10,
            mobile_total: 10,
        };
        GridCell {
            m_exp,
            alpha_exp,
            report: CvReport::from_folds(vec![counts], &[0.0]),
        }
    }

    #[test]
    fn ranges_parse() {
        assert_eq!("0:12".parse::<ExpRange>().unwrap().values().len(), 13);
        assert_eq!("-12:1".parse::<ExpRange>().unwrap().values().first(), Some(&-12));
        assert_eq!("0:6:3".parse::<ExpRange>().unwrap().values(), vec![0, 3, 6]);
        assert!("3:1".parse::<ExpRange>().is_err());
        assert!("a:b".parse::<ExpRange>().is_err());
        assert!("1".parse::<ExpRange>().is_err());
    }

    #[test]
    fn defaults_cover_reported_optimum() {
        let g = GridSearchConfig::default();
        assert!(g.m_exponents.contains(7) && g.alpha_exponents.contains(-9));
        assert!(g.m_exponents.contains(0) && g.alpha_exponents.contains(-1));
    }

    #[test]
    fn ties_prefer_small_m_then_small_alpha() {
        let cells = vec![cell(0, 1, 3), cell(1, -2, 1), cell(2, -5, 1), cell(1, -3, 1)];
        assert_eq!(GridResult::argmin(&cells), Some(3));
        assert_eq!(GridResult::argmin(&cells[..1]), Some(0));
        assert_eq!(GridResult::argmin(&[]), None);
    }
}
