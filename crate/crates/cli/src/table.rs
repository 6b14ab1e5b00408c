//! Trajectory tables read back from the CSV files written by `simulate`.

use std::path::Path;

use corrbath::{Error, Result};
use num_complex::Complex64;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
struct CsvRow {
    t: f64,
    observable: String,
    exact_re: f64,
    exact_im: f64,
    markov_re: f64,
    markov_im: f64,
    chi_hat_re: f64,
    chi_hat_im: f64,
    free_corr_re: f64,
    free_corr_im: f64,
    born_distance: f64,
    markov_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub t: f64,
    pub observable: String,
    pub exact: Complex64,
    pub markov: Complex64,
    pub chi_hat: Complex64,
    pub free_corr: Complex64,
    pub born_distance: f64,
    pub markov_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub rows: Vec<Row>,
}

impl TraceTable {
    pub fn parse(text: &str) -> Result<TraceTable> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<CsvRow>() {
            let r = rec.map_err(|e| Error::Validation(format!("malformed trajectory table: {e}")))?;
            rows.push(Row {
                t: r.t,
                observable: r.observable,
                exact: Complex64::new(r.exact_re, r.exact_im),
                markov: Complex64::new(r.markov_re, r.markov_im),
                chi_hat: Complex64::new(r.chi_hat_re, r.chi_hat_im),
                free_corr: Complex64::new(r.free_corr_re, r.free_corr_im),
                born_distance: r.born_distance,
                markov_error: r.markov_error,
            });
        }
        Ok(TraceTable { rows })
    }

    pub fn read(path: &Path) -> Result<TraceTable> {
        TraceTable::parse(&std::fs::read_to_string(path)?)
    }

    fn of<'a>(&'a self, obs: &'a str) -> Result<impl Iterator<Item = &'a Row> + 'a> {
        if !self.rows.iter().any(|r| r.observable == obs) {
            return Err(Error::Validation(format!("observable `{obs}` not present in the trajectory table")));
        }
        Ok(self.rows.iter().filter(move |r| r.observable == obs))
    }

    /// `(t, markov_error)` once per time.
    pub fn markov_series(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for r in &self.rows {
            if out.last().is_none_or(|l| l.0 != r.t) {
                out.push((r.t, r.markov_error));
            }
        }
        out
    }

    pub fn window_end(&self) -> f64 {
        self.rows.last().map(|r| r.t).unwrap_or(0.0)
    }

    /// Supremum of the Markov error, its time, and whether that time is the last grid point.
    pub fn markov_summary(&self) -> (f64, f64, bool) {
        let s = self.markov_series();
        let mut best = (0.0, 0.0, false);
        for (i, &(t, e)) in s.iter().enumerate() {
            if i == 0 || e > best.0 {
                best = (e, t, i + 1 == s.len() && s.len() > 1);
            }
        }
        best
    }

    pub fn max_abs_chi(&self, obs: &str) -> Result<f64> {
        Ok(self.of(obs)?.map(|r| r.chi_hat.norm()).fold(0.0, f64::max))
    }

    pub fn max_abs_chi_minus_free(&self, obs: &str) -> Result<f64> {
        Ok(self.of(obs)?.map(|r| (r.chi_hat - r.free_corr).norm()).fold(0.0, f64::max))
    }

    pub fn abs_chi_series(&self, obs: &str) -> Result<Vec<(f64, f64)>> {
        Ok(self.of(obs)?.map(|r| (r.t, r.chi_hat.norm())).collect())
    }

    pub fn decomposition_defect(&self) -> f64 {
        self.rows.iter().map(|r| (r.exact - r.markov - r.chi_hat).norm()).fold(0.0, f64::max)
    }

    /// `max |chi_hat(0) - free_corr(0)|` over observables; both equal
    /// `ρ_SR(O) - (ρ_S ⊗ ω_R)(O)`.
    pub fn chi_free_gap_at_zero(&self) -> f64 {
        let t0 = self.rows.first().map(|r| r.t).unwrap_or(0.0);
        self.rows.iter().filter(|r| r.t == t0).map(|r| (r.chi_hat - r.free_corr).norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "t,observable,exact_re,exact_im,markov_re,markov_im,chi_hat_re,chi_hat_im,free_corr_re,free_corr_im,born_distance,markov_error
0.000000,sx,1.0e0,0.0e0,0.5e0,0.0e0,0.5e0,0.0e0,0.5e0,0.0e0,0.1e0,0.0e0
0.000000,sz,0.0e0,0.0e0,0.0e0,0.0e0,0.0e0,0.0e0,0.0e0,0.0e0,0.1e0,0.0e0
0.500000,sx,0.9e0,0.0e0,0.6e0,0.0e0,0.3e0,0.0e0,0.2e0,0.0e0,0.1e0,2.0e-2
0.500000,sz,0.0e0,0.1e0,0.0e0,0.0e0,0.0e0,0.1e0,0.0e0,0.0e0,0.1e0,2.0e-2
1.000000,sx,0.8e0,0.0e0,0.7e0,0.0e0,0.1e0,0.0e0,0.1e0,0.0e0,0.1e0,1.0e-2
1.000000,sz,0.0e0,0.0e0,0.0e0,0.0e0,0.0e0,0.0e0,0.0e0,0.0e0,0.1e0,1.0e-2
";

    #[test]
    fn summaries() {
        let t = TraceTable::parse(SAMPLE).unwrap();
        assert_eq!(t.markov_series().len(), 3);
        assert_eq!(t.markov_summary(), (2.0e-2, 0.5, false));
        assert!((t.max_abs_chi("sx").unwrap() - 0.5).abs() < 1e-15);
        assert!((t.max_abs_chi_minus_free("sz").unwrap() - 0.1).abs() < 1e-15);
        assert!(t.decomposition_defect() < 1e-15);
        assert_eq!(t.chi_free_gap_at_zero(), 0.0);
        assert!(t.max_abs_chi("weyl").is_err());
        assert_eq!(t.window_end(), 1.0);
    }

    #[test]
    fn malformed_table_is_rejected() {
        assert!(TraceTable::parse("t,observable\n0,x\n").is_err());
    }
}
