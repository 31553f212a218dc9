//! Ordinal datasets: CSV ingestion, validation, and discretization of raw
//! measurements into category codes.
//!
//! Codes are 1-based (`1..=L_j` in column j). Rows must be complete; missing
//! data is rejected at load.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::NodeId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LevelsMode {
    /// `L_j` = maximum observed code in column j.
    Auto,
    /// Explicit per-column level counts.
    Declared(Vec<usize>),
}

/// An n x p matrix of ordinal category codes with per-column level counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrdinalDataset {
    names: Vec<String>,
    levels: Vec<usize>,
    columns: Vec<Vec<usize>>,
    n: usize,
}

impl OrdinalDataset {
    pub fn from_parts(
        names: Vec<String>,
        levels: Vec<usize>,
        columns: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let p = names.len();
        if levels.len() != p || columns.len() != p {
            return Err(Error::Validation(format!(
                "got {p} names, {} level counts, {} columns",
                levels.len(),
                columns.len()
            )));
        }
        if p == 0 {
            return Err(Error::Validation("dataset has no columns".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in &names {
            if !seen.insert(name) {
                return Err(Error::Validation(format!("duplicate column name {name:?}")));
            }
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::Validation("dataset has no rows".into()));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::Validation(format!(
                    "column {:?} has {} rows, expected {n}",
                    names[j],
                    col.len()
                )));
            }
            if levels[j] < 2 {
                return Err(Error::DegenerateColumn {
                    name: names[j].clone(),
                    msg: format!("declared {} levels, need at least 2", levels[j]),
                });
            }
            for &code in col {
                if code == 0 || code > levels[j] {
                    return Err(Error::Validation(format!(
                        "column {:?}: code {code} outside 1..={}",
                        names[j], levels[j]
                    )));
                }
            }
        }
        Ok(OrdinalDataset {
            names,
            levels,
            columns,
            n,
        })
    }

    /// Sample size.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of variables.
    pub fn p(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, j: NodeId) -> &str {
        &self.names[j - 1]
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    /// Level count of column `j` (1-based).
    pub fn level(&self, j: NodeId) -> usize {
        self.levels[j - 1]
    }

    /// Codes of column `j` (1-based).
    pub fn column(&self, j: NodeId) -> &[usize] {
        &self.columns[j - 1]
    }

    /// Dataset with the two given columns in the given order (for pair analysis).
    pub fn select_pair(&self, a: NodeId, b: NodeId) -> Result<OrdinalDataset> {
        for &j in &[a, b] {
            if j == 0 || j > self.p() {
                return Err(Error::NodeOutOfRange {
                    node: j,
                    num_nodes: self.p(),
                });
            }
        }
        OrdinalDataset::from_parts(
            vec![self.names[a - 1].clone(), self.names[b - 1].clone()],
            vec![self.levels[a - 1], self.levels[b - 1]],
            vec![self.columns[a - 1].clone(), self.columns[b - 1].clone()],
        )
    }

    /// Copy with columns swapped: (X, Y) -> (Y, X). Requires p = 2.
    pub fn swap_pair(&self) -> Result<OrdinalDataset> {
        if self.p() != 2 {
            return Err(Error::Validation(format!(
                "expected 2 columns, got {}",
                self.p()
            )));
        }
        self.select_pair(2, 1)
    }

    /// Load integer category codes from CSV (header row mandatory).
    pub fn from_csv<P: AsRef<Path>>(path: P, mode: LevelsMode) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, mode)
    }

    pub fn from_csv_reader<R: Read>(reader: R, mode: LevelsMode) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let names: Vec<String> = rdr
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(|s| s.trim().to_string())
            .collect();
        let p = names.len();
        if p == 0 {
            return Err(Error::Validation("header row is empty".into()));
        }
        let mut columns: Vec<Vec<usize>> = vec![Vec::new(); p];
        for (idx, record) in rdr.records().enumerate() {
            let line = idx + 2; // header is line 1
            let record = record.map_err(csv_err)?;
            if record.len() != p {
                return Err(Error::Parse {
                    line,
                    msg: format!("row has {} fields, expected {p}", record.len()),
                });
            }
            for (j, field) in record.iter().enumerate() {
                let code: usize = field.trim().parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!(
                        "cell {:?} in column {:?} is not a positive integer",
                        field, names[j]
                    ),
                })?;
                if code == 0 {
                    return Err(Error::Validation(format!(
                        "line {line}, column {:?}: codes are 1-based, got 0",
                        names[j]
                    )));
                }
                columns[j].push(code);
            }
        }
        if columns[0].is_empty() {
            return Err(Error::Validation("no data rows".into()));
        }
        let levels = match mode {
            LevelsMode::Auto => {
                let mut levels = Vec::with_capacity(p);
                for (j, col) in columns.iter().enumerate() {
                    let max = *col.iter().max().unwrap();
                    let min = *col.iter().min().unwrap();
                    if max == min {
                        return Err(Error::DegenerateColumn {
                            name: names[j].clone(),
                            msg: format!("constant column (all codes = {max})"),
                        });
                    }
                    levels.push(max);
                }
                levels
            }
            LevelsMode::Declared(levels) => {
                if levels.len() != p {
                    return Err(Error::Validation(format!(
                        "declared {} level counts for {p} columns",
                        levels.len()
                    )));
                }
                levels
            }
        };
        Self::from_parts(names, levels, columns)
    }

    /// Write as CSV with header; inverse of `from_csv` with declared levels.
    pub fn to_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names).map_err(csv_err)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.p())
                .map(|j| self.columns[j][i].to_string())
                .collect();
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        },
        _ => Error::Parse {
            line: 0,
            msg: e.to_string(),
        },
    }
}

/// Load a real-valued matrix from CSV (header row mandatory); feed the columns
/// through `quantile_discretize` or `trichotomize_zero_median` to obtain codes.
pub fn read_csv_reals<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let names: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let p = names.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); p];
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(csv_err)?;
        if record.len() != p {
            return Err(Error::Parse {
                line,
                msg: format!("row has {} fields, expected {p}", record.len()),
            });
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line,
                msg: format!("cell {:?} in column {:?} is not a number", field, names[j]),
            })?;
            if !v.is_finite() {
                return Err(Error::Validation(format!(
                    "line {line}, column {:?}: non-finite value",
                    names[j]
                )));
            }
            columns[j].push(v);
        }
    }
    if p == 0 || columns[0].is_empty() {
        return Err(Error::Validation("no data".into()));
    }
    Ok((names, columns))
}

/// Map reals to codes `1..=levels` by splitting at the `l/levels` empirical
/// quantiles, where the `t`-quantile is the ceil(t*n)-th order statistic.
/// Value v gets code l iff q_{(l-1)/L} < v <= q_{l/L}; ties share a code.
pub fn quantile_discretize(raw: &[f64], levels: usize) -> Result<Vec<usize>> {
    if levels < 2 {
        return Err(Error::Validation(format!(
            "need at least 2 levels, got {levels}"
        )));
    }
    let n = raw.len();
    if n < levels {
        return Err(Error::DegenerateColumn {
            name: String::new(),
            msg: format!("{n} values cannot fill {levels} bins"),
        });
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite value in column".into()));
    }
    let mut sorted = raw.to_vec();
    sorted.sort_by(f64::total_cmp);
    // upper bin boundaries: the l/L quantiles for l = 1..L-1
    let thresholds: Vec<f64> = (1..levels)
        .map(|l| sorted[(l * n).div_ceil(levels) - 1])
        .collect();
    let codes: Vec<usize> = raw
        .iter()
        .map(|&v| 1 + thresholds.iter().filter(|&&t| v > t).count())
        .collect();
    let mut present = vec![false; levels];
    for &c in &codes {
        present[c - 1] = true;
    }
    if let Some(missing) = present.iter().position(|&b| !b) {
        return Err(Error::DegenerateColumn {
            name: String::new(),
            msg: format!(
                "quantile bin {} is empty (ties or too few distinct values)",
                missing + 1
            ),
        });
    }
    Ok(codes)
}

/// Codes {1,2,3}: 1 iff v = 0, 2 iff 0 < v <= median of the nonzero values,
/// 3 otherwise. Intended for zero-inflated nonnegative measurements.
pub fn trichotomize_zero_median(raw: &[f64]) -> Result<Vec<usize>> {
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite value in column".into()));
    }
    if raw.iter().any(|&v| v < 0.0) {
        return Err(Error::Validation(
            "negative value; expected nonnegative measurements".into(),
        ));
    }
    let mut nonzero: Vec<f64> = raw.iter().copied().filter(|&v| v > 0.0).collect();
    nonzero.sort_by(f64::total_cmp);
    let m = nonzero.len();
    if raw.len() == m {
        return Err(Error::DegenerateColumn {
            name: String::new(),
            msg: "no zeros; zero bin would be empty".into(),
        });
    }
    if m < 2 || nonzero[0] == nonzero[m - 1] {
        return Err(Error::DegenerateColumn {
            name: String::new(),
            msg: "fewer than two distinct nonzero values".into(),
        });
    }
    let median = if m % 2 == 1 {
        nonzero[m / 2]
    } else {
        0.5 * (nonzero[m / 2 - 1] + nonzero[m / 2])
    };
    let codes: Vec<usize> = raw
        .iter()
        .map(|&v| {
            if v == 0.0 {
                1
            } else if v <= median {
                2
            } else {
                3
            }
        })
        .collect();
    for bin in 1..=3 {
        if !codes.contains(&bin) {
            return Err(Error::DegenerateColumn {
                name: String::new(),
                msg: format!("bin {bin} is empty"),
            });
        }
    }
    Ok(codes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_auto_levels() {
        let csv = "a,b\n1,2\n3,1\n2,3\n";
        let d = OrdinalDataset::from_csv_reader(csv.as_bytes(), LevelsMode::Auto).unwrap();
        assert_eq!(d.levels(), &[3, 3]);
        assert_eq!(d.n(), 3);
        assert_eq!(d.column(1), &[1, 3, 2]);
    }

    #[test]
    fn csv_rejects_duplicate_column_names() {
        let csv = "a,a\n1,2\n2,1\n";
        let err = OrdinalDataset::from_csv_reader(csv.as_bytes(), LevelsMode::Auto).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn csv_rejects_zero_code() {
        let csv = "a,b\n1,2\n0,1\n";
        let err = OrdinalDataset::from_csv_reader(csv.as_bytes(), LevelsMode::Auto).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn csv_rejects_constant_column_in_auto_mode() {
        let csv = "a,b\n1,2\n1,1\n";
        let err = OrdinalDataset::from_csv_reader(csv.as_bytes(), LevelsMode::Auto).unwrap_err();
        assert!(matches!(err, Error::DegenerateColumn { .. }), "{err}");
    }

    #[test]
    fn csv_rejects_non_integer_and_ragged_rows() {
        let err =
            OrdinalDataset::from_csv_reader("a,b\n1,x\n".as_bytes(), LevelsMode::Auto).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err =
            OrdinalDataset::from_csv_reader("a,b\n1\n".as_bytes(), LevelsMode::Auto).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn csv_declared_levels_validated() {
        let csv = "a\n1\n4\n";
        let err = OrdinalDataset::from_csv_reader(csv.as_bytes(), LevelsMode::Declared(vec![3]))
            .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let ok =
            OrdinalDataset::from_csv_reader(csv.as_bytes(), LevelsMode::Declared(vec![5])).unwrap();
        assert_eq!(ok.level(1), 5);
    }

    #[test]
    fn csv_round_trip() {
        let csv = "a,b\n1,2\n3,1\n2,3\n";
        let d = OrdinalDataset::from_csv_reader(csv.as_bytes(), LevelsMode::Auto).unwrap();
        let mut buf = Vec::new();
        d.to_csv(&mut buf).unwrap();
        let d2 = OrdinalDataset::from_csv_reader(
            buf.as_slice(),
            LevelsMode::Declared(d.levels().to_vec()),
        )
        .unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(
            quantile_discretize(&[0.1, 0.4, 0.9, 1.6], 2).unwrap(),
            vec![1, 1, 2, 2]
        );
        assert_eq!(
            quantile_discretize(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3).unwrap(),
            vec![1, 1, 2, 2, 3, 3]
        );
        assert!(matches!(
            quantile_discretize(&[5.0, 5.0, 5.0, 5.0], 2),
            Err(Error::DegenerateColumn { .. })
        ));
    }

    #[test]
    fn quantile_balanced_bins_on_distinct_data() {
        let raw: Vec<f64> = (0..100)
            .map(|i| (i as f64 * 0.73).sin() + i as f64 * 1e-4)
            .collect();
        for levels in [2, 3, 4, 5] {
            let codes = quantile_discretize(&raw, levels).unwrap();
            let mut counts = vec![0usize; levels];
            for c in codes {
                counts[c - 1] += 1;
            }
            let max = counts.iter().max().unwrap();
            let min = counts.iter().min().unwrap();
            assert!(max - min <= 1, "L={levels}: counts {counts:?}");
        }
    }

    #[test]
    fn trichotomize_examples() {
        assert_eq!(
            trichotomize_zero_median(&[0.0, 1.0, 3.0, 5.0]).unwrap(),
            vec![1, 2, 2, 3]
        );
        assert_eq!(
            trichotomize_zero_median(&[0.0, 0.0, 2.0, 8.0]).unwrap(),
            vec![1, 1, 2, 3]
        );
        assert!(matches!(
            trichotomize_zero_median(&[1.0, 2.0, 3.0]),
            Err(Error::DegenerateColumn { .. })
        ));
    }

    proptest! {
        // codes depend only on ranks: any strictly increasing transform
        // (here exp plus scaling) leaves them unchanged
        #[test]
        fn quantile_codes_invariant_under_monotone_transform(
            raw in proptest::collection::vec(-50.0f64..50.0, 6..60),
            levels in 2usize..5,
        ) {
            let a = quantile_discretize(&raw, levels);
            let transformed: Vec<f64> = raw.iter().map(|v| (v * 0.11).exp() * 3.0 + 1.0).collect();
            let b = quantile_discretize(&transformed, levels);
            match (a, b) {
                (Ok(ca), Ok(cb)) => prop_assert_eq!(ca, cb),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "mismatch: {:?} vs {:?}", a.is_ok(), b.is_ok()),
            }
        }

        #[test]
        fn quantile_codes_in_range_and_monotone(
            raw in proptest::collection::vec(-10.0f64..10.0, 8..40),
        ) {
            if let Ok(codes) = quantile_discretize(&raw, 4) {
                for (i, &ci) in codes.iter().enumerate() {
                    prop_assert!((1..=4).contains(&ci));
                    for (k, &ck) in codes.iter().enumerate() {
                        if raw[i] < raw[k] {
                            prop_assert!(ci <= ck);
                        }
                    }
                }
            }
        }
    }
}
