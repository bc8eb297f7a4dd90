//! Uniformly sampled simulation record.

use std::io::{self, Write};

/// Column-major table of simulation signals, sampled every `record_dt`
/// seconds. Column 0 is always `t`; all columns have equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    names: Vec<String>,
    data: Vec<Vec<f64>>,
    record_dt: f64,
    /// Worst relative bus power imbalance seen at any recorded sample
    /// (islanded runs; 0 for a stiff grid).
    pub max_power_imbalance: f64,
    /// Recorded samples during which any modulation command saturated.
    pub saturated_samples: usize,
}

impl Trace {
    pub fn new(names: Vec<String>, record_dt: f64) -> Trace {
        assert!(!names.is_empty() && names[0] == "t", "first column must be t");
        assert!(record_dt > 0.0);
        let data = names.iter().map(|_| Vec::new()).collect();
        Trace {
            names,
            data,
            record_dt,
            max_power_imbalance: 0.0,
            saturated_samples: 0,
        }
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.names.len(), "row width matches the header");
        // Uniform sampling is a structural invariant, not a measurement.
        if let Some(&prev) = self.data[0].last() {
            let dt = row[0] - prev;
            assert!(
                (dt - self.record_dt).abs() <= 1e-9 * (1.0 + row[0].abs()),
                "non-uniform sample: {prev} -> {}",
                row[0]
            );
        }
        for (col, &v) in self.data.iter_mut().zip(row) {
            col.push(v);
        }
    }

    pub fn len(&self) -> usize {
        self.data[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn record_dt(&self) -> f64 {
        self.record_dt
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn time(&self) -> &[f64] {
        &self.data[0]
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.data[k].as_slice())
    }

    /// Mean of `name` over `t` in [t0, t1). Panics if the window is empty or
    /// the column missing; windows are study constants, not user input.
    pub fn window_mean(&self, name: &str, t0: f64, t1: f64) -> f64 {
        let y = self.column(name).unwrap_or_else(|| panic!("no column {name}"));
        let t = self.time();
        let mut acc = 0.0;
        let mut n = 0usize;
        for k in 0..y.len() {
            if t[k] >= t0 && t[k] < t1 {
                acc += y[k];
                n += 1;
            }
        }
        assert!(n > 0, "empty window [{t0}, {t1})");
        acc / n as f64
    }

    /// Largest |y - reference| of `name` over `t` in [t0, t1).
    pub fn window_max_dev(&self, name: &str, reference: f64, t0: f64, t1: f64) -> f64 {
        let y = self.column(name).unwrap_or_else(|| panic!("no column {name}"));
        let t = self.time();
        let mut worst = 0.0f64;
        let mut n = 0usize;
        for k in 0..y.len() {
            if t[k] >= t0 && t[k] < t1 {
                worst = worst.max((y[k] - reference).abs());
                n += 1;
            }
        }
        assert!(n > 0, "empty window [{t0}, {t1})");
        worst
    }

    /// Write the header row and all samples in fixed decimal notation.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{}", self.names.join(","))?;
        let mut line = String::new();
        for k in 0..self.len() {
            line.clear();
            for (j, col) in self.data.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{:.6}", col[k]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}
