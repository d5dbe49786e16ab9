use std::io::{Read, Write};
use std::ops::Range;

use crate::error::{Error, Result};

/// A uniformly sampled multivariate time series, stored row-major
/// (one row per time step).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    data: Vec<f64>,
    dim: usize,
    dt: f64,
    transient_discarded: usize,
}

impl Trajectory {
    pub fn new(data: Vec<f64>, dim: usize, dt: f64) -> Result<Self> {
        if dim == 0 || data.is_empty() || data.len() % dim != 0 {
            return Err(Error::InsufficientData(format!(
                "trajectory needs at least one row of dimension {dim}, got {} values",
                data.len()
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config(format!("dt must be positive, got {dt}")));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "trajectory entry at step {}",
                pos / dim
            )));
        }
        Ok(Trajectory {
            data,
            dim,
            dt,
            transient_discarded: 0,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], dt: f64) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != dim) {
            return Err(Error::config("ragged rows"));
        }
        Self::new(rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect(), dim, dt)
    }

    pub fn from_series(series: Vec<f64>, dt: f64) -> Result<Self> {
        Self::new(series, 1, dt)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn transient_discarded(&self) -> usize {
        self.transient_discarded
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Rows `range`; the start offset is added to `transient_discarded` so the
    /// result remembers where it sits in the original integration.
    pub fn segment(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InsufficientData(format!(
                "segment {range:?} out of bounds for length {}",
                self.len()
            )));
        }
        Ok(Trajectory {
            data: self.data[range.start * self.dim..range.end * self.dim].to_vec(),
            dim: self.dim,
            dt: self.dt,
            transient_discarded: self.transient_discarded + range.start,
        })
    }

    /// Drops the first `n` rows.
    pub fn discard_transient(&self, n: usize) -> Result<Self> {
        if n >= self.len() {
            return Err(Error::InsufficientData(format!(
                "cannot discard {n} of {} steps",
                self.len()
            )));
        }
        self.segment(n..self.len())
    }

    /// Per-coordinate mean.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for r in self.rows() {
            for (a, v) in m.iter_mut().zip(r) {
                *a += v;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    /// Per-coordinate population standard deviation.
    pub fn std(&self) -> Vec<f64> {
        let mean = self.mean();
        let mut s = vec![0.0; self.dim];
        for r in self.rows() {
            for ((a, v), m) in s.iter_mut().zip(r).zip(&mean) {
                *a += (v - m) * (v - m);
            }
        }
        let n = self.len() as f64;
        s.iter().map(|a| (a / n).sqrt()).collect()
    }

    /// Rows in reverse time order.
    pub fn reversed(&self) -> Self {
        let data = self.data.chunks_exact(self.dim).rev().flatten().copied().collect();
        Trajectory {
            data,
            dim: self.dim,
            dt: self.dt,
            transient_discarded: self.transient_discarded,
        }
    }

    /// Writes `t,x1,...,xD` CSV with shortest round-trip float formatting.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|j| format!("x{j}")));
        w.write_record(&header)?;
        let mut rec = Vec::with_capacity(self.dim + 1);
        for (k, row) in self.rows().enumerate() {
            rec.clear();
            rec.push(format_f64(k as f64 * self.dt));
            rec.extend(row.iter().map(|v| format_f64(*v)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Reads the format written by [`Trajectory::write_csv`]; `dt` is taken
    /// from the first two time stamps (1 when there is a single row).
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.get(0) != Some("t") || headers.len() < 2 {
            return Err(Error::config("trajectory CSV must start with a `t` column"));
        }
        let dim = headers.len() - 1;
        let mut times = Vec::new();
        let mut data = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let mut vals = rec.iter().map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config(format!("bad number {s:?} in trajectory CSV")))
            });
            times.push(vals.next().unwrap_or(Ok(f64::NAN))?);
            for v in vals {
                data.push(v?);
            }
        }
        let dt = if times.len() >= 2 { times[1] - times[0] } else { 1.0 };
        Trajectory::new(data, dim, dt)
    }
}

pub(crate) fn format_f64(v: f64) -> String {
    // Rust's Display is the shortest representation that round-trips.
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(n: usize) -> Trajectory {
        Trajectory::new((0..n * 3).map(|v| v as f64).collect(), 3, 0.01).unwrap()
    }

    #[test]
    fn discard_lengths() {
        let t = ramp(100);
        let d = t.discard_transient(10).unwrap();
        assert_eq!(d.len(), 90);
        assert_eq!(d.transient_discarded(), 10);
        assert_eq!(d.discard_transient(5).unwrap().transient_discarded(), 15);
        assert_eq!(t.discard_transient(0).unwrap(), t);
        assert!(t.discard_transient(100).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Trajectory::new(vec![1.0, f64::NAN, 0.0], 3, 0.01).is_err());
        assert!(Trajectory::new(vec![], 3, 0.01).is_err());
        assert!(Trajectory::new(vec![1.0], 1, 0.0).is_err());
    }

    #[test]
    fn csv_header_and_time() {
        let mut buf = Vec::new();
        ramp(2).write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "t,x1,x2,x3\n0,0,1,2\n0.01,3,4,5\n");
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(vals in prop::collection::vec(-1e6f64..1e6, 3..60)) {
            let n = vals.len() / 3 * 3;
            let t = Trajectory::new(vals[..n].to_vec(), 3, 0.01).unwrap();
            let mut buf = Vec::new();
            t.write_csv(&mut buf).unwrap();
            let back = Trajectory::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.as_slice(), t.as_slice());
        }
    }
}
