//! Seeded Rayleigh channel draws and their CSV fixture format.

use std::io::{Read, Write};

use llmo_core::optimizer::seeded_stream;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::WirelessError;

/// Dense complex matrix, row-major. For interference channels row `i` is the
/// transmitter and column `j` the receiver.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self, WirelessError> {
        if rows == 0 || cols == 0 {
            return Err(WirelessError::InvalidModel("channel must be at least 1x1".into()));
        }
        if entries.len() != rows * cols {
            return Err(WirelessError::InvalidModel(format!(
                "{} entries for a {rows}x{cols} channel",
                entries.len()
            )));
        }
        if entries.iter().any(|h| !h.re.is_finite() || !h.im.is_finite()) {
            return Err(WirelessError::InvalidModel("channel entries must be finite".into()));
        }
        Ok(Self { rows, cols, entries })
    }

    /// Real-valued diagonal channel, handy for hand-checked fixtures.
    pub fn diagonal(gains: &[f64]) -> Result<Self, WirelessError> {
        let d = gains.len();
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
        for (i, &g) in gains.iter().enumerate() {
            entries[i * d + i] = Complex64::new(g, 0.0);
        }
        Self::new(d, d, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.cols + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// `|h_ij|²` in the same layout.
    pub fn power_gains(&self) -> Vec<f64> {
        self.entries.iter().map(|h| h.norm_sqr()).collect()
    }
}

/// One `CN(0, 1)` draw: independent real and imaginary parts of variance ½.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `rows × cols` i.i.d. `CN(0, 1)` entries drawn row by row from `seed`.
pub fn rayleigh_channels(rows: usize, cols: usize, seed: u64) -> Result<ChannelMatrix, WirelessError> {
    let mut rng = seeded_stream(seed, 0);
    let entries = (0..rows * cols).map(|_| complex_normal(&mut rng)).collect();
    ChannelMatrix::new(rows, cols, entries)
}

/// Length-`d` channel vector, e.g. one coefficient per broadcast user.
pub fn rayleigh_vector(d: usize, seed: u64) -> Result<Vec<Complex64>, WirelessError> {
    Ok(rayleigh_channels(d, 1, seed)?.entries)
}

#[derive(Serialize, Deserialize)]
struct FixtureRow {
    sample: usize,
    row: usize,
    col: usize,
    re: f64,
    im: f64,
}

/// A list of equally shaped channel draws shared by the optimizer and the
/// baselines. Stored as CSV with columns `sample,row,col,re,im`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelFixture {
    pub channels: Vec<ChannelMatrix>,
}

impl ChannelFixture {
    /// Sample `i` is `rayleigh_channels(rows, cols, seed + i)`.
    pub fn rayleigh(count: usize, rows: usize, cols: usize, seed: u64) -> Result<Self, WirelessError> {
        let channels = (0..count)
            .map(|i| rayleigh_channels(rows, cols, seed.wrapping_add(i as u64)))
            .collect::<Result<_, _>>()?;
        Ok(Self { channels })
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), WirelessError> {
        let mut w = csv::Writer::from_writer(writer);
        for (sample, h) in self.channels.iter().enumerate() {
            for row in 0..h.rows {
                for col in 0..h.cols {
                    let v = h.get(row, col);
                    w.serialize(FixtureRow {
                        sample,
                        row,
                        col,
                        re: v.re,
                        im: v.im,
                    })?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, WirelessError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| WirelessError::Fixture(e.to_string()))
    }

    /// Rows must come sample by sample in row-major order, as written.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, WirelessError> {
        let mut r = csv::Reader::from_reader(reader);
        let mut grouped: Vec<Vec<FixtureRow>> = Vec::new();
        for rec in r.deserialize() {
            let row: FixtureRow = rec?;
            if row.sample == grouped.len() {
                grouped.push(Vec::new());
            } else if row.sample + 1 != grouped.len() {
                return Err(WirelessError::Fixture(format!("sample {} out of order", row.sample)));
            }
            grouped.last_mut().expect("pushed above").push(row);
        }
        let mut channels = Vec::with_capacity(grouped.len());
        for (sample, rows) in grouped.into_iter().enumerate() {
            let n_rows = rows.iter().map(|r| r.row).max().unwrap_or(0) + 1;
            let n_cols = rows.iter().map(|r| r.col).max().unwrap_or(0) + 1;
            for (k, r) in rows.iter().enumerate() {
                if r.row * n_cols + r.col != k {
                    return Err(WirelessError::Fixture(format!(
                        "sample {sample}: entry ({}, {}) out of order",
                        r.row, r.col
                    )));
                }
            }
            let entries = rows.iter().map(|r| Complex64::new(r.re, r.im)).collect();
            let h = ChannelMatrix::new(n_rows, n_cols, entries)?;
            if let Some(first) = channels.first() {
                let first: &ChannelMatrix = first;
                if (first.rows, first.cols) != (h.rows, h.cols) {
                    return Err(WirelessError::Fixture("samples have different shapes".into()));
                }
            }
            channels.push(h);
        }
        Ok(Self { channels })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draw() {
        assert_eq!(rayleigh_channels(3, 4, 9).unwrap(), rayleigh_channels(3, 4, 9).unwrap());
        assert_ne!(
            rayleigh_channels(3, 4, 9).unwrap(),
            rayleigh_channels(3, 4, 10).unwrap()
        );
    }

    #[test]
    fn vector_is_first_column_layout() {
        let v = rayleigh_vector(5, 3).unwrap();
        let h = rayleigh_channels(5, 1, 3).unwrap();
        assert_eq!(v, h.entries());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ChannelMatrix::new(0, 2, vec![]).is_err());
        assert!(ChannelMatrix::new(2, 2, vec![Complex64::new(1.0, 0.0)]).is_err());
        assert!(ChannelMatrix::new(1, 1, vec![Complex64::new(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn fixture_round_trips_exactly() {
        let f = ChannelFixture::rayleigh(3, 2, 2, 11).unwrap();
        let text = f.to_csv_string().unwrap();
        assert!(text.starts_with("sample,row,col,re,im\n"));
        let back = ChannelFixture::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn fixture_rejects_shuffled_rows() {
        let text = "sample,row,col,re,im\n0,0,1,1.0,0.0\n0,0,0,1.0,0.0\n";
        assert!(ChannelFixture::read_csv(text.as_bytes()).is_err());
    }
}
