//! Little-endian weight files.
//!
//! Header: magic, version, qubit count, vocabulary size and layer count
//! (`u32` each after the magic). Each layer starts with a type byte (0
//! complex, 1 real) and its `rows`/`cols` as `u32`, followed by row-major
//! `f64` arrays: `w_re, w_im, b_re, b_im` for complex layers, `w, b` for
//! real ones.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Activation, ComplexDense, Network, RealDense};
use crate::dataset::{read_exact, read_u32};
use crate::error::{Error, Result};

pub const WEIGHTS_MAGIC: &[u8; 4] = b"AQCW";
pub const WEIGHTS_VERSION: u32 = 1;

const COMPLEX_LAYER: u8 = 0;
const REAL_LAYER: u8 = 1;
const KIND: &str = "weights";

/// Refuse absurd allocations from corrupt headers.
const MAX_LAYER_ENTRIES: usize = 1 << 28;

fn write_f64s<W: Write>(w: &mut W, xs: impl IntoIterator<Item = f64>) -> Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    read_exact(r, &mut buf, KIND)?;
    Ok(buf
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect())
}

fn read_matrix<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<Array2<f64>> {
    Ok(Array2::from_shape_vec((rows, cols), read_f64s(r, rows * cols)?).expect("sized buffer"))
}

impl Network {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(WEIGHTS_MAGIC)?;
        for v in [
            WEIGHTS_VERSION,
            self.n_qubits() as u32,
            self.vocab_size() as u32,
            (self.complex.len() + self.real.len()) as u32,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for l in &self.complex {
            w.write_all(&[COMPLEX_LAYER])?;
            w.write_all(&(l.outputs() as u32).to_le_bytes())?;
            w.write_all(&(l.inputs() as u32).to_le_bytes())?;
            for a in [&l.w_re, &l.w_im] {
                write_f64s(&mut w, a.iter().copied())?;
            }
            for b in [&l.b_re, &l.b_im] {
                write_f64s(&mut w, b.iter().copied())?;
            }
        }
        for l in &self.real {
            w.write_all(&[REAL_LAYER])?;
            w.write_all(&(l.outputs() as u32).to_le_bytes())?;
            w.write_all(&(l.inputs() as u32).to_le_bytes())?;
            write_f64s(&mut w, l.w.iter().copied())?;
            write_f64s(&mut w, l.b.iter().copied())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a weight file. The activation is not part of the format and
    /// must be supplied by the caller.
    pub fn read_from<R: Read>(mut r: R, activation: Activation) -> Result<Self> {
        let corrupt = |m: String| Error::corrupt(KIND, m);
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic, KIND)?;
        if &magic != WEIGHTS_MAGIC {
            return Err(corrupt(format!("bad magic {magic:?}")));
        }
        let version = read_u32(&mut r, KIND)?;
        if version != WEIGHTS_VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let n_qubits = read_u32(&mut r, KIND)? as usize;
        if n_qubits == 0 || n_qubits > 8 {
            return Err(corrupt(format!("unsupported qubit count {n_qubits}")));
        }
        let vocab_size = read_u32(&mut r, KIND)? as usize;
        let layer_count = read_u32(&mut r, KIND)? as usize;

        let mut complex = Vec::new();
        let mut real = Vec::new();
        for i in 0..layer_count {
            let mut kind = [0u8; 1];
            read_exact(&mut r, &mut kind, KIND)?;
            let rows = read_u32(&mut r, KIND)? as usize;
            let cols = read_u32(&mut r, KIND)? as usize;
            if rows.saturating_mul(cols) > MAX_LAYER_ENTRIES {
                return Err(corrupt(format!("layer {i} is too large ({rows}x{cols})")));
            }
            match kind[0] {
                COMPLEX_LAYER if real.is_empty() => {
                    let w_re = read_matrix(&mut r, rows, cols)?;
                    let w_im = read_matrix(&mut r, rows, cols)?;
                    let b_re = Array1::from(read_f64s(&mut r, rows)?);
                    let b_im = Array1::from(read_f64s(&mut r, rows)?);
                    complex.push(ComplexDense { w_re, w_im, b_re, b_im });
                }
                REAL_LAYER => {
                    let w = read_matrix(&mut r, rows, cols)?;
                    let b = Array1::from(read_f64s(&mut r, rows)?);
                    real.push(RealDense { w, b });
                }
                COMPLEX_LAYER => return Err(corrupt(format!("complex layer {i} follows a real layer"))),
                other => return Err(corrupt(format!("unknown layer type {other} at layer {i}"))),
            }
        }
        let real: [RealDense; 2] = real
            .try_into()
            .map_err(|v: Vec<RealDense>| corrupt(format!("expected 2 real layers, found {}", v.len())))?;
        let net = Network::from_layers(n_qubits, activation, complex, real)?;
        if net.vocab_size() != vocab_size {
            return Err(Error::Dimension {
                what: "output layer width",
                expected: vocab_size,
                found: net.vocab_size(),
            });
        }
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(Error::at_path(path))?;
        self.write_to(BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>, activation: Activation) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(Error::at_path(path))?;
        Network::read_from(BufReader::new(file), activation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvnn::NetworkConfig;

    fn net() -> Network {
        Network::new(&NetworkConfig {
            n_qubits: 2,
            vocab_size: 12,
            complex_widths: vec![5, 4, 3],
            real_hidden: 6,
            activation: Activation::SplitCRelu,
            seed: 9,
        })
        .unwrap()
    }

    fn bytes(n: &Network) -> Vec<u8> {
        let mut out = Vec::new();
        n.write_to(&mut out).unwrap();
        out
    }

    #[test]
    fn round_trip_is_lossless() {
        let mut a = net();
        a.complex[1].b_im[2] = -1.0 / 3.0;
        let buf = bytes(&a);
        let b = Network::read_from(&buf[..], Activation::SplitCRelu).unwrap();
        assert_eq!(a.complex, b.complex);
        assert_eq!(a.real, b.real);
        let input: Vec<f64> = (0..32).map(|i| (i as f64).sin()).collect();
        assert_eq!(a.forward(&input).unwrap(), b.forward(&input).unwrap());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let a = net();
        a.save(&path).unwrap();
        let b = Network::load(&path, Activation::SplitCRelu).unwrap();
        assert_eq!(a.complex, b.complex);
    }

    #[test]
    fn header_errors() {
        let good = bytes(&net());

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(
            Network::read_from(&bad[..], Activation::SplitCRelu),
            Err(Error::Corrupt { .. })
        ));

        let mut bad = good.clone();
        bad[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(
            Network::read_from(&bad[..], Activation::SplitCRelu),
            Err(Error::Corrupt { .. })
        ));

        let mut bad = good.clone();
        bad[12..16].copy_from_slice(&13u32.to_le_bytes());
        assert!(matches!(
            Network::read_from(&bad[..], Activation::SplitCRelu),
            Err(Error::Dimension { .. })
        ));

        for cut in [3, 20, good.len() / 2, good.len() - 1] {
            assert!(matches!(
                Network::read_from(&good[..cut], Activation::SplitCRelu),
                Err(Error::Corrupt { .. })
            ));
        }
    }
}
