//! Little-endian binary matrix dumps for field snapshots and spectrograms.
//!
//! Layout: a 64-byte header followed by `rows × cols` little-endian `f64`
//! values in row-major order.
//!
//! | offset | type    | field                                   |
//! |--------|---------|-----------------------------------------|
//! | 0      | [u8; 8] | magic `QDRAMSY1`                        |
//! | 8      | u64     | rows                                    |
//! | 16     | u64     | cols                                    |
//! | 24     | f64     | row step (dt for snapshots and traces)  |
//! | 32     | f64     | column step (dz, or dω for spectrograms)|
//! | 40     | f64     | row origin                              |
//! | 48     | f64     | column origin                           |
//! | 56     | u32     | [`DumpKind`] code                       |
//! | 60     | u32     | reserved (zero)                         |

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"QDRAMSY1";
pub const HEADER_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum DumpKind {
    Field = 1,
    Inversion = 2,
    Spectrogram = 3,
}

impl DumpKind {
    fn from_code(code: u32) -> Option<Self> {
        match code {
            1 => Some(DumpKind::Field),
            2 => Some(DumpKind::Inversion),
            3 => Some(DumpKind::Spectrogram),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub kind: DumpKind,
    pub rows: usize,
    pub cols: usize,
    pub row_step: f64,
    pub col_step: f64,
    pub row_origin: f64,
    pub col_origin: f64,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::validation("matrix data length does not match its dimensions"));
        }
        let mut header = [0u8; HEADER_LEN];
        header[0..8].copy_from_slice(&MAGIC);
        header[8..16].copy_from_slice(&(self.rows as u64).to_le_bytes());
        header[16..24].copy_from_slice(&(self.cols as u64).to_le_bytes());
        header[24..32].copy_from_slice(&self.row_step.to_le_bytes());
        header[32..40].copy_from_slice(&self.col_step.to_le_bytes());
        header[40..48].copy_from_slice(&self.row_origin.to_le_bytes());
        header[48..56].copy_from_slice(&self.col_origin.to_le_bytes());
        header[56..60].copy_from_slice(&(self.kind as u32).to_le_bytes());
        w.write_all(&header)?;
        let mut body = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            body.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&body)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)?;
        if header[0..8] != MAGIC {
            return Err(Error::validation("not a matrix dump: bad magic"));
        }
        let u64_at = |o: usize| u64::from_le_bytes(header[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().unwrap());
        let code = u32::from_le_bytes(header[56..60].try_into().unwrap());
        let kind =
            DumpKind::from_code(code).ok_or_else(|| Error::validation(format!("unknown matrix dump kind {code}")))?;
        let (rows, cols) = (u64_at(8) as usize, u64_at(16) as usize);
        let mut body = vec![0u8; rows * cols * 8];
        r.read_exact(&mut body)?;
        let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Matrix {
            kind,
            rows,
            cols,
            row_step: f64_at(24),
            col_step: f64_at(32),
            row_origin: f64_at(40),
            col_origin: f64_at(48),
            data,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_fixed() {
        let m = Matrix {
            kind: DumpKind::Field,
            rows: 2,
            cols: 3,
            row_step: 1e-15,
            col_step: 2e-8,
            row_origin: 0.0,
            col_origin: 0.0,
            data: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        };
        let mut bytes = Vec::new();
        m.write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 64 + 6 * 8);
        assert_eq!(&bytes[0..8], b"QDRAMSY1");
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), 1e-15);
        assert_eq!(f64::from_le_bytes(bytes[64..72].try_into().unwrap()), 1.0);
        assert_eq!(Matrix::read_from(&bytes[..]).unwrap(), m);
    }

    #[test]
    fn bad_magic_rejected() {
        let bytes = [0u8; 80];
        assert!(Matrix::read_from(&bytes[..]).is_err());
    }
}
