//! Byte-matrix plaintext/ciphertext carrier.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ImageError {
    #[error("data length {len} does not match {rows}x{cols}")]
    LengthMismatch { rows: usize, cols: usize, len: usize },
}

/// An `M x N` byte matrix addressed row-major; linear index
/// `k = i * cols + j` ranges over `[0, M*N)`. The same type carries plain,
/// permuted and cipher images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if data.len() != rows * cols {
            return Err(ImageError::LengthMismatch { rows, cols, len: data.len() });
        }
        Ok(Image { rows, cols, data })
    }

    /// Image of a single repeated byte value.
    pub fn constant(rows: usize, cols: usize, value: u8) -> Self {
        Image { rows, cols, data: vec![value; rows * cols] }
    }

    /// Wrap an arbitrary byte buffer as a 1-row image.
    pub fn from_bytes(data: Vec<u8>) -> Self {
        Image { rows: 1, cols: data.len(), data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.data[row * self.cols + col] = value;
    }

    /// Flip bit `bit` (0 = least significant) of the pixel at `(row, col)`.
    pub fn flip_bit(&mut self, row: usize, col: usize, bit: u8) {
        assert!(bit < 8);
        self.data[row * self.cols + col] ^= 1 << bit;
    }
}
