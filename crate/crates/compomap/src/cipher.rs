//! The encryption pipeline: swap permutation, Confusion I (chained masked
//! addition/XOR seeded by the secret byte `S`), Confusion II (keystream
//! XOR).
//!
//! The stream-level functions take explicit keystreams so the attack code
//! and the tests can drive the pipeline with doctored streams; `encrypt` /
//! `decrypt` generate the streams from a [`SecretKey`] first.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chaos::{self, FMapParams, GMapParams, KeyRejected, KeystreamSet};
use crate::image::Image;

#[derive(Debug, Error, PartialEq)]
pub enum CipherError {
    #[error("keystream length {got} does not match buffer length {want}")]
    LengthMismatch { want: usize, got: usize },
    #[error(transparent)]
    KeyRejected(#[from] KeyRejected),
}

/// Initial condition and control parameters for one `f`-map orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FSeed {
    pub x0: f64,
    pub params: FMapParams,
}

/// Initial condition and control parameters for the `g`-map orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GSeed {
    pub y0: f64,
    pub params: GMapParams,
}

/// The full secret key: three `f` seeds (driving `phi1`, `phi2`, `phi4`),
/// one `g` seed (driving `phi3`) and the chain seed byte `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecretKey {
    pub f1: FSeed,
    pub f2: FSeed,
    pub f3: FSeed,
    pub g: GSeed,
    pub s: u8,
}

impl SecretKey {
    /// The exemplar key used throughout the experiments
    /// (S = 33 plus the published map seeds).
    pub fn paper_key() -> Self {
        SecretKey {
            f1: FSeed {
                x0: 25.687,
                params: FMapParams { alpha1: 2.10155, alpha2: 3.569221 },
            },
            f2: FSeed {
                x0: 574.461,
                params: FMapParams { alpha1: 1.8874, alpha2: 4.23562 },
            },
            f3: FSeed {
                x0: 814.217217,
                params: FMapParams { alpha1: 2.8912, alpha2: 3.89954 },
            },
            g: GSeed {
                y0: 79.82,
                params: GMapParams { alpha3: 61.522, alpha4: 257.26223 },
            },
            s: 33,
        }
    }
}

fn check_len(want: usize, got: usize) -> Result<(), CipherError> {
    if want == got {
        Ok(())
    } else {
        Err(CipherError::LengthMismatch { want, got })
    }
}

/// Swap pass over the linearized image: for k ascending, swap positions
/// `k` and `phi1(k)*N + phi2(k)`.
pub fn permute(img: &Image, phi1: &[u32], phi2: &[u32]) -> Result<Image, CipherError> {
    let mut out = img.clone();
    permute_in_place(out.as_bytes_mut(), phi1, phi2, img.cols())?;
    Ok(out)
}

/// Same swaps applied in descending order, undoing [`permute`].
pub fn inverse_permute(img: &Image, phi1: &[u32], phi2: &[u32]) -> Result<Image, CipherError> {
    let mut out = img.clone();
    inverse_permute_in_place(out.as_bytes_mut(), phi1, phi2, img.cols())?;
    Ok(out)
}

pub fn permute_in_place(
    data: &mut [u8],
    phi1: &[u32],
    phi2: &[u32],
    cols: usize,
) -> Result<(), CipherError> {
    check_len(data.len(), phi1.len())?;
    check_len(data.len(), phi2.len())?;
    for k in 0..data.len() {
        let t = phi1[k] as usize * cols + phi2[k] as usize;
        data.swap(k, t);
    }
    Ok(())
}

pub fn inverse_permute_in_place(
    data: &mut [u8],
    phi1: &[u32],
    phi2: &[u32],
    cols: usize,
) -> Result<(), CipherError> {
    check_len(data.len(), phi1.len())?;
    check_len(data.len(), phi2.len())?;
    for k in (0..data.len()).rev() {
        let t = phi1[k] as usize * cols + phi2[k] as usize;
        data.swap(k, t);
    }
    Ok(())
}

/// The net effect of the swap pass as a single bijection `P`:
/// the byte at source position `s` lands at position `P[s]`.
pub fn net_permutation(phi1: &[u32], phi2: &[u32], cols: usize) -> Vec<u32> {
    let n = phi1.len();
    // origin[t] = source index currently sitting at position t
    let mut origin: Vec<u32> = (0..n as u32).collect();
    for k in 0..n {
        let t = phi1[k] as usize * cols + phi2[k] as usize;
        origin.swap(k, t);
    }
    let mut p = vec![0u32; n];
    for (t, &s) in origin.iter().enumerate() {
        p[s as usize] = t as u32;
    }
    p
}

/// Confusion I: `out(k) = phi3(k) XOR (buf(k) + phi3(k) mod 256) XOR
/// out(k-1)` with `out(-1) = s`.
pub fn confusion1(buf: &[u8], phi3: &[u8], s: u8) -> Result<Vec<u8>, CipherError> {
    check_len(buf.len(), phi3.len())?;
    let mut out = buf.to_vec();
    confusion1_in_place(&mut out, phi3, s);
    Ok(out)
}

/// Inverse of [`confusion1`]:
/// `out(k) = (buf(k) XOR buf(k-1) XOR phi3(k)) - phi3(k) mod 256` with
/// `buf(-1) = s`.
pub fn confusion1_inverse(buf: &[u8], phi3: &[u8], s: u8) -> Result<Vec<u8>, CipherError> {
    check_len(buf.len(), phi3.len())?;
    let mut out = buf.to_vec();
    confusion1_inverse_in_place(&mut out, phi3, s);
    Ok(out)
}

pub(crate) fn confusion1_in_place(buf: &mut [u8], phi3: &[u8], s: u8) {
    let mut prev = s;
    for (b, &m) in buf.iter_mut().zip(phi3) {
        let out = m ^ b.wrapping_add(m) ^ prev;
        *b = out;
        prev = out;
    }
}

pub(crate) fn confusion1_inverse_in_place(buf: &mut [u8], phi3: &[u8], s: u8) {
    let mut prev = s;
    for (b, &m) in buf.iter_mut().zip(phi3) {
        let c = *b;
        *b = (c ^ prev ^ m).wrapping_sub(m);
        prev = c;
    }
}

/// Confusion II: elementwise XOR with `phi4`; an involution.
pub fn confusion2(buf: &[u8], phi4: &[u8]) -> Result<Vec<u8>, CipherError> {
    check_len(buf.len(), phi4.len())?;
    let mut out = buf.to_vec();
    confusion2_in_place(&mut out, phi4);
    Ok(out)
}

pub(crate) fn confusion2_in_place(buf: &mut [u8], phi4: &[u8]) {
    for (b, &m) in buf.iter_mut().zip(phi4) {
        *b ^= m;
    }
}

/// Full pipeline with explicit keystreams:
/// Confusion II ∘ Confusion I ∘ permutation.
pub fn encrypt_with_streams(
    img: &Image,
    streams: &KeystreamSet,
    s: u8,
) -> Result<Image, CipherError> {
    let (rows, cols) = img.dims();
    let mut data = img.as_bytes().to_vec();
    permute_in_place(&mut data, &streams.phi1, &streams.phi2, cols)?;
    check_len(data.len(), streams.phi3.len())?;
    confusion1_in_place(&mut data, &streams.phi3, s);
    check_len(data.len(), streams.phi4.len())?;
    confusion2_in_place(&mut data, &streams.phi4);
    Ok(Image::new(rows, cols, data).expect("length preserved"))
}

/// Inverse pipeline with explicit keystreams.
pub fn decrypt_with_streams(
    cimg: &Image,
    streams: &KeystreamSet,
    s: u8,
) -> Result<Image, CipherError> {
    let (rows, cols) = cimg.dims();
    let mut data = cimg.as_bytes().to_vec();
    check_len(data.len(), streams.phi4.len())?;
    confusion2_in_place(&mut data, &streams.phi4);
    check_len(data.len(), streams.phi3.len())?;
    confusion1_inverse_in_place(&mut data, &streams.phi3, s);
    inverse_permute_in_place(&mut data, &streams.phi1, &streams.phi2, cols)?;
    Ok(Image::new(rows, cols, data).expect("length preserved"))
}

/// Encrypt under a secret key (keystreams derived from the key per image
/// size; the scheme has no nonce, so equal keys give equal streams).
pub fn encrypt(img: &Image, key: &SecretKey) -> Result<Image, CipherError> {
    let streams = chaos::generate_keystreams(key, img.rows(), img.cols())?;
    encrypt_with_streams(img, &streams, key.s)
}

/// Decrypt under a secret key.
pub fn decrypt(cimg: &Image, key: &SecretKey) -> Result<Image, CipherError> {
    let streams = chaos::generate_keystreams(key, cimg.rows(), cimg.cols())?;
    decrypt_with_streams(cimg, &streams, key.s)
}
