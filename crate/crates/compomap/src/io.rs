//! File formats and experiment plumbing: binary PGM images, JSON key files
//! with decimal-string reals, chosen-plaintext builders, attack artifacts
//! and keystream dumps.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::{AttackTranscript, EquivalentKey};
use crate::chaos::{FMapParams, GMapParams};
use crate::cipher::{FSeed, GSeed, SecretKey};
use crate::image::Image;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------
// PGM (binary P5, maxval 255)
// ---------------------------------------------------------------------

/// Parse a binary PGM (`P5`, maxval exactly 255) byte buffer.
pub fn parse_pgm(bytes: &[u8]) -> Result<Image, IoError> {
    let err = |m: &str| IoError::ParseError(m.to_string());
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(err("not a binary PGM (magic must be P5)"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // skip whitespace and '#' comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(_) => break,
                None => return Err(err("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if pos == start {
            return Err(err("expected decimal field in header"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
        *field = text
            .parse()
            .map_err(|_| err("header field out of range"))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(err("maxval must be exactly 255"));
    }
    if width == 0 || height == 0 {
        return Err(err("image dimensions must be positive"));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(err("missing whitespace after maxval")),
    }
    let payload = &bytes[pos..];
    if payload.len() != width * height {
        return Err(err(&format!(
            "payload length {} does not match {}x{}",
            payload.len(),
            width,
            height
        )));
    }
    Ok(Image::new(height, width, payload.to_vec()).expect("validated"))
}

/// Canonical PGM serialization: `P5\n<w> <h>\n255\n` + payload. Byte-stable
/// across runs.
pub fn pgm_bytes(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.cols(), img.rows()).into_bytes();
    out.extend_from_slice(img.as_bytes());
    out
}

pub fn read_pgm<P: AsRef<Path>>(path: P) -> Result<Image, IoError> {
    parse_pgm(&fs::read(path)?)
}

pub fn write_pgm<P: AsRef<Path>>(img: &Image, path: P) -> Result<(), IoError> {
    fs::write(path, pgm_bytes(img))?;
    Ok(())
}

// ---------------------------------------------------------------------
// Key files: JSON with reals carried as decimal strings
// ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct FSeedFile {
    x0: String,
    alpha1: String,
    alpha2: String,
}

#[derive(Serialize, Deserialize)]
struct GSeedFile {
    y0: String,
    alpha3: String,
    alpha4: String,
}

#[derive(Serialize, Deserialize)]
struct KeyFile {
    f1: FSeedFile,
    f2: FSeedFile,
    f3: FSeedFile,
    g: GSeedFile,
    s: u16,
}

fn parse_real(field: &str, text: &str) -> Result<f64, IoError> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| IoError::ParseError(format!("field {field}: invalid real '{text}'")))?;
    if !v.is_finite() {
        return Err(IoError::ParseError(format!(
            "field {field}: value must be finite"
        )));
    }
    Ok(v)
}

/// Parse a key file; reals are decimal strings converted to binary floating
/// point exactly once here.
pub fn parse_key(json: &str) -> Result<SecretKey, IoError> {
    let kf: KeyFile = serde_json::from_str(json)?;
    let fseed = |name: &str, f: &FSeedFile| -> Result<FSeed, IoError> {
        Ok(FSeed {
            x0: parse_real(&format!("{name}.x0"), &f.x0)?,
            params: FMapParams {
                alpha1: parse_real(&format!("{name}.alpha1"), &f.alpha1)?,
                alpha2: parse_real(&format!("{name}.alpha2"), &f.alpha2)?,
            },
        })
    };
    if kf.s > 255 {
        return Err(IoError::ParseError(format!(
            "s must be in [0, 256), got {}",
            kf.s
        )));
    }
    Ok(SecretKey {
        f1: fseed("f1", &kf.f1)?,
        f2: fseed("f2", &kf.f2)?,
        f3: fseed("f3", &kf.f3)?,
        g: GSeed {
            y0: parse_real("g.y0", &kf.g.y0)?,
            params: GMapParams {
                alpha3: parse_real("g.alpha3", &kf.g.alpha3)?,
                alpha4: parse_real("g.alpha4", &kf.g.alpha4)?,
            },
        },
        s: kf.s as u8,
    })
}

/// Serialize a key; `f64`'s shortest-roundtrip formatting keeps the decimal
/// strings exact.
pub fn key_json(key: &SecretKey) -> String {
    let fs = |f: &FSeed| FSeedFile {
        x0: format!("{}", f.x0),
        alpha1: format!("{}", f.params.alpha1),
        alpha2: format!("{}", f.params.alpha2),
    };
    let kf = KeyFile {
        f1: fs(&key.f1),
        f2: fs(&key.f2),
        f3: fs(&key.f3),
        g: GSeedFile {
            y0: format!("{}", key.g.y0),
            alpha3: format!("{}", key.g.params.alpha3),
            alpha4: format!("{}", key.g.params.alpha4),
        },
        s: key.s as u16,
    };
    serde_json::to_string_pretty(&kf).expect("serializable")
}

pub fn read_key<P: AsRef<Path>>(path: P) -> Result<SecretKey, IoError> {
    parse_key(&fs::read_to_string(path)?)
}

pub fn write_key<P: AsRef<Path>>(key: &SecretKey, path: P) -> Result<(), IoError> {
    fs::write(path, key_json(key))?;
    Ok(())
}

// ---------------------------------------------------------------------
// Chosen plaintexts
// ---------------------------------------------------------------------

/// Number of digit-plane images needed to tag every position of an `n`-byte
/// image: the smallest `d` with `256^d >= n`.
pub fn digit_plane_count(n: usize) -> usize {
    let mut d = 0;
    let mut reach = 1usize;
    while reach < n {
        reach = reach.saturating_mul(256);
        d += 1;
    }
    d
}

/// Chosen plaintext for the permutation phase: pixel at linear index `k`
/// holds the `j`-th base-256 digit of `k`.
pub fn digit_plane_image(j: usize, rows: usize, cols: usize) -> Image {
    let data = (0..rows * cols)
        .map(|k| ((k >> (8 * j)) & 0xFF) as u8)
        .collect();
    Image::new(rows, cols, data).expect("constructed to size")
}

/// Chosen plaintext builder used by the attack harness.
#[derive(Debug, Clone, Copy)]
pub enum ChosenImage {
    Constant(u8),
    DigitPlane(usize),
}

pub fn make_chosen_image(kind: ChosenImage, rows: usize, cols: usize) -> Image {
    match kind {
        ChosenImage::Constant(v) => Image::constant(rows, cols, v),
        ChosenImage::DigitPlane(j) => {
            assert!(j < digit_plane_count(rows * cols).max(1));
            digit_plane_image(j, rows, cols)
        }
    }
}

// ---------------------------------------------------------------------
// Attack artifacts
// ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct EquivalentKeyFile {
    rows: usize,
    cols: usize,
    phi3_rep: String,
    phi4_abs: String,
    /// Path of the binary little-endian u32 permutation array.
    perm_file: String,
}

/// Write the recovered equivalent key: JSON with base64 keystream blobs and
/// the permutation in a separate binary file (little-endian u32 per entry).
pub fn write_equivalent_key<P: AsRef<Path>, Q: AsRef<Path>>(
    ek: &EquivalentKey,
    json_path: P,
    perm_path: Q,
) -> Result<(), IoError> {
    let mut perm_bytes = Vec::with_capacity(ek.perm.len() * 4);
    for &t in &ek.perm {
        perm_bytes.extend_from_slice(&t.to_le_bytes());
    }
    fs::write(&perm_path, perm_bytes)?;
    let file = EquivalentKeyFile {
        rows: ek.rows,
        cols: ek.cols,
        phi3_rep: BASE64.encode(&ek.phi3_rep),
        phi4_abs: BASE64.encode(&ek.phi4_abs),
        perm_file: perm_path.as_ref().to_string_lossy().into_owned(),
    };
    fs::write(json_path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

/// Read an equivalent key written by [`write_equivalent_key`]. The
/// permutation path is resolved relative to the JSON file's directory when
/// not absolute.
pub fn read_equivalent_key<P: AsRef<Path>>(json_path: P) -> Result<EquivalentKey, IoError> {
    let text = fs::read_to_string(&json_path)?;
    let file: EquivalentKeyFile = serde_json::from_str(&text)?;
    let decode = |field: &str, data: &str| {
        BASE64
            .decode(data)
            .map_err(|e| IoError::ParseError(format!("{field}: {e}")))
    };
    let phi3_rep = decode("phi3_rep", &file.phi3_rep)?;
    let phi4_abs = decode("phi4_abs", &file.phi4_abs)?;
    let mut perm_path = std::path::PathBuf::from(&file.perm_file);
    if perm_path.is_relative() {
        if let Some(dir) = json_path.as_ref().parent() {
            perm_path = dir.join(perm_path);
        }
    }
    let perm_bytes = fs::read(&perm_path)?;
    if perm_bytes.len() % 4 != 0 {
        return Err(IoError::ParseError("permutation file length not a multiple of 4".into()));
    }
    let perm: Vec<u32> = perm_bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let n = file.rows * file.cols;
    if phi3_rep.len() != n || phi4_abs.len() != n || perm.len() != n {
        return Err(IoError::ParseError(format!(
            "keystream/permutation lengths do not match {}x{}",
            file.rows, file.cols
        )));
    }
    Ok(EquivalentKey {
        rows: file.rows,
        cols: file.cols,
        phi3_rep,
        phi4_abs,
        perm,
    })
}

pub fn write_transcript<P: AsRef<Path>>(
    transcript: &AttackTranscript,
    path: P,
) -> Result<(), IoError> {
    fs::write(path, serde_json::to_string_pretty(transcript)?)?;
    Ok(())
}

// ---------------------------------------------------------------------
// Keystream dumps: one decimal value per line, one sequence per file
// ---------------------------------------------------------------------

pub fn write_keystream_csv<P: AsRef<Path>, I>(path: P, values: I) -> Result<(), IoError>
where
    I: IntoIterator,
    I::Item: std::fmt::Display,
{
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for v in values {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}
