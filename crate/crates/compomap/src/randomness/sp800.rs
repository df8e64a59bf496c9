//! The nine statistical tests from NIST SP 800-22 used by the battery:
//! Frequency, Block Frequency, Cumulative Sums (forward), Runs, Binary
//! Matrix Rank (32x32), Non-overlapping Template, Serial, Approximate
//! Entropy and the Discrete Fourier Transform test.
//!
//! Each function takes the bit sequence (one bit per byte, values 0/1) and
//! returns its p-value(s). Length preconditions are enforced by the caller
//! in `run_single_test`.

use rustfft::{num_complex::Complex64, FftPlanner};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

fn phi_normal(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Frequency (monobit): `erfc(|S_n| / sqrt(2n))`.
pub fn frequency(bits: &[u8]) -> f64 {
    let n = bits.len() as f64;
    let sum: i64 = bits.iter().map(|&b| 2 * b as i64 - 1).sum();
    let s_obs = (sum.abs() as f64) / n.sqrt();
    erfc(s_obs / std::f64::consts::SQRT_2)
}

/// Block Frequency with block size `m`; remainder bits are discarded.
pub fn block_frequency(bits: &[u8], m: usize) -> f64 {
    let blocks = bits.len() / m;
    let mut chi = 0.0;
    for j in 0..blocks {
        let ones: u32 = bits[j * m..(j + 1) * m].iter().map(|&b| b as u32).sum();
        let pi = ones as f64 / m as f64;
        chi += (pi - 0.5) * (pi - 0.5);
    }
    chi *= 4.0 * m as f64;
    gamma_ur(blocks as f64 / 2.0, chi / 2.0)
}

/// Cumulative Sums, forward direction only.
pub fn cumulative_sums_forward(bits: &[u8]) -> f64 {
    let n = bits.len();
    let mut s = 0i64;
    let mut z = 0i64;
    for &b in bits {
        s += 2 * b as i64 - 1;
        z = z.max(s.abs());
    }
    if z == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let zf = z as f64;
    let sq = nf.sqrt();
    let lo1 = ((-nf / zf + 1.0) / 4.0).floor() as i64;
    let hi = ((nf / zf - 1.0) / 4.0).floor() as i64;
    let lo2 = ((-nf / zf - 3.0) / 4.0).floor() as i64;
    let mut p = 1.0;
    for k in lo1..=hi {
        let k = k as f64;
        p -= phi_normal((4.0 * k + 1.0) * zf / sq) - phi_normal((4.0 * k - 1.0) * zf / sq);
    }
    for k in lo2..=hi {
        let k = k as f64;
        p += phi_normal((4.0 * k + 3.0) * zf / sq) - phi_normal((4.0 * k + 1.0) * zf / sq);
    }
    p.clamp(0.0, 1.0)
}

/// Runs test; returns 0 when the frequency precondition `|pi - 1/2| <
/// 2/sqrt(n)` already fails.
pub fn runs(bits: &[u8]) -> f64 {
    let n = bits.len() as f64;
    let ones: u64 = bits.iter().map(|&b| b as u64).sum();
    let pi = ones as f64 / n;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return 0.0;
    }
    let v = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let num = (v as f64 - 2.0 * n * pi * (1.0 - pi)).abs();
    let den = 2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi);
    erfc(num / den)
}

/// Rank of a 32x32 GF(2) matrix given as row bitmasks.
fn rank32(mut rows: [u32; 32]) -> usize {
    let mut rank = 0;
    for col in 0..32 {
        let bit = 1u32 << col;
        if let Some(p) = (rank..32).find(|&r| rows[r] & bit != 0) {
            rows.swap(rank, p);
            let pivot = rows[rank];
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && *row & bit != 0 {
                    *row ^= pivot;
                }
            }
            rank += 1;
        }
    }
    rank
}

/// Probability that a random 32x32 GF(2) matrix has rank `r`.
fn rank_prob(r: usize) -> f64 {
    const M: i32 = 32;
    let ri = r as i32;
    let exponent = ri * (2 * M - ri) - M * M;
    let mut p = 2f64.powi(exponent);
    for i in 0..ri {
        let num = (1.0 - 2f64.powi(i - M)) * (1.0 - 2f64.powi(i - M));
        let den = 1.0 - 2f64.powi(i - ri);
        p *= num / den;
    }
    p
}

/// Binary Matrix Rank over disjoint 32x32 blocks; remainder discarded.
pub fn rank(bits: &[u8]) -> f64 {
    let nmat = bits.len() / 1024;
    let (p32, p31) = (rank_prob(32), rank_prob(31));
    let p_low = 1.0 - p32 - p31;
    let mut f32_ = 0usize;
    let mut f31 = 0usize;
    for b in 0..nmat {
        let block = &bits[b * 1024..(b + 1) * 1024];
        let mut rows = [0u32; 32];
        for (i, row) in rows.iter_mut().enumerate() {
            for j in 0..32 {
                *row |= (block[i * 32 + j] as u32) << j;
            }
        }
        match rank32(rows) {
            32 => f32_ += 1,
            31 => f31 += 1,
            _ => {}
        }
    }
    let f_low = nmat - f32_ - f31;
    let nf = nmat as f64;
    let chi = (f32_ as f64 - nf * p32).powi(2) / (nf * p32)
        + (f31 as f64 - nf * p31).powi(2) / (nf * p31)
        + (f_low as f64 - nf * p_low).powi(2) / (nf * p_low);
    (-chi / 2.0).exp()
}

/// Non-overlapping Template Matching over `blocks` independent blocks; the
/// scanner jumps the full template length after each hit.
pub fn non_overlapping_template(bits: &[u8], template: &[u8], blocks: usize) -> f64 {
    let m = template.len();
    let block_len = bits.len() / blocks;
    let mu = (block_len - m + 1) as f64 / 2f64.powi(m as i32);
    let var = block_len as f64
        * (2f64.powi(-(m as i32)) - (2 * m as i32 - 1) as f64 * 2f64.powi(-2 * m as i32));
    let mut chi = 0.0;
    for j in 0..blocks {
        let block = &bits[j * block_len..(j + 1) * block_len];
        let mut w = 0usize;
        let mut i = 0usize;
        while i + m <= block.len() {
            if block[i..i + m] == *template {
                w += 1;
                i += m;
            } else {
                i += 1;
            }
        }
        chi += (w as f64 - mu) * (w as f64 - mu) / var;
    }
    gamma_ur(blocks as f64 / 2.0, chi / 2.0)
}

/// Pattern counts over cyclically extended overlapping `m`-bit windows.
fn window_counts(bits: &[u8], m: usize) -> Vec<u32> {
    let n = bits.len();
    let size = 1usize << m;
    let mask = size - 1;
    let mut counts = vec![0u32; size];
    let mut w = 0usize;
    for i in 0..m - 1 {
        w = (w << 1) | bits[i % n] as usize;
    }
    for i in m - 1..n + m - 1 {
        w = ((w << 1) | bits[i % n] as usize) & mask;
        counts[w] += 1;
    }
    counts
}

fn psi_sq(bits: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    let counts = window_counts(bits, m);
    let ssq: u64 = counts.iter().map(|&c| c as u64 * c as u64).sum();
    (1u64 << m) as f64 / n * ssq as f64 - n
}

/// Serial test; returns both del-psi-squared p-values.
pub fn serial(bits: &[u8], m: usize) -> (f64, f64) {
    let psi_m = psi_sq(bits, m);
    let psi_m1 = psi_sq(bits, m - 1);
    let psi_m2 = if m >= 2 { psi_sq(bits, m - 2) } else { 0.0 };
    let d1 = psi_m - psi_m1;
    let d2 = psi_m - 2.0 * psi_m1 + psi_m2;
    let p1 = gamma_ur(2f64.powi(m as i32 - 2), d1 / 2.0);
    let p2 = gamma_ur(2f64.powi(m as i32 - 3), d2 / 2.0);
    (p1, p2)
}

/// Approximate Entropy with block length `m`.
pub fn approximate_entropy(bits: &[u8], m: usize) -> f64 {
    let n = bits.len() as f64;
    let phi = |mm: usize| -> f64 {
        window_counts(bits, mm)
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                p * p.ln()
            })
            .sum()
    };
    let apen = phi(m) - phi(m + 1);
    let chi = 2.0 * n * (std::f64::consts::LN_2 - apen);
    gamma_ur(2f64.powi(m as i32 - 1), chi / 2.0)
}

/// Discrete Fourier Transform (spectral) test with the 95% peak threshold
/// `sqrt(ln(1/0.05) * n)`.
pub fn dft(bits: &[u8]) -> f64 {
    let n = bits.len();
    let mut buf: Vec<Complex64> = bits
        .iter()
        .map(|&b| Complex64::new(2.0 * b as f64 - 1.0, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let threshold = ((1.0f64 / 0.05).ln() * n as f64).sqrt();
    let below = buf[..n / 2]
        .iter()
        .filter(|c| c.norm() < threshold)
        .count();
    let n0 = 0.95 * n as f64 / 2.0;
    let d = (below as f64 - n0) / (n as f64 * 0.95 * 0.05 / 4.0).sqrt();
    erfc(d.abs() / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits_of(s: &str) -> Vec<u8> {
        s.bytes().map(|b| b - b'0').collect()
    }

    // Worked examples from the SP 800-22 test descriptions; reference
    // p-values are the published six-digit figures.

    #[test]
    fn frequency_small_example() {
        let p = frequency(&bits_of("1011010101"));
        assert!((p - 0.527089).abs() < 1e-6, "p = {p}");
    }

    #[test]
    fn frequency_pi_bits_example() {
        let p = frequency(&bits_of(PI_100));
        assert!((p - 0.109599).abs() < 1e-6, "p = {p}");
    }

    #[test]
    fn block_frequency_small_example() {
        let p = block_frequency(&bits_of("0110011010"), 3);
        assert!((p - 0.801252).abs() < 1e-6, "p = {p}");
    }

    #[test]
    fn block_frequency_pi_bits_example() {
        let p = block_frequency(&bits_of(PI_100), 10);
        assert!((p - 0.706438).abs() < 1e-6, "p = {p}");
    }

    #[test]
    fn runs_small_example() {
        let p = runs(&bits_of("1001101011"));
        assert!((p - 0.147232).abs() < 1e-6, "p = {p}");
    }

    #[test]
    fn runs_pi_bits_example() {
        let p = runs(&bits_of(PI_100));
        assert!((p - 0.500798).abs() < 1e-6, "p = {p}");
    }

    #[test]
    fn cusum_small_example() {
        let p = cumulative_sums_forward(&bits_of("1011010111"));
        assert!((p - 0.4116588).abs() < 1e-6, "p = {p}");
    }

    #[test]
    fn serial_small_example() {
        let (p1, p2) = serial(&bits_of("0011011101"), 3);
        assert!((p1 - 0.808792).abs() < 1e-6, "p1 = {p1}");
        assert!((p2 - 0.670320).abs() < 1e-6, "p2 = {p2}");
    }

    #[test]
    fn apen_small_example() {
        let p = approximate_entropy(&bits_of("0100110101"), 3);
        assert!((p - 0.261961).abs() < 1e-6, "p = {p}");
    }

    #[test]
    fn runs_alternation_fails() {
        let bits: Vec<u8> = (0..1000).map(|i| (i % 2) as u8).collect();
        assert!(runs(&bits) < 0.01);
    }

    #[test]
    fn frequency_extremes() {
        let zeros = vec![0u8; 1000];
        assert!(frequency(&zeros) < 1e-10);
        let alternating: Vec<u8> = (0..1000).map(|i| (i % 2) as u8).collect();
        assert_eq!(frequency(&alternating), 1.0);
    }

    #[test]
    fn rank_probabilities_match_reference() {
        // 0.2888, 0.5776 and 0.1336 after rounding.
        assert!((rank_prob(32) - 0.2888).abs() < 1e-4);
        assert!((rank_prob(31) - 0.5776).abs() < 1e-4);
        assert!((1.0 - rank_prob(32) - rank_prob(31) - 0.1336).abs() < 1e-4);
    }

    #[test]
    fn rank_all_ones_fails() {
        // Every matrix has rank 1.
        let bits = vec![1u8; 38 * 1024];
        assert!(rank(&bits) < 1e-10);
    }

    #[test]
    fn dft_constant_input_fails() {
        let bits = vec![0u8; 4096];
        assert!(dft(&bits) < 0.01);
    }

    /// First 100 binary digits of pi's fractional expansion, the standard
    /// SP 800-22 example input.
    const PI_100: &str = "11001001000011111101101010100010001000010110100011\
                          00001000110100110001001100011001100010100010111000";
}
