//! Complex FFT plans for arbitrary lengths.
//!
//! Power-of-two lengths run an iterative radix-2 Cooley-Tukey transform;
//! every other length goes through Bluestein's chirp-z algorithm, which
//! re-expresses the DFT as a circular convolution carried out at a padded
//! power-of-two size. A [`Fft`] plan precomputes twiddles (and, for
//! Bluestein, the chirp and its transform) once, then reuses internal
//! scratch across calls, so transforming many buffers of one length costs
//! no further setup or allocation.
//!
//! Forward transforms are unnormalized; [`Fft::inverse`] applies the 1/N
//! factor.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex;

use crate::math;

pub type Complex64 = Complex<f64>;

/// Smallest power of two `>= n`.
pub fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// A reusable transform plan for one fixed length.
pub struct Fft {
    len: usize,
    /// Forward twiddles exp(-2 pi i j / len) for j in 0..len/2; only for the
    /// power-of-two path (Bluestein keeps its own inner plan).
    twiddles: Vec<Complex64>,
    bluestein: Option<Box<Bluestein>>,
}

struct Bluestein {
    /// Padded power-of-two convolution length, >= 2*len - 1.
    m: usize,
    /// Chirp w_k = exp(-i pi k^2 / len) for k in 0..len.
    chirp: Vec<Complex64>,
    /// Forward FFT (length m) of the symmetric inverse-chirp sequence.
    chirp_spectrum: Vec<Complex64>,
    inner: Fft,
    scratch: Vec<Complex64>,
}

impl Fft {
    /// Plan a transform of length `len` (>= 1).
    pub fn new(len: usize) -> Fft {
        assert!(len >= 1, "FFT length must be at least 1");
        if len.is_power_of_two() {
            Fft {
                len,
                twiddles: forward_twiddles(len),
                bluestein: None,
            }
        } else {
            Fft {
                len,
                twiddles: Vec::new(),
                bluestein: Some(Box::new(Bluestein::new(len))),
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place forward DFT: X_j = sum_k x_k exp(-2 pi i jk / N).
    pub fn forward(&mut self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len, "buffer length does not match plan");
        match self.bluestein {
            None => pow2_in_place(data, &self.twiddles),
            Some(ref mut b) => b.forward(data),
        }
    }

    /// In-place inverse DFT including the 1/N normalization.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        // ifft(x) = conj(fft(conj(x))) / N, which reuses the forward machinery
        // (and the forward chirp) unchanged.
        for v in data.iter_mut() {
            *v = v.conj();
        }
        self.forward(data);
        let scale = 1.0 / self.len as f64;
        for v in data.iter_mut() {
            *v = v.conj() * scale;
        }
    }
}

fn forward_twiddles(len: usize) -> Vec<Complex64> {
    let mut tw = Vec::with_capacity(len / 2);
    for j in 0..len / 2 {
        let angle = -math::TAU * j as f64 / len as f64;
        tw.push(Complex::new(math::cos(angle), math::sin(angle)));
    }
    tw
}

/// Iterative radix-2 decimation-in-time transform. `twiddles` holds
/// exp(-2 pi i j / n) for j in 0..n/2.
fn pow2_in_place(data: &mut [Complex64], twiddles: &[Complex64]) {
    let n = data.len();
    if n <= 1 {
        return;
    }
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 0..n - 1 {
        if i < j {
            data.swap(i, j);
        }
        let mut mask = n >> 1;
        while j & mask != 0 {
            j ^= mask;
            mask >>= 1;
        }
        j |= mask;
    }
    let mut size = 2usize;
    while size <= n {
        let half = size / 2;
        let stride = n / size;
        let mut block = 0;
        while block < n {
            for k in 0..half {
                let w = twiddles[k * stride];
                let t = w * data[block + half + k];
                let u = data[block + k];
                data[block + k] = u + t;
                data[block + half + k] = u - t;
            }
            block += size;
        }
        size <<= 1;
    }
}

impl Bluestein {
    fn new(len: usize) -> Bluestein {
        let m = next_pow2(2 * len - 1);
        // Quadratic phase exponents reduced mod 2*len while still integers,
        // so the angle argument stays small and sin/cos stay accurate even
        // for indices in the millions.
        let two_n = 2 * len as u128;
        let mut chirp = Vec::with_capacity(len);
        for k in 0..len as u128 {
            let q = (k * k) % two_n;
            let angle = -math::PI * q as f64 / len as f64;
            chirp.push(Complex::new(math::cos(angle), math::sin(angle)));
        }
        let mut inner = Fft::new(m);
        // b_k = conj(w_k) laid out circularly: b[0..len) and b[m-k] = b[k].
        let mut spectrum = vec![Complex::new(0.0, 0.0); m];
        for k in 0..len {
            let b = chirp[k].conj();
            spectrum[k] = b;
            if k > 0 {
                spectrum[m - k] = b;
            }
        }
        inner.forward(&mut spectrum);
        Bluestein {
            m,
            chirp,
            chirp_spectrum: spectrum,
            inner,
            scratch: vec![Complex::new(0.0, 0.0); m],
        }
    }

    fn forward(&mut self, data: &mut [Complex64]) {
        let n = data.len();
        let m = self.m;
        self.scratch.iter_mut().for_each(|v| *v = Complex::new(0.0, 0.0));
        for k in 0..n {
            self.scratch[k] = data[k] * self.chirp[k];
        }
        self.inner.forward(&mut self.scratch);
        for (v, b) in self.scratch.iter_mut().zip(self.chirp_spectrum.iter()) {
            *v *= b;
        }
        // Inverse of the inner transform via the conjugation identity, with
        // the 1/m normalization folded into the final chirp multiply.
        for v in self.scratch.iter_mut() {
            *v = v.conj();
        }
        self.inner.forward(&mut self.scratch);
        let scale = 1.0 / m as f64;
        for j in 0..n {
            data[j] = self.scratch[j].conj() * scale * self.chirp[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cabs(c: Complex64) -> f64 {
        math::hypot(c.re, c.im)
    }

    /// Direct O(n^2) DFT used as the oracle.
    fn dft_direct(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let mut acc = Complex::new(0.0, 0.0);
            for (k, &v) in x.iter().enumerate() {
                let angle = -math::TAU * (j * k % n) as f64 / n as f64;
                acc += v * Complex::new(math::cos(angle), math::sin(angle));
            }
            out.push(acc);
        }
        out
    }

    fn random_signal(len: usize, seed: u64) -> Vec<Complex64> {
        (0..len)
            .map(|i| {
                Complex::new(
                    crate::rng::normal(seed, 0, i as u64),
                    crate::rng::normal(seed, 1, i as u64),
                )
            })
            .collect()
    }

    fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| cabs(x - y))
            .fold(0.0, f64::max)
    }

    #[test]
    fn impulse_transforms_to_all_ones() {
        let mut data = vec![Complex::new(0.0, 0.0); 16];
        data[0] = Complex::new(1.0, 0.0);
        Fft::new(16).forward(&mut data);
        for v in data {
            assert!(cabs(v - Complex::new(1.0, 0.0)) < 1e-12);
        }
    }

    #[test]
    fn matches_direct_dft_across_lengths() {
        // Mix of powers of two, primes, and awkward composites.
        for &len in &[1usize, 2, 3, 5, 8, 12, 37, 64, 100, 101, 128, 243, 256, 1000] {
            let reference = random_signal(len, len as u64);
            let expected = dft_direct(&reference);
            let mut data = reference.clone();
            Fft::new(len).forward(&mut data);
            let scale = reference.iter().map(|&v| cabs(v)).sum::<f64>().max(1.0);
            assert!(
                max_abs_diff(&data, &expected) / scale < 1e-9,
                "length {len} diverged from the direct DFT"
            );
        }
    }

    #[test]
    fn forward_then_inverse_is_identity() {
        for &len in &[4usize, 37, 96, 612] {
            let reference = random_signal(len, 7 + len as u64);
            let mut data = reference.clone();
            let mut plan = Fft::new(len);
            plan.forward(&mut data);
            plan.inverse(&mut data);
            assert!(max_abs_diff(&data, &reference) < 1e-10);
        }
    }

    #[test]
    fn plans_are_reusable_across_buffers() {
        let mut plan = Fft::new(37);
        let a = random_signal(37, 1);
        let b = random_signal(37, 2);
        let mut a1 = a.clone();
        plan.forward(&mut a1);
        let mut b1 = b.clone();
        plan.forward(&mut b1);
        let mut a2 = a.clone();
        plan.forward(&mut a2);
        assert_eq!(
            a1.iter().map(|v| v.re.to_bits()).collect::<Vec<_>>(),
            a2.iter().map(|v| v.re.to_bits()).collect::<Vec<_>>(),
            "plan state leaked between transforms"
        );
        assert!(max_abs_diff(&b1, &dft_direct(&b)) < 1e-9);
    }

    #[test]
    fn single_tone_lands_in_its_bin() {
        let n = 128;
        let f = 5;
        let mut data: Vec<Complex64> = (0..n)
            .map(|t| Complex::new(math::cos(math::TAU * f as f64 * t as f64 / n as f64), 0.0))
            .collect();
        Fft::new(n).forward(&mut data);
        assert!((data[f].re - n as f64 / 2.0).abs() < 1e-9);
        assert!((data[n - f].re - n as f64 / 2.0).abs() < 1e-9);
        for (j, v) in data.iter().enumerate() {
            if j != f && j != n - f {
                assert!(cabs(*v) < 1e-9, "leakage at bin {j}");
            }
        }
    }
}
