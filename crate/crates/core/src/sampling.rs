//! Counter-based random numbers and the random ensembles used by audits.
//!
//! Every draw is a pure function of (seed, stream, counter), so shot
//! batches can be partitioned across workers with bit-identical results
//! and reruns with the same seed reproduce outputs exactly.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::linalg::{CMat, CVec};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One keyed random stream. `value(counter)` is stateless; distinct
/// (seed, stream) pairs give independent streams.
#[derive(Debug, Clone, Copy)]
pub struct Stream {
    key: u64,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let key = splitmix(seed ^ splitmix(stream));
        Stream { key }
    }

    pub fn value(&self, counter: u64) -> u64 {
        splitmix(self.key ^ counter.wrapping_mul(GOLDEN))
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    pub fn uniform(&self, counter: u64) -> f64 {
        (self.value(counter) >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal via Box-Muller on counters (2k, 2k+1).
    pub fn gaussian(&self, counter: u64) -> f64 {
        let u1 = self.uniform(2 * counter).max(f64::MIN_POSITIVE);
        let u2 = self.uniform(2 * counter + 1);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Index drawn from the cumulative distribution `cdf` (last entry ~1).
    pub fn categorical(&self, counter: u64, cdf: &[f64]) -> usize {
        let u = self.uniform(counter);
        for (i, &c) in cdf.iter().enumerate() {
            if u < c {
                return i;
            }
        }
        cdf.len() - 1
    }
}

/// Complex matrix with i.i.d. standard-normal real and imaginary parts.
pub fn gaussian_complex_matrix(n: usize, m: usize, stream: &Stream) -> CMat {
    let mut a = DMatrix::zeros(n, m);
    let mut k = 0u64;
    for i in 0..n {
        for j in 0..m {
            a[(i, j)] = C64::new(stream.gaussian(2 * k), stream.gaussian(2 * k + 1));
            k += 1;
        }
    }
    a
}

/// Random Hermitian matrix (GUE-like, unnormalized scale).
pub fn random_hermitian(n: usize, stream: &Stream) -> CMat {
    let a = gaussian_complex_matrix(n, n, stream);
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Haar-random unitary via Gram-Schmidt on a Gaussian matrix with the
/// standard phase fix.
pub fn haar_unitary(n: usize, stream: &Stream) -> CMat {
    let a = gaussian_complex_matrix(n, n, stream);
    let mut q: Vec<CVec> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v: CVec = a.column(j).into();
        for u in &q {
            let proj = u.dotc(&v);
            v -= u * proj;
        }
        let norm = v.norm();
        q.push(v / C64::new(norm, 0.0));
    }
    let mut m = CMat::zeros(n, n);
    for (j, col) in q.iter().enumerate() {
        // fix the phase so the distribution is Haar, not QR-biased
        let d = col[j.min(n - 1)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            m[(i, j)] = col[i] * phase.conj();
        }
    }
    m
}

/// Haar-random pure state: normalized complex Gaussian vector.
pub fn haar_state(dim: usize, stream: &Stream) -> CVec {
    let mut v = CVec::zeros(dim);
    for i in 0..dim {
        v[i] = C64::new(
            stream.gaussian(2 * i as u64),
            stream.gaussian(2 * i as u64 + 1),
        );
    }
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}
