//! Seeded random variate streams.
//!
//! A stream is addressed by `(seed, stream_id)`. The seed keys a ChaCha12
//! generator and the stream id selects one of its 2⁶⁴ independent streams, so
//! replication `r` of a run always sees the same variates no matter which
//! thread executes it or in what order.

use rand::distr::{Distribution, Open01};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::distributions::{GammaParams, InvGaussParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream keyed by this stream's address and `child`.
    ///
    /// Independent of how many variates have already been drawn from `self`.
    pub fn substream(&self, child: u64) -> RngStream {
        let key =
            splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(0x5851_f42d_4c95_7f2d)));
        RngStream::new(key, child)
    }

    /// Uniform variate on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        Open01.sample(&mut self.rng)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> Result<f64> {
        if !(sd.is_finite() && sd > 0.0) {
            return Err(Error::Domain {
                what: "normal standard deviation",
                value: sd,
            });
        }
        if !mean.is_finite() {
            return Err(Error::Domain {
                what: "normal mean",
                value: mean,
            });
        }
        Ok(mean + sd * self.standard_normal())
    }

    /// Gamma variate by the Marsaglia–Tsang method.
    pub fn gamma(&mut self, params: &GammaParams) -> f64 {
        let shape = params.shape();
        let x = if shape >= 1.0 {
            self.standard_gamma_ge1(shape)
        } else {
            let g = self.standard_gamma_ge1(shape + 1.0);
            let u = self.uniform();
            g * (u.ln() / shape).exp()
        };
        (x * params.scale()).max(f64::MIN_POSITIVE)
    }

    fn standard_gamma_ge1(&mut self, shape: f64) -> f64 {
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let z = self.standard_normal();
            let t = 1.0 + c * z;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.uniform();
            let z2 = z * z;
            if u < 1.0 - 0.0331 * z2 * z2 || u.ln() < 0.5 * z2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }

    /// Inverse Gaussian variate by the Michael–Schucany–Haas transformation.
    pub fn inverse_gaussian(&mut self, params: &InvGaussParams) -> f64 {
        let mu = params.mu();
        let lambda = params.lambda();
        let nu = self.standard_normal();
        let y = mu * nu * nu;
        // Smaller root of the quadratic, written without cancellation.
        let x = mu - 2.0 * mu * y / (y + (y * y + 4.0 * lambda * y).sqrt());
        let x = if x.is_finite() && x > 0.0 { x } else { mu };
        let u = self.uniform();
        let out = if u <= mu / (mu + x) { x } else { mu * mu / x };
        out.max(f64::MIN_POSITIVE)
    }

    /// Raw 64 random bits, for callers that need to mix their own seeds.
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn sample_uniform(stream: &mut RngStream) -> f64 {
    stream.uniform()
}

pub fn sample_normal(stream: &mut RngStream, mean: f64, sd: f64) -> Result<f64> {
    stream.normal(mean, sd)
}

pub fn sample_gamma(stream: &mut RngStream, params: &GammaParams) -> f64 {
    stream.gamma(params)
}

pub fn sample_invgauss(stream: &mut RngStream, params: &InvGaussParams) -> f64 {
    stream.inverse_gaussian(params)
}
