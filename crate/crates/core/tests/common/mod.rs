#![allow(dead_code)]

use ehs_core::{ComplexAp, NomeFrame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Gen {
    rng: ChaCha8Rng,
    pub frame: NomeFrame,
}

impl Gen {
    pub fn new(seed: u64, p: f64, precision: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let qm: f64 = rng.random_range(0.5..0.9);
        let qa: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let frame = NomeFrame::from_f64(p, (qm * qa.cos(), qm * qa.sin()), precision).unwrap();
        Gen { rng, frame }
    }

    pub fn c(&mut self) -> ComplexAp {
        let m: f64 = self.rng.random_range(0.5..2.0);
        let a: f64 = self.rng.random_range(0.0..std::f64::consts::TAU);
        ComplexAp::from_polar_f64(m, a, self.frame.work_bits())
    }

    pub fn cs(&mut self, k: usize) -> Vec<ComplexAp> {
        (0..k).map(|_| self.c()).collect()
    }

    pub fn usize(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.random_range(lo..=hi)
    }
}

pub fn prod(frame: &NomeFrame, v: &[ComplexAp]) -> ComplexAp {
    let mut acc = frame.one();
    for x in v {
        acc *= x;
    }
    acc
}

/// |a − b| / (|a| + |b|) as log2, or -inf for exact agreement.
pub fn rel_log2(a: &ComplexAp, b: &ComplexAp) -> f64 {
    let d = (a - b).ln_abs_f64();
    let s = (a.abs_f64() + b.abs_f64()).ln();
    (d - s) / std::f64::consts::LN_2
}

pub fn assert_close(a: &ComplexAp, b: &ComplexAp, bits: f64, what: &str) {
    let r = rel_log2(a, b);
    assert!(r < -bits, "{what}: log2 rel residual {r} (lhs {a}, rhs {b})");
}
