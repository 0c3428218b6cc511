//! Theta function, elliptic Pochhammer symbols and the A_n Weyl denominator.
//!
//! The theta function is
//!
//! ```text
//! θ(x) = ∏_{j≥0} (1 − p^j x)(1 − p^{j+1}/x),   |p| < 1,
//! ```
//!
//! evaluated as a truncated product. With `s = x + p/x` each factor collapses
//! to `(1 + p^{2j+1}) − p^j s`, so a factor costs one complex multiply on top
//! of the running product. At `p = 0` the product has a single factor and the
//! result is exactly `1 − x`.

use std::sync::Arc;

use rug::Float;

use crate::complex::{ComplexAp, MIN_PRECISION};
use crate::error::{Error, Result};

/// Extra bits carried by all internal arithmetic.
pub const GUARD_BITS: u32 = 32;

/// Cached powers q^i for |i| up to this bound.
const Q_POW_CACHE: i64 = 64;

/// Largest |log2 |x|| the truncation index adapts to.
const MAX_ARG_OCTAVES: f64 = 64.0;

/// The nome pair `(p, q)` and the working precision of an evaluation session.
///
/// Cloning is cheap; the power tables are shared.
#[derive(Clone, Debug)]
pub struct NomeFrame(Arc<FrameData>);

#[derive(Debug)]
struct FrameData {
    p: ComplexAp,
    q: ComplexAp,
    precision: u32,
    basic: bool,
    /// log2(1/|p|); infinite when p = 0.
    p_octaves: f64,
    base_terms: usize,
    max_terms: usize,
    /// p^j for j = 0..=max_terms.
    p_pows: Vec<ComplexAp>,
    /// 1 + p^{2j+1} for j = 0..=max_terms.
    shifted: Vec<ComplexAp>,
    /// q^i for i = -Q_POW_CACHE..=Q_POW_CACHE.
    q_pows: Vec<ComplexAp>,
}

impl NomeFrame {
    /// Builds a frame at `precision` reported bits (`precision + GUARD_BITS`
    /// working bits).
    pub fn new(p: &ComplexAp, q: &ComplexAp, precision: u32) -> Result<Self> {
        if precision < MIN_PRECISION {
            return Err(Error::InvalidFrame(format!(
                "precision {precision} is below the minimum of {MIN_PRECISION} bits"
            )));
        }
        let work = precision + GUARD_BITS;
        let p = p.with_prec(work);
        let q = q.with_prec(work);
        if !p.is_finite() || !q.is_finite() {
            return Err(Error::InvalidFrame("p and q must be finite".into()));
        }
        if q.is_zero() {
            return Err(Error::InvalidFrame("q must be nonzero".into()));
        }
        let p_abs = p.abs();
        if p_abs >= 1 {
            return Err(Error::InvalidFrame(format!(
                "|p| = {} must be strictly below 1",
                p_abs.to_f64()
            )));
        }
        let basic = p.is_zero();
        let p_octaves = if basic {
            f64::INFINITY
        } else {
            -Float::with_val(64, p_abs.log2_ref()).to_f64()
        };
        let terms_for = |bits: f64| -> usize {
            if basic {
                0
            } else {
                (bits / p_octaves).ceil() as usize
            }
        };
        let base_terms = terms_for(f64::from(precision + GUARD_BITS));
        let max_terms = terms_for(f64::from(precision + GUARD_BITS) + MAX_ARG_OCTAVES);

        let one = ComplexAp::one(work);
        let mut p_pows = Vec::with_capacity(max_terms + 1);
        let mut shifted = Vec::with_capacity(max_terms + 1);
        let mut pj = one.clone();
        for _ in 0..=max_terms {
            let odd = &(&pj * &pj) * &p;
            shifted.push(&one + &odd);
            p_pows.push(pj.clone());
            pj = &pj * &p;
        }

        let q_inv = q.recip()?;
        let mut q_pows = vec![one.clone(); (2 * Q_POW_CACHE + 1) as usize];
        let mid = Q_POW_CACHE as usize;
        for i in 1..=mid {
            q_pows[mid + i] = &q_pows[mid + i - 1] * &q;
            q_pows[mid - i] = &q_pows[mid - i + 1] * &q_inv;
        }
        for v in &q_pows {
            if !v.is_finite() || v.is_zero() {
                return Err(Error::InvalidFrame("powers of q leave the float range".into()));
            }
        }

        Ok(NomeFrame(Arc::new(FrameData {
            p,
            q,
            precision,
            basic,
            p_octaves,
            base_terms,
            max_terms,
            p_pows,
            shifted,
            q_pows,
        })))
    }

    /// Convenience constructor for a real nome `p` and complex `q` given in
    /// double precision.
    pub fn from_f64(p: f64, q: (f64, f64), precision: u32) -> Result<Self> {
        let prec = precision.max(MIN_PRECISION) + GUARD_BITS;
        Self::new(
            &ComplexAp::from_f64(p, 0.0, prec),
            &ComplexAp::from_f64(q.0, q.1, prec),
            precision,
        )
    }

    /// The same nome at a different precision.
    pub fn with_precision(&self, precision: u32) -> Result<Self> {
        Self::new(&self.0.p, &self.0.q, precision)
    }

    /// The same q at a different p.
    pub fn with_p(&self, p: &ComplexAp) -> Result<Self> {
        Self::new(p, &self.0.q, self.0.precision)
    }

    pub fn p(&self) -> &ComplexAp {
        &self.0.p
    }

    pub fn q(&self) -> &ComplexAp {
        &self.0.q
    }

    /// Reported precision in bits.
    pub fn precision(&self) -> u32 {
        self.0.precision
    }

    /// Internal working precision in bits.
    pub fn work_bits(&self) -> u32 {
        self.0.precision + GUARD_BITS
    }

    /// `p = 0`: the basic (q-series) degeneration.
    pub fn is_basic(&self) -> bool {
        self.0.basic
    }

    /// Truncation index J for arguments on the unit-scale annulus:
    /// `ceil((precision + 32) / log2(1/|p|))`, zero when p = 0.
    pub fn truncation_index(&self) -> usize {
        self.0.base_terms
    }

    /// Truncation index for a specific argument. Arguments far from the unit
    /// circle get `ceil(|log2 |x|| / log2(1/|p|))` extra factors.
    pub fn truncation_index_for(&self, x: &ComplexAp) -> usize {
        if self.0.basic {
            return 0;
        }
        let octaves = (x.ln_abs_f64() / std::f64::consts::LN_2).abs();
        let extra = (octaves.min(MAX_ARG_OCTAVES) / self.0.p_octaves).ceil() as usize;
        (self.0.base_terms + extra).min(self.0.max_terms)
    }

    pub fn one(&self) -> ComplexAp {
        ComplexAp::one(self.work_bits())
    }

    pub fn zero(&self) -> ComplexAp {
        ComplexAp::zero(self.work_bits())
    }

    /// `value` rounded (or exactly widened) to the working precision.
    pub fn lift(&self, value: &ComplexAp) -> ComplexAp {
        value.with_prec(self.work_bits())
    }

    /// A double-precision constant at the working precision.
    pub fn scalar(&self, re: f64, im: f64) -> ComplexAp {
        ComplexAp::from_f64(re, im, self.work_bits())
    }

    /// q^i, from the cache when |i| ≤ 64.
    pub fn q_pow(&self, i: i64) -> ComplexAp {
        if i.abs() <= Q_POW_CACHE {
            self.0.q_pows[(i + Q_POW_CACHE) as usize].clone()
        } else {
            // q is nonzero by construction, so the power is defined.
            self.0.q.powi(i).expect("q is nonzero")
        }
    }

    /// Whether `value` is zero to the reported precision: |value| < 2^{-precision}.
    pub fn negligible(&self, value: &ComplexAp) -> bool {
        value.ln_abs_f64() < -f64::from(self.0.precision) * std::f64::consts::LN_2
    }
}

/// θ(x). At p = 0 this is exactly `1 − x`.
pub fn theta(x: &ComplexAp, frame: &NomeFrame) -> Result<ComplexAp> {
    if frame.is_basic() {
        theta_closed_form(x, frame)
    } else {
        theta_product(x, frame)
    }
}

/// θ(x) through the truncated product, whatever p is. At p = 0 the product
/// has the single factor `1 − x` and agrees bit for bit with
/// [`theta_closed_form`].
pub fn theta_product(x: &ComplexAp, frame: &NomeFrame) -> Result<ComplexAp> {
    if x.is_zero() {
        return Err(Error::Domain("theta argument must be nonzero".into()));
    }
    let data = &*frame.0;
    let work = frame.work_bits();
    let x = x.with_prec(work);
    let s = &x + &(&data.p / &x);
    let terms = frame.truncation_index_for(&x);

    let mut acc = frame.one();
    let mut t = frame.zero();
    let mut f = frame.zero();
    let mut scratch = [Float::new(work), Float::new(work)];
    for j in 0..=terms {
        t.assign_mul(&data.p_pows[j], &s);
        f.assign_sub(&data.shifted[j], &t);
        acc.mul_assign_with(&f, &mut scratch);
    }
    acc.ensure_finite("theta")
}

/// `1 − x`, the p = 0 theta function. Rejects frames with p ≠ 0.
pub fn theta_closed_form(x: &ComplexAp, frame: &NomeFrame) -> Result<ComplexAp> {
    if !frame.is_basic() {
        return Err(Error::InvalidFrame("closed-form theta requires p = 0".into()));
    }
    if x.is_zero() {
        return Err(Error::Domain("theta argument must be nonzero".into()));
    }
    Ok(&frame.one() - &frame.lift(x))
}

/// Source of theta values for the composite kernels below. The plain frame
/// evaluates directly; the series evaluator adds instrumentation.
pub trait ThetaSource {
    fn frame(&self) -> &NomeFrame;

    fn theta(&self, x: &ComplexAp) -> Result<ComplexAp>;

    /// A theta factor that is about to be divided by. Fails when it vanishes
    /// to the reported precision; `site` describes the factor for the error.
    fn den_theta(&self, x: &ComplexAp, site: &dyn Fn() -> String) -> Result<ComplexAp> {
        let value = self.theta(x)?;
        if self.frame().negligible(&value) {
            Err(Error::Singular(site()))
        } else {
            Ok(value)
        }
    }
}

impl ThetaSource for NomeFrame {
    fn frame(&self) -> &NomeFrame {
        self
    }

    fn theta(&self, x: &ComplexAp) -> Result<ComplexAp> {
        theta(x, self)
    }
}

/// An elliptic Pochhammer symbol `(base)_length`.
#[derive(Clone, Debug, PartialEq)]
pub struct PochSpec {
    pub base: ComplexAp,
    pub length: i64,
}

impl PochSpec {
    pub fn new(base: ComplexAp, length: i64) -> Self {
        PochSpec { base, length }
    }
}

/// `(a)_k = θ(a) θ(aq) ⋯ θ(aq^{k−1})`; `(a)_0 = 1`. Negative lengths are rejected.
pub fn poch(spec: &PochSpec, frame: &NomeFrame) -> Result<ComplexAp> {
    if spec.length < 0 {
        return Err(Error::Argument(format!(
            "Pochhammer length must be non-negative, got {}",
            spec.length
        )));
    }
    poch_with(frame, &spec.base, spec.length as usize)
}

/// `(a_1, …, a_r)_k = (a_1)_k ⋯ (a_r)_k`; 1 for an empty list.
pub fn multi_poch(bases: &[ComplexAp], length: i64, frame: &NomeFrame) -> Result<ComplexAp> {
    let mut acc = frame.one();
    for base in bases {
        acc *= &poch(&PochSpec::new(base.clone(), length), frame)?;
    }
    Ok(acc)
}

pub(crate) fn poch_with<S: ThetaSource + ?Sized>(src: &S, base: &ComplexAp, length: usize) -> Result<ComplexAp> {
    let frame = src.frame();
    if base.is_zero() {
        return Err(Error::Domain("Pochhammer base must be nonzero".into()));
    }
    let base = frame.lift(base);
    let mut acc = frame.one();
    for i in 0..length {
        let arg = &base * &frame.q_pow(i as i64);
        acc *= &src.theta(&arg)?;
    }
    acc.ensure_finite("Pochhammer symbol")
}

/// Denominator Pochhammer: every theta factor passes through `den_theta`.
pub(crate) fn den_poch_with<S: ThetaSource + ?Sized>(
    src: &S,
    base: &ComplexAp,
    length: usize,
    site: &dyn Fn() -> String,
) -> Result<ComplexAp> {
    let frame = src.frame();
    if base.is_zero() {
        return Err(Error::Domain("Pochhammer base must be nonzero".into()));
    }
    let base = frame.lift(base);
    let mut acc = frame.one();
    for i in 0..length {
        let arg = &base * &frame.q_pow(i as i64);
        acc *= &src.den_theta(&arg, site)?;
    }
    acc.ensure_finite("Pochhammer symbol")
}

/// `Δ(z) = ∏_{j<k} z_j θ(z_k/z_j)`; 1 when `z` has at most one entry.
pub fn weyl_delta(z: &[ComplexAp], frame: &NomeFrame) -> Result<ComplexAp> {
    check_nonzero(z)?;
    let mut acc = frame.one();
    for k in 0..z.len() {
        for j in 0..k {
            let zj = frame.lift(&z[j]);
            let ratio = &frame.lift(&z[k]) / &zj;
            acc *= &zj;
            acc *= &theta(&ratio, frame)?;
        }
    }
    acc.ensure_finite("Weyl denominator")
}

/// `Δ(zq^y)/Δ(z) = ∏_{j<k} q^{y_j} θ(z_k q^{y_k} / z_j q^{y_j}) / θ(z_k/z_j)`,
/// evaluated factor by factor from this ratio form.
pub fn delta_ratio(z: &[ComplexAp], y: &[usize], frame: &NomeFrame) -> Result<ComplexAp> {
    if z.len() != y.len() {
        return Err(Error::Argument(format!(
            "delta_ratio: {} points but {} indices",
            z.len(),
            y.len()
        )));
    }
    DeltaRatio::new(frame, z)?.eval(frame, y)
}

fn check_nonzero(z: &[ComplexAp]) -> Result<()> {
    if z.iter().any(ComplexAp::is_zero) {
        return Err(Error::Domain("Weyl denominator points must be nonzero".into()));
    }
    Ok(())
}

/// The y-independent part of the Weyl-denominator ratio: the pair ratios
/// `z_k/z_j` and the theta values `θ(z_k/z_j)` they are divided by.
#[derive(Clone, Debug)]
pub(crate) struct DeltaRatio {
    ratios: Vec<(usize, usize, ComplexAp)>,
    inv_den: ComplexAp,
}

impl DeltaRatio {
    pub(crate) fn new<S: ThetaSource + ?Sized>(src: &S, z: &[ComplexAp]) -> Result<Self> {
        check_nonzero(z)?;
        let frame = src.frame();
        let mut ratios = Vec::new();
        let mut den = frame.one();
        for k in 0..z.len() {
            for j in 0..k {
                let r = &frame.lift(&z[k]) / &frame.lift(&z[j]);
                let site = || format!("θ(z_{}/z_{}) vanishes: coincident points", k + 1, j + 1);
                let t = src.den_theta(&r, &site).map_err(|e| match e {
                    Error::Singular(s) => Error::Domain(s),
                    other => other,
                })?;
                den *= &t;
                ratios.push((j, k, r));
            }
        }
        Ok(DeltaRatio {
            ratios,
            inv_den: den.recip()?,
        })
    }

    pub(crate) fn eval<S: ThetaSource + ?Sized>(&self, src: &S, y: &[usize]) -> Result<ComplexAp> {
        let frame = src.frame();
        let mut acc = self.inv_den.clone();
        for (j, k, r) in &self.ratios {
            let shift = y[*k] as i64 - y[*j] as i64;
            let arg = r * &frame.q_pow(shift);
            acc *= &src.theta(&arg)?;
            acc *= &frame.q_pow(y[*j] as i64);
        }
        acc.ensure_finite("Weyl denominator ratio")
    }
}
