//! Structured sums over simplices and boxes built from the theta kernel.
//!
//! Every sum is evaluated through an [`Evaluator`], which fixes the nome
//! frame, how Pochhammer symbols are formed, and how theta values are
//! obtained, and which can record the magnitude of every denominator theta
//! factor for the sampler's singularity guard.
//!
//! Terms are accumulated in the lexicographic order of the index stream.

mod index;
mod sums;

use std::cell::{Cell, RefCell};

use crate::complex::ComplexAp;
use crate::error::{Error, Result};
use crate::theta::{self, den_poch_with, poch_with, NomeFrame, ThetaSource};

pub use index::{binomial, box_indices, compositions, BoxIndex, BoxIndices, Composition, Compositions};
pub use sums::{
    c3_side, delta_lemma_lhs, e_series, fc_transform, jackson_rhs, kajihara_sum, sm_rhs, C3Params, C3Side, FcImage,
    KajiharaParams,
};

/// How Pochhammer symbols inside a sum are formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PochPath {
    /// Each symbol is recomputed from its theta factors for every term.
    #[default]
    Reference,
    /// Prefix tables built once per sum with `(a)_{k+1} = (a)_k θ(aq^k)`.
    Incremental,
}

/// Which theta implementation the evaluator calls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ThetaPath {
    /// Closed form at p = 0, truncated product otherwise.
    #[default]
    Auto,
    /// Always the truncated product.
    Product,
    /// Always `1 − x`; only valid at p = 0.
    ClosedForm,
}

/// Running statistics of |θ| over denominator factors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ThetaProbe {
    pub count: usize,
    pub sum_ln: f64,
    pub min_ln: f64,
}

impl ThetaProbe {
    fn record(&mut self, ln_abs: f64) {
        if self.count == 0 || ln_abs < self.min_ln {
            self.min_ln = ln_abs;
        }
        self.count += 1;
        self.sum_ln += ln_abs;
    }

    /// ln of the geometric mean of the recorded magnitudes.
    pub fn mean_ln(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum_ln / self.count as f64
        }
    }

    /// Whether the smallest factor is below `floor` times the geometric mean.
    pub fn is_near_singular(&self, floor: f64) -> bool {
        self.count > 0 && self.min_ln < floor.ln() + self.mean_ln()
    }
}

/// Evaluation context for the sums of this module.
#[derive(Debug)]
pub struct Evaluator {
    frame: NomeFrame,
    poch_path: PochPath,
    theta_path: ThetaPath,
    probe: Option<RefCell<ThetaProbe>>,
    terms: Cell<usize>,
}

impl Evaluator {
    pub fn new(frame: &NomeFrame) -> Self {
        Evaluator {
            frame: frame.clone(),
            poch_path: PochPath::Reference,
            theta_path: ThetaPath::Auto,
            probe: None,
            terms: Cell::new(0),
        }
    }

    pub fn with_poch_path(mut self, path: PochPath) -> Self {
        self.poch_path = path;
        self
    }

    pub fn with_theta_path(mut self, path: ThetaPath) -> Self {
        self.theta_path = path;
        self
    }

    /// Record denominator theta magnitudes from now on.
    pub fn with_probe(mut self) -> Self {
        self.probe = Some(RefCell::new(ThetaProbe::default()));
        self
    }

    pub fn probe(&self) -> Option<ThetaProbe> {
        self.probe.as_ref().map(|p| p.borrow().clone())
    }

    pub fn frame_ref(&self) -> &NomeFrame {
        &self.frame
    }

    /// Number of summation terms visited since construction (or the last
    /// [`take_terms`](Self::take_terms)).
    pub fn terms(&self) -> usize {
        self.terms.get()
    }

    pub fn take_terms(&self) -> usize {
        self.terms.replace(0)
    }

    pub(crate) fn count_term(&self) {
        self.terms.set(self.terms.get() + 1);
    }

    /// A numerator Pochhammer row `(base)_0 … (base)_max_len`.
    pub(crate) fn num_row(&self, base: ComplexAp, max_len: usize) -> Result<PochRow> {
        self.row(base, max_len, None)
    }

    /// A denominator row; vanishing factors raise a singular-instance error
    /// mentioning `label`.
    pub(crate) fn den_row(&self, base: ComplexAp, max_len: usize, label: String) -> Result<PochRow> {
        self.row(base, max_len, Some(label))
    }

    fn row(&self, base: ComplexAp, max_len: usize, den: Option<String>) -> Result<PochRow> {
        if base.is_zero() {
            return Err(Error::Domain(format!(
                "Pochhammer base {} is zero",
                den.as_deref().unwrap_or("(numerator)")
            )));
        }
        let base = self.frame.lift(&base);
        let table = match self.poch_path {
            PochPath::Reference => None,
            PochPath::Incremental => {
                let mut table = Vec::with_capacity(max_len + 1);
                let mut acc = self.frame.one();
                table.push(acc.clone());
                for i in 0..max_len {
                    let arg = &base * &self.frame.q_pow(i as i64);
                    let t = match &den {
                        None => self.theta(&arg)?,
                        Some(label) => self.den_theta(&arg, &|| label.clone())?,
                    };
                    acc *= &t;
                    table.push(acc.clone());
                }
                Some(table)
            }
        };
        Ok(PochRow { base, den, table })
    }

    /// `∏ (nums)_len / ∏ (dens)_len`, the shape of every prefactor.
    pub(crate) fn poch_ratio(
        &self,
        nums: &[ComplexAp],
        dens: &[ComplexAp],
        len: usize,
        label: &str,
    ) -> Result<ComplexAp> {
        let mut num = self.frame.one();
        for b in nums {
            num *= &self.num_row(b.clone(), len)?.get(self, len)?;
        }
        let mut den = self.frame.one();
        for (i, b) in dens.iter().enumerate() {
            den *= &self
                .den_row(b.clone(), len, format!("{label}: denominator #{}", i + 1))?
                .get(self, len)?;
        }
        divide(&num, &den, label)
    }
}

impl ThetaSource for Evaluator {
    fn frame(&self) -> &NomeFrame {
        &self.frame
    }

    fn theta(&self, x: &ComplexAp) -> Result<ComplexAp> {
        match self.theta_path {
            ThetaPath::Auto => theta::theta(x, &self.frame),
            ThetaPath::Product => theta::theta_product(x, &self.frame),
            ThetaPath::ClosedForm => theta::theta_closed_form(x, &self.frame),
        }
    }

    fn den_theta(&self, x: &ComplexAp, site: &dyn Fn() -> String) -> Result<ComplexAp> {
        let value = self.theta(x)?;
        if let Some(probe) = &self.probe {
            probe.borrow_mut().record(value.ln_abs_f64());
        }
        if self.frame.negligible(&value) {
            Err(Error::Singular(site()))
        } else {
            Ok(value)
        }
    }
}

/// A Pochhammer symbol with fixed base and varying length.
#[derive(Clone, Debug)]
pub(crate) struct PochRow {
    base: ComplexAp,
    den: Option<String>,
    table: Option<Vec<ComplexAp>>,
}

impl PochRow {
    pub(crate) fn get(&self, ev: &Evaluator, len: usize) -> Result<ComplexAp> {
        if let Some(table) = &self.table {
            return table.get(len).cloned().ok_or_else(|| {
                Error::InternalConsistency(format!(
                    "Pochhammer table of length {} queried at {len}",
                    table.len() - 1
                ))
            });
        }
        match &self.den {
            None => poch_with(ev, &self.base, len),
            Some(label) => den_poch_with(ev, &self.base, len, &|| label.clone()),
        }
    }
}

/// `num / den` for a denominator already screened by the singularity checks.
pub(crate) fn divide(num: &ComplexAp, den: &ComplexAp, label: &str) -> Result<ComplexAp> {
    if den.is_zero() {
        return Err(Error::Singular(format!("{label}: zero denominator")));
    }
    (num / den).ensure_finite(label)
}

/// Attaches the summation index to a singular-instance error.
pub(crate) fn at_index<T>(r: Result<T>, y: &[usize]) -> Result<T> {
    r.map_err(|e| match e {
        Error::Singular(s) => Error::Singular(format!("{s} at y = {y:?}")),
        other => other,
    })
}
