//! Randomized verification of catalog identities: parameter sampling with a
//! singularity guard, residual reports, fuzz campaigns over dimension grids,
//! the p = 0 degeneration check and precision escalation.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Float;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{
    evaluate_sides, evaluate_sides_with, free_names, resolve_constraint, validate_dims, Dims, IdentityId,
    IdentityInstance, Params, Sides,
};
use crate::complex::{ComplexAp, DecimalComplex};
use crate::error::{Error, Result};
use crate::series::{Evaluator, PochPath, ThetaPath};
use crate::theta::NomeFrame;

/// Significant decimal digits of residuals in every output format.
pub const RESIDUAL_DIGITS: usize = 6;

/// Parameters of the random instance generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    /// Range of |x| for every free parameter; phases are uniform.
    pub modulus_range: (f64, f64),
    /// The elliptic nome p is real with this value.
    pub p_modulus: f64,
    /// Range of |q|; the phase of q is uniform.
    pub q_modulus_range: (f64, f64),
    pub max_resamples: usize,
    /// A sample is rejected when some denominator theta factor is smaller
    /// than this fraction of the geometric mean of all of them.
    pub singularity_floor: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 0,
            modulus_range: (0.5, 2.0),
            p_modulus: 0.2,
            q_modulus_range: (0.5, 0.9),
            max_resamples: 200,
            singularity_floor: 1e-6,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        SamplerConfig { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let range_ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi;
        if !range_ok(self.modulus_range) {
            return Err(Error::Argument(format!("bad modulus range {:?}", self.modulus_range)));
        }
        if !range_ok(self.q_modulus_range) {
            return Err(Error::Argument(format!("bad |q| range {:?}", self.q_modulus_range)));
        }
        if !(0.0..1.0).contains(&self.p_modulus) {
            return Err(Error::InvalidFrame(format!(
                "|p| = {} is not in [0, 1)",
                self.p_modulus
            )));
        }
        if self.max_resamples == 0 {
            return Err(Error::Argument("max_resamples must be positive".into()));
        }
        if !(self.singularity_floor > 0.0 && self.singularity_floor < 1.0) {
            return Err(Error::Argument(format!(
                "singularity floor {} is not in (0, 1)",
                self.singularity_floor
            )));
        }
        Ok(())
    }
}

fn polar(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> (f64, f64) {
    let r = if lo == hi { lo } else { rng.random_range(lo..hi) };
    let phase = rng.random_range(0.0..TAU);
    (r * phase.cos(), r * phase.sin())
}

/// Draws a constraint-satisfying instance whose denominators stay away from
/// the theta zeros. Free parameters are exact binary64 values, so the same
/// instance can be re-resolved at any precision.
pub fn sample_instance(
    id: IdentityId,
    dims: &Dims,
    config: &SamplerConfig,
    precision: u32,
) -> Result<IdentityInstance> {
    config.validate()?;
    validate_dims(id, dims)?;
    NomeFrame::from_f64(config.p_modulus, (0.5, 0.0), precision)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dims = dims.clone();
    if matches!(id, IdentityId::C3Transform | IdentityId::DeltaLemma) {
        dims.n = dims.mvec.len();
    }
    let names = free_names(id, &dims);
    for _ in 0..config.max_resamples {
        let q = polar(&mut rng, config.q_modulus_range);
        let frame = NomeFrame::from_f64(config.p_modulus, q, precision)?;
        let mut free = Params::new();
        for name in &names {
            let (re, im) = polar(&mut rng, config.modulus_range);
            free.insert(name.clone(), ComplexAp::from_f64(re, im, 64));
        }
        let instance = match resolve_constraint(id, free, &dims, &frame) {
            Ok(instance) => instance,
            Err(Error::Argument(_)) => continue,
            Err(e) => return Err(e),
        };
        if admissible(&instance, config.singularity_floor)? {
            return Ok(instance.with_seed(config.seed));
        }
    }
    Err(Error::SamplingFailure {
        identity: id.to_string(),
        attempts: config.max_resamples,
    })
}

/// The sampler's guard: both sides evaluate without hitting a theta zero and
/// no denominator theta factor falls below `floor` times the geometric mean
/// of all of them.
pub fn admissible(instance: &IdentityInstance, floor: f64) -> Result<bool> {
    let ev = Evaluator::new(instance.frame())
        .with_poch_path(PochPath::Incremental)
        .with_probe();
    match evaluate_sides_with(instance, &ev) {
        Ok(sides) => {
            let probe = ev.probe().unwrap_or_default();
            Ok(sides.lhs.is_finite() && sides.rhs.is_finite() && !probe.is_near_singular(floor))
        }
        Err(Error::Singular(_) | Error::Domain(_) | Error::Overflow(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    SingularSkipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::SingularSkipped => "SINGULAR_SKIPPED",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of evaluating one instance.
#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub identity: IdentityId,
    pub dims: Dims,
    pub seed: Option<u64>,
    pub precision_bits: u32,
    /// Both sides rounded to `precision_bits`; absent when skipped.
    pub lhs: Option<ComplexAp>,
    pub rhs: Option<ComplexAp>,
    pub abs_residual: Option<Float>,
    /// `|L − R| / (|L| + |R|)`, zero when both sides vanish.
    pub rel_residual: Option<Float>,
    pub terms_lhs: usize,
    pub terms_rhs: usize,
    pub elapsed: Duration,
    pub status: Status,
    /// Why the instance was skipped.
    pub note: Option<String>,
}

#[derive(Serialize)]
struct TermsJson {
    lhs: usize,
    rhs: usize,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    identity: IdentityId,
    dims: &'a Dims,
    seed: Option<u64>,
    precision_bits: u32,
    lhs: Option<DecimalComplex>,
    rhs: Option<DecimalComplex>,
    rel_residual: Option<String>,
    terms: TermsJson,
    status: Status,
    elapsed_ms: Option<f64>,
}

/// Column names of [`VerificationReport::csv_record`], in JSON field order.
pub const CSV_HEADER: [&str; 16] = [
    "identity",
    "n",
    "m",
    "N",
    "mvec",
    "seed",
    "precision_bits",
    "lhs_re",
    "lhs_im",
    "rhs_re",
    "rhs_im",
    "rel_residual",
    "terms_lhs",
    "terms_rhs",
    "status",
    "elapsed_ms",
];

pub fn format_residual(r: &Float) -> String {
    r.to_string_radix(10, Some(RESIDUAL_DIGITS))
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn rel_residual_f64(&self) -> Option<f64> {
        self.rel_residual.as_ref().map(Float::to_f64)
    }

    /// `log2` of the relative residual (`-inf` for an exact match).
    pub fn log2_rel_residual(&self) -> Option<f64> {
        self.rel_residual.as_ref().map(|r| {
            if r.is_zero() {
                f64::NEG_INFINITY
            } else {
                r.clone().log2().to_f64()
            }
        })
    }

    pub fn residual_string(&self) -> Option<String> {
        self.rel_residual.as_ref().map(format_residual)
    }

    fn elapsed_ms(&self, timing: bool) -> Option<f64> {
        timing.then_some(self.elapsed.as_secs_f64() * 1e3)
    }

    /// JSON object. With `timing == false` the `elapsed_ms` field is null and
    /// the output depends only on the instance.
    pub fn to_json_value(&self, timing: bool) -> serde_json::Value {
        let json = ReportJson {
            identity: self.identity,
            dims: &self.dims,
            seed: self.seed,
            precision_bits: self.precision_bits,
            lhs: self.lhs.as_ref().map(ComplexAp::to_decimal),
            rhs: self.rhs.as_ref().map(ComplexAp::to_decimal),
            rel_residual: self.residual_string(),
            terms: TermsJson {
                lhs: self.terms_lhs,
                rhs: self.terms_rhs,
            },
            status: self.status,
            elapsed_ms: self.elapsed_ms(timing),
        };
        serde_json::to_value(json).expect("report serializes")
    }

    pub fn to_json(&self, timing: bool) -> String {
        serde_json::to_string_pretty(&self.to_json_value(timing)).expect("report serializes")
    }

    pub fn csv_record(&self, timing: bool) -> Vec<String> {
        let part = |v: &Option<ComplexAp>, re: bool| {
            v.as_ref()
                .map(|c| {
                    let d = c.to_decimal();
                    if re {
                        d.re
                    } else {
                        d.im
                    }
                })
                .unwrap_or_default()
        };
        let mvec: Vec<String> = self.dims.mvec.iter().map(usize::to_string).collect();
        vec![
            self.identity.to_string(),
            self.dims.n.to_string(),
            self.dims.m.to_string(),
            self.dims.total.to_string(),
            mvec.join(","),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.precision_bits.to_string(),
            part(&self.lhs, true),
            part(&self.lhs, false),
            part(&self.rhs, true),
            part(&self.rhs, false),
            self.residual_string().unwrap_or_default(),
            self.terms_lhs.to_string(),
            self.terms_rhs.to_string(),
            self.status.to_string(),
            self.elapsed_ms(timing).map(|t| format!("{t:.3}")).unwrap_or_default(),
        ]
    }

    pub fn to_human(&self, timing: bool) -> String {
        let mut out = String::new();
        let seed = self.seed.map(|s| format!(" seed={s}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{} [{}]{} precision={} bits",
            self.identity, self.dims, seed, self.precision_bits
        );
        if let (Some(l), Some(r)) = (&self.lhs, &self.rhs) {
            let _ = writeln!(out, "  lhs          = {l}");
            let _ = writeln!(out, "  rhs          = {r}");
        }
        if let Some(res) = self.residual_string() {
            let _ = writeln!(out, "  rel_residual = {res}");
        }
        let _ = write!(out, "  terms        = {} / {}", self.terms_lhs, self.terms_rhs);
        if let Some(ms) = self.elapsed_ms(timing) {
            let _ = write!(out, "  ({ms:.3} ms)");
        }
        let _ = writeln!(out);
        let _ = write!(out, "  status       = {}", self.status);
        if let Some(note) = &self.note {
            let _ = write!(out, " ({note})");
        }
        out
    }
}

/// `|L − R| / (|L| + |R|)` at the working precision of the inputs.
pub fn relative_residual(lhs: &ComplexAp, rhs: &ComplexAp) -> (Float, Float) {
    let abs = (lhs - rhs).abs();
    let scale = lhs.abs() + rhs.abs();
    let rel = if scale.is_zero() {
        Float::new(abs.prec())
    } else {
        Float::with_val(abs.prec(), &abs / &scale)
    };
    (abs, rel)
}

/// `2^{-(precision/2)}`
pub fn pass_threshold(precision: u32) -> Float {
    Float::with_val(64, Float::i_exp(1, -((precision / 2) as i32)))
}

/// Evaluates both sides through the reference path and classifies the result.
pub fn verify_instance(instance: &IdentityInstance) -> Result<VerificationReport> {
    let start = Instant::now();
    let outcome = evaluate_sides(instance);
    build_report(instance, outcome, start.elapsed())
}

fn build_report(instance: &IdentityInstance, outcome: Result<Sides>, elapsed: Duration) -> Result<VerificationReport> {
    let precision = instance.frame().precision();
    let mut report = VerificationReport {
        identity: instance.id(),
        dims: instance.dims().clone(),
        seed: instance.seed(),
        precision_bits: precision,
        lhs: None,
        rhs: None,
        abs_residual: None,
        rel_residual: None,
        terms_lhs: 0,
        terms_rhs: 0,
        elapsed,
        status: Status::SingularSkipped,
        note: None,
    };
    match outcome {
        Ok(sides) => {
            let (abs, rel) = relative_residual(&sides.lhs, &sides.rhs);
            report.status = if rel < pass_threshold(precision) {
                Status::Pass
            } else {
                Status::Fail
            };
            report.lhs = Some(sides.lhs.with_prec(precision));
            report.rhs = Some(sides.rhs.with_prec(precision));
            report.abs_residual = Some(abs);
            report.rel_residual = Some(rel);
            report.terms_lhs = sides.terms_lhs;
            report.terms_rhs = sides.terms_rhs;
        }
        Err(Error::Singular(note)) => report.note = Some(note),
        Err(e) => return Err(e),
    }
    Ok(report)
}

/// Seed of one campaign trial, derived from the base seed, the identity, the
/// grid cell and the trial number.
pub fn trial_seed(base: u64, id: IdentityId, dims: &Dims, trial: usize) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(format!("{base}/{id}/{dims}/{trial}").as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// One trial of a campaign.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub cell: usize,
    pub trial: usize,
    pub seed: u64,
    /// `None` when no admissible sample was found.
    pub report: Option<VerificationReport>,
}

#[derive(Clone, Debug, Default)]
pub struct CellSummary {
    pub dims: Dims,
    pub pass: usize,
    pub fail: usize,
    pub singular_skipped: usize,
    pub sampling_failures: usize,
    pub max_rel_residual: Option<Float>,
}

#[derive(Clone, Debug)]
pub struct WorstCase {
    pub cell: usize,
    pub trial: usize,
    pub seed: u64,
    pub dims: Dims,
    pub rel_residual: Float,
}

#[derive(Clone, Debug)]
pub struct CampaignSummary {
    pub identity: IdentityId,
    pub precision_bits: u32,
    pub p_modulus: f64,
    pub base_seed: u64,
    pub trials_per_cell: usize,
    pub cells: Vec<CellSummary>,
    pub outcomes: Vec<TrialOutcome>,
    pub worst: Option<WorstCase>,
}

impl CampaignSummary {
    fn total(&self, f: impl Fn(&CellSummary) -> usize) -> usize {
        self.cells.iter().map(f).sum()
    }

    pub fn pass(&self) -> usize {
        self.total(|c| c.pass)
    }

    pub fn fail(&self) -> usize {
        self.total(|c| c.fail)
    }

    pub fn singular_skipped(&self) -> usize {
        self.total(|c| c.singular_skipped)
    }

    pub fn sampling_failures(&self) -> usize {
        self.total(|c| c.sampling_failures)
    }

    pub fn trials(&self) -> usize {
        self.outcomes.len()
    }

    pub fn all_passed(&self) -> bool {
        self.fail() == 0 && self.pass() > 0
    }

    pub fn reports(&self) -> impl Iterator<Item = &VerificationReport> {
        self.outcomes.iter().filter_map(|o| o.report.as_ref())
    }

    pub fn to_json_value(&self, timing: bool) -> serde_json::Value {
        let cells: Vec<serde_json::Value> = self
            .cells
            .iter()
            .map(|c| {
                serde_json::json!({
                    "dims": c.dims,
                    "pass": c.pass,
                    "fail": c.fail,
                    "singular_skipped": c.singular_skipped,
                    "sampling_failures": c.sampling_failures,
                    "max_rel_residual": c.max_rel_residual.as_ref().map(format_residual),
                })
            })
            .collect();
        let worst = self.worst.as_ref().map(|w| {
            serde_json::json!({
                "cell": w.cell,
                "trial": w.trial,
                "seed": w.seed,
                "dims": w.dims,
                "rel_residual": format_residual(&w.rel_residual),
            })
        });
        let trials: Vec<serde_json::Value> = self
            .outcomes
            .iter()
            .map(|o| match &o.report {
                Some(r) => r.to_json_value(timing),
                None => serde_json::json!({
                    "identity": self.identity,
                    "dims": self.cells[o.cell].dims,
                    "seed": o.seed,
                    "status": "SAMPLING_FAILURE",
                }),
            })
            .collect();
        serde_json::json!({
            "identity": self.identity,
            "precision_bits": self.precision_bits,
            "p": self.p_modulus,
            "base_seed": self.base_seed,
            "trials_per_cell": self.trials_per_cell,
            "pass": self.pass(),
            "fail": self.fail(),
            "singular_skipped": self.singular_skipped(),
            "sampling_failures": self.sampling_failures(),
            "worst": worst,
            "cells": cells,
            "trials": trials,
        })
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} (p = {}): {} trials at {} bits, {} pass, {} fail, {} singular skipped, {} sampling failures",
            self.identity,
            self.p_modulus,
            self.trials(),
            self.precision_bits,
            self.pass(),
            self.fail(),
            self.singular_skipped(),
            self.sampling_failures()
        );
        for c in &self.cells {
            let worst = c
                .max_rel_residual
                .as_ref()
                .map(format_residual)
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "  [{}] pass={} fail={} skipped={} sampling_failures={} max_rel_residual={}",
                c.dims, c.pass, c.fail, c.singular_skipped, c.sampling_failures, worst
            );
        }
        match &self.worst {
            Some(w) => {
                let _ = write!(
                    out,
                    "  worst: [{}] trial {} seed {} rel_residual {}",
                    w.dims,
                    w.trial,
                    w.seed,
                    format_residual(&w.rel_residual)
                );
            }
            None => {
                let _ = write!(out, "  worst: none");
            }
        }
        out
    }
}

fn run_trial(
    id: IdentityId,
    dims: &Dims,
    config: &SamplerConfig,
    precision: u32,
    seed: u64,
) -> Result<Option<VerificationReport>> {
    match sample_instance(id, dims, &config.with_seed(seed), precision) {
        Ok(instance) => verify_instance(&instance).map(Some),
        Err(Error::SamplingFailure { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Runs `trials_per_cell` seeded trials on every grid cell. Trials run on
/// all available cores; the summary does not depend on scheduling.
pub fn fuzz_campaign(
    id: IdentityId,
    grid: &[Dims],
    trials_per_cell: usize,
    config: &SamplerConfig,
    precision: u32,
) -> Result<CampaignSummary> {
    if trials_per_cell == 0 {
        return Err(Error::Argument("trials per cell must be positive".into()));
    }
    if grid.is_empty() {
        return Err(Error::Argument("empty dimension grid".into()));
    }
    config.validate()?;
    for dims in grid {
        validate_dims(id, dims)?;
    }
    let jobs: Vec<(usize, usize, u64)> = grid
        .iter()
        .enumerate()
        .flat_map(|(cell, dims)| {
            (0..trials_per_cell).map(move |trial| (cell, trial, trial_seed(config.seed, id, dims, trial)))
        })
        .collect();
    let results: Mutex<Vec<Option<Result<Option<VerificationReport>>>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(jobs.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(cell, _, seed)) = jobs.get(i) else { break };
                let r = run_trial(id, &grid[cell], config, precision, seed);
                results.lock().expect("result slots")[i] = Some(r);
            });
        }
    });

    let mut cells: Vec<CellSummary> = grid
        .iter()
        .map(|d| CellSummary {
            dims: d.clone(),
            ..CellSummary::default()
        })
        .collect();
    let mut outcomes = Vec::with_capacity(jobs.len());
    let mut worst: Option<WorstCase> = None;
    let results = results.into_inner().expect("result slots");
    for (&(cell, trial, seed), result) in jobs.iter().zip(results) {
        let report = result.ok_or_else(|| Error::InternalConsistency("trial was never run".into()))??;
        let summary = &mut cells[cell];
        match &report {
            None => summary.sampling_failures += 1,
            Some(r) => {
                match r.status {
                    Status::Pass => summary.pass += 1,
                    Status::Fail => summary.fail += 1,
                    Status::SingularSkipped => summary.singular_skipped += 1,
                }
                if let Some(res) = &r.rel_residual {
                    if summary.max_rel_residual.as_ref().is_none_or(|m| res > m) {
                        summary.max_rel_residual = Some(res.clone());
                    }
                    if worst.as_ref().is_none_or(|w| *res > w.rel_residual) {
                        worst = Some(WorstCase {
                            cell,
                            trial,
                            seed,
                            dims: grid[cell].clone(),
                            rel_residual: res.clone(),
                        });
                    }
                }
            }
        }
        outcomes.push(TrialOutcome {
            cell,
            trial,
            seed,
            report,
        });
    }
    Ok(CampaignSummary {
        identity: id,
        precision_bits: precision,
        p_modulus: config.p_modulus,
        base_seed: config.seed,
        trials_per_cell,
        cells,
        outcomes,
        worst,
    })
}

/// Samples an instance at p = 0, checks that the product and closed-form
/// theta paths give bit-identical sides, then verifies it.
pub fn degeneration_check_p0(
    id: IdentityId,
    dims: &Dims,
    config: &SamplerConfig,
    precision: u32,
) -> Result<VerificationReport> {
    let config = SamplerConfig {
        p_modulus: 0.0,
        ..config.clone()
    };
    let instance = sample_instance(id, dims, &config, precision)?;
    let frame = instance.frame();
    let product = evaluate_sides_with(&instance, &Evaluator::new(frame).with_theta_path(ThetaPath::Product))?;
    let closed = evaluate_sides_with(&instance, &Evaluator::new(frame).with_theta_path(ThetaPath::ClosedForm))?;
    if product.lhs != closed.lhs || product.rhs != closed.rhs {
        return Err(Error::InternalConsistency(format!(
            "{id}: product and closed-form theta disagree at p = 0"
        )));
    }
    verify_instance(&instance)
}

#[derive(Clone, Debug)]
pub struct EscalationRow {
    pub precision_bits: u32,
    pub rel_residual: Float,
    pub status: Status,
}

/// Residuals of one instance re-resolved at increasing precisions.
#[derive(Clone, Debug)]
pub struct EscalationTable {
    pub rows: Vec<EscalationRow>,
}

impl EscalationTable {
    /// Whether every step from `p1` to `p2` bits shrinks the residual by at
    /// least `2^{(p2 − p1)/2}` (or reaches an exact zero).
    pub fn improves_by_half_bits(&self) -> bool {
        self.rows.windows(2).all(|w| {
            let (lo, hi) = (&w[0], &w[1]);
            if hi.rel_residual.is_zero() {
                return true;
            }
            if lo.rel_residual.is_zero() {
                return false;
            }
            let gain = Float::with_val(64, &lo.rel_residual / &hi.rel_residual).log2().to_f64();
            gain >= f64::from(hi.precision_bits - lo.precision_bits) / 2.0
        })
    }
}

pub fn precision_escalation(instance: &IdentityInstance, precisions: &[u32]) -> Result<EscalationTable> {
    if precisions.len() < 2 {
        return Err(Error::Argument("escalation needs at least two precisions".into()));
    }
    if precisions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("escalation precisions must increase".into()));
    }
    let mut rows = Vec::with_capacity(precisions.len());
    for &bits in precisions {
        let report = verify_instance(&instance.with_precision(bits)?)?;
        let rel_residual = report
            .rel_residual
            .ok_or_else(|| Error::Singular(format!("{} became singular at {bits} bits", instance.id())))?;
        rows.push(EscalationRow {
            precision_bits: bits,
            rel_residual,
            status: report.status,
        });
    }
    Ok(EscalationTable { rows })
}
