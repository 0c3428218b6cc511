use rug::Float;

use super::{at_index, box_indices, compositions, divide, Evaluator, PochRow};
use crate::complex::ComplexAp;
use crate::error::{Error, Result};
use crate::theta::{DeltaRatio, NomeFrame, ThetaSource};

/// Parameters of the A_n Kajihara-type simplex sum
///
/// ```text
/// Σ_{|y|=N} Δ(zq^y)/Δ(z) ∏_k ∏_j (a_j z_k)_{y_k} / (∏_j (w_j z_k)_{y_k} ∏_j (q z_k/z_j)_{y_k})
/// ```
///
/// with `n = len(z)`, `m = len(w)` and `len(a) = m + n`. The sum is
/// transformed by the balancing condition `∏w = ∏z ∏a`; evaluation itself does
/// not require it, so perturbed (unbalanced) parameters can be evaluated too.
#[derive(Clone, Debug, PartialEq)]
pub struct KajiharaParams {
    z: Vec<ComplexAp>,
    w: Vec<ComplexAp>,
    a: Vec<ComplexAp>,
    /// When set the numerator parameters are `1/a_j`, stored uninverted so
    /// that the dimension swap is an exact involution.
    a_inverted: bool,
    total: usize,
}

impl KajiharaParams {
    pub fn new(z: Vec<ComplexAp>, w: Vec<ComplexAp>, a: Vec<ComplexAp>, total: usize) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::Argument("Kajihara sum needs at least one z".into()));
        }
        if a.len() != z.len() + w.len() {
            return Err(Error::Argument(format!(
                "Kajihara sum with n = {} and m = {} needs {} numerator parameters, got {}",
                z.len(),
                w.len(),
                z.len() + w.len(),
                a.len()
            )));
        }
        if z.iter().chain(&w).chain(&a).any(ComplexAp::is_zero) {
            return Err(Error::Domain("Kajihara parameters must be nonzero".into()));
        }
        Ok(KajiharaParams {
            z,
            w,
            a,
            a_inverted: false,
            total,
        })
    }

    pub fn z(&self) -> &[ComplexAp] {
        &self.z
    }

    pub fn w(&self) -> &[ComplexAp] {
        &self.w
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn m(&self) -> usize {
        self.w.len()
    }

    /// The numerator parameters `a_j` as values (inverting if this is a
    /// swapped parameter set).
    pub fn a_values(&self, frame: &NomeFrame) -> Result<Vec<ComplexAp>> {
        self.a
            .iter()
            .map(|a| {
                let a = frame.lift(a);
                if self.a_inverted {
                    a.recip()
                } else {
                    Ok(a)
                }
            })
            .collect()
    }

    /// `(z, w, a) ↦ (w, z, 1/a)`: the parameters of the other side of the
    /// Kajihara transformation. Applying it twice gives back `self` exactly.
    pub fn swapped(&self) -> Self {
        KajiharaParams {
            z: self.w.clone(),
            w: self.z.clone(),
            a: self.a.clone(),
            a_inverted: !self.a_inverted,
            total: self.total,
        }
    }

    fn numerator_base(&self, j: usize, zk: &ComplexAp, frame: &NomeFrame) -> ComplexAp {
        let a = frame.lift(&self.a[j]);
        if self.a_inverted {
            zk / &a
        } else {
            &a * zk
        }
    }

    /// `|∏w / (∏z ∏a) − 1|`.
    pub fn balancing_residual(&self, frame: &NomeFrame) -> Result<Float> {
        let mut lhs = frame.one();
        for w in &self.w {
            lhs *= &frame.lift(w);
        }
        let mut rhs = frame.one();
        for z in &self.z {
            rhs *= &frame.lift(z);
        }
        for a in self.a_values(frame)? {
            rhs *= &a;
        }
        Ok((&lhs.checked_div(&rhs)? - &frame.one()).abs())
    }

    /// Balancing to within `2^{-(precision-8)}` relative.
    pub fn check_balanced(&self, frame: &NomeFrame) -> Result<()> {
        let r = self.balancing_residual(frame)?;
        let tol = Float::with_val(64, Float::i_exp(1, -(frame.precision() as i32 - 8)));
        if r < tol {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "balancing condition violated: relative residual {}",
                r.to_f64()
            )))
        }
    }
}

/// Which side of the box-sum transformation to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum C3Side {
    Left,
    Right,
}

/// Parameters of the hyperrectangle transformation, balanced by
/// `a^3 q^{|m|+2} = bcdefg`.
#[derive(Clone, Debug, PartialEq)]
pub struct C3Params {
    pub z: Vec<ComplexAp>,
    pub a: ComplexAp,
    pub b: ComplexAp,
    pub c: ComplexAp,
    pub d: ComplexAp,
    pub e: ComplexAp,
    pub f: ComplexAp,
    pub g: ComplexAp,
    pub m: Vec<usize>,
}

impl C3Params {
    pub fn total_m(&self) -> usize {
        self.m.iter().sum()
    }
}

/// Output of the parameter substitution that maps one member of the
/// same-dimension family onto another.
#[derive(Clone, Debug, PartialEq)]
pub struct FcImage {
    pub x: Vec<ComplexAp>,
    pub b: Vec<ComplexAp>,
    pub prefactor: ComplexAp,
}

pub fn kajihara_sum(params: &KajiharaParams, frame: &NomeFrame) -> Result<ComplexAp> {
    Evaluator::new(frame).kajihara_sum(params)
}

/// Closed form of the A_n elliptic Jackson summation, with
/// `w = z_1⋯z_n a_1⋯a_{n+1}`.
pub fn jackson_rhs(z: &[ComplexAp], a: &[ComplexAp], total: usize, frame: &NomeFrame) -> Result<ComplexAp> {
    let mut w = frame.one();
    for v in z.iter().chain(a) {
        w *= &frame.lift(v);
    }
    Evaluator::new(frame).jackson_rhs(z, a, &w, total)
}

/// `E(a; q^{-N}, b, c, d, e, f, g)` with `rest = [b, c, d, e, f, g]`.
pub fn e_series(a: &ComplexAp, rest: &[ComplexAp; 6], total: usize, frame: &NomeFrame) -> Result<ComplexAp> {
    Evaluator::new(frame).e_series(a, rest, total)
}

pub fn sm_rhs(
    z: &[ComplexAp],
    a: &[ComplexAp],
    w1: &ComplexAp,
    w2: &ComplexAp,
    total: usize,
    frame: &NomeFrame,
) -> Result<ComplexAp> {
    Evaluator::new(frame).sm_rhs(z, a, w1, w2, total)
}

pub fn fc_transform(
    z: &[ComplexAp],
    a: &[ComplexAp],
    w1: &ComplexAp,
    w2: &ComplexAp,
    total: usize,
    m: usize,
    frame: &NomeFrame,
) -> Result<FcImage> {
    Evaluator::new(frame).fc_transform(z, a, w1, w2, total, m)
}

pub fn c3_side(params: &C3Params, side: C3Side, frame: &NomeFrame) -> Result<ComplexAp> {
    Evaluator::new(frame).c3_side(params, side)
}

/// `Δ(1/z)/Δ(q^{-m}/z) ∏_{j,k} (q^{-m_k} z_j/z_k)_{m_k} / (q^{1-m_k+m_j} z_j/z_k)_{m_k}`.
pub fn delta_lemma_lhs(z: &[ComplexAp], m: &[usize], frame: &NomeFrame) -> Result<ComplexAp> {
    let ev = Evaluator::new(frame);
    let u = lemma_points(z, m, frame)?;
    ev.delta_lemma_lhs(z, &u, m)
}

/// `u_k = q^{-m_k}/z_k`.
pub(crate) fn lemma_points(z: &[ComplexAp], m: &[usize], frame: &NomeFrame) -> Result<Vec<ComplexAp>> {
    if z.len() != m.len() {
        return Err(Error::Argument(format!("{} points but {} exponents", z.len(), m.len())));
    }
    z.iter()
        .zip(m)
        .map(|(zk, &mk)| frame.q_pow(-(mk as i64)).checked_div(&frame.lift(zk)))
        .collect()
}

impl Evaluator {
    fn lift_all(&self, v: &[ComplexAp]) -> Vec<ComplexAp> {
        v.iter().map(|x| self.frame_ref().lift(x)).collect()
    }

    fn div(&self, num: &ComplexAp, den: &ComplexAp) -> Result<ComplexAp> {
        num.checked_div(den)
    }

    /// Simplex sum of [`KajiharaParams`], summed over compositions in
    /// ascending lexicographic order.
    pub fn kajihara_sum(&self, params: &KajiharaParams) -> Result<ComplexAp> {
        let frame = self.frame_ref().clone();
        let n = params.n();
        let total = params.total;
        let z = self.lift_all(&params.z);
        let q = frame.q().clone();

        let mut num_rows: Vec<Vec<PochRow>> = Vec::with_capacity(n);
        let mut den_rows: Vec<Vec<PochRow>> = Vec::with_capacity(n);
        for (k, zk) in z.iter().enumerate() {
            let mut num = Vec::with_capacity(params.a.len());
            for j in 0..params.a.len() {
                num.push(self.num_row(params.numerator_base(j, zk, &frame), total)?);
            }
            let mut den = Vec::with_capacity(params.m() + n);
            for (j, w) in params.w.iter().enumerate() {
                let base = &frame.lift(w) * zk;
                den.push(self.den_row(base, total, format!("(w_{} z_{})", j + 1, k + 1))?);
            }
            for (j, zj) in z.iter().enumerate() {
                let base = &(&q * zk) / zj;
                den.push(self.den_row(base, total, format!("(q z_{}/z_{})", k + 1, j + 1))?);
            }
            num_rows.push(num);
            den_rows.push(den);
        }

        let delta = DeltaRatio::new(self, &z)?;
        let mut sum = frame.zero();
        for y in compositions(n, total) {
            let term = at_index(self.simplex_term(&delta, &num_rows, &den_rows, &y), &y)?;
            sum += &term;
            self.count_term();
        }
        sum.ensure_finite("Kajihara sum")
    }

    fn simplex_term(
        &self,
        delta: &DeltaRatio,
        num_rows: &[Vec<PochRow>],
        den_rows: &[Vec<PochRow>],
        y: &[usize],
    ) -> Result<ComplexAp> {
        let mut num = delta.eval(self, y)?;
        let mut den = self.frame_ref().one();
        for (k, &yk) in y.iter().enumerate() {
            for row in &num_rows[k] {
                num *= &row.get(self, yk)?;
            }
            for row in &den_rows[k] {
                den *= &row.get(self, yk)?;
            }
        }
        divide(&num, &den, "simplex term")
    }

    /// `∏_j (w/a_j)_N / (∏_j (w z_j)_N (q)_N)` for an explicit `w`.
    pub fn jackson_rhs(&self, z: &[ComplexAp], a: &[ComplexAp], w: &ComplexAp, total: usize) -> Result<ComplexAp> {
        if a.len() != z.len() + 1 {
            return Err(Error::Argument(format!(
                "Jackson summation with n = {} needs {} parameters a, got {}",
                z.len(),
                z.len() + 1,
                a.len()
            )));
        }
        let frame = self.frame_ref();
        let w = frame.lift(w);
        let nums = a
            .iter()
            .map(|aj| w.checked_div(&frame.lift(aj)))
            .collect::<Result<Vec<_>>>()?;
        let mut dens: Vec<ComplexAp> = z.iter().map(|zj| &w * &frame.lift(zj)).collect();
        dens.push(frame.q().clone());
        self.count_term();
        self.poch_ratio(&nums, &dens, total, "Jackson product")
    }

    /// `Σ_k θ(aq^{2k})/θ(a) (a, q^{-N}, b, …, g)_k / (q, aq^{N+1}, aq/b, …, aq/g)_k q^k`.
    pub fn e_series(&self, a: &ComplexAp, rest: &[ComplexAp; 6], total: usize) -> Result<ComplexAp> {
        let frame = self.frame_ref().clone();
        let a = frame.lift(a);
        let aq = &a * frame.q();
        let mut num_rows = vec![
            self.num_row(a.clone(), total)?,
            self.num_row(frame.q_pow(-(total as i64)), total)?,
        ];
        let mut den_rows = vec![
            self.den_row(frame.q().clone(), total, "(q)".into())?,
            self.den_row(&a * &frame.q_pow(total as i64 + 1), total, "(aq^{N+1})".into())?,
        ];
        for (i, b) in rest.iter().enumerate() {
            let b = frame.lift(b);
            num_rows.push(self.num_row(b.clone(), total)?);
            den_rows.push(self.den_row(aq.checked_div(&b)?, total, format!("(aq/b_{})", i + 1))?);
        }
        let theta_a = self.den_theta(&a, &|| "θ(a) in the very-well-poised factor".into())?;

        let mut sum = frame.zero();
        for k in 0..=total {
            let term = at_index(
                (|| {
                    let mut num = self.theta(&(&a * &frame.q_pow(2 * k as i64)))?;
                    num *= &frame.q_pow(k as i64);
                    let mut den = theta_a.clone();
                    for row in &num_rows {
                        num *= &row.get(self, k)?;
                    }
                    for row in &den_rows {
                        den *= &row.get(self, k)?;
                    }
                    divide(&num, &den, "E-series term")
                })(),
                &[k],
            )?;
            sum += &term;
            self.count_term();
        }
        sum.ensure_finite("E-series")
    }

    /// Right side of the Frenkel–Turaev transformation, `λ = qa²/bcd`.
    pub fn frenkel_turaev_rhs(&self, a: &ComplexAp, rest: &[ComplexAp; 6], total: usize) -> Result<ComplexAp> {
        let frame = self.frame_ref();
        let q = frame.q();
        let a = frame.lift(a);
        let [b, c, d, e, f, g] = rest.clone().map(|v| frame.lift(&v));
        let lambda = self.div(&(&(q * &a) * &a), &(&(&b * &c) * &d))?;
        let aq = &a * q;
        let lq = &lambda * q;
        let ef = &e * &f;
        let pre = self.poch_ratio(
            &[aq.clone(), self.div(&aq, &ef)?, self.div(&lq, &e)?, self.div(&lq, &f)?],
            &[self.div(&aq, &e)?, self.div(&aq, &f)?, lq.clone(), self.div(&lq, &ef)?],
            total,
            "Frenkel–Turaev prefactor",
        )?;
        let la = self.div(&lambda, &a)?;
        let inner = [&la * &b, &la * &c, &la * &d, e, f, g];
        Ok(&pre * &self.e_series(&lambda, &inner, total)?)
    }

    /// Right side of the iterated Bailey transformation.
    pub fn iterated_bailey_rhs(&self, a: &ComplexAp, rest: &[ComplexAp; 6], total: usize) -> Result<ComplexAp> {
        let frame = self.frame_ref();
        let q = frame.q();
        let a = frame.lift(a);
        let [b, c, d, e, f, g] = rest.clone().map(|v| frame.lift(&v));
        let aq = &a * q;
        let aqg = self.div(&aq, &g)?;
        let pre = self.poch_ratio(
            &[
                self.div(&aqg, &c)?,
                self.div(&aqg, &d)?,
                self.div(&aqg, &e)?,
                self.div(&aqg, &f)?,
                aq.clone(),
                b.clone(),
            ],
            &[
                self.div(&aq, &c)?,
                self.div(&aq, &d)?,
                self.div(&aq, &e)?,
                self.div(&aq, &f)?,
                aqg.clone(),
                self.div(&b, &g)?,
            ],
            total,
            "iterated Bailey prefactor",
        )?;
        let gn = g.powi(total as i64)?;
        let qn = frame.q_pow(-(total as i64));
        let lambda = self.div(&(&g * &qn), &b)?;
        let aqb = self.div(&aq, &b)?;
        let inner = [
            self.div(&(&g * &qn), &a)?,
            self.div(&aqb, &c)?,
            self.div(&aqb, &d)?,
            self.div(&aqb, &e)?,
            self.div(&aqb, &f)?,
            g.clone(),
        ];
        Ok(&(&gn * &pre) * &self.e_series(&lambda, &inner, total)?)
    }

    /// Single-sum form of the m = 2 transformation:
    ///
    /// ```text
    /// ∏_j (w2/a_j)_N / ((w2/w1)_N (q)_N ∏_j (w2 z_j)_N)
    ///   × Σ_k θ(q^{2k−N} w1/w2)/θ(q^{−N} w1/w2)
    ///       (q^{−N} w1/w2, q^{−N})_k ∏_j (w1/a_j)_k ∏_j (q^{1−N}/w2 z_j)_k
    ///     / ((q, q w1/w2)_k ∏_j (q^{1−N} a_j/w2)_k ∏_j (w1 z_j)_k) q^k
    /// ```
    pub fn sm_rhs(
        &self,
        z: &[ComplexAp],
        a: &[ComplexAp],
        w1: &ComplexAp,
        w2: &ComplexAp,
        total: usize,
    ) -> Result<ComplexAp> {
        if a.len() != z.len() + 2 {
            return Err(Error::Argument(format!(
                "m = 2 rewrite with n = {} needs {} parameters a, got {}",
                z.len(),
                z.len() + 2,
                a.len()
            )));
        }
        let frame = self.frame_ref().clone();
        let q = frame.q().clone();
        let z = self.lift_all(z);
        let a = self.lift_all(a);
        let w1 = frame.lift(w1);
        let w2 = frame.lift(w2);
        let big_n = total as i64;
        let ratio = self.div(&w1, &w2)?;

        let pre_nums = a.iter().map(|aj| self.div(&w2, aj)).collect::<Result<Vec<_>>>()?;
        let mut pre_dens = vec![self.div(&w2, &w1)?, q.clone()];
        pre_dens.extend(z.iter().map(|zj| &w2 * zj));
        let pre = self.poch_ratio(&pre_nums, &pre_dens, total, "m = 2 rewrite prefactor")?;

        let q_mn = frame.q_pow(-big_n);
        let q_1mn = frame.q_pow(1 - big_n);
        let mut num_rows = vec![self.num_row(&q_mn * &ratio, total)?, self.num_row(q_mn.clone(), total)?];
        for aj in &a {
            num_rows.push(self.num_row(self.div(&w1, aj)?, total)?);
        }
        for zj in &z {
            num_rows.push(self.num_row(self.div(&q_1mn, &(&w2 * zj))?, total)?);
        }
        let mut den_rows = vec![
            self.den_row(q.clone(), total, "(q)".into())?,
            self.den_row(&q * &ratio, total, "(q w1/w2)".into())?,
        ];
        for (j, aj) in a.iter().enumerate() {
            let base = self.div(&(&q_1mn * aj), &w2)?;
            den_rows.push(self.den_row(base, total, format!("(q^{{1-N}} a_{}/w2)", j + 1))?);
        }
        for (j, zj) in z.iter().enumerate() {
            den_rows.push(self.den_row(&w1 * zj, total, format!("(w1 z_{})", j + 1))?);
        }
        let vwp_base = &q_mn * &ratio;
        let theta_base = self.den_theta(&vwp_base, &|| "θ(q^{-N} w1/w2)".into())?;

        let mut sum = frame.zero();
        for k in 0..=total {
            let term = at_index(
                (|| {
                    let mut num = self.theta(&(&vwp_base * &frame.q_pow(2 * k as i64)))?;
                    num *= &frame.q_pow(k as i64);
                    let mut den = theta_base.clone();
                    for row in &num_rows {
                        num *= &row.get(self, k)?;
                    }
                    for row in &den_rows {
                        den *= &row.get(self, k)?;
                    }
                    divide(&num, &den, "m = 2 rewrite term")
                })(),
                &[k],
            )?;
            sum += &term;
            self.count_term();
        }
        Ok(&pre * &sum.ensure_finite("m = 2 rewrite sum")?)
    }

    /// Substitution `(z, a) ↦ (x, b)` of the same-dimension family at level
    /// `m`, with the multiplier
    /// `∏_{j ≤ n−m} (a_j z_j)^N (w1/a_j, w2/a_j)_N / (w1 z_j, w2 z_j)_N`.
    pub fn fc_transform(
        &self,
        z: &[ComplexAp],
        a: &[ComplexAp],
        w1: &ComplexAp,
        w2: &ComplexAp,
        total: usize,
        m: usize,
    ) -> Result<FcImage> {
        let n = z.len();
        if a.len() != n + 2 {
            return Err(Error::Argument(format!(
                "substitution with n = {n} needs {} parameters a, got {}",
                n + 2,
                a.len()
            )));
        }
        if m > n {
            return Err(Error::Argument(format!("substitution level m = {m} exceeds n = {n}")));
        }
        let frame = self.frame_ref();
        let z = self.lift_all(z);
        let a = self.lift_all(a);
        let w1 = frame.lift(w1);
        let w2 = frame.lift(w2);
        let w12 = &w1 * &w2;
        let big_n = total as i64;
        let down = self.div(&frame.q_pow(1 - big_n), &w12)?;
        let up = &frame.q_pow(big_n - 1) * &w12;
        let split = n - m;

        let mut x = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n + 2);
        for j in 0..split {
            x.push(&down * &a[j]);
            b.push(&up * &z[j]);
        }
        x.extend_from_slice(&z[split..]);
        b.extend_from_slice(&a[split..]);

        let mut prefactor = frame.one();
        for j in 0..split {
            prefactor *= &(&a[j] * &z[j]).powi(big_n)?;
            prefactor *= &self.poch_ratio(
                &[self.div(&w1, &a[j])?, self.div(&w2, &a[j])?],
                &[&w1 * &z[j], &w2 * &z[j]],
                total,
                "substitution multiplier",
            )?;
        }
        Ok(FcImage { x, b, prefactor })
    }

    /// One side of the hyperrectangle (box-sum) transformation.
    pub fn c3_side(&self, params: &C3Params, side: C3Side) -> Result<ComplexAp> {
        let n = params.z.len();
        if params.m.len() != n {
            return Err(Error::Argument(format!(
                "box transformation: {} points but {} bounds",
                n,
                params.m.len()
            )));
        }
        let frame = self.frame_ref().clone();
        let q = frame.q().clone();
        let z = self.lift_all(&params.z);
        let [a, b, c, d, e, f, g] = [
            &params.a, &params.b, &params.c, &params.d, &params.e, &params.f, &params.g,
        ]
        .map(|v| frame.lift(v));
        let m = &params.m;
        let big_m = params.total_m();
        let aq = &a * &q;

        // Rows indexed by y_k shared by both sides: (q^{-m_j} z_k/z_j)_{y_k} / (q z_k/z_j)_{y_k}.
        let mut num_y: Vec<Vec<PochRow>> = Vec::with_capacity(n);
        let mut den_y: Vec<Vec<PochRow>> = Vec::with_capacity(n);
        for k in 0..n {
            let mut nums = Vec::new();
            let mut dens = Vec::new();
            for j in 0..n {
                let r = self.div(&z[k], &z[j])?;
                nums.push(self.num_row(&frame.q_pow(-(m[j] as i64)) * &r, m[k])?);
                dens.push(self.den_row(&q * &r, m[k], format!("(q z_{}/z_{})", k + 1, j + 1))?);
            }
            num_y.push(nums);
            den_y.push(dens);
        }

        // theta-ratio base per k, the |y|-indexed rows, and the per-k extra rows.
        let mut theta_bases = Vec::with_capacity(n);
        let mut num_s: Vec<PochRow> = Vec::new();
        let mut den_s: Vec<PochRow> = Vec::new();
        let prefactor = match side {
            C3Side::Left => {
                for zk in &z {
                    theta_bases.push(&a * zk);
                }
                for (j, zj) in z.iter().enumerate() {
                    let azj = &a * zj;
                    num_s.push(self.num_row(azj.clone(), big_m)?);
                    den_s.push(self.den_row(
                        &frame.q_pow(1 + m[j] as i64) * &azj,
                        big_m,
                        format!("(q^{{1+m_{0}}} a z_{0})", j + 1),
                    )?);
                }
                for v in [&b, &c, &d] {
                    num_s.push(self.num_row(v.clone(), big_m)?);
                }
                for (name, v) in [("e", &e), ("f", &f), ("g", &g)] {
                    den_s.push(self.den_row(self.div(&aq, v)?, big_m, format!("(aq/{name})"))?);
                }
                for k in 0..n {
                    for v in [&e, &f, &g] {
                        num_y[k].push(self.num_row(v * &z[k], m[k])?);
                    }
                    for (name, v) in [("b", &b), ("c", &c), ("d", &d)] {
                        let base = self.div(&(&aq * &z[k]), v)?;
                        den_y[k].push(self.den_row(base, m[k], format!("(aq z_{}/{name})", k + 1))?);
                    }
                }
                frame.one()
            }
            C3Side::Right => {
                let q_mm = frame.q_pow(-(big_m as i64));
                let gb = self.div(&g, &b)?;
                for zk in &z {
                    theta_bases.push(&(&gb * zk) * &q_mm);
                }
                for (j, zj) in z.iter().enumerate() {
                    let base = &(&gb * zj) * &q_mm;
                    num_s.push(self.num_row(base.clone(), big_m)?);
                    den_s.push(self.den_row(
                        &frame.q_pow(m[j] as i64 + 1) * &base,
                        big_m,
                        format!("(g z_{} q^{{m_j+1-|m|}}/b)", j + 1),
                    )?);
                }
                let ga = self.div(&g, &a)?;
                let aqb = self.div(&aq, &b)?;
                num_s.push(self.num_row(&q_mm * &ga, big_m)?);
                num_s.push(self.num_row(self.div(&aqb, &e)?, big_m)?);
                num_s.push(self.num_row(self.div(&aqb, &f)?, big_m)?);
                den_s.push(self.den_row(&(&q_mm * &ga) * &c, big_m, "(q^{-|m|} cg/a)".into())?);
                den_s.push(self.den_row(&(&q_mm * &ga) * &d, big_m, "(q^{-|m|} dg/a)".into())?);
                den_s.push(self.den_row(
                    self.div(&frame.q_pow(1 - big_m as i64), &b)?,
                    big_m,
                    "(q^{1-|m|}/b)".into(),
                )?);
                let eg_a = &(&q_mm * &e) * &ga;
                let fg_a = &(&q_mm * &f) * &ga;
                for k in 0..n {
                    let zk = &z[k];
                    num_y[k].push(self.num_row(self.div(&(&aqb * zk), &c)?, m[k])?);
                    num_y[k].push(self.num_row(self.div(&(&aqb * zk), &d)?, m[k])?);
                    num_y[k].push(self.num_row(&g * zk, m[k])?);
                    den_y[k].push(self.den_row(&aqb * zk, m[k], format!("(aq z_{}/b)", k + 1))?);
                    den_y[k].push(self.den_row(&eg_a * zk, m[k], format!("(q^{{-|m|}} eg z_{}/a)", k + 1))?);
                    den_y[k].push(self.den_row(&fg_a * zk, m[k], format!("(q^{{-|m|}} fg z_{}/a)", k + 1))?);
                }
                self.c3_right_prefactor(&z, [&a, &b, &c, &d, &e, &f, &g], m)?
            }
        };

        let delta = DeltaRatio::new(self, &z)?;
        let mut theta_dens = frame.one();
        for (k, base) in theta_bases.iter().enumerate() {
            theta_dens *= &self.den_theta(base, &|| format!("θ-ratio denominator for k = {}", k + 1))?;
        }

        let mut sum = frame.zero();
        for y in box_indices(m) {
            let s = y.total();
            let term = at_index(
                (|| {
                    let mut num = delta.eval(self, &y)?;
                    let mut den = theta_dens.clone();
                    for (k, base) in theta_bases.iter().enumerate() {
                        num *= &self.theta(&(base * &frame.q_pow((y[k] + s) as i64)))?;
                    }
                    num *= &frame.q_pow(s as i64);
                    for row in &num_s {
                        num *= &row.get(self, s)?;
                    }
                    for row in &den_s {
                        den *= &row.get(self, s)?;
                    }
                    for (k, &yk) in y.iter().enumerate() {
                        for row in &num_y[k] {
                            num *= &row.get(self, yk)?;
                        }
                        for row in &den_y[k] {
                            den *= &row.get(self, yk)?;
                        }
                    }
                    divide(&num, &den, "box term")
                })(),
                &y,
            )?;
            sum += &term;
            self.count_term();
        }
        Ok(&prefactor * &sum.ensure_finite("box sum")?)
    }

    /// `g^{|m|} q^{−Σ_{j<k} m_j m_k} (b, aq/cg, aq/dg)_{|m|} / (aq/e, aq/f, aq/g)_{|m|}
    ///  × ∏_k z_k^{m_k} (aq z_k, q^{1+|m|−m_k} a/z_k eg, q^{1+|m|−m_k} a/z_k fg)_{m_k}
    ///        / (aq z_k/c, aq z_k/d, q^{|m|−m_k} b/g z_k)_{m_k}`
    fn c3_right_prefactor(&self, z: &[ComplexAp], params: [&ComplexAp; 7], m: &[usize]) -> Result<ComplexAp> {
        let frame = self.frame_ref();
        let [a, b, c, d, e, f, g] = params;
        let q = frame.q();
        let aq = a * q;
        let big_m = m.iter().sum::<usize>() as i64;
        let cross: i64 = (0..m.len())
            .flat_map(|k| (0..k).map(move |j| (j, k)))
            .map(|(j, k)| m[j] as i64 * m[k] as i64)
            .sum();
        let aqg = self.div(&aq, g)?;
        let mut pre = &g.powi(big_m)? * &frame.q_pow(-cross);
        pre *= &self.poch_ratio(
            &[b.clone(), self.div(&aqg, c)?, self.div(&aqg, d)?],
            &[self.div(&aq, e)?, self.div(&aq, f)?, aqg.clone()],
            big_m as usize,
            "box prefactor",
        )?;
        for (k, zk) in z.iter().enumerate() {
            let mk = m[k] as i64;
            let up = frame.q_pow(1 + big_m - mk);
            let zeg = &(zk * e) * g;
            let zfg = &(zk * f) * g;
            pre *= &zk.powi(mk)?;
            pre *= &self.poch_ratio(
                &[&aq * zk, self.div(&(&up * a), &zeg)?, self.div(&(&up * a), &zfg)?],
                &[
                    self.div(&(&aq * zk), c)?,
                    self.div(&(&aq * zk), d)?,
                    self.div(&(&frame.q_pow(big_m - mk) * b), &(g * zk))?,
                ],
                m[k],
                "box prefactor",
            )?;
        }
        Ok(pre)
    }

    /// `Δ(1/z)/Δ(u) ∏_{j,k} (u_k z_j)_{m_k} / (q^{1+m_j} u_k z_j)_{m_k}`, which
    /// is the delta-ratio lemma's left side when `u_k = q^{-m_k}/z_k`.
    pub fn delta_lemma_lhs(&self, z: &[ComplexAp], u: &[ComplexAp], m: &[usize]) -> Result<ComplexAp> {
        let n = z.len();
        if u.len() != n || m.len() != n {
            return Err(Error::Argument(
                "delta lemma: z, u and m must have equal lengths".into(),
            ));
        }
        let frame = self.frame_ref();
        let z = self.lift_all(z);
        let u = self.lift_all(u);
        if z.iter().chain(&u).any(ComplexAp::is_zero) {
            return Err(Error::Domain("delta lemma points must be nonzero".into()));
        }
        // Δ(1/z)/Δ(u) = ∏_{j<k} (1/z_j) θ(z_j/z_k) / (u_j θ(u_k/u_j))
        let mut num = frame.one();
        let mut den = frame.one();
        for k in 0..n {
            for j in 0..k {
                num *= &self.theta(&self.div(&z[j], &z[k])?)?;
                let site = || format!("θ(u_{}/u_{})", k + 1, j + 1);
                den *= &self.den_theta(&self.div(&u[k], &u[j])?, &site)?;
                den *= &(&z[j] * &u[j]);
            }
        }
        for j in 0..n {
            for k in 0..n {
                let base = &u[k] * &z[j];
                num *= &self.num_row(base.clone(), m[k])?.get(self, m[k])?;
                let dbase = &frame.q_pow(1 + m[j] as i64) * &base;
                let label = format!("(q^{{1+m_{}}} u_{} z_{})", j + 1, k + 1, j + 1);
                den *= &self.den_row(dbase, m[k], label)?.get(self, m[k])?;
            }
        }
        self.count_term();
        divide(&num, &den, "delta lemma")
    }

    /// `(−1)^{|m|} q^{−|m|−C(|m|,2)}`.
    pub fn delta_lemma_rhs(&self, m: &[usize]) -> ComplexAp {
        let frame = self.frame_ref();
        let big_m = m.iter().sum::<usize>() as i64;
        let v = frame.q_pow(-big_m - big_m * (big_m - 1) / 2);
        self.count_term();
        if big_m % 2 == 1 {
            -v
        } else {
            v
        }
    }
}
