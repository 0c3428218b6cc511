//! Registry of the verifiable identities.
//!
//! Each identity has a parameter signature (free parameters drawn by the
//! sampler, a bound parameter solved from the identity's multiplicative
//! constraint) and a pair of evaluation recipes built from [`crate::series`].
//! The bound parameter is always the last parameter of the constraint as it
//! is usually written (`w_m`, `g`, `e`, ...).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::complex::ComplexAp;
use crate::error::{Error, Result};
use crate::series::{C3Params, C3Side, Evaluator, KajiharaParams};
use crate::theta::{NomeFrame, ThetaSource};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityId {
    ThetaInversion,
    PochSplit,
    PochReverse,
    PochInvert,
    FtTransform,
    IteratedBailey,
    AnJackson,
    Kajihara,
    SmRewrite,
    FcFamily,
    CsTransform,
    C3Transform,
    DeltaLemma,
}

impl IdentityId {
    pub const ALL: [IdentityId; 13] = [
        IdentityId::ThetaInversion,
        IdentityId::PochSplit,
        IdentityId::PochReverse,
        IdentityId::PochInvert,
        IdentityId::FtTransform,
        IdentityId::IteratedBailey,
        IdentityId::AnJackson,
        IdentityId::Kajihara,
        IdentityId::SmRewrite,
        IdentityId::FcFamily,
        IdentityId::CsTransform,
        IdentityId::C3Transform,
        IdentityId::DeltaLemma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IdentityId::ThetaInversion => "theta_inversion",
            IdentityId::PochSplit => "poch_split",
            IdentityId::PochReverse => "poch_reverse",
            IdentityId::PochInvert => "poch_invert",
            IdentityId::FtTransform => "ft_transform",
            IdentityId::IteratedBailey => "iterated_bailey",
            IdentityId::AnJackson => "an_jackson",
            IdentityId::Kajihara => "kajihara",
            IdentityId::SmRewrite => "sm_rewrite",
            IdentityId::FcFamily => "fc_family",
            IdentityId::CsTransform => "cs_transform",
            IdentityId::C3Transform => "c3_transform",
            IdentityId::DeltaLemma => "delta_lemma",
        }
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IdentityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IdentityId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown identity {s:?}")))
    }
}

/// Dimensions of an identity instance. Which fields matter depends on the
/// identity (see [`CatalogEntry::dims`]); unused fields are ignored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "N")]
    pub total: usize,
    pub mvec: Vec<usize>,
}

impl Dims {
    pub fn new(n: usize, m: usize, total: usize) -> Self {
        Dims {
            n,
            m,
            total,
            mvec: Vec::new(),
        }
    }

    /// Box dimensions; `n` is taken from the vector's length.
    pub fn boxed(mvec: Vec<usize>, total: usize) -> Self {
        Dims {
            n: mvec.len(),
            m: 0,
            total,
            mvec,
        }
    }

    pub fn mvec_total(&self) -> usize {
        self.mvec.iter().sum()
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} m={} N={}", self.n, self.m, self.total)?;
        if !self.mvec.is_empty() {
            let parts: Vec<String> = self.mvec.iter().map(usize::to_string).collect();
            write!(f, " mvec=({})", parts.join(","))?;
        }
        Ok(())
    }
}

/// Human-readable signature of one identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub id: IdentityId,
    pub name: &'static str,
    pub summary: &'static str,
    /// Which [`Dims`] fields the identity reads.
    pub dims: &'static str,
    pub free: &'static str,
    pub bound: &'static str,
    pub constraint: &'static str,
    /// Symbols computed from the parameters but never sampled.
    pub derived: &'static [&'static str],
}

pub fn catalog_list() -> Vec<CatalogEntry> {
    IdentityId::ALL.into_iter().map(entry).collect()
}

pub fn entry(id: IdentityId) -> CatalogEntry {
    let (summary, dims, free, bound, constraint, derived): (_, _, _, _, _, &'static [&'static str]) = match id {
        IdentityId::ThetaInversion => (
            "θ(y) = −θ(x)/x",
            "-",
            "x",
            "y",
            "x y = 1",
            &[],
        ),
        IdentityId::PochSplit => (
            "(a)_{n+k} = (a)_n (b)_k",
            "n, k := m",
            "a",
            "b",
            "b = a q^n",
            &[],
        ),
        IdentityId::PochReverse => (
            "(a)_{n−k} = (−1)^k q^{C(k,2)} c^k (a)_n / (c)_k",
            "n, k := m (k ≤ n)",
            "a",
            "c",
            "a c = q^{1−n}",
            &[],
        ),
        IdentityId::PochInvert => (
            "(a)_n = (−1)^n q^{C(n,2)} a^n (c)_n",
            "n",
            "a",
            "c",
            "a c = q^{1−n}",
            &[],
        ),
        IdentityId::FtTransform => (
            "E(a; q^{−N}, b, c, d, e, f, g) = (aq, aq/ef, λq/e, λq/f)_N / (aq/e, aq/f, λq, λq/ef)_N \
             E(λ; q^{−N}, λb/a, λc/a, λd/a, e, f, g)",
            "N",
            "a, b, c, d, e, f",
            "g",
            "bcdefg = a^3 q^{N+2}",
            &["λ = qa^2/bcd"],
        ),
        IdentityId::IteratedBailey => (
            "E(a; q^{−N}, b, …, g) = g^N (aq/cg, aq/dg, aq/eg, aq/fg, aq, b)_N / (aq/c, aq/d, aq/e, aq/f, aq/g, b/g)_N \
             E(gq^{−N}/b; q^{−N}, gq^{−N}/a, aq/bc, aq/bd, aq/be, aq/bf, g)",
            "N",
            "a, b, c, d, e, f",
            "g",
            "bcdefg = a^3 q^{N+2}",
            &[],
        ),
        IdentityId::AnJackson => (
            "A_n elliptic Jackson summation: simplex sum with m = 1 = ∏(w/a_j)_N / (∏(w z_j)_N (q)_N)",
            "n, N",
            "z_1..z_n, a_1..a_{n+1}",
            "w",
            "w = z_1⋯z_n a_1⋯a_{n+1}",
            &[],
        ),
        IdentityId::Kajihara => (
            "n-dimensional simplex sum in (z, w, a) = m-dimensional simplex sum in (w, z, 1/a)",
            "n, m ≥ 1, N",
            "z_1..z_n, a_1..a_{m+n}, w_1..w_{m−1}",
            "w_m",
            "w_1⋯w_m = z_1⋯z_n a_1⋯a_{m+n}",
            &[],
        ),
        IdentityId::SmRewrite => (
            "m = 2 simplex sum = prefactor × very-well-poised single sum over k = y_1",
            "n, N",
            "z_1..z_n, a_1..a_{n+2}, w_1",
            "w_2",
            "w_1 w_2 = z_1⋯z_n a_1⋯a_{n+2}",
            &[],
        ),
        IdentityId::FcFamily => (
            "m = 2 simplex sum in (z, a) = multiplier × the same sum in (x, b), level m of the substitution",
            "n, m ≤ n, N",
            "z_1..z_n, a_1..a_{n+2}, w_1",
            "w_2",
            "w_1 w_2 = z_1⋯z_n a_1⋯a_{n+2}",
            &["x, b by the level-m substitution", "multiplier ∏_{j≤n−m} (a_j z_j)^N (w1/a_j, w2/a_j)_N / (w1 z_j, w2 z_j)_N"],
        ),
        IdentityId::CsTransform => (
            "level m = 0 of the family with (a_{n+1}, a_{n+2}, w_1, w_2) = (b, c, d, e)",
            "n, N",
            "z_1..z_n, a_1..a_n, b, c, d",
            "e",
            "de = a_1⋯a_n b c z_1⋯z_n",
            &[],
        ),
        IdentityId::C3Transform => (
            "box sum over 0 ≤ y_k ≤ m_k, companion of cs_transform",
            "mvec (n = its length); N = 0 for generic b, N ≥ |m| for b = q^{−N}",
            "z_1..z_n, a, b (generic case), c, d, e, f",
            "g",
            "a^3 q^{|m|+2} = bcdefg",
            &[],
        ),
        IdentityId::DeltaLemma => (
            "Δ(1/z)/Δ(u) ∏_{j,k} (u_k z_j)_{m_k} / (q^{1+m_j} u_k z_j)_{m_k} = (−1)^{|m|} q^{−|m|−C(|m|,2)}",
            "mvec (n = its length)",
            "z_1..z_n",
            "u_1..u_n",
            "u_k z_k = q^{−m_k}",
            &[],
        ),
    };
    CatalogEntry {
        id,
        name: id.name(),
        summary,
        dims,
        free,
        bound,
        constraint,
        derived,
    }
}

/// Named parameter values of an instance.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params(BTreeMap<String, ComplexAp>);

impl Params {
    pub fn new() -> Self {
        Params::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: ComplexAp) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Result<&ComplexAp> {
        self.0
            .get(name)
            .ok_or_else(|| Error::Argument(format!("missing parameter {name}")))
    }

    /// `prefix1, …, prefix<len>`.
    pub fn vec(&self, prefix: &str, len: usize) -> Result<Vec<ComplexAp>> {
        (1..=len).map(|i| self.get(&format!("{prefix}{i}")).cloned()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ComplexAp)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn get_mut(&mut self, name: &str) -> Result<&mut ComplexAp> {
        self.0
            .get_mut(name)
            .ok_or_else(|| Error::Argument(format!("missing parameter {name}")))
    }
}

fn seq(prefix: &str, len: usize) -> impl Iterator<Item = String> + '_ {
    (1..=len).map(move |i| format!("{prefix}{i}"))
}

/// Checks that `dims` make sense for `id`.
pub fn validate_dims(id: IdentityId, dims: &Dims) -> Result<()> {
    let fail = |msg: String| Err(Error::Argument(format!("{id}: {msg}")));
    match id {
        IdentityId::PochReverse if dims.m > dims.n => fail(format!("k = {} exceeds n = {}", dims.m, dims.n)),
        IdentityId::AnJackson | IdentityId::SmRewrite | IdentityId::CsTransform if dims.n == 0 => {
            fail("n must be at least 1".into())
        }
        IdentityId::Kajihara if dims.n == 0 || dims.m == 0 => fail("n and m must be at least 1".into()),
        IdentityId::FcFamily if dims.n == 0 => fail("n must be at least 1".into()),
        IdentityId::FcFamily if dims.m > dims.n => fail(format!("level m = {} exceeds n = {}", dims.m, dims.n)),
        IdentityId::C3Transform | IdentityId::DeltaLemma if dims.mvec.is_empty() => {
            fail("an m-vector with at least one entry is required".into())
        }
        IdentityId::C3Transform if dims.total > 0 && dims.total < dims.mvec_total() => fail(format!(
            "lattice case b = q^-N needs N ≥ |m| = {}, got N = {}",
            dims.mvec_total(),
            dims.total
        )),
        _ => Ok(()),
    }
}

fn c3_lattice(dims: &Dims) -> bool {
    dims.total > 0
}

/// Names of the free parameters, in sampling order.
pub fn free_names(id: IdentityId, dims: &Dims) -> Vec<String> {
    let n = dims.n;
    let letters = |l: &[&str]| l.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match id {
        IdentityId::ThetaInversion => letters(&["x"]),
        IdentityId::PochSplit | IdentityId::PochReverse | IdentityId::PochInvert => letters(&["a"]),
        IdentityId::FtTransform | IdentityId::IteratedBailey => letters(&["a", "b", "c", "d", "e", "f"]),
        IdentityId::AnJackson => seq("z", n).chain(seq("a", n + 1)).collect(),
        IdentityId::Kajihara => seq("z", n)
            .chain(seq("a", n + dims.m))
            .chain(seq("w", dims.m.saturating_sub(1)))
            .collect(),
        IdentityId::SmRewrite | IdentityId::FcFamily => seq("z", n)
            .chain(seq("a", n + 2))
            .chain(std::iter::once("w1".to_string()))
            .collect(),
        IdentityId::CsTransform => seq("z", n)
            .chain(seq("a", n))
            .chain(letters(&["b", "c", "d"]))
            .collect(),
        IdentityId::C3Transform => {
            let scalars: &[&str] = if c3_lattice(dims) {
                &["a", "c", "d", "e", "f"]
            } else {
                &["a", "b", "c", "d", "e", "f"]
            };
            seq("z", dims.mvec.len()).chain(letters(scalars)).collect()
        }
        IdentityId::DeltaLemma => seq("z", dims.mvec.len()).collect(),
    }
}

/// Names of the bound parameters; the last one is the one a constraint
/// perturbation acts on.
pub fn bound_names(id: IdentityId, dims: &Dims) -> Vec<String> {
    let one = |s: &str| vec![s.to_string()];
    match id {
        IdentityId::ThetaInversion => one("y"),
        IdentityId::PochSplit => one("b"),
        IdentityId::PochReverse | IdentityId::PochInvert => one("c"),
        IdentityId::FtTransform | IdentityId::IteratedBailey | IdentityId::C3Transform => {
            let mut v = one("g");
            if id == IdentityId::C3Transform && c3_lattice(dims) {
                v.insert(0, "b".into());
            }
            v
        }
        IdentityId::AnJackson => one("w"),
        IdentityId::Kajihara => one(&format!("w{}", dims.m)),
        IdentityId::SmRewrite | IdentityId::FcFamily => one("w2"),
        IdentityId::CsTransform => one("e"),
        IdentityId::DeltaLemma => seq("u", dims.mvec.len()).collect(),
    }
}

/// A fully resolved, constraint-satisfying parameter assignment.
#[derive(Clone, Debug)]
pub struct IdentityInstance {
    id: IdentityId,
    dims: Dims,
    frame: NomeFrame,
    free: Params,
    params: Params,
    perturbation: Option<f64>,
    seed: Option<u64>,
}

impl IdentityInstance {
    pub fn id(&self) -> IdentityId {
        self.id
    }

    pub fn dims(&self) -> &Dims {
        &self.dims
    }

    pub fn frame(&self) -> &NomeFrame {
        &self.frame
    }

    pub fn free(&self) -> &Params {
        &self.free
    }

    /// Free and bound parameters together.
    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn perturbation(&self) -> Option<f64> {
        self.perturbation
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Multiplies the last bound parameter by `1 + eps` after resolution. The
    /// instance then violates its constraint by a relative `eps`.
    pub fn perturbed(&self, eps: f64) -> Result<Self> {
        let mut out = self.clone();
        let bound = bound_names(self.id, &self.dims)
            .pop()
            .ok_or_else(|| Error::Argument("identity has no bound parameter".into()))?;
        let mut factor = Float::with_val(self.frame.work_bits(), eps);
        factor += 1;
        *out.params.get_mut(&bound)? *= &factor;
        out.perturbation = Some(self.perturbation.unwrap_or(0.0) + eps);
        Ok(out)
    }

    /// Re-resolves the same free parameters (and perturbation) at another precision.
    pub fn with_precision(&self, precision: u32) -> Result<Self> {
        let frame = self.frame.with_precision(precision)?;
        let mut out = resolve_constraint(self.id, self.free.clone(), &self.dims, &frame)?;
        out.seed = self.seed;
        match self.perturbation {
            Some(eps) => out.perturbed(eps),
            None => Ok(out),
        }
    }

    /// `max |constraint_lhs / constraint_rhs − 1|` over the identity's constraints.
    pub fn constraint_residual(&self) -> Result<Float> {
        let f = &self.frame;
        let mut worst = Float::new(f.work_bits());
        for (lhs, rhs) in constraint_sides(self.id, &self.params, &self.dims, f)? {
            let r = (&lhs.checked_div(&rhs)? - &f.one()).abs();
            if r > worst {
                worst = r;
            }
        }
        Ok(worst)
    }
}

fn product(frame: &NomeFrame, values: &[ComplexAp]) -> ComplexAp {
    let mut acc = frame.one();
    for v in values {
        acc *= &frame.lift(v);
    }
    acc
}

fn cube(x: &ComplexAp) -> ComplexAp {
    &(x * x) * x
}

/// Both sides of every multiplicative constraint of `id`.
fn constraint_sides(id: IdentityId, p: &Params, dims: &Dims, f: &NomeFrame) -> Result<Vec<(ComplexAp, ComplexAp)>> {
    let n = dims.n;
    let g = |s: &str| p.get(s).map(|v| f.lift(v));
    let v = |s: &str, len: usize| p.vec(s, len);
    let sides = match id {
        IdentityId::ThetaInversion => vec![(&g("x")? * &g("y")?, f.one())],
        IdentityId::PochSplit => vec![(g("b")?, &g("a")? * &f.q_pow(n as i64))],
        IdentityId::PochReverse | IdentityId::PochInvert => {
            vec![(&g("a")? * &g("c")?, f.q_pow(1 - n as i64))]
        }
        IdentityId::FtTransform | IdentityId::IteratedBailey => {
            let lhs = product(f, &[g("b")?, g("c")?, g("d")?, g("e")?, g("f")?, g("g")?]);
            vec![(lhs, &cube(&g("a")?) * &f.q_pow(dims.total as i64 + 2))]
        }
        IdentityId::C3Transform => {
            let lhs = product(f, &[g("b")?, g("c")?, g("d")?, g("e")?, g("f")?, g("g")?]);
            let mut sides = vec![(lhs, &cube(&g("a")?) * &f.q_pow(dims.mvec_total() as i64 + 2))];
            if c3_lattice(dims) {
                sides.push((g("b")?, f.q_pow(-(dims.total as i64))));
            }
            sides
        }
        IdentityId::AnJackson => {
            let rhs = &product(f, &v("z", n)?) * &product(f, &v("a", n + 1)?);
            vec![(g("w")?, rhs)]
        }
        IdentityId::Kajihara => {
            let rhs = &product(f, &v("z", n)?) * &product(f, &v("a", n + dims.m)?);
            vec![(product(f, &v("w", dims.m)?), rhs)]
        }
        IdentityId::SmRewrite | IdentityId::FcFamily => {
            let rhs = &product(f, &v("z", n)?) * &product(f, &v("a", n + 2)?);
            vec![(&g("w1")? * &g("w2")?, rhs)]
        }
        IdentityId::CsTransform => {
            let mut all = v("z", n)?;
            all.extend(v("a", n)?);
            all.push(g("b")?);
            all.push(g("c")?);
            vec![(&g("d")? * &g("e")?, product(f, &all))]
        }
        IdentityId::DeltaLemma => {
            let k = dims.mvec.len();
            let z = v("z", k)?;
            let u = v("u", k)?;
            (0..k)
                .map(|i| (&f.lift(&u[i]) * &f.lift(&z[i]), f.q_pow(-(dims.mvec[i] as i64))))
                .collect()
        }
    };
    Ok(sides)
}

/// Solves the constraint of `id` for its bound parameter(s) and returns a
/// validated instance.
pub fn resolve_constraint(id: IdentityId, free: Params, dims: &Dims, frame: &NomeFrame) -> Result<IdentityInstance> {
    validate_dims(id, dims)?;
    let mut dims = dims.clone();
    if matches!(id, IdentityId::C3Transform | IdentityId::DeltaLemma) {
        dims.n = dims.mvec.len();
    }
    let dims = dims;
    let f = frame;
    let names = free_names(id, &dims);
    let mut lifted = Params::new();
    for name in &names {
        let value = free.get(name)?;
        if value.is_zero() {
            return Err(Error::Argument(format!("free parameter {name} is zero")));
        }
        lifted.insert(name.clone(), f.lift(value));
    }
    let free = lifted;
    let n = dims.n;
    let g = |s: &str| free.get(s).cloned();
    let v = |s: &str, len: usize| free.vec(s, len);
    let unresolvable = |e: Error| match e {
        Error::Domain(msg) => Error::Argument(format!("{id}: constraint unresolvable ({msg})")),
        other => other,
    };
    let mut params = free.clone();
    let solve_g = |mexp: usize, b: ComplexAp| -> Result<ComplexAp> {
        let den = product(f, &[b, g("c")?, g("d")?, g("e")?, g("f")?]);
        (&cube(&g("a")?) * &f.q_pow(mexp as i64 + 2))
            .checked_div(&den)
            .map_err(unresolvable)
    };
    match id {
        IdentityId::ThetaInversion => params.insert("y", g("x")?.recip().map_err(unresolvable)?),
        IdentityId::PochSplit => params.insert("b", &g("a")? * &f.q_pow(n as i64)),
        IdentityId::PochReverse | IdentityId::PochInvert => {
            params.insert("c", f.q_pow(1 - n as i64).checked_div(&g("a")?).map_err(unresolvable)?)
        }
        IdentityId::FtTransform | IdentityId::IteratedBailey => params.insert("g", solve_g(dims.total, g("b")?)?),
        IdentityId::C3Transform => {
            let b = if c3_lattice(&dims) {
                let b = f.q_pow(-(dims.total as i64));
                params.insert("b", b.clone());
                b
            } else {
                g("b")?
            };
            params.insert("g", solve_g(dims.mvec_total(), b)?);
        }
        IdentityId::AnJackson => {
            params.insert("w", &product(f, &v("z", n)?) * &product(f, &v("a", n + 1)?));
        }
        IdentityId::Kajihara => {
            let num = &product(f, &v("z", n)?) * &product(f, &v("a", n + dims.m)?);
            let w = num
                .checked_div(&product(f, &v("w", dims.m - 1)?))
                .map_err(unresolvable)?;
            params.insert(format!("w{}", dims.m), w);
        }
        IdentityId::SmRewrite | IdentityId::FcFamily => {
            let num = &product(f, &v("z", n)?) * &product(f, &v("a", n + 2)?);
            params.insert("w2", num.checked_div(&g("w1")?).map_err(unresolvable)?);
        }
        IdentityId::CsTransform => {
            let mut all = v("z", n)?;
            all.extend(v("a", n)?);
            all.push(g("b")?);
            all.push(g("c")?);
            params.insert("e", product(f, &all).checked_div(&g("d")?).map_err(unresolvable)?);
        }
        IdentityId::DeltaLemma => {
            for (i, zk) in v("z", n)?.iter().enumerate() {
                let u = f.q_pow(-(dims.mvec[i] as i64)).checked_div(zk).map_err(unresolvable)?;
                params.insert(format!("u{}", i + 1), u);
            }
        }
    }
    for name in bound_names(id, &dims) {
        let value = params.get(&name)?;
        if value.is_zero() || !value.is_finite() {
            return Err(Error::Argument(format!(
                "{id}: bound parameter {name} is zero or not finite"
            )));
        }
    }
    let instance = IdentityInstance {
        id,
        dims,
        frame: frame.clone(),
        free,
        params,
        perturbation: None,
        seed: None,
    };
    let residual = instance.constraint_residual()?;
    let tol = Float::with_val(64, Float::i_exp(1, -(frame.precision() as i32 - 8)));
    if residual >= tol {
        return Err(Error::InternalConsistency(format!(
            "{id}: resolved constraint residual {} exceeds tolerance",
            residual.to_f64()
        )));
    }
    Ok(instance)
}

/// Both sides of an identity and the number of summation terms on each.
#[derive(Clone, Debug, PartialEq)]
pub struct Sides {
    pub lhs: ComplexAp,
    pub rhs: ComplexAp,
    pub terms_lhs: usize,
    pub terms_rhs: usize,
}

/// Evaluates both sides through the reference path.
pub fn evaluate_sides(instance: &IdentityInstance) -> Result<Sides> {
    evaluate_sides_with(instance, &Evaluator::new(instance.frame()))
}

/// Evaluates both sides with a caller-configured evaluator; the evaluator's
/// frame must be the instance's.
pub fn evaluate_sides_with(instance: &IdentityInstance, ev: &Evaluator) -> Result<Sides> {
    let id = instance.id;
    let result = evaluate_inner(instance, ev);
    result.map_err(|e| match e {
        Error::Singular(s) => Error::Singular(format!("{id}: {s}")),
        other => other,
    })
}

fn evaluate_inner(instance: &IdentityInstance, ev: &Evaluator) -> Result<Sides> {
    let f = ev.frame_ref();
    let p = &instance.params;
    let dims = &instance.dims;
    let n = dims.n;
    let total = dims.total;
    let g = |s: &str| p.get(s).map(|v| f.lift(v));
    let v = |s: &str, len: usize| p.vec(s, len);
    ev.take_terms();

    let mut lhs_terms = 0;
    let mut side = |value: Result<ComplexAp>| -> Result<ComplexAp> {
        let value = value?;
        lhs_terms = ev.take_terms().max(1);
        Ok(value)
    };

    let (lhs, rhs) = match instance.id {
        IdentityId::ThetaInversion => {
            let x = g("x")?;
            let lhs = side(ev.theta(&g("y")?))?;
            let rhs = -(ev.theta(&x)?.checked_div(&x)?);
            (lhs, rhs)
        }
        IdentityId::PochSplit => {
            let k = dims.m;
            let lhs = side(ev.poch(&g("a")?, n + k))?;
            let rhs = &ev.poch(&g("a")?, n)? * &ev.poch(&g("b")?, k)?;
            (lhs, rhs)
        }
        IdentityId::PochReverse => {
            let k = dims.m;
            let a = g("a")?;
            let c = g("c")?;
            let lhs = side(ev.poch(&a, n - k))?;
            let mut rhs = &sign_q_binom(f, k) * &c.powi(k as i64)?;
            rhs *= &ev.poch(&a, n)?;
            let den = ev.den_poch(&c, k, "(q^{1-n}/a)_k")?;
            (lhs, rhs.checked_div(&den)?)
        }
        IdentityId::PochInvert => {
            let a = g("a")?;
            let lhs = side(ev.poch(&a, n))?;
            let mut rhs = &sign_q_binom(f, n) * &a.powi(n as i64)?;
            rhs *= &ev.poch(&g("c")?, n)?;
            (lhs, rhs)
        }
        IdentityId::FtTransform | IdentityId::IteratedBailey => {
            let a = g("a")?;
            let rest = [g("b")?, g("c")?, g("d")?, g("e")?, g("f")?, g("g")?];
            let lhs = side(ev.e_series(&a, &rest, total))?;
            let rhs = if instance.id == IdentityId::FtTransform {
                ev.frenkel_turaev_rhs(&a, &rest, total)?
            } else {
                ev.iterated_bailey_rhs(&a, &rest, total)?
            };
            (lhs, rhs)
        }
        IdentityId::AnJackson => {
            let z = v("z", n)?;
            let a = v("a", n + 1)?;
            let w = g("w")?;
            let kp = KajiharaParams::new(z.clone(), vec![w.clone()], a.clone(), total)?;
            let lhs = side(ev.kajihara_sum(&kp))?;
            (lhs, ev.jackson_rhs(&z, &a, &w, total)?)
        }
        IdentityId::Kajihara => {
            let kp = KajiharaParams::new(v("z", n)?, v("w", dims.m)?, v("a", n + dims.m)?, total)?;
            let lhs = side(ev.kajihara_sum(&kp))?;
            (lhs, ev.kajihara_sum(&kp.swapped())?)
        }
        IdentityId::SmRewrite => {
            let (z, a, w1, w2) = (v("z", n)?, v("a", n + 2)?, g("w1")?, g("w2")?);
            let kp = KajiharaParams::new(z.clone(), vec![w1.clone(), w2.clone()], a.clone(), total)?;
            let lhs = side(ev.kajihara_sum(&kp))?;
            (lhs, ev.sm_rhs(&z, &a, &w1, &w2, total)?)
        }
        IdentityId::FcFamily | IdentityId::CsTransform => {
            let (z, a, w1, w2) = if instance.id == IdentityId::FcFamily {
                (v("z", n)?, v("a", n + 2)?, g("w1")?, g("w2")?)
            } else {
                let mut a = v("a", n)?;
                a.push(g("b")?);
                a.push(g("c")?);
                (v("z", n)?, a, g("d")?, g("e")?)
            };
            let level = if instance.id == IdentityId::FcFamily { dims.m } else { 0 };
            let w = vec![w1.clone(), w2.clone()];
            let kp = KajiharaParams::new(z.clone(), w.clone(), a.clone(), total)?;
            let lhs = side(ev.kajihara_sum(&kp))?;
            let image = ev.fc_transform(&z, &a, &w1, &w2, total, level)?;
            ev.take_terms();
            let image_params = KajiharaParams::new(image.x, w, image.b, total)?;
            (lhs, &image.prefactor * &ev.kajihara_sum(&image_params)?)
        }
        IdentityId::C3Transform => {
            let params = c3_params(p, dims, f)?;
            let lhs = side(ev.c3_side(&params, C3Side::Left))?;
            (lhs, ev.c3_side(&params, C3Side::Right)?)
        }
        IdentityId::DeltaLemma => {
            let k = dims.mvec.len();
            let lhs = side(ev.delta_lemma_lhs(&v("z", k)?, &v("u", k)?, &dims.mvec))?;
            (lhs, ev.delta_lemma_rhs(&dims.mvec))
        }
    };
    let terms_rhs = ev.take_terms().max(1);
    Ok(Sides {
        lhs,
        rhs,
        terms_lhs: lhs_terms,
        terms_rhs,
    })
}

pub(crate) fn c3_params(p: &Params, dims: &Dims, f: &NomeFrame) -> Result<C3Params> {
    let g = |s: &str| p.get(s).map(|v| f.lift(v));
    Ok(C3Params {
        z: p.vec("z", dims.mvec.len())?,
        a: g("a")?,
        b: g("b")?,
        c: g("c")?,
        d: g("d")?,
        e: g("e")?,
        f: g("f")?,
        g: g("g")?,
        m: dims.mvec.clone(),
    })
}

/// `(−1)^k q^{C(k,2)}`.
fn sign_q_binom(f: &NomeFrame, k: usize) -> ComplexAp {
    let k = k as i64;
    let v = f.q_pow(k * (k - 1) / 2);
    if k % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Maps an n = m = 2 `kajihara` instance onto the `iterated_bailey` instance
/// its two sides reduce to. Returns the mapped instance together with the
/// scale `C` such that the Kajihara left side equals `C · E(...)`:
///
/// ```text
/// a = q^{−N} z_1/z_2,  b = q^{1−N}/(w_1 z_2),  (c, d, e, f) = (a_1 z_1, …, a_4 z_1),
/// g = q^{1−N}/(w_2 z_2),
/// C = q^N θ(a)/θ(aq^N) ∏_j (a_j z_2)_N / ((w_1 z_2, w_2 z_2, q z_2/z_1, q)_N).
/// ```
pub fn kajihara_to_iterated_bailey(instance: &IdentityInstance) -> Result<(IdentityInstance, ComplexAp)> {
    let dims = instance.dims();
    if instance.id() != IdentityId::Kajihara || dims.n != 2 || dims.m != 2 {
        return Err(Error::Argument(
            "the iterated Bailey dictionary applies to kajihara instances with n = m = 2".into(),
        ));
    }
    let f = instance.frame();
    let p = instance.params();
    let total = dims.total;
    let big_n = total as i64;
    let lift = |s: &str| p.get(s).map(|v| f.lift(v));
    let (z1, z2, w1, w2) = (lift("z1")?, lift("z2")?, lift("w1")?, lift("w2")?);
    let a = p.vec("a", 4)?;

    let alpha = (&f.q_pow(-big_n) * &z1).checked_div(&z2)?;
    let mut free = Params::new();
    free.insert("a", alpha.clone());
    free.insert("b", f.q_pow(1 - big_n).checked_div(&(&w1 * &z2))?);
    for (name, aj) in ["c", "d", "e", "f"].iter().zip(&a) {
        free.insert(*name, &f.lift(aj) * &z1);
    }
    let mapped = resolve_constraint(IdentityId::IteratedBailey, free, &Dims::new(0, 0, total), f)?;

    let ev = Evaluator::new(f);
    let mut scale = f.q_pow(big_n);
    scale *= &ev.theta(&alpha)?;
    scale = scale.checked_div(&ev.theta(&(&alpha * &f.q_pow(big_n)))?)?;
    let nums: Vec<ComplexAp> = a.iter().map(|aj| &f.lift(aj) * &z2).collect();
    let dens = vec![&w1 * &z2, &w2 * &z2, (f.q() * &z2).checked_div(&z1)?, f.q().clone()];
    scale *= &ev.poch_ratio(&nums, &dens, total, "dictionary scale")?;
    Ok((mapped, scale))
}

impl Evaluator {
    /// Numerator Pochhammer symbol through this evaluator.
    pub fn poch(&self, base: &ComplexAp, len: usize) -> Result<ComplexAp> {
        self.num_row(base.clone(), len)?.get(self, len)
    }

    /// Denominator Pochhammer symbol; vanishing factors are singular.
    pub fn den_poch(&self, base: &ComplexAp, len: usize, label: &str) -> Result<ComplexAp> {
        self.den_row(base.clone(), len, label.to_string())?.get(self, len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame() -> NomeFrame {
        NomeFrame::from_f64(0.2, (0.6, 0.3), 128).unwrap()
    }

    #[test]
    fn thirteen_entries_with_stable_names() {
        let list = catalog_list();
        assert_eq!(list.len(), 13);
        for e in &list {
            assert_eq!(e.name.parse::<IdentityId>().unwrap(), e.id);
            assert_eq!(serde_json::to_string(&e.id).unwrap(), format!("\"{}\"", e.name));
        }
        assert!("nonsense".parse::<IdentityId>().is_err());
    }

    #[test]
    fn kajihara_and_ft_signatures() {
        let k = entry(IdentityId::Kajihara);
        assert_eq!(k.free, "z_1..z_n, a_1..a_{m+n}, w_1..w_{m−1}");
        assert_eq!(k.bound, "w_m");
        let ft = entry(IdentityId::FtTransform);
        assert!(ft.derived.contains(&"λ = qa^2/bcd"));
        assert_eq!(
            free_names(IdentityId::Kajihara, &Dims::new(2, 3, 1)),
            ["z1", "z2", "a1", "a2", "a3", "a4", "a5", "w1", "w2"]
        );
        assert_eq!(bound_names(IdentityId::Kajihara, &Dims::new(2, 3, 1)), ["w3"]);
    }

    #[test]
    fn kajihara_n1_m1_bound_is_z_a1_a2() {
        let f = frame();
        let mut free = Params::new();
        let (z, a1, a2) = (f.scalar(0.7, 0.2), f.scalar(1.1, -0.4), f.scalar(-0.6, 0.9));
        free.insert("z1", z.clone());
        free.insert("a1", a1.clone());
        free.insert("a2", a2.clone());
        let inst = resolve_constraint(IdentityId::Kajihara, free, &Dims::new(1, 1, 2), &f).unwrap();
        let expected = &(&z * &a1) * &a2;
        assert_eq!(inst.params().get("w1").unwrap(), &expected);
    }

    #[test]
    fn c3_with_zero_box_solves_g_from_q_squared() {
        let f = frame();
        let mut free = Params::new();
        for (i, name) in ["z1", "a", "b", "c", "d", "e", "f"].iter().enumerate() {
            free.insert(*name, f.scalar(0.5 + 0.1 * i as f64, 0.3));
        }
        let inst = resolve_constraint(IdentityId::C3Transform, free.clone(), &Dims::boxed(vec![0], 0), &f).unwrap();
        let get = |s: &str| free.get(s).unwrap().clone();
        let den = product(&f, &[get("b"), get("c"), get("d"), get("e"), get("f")]);
        let expected = (&cube(&get("a")) * &f.q_pow(2)).checked_div(&den).unwrap();
        assert_eq!(inst.params().get("g").unwrap(), &expected);
    }

    #[test]
    fn missing_or_zero_free_parameters_are_rejected() {
        let f = frame();
        let err = resolve_constraint(IdentityId::ThetaInversion, Params::new(), &Dims::default(), &f);
        assert!(matches!(err, Err(Error::Argument(_))));
        let mut free = Params::new();
        free.insert("x", f.zero());
        assert!(resolve_constraint(IdentityId::ThetaInversion, free, &Dims::default(), &f).is_err());
    }

    #[test]
    fn dims_validation() {
        assert!(validate_dims(IdentityId::Kajihara, &Dims::new(2, 0, 1)).is_err());
        assert!(validate_dims(IdentityId::FcFamily, &Dims::new(2, 3, 1)).is_err());
        assert!(validate_dims(IdentityId::PochReverse, &Dims::new(2, 3, 0)).is_err());
        assert!(validate_dims(IdentityId::C3Transform, &Dims::boxed(vec![], 0)).is_err());
        assert!(validate_dims(IdentityId::C3Transform, &Dims::boxed(vec![2, 2], 3)).is_err());
        assert!(validate_dims(IdentityId::C3Transform, &Dims::boxed(vec![2, 2], 4)).is_ok());
    }

    #[test]
    fn perturbation_moves_only_the_last_bound_parameter() {
        let f = NomeFrame::from_f64(0.2, (0.6, 0.3), 256).unwrap();
        let mut free = Params::new();
        free.insert("z1", f.scalar(0.7, 0.2));
        free.insert("z2", f.scalar(-0.9, 0.5));
        let inst = resolve_constraint(IdentityId::DeltaLemma, free, &Dims::boxed(vec![1, 2], 0), &f).unwrap();
        let pert = inst.perturbed(1e-30).unwrap();
        assert_eq!(pert.params().get("u1").unwrap(), inst.params().get("u1").unwrap());
        assert_ne!(pert.params().get("u2").unwrap(), inst.params().get("u2").unwrap());
        let r = pert.constraint_residual().unwrap().to_f64();
        assert!(r > 0.9e-30 && r < 1.1e-30, "{r}");
    }
}
