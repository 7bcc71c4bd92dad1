//! Arithmetic in the fuzzy sphere algebra `C_λ[S²]`.
//!
//! Elements are stored on the canonical normal-ordered basis
//! `x1^a x2^b x3^c` with `c <= 1`. Products are brought to canonical form by
//! moving generators left past each other with `[x_i, x_j] = 2iλ ε_ijk x_k`
//! and eliminating `x3²` through `x3² = (1 - λ²) - x1² - x2²`. Both rewrites
//! strictly decrease a well-founded measure, so canonicalization terminates.
//!
//! Structure constants (left multiplication by a generator, products of basis
//! monomials, the star of a monomial) are memoized per [`FuzzySphere`] behind
//! read/write locks and may be shared across threads.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default numerical tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

const ONE: C64 = C64::new(1.0, 0.0);

/// Deformation parameter, truncation degree and tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub lambda_p: f64,
    #[serde(rename = "L")]
    pub truncation: usize,
    pub tol: f64,
}

impl Parameters {
    pub fn new(lambda_p: f64, truncation: usize, tol: f64) -> Result<Self> {
        if !lambda_p.is_finite() || lambda_p == 0.0 {
            return Err(Error::InvalidParameters(format!(
                "lambda_p must be finite and nonzero, got {lambda_p}"
            )));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "tol must be positive, got {tol}"
            )));
        }
        Ok(Self {
            lambda_p,
            truncation,
            tol,
        })
    }

    /// Value of the Casimir `Σ x_i²`, i.e. `1 - λ_p²`.
    pub fn casimir(&self) -> f64 {
        1.0 - self.lambda_p * self.lambda_p
    }

    /// Coefficients below this magnitude are dropped from results.
    pub fn prune_threshold(&self) -> f64 {
        1e-3 * self.tol
    }
}

/// Canonical monomial `x1^a x2^b x3^c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial {
    pub a: u32,
    pub b: u32,
    pub c: u32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { a: 0, b: 0, c: 0 };

    pub fn new(a: u32, b: u32, c: u32) -> Result<Self> {
        if c > 1 {
            return Err(Error::NonCanonicalMonomial { a, b, c });
        }
        Ok(Self { a, b, c })
    }

    pub fn degree(&self) -> usize {
        (self.a + self.b + self.c) as usize
    }

    fn key(&self) -> (usize, u32, Reverse<u32>) {
        (self.degree(), self.c, Reverse(self.a))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree() == 0 {
            return write!(f, "1");
        }
        let mut first = true;
        for (name, e) in [("x1", self.a), ("x2", self.b), ("x3", self.c)] {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Canonical monomials of total degree exactly `d`, in basis order.
pub fn monomials_of_degree(d: usize) -> Vec<Monomial> {
    let d = d as u32;
    let mut out = Vec::with_capacity(2 * d as usize + 1);
    for c in 0..=d.min(1) {
        for a in (0..=d - c).rev() {
            out.push(Monomial { a, b: d - c - a, c });
        }
    }
    out
}

/// The canonical basis up to degree `max_degree`; it has `(max_degree + 1)²` elements.
pub fn canonical_basis(max_degree: usize) -> Vec<Monomial> {
    (0..=max_degree).flat_map(monomials_of_degree).collect()
}

/// Element with uniformly random complex coefficients in the unit square on
/// every canonical monomial of degree at most `max_degree`.
pub fn random_element<R: Rng + ?Sized>(params: Parameters, max_degree: usize, rng: &mut R) -> AlgebraElement {
    AlgebraElement::from_terms_unchecked(
        params,
        canonical_basis(max_degree)
            .into_iter()
            .map(|m| (m, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))),
    )
}

type Terms = Vec<(Monomial, C64)>;

fn accumulate(acc: &mut HashMap<Monomial, C64>, terms: &[(Monomial, C64)], scale: C64) {
    for (m, z) in terms {
        *acc.entry(*m).or_insert(C64::new(0.0, 0.0)) += scale * z;
    }
}

fn collect_terms(acc: HashMap<Monomial, C64>) -> Terms {
    let mut out: Terms = acc.into_iter().filter(|(_, z)| *z != C64::new(0.0, 0.0)).collect();
    out.sort_by_key(|x| x.0);
    out
}

/// JSON record for one term of an [`AlgebraElement`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub re: f64,
    pub im: f64,
}

/// Finite linear combination of canonical monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    params: Parameters,
    terms: BTreeMap<Monomial, C64>,
}

impl AlgebraElement {
    pub fn zero(params: Parameters) -> Self {
        Self {
            params,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(params: Parameters, z: C64) -> Self {
        Self::from_terms_unchecked(params, [(Monomial::ONE, z)])
    }

    pub fn one(params: Parameters) -> Self {
        Self::scalar(params, ONE)
    }

    pub fn monomial(params: Parameters, m: Monomial) -> Result<Self> {
        Self::from_terms(params, [(m, ONE)])
    }

    /// Builds an element, rejecting non-canonical monomials and degrees above `L`.
    pub fn from_terms<I>(params: Parameters, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Monomial, C64)>,
    {
        let el = Self::from_terms_unchecked(params, terms);
        for m in el.terms.keys() {
            if m.c > 1 {
                return Err(Error::NonCanonicalMonomial {
                    a: m.a,
                    b: m.b,
                    c: m.c,
                });
            }
        }
        el.check_truncation()?;
        Ok(el)
    }

    pub(crate) fn from_terms_unchecked<I>(params: Parameters, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, C64)>,
    {
        let mut map = BTreeMap::new();
        for (m, z) in terms {
            *map.entry(m).or_insert(C64::new(0.0, 0.0)) += z;
        }
        let mut el = Self { params, terms: map };
        el.prune();
        el
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> C64 {
        self.terms.get(m).copied().unwrap_or_default()
    }

    /// Highest degree carrying a coefficient above `tol`.
    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .filter(|(_, z)| z.norm() > self.params.tol)
            .map(|(m, _)| m.degree())
            .max()
            .unwrap_or(0)
    }

    /// Largest coefficient magnitude.
    pub fn max_norm(&self) -> f64 {
        self.terms.values().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &AlgebraElement) -> f64 {
        let mut diff = 0.0f64;
        for (m, z) in &self.terms {
            diff = diff.max((z - other.coefficient(m)).norm());
        }
        for (m, z) in &other.terms {
            if !self.terms.contains_key(m) {
                diff = diff.max(z.norm());
            }
        }
        diff
    }

    pub fn is_zero_within(&self, tol: f64) -> bool {
        self.max_norm() <= tol
    }

    pub fn conj_coefficients(&self) -> Self {
        Self {
            params: self.params,
            terms: self.terms.iter().map(|(m, z)| (*m, z.conj())).collect(),
        }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self::from_terms_unchecked(self.params, self.terms.iter().map(|(m, w)| (*m, z * w)))
    }

    pub(crate) fn check_truncation(&self) -> Result<()> {
        let degree = self.degree();
        if degree > self.params.truncation {
            return Err(Error::TruncationOverflow {
                degree,
                cap: self.params.truncation,
            });
        }
        Ok(())
    }

    fn prune(&mut self) {
        let threshold = self.params.prune_threshold();
        self.terms.retain(|_, z| z.norm() > threshold);
    }

    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|(m, z)| TermRecord {
                a: m.a,
                b: m.b,
                c: m.c,
                re: z.re,
                im: z.im,
            })
            .collect()
    }

    pub fn from_records(params: Parameters, records: &[TermRecord]) -> Result<Self> {
        let terms = records
            .iter()
            .map(|r| Monomial::new(r.a, r.b, r.c).map(|m| (m, C64::new(r.re, r.im))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(params, terms)
    }

    fn assert_same_params(&self, other: &Self) {
        assert!(
            self.params == other.params,
            "algebra elements with different parameters combined"
        );
    }
}

impl fmt::Display for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, z)| format!("({:.6}{:+.6}i) {}", z.re, z.im, m))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.assert_same_params(rhs);
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: AlgebraElement) -> AlgebraElement {
        &self + &rhs
    }
}

impl AddAssign<&AlgebraElement> for AlgebraElement {
    fn add_assign(&mut self, rhs: &AlgebraElement) {
        self.assert_same_params(rhs);
        for (m, z) in &rhs.terms {
            *self.terms.entry(*m).or_insert(C64::new(0.0, 0.0)) += z;
        }
        self.prune();
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        self + &(-rhs)
    }
}

impl Sub for AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: AlgebraElement) -> AlgebraElement {
        &self - &rhs
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale(-ONE)
    }
}

impl Neg for AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        -&self
    }
}

impl Mul<C64> for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: C64) -> AlgebraElement {
        self.scale(rhs)
    }
}

impl Mul<C64> for AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: C64) -> AlgebraElement {
        self.scale(rhs)
    }
}

/// Splitting of an element into orbital angular momentum components.
#[derive(Debug, Clone)]
pub struct HarmonicDecomposition {
    pub components: Vec<AlgebraElement>,
}

impl HarmonicDecomposition {
    pub fn component(&self, l: usize) -> Option<&AlgebraElement> {
        self.components.get(l)
    }

    pub fn sum(&self) -> Option<AlgebraElement> {
        let mut iter = self.components.iter();
        let first = iter.next()?.clone();
        Some(iter.fold(first, |acc, c| &acc + c))
    }
}

/// Linear-algebra data of the truncated algebra up to a fixed degree: the
/// matrices of `∂_i` and `Σ ∂_i ∂_i` on the canonical basis and the integral
/// as a linear functional.
#[derive(Debug)]
pub struct Harmonics {
    degree: usize,
    basis: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
    partials: [DMatrix<C64>; 3],
    laplacian: DMatrix<C64>,
    integral: OnceLock<std::result::Result<DVector<C64>, Error>>,
}

impl Harmonics {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Matrix of `∂_i`, `i` in `1..=3`.
    pub fn partial(&self, i: usize) -> &DMatrix<C64> {
        &self.partials[i - 1]
    }

    /// Matrix of `Σ_i ∂_i ∂_i`.
    pub fn laplacian(&self) -> &DMatrix<C64> {
        &self.laplacian
    }

    pub fn to_vector(&self, a: &AlgebraElement) -> Result<DVector<C64>> {
        let mut v = DVector::zeros(self.dim());
        for (m, z) in a.terms() {
            let idx = self.index_of(m).ok_or(Error::TruncationOverflow {
                degree: m.degree(),
                cap: self.degree,
            })?;
            v[idx] = *z;
        }
        Ok(v)
    }

    pub fn to_element(&self, params: Parameters, v: &DVector<C64>) -> AlgebraElement {
        AlgebraElement::from_terms_unchecked(
            params,
            self.basis.iter().zip(v.iter()).map(|(m, z)| (*m, *z)),
        )
    }

    /// The integral as a row functional: the `l = 0` part is the left null
    /// space of the Laplacian, normalized so that `∫ 1 = 1`.
    pub fn integral_functional(&self) -> Result<&DVector<C64>> {
        self.integral
            .get_or_init(|| {
                let n = self.dim();
                if n == 1 {
                    return Ok(DVector::from_element(1, ONE));
                }
                let svd = self.laplacian.transpose().svd(false, true);
                let v_t = svd.v_t.as_ref().expect("requested V^T");
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&i, &j| {
                    svd.singular_values[i]
                        .partial_cmp(&svd.singular_values[j])
                        .unwrap_or(Ordering::Equal)
                });
                let smallest = svd.singular_values[order[0]];
                let gap = svd.singular_values[order[1]];
                if smallest > 1e-8 * gap.max(1.0) {
                    return Err(Error::EigenClustering {
                        l: 0,
                        residual: smallest,
                    });
                }
                let v: DVector<C64> = v_t.row(order[0]).adjoint();
                let unit = v[self.index[&Monomial::ONE]];
                Ok(v / unit)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Applies the spectral projector onto the `l` eigenspace of `Σ∂²` to `v`,
    /// using only the eigenvalues `-l'(l'+1)` with `l' <= max_l`. Exact when
    /// `v` has degree at most `max_l`.
    pub fn project(&self, v: &DVector<C64>, l: usize, max_l: usize) -> DVector<C64> {
        let target = -((l * (l + 1)) as f64);
        let mut out = v.clone();
        for lp in (0..=max_l).rev() {
            if lp == l {
                continue;
            }
            let shift = (lp * (lp + 1)) as f64;
            let denom = shift + target;
            out = (&self.laplacian * &out + out.scale(shift)).unscale(denom);
        }
        out
    }
}

/// The algebra `C_λ[S²]` at fixed parameters, with memoized structure constants.
pub struct FuzzySphere {
    params: Parameters,
    generator_cache: RwLock<HashMap<(u8, Monomial), Arc<Terms>>>,
    product_cache: RwLock<HashMap<(Monomial, Monomial), Arc<Terms>>>,
    star_cache: RwLock<HashMap<Monomial, Arc<Terms>>>,
    harmonics_cache: RwLock<HashMap<usize, Arc<Harmonics>>>,
}

impl fmt::Debug for FuzzySphere {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FuzzySphere")
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

impl FuzzySphere {
    pub fn new(params: Parameters) -> Self {
        Self {
            params,
            generator_cache: RwLock::new(HashMap::new()),
            product_cache: RwLock::new(HashMap::new()),
            star_cache: RwLock::new(HashMap::new()),
            harmonics_cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn one(&self) -> AlgebraElement {
        AlgebraElement::one(self.params)
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement::zero(self.params)
    }

    /// The generator `x_i`, `i` in `1..=3`.
    pub fn generator(&self, i: usize) -> Result<AlgebraElement> {
        let m = match i {
            1 => Monomial { a: 1, b: 0, c: 0 },
            2 => Monomial { a: 0, b: 1, c: 0 },
            3 => Monomial { a: 0, b: 0, c: 1 },
            _ => return Err(Error::AxisOutOfRange(i)),
        };
        AlgebraElement::monomial(self.params, m)
    }

    fn check_params(&self, a: &AlgebraElement) -> Result<()> {
        if *a.params() != self.params {
            return Err(Error::ParameterMismatch);
        }
        Ok(())
    }

    /// Canonical product, rejected if its degree exceeds the truncation.
    pub fn multiply(&self, a: &AlgebraElement, b: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_params(a)?;
        self.check_params(b)?;
        let out = self.multiply_untruncated(a, b);
        out.check_truncation()?;
        Ok(out)
    }

    /// Canonical product without the truncation cap.
    pub(crate) fn multiply_untruncated(&self, a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
        let mut acc = HashMap::new();
        for (ma, za) in a.terms() {
            for (mb, zb) in b.terms() {
                let prod = self.monomial_product(*ma, *mb);
                accumulate(&mut acc, &prod, za * zb);
            }
        }
        AlgebraElement::from_terms_unchecked(self.params, acc)
    }

    /// `[a, b] = ab - ba`; never raises degree beyond `deg a + deg b - 1`.
    pub(crate) fn commutator(&self, a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
        &self.multiply_untruncated(a, b) - &self.multiply_untruncated(b, a)
    }

    /// Antilinear anti-automorphism fixing the generators.
    pub fn star(&self, a: &AlgebraElement) -> AlgebraElement {
        let mut acc = HashMap::new();
        for (m, z) in a.terms() {
            let reversed = self.monomial_star(*m);
            accumulate(&mut acc, &reversed, z.conj());
        }
        AlgebraElement::from_terms_unchecked(a.params, acc)
    }

    /// Left multiplication of a canonical monomial by `x_i`.
    fn left_generator(&self, i: u8, m: Monomial) -> Arc<Terms> {
        if let Some(hit) = self.generator_cache.read().unwrap().get(&(i, m)) {
            return hit.clone();
        }
        let terms = Arc::new(self.compute_left_generator(i, m));
        self.generator_cache
            .write()
            .unwrap()
            .insert((i, m), terms.clone());
        terms
    }

    fn apply_left(&self, i: u8, terms: &[(Monomial, C64)], scale: C64, acc: &mut HashMap<Monomial, C64>) {
        for (m, z) in terms {
            let t = self.left_generator(i, *m);
            accumulate(acc, &t, scale * z);
        }
    }

    fn compute_left_generator(&self, i: u8, m: Monomial) -> Terms {
        let two_i_lambda = C64::new(0.0, 2.0 * self.params.lambda_p);
        let Monomial { a, b, c } = m;
        let mut acc = HashMap::new();
        match i {
            1 => return vec![(Monomial { a: a + 1, b, c }, ONE)],
            2 => {
                if a == 0 {
                    return vec![(Monomial { a: 0, b: b + 1, c }, ONE)];
                }
                // x2 x1 = x1 x2 - 2iλ x3
                let rest = Monomial { a: a - 1, b, c };
                let inner = self.left_generator(2, rest);
                self.apply_left(1, &inner, ONE, &mut acc);
                accumulate(&mut acc, &self.left_generator(3, rest), -two_i_lambda);
            }
            3 => {
                if a > 0 {
                    // x3 x1 = x1 x3 + 2iλ x2
                    let rest = Monomial { a: a - 1, b, c };
                    let inner = self.left_generator(3, rest);
                    self.apply_left(1, &inner, ONE, &mut acc);
                    accumulate(&mut acc, &self.left_generator(2, rest), two_i_lambda);
                } else if b > 0 {
                    // x3 x2 = x2 x3 - 2iλ x1
                    let rest = Monomial { a: 0, b: b - 1, c };
                    let inner = self.left_generator(3, rest);
                    self.apply_left(2, &inner, ONE, &mut acc);
                    accumulate(&mut acc, &self.left_generator(1, rest), -two_i_lambda);
                } else if c == 0 {
                    return vec![(Monomial { a: 0, b: 0, c: 1 }, ONE)];
                } else {
                    return collect_terms(HashMap::from([
                        (Monomial::ONE, C64::new(self.params.casimir(), 0.0)),
                        (Monomial { a: 2, b: 0, c: 0 }, -ONE),
                        (Monomial { a: 0, b: 2, c: 0 }, -ONE),
                    ]));
                }
            }
            _ => unreachable!("generator index {i}"),
        }
        collect_terms(acc)
    }

    fn monomial_product(&self, left: Monomial, right: Monomial) -> Arc<Terms> {
        if let Some(hit) = self.product_cache.read().unwrap().get(&(left, right)) {
            return hit.clone();
        }
        let mut terms: Terms = vec![(right, ONE)];
        for (gen, count) in [(3u8, left.c), (2, left.b), (1, left.a)] {
            for _ in 0..count {
                let mut acc = HashMap::new();
                self.apply_left(gen, &terms, ONE, &mut acc);
                terms = collect_terms(acc);
            }
        }
        let terms = Arc::new(terms);
        self.product_cache
            .write()
            .unwrap()
            .insert((left, right), terms.clone());
        terms
    }

    fn monomial_star(&self, m: Monomial) -> Arc<Terms> {
        if let Some(hit) = self.star_cache.read().unwrap().get(&m) {
            return hit.clone();
        }
        // reversed word x3^c x2^b x1^a
        let x1a = Monomial { a: m.a, b: 0, c: 0 };
        let mut terms: Terms = vec![(x1a, ONE)];
        for (gen, count) in [(2u8, m.b), (3, m.c)] {
            for _ in 0..count {
                let mut acc = HashMap::new();
                self.apply_left(gen, &terms, ONE, &mut acc);
                terms = collect_terms(acc);
            }
        }
        let terms = Arc::new(terms);
        self.star_cache.write().unwrap().insert(m, terms.clone());
        terms
    }

    /// `∂_i a = [x_i, a] / (2iλ)`, `i` in `1..=3`.
    pub fn partial(&self, i: usize, a: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_params(a)?;
        let x = match i {
            1..=3 => AlgebraElement::from_terms_unchecked(
                self.params,
                [(
                    Monomial {
                        a: (i == 1) as u32,
                        b: (i == 2) as u32,
                        c: (i == 3) as u32,
                    },
                    ONE,
                )],
            ),
            _ => return Err(Error::AxisOutOfRange(i)),
        };
        let out = self
            .commutator(&x, a)
            .scale(C64::new(0.0, 2.0 * self.params.lambda_p).inv());
        debug_assert!(out.degree() <= a.degree(), "partial derivative raised degree");
        Ok(out)
    }

    /// `Σ_i ∂_i ∂_i a`.
    pub fn laplacian(&self, a: &AlgebraElement) -> Result<AlgebraElement> {
        let mut out = self.zero();
        for i in 1..=3 {
            out += &self.partial(i, &self.partial(i, a)?)?;
        }
        Ok(out)
    }

    /// Matrices of `∂_i`, the Laplacian and the integral on the canonical
    /// basis up to `degree` (which may exceed the truncation).
    pub fn harmonics(&self, degree: usize) -> Arc<Harmonics> {
        if let Some(hit) = self.harmonics_cache.read().unwrap().get(&degree) {
            return hit.clone();
        }
        let built = Arc::new(self.build_harmonics(degree));
        self.harmonics_cache
            .write()
            .unwrap()
            .entry(degree)
            .or_insert(built)
            .clone()
    }

    fn build_harmonics(&self, degree: usize) -> Harmonics {
        let basis = canonical_basis(degree);
        let index: HashMap<Monomial, usize> =
            basis.iter().enumerate().map(|(k, m)| (*m, k)).collect();
        let n = basis.len();
        let inv = C64::new(0.0, 2.0 * self.params.lambda_p).inv();
        let generators = [
            Monomial { a: 1, b: 0, c: 0 },
            Monomial { a: 0, b: 1, c: 0 },
            Monomial { a: 0, b: 0, c: 1 },
        ];
        let partials: [DMatrix<C64>; 3] = std::array::from_fn(|axis| {
            let x = generators[axis];
            let mut mat = DMatrix::zeros(n, n);
            for (col, m) in basis.iter().enumerate() {
                let left = self.monomial_product(x, *m);
                let right = self.monomial_product(*m, x);
                let mut acc = HashMap::new();
                accumulate(&mut acc, &left, inv);
                accumulate(&mut acc, &right, -inv);
                for (mm, z) in acc {
                    if z == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let row = *index
                        .get(&mm)
                        .expect("commutator with a generator does not raise degree");
                    mat[(row, col)] += z;
                }
            }
            mat
        });
        let laplacian = partials.iter().map(|p| p * p).fold(DMatrix::zeros(n, n), |acc, m| acc + m);
        Harmonics {
            degree,
            basis,
            index,
            partials,
            laplacian,
            integral: OnceLock::new(),
        }
    }

    /// Splits `a` into eigencomponents of `Σ∂²` with eigenvalues `-l(l+1)`.
    pub fn harmonic_project(&self, a: &AlgebraElement) -> Result<HarmonicDecomposition> {
        self.check_params(a)?;
        a.check_truncation()?;
        let cap = self.params.truncation;
        let h = self.harmonics(cap);
        let v = h.to_vector(a)?;
        let top = a.degree();
        let scale = 1.0 + v.camax();
        let mut components = Vec::with_capacity(cap + 1);
        let mut total = DVector::zeros(h.dim());
        for l in 0..=cap {
            let comp = if l > top {
                DVector::zeros(h.dim())
            } else {
                h.project(&v, l, top)
            };
            let shift = (l * (l + 1)) as f64;
            let residual = (h.laplacian() * &comp + comp.scale(shift)).camax();
            if residual > self.params.tol * scale * (1.0 + shift) {
                return Err(Error::EigenClustering { l, residual });
            }
            total += &comp;
            components.push(h.to_element(self.params, &comp));
        }
        let residual = (&total - &v).camax();
        if residual > self.params.tol * scale {
            return Err(Error::EigenClustering { l: top, residual });
        }
        Ok(HarmonicDecomposition { components })
    }

    /// Basis of `A_l`: the projections of the degree-`l` monomials. Each
    /// basis element equals its monomial plus lower-degree terms.
    pub fn harmonic_basis(&self, l: usize) -> Vec<DVector<C64>> {
        let h = self.harmonics(l);
        monomials_of_degree(l)
            .iter()
            .map(|m| {
                let mut e = DVector::zeros(h.dim());
                e[h.index_of(m).expect("monomial in basis")] = ONE;
                h.project(&e, l, l)
            })
            .collect()
    }
}
