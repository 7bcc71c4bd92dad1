//! The integral `∫` (coefficient of `1` in the `l = 0` component), the spinor
//! inner product `⟨ψ, φ⟩ = ∫ ψ_α* φ_α`, and the per-`l` orthonormal bases.

use nalgebra::{Cholesky, DMatrix, DVector, Matrix2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{canonical_basis, monomials_of_degree, random_element, AlgebraElement, FuzzySphere, C64};
use crate::dirac::{apply_dirac, SpinorField};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, kron, I};
use crate::spin::SpinData;

impl FuzzySphere {
    /// `∫ a`. Accepts elements of any degree (products of truncated elements
    /// are integrated on a harmonics table of the required degree).
    pub fn integral(&self, a: &AlgebraElement) -> Result<C64> {
        if a.params() != self.params() {
            return Err(Error::ParameterMismatch);
        }
        let degree = a.terms().map(|(m, _)| m.degree()).max().unwrap_or(0);
        let h = self.harmonics(degree);
        let w = h.integral_functional()?;
        let v = h.to_vector(a)?;
        Ok(w.iter().zip(v.iter()).map(|(x, y)| x * y).sum())
    }

    /// `∫ a* b`.
    pub fn pairing(&self, a: &AlgebraElement, b: &AlgebraElement) -> Result<C64> {
        self.integral(&self.multiply_untruncated(&self.star(a), b))
    }

    /// `⟨ψ, φ⟩ = ∫ (ψ₁* φ₁ + ψ₂* φ₂)`.
    pub fn inner_product(&self, psi: &SpinorField, phi: &SpinorField) -> Result<C64> {
        Ok(self.pairing(&psi.components[0], &phi.components[0])?
            + self.pairing(&psi.components[1], &phi.components[1])?)
    }
}

/// `(Jψ)_β = ψ_α* J^α_β`.
pub fn apply_real_structure(sphere: &FuzzySphere, j_mat: &Matrix2<C64>, psi: &SpinorField) -> SpinorField {
    SpinorField {
        components: psi.components.each_ref().map(|c| sphere.star(c)),
    }
    .right_mul(j_mat)
}

/// Source of the positive form used on `S_l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    /// `∫ ψ_α* φ_α`, used whenever it is positive definite on `A_l`.
    Integral,
    /// The rotation-invariant form on `A_l` (unique up to scale), used when
    /// `∫` degenerates: the integral Gram on `A_l` equals
    /// `Π_{k≤l} (1 - k²λ²)` times a fixed positive matrix.
    Invariant,
}

/// Positive hermitian `G` on `A_l` (top-degree coordinates) with
/// `T_i† G + G T_i = 0` for the three derivations, normalised to trace `2l+1`.
fn invariant_form(
    h: &crate::algebra::Harmonics,
    vectors: &[DVector<C64>],
    top_rows: &[usize],
    l: usize,
) -> Result<DMatrix<C64>> {
    let k = vectors.len();
    let basis = DMatrix::from_columns(vectors);
    let id = DMatrix::<C64>::identity(k, k);
    let mut rows = Vec::new();
    for i in 1..=3 {
        let image = h.partial(i) * &basis;
        let t = DMatrix::from_fn(k, k, |r, c| image[(top_rows[r], c)]);
        rows.push(kron(&id, &t.adjoint()) + kron(&t.transpose(), &id));
    }
    let mut stacked = DMatrix::zeros(3 * k * k, k * k);
    for (n, r) in rows.iter().enumerate() {
        stacked.view_mut((n * k * k, 0), (k * k, k * k)).copy_from(r);
    }
    let ns = crate::linalg::nullspace(&stacked, 1e-9);
    let v = ns.first().ok_or(Error::GramNotPositive(l))?;
    let g = DMatrix::from_column_slice(k, k, v.as_slice());
    let tr = g.trace();
    if tr.norm() == 0.0 {
        return Err(Error::GramNotPositive(l));
    }
    let g = &g * (C64::from(k as f64) / tr);
    Ok((&g + g.adjoint()) * C64::from(0.5))
}

/// Harmonic basis of `A_l` with its Gram matrix and Cholesky factor.
#[derive(Debug, Clone)]
pub struct BlockBasis {
    pub l: usize,
    /// Elements `b_m = m + (lower degree)`, one per degree-`l` monomial.
    pub elements: Vec<AlgebraElement>,
    /// Coefficient vectors of `b_m` on `harmonics(l)`.
    pub vectors: Vec<DVector<C64>>,
    /// Rows of the degree-`l` monomials on `harmonics(l)`, in basis order.
    pub top_rows: Vec<usize>,
    /// `G[m, n] = ∫ b_m* b_n`.
    pub gram: DMatrix<C64>,
    /// Which form the orthonormal basis is built from.
    pub form: FormKind,
    upper: DMatrix<C64>,
    upper_inv: DMatrix<C64>,
    ambient: usize,
}

impl BlockBasis {
    pub fn new(sphere: &FuzzySphere, l: usize) -> Result<Self> {
        let h = sphere.harmonics(l);
        let vectors = sphere.harmonic_basis(l);
        let elements: Vec<AlgebraElement> = vectors.iter().map(|v| h.to_element(*sphere.params(), v)).collect();
        let top_rows: Vec<usize> = monomials_of_degree(l)
            .iter()
            .map(|m| h.index_of(m).expect("monomial in table"))
            .collect();
        let k = elements.len();
        let stars: Vec<AlgebraElement> = elements.iter().map(|e| sphere.star(e)).collect();
        let mut gram = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let z = sphere.integral(&sphere.multiply_untruncated(&stars[a], &elements[b]))?;
                gram[(a, b)] = z;
                gram[(b, a)] = z.conj();
            }
        }
        let eig = hermitian_eigen(&gram).0;
        let definite = eig[0] > 1e-10 && eig[0] > 1e-6 * eig[k - 1];
        let (chol, form) = match Cholesky::new(gram.clone()).filter(|_| definite) {
            Some(c) => (c, FormKind::Integral),
            None => {
                let inv = invariant_form(&h, &vectors, &top_rows, l)?;
                (Cholesky::new(inv).ok_or(Error::GramNotPositive(l))?, FormKind::Invariant)
            }
        };
        let upper = chol.l().adjoint();
        let upper_inv = upper
            .clone()
            .solve_upper_triangular(&DMatrix::identity(k, k))
            .ok_or(Error::GramNotPositive(l))?;
        Ok(Self {
            l,
            elements,
            vectors,
            top_rows,
            gram,
            form,
            upper,
            upper_inv,
            ambient: h.dim(),
        })
    }

    pub fn size(&self) -> usize {
        self.elements.len()
    }

    /// Columns `(b_m, 0)` then `(0, b_m)` on stacked `harmonics(l)` vectors.
    pub fn spinor_basis(&self) -> DMatrix<C64> {
        let n = self.ambient;
        let k = self.size();
        let mut out = DMatrix::zeros(2 * n, 2 * k);
        for (c, v) in self.vectors.iter().enumerate() {
            out.view_mut((0, c), (n, 1)).copy_from(v);
            out.view_mut((n, k + c), (n, 1)).copy_from(v);
        }
        out
    }

    pub fn spinor_top_rows(&self) -> Vec<usize> {
        let n = self.ambient;
        self.top_rows.iter().copied().chain(self.top_rows.iter().map(|r| r + n)).collect()
    }

    pub fn spinor_cholesky_upper(&self) -> DMatrix<C64> {
        kron(&DMatrix::identity(2, 2), &self.upper)
    }

    pub fn spinor_cholesky_upper_inverse(&self) -> DMatrix<C64> {
        kron(&DMatrix::identity(2, 2), &self.upper_inv)
    }

    /// Spinor in `S_l` with harmonic-basis coordinates `c` (length `2(2l+1)`).
    pub fn spinor(&self, sphere: &FuzzySphere, c: &[C64]) -> SpinorField {
        let k = self.size();
        let comp = |offset: usize| {
            let mut acc = sphere.zero();
            for (m, e) in self.elements.iter().enumerate() {
                acc += &e.scale(c[offset + m]);
            }
            acc
        };
        SpinorField {
            components: [comp(0), comp(k)],
        }
    }
}

/// Gram data for every `S_l`, `l ≤ max_l`.
#[derive(Debug, Clone)]
pub struct InnerProductContext {
    blocks: Vec<BlockBasis>,
}

impl InnerProductContext {
    pub fn new(sphere: &FuzzySphere, max_l: usize) -> Result<Self> {
        let blocks = (0..=max_l)
            .into_par_iter()
            .map(|l| BlockBasis::new(sphere, l))
            .collect::<Result<_>>()?;
        Ok(Self { blocks })
    }

    pub fn block(&self, l: usize) -> Result<&BlockBasis> {
        self.blocks.get(l).ok_or(Error::BlockOutOfRange {
            l,
            cap: self.blocks.len().saturating_sub(1),
        })
    }

    pub fn max_l(&self) -> usize {
        self.blocks.len() - 1
    }

    /// Smallest Gram eigenvalue over all blocks.
    pub fn min_gram_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| hermitian_eigen(&b.gram).0[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// `G[m, n] = ∫ m* n` over the canonical monomials up to `max_degree`.
pub fn monomial_gram(sphere: &FuzzySphere, max_degree: usize) -> Result<DMatrix<C64>> {
    let basis: Vec<AlgebraElement> = canonical_basis(max_degree)
        .into_iter()
        .map(|m| AlgebraElement::monomial(*sphere.params(), m))
        .collect::<Result<_>>()?;
    let k = basis.len();
    let rows: Vec<Vec<C64>> = (0..k)
        .into_par_iter()
        .map(|a| {
            let sa = sphere.star(&basis[a]);
            (0..k)
                .map(|b| sphere.integral(&sphere.multiply_untruncated(&sa, &basis[b])))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(k, k, |r, c| rows[r][c]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralLawReport {
    /// `max |∫ ∂_i a|`.
    pub derivative: f64,
    /// `max |∫ ab - ∫ ba|`.
    pub trace: f64,
    /// `max |∫ a* - conj(∫ a)|`.
    pub star: f64,
    pub min_gram_eigenvalue: f64,
    pub samples: usize,
}

/// Checks the integral laws on `samples` seeded random elements; products
/// use factors of degree `⌊L/2⌋` so they stay within the truncation.
pub fn verify_integral_laws(sphere: &FuzzySphere, samples: usize, seed: u64) -> Result<IntegralLawReport> {
    let params = *sphere.params();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = params.truncation / 2;
    let (mut derivative, mut trace, mut star) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let a = random_element(params, params.truncation, &mut rng);
        for i in 1..=3 {
            derivative = derivative.max(sphere.integral(&sphere.partial(i, &a)?)?.norm());
        }
        star = star.max((sphere.integral(&sphere.star(&a))? - sphere.integral(&a)?.conj()).norm());
        let x = random_element(params, half, &mut rng);
        let y = random_element(params, half, &mut rng);
        let xy = sphere.integral(&sphere.multiply(&x, &y)?)?;
        let yx = sphere.integral(&sphere.multiply(&y, &x)?)?;
        trace = trace.max((xy - yx).norm());
    }
    let gram = monomial_gram(sphere, params.truncation)?;
    Ok(IntegralLawReport {
        derivative,
        trace,
        star,
        min_gram_eigenvalue: hermitian_eigen(&gram).0[0],
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjointnessReport {
    /// `max |⟨iDψ, φ⟩ - ⟨ψ, iDφ⟩|`.
    pub dirac_symmetry: f64,
    /// `max |⟨Jψ, Jφ⟩ - ⟨φ, ψ⟩|`.
    pub j_isometry: f64,
    /// `max |⟨ψ, φ⟩ - conj⟨φ, ψ⟩|`.
    pub conjugate_symmetry: f64,
    pub pairs: usize,
}

/// Symmetry of `iD` and isometry of `J` on `pairs_per_block` random pairs in
/// every `S_l` covered by `ctx`.
pub fn adjointness_check(
    sphere: &FuzzySphere,
    data: &SpinData,
    ctx: &InnerProductContext,
    pairs_per_block: usize,
    seed: u64,
) -> Result<AdjointnessReport> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AdjointnessReport {
        dirac_symmetry: 0.0,
        j_isometry: 0.0,
        conjugate_symmetry: 0.0,
        pairs: 0,
    };
    for l in 0..=ctx.max_l() {
        let block = ctx.block(l)?;
        for _ in 0..pairs_per_block {
            let mut coords = || -> Vec<C64> {
                (0..2 * block.size())
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            };
            let psi = block.spinor(sphere, &coords());
            let phi = block.spinor(sphere, &coords());
            let dpsi = apply_dirac(sphere, data, &psi)?.scale(I);
            let dphi = apply_dirac(sphere, data, &phi)?.scale(I);
            let lhs = sphere.inner_product(&dpsi, &phi)?;
            let rhs = sphere.inner_product(&psi, &dphi)?;
            report.dirac_symmetry = report.dirac_symmetry.max((lhs - rhs).norm());
            let jpsi = apply_real_structure(sphere, &data.j_mat, &psi);
            let jphi = apply_real_structure(sphere, &data.j_mat, &phi);
            let jj = sphere.inner_product(&jpsi, &jphi)?;
            let pf = sphere.inner_product(&phi, &psi)?;
            report.j_isometry = report.j_isometry.max((jj - pf).norm());
            let fp = sphere.inner_product(&psi, &phi)?;
            report.conjugate_symmetry = report.conjugate_symmetry.max((fp - pf.conj()).norm());
            report.pairs += 1;
        }
    }
    Ok(report)
}
