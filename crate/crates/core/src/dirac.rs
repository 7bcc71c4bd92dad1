//! The geometric Dirac operator `(Dψ)_α = (∇_iψ)_β C^{iβ}_α` with
//! `∇_iψ = ∂_iψ + ψ S_i`, acting on co-spinors (row vectors) `ψ_α e^α`.
//!
//! Matrices act on stacked coefficient vectors `(ψ₁, ψ₂)` over a harmonics
//! table, so right multiplication by a 2×2 matrix `M` becomes `Mᵀ ⊗ id`.

use nalgebra::{DMatrix, DVector, Matrix2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, FuzzySphere, Harmonics, TermRecord, C64};
use crate::calculus::levi_civita;
use crate::error::{Error, Result};
use crate::hilbert::{BlockBasis, InnerProductContext};
use crate::linalg::{cluster, hermitian_eigen, kron, max_abs, to_dmatrix, Cluster, I};
use crate::spin::SpinData;

/// `ψ = ψ_α e^α`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub components: [AlgebraElement; 2],
}

impl SpinorField {
    pub fn new(psi1: AlgebraElement, psi2: AlgebraElement) -> Result<Self> {
        if psi1.params() != psi2.params() {
            return Err(Error::ParameterMismatch);
        }
        Ok(Self {
            components: [psi1, psi2],
        })
    }

    pub fn zero(sphere: &FuzzySphere) -> Self {
        Self {
            components: [sphere.zero(), sphere.zero()],
        }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            components: self.components.each_ref().map(|c| c.scale(z)),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            components: [
                &self.components[0] + &other.components[0],
                &self.components[1] + &other.components[1],
            ],
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// `ψ ↦ ψ M` on the spinor index.
    pub fn right_mul(&self, m: &Matrix2<C64>) -> Self {
        let [a, b] = &self.components;
        Self {
            components: std::array::from_fn(|alpha| &a.scale(m[(0, alpha)]) + &b.scale(m[(1, alpha)])),
        }
    }

    pub fn degree(&self) -> usize {
        self.components[0].degree().max(self.components[1].degree())
    }

    pub fn max_norm(&self) -> f64 {
        self.components[0].max_norm().max(self.components[1].max_norm())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.components[0]
            .max_abs_diff(&other.components[0])
            .max(self.components[1].max_abs_diff(&other.components[1]))
    }

    pub fn to_records(&self) -> [Vec<TermRecord>; 2] {
        self.components.each_ref().map(AlgebraElement::to_records)
    }

    /// Stacked coefficient vector on `h`.
    pub fn to_vector(&self, h: &Harmonics) -> Result<DVector<C64>> {
        let n = h.dim();
        let mut v = DVector::zeros(2 * n);
        v.rows_mut(0, n).copy_from(&h.to_vector(&self.components[0])?);
        v.rows_mut(n, n).copy_from(&h.to_vector(&self.components[1])?);
        Ok(v)
    }

    pub fn from_vector(sphere: &FuzzySphere, h: &Harmonics, v: &DVector<C64>) -> Self {
        let n = h.dim();
        Self {
            components: [
                h.to_element(*sphere.params(), &v.rows(0, n).into_owned()),
                h.to_element(*sphere.params(), &v.rows(n, n).into_owned()),
            ],
        }
    }
}

/// `∇_iψ = ∂_iψ + ψ S_i`, `i` 0-based.
fn nabla(sphere: &FuzzySphere, data: &SpinData, i: usize, psi: &SpinorField) -> Result<SpinorField> {
    let d = SpinorField {
        components: [
            sphere.partial(i + 1, &psi.components[0])?,
            sphere.partial(i + 1, &psi.components[1])?,
        ],
    };
    Ok(d.add(&psi.right_mul(&data.connection[i])))
}

/// `Dψ` (not `iD`).
pub fn apply_dirac(sphere: &FuzzySphere, data: &SpinData, psi: &SpinorField) -> Result<SpinorField> {
    let mut out = SpinorField::zero(sphere);
    for i in 0..3 {
        out = out.add(&nabla(sphere, data, i, psi)?.right_mul(&data.clifford[i]));
    }
    debug_assert!(out.degree() <= psi.degree(), "Dirac operator raised degree");
    Ok(out)
}

/// `Δ_S ψ = g^{ji} ∇_j∇_i ψ - ½ Γ^i_jk g^{jk} ∇_i ψ`.
pub fn spinor_laplacian(sphere: &FuzzySphere, data: &SpinData, psi: &SpinorField) -> Result<SpinorField> {
    let g_inv = data.metric.inverse();
    let contracted = contracted_christoffel(data);
    let first: Vec<SpinorField> = (0..3).map(|i| nabla(sphere, data, i, psi)).collect::<Result<_>>()?;
    let mut out = SpinorField::zero(sphere);
    for i in 0..3 {
        for j in 0..3 {
            if g_inv[(j, i)] != 0.0 {
                out = out.add(&nabla(sphere, data, j, &first[i])?.scale(g_inv[(j, i)].into()));
            }
        }
        if contracted[i] != 0.0 {
            out = out.add(&first[i].scale((-0.5 * contracted[i]).into()));
        }
    }
    Ok(out)
}

fn contracted_christoffel(data: &SpinData) -> [f64; 3] {
    let g_inv = data.metric.inverse();
    std::array::from_fn(|i| {
        let mut acc = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                acc += data.christoffel.upper[i][j][k] * g_inv[(j, k)];
            }
        }
        acc
    })
}

/// `▷∘R_S` on the basis `e^α`, as the matrix `M` with `e^α ↦ M^α_β e^β`:
/// `-½ ε_ijk S_i C^k C^j - S_i S_j C^j C^i + g^{ij} S_i S_j`.
pub fn curvature_action(data: &SpinData) -> Matrix2<C64> {
    let s = &data.connection;
    let c = &data.clifford;
    let g_inv = data.metric.inverse();
    let mut out = Matrix2::zeros();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let e = levi_civita(i, j, k);
                if e != 0.0 {
                    out += s[i] * c[k] * c[j] * C64::from(-0.5 * e);
                }
            }
            out -= s[i] * s[j] * c[j] * c[i];
            out += s[i] * s[j] * C64::from(g_inv[(i, j)]);
        }
    }
    out
}

/// Right multiplication by `m` on stacked vectors of length `2n`.
fn right_mul_matrix(m: &Matrix2<C64>, n: usize) -> DMatrix<C64> {
    kron(&to_dmatrix(&m.transpose()), &DMatrix::identity(n, n))
}

fn nabla_matrix(h: &Harmonics, data: &SpinData, i: usize) -> DMatrix<C64> {
    let n = h.dim();
    kron(&DMatrix::identity(2, 2), h.partial(i + 1)) + right_mul_matrix(&data.connection[i], n)
}

/// Matrix of `D` on stacked spinors over `h`.
pub fn dirac_matrix(h: &Harmonics, data: &SpinData) -> DMatrix<C64> {
    let n = h.dim();
    let mut out = right_mul_matrix(&data.constant_term(), n);
    for i in 0..3 {
        out += kron(&to_dmatrix(&data.clifford[i].transpose()), h.partial(i + 1));
    }
    out
}

/// Matrix of `Δ_S` on stacked spinors over `h`.
pub fn spinor_laplacian_matrix(h: &Harmonics, data: &SpinData) -> DMatrix<C64> {
    let n = h.dim();
    let g_inv = data.metric.inverse();
    let contracted = contracted_christoffel(data);
    let nablas: [DMatrix<C64>; 3] = std::array::from_fn(|i| nabla_matrix(h, data, i));
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..3 {
        for j in 0..3 {
            if g_inv[(j, i)] != 0.0 {
                out += &nablas[j] * &nablas[i] * C64::from(g_inv[(j, i)]);
            }
        }
        out -= &nablas[i] * C64::from(0.5 * contracted[i]);
    }
    out
}

/// Matrix of `D² - Δ_S - ▷∘R_S` over `h`.
pub fn lichnerowicz_operator(h: &Harmonics, data: &SpinData) -> DMatrix<C64> {
    let d = dirac_matrix(h, data);
    &d * &d - spinor_laplacian_matrix(h, data) - right_mul_matrix(&curvature_action(data), h.dim())
}

/// Restriction of a degree-preserving spinor operator to `S_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    /// Coordinates on the (non-orthonormal) harmonic basis of `S_l`.
    pub coordinates: DMatrix<C64>,
    /// Matrix in an orthonormal basis of `S_l`.
    pub orthonormal: DMatrix<C64>,
    /// `‖op·B - B·K‖_max`: how far `op` is from preserving `S_l`.
    pub invariance_residual: f64,
}

/// Restricts `op` (built on `harmonics(l)`) to `S_l`.
pub fn restrict_to_block(op: &DMatrix<C64>, block: &BlockBasis) -> BlockOperator {
    let b = block.spinor_basis();
    let image = op * &b;
    let top = block.spinor_top_rows();
    let k = DMatrix::from_fn(top.len(), b.ncols(), |r, c| image[(top[r], c)]);
    let invariance_residual = max_abs(&(&image - &b * &k));
    let r = block.spinor_cholesky_upper();
    let r_inv = block.spinor_cholesky_upper_inverse();
    let orthonormal = &r * &k * &r_inv;
    BlockOperator {
        coordinates: k,
        orthonormal,
        invariance_residual,
    }
}

/// `iD` on `S_l = A_l ⊕ A_l` in an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracBlock {
    pub l: usize,
    pub matrix: DMatrix<C64>,
    pub hermiticity_residual: f64,
    pub invariance_residual: f64,
}

impl DiracBlock {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// Ascending eigenvalues of the hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }
}

pub fn dirac_block(sphere: &FuzzySphere, data: &SpinData, ctx: &InnerProductContext, l: usize) -> Result<DiracBlock> {
    let block = ctx.block(l)?;
    let h = sphere.harmonics(l);
    let op = dirac_matrix(&h, data) * I;
    let restricted = restrict_to_block(&op, block);
    let hermiticity_residual = max_abs(&(&restricted.orthonormal - restricted.orthonormal.adjoint()));
    Ok(DiracBlock {
        l,
        matrix: restricted.orthonormal,
        hermiticity_residual,
        invariance_residual: restricted.invariance_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpectrum {
    pub l: usize,
    pub eigenvalues: Vec<Cluster>,
    pub hermiticity_residual: f64,
    pub invariance_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub lambda_p: f64,
    #[serde(rename = "L")]
    pub truncation: usize,
    pub tol: f64,
    pub metric: [f64; 9],
    pub blocks: Vec<BlockSpectrum>,
    /// All blocks merged, ascending.
    pub spectrum: Vec<Cluster>,
    pub max_hermiticity_residual: f64,
    pub max_invariance_residual: f64,
    /// Largest deviation from `-1/4 ± (l + 1/2)` when the metric is round.
    pub round_formula_residual: Option<f64>,
}

/// `−1/4 ± (l + 1/2)` with multiplicities `2l + 1 ∓ 1`, ascending.
pub fn round_closed_form(l: usize) -> Vec<Cluster> {
    let half = l as f64 + 0.5;
    let mut out = vec![Cluster {
        value: -0.25 - half,
        multiplicity: 2 * l + 2,
    }];
    if l > 0 {
        out.push(Cluster {
            value: -0.25 + half,
            multiplicity: 2 * l,
        });
    }
    out
}

/// Largest `|λ_found - λ_expected|` after matching sorted eigenvalue lists
/// (expanded by multiplicity); infinite when the counts differ.
pub fn spectrum_distance(found: &[Cluster], expected: &[Cluster]) -> f64 {
    let expand = |c: &[Cluster]| -> Vec<f64> {
        let mut v: Vec<f64> = c.iter().flat_map(|x| std::iter::repeat_n(x.value, x.multiplicity)).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let a = expand(found);
    let b = expand(expected);
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn merge_clusters(all: &mut [f64], width: f64) -> Vec<Cluster> {
    all.sort_by(f64::total_cmp);
    cluster(all, width)
}

/// Diagonalises every block `l = 0…L`. Requires a Euclidean metric.
pub fn spectrum(sphere: &FuzzySphere, data: &SpinData, ctx: &InnerProductContext) -> Result<SpectralReport> {
    if !data.metric.is_euclidean() {
        return Err(Error::InvalidParameters(
            "spectrum requires a metric of Euclidean signature".into(),
        ));
    }
    let params = *sphere.params();
    let width = 100.0 * params.tol;
    let blocks: Vec<DiracBlock> = (0..=params.truncation)
        .into_par_iter()
        .map(|l| dirac_block(sphere, data, ctx, l))
        .collect::<Result<_>>()?;
    let scale = blocks.iter().map(|b| max_abs(&b.matrix)).fold(1.0, f64::max);
    let mut out_blocks = Vec::with_capacity(blocks.len());
    let mut all = Vec::new();
    let mut round_residual = 0.0f64;
    let round = data.metric.is_round(params.tol);
    for b in &blocks {
        if b.hermiticity_residual > params.tol * scale {
            return Err(Error::NonHermitian {
                l: b.l,
                residual: b.hermiticity_residual,
            });
        }
        let mut values = b.eigenvalues();
        all.extend_from_slice(&values);
        let clusters = merge_clusters(&mut values, width);
        if round {
            round_residual = round_residual.max(spectrum_distance(&clusters, &round_closed_form(b.l)));
        }
        out_blocks.push(BlockSpectrum {
            l: b.l,
            eigenvalues: clusters,
            hermiticity_residual: b.hermiticity_residual,
            invariance_residual: b.invariance_residual,
        });
    }
    Ok(SpectralReport {
        lambda_p: params.lambda_p,
        truncation: params.truncation,
        tol: params.tol,
        metric: data.metric.to_row_major(),
        spectrum: merge_clusters(&mut all, width),
        max_hermiticity_residual: blocks.iter().map(|b| b.hermiticity_residual).fold(0.0, f64::max),
        max_invariance_residual: blocks.iter().map(|b| b.invariance_residual).fold(0.0, f64::max),
        blocks: out_blocks,
        round_formula_residual: round.then_some(round_residual),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LichnerowiczRow {
    pub l: usize,
    /// Largest Hilbert norm of `(D² - Δ_S - ▷∘R_S)ψ` over an orthonormal
    /// basis of `S_l`.
    pub residual: f64,
    pub invariance_residual: f64,
}

pub fn lichnerowicz_table(sphere: &FuzzySphere, data: &SpinData, ctx: &InnerProductContext) -> Result<Vec<LichnerowiczRow>> {
    (0..=sphere.params().truncation)
        .into_par_iter()
        .map(|l| {
            let h = sphere.harmonics(l);
            let restricted = restrict_to_block(&lichnerowicz_operator(&h, data), ctx.block(l)?);
            let residual = restricted
                .orthonormal
                .column_iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            Ok(LichnerowiczRow {
                l,
                residual,
                invariance_residual: restricted.invariance_residual,
            })
        })
        .collect()
}

/// Worst residual and worst block-invariance residual over `l ≤ L`.
pub fn lichnerowicz_residual(sphere: &FuzzySphere, data: &SpinData, ctx: &InnerProductContext) -> Result<(f64, f64)> {
    Ok(lichnerowicz_table(sphere, data, ctx)?
        .into_iter()
        .fold((0.0, 0.0), |(a, b), r| (f64::max(a, r.residual), f64::max(b, r.invariance_residual))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Parameters, DEFAULT_TOL};
    use crate::geometry::QuantumMetric;

    fn sphere(lambda: f64, cap: usize) -> FuzzySphere {
        FuzzySphere::new(Parameters::new(lambda, cap, DEFAULT_TOL).unwrap())
    }

    fn spinor(s: &FuzzySphere, a: AlgebraElement, b: AlgebraElement) -> SpinorField {
        let _ = s;
        SpinorField::new(a, b).unwrap()
    }

    #[test]
    fn constant_spinor() {
        let s = sphere(0.3, 2);
        let psi = spinor(&s, s.one(), s.zero());
        let out = apply_dirac(&s, &SpinData::round(), &psi).unwrap();
        assert!(out.max_abs_diff(&spinor(&s, s.one().scale(C64::new(0.0, 0.75)), s.zero())) < 1e-14);

        let data = SpinData::from_metric(&QuantumMetric::diagonal(4.0, 1.0, 1.0).unwrap(), [C64::new(0.0, 0.0); 3], DEFAULT_TOL).unwrap();
        let out = apply_dirac(&s, &data, &psi).unwrap();
        assert!(out.max_abs_diff(&spinor(&s, s.one().scale(C64::new(0.0, 0.75)), s.zero())) < 1e-14);
    }

    #[test]
    fn l1_eigenvector() {
        let s = sphere(0.25, 2);
        let x1 = s.generator(1).unwrap();
        let x2 = s.generator(2).unwrap();
        let x3 = s.generator(3).unwrap();
        let psi = spinor(&s, &x1 + &x2.scale(I), -x3);
        let out = apply_dirac(&s, &SpinData::round(), &psi).unwrap().scale(I);
        assert!(out.max_abs_diff(&psi.scale(C64::from(1.25))) < 1e-12);
    }

    #[test]
    fn element_and_matrix_agree() {
        let s = sphere(0.3, 3);
        let data = SpinData::from_metric(
            &"2,0.3,0.1, 0.3,1.5,0, 0.1,0,1".parse().unwrap(),
            [C64::new(0.0, 0.0); 3],
            DEFAULT_TOL,
        )
        .unwrap();
        let h = s.harmonics(3);
        let x1 = s.generator(1).unwrap();
        let x3 = s.generator(3).unwrap();
        let psi = spinor(&s, s.multiply(&x1, &x3).unwrap(), &x3 + &s.one().scale(I));
        let v = psi.to_vector(&h).unwrap();
        let via_matrix = SpinorField::from_vector(&s, &h, &(dirac_matrix(&h, &data) * &v));
        assert!(via_matrix.max_abs_diff(&apply_dirac(&s, &data, &psi).unwrap()) < 1e-12);
        let lap = SpinorField::from_vector(&s, &h, &(spinor_laplacian_matrix(&h, &data) * &v));
        assert!(lap.max_abs_diff(&spinor_laplacian(&s, &data, &psi).unwrap()) < 1e-12);
    }

    #[test]
    fn round_curvature_and_laplacian() {
        let k = curvature_action(&SpinData::round());
        assert!(crate::linalg::max_abs2(&(k + Matrix2::identity() * C64::from(0.375))) < 1e-12);

        // Δ_S(x3, 0) = (∂∂x3 + (i/2) ∂_i x3 σ^i - 3/16 x3, …)
        let s = sphere(0.3, 2);
        let x1 = s.generator(1).unwrap();
        let x2 = s.generator(2).unwrap();
        let x3 = s.generator(3).unwrap();
        let psi = spinor(&s, x3.clone(), s.zero());
        let lap = spinor_laplacian(&s, &SpinData::round(), &psi).unwrap();
        // ∂_1 x3 = -x2, ∂_2 x3 = x1, ∂_3 x3 = 0
        let first = x3.scale(C64::from(-2.0 - 3.0 / 16.0));
        let second = &x2.scale(-I * 0.5) + &x1.scale(C64::new(0.5, 0.0));
        let expected = spinor(&s, first, second);
        assert!(lap.max_abs_diff(&expected) < 1e-12, "{lap:?}");
    }

    #[test]
    fn small_blocks() {
        let s = sphere(0.25, 2);
        let ctx = InnerProductContext::new(&s, 2).unwrap();
        let b0 = dirac_block(&s, &SpinData::round(), &ctx, 0).unwrap();
        assert!(max_abs(&(&b0.matrix - DMatrix::identity(2, 2) * C64::from(-0.75))) < 1e-12);
        let report = spectrum(&s, &SpinData::round(), &ctx).unwrap();
        assert!(report.round_formula_residual.unwrap() < 1e-10);
        assert_eq!(report.blocks[1].eigenvalues.len(), 2);
        assert!(s.params().truncation == 2 && report.blocks[2].eigenvalues[1].multiplicity == 4);
    }

    #[test]
    fn lorentzian_spectrum_rejected() {
        let s = sphere(0.25, 1);
        let ctx = InnerProductContext::new(&s, 1).unwrap();
        let data = SpinData::from_metric(&QuantumMetric::diagonal(-1.0, 1.0, 1.0).unwrap(), [C64::new(0.0, 0.0); 3], DEFAULT_TOL).unwrap();
        assert!(spectrum(&s, &data, &ctx).is_err());
    }
}
