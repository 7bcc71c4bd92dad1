//! The reduction `C_λ[S²] → M_n(C)` at `λ = 1/n`: `x_i ↦ (2/n) J_i`,
//! `∂_i ↦ -i[J_i, ·]`, `∫ ↦ (1/n) Tr`.

use nalgebra::{DMatrix, Matrix2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{random_element, AlgebraElement, FuzzySphere, Parameters, C64};
use crate::dirac::{spectrum, spectrum_distance};
use crate::error::{Error, Result};
use crate::hilbert::InnerProductContext;
use crate::linalg::{cluster, commutator_operator, hermitian_eigen, kron, max_abs, to_dmatrix, Cluster, I};
use crate::spin::SpinData;

/// Spin-`(n-1)/2` angular momentum matrices, `J₃ = diag(j, …, -j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedRep {
    pub n: usize,
    pub j: [DMatrix<C64>; 3],
}

pub fn spin_matrices(n: usize) -> Result<ReducedRep> {
    if n < 2 {
        return Err(Error::InvalidMatrixSize(n));
    }
    let spin = (n as f64 - 1.0) / 2.0;
    let m = |k: usize| spin - k as f64;
    let mut raise = DMatrix::<C64>::zeros(n, n);
    for k in 1..n {
        // J+ |m_k⟩ = √(j(j+1) - m_k(m_k+1)) |m_{k-1}⟩
        let v = (spin * (spin + 1.0) - m(k) * (m(k) + 1.0)).sqrt();
        raise[(k - 1, k)] = C64::from(v);
    }
    let lower = raise.adjoint();
    let j1 = (&raise + &lower) * C64::from(0.5);
    let j2 = (&raise - &lower) * (C64::from(0.5) / I);
    let j3 = DMatrix::from_fn(n, n, |r, c| if r == c { C64::from(m(r)) } else { C64::from(0.0) });
    Ok(ReducedRep { n, j: [j1, j2, j3] })
}

impl ReducedRep {
    /// Image of `x_i` (1-based), `(2/n) J_i`.
    pub fn generator(&self, i: usize) -> Result<DMatrix<C64>> {
        if !(1..=3).contains(&i) {
            return Err(Error::AxisOutOfRange(i));
        }
        Ok(&self.j[i - 1] * C64::from(2.0 / self.n as f64))
    }

    pub fn lambda_p(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// `max_{ijk} ‖[J_i, J_j] - i ε_ijk J_k‖`.
    pub fn commutator_residual(&self) -> f64 {
        let [a, b, c] = &self.j;
        let r1 = max_abs(&(a * b - b * a - c * I));
        let r2 = max_abs(&(b * c - c * b - a * I));
        let r3 = max_abs(&(c * a - a * c - b * I));
        r1.max(r2).max(r3)
    }

    /// `‖Σ (2J_i/n)² - (1 - 1/n²) id‖`.
    pub fn casimir_residual(&self) -> f64 {
        let n = self.n;
        let mut sum = DMatrix::zeros(n, n);
        for i in 1..=3 {
            let x = self.generator(i).expect("axis in range");
            sum += &x * &x;
        }
        let target = DMatrix::identity(n, n) * C64::from(1.0 - 1.0 / (n * n) as f64);
        max_abs(&(sum - target))
    }

    /// `∂_i ↦ -i [J_i, ·]` on column-major `vec`, `i` 0-based.
    pub fn derivation(&self, i: usize) -> DMatrix<C64> {
        commutator_operator(&self.j[i]) * (-I)
    }

    /// `(1/n) Tr`.
    pub fn integral(&self, m: &DMatrix<C64>) -> C64 {
        m.trace() / C64::from(self.n as f64)
    }

    /// Left multiplication by `a` on spinors `vec(ψ₁) ⊕ vec(ψ₂)`.
    pub fn left_action(&self, a: &DMatrix<C64>) -> DMatrix<C64> {
        kron(&DMatrix::identity(2, 2), &kron(&DMatrix::identity(self.n, self.n), a))
    }
}

/// Substitutes `x_i ↦ (2/n) J_i` into each canonical monomial.
pub fn reduce(a: &AlgebraElement, rep: &ReducedRep) -> Result<DMatrix<C64>> {
    let lambda = a.params().lambda_p;
    if (lambda - rep.lambda_p()).abs() > 1e-12 {
        return Err(Error::ReductionMismatch { lambda_p: lambda, n: rep.n });
    }
    let n = rep.n;
    let x: Vec<DMatrix<C64>> = (1..=3).map(|i| rep.generator(i)).collect::<Result<_>>()?;
    let pow = |m: &DMatrix<C64>, e: u32| {
        let mut out = DMatrix::identity(n, n);
        for _ in 0..e {
            out = &out * m;
        }
        out
    };
    let mut out = DMatrix::zeros(n, n);
    for (mono, z) in a.terms() {
        out += pow(&x[0], mono.a) * pow(&x[1], mono.b) * pow(&x[2], mono.c) * *z;
    }
    Ok(out)
}

/// `iD` on `M_n ⊗ C²` as a `2n² × 2n²` matrix.
pub fn reduced_dirac(rep: &ReducedRep, data: &SpinData) -> DMatrix<C64> {
    let nn = rep.n * rep.n;
    let mut d = kron(&to_dmatrix(&data.constant_term().transpose()), &DMatrix::identity(nn, nn));
    for i in 0..3 {
        d += kron(&to_dmatrix(&data.clifford[i].transpose()), &rep.derivation(i));
    }
    d * I
}

/// Eigenvalue clusters of the hermitian part of `iD`, plus `max |iD - iD†|`.
pub fn reduced_spectrum(rep: &ReducedRep, data: &SpinData, width: f64) -> (Vec<Cluster>, f64) {
    let d = reduced_dirac(rep, data);
    let herm = max_abs(&(&d - d.adjoint()));
    let (values, _) = hermitian_eigen(&d);
    (cluster(&values, width), herm)
}

/// Agreement between the truncated model at `λ = 1/n` and its matrix image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub n: usize,
    pub lambda_p: f64,
    pub commutator_residual: f64,
    pub casimir_residual: f64,
    /// `max ‖π(ab) - π(a)π(b)‖` over sampled `a, b` of degree `≤ n-1`.
    pub homomorphism_residual: f64,
    /// `max |∫a - Tr π(a)/n|`.
    pub integral_residual: f64,
    pub reduced_hermiticity_residual: f64,
    pub reduced_spectrum: Vec<Cluster>,
    /// Spectrum of the truncation `L = n-1`; absent for non-Euclidean metrics.
    pub truncated_spectrum: Option<Vec<Cluster>>,
    pub spectrum_distance: Option<f64>,
    pub samples: usize,
}

pub fn reduction_report(n: usize, data: &SpinData, samples: usize, seed: u64, tol: f64) -> Result<ReductionReport> {
    let rep = spin_matrices(n)?;
    let lambda = rep.lambda_p();
    let width = 100.0 * tol;
    let (reduced, herm) = reduced_spectrum(&rep, data, width);
    let truncated = if data.metric.is_euclidean() {
        let s = FuzzySphere::new(Parameters::new(lambda, n - 1, tol)?);
        let ctx = InnerProductContext::new(&s, n - 1)?;
        Some(spectrum(&s, data, &ctx)?.spectrum)
    } else {
        None
    };

    let big = FuzzySphere::new(Parameters::new(lambda, 2 * (n - 1), tol)?);
    let params = *big.params();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut hom, mut int) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let a = random_element(params, n - 1, &mut rng);
        let b = random_element(params, n - 1, &mut rng);
        let (ra, rb) = (reduce(&a, &rep)?, reduce(&b, &rep)?);
        hom = hom.max(max_abs(&(reduce(&big.multiply(&a, &b)?, &rep)? - &ra * &rb)));
        int = int.max((big.integral(&a)? - rep.integral(&ra)).norm());
    }
    Ok(ReductionReport {
        n,
        lambda_p: lambda,
        commutator_residual: rep.commutator_residual(),
        casimir_residual: rep.casimir_residual(),
        homomorphism_residual: hom,
        integral_residual: int,
        reduced_hermiticity_residual: herm,
        spectrum_distance: truncated.as_ref().map(|t| spectrum_distance(&reduced, t)),
        reduced_spectrum: reduced,
        truncated_spectrum: truncated,
        samples,
    })
}

/// Spin-½ coherent state on the descending `J₃` basis:
/// `(√(1+cosθ), e^{iφ} √(1-cosθ)) / √2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentState {
    pub theta: f64,
    pub phi: f64,
    pub vector: [C64; 2],
}

pub fn coherent_state(theta: f64, phi: f64) -> Result<CoherentState> {
    if !(0.0..=std::f64::consts::PI + 1e-12).contains(&theta) || !phi.is_finite() {
        return Err(Error::InvalidState(format!("theta = {theta} must lie in [0, π]")));
    }
    let c = theta.cos();
    Ok(CoherentState {
        theta,
        phi,
        vector: [
            C64::from(((1.0 + c) / 2.0).max(0.0).sqrt()),
            C64::from_polar(((1.0 - c) / 2.0).max(0.0).sqrt(), phi),
        ],
    })
}

impl CoherentState {
    /// `⟨θ,φ| m |θ,φ⟩`.
    pub fn expectation(&self, m: &Matrix2<C64>) -> C64 {
        let [a, b] = self.vector;
        a.conj() * (m[(0, 0)] * a + m[(0, 1)] * b) + b.conj() * (m[(1, 0)] * a + m[(1, 1)] * b)
    }

    /// `(sinθ cosφ, sinθ sinφ, cosθ)`.
    pub fn direction(&self) -> [f64; 3] {
        [
            self.theta.sin() * self.phi.cos(),
            self.theta.sin() * self.phi.sin(),
            self.theta.cos(),
        ]
    }

    pub fn density_matrix(&self) -> DMatrix<C64> {
        let v = self.vector;
        DMatrix::from_fn(2, 2, |r, c| v[r] * v[c].conj())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::round_closed_form;
    use crate::geometry::QuantumMetric;
    use crate::linalg::pauli;

    #[test]
    fn spin_half_is_pauli_over_two() {
        let rep = spin_matrices(2).unwrap();
        for (j, s) in rep.j.iter().zip(pauli()) {
            assert!(max_abs(&(j - to_dmatrix(&s) * C64::from(0.5))) < 1e-15);
        }
        assert!(rep.casimir_residual() < 1e-15);
        assert!(spin_matrices(1).is_err());
    }

    #[test]
    fn spin_two_relations() {
        let rep = spin_matrices(5).unwrap();
        assert!(rep.commutator_residual() < 1e-12);
        assert!(rep.casimir_residual() < 1e-12);
    }

    #[test]
    fn reduce_examples() {
        let n = 3;
        let rep = spin_matrices(n).unwrap();
        let s = FuzzySphere::new(Parameters::new(1.0 / n as f64, 2, 1e-10).unwrap());
        assert!(max_abs(&(reduce(&s.one(), &rep).unwrap() - DMatrix::identity(n, n))) < 1e-15);
        let x1 = s.generator(1).unwrap();
        let x2 = s.generator(2).unwrap();
        let comm = &s.multiply(&x1, &x2).unwrap() - &s.multiply(&x2, &x1).unwrap();
        let target = s.generator(3).unwrap().scale(C64::new(0.0, 2.0 / n as f64));
        assert!(max_abs(&(reduce(&comm, &rep).unwrap() - reduce(&target, &rep).unwrap())) < 1e-14);

        let wrong = FuzzySphere::new(Parameters::new(0.3, 2, 1e-10).unwrap());
        assert!(matches!(reduce(&wrong.one(), &rep), Err(Error::ReductionMismatch { .. })));
    }

    #[test]
    fn n2_round_spectrum() {
        let rep = spin_matrices(2).unwrap();
        let (spec, herm) = reduced_spectrum(&rep, &SpinData::round(), 1e-8);
        assert!(herm < 1e-14);
        let mut expected = round_closed_form(0);
        expected.extend(round_closed_form(1));
        assert_eq!(spec.len(), 3);
        let total: usize = spec.iter().map(|c| c.multiplicity).sum();
        assert_eq!(total, 8);
        assert!(crate::dirac::spectrum_distance(&spec, &expected) < 1e-12);
    }

    #[test]
    fn report_for_spin_one() {
        let r = reduction_report(3, &SpinData::round(), 10, 1, 1e-10).unwrap();
        assert!(r.homomorphism_residual < 1e-10 && r.integral_residual < 1e-10);
        assert!(r.spectrum_distance.unwrap() < 1e-8);
        let lorentz = SpinData::from_metric(&QuantumMetric::diagonal(-1.0, 1.0, 1.0).unwrap(), [C64::from(0.0); 3], 1e-10).unwrap();
        let r = reduction_report(2, &lorentz, 4, 1, 1e-10).unwrap();
        assert!(r.truncated_spectrum.is_none() && r.homomorphism_residual < 1e-12);
    }

    #[test]
    fn coherent_examples() {
        let half = |st: &CoherentState| -> [f64; 3] {
            std::array::from_fn(|i| st.expectation(&(pauli()[i] * C64::from(0.5))).re)
        };
        let north = coherent_state(0.0, 0.0).unwrap();
        assert_eq!(half(&north), [0.0, 0.0, 0.5]);
        let south = coherent_state(std::f64::consts::PI, 0.3).unwrap();
        assert!((half(&south)[2] + 0.5).abs() < 1e-15);
        let equator = coherent_state(std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        let e = half(&equator);
        assert!((e[0] - 0.5).abs() < 1e-15 && e[1].abs() < 1e-15 && e[2].abs() < 1e-15);
        assert!(coherent_state(4.0, 0.0).is_err());
    }
}
