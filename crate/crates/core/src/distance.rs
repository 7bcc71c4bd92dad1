//! Connes spectral distance on the reduced fuzzy sphere `M_n(C)`:
//! `d(ω, ω′) = sup { |ω(a) - ω′(a)| : ‖[iD, a]‖ ≤ 1 }`.
//!
//! The supremum over hermitian traceless `a` is a semidefinite program in the
//! coordinates of `a`: `i[iD, a]` is hermitian, so the constraint is the pair
//! of matrix inequalities `-1 ⪯ i[iD, a] ⪯ 1`. It is solved with a
//! log-barrier path-following method; the central point also yields a dual
//! feasible pair, which bounds the optimum from above.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::algebra::C64;
use crate::error::{Error, Result};
use crate::linalg::{gell_mann, hermitian_eigen, max_abs, operator_norm, I};
use crate::reduced::{coherent_state, reduced_dirac, ReducedRep};
use crate::spin::SpinData;

/// A state `ω(a) = Tr(ρ a)` on `M_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    rho: DMatrix<C64>,
}

impl State {
    pub fn new(rho: DMatrix<C64>, tol: f64) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::InvalidState("density matrix must be square".into()));
        }
        let asym = max_abs(&(&rho - rho.adjoint()));
        if asym > tol {
            return Err(Error::InvalidState(format!("not hermitian (asymmetry {asym:.3e})")));
        }
        let tr = rho.trace();
        if (tr - C64::from(1.0)).norm() > tol {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = hermitian_eigen(&rho).0[0];
        if min < -tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { rho })
    }

    /// The pure state `|v⟩⟨v|` (normalised).
    pub fn pure(v: &DVector<C64>) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = v / C64::from(norm);
        Ok(Self {
            rho: &v * v.adjoint(),
        })
    }

    /// Spin-½ coherent state.
    pub fn coherent(theta: f64, phi: f64) -> Result<Self> {
        Ok(Self {
            rho: coherent_state(theta, phi)?.density_matrix(),
        })
    }

    /// Spin-`(n-1)/2` coherent state `exp(-iφJ₃) exp(-iθJ₂)|j, j⟩` (up to a
    /// global phase) on the descending `J₃` basis; agrees with
    /// [`State::coherent`] at `n = 2`.
    pub fn spin_coherent(n: usize, theta: f64, phi: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMatrixSize(n));
        }
        coherent_state(theta, phi)?;
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let mut binom = 1.0;
        let v = DVector::from_fn(n, |k, _| {
            if k > 0 {
                binom *= (n - k) as f64 / k as f64;
            }
            C64::from_polar(binom.sqrt() * c.powi((n - 1 - k) as i32) * s.powi(k as i32), k as f64 * phi)
        });
        Self::pure(&v)
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn density_matrix(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn evaluate(&self, a: &DMatrix<C64>) -> C64 {
        (&self.rho * a).trace()
    }

    /// For `n = 2`: `r` with `ρ = (1 + r·σ)/2`.
    pub fn bloch_vector(&self) -> Option<[f64; 3]> {
        if self.dim() != 2 {
            return None;
        }
        let r = &self.rho;
        Some([
            2.0 * r[(0, 1)].re,
            -2.0 * r[(0, 1)].im,
            (r[(0, 0)] - r[(1, 1)]).re,
        ])
    }
}

/// `‖[iD, a ⊗ id]‖` (largest singular value) on the reduced spinor space;
/// `idirac` is the matrix from [`reduced_dirac`].
pub fn lipschitz_seminorm(a: &DMatrix<C64>, idirac: &DMatrix<C64>, rep: &ReducedRep) -> f64 {
    let action = rep.left_action(a);
    operator_norm(&(idirac * &action - &action * idirac))
}

/// `sin(Θ/2) = |n - n′| / 2` for spin-½ coherent states.
pub fn distance_n2_analytic(theta: f64, phi: f64, theta2: f64, phi2: f64) -> f64 {
    let n = |t: f64, p: f64| [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
    let (a, b) = (n(theta, phi), n(theta2, phi2));
    0.5 * (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceOptions {
    /// Target duality gap.
    pub gap_tol: f64,
    pub max_outer: usize,
    pub max_newton: usize,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-9,
            max_outer: 60,
            max_newton: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Row-major `[re, im]` entries of the optimising hermitian `a`.
    pub certificate: Vec<Vec<[f64; 2]>>,
    pub certificate_seminorm: f64,
    pub converged: bool,
    pub newton_steps: usize,
}

impl DistanceResult {
    pub fn certificate_matrix(&self) -> DMatrix<C64> {
        let n = self.certificate.len();
        DMatrix::from_fn(n, n, |r, c| C64::new(self.certificate[r][c][0], self.certificate[r][c][1]))
    }
}

struct Barrier {
    h: Vec<DMatrix<C64>>,
    dim: usize,
}

impl Barrier {
    fn operator(&self, y: &DVector<f64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for (k, hk) in self.h.iter().enumerate() {
            out += hk * C64::from(y[k]);
        }
        out
    }

    /// Cholesky factors of `1 ∓ H(y)`, or `None` outside the feasible region.
    fn factors(&self, y: &DVector<f64>) -> Option<(Cholesky<C64, Dyn>, Cholesky<C64, Dyn>)> {
        let h = self.operator(y);
        let id = DMatrix::<C64>::identity(self.dim, self.dim);
        Some((Cholesky::new(&id - &h)?, Cholesky::new(&id + &h)?))
    }

    /// `L⁻¹ H_k L⁻ᴴ` for `1 ∓ H = L Lᴴ`; gradient and Hessian of the barrier
    /// are traces of these, which stay well scaled near the boundary.
    fn scaled(&self, chol: &Cholesky<C64, Dyn>) -> Vec<DMatrix<C64>> {
        let l = chol.l();
        self.h
            .iter()
            .map(|hk| {
                let left = l.solve_lower_triangular(hk).expect("nonsingular factor");
                let both = l
                    .solve_lower_triangular(&left.adjoint())
                    .expect("nonsingular factor");
                both.adjoint()
            })
            .collect()
    }
}

struct NewtonSystem {
    minus: Cholesky<C64, Dyn>,
    plus: Cholesky<C64, Dyn>,
    sm: Vec<DMatrix<C64>>,
    sp: Vec<DMatrix<C64>>,
    step: DVector<f64>,
    decrement: f64,
}

impl Barrier {
    /// Newton system of `-t cᵀy - log det(1 - H) - log det(1 + H)` at `y`.
    fn newton(&self, y: &DVector<f64>, t: f64, c: &DVector<f64>) -> Option<NewtonSystem> {
        let m = self.h.len();
        let (minus, plus) = self.factors(y)?;
        let sm = self.scaled(&minus);
        let sp = self.scaled(&plus);
        let grad = DVector::from_fn(m, |k, _| -t * c[k] + sm[k].trace().re - sp[k].trace().re);
        let hess = DMatrix::from_fn(m, m, |k, l| frobenius_re(&sm[k], &sm[l]) + frobenius_re(&sp[k], &sp[l]));
        let step = -Cholesky::new(hess)?.solve(&grad);
        let decrement = -grad.dot(&step);
        Some(NewtonSystem { minus, plus, sm, sp, step, decrement })
    }
}

fn frobenius_re(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum()
}

/// Maximises `ω(a) - ω′(a)` over hermitian traceless `a` with
/// `‖[iD, a]‖ ≤ 1`. For `n = 2` the upper bound is also capped by the exact
/// value `|r - r′|/2` from the Bloch vectors.
pub fn distance_numeric(
    omega: &State,
    omega2: &State,
    rep: &ReducedRep,
    data: &SpinData,
    opts: &DistanceOptions,
) -> Result<DistanceResult> {
    let n = rep.n;
    if omega.dim() != n || omega2.dim() != n {
        return Err(Error::InvalidState(format!("states must be {n}×{n}")));
    }
    if !data.metric.is_euclidean() {
        return Err(Error::InvalidParameters(
            "spectral distance requires a metric of Euclidean signature".into(),
        ));
    }
    let idirac = reduced_dirac(rep, data);
    let basis = gell_mann(n);
    let delta = omega.density_matrix() - omega2.density_matrix();
    let c = DVector::from_iterator(basis.len(), basis.iter().map(|e| (&delta * e).trace().re));
    let h: Vec<DMatrix<C64>> = basis
        .iter()
        .map(|e| {
            let a = rep.left_action(e);
            (&idirac * &a - &a * &idirac) * I
        })
        .collect();
    let dim = idirac.nrows();
    let barrier = Barrier { h, dim };
    let m = basis.len();

    let analytic_cap = match (omega.bloch_vector(), omega2.bloch_vector()) {
        (Some(r), Some(r2)) => Some(0.5 * (0..3).map(|k| (r[k] - r2[k]).powi(2)).sum::<f64>().sqrt()),
        _ => None,
    };

    let mut y = DVector::<f64>::zeros(m);
    let mut newton_steps = 0;
    let mut converged = false;
    let mut upper = f64::INFINITY;

    if c.norm() > 1e-15 {
        let p = 2.0 * dim as f64;
        let mut t = 1.0 / c.norm().max(1e-12);
        for _ in 0..opts.max_outer {
            let mut last_decrement = f64::INFINITY;
            for _ in 0..opts.max_newton {
                let Some(sys) = barrier.newton(&y, t, &c) else { break };
                let (step, decrement) = (sys.step, sys.decrement);
                newton_steps += 1;
                if decrement < 1e-24 || decrement >= last_decrement {
                    break;
                }
                last_decrement = decrement;
                // damped step 1/(1+√δ) stays inside the Dikin ellipsoid
                let mut s = if decrement > 0.0625 { 1.0 / (1.0 + decrement.sqrt()) } else { 1.0 };
                while barrier.factors(&(&y + &step * s)).is_none() && s > 1e-12 {
                    s *= 0.5;
                }
                if s <= 1e-12 {
                    break;
                }
                y += &step * s;
            }
            // dual pair Z± = (1 ∓ H)⁻¹ / t, moved along the final Newton step v:
            // Z± = L±⁻ᴴ (1 ± Σ v_k L±⁻¹ H_k L±⁻ᴴ) L±⁻¹ / t satisfies the dual
            // equality constraints to rounding and is PSD when the middle
            // factor is
            if let Some(sys) = barrier.newton(&y, t, &c) {
                let id = DMatrix::<C64>::identity(dim, dim);
                let mut mid_minus = id.clone();
                let mut mid_plus = id;
                for k in 0..m {
                    mid_minus += &sys.sm[k] * C64::from(sys.step[k]);
                    mid_plus -= &sys.sp[k] * C64::from(sys.step[k]);
                }
                if hermitian_eigen(&mid_minus).0[0] >= 0.0 && hermitian_eigen(&mid_plus).0[0] >= 0.0 {
                    let dual_trace = |chol: &Cholesky<C64, Dyn>, mid: &DMatrix<C64>| {
                        let linv = chol
                            .l()
                            .solve_lower_triangular(&DMatrix::identity(dim, dim))
                            .expect("nonsingular factor");
                        (linv.adjoint() * mid * linv).trace().re
                    };
                    let dual = (dual_trace(&sys.minus, &mid_minus) + dual_trace(&sys.plus, &mid_plus)) / t;
                    upper = upper.min(dual);
                }
            }
            if upper - c.dot(&y) <= opts.gap_tol {
                converged = true;
                break;
            }
            if p / t < opts.gap_tol * 1e-3 {
                break;
            }
            t *= 10.0;
        }
    } else {
        upper = 0.0;
        converged = true;
    }

    let lower = c.dot(&y);
    if let Some(cap) = analytic_cap {
        upper = upper.min(cap.max(lower));
    }
    let mut a = DMatrix::zeros(n, n);
    for (k, e) in basis.iter().enumerate() {
        a += e * C64::from(y[k]);
    }
    let certificate_seminorm = lipschitz_seminorm(&a, &idirac, rep);
    Ok(DistanceResult {
        value: lower,
        lower,
        upper: upper.max(lower),
        certificate: (0..n).map(|r| (0..n).map(|col| [a[(r, col)].re, a[(r, col)].im]).collect()).collect(),
        certificate_seminorm,
        converged,
        newton_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli, to_dmatrix};
    use crate::reduced::spin_matrices;
    use std::f64::consts::PI;

    #[test]
    fn seminorm_examples() {
        let rep = spin_matrices(2).unwrap();
        let d = reduced_dirac(&rep, &SpinData::round());
        let s = pauli();
        let a = to_dmatrix(&s[2]) * C64::from(0.5);
        assert!((lipschitz_seminorm(&a, &d, &rep) - 1.0).abs() < 1e-12);
        assert!(lipschitz_seminorm(&DMatrix::identity(2, 2), &d, &rep) < 1e-14);
        let b = to_dmatrix(&(s[0] + s[1])) * C64::from(0.5);
        assert!((lipschitz_seminorm(&b, &d, &rep) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn analytic_examples() {
        assert!((distance_n2_analytic(0.0, 0.0, PI, 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(distance_n2_analytic(0.4, 1.0, 0.4, 1.0), 0.0);
        assert!((distance_n2_analytic(0.0, 0.0, PI / 2.0, 0.0) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn numeric_matches_analytic() {
        let rep = spin_matrices(2).unwrap();
        let data = SpinData::round();
        for theta in [0.0, 0.7, PI / 2.0, PI] {
            let r = distance_numeric(
                &State::coherent(0.0, 0.0).unwrap(),
                &State::coherent(theta, 0.3).unwrap(),
                &rep,
                &data,
                &DistanceOptions::default(),
            )
            .unwrap();
            let exact = distance_n2_analytic(0.0, 0.0, theta, 0.3);
            assert!((r.value - exact).abs() < 1e-8, "{theta}: {r:?}");
            assert!(r.lower <= r.upper + 1e-15 && r.certificate_seminorm <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn n3_bounds_close() {
        let rep = spin_matrices(3).unwrap();
        let e = |k: usize| DVector::from_fn(3, |r, _| C64::from(if r == k { 1.0 } else { 0.0 }));
        let r = distance_numeric(
            &State::pure(&e(0)).unwrap(),
            &State::pure(&e(2)).unwrap(),
            &rep,
            &SpinData::round(),
            &DistanceOptions::default(),
        )
        .unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.upper - r.lower < 1e-8);
        assert!(r.certificate_seminorm <= 1.0 + 1e-10);
    }

    #[test]
    fn spin_coherent_states() {
        let a = State::spin_coherent(2, 0.9, 0.4).unwrap();
        let b = State::coherent(0.9, 0.4).unwrap();
        assert!(max_abs(&(a.density_matrix() - b.density_matrix())) < 1e-15);
        // ⟨J₃⟩ = j cosθ
        let rep = spin_matrices(4).unwrap();
        let st = State::spin_coherent(4, 1.1, -0.3).unwrap();
        assert!((st.evaluate(&rep.j[2]).re - 1.5 * 1.1f64.cos()).abs() < 1e-14);
        assert!((st.density_matrix().trace().re - 1.0).abs() < 1e-14);
        assert!(State::spin_coherent(1, 0.0, 0.0).is_err());
    }

    #[test]
    fn state_validation() {
        let bad = DMatrix::from_diagonal_element(2, 2, C64::from(1.0));
        assert!(State::new(bad, 1e-10).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[C64::from(1.5), C64::from(0.0), C64::from(0.0), C64::from(-0.5)]);
        assert!(State::new(neg, 1e-10).is_err());
    }
}
