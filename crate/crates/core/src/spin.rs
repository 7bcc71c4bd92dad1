//! Constant-coefficient spinor data `(C^i, S_i, J)` over a quantum metric:
//! Clifford action, spinor connection, real structure, grading, KO dimension
//! and the moduli of solutions.

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::algebra::C64;
use crate::error::{Error, Result};
use crate::geometry::{qlc, ChristoffelSymbols, QuantumMetric};
use crate::linalg::{
    anticommutator_operator, commutator_operator, conj2, kron, lstsq, max_abs2, nullspace, pauli,
    real_nullity, to_dmatrix, I,
};

/// `C^i = O_ij σ^j λ_j^{-1/2}` in the metric's spin frame (principal roots,
/// so a negative eigenvalue contributes a factor `-i`).
pub fn clifford_from_metric(metric: &QuantumMetric) -> [Matrix2<C64>; 3] {
    let (o, lambda) = metric.spin_frame(crate::algebra::DEFAULT_TOL);
    let sigma = pauli();
    std::array::from_fn(|i| {
        let mut c = Matrix2::zeros();
        for j in 0..3 {
            let root = C64::new(lambda[j], 0.0).sqrt();
            c += sigma[j] * (C64::new(o[(i, j)], 0.0) / root);
        }
        c
    })
}

/// `S_i = O_ij ((i/4) σ^j μ_j + d_j) √λ_j` with
/// `μ_j = (-2λ_j + Σλ) / (√λ₁ √λ₂ √λ₃)`.
pub fn spinor_connection_from_metric(metric: &QuantumMetric, d: [C64; 3]) -> [Matrix2<C64>; 3] {
    let (o, lambda) = metric.spin_frame(crate::algebra::DEFAULT_TOL);
    let sigma = pauli();
    let roots: [C64; 3] = std::array::from_fn(|j| C64::new(lambda[j], 0.0).sqrt());
    let denom = roots[0] * roots[1] * roots[2];
    let total = lambda.sum();
    std::array::from_fn(|i| {
        let mut s = Matrix2::zeros();
        for j in 0..3 {
            let mu = C64::new(-2.0 * lambda[j] + total, 0.0) / denom;
            let term = sigma[j] * (I * 0.25 * mu) + Matrix2::identity() * d[j];
            s += term * (roots[j] * o[(i, j)]);
        }
        s
    })
}

/// A solution of `conj(C^i) J = ε′ J C^i`, normalised so `conj(J) J = ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealStructure {
    pub j_mat: Matrix2<C64>,
    pub eps: i8,
    pub eps_prime: i8,
    /// Complex dimension of the solution space before normalisation; `1`
    /// means the normalised solutions form a single phase family.
    pub solution_dimension: usize,
}

fn vec2(m: &Matrix2<C64>) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

fn unvec2(v: &DVector<C64>) -> Matrix2<C64> {
    Matrix2::from_column_slice(v.as_slice())
}

/// Rescale so the first non-negligible entry (row-major) is real positive.
fn fix_phase(m: Matrix2<C64>) -> Matrix2<C64> {
    let scale = max_abs2(&m);
    for r in 0..2 {
        for c in 0..2 {
            let z = m[(r, c)];
            if z.norm() > 1e-8 * scale {
                return m * (z.conj() / z.norm());
            }
        }
    }
    m
}

fn stack(ops: &[DMatrix<C64>]) -> DMatrix<C64> {
    let cols = ops[0].ncols();
    let rows: usize = ops.iter().map(|o| o.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for o in ops {
        out.view_mut((r, 0), (o.nrows(), cols)).copy_from(o);
        r += o.nrows();
    }
    out
}

/// Solves `conj(C^i) J = ε′ J C^i` for `ε′ = -1` then `+1` and normalises
/// `conj(J) J = ε id`, with the phase fixed so `q = 1`.
pub fn solve_real_structure(clifford: &[Matrix2<C64>; 3], tol: f64) -> Result<RealStructure> {
    let id = DMatrix::<C64>::identity(2, 2);
    for eps_prime in [-1i8, 1] {
        let ops: Vec<DMatrix<C64>> = clifford
            .iter()
            .map(|c| {
                let cd = to_dmatrix(c);
                kron(&id, &cd.map(|z| z.conj())) - kron(&cd.transpose(), &id) * C64::from(eps_prime as f64)
            })
            .collect();
        let ns = nullspace(&stack(&ops), tol);
        let Some(first) = ns.first() else { continue };
        let j0 = fix_phase(unvec2(first));
        let jj = conj2(&j0) * j0;
        let c = jj[(0, 0)];
        if (jj - Matrix2::identity() * c).iter().any(|z| z.norm() > 1e3 * tol) || c.im.abs() > 1e3 * tol {
            continue;
        }
        let j_mat = j0 * C64::from(c.re.abs().sqrt().recip());
        let eps = if c.re > 0.0 { 1 } else { -1 };
        return Ok(RealStructure {
            j_mat,
            eps,
            eps_prime,
            solution_dimension: ns.len(),
        });
    }
    Err(Error::NoRealStructure)
}

/// Dimension of `{γ : {C^i, γ} = 0 for all supplied i}` and a basis.
pub fn solve_gamma(clifford: &[Matrix2<C64>], tol: f64) -> (usize, Vec<Matrix2<C64>>) {
    if clifford.is_empty() {
        return (4, Vec::new());
    }
    let ops: Vec<DMatrix<C64>> = clifford
        .iter()
        .map(|c| anticommutator_operator(&to_dmatrix(c)))
        .collect();
    let ns = nullspace(&stack(&ops), tol);
    let basis: Vec<Matrix2<C64>> = ns.iter().map(unvec2).collect();
    (basis.len(), basis)
}

/// Affine solution space of `[C^i, S_j] = -½ Γ^i_jk C^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionModuli {
    /// Minimum-norm particular solution.
    pub particular: [Matrix2<C64>; 3],
    /// Complex basis of the homogeneous solutions.
    pub kernel: Vec<[Matrix2<C64>; 3]>,
    pub residual: f64,
}

impl ConnectionModuli {
    pub fn kernel_dimension(&self) -> usize {
        self.kernel.len()
    }
}

pub fn solve_connection_moduli(
    clifford: &[Matrix2<C64>; 3],
    gamma: &ChristoffelSymbols,
    tol: f64,
) -> ConnectionModuli {
    let ops: Vec<DMatrix<C64>> = clifford.iter().map(|c| commutator_operator(&to_dmatrix(c))).collect();
    let a = stack(&ops);
    let mut particular = [Matrix2::zeros(); 3];
    let mut kernel = Vec::new();
    let mut residual = 0.0f64;
    for j in 0..3 {
        let mut rhs = DVector::zeros(12);
        for i in 0..3 {
            let mut target = Matrix2::zeros();
            for k in 0..3 {
                target += clifford[k] * C64::from(-0.5 * gamma.upper[i][j][k]);
            }
            rhs.rows_mut(4 * i, 4).copy_from(&vec2(&target));
        }
        let x = lstsq(&a, &rhs, tol);
        residual = residual.max((&a * &x - &rhs).iter().map(|z| z.norm()).fold(0.0, f64::max));
        particular[j] = unvec2(&x);
        for v in nullspace(&a, tol) {
            let mut slot = [Matrix2::zeros(); 3];
            slot[j] = fix_phase(unvec2(&v));
            kernel.push(slot);
        }
    }
    ConnectionModuli {
        particular,
        kernel,
        residual,
    }
}

/// Real dimension of the kernel directions that keep `conj(S_i) J = J S_i`.
pub fn reality_constrained_dimension(moduli: &ConnectionModuli, j_mat: &Matrix2<C64>, tol: f64) -> usize {
    let n = moduli.kernel.len();
    if n == 0 {
        return 0;
    }
    let mut map = DMatrix::<f64>::zeros(3 * 8, 2 * n);
    for (k, dir) in moduli.kernel.iter().enumerate() {
        for (col, scale) in [(2 * k, C64::new(1.0, 0.0)), (2 * k + 1, I)] {
            for slot in 0..3 {
                let s = dir[slot] * scale;
                let image = conj2(&s) * j_mat - j_mat * s;
                for (e, z) in image.iter().enumerate() {
                    map[(slot * 8 + 2 * e, col)] = z.re;
                    map[(slot * 8 + 2 * e + 1, col)] = z.im;
                }
            }
        }
    }
    real_nullity(&map, tol)
}

/// Odd-dimensional KO table indexed by `(ε, ε′)` for the self-adjoint
/// operator of the triple.
pub fn ko_dimension(eps: i8, eps_prime: i8) -> Result<u8> {
    match (eps, eps_prime) {
        (1, -1) => Ok(1),
        (-1, 1) => Ok(3),
        (-1, -1) => Ok(5),
        (1, 1) => Ok(7),
        _ => Err(Error::InvalidSigns(eps, eps_prime)),
    }
}

/// The full spinor data for one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinData {
    pub metric: QuantumMetric,
    pub christoffel: ChristoffelSymbols,
    pub clifford: [Matrix2<C64>; 3],
    pub connection: [Matrix2<C64>; 3],
    pub j_mat: Matrix2<C64>,
    pub eps: i8,
    /// Sign for `D`; the sign for `iD` is its negative.
    pub eps_prime: i8,
    pub q: C64,
    pub d: [C64; 3],
    pub gamma: Option<Matrix2<C64>>,
}

impl SpinData {
    pub fn from_metric(metric: &QuantumMetric, d: [C64; 3], tol: f64) -> Result<Self> {
        let clifford = clifford_from_metric(metric);
        let connection = spinor_connection_from_metric(metric, d);
        let real = solve_real_structure(&clifford, tol)?;
        let (_, gammas) = solve_gamma(&clifford, tol);
        Ok(Self {
            metric: metric.clone(),
            christoffel: qlc(metric),
            clifford,
            connection,
            j_mat: real.j_mat,
            eps: real.eps,
            eps_prime: real.eps_prime,
            q: C64::new(1.0, 0.0),
            d,
            gamma: gammas.into_iter().next(),
        })
    }

    pub fn round() -> Self {
        Self::from_metric(&QuantumMetric::round(), [C64::new(0.0, 0.0); 3], crate::algebra::DEFAULT_TOL)
            .expect("round metric has spin data")
    }

    /// Multiplies `J` by a phase.
    pub fn with_phase(mut self, q: C64) -> Self {
        self.j_mat *= q;
        self.q *= q;
        self
    }

    /// `Σ_i S_i C^i`, the constant part of `D`.
    pub fn constant_term(&self) -> Matrix2<C64> {
        (0..3).map(|i| self.connection[i] * self.clifford[i]).sum()
    }

    pub fn eps_prime_idirac(&self) -> i8 {
        -self.eps_prime
    }
}

/// `C′ = U C U⁻¹`, `S′ = U S U⁻¹`, `J′ = conj(U) J U⁻¹`; requires `det U = 1`.
pub fn conjugate_spin_data(data: &SpinData, u: &Matrix2<C64>, tol: f64) -> Result<SpinData> {
    let det = u.determinant();
    if (det - C64::new(1.0, 0.0)).norm() > tol {
        return Err(Error::NonUnimodular(format!("{det}")));
    }
    let u_inv = u.try_inverse().ok_or_else(|| Error::NonUnimodular(format!("{det}")))?;
    let conj = |m: &Matrix2<C64>| u * m * u_inv;
    Ok(SpinData {
        metric: data.metric.clone(),
        christoffel: data.christoffel.clone(),
        clifford: data.clifford.each_ref().map(conj),
        connection: data.connection.each_ref().map(conj),
        j_mat: conj2(u) * data.j_mat * u_inv,
        eps: data.eps,
        eps_prime: data.eps_prime,
        q: data.q,
        d: data.d,
        gamma: data.gamma.as_ref().map(conj),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomResidual {
    pub eq: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub residuals: Vec<AxiomResidual>,
    pub eps: i8,
    pub eps_prime: i8,
    pub eps_prime_idirac: i8,
    pub ko_dimension: Option<u8>,
    pub grading_dimension: usize,
    pub grading: String,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn residual(&self, eq: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.eq == eq).map(|r| r.residual)
    }
}

/// Residuals of the Clifford (CC), connection (CS), and real-structure
/// (JJ, SJ, CJ) equations, plus signs and grading status.
pub fn verify_axioms(data: &SpinData, tol: f64) -> AxiomReport {
    let g_inv = data.metric.inverse();
    let c = &data.clifford;
    let s = &data.connection;
    let j = &data.j_mat;

    let mut cc = 0.0f64;
    for a in 0..3 {
        for b in 0..3 {
            let lhs = c[a] * c[b] + c[b] * c[a];
            cc = cc.max(max_abs2(&(lhs - Matrix2::identity() * C64::from(2.0 * g_inv[(a, b)]))));
        }
    }
    let mut cs = 0.0f64;
    for i in 0..3 {
        for jj in 0..3 {
            let mut rhs = Matrix2::zeros();
            for k in 0..3 {
                rhs += c[k] * C64::from(-0.5 * data.christoffel.upper[i][jj][k]);
            }
            cs = cs.max(max_abs2(&(c[i] * s[jj] - s[jj] * c[i] - rhs)));
        }
    }
    let jj_res = max_abs2(&(conj2(j) * j - Matrix2::identity() * C64::from(data.eps as f64)));
    let sj = (0..3)
        .map(|i| max_abs2(&(conj2(&s[i]) * j - j * s[i])))
        .fold(0.0, f64::max);
    let cj = (0..3)
        .map(|i| max_abs2(&(conj2(&c[i]) * j - j * c[i] * C64::from(data.eps_prime as f64))))
        .fold(0.0, f64::max);

    let (grading_dimension, _) = solve_gamma(c, tol);
    let eps_prime_idirac = data.eps_prime_idirac();
    AxiomReport {
        residuals: [("CC", cc), ("CS", cs), ("JJ", jj_res), ("SJ", sj), ("CJ", cj)]
            .into_iter()
            .map(|(eq, residual)| AxiomResidual {
                eq: eq.to_string(),
                residual,
            })
            .collect(),
        eps: data.eps,
        eps_prime: data.eps_prime,
        eps_prime_idirac,
        ko_dimension: if grading_dimension == 0 {
            ko_dimension(data.eps, eps_prime_idirac).ok()
        } else {
            None
        },
        grading_dimension,
        grading: if grading_dimension == 0 { "absent" } else { "present" }.to_string(),
    }
}
