//! Constant-coefficient quantum metrics `g = g_ij s^i ⊗ s^j` and their quantum
//! Levi-Civita connection `∇s^i = -½ Γ^i_jk s^j ⊗ s^k`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::calculus::{levi_civita, maurer_cartan, wedge_basis};
use crate::error::{Error, Result};

/// Real symmetric invertible metric coefficients with a cached
/// eigendecomposition `g = O diag(λ) Oᵀ`, `O ∈ SO(3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumMetric {
    g: Matrix3<f64>,
    g_inv: Matrix3<f64>,
    frame: Matrix3<f64>,
    eigenvalues: Vector3<f64>,
}

impl QuantumMetric {
    pub fn new(g: Matrix3<f64>, tol: f64) -> Result<Self> {
        let scale = g.amax().max(1.0);
        let asym = (g - g.transpose()).amax();
        if asym > tol * scale {
            return Err(Error::NonSymmetricMetric(asym));
        }
        let g = (g + g.transpose()) * 0.5;
        let det = g.determinant();
        if det.abs() <= tol * scale.powi(3) {
            return Err(Error::SingularMetric(det));
        }
        let g_inv = g.try_inverse().ok_or(Error::SingularMetric(det))?;
        let (frame, eigenvalues) = eigendecompose(&g, tol);
        Ok(Self {
            g,
            g_inv,
            frame,
            eigenvalues,
        })
    }

    /// `g_ij = δ_ij`.
    pub fn round() -> Self {
        Self::new(Matrix3::identity(), crate::algebra::DEFAULT_TOL).expect("identity is a metric")
    }

    pub fn diagonal(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(Matrix3::from_diagonal(&Vector3::new(a, b, c)), crate::algebra::DEFAULT_TOL)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.g
    }

    pub fn inverse(&self) -> &Matrix3<f64> {
        &self.g_inv
    }

    /// Orthonormal eigenvectors as columns, determinant `+1`.
    pub fn eigen_frame(&self) -> &Matrix3<f64> {
        &self.frame
    }

    /// Eigenvalues, sorted descending.
    pub fn eigenvalues(&self) -> &Vector3<f64> {
        &self.eigenvalues
    }

    pub fn trace(&self) -> f64 {
        self.g.trace()
    }

    pub fn determinant(&self) -> f64 {
        self.g.determinant()
    }

    /// `(positive, negative)` eigenvalue counts.
    pub fn signature(&self) -> (usize, usize) {
        let pos = self.eigenvalues.iter().filter(|l| **l > 0.0).count();
        (pos, 3 - pos)
    }

    pub fn is_euclidean(&self) -> bool {
        self.signature() == (3, 0)
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| i == j || self.g[(i, j)].abs() <= tol))
    }

    pub fn is_round(&self, tol: f64) -> bool {
        (self.g - Matrix3::identity()).amax() <= tol
    }

    /// Frame used to build Clifford matrices: the coordinate frame when `g`
    /// is diagonal, the sorted eigenframe otherwise.
    pub fn spin_frame(&self, tol: f64) -> (Matrix3<f64>, Vector3<f64>) {
        if self.is_diagonal(tol) {
            (Matrix3::identity(), self.g.diagonal())
        } else {
            (self.frame, self.eigenvalues)
        }
    }

    /// `‖O diag(λ) Oᵀ - g‖_max`.
    pub fn reconstruction_residual(&self) -> f64 {
        let rebuilt = self.frame * Matrix3::from_diagonal(&self.eigenvalues) * self.frame.transpose();
        (rebuilt - self.g).amax()
    }

    /// Row-major coefficients.
    pub fn to_row_major(&self) -> [f64; 9] {
        std::array::from_fn(|k| self.g[(k / 3, k % 3)])
    }
}

impl fmt::Display for QuantumMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_row_major();
        let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for QuantumMetric {
    type Err = Error;

    /// Accepts `round`, `diag:a,b,c`, or nine comma-separated floats (row-major).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse_list = |body: &str| -> Result<Vec<f64>> {
            body.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::MetricParse(format!("{t:?}: {e}")))
                })
                .collect()
        };
        if s.eq_ignore_ascii_case("round") {
            return Ok(Self::round());
        }
        if let Some(body) = s.strip_prefix("diag:") {
            let v = parse_list(body)?;
            if v.len() != 3 {
                return Err(Error::MetricParse(format!(
                    "diag needs 3 entries, got {}",
                    v.len()
                )));
            }
            return Self::diagonal(v[0], v[1], v[2]);
        }
        let v = parse_list(s)?;
        if v.len() != 9 {
            return Err(Error::MetricParse(format!(
                "expected 'round', 'diag:a,b,c' or 9 floats, got {} values",
                v.len()
            )));
        }
        Self::new(Matrix3::from_row_slice(&v), crate::algebra::DEFAULT_TOL)
    }
}

/// Deterministic eigendecomposition: eigenvalues descending, the largest
/// magnitude entry of each eigenvector positive, last column flipped if the
/// determinant would be `-1`.
pub fn eigendecompose(g: &Matrix3<f64>, tol: f64) -> (Matrix3<f64>, Vector3<f64>) {
    let diagonal = (0..3).all(|i| (0..3).all(|j| i == j || g[(i, j)].abs() <= tol));
    let (vectors, values) = if diagonal {
        (Matrix3::identity(), g.diagonal())
    } else {
        let eig = SymmetricEigen::new(*g);
        (eig.eigenvectors, eig.eigenvalues)
    };
    let mut order = [0usize, 1, 2];
    // stable sort keeps coordinate order within degenerate eigenvalues
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
    let mut frame = Matrix3::zeros();
    let mut sorted = Vector3::zeros();
    for (col, &src) in order.iter().enumerate() {
        let mut v = vectors.column(src).into_owned();
        let mut pivot = 0;
        for r in 1..3 {
            if v[r].abs() > v[pivot].abs() + 1e-14 {
                pivot = r;
            }
        }
        if v[pivot] < 0.0 {
            v = -v;
        }
        frame.set_column(col, &v);
        sorted[col] = values[src];
    }
    if frame.determinant() < 0.0 {
        let last = -frame.column(2).into_owned();
        frame.set_column(2, &last);
    }
    (frame, sorted)
}

/// Christoffel symbols of a constant-coefficient connection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChristoffelSymbols {
    /// `Γ^i_jk`, indexed `[i][j][k]` (0-based).
    pub upper: [[[f64; 3]; 3]; 3],
    /// `Γ_ijk = g_im Γ^m_jk`.
    pub lower: [[[f64; 3]; 3]; 3],
}

impl ChristoffelSymbols {
    /// Builds both index positions from raised symbols.
    pub fn from_upper(metric: &QuantumMetric, upper: [[[f64; 3]; 3]; 3]) -> Self {
        let g = metric.matrix();
        let mut lower = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    lower[i][j][k] = (0..3).map(|m| g[(i, m)] * upper[m][j][k]).sum();
                }
            }
        }
        Self { upper, lower }
    }
}

/// The unique constant-coefficient QLC, `Γ_ijk = 2 ε_ikm g_mj + Tr(g) ε_ijk`.
pub fn qlc(metric: &QuantumMetric) -> ChristoffelSymbols {
    let g = metric.matrix();
    let tr = metric.trace();
    let mut lower = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let twist: f64 = (0..3).map(|m| levi_civita(i, k, m) * g[(m, j)]).sum();
                lower[i][j][k] = 2.0 * twist + tr * levi_civita(i, j, k);
            }
        }
    }
    let g_inv = metric.inverse();
    let mut upper = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                upper[i][j][k] = (0..3).map(|m| g_inv[(i, m)] * lower[m][j][k]).sum();
            }
        }
    }
    ChristoffelSymbols { upper, lower }
}

/// `max_i ‖∧∇s^i - d s^i‖` on the two-form basis.
pub fn torsion_residual(gamma: &ChristoffelSymbols) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..3 {
        let mut wedge_nabla = [0.0; 3];
        for j in 0..3 {
            for k in 0..3 {
                if let Some((m, sign)) = wedge_basis(j, k) {
                    wedge_nabla[m] += -0.5 * gamma.upper[i][j][k] * sign;
                }
            }
        }
        let ds = maurer_cartan(i);
        for m in 0..3 {
            worst = worst.max((wedge_nabla[m] - ds[m]).abs());
        }
    }
    worst
}

/// Largest coefficient of `∇(g_ij s^i ⊗ s^j)` on the `s^k ⊗ s^m ⊗ s^n` basis,
/// using the tensor-product connection with the flip braiding. The
/// coefficient is `-½ (Γ_nkm + Γ_mkn)`.
pub fn metric_compatibility_residual(metric: &QuantumMetric, gamma: &ChristoffelSymbols) -> f64 {
    let g = metric.matrix();
    let mut worst = 0.0f64;
    for k in 0..3 {
        for m in 0..3 {
            for n in 0..3 {
                let mut coeff = 0.0;
                for i in 0..3 {
                    // ∇s^i ⊗ s^j term: -½ Γ^i_km g_in
                    coeff += -0.5 * g[(i, n)] * gamma.upper[i][k][m];
                    // flip(s^i ⊗ ∇s^j) term: -½ Γ^j_kn g_mj
                    coeff += -0.5 * g[(m, i)] * gamma.upper[i][k][n];
                }
                worst = worst.max(coeff.abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        let axis = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        Rotation3::from_scaled_axis(axis.normalize() * angle).into_inner()
    }

    fn random_spd(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        let r = random_rotation(rng);
        let d = Matrix3::from_diagonal(&Vector3::new(
            rng.gen_range(0.3..3.0),
            rng.gen_range(0.3..3.0),
            rng.gen_range(0.3..3.0),
        ));
        r * d * r.transpose()
    }

    #[test]
    fn eigendecompose_identity() {
        let m = QuantumMetric::round();
        assert_eq!(*m.eigen_frame(), Matrix3::identity());
        assert_eq!(*m.eigenvalues(), Vector3::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn eigendecompose_lorentzian() {
        let m = QuantumMetric::diagonal(-1.0, 1.0, 1.0).unwrap();
        assert_eq!(*m.eigenvalues(), Vector3::new(1.0, 1.0, -1.0));
        let o = m.eigen_frame();
        assert!((o.determinant() - 1.0).abs() < 1e-15);
        // a permutation matrix
        for v in o.iter() {
            assert!(*v == 0.0 || *v == 1.0 || *v == -1.0);
        }
        assert!(m.reconstruction_residual() < 1e-15);
        assert_eq!(m.signature(), (2, 1));
    }

    #[test]
    fn eigendecompose_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = QuantumMetric::new(random_spd(&mut rng), 1e-10).unwrap();
            assert!(m.reconstruction_residual() < 1e-12);
            assert!((m.eigen_frame().determinant() - 1.0).abs() < 1e-12);
            let l = m.eigenvalues();
            assert!(l[0] >= l[1] && l[1] >= l[2]);
        }
    }

    #[test]
    fn metric_errors() {
        let mut g = Matrix3::identity();
        g[(0, 1)] = 0.5;
        assert!(matches!(QuantumMetric::new(g, 1e-10), Err(Error::NonSymmetricMetric(_))));
        let singular = Matrix3::from_diagonal(&Vector3::new(1.0, 0.0, 1.0));
        assert!(matches!(QuantumMetric::new(singular, 1e-10), Err(Error::SingularMetric(_))));
    }

    #[test]
    fn parse_metric_specs() {
        assert!("round".parse::<QuantumMetric>().unwrap().is_round(0.0));
        let d: QuantumMetric = "diag:-1,1,1".parse().unwrap();
        assert_eq!(d.matrix()[(0, 0)], -1.0);
        let full: QuantumMetric = "2,0.1,0, 0.1,1,0, 0,0,1".parse().unwrap();
        assert_eq!(full.matrix()[(0, 1)], 0.1);
        assert!("diag:1,2".parse::<QuantumMetric>().is_err());
        assert!("1,2,3".parse::<QuantumMetric>().is_err());
        assert!("1,2,3,4,5,6,7,8,9".parse::<QuantumMetric>().is_err());
        assert!("diag:1,x,1".parse::<QuantumMetric>().is_err());
    }

    #[test]
    fn round_qlc_is_epsilon() {
        let gamma = qlc(&QuantumMetric::round());
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert_eq!(gamma.lower[i][j][k], levi_civita(i, j, k));
                    assert_eq!(gamma.upper[i][j][k], levi_civita(i, j, k));
                }
            }
        }
    }

    #[test]
    fn lorentzian_qlc_values() {
        let gamma = qlc(&QuantumMetric::diagonal(-1.0, 1.0, 1.0).unwrap());
        for j in 0..3 {
            for k in 0..3 {
                assert_eq!(gamma.upper[0][j][k], levi_civita(0, j, k));
            }
        }
        assert_eq!(gamma.upper[1][2][0], -1.0);
        assert_eq!(gamma.upper[1][0][2], -3.0);
        assert_eq!(gamma.upper[2][0][1], 3.0);
        assert_eq!(gamma.upper[2][1][0], 1.0);
    }

    #[test]
    fn diag_2_1_1_term_by_term() {
        // Γ_ijk = 2 ε_ikm g_mj + Tr(g) ε_ijk with g = diag(2,1,1), Tr = 4
        let gamma = qlc(&QuantumMetric::diagonal(2.0, 1.0, 1.0).unwrap());
        let g = [2.0, 1.0, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    // only m = j survives in the diagonal contraction
                    let expected = 2.0 * levi_civita(i, k, j) * g[j] + 4.0 * levi_civita(i, j, k);
                    assert_eq!(gamma.lower[i][j][k], expected);
                    assert!((gamma.upper[i][j][k] - expected / g[i]).abs() < 1e-15);
                }
            }
        }
        // e.g. Γ_123 = 2 ε_132 g_22 + 4 = 2
        assert_eq!(gamma.lower[0][1][2], 2.0);
    }

    #[test]
    fn torsion_and_compatibility() {
        let round = QuantumMetric::round();
        let gamma = qlc(&round);
        assert!(torsion_residual(&gamma) < 1e-12);
        assert!(metric_compatibility_residual(&round, &gamma) < 1e-12);

        let mut perturbed = gamma.clone();
        perturbed.upper[0][1][2] += 0.1;
        assert!(torsion_residual(&perturbed) > 0.01);

        let lor = QuantumMetric::diagonal(-1.0, 1.0, 1.0).unwrap();
        let gamma = qlc(&lor);
        assert!(torsion_residual(&gamma) < 1e-12);
        assert!(metric_compatibility_residual(&lor, &gamma) < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = QuantumMetric::new(random_spd(&mut rng), 1e-10).unwrap();
            let gamma = qlc(&m);
            assert!(torsion_residual(&gamma) < 1e-12);
            assert!(metric_compatibility_residual(&m, &gamma) < 1e-12);
        }
    }

    #[test]
    fn scaling_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_spd(&mut rng);
        let c = 2.7;
        let a = qlc(&QuantumMetric::new(g, 1e-10).unwrap());
        let b = qlc(&QuantumMetric::new(g * c, 1e-10).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert!((b.lower[i][j][k] - c * a.lower[i][j][k]).abs() < 1e-12);
                    assert!((b.upper[i][j][k] - a.upper[i][j][k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rotational_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let g = random_spd(&mut rng);
            let r = random_rotation(&mut rng);
            let base = qlc(&QuantumMetric::new(g, 1e-10).unwrap());
            let rotated = qlc(&QuantumMetric::new(r * g * r.transpose(), 1e-10).unwrap());
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let mut expected = 0.0;
                        for a in 0..3 {
                            for b in 0..3 {
                                for c in 0..3 {
                                    expected += r[(i, a)] * r[(j, b)] * r[(k, c)] * base.lower[a][b][c];
                                }
                            }
                        }
                        assert!((rotated.lower[i][j][k] - expected).abs() < 1e-10);
                    }
                }
            }
        }
    }
}
