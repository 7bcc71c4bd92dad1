//! The 3D calculus on the central basis `s^i`: partial derivatives, the
//! exterior derivative and the Grassmann algebra on `s^1, s^2, s^3`.
//!
//! Two-forms are indexed by the complementary axis:
//! `s²∧s³ ↔ 1`, `s³∧s¹ ↔ 2`, `s¹∧s² ↔ 3`.

use crate::algebra::{AlgebraElement, FuzzySphere, TermRecord};
use crate::error::{Error, Result};

/// Totally antisymmetric symbol on 0-based indices.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// `s^j ∧ s^k` on the complementary-axis basis (0-based): `(axis, sign)`,
/// or `None` when `j == k`.
pub fn wedge_basis(j: usize, k: usize) -> Option<(usize, f64)> {
    if j == k {
        return None;
    }
    let m = 3 - j - k;
    Some((m, levi_civita(m, j, k)))
}

/// Components of `d s^i = -½ ε_ijk s^j ∧ s^k` (0-based `i`).
pub fn maurer_cartan(i: usize) -> [f64; 3] {
    let mut out = [0.0; 3];
    for j in 0..3 {
        for k in 0..3 {
            if let Some((m, sign)) = wedge_basis(j, k) {
                out[m] += -0.5 * levi_civita(i, j, k) * sign;
            }
        }
    }
    out
}

/// `ω = ω_i s^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm(pub [AlgebraElement; 3]);

/// `η = η_1 s²∧s³ + η_2 s³∧s¹ + η_3 s¹∧s²`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoForm(pub [AlgebraElement; 3]);

/// Coefficient of `s¹∧s²∧s³`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeForm(pub AlgebraElement);

impl OneForm {
    /// The basis one-form `s^i`, `i` in `1..=3`.
    pub fn basis(sphere: &FuzzySphere, i: usize) -> Result<Self> {
        if !(1..=3).contains(&i) {
            return Err(Error::AxisOutOfRange(i));
        }
        Ok(Self(std::array::from_fn(|k| {
            if k + 1 == i {
                sphere.one()
            } else {
                sphere.zero()
            }
        })))
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(AlgebraElement::max_norm).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn to_records(&self) -> [Vec<TermRecord>; 3] {
        std::array::from_fn(|k| self.0[k].to_records())
    }
}

impl TwoForm {
    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(AlgebraElement::max_norm).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn to_records(&self) -> [Vec<TermRecord>; 3] {
        std::array::from_fn(|k| self.0[k].to_records())
    }
}

impl FuzzySphere {
    /// `d a = (∂_i a) s^i`.
    pub fn d_function(&self, a: &AlgebraElement) -> Result<OneForm> {
        Ok(OneForm([
            self.partial(1, a)?,
            self.partial(2, a)?,
            self.partial(3, a)?,
        ]))
    }

    /// Grassmann product; coefficients commute past the central `s^i`.
    pub fn wedge(&self, omega: &OneForm, eta: &OneForm) -> Result<TwoForm> {
        let mut out: [AlgebraElement; 3] = std::array::from_fn(|_| self.zero());
        for j in 0..3 {
            for k in 0..3 {
                if let Some((m, sign)) = wedge_basis(j, k) {
                    let prod = self.multiply(&omega.0[j], &eta.0[k])?;
                    out[m] += &prod.scale(sign.into());
                }
            }
        }
        Ok(TwoForm(out))
    }

    /// `d(ω_i s^i) = dω_i ∧ s^i + ω_i d s^i`.
    pub fn d_oneform(&self, omega: &OneForm) -> Result<TwoForm> {
        let mut out: [AlgebraElement; 3] = std::array::from_fn(|_| self.zero());
        for i in 0..3 {
            let mc = maurer_cartan(i);
            for (m, coeff) in mc.iter().enumerate() {
                if *coeff != 0.0 {
                    out[m] += &omega.0[i].scale((*coeff).into());
                }
            }
            for j in 0..3 {
                if let Some((m, sign)) = wedge_basis(j, i) {
                    out[m] += &self.partial(j + 1, &omega.0[i])?.scale(sign.into());
                }
            }
        }
        Ok(TwoForm(out))
    }

    /// `d(η_m ⋆s^m) = (Σ_m ∂_m η_m) s¹∧s²∧s³`; the basis two-forms are closed.
    pub fn d_twoform(&self, eta: &TwoForm) -> Result<ThreeForm> {
        let mut out = self.zero();
        for m in 0..3 {
            out += &self.partial(m + 1, &eta.0[m])?;
        }
        Ok(ThreeForm(out))
    }
}
