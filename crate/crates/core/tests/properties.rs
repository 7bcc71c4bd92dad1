use fuzzy_dirac::algebra::canonical_basis;
use fuzzy_dirac::dirac::{apply_dirac, dirac_block, spectrum, spectrum_distance};
use fuzzy_dirac::distance::{distance_numeric, lipschitz_seminorm, DistanceOptions, State};
use fuzzy_dirac::hilbert::{adjointness_check, InnerProductContext};
use fuzzy_dirac::linalg::max_abs;
use fuzzy_dirac::reduced::{reduce, reduced_dirac, spin_matrices};
use fuzzy_dirac::spin::{conjugate_spin_data, verify_axioms};
use fuzzy_dirac::{AlgebraElement, FuzzySphere, Parameters, QuantumMetric, SpinData, SpinorField, C64};
use nalgebra::{DMatrix, Matrix2};
use proptest::prelude::*;

const I: C64 = C64::new(0.0, 1.0);

fn sphere(lambda: f64, cap: usize) -> FuzzySphere {
    FuzzySphere::new(Parameters::new(lambda, cap, 1e-10).unwrap())
}

fn coefficients(max_degree: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    let n = (max_degree + 1) * (max_degree + 1);
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
}

fn element(s: &FuzzySphere, max_degree: usize, coeffs: &[(f64, f64)]) -> AlgebraElement {
    let terms = canonical_basis(max_degree)
        .into_iter()
        .zip(coeffs)
        .map(|(m, &(re, im))| (m, C64::new(re, im)));
    AlgebraElement::from_terms(*s.params(), terms).unwrap()
}

/// Spinor with both components drawn from `A_l`.
fn block_spinor(s: &FuzzySphere, ctx: &InnerProductContext, l: usize, coeffs: &[(f64, f64)]) -> SpinorField {
    let block = ctx.block(l).unwrap();
    let c: Vec<C64> = coeffs.iter().take(2 * block.size()).map(|&(re, im)| C64::new(re, im)).collect();
    block.spinor(s, &c)
}

fn su2(q: [f64; 4]) -> Matrix2<C64> {
    let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
    let [a, b, c, d] = q.map(|x| x / norm);
    Matrix2::new(C64::new(a, b), C64::new(c, d), C64::new(-c, d), C64::new(a, -b))
}

fn density(entries: &[(f64, f64)], n: usize) -> State {
    let m = DMatrix::from_fn(n, n, |r, c| {
        let (re, im) = entries[r * n + c];
        C64::new(re, im)
    });
    let rho = &m * m.adjoint() + DMatrix::identity(n, n) * C64::from(1e-3);
    let tr = rho.trace();
    State::new(rho / tr, 1e-10).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn adjacent_swaps_follow_the_commutator(
        lambda in 0.05..0.95f64,
        word in prop::collection::vec(1usize..=3, 2..6),
        pos in 0usize..5,
    ) {
        let s = sphere(lambda, word.len());
        let pos = pos % (word.len() - 1);
        let product = |w: &[usize]| {
            w.iter().fold(s.one(), |acc, &i| s.multiply(&acc, &s.generator(i).unwrap()).unwrap())
        };
        let (a, b) = (word[pos], word[pos + 1]);
        let mut swapped = word.clone();
        swapped.swap(pos, pos + 1);
        // x_a x_b - x_b x_a = 2iλ ε_abc x_c
        let mut correction = s.zero();
        for c in 1..=3 {
            let e = fuzzy_dirac::calculus::levi_civita(a - 1, b - 1, c - 1);
            if e != 0.0 {
                let mut w: Vec<usize> = word[..pos].to_vec();
                w.push(c);
                w.extend_from_slice(&word[pos + 2..]);
                correction += &product(&w).scale(C64::new(0.0, 2.0 * lambda * e));
            }
        }
        let lhs = product(&word);
        let rhs = &product(&swapped) + &correction;
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn basis_and_harmonic_dimensions(cap in 0usize..7, lambda in 0.05..0.95f64) {
        prop_assert_eq!(canonical_basis(cap).len(), (cap + 1) * (cap + 1));
        let s = sphere(lambda, cap);
        for l in 0..=cap {
            prop_assert_eq!(s.harmonic_basis(l).len(), 2 * l + 1);
        }
    }

    #[test]
    fn casimir_is_central(lambda in 0.05..0.95f64, c in coefficients(2)) {
        let s = sphere(lambda, 4);
        let a = element(&s, 2, &c);
        let casimir = (1..=3).fold(s.zero(), |acc, i| {
            let x = s.generator(i).unwrap();
            &acc + &s.multiply(&x, &x).unwrap()
        });
        let expected = a.scale(C64::from(1.0 - lambda * lambda));
        prop_assert!(s.multiply(&casimir, &a).unwrap().max_abs_diff(&expected) < 1e-12);
        prop_assert!(s.multiply(&a, &casimir).unwrap().max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn associativity(lambda in 0.05..0.95f64, a in coefficients(2), b in coefficients(2), c in coefficients(2)) {
        let s = sphere(lambda, 6);
        let (a, b, c) = (element(&s, 2, &a), element(&s, 2, &b), element(&s, 2, &c));
        let left = s.multiply(&s.multiply(&a, &b).unwrap(), &c).unwrap();
        let right = s.multiply(&a, &s.multiply(&b, &c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-10);
    }

    #[test]
    fn reduction_is_a_homomorphism(n in 2usize..=4, a in coefficients(3), b in coefficients(3)) {
        let s = sphere(1.0 / n as f64, 6);
        let rep = spin_matrices(n).unwrap();
        let (a, b) = (element(&s, 3, &a), element(&s, 3, &b));
        let ab = reduce(&s.multiply(&a, &b).unwrap(), &rep).unwrap();
        let prod = reduce(&a, &rep).unwrap() * reduce(&b, &rep).unwrap();
        prop_assert!(max_abs(&(ab - prod)) < 1e-10);
    }

    #[test]
    fn exterior_derivative_squares_to_zero(lambda in 0.05..0.95f64, c in coefficients(4)) {
        let s = sphere(lambda, 4);
        let a = element(&s, 4, &c);
        prop_assert!(s.d_oneform(&s.d_function(&a).unwrap()).unwrap().max_norm() < 1e-10);
    }

    #[test]
    fn derivatives_commute_with_star(lambda in 0.05..0.95f64, c in coefficients(3), i in 1usize..=3) {
        let s = sphere(lambda, 3);
        let a = element(&s, 3, &c);
        let lhs = s.partial(i, &s.star(&a)).unwrap();
        let rhs = s.star(&s.partial(i, &a).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn epsilon_contracted_derivatives(lambda in 0.05..0.95f64, c in coefficients(3), k in 1usize..=3) {
        let s = sphere(lambda, 3);
        let a = element(&s, 3, &c);
        let mut acc = s.zero();
        for i in 1..=3 {
            for j in 1..=3 {
                let e = fuzzy_dirac::calculus::levi_civita(i - 1, j - 1, k - 1);
                if e != 0.0 {
                    acc += &s.partial(i, &s.partial(j, &a).unwrap()).unwrap().scale(C64::from(e));
                }
            }
        }
        prop_assert!(acc.max_abs_diff(&s.partial(k, &a).unwrap()) < 1e-10);
    }

    #[test]
    fn real_structure_phase_covariance(theta in 0.0..std::f64::consts::TAU) {
        let data = SpinData::round().with_phase(C64::from_polar(1.0, theta));
        prop_assert!(verify_axioms(&data, 1e-10).max_residual() < 1e-12);
    }

    #[test]
    fn dirac_preserves_orbital_momentum(lambda in 0.05..0.3f64, l in 0usize..=3, c in coefficients(4)) {
        let s = sphere(lambda, 3);
        let ctx = InnerProductContext::new(&s, 3).unwrap();
        let psi = block_spinor(&s, &ctx, l, &c);
        let out = apply_dirac(&s, &SpinData::round(), &psi).unwrap();
        for comp in &out.components {
            let parts = s.harmonic_project(comp).unwrap();
            for (lp, part) in parts.components.iter().enumerate() {
                if lp != l {
                    prop_assert!(part.max_norm() < 1e-10, "l = {} leaked into {}", l, lp);
                }
            }
        }
    }

    #[test]
    fn square_of_dirac_is_laplacian(lambda in 0.05..0.3f64, l in 0usize..=3, c in coefficients(4)) {
        // -(iD)² - iD/2 = Σ∂² - 3/16 = -l(l+1) - 3/16 on S_l
        let s = sphere(lambda, 3);
        let ctx = InnerProductContext::new(&s, 3).unwrap();
        let data = SpinData::round();
        let psi = block_spinor(&s, &ctx, l, &c);
        let d1 = apply_dirac(&s, &data, &psi).unwrap().scale(I);
        let d2 = apply_dirac(&s, &data, &d1).unwrap().scale(I);
        let lhs = d2.scale(C64::from(-1.0)).sub(&d1.scale(C64::from(0.5)));
        let rhs = psi.scale(C64::from(-((l * (l + 1)) as f64) - 3.0 / 16.0));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-9);
    }

    #[test]
    fn conjugate_and_j_symmetry(seed in any::<u64>()) {
        let s = sphere(0.3, 2);
        let ctx = InnerProductContext::new(&s, 2).unwrap();
        let r = adjointness_check(&s, &SpinData::round(), &ctx, 2, seed).unwrap();
        prop_assert!(r.conjugate_symmetry < 1e-12 && r.j_isometry < 1e-10 && r.dirac_symmetry < 1e-10);
    }

    #[test]
    fn seminorm_is_homogeneous(n in 2usize..=4, entries in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 16), c in -3.0..3.0f64) {
        let rep = spin_matrices(n).unwrap();
        let d = reduced_dirac(&rep, &SpinData::round());
        let m = DMatrix::from_fn(n, n, |r, col| C64::new(entries[r * n + col].0, entries[r * n + col].1));
        let a = &m + m.adjoint();
        let lhs = lipschitz_seminorm(&(&a * C64::from(c)), &d, &rep);
        let rhs = c.abs() * lipschitz_seminorm(&a, &d, &rep);
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs));
    }

    #[test]
    fn reduced_dirac_is_hermitian(n in 2usize..=6) {
        let rep = spin_matrices(n).unwrap();
        let d = reduced_dirac(&rep, &SpinData::round());
        prop_assert!(max_abs(&(&d - d.adjoint())) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn spectrum_is_su2_invariant(q in prop::array::uniform4(-1.0..1.0f64)) {
        prop_assume!(q.iter().map(|x| x * x).sum::<f64>() > 1e-2);
        let s = sphere(0.25, 2);
        let ctx = InnerProductContext::new(&s, 2).unwrap();
        let data = SpinData::round();
        let moved = conjugate_spin_data(&data, &su2(q), 1e-10).unwrap();
        let a = spectrum(&s, &data, &ctx).unwrap();
        let b = spectrum(&s, &moved, &ctx).unwrap();
        prop_assert!(spectrum_distance(&a.spectrum, &b.spectrum) < 1e-8);
    }

    #[test]
    fn hermiticity_breaks_with_d(d in prop::array::uniform3(-0.5..0.5f64)) {
        let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-2);
        let s = sphere(0.25, 1);
        let ctx = InnerProductContext::new(&s, 1).unwrap();
        let data = SpinData::from_metric(&QuantumMetric::round(), d.map(C64::from), 1e-10).unwrap();
        let residual = dirac_block(&s, &data, &ctx, 0).unwrap().hermiticity_residual;
        // the anti-hermitian part is 2i Σ d_i σ^i up to transposition
        prop_assert!(residual >= norm / 2f64.sqrt() - 1e-12);
    }

    #[test]
    fn distance_is_a_metric(n in 2usize..=3, a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 9), b in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 9), c in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 9)) {
        let rep = spin_matrices(n).unwrap();
        let data = SpinData::round();
        let opts = DistanceOptions::default();
        let (a, b, c) = (density(&a, n), density(&b, n), density(&c, n));
        let d = |x: &State, y: &State| distance_numeric(x, y, &rep, &data, &opts).unwrap();
        let (ab, ba, bc, ac) = (d(&a, &b), d(&b, &a), d(&b, &c), d(&a, &c));
        for r in [&ab, &ba, &bc, &ac] {
            prop_assert!(r.lower <= r.value && r.value <= r.upper);
            prop_assert!(r.certificate_seminorm <= 1.0 + 1e-8);
        }
        prop_assert!((ab.value - ba.value).abs() < 1e-8);
        prop_assert!(ac.value <= ab.value + bc.value + 1e-8);
        prop_assert!(d(&a, &a).value.abs() < 1e-12);
        prop_assert!(ab.value >= 0.0);
    }
}

#[test]
fn laplacian_spectrum_on_truncation() {
    let s = sphere(0.3, 4);
    let h = s.harmonics(4);
    let mut eig: Vec<f64> = nalgebra::linalg::Schur::new(h.laplacian().clone())
        .eigenvalues()
        .unwrap()
        .iter()
        .map(|z| z.re)
        .collect();
    eig.sort_by(f64::total_cmp);
    let mut expected = Vec::new();
    for l in (0..=4usize).rev() {
        expected.extend(std::iter::repeat_n(-((l * (l + 1)) as f64), 2 * l + 1));
    }
    assert_eq!(eig.len(), expected.len());
    for (a, b) in eig.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}
