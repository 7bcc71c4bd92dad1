//! Small dense linear-algebra helpers shared by the spin, Dirac, reduced and
//! distance modules.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::algebra::C64;

pub const I: C64 = C64::new(0.0, 1.0);

/// The Pauli matrices `σ¹, σ², σ³`.
pub fn pauli() -> [Matrix2<C64>; 3] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    [
        Matrix2::new(z, o, o, z),
        Matrix2::new(z, -I, I, z),
        Matrix2::new(o, z, z, -o),
    ]
}

pub fn conj2(m: &Matrix2<C64>) -> Matrix2<C64> {
    m.map(|z| z.conj())
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs2(m: &Matrix2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn to_dmatrix(m: &Matrix2<C64>) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |r, c| m[(r, c)])
}

/// Kronecker product `a ⊗ b`, with `a` indexing the outer blocks.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            out.view_mut((i * br, j * bc), (br, bc)).copy_from(&(b * s));
        }
    }
    out
}

/// `vec(L X - X L)` as a matrix acting on column-major `vec(X)`.
pub fn commutator_operator(l: &DMatrix<C64>) -> DMatrix<C64> {
    let n = l.nrows();
    let id = DMatrix::identity(n, n);
    kron(&id, l) - kron(&l.transpose(), &id)
}

/// `vec(L X + X L)` on column-major `vec(X)`.
pub fn anticommutator_operator(l: &DMatrix<C64>) -> DMatrix<C64> {
    let n = l.nrows();
    let id = DMatrix::identity(n, n);
    kron(&id, l) + kron(&l.transpose(), &id)
}

/// Orthonormal basis of the kernel of `a`, using singular values below
/// `tol · max(1, σ_max)`.
pub fn nullspace(a: &DMatrix<C64>, tol: f64) -> Vec<DVector<C64>> {
    let (r, c) = a.shape();
    let padded = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = tol * smax.max(1.0);
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= cutoff)
        .map(|(k, _)| v_t.row(k).adjoint())
        .collect()
}

/// Kernel dimension of a real matrix.
pub fn real_nullity(a: &DMatrix<f64>, tol: f64) -> usize {
    let (r, c) = a.shape();
    let padded = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let sv = padded.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|s| **s <= tol * smax.max(1.0)).count()
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn lstsq(a: &DMatrix<C64>, b: &DVector<C64>, tol: f64) -> DVector<C64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.solve(b, tol * smax.max(1.0)).expect("u and v_t computed")
}

/// Eigenvalues (ascending) and eigenvectors of the hermitian part of `m`.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<C64>) -> f64 {
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// An eigenvalue cluster: mean value and multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
}

/// Groups sorted values whose consecutive gaps are at most `width`.
pub fn cluster(sorted: &[f64], width: f64) -> Vec<Cluster> {
    let mut out: Vec<(f64, usize, f64)> = Vec::new();
    for &v in sorted {
        match out.last_mut() {
            Some((sum, count, last)) if (v - *last).abs() <= width => {
                *sum += v;
                *count += 1;
                *last = v;
            }
            _ => out.push((v, 1, v)),
        }
    }
    out.into_iter()
        .map(|(sum, count, _)| Cluster {
            value: sum / count as f64,
            multiplicity: count,
        })
        .collect()
}

/// Orthonormal basis (Hilbert–Schmidt) of traceless hermitian `n × n`
/// matrices: the generalised Gell-Mann matrices.
pub fn gell_mann(n: usize) -> Vec<DMatrix<C64>> {
    let mut out = Vec::with_capacity(n * n - 1);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..n {
        for k in (j + 1)..n {
            let mut sym = DMatrix::zeros(n, n);
            sym[(j, k)] = C64::new(s, 0.0);
            sym[(k, j)] = C64::new(s, 0.0);
            out.push(sym);
            let mut anti = DMatrix::zeros(n, n);
            anti[(j, k)] = C64::new(0.0, -s);
            anti[(k, j)] = C64::new(0.0, s);
            out.push(anti);
        }
    }
    for l in 1..n {
        let norm = ((l * (l + 1)) as f64).sqrt().recip();
        let mut d = DMatrix::zeros(n, n);
        for k in 0..l {
            d[(k, k)] = C64::new(norm, 0.0);
        }
        d[(l, l)] = C64::new(-(l as f64) * norm, 0.0);
        out.push(d);
    }
    out
}
