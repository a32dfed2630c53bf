//! Dense complex linear algebra used by the training designs, the LS
//! estimators and the MSE analysis.
//!
//! Everything is built on `nalgebra`'s dense types. The pseudo-inverse uses a
//! relative singular-value cutoff, and the two block identities (Schur
//! complement inverse, structured block pseudo-inverse) are implemented
//! literally so they can be checked against the SVD route.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Condition number past which a block inverse is refused.
pub const MAX_BLOCK_CONDITION: f64 = 1e12;

/// Eigenvalues of a PSD input down to this value are clamped to zero.
pub const PSD_CLAMP: f64 = 1e-10;

/// Largest tolerated Hermitian residual `||P - P^H||_F`.
pub const HERMITIAN_TOL: f64 = 1e-8;

/// Residual allowed on each of the structured block pseudo-inverse conditions.
pub const STRUCTURE_TOL: f64 = 1e-8;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Unnormalized `L`-point DFT matrix, `[D]_{m,n} = exp(-j 2 pi m n / L)`.
///
/// `D D^H = L I`. The phase index `m n` is reduced modulo `L` before the
/// exponential so large `L` keeps full accuracy.
pub fn dft_matrix(len: usize) -> CMatrix {
    assert!(len >= 1, "DFT length must be positive");
    CMatrix::from_fn(len, len, |m, n| {
        let k = (m * n) % len;
        C64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / len as f64)
    })
}

/// Default relative cutoff for [`pinv`]: `max(rows, cols) * eps`.
pub fn default_pinv_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

/// Thin SVD `X = U diag(s) V^H` with `s` in decreasing order.
pub struct ThinSvd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

/// Thin SVD through faer. nalgebra's SVD can return singular vectors that do
/// not reconstruct rank-deficient wide inputs.
pub fn thin_svd(x: &CMatrix) -> ThinSvd {
    let (rows, cols) = x.shape();
    let k = rows.min(cols);
    if k == 0 {
        return ThinSvd { u: CMatrix::zeros(rows, 0), s: Vec::new(), v: CMatrix::zeros(cols, 0) };
    }
    let mat = faer::Mat::<C64>::from_fn(rows, cols, |i, j| x[(i, j)]);
    let svd = mat.thin_svd().expect("SVD of a finite matrix converges");
    let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
    ThinSvd {
        u: CMatrix::from_fn(rows, k, |i, j| u[(i, j)]),
        s: (0..k).map(|i| s[i].re).collect(),
        v: CMatrix::from_fn(cols, k, |i, j| v[(i, j)]),
    }
}

/// Singular values in decreasing order.
pub fn singular_values(x: &CMatrix) -> Vec<f64> {
    thin_svd(x).s
}

/// 2-norm condition number `sigma_max / sigma_min` over the `min(rows, cols)`
/// singular values. Infinite for rank-deficient inputs.
pub fn condition_number(x: &CMatrix) -> f64 {
    let sv = singular_values(x);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Moore-Penrose pseudo-inverse through the SVD. Singular values below
/// `tol * sigma_max` are treated as zero.
pub fn pinv(x: &CMatrix, tol: f64) -> CMatrix {
    let (rows, cols) = x.shape();
    if rows == 0 || cols == 0 {
        return CMatrix::zeros(cols, rows);
    }
    let svd = thin_svd(x);
    let s_max = svd.s.first().copied().unwrap_or(0.0);
    let cutoff = tol * s_max;

    // V diag(1/s) U^H, skipping truncated directions.
    let mut out = CMatrix::zeros(cols, rows);
    for (i, &s) in svd.s.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        out += (svd.v.column(i) * svd.u.column(i).adjoint()) * C64::from(1.0 / s);
    }
    out
}

/// [`pinv`] with the default tolerance.
pub fn pinv_default(x: &CMatrix) -> CMatrix {
    let (r, c) = x.shape();
    pinv(x, default_pinv_tol(r, c))
}

/// Pseudo-inverse of a matrix that must have full column rank, with a bound
/// on its condition number. Used by the estimators, which never regularize.
pub fn pinv_full_column_rank(x: &CMatrix, what: &str, max_cond: f64) -> Result<CMatrix> {
    let (rows, cols) = x.shape();
    if rows < cols {
        return Err(Error::Singular { what: what.to_string(), cond: f64::INFINITY });
    }
    let svd = thin_svd(x);
    let s_max = svd.s.first().copied().unwrap_or(0.0);
    let s_min = svd.s.last().copied().unwrap_or(0.0);
    let cond = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if !(cond <= max_cond) {
        return Err(Error::Singular { what: what.to_string(), cond });
    }
    let mut scaled_v = svd.v;
    for (j, &s) in svd.s.iter().enumerate() {
        scaled_v.column_mut(j).scale_mut(1.0 / s);
    }
    Ok(scaled_v * svd.u.adjoint())
}

/// Principal square root of a Hermitian positive semidefinite matrix.
///
/// Eigenvalues in `[-1e-10, 0)` are clamped to zero; anything more negative is
/// rejected, as is a symmetry residual above `1e-8`.
pub fn hermitian_sqrt(p: &CMatrix) -> Result<CMatrix> {
    if !p.is_square() {
        return Err(Error::Dimension(format!("square matrix expected, got {:?}", p.shape())));
    }
    let residual = (p - p.adjoint()).norm();
    if residual > HERMITIAN_TOL {
        return Err(Error::NotHermitian { residual });
    }
    let sym = (p + p.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(sym);
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eigenvalue < -PSD_CLAMP {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
    }
    let mut scaled = eig.eigenvectors.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(lambda.max(0.0).sqrt());
    }
    Ok(scaled * eig.eigenvectors.adjoint())
}

/// Kronecker product `A (x) B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij == C64::from(0.0) {
                continue;
            }
            out.view_mut((i * rb, j * cb), (rb, cb)).copy_from(&(b * aij));
        }
    }
    out
}

/// Inverse of a square matrix with a condition-number guard.
pub fn guarded_inverse(x: &CMatrix, what: &str) -> Result<CMatrix> {
    if !x.is_square() {
        return Err(Error::Dimension(format!("{what} must be square, got {:?}", x.shape())));
    }
    let cond = condition_number(x);
    if !(cond <= MAX_BLOCK_CONDITION) {
        return Err(Error::Singular { what: what.to_string(), cond });
    }
    x.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular { what: what.to_string(), cond })
}

/// A 2x2 block matrix `[A B; C D]` with conformable blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix2x2 {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub d: CMatrix,
}

impl BlockMatrix2x2 {
    pub fn new(a: CMatrix, b: CMatrix, c: CMatrix, d: CMatrix) -> Result<Self> {
        let ok = a.nrows() == b.nrows()
            && c.nrows() == d.nrows()
            && a.ncols() == c.ncols()
            && b.ncols() == d.ncols();
        if !ok {
            return Err(Error::Dimension(format!(
                "blocks not conformable: A{:?} B{:?} C{:?} D{:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.a.nrows() + self.c.nrows(), self.a.ncols() + self.b.ncols())
    }

    pub fn assemble(&self) -> CMatrix {
        let (p, q) = self.a.shape();
        let (rows, cols) = self.shape();
        let mut m = CMatrix::zeros(rows, cols);
        m.view_mut((0, 0), self.a.shape()).copy_from(&self.a);
        m.view_mut((0, q), self.b.shape()).copy_from(&self.b);
        m.view_mut((p, 0), self.c.shape()).copy_from(&self.c);
        m.view_mut((p, q), self.d.shape()).copy_from(&self.d);
        m
    }
}

fn stack_blocks(tl: &CMatrix, tr: &CMatrix, bl: &CMatrix, br: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(tl.nrows() + bl.nrows(), tl.ncols() + tr.ncols());
    out.view_mut((0, 0), tl.shape()).copy_from(tl);
    out.view_mut((0, tl.ncols()), tr.shape()).copy_from(tr);
    out.view_mut((tl.nrows(), 0), bl.shape()).copy_from(bl);
    out.view_mut((tl.nrows(), tl.ncols()), br.shape()).copy_from(br);
    out
}

/// Inverse of `[A B; C D]` through the Schur complement `S = D - C A^-1 B`:
///
/// ```text
/// [ A^-1 + A^-1 B S^-1 C A^-1   -A^-1 B S^-1 ]
/// [ -S^-1 C A^-1                 S^-1        ]
/// ```
pub fn block_inverse(m: &BlockMatrix2x2) -> Result<CMatrix> {
    if !m.a.is_square() || !m.d.is_square() {
        return Err(Error::Dimension("diagonal blocks must be square".into()));
    }
    let a_inv = guarded_inverse(&m.a, "block A")?;
    let schur = &m.d - &m.c * &a_inv * &m.b;
    let s_inv = guarded_inverse(&schur, "Schur complement D - C A^-1 B")?;

    let a_inv_b = &a_inv * &m.b;
    let c_a_inv = &m.c * &a_inv;
    let tr = -(&a_inv_b * &s_inv);
    let bl = -(&s_inv * &c_a_inv);
    let tl = &a_inv + &a_inv_b * &s_inv * &c_a_inv;
    Ok(stack_blocks(&tl, &tr, &bl, &s_inv))
}

/// Pseudo-inverse of `[A B; C D]` when `(I - A A^+) B = 0`,
/// `C (I - A^+ A) = 0` and `D = C A^+ B`. With `K_B = A^+ B`, `K_C = C A^+`,
/// `~K_B = I + K_B^H K_B` and `~K_C = I + K_C K_C^H`:
///
/// ```text
/// [ (I - K_B ~K_B^-1 K_B^H) A^+ (I - K_C^H ~K_C^-1 K_C)   (I - K_B ~K_B^-1 K_B^H) A^+ K_C^H ~K_C^-1 ]
/// [ ~K_B^-1 K_B^H A^+ (I - K_C^H ~K_C^-1 K_C)              ~K_B^-1 K_B^H A^+ K_C^H ~K_C^-1          ]
/// ```
pub fn block_pinv_rank1structured(m: &BlockMatrix2x2) -> Result<CMatrix> {
    let a_pinv = pinv_default(&m.a);
    let scale = m.assemble().norm().max(1.0);

    let (p, q) = m.a.shape();
    let range_residual = ((CMatrix::identity(p, p) - &m.a * &a_pinv) * &m.b).norm() / scale;
    if range_residual > STRUCTURE_TOL {
        return Err(Error::Precondition {
            condition: "(I - A A^+) B = 0",
            residual: range_residual,
        });
    }
    let corange_residual = (&m.c * (CMatrix::identity(q, q) - &a_pinv * &m.a)).norm() / scale;
    if corange_residual > STRUCTURE_TOL {
        return Err(Error::Precondition {
            condition: "C (I - A^+ A) = 0",
            residual: corange_residual,
        });
    }
    let schur_residual = (&m.d - &m.c * &a_pinv * &m.b).norm() / scale;
    if schur_residual > STRUCTURE_TOL {
        return Err(Error::Precondition {
            condition: "D - C A^+ B = 0",
            residual: schur_residual,
        });
    }

    let k_b = &a_pinv * &m.b;
    let k_c = &m.c * &a_pinv;
    let s = k_b.ncols();
    let r = k_c.nrows();
    let kt_b_inv = guarded_inverse(&(CMatrix::identity(s, s) + k_b.adjoint() * &k_b), "I + K_B^H K_B")?;
    let kt_c_inv = guarded_inverse(&(CMatrix::identity(r, r) + &k_c * k_c.adjoint()), "I + K_C K_C^H")?;

    let left = CMatrix::identity(q, q) - &k_b * &kt_b_inv * k_b.adjoint();
    let right = CMatrix::identity(p, p) - k_c.adjoint() * &kt_c_inv * &k_c;
    let row_b = &kt_b_inv * k_b.adjoint() * &a_pinv;
    let col_c = k_c.adjoint() * &kt_c_inv;

    let tl = &left * &a_pinv * &right;
    let tr = &left * &a_pinv * &col_c;
    let bl = &row_b * &right;
    let br = &row_b * &col_c;
    Ok(stack_blocks(&tl, &tr, &bl, &br))
}

/// `diag(v)` as a dense matrix.
pub fn diag(v: &CVector) -> CMatrix {
    CMatrix::from_diagonal(v)
}

/// Squared Frobenius norm.
pub fn norm_sq(x: &CMatrix) -> f64 {
    x.norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn max_abs(x: &CMatrix) -> f64 {
        x.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn dft_small_sizes() {
        assert_eq!(dft_matrix(1), CMatrix::from_element(1, 1, c64(1.0, 0.0)));
        let d2 = dft_matrix(2);
        let expected = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(-1.0, 0.0)]);
        assert!(max_abs(&(d2 - expected)) < 1e-15);
        // exp(-j 2 pi n / 4) for n = 0..3
        let d4 = dft_matrix(4);
        let row1 = [c64(1.0, 0.0), c64(0.0, -1.0), c64(-1.0, 0.0), c64(0.0, 1.0)];
        for (n, z) in row1.iter().enumerate() {
            assert!((d4[(1, n)] - z).norm() < 1e-15);
        }
    }

    #[test]
    fn dft_orthogonality_up_to_64() {
        for len in 1..=64 {
            let d = dft_matrix(len);
            let gram = &d * d.adjoint();
            let err = max_abs(&(gram - CMatrix::identity(len, len) * c64(len as f64, 0.0)));
            assert!(err < 1e-10, "L = {len}: {err}");
            assert!(d.row(0).iter().chain(d.column(0).iter()).all(|z| (*z - c64(1.0, 0.0)).norm() < 1e-15));
        }
    }

    #[test]
    fn pinv_identity_and_diagonal() {
        let eye = CMatrix::identity(3, 3);
        assert!(max_abs(&(pinv_default(&eye) - &eye)) < 1e-15);
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c64(2.0, 0.0), c64(0.0, 0.0)]));
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![c64(0.5, 0.0), c64(0.0, 0.0)]));
        assert!(max_abs(&(pinv_default(&d) - expected)) < 1e-15);
    }

    #[test]
    fn pinv_left_inverse_of_tall_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_matrix(&mut rng, 6, 4);
        let eye = pinv_default(&x) * &x;
        assert!(max_abs(&(eye - CMatrix::identity(4, 4))) < 1e-10);
    }

    #[test]
    fn pinv_of_empty_matrix_has_transposed_shape() {
        let x = CMatrix::zeros(0, 3);
        assert_eq!(pinv_default(&x).shape(), (3, 0));
    }

    #[test]
    fn full_column_rank_pinv_rejects_wide_and_singular() {
        let wide = CMatrix::identity(2, 3);
        assert!(pinv_full_column_rank(&wide, "wide", 1e10).is_err());
        let mut singular = CMatrix::identity(3, 2);
        singular[(1, 1)] = c64(0.0, 0.0);
        assert!(matches!(
            pinv_full_column_rank(&singular, "x", 1e10),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn hermitian_sqrt_examples() {
        let eye = CMatrix::identity(3, 3);
        assert!(max_abs(&(hermitian_sqrt(&eye).unwrap() - &eye)) < 1e-14);

        let p = CMatrix::from_diagonal(&CVector::from_vec(vec![c64(4.0, 0.0), c64(9.0, 0.0)]));
        let s = hermitian_sqrt(&p).unwrap();
        assert_abs_diff_eq!(s[(0, 0)].re, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s[(1, 1)].re, 3.0, epsilon = 1e-14);

        // exponential correlation, r = 0.5, dim 4
        let r: f64 = 0.5;
        let phi = CMatrix::from_fn(4, 4, |i, j| c64(r.powi((i as i32 - j as i32).abs()), 0.0));
        let s = hermitian_sqrt(&phi).unwrap();
        assert!((&s * s.adjoint() - &phi).norm() < 1e-10);
        assert!((&s - s.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn hermitian_sqrt_rejects_non_hermitian() {
        let mut p = CMatrix::identity(2, 2);
        p[(0, 1)] = c64(1.0, 0.0);
        assert!(matches!(hermitian_sqrt(&p), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn hermitian_sqrt_clamps_rounding_negatives() {
        // rank-one all-ones matrix has a zero eigenvalue that comes out slightly negative
        let ones = CMatrix::from_element(5, 5, c64(1.0, 0.0));
        let s = hermitian_sqrt(&ones).unwrap();
        assert!((&s * s.adjoint() - &ones).norm() < 1e-10);
    }

    #[test]
    fn block_inverse_examples() {
        let eye2 = CMatrix::identity(2, 2);
        let zero = CMatrix::zeros(2, 2);
        let m = BlockMatrix2x2::new(eye2.clone(), zero.clone(), zero.clone(), eye2.clone()).unwrap();
        assert!(max_abs(&(block_inverse(&m).unwrap() - CMatrix::identity(4, 4))) < 1e-15);

        let m = BlockMatrix2x2::new(&eye2 * c64(2.0, 0.0), zero.clone(), zero.clone(), &eye2 * c64(4.0, 0.0)).unwrap();
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![
            c64(0.5, 0.0),
            c64(0.5, 0.0),
            c64(0.25, 0.0),
            c64(0.25, 0.0),
        ]));
        assert!(max_abs(&(block_inverse(&m).unwrap() - expected)) < 1e-15);
    }

    #[test]
    fn block_inverse_matches_dense_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 4, 4) + CMatrix::identity(4, 4) * c64(4.0, 0.0);
        let d = random_matrix(&mut rng, 4, 4) + CMatrix::identity(4, 4) * c64(4.0, 0.0);
        let b = random_matrix(&mut rng, 4, 4);
        let c = random_matrix(&mut rng, 4, 4);
        let m = BlockMatrix2x2::new(a, b, c, d).unwrap();
        let inv = block_inverse(&m).unwrap();
        let dense = m.assemble().try_inverse().unwrap();
        assert!(max_abs(&(&inv - dense)) < 1e-10);
        assert!(max_abs(&(inv * m.assemble() - CMatrix::identity(8, 8))) < 1e-9);
    }

    #[test]
    fn block_inverse_rejects_singular_a() {
        let zero = CMatrix::zeros(2, 2);
        let eye = CMatrix::identity(2, 2);
        let m = BlockMatrix2x2::new(zero.clone(), eye.clone(), eye.clone(), zero).unwrap();
        assert!(matches!(block_inverse(&m), Err(Error::Singular { .. })));
    }

    #[test]
    fn conformability_is_checked() {
        let err = BlockMatrix2x2::new(
            CMatrix::zeros(2, 2),
            CMatrix::zeros(3, 1),
            CMatrix::zeros(1, 2),
            CMatrix::zeros(1, 1),
        );
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    #[test]
    fn structured_pinv_rank_one_example() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_matrix(&mut rng, 3, 1);
        let e = &u * u.adjoint();
        let m = BlockMatrix2x2::new(e.clone(), -e.clone(), -e.clone(), e.clone()).unwrap();
        let got = block_pinv_rank1structured(&m).unwrap();
        let e_pinv = pinv_default(&e) * c64(0.25, 0.0);
        let expected = stack_blocks(&e_pinv, &(-e_pinv.clone()), &(-e_pinv.clone()), &e_pinv);
        assert!(max_abs(&(&got - &expected)) < 1e-10);
        assert!(max_abs(&(&got - pinv_default(&m.assemble()))) < 1e-8);
    }

    #[test]
    fn structured_pinv_identity_corner() {
        let m = BlockMatrix2x2::new(
            CMatrix::identity(2, 2),
            CMatrix::zeros(2, 2),
            CMatrix::zeros(2, 2),
            CMatrix::zeros(2, 2),
        )
        .unwrap();
        let got = block_pinv_rank1structured(&m).unwrap();
        assert!(max_abs(&(got - pinv_default(&m.assemble()))) < 1e-14);
    }

    #[test]
    fn structured_pinv_names_violated_condition() {
        let m = BlockMatrix2x2::new(
            CMatrix::identity(2, 2),
            CMatrix::zeros(2, 2),
            CMatrix::zeros(2, 2),
            CMatrix::identity(2, 2),
        )
        .unwrap();
        match block_pinv_rank1structured(&m) {
            Err(Error::Precondition { condition, .. }) => assert_eq!(condition, "D - C A^+ B = 0"),
            other => panic!("expected precondition error, got {other:?}"),
        }
    }

    #[test]
    fn pinv_of_wide_rank_one_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = random_matrix(&mut rng, 2, 1) * random_matrix(&mut rng, 1, 6);
        let m = BlockMatrix2x2::new(e.clone(), -&e, -&e, e.clone()).unwrap().assemble();
        let x = pinv_default(&m);
        assert!(max_abs(&(&m * &x * &m - &m)) < 1e-12);
        assert!(max_abs(&(&x * &m * &x - &x)) < 1e-12);
        let quarter = pinv_default(&e) * c64(0.25, 0.0);
        assert!(max_abs(&(x.view((0, 0), (6, 2)) - quarter)) < 1e-12);
    }

    #[test]
    fn kron_examples() {
        let eye2 = CMatrix::identity(2, 2);
        assert_eq!(kron(&eye2, &eye2), CMatrix::identity(4, 4));
        let a = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        let b = CMatrix::from_element(1, 1, c64(2.0, 0.0));
        let expected = CMatrix::from_row_slice(2, 2, &[c64(2.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        assert_eq!(kron(&a, &b), expected);
    }

    #[test]
    fn kron_index_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 2, 2);
        let b = random_matrix(&mut rng, 3, 3);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (6, 6));
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..3 {
                    for q in 0..3 {
                        assert_eq!(k[(i * 3 + p, j * 3 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }

    #[test]
    fn condition_number_of_identity_is_one() {
        assert_abs_diff_eq!(condition_number(&CMatrix::identity(5, 3)), 1.0, epsilon = 1e-14);
        let mut x = CMatrix::identity(2, 2);
        x[(1, 1)] = c64(0.0, 0.0);
        assert!(condition_number(&x).is_infinite());
    }
}
