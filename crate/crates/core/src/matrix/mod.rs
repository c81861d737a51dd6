//! Dense real matrices and the factorizations the manifold layer needs.

mod factor;

pub use factor::{expm_skew, polar_factor, qr_thin, sym_eigen, SymEigen};

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};

/// Row-major dense `rows × cols` matrix of `f64`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatRepr", into = "MatRepr")]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Serialized as a list of rows.
#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct MatRepr(Vec<Vec<f64>>);

impl TryFrom<MatRepr> for Mat {
    type Error = Error;
    fn try_from(r: MatRepr) -> Result<Self> {
        Mat::from_rows(&r.0)
    }
}

impl From<Mat> for MatRepr {
    fn from(m: Mat) -> Self {
        MatRepr(m.to_rows())
    }
}

impl Mat {
    /// Builds a matrix from row-major data, rejecting bad shapes and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty shape {rows}×{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries for a {rows}×{cols} matrix", data.len())));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix construction"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|row| row.as_ref().len()).unwrap_or(0);
        if rows.iter().any(|row| row.as_ref().len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let data = rows.iter().flat_map(|row| row.as_ref().iter().copied()).collect();
        Self::new(r, c, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix shape");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::eye(n, n)
    }

    /// `n × p` matrix with ones on the main diagonal.
    pub fn eye(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Matrix product `self · b`.
    pub fn matmul(&self, b: &Mat) -> Result<Mat> {
        if self.cols != b.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}×{} by {}×{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        Ok(self.mul_unchecked(b))
    }

    /// `selfᵀ · b` without forming the transpose.
    pub fn tr_matmul(&self, b: &Mat) -> Result<Mat> {
        if self.rows != b.rows {
            return Err(Error::Dimension(format!(
                "cannot form ({}×{})ᵀ·({}×{})",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        Ok(self.tr_mul_unchecked(b))
    }

    pub(crate) fn mul_unchecked(&self, b: &Mat) -> Mat {
        debug_assert_eq!(self.cols, b.rows);
        let mut out = Mat::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            let arow = &self.data[i * self.cols..(i + 1) * self.cols];
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (k, &aik) in arow.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let brow = &b.data[k * b.cols..(k + 1) * b.cols];
                for (o, &bkj) in orow.iter_mut().zip(brow) {
                    *o += aik * bkj;
                }
            }
        }
        out
    }

    pub(crate) fn tr_mul_unchecked(&self, b: &Mat) -> Mat {
        debug_assert_eq!(self.rows, b.rows);
        let mut out = Mat::zeros(self.cols, b.cols);
        for k in 0..self.rows {
            let arow = &self.data[k * self.cols..(k + 1) * self.cols];
            let brow = &b.data[k * b.cols..(k + 1) * b.cols];
            for (i, &aki) in arow.iter().enumerate() {
                let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
                for (o, &bkj) in orow.iter_mut().zip(brow) {
                    *o += aki * bkj;
                }
            }
        }
        out
    }

    /// Frobenius norm `√tr(aᵀa)`.
    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// `‖self − other‖` for same-shaped matrices.
    pub fn dist(&self, other: &Mat) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn dist_sq(&self, other: &Mat) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in dist");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| s * x).collect() }
    }

    /// `self += alpha · x`.
    pub fn axpy(&mut self, alpha: f64, x: &Mat) {
        assert_eq!(self.shape(), x.shape(), "shape mismatch in axpy");
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += alpha * b;
        }
    }

    /// Symmetric part `(a + aᵀ)/2` of a square matrix.
    pub fn sym(&self) -> Mat {
        assert!(self.is_square());
        Mat::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    /// Skew part `(a − aᵀ)/2` of a square matrix.
    pub fn skew(&self) -> Mat {
        assert!(self.is_square());
        Mat::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] - self[(j, i)]))
    }

    /// `‖aᵀa − I‖`, the distance of the Gram matrix from the identity.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.tr_mul_unchecked(self);
        let mut s = 0.0;
        for i in 0..g.rows {
            for j in 0..g.cols {
                let d = g[(i, j)] - if i == j { 1.0 } else { 0.0 };
                s += d * d;
            }
        }
        s.sqrt()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}×{} [", self.rows, self.cols)?;
        for row in self.data.chunks(self.cols) {
            write!(f, "  ")?;
            for x in row {
                write!(f, "{x:>12.5e} ")?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

macro_rules! elementwise {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr<&Mat> for &Mat {
            type Output = Mat;
            fn $m(self, rhs: &Mat) -> Mat {
                assert_eq!(self.shape(), rhs.shape(), "shape mismatch");
                Mat {
                    rows: self.rows,
                    cols: self.cols,
                    data: self.data.iter().zip(&rhs.data).map(|(a, b)| a $op b).collect(),
                }
            }
        }
        impl $tr<Mat> for Mat {
            type Output = Mat;
            fn $m(self, rhs: Mat) -> Mat {
                (&self).$m(&rhs)
            }
        }
    };
}

elementwise!(Add, add, +);
elementwise!(Sub, sub, -);

impl AddAssign<&Mat> for Mat {
    fn add_assign(&mut self, rhs: &Mat) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&Mat> for Mat {
    fn sub_assign(&mut self, rhs: &Mat) {
        self.axpy(-1.0, rhs);
    }
}

impl Mul<&Mat> for &Mat {
    type Output = Mat;
    /// Panics on a shape mismatch; use [`Mat::matmul`] for the checked product.
    fn mul(self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in product");
        self.mul_unchecked(rhs)
    }
}

impl Mul<f64> for &Mat {
    type Output = Mat;
    fn mul(self, s: f64) -> Mat {
        self.scale(s)
    }
}

impl Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self.scale(-1.0)
    }
}

/// Square skew-symmetric matrix, e.g. a natural frequency `Ξ_i`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Mat", into = "Mat")]
pub struct SkewMat {
    mat: Mat,
}

impl SkewMat {
    /// Validates `‖m + mᵀ‖ ≤ tol · max(1, ‖m‖)` with the default algebraic tolerance.
    pub fn new(mat: Mat) -> Result<Self> {
        Self::with_tolerance(mat, Tolerances::DEFAULT.algebraic)
    }

    pub fn with_tolerance(mat: Mat, tol: f64) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::Dimension(format!("skew matrix must be square, got {}×{}", mat.rows, mat.cols)));
        }
        let residual = (&mat + &mat.transpose()).frobenius();
        if residual > tol * mat.frobenius().max(1.0) {
            return Err(Error::NotSkew { residual });
        }
        Ok(Self { mat })
    }

    /// Skew part of an arbitrary square matrix.
    pub fn from_skew_part(m: &Mat) -> Self {
        Self { mat: m.skew() }
    }

    pub fn zeros(p: usize) -> Self {
        Self { mat: Mat::zeros(p, p) }
    }

    /// Builds from the strictly upper triangle, listed row by row.
    pub fn from_upper(p: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != p * (p - 1) / 2 {
            return Err(Error::Dimension(format!("{} upper entries for p = {p}", upper.len())));
        }
        let mut m = Mat::zeros(p, p);
        let mut it = upper.iter();
        for i in 0..p {
            for j in (i + 1)..p {
                let v = *it.next().expect("length checked");
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("skew matrix"));
        }
        Ok(Self { mat: m })
    }

    /// Planar rotation generator `[[0, −θ], [θ, 0]]`.
    pub fn planar(theta: f64) -> Self {
        Self::from_upper(2, &[-theta]).expect("2×2 skew")
    }

    pub fn dim(&self) -> usize {
        self.mat.rows
    }

    pub fn as_mat(&self) -> &Mat {
        &self.mat
    }

    pub fn into_mat(self) -> Mat {
        self.mat
    }

    pub fn norm(&self) -> f64 {
        self.mat.frobenius()
    }

    pub fn scale(&self, s: f64) -> SkewMat {
        SkewMat { mat: self.mat.scale(s) }
    }

    pub fn sub(&self, other: &SkewMat) -> SkewMat {
        SkewMat { mat: &self.mat - &other.mat }
    }
}

impl TryFrom<Mat> for SkewMat {
    type Error = Error;
    fn try_from(m: Mat) -> Result<Self> {
        SkewMat::new(m)
    }
}

impl From<SkewMat> for Mat {
    fn from(s: SkewMat) -> Mat {
        s.mat
    }
}

impl fmt::Debug for SkewMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Skew{:?}", self.mat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn naive_product(a: &Mat, b: &Mat) -> Mat {
        let mut out = Mat::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a[(i, k)] * b[(k, j)];
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(Mat::new(2, 2, vec![1.0; 3]), Err(Error::Dimension(_))));
        assert!(matches!(Mat::new(1, 2, vec![1.0, f64::NAN]), Err(Error::NonFinite(_))));
        assert!(matches!(Mat::new(1, 1, vec![f64::INFINITY]), Err(Error::NonFinite(_))));
        assert!(Mat::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn identity_and_zero_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random(&mut rng, 3, 4);
        assert_eq!(Mat::identity(3).matmul(&x).unwrap(), x);
        assert_eq!(x.matmul(&Mat::zeros(4, 2)).unwrap(), Mat::zeros(3, 2));
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random(&mut rng, 3, 2);
        let b = random(&mut rng, 2, 4);
        let fast = a.matmul(&b).unwrap();
        let slow = naive_product(&a, &b);
        assert_eq!(fast.shape(), (3, 4));
        assert!(fast.dist(&slow) <= 1e-14);
        assert!(a.tr_matmul(&random(&mut rng, 3, 5)).is_ok());
    }

    #[test]
    fn matmul_shape_mismatch() {
        let a = Mat::zeros(3, 2);
        assert!(matches!(a.matmul(&Mat::zeros(3, 2)), Err(Error::Dimension(_))));
        assert!(matches!(a.tr_matmul(&Mat::zeros(2, 2)), Err(Error::Dimension(_))));
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(Mat::zeros(3, 3).frobenius(), 0.0);
        assert_eq!(Mat::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap().frobenius(), 2.0);
        assert!((Mat::eye(5, 3).frobenius() - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn skew_validation() {
        let ok = Mat::from_rows(&[[0.0, 2.0], [-2.0, 0.0]]).unwrap();
        assert!(SkewMat::new(ok).is_ok());
        let bad = Mat::from_rows(&[[0.0, 2.0], [2.0, 0.0]]).unwrap();
        assert!(matches!(SkewMat::new(bad), Err(Error::NotSkew { .. })));
        assert!(SkewMat::new(Mat::zeros(2, 3)).is_err());
        let s = SkewMat::from_upper(3, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.as_mat()[(2, 1)], -3.0);
    }

    #[test]
    fn serde_round_trip() {
        let m = Mat::from_rows(&[[1.0, 2.5], [-3.0, 0.125]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[1.0,2.5],[-3.0,0.125]]");
        let back: Mat = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<SkewMat>("[[0.0,1.0],[1.0,0.0]]").is_err());
    }

    proptest::proptest! {
        #[test]
        fn associativity(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random(&mut rng, 3, 4);
            let b = random(&mut rng, 4, 2);
            let c = random(&mut rng, 2, 5);
            let left = (&(&a * &b)) * &c;
            let right = &a * &(&b * &c);
            proptest::prop_assert!(left.dist(&right) <= 1e-12 * left.frobenius().max(1.0));
        }

        #[test]
        fn submultiplicative(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random(&mut rng, 4, 3);
            let b = random(&mut rng, 3, 4);
            proptest::prop_assert!((&a * &b).frobenius() <= a.frobenius() * b.frobenius() * (1.0 + 1e-15));
        }
    }
}
