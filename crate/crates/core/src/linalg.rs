//! Dense complex LU with partial pivoting for small fixed sizes.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type Mat<const N: usize> = [[C64; N]; N];

#[derive(Debug, Clone)]
pub struct Lu<const N: usize> {
    lu: Mat<N>,
    perm: [usize; N],
    sign: f64,
}

impl<const N: usize> Lu<N> {
    pub fn new(a: &Mat<N>) -> Result<Self> {
        let mut lu = *a;
        let mut perm = [0usize; N];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = i;
        }
        let mut sign = 1.0;
        for c in 0..N {
            let piv = (c..N)
                .max_by(|&i, &j| lu[i][c].norm().total_cmp(&lu[j][c].norm()))
                .expect("nonempty range");
            if lu[piv][c].norm() == 0.0 {
                return Err(Error::Singular);
            }
            if piv != c {
                lu.swap(piv, c);
                perm.swap(piv, c);
                sign = -sign;
            }
            for r in c + 1..N {
                let f = lu[r][c] / lu[c][c];
                lu[r][c] = f;
                for k in c + 1..N {
                    let v = lu[c][k];
                    lu[r][k] -= f * v;
                }
            }
        }
        Ok(Lu { lu, perm, sign })
    }

    pub fn det(&self) -> C64 {
        (0..N).fold(C64::new(self.sign, 0.0), |acc, i| acc * self.lu[i][i])
    }

    pub fn solve(&self, b: &[C64; N]) -> [C64; N] {
        let mut x = [C64::new(0.0, 0.0); N];
        for i in 0..N {
            let mut s = b[self.perm[i]];
            for k in 0..i {
                s -= self.lu[i][k] * x[k];
            }
            x[i] = s;
        }
        for i in (0..N).rev() {
            let mut s = x[i];
            for k in i + 1..N {
                s -= self.lu[i][k] * x[k];
            }
            x[i] = s / self.lu[i][i];
        }
        x
    }

    pub fn inverse(&self) -> Mat<N> {
        let mut inv = [[C64::new(0.0, 0.0); N]; N];
        for c in 0..N {
            let mut e = [C64::new(0.0, 0.0); N];
            e[c] = C64::new(1.0, 0.0);
            let col = self.solve(&e);
            for r in 0..N {
                inv[r][c] = col[r];
            }
        }
        inv
    }
}

pub fn matmul<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> Mat<N> {
    let mut out = [[C64::new(0.0, 0.0); N]; N];
    for i in 0..N {
        for j in 0..N {
            out[i][j] = (0..N).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn matvec<const N: usize>(a: &Mat<N>, v: &[C64; N]) -> [C64; N] {
    let mut out = [C64::new(0.0, 0.0); N];
    for i in 0..N {
        out[i] = (0..N).map(|k| a[i][k] * v[k]).sum();
    }
    out
}

/// `‖A B - I‖_F`.
pub fn identity_residual<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> f64 {
    let p = matmul(a, b);
    let mut s = 0.0;
    for (i, row) in p.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let d = if i == j { v - 1.0 } else { *v };
            s += d.norm_sqr();
        }
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn small_known_determinant() {
        let a = [[c(2.0, 0.0), c(1.0, 1.0)], [c(0.0, -1.0), c(3.0, 0.0)]];
        let lu = Lu::new(&a).unwrap();
        let want = c(2.0, 0.0) * c(3.0, 0.0) - c(1.0, 1.0) * c(0.0, -1.0);
        assert!((lu.det() - want).norm() < 1e-14);
        assert!(identity_residual(&a, &lu.inverse()) < 1e-14);
    }

    #[test]
    fn pivoting_needed() {
        let a = [
            [c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)],
            [c(1.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)],
            [c(4.0, 0.0), c(-3.0, 0.0), c(8.0, 0.0)],
        ];
        let lu = Lu::new(&a).unwrap();
        assert!((lu.det() - c(-2.0, 0.0)).norm() < 1e-13);
        let x = lu.solve(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        let back = matvec(&a, &x);
        assert!((back[2] - c(3.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn singular_detected() {
        let a = [[c(1.0, 0.0), c(2.0, 0.0)], [c(2.0, 0.0), c(4.0, 0.0)]];
        assert!(matches!(Lu::new(&a), Err(Error::Singular)));
    }
}
