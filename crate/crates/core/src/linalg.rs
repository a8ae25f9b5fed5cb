//! Small dense complex matrices stored row-major in slices of length `r*r`.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn identity(r: usize) -> Vec<Complex64> {
    let mut m = vec![ZERO; r * r];
    for i in 0..r {
        m[i * r + i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn matmul(a: &[Complex64], b: &[Complex64], r: usize) -> Vec<Complex64> {
    let mut c = vec![ZERO; r * r];
    for i in 0..r {
        for k in 0..r {
            let aik = a[i * r + k];
            for j in 0..r {
                c[i * r + j] += aik * b[k * r + j];
            }
        }
    }
    c
}

pub fn matvec(a: &[Complex64], x: &[Complex64], r: usize) -> Vec<Complex64> {
    (0..r)
        .map(|i| (0..r).map(|j| a[i * r + j] * x[j]).sum())
        .collect()
}

pub fn transpose(a: &[Complex64], r: usize) -> Vec<Complex64> {
    let mut t = vec![ZERO; r * r];
    for i in 0..r {
        for j in 0..r {
            t[j * r + i] = a[i * r + j];
        }
    }
    t
}

pub fn conj_transpose(a: &[Complex64], r: usize) -> Vec<Complex64> {
    let mut t = transpose(a, r);
    t.iter_mut().for_each(|v| *v = v.conj());
    t
}

pub fn frobenius(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// max |a - a^H| entrywise.
pub fn hermitian_deviation(a: &[Complex64], r: usize) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..r {
        for j in 0..r {
            d = d.max((a[i * r + j] - a[j * r + i].conj()).norm());
        }
    }
    d
}

/// Lower-triangular `L` with `a = L L^H`, or `None` if `a` is not positive
/// definite.
pub fn cholesky(a: &[Complex64], r: usize) -> Option<Vec<Complex64>> {
    let mut l = vec![ZERO; r * r];
    for j in 0..r {
        let mut d = a[j * r + j].re;
        for k in 0..j {
            d -= l[j * r + k].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let djj = d.sqrt();
        l[j * r + j] = Complex64::new(djj, 0.0);
        for i in j + 1..r {
            let mut s = a[i * r + j];
            for k in 0..j {
                s -= l[i * r + k] * l[j * r + k].conj();
            }
            l[i * r + j] = s / djj;
        }
    }
    Some(l)
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(a: &[Complex64], r: usize) -> Option<Vec<Complex64>> {
    let mut m = a.to_vec();
    let mut inv = identity(r);
    for col in 0..r {
        let piv = (col..r).max_by(|&x, &y| {
            m[x * r + col]
                .norm()
                .partial_cmp(&m[y * r + col].norm())
                .unwrap()
        })?;
        if m[piv * r + col].norm() == 0.0 {
            return None;
        }
        if piv != col {
            for j in 0..r {
                m.swap(piv * r + j, col * r + j);
                inv.swap(piv * r + j, col * r + j);
            }
        }
        let p = m[col * r + col];
        for j in 0..r {
            m[col * r + j] /= p;
            inv[col * r + j] /= p;
        }
        for i in 0..r {
            if i != col {
                let f = m[i * r + col];
                if f != ZERO {
                    for j in 0..r {
                        let (mc, ic) = (m[col * r + j], inv[col * r + j]);
                        m[i * r + j] -= f * mc;
                        inv[i * r + j] -= f * ic;
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn forward_substitute(l: &[Complex64], b: &[Complex64], r: usize) -> Vec<Complex64> {
    let mut x = vec![ZERO; r];
    for i in 0..r {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * r + k] * x[k];
        }
        x[i] = s / l[i * r + i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = vec![c(2.0, 0.0), c(0.5, 0.3), c(0.5, -0.3), c(1.0, 0.0)];
        let l = cholesky(&a, 2).unwrap();
        let back = matmul(&l, &conj_transpose(&l, 2), 2);
        for (x, y) in back.iter().zip(&a) {
            assert!((x - y).norm() < 1e-14);
        }
        let not_pd = vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)];
        assert!(cholesky(&not_pd, 2).is_none());
    }

    #[test]
    fn inverse_roundtrip() {
        let a = vec![
            c(0.0, 1.0),
            c(2.0, 0.0),
            c(0.1, 0.0),
            c(1.0, -1.0),
            c(0.5, 0.5),
            c(0.0, 0.0),
            c(3.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
        ];
        let inv = inverse(&a, 3).unwrap();
        let id = matmul(&a, &inv, 3);
        for (x, y) in id.iter().zip(identity(3)) {
            assert!((x - y).norm() < 1e-13);
        }
    }
}
