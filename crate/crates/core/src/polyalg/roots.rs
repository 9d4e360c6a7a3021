//! Polynomial roots as eigenvalues of the balanced companion matrix.
//!
//! The companion matrix is upper Hessenberg, so the eigenvalues come straight
//! from a Francis double-shift QR sweep without a reduction step. Each
//! eigenvalue is then polished with a few Newton steps on the original
//! polynomial, and conjugate pairs are symmetrized so that downstream real
//! reconstructions stay real.

use num_complex::Complex64;

use super::{PolyError, PolyResult, TransferPoly};

const RADIX: f64 = 2.0;
const MAX_QR_ITERS: usize = 60;
const CONJ_TOL: f64 = 1e-9;

/// All `deg(p)` roots of `p`, with multiplicity.
pub fn poly_roots(p: &TransferPoly) -> PolyResult<Vec<Complex64>> {
    if p.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    let degree = p.degree();
    if degree == 0 {
        return Err(PolyError::NoRoots);
    }
    let c = p.coeffs();

    // exact zeros at the origin are peeled off; the companion matrix handles the rest
    let zeros_at_origin = c.iter().take_while(|&&x| x == 0.0).count();
    let reduced = &c[zeros_at_origin..];
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
    if reduced.len() > 1 {
        let mut eig = companion_eigenvalues(reduced)?;
        for r in eig.iter_mut() {
            *r = polish(p, *r);
        }
        roots.extend(eig);
    }
    symmetrize_conjugates(&mut roots);
    Ok(roots)
}

/// Eigenvalues of the companion matrix of `c_0 + … + c_m z^m` (`c_m ≠ 0`).
fn companion_eigenvalues(c: &[f64]) -> PolyResult<Vec<Complex64>> {
    let m = c.len() - 1;
    if m == 1 {
        return Ok(vec![Complex64::new(-c[0] / c[1], 0.0)]);
    }
    // 1-based storage keeps the QR sweep readable against the textbook recurrence
    let mut a = vec![vec![0.0; m + 1]; m + 1];
    for k in 1..=m {
        a[1][k] = -c[m - k] / c[m];
    }
    for j in 2..=m {
        a[j][j - 1] = 1.0;
    }
    balance(&mut a, m);
    hessenberg_qr(&mut a, m)
}

/// Parlett–Reinsch diagonal similarity scaling by powers of two.
fn balance(a: &mut [Vec<f64>], n: usize) {
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 1..=n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 1..=n {
                        a[i][j] *= g;
                    }
                    for j in 1..=n {
                        a[j][i] *= f;
                    }
                }
            }
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (1-based, destroyed).
fn hessenberg_qr(a: &mut [Vec<f64>], n: usize) -> PolyResult<Vec<Complex64>> {
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.saturating_sub(1)).max(1)..=n {
            anorm += a[i][j].abs();
        }
    }

    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    let (mut x, mut y, mut z, mut w): (f64, f64, f64, f64);
    while nn >= 1 {
        let mut its = 0;
        loop {
            // look for a single small subdiagonal element
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            x = a[nn][nn];
            if l == nn {
                // one root found
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            y = a[nn - 1][nn - 1];
            w = a[nn][nn - 1] * a[nn - 1][nn];
            if l == nn - 1 {
                // two roots found
                p = 0.5 * (y - x);
                q = p * p + w;
                z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + z.copysign(p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn = nn.saturating_sub(2);
                break;
            }
            if its == MAX_QR_ITERS {
                return Err(PolyError::NumericalInstability(format!(
                    "QR iteration did not converge after {MAX_QR_ITERS} sweeps"
                )));
            }
            if its == 10 || its == 20 || its == 40 {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    a[i][i] -= x;
                }
                let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // two consecutive small subdiagonal elements
            let mut m = nn - 2;
            loop {
                z = a[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - ss;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            // double QR step on rows l..nn, columns m..nn
            for k in m..nn {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = 0.0;
                    if k != nn - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        p = a[k][j] + q * a[k + 1][j];
                        if k != nn - 1 {
                            p += r * a[k + 2][j];
                            a[k + 2][j] -= p * z;
                        }
                        a[k + 1][j] -= p * y;
                        a[k][j] -= p * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        p = x * a[i][k] + y * a[i][k + 1];
                        if k != nn - 1 {
                            p += z * a[i][k + 2];
                            a[i][k + 2] -= p * r;
                        }
                        a[i][k + 1] -= p * q;
                        a[i][k] -= p;
                    }
                }
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// Newton steps on the original polynomial, kept only while the residual shrinks.
fn polish(p: &TransferPoly, root: Complex64) -> Complex64 {
    let deriv: Vec<f64> = p
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| k as f64 * c)
        .collect();
    let eval_d = |z: Complex64| {
        deriv
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    };
    let mut best = root;
    let mut best_res = p.eval_complex(root).norm();
    for _ in 0..4 {
        let d = eval_d(best);
        if d.norm() == 0.0 {
            break;
        }
        let cand = best - p.eval_complex(best) / d;
        let res = p.eval_complex(cand).norm();
        if !res.is_finite() || res >= best_res {
            break;
        }
        best = cand;
        best_res = res;
    }
    best
}

/// Snaps near-real roots onto the real axis and makes conjugate pairs exact.
fn symmetrize_conjugates(roots: &mut [Complex64]) {
    let n = roots.len();
    let mut paired = vec![false; n];
    for i in 0..n {
        if paired[i] {
            continue;
        }
        let scale = roots[i].norm().max(1.0);
        if roots[i].im.abs() <= CONJ_TOL * scale {
            roots[i].im = 0.0;
            paired[i] = true;
            continue;
        }
        let target = roots[i].conj();
        let partner = (0..n).filter(|&j| j != i && !paired[j]).min_by(|&a, &b| {
            (roots[a] - target)
                .norm()
                .total_cmp(&(roots[b] - target).norm())
        });
        if let Some(j) = partner {
            let avg = (roots[i] + roots[j].conj()) * 0.5;
            roots[i] = avg;
            roots[j] = avg.conj();
            paired[j] = true;
        }
        paired[i] = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn example_seller_polynomial_roots() {
        let p = TransferPoly::new(vec![0.5, -0.2, -0.48]);
        let r = sorted_re(poly_roots(&p).unwrap());
        assert!((r[0].re + 1.25).abs() < 1e-12 && r[0].im == 0.0);
        assert!((r[1].re - 5.0 / 6.0).abs() < 1e-12 && r[1].im == 0.0);
    }

    #[test]
    fn linear_case() {
        let alpha = 0.37;
        let r = poly_roots(&TransferPoly::new(vec![1.0, -alpha])).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].re - 1.0 / alpha).abs() < 1e-12);
    }

    #[test]
    fn constant_has_no_roots_and_zero_is_rejected() {
        assert_eq!(
            poly_roots(&TransferPoly::constant(2.0)),
            Err(PolyError::NoRoots)
        );
        assert_eq!(
            poly_roots(&TransferPoly::zero()),
            Err(PolyError::ZeroPolynomial)
        );
    }

    #[test]
    fn cube_roots_form_conjugate_pair() {
        // 1 - 2 z^3: roots 2^{-1/3} e^{2πik/3}
        let r = poly_roots(&TransferPoly::new(vec![1.0, 0.0, 0.0, -2.0])).unwrap();
        let m = 2f64.powf(-1.0 / 3.0);
        for z in &r {
            assert!((z.norm() - m).abs() < 1e-12);
        }
        let complex: Vec<_> = r.iter().filter(|z| z.im != 0.0).collect();
        assert_eq!(complex.len(), 2);
        assert_eq!(complex[0].conj(), *complex[1]);
    }

    #[test]
    fn origin_roots_are_peeled() {
        let r = poly_roots(&TransferPoly::new(vec![0.0, 0.0, 1.0, 1.0])).unwrap();
        assert_eq!(r.iter().filter(|z| z.norm() == 0.0).count(), 2);
        assert!(r.iter().any(|z| (z.re + 1.0).abs() < 1e-12));
    }

    #[test]
    fn repeated_root_residual_small() {
        // (1+z)^4
        let p = TransferPoly::new(vec![1.0, 4.0, 6.0, 4.0, 1.0]);
        let r = poly_roots(&p).unwrap();
        assert_eq!(r.len(), 4);
        for z in r {
            assert!(p.eval_complex(z).norm() <= 1e-8 * p.max_abs_coeff());
        }
    }
}
