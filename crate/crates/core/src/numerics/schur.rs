//! Complex Schur decomposition `M = QTQᴴ` by Householder reduction to
//! Hessenberg form followed by single-shift QR sweeps.
//!
//! Subdiagonal entries are deflated when they drop below `ε` relative to
//! either their diagonal neighbours or the norm of the whole matrix. The
//! absolute branch is what lets clusters of tiny or zero eigenvalues
//! converge; it perturbs the matrix by no more than `ε‖M‖`, which is the
//! backward error of the reduction anyway.

use nalgebra::{Complex, ComplexField, DMatrix};

use crate::error::{Error, Result};

type C = Complex<f64>;

const EXCEPTIONAL_EVERY: usize = 10;
const ITER_PER_EIGENVALUE: usize = 30;

fn zero() -> C {
    C::new(0.0, 0.0)
}

fn abs1(z: C) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Reduces `h` to upper Hessenberg form in place, accumulating the
/// transformations into `q`.
fn hessenberg(h: &mut DMatrix<C>, q: &mut DMatrix<C>) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        let mut v: alloc::vec::Vec<C> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = ComplexField::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>());
        if xnorm == 0.0 {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.modulus() > 0.0 {
            x0 / C::new(x0.modulus(), 0.0)
        } else {
            C::new(1.0, 0.0)
        };
        v[0] += phase * xnorm;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // H ← (I − βvvᴴ)H
        for j in 0..n {
            let mut s = zero();
            for (t, vi) in v.iter().enumerate() {
                s += vi.conj() * h[(k + 1 + t, j)];
            }
            s *= beta;
            for (t, vi) in v.iter().enumerate() {
                h[(k + 1 + t, j)] -= vi * s;
            }
        }
        // H ← H(I − βvvᴴ), Q ← Q(I − βvvᴴ)
        for target in [&mut *h, &mut *q] {
            for i in 0..n {
                let mut s = zero();
                for (t, vi) in v.iter().enumerate() {
                    s += target[(i, k + 1 + t)] * vi;
                }
                s *= beta;
                for (t, vi) in v.iter().enumerate() {
                    target[(i, k + 1 + t)] -= s * vi.conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = zero();
        }
    }
}

/// Unitary rotation `[[c, s], [−s̄, c]]` sending `(a, b)` to `(r, 0)`.
fn givens(a: C, b: C) -> (f64, C) {
    let ma = a.modulus();
    let mb = b.modulus();
    if mb == 0.0 {
        return (1.0, zero());
    }
    if ma == 0.0 {
        return (0.0, b.conj() / C::new(mb, 0.0));
    }
    let r = ComplexField::sqrt(ma * ma + mb * mb);
    (ma / r, (a / C::new(ma, 0.0)) * b.conj() / C::new(r, 0.0))
}

/// Eigenvalue of the 2×2 block `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: C, b: C, c: C, d: C) -> C {
    let half = C::new(0.5, 0.0);
    let mean = (a + d) * half;
    let diff = (a - d) * half;
    let disc = ComplexField::sqrt(diff * diff + b * c);
    let l1 = mean + disc;
    let l2 = mean - disc;
    if (l1 - d).modulus() <= (l2 - d).modulus() {
        l1
    } else {
        l2
    }
}

/// Returns `(Q, T)` with `Q` unitary, `T` upper triangular and
/// `m = QTQᴴ`.
pub(crate) fn schur(m: &DMatrix<C>) -> Result<(DMatrix<C>, DMatrix<C>)> {
    let n = m.nrows();
    let mut h = m.clone();
    let mut q = DMatrix::<C>::identity(n, n);
    if n <= 1 {
        return Ok((q, h));
    }
    hessenberg(&mut h, &mut q);
    let eps = f64::EPSILON;
    let hnorm = h.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let abs_floor = eps * ComplexField::sqrt(hnorm);
    let max_iter = ITER_PER_EIGENVALUE * n.max(10);

    let mut hi = n - 1;
    let mut iter = 0;
    let mut rot: alloc::vec::Vec<(f64, C)> = alloc::vec::Vec::with_capacity(n);
    while hi > 0 {
        // locate the start of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let sub = abs1(h[(lo, lo - 1)]);
            let diag = abs1(h[(lo, lo)]) + abs1(h[(lo - 1, lo - 1)]);
            if sub <= eps * diag || sub <= abs_floor {
                h[(lo, lo - 1)] = zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > max_iter {
            return Err(Error::NoConvergence("Schur decomposition".into()));
        }
        let shift = if iter % EXCEPTIONAL_EVERY == 0 {
            h[(hi, hi)] + C::new(0.75 * abs1(h[(hi, hi - 1)]), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        for k in lo..=hi {
            h[(k, k)] -= shift;
        }
        rot.clear();
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            let cc = C::new(c, 0.0);
            for j in k..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = cc * x + s * y;
                h[(k + 1, j)] = -s.conj() * x + cc * y;
            }
            h[(k + 1, k)] = zero();
            rot.push((c, s));
        }
        for (t, &(c, s)) in rot.iter().enumerate() {
            let k = lo + t;
            let cc = C::new(c, 0.0);
            for i in 0..=(k + 1).min(hi) {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = cc * x + s.conj() * y;
                h[(i, k + 1)] = -s * x + cc * y;
            }
            for i in 0..n {
                let x = q[(i, k)];
                let y = q[(i, k + 1)];
                q[(i, k)] = cc * x + s.conj() * y;
                q[(i, k + 1)] = -s * x + cc * y;
            }
        }
        for k in lo..=hi {
            h[(k, k)] += shift;
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = zero();
        }
    }
    Ok((q, h))
}
