//! Bessel functions of the first kind, orders 0 and 1, for real arguments.
//!
//! Below [`ASYMPTOTIC_THRESHOLD`] the values come from Miller's backward
//! recurrence normalised by `J0 + 2 (J2 + J4 + ...) = 1`; above it from the
//! Hankel asymptotic expansion. Both branches are accurate to a few ulp of
//! the function's envelope.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const ASYMPTOTIC_THRESHOLD: f64 = 25.0;
const RESCALE_LIMIT: f64 = 1e250;

/// `(J0(x), J1(x))` for `x >= 0` via backward recurrence.
fn miller(x: f64) -> (f64, f64) {
    if x == 0.0 {
        return (1.0, 0.0);
    }
    // Start order: J_m(x) is below 1e-17 of the envelope for this m.
    let start = (x + 20.0 + 8.0 * x.sqrt()).ceil() as usize;
    let start = start + (start % 2);

    let two_over_x = 2.0 / x;
    let mut next = 0.0; // J_{n+1}
    let mut cur = 1e-300; // J_n
    let mut even_sum = 0.0; // sum of J_{2k}, k >= 1
    let mut j1 = 0.0;
    let mut n = start;
    while n > 0 {
        let prev = n as f64 * two_over_x * cur - next; // J_{n-1}
        next = cur;
        cur = prev;
        n -= 1;
        if n == 1 {
            j1 = cur;
        }
        if n.is_multiple_of(2) && n > 0 {
            even_sum += cur;
        }
        if cur.abs() > RESCALE_LIMIT {
            let s = 1.0 / RESCALE_LIMIT;
            cur *= s;
            next *= s;
            even_sum *= s;
            j1 *= s;
        }
    }
    let norm = cur + 2.0 * even_sum;
    (cur / norm, j1 / norm)
}

/// Hankel expansion `J_nu(x) = sqrt(2/(pi x)) (P cos chi - Q sin chi)`.
fn hankel(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let eight_x = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    for k in 1..60u32 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * eight_x);
        if k % 2 == 1 {
            // a_k / x^k with k odd feeds Q with sign (-1)^((k-1)/2)
            q += if (k / 2) % 2 == 0 { term } else { -term };
        } else {
            p += if (k / 2) % 2 == 0 { term } else { -term };
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    // chi = x - (2 nu + 1) pi / 4, expanded so that libm reduces x itself.
    let (s, c) = x.sin_cos();
    let (cos_chi, sin_chi) = match nu {
        0 => ((c + s) * FRAC_1_SQRT_2, (s - c) * FRAC_1_SQRT_2),
        1 => ((s - c) * FRAC_1_SQRT_2, -(s + c) * FRAC_1_SQRT_2),
        _ => unreachable!("only orders 0 and 1 are used"),
    };
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < ASYMPTOTIC_THRESHOLD {
        miller(ax).0
    } else {
        hankel(0, ax)
    }
}

pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < ASYMPTOTIC_THRESHOLD {
        miller(ax).1
    } else {
        hankel(1, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// `J2(x) = 2 J1(x) / x - J0(x)`, with the small-argument series near 0.
pub fn bessel_j2(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-3 {
        let h = ax * ax / 4.0;
        return h / 2.0 * (1.0 - h / 3.0 + h * h / 24.0);
    }
    if ax < ASYMPTOTIC_THRESHOLD {
        let (j0, j1) = miller(ax);
        2.0 * j1 / ax - j0
    } else {
        2.0 * hankel(1, ax) / ax - hankel(0, ax)
    }
}

/// `2 J1(x) / x`, equal to 1 at the origin.
pub fn jinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 8.0
    } else {
        2.0 * bessel_j1(x) / x
    }
}

/// Positive zeros of `f` on `(lo, hi)` located by scanning with step `dx`
/// and refining each sign change by bisection.
pub fn bracket_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, dx: f64, max: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut a = lo;
    let mut fa = f(a);
    while a < hi && roots.len() < max {
        let b = (a + dx).min(hi);
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            roots.push(bisect(&f, a, b, fa));
        }
        a = b;
        fa = fb;
    }
    roots
}

pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
