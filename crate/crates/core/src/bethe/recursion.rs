use crate::error::{Error, Result};
use crate::params::{Params, SymmetricMeasure};
use crate::scalar::Real;

/// Default sup-norm tolerance for fixed-point iteration.
pub const FIXED_POINT_TOL: f64 = 1e-12;
/// Default iteration budget.
pub const FIXED_POINT_MAX_ITER: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    /// Uniform measure; converges to nu_free.
    Uniform,
    /// Dirac mass at color 1; converges to nu_1.
    Delta1,
}

/// ln(e^{-beta} + (1 - e^{-beta}) x) = ln((e^beta - 1)x + 1) - beta
#[inline]
fn log_edge_factor<T: Real>(x: T, em: T) -> T {
    (em + (T::one() - em) * x).ln()
}

/// One step of the Bethe recursion on a symmetric measure.
pub fn bp_step<T: Real>(nu: &SymmetricMeasure<T>, p: &Params<T>) -> SymmetricMeasure<T> {
    let em = (-p.beta).exp();
    let dm1 = T::count(p.d - 1);
    let log_ratio = dm1 * (log_edge_factor(nu.c(), em) - log_edge_factor(nu.a, em)) - p.field;
    let qm1 = T::count(p.q - 1);
    SymmetricMeasure {
        q: p.q,
        a: T::one() / (T::one() + qm1 * log_ratio.exp()),
    }
}

/// Iterates [`bp_step`] until successive measures are within `tol` in sup norm.
pub fn bp_fixed_point<T: Real>(
    start: Start,
    p: &Params<T>,
    tol: T,
    max_iter: usize,
) -> Result<SymmetricMeasure<T>> {
    let mut nu = match start {
        Start::Uniform => SymmetricMeasure::uniform(p.q),
        Start::Delta1 => SymmetricMeasure::dirac(p.q),
    };
    for _ in 0..max_iter {
        let next = bp_step(&nu, p);
        if next.sup_dist(&nu) < tol {
            return Ok(next);
        }
        nu = next;
    }
    Err(Error::NoConvergence(max_iter))
}

pub fn bp_fixed_point_default<T: Real>(start: Start, p: &Params<T>) -> Result<SymmetricMeasure<T>> {
    bp_fixed_point(start, p, T::lit(FIXED_POINT_TOL), FIXED_POINT_MAX_ITER)
}

/// F(r; beta, B) = B + (d-1) log((e^{beta+r} + q - 1)/(e^r + e^beta + q - 2)).
pub fn scalar_f<T: Real>(r: T, p: &Params<T>) -> T {
    let dm1 = T::count(p.d - 1);
    if r == T::infinity() {
        return p.field + dm1 * p.beta;
    }
    let ln_qm1 = T::count(p.q - 1).ln();
    let ln_qm2 = T::count(p.q - 2).ln();
    let num = (p.beta + r).log_add_exp(ln_qm1);
    let den = r.log_add_exp(p.beta.log_add_exp(ln_qm2));
    p.field + dm1 * (num - den)
}

/// dF/dr = (d-1)[e^{beta+r}/(e^{beta+r}+q-1) - e^r/(e^r+e^beta+q-2)].
pub fn scalar_f_prime<T: Real>(r: T, p: &Params<T>) -> T {
    let dm1 = T::count(p.d - 1);
    let ln_qm1 = T::count(p.q - 1).ln();
    let ln_rest = p.beta.log_add_exp(T::count(p.q - 2).ln());
    let sig = |x: T| T::one() / (T::one() + (-x).exp());
    dm1 * (sig(p.beta + r - ln_qm1) - sig(r - ln_rest))
}

/// Bethe functional, evaluated in log-stable form.
pub fn bethe_functional<T: Real>(nu: &SymmetricMeasure<T>, p: &Params<T>) -> T {
    let em = (-p.beta).exp();
    let d = T::count(p.d);
    let (a, c) = (nu.a, nu.c());
    let ln_qm1 = T::count(p.q - 1).ln();
    let vertex = d * p.beta
        + (p.field + d * log_edge_factor(a, em)).log_add_exp(ln_qm1 + d * log_edge_factor(c, em));
    let s = a * a + T::count(p.q - 1) * c * c;
    let edge = d / T::lit(2.0) * (p.beta + log_edge_factor(s, em));
    vertex - edge
}

/// Largest and smallest nonnegative roots of F(r) = r, located on the monotone
/// pieces of F(r) - r delimited by the critical points rho_-, rho_+.
pub fn scalar_roots<T: Real>(p: &Params<T>) -> Vec<T> {
    let g = |r: T| scalar_f(r, p) - r;
    let hi_end = p.field + T::count(p.d - 1) * p.beta + T::one();
    let mut cuts = vec![T::zero()];
    if let Some((lo, hi)) = super::curves::rho_pm(p.beta, p) {
        for x in [lo, hi] {
            if x > T::zero() && x < hi_end {
                cuts.push(x);
            }
        }
    }
    cuts.push(hi_end);
    let touch = T::lit(64.0) * T::epsilon() * (T::one() + hi_end);
    let mut roots: Vec<T> = Vec::new();
    let push = |r: T, roots: &mut Vec<T>| {
        if roots.last().is_none_or(|&l| (r - l).abs() > touch) {
            roots.push(r);
        }
    };
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (glo, ghi) = (g(lo), g(hi));
        if glo.abs() <= touch {
            push(lo, &mut roots);
        }
        if glo.abs() > touch && ghi.abs() > touch && (glo < T::zero()) != (ghi < T::zero()) {
            push(bisect(&g, lo, hi), &mut roots);
        }
        if ghi.abs() <= touch && hi < hi_end {
            push(hi, &mut roots);
        }
    }
    roots
}

/// Bisection to machine precision on a sign change of `f` over [lo, hi].
pub(crate) fn bisect<T: Real, F: Fn(T) -> T>(f: &F, mut lo: T, mut hi: T) -> T {
    let flo_neg = f(lo) < T::zero();
    for _ in 0..400 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < T::zero()) == flo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / T::lit(2.0)
}

/// (r_free, r_1): smallest nonnegative and largest roots of F(r) = r.
pub fn fixed_point_rs<T: Real>(p: &Params<T>) -> (T, T) {
    let roots = scalar_roots(p);
    let first = *roots.first().expect("F(r) - r changes sign on [0, inf)");
    let last = *roots.last().expect("nonempty");
    (first, last)
}

/// (nu_free, nu_1) from the scalar equation; accurate even at saddle-node points.
pub fn fixed_points<T: Real>(p: &Params<T>) -> (SymmetricMeasure<T>, SymmetricMeasure<T>) {
    let (rf, r1) = fixed_point_rs(p);
    (
        SymmetricMeasure::from_r(p.q, rf),
        SymmetricMeasure::from_r(p.q, r1),
    )
}

/// (pi, m) with pi = p/(p + q(1-p)) and m = (d-1) pi.
pub fn percolation_factor<T: Real>(p: &Params<T>) -> (T, T) {
    let pe = p.p_edge();
    let pi = pe / (pe + p.qf() * (T::one() - pe));
    (pi, T::count(p.d - 1) * pi)
}
