use super::recursion::{bethe_functional, bisect, fixed_points, scalar_f, scalar_roots};
use crate::error::{Error, Result};
use crate::params::{Params, SymmetricMeasure};
use crate::scalar::Real;
use serde::Serialize;

/// Coefficients (A, B, C) of A x^2 + B x + C = 0, x = e^r, equivalent to dF/dr(r; beta, 0) = 1.
///
/// With a = e^beta and K = a + q - 2 the condition reads
/// (d-1)(a-1)(a+q-1) x = (a x + q - 1)(x + K).
pub fn rho_quadratic<T: Real>(beta: T, p: &Params<T>) -> (T, T, T) {
    let a = beta.exp();
    let q = p.qf();
    let one = T::one();
    let k = a + q - T::lit(2.0);
    let lin = a * k + q - one - T::count(p.d - 1) * (a - one) * (a + q - one);
    (a, lin, (q - one) * k)
}

/// Solutions rho_- <= rho_+ of dF/dr(r; beta, 0) = 1, if any.
pub fn rho_pm<T: Real>(beta: T, p: &Params<T>) -> Option<(T, T)> {
    let (qa, qb, qc) = rho_quadratic(beta, p);
    if !qa.is_finite() || qb >= T::zero() {
        return None;
    }
    let mut disc = qb * qb - T::lit(4.0) * qa * qc;
    // Discriminants within their own rounding error are treated as a double root.
    let noise = T::lit(64.0) * T::epsilon() * (qb * qb + T::lit(4.0) * qa * qc);
    if disc < T::zero() {
        if -disc > noise {
            return None;
        }
        disc = T::zero();
    }
    let big = (-qb + disc.sqrt()) / T::lit(2.0);
    let x_hi = big / qa;
    let x_lo = qc / big;
    Some((x_lo.ln(), x_hi.ln()))
}

/// Kesten-Stigum point where dF/dr(0; beta, 0) = 1: e^beta = (d + q - 2)/(d - 2).
pub fn ks_threshold<T: Real>(p: &Params<T>) -> T {
    (T::count(p.d + p.q - 2) / T::count(p.d - 2)).ln()
}

/// beta_-: smallest beta where rho_pm has a solution.
pub fn beta_minus<T: Real>(p: &Params<T>) -> T {
    let ks = ks_threshold(p);
    if p.q == 2 {
        return ks;
    }
    let exists = |b: T| rho_pm(b, p).is_some();
    let (mut lo, mut hi) = (T::zero(), ks);
    debug_assert!(!exists(lo) && exists(hi));
    for _ in 0..400 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if exists(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// (B_-(beta), B_+(beta)) with B_{+-}(beta) = rho_{-+} - F(rho_{-+}; beta, 0).
pub fn b_pm<T: Real>(beta: T, p: &Params<T>) -> Result<(T, T)> {
    let (lo, hi) = rho_pm(beta, p)
        .ok_or_else(|| Error::OutOfRange(format!("rho_pm has no solution at beta = {beta}")))?;
    let p0 = p.with_field(T::zero()).with_beta(beta);
    Ok((hi - scalar_f(hi, &p0), lo - scalar_f(lo, &p0)))
}

#[derive(Clone, Copy, PartialEq)]
enum Branch {
    Free,
    Plus,
}

/// Inverts B_- (Free) or B_+ (Plus) on [beta_-, KS]; `None` above the merge point.
fn invert<T: Real>(field: T, branch: Branch, p: &Params<T>) -> Option<T> {
    let ks = ks_threshold(p);
    if p.q == 2 {
        return (field == T::zero()).then_some(ks);
    }
    if field == T::zero() && branch == Branch::Plus {
        // B_+ has a double zero at KS; bisection would only resolve it to ~1e-8.
        return Some(ks);
    }
    let bm = beta_minus(p);
    let h = |b: T| {
        let (minus, plus) = b_pm(b, p).expect("beta >= beta_-");
        match branch {
            Branch::Free => minus - field,
            Branch::Plus => plus - field,
        }
    };
    if h(bm) < T::zero() {
        return None;
    }
    if h(ks) > T::zero() {
        return Some(ks);
    }
    Some(bisect(&h, bm, ks))
}

/// beta_free(B): inverse of B_-.
pub fn beta_free<T: Real>(field: T, p: &Params<T>) -> Result<T> {
    if field < T::zero() {
        return Err(Error::OutOfRange(format!("B = {field} < 0")));
    }
    invert(field, Branch::Free, p)
        .ok_or_else(|| Error::OutOfRange(format!("B = {field} above the merge point")))
}

/// beta_+(B): inverse of B_+.
pub fn beta_plus<T: Real>(field: T, p: &Params<T>) -> Result<T> {
    if field < T::zero() {
        return Err(Error::OutOfRange(format!("B = {field} < 0")));
    }
    invert(field, Branch::Plus, p)
        .ok_or_else(|| Error::OutOfRange(format!("B = {field} above the merge point")))
}

/// Merge point B_+ of the critical curves, by bisection on beta_+(B) - beta_free(B).
pub fn b_plus<T: Real>(p: &Params<T>, tol: T) -> T {
    if p.q == 2 {
        return T::zero();
    }
    let open = |b: T| match (invert(b, Branch::Free, p), invert(b, Branch::Plus, p)) {
        (Some(f), Some(pl)) => pl - f > T::zero(),
        _ => false,
    };
    let mut lo = T::zero();
    let mut hi = T::one();
    while open(hi) {
        lo = hi;
        hi = hi * T::lit(2.0);
    }
    while hi - lo > tol {
        let mid = (lo + hi) / T::lit(2.0);
        if open(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Phi(nu_1) - Phi(nu_free) at (beta, B).
pub fn delta_phi<T: Real>(beta: T, field: T, p: &Params<T>) -> T {
    let pp = p.with_beta(beta).with_field(field);
    let (nf, n1) = fixed_points(&pp);
    bethe_functional(&n1, &pp) - bethe_functional(&nf, &pp)
}

/// beta_c(B) by bisection of Phi(nu_1) - Phi(nu_free) over [beta_free(B), beta_+(B)].
pub fn beta_c<T: Real>(field: T, p: &Params<T>) -> Result<T> {
    let lo = beta_free(field, p)?;
    let hi = beta_plus(field, p)?;
    if hi - lo <= T::lit(1e-12) * (T::one() + hi) {
        return Ok((lo + hi) / T::lit(2.0));
    }
    let f = |b: T| delta_phi(b, field, p);
    // Endpoints are saddle-node points of one branch; probe just inside them.
    let inset = (hi - lo) * T::lit(1e-6);
    let (flo, fhi) = (f(lo + inset), f(hi - inset));
    if !(flo < T::zero() && fhi > T::zero()) {
        return Err(Error::Bracket(format!(
            "Phi difference {flo} .. {fhi} on [{lo}, {hi}] at B = {field}"
        )));
    }
    Ok(bisect(&f, lo + inset, hi - inset))
}

/// Closed forms of beta_c(0): e^{beta_c} = (q-2)/((q-1)^{1-2/d} - 1) for q >= 3, d/(d-2) for q = 2.
pub fn beta_c_zero_closed_form(q: usize, d: usize) -> f64 {
    if q == 2 {
        (d as f64 / (d as f64 - 2.0)).ln()
    } else {
        let qf = q as f64;
        ((qf - 2.0) / ((qf - 1.0).powf(1.0 - 2.0 / d as f64) - 1.0)).ln()
    }
}

/// Phi(r_1) - Phi(r_free) along B = B_-(beta), where r_1 = rho_+ is the saddle node.
pub fn psi_minus<T: Real>(beta: T, p: &Params<T>) -> Result<T> {
    let (field, _) = b_pm(beta, p)?;
    let (_, rho_hi) = rho_pm(beta, p).expect("checked by b_pm");
    let pp = p.with_beta(beta).with_field(field);
    let r_free = *scalar_roots(&pp).first().expect("root");
    let wired = SymmetricMeasure::from_r(p.q, rho_hi);
    let free = SymmetricMeasure::from_r(p.q, r_free);
    Ok(bethe_functional(&wired, &pp) - bethe_functional(&free, &pp))
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvePoint {
    pub field: f64,
    pub beta_free: f64,
    pub beta_c: f64,
    pub beta_plus: f64,
}

/// Sampled critical curves on B in [0, B_+].
#[derive(Clone, Debug, Serialize)]
pub struct CriticalCurves {
    pub q: usize,
    pub d: usize,
    pub b_plus: f64,
    pub beta_minus: f64,
    pub points: Vec<CurvePoint>,
    pub failures: Vec<(f64, String)>,
}

impl CriticalCurves {
    /// Traces the three curves at `n_grid + 1` equally spaced fields including both ends.
    pub fn trace(q: usize, d: usize, n_grid: usize) -> Result<Self> {
        let p = Params::f64(q, d, 0.0, 0.0)?;
        let bp = b_plus(&p, 1e-10);
        let bm = beta_minus(&p);
        let mut points = Vec::new();
        let mut failures = Vec::new();
        for i in 0..=n_grid {
            let field = if n_grid == 0 {
                0.0
            } else {
                bp * i as f64 / n_grid as f64
            };
            let res = (|| -> Result<CurvePoint> {
                Ok(CurvePoint {
                    field,
                    beta_free: beta_free(field, &p)?,
                    beta_c: beta_c(field, &p)?,
                    beta_plus: beta_plus(field, &p)?,
                })
            })();
            match res {
                Ok(pt) => points.push(pt),
                Err(e) => failures.push((field, e.to_string())),
            }
        }
        Ok(CriticalCurves {
            q,
            d,
            b_plus: bp,
            beta_minus: bm,
            points,
            failures,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("B,beta_free,beta_c,beta_plus\n");
        for pt in &self.points {
            s.push_str(&format!(
                "{},{},{},{}\n",
                crate::fmt17(pt.field),
                crate::fmt17(pt.beta_free),
                crate::fmt17(pt.beta_c),
                crate::fmt17(pt.beta_plus)
            ));
        }
        s
    }

    /// Strict ordering below the merge point and coincidence at it, within `merge_tol`.
    pub fn check_structure(&self, merge_tol: f64) -> std::result::Result<(), String> {
        if !self.failures.is_empty() {
            return Err(format!("{} trace failures", self.failures.len()));
        }
        for pt in &self.points {
            if pt.field < self.b_plus
                && (self.b_plus - pt.field) > merge_tol
                && !(pt.beta_free < pt.beta_c && pt.beta_c < pt.beta_plus)
            {
                return Err(format!("ordering fails at B = {}", pt.field));
            }
        }
        let last = self.points.last().ok_or("no points")?;
        let spread = (last.beta_plus - last.beta_free).abs();
        if spread > merge_tol {
            return Err(format!("curves differ by {spread} at B_+"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe::recursion::scalar_f_prime;
    use approx::assert_abs_diff_eq;

    fn p(q: usize, d: usize) -> Params<f64> {
        Params::f64(q, d, 0.0, 0.0).unwrap()
    }

    /// Solutions of dF/dr = 1 by a bracketed scan, independent of the quadratic.
    fn numeric_rho(beta: f64, pp: &Params<f64>) -> Vec<f64> {
        let p0 = pp.with_beta(beta);
        let h = |r: f64| scalar_f_prime(r, &p0) - 1.0;
        let grid: Vec<f64> = (0..=40000).map(|i| -20.0 + i as f64 * 1e-3).collect();
        let mut out = Vec::new();
        for w in grid.windows(2) {
            if (h(w[0]) < 0.0) != (h(w[1]) < 0.0) {
                out.push(bisect(&h, w[0], w[1]));
            }
        }
        out
    }

    #[test]
    fn quadratic_agrees_with_numeric_solve() {
        for (q, d) in [(3, 3), (3, 4), (4, 3), (10, 4), (30, 3), (30, 10), (2, 5)] {
            let pp = p(q, d);
            for beta in [0.3, 0.9, 1.4, 2.0, 2.8, 3.5] {
                let quad = rho_pm(beta, &pp);
                let num = numeric_rho(beta, &pp);
                match quad {
                    None => assert!(num.is_empty(), "q={q} d={d} beta={beta}: {num:?}"),
                    Some((lo, hi)) => {
                        assert_eq!(num.len(), 2, "q={q} d={d} beta={beta}");
                        assert_abs_diff_eq!(lo, num[0], epsilon = 1e-9);
                        assert_abs_diff_eq!(hi, num[1], epsilon = 1e-9);
                        for r in [lo, hi] {
                            let p0 = pp.with_beta(beta);
                            let h = 1e-6;
                            let fd = (scalar_f(r + h, &p0) - scalar_f(r - h, &p0)) / (2.0 * h);
                            assert!((fd - 1.0).abs() < 1e-8);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn no_rho_at_small_beta() {
        assert!(rho_pm(0.1, &p(3, 3)).is_none());
    }

    #[test]
    fn double_root_at_beta_minus() {
        let pp = p(3, 3);
        let bm = beta_minus(&pp);
        let (lo, hi) = rho_pm(bm, &pp).unwrap();
        assert!(hi - lo < 1e-8, "{lo} {hi}");
        let (bmi, bpl) = b_pm(bm, &pp).unwrap();
        assert!((bpl - bmi).abs() < 1e-10);
        assert_abs_diff_eq!(bm, 1.3276058612341755, epsilon = 1e-9);
    }

    #[test]
    fn b_pm_ordering_and_inverse() {
        let pp = p(3, 3);
        let (bmi, bpl) = b_pm(2.0, &pp).unwrap();
        assert!(bmi < bpl);
        for beta in [1.33, 1.335, 1.34] {
            let (bmi, _) = b_pm(beta, &pp).unwrap();
            if bmi >= 0.0 {
                assert_abs_diff_eq!(beta_free(bmi, &pp).unwrap(), beta, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn curves_at_zero_field() {
        let pp = p(3, 3);
        let bf = beta_free(0.0, &pp).unwrap();
        let bpl = beta_plus(0.0, &pp).unwrap();
        assert!(0.0 < bf && bf < bpl);
        assert_abs_diff_eq!(bpl, 4f64.ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(bf, 1.3424540464535264, epsilon = 1e-9);
        assert_abs_diff_eq!(b_pm(bf, &pp).unwrap().0, 0.0, epsilon = 1e-7);
    }

    #[test]
    fn merge_point() {
        let pp = p(3, 3);
        let bp = b_plus(&pp, 1e-10);
        assert_abs_diff_eq!(bp, 0.006166462861434, epsilon = 1e-8);
        let bf = beta_free(bp, &pp).unwrap();
        let bpl = beta_plus(bp, &pp).unwrap();
        assert!((bf - bpl).abs() < 1e-6);
        assert!(beta_free(bp * 1.01, &pp).is_err());
    }

    #[test]
    fn critical_point_closed_forms() {
        assert_abs_diff_eq!(beta_c(0.0, &p(2, 4)).unwrap(), 2f64.ln(), epsilon = 1e-12);
        let want = (1.0 / (2f64.powf(1.0 / 3.0) - 1.0)).ln();
        assert_abs_diff_eq!(beta_c(0.0, &p(3, 3)).unwrap(), want, epsilon = 1e-9);
        assert_abs_diff_eq!(beta_c_zero_closed_form(3, 3), want, epsilon = 1e-15);
    }

    #[test]
    fn ordering_on_grid() {
        let pp = p(3, 3);
        let bp = b_plus(&pp, 1e-10);
        for i in 0..10 {
            let f = 0.9 * bp * i as f64 / 9.0;
            let (a, b, c) = (
                beta_free(f, &pp).unwrap(),
                beta_c(f, &pp).unwrap(),
                beta_plus(f, &pp).unwrap(),
            );
            assert!(a < b && b < c, "B={f}: {a} {b} {c}");
        }
    }

    #[test]
    fn psi_minus_decreasing() {
        let pp = p(3, 3);
        let bm = beta_minus(&pp);
        let bf0 = beta_free(0.0, &pp).unwrap();
        let vals: Vec<f64> = (1..=20)
            .map(|i| bm + (bf0 - bm) * i as f64 / 20.0)
            .map(|b| psi_minus(b, &pp).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
    }

    #[test]
    fn ising_collapse() {
        let pp = p(2, 3);
        assert_eq!(b_plus(&pp, 1e-10), 0.0);
        assert!(beta_free(0.1, &pp).is_err());
        assert_abs_diff_eq!(beta_free(0.0, &pp).unwrap(), 3f64.ln(), epsilon = 1e-15);
    }
}
