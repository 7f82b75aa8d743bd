use super::recursion::{bethe_functional, fixed_points};
use crate::error::{Error, Result};
use crate::params::Params;
use crate::scalar::Real;

fn check_len<T>(b: &[T], p: &Params<T>) -> Result<()> {
    if b.len() != p.d {
        return Err(Error::InvalidParams(format!(
            "{} messages for d = {}",
            b.len(),
            p.d
        )));
    }
    Ok(())
}

fn check_even<T>(p: &Params<T>) -> Result<()> {
    if !p.d.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("odd degree d = {}", p.d)));
    }
    Ok(())
}

/// (1-gamma)^{-d} [e^B prod(1 + (q-1) gamma b_i) + (q-1) prod(1 - gamma b_i)]
pub fn psi_vx<T: Real>(b: &[T], p: &Params<T>) -> Result<T> {
    check_len(b, p)?;
    let g = p.gamma();
    let qm1 = T::count(p.q - 1);
    let (mut plus, mut minus) = (T::one(), T::one());
    for &x in b {
        plus = plus * (T::one() + qm1 * g * x);
        minus = minus * (T::one() - g * x);
    }
    let scale = (T::one() - g).powi(p.d as i32);
    Ok((p.field.exp() * plus + qm1 * minus) / scale)
}

/// (1-gamma)^{-d/2} prod_i (1 + (q-1) gamma b_{2i-1} b_{2i})
pub fn psi_e<T: Real>(b: &[T], p: &Params<T>) -> Result<T> {
    check_len(b, p)?;
    check_even(p)?;
    Ok(pairing_product(b, &identity_pairing(p.d), p))
}

fn identity_pairing(d: usize) -> Vec<(usize, usize)> {
    (0..d / 2).map(|i| (2 * i, 2 * i + 1)).collect()
}

fn pairing_product<T: Real>(b: &[T], pairs: &[(usize, usize)], p: &Params<T>) -> T {
    let g = p.gamma();
    let qm1 = T::count(p.q - 1);
    let prod = pairs.iter().fold(T::one(), |acc, &(i, j)| {
        acc * (T::one() + qm1 * g * b[i] * b[j])
    });
    prod / (T::one() - g).powi(pairs.len() as i32)
}

/// All perfect matchings of 0..d.
pub fn perfect_matchings(d: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(
        rest: &mut Vec<usize>,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        let first = rest.remove(0);
        for k in 0..rest.len() {
            let other = rest.remove(k);
            cur.push((first, other));
            rec(rest, cur, out);
            cur.pop();
            rest.insert(k, other);
        }
        rest.insert(0, first);
    }
    let mut out = Vec::new();
    rec(&mut (0..d).collect(), &mut Vec::new(), &mut out);
    out
}

/// Average of psi_e over all orderings of b. Each perfect matching arises from
/// the same number of permutations, so averaging over matchings is equivalent.
pub fn psi_e_sym<T: Real>(b: &[T], p: &Params<T>) -> Result<T> {
    check_len(b, p)?;
    check_even(p)?;
    Ok(psi_e_sym_with(b, &perfect_matchings(p.d), p))
}

fn psi_e_sym_with<T: Real>(b: &[T], matchings: &[Vec<(usize, usize)>], p: &Params<T>) -> T {
    let total = matchings
        .iter()
        .fold(T::zero(), |acc, m| acc + pairing_product(b, m, p));
    total / T::count(matchings.len())
}

pub fn psi_sym<T: Real>(b: &[T], p: &Params<T>) -> Result<T> {
    Ok(psi_vx(b, p)? / psi_e_sym(b, p)?)
}

/// b_free, b_wired at the given parameters.
pub fn message_constants<T: Real>(p: &Params<T>) -> (T, T) {
    let (nf, n1) = fixed_points(p);
    (nf.b(), n1.b())
}

/// max{Phi(nu_free), Phi(nu_1)}
pub fn wh_phi<T: Real>(p: &Params<T>) -> T {
    let (nf, n1) = fixed_points(p);
    bethe_functional(&nf, p).max(bethe_functional(&n1, p))
}

/// Gap between max Phi and the supremum of log psi_sym over vectors in
/// [b_free, b_wired]^d with at least two coordinates in [b_free + delta, b_wired - delta].
/// Searched on a grid of `resolution + 1` points per coordinate that contains the
/// inner interval endpoints. Returns +inf when the constrained set is empty.
pub fn lambda_delta_gap<T: Real>(delta: T, p: &Params<T>, resolution: usize) -> Result<T> {
    check_even(p)?;
    if !(delta > T::zero()) {
        return Err(Error::InvalidParams("delta must be positive".into()));
    }
    let (bf, bw) = message_constants(p);
    let (lo, hi) = (bf + delta, bw - delta);
    if lo > hi {
        return Ok(T::infinity());
    }
    let step = (bw - bf) / T::count(resolution.max(1));
    if step > delta / T::lit(2.0) {
        return Err(Error::InvalidParams(format!(
            "grid step {step} too coarse for delta = {delta}"
        )));
    }
    let mut grid: Vec<T> = (0..=resolution).map(|i| bf + step * T::count(i)).collect();
    grid.push(lo);
    grid.push(hi);
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    grid.dedup();
    let count = binom(grid.len() + p.d - 1, p.d);
    if count > 50_000_000 {
        return Err(Error::CapExceeded {
            what: "Lambda_delta grid",
            needed: count,
            cap: 50_000_000,
        });
    }
    let inner: Vec<bool> = grid.iter().map(|&x| x >= lo && x <= hi).collect();
    let matchings = perfect_matchings(p.d);
    let mut best = T::neg_infinity();
    let mut idx = vec![0usize; p.d];
    let mut b = vec![T::zero(); p.d];
    // psi_sym is symmetric, so nondecreasing index tuples suffice.
    loop {
        if idx.iter().filter(|&&i| inner[i]).count() >= 2 {
            for (slot, &i) in b.iter_mut().zip(&idx) {
                *slot = grid[i];
            }
            let v = (psi_vx(&b, p)? / psi_e_sym_with(&b, &matchings, p)).ln();
            best = best.max(v);
        }
        let mut k = p.d;
        loop {
            if k == 0 {
                return Ok(wh_phi(p) - best);
            }
            k -= 1;
            if idx[k] + 1 < grid.len() {
                idx[k] += 1;
                let v = idx[k];
                idx[k..].iter_mut().for_each(|x| *x = v);
                break;
            }
        }
    }
}

fn binom(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe::curves::beta_c;
    use approx::assert_abs_diff_eq;

    fn p(q: usize, d: usize, beta: f64, b: f64) -> Params<f64> {
        Params::f64(q, d, beta, b).unwrap()
    }

    #[test]
    fn zero_coupling_collapse() {
        let pp = p(3, 4, 0.0, 0.4);
        let b = [0.2, 0.9, 0.0, 1.0];
        assert_abs_diff_eq!(
            psi_vx(&b, &pp).unwrap(),
            0.4f64.exp() + 2.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(psi_e(&b, &pp).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            psi_sym(&b, &pp).unwrap().ln(),
            (0.4f64.exp() + 2.0).ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn matchings_count() {
        assert_eq!(perfect_matchings(2).len(), 1);
        assert_eq!(perfect_matchings(4).len(), 3);
        assert_eq!(perfect_matchings(6).len(), 15);
        assert_eq!(perfect_matchings(10).len(), 945);
    }

    #[test]
    fn odd_degree_rejected() {
        let pp = p(3, 3, 1.0, 0.1);
        assert!(psi_e(&[0.1, 0.2, 0.3], &pp).is_err());
        assert!(psi_vx(&[0.1, 0.2, 0.3], &pp).is_ok());
    }

    #[test]
    fn symmetrized_edge_term_is_permutation_invariant() {
        let pp = p(3, 6, 1.1, 0.2);
        let b = [0.1, 0.7, 0.3, 0.9, 0.5, 0.2];
        let base = psi_e_sym(&b, &pp).unwrap();
        let mut perm = b;
        perm.reverse();
        perm.swap(0, 3);
        assert_abs_diff_eq!(psi_e_sym(&perm, &pp).unwrap(), base, epsilon = 1e-13);
    }

    #[test]
    fn symmetrized_edge_term_matches_permutation_average() {
        let pp = p(3, 4, 0.9, 0.1);
        let b = [0.1, 0.7, 0.3, 0.9];
        let mut total = 0.0;
        let mut count = 0;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let s = [i, j, k, l];
                        let mut seen = [false; 4];
                        s.iter().for_each(|&x| seen[x] = true);
                        if seen.iter().all(|&x| x) {
                            let bp = [b[i], b[j], b[k], b[l]];
                            total += psi_e(&bp, &pp).unwrap();
                            count += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(count, 24);
        assert_abs_diff_eq!(psi_e_sym(&b, &pp).unwrap(), total / 24.0, epsilon = 1e-14);
    }

    #[test]
    fn critical_line_identity() {
        let base = p(3, 4, 0.0, 0.0);
        // B_+ is about 0.0103 at (q, d) = (3, 4).
        assert!(beta_c(0.02, &base).is_err());
        let bc = beta_c(0.01, &base).unwrap();
        let pp = base.with_beta(bc).with_field(0.01);
        let (bf, bw) = message_constants(&pp);
        let lf = psi_sym(&[bf; 4], &pp).unwrap().ln();
        let lw = psi_sym(&[bw; 4], &pp).unwrap().ln();
        let target = wh_phi(&pp);
        assert!((lf - lw).abs() < 1e-6);
        assert!((lf - target).abs() < 1e-6);
        // b_wired - b_free < 2 delta here, so the constrained set is empty.
        assert_eq!(lambda_delta_gap(0.05, &pp, 40).unwrap(), f64::INFINITY);

        let pp = base
            .with_beta(beta_c(0.005, &base).unwrap())
            .with_field(0.005);
        let gap = lambda_delta_gap(0.05, &pp, 40).unwrap();
        assert!(gap > 0.0 && gap.is_finite(), "{gap}");
        let gap2 = lambda_delta_gap(0.08, &pp, 40).unwrap();
        assert!(gap2 >= gap);
        assert!(lambda_delta_gap(0.05, &pp, 3).is_err());
    }
}
