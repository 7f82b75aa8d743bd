//! Exact law of the permutation-based color assignment: M items, multinomial
//! color counts, a uniform split into sets B_k of the minimal size and
//! remainders, and a uniform permutation gamma coloring the remainders.

use super::enumerate::{check_cap, pow_sat};
use crate::error::Result;
use crate::scalar::Exact;
use crate::tree::encode_pattern;

fn factorial<T: Exact>(n: usize) -> T {
    (1..=n as u64).fold(T::one(), |acc, k| acc * T::from_count(k))
}

fn permutations(q: usize) -> Vec<Vec<usize>> {
    if q == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(q - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, q - 1);
            out.push(p);
        }
    }
    out
}

/// Law of (Y_1, ..., Y_M), indexed by the base-q word of 0-based colors.
/// Labels 0..q are the sets B_k, labels q..2q the remainders.
pub fn sim_unif_law<T: Exact>(m: usize, q: usize) -> Result<Vec<T>> {
    let label_space = pow_sat(2 * q, m);
    check_cap(
        "sim-unif enumeration",
        label_space.saturating_mul((1..=q as u128).product()),
    )?;
    let perms = permutations(q);
    let mut law = vec![T::zero(); pow_sat(q, m) as usize];
    let qm = T::from_count(pow_sat(q, m) as u64);
    let mut labels = vec![0usize; m];
    let mut y = vec![0u8; m];
    for code in 0..label_space as u64 {
        let mut c = code;
        for slot in labels.iter_mut() {
            *slot = (c % (2 * q) as u64) as usize;
            c /= (2 * q) as u64;
        }
        let mut core = vec![0usize; q];
        let mut extra = vec![0usize; q];
        for &l in &labels {
            if l < q {
                core[l] += 1;
            } else {
                extra[l - q] += 1;
            }
        }
        // Valid splits: equal cores of size min_k M_k, so some remainder is empty.
        let star = core[0];
        if core.iter().any(|&x| x != star) || extra.iter().all(|&x| x > 0) {
            continue;
        }
        let counts: Vec<usize> = (0..q).map(|k| core[k] + extra[k]).collect();
        // P(multinomial = counts) / #label sequences with these sizes.
        let multinomial = counts
            .iter()
            .fold(factorial::<T>(m), |acc, &x| acc / factorial::<T>(x))
            / qm.clone();
        let sequences = (0..q).fold(factorial::<T>(m), |acc, k| {
            acc / (factorial::<T>(core[k]) * factorial::<T>(extra[k]))
        });
        let weight = multinomial / sequences / T::from_count(perms.len() as u64);
        for gamma in &perms {
            // i in B_k or in the remainder of gamma(k) gets color k.
            for (slot, &l) in y.iter_mut().zip(&labels) {
                *slot = if l < q {
                    l as u8
                } else {
                    gamma.iter().position(|&g| g == l - q).unwrap() as u8
                };
            }
            let idx = encode_pattern(&y, q) as usize;
            law[idx] = law[idx].clone() + weight.clone();
        }
    }
    Ok(law)
}

/// max_y |P(Y = y) - q^{-M}|, computed in exact rationals.
pub fn sim_unif_check(m: usize, q: usize) -> Result<f64> {
    let law = sim_unif_law::<crate::Rational>(m, q)?;
    let target = crate::Rational::new(1, pow_sat(q, m) as i128);
    Ok(law
        .iter()
        .map(|x| {
            let diff = x - target;
            num_traits::Signed::abs(&diff)
        })
        .max()
        .map_or(0.0, |x| Exact::approx(&x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn single_item_is_uniform() {
        let law = sim_unif_law::<Rational>(1, 3).unwrap();
        assert_eq!(law, vec![Rational::new(1, 3); 3]);
    }

    #[test]
    fn empty_outcome() {
        let law = sim_unif_law::<Rational>(0, 2).unwrap();
        assert_eq!(law, vec![Rational::from_integer(1)]);
    }

    #[test]
    fn exact_uniformity() {
        let law = sim_unif_law::<Rational>(3, 2).unwrap();
        assert_eq!(law, vec![Rational::new(1, 8); 8]);
        assert!(sim_unif_check(3, 2).unwrap() < 1e-14);
        for (m, q) in [(4, 3), (5, 2), (6, 3)] {
            assert_eq!(sim_unif_check(m, q).unwrap(), 0.0, "M = {m}, q = {q}");
        }
        let float = sim_unif_law::<f64>(4, 2).unwrap();
        assert!(float.iter().all(|&x| (x - 1.0 / 16.0).abs() < 1e-15));
    }
}
