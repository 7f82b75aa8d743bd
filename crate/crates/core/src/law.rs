use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tree::{decode_pattern, encode_pattern, tree_size};
use std::fmt::Write as _;

/// Default cap on the number of table entries.
pub const LAW_TABLE_CAP: u128 = 1 << 24;

/// Number of patterns q^{|T_d(t)|}, checked against `cap`.
pub fn table_size(d: usize, t: usize, q: usize, cap: u128) -> Result<usize> {
    let verts = tree_size(d, t).ok_or(Error::CapExceeded {
        what: "pattern table",
        needed: u128::MAX,
        cap,
    })?;
    let mut size: u128 = 1;
    for _ in 0..verts {
        size = size.saturating_mul(q as u128);
        if size > cap {
            return Err(Error::CapExceeded {
                what: "pattern table",
                needed: (q as f64).powi(verts as i32).min(u128::MAX as f64) as u128,
                cap,
            });
        }
    }
    Ok(size as usize)
}

/// Probability table over spin patterns on T_d(t), indexed by [`encode_pattern`].
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborhoodLaw<T = f64> {
    pub d: usize,
    pub t: usize,
    pub q: usize,
    pub probs: Vec<T>,
}

impl<T: Real> NeighborhoodLaw<T> {
    pub fn new(d: usize, t: usize, q: usize, probs: Vec<T>) -> Result<Self> {
        let size = table_size(d, t, q, LAW_TABLE_CAP)?;
        if probs.len() != size {
            return Err(Error::InvalidParams(format!(
                "table has {} entries, expected {size}",
                probs.len()
            )));
        }
        let total = probs.iter().fold(T::zero(), |a, &p| a + p);
        let tol = T::lit(1e-12).max(T::epsilon() * T::count(size));
        if (total - T::one()).abs() > tol || probs.iter().any(|&p| p < T::zero()) {
            return Err(Error::InvalidParams(format!("table mass {total}")));
        }
        Ok(NeighborhoodLaw { d, t, q, probs })
    }

    /// Normalizes nonnegative weights into a law.
    pub fn from_weights(d: usize, t: usize, q: usize, mut w: Vec<T>) -> Result<Self> {
        let total = w.iter().fold(T::zero(), |a, &p| a + p);
        if !(total > T::zero()) {
            return Err(Error::InvalidParams("zero total weight".into()));
        }
        w.iter_mut().for_each(|p| *p = *p / total);
        Self::new(d, t, q, w)
    }

    pub fn ball_size(&self) -> usize {
        tree_size(self.d, self.t).expect("validated")
    }

    pub fn prob(&self, pattern: &[u8]) -> T {
        self.probs[encode_pattern(pattern, self.q) as usize]
    }

    pub fn total_variation(&self, other: &Self) -> T {
        assert_eq!((self.d, self.t, self.q), (other.d, other.t, other.q));
        let s = self
            .probs
            .iter()
            .zip(&other.probs)
            .fold(T::zero(), |a, (&x, &y)| a + (x - y).abs());
        s / T::lit(2.0)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.probs
            .iter()
            .zip(&other.probs)
            .fold(T::zero(), |a, (&x, &y)| a.max((x - y).abs()))
    }

    /// Law of the depth-`t` sub-ball; deeper vertices are the trailing digits.
    pub fn marginal(&self, t: usize) -> Result<Self> {
        assert!(t <= self.t);
        let inner = tree_size(self.d, t).expect("smaller ball");
        let block = (self.q as u128).pow((self.ball_size() - inner) as u32) as usize;
        let probs = self
            .probs
            .chunks(block)
            .map(|c| c.iter().fold(T::zero(), |a, &p| a + p))
            .collect();
        Self::new(self.d, t, self.q, probs)
    }

    /// Pushforward under a relabeling of colors.
    pub fn permute_colors(&self, perm: &[u8]) -> Self {
        let len = self.ball_size();
        let mut probs = vec![T::zero(); self.probs.len()];
        for (i, &p) in self.probs.iter().enumerate() {
            let mut pat = decode_pattern(i as u64, self.q, len);
            pat.iter_mut().for_each(|s| *s = perm[*s as usize]);
            probs[encode_pattern(&pat, self.q) as usize] = p;
        }
        NeighborhoodLaw { probs, ..*self }
    }

    /// Convex combination of laws on the same ball.
    pub fn mixture(parts: &[(T, &Self)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidParams("empty mixture".into()))?
            .1;
        let mut probs = vec![T::zero(); first.probs.len()];
        for (w, law) in parts {
            for (acc, &p) in probs.iter_mut().zip(&law.probs) {
                *acc = *acc + *w * p;
            }
        }
        Self::new(first.d, first.t, first.q, probs)
    }

    /// Law of the root spin.
    pub fn root_marginal(&self) -> Vec<T> {
        let block = self.probs.len() / self.q;
        self.probs
            .chunks(block)
            .map(|c| c.iter().fold(T::zero(), |a, &p| a + p))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("pattern_index,probability\n");
        for (i, p) in self.probs.iter().enumerate() {
            let _ = writeln!(s, "{i},{}", crate::fmt17(p.to_f64().unwrap_or(f64::NAN)));
        }
        s
    }
}

impl NeighborhoodLaw<f64> {
    pub fn from_csv(d: usize, t: usize, q: usize, text: &str) -> Result<Self> {
        let size = table_size(d, t, q, LAW_TABLE_CAP)?;
        let mut probs = vec![0.0; size];
        for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let (i, p) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad csv line {line:?}")))?;
            let i: usize = i.trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
            let p: f64 = p.trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
            *probs
                .get_mut(i)
                .ok_or_else(|| Error::Parse(format!("pattern {i} out of range")))? = p;
        }
        Self::new(d, t, q, probs)
    }
}
