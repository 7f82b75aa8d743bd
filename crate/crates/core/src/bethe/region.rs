use super::recursion::{bethe_functional, fixed_points};
use crate::params::{Params, SymmetricMeasure};
use crate::scalar::Real;
use serde::Serialize;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    Unique,
    RFree,
    RC,
    R1,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Unique => "UNIQUE",
            Region::RFree => "R_FREE",
            Region::RC => "R_C",
            Region::R1 => "R_1",
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerances<T> {
    /// Sup-norm distance below which nu_free and nu_1 are identified.
    pub fixed_point: T,
    /// |Phi(nu_1) - Phi(nu_free)| at or below which a point is critical.
    pub critical: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances {
            fixed_point: T::lit(1e-12),
            critical: T::lit(1e-9),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PhasePoint<T = f64> {
    pub params: Params<T>,
    pub region: Region,
    pub nu_free: SymmetricMeasure<T>,
    pub nu_1: SymmetricMeasure<T>,
    pub phi_free: T,
    pub phi_1: T,
}

impl<T: Real> PhasePoint<T> {
    /// max{Phi(nu_free), Phi(nu_1)}
    pub fn phi_max(&self) -> T {
        self.phi_free.max(self.phi_1)
    }

    /// Measure of the dominant phase (nu_free on ties).
    pub fn dominant(&self) -> SymmetricMeasure<T> {
        if self.region == Region::R1 {
            self.nu_1
        } else {
            self.nu_free
        }
    }
}

pub fn classify_region<T: Real>(p: &Params<T>, tol: &Tolerances<T>) -> PhasePoint<T> {
    let (nu_free, nu_1) = fixed_points(p);
    let phi_free = bethe_functional(&nu_free, p);
    let phi_1 = bethe_functional(&nu_1, p);
    let region = if nu_free.sup_dist(&nu_1) <= tol.fixed_point {
        Region::Unique
    } else if (phi_1 - phi_free).abs() <= tol.critical {
        Region::RC
    } else if phi_1 > phi_free {
        Region::R1
    } else {
        Region::RFree
    };
    PhasePoint {
        params: *p,
        region,
        nu_free,
        nu_1,
        phi_free,
        phi_1,
    }
}

/// Region scan row: "beta,B,region,phi_free,phi_1,a_free,a_1".
pub fn region_csv_row(pt: &PhasePoint<f64>) -> String {
    use crate::fmt17;
    format!(
        "{},{},{},{},{},{},{}",
        fmt17(pt.params.beta),
        fmt17(pt.params.field),
        pt.region,
        fmt17(pt.phi_free),
        fmt17(pt.phi_1),
        fmt17(pt.nu_free.a),
        fmt17(pt.nu_1.a)
    )
}

pub const REGION_CSV_HEADER: &str = "beta,B,region,phi_free,phi_1,a_free,a_1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Free,
    Wired,
}

/// Sum over the root's neighbors of mu(sigma_o = sigma_i) for the fixed point nu_phase.
pub fn internal_energy_prediction<T: Real>(phase: Phase, p: &Params<T>) -> T {
    let (nf, n1) = fixed_points(p);
    let nu = match phase {
        Phase::Free => nf,
        Phase::Wired => n1,
    };
    agreement_sum(&nu, p)
}

/// d e^beta S / (e^beta S + 2(q-1)ac + (q-1)(q-2)c^2), S = a^2 + (q-1)c^2, divided through by e^beta.
pub fn agreement_sum<T: Real>(nu: &SymmetricMeasure<T>, p: &Params<T>) -> T {
    let (a, c) = (nu.a, nu.c());
    let qm1 = T::count(p.q - 1);
    let qm2 = T::count(p.q - 2);
    let s = a * a + qm1 * c * c;
    let off = T::lit(2.0) * qm1 * a * c + qm1 * qm2 * c * c;
    T::count(p.d) * s / (s + (-p.beta).exp() * off)
}

/// b(nu) = (q nu(1) - 1)/(q - 1)
pub fn message_b<T: Real>(nu: &SymmetricMeasure<T>) -> T {
    nu.b()
}

/// RCM message map at field x for incoming messages s_1..s_{d-1}.
pub fn wh_bp<T: Real>(messages: &[T], x: T, p: &Params<T>) -> T {
    let g = p.gamma();
    let qm1 = T::count(p.q - 1);
    let (mut plus, mut minus) = (T::one(), T::one());
    for &s in messages {
        plus = plus * (T::one() + qm1 * g * s);
        minus = minus * (T::one() - g * s);
    }
    let ex = x.exp();
    (ex * plus - minus) / (ex * plus + qm1 * minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe::curves::{beta_c_zero_closed_form, beta_free};
    use approx::assert_abs_diff_eq;

    fn p(q: usize, d: usize, beta: f64, b: f64) -> Params<f64> {
        Params::f64(q, d, beta, b).unwrap()
    }

    #[test]
    fn classification_examples() {
        let tol = Tolerances::default();
        for b in [0.0, 0.4, 3.0] {
            assert_eq!(
                classify_region(&p(3, 3, 0.0, b), &tol).region,
                Region::Unique
            );
        }
        let pp = p(3, 3, 0.0, 0.0);
        let bf0 = beta_free(0.0, &pp).unwrap();
        let bc0 = beta_c_zero_closed_form(3, 3);
        let mid = 0.5 * (bf0 + bc0);
        assert_eq!(
            classify_region(&pp.with_beta(mid), &tol).region,
            Region::RFree
        );
        assert_eq!(classify_region(&pp.with_beta(2.0), &tol).region, Region::R1);
        assert_eq!(
            classify_region(&pp.with_beta(1.0), &tol).region,
            Region::Unique
        );
        let crit = classify_region(&pp.with_beta(bc0), &tol);
        assert_eq!(crit.region, Region::RC);
        assert!(crit.nu_free.a < crit.nu_1.a);
    }

    #[test]
    fn phi_ordering_follows_region() {
        let tol = Tolerances::default();
        let pt = classify_region(&p(3, 3, 1.4, 0.0), &tol);
        assert_eq!(pt.region, Region::R1);
        assert!(pt.phi_1 > pt.phi_free);
        assert_eq!(pt.phi_max(), pt.phi_1);
    }

    #[test]
    fn energy_trivial() {
        for b in [0.0, 0.5] {
            let pp = p(3, 4, 0.0, b);
            let want = if b == 0.0 { 4.0 / 3.0 } else { f64::NAN };
            let got = internal_energy_prediction(Phase::Free, &pp);
            if b == 0.0 {
                assert_abs_diff_eq!(got, want, epsilon = 1e-15);
            } else {
                let e = b.exp();
                let a = e / (e + 2.0);
                let c = 1.0 / (e + 2.0);
                assert_abs_diff_eq!(got, 4.0 * (a * a + 2.0 * c * c), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn energy_is_twice_phi_derivative() {
        let pp = p(3, 3, 1.0, 0.1);
        for phase in [Phase::Free, Phase::Wired] {
            let h = 1e-5;
            let phi = |b: f64| {
                let q = pp.with_beta(b);
                let (nf, n1) = fixed_points(&q);
                let nu = if phase == Phase::Free { nf } else { n1 };
                crate::bethe::bethe_functional(&nu, &q)
            };
            let fd = (phi(pp.beta + h) - phi(pp.beta - h)) / (2.0 * h);
            assert_abs_diff_eq!(
                internal_energy_prediction(phase, &pp),
                2.0 * fd,
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn message_map_fixed_points() {
        let pp = p(3, 3, 1.5, 0.05);
        let (nf, n1) = fixed_points(&pp);
        for nu in [nf, n1] {
            let b = message_b(&nu);
            assert_abs_diff_eq!(wh_bp(&[b, b], pp.field, &pp), b, epsilon = 1e-10);
        }
        let p0 = p(3, 3, 1.5, 0.0);
        assert_eq!(wh_bp(&[0.0, 0.0], 0.0, &p0), 0.0);
        assert_eq!(message_b(&SymmetricMeasure::<f64>::dirac(3)), 1.0);
    }
}
