//! Bethe recursion and functional, the scalar fixed-point equation, critical
//! curves and region classification, and the RCM message functionals.

mod curves;
mod psi;
mod recursion;
mod region;

pub use curves::{
    b_plus, b_pm, beta_c, beta_c_zero_closed_form, beta_free, beta_minus, beta_plus, delta_phi,
    ks_threshold, psi_minus, rho_pm, rho_quadratic, CriticalCurves, CurvePoint,
};
pub use psi::{
    lambda_delta_gap, message_constants, perfect_matchings, psi_e, psi_e_sym, psi_sym, psi_vx,
    wh_phi,
};
pub use recursion::{
    bethe_functional, bp_fixed_point, bp_fixed_point_default, bp_step, fixed_point_rs,
    fixed_points, percolation_factor, scalar_f, scalar_f_prime, scalar_roots, Start,
    FIXED_POINT_MAX_ITER, FIXED_POINT_TOL,
};
pub use region::{
    agreement_sum, classify_region, internal_energy_prediction, message_b, region_csv_row, wh_bp,
    Phase, PhasePoint, Region, Tolerances, REGION_CSV_HEADER,
};
