//! Free-energy density by thermodynamic integration along piecewise paths.

use super::chain::{chain_rng, sweep_stream, Chain, ChainStart};
use super::estimate::{agreement_per_vertex, color_density, EstimatorReport};
use super::MIN_BATCHES;
use crate::bethe::{b_plus, classify_region, Region, Tolerances};
use crate::error::{Error, Result};
use crate::graph::GhostGraph;
use crate::params::Params;
use serde::{Deserialize, Serialize};

/// One straight segment of the integration path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    /// beta from `from` to `to` at field `field`; integrand (1/n) E[agreeing edges].
    Beta { field: f64, from: f64, to: f64 },
    /// B from `from` to `to` at coupling `beta`; integrand (1/n) E[color-1 vertices].
    Field { beta: f64, from: f64, to: f64 },
}

impl Leg {
    fn span(&self) -> (f64, f64) {
        match *self {
            Leg::Beta { from, to, .. } | Leg::Field { from, to, .. } => (from, to),
        }
    }

    fn params_at(&self, base: &Params<f64>, x: f64) -> Params<f64> {
        match *self {
            Leg::Beta { field, .. } => base.with_beta(x).with_field(field),
            Leg::Field { beta, .. } => base.with_beta(beta).with_field(x),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiConfig {
    /// Grid points per leg, odd so the half grid is a sub-grid.
    pub grid_points: usize,
    /// Sweeps before the first grid point.
    pub initial_burn_in: usize,
    /// Sweeps after each parameter step.
    pub step_burn_in: usize,
    pub samples: usize,
    pub thin: usize,
}

impl Default for TiConfig {
    fn default() -> Self {
        TiConfig {
            grid_points: 41,
            initial_burn_in: 200,
            step_burn_in: 50,
            samples: 100,
            thin: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FreeEnergyEstimate {
    pub phi: f64,
    pub mc_se: f64,
    /// |T_h - T_2h| / 3 summed over legs.
    pub quadrature_error: f64,
    pub path: Vec<Leg>,
    /// (x, integrand mean, se) per leg.
    pub integrands: Vec<Vec<(f64, f64, f64)>>,
}

impl FreeEnergyEstimate {
    pub fn error(&self) -> f64 {
        self.mc_se.hypot(self.quadrature_error)
    }
}

/// log(e^B + q - 1), the density at beta = 0.
pub fn phi_at_zero_coupling(q: usize, field: f64) -> f64 {
    (field.exp() + (q - 1) as f64).ln()
}

/// beta = 0 to the target at fixed B when the straight path stays off the
/// coexistence and wired-dominant parts of the non-uniqueness region.
/// Otherwise beta rises at a field above every non-unique point, then B
/// descends to the target.
pub fn default_path(p: &Params<f64>) -> Vec<Leg> {
    let region = classify_region(p, &Tolerances::default()).region;
    if p.beta == 0.0 || matches!(region, Region::Unique | Region::RFree) && !crosses(p) {
        return vec![Leg::Beta {
            field: p.field,
            from: 0.0,
            to: p.beta,
        }];
    }
    let high = (2.0 * b_plus(p, 1e-12)).max(0.1).max(p.field);
    let mut legs = vec![Leg::Beta {
        field: high,
        from: 0.0,
        to: p.beta,
    }];
    if high > p.field {
        legs.push(Leg::Field {
            beta: p.beta,
            from: high,
            to: p.field,
        });
    }
    legs
}

/// True when some beta below the target is wired-dominant at the same B.
fn crosses(p: &Params<f64>) -> bool {
    (1..64).any(|k| {
        let q = p.with_beta(p.beta * k as f64 / 64.0);
        matches!(
            classify_region(&q, &Tolerances::default()).region,
            Region::R1 | Region::RC
        )
    })
}

/// Trapezoid integral along each leg on an evenly spaced grid, one chain
/// annealed through all grid points in path order.
pub fn free_energy_path(
    gg: &GhostGraph,
    p: &Params<f64>,
    path: &[Leg],
    cfg: &TiConfig,
    seed: u64,
) -> Result<FreeEnergyEstimate> {
    if cfg.grid_points < 3 || cfg.grid_points.is_multiple_of(2) {
        return Err(Error::InvalidParams(
            "grid_points must be odd and at least 3".into(),
        ));
    }
    if cfg.samples < MIN_BATCHES || cfg.thin == 0 {
        return Err(Error::InvalidParams(
            "too few samples per grid point".into(),
        ));
    }
    let first = path
        .first()
        .ok_or_else(|| Error::InvalidParams("empty path".into()))?;
    let start_field = match *first {
        Leg::Beta {
            field, from: 0.0, ..
        } => field,
        _ => return Err(Error::InvalidParams("path must start at beta = 0".into())),
    };
    let mut phi = phi_at_zero_coupling(p.q, start_field);
    let (mut var, mut quad) = (0.0, 0.0);
    let mut chain = Chain::new(
        gg,
        &first.params_at(p, 0.0),
        ChainStart::Disordered,
        chain_rng(seed, sweep_stream(0)),
    )?;
    chain.sweeps(cfg.initial_burn_in);
    let mut integrands = Vec::new();
    for leg in path {
        let (a, b) = leg.span();
        let k = cfg.grid_points;
        let h = (b - a) / (k - 1) as f64;
        let mut points = Vec::with_capacity(k);
        for i in 0..k {
            let x = a + h * i as f64;
            chain.set_params(&leg.params_at(p, x))?;
            chain.sweeps(cfg.step_burn_in);
            let mut series = Vec::with_capacity(cfg.samples);
            for _ in 0..cfg.samples {
                chain.sweeps(cfg.thin);
                let colors = chain.state().colors();
                series.push(match leg {
                    Leg::Beta { .. } => agreement_per_vertex(colors, gg.base()),
                    Leg::Field { .. } => color_density(colors, 0),
                });
            }
            let r = EstimatorReport::from_series(&series, MIN_BATCHES)?;
            points.push((x, r.mean, r.se));
        }
        let weight = |i: usize, n: usize, step: f64| {
            if i == 0 || i == n - 1 {
                0.5 * step
            } else {
                step
            }
        };
        let fine: f64 = (0..k).map(|i| weight(i, k, h) * points[i].1).sum();
        let coarse: f64 = (0..k)
            .step_by(2)
            .enumerate()
            .map(|(j, i)| weight(j, k.div_ceil(2), 2.0 * h) * points[i].1)
            .sum();
        phi += fine;
        quad += (fine - coarse).abs() / 3.0;
        var += (0..k)
            .map(|i| (weight(i, k, h) * points[i].2).powi(2))
            .sum::<f64>();
        integrands.push(points);
    }
    Ok(FreeEnergyEstimate {
        phi,
        mc_se: var.sqrt(),
        quadrature_error: quad,
        path: path.to_vec(),
        integrands,
    })
}

/// [`free_energy_path`] along [`default_path`].
pub fn free_energy_ti(
    gg: &GhostGraph,
    p: &Params<f64>,
    cfg: &TiConfig,
    seed: u64,
) -> Result<FreeEnergyEstimate> {
    free_energy_path(gg, p, &default_path(p), cfg, seed)
}
