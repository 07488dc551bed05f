//! Certainty-equivalent gap between `ν̂` and `ν′` as `θ` shrinks.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::mc::{mc_compare, McConfig};
use crate::error::{HedgeError, Result};
use crate::expansion::{DeltaSubstitution, ExpansionCoefficients, ExpansionScale, NuHat};
use crate::market::{Exposure, ModelParams, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub ce_nu_hat: f64,
    pub ce_nu_prime: f64,
    /// `CE(ν̂) − CE(ν′)` on common random numbers.
    pub gap: f64,
    pub gap_std_error: f64,
    pub gap_over_theta2: f64,
    /// `|gap|` within three standard errors of zero.
    pub noise_bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// `|gap_i| / |gap_{i+1}|` for consecutive rows.
    pub decay_ratios: Vec<f64>,
    /// Whether `|gap|` is non-increasing down the table.
    pub monotone: bool,
}

/// Runs both strategies under `(θc, θγ)` for each `θ`.
///
/// `thetas` must be non-negative and strictly decreasing. At `θ = 0` both
/// strategies reduce to `ν0` and the gap is exactly zero.
pub fn theta_sweep(
    params: &ModelParams,
    exposure: &Exposure,
    thetas: &[f64],
    initial: &State,
    cfg: &McConfig,
) -> Result<SweepReport> {
    params.validate()?;
    if thetas.is_empty()
        || thetas
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Less))
    {
        return Err(HedgeError::InvalidParameter {
            name: "thetas",
            reason: "must be a non-empty strictly decreasing list".into(),
        });
    }
    let coeffs = Arc::new(ExpansionCoefficients::new(params, exposure)?);
    let mut rows = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let scale = ExpansionScale::new(theta)?;
        let scaled = params.scaled(theta);
        let nu_hat = NuHat::new(coeffs.clone(), scale);
        let cmp = if theta == 0.0 {
            mc_compare(&scaled, exposure, &nu_hat, &nu_hat, initial, cfg)?
        } else {
            let nu_prime = DeltaSubstitution::from_coefficients(&coeffs, scale)?;
            mc_compare(&scaled, exposure, &nu_hat, &nu_prime, initial, cfg)?
        };
        rows.push(SweepRow {
            theta,
            ce_nu_hat: cmp.first.certainty_equivalent,
            ce_nu_prime: cmp.second.certainty_equivalent,
            gap: cmp.gap,
            gap_std_error: cmp.gap_std_error,
            gap_over_theta2: if theta > 0.0 {
                cmp.gap / (theta * theta)
            } else {
                0.0
            },
            noise_bounded: cmp.gap.abs() <= 3.0 * cmp.gap_std_error,
        });
    }
    let decay_ratios = rows
        .windows(2)
        .map(|w| w[0].gap.abs() / w[1].gap.abs())
        .collect();
    let monotone = rows.windows(2).all(|w| w[1].gap.abs() <= w[0].gap.abs());
    Ok(SweepReport {
        rows,
        decay_ratios,
        monotone,
    })
}
