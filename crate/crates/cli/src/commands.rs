//! The reproduction commands. Each returns a [`Table`]; writing it out is the
//! caller's job.

use homodyne_core::estimation::{analytic_precision, error_ratio, forward_currents};
use homodyne_core::montecarlo::{run_ensemble, ShotSampler};
use homodyne_core::{EnsembleSpec, Error as ModelError, Protocol};
use serde_json::{Map, Value};

use crate::config::{RunConfig, SigmaMode, SweepVariable};
use crate::error::{CliError, Result};
use crate::output::{Cell, Table};

/// `N / N_sat` rows of the linear-versus-saturating comparison table.
pub const TABLE1_RATIOS: [f64; 5] = [0.01, 0.1, 1.0, 2.0, 3.0];

/// The Monte Carlo column of `precision` is refused above this photon number.
pub const MAX_EMPIRICAL_PHOTONS: f64 = 1e8;

pub fn cmd_table1(config: &RunConfig) -> Result<Table> {
    let det = config.detector_model()?;
    let mut table = Table::new(
        "table1",
        vec![
            "n_over_nsat",
            "k_linear_over_kmax",
            "current_linear",
            "k_nonlinear_over_kmax",
            "current_nonlinear",
            "regime",
        ],
        config.to_value(),
    );
    for ratio in TABLE1_RATIOS {
        let n = ratio * det.n_sat();
        let linear = det.linear_current(n)?;
        let nonlinear = det.mean_current(n)?;
        let regime = serde_json::to_value(det.classify_regime(n)).expect("regime");
        table.push(vec![
            Cell::Fixed(ratio, 2),
            Cell::Fixed(linear / det.i_max(), 4),
            Cell::Fixed(linear, 4),
            Cell::Fixed(nonlinear / det.i_max(), 4),
            Cell::Fixed(nonlinear, 4),
            Cell::Text(regime.as_str().unwrap_or_default().to_string()),
        ]);
    }
    Ok(table)
}

pub fn cmd_fig2(config: &RunConfig) -> Result<Table> {
    if config.sweep.variable != SweepVariable::AlphaSq {
        return Err(CliError::config("fig2 sweeps sweep.variable = alpha_sq only"));
    }
    if config.optics.chi == 0.0 {
        return Err(CliError::config("fig2 needs optics.chi != 0 (the error ratio divides by chi)"));
    }
    let mut table = Table::new(
        "fig2",
        vec!["alpha_sq", "eta_linear", "eta_nonlinear", "oversaturated"],
        config.to_value(),
    );
    for n in config.sweep.values() {
        let setup = config.setup_with_signal(n)?;
        let linear = error_ratio(&setup, Protocol::Linear)?;
        let (nonlinear, oversaturated) = match error_ratio(&setup, Protocol::Nonlinear) {
            Ok(eta) => (Some(eta), false),
            Err(ModelError::Oversaturated { .. }) => (None, true),
            Err(e) => return Err(e.into()),
        };
        table.push(vec![
            Cell::Num(n),
            Cell::Num(linear),
            Cell::opt(nonlinear),
            Cell::Bool(oversaturated),
        ]);
    }
    Ok(table)
}

fn constant_sigma(config: &RunConfig) -> Result<f64> {
    if config.detector.sigma_mode != SigmaMode::Constant {
        return Err(CliError::config(
            "the closed-form precision needs detector.sigma_mode = constant",
        ));
    }
    let sigma = config.sigma();
    if sigma <= 0.0 {
        return Err(CliError::config("the closed-form precision needs detector.sigma > 0"));
    }
    Ok(sigma)
}

pub fn cmd_precision(config: &RunConfig) -> Result<Table> {
    let sigma = constant_sigma(config)?;
    let variable = config.sweep.variable;
    let empirical = config.mc.empirical;
    if empirical {
        let largest = match variable {
            SweepVariable::AlphaSq => config.sweep.max,
            SweepVariable::Shots => config.optics.alpha_sq,
        }
        .max(config.optics.beta_sq);
        if largest > MAX_EMPIRICAL_PHOTONS {
            return Err(CliError::config(format!(
                "refusing the Monte Carlo column at {largest:e} photons: empirical precision runs \
                 are limited to N <= {MAX_EMPIRICAL_PHOTONS:e}; lower the photon numbers or set \
                 mc.empirical=false"
            )));
        }
        if config.mc.blocks < 2 {
            return Err(CliError::config(
                "the empirical spread needs mc.blocks >= 2 independent ensembles",
            ));
        }
        if config.mc.shots < 2 {
            return Err(CliError::config("mc.shots must be >= 2"));
        }
    }

    let mut columns = vec![variable.column(), "delta_chi_analytic"];
    if empirical {
        columns.extend(["delta_chi_empirical", "clamp_fraction"]);
    }
    columns.push("oversaturated");
    let mut table = Table::new("precision", columns, config.to_value());

    for x in config.sweep.values() {
        let (alpha_sq, shots) = match variable {
            SweepVariable::AlphaSq => (x, config.mc.shots),
            SweepVariable::Shots => (config.optics.alpha_sq, x.round().max(1.0) as u64),
        };
        let setup = config.setup_with_signal(alpha_sq)?;
        let (analytic, oversaturated) = match analytic_precision(&setup, sigma, shots) {
            Ok(p) => (Some(p), false),
            Err(ModelError::Oversaturated { .. }) => (None, true),
            Err(e) => return Err(e.into()),
        };
        let mut row = vec![
            match variable {
                SweepVariable::AlphaSq => Cell::Num(x),
                SweepVariable::Shots => Cell::Int(shots),
            },
            Cell::opt(analytic),
        ];
        if empirical {
            let shots = shots.max(2);
            let spec = EnsembleSpec::blocked(shots, config.mc.blocks, config.mc.protocol, config.mc.seed);
            let stats = run_ensemble(&setup, &spec)?;
            row.push(Cell::opt(stats.estimator_std));
            row.push(Cell::Num(stats.clamp_fraction));
        }
        row.push(Cell::Bool(oversaturated));
        table.push(row);
    }
    Ok(table)
}

pub fn cmd_simulate(config: &RunConfig) -> Result<Table> {
    if config.mc.shots < 2 {
        return Err(CliError::config(format!(
            "mc.shots = {}: at least 2 shots per ensemble are needed, the variance is undefined otherwise",
            config.mc.shots
        )));
    }
    let setup = config.setup()?;
    if ShotSampler::new(&setup).uses_gaussian_approximation() && !config.mc.allow_gaussian_approx {
        let (n1, n2) = setup.mean_photons();
        return Err(CliError::config(format!(
            "mean photon numbers ({n1:e}, {n2:e}) exceed the exact-Poisson range; \
             set mc.allow_gaussian_approx=true to sample with the Gaussian approximation"
        )));
    }
    if config.mc.protocol == Protocol::Nonlinear {
        let record = forward_currents(&setup);
        setup.det1().invert_current(record.current1)?;
        setup.det2().invert_current(record.current2)?;
    }
    let spec = EnsembleSpec::blocked(config.mc.shots, config.mc.blocks, config.mc.protocol, config.mc.seed);
    let stats = run_ensemble(&setup, &spec)?;

    let mut table = Table::new(
        "simulate",
        vec![
            "shots",
            "blocks",
            "mean_current1",
            "mean_current2",
            "var_current1",
            "var_current2",
            "estimator_mean",
            "estimator_std",
            "clamp_fraction",
        ],
        config.to_value(),
    );
    table.push(vec![
        Cell::Int(stats.shots),
        Cell::Int(stats.blocks),
        Cell::Num(stats.mean_current1),
        Cell::Num(stats.mean_current2),
        Cell::Num(stats.var_current1),
        Cell::Num(stats.var_current2),
        Cell::opt(stats.estimator_mean),
        Cell::opt(stats.estimator_std),
        Cell::Num(stats.clamp_fraction),
    ]);
    let mut extra = Map::new();
    extra.insert(
        "stats".into(),
        serde_json::to_value(&stats).unwrap_or(Value::Null),
    );
    table.extra = extra;
    Ok(table)
}
