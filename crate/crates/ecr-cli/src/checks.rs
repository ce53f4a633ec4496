//! The `oracle-check` battery: every analytic identity the verifier's
//! arithmetic leans on, evaluated fresh and reported as a machine-readable
//! pass/fail table.
//!
//! Each row records what was computed, what it had to equal, and how much
//! slack was allowed, so a failing run is diagnosable from the table
//! alone.

use ecr_core::channel::{GeneralProjective, Measurement, MeasurementModel};
use ecr_core::metric::{make_grid_prior, AntipodalMetric, EstimateDist, Phase, Prior, PriorSpec};
use ecr_core::oracles::{
    brute_force_min, emse_closed_uniform, emse_noisy_strategy, emse_numeric, fisher_info,
    no_measurement_emse, prop2_witness, EstimatorMap,
};
use ecr_core::prover::epi_bits;
use ecr_core::verifier::null_variance;
use serde::Serialize;

/// One line of the oracle-check table.
#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub pass: bool,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckRow {
    fn within(check: &str, observed: f64, expected: f64, tolerance: f64, detail: String) -> CheckRow {
        CheckRow {
            check: check.to_string(),
            pass: (observed - expected).abs() <= tolerance,
            observed,
            expected,
            tolerance,
            detail,
        }
    }

    fn failed(check: &str, detail: String) -> CheckRow {
        CheckRow {
            check: check.to_string(),
            pass: false,
            observed: f64::NAN,
            expected: f64::NAN,
            tolerance: 0.0,
            detail,
        }
    }
}

fn guard(check: &str, body: impl FnOnce() -> Result<CheckRow, String>) -> CheckRow {
    match body() {
        Ok(row) => row,
        Err(e) => CheckRow::failed(check, e),
    }
}

fn p(v: f64) -> Phase {
    Phase::wrap(v).expect("finite phase")
}

/// Run the whole battery. Order is stable; every row is independent.
pub fn run_all() -> Vec<CheckRow> {
    let m = AntipodalMetric::unit();
    let mut rows = Vec::new();

    // Any θ-independent estimate law scores exactly 1/2 on any
    // antipodally symmetric prior.
    let law = EstimateDist::Discrete(vec![(p(0.3), 0.25), (p(1.1), 0.35), (p(0.77), 0.4)]);
    let priors: [(&str, PriorSpec); 3] = [
        ("continuous", PriorSpec::ContinuousUniform),
        ("grid6", PriorSpec::Grid { n: 6, epsilon: 0.0 }),
        (
            "explicit",
            PriorSpec::Explicit {
                points: vec![(0.2, 0.3), (1.2, 0.3), (0.9, 0.2), (1.9, 0.2)],
            },
        ),
    ];
    for (tag, spec) in priors {
        let name = format!("blind-law-emse-{tag}");
        rows.push(guard(&name, || {
            let prior = spec.validate().map_err(|e| e.to_string())?;
            let emse = no_measurement_emse(&prior, &law, m).map_err(|e| e.to_string())?;
            Ok(CheckRow::within(
                &name,
                emse,
                0.5,
                1e-10,
                "θ-blind mixture law scores the blind baseline exactly".into(),
            ))
        }));
    }

    // Closed form vs quadrature for the ideal readout on a small lattice.
    rows.push(guard("closed-form-vs-quadrature", || {
        let mut worst = 0.0f64;
        for i in 0..6 {
            let phi = p(i as f64 / 3.0 + 0.07);
            let meas =
                Measurement::Detection(MeasurementModel::new(1.0, 0.0, phi).map_err(|e| e.to_string())?);
            for j in 0..4 {
                for l in 0..4 {
                    let map =
                        EstimatorMap::new(p(j as f64 / 2.0 + 0.11), p(l as f64 / 2.0 + 0.83), Phase::ZERO);
                    let closed = emse_closed_uniform(&map, phi);
                    let numeric = emse_numeric(&Prior::ContinuousUniform, &meas, &map, m)
                        .map_err(|e| e.to_string())?;
                    worst = worst.max((closed - numeric).abs());
                }
            }
        }
        Ok(CheckRow::within(
            "closed-form-vs-quadrature",
            worst,
            0.0,
            1e-9,
            "max |closed − numeric| over a 6×4×4 (φ, g0, g1) lattice".into(),
        ))
    }));

    // The noisy measure-and-map law 1/2 − a/4, background-independent.
    for (a, b) in [(0.52, 0.09), (0.01, 0.04)] {
        let name = format!("noisy-law-a{a}-b{b}");
        rows.push(guard(&name, || {
            let analytic = emse_noisy_strategy(a, b).map_err(|e| e.to_string())?;
            let meas = Measurement::Detection(
                MeasurementModel::new(a, b, Phase::ZERO).map_err(|e| e.to_string())?,
            );
            let map = EstimatorMap::new(Phase::ZERO, Phase::ONE, Phase::ZERO);
            let numeric = emse_numeric(
                &make_grid_prior(6, 0.0)
                    .map_err(|e| e.to_string())?
                    .validate()
                    .map_err(|e| e.to_string())?,
                &meas,
                &map,
                m,
            )
            .map_err(|e| e.to_string())?;
            Ok(CheckRow::within(
                &name,
                numeric,
                analytic,
                1e-9,
                format!("quadrature MSE vs 1/2 − a/4 = {analytic}"),
            ))
        }));
    }

    // Brute force over measurements and estimators finds the 1/4 floor.
    for (tag, spec) in [
        ("uniform", PriorSpec::ContinuousUniform),
        ("grid6", PriorSpec::Grid { n: 6, epsilon: 0.0 }),
    ] {
        let name = format!("brute-force-floor-{tag}");
        rows.push(guard(&name, || {
            let prior = spec.validate().map_err(|e| e.to_string())?;
            let result = brute_force_min(&prior, 1.0 / 360.0, 0.05, 1.0 / 360.0, m)
                .map_err(|e| e.to_string())?;
            Ok(CheckRow::within(
                &name,
                result.min_emse,
                0.25,
                1e-6,
                format!(
                    "argmin φ={}, Φ={}, g=({}, {})",
                    result.phi.value(),
                    result.contrast,
                    result.map.g0.value(),
                    result.map.g1.value()
                ),
            ))
        }));
    }

    // Fisher information: π² plateau at full contrast…
    rows.push(guard("fisher-plateau", || {
        let meas = Measurement::Projective(
            GeneralProjective::new(0.5, Phase::ZERO).map_err(|e| e.to_string())?,
        );
        let mut worst = 0.0f64;
        for k in 0..80 {
            let theta = p(k as f64 / 40.0 + 0.013);
            let fi = fisher_info(theta, &meas).map_err(|e| e.to_string())?;
            worst = worst.max((fi - std::f64::consts::PI.powi(2)).abs());
        }
        Ok(CheckRow::within(
            "fisher-plateau",
            worst,
            0.0,
            1e-9,
            "max |F(θ) − π²| over 80 regular phases at Φ = 1/2".into(),
        ))
    }));

    // …and strictly increasing in the contrast.
    rows.push(guard("fisher-monotone-in-contrast", || {
        let theta = p(0.23);
        let mut last = 0.0f64;
        let mut min_step = f64::INFINITY;
        for k in 1..=10 {
            let contrast = k as f64 * 0.05;
            let meas = Measurement::Projective(
                GeneralProjective::new(contrast, Phase::ZERO).map_err(|e| e.to_string())?,
            );
            let fi = fisher_info(theta, &meas).map_err(|e| e.to_string())?;
            min_step = min_step.min(fi - last);
            last = fi;
        }
        Ok(CheckRow {
            check: "fisher-monotone-in-contrast".into(),
            pass: min_step > 0.0,
            observed: min_step,
            expected: 0.0,
            tolerance: 0.0,
            detail: "smallest increment of F(θ=0.23) along Φ = 0.05..0.50".into(),
        })
    }));

    // The blind-baseline variance the z statistic divides by.
    rows.push(guard("null-variance-uniform", || {
        let nv = null_variance(&Prior::ContinuousUniform, m).map_err(|e| e.to_string())?;
        Ok(CheckRow::within(
            "null-variance-uniform",
            nv,
            0.125,
            1e-12,
            "continuous uniform prior".into(),
        ))
    }));
    rows.push(guard("null-variance-two-point", || {
        let prior = PriorSpec::Explicit {
            points: vec![(0.0, 0.5), (1.0, 0.5)],
        }
        .validate()
        .map_err(|e| e.to_string())?;
        let nv = null_variance(&prior, m).map_err(|e| e.to_string())?;
        Ok(CheckRow::within(
            "null-variance-two-point",
            nv,
            0.25,
            1e-12,
            "the antipodal pair maximizes the blind variance".into(),
        ))
    }));

    // Estimation-error witnesses: strictly below the antipodal bound for
    // an informative outcome, exactly at it for an uninformative one.
    rows.push(guard("witness-below-antipodal-bound", || {
        let w = prop2_witness(
            &|theta: Phase| {
                (std::f64::consts::PI * (theta.value() - 0.3) / 2.0)
                    .cos()
                    .powi(2)
            },
            &Prior::ContinuousUniform,
            m,
        )
        .map_err(|e| e.to_string())?;
        Ok(CheckRow {
            check: "witness-below-antipodal-bound".into(),
            pass: w.weighted_error <= w.outcome_mass / 2.0 + 1e-9,
            observed: w.weighted_error,
            expected: w.outcome_mass / 2.0,
            tolerance: 1e-9,
            detail: format!(
                "ideal zero-count likelihood: witness at {}, mass {}",
                w.witness.value(),
                w.outcome_mass
            ),
        })
    }));
    rows.push(guard("witness-bound-saturation", || {
        let w = prop2_witness(&|_| 1.0, &Prior::ContinuousUniform, m).map_err(|e| e.to_string())?;
        Ok(CheckRow::within(
            "witness-bound-saturation",
            w.weighted_error,
            w.outcome_mass / 2.0,
            1e-9,
            "a θ-independent outcome saturates the bound exactly".into(),
        ))
    }));

    // d(x,z)² + d(x̄,z)² = diameter², the identity behind Theorem 1.
    rows.push(guard("antipodal-pythagoras", || {
        let mut worst = 0.0f64;
        for i in 0..40 {
            for j in 0..40 {
                let x = p(i as f64 / 20.0 + 0.013);
                let z = p(j as f64 / 20.0 + 0.037);
                let sum = m.sq_distance(x, z) + m.sq_distance(x.antipode(), z);
                worst = worst.max((sum - 1.0).abs());
            }
        }
        Ok(CheckRow::within(
            "antipodal-pythagoras",
            worst,
            0.0,
            1e-12,
            "max |d(x,z)² + d(x̄,z)² − 1| over a 40×40 sample".into(),
        ))
    }));

    // Leading digits of the deterministic bit source: e^π − 23 begins
    // 0.00100100…₂ (0.140692…).
    rows.push(guard("epi-leading-bits", || {
        let bits = epi_bits(8).map_err(|e| e.to_string())?;
        let as_int = bits.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
        Ok(CheckRow::within(
            "epi-leading-bits",
            as_int as f64,
            36.0,
            0.0,
            "first 8 fraction bits of e^π as an integer (0b00100100)".into(),
        ))
    }));

    rows
}

/// Render rows as the machine-readable table: one JSON object per line.
pub fn render_table(rows: &[CheckRow]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).expect("check rows serialize"));
        out.push('\n');
    }
    out
}
