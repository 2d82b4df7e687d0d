//! Self-verification suite behind `qmimo verify`.

use std::fmt::Write;

use rand::Rng as _;

use qmimo::channels::{crosstalk_dilation, crosstalk_mixture};
use qmimo::cloning::{clone_1to_m, clone_fidelity_law};
use qmimo::experiments::{self, GridSpec};
use qmimo::mimo::{self, MAX_DENSITY_LAYERS};
use qmimo::tensor::{haar_state, ALGEBRAIC_TOL};
use qmimo::{ChannelParams, DensityMatrix, MimoConfig, Result, Rng};

pub struct SuiteOutcome {
    pub table: String,
    pub failures: usize,
}

struct Check {
    name: &'static str,
    run: fn(&Rng) -> Result<Option<String>>,
}

/// Returns `Some(detail)` on failure.
fn worst(label: &str, err: f64, tol: f64) -> Option<String> {
    (err.is_nan() || err > tol).then(|| format!("{label} error {err:e} > {tol:e}"))
}

fn random_params(rng: &mut Rng) -> Result<ChannelParams> {
    ChannelParams::new(rng.random(), rng.random(), rng.random())
}

fn closed_forms_2x2(rng: &Rng) -> Result<Option<String>> {
    let mut r = rng.clone();
    let mut err: f64 = 0.0;
    for _ in 0..25 {
        let p = random_params(&mut r)?;
        let psi = haar_state(2, &mut r)?;
        let mux = mimo::simulate_2x2_mux_averaged(&psi, &p)?;
        let mux_cf = mimo::analytic_mux_fidelity(&p, false);
        let div = mimo::simulate_2x2_div(&psi, &p)?.report;
        let div_cf = mimo::analytic_div_fidelity(&p);
        err = err
            .max((mux.f11 - mux_cf.f11).abs())
            .max((mux.f12.unwrap_or(f64::NAN) - mux_cf.f12.unwrap_or(f64::NAN)).abs())
            .max((div.f11 - div_cf.f11).abs());
    }
    Ok(worst("2x2 density vs closed form", err, 1e-10))
}

fn general_reductions(rng: &Rng) -> Result<Option<String>> {
    let mut r = rng.clone();
    let mut err: f64 = 0.0;
    for _ in 0..30 {
        let p = random_params(&mut r)?;
        let mux = mimo::analytic_general_fidelity(&MimoConfig::two_by_two(&p, 0)?).f11;
        let div = mimo::analytic_general_fidelity(&MimoConfig::two_by_two(&p, 1)?).f11;
        err = err
            .max((mux - mimo::analytic_mux_fidelity(&p, false).f11).abs())
            .max((div - mimo::analytic_div_fidelity(&p).f11).abs());
    }
    Ok(worst("reduction", err, 1e-14))
}

fn density_vs_analytic(rng: &Rng) -> Result<Option<String>> {
    let psi = haar_state(2, &mut rng.clone())?;
    let mut err: f64 = 0.0;
    for m in 1..=MAX_DENSITY_LAYERS {
        for x in 0..=m {
            let cfg = MimoConfig::geometric(m, x, 0.15, 0.1, 0.4, 1.2, false)?;
            let d = mimo::simulate_general_density(&cfg, &psi)?.f11;
            err = err.max((d - mimo::analytic_general_fidelity(&cfg).f11).abs());
        }
    }
    Ok(worst("density vs analytic", err, 1e-10))
}

fn trajectory_vs_analytic(rng: &Rng) -> Result<Option<String>> {
    let mut fails = Vec::new();
    for (m, x) in [(3, 1), (5, 2), (7, 3)] {
        let cfg = MimoConfig::geometric(m, x, 0.1, 0.1, 0.4, 1.2, false)?;
        let est = mimo::trajectory_estimate(&cfg, 100_000, &rng.child(m as u64))?;
        let exact = mimo::analytic_general_fidelity(&cfg).f11;
        let se = est.stderr.unwrap_or(0.0);
        if (est.f11 - exact).abs() > 3.0 * se {
            fails.push(format!("m={m} x={x}: {} vs {exact} (se {se:e})", est.f11));
        }
    }
    Ok((!fails.is_empty()).then(|| fails.join("; ")))
}

fn dmt_shape(_: &Rng) -> Result<Option<String>> {
    for m in 1..=7 {
        let curve = experiments::dmt_sweep(m, 0.1, 0.1, 0.4, 1.2)?;
        if curve.windows(2).any(|w| w[1].fidelity < w[0].fidelity) {
            return Ok(Some(format!("noisy curve for m={m} decreases")));
        }
        let noiseless = experiments::dmt_sweep(m, 0.0, 0.0, 0.0, 1.2)?;
        if noiseless.windows(2).any(|w| w[1].fidelity >= w[0].fidelity) {
            return Ok(Some(format!(
                "noiseless curve for m={m} is not strictly decreasing"
            )));
        }
        for p in &noiseless {
            let law = clone_fidelity_law(p.diversity_order);
            if (p.fidelity - law).abs() > 1e-12 {
                return Ok(Some(format!(
                    "noiseless m={m} x={} is {} not {law}",
                    p.x, p.fidelity
                )));
            }
        }
    }
    Ok(None)
}

fn cloning_law(rng: &Rng) -> Result<Option<String>> {
    let mut r = rng.clone();
    let mut err: f64 = 0.0;
    for copies in [1usize, 2, 3, 4] {
        let law = clone_fidelity_law(copies as u64);
        for _ in 0..5 {
            let batch = clone_1to_m(&haar_state(2, &mut r)?, copies)?;
            for k in 0..copies {
                err = err.max((batch.marginal_fidelity(k)? - law).abs());
            }
        }
    }
    Ok(worst("cloning marginal", err, 1e-10))
}

fn dilation(rng: &Rng) -> Result<Option<String>> {
    let mut r = rng.clone();
    let mut err: f64 = 0.0;
    for _ in 0..20 {
        let rho = haar_state(4, &mut r)?.projector();
        let mixed = rho.mix(0.5, &DensityMatrix::maximally_mixed(4))?;
        for eta in [0.0, 0.3, 0.5, 1.0] {
            for state in [&rho, &mixed] {
                let a = crosstalk_dilation(state, eta)?;
                let b = crosstalk_mixture(state, eta, 0..1, 1..2)?;
                err = err.max(a.max_abs_diff(&b));
            }
        }
    }
    Ok(worst("dilation vs mixture", err, ALGEBRAIC_TOL))
}

fn symmetry(rng: &Rng) -> Result<Option<String>> {
    let psi = haar_state(2, &mut rng.clone())?;
    let etas = [0.0, 0.25, 0.5, 0.75, 1.0];
    let div = |eta| {
        mimo::simulate_2x2_div(&psi, &ChannelParams::new(eta, 0.2, 0.3)?).map(|o| o.report.f11)
    };
    let general = |eta0| {
        let cfg = MimoConfig::new(2, 1, vec![eta0, 0.1], 0.2, 0.3, true)?;
        mimo::simulate_general_density(&cfg, &psi).map(|r| r.f11)
    };
    let (d0, g0) = (div(0.0)?, general(0.0)?);
    let mut err: f64 = 0.0;
    for eta in etas {
        err = err
            .max((div(eta)? - d0).abs())
            .max((general(eta)? - g0).abs());
    }
    Ok(worst("eta dependence", err, 1e-12))
}

fn region_small(_: &Rng) -> Result<Option<String>> {
    let s = experiments::region_scan(&GridSpec::standard(50))?;
    Ok((!(0.9..=1.0).contains(&s.fraction)).then(|| format!("fraction {} at 50^3", s.fraction)))
}

const CHECKS: &[Check] = &[
    Check {
        name: "2x2 closed forms",
        run: closed_forms_2x2,
    },
    Check {
        name: "general reductions",
        run: general_reductions,
    },
    Check {
        name: "density vs analytic (m<=3)",
        run: density_vs_analytic,
    },
    Check {
        name: "trajectory vs analytic",
        run: trajectory_vs_analytic,
    },
    Check {
        name: "dmt curve shape",
        run: dmt_shape,
    },
    Check {
        name: "cloning fidelity law",
        run: cloning_law,
    },
    Check {
        name: "crosstalk dilation",
        run: dilation,
    },
    Check {
        name: "diversity symmetry",
        run: symmetry,
    },
    Check {
        name: "region scan (50^3)",
        run: region_small,
    },
];

/// Runs every check; the table has one `check,result,detail` row each.
pub fn run_suite(seed: u64) -> SuiteOutcome {
    let root = Rng::new(seed, 1);
    let mut table = String::from("check,result,detail\n");
    let mut failures = 0;
    for (i, check) in CHECKS.iter().enumerate() {
        let outcome = (check.run)(&root.child(i as u64));
        let (result, detail) = match outcome {
            Ok(None) => ("pass", String::new()),
            Ok(Some(why)) => ("fail", why),
            Err(e) => ("fail", e.to_string()),
        };
        if result == "fail" {
            failures += 1;
        }
        let _ = writeln!(
            table,
            "{},{result},{}",
            check.name,
            detail.replace(',', ";")
        );
    }
    SuiteOutcome { table, failures }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let outcome = run_suite(42);
        assert_eq!(outcome.failures, 0, "{}", outcome.table);
        assert_eq!(outcome.table.lines().count(), CHECKS.len() + 1);
    }
}
