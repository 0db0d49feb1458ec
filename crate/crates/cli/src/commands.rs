use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use skewlab::conjugacy::{residual_stats, solve_semiconjugacy};
use skewlab::equilibrium::{
    check_class_p, check_h1, estimate_set_b, lift_equilibrium, preimage_singleton_rate, ZScore,
};
use skewlab::pressure::pressure_table;
use skewlab::skew::{ProductPotential, ValidationOptions};
use skewlab::stability::{
    dynamics_stability_curve, openness_check, potential_stability_curve, strictly_decreasing, DynamicsParameter,
    LiftOptions, StabilityCurve, WeakStarMetric,
};
use skewlab::symbolic::{entropy_markov, gibbs_state, pressure_exact, BasePotential, ChainSampler, GibbsState};

use crate::config::{ExperimentConfig, Resolved};

/// Result of one subcommand: report body, overall verdict and CSV tables.
pub struct Outcome {
    pub result: Value,
    pub passed: bool,
    pub tables: Vec<(String, String)>,
}

impl Outcome {
    fn new(result: impl Serialize, passed: bool) -> Result<Self> {
        Ok(Self {
            result: serde_json::to_value(result)?,
            passed,
            tables: Vec::new(),
        })
    }
}

pub fn validate(cfg: &ExperimentConfig, r: &Resolved) -> Result<Outcome> {
    let report = r.system.validate(&ValidationOptions {
        seed: cfg.solver.seed,
        ..ValidationOptions::default()
    })?;
    let g0 = gibbs_state(r.system.base(), &BasePotential::zero(r.system.base()))?;
    let h1 = check_h1(r.system.fibers(), &g0);
    let checks = json!({
        "locally_constant": report.continuity_ok(),
        "homotopy": report.homotopy_ok(),
        "domination": report.domination_ok(),
        "invertibility": report.invertibility_ok(),
        "h1": h1.passed,
        "h2": report.h2_ok(),
    });
    let passed = report.passed() && h1.passed;
    Outcome::new(json!({ "checks": checks, "system": report, "h1": h1 }), passed)
}

fn describe_measure(g: &GibbsState<f64>) -> String {
    let round = |p: f64| (p * 1e12).round() / 1e12;
    let pi = g.stationary();
    let iid = g.block_order() <= 1
        && g
            .stochastic_matrix()
            .iter()
            .all(|row| row.iter().zip(pi).all(|(a, b)| (a - b).abs() < 1e-12));
    if iid {
        let ps: Vec<String> = (0..g.alphabet() as u8)
            .map(|a| round(g.symbol_marginal(a)).to_string())
            .collect();
        format!("Bernoulli({})", ps.join(","))
    } else {
        format!("Markov(block order {})", g.block_order())
    }
}

pub fn gibbs(_cfg: &ExperimentConfig, r: &Resolved) -> Result<Outcome> {
    let base = r.system.base();
    let g = gibbs_state(base, &r.potential.base_part)?;
    let exact = pressure_exact(base, &r.potential.base_part)?;
    let entropy = entropy_markov(&g);
    let defect = (exact - entropy - g.potential_mean()).abs();
    let marginals: Vec<f64> = (0..g.alphabet() as u8).map(|a| g.symbol_marginal(a)).collect();
    Outcome::new(
        json!({
            "pressure": exact + r.potential.fiber_constant,
            "base_pressure": exact,
            "measure": describe_measure(&g),
            "entropy": entropy,
            "potential_mean": g.potential_mean(),
            "variational_defect": defect,
            "symbol_marginals": marginals,
            "block_order": g.block_order(),
            "transition": g.stochastic_matrix(),
        }),
        defect <= 1e-10,
    )
}

pub fn pressure(cfg: &ExperimentConfig, r: &Resolved) -> Result<Outcome> {
    let est = pressure_table(&r.system, &r.potential, &cfg.solver.pressure)?;
    let target = pressure_exact(r.system.base(), &r.potential.base_part)?
        + r.potential.fiber_constant
        + r.system.fibers().automorphism().lambda_u().ln();
    let relative_error = (est.extrapolated - target).abs() / target.abs();
    let passed = relative_error <= cfg.solver.pressure_tolerance;
    let csv = est.to_csv();
    let mut out = Outcome::new(
        json!({
            "target": target,
            "estimate": est.extrapolated,
            "relative_error": relative_error,
            "tolerance": cfg.solver.pressure_tolerance,
            "slopes": est.slopes,
            "rows": est.rows,
        }),
        passed,
    )?;
    out.tables.push(("pressure.csv".into(), csv));
    Ok(out)
}

pub fn semiconj(cfg: &ExperimentConfig, r: &Resolved) -> Result<Outcome> {
    let s = &cfg.solver;
    let h = solve_semiconjugacy(&r.system, s.terms, s.grid)?;
    let g = gibbs_state(r.system.base(), &r.potential.base_part)?;
    let sampler = ChainSampler::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let points: Vec<_> = (0..s.residual_samples)
        .map(|_| r.system.sample_point(&sampler, &mut rng))
        .collect();
    let stats = residual_stats(&h, &points)?;
    let passed = stats.max_residual <= s.residual_tolerance;
    let mut result = serde_json::to_value(&stats)?;
    result["tolerance"] = json!(s.residual_tolerance);
    result["displacement_bound"] = json!(h.displacement_bound());
    Outcome::new(result, passed)
}

fn max_z(v: &[ZScore]) -> f64 {
    v.iter().map(ZScore::z).fold(0.0, f64::max)
}

pub fn equilibrium(cfg: &ExperimentConfig, r: &Resolved) -> Result<Outcome> {
    let s = &cfg.solver;
    let e = &s.equilibrium;
    let base = r.system.base();
    let class = check_class_p(&r.system, &r.potential)?;
    let g0 = gibbs_state(base, &BasePotential::zero(base))?;
    let h1 = check_h1(r.system.fibers(), &g0);
    let g = gibbs_state(base, &r.potential.base_part)?;
    let set_b = estimate_set_b(&r.system, &g, e.b_x_samples, e.b_grid, e.b_steps, s.seed)?;
    let h = solve_semiconjugacy(&r.system, s.terms, s.grid)?;
    let singleton = preimage_singleton_rate(&h, &g, e.preimage_samples, e.leaf_resolution, s.seed)?;
    let mut result = json!({
        "L_phi": class.value,
        "in_class_P": class.in_class,
        "H1_margin": h1.margin,
        "B_fraction": set_b.fraction,
        "set_b": set_b,
        "preimage_singleton_rate": singleton,
    });
    let mut passed = class.in_class && h1.passed && set_b.fraction >= 0.99 && singleton.rate >= 0.99;
    if class.in_class {
        let lifted = lift_equilibrium(&r.system, &h, &r.potential, e.lift_budget, s.seed)?;
        let metric = WeakStarMetric::new(base.fixed_symbol());
        let push = lifted.pushforward_check(&h, &metric, e.k_sigma)?;
        let inv = lifted.invariance_check(&r.system, &metric, e.k_sigma);
        passed &= push.iter().all(|z| z.passed) && inv.iter().all(|z| z.passed);
        result["pushforward_max_z"] = json!(max_z(&push));
        result["invariance_max_z"] = json!(max_z(&inv));
        result["pushforward"] = serde_json::to_value(&push)?;
        result["invariance"] = serde_json::to_value(&inv)?;
        result["lift_budget"] = json!(lifted.len());
    } else {
        result["pushforward_max_z"] = Value::Null;
    }
    Outcome::new(result, passed)
}

pub fn stability(cfg: &ExperimentConfig, r: &Resolved) -> Result<Outcome> {
    let s = &cfg.solver;
    let st = &s.stability;
    let lift = LiftOptions {
        terms: s.terms,
        grid: s.grid,
        budget: st.lift_budget,
        seed: s.seed,
    };
    let base = r.system.base();
    let eta = cfg.direction(r)?;
    let potential = potential_stability_curve(&r.system, &r.potential, &eta, &st.t_ladder, Some(&lift))
        .context("potential ladder")?;
    let mut constant = potential_stability_curve(
        &r.system,
        &r.potential,
        &ProductPotential::constant(base, 1.0),
        &st.t_ladder,
        None,
    )
    .context("constant-direction ladder")?;
    constant.parameter = "t_constant".into();
    for row in &mut constant.rows {
        row.parameter = "t_constant".into();
    }
    let beta = r.system.fibers().beta_max();
    let ladder: Vec<f64> = st.beta_factors.iter().map(|f| f * beta).collect();
    let dynamics = dynamics_stability_curve(&r.system, DynamicsParameter::BetaMax, &ladder, &r.potential, &lift)
        .context("beta_max ladder")?;
    let openness = openness_check(&r.system, st.openness_trials, 1, st.openness_samples, s.seed)?;

    let base_d = potential.base_distances();
    let ratio = base_d.last().copied().unwrap_or(f64::NAN) / base_d[0];
    let lift_d = dynamics.lift_distances();
    let last_sigma = dynamics.rows.last().and_then(|r| r.mc_sigma).unwrap_or(0.0);
    let checks = json!({
        "base_strictly_decreasing": strictly_decreasing(&base_d),
        "base_ratio": ratio,
        "base_ratio_ok": ratio <= 0.2,
        "constant_direction_zero": constant.base_distances().iter().all(|&d| d == 0.0),
        "l_continuity": strictly_decreasing(&potential.mostly_contracting_drift()),
        "dynamics_decreasing": strictly_decreasing(&lift_d),
        "dynamics_final_over_sigma": lift_d.last().copied().unwrap_or(f64::NAN) / last_sigma,
        "dynamics_final_ok": lift_d.last().is_some_and(|&d| d <= 5.0 * last_sigma),
        "openness_ok": openness.iter().all(|t| t.all_in_class),
    });
    let passed = ["base_strictly_decreasing", "base_ratio_ok", "constant_direction_zero", "l_continuity", "dynamics_decreasing", "dynamics_final_ok", "openness_ok"]
        .iter()
        .all(|k| checks[k] == json!(true));
    let csv = combined_csv(&[&potential, &constant, &dynamics]);
    let mut out = Outcome::new(
        json!({
            "checks": checks,
            "potential_curve": potential,
            "constant_curve": constant,
            "dynamics_curve": dynamics,
            "openness": openness,
            "dictionary_version": skewlab::stability::DICTIONARY_VERSION,
        }),
        passed,
    )?;
    out.tables.push(("stability.csv".into(), csv));
    Ok(out)
}

fn combined_csv(curves: &[&StabilityCurve]) -> String {
    let mut out = String::new();
    for (i, c) in curves.iter().enumerate() {
        let csv = c.to_csv();
        let body = if i == 0 { csv.as_str() } else { csv.split_once('\n').map_or("", |(_, b)| b) };
        out.push_str(body);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_description() {
        let g = GibbsState::<f64>::bernoulli(&[0.5, 0.5]).unwrap();
        assert_eq!(describe_measure(&g), "Bernoulli(0.5,0.5)");
    }
}
