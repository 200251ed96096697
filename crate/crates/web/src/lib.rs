//! WebAssembly entry points for the browser demo in `www/`.
//!
//! Each export takes and returns JSON text. The `*_json` functions are the
//! same operations as plain Rust, so they can be tested natively.

use serde::{Deserialize, Serialize};
use serde_json::json;
use wasm_bindgen::prelude::*;

use qvhi::config::ScenarioConfig;
use qvhi::experiments::{preflight, run_experiment};
use qvhi::potentials::{jlambda_deriv, jlambda_value};
use qvhi::qvhi_solver::solve_qvhi;

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub lambda: f64,
    pub h: f64,
    pub yield_stress: f64,
    /// Horizontal body force as an expression in `x`, `y`.
    pub force: String,
    pub nx: usize,
    pub ny: usize,
    /// `r(v) = alpha + ρ∫‖v‖`; no constraint when absent.
    pub alpha: Option<f64>,
    pub rho: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            h: 0.5,
            yield_stress: 1.0,
            force: "20*y".into(),
            nx: 8,
            ny: 4,
            alpha: None,
            rho: 0.1,
        }
    }
}

impl ChannelParams {
    fn scenario(&self, experiment: serde_json::Value) -> Result<ScenarioConfig, String> {
        let mut cfg = json!({
            "name": "browser-channel",
            "mesh": { "kind": "rectangle", "lx": 2.0, "ly": 1.0, "nx": self.nx, "ny": self.ny, "slip_sides": ["bottom"] },
            "law": { "kind": "newtonian", "mu0": 1.0 },
            "slip": {
                "weight": { "kind": "constant", "h": self.h },
                "potential": { "kind": "j_lambda", "lambda": self.lambda }
            },
            "yield_stress": self.yield_stress,
            "body_force": [self.force, "0"],
            "experiment": experiment,
        });
        if let Some(alpha) = self.alpha {
            cfg["constraint"] = json!({
                "k": { "kind": "v_seminorm" },
                "r": { "kind": "affine_l1", "alpha": alpha, "rho": self.rho }
            });
        }
        ScenarioConfig::from_json(&cfg.to_string()).map_err(|e| e.to_string())
    }
}

fn params(text: &str) -> Result<ChannelParams, String> {
    if text.trim().is_empty() {
        return Ok(ChannelParams::default());
    }
    serde_json::from_str(text).map_err(|e| format!("bad parameters: {e}"))
}

#[derive(Serialize)]
struct Curve {
    r: Vec<f64>,
    j: Vec<f64>,
    dj: Vec<f64>,
}

/// Samples `j_λ` and its derivative on `[-r_max, r_max]`.
pub fn jlambda_curve_json(lambda: f64, r_max: f64, n: usize) -> Result<String, String> {
    if !(r_max > 0.0) || n < 2 {
        return Err("need r_max > 0 and at least two samples".into());
    }
    let mut c = Curve { r: Vec::with_capacity(n), j: Vec::with_capacity(n), dj: Vec::with_capacity(n) };
    for i in 0..n {
        let r = -r_max + 2.0 * r_max * i as f64 / (n - 1) as f64;
        c.j.push(jlambda_value(r, lambda).map_err(|e| e.to_string())?);
        c.dj.push(jlambda_deriv(r, lambda).map_err(|e| e.to_string())?);
        c.r.push(r);
    }
    serde_json::to_string(&c).map_err(|e| e.to_string())
}

/// Solves the slip channel and returns the nodal velocity with a summary.
pub fn solve_channel_json(params_json: &str) -> Result<String, String> {
    let p = params(params_json)?;
    let cfg = p.scenario(json!({ "kind": "solve" }))?;
    let err = |e: qvhi::Error| e.to_string();
    let mesh = cfg.build_mesh().map_err(err)?;
    let disc = cfg.build_discretization(&mesh).map_err(err)?;
    let problem = cfg.build_problem(disc.clone()).map_err(err)?;
    let table = preflight(&cfg, &problem, cfg.solver.seed).map_err(err)?;
    let report = solve_qvhi(&problem, &table.constants, &cfg.solver.options(false)).map_err(err)?;
    let velocity = disc.space.nodal_velocity(&report.u);
    Ok(json!({
        "iterations": report.iterations,
        "residuals": report.history.iter().map(|h| h.rho).collect::<Vec<_>>(),
        "norm_u": report.norm_u,
        "active": report.active,
        "box_ratio_u": report.box_ratio_u,
        "stokes_ratio": table.smallness.stokes_margin.ratio,
        "nodes": disc.space.nodes,
        "velocity": velocity,
        "triangles": mesh.triangles,
    })
    .to_string())
}

/// Yield-stress sweep `g·2⁻ⁿ`, `n = 0..levels`, against `g = 0`.
pub fn yield_sweep_json(params_json: &str, levels: u32) -> Result<String, String> {
    let p = params(params_json)?;
    let cfg = p.scenario(json!({ "kind": "yield_sweep", "levels": levels }))?;
    let out = run_experiment(&cfg, None, None).map_err(|e| e.to_string())?;
    let t = out.report.tables.deviations.ok_or("no deviation table")?;
    Ok(json!({
        "reference_norm": t.reference_norm,
        "g": t.rows.iter().map(|r| r.parameter).collect::<Vec<_>>(),
        "deviation": t.rows.iter().map(|r| r.deviation).collect::<Vec<_>>(),
        "non_increasing": t.non_increasing,
        "slope": t.loglog_slope,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn jlambda_curve(lambda: f64, r_max: f64, n: usize) -> Result<String, JsValue> {
    jlambda_curve_json(lambda, r_max, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn solve_channel(params_json: &str) -> Result<String, JsValue> {
    solve_channel_json(params_json).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn yield_sweep(params_json: &str, levels: u32) -> Result<String, JsValue> {
    yield_sweep_json(params_json, levels).map_err(|e| JsValue::from_str(&e))
}
