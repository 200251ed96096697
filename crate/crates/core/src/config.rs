//! JSON scenario files.
//!
//! ```json
//! {
//!   "name": "channel",
//!   "mesh": { "kind": "rectangle", "lx": 2.0, "ly": 1.0, "nx": 16, "ny": 8, "slip_sides": ["bottom"] },
//!   "law": { "kind": "newtonian", "mu0": 1.0 },
//!   "slip": { "weight": { "kind": "constant", "h": 0.5 }, "potential": { "kind": "j_lambda", "lambda": 0.5 } },
//!   "yield_stress": 1.0,
//!   "body_force": ["20*y", "0"],
//!   "constraint": { "k": { "kind": "v_seminorm" }, "r": { "kind": "affine_l1", "alpha": 1.0, "rho": "1" } },
//!   "solver": { "inner_tol": 1e-8, "max_outer": 200 },
//!   "experiment": { "kind": "solve" }
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constitutive::ConstitutiveLaw;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fem::{ConstraintFunctionals, DiscreteProblem, Discretization, KKind, RKind, VelocitySpace};
use crate::mesh::{Mesh, Side};
use crate::potentials::{PiecewiseRadial, RadialBranch, SlipModel, SlipPotential, WeightFunction};
use crate::qvhi_solver::QVHIOptions;
use crate::vi_solver::VIOptions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    Rectangle {
        lx: f64,
        ly: f64,
        nx: usize,
        ny: usize,
        #[serde(default)]
        slip_sides: Vec<Side>,
    },
    /// ASCII mesh file; relative paths are resolved against the config file.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSpec {
    Newtonian { mu0: f64 },
    Carreau { mu_inf: f64, mu_ref: f64, kappa: f64, q: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant { h: f64 },
    Rational { low: f64, high: f64, scale: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    JLambda { lambda: f64 },
    NormConvex,
    /// `j(ξ) = k‖ξ‖²/2`
    Quadratic { stiffness: f64 },
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSpec {
    pub b0: f64,
    pub b1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlipSpec {
    pub weight: WeightSpec,
    pub potential: PotentialSpec,
    /// Overrides the growth constants declared by the potential.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthSpec>,
    /// Declared relaxed-monotonicity constant; estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_j: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KSpec {
    VSeminorm,
    DissipationSq { nu0: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RSpec {
    Constant { value: f64 },
    AffineL1 { alpha: f64, rho: Expr },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub k: KSpec,
    pub r: RSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub inner_tol: f64,
    pub max_inner: usize,
    pub eps0: f64,
    pub eps_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outer_tol: Option<f64>,
    pub max_outer: usize,
    pub damping: f64,
    pub quad_degree: usize,
    pub seed: u64,
    pub certificate_probes: usize,
    /// Samples for the sampled hypothesis checks.
    pub check_samples: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let vi = VIOptions::default();
        let q = QVHIOptions::default();
        Self {
            inner_tol: vi.tol,
            max_inner: vi.max_iter,
            eps0: vi.eps0,
            eps_min: vi.eps_min,
            outer_tol: None,
            max_outer: q.max_outer,
            damping: q.damping,
            quad_degree: 4,
            seed: 0,
            certificate_probes: q.certificate_probes,
            check_samples: 2000,
        }
    }
}

impl SolverSpec {
    pub fn options(&self, force_run: bool) -> QVHIOptions {
        QVHIOptions {
            outer_tol: self.outer_tol,
            max_outer: self.max_outer,
            damping: self.damping,
            inner: VIOptions {
                tol: self.inner_tol,
                max_iter: self.max_inner,
                eps0: self.eps0,
                eps_min: self.eps_min,
                ..VIOptions::default()
            },
            force_run,
            keep_iterates: false,
            start: None,
            certificate_probes: self.certificate_probes,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentSpec {
    #[default]
    Solve,
    /// `g_n = yield_stress·2⁻ⁿ` for `n = 0..=levels`, compared with `g = 0`.
    YieldSweep { levels: usize },
    /// `f + s·δf` for each size `s`, where `δf` is `direction` scaled to unit
    /// dual norm.
    ForcePerturbation { direction: [Expr; 2], sizes: Vec<f64> },
    /// Solves from zero and from `starts − 1` random anchors.
    Uniqueness { starts: usize },
    /// L² error against `velocity` on the rectangle refined by each factor.
    Manufactured { velocity: [Expr; 2], refinements: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub mesh: MeshSpec,
    pub law: LawSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slip: Option<SlipSpec>,
    #[serde(default)]
    pub yield_stress: f64,
    pub body_force: [Expr; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub experiment: ExperimentSpec,
    #[serde(default)]
    pub force_run: bool,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be nonnegative and finite, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Reads a config file, resolving a relative mesh path against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let MeshSpec::File { path: mesh } = &mut cfg.mesh {
            if mesh.is_relative() {
                if let Some(dir) = path.parent() {
                    *mesh = dir.join(&*mesh);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.mesh {
            MeshSpec::Rectangle { lx, ly, nx, ny, .. } => {
                positive("mesh.lx", *lx)?;
                positive("mesh.ly", *ly)?;
                if *nx == 0 || *ny == 0 {
                    return Err(Error::Config("mesh.nx and mesh.ny must be at least 1".into()));
                }
            }
            MeshSpec::File { .. } => {}
        }
        match &self.law {
            LawSpec::Newtonian { mu0 } => positive("law.mu0", *mu0)?,
            LawSpec::Carreau { mu_inf, mu_ref, kappa, q } => {
                positive("law.mu_inf", *mu_inf)?;
                nonnegative("law.mu_ref", *mu_ref)?;
                nonnegative("law.kappa", *kappa)?;
                positive("law.q", *q)?;
            }
        }
        if let Some(s) = &self.slip {
            match s.weight {
                WeightSpec::Constant { h } => positive("slip.weight.h", h)?,
                WeightSpec::Rational { low, high, scale } => {
                    positive("slip.weight.low", low)?;
                    positive("slip.weight.scale", scale)?;
                    if high < low {
                        return Err(Error::Config("slip.weight.high must be at least low".into()));
                    }
                }
            }
            match s.potential {
                PotentialSpec::JLambda { lambda } => positive("slip.potential.lambda", lambda)?,
                PotentialSpec::Quadratic { stiffness } => nonnegative("slip.potential.stiffness", stiffness)?,
                PotentialSpec::NormConvex | PotentialSpec::Zero => {}
            }
            if let Some(g) = s.growth {
                nonnegative("slip.growth.b0", g.b0)?;
                nonnegative("slip.growth.b1", g.b1)?;
            }
            if let Some(m) = s.m_j {
                nonnegative("slip.m_j", m)?;
            }
        }
        nonnegative("yield_stress", self.yield_stress)?;
        if let Some(c) = &self.constraint {
            if let KSpec::DissipationSq { nu0 } = c.k {
                positive("constraint.k.nu0", nu0)?;
            }
            match &c.r {
                RSpec::Constant { value } => positive("constraint.r.value", *value)?,
                RSpec::AffineL1 { alpha, .. } => positive("constraint.r.alpha", *alpha)?,
            }
        }
        let s = &self.solver;
        positive("solver.inner_tol", s.inner_tol)?;
        positive("solver.eps0", s.eps0)?;
        positive("solver.eps_min", s.eps_min)?;
        if let Some(t) = s.outer_tol {
            positive("solver.outer_tol", t)?;
        }
        if !(s.damping > 0.0 && s.damping <= 1.0) {
            return Err(Error::Config(format!("solver.damping must lie in (0, 1], got {}", s.damping)));
        }
        if s.max_inner == 0 || s.max_outer == 0 {
            return Err(Error::Config("iteration limits must be at least 1".into()));
        }
        match &self.experiment {
            ExperimentSpec::ForcePerturbation { sizes, .. } => {
                if sizes.is_empty() {
                    return Err(Error::Config("experiment.sizes must not be empty".into()));
                }
                for &v in sizes {
                    positive("experiment.sizes[]", v)?;
                }
            }
            ExperimentSpec::Uniqueness { starts } if *starts < 2 => {
                return Err(Error::Config("experiment.starts must be at least 2".into()));
            }
            ExperimentSpec::Manufactured { refinements, .. } => {
                if refinements.len() < 2 || refinements.contains(&0) {
                    return Err(Error::Config(
                        "experiment.refinements needs at least two positive factors".into(),
                    ));
                }
                if !matches!(self.mesh, MeshSpec::Rectangle { .. }) {
                    return Err(Error::Config("manufactured runs need a rectangle mesh".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        self.build_mesh_refined(1)
    }

    /// Rectangle meshes are refined by `factor` in both directions.
    pub fn build_mesh_refined(&self, factor: usize) -> Result<Mesh> {
        match &self.mesh {
            MeshSpec::Rectangle { lx, ly, nx, ny, slip_sides } => {
                Mesh::generate_rectangle(*lx, *ly, nx * factor, ny * factor, slip_sides)
            }
            MeshSpec::File { path } => {
                if factor != 1 {
                    return Err(Error::Unsupported("file meshes cannot be refined".into()));
                }
                Mesh::load(path)
            }
        }
    }

    pub fn build_law(&self) -> Result<ConstitutiveLaw> {
        match self.law {
            LawSpec::Newtonian { mu0 } => ConstitutiveLaw::newtonian(mu0),
            LawSpec::Carreau { mu_inf, mu_ref, kappa, q } => ConstitutiveLaw::carreau(mu_inf, mu_ref, kappa, q),
        }
    }

    pub fn build_slip(&self) -> Result<SlipModel> {
        let Some(s) = &self.slip else {
            return Ok(SlipModel::new(WeightFunction::constant(1.0)?, zero_potential()).with_m_j(0.0));
        };
        let weight = match s.weight {
            WeightSpec::Constant { h } => WeightFunction::constant(h)?,
            WeightSpec::Rational { low, high, scale } => WeightFunction::rational(low, high, scale)?,
        };
        let mut potential = match s.potential {
            PotentialSpec::JLambda { lambda } => SlipPotential::jlambda(lambda)?,
            PotentialSpec::NormConvex => SlipPotential::norm_convex(),
            PotentialSpec::Quadratic { stiffness } => quadratic_potential(stiffness),
            PotentialSpec::Zero => zero_potential(),
        };
        if let Some(g) = s.growth {
            potential = potential.with_growth(g.b0, g.b1);
        }
        let mut model = SlipModel::new(weight, potential);
        let declared = s.m_j.or(match s.potential {
            PotentialSpec::NormConvex | PotentialSpec::Quadratic { .. } | PotentialSpec::Zero => Some(0.0),
            PotentialSpec::JLambda { .. } => None,
        });
        if let Some(m) = declared {
            model = model.with_m_j(m);
        }
        Ok(model)
    }

    pub fn build_constraints(&self) -> Result<ConstraintFunctionals> {
        let Some(c) = &self.constraint else {
            return Ok(ConstraintFunctionals::inactive());
        };
        let k = match c.k {
            KSpec::VSeminorm => KKind::VSeminorm,
            KSpec::DissipationSq { nu0 } => KKind::DissipationSq { nu0 },
        };
        let r = match &c.r {
            RSpec::Constant { value } => RKind::Constant(*value),
            RSpec::AffineL1 { alpha, rho } => {
                let rho = rho.clone();
                RKind::AffineL1 {
                    alpha: *alpha,
                    rho: Arc::new(move |x, y| rho.eval(x, y)),
                }
            }
        };
        ConstraintFunctionals::new(k, r)
    }

    pub fn body_force(&self) -> impl Fn(f64, f64) -> [f64; 2] + '_ {
        move |x, y| [self.body_force[0].eval(x, y), self.body_force[1].eval(x, y)]
    }

    pub fn build_discretization(&self, mesh: &Mesh) -> Result<Arc<Discretization>> {
        Ok(Arc::new(Discretization::new(
            VelocitySpace::build(mesh)?,
            self.solver.quad_degree,
        )?))
    }

    pub fn build_problem(&self, disc: Arc<Discretization>) -> Result<DiscreteProblem> {
        DiscreteProblem::assemble(
            disc,
            self.build_law()?,
            &self.body_force(),
            self.build_slip()?,
            self.yield_stress,
            self.build_constraints()?,
        )
    }
}

fn zero_potential() -> SlipPotential {
    let zero: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(|_| 0.0);
    let profile = PiecewiseRadial::new(
        Vec::new(),
        vec![RadialBranch {
            value: zero.clone(),
            deriv: Some(zero),
        }],
    )
    .expect("single branch");
    SlipPotential::custom(profile, 0.0, 0.0, true)
}

fn quadratic_potential(k: f64) -> SlipPotential {
    let profile = PiecewiseRadial::new(
        Vec::new(),
        vec![RadialBranch {
            value: Arc::new(move |r| 0.5 * k * r * r),
            deriv: Some(Arc::new(move |r| k * r)),
        }],
    )
    .expect("single branch");
    SlipPotential::custom(profile, 0.0, k, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CHANNEL: &str = r#"{
        "name": "channel",
        "mesh": { "kind": "rectangle", "lx": 2.0, "ly": 1.0, "nx": 4, "ny": 2, "slip_sides": ["bottom"] },
        "law": { "kind": "newtonian", "mu0": 1.0 },
        "slip": { "weight": { "kind": "constant", "h": 0.5 }, "potential": { "kind": "j_lambda", "lambda": 0.5 } },
        "yield_stress": 0.5,
        "body_force": ["20*y", 0],
        "constraint": { "k": { "kind": "v_seminorm" }, "r": { "kind": "affine_l1", "alpha": 1.0, "rho": "1 + x" } }
    }"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ScenarioConfig::from_json(CHANNEL).unwrap();
        assert_eq!(cfg.solver, SolverSpec::default());
        assert_eq!(cfg.experiment, ExperimentSpec::Solve);
        let mesh = cfg.build_mesh().unwrap();
        let disc = cfg.build_discretization(&mesh).unwrap();
        let p = cfg.build_problem(disc).unwrap();
        assert_eq!(p.yield_stress, 0.5);
        assert!(p.slip.m_j.is_none());
        assert!(p.eval_r(&vec![0.0; p.n_free()]) == 1.0);
    }

    #[test]
    fn rejects_bad_values() {
        for (from, to) in [
            ("\"mu0\": 1.0", "\"mu0\": 0.0"),
            ("\"yield_stress\": 0.5", "\"yield_stress\": -1"),
            ("\"alpha\": 1.0", "\"alpha\": 0"),
            ("\"h\": 0.5", "\"h\": -0.5"),
            ("\"lambda\": 0.5", "\"lambda\": 0"),
            ("\"20*y\"", "\"20*z\""),
            ("\"nx\": 4", "\"nx\": 0"),
            ("\"name\"", "\"bogus\": 1, \"name\""),
        ] {
            let text = CHANNEL.replace(from, to);
            assert_ne!(text, CHANNEL);
            assert!(ScenarioConfig::from_json(&text).is_err(), "{to}");
        }
    }

    #[test]
    fn quadratic_declares_linear_growth() {
        let p = quadratic_potential(3.0);
        assert_eq!((p.growth_b0, p.growth_b1), (0.0, 3.0));
        let z = p.subgradient_select([0.5, 0.0]).unwrap();
        assert!((z[0] - 1.5).abs() < 1e-14);
    }

    fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
        let mesh = prop_oneof![
            (0.1f64..5.0, 0.1f64..5.0, 1usize..20, 1usize..20, prop::collection::vec(
                prop::sample::select(vec![Side::Bottom, Side::Top, Side::Left, Side::Right]), 0..3))
                .prop_map(|(lx, ly, nx, ny, slip_sides)| MeshSpec::Rectangle { lx, ly, nx, ny, slip_sides }),
            "[a-z]{1,8}\\.msh".prop_map(|p| MeshSpec::File { path: p.into() }),
        ];
        let law = prop_oneof![
            (0.01f64..10.0).prop_map(|mu0| LawSpec::Newtonian { mu0 }),
            (0.01f64..1.0, 0.0f64..5.0, 0.0f64..5.0, 0.5f64..2.0)
                .prop_map(|(mu_inf, mu_ref, kappa, q)| LawSpec::Carreau { mu_inf, mu_ref, kappa, q }),
        ];
        let slip = prop::option::of((
            prop_oneof![
                (0.01f64..2.0).prop_map(|h| WeightSpec::Constant { h }),
                (0.01f64..1.0, 1.0f64..2.0, 0.1f64..3.0)
                    .prop_map(|(low, high, scale)| WeightSpec::Rational { low, high, scale }),
            ],
            prop_oneof![
                (0.01f64..2.0).prop_map(|lambda| PotentialSpec::JLambda { lambda }),
                Just(PotentialSpec::NormConvex),
                (0.0f64..3.0).prop_map(|stiffness| PotentialSpec::Quadratic { stiffness }),
                Just(PotentialSpec::Zero),
            ],
            prop::option::of((0.0f64..2.0, 0.0f64..2.0).prop_map(|(b0, b1)| GrowthSpec { b0, b1 })),
            prop::option::of(0.0f64..3.0),
        ).prop_map(|(weight, potential, growth, m_j)| SlipSpec { weight, potential, growth, m_j }));
        let expr = prop::sample::select(vec!["x", "20*y", "sin(pi*x)*cos(y)", "1 - x^2", "exp(-x)"])
            .prop_map(|s| Expr::parse(s).unwrap());
        let constraint = prop::option::of((
            prop_oneof![
                Just(KSpec::VSeminorm),
                (0.1f64..3.0).prop_map(|nu0| KSpec::DissipationSq { nu0 }),
            ],
            prop_oneof![
                (0.1f64..10.0).prop_map(|value| RSpec::Constant { value }),
                (0.1f64..10.0, expr.clone()).prop_map(|(alpha, rho)| RSpec::AffineL1 { alpha, rho }),
            ],
        ).prop_map(|(k, r)| ConstraintSpec { k, r }));
        let experiment = prop_oneof![
            Just(ExperimentSpec::Solve),
            (0usize..10).prop_map(|levels| ExperimentSpec::YieldSweep { levels }),
            (2usize..5).prop_map(|starts| ExperimentSpec::Uniqueness { starts }),
            (expr.clone(), expr.clone(), prop::collection::vec(1e-4f64..1.0, 1..4))
                .prop_map(|(a, b, sizes)| ExperimentSpec::ForcePerturbation { direction: [a, b], sizes }),
        ];
        (mesh, law, slip, 0.0f64..3.0, (expr.clone(), expr), constraint, experiment, any::<bool>(), any::<u64>(), prop::option::of(1e-10f64..1e-6))
            .prop_map(|(mesh, law, slip, yield_stress, (fx, fy), constraint, experiment, force_run, seed, outer_tol)| {
                ScenarioConfig {
                    name: "generated".into(),
                    mesh,
                    law,
                    slip,
                    yield_stress,
                    body_force: [fx, fy],
                    constraint,
                    solver: SolverSpec { seed, outer_tol, ..SolverSpec::default() },
                    experiment,
                    force_run,
                }
            })
    }

    proptest! {
        #[test]
        fn json_round_trip(cfg in arb_config()) {
            let text = cfg.to_json();
            let back = ScenarioConfig::from_json(&text).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(back.to_json(), text);
        }
    }
}
