//! Run configuration: a TOML file with sections `[meta]`, `[domain]`,
//! `[initial]`, `[transport]`, `[solver]`, `[[diagnostics]]`, `[output]`.
//!
//! The schema is strict — unknown keys are rejected — and validation happens
//! before any computation. Exponents p and q are exact rationals written as
//! integers, `"num/den"` strings, or `"inf"`. A config tagged
//! `regime = "theorem1"` refuses supercritical exponent pairs (γ ≤ 0) by
//! exact rational arithmetic.
//!
//! Every numeric field is in the units of the underlying quantity: lengths
//! in domain units, times in flow time, amplitudes in height units;
//! `cutoff_radius` is the kernel radius R whose plateau is R/16 and support
//! R/8.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::diagnostics::{Exponent, NormExponents};
use crate::domain::Domain;
use crate::error::Error;
use crate::geom::V3;
use crate::grid::{Grid, GridFunction};
use crate::kernels::KernelSpec;
use crate::manufactured::{rational_to_f64, BlowupParameters, SelfSimilarSolution};
use crate::solver::{Scheme, SolverConfig, TransportField};
use crate::Result;
use num_rational::Rational64;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub meta: MetaSection,
    pub domain: DomainSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub transport: TransportSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub diagnostics: Vec<DiagnosticSection>,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaSection {
    pub name: Option<String>,
    #[serde(default)]
    pub criteria: Vec<String>,
    /// "theorem1" enables the subcriticality guard on all exponent pairs.
    pub regime: Option<String>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub kind: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub radius: Option<f64>,
    pub resolution: usize,
    pub r_surrogate: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: String,
    pub amplitude: Option<f64>,
    pub mode: Option<u32>,
    pub profile_radius: Option<f64>,
    pub table: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportSection {
    pub kind: Option<String>,
    pub c: Option<f64>,
    pub alpha: Option<f64>,
    pub p: Option<ExponentRaw>,
    pub q: Option<ExponentRaw>,
    pub profile_radius: Option<f64>,
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub scheme: String,
    pub dt: Option<f64>,
    pub t_final: f64,
    pub output_every: Option<usize>,
    pub blowup_ceiling: Option<f64>,
    /// Ceiling as a multiple of sup|du₀| (overrides `blowup_ceiling`).
    pub ceiling_rel_du0: Option<f64>,
    pub cfl_safety: Option<f64>,
    pub picard_tol: Option<f64>,
    pub picard_max_iter: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticSection {
    pub kind: String,
    pub pole: Option<Vec<f64>>,
    pub s: Option<f64>,
    pub cutoff_radius: Option<f64>,
    pub phi: Option<String>,
    pub c13: Option<f64>,
    pub p: Option<ExponentRaw>,
    pub q: Option<ExponentRaw>,
    pub tau: Option<f64>,
    pub alpha: Option<f64>,
    pub pairs: Option<usize>,
    /// Check toggle for diagnostics with a pass/fail notion.
    pub assert_check: Option<bool>,
    /// Discretization-tolerance coefficient for the check.
    pub tol_coeff: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ExponentRaw {
    Int(i64),
    Text(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    /// Cap on the number of snapshot CSV files (default 16; 0 disables).
    pub snapshot_files: Option<usize>,
}

/// Fully validated, buildable run.
#[derive(Debug)]
pub struct BuiltRun {
    pub name: String,
    pub seed: u64,
    pub criteria: Vec<String>,
    pub grid: Arc<Grid>,
    pub u0: GridFunction,
    pub transport: TransportField,
    pub solver: SolverConfig,
    pub diagnostics: Vec<DiagnosticRequest>,
    pub out_dir: String,
    pub snapshot_files: usize,
}

/// Resolved diagnostics request.
#[derive(Debug, Clone)]
pub enum DiagnosticRequest {
    SupV {
        assert_check: bool,
    },
    Area,
    Monotonicity {
        spec: KernelSpec,
        phi_v: bool,
        assert_check: bool,
        tol_coeff: f64,
    },
    Weighted {
        spec: KernelSpec,
        c13: f64,
    },
    BoundaryFlux {
        spec: KernelSpec,
    },
    TransportNorm {
        exps: NormExponents,
        tau: Option<f64>,
    },
    EvolutionResidual,
    BoundarySign {
        assert_check: bool,
        tol_coeff: f64,
    },
    Holder {
        alpha: f64,
        pairs: usize,
    },
    ComparisonBound {
        assert_check: bool,
        tol_coeff: f64,
    },
}

pub fn parse_exponent(raw: &ExponentRaw) -> Result<Exponent> {
    match raw {
        ExponentRaw::Int(n) => {
            if *n < 1 {
                return Err(Error::ConfigInvalid(format!("exponent {n} must be >= 1")));
            }
            Ok(Exponent::integer(*n))
        }
        ExponentRaw::Text(s) => {
            let s = s.trim();
            if s.eq_ignore_ascii_case("inf") || s == "∞" {
                return Ok(Exponent::Infinity);
            }
            let parse_i64 = |t: &str| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::ConfigInvalid(format!("bad exponent literal '{s}'")))
            };
            let r = if let Some((num, den)) = s.split_once('/') {
                Rational64::new(parse_i64(num)?, parse_i64(den)?)
            } else {
                Rational64::from_integer(parse_i64(s)?)
            };
            if r < Rational64::from_integer(1) {
                return Err(Error::ConfigInvalid(format!("exponent {s} must be >= 1")));
            }
            Ok(Exponent::Finite(r))
        }
    }
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))
}

impl RunConfig {
    pub fn build(&self) -> Result<BuiltRun> {
        let domain = self.build_domain()?;
        let dim = domain.dim();
        let grid = Grid::new(domain, self.domain.resolution)?;
        let u0 = self.build_initial(&grid)?;
        let transport = self.build_transport(dim)?;
        let solver = self.build_solver(&grid, &u0)?;
        let diagnostics = self.build_diagnostics(&grid, &solver)?;
        self.regime_guard(dim, &diagnostics)?;
        let name = self
            .meta
            .name
            .clone()
            .unwrap_or_else(|| "run".to_string());
        Ok(BuiltRun {
            name,
            seed: self.meta.seed,
            criteria: self.meta.criteria.clone(),
            grid,
            u0,
            transport,
            solver,
            diagnostics,
            out_dir: self.output.dir.clone(),
            snapshot_files: self.output.snapshot_files.unwrap_or(16),
        })
    }

    fn build_domain(&self) -> Result<Domain> {
        let d = &self.domain;
        match d.kind.as_str() {
            "interval" => {
                let a = d
                    .a
                    .ok_or_else(|| Error::ConfigInvalid("domain.a required for interval".into()))?;
                let b = d
                    .b
                    .ok_or_else(|| Error::ConfigInvalid("domain.b required for interval".into()))?;
                if !(a < b) {
                    return Err(Error::ConfigInvalid(format!(
                        "interval needs a < b, got a={a}, b={b}"
                    )));
                }
                Ok(match d.r_surrogate {
                    Some(r) if r > 0.0 => Domain::interval_with_surrogate(a, b, r),
                    Some(r) => {
                        return Err(Error::ConfigInvalid(format!(
                            "domain.r_surrogate must be positive, got {r}"
                        )))
                    }
                    None => Domain::interval(a, b),
                })
            }
            "disk" => {
                let r = d.radius.ok_or_else(|| {
                    Error::ConfigInvalid("domain.radius required for disk".into())
                })?;
                if r <= 0.0 {
                    return Err(Error::ConfigInvalid(format!(
                        "domain.radius must be positive, got {r}"
                    )));
                }
                Ok(Domain::disk(r))
            }
            other => Err(Error::ConfigInvalid(format!(
                "domain.kind must be 'interval' or 'disk', got '{other}'"
            ))),
        }
    }

    fn build_initial(&self, grid: &Arc<Grid>) -> Result<GridFunction> {
        let sec = &self.initial;
        let dim = grid.domain.dim();
        let amp = sec.amplitude.unwrap_or(0.0);
        let mode = sec.mode.unwrap_or(1) as f64;
        match sec.kind.as_str() {
            "zero" => Ok(GridFunction::zeros(grid.clone(), 0.0)),
            "cosine" => {
                if dim != 1 {
                    return Err(Error::ConfigInvalid(
                        "initial.kind 'cosine' requires an interval domain".into(),
                    ));
                }
                let (a, b) = match grid.domain {
                    Domain::Interval { a, b, .. } => (a, b),
                    _ => unreachable!(),
                };
                Ok(GridFunction::from_fn(grid.clone(), 0.0, move |p| {
                    amp * (mode * std::f64::consts::PI * (p[0] - a) / (b - a)).cos()
                }))
            }
            "radial_cosine" => {
                if dim != 2 {
                    return Err(Error::ConfigInvalid(
                        "initial.kind 'radial_cosine' requires a disk domain".into(),
                    ));
                }
                let r2 = match grid.domain {
                    Domain::Disk { radius } => radius * radius,
                    _ => unreachable!(),
                };
                Ok(GridFunction::from_fn(grid.clone(), 0.0, move |p| {
                    let q = (p[0] * p[0] + p[1] * p[1]) / r2;
                    amp * (mode * std::f64::consts::PI * q).cos()
                }))
            }
            "saddle" => {
                if dim != 2 {
                    return Err(Error::ConfigInvalid(
                        "initial.kind 'saddle' requires a disk domain".into(),
                    ));
                }
                let r = match grid.domain {
                    Domain::Disk { radius } => radius,
                    _ => unreachable!(),
                };
                let r4 = r.powi(4);
                // amp·(x²−y²)(2r²−ρ²)/r⁴: tangential slope on ∂Ω, zero
                // radial slope there (Neumann-compatible)
                Ok(GridFunction::from_fn(grid.clone(), 0.0, move |p| {
                    let rho2 = p[0] * p[0] + p[1] * p[1];
                    amp * (p[0] * p[0] - p[1] * p[1]) * (2.0 * r * r - rho2) / r4
                }))
            }
            "bump" => {
                let pr = sec.profile_radius.ok_or_else(|| {
                    Error::ConfigInvalid("initial.profile_radius required for 'bump'".into())
                })?;
                let sol = SelfSimilarSolution::new(dim, 1.0, pr, sec.amplitude.unwrap_or(1.0));
                Ok(GridFunction::from_fn(grid.clone(), 0.0, move |p| {
                    sol.profile(p)
                }))
            }
            "table" => {
                let path = sec.table.as_ref().ok_or_else(|| {
                    Error::ConfigInvalid("initial.table path required for 'table'".into())
                })?;
                load_table(grid, Path::new(path))
            }
            other => Err(Error::ConfigInvalid(format!(
                "unknown initial.kind '{other}'"
            ))),
        }
    }

    fn build_transport(&self, dim: usize) -> Result<TransportField> {
        let sec = &self.transport;
        match sec.kind.as_deref().unwrap_or("zero") {
            "zero" => Ok(TransportField::Zero),
            "constant_vertical" => Ok(TransportField::ConstantVertical(sec.c.unwrap_or(0.0))),
            "linear_x1" => Ok(TransportField::LinearX1Vertical(sec.c.unwrap_or(1.0))),
            "self_similar" => {
                let alpha = match (sec.alpha, &sec.p, &sec.q) {
                    (Some(a), _, _) => a,
                    (None, Some(p), Some(q)) => {
                        let (p, q) = (parse_exponent(p)?, parse_exponent(q)?);
                        let (Exponent::Finite(pr), Exponent::Finite(qr)) = (p, q) else {
                            return Err(Error::ConfigInvalid(
                                "self_similar exponents must be finite".into(),
                            ));
                        };
                        let params = BlowupParameters::new(dim, pr, qr);
                        if !params.is_supercritical() {
                            return Err(Error::ConfigInvalid(format!(
                                "self_similar (p,q)=({pr},{qr}) is not supercritical for n={dim}"
                            )));
                        }
                        rational_to_f64(params.alpha0())
                    }
                    _ => {
                        return Err(Error::ConfigInvalid(
                            "self_similar transport needs alpha or the pair (p, q)".into(),
                        ))
                    }
                };
                let pr = sec.profile_radius.ok_or_else(|| {
                    Error::ConfigInvalid("transport.profile_radius required".into())
                })?;
                Ok(TransportField::SelfSimilar(SelfSimilarSolution::new(
                    dim,
                    alpha,
                    pr,
                    sec.amplitude.unwrap_or(1.0),
                )))
            }
            other => Err(Error::ConfigInvalid(format!(
                "unknown transport.kind '{other}'"
            ))),
        }
    }

    fn build_solver(&self, grid: &Arc<Grid>, u0: &GridFunction) -> Result<SolverConfig> {
        let sec = &self.solver;
        let scheme = match sec.scheme.as_str() {
            "explicit" => Scheme::Explicit,
            "semi_implicit" => Scheme::SemiImplicit,
            "picard" => Scheme::Picard,
            other => {
                return Err(Error::ConfigInvalid(format!(
                    "unknown solver.scheme '{other}'"
                )))
            }
        };
        let dim = grid.domain.dim();
        let dt = sec
            .dt
            .unwrap_or_else(|| SolverConfig::default_dt(scheme, grid.h, dim));
        if dt <= 0.0 || sec.t_final < 0.0 {
            return Err(Error::ConfigInvalid(
                "solver.dt must be positive and solver.t_final nonnegative".into(),
            ));
        }
        let mut cfg = SolverConfig::new(scheme, dt, sec.t_final);
        let steps = (sec.t_final / dt).ceil() as usize;
        cfg.output_every = sec.output_every.unwrap_or((steps / 240).max(1));
        if let Some(s) = sec.cfl_safety {
            cfg.cfl_safety = s;
        }
        if let Some(tol) = sec.picard_tol {
            cfg.picard_tol = tol;
        }
        if let Some(it) = sec.picard_max_iter {
            cfg.picard_max_iter = it;
        }
        if let Some(rel) = sec.ceiling_rel_du0 {
            let q0 = crate::graph::compute_quantities(u0)?;
            cfg.blowup_ceiling = rel * crate::solver::sup_gradient_refined(grid, &q0);
        } else if let Some(ceiling) = sec.blowup_ceiling {
            cfg.blowup_ceiling = ceiling;
        }
        Ok(cfg)
    }

    fn build_diagnostics(
        &self,
        grid: &Arc<Grid>,
        solver: &SolverConfig,
    ) -> Result<Vec<DiagnosticRequest>> {
        let dim = grid.domain.dim();
        let mut out = Vec::new();
        for (k, d) in self.diagnostics.iter().enumerate() {
            let kernel_spec = |d: &DiagnosticSection| -> Result<KernelSpec> {
                let pole_raw = d.pole.as_ref().ok_or_else(|| {
                    Error::ConfigInvalid(format!("diagnostics[{k}] needs pole = [coords.., height]"))
                })?;
                if pole_raw.len() != dim + 1 {
                    return Err(Error::ConfigInvalid(format!(
                        "diagnostics[{k}] pole needs {} entries (spatial + height)",
                        dim + 1
                    )));
                }
                let mut pole: V3 = [0.0; 3];
                pole[..=dim].copy_from_slice(&pole_raw[..=dim]);
                let s = d.s.ok_or_else(|| {
                    Error::ConfigInvalid(format!("diagnostics[{k}] needs the pole time s"))
                })?;
                if s <= solver.t_final {
                    return Err(Error::ConfigInvalid(format!(
                        "diagnostics[{k}]: pole time s = {s} must exceed t_final = {}",
                        solver.t_final
                    )));
                }
                Ok(KernelSpec {
                    dim,
                    pole,
                    s,
                    cutoff_radius: d
                        .cutoff_radius
                        .unwrap_or_else(|| grid.domain.curvature_radius()),
                })
            };
            let req = match d.kind.as_str() {
                "sup_v" => DiagnosticRequest::SupV {
                    assert_check: d.assert_check.unwrap_or(false),
                },
                "area" => DiagnosticRequest::Area,
                "monotonicity" => DiagnosticRequest::Monotonicity {
                    spec: kernel_spec(d)?,
                    phi_v: matches!(d.phi.as_deref(), Some("v") | None),
                    assert_check: d.assert_check.unwrap_or(false),
                    tol_coeff: d.tol_coeff.unwrap_or(2.0),
                },
                "weighted" => DiagnosticRequest::Weighted {
                    spec: kernel_spec(d)?,
                    c13: d.c13.unwrap_or(1.0),
                },
                "boundary_flux" => DiagnosticRequest::BoundaryFlux {
                    spec: kernel_spec(d)?,
                },
                "transport_norm" => {
                    let p = d.p.as_ref().map(parse_exponent).transpose()?.ok_or_else(
                        || Error::ConfigInvalid(format!("diagnostics[{k}] needs p")),
                    )?;
                    let q = d.q.as_ref().map(parse_exponent).transpose()?.ok_or_else(
                        || Error::ConfigInvalid(format!("diagnostics[{k}] needs q")),
                    )?;
                    DiagnosticRequest::TransportNorm {
                        exps: NormExponents::new(p, q),
                        tau: d.tau,
                    }
                }
                "evolution_residual" => DiagnosticRequest::EvolutionResidual,
                "boundary_sign" => DiagnosticRequest::BoundarySign {
                    assert_check: d.assert_check.unwrap_or(true),
                    tol_coeff: d.tol_coeff.unwrap_or(1.0),
                },
                "holder" => DiagnosticRequest::Holder {
                    alpha: d.alpha.unwrap_or(1.0),
                    pairs: d.pairs.unwrap_or(2000),
                },
                "comparison_bound" => DiagnosticRequest::ComparisonBound {
                    assert_check: d.assert_check.unwrap_or(true),
                    tol_coeff: d.tol_coeff.unwrap_or(1.0),
                },
                other => {
                    return Err(Error::ConfigInvalid(format!(
                        "unknown diagnostics kind '{other}'"
                    )))
                }
            };
            out.push(req);
        }
        Ok(out)
    }

    /// A config claiming the gradient-estimate regime must be subcritical:
    /// γ = 1 − n/p − 2/q > 0 in exact arithmetic for every exponent pair.
    fn regime_guard(&self, dim: usize, diagnostics: &[DiagnosticRequest]) -> Result<()> {
        if self.meta.regime.as_deref() != Some("theorem1") {
            return Ok(());
        }
        let mut pairs: Vec<NormExponents> = Vec::new();
        for d in diagnostics {
            if let DiagnosticRequest::TransportNorm { exps, .. } = d {
                pairs.push(*exps);
            }
        }
        if let (Some(p), Some(q)) = (&self.transport.p, &self.transport.q) {
            pairs.push(NormExponents::new(parse_exponent(p)?, parse_exponent(q)?));
        }
        for exps in pairs {
            if !exps.is_subcritical(dim) {
                return Err(Error::ConfigInvalid(format!(
                    "regime 'theorem1' requires 1 - {dim}/p - 2/q > 0, but (p,q)=({},{}) gives gamma = {}",
                    exps.p,
                    exps.q,
                    exps.gamma(dim)
                )));
            }
        }
        Ok(())
    }
}

/// Node table: CSV rows `x[,y],u`; each row lands on the nearest active node.
fn load_table(grid: &Arc<Grid>, path: &Path) -> Result<GridFunction> {
    let text = std::fs::read_to_string(path)?;
    let dim = grid.domain.dim();
    let mut values = vec![0.0; grid.node_count()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != dim + 1 {
            return Err(Error::ConfigInvalid(format!(
                "table line {}: expected {} columns",
                lineno + 1,
                dim + 1
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::ConfigInvalid(format!("table line {}: bad number", lineno + 1)))
        };
        let mut p: V3 = [0.0; 3];
        for (axis, slot) in p.iter_mut().enumerate().take(dim) {
            *slot = parse(cols[axis])?;
        }
        let u = parse(cols[dim])?;
        // nearest active node
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for &idx in &grid.active {
            let q = grid.pos_of(idx);
            let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
            if d < best_d {
                best_d = d;
                best = Some(idx);
            }
        }
        if let Some(idx) = best {
            values[idx] = u;
        }
    }
    Ok(GridFunction::from_values(grid.clone(), values, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [domain]
        kind = "interval"
        a = 0.0
        b = 1.0
        resolution = 32

        [initial]
        kind = "zero"

        [solver]
        scheme = "explicit"
        t_final = 0.01

        [output]
        dir = "runs/minimal"
    "#;

    #[test]
    fn minimal_config_builds() {
        let cfg = parse(MINIMAL).unwrap();
        let built = cfg.build().unwrap();
        assert_eq!(built.grid.active.len(), 32);
        assert!(built.transport.is_zero());
        assert!(built.solver.dt > 0.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("[output]", "typo_key = 1\n[output]");
        let err = parse(&bad).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("typo_key"), "message should name the key: {msg}");
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!(
            parse_exponent(&ExponentRaw::Int(4)).unwrap(),
            Exponent::integer(4)
        );
        assert_eq!(
            parse_exponent(&ExponentRaw::Text("3/2".into())).unwrap(),
            Exponent::finite(3, 2)
        );
        assert_eq!(
            parse_exponent(&ExponentRaw::Text("inf".into())).unwrap(),
            Exponent::Infinity
        );
        assert!(parse_exponent(&ExponentRaw::Text("1/2".into())).is_err());
        assert!(parse_exponent(&ExponentRaw::Int(0)).is_err());
    }

    #[test]
    fn regime_guard_rejects_supercritical_pairs() {
        let cfg_text = r#"
            [meta]
            regime = "theorem1"

            [domain]
            kind = "disk"
            radius = 1.0
            resolution = 24

            [initial]
            kind = "zero"

            [solver]
            scheme = "explicit"
            t_final = 0.001

            [[diagnostics]]
            kind = "transport_norm"
            p = 2
            q = 4

            [output]
            dir = "runs/guard"
        "#;
        let cfg = parse(cfg_text).unwrap();
        let err = cfg.build().unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid(_)));
        assert!(format!("{err}").contains("gamma"));
    }

    #[test]
    fn pole_time_must_exceed_horizon() {
        let cfg_text = r#"
            [domain]
            kind = "interval"
            a = 0.0
            b = 1.0
            resolution = 32

            [initial]
            kind = "zero"

            [solver]
            scheme = "explicit"
            t_final = 0.01

            [[diagnostics]]
            kind = "monotonicity"
            pole = [0.5, 0.0]
            s = 0.005

            [output]
            dir = "runs/pole"
        "#;
        let cfg = parse(cfg_text).unwrap();
        assert!(cfg.build().is_err());
    }

    #[test]
    fn self_similar_alpha_from_supercritical_pair() {
        let cfg_text = r#"
            [domain]
            kind = "disk"
            radius = 1.0
            resolution = 24

            [initial]
            kind = "bump"
            profile_radius = 0.7

            [transport]
            kind = "self_similar"
            p = 2
            q = 4
            profile_radius = 0.7

            [solver]
            scheme = "explicit"
            t_final = 0.001

            [output]
            dir = "runs/ss"
        "#;
        let built = parse(cfg_text).unwrap().build().unwrap();
        match built.transport {
            TransportField::SelfSimilar(sol) => {
                assert!((sol.alpha - 0.46875).abs() < 1e-15);
            }
            other => panic!("expected self-similar transport, got {other:?}"),
        }
    }
}
