use std::fs;
use std::sync::Arc;

use frobstruct_core::affine_orbits::{canonical_rep, closed_form_count, count_orbits, free_indices};
use frobstruct_core::arith::{Fp, Level};
use frobstruct_core::chart::Chart;
use frobstruct_core::combin::{
    self, chern_obstruction, count_b, delta_classes, enumerate_b, formula_count_b, genus_count, gl_order,
    invariant_classes, product_chern, product_obstructed, quotient_ratio, sn_classes, surface, surface_table,
    ChernMode, GroupAction, Quotient, TateLevel, HYPERELLIPTIC_ORDERS,
};
use frobstruct_core::diffop::DiffOp;
use frobstruct_core::dmod::{DMod, Validation};
use frobstruct_core::error::{Error, Result};
use frobstruct_core::exec::Execution;
use frobstruct_core::indigenous::{AffineIndigenousCandidate, Normalization};
use frobstruct_core::io::{from_json, render_matrix, render_vector, CandidateFile, ModuleFile, TangoFile};
use frobstruct_core::tango::{
    b_project, dual_affine_check, extract_dual_connection, filtration_check, gamma, kappa_matrix, DualVerdict,
    FiltrationFailure, TangoCandidate,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::report::Report;
use crate::{ChartArgs, CombCmd, DmodCmd, DopCmd, IndigCmd, OrbitsCmd, TangoArgs, TangoCmd, TateArgs, Which};

fn inputs<T: Serialize>(cmd: &T) -> Value {
    match serde_json::to_value(cmd).expect("serializable arguments") {
        Value::Object(m) if m.len() == 1 => m.into_iter().next().map(|(_, v)| v).unwrap_or(Value::Null),
        other => other,
    }
}

fn read(path: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{path}: {e}")))
}

fn load_module(path: &str) -> Result<DMod> {
    from_json::<ModuleFile>(&read(path)?)?.build()
}

fn load_candidate(path: &str) -> Result<CandidateFile> {
    from_json(&read(path)?)
}

fn parse_level(s: &str) -> Result<Level> {
    match s.trim() {
        "inf" | "infinity" => Ok(Level::Infinity),
        n => n.parse::<u32>().map(Level::Finite).map_err(|_| Error::Parse(format!("bad level {s:?}"))),
    }
}

impl ChartArgs {
    fn build(&self) -> Result<Arc<Chart>> {
        for v in &self.laurent {
            if !self.vars.contains(v) {
                return Err(Error::Parse(format!("Laurent variable {v:?} is not a chart variable")));
            }
        }
        let flags = self.vars.iter().map(|v| self.laurent.contains(v)).collect();
        Chart::new(Fp::new(self.p)?, self.vars.clone(), flags)
    }
}

impl TangoArgs {
    fn build(&self) -> Result<TangoCandidate> {
        if let Some(path) = &self.file {
            return from_json::<TangoFile>(&read(path)?)?.build();
        }
        if self.gens.is_empty() {
            return Err(Error::Parse("give --gen or --file".into()));
        }
        let vars = if !self.vars.is_empty() {
            self.vars.clone()
        } else if self.gens.len() == 1 {
            vec!["t".to_string()]
        } else {
            (1..=self.gens.len()).map(|i| format!("t{i}")).collect()
        };
        let chart = Chart::new(Fp::new(self.p)?, vars.clone(), vec![false; vars.len()])?;
        let gens: Vec<&str> = self.gens.iter().map(String::as_str).collect();
        TangoCandidate::parse(&chart, self.level, &gens)
    }
}

impl TateArgs {
    fn build(&self) -> Result<TateLevel> {
        TateLevel::new(self.n, self.level, self.p)
    }
}

fn tango_json(t: &TangoCandidate) -> Value {
    serde_json::to_value(TangoFile::of(t)).expect("serializable")
}

fn module_json(m: &DMod) -> Value {
    serde_json::to_value(ModuleFile::of(m)).expect("serializable")
}

pub fn dop(cmd: &DopCmd) -> Result<Report> {
    let input = inputs(cmd);
    match cmd {
        DopCmd::Mul { chart, m, lhs, rhs } => {
            let c = chart.build()?;
            let level = parse_level(m)?;
            let prod = DiffOp::parse(&c, level, lhs)?.mul(&DiffOp::parse(&c, level, rhs)?)?;
            Ok(Report::new("dop mul", input).value(json!(prod.to_string())))
        }
        DopCmd::Apply { chart, m, op, f } => {
            let c = chart.build()?;
            let out = DiffOp::parse(&c, parse_level(m)?, op)?.apply(&c.parse(f)?)?;
            Ok(Report::new("dop apply", input).value(json!(out.to_string())))
        }
        DopCmd::Levelmap { chart, m1, m2, op } => {
            let c = chart.build()?;
            let out = DiffOp::parse(&c, parse_level(m1)?, op)?.level_map(parse_level(m2)?)?;
            Ok(Report::new("dop levelmap", input).value(json!(out.to_string())))
        }
    }
}

pub fn dmod(cmd: &DmodCmd) -> Result<Report> {
    let input = inputs(cmd);
    match cmd {
        DmodCmd::Validate { module } => {
            let m = load_module(module)?;
            let report = Report::new("dmod validate", input);
            Ok(match m.validate_with(Execution::from_env()) {
                Validation::Valid => report.verdict(true).value(json!({ "bound": m.validation_bound() })),
                Validation::Violated { var, l, op, basis } => report
                    .verdict(false)
                    .witness(json!({ "var": var, "l": l, "op": op, "basis": basis })),
            })
        }
        DmodCmd::Pcurv { module, var } => {
            let m = load_module(module)?;
            let i = match m.chart().var_index(var) {
                Some(i) => i,
                None => var.parse().map_err(|_| Error::Parse(format!("unknown variable {var:?}")))?,
            };
            if i >= m.chart().nvars() {
                return Err(Error::Parse(format!("variable index {i} out of range")));
            }
            let psi = m.p_curvature(i)?;
            Ok(Report::new("dmod pcurv", input).value(json!({ "matrix": render_matrix(&psi), "zero": psi.is_zero() })))
        }
        DmodCmd::Sol { module, check } => {
            let m = load_module(module)?;
            if !check.is_empty() {
                let v = check.iter().map(|s| m.chart().parse(s)).collect::<Result<Vec<_>>>()?;
                if v.len() != m.rank() {
                    return Err(Error::DimensionMismatch(format!("vector of length {} for rank {}", v.len(), m.rank())));
                }
                let image = m.truncate(0)?.apply_generator(0, 0, &v)?;
                let horizontal = image.iter().all(|e| e.is_zero());
                return Ok(Report::new("dmod sol", input).verdict(horizontal));
            }
            match m.truncate(0)?.sol_level0() {
                Ok(sol) => {
                    let vecs: Vec<Vec<String>> = sol.vectors().iter().map(|v| render_vector(v)).collect();
                    Ok(Report::new("dmod sol", input).verdict(true).value(json!(sol.len())).witness(json!(vecs)))
                }
                Err(Error::NotDormant { reason, .. }) => {
                    Ok(Report::new("dmod sol", input).verdict(false).witness(json!({ "reason": reason })))
                }
                Err(e) => Err(e),
            }
        }
        DmodCmd::Dormant { module } => {
            let m = load_module(module)?;
            match m.dormancy() {
                Ok(chain) => {
                    let stages: Vec<Value> = chain
                        .iter()
                        .map(|s| json!(s.vectors().iter().map(|v| render_vector(v)).collect::<Vec<_>>()))
                        .collect();
                    Ok(Report::new("dmod dormant", input).verdict(true).witness(json!({ "stages": stages })))
                }
                Err(Error::NotDormant { stage, reason }) => Ok(Report::new("dmod dormant", input)
                    .verdict(false)
                    .witness(json!({ "stage": stage, "reason": reason }))),
                Err(e) => Err(e),
            }
        }
        DmodCmd::Pullback { chart, level, rank, unit } => {
            let c = chart.build()?;
            let m = DMod::frobenius_pullback(&c, *rank, *level, &c.parse(unit)?)?;
            Ok(Report::new("dmod pullback", input).value(module_json(&m)))
        }
    }
}

fn indigenous_report(file: &CandidateFile, input: Value) -> Result<Report> {
    let report = Report::new("indig check", input);
    if file.delta.is_some() {
        let c = file.build_affine()?;
        let ks = c.candidate().is_indigenous()?;
        let affine = ks && c.affine_check()?;
        return Ok(report.verdict(affine).value(json!({ "indigenous": ks, "affine": affine })));
    }
    let c = file.build()?;
    let ks = c.is_indigenous()?;
    let det = c.ks_matrix()?.det();
    Ok(report.verdict(ks).value(json!({ "indigenous": ks, "ks_det": det.to_string() })))
}

pub fn indig(cmd: &IndigCmd) -> Result<Report> {
    let input = inputs(cmd);
    match cmd {
        IndigCmd::Check { candidate } => indigenous_report(&load_candidate(candidate)?, input),
        IndigCmd::Trivial { chart, level } => {
            let c = chart.build()?;
            let cand = AffineIndigenousCandidate::trivial_on_affine_chart(&c, *level)?;
            let file = serde_json::to_value(CandidateFile::of_affine(&cand)).expect("serializable");
            Ok(Report::new("indig trivial", input).value(file))
        }
        IndigCmd::Twist { candidate, by } => {
            let file = load_candidate(candidate)?;
            let l = load_module(by)?;
            let out = if file.delta.is_some() {
                CandidateFile::of_affine(&file.build_affine()?.twist(&l)?)
            } else {
                CandidateFile::of(&file.build()?.twist(&l)?)
            };
            Ok(Report::new("indig twist", input).value(serde_json::to_value(out).expect("serializable")))
        }
        IndigCmd::Normalized { candidate, theta, bound } => {
            let c = load_candidate(candidate)?.build()?;
            let theta = load_module(theta)?;
            let report = Report::new("indig normalized", input);
            Ok(match c.is_normalized(&theta, *bound)? {
                Normalization::Normalized { gauge } => report.verdict(true).witness(json!({ "gauge": gauge })),
                Normalization::NotNormalized => report.verdict(false),
                Normalization::Inconclusive { bound } => {
                    report.value(json!({ "inconclusive": true, "bound": bound }))
                }
            })
        }
    }
}

pub fn tango(cmd: &TangoCmd) -> Result<Report> {
    let input = inputs(cmd);
    match cmd {
        TangoCmd::Project { chart, level, f } => {
            let c = chart.build()?;
            let b = b_project(&c.parse(f)?, *level)?;
            Ok(Report::new("tango project", input)
                .value(json!({ "class": b.rep().to_string(), "gamma": gamma(&b).to_string() })))
        }
        TangoCmd::Verify { tango } => {
            let t = tango.build()?;
            Ok(Report::new("tango verify", input)
                .verdict(t.verify())
                .value(json!({ "jacobian_det": t.jacobian().det().to_string() })))
        }
        TangoCmd::Truncate { tango, to } => {
            let t = tango.build()?.truncate(*to)?;
            Ok(Report::new("tango truncate", input).value(tango_json(&t)))
        }
        TangoCmd::Dualconn { tango, module } => {
            let report = Report::new("tango dualconn", input);
            let m = match module {
                Some(path) => load_module(path)?,
                None => tango.build()?.dual_connection()?,
            };
            let report = if module.is_none() { report.value(module_json(&m)) } else { report };
            Ok(match dual_affine_check(&m)? {
                DualVerdict::Dual => report.verdict(true),
                DualVerdict::NotCartierKilled { section } => {
                    report.verdict(false).witness(json!({ "section": section }))
                }
                DualVerdict::NotDormant { stage, reason } => {
                    report.verdict(false).witness(json!({ "stage": stage, "reason": reason }))
                }
            })
        }
        TangoCmd::Reconstruct { tango } => {
            let t = tango.build()?;
            let cand = t.to_module()?;
            let ok = cand.candidate().is_indigenous()? && cand.affine_check()?;
            let dormant = t.chart().nvars() != 1 || cand.module().is_dormant()?;
            let mut value = json!({ "candidate": CandidateFile::of_affine(&cand), "dormant": dormant });
            if t.chart().nvars() == 1 {
                let dual = extract_dual_connection(&cand)?;
                value["dual_connection"] = module_json(&dual);
                value["dual_matches"] = json!(dual == t.dual_connection()?);
            }
            Ok(Report::new("tango reconstruct", input).verdict(ok && dormant).value(value))
        }
        TangoCmd::Product { left, right } => {
            let a = from_json::<TangoFile>(&read(left)?)?.build()?;
            let b = from_json::<TangoFile>(&read(right)?)?.build()?;
            let prod = a.product(&b)?;
            Ok(Report::new("tango product", input).verdict(prod.verify()).value(tango_json(&prod)))
        }
        TangoCmd::Kappa { p, level } => {
            let c = Chart::polynomial(*p, &["x"])?;
            let k = kappa_matrix(&c, *level)?;
            let det = k.det();
            Ok(Report::new("tango kappa", input)
                .verdict(det.is_unit())
                .value(json!({ "matrix": render_matrix(&k), "det": det.to_string() })))
        }
        TangoCmd::Filtration { p, level } => {
            let c = Chart::polynomial(*p, &["x"])?;
            let report = Report::new("tango filtration", input);
            Ok(match filtration_check(&c, *level)? {
                None => report.verdict(true),
                Some(FiltrationFailure::SingularKappa) => report.verdict(false).witness(json!("singular kappa")),
                Some(FiltrationFailure::Containment { i, j, r }) => {
                    report.verdict(false).witness(json!({ "containment": { "i": i, "j": j, "r": r } }))
                }
                Some(FiltrationFailure::Graded { i }) => report.verdict(false).witness(json!({ "graded": i })),
            })
        }
    }
}

fn quotient(w: Which) -> Quotient {
    match w {
        Which::Sn => Quotient::Sn,
        Which::Delta => Quotient::Delta,
    }
}

fn parse_tuple(src: &str) -> Result<Vec<Vec<u64>>> {
    serde_json::from_str(src).map_err(|e| Error::Parse(format!("tuple {src:?}: {e}")))
}

pub fn comb(cmd: &CombCmd) -> Result<Report> {
    let input = inputs(cmd);
    let exec = Execution::from_env();
    match cmd {
        CombCmd::Count { tate } => {
            let t = tate.build()?;
            let enumerated = count_b(&t, exec)?;
            let formula = formula_count_b(t.n, t.level, t.p);
            Ok(Report::new("comb count", input).verdict(formula == enumerated.into()).value(json!({
                "enumerated": enumerated,
                "formula": formula.to_string(),
                "gl_order": gl_order(t.n, t.level, t.p).to_string(),
            })))
        }
        CombCmd::Classes { tate, which, check } => {
            let t = tate.build()?;
            let b = enumerate_b(&t, exec)?;
            let reps = match which {
                Which::Sn => sn_classes(&t, &b),
                Which::Delta => delta_classes(&t, &b).into_iter().map(|c| c.rep).collect(),
            };
            let report = Report::new("comb classes", input);
            if let Some(src) = check {
                let tuple = parse_tuple(src)?;
                return Ok(report.verdict(reps.contains(&tuple)));
            }
            Ok(report.value(json!(reps.len())).witness(json!(reps)))
        }
        CombCmd::Ratio { tate } => {
            let t = tate.build()?;
            match quotient_ratio(&t, exec) {
                Ok(r) => Ok(Report::new("comb ratio", input).value(json!(r))),
                Err(Error::RatioViolation { got, expected }) => Ok(Report::new("comb ratio", input)
                    .verdict(false)
                    .witness(json!({ "got": got, "expected": expected }))),
                Err(e) => Err(e),
            }
        }
        CombCmd::Invariants { tate, which, gens, preset } => {
            let t = tate.build()?;
            let action = match preset {
                Some(k) => GroupAction::hyperelliptic(&t, *k)?,
                None if gens.is_empty() => GroupAction::trivial(&t),
                None => {
                    let mats = gens.iter().map(|g| parse_tuple(g)).collect::<Result<Vec<_>>>()?;
                    GroupAction::new(&t, mats, 4096)?
                }
            };
            let fixed = invariant_classes(&action, quotient(*which), exec)?;
            Ok(Report::new("comb invariants", input)
                .verdict(!fixed.is_empty())
                .value(json!({
                    "count": fixed.len(),
                    "group_order": action.order(),
                    "note": "finite-level evidence",
                    "preset_orders": HYPERELLIPTIC_ORDERS,
                }))
                .witness(json!(fixed)))
        }
        CombCmd::Chern { c1sq, c2, surface: name, genus, aff_c1, p, level } => {
            let (c1sq, c2) = match name {
                Some(n) => {
                    let s = surface(n, *genus).ok_or_else(|| Error::Parse(format!("unknown surface {n:?}")))?;
                    (s.c1sq, s.c2)
                }
                None => match (c1sq, c2) {
                    (Some(a), Some(b)) => (*a, *b),
                    _ => return Err(Error::Parse("give --surface or both --c1sq and --c2".into())),
                },
            };
            let mode = match aff_c1 {
                Some(c1) => ChernMode::Aff { c1: *c1 },
                None => ChernMode::Proj,
            };
            let v = chern_obstruction(c1sq, c2, *p, *level, mode);
            let checks: Vec<Value> =
                v.checks.iter().map(|(n, x, m)| json!({ "quantity": n, "value": x, "modulus": m.to_string() })).collect();
            Ok(Report::new("comb chern", input)
                .verdict(!v.obstructed)
                .value(json!({ "obstructed": v.obstructed, "checks": checks })))
        }
        CombCmd::Table { genus } => {
            let rows: Vec<Value> = surface_table(*genus)
                .iter()
                .map(|s| json!({ "class": s.name, "c1sq": s.c1sq, "c2": s.c2, "c1sq_minus_3c2": s.c1sq - 3 * s.c2 }))
                .collect();
            Ok(Report::new("comb table", input).value(json!(rows)))
        }
        CombCmd::ProductChern { g1, g2, p, level } => {
            let (c1sq, c2) = product_chern(*g1, *g2);
            let obstructed = product_obstructed(*g1, *g2, *p, *level);
            Ok(Report::new("comb product-chern", input)
                .verdict(!obstructed)
                .value(json!({ "c1sq": c1sq, "c2": c2, "obstructed": obstructed })))
        }
        CombCmd::GenusCount { p, g } => Ok(Report::new("comb genus-count", input).value(json!({
            "count": genus_count(*p, *g)?,
            "precision_bits": combin::GENUS_PRECISION,
            "tolerance": combin::GENUS_TOLERANCE,
        }))),
    }
}

pub fn orbits(cmd: &OrbitsCmd) -> Result<Report> {
    let input = inputs(cmd);
    match cmd {
        OrbitsCmd::Canon { p, level, f, check } => {
            let c = Chart::polynomial(*p, &["t"])?;
            let f = c.parse(f)?;
            let rep = canonical_rep(&f, *level)?;
            let report = Report::new("orbits canon", input).value(json!(rep.to_string()));
            Ok(if *check { report.verdict(rep == f) } else { report })
        }
        OrbitsCmd::Count { p, level, deg } => {
            let out = count_orbits(*p, *level, *deg, Execution::from_env())?;
            let reps: Vec<String> = out.representatives.iter().map(ToString::to_string).collect();
            Ok(Report::new("orbits count", input).value(json!(out.count)).witness(json!({
                "representatives": reps,
                "closed_form": closed_form_count(*p, *level, *deg).to_string(),
                "free_indices": free_indices(*p, *level, *deg),
                "note": format!("within degree <= {deg}"),
            })))
        }
    }
}
