use std::collections::BTreeMap;
use std::path::Path;

use ptsm_core::approx::{witness_formula, ApproxError};
use ptsm_core::eval::{eval_fo, eval_modal, eval_modal_all, Environment};
use ptsm_core::formula::{
    modal_rank, parse_fo, parse_modal, quantifier_rank, render_fo, render_modal,
    standard_translation, Variable,
};
use ptsm_core::game::{
    certificate_from_json, certificate_to_json, exhaustive_spoiler, verify_certificate, GameError,
    Synthesizer,
};
use ptsm_core::metrics::{behavioural_distance, ChainOptions, DistanceChain, Method, MetricError};
use ptsm_core::rational::{self, Rational};
use ptsm_core::suite::{run_suite, SuiteConfig};
use ptsm_core::system::{
    component_count, disjoint_union, restrict, system_to_json, unravel, StateId, TransitionSystem,
};
use serde_json::{json, Map, Value};

use crate::report::{number, Failure, Inputs};
use crate::{Fault, GameMode, MethodArg, Systems, TransformOp};

pub struct Context {
    pub max_depth: usize,
}

impl Context {
    fn depth(&self, n: usize) -> Result<usize, Failure> {
        if n > self.max_depth {
            return Err(Failure::Input(format!(
                "depth {n} exceeds the cap {} (raise it with --max-depth or PTSM_MAX_DEPTH)",
                self.max_depth
            )));
        }
        Ok(n)
    }
}

type Outcome = Result<Value, Failure>;

fn metric_failure(e: MetricError) -> Failure {
    match e {
        MetricError::Solver(_) => Failure::Internal(e.to_string()),
        e => Failure::input(e),
    }
}

fn game_failure(e: GameError) -> Failure {
    match e {
        GameError::Metric(m) => metric_failure(m),
        e @ GameError::NotWinnable { .. } => Failure::Property(e.to_string(), Value::Null),
        e => Failure::input(e),
    }
}

fn approx_failure(e: ApproxError) -> Failure {
    match e {
        ApproxError::Metric(m) => metric_failure(m),
        e @ ApproxError::Internal(_) => Failure::Internal(e.to_string()),
        e => Failure::input(e),
    }
}

fn parse_rational(what: &str, text: &str) -> Result<Rational, Failure> {
    rational::parse(text).map_err(|e| Failure::Input(format!("{what}: {e}")))
}

fn load_pair(
    inputs: &mut Inputs,
    systems: &Systems,
) -> Result<(TransitionSystem, TransitionSystem), Failure> {
    let a = inputs.system(&systems.system)?;
    let b = match &systems.system_b {
        Some(p) => inputs.system(p)?,
        None => a.clone(),
    };
    a.same_atoms(&b).map_err(Failure::input)?;
    Ok((a, b))
}

fn lookup(sys: &TransitionSystem, label: &str) -> Result<StateId, Failure> {
    sys.lookup(label).map_err(Failure::input)
}

fn write_json(path: &Path, v: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).expect("value serializes");
    std::fs::write(path, text + "\n")
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

pub fn validate(inputs: &mut Inputs, path: &Path) -> Outcome {
    let sys = inputs.system(path)?;
    let terminating = sys.states().filter(|s| sys.is_terminating(*s)).count();
    Ok(json!({
        "valid": true,
        "states": sys.state_count(),
        "atoms": sys.atoms(),
        "terminating": terminating,
        "components": component_count(&sys),
    }))
}

pub fn eval(
    inputs: &mut Inputs,
    path: &Path,
    modal: Option<String>,
    fo: Option<String>,
    state: Option<String>,
    bindings: &[String],
) -> Outcome {
    let sys = inputs.system(path)?;
    if let Some(text) = modal {
        let phi = parse_modal(&text).map_err(Failure::input)?;
        let formula = render_modal(&phi);
        let rank = modal_rank(&phi);
        return match state {
            Some(label) => {
                let s = lookup(&sys, &label)?;
                let v = eval_modal(&sys, &phi, s).map_err(Failure::input)?;
                Ok(json!({
                    "formula": formula,
                    "rank": rank,
                    "state": label,
                    "value": rational::format(&v),
                    "decimal": rational::to_decimal(&v, 6),
                }))
            }
            None => {
                let values = eval_modal_all(&sys, &phi).map_err(Failure::input)?;
                let by_state: Map<String, Value> = sys
                    .states()
                    .map(|s| (sys.label(s).to_string(), number(&values[s.0])))
                    .collect();
                Ok(json!({ "formula": formula, "rank": rank, "values": by_state }))
            }
        };
    }
    let text = fo.expect("clap requires --modal or --fo");
    let parsed = parse_fo(&text).map_err(Failure::input)?;
    let mut env = Environment::new();
    for b in bindings {
        let (var, label) = b
            .split_once('=')
            .ok_or_else(|| Failure::Input(format!("binding {b:?} is not VAR=LABEL")))?;
        env.insert(Variable::new(var.trim()), lookup(&sys, label.trim())?);
    }
    if let Some(label) = state {
        match parsed.free.as_slice() {
            [x] => {
                env.insert(x.clone(), lookup(&sys, &label)?);
            }
            _ => {
                return Err(Failure::Input(
                    "--state needs exactly one free variable; use --env".into(),
                ))
            }
        }
    }
    let v = eval_fo(&sys, &parsed.formula, &env).map_err(Failure::input)?;
    let env_json: Map<String, Value> = env
        .iter()
        .map(|(x, s)| (x.name().to_string(), json!(sys.label(*s))))
        .collect();
    Ok(json!({
        "formula": render_fo(&parsed.formula),
        "rank": quantifier_rank(&parsed.formula),
        "env": env_json,
        "value": rational::format(&v),
        "decimal": rational::to_decimal(&v, 6),
    }))
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::W => "W",
        MethodArg::K => "K",
        MethodArg::G => "G",
    }
}

fn chain_for(
    sa: &TransitionSystem,
    sb: &TransitionSystem,
    n: usize,
    method: MethodArg,
) -> Result<DistanceChain, Failure> {
    match method {
        MethodArg::W => {
            behavioural_distance(sa, sb, n, Method::Wasserstein).map_err(metric_failure)
        }
        MethodArg::K => {
            behavioural_distance(sa, sb, n, Method::Kantorovich).map_err(metric_failure)
        }
        MethodArg::G => Synthesizer::new(sa, sb, n)
            .map(|s| s.chain().clone())
            .map_err(game_failure),
    }
}

fn selected_pairs(
    sa: &TransitionSystem,
    sb: &TransitionSystem,
    same: bool,
    pairs: &[String],
) -> Result<Vec<(StateId, StateId)>, Failure> {
    if pairs.is_empty() {
        return Ok(sa
            .states()
            .flat_map(|a| sb.states().map(move |b| (a, b)))
            .filter(|(a, b)| !same || a < b)
            .collect());
    }
    pairs
        .iter()
        .map(|p| {
            let (x, y) = p
                .split_once(',')
                .ok_or_else(|| Failure::Input(format!("pair {p:?} is not A,B")))?;
            Ok((lookup(sa, x.trim())?, lookup(sb, y.trim())?))
        })
        .collect()
}

fn matrix(
    chain: &DistanceChain,
    m: usize,
    sa: &TransitionSystem,
    sb: &TransitionSystem,
    pairs: &[(StateId, StateId)],
) -> (Value, Value) {
    let mut exact = Map::new();
    let mut decimal = Map::new();
    for &(a, b) in pairs {
        let key = format!("{}|{}", sa.label(a), sb.label(b));
        let v = chain.between(m, a, b);
        exact.insert(key.clone(), json!(rational::format(v)));
        decimal.insert(key, json!(rational::to_decimal(v, 6)));
    }
    (Value::Object(exact), Value::Object(decimal))
}

pub fn distance(
    ctx: &Context,
    inputs: &mut Inputs,
    systems: &Systems,
    depth: usize,
    method: MethodArg,
    pairs: &[String],
    assert_coincide: bool,
) -> Outcome {
    let n = ctx.depth(depth)?;
    let (sa, sb) = load_pair(inputs, systems)?;
    let pairs = selected_pairs(&sa, &sb, systems.system_b.is_none(), pairs)?;
    let chain = chain_for(&sa, &sb, n, method)?;
    let (top, top_dec) = matrix(&chain, n, &sa, &sb, &pairs);
    let levels: Vec<Value> = (0..=n)
        .map(|m| {
            let (exact, _) = matrix(&chain, m, &sa, &sb, &pairs);
            json!({ "depth": m, "matrix": exact })
        })
        .collect();
    let mut out = json!({
        "depth": n,
        "method": method_name(method),
        "matrix": top,
        "decimal": top_dec,
        "chain": levels,
    });
    if matches!(method, MethodArg::G) {
        let synth = Synthesizer::new(&sa, &sb, n).map_err(game_failure)?;
        let mut certs = Map::new();
        for &(a, b) in &pairs {
            let cert = synth
                .synthesize(a, b, n, synth.distance(a, b, n))
                .map_err(game_failure)?;
            let ok = verify_certificate(&cert, &sa, &sb).ok;
            certs.insert(format!("{}|{}", sa.label(a), sb.label(b)), json!(ok));
            if !ok {
                return Err(Failure::Internal(format!(
                    "certificate at the game value of ({}, {}) fails verification",
                    sa.label(a),
                    sb.label(b)
                )));
            }
        }
        out["certificates"] = Value::Object(certs);
    }
    if assert_coincide {
        let mut mismatches = Vec::new();
        let chains: Vec<(MethodArg, DistanceChain)> = [MethodArg::W, MethodArg::K, MethodArg::G]
            .into_iter()
            .map(|m| chain_for(&sa, &sb, n, m).map(|c| (m, c)))
            .collect::<Result<_, _>>()?;
        let (_, reference) = &chains[0];
        for (m, other) in &chains[1..] {
            for level in 0..=n {
                if reference.levels[level] != other.levels[level] {
                    mismatches.push(json!({ "method": method_name(*m), "depth": level }));
                }
            }
        }
        out["coincide"] = json!(mismatches.is_empty());
        if !mismatches.is_empty() {
            out["mismatches"] = Value::Array(mismatches);
            return Err(Failure::Property("methods disagree".into(), out));
        }
    }
    Ok(out)
}

pub fn witness(
    ctx: &Context,
    inputs: &mut Inputs,
    systems: &Systems,
    a: &str,
    b: &str,
    depth: usize,
    delta: &str,
) -> Outcome {
    let n = ctx.depth(depth)?;
    let delta = parse_rational("delta", delta)?;
    let (sa, sb) = load_pair(inputs, systems)?;
    let (x, y) = (lookup(&sa, a)?, lookup(&sb, b)?);
    let phi = witness_formula(&sa, &sb, x, y, n, &delta).map_err(approx_failure)?;
    let d = behavioural_distance(&sa, &sb, n, Method::Wasserstein)
        .map_err(metric_failure)?
        .between(n, x, y)
        .clone();
    let va = eval_modal(&sa, &phi, x).map_err(Failure::input)?;
    let vb = eval_modal(&sb, &phi, y).map_err(Failure::input)?;
    let gap = rational::abs_diff(&va, &vb);
    if gap < &d - &delta || gap > d {
        return Err(Failure::Internal(format!(
            "witness gap {gap} outside [{}, {d}]",
            &d - &delta
        )));
    }
    Ok(json!({
        "formula": render_modal(&phi),
        "rank": modal_rank(&phi),
        "a": a,
        "b": b,
        "depth": n,
        "delta": rational::format(&delta),
        "value_a": number(&va),
        "value_b": number(&vb),
        "gap": number(&gap),
        "distance": number(&d),
    }))
}

pub fn game(ctx: &Context, inputs: &mut Inputs, mode: GameMode) -> Outcome {
    match mode {
        GameMode::Synth {
            systems,
            a,
            b,
            depth,
            epsilon,
            out,
        } => {
            let n = ctx.depth(depth)?;
            let eps = parse_rational("epsilon", &epsilon)?;
            let (sa, sb) = load_pair(inputs, &systems)?;
            let (x, y) = (lookup(&sa, &a)?, lookup(&sb, &b)?);
            let synth = Synthesizer::new(&sa, &sb, n).map_err(game_failure)?;
            let d = synth.distance(x, y, n).clone();
            let cert = match synth.synthesize(x, y, n, &eps) {
                Ok(c) => c,
                Err(e @ GameError::NotWinnable { .. }) => {
                    return Err(Failure::Property(
                        e.to_string(),
                        json!({ "epsilon": number(&eps), "distance": number(&d), "winnable": false }),
                    ))
                }
                Err(e) => return Err(game_failure(e)),
            };
            let cert_json = certificate_to_json(&cert, &sa, &sb);
            if let Some(path) = out {
                write_json(&path, &cert_json)?;
            }
            Ok(json!({
                "epsilon": number(&eps),
                "distance": number(&d),
                "winnable": true,
                "nodes": cert.node_count(),
                "certificate": cert_json,
            }))
        }
        GameMode::Verify {
            systems,
            certificate,
        } => {
            let (sa, sb) = load_pair(inputs, &systems)?;
            let text = inputs.read(&certificate)?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| Failure::Input(format!("{}: {e}", certificate.display())))?;
            let cert = certificate_from_json(&v, &sa, &sb).map_err(game_failure)?;
            let verdict = verify_certificate(&cert, &sa, &sb);
            let spoiler = exhaustive_spoiler(&cert, &sa, &sb);
            if verdict.ok != spoiler {
                return Err(Failure::Internal(
                    "rule checker and play simulator disagree".into(),
                ));
            }
            let mut out = json!({
                "valid": verdict.ok,
                "nodes": cert.node_count(),
                "epsilon": number(&cert.root.epsilon),
                "rounds": cert.root.rounds_left,
            });
            match verdict.violation {
                None => Ok(out),
                Some(v) => {
                    let path: Vec<Value> = v
                        .path
                        .iter()
                        .map(|(x, y)| json!([sa.label(*x), sb.label(*y)]))
                        .collect();
                    out["violation"] = json!({
                        "path": path,
                        "clause": format!("{:?}", v.clause),
                        "detail": v.detail,
                    });
                    Err(Failure::Property(
                        format!("certificate rejected: {}", v.detail),
                        out,
                    ))
                }
            }
        }
        GameMode::Value {
            systems,
            a,
            b,
            depth,
        } => {
            let n = ctx.depth(depth)?;
            let (sa, sb) = load_pair(inputs, &systems)?;
            let (x, y) = (lookup(&sa, &a)?, lookup(&sb, &b)?);
            let synth = Synthesizer::new(&sa, &sb, n).map_err(game_failure)?;
            let by_depth: Vec<Value> = (0..=n).map(|m| number(synth.distance(x, y, m))).collect();
            Ok(json!({
                "a": a,
                "b": b,
                "depth": n,
                "value": number(synth.distance(x, y, n)),
                "by_depth": by_depth,
            }))
        }
    }
}

pub fn transform(ctx: &Context, inputs: &mut Inputs, op: TransformOp) -> Outcome {
    let emit = |sys: &TransitionSystem, out: Option<&Path>| -> Result<Value, Failure> {
        let v = system_to_json(sys);
        if let Some(p) = out {
            write_json(p, &v)?;
        }
        Ok(v)
    };
    match op {
        TransformOp::Restrict {
            system,
            state,
            radius,
            out,
        } => {
            let sys = inputs.system(&system)?;
            let a = lookup(&sys, &state)?;
            let r = restrict(&sys, a, radius).map_err(Failure::input)?;
            Ok(json!({
                "center": r.system.label(r.center),
                "states": r.system.state_count(),
                "system": emit(&r.system, out.as_deref())?,
            }))
        }
        TransformOp::Unravel {
            system,
            state,
            depth,
            out,
        } => {
            let n = ctx.depth(depth)?;
            let sys = inputs.system(&system)?;
            let a = lookup(&sys, &state)?;
            let u = unravel(&sys, a, n).map_err(Failure::input)?;
            Ok(json!({
                "root": u.system.label(u.root),
                "states": u.system.state_count(),
                "system": emit(&u.system, out.as_deref())?,
            }))
        }
        TransformOp::Union {
            system,
            system_b,
            out,
        } => {
            let a = inputs.system(&system)?;
            let b = inputs.system(&system_b)?;
            let u = disjoint_union(&[&a, &b]).map_err(Failure::input)?;
            Ok(json!({
                "offsets": u.offsets,
                "states": u.system.state_count(),
                "system": emit(&u.system, out.as_deref())?,
            }))
        }
        TransformOp::Translate { modal, var } => {
            let phi = parse_modal(&modal).map_err(Failure::input)?;
            let st = standard_translation(&phi, &Variable::new(&var));
            Ok(json!({
                "modal": render_modal(&phi),
                "formula": render_fo(&st),
                "free": [var],
                "rank": quantifier_rank(&st),
            }))
        }
    }
}

pub fn suite(
    ctx: &Context,
    seed: u64,
    max_states: usize,
    max_atoms: usize,
    depth: usize,
    trials: usize,
    fault: Option<Fault>,
) -> Outcome {
    let depth = ctx.depth(depth)?;
    if max_states == 0 || max_atoms == 0 {
        return Err(Failure::Input(
            "--max-states and --max-atoms must be positive".into(),
        ));
    }
    let cfg = SuiteConfig {
        seed,
        max_states,
        max_atoms,
        depth,
        trials,
        faults: ChainOptions {
            skip_atom_term: matches!(fault, Some(Fault::SkipAtomTerm)),
        },
        ..SuiteConfig::default()
    };
    let results = run_suite(&cfg);
    let mut warnings = Vec::new();
    if trials == 0 {
        warnings.push("trials = 0: the coincidence property holds vacuously".to_string());
    }
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name)
        .collect();
    let mut config = BTreeMap::new();
    config.insert("max_states", max_states);
    config.insert("max_atoms", max_atoms);
    config.insert("depth", depth);
    config.insert("trials", trials);
    let out = json!({
        "config": config,
        "fault": fault.map(|_| "skip-atom-term"),
        "passed": failed.is_empty(),
        "properties": results.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
        "warnings": warnings,
    });
    if failed.is_empty() {
        Ok(out)
    } else {
        Err(Failure::Property(
            format!("properties failed: {}", failed.join(", ")),
            out,
        ))
    }
}
