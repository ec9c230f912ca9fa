//! The `topos-forge` command line.
//!
//! Exit codes: 0 success, 1 parse/validation/usage failure, 2 unsuitable
//! context, 3 failed Łoś hypothesis, 4 Łoś disagreement.

use crate::error::{Error, Report, Result};
use crate::fincat::{bases, FinCategory};
use crate::io::Workspace;
use crate::semantics::{
    forces, kj_rule_check, local_character_check, monotonicity_check, CheckLimits, Evaluator, GeneralizedElement,
};
use crate::sigma::{structure_product, Context, Structure};
use crate::subobj::{omega, sub_enumerate, DEFAULT_SUB_CAP};
use crate::syntax::{parse_context, parse_formula, Formula};
use crate::ultra::{filtered_product, los_sweep, LosOptions, LosReport};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

pub const DEFAULT_MAX_DEPTH: usize = 16;

pub const EXIT_INVALID: i32 = 1;
pub const EXIT_UNSUITABLE: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_DISAGREE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "topos-forge", version, about = "First-order logic in finite presheaf topoi")]
pub struct Cli {
    /// Emit JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate workspace files.
    Check(Files),
    /// Print the merged workspace as canonical JSON (or DSL with --dsl).
    Compile {
        #[arg(long)]
        dsl: bool,
        #[command(flatten)]
        files: Files,
    },
    /// Interpret a formula in a structure, stage by stage.
    Eval {
        #[command(flatten)]
        target: FormulaTarget,
        #[command(flatten)]
        budget: Budget,
        #[command(flatten)]
        files: Files,
    },
    /// Decide forcing at a generalized element, optionally checking the forcing rules.
    Force {
        #[command(flatten)]
        target: FormulaTarget,
        /// `identity`, `sub#k`, or `OBJ:ID` for the representable at an element.
        #[arg(long, default_value = "identity")]
        alpha: String,
        /// Also run the rule, monotonicity and local-character checks.
        #[arg(long)]
        rules: bool,
        #[command(flatten)]
        budget: Budget,
        #[command(flatten)]
        files: Files,
    },
    /// Check the Łoś equivalence on a filtered product.
    Los {
        #[arg(long)]
        filter: String,
        /// Named formulas to check; all workspace formulas by default.
        #[arg(long = "formula")]
        formulas: Vec<String>,
        /// Sweep every subobject inclusion α instead of the identity.
        #[arg(long)]
        all_alphas: bool,
        /// Run even when the hypotheses fail, tagging output as advisory.
        #[arg(long)]
        advisory: bool,
        #[command(flatten)]
        budget: Budget,
        #[command(flatten)]
        files: Files,
    },
    /// Print the subobject classifier of a base.
    Omega {
        /// Base category; every base used by the workspace by default.
        #[arg(long)]
        base: Option<String>,
        #[command(flatten)]
        files: Files,
    },
    /// Describe the product of a family, or its filtered product.
    Product {
        #[arg(long, required_unless_present = "filter")]
        family: Option<String>,
        #[arg(long)]
        filter: Option<String>,
        #[command(flatten)]
        files: Files,
    },
}

#[derive(Debug, Args)]
pub struct Files {
    /// Workspace files (`.json`, anything else is read as DSL).
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FormulaTarget {
    #[arg(long)]
    pub structure: String,
    /// A named workspace formula.
    #[arg(long, conflicts_with = "text")]
    pub formula: Option<String>,
    /// Formula text.
    #[arg(long)]
    pub text: Option<String>,
    /// Context such as `(x:node, y:node)`; overrides a named formula's.
    #[arg(long)]
    pub context: Option<String>,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct Budget {
    #[arg(long, default_value_t = DEFAULT_SUB_CAP)]
    pub max_subobjects: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    pub max_depth: usize,
}

impl Budget {
    fn limits(&self) -> CheckLimits {
        CheckLimits {
            max_subobjects: self.max_subobjects,
            ..CheckLimits::default()
        }
    }
}

/// A failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnsuitableContext { .. } => EXIT_UNSUITABLE,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = std::result::Result<i32, Failure>;

struct Io<'a> {
    json: bool,
    out: &'a mut dyn Write,
}

impl Io<'_> {
    fn line(&mut self, s: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", s.as_ref());
    }

    fn value(&mut self, v: &Value) {
        self.line(serde_json::to_string(v).expect("serializable"));
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    let json = cli.json;
    let mut io = Io { json, out };
    match dispatch(cli.command, &mut io) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            if json {
                io.value(&json!({ "error": f.message, "exit": f.code }));
            }
            f.code
        }
    }
}

fn load(files: &Files) -> std::result::Result<(Workspace, Report), Failure> {
    Ok(Workspace::load(&files.files)?)
}

/// Loads and insists on a clean validation report.
fn load_valid(files: &Files) -> std::result::Result<Workspace, Failure> {
    let (ws, report) = load(files)?;
    if report.is_empty() {
        Ok(ws)
    } else {
        Err(Failure {
            code: EXIT_INVALID,
            message: format!(
                "workspace is invalid ({} violation(s)); run `check` for details: {}",
                report.len(),
                report[0]
            ),
        })
    }
}

fn dispatch(cmd: Command, io: &mut Io) -> Outcome {
    match cmd {
        Command::Check(files) => cmd_check(&files, io),
        Command::Compile { dsl, files } => {
            let (ws, _) = load(&files)?;
            if dsl {
                let _ = write!(io.out, "{}", crate::dsl::render(&ws.doc));
            } else {
                io.line(ws.doc.to_json());
            }
            Ok(0)
        }
        Command::Eval { target, budget, files } => cmd_eval(&load_valid(&files)?, &target, budget, io),
        Command::Force {
            target,
            alpha,
            rules,
            budget,
            files,
        } => cmd_force(&load_valid(&files)?, &target, &alpha, rules, budget, io),
        Command::Los {
            filter,
            formulas,
            all_alphas,
            advisory,
            budget,
            files,
        } => cmd_los(&load_valid(&files)?, &filter, &formulas, all_alphas, advisory, budget, io),
        Command::Omega { base, files } => {
            let ws = if files.files.is_empty() { Workspace::default() } else { load_valid(&files)? };
            cmd_omega(&ws, base.as_deref(), io)
        }
        Command::Product { family, filter, files } => cmd_product(&load_valid(&files)?, family, filter, io),
    }
}

fn cmd_check(files: &Files, io: &mut Io) -> Outcome {
    let (ws, report) = load(files)?;
    let counts = json!({
        "categories": ws.categories.len(),
        "presheaves": ws.presheaves.len(),
        "signatures": ws.signatures.len(),
        "structures": ws.structures.len(),
        "formulas": ws.formulas.len(),
        "families": ws.families.len(),
        "filters": ws.filters.len(),
    });
    if io.json {
        io.value(&json!({ "valid": report.is_empty(), "entities": counts, "violations": report }));
    } else if report.is_empty() {
        io.line(format!("ok: {counts}"));
    } else {
        for v in &report {
            io.line(v.to_string());
        }
    }
    Ok(if report.is_empty() { 0 } else { EXIT_INVALID })
}

fn resolve_formula(ws: &Workspace, t: &FormulaTarget, max_depth: usize) -> Result<(Context, Formula)> {
    let (mut ctx, phi) = match (&t.formula, &t.text) {
        (Some(name), _) => ws.formula(name)?.clone(),
        (None, Some(text)) => (Context::empty(), parse_formula(text)?),
        (None, None) => return Err(Error::precondition("give --formula NAME or --text FORMULA")),
    };
    if let Some(c) = &t.context {
        ctx = parse_context(c)?;
    }
    check_depth(&phi, max_depth)?;
    Ok((ctx, phi))
}

fn check_depth(phi: &Formula, max: usize) -> Result<()> {
    if phi.depth() > max {
        return Err(Error::CapExceeded {
            cap: max,
            what: "levels of formula depth",
        });
    }
    Ok(())
}

fn cmd_eval(ws: &Workspace, t: &FormulaTarget, budget: Budget, io: &mut Io) -> Outcome {
    let m = ws.structure(&t.structure)?;
    let (ctx, phi) = resolve_formula(ws, t, budget.max_depth)?;
    let eval = Evaluator::global();
    let s = eval.interp_formula(m, &ctx, &phi)?;
    let models = s.is_top();
    let stages = s.to_named();
    if io.json {
        io.value(&json!({
            "structure": t.structure,
            "context": ctx.to_string(),
            "formula": phi.to_string(),
            "stages": stages,
            "models": models,
        }));
    } else {
        io.line(format!("{{{} | {}}} in {}", ctx, phi, t.structure));
        for (obj, elems) in &stages {
            io.line(format!("  {obj}: {{{}}}", elems.join(", ")));
        }
        io.line(format!("models: {models}"));
    }
    Ok(0)
}

fn pick_alpha(m: &Structure, ctx: &Context, spec: &str, cap: usize) -> Result<GeneralizedElement> {
    if spec == "identity" {
        return GeneralizedElement::identity(m, ctx.clone());
    }
    let prod = Evaluator::global().context_object(m, ctx)?;
    if let Some(k) = spec.strip_prefix("sub#") {
        let k: usize = k.parse().map_err(|_| Error::precondition(format!("bad α `{spec}`")))?;
        let lattice = sub_enumerate(&prod.apex, cap)?;
        let s = lattice
            .elements
            .get(k)
            .ok_or_else(|| Error::precondition(format!("α `{spec}` is out of range ({} subobjects)", lattice.len())))?;
        return Ok(GeneralizedElement::from_subobject(ctx.clone(), s));
    }
    let (obj, id) = spec
        .split_once(':')
        .ok_or_else(|| Error::precondition(format!("bad α `{spec}`; use identity, sub#k or OBJ:ID")))?;
    let base = m.base();
    let c = base.object_index(obj).ok_or_else(|| Error::unknown("object", obj))?;
    let e = prod
        .apex
        .element_index(c, id)
        .ok_or_else(|| Error::unknown("context element", id))?;
    GeneralizedElement::new(m, ctx.clone(), crate::fincat::yoneda_map(&prod.apex, c, e))
}

fn cmd_force(ws: &Workspace, t: &FormulaTarget, alpha: &str, rules: bool, budget: Budget, io: &mut Io) -> Outcome {
    let m = ws.structure(&t.structure)?;
    let (ctx, phi) = resolve_formula(ws, t, budget.max_depth)?;
    let a = pick_alpha(m, &ctx, alpha, budget.max_subobjects)?;
    let judgment = forces(m, &a, &phi)?;
    let mut out = judgment.to_json();
    out["alpha"] = json!(alpha);
    let mut ok = true;
    if rules {
        let rule = kj_rule_check(m, &a, &phi, budget.limits())?;
        let mono = monotonicity_check(m, &a, &phi, budget.limits())?;
        let local = local_character_check(m, &a, &phi)?;
        ok = rule.holds() && mono && local;
        out["rules"] = json!({
            "rule": rule.rule,
            "forward": rule.forward,
            "backward": rule.backward,
            "witnesses": rule.witnesses,
            "monotone": mono,
            "localCharacter": local,
        });
    }
    if io.json {
        io.value(&out);
    } else {
        io.line(format!("{} forces {} . {}: {}", alpha, ctx, phi, judgment.verdict));
        if let Some(c) = &judgment.counterexample {
            io.line(format!("  counterexample at {}: {} -> {}", c.stage, c.element, c.image));
        }
        if rules {
            io.line(format!("  rules: {}", out["rules"]));
        }
    }
    Ok(if ok { 0 } else { EXIT_INVALID })
}

#[allow(clippy::too_many_arguments)]
fn cmd_los(
    ws: &Workspace,
    filter: &str,
    names: &[String],
    all_alphas: bool,
    advisory: bool,
    budget: Budget,
    io: &mut Io,
) -> Outcome {
    let (family_name, f) = ws.filter(filter)?;
    let family = ws.family(family_name)?;
    if !f.is_ultrafilter() {
        return Err(Failure {
            code: EXIT_HYPOTHESIS,
            message: format!("hypothesis `ultrafilter` failed: filter `{filter}` is not an ultrafilter"),
        });
    }
    let fp = filtered_product(f, family)?;
    let failed: Vec<String> = fp
        .projections_epi()
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(j, _)| j)
        .collect();
    if !failed.is_empty() && !advisory {
        return Err(Failure {
            code: EXIT_HYPOTHESIS,
            message: format!(
                "hypothesis `epi` failed: projections onto {} are not epimorphisms",
                failed.join(", ")
            ),
        });
    }
    let sig = fp.structure.sig().clone();
    let mut cases = Vec::new();
    if names.is_empty() {
        for (name, (ctx, phi)) in &ws.formulas {
            if phi.prepare(&sig, ctx).is_ok() {
                cases.push((name.clone(), ctx.clone(), phi.clone()));
            }
        }
    } else {
        for name in names {
            let (ctx, phi) = ws.formula(name)?;
            phi.prepare(&sig, ctx)?;
            cases.push((name.clone(), ctx.clone(), phi.clone()));
        }
    }
    for (_, _, phi) in &cases {
        check_depth(phi, budget.max_depth)?;
    }
    let opts = LosOptions {
        limits: budget.limits(),
        enforce_hypotheses: !advisory,
    };
    let mut reports: Vec<(String, LosReport)> = Vec::new();
    for (name, ctx, phi) in &cases {
        let rs = los_sweep(&fp, &[(ctx.clone(), phi.clone())], all_alphas, opts)?;
        reports.extend(rs.into_iter().map(|r| (name.clone(), r)));
    }
    let agree = reports.iter().filter(|(_, r)| r.agree).count();
    let witnesses = reports.iter().all(|(_, r)| r.witnesses.hold());
    let tag = !failed.is_empty();
    for (name, r) in &reports {
        if io.json {
            let mut v = r.to_json();
            v["name"] = json!(name);
            if tag {
                v["advisory"] = json!(true);
            }
            io.value(&v);
        } else {
            io.line(format!(
                "{}{} {} [{}] {} : lhs={} rhs={{{}}} inF={}",
                if tag { "advisory " } else { "" },
                if r.agree { "agree" } else { "DISAGREE" },
                name,
                r.alpha,
                r.formula,
                r.lhs,
                r.rhs_set.join(","),
                r.rhs_in_f
            ));
        }
    }
    let summary = json!({
        "summary": {
            "filter": filter,
            "family": family_name,
            "reports": reports.len(),
            "agree": agree,
            "disagree": reports.len() - agree,
            "witnesses": witnesses,
            "advisory": tag,
            "failedHypotheses": failed,
        }
    });
    if io.json {
        io.value(&summary);
    } else {
        io.line(format!("{agree}/{} agree", reports.len()));
    }
    Ok(if agree == reports.len() { 0 } else { EXIT_DISAGREE })
}

fn used_bases(ws: &Workspace) -> Vec<(String, Arc<FinCategory>)> {
    let mut out: BTreeMap<String, Arc<FinCategory>> =
        ws.categories.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let referenced = ws
        .doc
        .presheaves
        .values()
        .map(|p| &p.base)
        .chain(ws.doc.structures.values().map(|s| &s.base));
    for name in referenced {
        if let Some(b) = bases::by_name(name) {
            out.entry(name.clone()).or_insert(b);
        }
    }
    out.into_iter().collect()
}

fn cmd_omega(ws: &Workspace, base: Option<&str>, io: &mut Io) -> Outcome {
    let targets = match base {
        Some(name) => vec![(name.to_string(), ws.base(name)?)],
        None => used_bases(ws),
    };
    if targets.is_empty() {
        return Err(Error::precondition("no base category: pass --base or a workspace").into());
    }
    for (name, b) in targets {
        let om = omega(&b)?;
        let sieves: BTreeMap<&str, &[String]> = (0..b.n_objects())
            .map(|c| (b.object_name(c), om.presheaf.carrier(c)))
            .collect();
        if io.json {
            io.value(&json!({ "base": name, "objects": b.objects(), "sizes": om.sizes(), "sieves": sieves }));
        } else {
            io.line(format!("Ω over {name}: sizes {:?}", om.sizes()));
            for c in 0..b.n_objects() {
                io.line(format!("  {}: {}", b.object_name(c), om.presheaf.carrier(c).join(" ")));
            }
        }
    }
    Ok(0)
}

fn sort_sizes(m: &Structure) -> BTreeMap<String, BTreeMap<String, usize>> {
    let base = m.base();
    m.sorts()
        .iter()
        .map(|(s, p)| {
            let sizes = (0..base.n_objects()).map(|c| (base.object_name(c).to_string(), p.size(c))).collect();
            (s.clone(), sizes)
        })
        .collect()
}

fn cmd_product(ws: &Workspace, family: Option<String>, filter: Option<String>, io: &mut Io) -> Outcome {
    let out = match filter {
        None => {
            let name = family.expect("clap requires a family without a filter");
            let fam = ws.family(&name)?;
            let p = structure_product(&fam.members)?;
            json!({
                "family": name,
                "labels": fam.labels,
                "digest": p.structure.digest(),
                "sorts": sort_sizes(&p.structure),
            })
        }
        Some(u) => {
            let (fam_name, f) = ws.filter(&u)?;
            if family.as_ref().is_some_and(|n| n != fam_name) {
                return Err(Error::precondition(format!("filter `{u}` lives on family `{fam_name}`")).into());
            }
            let fp = filtered_product(f, ws.family(fam_name)?)?;
            let comparison = if f.is_ultrafilter() {
                Some(fp.comparison()?.is_iso())
            } else {
                None
            };
            let epi: BTreeMap<String, bool> = fp.projections_epi().into_iter().collect();
            json!({
                "family": fam_name,
                "filter": u,
                "members": f.member_names(),
                "ultrafilter": f.is_ultrafilter(),
                "stages": (0..fp.stages.len()).map(|k| fp.stage_name(k)).collect::<Vec<_>>(),
                "sorts": sort_sizes(&fp.structure),
                "digest": fp.structure.digest(),
                "cocone": fp.cocone_report(),
                "projectionsEpi": epi,
                "comparisonIso": comparison,
            })
        }
    };
    if io.json {
        io.value(&out);
    } else {
        io.line(serde_json::to_string_pretty(&out).expect("serializable"));
    }
    Ok(0)
}

/// Applies `TOPOS_FORGE_THREADS` to the global rayon pool.
pub fn configure_threads() {
    if let Some(n) = std::env::var("TOPOS_FORGE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}
