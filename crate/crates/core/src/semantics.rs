//! Interpretation of terms and formulas as subobjects, Kripke-Joyal forcing,
//! a stage-wise forcing evaluator, and checks of the forcing rules.

use crate::error::{Error, Result};
use crate::fincat::{
    enumerate_homs, equalizer, product, representable_cover, yoneda_map, Presheaf, PresheafMap, Product,
};
use crate::sigma::{context_object, Context, Structure};
use crate::subobj::{base_change, exists_along, forall_along, heyting, sub_enumerate, HeytingOp, Subfunctor};
use crate::syntax::{Formula, Term};
use dashmap::DashMap;
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

/// Memoizing subobject evaluator, keyed by structure digest.
#[derive(Default)]
pub struct Evaluator {
    memo: DashMap<(String, Context, Formula), Subfunctor>,
    contexts: DashMap<(String, Context), Product>,
}

impl Evaluator {
    pub fn new() -> Self {
        Self::default()
    }

    /// The process-wide evaluator used by the free functions of this module.
    pub fn global() -> &'static Evaluator {
        static GLOBAL: OnceLock<Evaluator> = OnceLock::new();
        GLOBAL.get_or_init(Evaluator::new)
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    pub fn clear(&self) {
        self.memo.clear();
        self.contexts.clear();
    }

    pub fn context_object(&self, m: &Structure, ctx: &Context) -> Result<Product> {
        let key = (m.digest().to_string(), ctx.clone());
        if let Some(p) = self.contexts.get(&key) {
            return Ok(p.clone());
        }
        let p = context_object(m, ctx)?;
        self.contexts.insert(key, p.clone());
        Ok(p)
    }

    /// `π: M_{x⃗y…} → M_x⃗` onto the leading coordinates.
    pub fn projection(&self, m: &Structure, ctx: &Context, ext: &Context) -> Result<PresheafMap> {
        let (p, q) = (self.context_object(m, ctx)?, self.context_object(m, ext)?);
        p.pairing(&q.apex, &q.legs[..ctx.len()])
    }

    pub fn interp_term(&self, m: &Structure, ctx: &Context, t: &Term) -> Result<PresheafMap> {
        let prod = self.context_object(m, ctx)?;
        term_map(m, &prod, ctx, t)
    }

    pub fn interp_formula(&self, m: &Structure, ctx: &Context, phi: &Formula) -> Result<Subfunctor> {
        let phi = phi.prepare(m.sig(), ctx)?;
        self.formula_in(m, ctx, &phi)
    }

    /// As [`Evaluator::interp_formula`] for a formula already prepared.
    pub(crate) fn formula_in(&self, m: &Structure, ctx: &Context, phi: &Formula) -> Result<Subfunctor> {
        let key = (m.digest().to_string(), ctx.clone(), phi.clone());
        if let Some(s) = self.memo.get(&key) {
            return Ok(s.clone());
        }
        let prod = self.context_object(m, ctx)?;
        let x = &prod.apex;
        let binary = |op, a: &Formula, b: &Formula| -> Result<Subfunctor> {
            let (sa, sb) = (self.formula_in(m, ctx, a)?, self.formula_in(m, ctx, b)?);
            heyting(op, &sa, Some(&sb))
        };
        let result = match phi {
            Formula::Eq(a, b) => {
                let (fa, fb) = (term_map(m, &prod, ctx, a)?, term_map(m, &prod, ctx, b)?);
                Subfunctor::image_of(&equalizer(&fa, &fb)?.legs[0])
            }
            Formula::Rel(r, args) => {
                let tuple = tuple_map(m, &prod, ctx, r, args)?;
                base_change(&tuple, m.rel(r)?)?
            }
            Formula::Top => Subfunctor::top(x),
            Formula::Bottom => Subfunctor::bottom(x),
            Formula::And(a, b) => binary(HeytingOp::Meet, a, b)?,
            Formula::Or(a, b) => binary(HeytingOp::Join, a, b)?,
            Formula::Implies(a, b) => binary(HeytingOp::Impl, a, b)?,
            Formula::Not(a) => self.formula_in(m, ctx, a)?.neg(),
            Formula::Exists(v, s, body) | Formula::Forall(v, s, body) => {
                let ext = ctx.extend(v, s);
                let inner = self.formula_in(m, &ext, body)?;
                let pi = self.projection(m, ctx, &ext)?;
                if matches!(phi, Formula::Exists(..)) {
                    exists_along(&pi, &inner)?
                } else {
                    forall_along(&pi, &inner)?
                }
            }
        };
        self.memo.insert(key, result.clone());
        Ok(result)
    }
}

fn term_map(m: &Structure, prod: &Product, ctx: &Context, t: &Term) -> Result<PresheafMap> {
    match t {
        Term::Var(v) => ctx
            .index_of(v)
            .map(|k| prod.legs[k].clone())
            .ok_or_else(|| Error::UnsuitableContext { missing: vec![v.clone()] }),
        Term::App(f, args) => {
            let tuple = tuple_map(m, prod, ctx, f, args)?;
            m.func(f)?.after(&tuple)
        }
    }
}

/// `⟨[[t_1]], …, [[t_n]]⟩: M_x⃗ → ∏ args(symbol)`.
fn tuple_map(m: &Structure, prod: &Product, ctx: &Context, symbol: &str, args: &[Term]) -> Result<PresheafMap> {
    let maps = args
        .iter()
        .map(|a| term_map(m, prod, ctx, a))
        .collect::<Result<Vec<_>>>()?;
    m.arg_product(symbol)?.pairing(&prod.apex, &maps)
}

pub fn interp_term(m: &Structure, ctx: &Context, t: &Term) -> Result<PresheafMap> {
    Evaluator::global().interp_term(m, ctx, t)
}

/// `[[x⃗.φ]]` as a subobject of `M_x⃗`.
pub fn interp_formula(m: &Structure, ctx: &Context, phi: &Formula) -> Result<Subfunctor> {
    Evaluator::global().interp_formula(m, ctx, phi)
}

/// `α: U → M_x⃗` for a context `x⃗`.
#[derive(Clone, Debug)]
pub struct GeneralizedElement {
    pub ctx: Context,
    pub map: PresheafMap,
}

impl GeneralizedElement {
    pub fn new(m: &Structure, ctx: Context, map: PresheafMap) -> Result<Self> {
        let prod = Evaluator::global().context_object(m, &ctx)?;
        if **map.dst() != *prod.apex {
            return Err(Error::shape(format!("generalized element does not land in M{ctx}")));
        }
        let map = map.with_dst(prod.apex.clone())?;
        Ok(GeneralizedElement { ctx, map })
    }

    pub fn identity(m: &Structure, ctx: Context) -> Result<Self> {
        let prod = Evaluator::global().context_object(m, &ctx)?;
        Ok(GeneralizedElement {
            map: PresheafMap::identity(&prod.apex),
            ctx,
        })
    }

    /// The inclusion of a subobject of `M_x⃗`.
    pub fn from_subobject(ctx: Context, s: &Subfunctor) -> Self {
        let (_, incl) = s.to_presheaf();
        GeneralizedElement { ctx, map: incl }
    }

    pub fn domain(&self) -> &Arc<Presheaf> {
        self.map.src()
    }

    /// `α ∘ f`.
    pub fn precompose(&self, f: &PresheafMap) -> Result<Self> {
        Ok(GeneralizedElement {
            ctx: self.ctx.clone(),
            map: self.map.after(f)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub stage: String,
    pub element: String,
    pub image: String,
}

/// The verdict of `M ⊨_α x⃗.φ` with its evidence.
#[derive(Clone, Debug)]
pub struct ForcingJudgment {
    pub formula: Formula,
    pub context: Context,
    pub verdict: bool,
    /// The corestriction `U → [[x⃗.φ]]` when forced.
    pub witness: Option<PresheafMap>,
    pub counterexample: Option<Counterexample>,
}

impl ForcingJudgment {
    pub fn to_json(&self) -> serde_json::Value {
        let witness = self.witness.as_ref().map(|w| {
            let base = w.base();
            (0..base.n_objects())
                .map(|c| {
                    let pairs: BTreeMap<&str, &str> = (0..w.src().size(c))
                        .map(|u| (w.src().element_id(c, u), w.dst().element_id(c, w.apply(c, u))))
                        .collect();
                    (base.object_name(c).to_string(), pairs)
                })
                .collect::<BTreeMap<_, _>>()
        });
        json!({
            "formula": self.formula.to_string(),
            "context": self.context.to_string(),
            "verdict": self.verdict,
            "witness": witness,
            "counterexample": self.counterexample,
        })
    }
}

/// `M ⊨_α x⃗.φ` iff `Im(α) ⪯ [[x⃗.φ]]`.
pub fn forces(m: &Structure, alpha: &GeneralizedElement, phi: &Formula) -> Result<ForcingJudgment> {
    let eval = Evaluator::global();
    let phi = phi.prepare(m.sig(), &alpha.ctx)?;
    let interp = eval.formula_in(m, &alpha.ctx, &phi)?;
    let prod = eval.context_object(m, &alpha.ctx)?;
    if **alpha.map.dst() != *prod.apex {
        return Err(Error::shape("generalized element does not land in the context object"));
    }
    let base = m.base();
    let u = alpha.domain();
    for c in 0..base.n_objects() {
        for e in 0..u.size(c) {
            let a = alpha.map.apply(c, e);
            if !interp.contains(c, a) {
                return Ok(ForcingJudgment {
                    formula: phi,
                    context: alpha.ctx.clone(),
                    verdict: false,
                    witness: None,
                    counterexample: Some(Counterexample {
                        stage: base.object_name(c).to_string(),
                        element: u.element_id(c, e).to_string(),
                        image: prod.apex.element_id(c, a).to_string(),
                    }),
                });
            }
        }
    }
    let (sub, _) = interp.to_presheaf();
    let comps = (0..base.n_objects())
        .map(|c| {
            let mut index = vec![usize::MAX; prod.apex.size(c)];
            for (k, a) in interp.elements(c).enumerate() {
                index[a] = k;
            }
            alpha.map.component(c).iter().map(|&a| index[a]).collect()
        })
        .collect();
    let witness = PresheafMap::from_parts(u.clone(), sub, comps)?;
    Ok(ForcingJudgment {
        formula: phi,
        context: alpha.ctx.clone(),
        verdict: true,
        witness: Some(witness),
        counterexample: None,
    })
}

fn forced(m: &Structure, ctx: &Context, map: &PresheafMap, phi: &Formula) -> Result<bool> {
    let interp = Evaluator::global().formula_in(m, ctx, phi)?;
    Ok((0..m.base().n_objects()).all(|c| map.component(c).iter().all(|&a| interp.contains(c, a))))
}

/// `M ⊨ x⃗.φ`, i.e. forcing at the identity of `M_x⃗`.
pub fn models(m: &Structure, ctx: &Context, phi: &Formula) -> Result<bool> {
    Ok(interp_formula(m, ctx, phi)?.is_top())
}

/// Forcing at every subobject inclusion into `M_x⃗`.
pub fn models_via_subobjects(m: &Structure, ctx: &Context, phi: &Formula, cap: usize) -> Result<bool> {
    let phi = phi.prepare(m.sig(), ctx)?;
    let prod = Evaluator::global().context_object(m, ctx)?;
    for s in sub_enumerate(&prod.apex, cap)?.elements {
        let (_, incl) = s.to_presheaf();
        if !forced(m, ctx, &incl, &phi)? {
            return Ok(false);
        }
    }
    Ok(true)
}

// ------------------------------------------------------- stage-wise forcing

type Env = Vec<(String, Arc<Presheaf>, usize)>;

struct StageForcing<'a> {
    m: &'a Structure,
}

impl StageForcing<'_> {
    fn term(&self, c: usize, env: &Env, t: &Term) -> Result<usize> {
        match t {
            Term::Var(v) => env
                .iter()
                .rev()
                .find(|(n, _, _)| n == v)
                .map(|(_, _, x)| *x)
                .ok_or_else(|| Error::UnsuitableContext { missing: vec![v.clone()] }),
            Term::App(f, args) => {
                let t = self.tuple(c, env, f, args)?;
                Ok(self.m.func(f)?.apply(c, t))
            }
        }
    }

    fn tuple(&self, c: usize, env: &Env, symbol: &str, args: &[Term]) -> Result<usize> {
        let coords = args.iter().map(|a| self.term(c, env, a)).collect::<Result<Vec<_>>>()?;
        Ok(self.m.arg_product(symbol)?.encode(c, &coords))
    }

    fn restrict(env: &Env, f: usize) -> Env {
        env.iter().map(|(n, p, x)| (n.clone(), p.clone(), p.restrict(f, *x))).collect()
    }

    fn holds(&self, c: usize, env: &Env, phi: &Formula) -> Result<bool> {
        let base = self.m.base();
        let later = |f: usize| (base.dom(f), Self::restrict(env, f));
        Ok(match phi {
            Formula::Eq(a, b) => self.term(c, env, a)? == self.term(c, env, b)?,
            Formula::Rel(r, args) => self.m.rel(r)?.contains(c, self.tuple(c, env, r, args)?),
            Formula::Top => true,
            Formula::Bottom => false,
            Formula::And(a, b) => self.holds(c, env, a)? && self.holds(c, env, b)?,
            Formula::Or(a, b) => self.holds(c, env, a)? || self.holds(c, env, b)?,
            Formula::Implies(a, b) => {
                for &f in base.hom_into(c) {
                    let (d, env_d) = later(f);
                    if self.holds(d, &env_d, a)? && !self.holds(d, &env_d, b)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Not(a) => {
                for &f in base.hom_into(c) {
                    let (d, env_d) = later(f);
                    if self.holds(d, &env_d, a)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Exists(v, s, body) => {
                let ms = self.m.sort(s)?.clone();
                for b in 0..ms.size(c) {
                    let mut inner = env.clone();
                    inner.push((v.clone(), ms.clone(), b));
                    if self.holds(c, &inner, body)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Forall(v, s, body) => {
                let ms = self.m.sort(s)?.clone();
                for &f in base.hom_into(c) {
                    let (d, env_d) = later(f);
                    for b in 0..ms.size(d) {
                        let mut inner = env_d.clone();
                        inner.push((v.clone(), ms.clone(), b));
                        if !self.holds(d, &inner, body)? {
                            return Ok(false);
                        }
                    }
                }
                true
            }
        })
    }
}

/// Forcing at the representable generalized element `a ∈ M_x⃗(c)`, by the
/// recursive stage clauses.
pub fn stage_forcing(m: &Structure, ctx: &Context, c: usize, a: usize, phi: &Formula) -> Result<bool> {
    let phi = phi.prepare(m.sig(), ctx)?;
    if c >= m.base().n_objects() {
        return Err(Error::shape(format!("no object with index {c}")));
    }
    let sorts = ctx
        .vars()
        .iter()
        .map(|(_, s)| m.sort(s).cloned())
        .collect::<Result<Vec<_>>>()?;
    let sizes: Vec<usize> = sorts.iter().map(|p| p.size(c)).collect();
    if a >= sizes.iter().product::<usize>() {
        return Err(Error::shape(format!("element {a} is not in the context carrier at stage {c}")));
    }
    let coords = crate::fincat::tuple_coords(&sizes, a);
    let env: Env = ctx
        .vars()
        .iter()
        .zip(sorts)
        .zip(coords)
        .map(|(((v, _), p), x)| (v.clone(), p, x))
        .collect();
    StageForcing { m }.holds(c, &env, &phi)
}

// ------------------------------------------------------------ rule checks

/// Enumeration bounds for the rule and side checks.
#[derive(Clone, Copy, Debug)]
pub struct CheckLimits {
    pub max_subobjects: usize,
    pub max_homs: usize,
}

impl Default for CheckLimits {
    fn default() -> Self {
        CheckLimits {
            max_subobjects: crate::subobj::DEFAULT_SUB_CAP,
            max_homs: 4096,
        }
    }
}

/// Outcome of one forcing-rule instance: `lhs` is `M ⊨_α x⃗.φ`, `rhs` the
/// rule's right-hand side evaluated on canonical or enumerated witnesses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RuleReport {
    pub rule: &'static str,
    pub lhs: bool,
    pub rhs: bool,
    pub forward: bool,
    pub backward: bool,
    pub witnesses: usize,
}

impl RuleReport {
    fn new(rule: &'static str, lhs: bool, rhs: bool, witnesses: usize) -> Self {
        RuleReport {
            rule,
            lhs,
            rhs,
            forward: !lhs || rhs,
            backward: !rhs || lhs,
            witnesses,
        }
    }

    pub fn holds(&self) -> bool {
        self.forward && self.backward
    }
}

/// Maps `p: V → U` over which the universal rules are checked: every
/// subobject inclusion and every `y(d) → U`.
fn probe_maps(u: &Arc<Presheaf>, limits: CheckLimits) -> Result<Vec<PresheafMap>> {
    let mut out: Vec<PresheafMap> = sub_enumerate(u, limits.max_subobjects)?
        .elements
        .iter()
        .map(|s| s.to_presheaf().1)
        .collect();
    let base = u.base();
    for d in 0..base.n_objects() {
        for e in 0..u.size(d) {
            out.push(yoneda_map(u, d, e));
        }
    }
    Ok(out)
}

/// `⟨a, b⟩: V → M_{x⃗y}` from `a: V → M_x⃗` and `b: V → M_s`.
fn extend_element(m: &Structure, ctx: &Context, ext: &Context, a: &PresheafMap, b: &PresheafMap) -> Result<PresheafMap> {
    let eval = Evaluator::global();
    let (p, q) = (eval.context_object(m, ctx)?, eval.context_object(m, ext)?);
    let a = a.with_dst(p.apex.clone())?;
    let mut maps = p.legs.iter().map(|leg| leg.after(&a)).collect::<Result<Vec<_>>>()?;
    maps.push(b.with_dst(q.factors[ctx.len()].clone())?);
    q.pairing(a.src(), &maps)
}

/// Checks the forcing rule selected by the top connective of `φ`.
pub fn kj_rule_check(
    m: &Structure,
    alpha: &GeneralizedElement,
    phi: &Formula,
    limits: CheckLimits,
) -> Result<RuleReport> {
    let ctx = &alpha.ctx;
    let phi = phi.prepare(m.sig(), ctx)?;
    let eval = Evaluator::global();
    let prod = eval.context_object(m, ctx)?;
    let alpha_map = alpha.map.with_dst(prod.apex.clone())?;
    let u = alpha.domain().clone();
    let lhs = forced(m, ctx, &alpha_map, &phi)?;
    let base = m.base();
    Ok(match &phi {
        Formula::Top => RuleReport::new("top", lhs, true, 0),
        Formula::Bottom => RuleReport::new("bottom", lhs, u.is_initial(), 0),
        Formula::Eq(a, b) => {
            let (fa, fb) = (eval.interp_term(m, ctx, a)?, eval.interp_term(m, ctx, b)?);
            RuleReport::new("eq", lhs, fa.after(&alpha_map)? == fb.after(&alpha_map)?, 0)
        }
        Formula::Rel(r, args) => {
            let tuple = tuple_map(m, &prod, ctx, r, args)?.after(&alpha_map)?;
            let rel = m.rel(r)?;
            let rhs = (0..base.n_objects()).all(|c| tuple.component(c).iter().all(|&t| rel.contains(c, t)));
            RuleReport::new("rel", lhs, rhs, 0)
        }
        Formula::And(a, b) => {
            let rhs = forced(m, ctx, &alpha_map, a)? && forced(m, ctx, &alpha_map, b)?;
            RuleReport::new("and", lhs, rhs, 0)
        }
        Formula::Or(a, b) => {
            let v = base_change(&alpha_map, &eval.formula_in(m, ctx, a)?)?;
            let w = base_change(&alpha_map, &eval.formula_in(m, ctx, b)?)?;
            let (_, pv) = v.to_presheaf();
            let (_, pw) = w.to_presheaf();
            let rhs = v.join(&w)?.is_top()
                && forced(m, ctx, &alpha_map.after(&pv)?, a)?
                && forced(m, ctx, &alpha_map.after(&pw)?, b)?;
            RuleReport::new("or", lhs, rhs, 2)
        }
        Formula::Exists(y, s, body) => {
            let ext = ctx.extend(y, s);
            let ms = m.sort(s)?.clone();
            let uxm = product(base, &[u.clone(), ms])?;
            let a_then = alpha_map.after(&uxm.legs[0])?;
            let pair = extend_element(m, ctx, &ext, &a_then, &uxm.legs[1])?;
            let v = base_change(&pair, &eval.formula_in(m, &ext, body)?)?;
            let (_, incl) = v.to_presheaf();
            let p = uxm.legs[0].after(&incl)?;
            let rhs = p.is_epi() && forced(m, &ext, &pair.after(&incl)?, body)?;
            RuleReport::new("exists", lhs, rhs, 1)
        }
        Formula::Implies(a, b) => {
            let probes = probe_maps(&u, limits)?;
            let mut rhs = true;
            for p in &probes {
                let ap = alpha_map.after(p)?;
                if forced(m, ctx, &ap, a)? && !forced(m, ctx, &ap, b)? {
                    rhs = false;
                    break;
                }
            }
            RuleReport::new("implies", lhs, rhs, probes.len())
        }
        Formula::Not(a) => {
            let probes = probe_maps(&u, limits)?;
            let mut rhs = true;
            for p in &probes {
                if forced(m, ctx, &alpha_map.after(p)?, a)? && !p.src().is_initial() {
                    rhs = false;
                    break;
                }
            }
            RuleReport::new("not", lhs, rhs, probes.len())
        }
        Formula::Forall(y, s, body) => {
            let ext = ctx.extend(y, s);
            let ms = m.sort(s)?.clone();
            let mut rhs = true;
            let mut count = 0;
            'probe: for p in probe_maps(&u, limits)? {
                let ap = alpha_map.after(&p)?;
                for beta in enumerate_homs(p.src(), &ms, limits.max_homs)? {
                    count += 1;
                    if !forced(m, &ext, &extend_element(m, ctx, &ext, &ap, &beta)?, body)? {
                        rhs = false;
                        break 'probe;
                    }
                }
            }
            RuleReport::new("forall", lhs, rhs, count)
        }
    })
}

/// If `α` forces `φ`, so does `α ∘ f` for every probe `f` into `U`.
pub fn monotonicity_check(m: &Structure, alpha: &GeneralizedElement, phi: &Formula, limits: CheckLimits) -> Result<bool> {
    let phi = phi.prepare(m.sig(), &alpha.ctx)?;
    if !forced(m, &alpha.ctx, &alpha.map, &phi)? {
        return Ok(true);
    }
    let mut probes = probe_maps(alpha.domain(), limits)?;
    probes.push(representable_cover(alpha.domain())?);
    for f in probes {
        if !forced(m, &alpha.ctx, &alpha.map.after(&f)?, &phi)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// If `α ∘ f` forces `φ` along the representable cover `f`, so does `α`.
pub fn local_character_check(m: &Structure, alpha: &GeneralizedElement, phi: &Formula) -> Result<bool> {
    let phi = phi.prepare(m.sig(), &alpha.ctx)?;
    let cover = representable_cover(alpha.domain())?;
    debug_assert!(cover.is_epi());
    let along = forced(m, &alpha.ctx, &alpha.map.after(&cover)?, &phi)?;
    Ok(!along || forced(m, &alpha.ctx, &alpha.map, &phi)?)
}

/// Primitive negation and the rewrite `ψ ⇒ ⊥` give the same subobject.
pub fn negation_cross_check(m: &Structure, ctx: &Context, phi: &Formula) -> Result<bool> {
    Ok(interp_formula(m, ctx, phi)? == interp_formula(m, ctx, &phi.expand_negation())?)
}
