//! Signatures, Σ-structures valued in presheaves, structure morphisms and
//! products of structures.

use crate::error::{Error, Report, Result, Violation};
use crate::fincat::{product, same_presheaf, FinCategory, Presheaf, PresheafMap, Product};
use crate::subobj::Subfunctor;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, OnceLock};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FuncProfile {
    pub args: Vec<String>,
    pub result: String,
}

/// `Σ = (S, F, R)` with profiles.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub sorts: BTreeSet<String>,
    #[serde(default)]
    pub funcs: BTreeMap<String, FuncProfile>,
    #[serde(default)]
    pub rels: BTreeMap<String, Vec<String>>,
}

impl Signature {
    pub fn new<S: Into<String>>(sorts: impl IntoIterator<Item = S>) -> Self {
        Signature {
            sorts: sorts.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn with_func(mut self, name: &str, args: &[&str], result: &str) -> Self {
        self.funcs.insert(
            name.to_string(),
            FuncProfile {
                args: args.iter().map(|s| s.to_string()).collect(),
                result: result.to_string(),
            },
        );
        self
    }

    pub fn with_rel(mut self, name: &str, args: &[&str]) -> Self {
        self.rels
            .insert(name.to_string(), args.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn validate(&self) -> Report {
        let mut report = Vec::new();
        let mut undeclared = |sym: &str, s: &str| {
            if !self.sorts.contains(s) {
                report.push(Violation::new(
                    "undeclared-sort",
                    format!("symbol `{sym}` uses undeclared sort `{s}`"),
                ));
            }
        };
        for (f, p) in &self.funcs {
            p.args.iter().chain([&p.result]).for_each(|s| undeclared(f, s));
        }
        for (r, args) in &self.rels {
            args.iter().for_each(|s| undeclared(r, s));
        }
        for name in self.funcs.keys().filter(|f| self.rels.contains_key(*f)) {
            report.push(Violation::new(
                "symbol-clash",
                format!("`{name}` is both a function and a relation symbol"),
            ));
        }
        report
    }

    pub fn func(&self, name: &str) -> Result<&FuncProfile> {
        self.funcs.get(name).ok_or_else(|| Error::unknown("function symbol", name))
    }

    pub fn rel(&self, name: &str) -> Result<&[String]> {
        self.rels
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::unknown("relation symbol", name))
    }

    pub fn has_sort(&self, s: &str) -> bool {
        self.sorts.contains(s)
    }
}

/// An ordered list of distinct typed variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Context(Vec<(String, String)>);

impl Context {
    pub fn empty() -> Self {
        Context(Vec::new())
    }

    pub fn new<A: Into<String>, B: Into<String>>(vars: impl IntoIterator<Item = (A, B)>) -> Result<Self> {
        let mut ctx = Context::empty();
        for (v, s) in vars {
            ctx.push(v, s)?;
        }
        Ok(ctx)
    }

    pub fn push(&mut self, var: impl Into<String>, sort: impl Into<String>) -> Result<()> {
        let var = var.into();
        if self.index_of(&var).is_some() {
            return Err(Error::shape(format!("variable `{var}` occurs twice in the context")));
        }
        self.0.push((var, sort.into()));
        Ok(())
    }

    /// `x⃗y`. A variable of the same name is shadowed: it keeps its position
    /// but is renamed to a fresh primed name.
    pub fn extend(&self, var: &str, sort: &str) -> Context {
        let mut vars = self.0.clone();
        if let Some(k) = self.index_of(var) {
            let mut fresh = format!("{var}'");
            while self.index_of(&fresh).is_some() || fresh == var {
                fresh.push('\'');
            }
            vars[k].0 = fresh;
        }
        vars.push((var.to_string(), sort.to_string()));
        Context(vars)
    }

    pub fn vars(&self) -> &[(String, String)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, var: &str) -> Option<usize> {
        self.0.iter().position(|(v, _)| v == var)
    }

    pub fn sort_of(&self, var: &str) -> Option<&str> {
        self.0.iter().find(|(v, _)| v == var).map(|(_, s)| s.as_str())
    }

    pub fn sorts(&self) -> Vec<String> {
        self.0.iter().map(|(_, s)| s.clone()).collect()
    }

    pub fn check_sorts(&self, sig: &Signature) -> Result<()> {
        match self.0.iter().find(|(_, s)| !sig.has_sort(s)) {
            Some((_, s)) => Err(Error::unknown("sort", s)),
            None => Ok(()),
        }
    }
}

impl std::fmt::Display for Context {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(v, s)| format!("{v}:{s}")).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// A Σ-structure in presheaves over `base`.
#[derive(Debug)]
pub struct Structure {
    sig: Arc<Signature>,
    base: Arc<FinCategory>,
    sorts: BTreeMap<String, Arc<Presheaf>>,
    funcs: BTreeMap<String, PresheafMap>,
    rels: BTreeMap<String, Subfunctor>,
    arg_products: BTreeMap<String, Product>,
    digest: OnceLock<String>,
}

impl Clone for Structure {
    fn clone(&self) -> Self {
        Structure {
            sig: self.sig.clone(),
            base: self.base.clone(),
            sorts: self.sorts.clone(),
            funcs: self.funcs.clone(),
            rels: self.rels.clone(),
            arg_products: self.arg_products.clone(),
            digest: self.digest.clone(),
        }
    }
}

impl PartialEq for Structure {
    fn eq(&self, other: &Self) -> bool {
        self.sig == other.sig
            && self.base == other.base
            && self.sorts == other.sorts
            && self.funcs == other.funcs
            && self.rels == other.rels
    }
}

impl Eq for Structure {}

impl Structure {
    /// Checks that every symbol is interpreted with the profile's typing.
    /// Functoriality, naturality and closure are left to [`Structure::validate`].
    pub fn new(
        sig: Arc<Signature>,
        base: Arc<FinCategory>,
        sorts: BTreeMap<String, Arc<Presheaf>>,
        funcs: BTreeMap<String, PresheafMap>,
        rels: BTreeMap<String, Subfunctor>,
    ) -> Result<Self> {
        Error::check("signature", sig.validate())?;
        let mut report = Vec::new();
        for s in &sig.sorts {
            match sorts.get(s) {
                None => report.push(Violation::new("missing-sort", format!("sort `{s}` is not interpreted"))),
                Some(p) if p.base() != &base => {
                    report.push(Violation::new("base-mismatch", format!("sort `{s}` lives over another base")))
                }
                _ => {}
            }
        }
        for s in sorts.keys().filter(|s| !sig.has_sort(s)) {
            report.push(Violation::new("unknown-symbol", format!("`{s}` is not a sort of the signature")));
        }
        for f in funcs.keys().filter(|f| !sig.funcs.contains_key(*f)) {
            report.push(Violation::new("unknown-symbol", format!("`{f}` is not a function symbol")));
        }
        for r in rels.keys().filter(|r| !sig.rels.contains_key(*r)) {
            report.push(Violation::new("unknown-symbol", format!("`{r}` is not a relation symbol")));
        }
        Error::check("structure", std::mem::take(&mut report))?;

        let arg_product = |args: &[String]| {
            let factors: Vec<Arc<Presheaf>> = args.iter().map(|s| sorts[s].clone()).collect();
            product(&base, &factors)
        };
        let mut arg_products = BTreeMap::new();
        for (f, p) in &sig.funcs {
            let dom = arg_product(&p.args)?;
            match funcs.get(f) {
                None => report.push(Violation::new("missing-function", format!("`{f}` is not interpreted"))),
                Some(m) => {
                    if !same_presheaf(m.src(), &dom.apex) {
                        report.push(Violation::new(
                            "function-domain",
                            format!("`{f}` is not defined on the product of its argument sorts"),
                        ));
                    }
                    if !same_presheaf(m.dst(), &sorts[&p.result]) {
                        report.push(Violation::new(
                            "function-codomain",
                            format!("`{f}` does not land in sort `{}`", p.result),
                        ));
                    }
                }
            }
            arg_products.insert(f.clone(), dom);
        }
        for (r, args) in &sig.rels {
            let amb = arg_product(args)?;
            match rels.get(r) {
                None => report.push(Violation::new("missing-relation", format!("`{r}` is not interpreted"))),
                Some(s) if !same_presheaf(s.ambient(), &amb.apex) => report.push(Violation::new(
                    "relation-ambient",
                    format!("`{r}` is not a subobject of the product of its argument sorts"),
                )),
                _ => {}
            }
            arg_products.insert(r.clone(), amb);
        }
        Error::check("structure", report)?;
        Ok(Structure {
            sig,
            base,
            sorts,
            funcs,
            rels,
            arg_products,
            digest: OnceLock::new(),
        })
    }

    pub fn sig(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn base(&self) -> &Arc<FinCategory> {
        &self.base
    }

    pub fn sort(&self, s: &str) -> Result<&Arc<Presheaf>> {
        self.sorts.get(s).ok_or_else(|| Error::unknown("sort", s))
    }

    pub fn sorts(&self) -> &BTreeMap<String, Arc<Presheaf>> {
        &self.sorts
    }

    pub fn func(&self, f: &str) -> Result<&PresheafMap> {
        self.funcs.get(f).ok_or_else(|| Error::unknown("function symbol", f))
    }

    pub fn funcs(&self) -> &BTreeMap<String, PresheafMap> {
        &self.funcs
    }

    pub fn rel(&self, r: &str) -> Result<&Subfunctor> {
        self.rels.get(r).ok_or_else(|| Error::unknown("relation symbol", r))
    }

    pub fn rels(&self) -> &BTreeMap<String, Subfunctor> {
        &self.rels
    }

    /// The product of argument sorts of a function or relation symbol.
    pub fn arg_product(&self, symbol: &str) -> Result<&Product> {
        self.arg_products
            .get(symbol)
            .ok_or_else(|| Error::unknown("symbol", symbol))
    }

    /// Functoriality of sorts, naturality of functions, closure of relations.
    pub fn validate(&self) -> Report {
        let mut report = Vec::new();
        let tag = |what: String, r: Report| {
            r.into_iter()
                .map(move |v| Violation::new(v.code, format!("{what}: {}", v.message)))
        };
        for (s, p) in &self.sorts {
            report.extend(tag(format!("sort `{s}`"), p.validate()));
        }
        for (f, m) in &self.funcs {
            report.extend(tag(format!("function `{f}`"), m.validate()));
        }
        for (r, sub) in &self.rels {
            report.extend(tag(format!("relation `{r}`"), sub.closure_violations()));
        }
        report
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> &str {
        self.digest.get_or_init(|| {
            let bytes = serde_json::to_vec(&self.canonical_json()).expect("serializable");
            Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
        })
    }

    pub fn canonical_json(&self) -> serde_json::Value {
        let base = &self.base;
        let presheaf = |p: &Presheaf| json!({"carriers": p.carriers(), "action": (0..base.n_morphisms()).map(|f| p.action(f)).collect::<Vec<_>>()});
        json!({
            "signature": &*self.sig,
            "base": {
                "objects": base.objects(),
                "morphisms": base.morphisms().iter().map(|m| (&m.name, &m.dom, &m.cod)).collect::<Vec<_>>(),
                "composites": base.composites().collect::<Vec<_>>(),
            },
            "sorts": self.sorts.iter().map(|(s, p)| (s, presheaf(p))).collect::<BTreeMap<_, _>>(),
            "funcs": self.funcs.iter().map(|(f, m)| (f, m.components())).collect::<BTreeMap<_, _>>(),
            "rels": self.rels.iter().map(|(r, s)| (r, s.parts())).collect::<BTreeMap<_, _>>(),
        })
    }
}

/// `M_x⃗`: the product of the context's sorts, in context order.
pub fn context_object(m: &Structure, ctx: &Context) -> Result<Product> {
    let factors = ctx
        .vars()
        .iter()
        .map(|(_, s)| m.sort(s).cloned())
        .collect::<Result<Vec<_>>>()?;
    product(m.base(), &factors)
}

/// A family of sortwise maps between structures over one signature.
#[derive(Clone, Debug)]
pub struct StructureMorphism {
    pub src: Arc<Structure>,
    pub dst: Arc<Structure>,
    pub components: BTreeMap<String, PresheafMap>,
}

impl StructureMorphism {
    pub fn new(src: Arc<Structure>, dst: Arc<Structure>, components: BTreeMap<String, PresheafMap>) -> Result<Self> {
        if src.sig != dst.sig || src.base != dst.base {
            return Err(Error::shape("structure morphism between different signatures or bases"));
        }
        for s in &src.sig.sorts {
            let h = components
                .get(s)
                .ok_or_else(|| Error::shape(format!("no component for sort `{s}`")))?;
            if !same_presheaf(h.src(), &src.sorts[s]) || !same_presheaf(h.dst(), &dst.sorts[s]) {
                return Err(Error::shape(format!("component for sort `{s}` has the wrong type")));
            }
        }
        if components.len() != src.sig.sorts.len() {
            return Err(Error::shape("components for undeclared sorts"));
        }
        Ok(StructureMorphism { src, dst, components })
    }

    pub fn identity(m: &Arc<Structure>) -> Self {
        let components = m
            .sorts
            .iter()
            .map(|(s, p)| (s.clone(), PresheafMap::identity(p)))
            .collect();
        StructureMorphism {
            src: m.clone(),
            dst: m.clone(),
            components,
        }
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &StructureMorphism) -> Result<StructureMorphism> {
        let components = self
            .components
            .iter()
            .map(|(s, h)| Ok((s.clone(), h.after(&first.components[s])?)))
            .collect::<Result<_>>()?;
        StructureMorphism::new(first.src.clone(), self.dst.clone(), components)
    }

    /// Image of an argument tuple of `symbol` at stage `c`.
    fn map_tuple(&self, symbol: &str, c: usize, t: usize) -> (usize, usize) {
        let (args, _) = self.profile(symbol);
        let from = &self.src.arg_products[symbol];
        let to = &self.dst.arg_products[symbol];
        let coords: Vec<usize> = from
            .decode(c, t)
            .iter()
            .zip(args)
            .map(|(&x, s)| self.components[s].apply(c, x))
            .collect();
        (to.encode(c, &coords), coords.len())
    }

    fn profile(&self, symbol: &str) -> (&[String], Option<&str>) {
        match self.src.sig.funcs.get(symbol) {
            Some(p) => (&p.args, Some(&p.result)),
            None => (&self.src.sig.rels[symbol], None),
        }
    }

    /// Naturality, function squares and relation preservation, elementwise.
    pub fn validate(&self) -> Report {
        let mut report = Vec::new();
        for (s, h) in &self.components {
            report.extend(
                h.validate()
                    .into_iter()
                    .map(|v| Violation::new(v.code, format!("sort `{s}`: {}", v.message))),
            );
        }
        let base = self.src.base.clone();
        for (f, p) in &self.src.sig.funcs {
            let (fm, fn_) = (&self.src.funcs[f], &self.dst.funcs[f]);
            let h = &self.components[&p.result];
            for c in 0..base.n_objects() {
                for t in 0..fm.src().size(c) {
                    let (image, _) = self.map_tuple(f, c, t);
                    if h.apply(c, fm.apply(c, t)) != fn_.apply(c, image) {
                        report.push(Violation::new(
                            "function-square",
                            format!(
                                "`{f}` at stage `{}` on `{}` does not commute",
                                base.object_name(c),
                                fm.src().element_id(c, t)
                            ),
                        ));
                    }
                }
            }
        }
        for r in self.src.sig.rels.keys() {
            let (rm, rn) = (&self.src.rels[r], &self.dst.rels[r]);
            for c in 0..base.n_objects() {
                for t in rm.elements(c) {
                    let (image, _) = self.map_tuple(r, c, t);
                    if !rn.contains(c, image) {
                        report.push(Violation::new(
                            "relation-preservation",
                            format!(
                                "`{r}` at stage `{}`: `{}` is sent outside the target relation",
                                base.object_name(c),
                                rm.ambient().element_id(c, t)
                            ),
                        ));
                    }
                }
            }
        }
        report
    }

    /// Iso of structures: valid, sortwise iso, and relations reflected.
    pub fn is_iso(&self) -> bool {
        if !self.validate().is_empty() || !self.components.values().all(PresheafMap::is_iso) {
            return false;
        }
        self.src.sig.rels.keys().all(|r| {
            let (rm, rn) = (&self.src.rels[r], &self.dst.rels[r]);
            (0..self.src.base.n_objects()).all(|c| {
                let hit: BTreeSet<usize> = rm.elements(c).map(|t| self.map_tuple(r, c, t).0).collect();
                rn.elements(c).all(|t| hit.contains(&t))
            })
        })
    }
}

/// `∏_I M_i` with its projections.
#[derive(Clone, Debug)]
pub struct StructureProduct {
    pub structure: Arc<Structure>,
    pub factors: Vec<Arc<Structure>>,
    pub sort_products: BTreeMap<String, Product>,
    pub projections: Vec<StructureMorphism>,
}

pub fn structure_product(family: &[Arc<Structure>]) -> Result<StructureProduct> {
    let first = family
        .first()
        .ok_or_else(|| Error::precondition("the empty product of structures is not formed"))?;
    if family.iter().any(|m| m.sig != first.sig || m.base != first.base) {
        return Err(Error::shape("family members differ in signature or base"));
    }
    let sig = first.sig.clone();
    let base = first.base.clone();
    let sort_products: BTreeMap<String, Product> = sig
        .sorts
        .iter()
        .map(|s| {
            let factors: Vec<Arc<Presheaf>> = family.iter().map(|m| m.sorts[s].clone()).collect();
            Ok((s.clone(), product(&base, &factors)?))
        })
        .collect::<Result<_>>()?;
    let sorts: BTreeMap<String, Arc<Presheaf>> = sort_products
        .iter()
        .map(|(s, p)| (s.clone(), p.apex.clone()))
        .collect();
    let args_of = |args: &[String]| -> Result<Product> {
        let factors: Vec<Arc<Presheaf>> = args.iter().map(|s| sorts[s].clone()).collect();
        product(&base, &factors)
    };
    // Coordinates of the i-th factor's argument tuple inside a tuple of product elements.
    let member_tuple = |args: &[String], dom: &Product, c: usize, t: usize, i: usize| -> Vec<usize> {
        dom.decode(c, t)
            .iter()
            .zip(args)
            .map(|(&p, s)| sort_products[s].decode(c, p)[i])
            .collect()
    };

    let mut funcs = BTreeMap::new();
    for (f, prof) in &sig.funcs {
        let dom = args_of(&prof.args)?;
        let comps = (0..base.n_objects())
            .map(|c| {
                (0..dom.apex.size(c))
                    .map(|t| {
                        let values: Vec<usize> = family
                            .iter()
                            .enumerate()
                            .map(|(i, m)| {
                                let coords = member_tuple(&prof.args, &dom, c, t, i);
                                m.funcs[f].apply(c, m.arg_products[f].encode(c, &coords))
                            })
                            .collect();
                        sort_products[&prof.result].encode(c, &values)
                    })
                    .collect()
            })
            .collect();
        funcs.insert(
            f.clone(),
            PresheafMap::from_parts(dom.apex.clone(), sorts[&prof.result].clone(), comps)?,
        );
    }
    let mut rels = BTreeMap::new();
    for (r, args) in &sig.rels {
        let amb = args_of(args)?;
        let parts = (0..base.n_objects())
            .map(|c| {
                (0..amb.apex.size(c))
                    .map(|t| {
                        family.iter().enumerate().all(|(i, m)| {
                            let coords = member_tuple(args, &amb, c, t, i);
                            m.rels[r].contains(c, m.arg_products[r].encode(c, &coords))
                        })
                    })
                    .collect()
            })
            .collect();
        rels.insert(r.clone(), Subfunctor::from_parts(amb.apex.clone(), parts)?);
    }
    let structure = Arc::new(Structure::new(sig.clone(), base, sorts, funcs, rels)?);
    let projections = (0..family.len())
        .map(|i| {
            let comps = sort_products
                .iter()
                .map(|(s, p)| (s.clone(), p.legs[i].clone()))
                .collect();
            StructureMorphism::new(structure.clone(), family[i].clone(), comps)
        })
        .collect::<Result<_>>()?;
    Ok(StructureProduct {
        structure,
        factors: family.to_vec(),
        sort_products,
        projections,
    })
}

impl StructureProduct {
    /// The mediating morphism `⟨h_i⟩` of a cone over the factors.
    pub fn mediate(&self, cone: &[StructureMorphism]) -> Result<StructureMorphism> {
        if cone.len() != self.factors.len() {
            return Err(Error::shape("cone needs one morphism per factor"));
        }
        let apex = cone[0].src.clone();
        let components = self
            .sort_products
            .iter()
            .map(|(s, p)| {
                let maps: Vec<PresheafMap> = cone.iter().map(|h| h.components[s].clone()).collect();
                Ok((s.clone(), p.pairing(&apex.sorts[s], &maps)?))
            })
            .collect::<Result<_>>()?;
        StructureMorphism::new(apex, self.structure.clone(), components)
    }

    /// Projection onto a sub-product: `target`'s k-th factor is this
    /// product's `positions[k]`-th factor.
    pub fn restrict_to(&self, target: &StructureProduct, positions: &[usize]) -> Result<StructureMorphism> {
        let cone: Vec<StructureMorphism> = positions.iter().map(|&i| self.projections[i].clone()).collect();
        let components = target
            .sort_products
            .iter()
            .map(|(s, p)| {
                let maps: Vec<PresheafMap> = cone.iter().map(|h| h.components[s].clone()).collect();
                Ok((s.clone(), p.pairing(&self.structure.sorts[s], &maps)?))
            })
            .collect::<Result<_>>()?;
        StructureMorphism::new(self.structure.clone(), target.structure.clone(), components)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::{bases, presheaf_from_lists, terminal};

    fn set(names: &[&str]) -> Arc<Presheaf> {
        presheaf_from_lists(&bases::terminal(), &[("pt", names)], &[])
    }

    fn graph_sig() -> Arc<Signature> {
        Arc::new(Signature::new(["node"]).with_rel("adj", &["node", "node"]))
    }

    fn set_graph(nodes: &[&str], edges: &[&str]) -> Arc<Structure> {
        let sig = graph_sig();
        let x = set(nodes);
        let p = product(x.base(), &[x.clone(), x.clone()]).unwrap();
        let adj = Subfunctor::from_named(
            p.apex.clone(),
            &BTreeMap::from([("pt".to_string(), edges.iter().map(|s| s.to_string()).collect())]),
        )
        .unwrap();
        Arc::new(
            Structure::new(
                sig,
                x.base().clone(),
                BTreeMap::from([("node".into(), x)]),
                BTreeMap::new(),
                BTreeMap::from([("adj".into(), adj)]),
            )
            .unwrap(),
        )
    }

    #[test]
    fn empty_signature_validates() {
        for (_, base) in bases::all() {
            let m = Structure::new(
                Arc::new(Signature::default()),
                base,
                BTreeMap::new(),
                BTreeMap::new(),
                BTreeMap::new(),
            )
            .unwrap();
            assert!(m.validate().is_empty());
        }
    }

    #[test]
    fn constant_over_terminal_base() {
        let sig = Arc::new(Signature::new(["s"]).with_func("c", &[], "s"));
        let x = set(&["a", "b"]);
        let one = terminal(x.base());
        let c = PresheafMap::new(one, x.clone(), vec![vec![1]]).unwrap();
        let m = Structure::new(
            sig,
            x.base().clone(),
            BTreeMap::from([("s".into(), x)]),
            BTreeMap::from([("c".into(), c)]),
            BTreeMap::new(),
        )
        .unwrap();
        assert!(m.validate().is_empty());
    }

    #[test]
    fn non_closed_relation_is_reported() {
        let base = bases::graph();
        let x = presheaf_from_lists(
            &base,
            &[("V", &["v1", "v2"]), ("E", &["e"])],
            &[("s", &[("e", "v1")]), ("t", &[("e", "v2")])],
        );
        let p = product(&base, &[x.clone(), x.clone()]).unwrap();
        let adj = Subfunctor::from_named(
            p.apex.clone(),
            &BTreeMap::from([("E".to_string(), vec!["(e,e)".to_string()])]),
        )
        .unwrap();
        let m = Structure::new(
            graph_sig(),
            base,
            BTreeMap::from([("node".into(), x)]),
            BTreeMap::new(),
            BTreeMap::from([("adj".into(), adj)]),
        )
        .unwrap();
        let report = m.validate();
        assert!(!report.is_empty());
        assert!(report[0].message.contains("(e,e)") && report[0].message.contains("`E`"));
    }

    #[test]
    fn missing_interpretation_is_an_error() {
        let x = set(&["a"]);
        let err = Structure::new(
            graph_sig(),
            x.base().clone(),
            BTreeMap::from([("node".into(), x)]),
            BTreeMap::new(),
            BTreeMap::new(),
        );
        assert!(matches!(err, Err(Error::Invalid { .. })));
    }

    #[test]
    fn context_objects() {
        let m = set_graph(&["a", "b"], &[]);
        let empty = context_object(&m, &Context::empty()).unwrap();
        assert_eq!(*empty.apex, *terminal(m.base()));
        let one = context_object(&m, &Context::new([("y", "node")]).unwrap()).unwrap();
        assert_eq!(one.apex, *m.sort("node").unwrap());
        let two = context_object(&m, &Context::new([("y", "node"), ("z", "node")]).unwrap()).unwrap();
        assert_eq!(two.apex.sizes(), vec![4]);
        assert_eq!(two.legs.len(), 2);
        assert!(matches!(
            context_object(&m, &Context::new([("y", "edge")]).unwrap()),
            Err(Error::Unknown { .. })
        ));
    }

    #[test]
    fn extend_renames_shadowed_variables() {
        let ctx = Context::new([("y", "node"), ("y'", "node")]).unwrap();
        let ext = ctx.extend("y", "node");
        assert_eq!(ext.vars()[0].0, "y''");
        assert_eq!(ext.index_of("y"), Some(2));
    }

    #[test]
    fn product_relation_is_componentwise() {
        let m1 = set_graph(&["a"], &["(a,a)"]);
        let m2 = set_graph(&["b", "b'"], &["(b,b')"]);
        let p = structure_product(&[m1, m2]).unwrap();
        let adj = p.structure.rel("adj").unwrap();
        let ids: Vec<&str> = adj.elements(0).map(|t| adj.ambient().element_id(0, t)).collect();
        assert_eq!(ids, vec!["((a,b),(a,b'))"]);
        for h in &p.projections {
            assert!(h.validate().is_empty());
        }
    }

    #[test]
    fn singleton_product_is_an_iso_copy() {
        let m = set_graph(&["a", "b"], &["(a,b)"]);
        let p = structure_product(&[m.clone()]).unwrap();
        assert!(p.projections[0].is_iso());
    }

    #[test]
    fn one_element_product() {
        let m1 = set_graph(&["a"], &[]);
        let m2 = set_graph(&["b"], &[]);
        let p = structure_product(&[m1, m2]).unwrap();
        assert_eq!(p.structure.sort("node").unwrap().sizes(), vec![1]);
    }

    #[test]
    fn empty_family_is_rejected() {
        assert!(matches!(structure_product(&[]), Err(Error::Precondition(_))));
    }

    #[test]
    fn broken_morphism_names_symbol() {
        let m = set_graph(&["a", "b"], &["(a,b)"]);
        let n = set_graph(&["a", "b"], &["(a,b)"]);
        let x = m.sort("node").unwrap().clone();
        let swap = PresheafMap::new(x.clone(), n.sort("node").unwrap().clone(), vec![vec![1, 0]]).unwrap();
        let h = StructureMorphism::new(m.clone(), n, BTreeMap::from([("node".into(), swap)])).unwrap();
        let report = h.validate();
        assert_eq!(report.len(), 1);
        assert!(report[0].message.contains("adj") && report[0].message.contains("pt"));
        assert!(StructureMorphism::identity(&m).validate().is_empty());
    }

    #[test]
    fn mediating_morphism_of_projections_is_identity() {
        let m1 = set_graph(&["a", "b"], &["(a,b)"]);
        let m2 = set_graph(&["c"], &["(c,c)"]);
        let p = structure_product(&[m1, m2]).unwrap();
        let med = p.mediate(&p.projections).unwrap();
        assert_eq!(med.components, StructureMorphism::identity(&p.structure).components);
    }

    #[test]
    fn digest_is_stable() {
        let a = set_graph(&["a", "b"], &["(a,b)"]);
        let b = set_graph(&["a", "b"], &["(a,b)"]);
        let c = set_graph(&["a", "b"], &["(b,a)"]);
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
