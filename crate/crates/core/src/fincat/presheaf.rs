use super::FinCategory;
use crate::error::{Error, Report, Result, Violation};
use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

/// A contravariant functor from a finite base category to finite sets.
///
/// `carriers[c]` lists the element ids at stage `c`; `action[f]` for
/// `f: a → b` sends an index into `carriers[b]` to an index into `carriers[a]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Presheaf {
    base: Arc<FinCategory>,
    carriers: Vec<Vec<String>>,
    action: Vec<Vec<usize>>,
}

impl Presheaf {
    /// Structural assembly; functoriality is checked by [`Presheaf::validate`].
    pub fn from_parts(base: Arc<FinCategory>, carriers: Vec<Vec<String>>, action: Vec<Vec<usize>>) -> Result<Self> {
        if carriers.len() != base.n_objects() {
            return Err(Error::shape("presheaf needs one carrier per object"));
        }
        for (c, carrier) in carriers.iter().enumerate() {
            let mut seen = HashSet::new();
            for e in carrier {
                if !seen.insert(e.as_str()) {
                    return Err(Error::shape(format!(
                        "element `{e}` appears twice at stage `{}`",
                        base.object_name(c)
                    )));
                }
            }
        }
        if action.len() != base.n_morphisms() {
            return Err(Error::shape("presheaf needs one action per morphism"));
        }
        for (f, table) in action.iter().enumerate() {
            let (a, b) = (base.dom(f), base.cod(f));
            if table.len() != carriers[b].len() || table.iter().any(|&x| x >= carriers[a].len()) {
                return Err(Error::shape(format!(
                    "action of `{}` is not a function {} → {}",
                    base.morphism_name(f),
                    base.object_name(b),
                    base.object_name(a)
                )));
            }
        }
        Ok(Presheaf { base, carriers, action })
    }

    pub fn new(base: Arc<FinCategory>, carriers: Vec<Vec<String>>, action: Vec<Vec<usize>>) -> Result<Self> {
        let p = Self::from_parts(base, carriers, action)?;
        Error::check("presheaf", p.validate())?;
        Ok(p)
    }

    /// Builds from element names. Identity actions may be omitted.
    pub fn from_named(
        base: Arc<FinCategory>,
        carriers: &BTreeMap<String, Vec<String>>,
        actions: &BTreeMap<String, BTreeMap<String, String>>,
    ) -> Result<Self> {
        let mut cs = vec![Vec::new(); base.n_objects()];
        for (obj, elems) in carriers {
            let c = base.object_index(obj).ok_or_else(|| Error::unknown("object", obj))?;
            cs[c] = elems.clone();
        }
        for name in actions.keys() {
            if base.morphism_index(name).is_none() {
                return Err(Error::unknown("morphism", name));
            }
        }
        let mut action = Vec::with_capacity(base.n_morphisms());
        for f in 0..base.n_morphisms() {
            let (a, b) = (base.dom(f), base.cod(f));
            let fname = base.morphism_name(f);
            let table = match actions.get(fname) {
                Some(t) => t,
                None if base.is_identity(f) => {
                    action.push((0..cs[b].len()).collect());
                    continue;
                }
                None if cs[b].is_empty() => {
                    action.push(Vec::new());
                    continue;
                }
                None => return Err(Error::shape(format!("no action given for `{fname}`"))),
            };
            let mut row = Vec::with_capacity(cs[b].len());
            for x in &cs[b] {
                let y = table.get(x).ok_or_else(|| {
                    Error::shape(format!("action of `{fname}` is undefined on `{x}`"))
                })?;
                let yi = cs[a].iter().position(|e| e == y).ok_or_else(|| {
                    Error::shape(format!(
                        "action of `{fname}` sends `{x}` to `{y}`, which is not in stage `{}`",
                        base.object_name(a)
                    ))
                })?;
                row.push(yi);
            }
            if table.len() != cs[b].len() {
                return Err(Error::shape(format!("action of `{fname}` mentions unknown elements")));
            }
            action.push(row);
        }
        Self::from_parts(base, cs, action)
    }

    /// The representable presheaf `Hom(-, d)`; element ids are morphism names.
    pub fn representable(base: &Arc<FinCategory>, d: usize) -> Self {
        let mut carriers = vec![Vec::new(); base.n_objects()];
        let mut index = vec![usize::MAX; base.n_morphisms()];
        for c in 0..base.n_objects() {
            for g in base.hom(c, d) {
                index[g] = carriers[c].len();
                carriers[c].push(base.morphism_name(g).to_string());
            }
        }
        let homs: Vec<Vec<usize>> = (0..base.n_objects()).map(|c| base.hom(c, d).collect()).collect();
        let action = (0..base.n_morphisms())
            .map(|f| {
                homs[base.cod(f)]
                    .iter()
                    .map(|&g| index[base.compose(g, f).expect("composable")])
                    .collect()
            })
            .collect();
        Presheaf {
            base: base.clone(),
            carriers,
            action,
        }
    }

    pub fn base(&self) -> &Arc<FinCategory> {
        &self.base
    }

    pub fn carrier(&self, c: usize) -> &[String] {
        &self.carriers[c]
    }

    pub fn carriers(&self) -> &[Vec<String>] {
        &self.carriers
    }

    pub fn size(&self, c: usize) -> usize {
        self.carriers[c].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.carriers.iter().map(Vec::len).collect()
    }

    pub fn total_size(&self) -> usize {
        self.carriers.iter().map(Vec::len).sum()
    }

    pub fn is_initial(&self) -> bool {
        self.total_size() == 0
    }

    /// `x · f` for `f: a → b`, `x ∈ X(b)`.
    pub fn restrict(&self, f: usize, x: usize) -> usize {
        self.action[f][x]
    }

    pub fn action(&self, f: usize) -> &[usize] {
        &self.action[f]
    }

    pub fn element_index(&self, c: usize, id: &str) -> Option<usize> {
        self.carriers[c].iter().position(|e| e == id)
    }

    pub fn element_id(&self, c: usize, x: usize) -> &str {
        &self.carriers[c][x]
    }

    pub fn validate(&self) -> Report {
        let base = &self.base;
        let mut report = Vec::new();
        for c in 0..base.n_objects() {
            let id = base.id(c);
            for x in 0..self.size(c) {
                if self.action[id][x] != x {
                    report.push(Violation::new(
                        "functor-identity",
                        format!(
                            "identity at `{}` moves element `{}`",
                            base.object_name(c),
                            self.carriers[c][x]
                        ),
                    ));
                }
            }
        }
        for (g, f, h) in base.composites() {
            if base.cod(f) != base.dom(g) {
                continue;
            }
            let top = base.cod(g);
            for x in 0..self.size(top) {
                let direct = self.action[h][x];
                let stepwise = self.action[f][self.action[g][x]];
                if direct != stepwise {
                    report.push(Violation::new(
                        "functor-composition",
                        format!(
                            "action of {} ∘ {} disagrees with composing actions on `{}` at stage `{}`",
                            base.morphism_name(g),
                            base.morphism_name(f),
                            self.carriers[top][x],
                            base.object_name(top)
                        ),
                    ));
                }
            }
        }
        report
    }
}

/// Pointer-or-structural equality for shared presheaves.
pub fn same_presheaf(a: &Arc<Presheaf>, b: &Arc<Presheaf>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// A natural transformation between presheaves over the same base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PresheafMap {
    src: Arc<Presheaf>,
    dst: Arc<Presheaf>,
    components: Vec<Vec<usize>>,
}

impl PresheafMap {
    pub fn from_parts(src: Arc<Presheaf>, dst: Arc<Presheaf>, components: Vec<Vec<usize>>) -> Result<Self> {
        if src.base() != dst.base() {
            return Err(Error::shape("presheaf map between different base categories"));
        }
        if components.len() != src.base().n_objects() {
            return Err(Error::shape("presheaf map needs one component per object"));
        }
        for (c, comp) in components.iter().enumerate() {
            if comp.len() != src.size(c) || comp.iter().any(|&y| y >= dst.size(c)) {
                return Err(Error::shape(format!(
                    "component at `{}` is not a function between the carriers",
                    src.base().object_name(c)
                )));
            }
        }
        Ok(PresheafMap { src, dst, components })
    }

    pub fn new(src: Arc<Presheaf>, dst: Arc<Presheaf>, components: Vec<Vec<usize>>) -> Result<Self> {
        let m = Self::from_parts(src, dst, components)?;
        Error::check("presheaf map", m.validate())?;
        Ok(m)
    }

    pub fn from_named(
        src: Arc<Presheaf>,
        dst: Arc<Presheaf>,
        components: &BTreeMap<String, BTreeMap<String, String>>,
    ) -> Result<Self> {
        let base = src.base().clone();
        let mut comps = Vec::with_capacity(base.n_objects());
        for c in 0..base.n_objects() {
            let obj = base.object_name(c);
            let empty = BTreeMap::new();
            let table = components.get(obj).unwrap_or(&empty);
            let mut row = Vec::with_capacity(src.size(c));
            for x in src.carrier(c) {
                let y = table
                    .get(x)
                    .ok_or_else(|| Error::shape(format!("component at `{obj}` is undefined on `{x}`")))?;
                row.push(
                    dst.element_index(c, y)
                        .ok_or_else(|| Error::shape(format!("`{y}` is not an element of the target at `{obj}`")))?,
                );
            }
            comps.push(row);
        }
        Self::from_parts(src, dst, comps)
    }

    pub fn identity(x: &Arc<Presheaf>) -> Self {
        PresheafMap {
            src: x.clone(),
            dst: x.clone(),
            components: x.carriers().iter().map(|c| (0..c.len()).collect()).collect(),
        }
    }

    pub fn src(&self) -> &Arc<Presheaf> {
        &self.src
    }

    pub fn dst(&self) -> &Arc<Presheaf> {
        &self.dst
    }

    pub fn base(&self) -> &Arc<FinCategory> {
        self.src.base()
    }

    pub fn apply(&self, c: usize, x: usize) -> usize {
        self.components[c][x]
    }

    pub fn component(&self, c: usize) -> &[usize] {
        &self.components[c]
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &PresheafMap) -> Result<PresheafMap> {
        if !same_presheaf(first.dst(), &self.src) {
            return Err(Error::shape("composing presheaf maps that do not meet"));
        }
        let components = first
            .components
            .iter()
            .enumerate()
            .map(|(c, comp)| comp.iter().map(|&y| self.components[c][y]).collect())
            .collect();
        Ok(PresheafMap {
            src: first.src.clone(),
            dst: self.dst.clone(),
            components,
        })
    }

    /// Same components, re-targeted at a structurally equal codomain.
    pub fn with_dst(&self, dst: Arc<Presheaf>) -> Result<PresheafMap> {
        if !same_presheaf(&dst, &self.dst) {
            return Err(Error::shape("re-targeting at a different presheaf"));
        }
        Ok(PresheafMap {
            src: self.src.clone(),
            dst,
            components: self.components.clone(),
        })
    }

    pub fn is_mono(&self) -> bool {
        self.components.iter().enumerate().all(|(c, comp)| {
            let mut hit = vec![false; self.dst.size(c)];
            comp.iter().all(|&y| !std::mem::replace(&mut hit[y], true))
        })
    }

    pub fn is_epi(&self) -> bool {
        self.components.iter().enumerate().all(|(c, comp)| {
            let mut hit = vec![false; self.dst.size(c)];
            comp.iter().for_each(|&y| hit[y] = true);
            hit.into_iter().all(|b| b)
        })
    }

    pub fn is_iso(&self) -> bool {
        self.is_mono() && self.is_epi()
    }

    pub fn validate(&self) -> Report {
        let base = self.src.base();
        let mut report = Vec::new();
        for f in 0..base.n_morphisms() {
            let (a, b) = (base.dom(f), base.cod(f));
            for x in 0..self.src.size(b) {
                let down_then_across = self.components[a][self.src.restrict(f, x)];
                let across_then_down = self.dst.restrict(f, self.components[b][x]);
                if down_then_across != across_then_down {
                    report.push(Violation::new(
                        "naturality",
                        format!(
                            "naturality fails for morphism `{}` on element `{}` at stage `{}`",
                            base.morphism_name(f),
                            self.src.element_id(b, x),
                            base.object_name(b)
                        ),
                    ));
                }
            }
        }
        report
    }
}
