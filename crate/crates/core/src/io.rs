//! The canonical JSON workspace format and its loader.

use crate::error::{Error, Report, Result, Violation};
use crate::fincat::{bases, product, FinCategory, Presheaf, PresheafMap};
use crate::sigma::{Context, FuncProfile, Signature, Structure};
use crate::subobj::Subfunctor;
use crate::syntax::{parse_context, parse_formula, Formula};
use crate::ultra::{Family, FilterFin};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkspaceDoc {
    pub categories: BTreeMap<String, CategoryDoc>,
    pub presheaves: BTreeMap<String, PresheafDoc>,
    pub signatures: BTreeMap<String, SignatureDoc>,
    pub structures: BTreeMap<String, StructureDoc>,
    pub formulas: BTreeMap<String, FormulaDoc>,
    pub families: BTreeMap<String, Vec<String>>,
    pub filters: BTreeMap<String, FilterDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrowDoc {
    pub name: String,
    pub dom: String,
    pub cod: String,
}

/// Identities `id_<object>` are implicit; `compose` lists `[g, f, g∘f]`
/// for non-identity composable pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CategoryDoc {
    pub objects: Vec<String>,
    pub arrows: Vec<ArrowDoc>,
    pub compose: Vec<[String; 3]>,
}

/// Carriers per object; `action[f][x] = x · f`, identities implicit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PresheafBody {
    pub carriers: BTreeMap<String, Vec<String>>,
    pub action: BTreeMap<String, BTreeMap<String, String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresheafDoc {
    pub base: String,
    #[serde(flatten)]
    pub body: PresheafBody,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignatureDoc {
    pub sorts: Vec<String>,
    pub funcs: BTreeMap<String, FuncProfile>,
    pub rels: BTreeMap<String, Vec<String>>,
}

/// A named presheaf, a constant presheaf, or an inline one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SortDoc {
    Named(String),
    Constant { constant: Vec<String> },
    Inline(PresheafBody),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureDoc {
    pub signature: String,
    pub base: String,
    pub sorts: BTreeMap<String, SortDoc>,
    /// Per object: `[[arguments], value]` rows.
    #[serde(default)]
    pub funcs: BTreeMap<String, BTreeMap<String, Vec<(Vec<String>, String)>>>,
    /// Per object: related argument tuples.
    #[serde(default)]
    pub rels: BTreeMap<String, BTreeMap<String, Vec<Vec<String>>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormulaDoc {
    #[serde(default)]
    pub context: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterDoc {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub principal: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<Vec<String>>>,
}

fn merge_map<V>(into: &mut BTreeMap<String, V>, from: BTreeMap<String, V>, kind: &'static str) -> Result<()> {
    for (k, v) in from {
        if into.contains_key(&k) {
            return Err(Error::shape(format!("{kind} `{k}` is defined twice")));
        }
        into.insert(k, v);
    }
    Ok(())
}

impl WorkspaceDoc {
    pub fn merge(&mut self, other: WorkspaceDoc) -> Result<()> {
        merge_map(&mut self.categories, other.categories, "category")?;
        merge_map(&mut self.presheaves, other.presheaves, "presheaf")?;
        merge_map(&mut self.signatures, other.signatures, "signature")?;
        merge_map(&mut self.structures, other.structures, "structure")?;
        merge_map(&mut self.formulas, other.formulas, "formula")?;
        merge_map(&mut self.families, other.families, "family")?;
        merge_map(&mut self.filters, other.filters, "filter")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            col: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// JSON for `.json` files, the text DSL otherwise.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::precondition(format!("cannot read {}: {e}", path.display())))?;
        let doc = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            crate::dsl::compile(&text)
        };
        doc.map_err(|e| match e {
            Error::Parse { line, col, message } => Error::Parse {
                line,
                col,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })
    }
}

/// Every entity of a workspace, resolved and cross-checked.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    pub doc: WorkspaceDoc,
    pub categories: BTreeMap<String, Arc<FinCategory>>,
    pub presheaves: BTreeMap<String, Arc<Presheaf>>,
    pub signatures: BTreeMap<String, Arc<Signature>>,
    pub structures: BTreeMap<String, Arc<Structure>>,
    pub formulas: BTreeMap<String, (Context, Formula)>,
    pub families: BTreeMap<String, Family>,
    pub filters: BTreeMap<String, (String, FilterFin)>,
}

fn in_entity<T>(kind: &str, name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Shape(m) => Error::Shape(format!("{kind} `{name}`: {m}")),
        Error::Invalid { what, report } => Error::Invalid {
            what: format!("{kind} `{name}` ({what})"),
            report,
        },
        other => other,
    })
}

fn tag(report: &mut Report, kind: &str, name: &str, found: Report) {
    report.extend(
        found
            .into_iter()
            .map(|v| Violation::new(v.code, format!("{kind} `{name}`: {}", v.message))),
    );
}

/// The constant presheaf: the same set at every object, every arrow acting as identity.
pub fn constant_presheaf(base: &Arc<FinCategory>, elements: &[String]) -> Result<Presheaf> {
    let carriers = vec![elements.to_vec(); base.n_objects()];
    let action = (0..base.n_morphisms()).map(|_| (0..elements.len()).collect()).collect();
    Presheaf::new(base.clone(), carriers, action)
}

pub fn build_category(doc: &CategoryDoc) -> Result<FinCategory> {
    let mut b = FinCategory::builder().objects(doc.objects.iter().cloned());
    for a in &doc.arrows {
        b = b.arrow(&a.name, &a.dom, &a.cod);
    }
    for [g, f, h] in &doc.compose {
        b = b.compose(g, f, h);
    }
    b.build_unchecked()
}

impl Workspace {
    /// Resolves a document. Structural errors fail; axiom violations
    /// (functoriality, naturality, closure) are collected in the report.
    pub fn from_doc(doc: WorkspaceDoc) -> Result<(Workspace, Report)> {
        let mut ws = Workspace::default();
        let mut report = Vec::new();
        for (name, c) in &doc.categories {
            let cat = in_entity("category", name, build_category(c))?;
            tag(&mut report, "category", name, cat.validate());
            ws.categories.insert(name.clone(), Arc::new(cat));
        }
        for (name, p) in &doc.presheaves {
            let base = ws.base(&p.base)?;
            let ps = in_entity(
                "presheaf",
                name,
                Presheaf::from_named(base, &p.body.carriers, &p.body.action),
            )?;
            tag(&mut report, "presheaf", name, ps.validate());
            ws.presheaves.insert(name.clone(), Arc::new(ps));
        }
        for (name, s) in &doc.signatures {
            let sig = Signature {
                sorts: s.sorts.iter().cloned().collect(),
                funcs: s.funcs.clone(),
                rels: s.rels.clone(),
            };
            in_entity("signature", name, Error::check("signature", sig.validate()))?;
            ws.signatures.insert(name.clone(), Arc::new(sig));
        }
        for (name, s) in &doc.structures {
            let m = in_entity("structure", name, ws.build_structure(s))?;
            tag(&mut report, "structure", name, m.validate());
            ws.structures.insert(name.clone(), Arc::new(m));
        }
        for (name, f) in &doc.formulas {
            let ctx = parse_context(&f.context)?;
            let phi = parse_formula(&f.text)?;
            ws.formulas.insert(name.clone(), (ctx, phi));
        }
        for (name, members) in &doc.families {
            let ms = members
                .iter()
                .map(|m| ws.structure(m).cloned())
                .collect::<Result<Vec<_>>>()?;
            let fam = in_entity("family", name, Family::new(members.clone(), ms))?;
            ws.families.insert(name.clone(), fam);
        }
        for (name, f) in &doc.filters {
            let fam = ws.family(&f.family)?;
            let index = |l: &String| fam.index_of(l).ok_or_else(|| Error::unknown("family member", l.clone()));
            let filter = match (&f.principal, &f.members) {
                (Some(gen), None) => {
                    let mask = gen.iter().map(index).collect::<Result<Vec<_>>>()?.into_iter().fold(0, |m, i| m | 1 << i);
                    FilterFin::principal(fam.labels.clone(), mask)
                }
                (None, Some(members)) => {
                    let masks = members
                        .iter()
                        .map(|set| Ok(set.iter().map(index).collect::<Result<Vec<_>>>()?.into_iter().fold(0u32, |m, i| m | 1 << i)))
                        .collect::<Result<BTreeSet<u32>>>()?;
                    FilterFin::new(fam.labels.clone(), masks)
                }
                _ => Err(Error::shape("give exactly one of `principal` or `members`")),
            };
            let filter = in_entity("filter", name, filter)?;
            ws.filters.insert(name.clone(), (f.family.clone(), filter));
        }
        ws.doc = doc;
        Ok((ws, report))
    }

    /// Merges and resolves several files.
    pub fn load(paths: &[impl AsRef<Path>]) -> Result<(Workspace, Report)> {
        let mut doc = WorkspaceDoc::default();
        for p in paths {
            doc.merge(WorkspaceDoc::from_file(p.as_ref())?)?;
        }
        Workspace::from_doc(doc)
    }

    /// A workspace category, or one of the built-in bases.
    pub fn base(&self, name: &str) -> Result<Arc<FinCategory>> {
        self.categories
            .get(name)
            .cloned()
            .or_else(|| bases::by_name(name))
            .ok_or_else(|| Error::unknown("category", name))
    }

    pub fn structure(&self, name: &str) -> Result<&Arc<Structure>> {
        self.structures.get(name).ok_or_else(|| Error::unknown("structure", name))
    }

    pub fn family(&self, name: &str) -> Result<&Family> {
        self.families.get(name).ok_or_else(|| Error::unknown("family", name))
    }

    pub fn filter(&self, name: &str) -> Result<&(String, FilterFin)> {
        self.filters.get(name).ok_or_else(|| Error::unknown("filter", name))
    }

    pub fn formula(&self, name: &str) -> Result<&(Context, Formula)> {
        self.formulas.get(name).ok_or_else(|| Error::unknown("formula", name))
    }

    fn build_structure(&self, doc: &StructureDoc) -> Result<Structure> {
        let sig = self
            .signatures
            .get(&doc.signature)
            .cloned()
            .ok_or_else(|| Error::unknown("signature", &doc.signature))?;
        let base = self.base(&doc.base)?;
        let mut sorts = BTreeMap::new();
        for (s, sd) in &doc.sorts {
            let p = match sd {
                SortDoc::Named(p) => {
                    let ps = self.presheaves.get(p).ok_or_else(|| Error::unknown("presheaf", p))?;
                    if ps.base() != &base {
                        return Err(Error::shape(format!("presheaf `{p}` lives over another base")));
                    }
                    ps.clone()
                }
                SortDoc::Constant { constant } => Arc::new(constant_presheaf(&base, constant)?),
                SortDoc::Inline(body) => Arc::new(Presheaf::from_named(base.clone(), &body.carriers, &body.action)?),
            };
            sorts.insert(s.clone(), p);
        }
        for s in &sig.sorts {
            if !sorts.contains_key(s) {
                return Err(Error::unknown("sort interpretation", s));
            }
        }
        let arg_product = |args: &[String]| {
            let factors = args
                .iter()
                .map(|s| sorts.get(s).cloned().ok_or_else(|| Error::unknown("sort", s)))
                .collect::<Result<Vec<_>>>()?;
            product(&base, &factors)
        };
        let encode = |args: &[String], c: usize, ids: &[String], what: &str| -> Result<Vec<usize>> {
            if ids.len() != args.len() {
                return Err(Error::shape(format!("`{what}` expects {} argument(s)", args.len())));
            }
            args.iter()
                .zip(ids)
                .map(|(s, id)| {
                    sorts[s].element_index(c, id).ok_or_else(|| {
                        Error::shape(format!(
                            "`{what}`: `{id}` is not an element of sort `{s}` at `{}`",
                            base.object_name(c)
                        ))
                    })
                })
                .collect()
        };
        let object = |o: &str| base.object_index(o).ok_or_else(|| Error::unknown("object", o));

        let mut funcs = BTreeMap::new();
        for (f, table) in &doc.funcs {
            let prof = sig.func(f)?;
            let dom = arg_product(&prof.args)?;
            let cod = sorts.get(&prof.result).ok_or_else(|| Error::unknown("sort", &prof.result))?;
            let mut comps: Vec<Vec<Option<usize>>> = (0..base.n_objects()).map(|c| vec![None; dom.apex.size(c)]).collect();
            for (o, rows) in table {
                let c = object(o)?;
                for (args, value) in rows {
                    let t = dom.encode(c, &encode(&prof.args, c, args, f)?);
                    let v = cod.element_index(c, value).ok_or_else(|| {
                        Error::shape(format!("`{f}`: `{value}` is not an element of sort `{}` at `{o}`", prof.result))
                    })?;
                    if comps[c][t].replace(v).is_some_and(|old| old != v) {
                        return Err(Error::shape(format!("`{f}` is given two values at `{o}`")));
                    }
                }
            }
            let comps = comps
                .into_iter()
                .enumerate()
                .map(|(c, row)| {
                    row.into_iter()
                        .enumerate()
                        .map(|(t, v)| {
                            v.ok_or_else(|| {
                                Error::shape(format!(
                                    "`{f}` is undefined on `{}` at `{}`",
                                    dom.apex.element_id(c, t),
                                    base.object_name(c)
                                ))
                            })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            funcs.insert(f.clone(), PresheafMap::from_parts(dom.apex.clone(), cod.clone(), comps)?);
        }
        let mut rels = BTreeMap::new();
        for r in sig.rels.keys() {
            let args = sig.rel(r)?;
            let amb = arg_product(args)?;
            let mut parts: Vec<Vec<bool>> = (0..base.n_objects()).map(|c| vec![false; amb.apex.size(c)]).collect();
            if let Some(table) = doc.rels.get(r) {
                for (o, tuples) in table {
                    let c = object(o)?;
                    for ids in tuples {
                        parts[c][amb.encode(c, &encode(args, c, ids, r)?)] = true;
                    }
                }
            }
            rels.insert(r.clone(), Subfunctor::from_parts(amb.apex.clone(), parts)?);
        }
        if let Some(r) = doc.rels.keys().find(|r| !sig.rels.contains_key(*r)) {
            return Err(Error::unknown("relation symbol", r));
        }
        Structure::new(sig, base, sorts, funcs, rels)
    }
}
