//! Filters on finite index sets, filtered products of structures as directed
//! colimits, and the Łoś verification harness.

use crate::error::{Error, Result, Violation};
use crate::fincat::{
    directed_colimit, essential_uniqueness, factor_through_colimit_stage, factor_through_epi, image_factorize,
    product, DirectedColimit, DirectedDiagram, PresheafMap, StageFactorization,
};
use crate::semantics::{forces, CheckLimits, Evaluator, GeneralizedElement};
use crate::sigma::{structure_product, Context, Structure, StructureMorphism, StructureProduct};
use crate::subobj::{base_change, sub_enumerate, Subfunctor};
use crate::syntax::Formula;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

/// Index sets are bitmasks over at most this many indices.
pub const MAX_INDICES: usize = 16;

fn bits(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| mask >> i & 1 == 1)
}

fn mask_name(labels: &[String], mask: u32) -> String {
    let names: Vec<&str> = bits(mask).map(|i| labels[i].as_str()).collect();
    format!("{{{}}}", names.join(","))
}

/// An indexed family of structures over one signature and base.
#[derive(Clone, Debug)]
pub struct Family {
    pub labels: Vec<String>,
    pub members: Vec<Arc<Structure>>,
}

impl Family {
    pub fn new(labels: Vec<String>, members: Vec<Arc<Structure>>) -> Result<Self> {
        if members.is_empty() || members.len() > MAX_INDICES {
            return Err(Error::precondition(format!(
                "a family needs between 1 and {MAX_INDICES} members"
            )));
        }
        if labels.len() != members.len() || labels.iter().collect::<BTreeSet<_>>().len() != labels.len() {
            return Err(Error::shape("family labels must be distinct, one per member"));
        }
        let first = &members[0];
        if members.iter().any(|m| m.sig() != first.sig() || m.base() != first.base()) {
            return Err(Error::shape("family members differ in signature or base"));
        }
        Ok(Family { labels, members })
    }

    /// Members labelled `M1`, `M2`, …
    pub fn numbered(members: Vec<Arc<Structure>>) -> Result<Self> {
        let labels = (1..=members.len()).map(|i| format!("M{i}")).collect();
        Family::new(labels, members)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn full_mask(&self) -> u32 {
        (1u32 << self.len()) - 1
    }

    pub fn sub(&self, mask: u32) -> Vec<Arc<Structure>> {
        bits(mask).map(|i| self.members[i].clone()).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A proper filter on a finite index set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilterFin {
    labels: Vec<String>,
    members: BTreeSet<u32>,
}

impl FilterFin {
    /// Validates the filter laws; the improper filter is rejected.
    pub fn new(labels: Vec<String>, members: BTreeSet<u32>) -> Result<Self> {
        if labels.is_empty() || labels.len() > MAX_INDICES {
            return Err(Error::precondition(format!("index sets have 1 to {MAX_INDICES} elements")));
        }
        let f = FilterFin { labels, members };
        Error::check("filter", f.law_violations())?;
        Ok(f)
    }

    /// All supersets of `j`.
    pub fn principal(labels: Vec<String>, j: u32) -> Result<Self> {
        let full = full(labels.len());
        if j == 0 {
            return Err(Error::precondition("the principal filter at ∅ is improper"));
        }
        if j & !full != 0 {
            return Err(Error::shape("generator is not a subset of the index set"));
        }
        let members = (0..=full).filter(|k| k & j == j).collect();
        FilterFin::new(labels, members)
    }

    pub fn principal_at(labels: &[String], names: &[&str]) -> Result<Self> {
        let mut mask = 0;
        for n in names {
            let i = labels
                .iter()
                .position(|l| l == n)
                .ok_or_else(|| Error::unknown("index", *n))?;
            mask |= 1 << i;
        }
        FilterFin::principal(labels.to_vec(), mask)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn members(&self) -> &BTreeSet<u32> {
        &self.members
    }

    pub fn full(&self) -> u32 {
        full(self.labels.len())
    }

    pub fn contains(&self, mask: u32) -> bool {
        self.members.contains(&mask)
    }

    pub fn law_violations(&self) -> Vec<Violation> {
        let full = self.full();
        let mut report = Vec::new();
        if !self.members.contains(&full) {
            report.push(Violation::new("filter-top", "the index set is not a member"));
        }
        if self.members.contains(&0) {
            report.push(Violation::new("filter-proper", "the empty set is a member"));
        }
        for &a in &self.members {
            if a & !full != 0 {
                report.push(Violation::new("filter-shape", format!("member {a:#b} exceeds the index set")));
                continue;
            }
            for &b in &self.members {
                if !self.members.contains(&(a & b)) {
                    report.push(Violation::new(
                        "filter-meet",
                        format!(
                            "{} ∩ {} is missing",
                            mask_name(&self.labels, a),
                            mask_name(&self.labels, b)
                        ),
                    ));
                }
            }
            for k in 0..=full {
                if k & a == a && !self.members.contains(&k) {
                    report.push(Violation::new(
                        "filter-up",
                        format!(
                            "{} is above {} but missing",
                            mask_name(&self.labels, k),
                            mask_name(&self.labels, a)
                        ),
                    ));
                }
            }
        }
        report
    }

    /// The least member; every filter on a finite set is principal.
    pub fn generator(&self) -> u32 {
        self.members.iter().fold(self.full(), |acc, &m| acc & m)
    }

    pub fn is_ultrafilter(&self) -> bool {
        self.generator().count_ones() == 1
    }

    /// The principal ultrafilter at the least index of the generator.
    pub fn extend_to_ultrafilter(&self) -> FilterFin {
        let g = self.generator();
        FilterFin::principal(self.labels.clone(), g & g.wrapping_neg()).expect("nonempty generator")
    }

    /// `F|_J = { J ∩ K | K ∈ F }`, re-indexed over `J`.
    pub fn restrict(&self, j: u32) -> Result<FilterFin> {
        if !self.contains(j) {
            return Err(Error::precondition(format!(
                "{} is not a member of the filter",
                mask_name(&self.labels, j)
            )));
        }
        let positions: Vec<usize> = bits(j).collect();
        let reindex = |k: u32| {
            positions
                .iter()
                .enumerate()
                .filter(|(_, &i)| k >> i & 1 == 1)
                .fold(0u32, |m, (p, _)| m | 1 << p)
        };
        let labels = positions.iter().map(|&i| self.labels[i].clone()).collect();
        let members = self.members.iter().map(|&k| reindex(k & j)).collect();
        FilterFin::new(labels, members)
    }

    pub fn name(&self, mask: u32) -> String {
        mask_name(&self.labels, mask)
    }

    /// Members as label sets.
    pub fn member_names(&self) -> Vec<String> {
        self.members.iter().map(|&m| self.name(m)).collect()
    }
}

fn full(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// `∏_F M` as the colimit of the `A_F` diagram, with its cocone.
#[derive(Clone, Debug)]
pub struct FilteredProduct {
    pub filter: FilterFin,
    pub family: Family,
    /// Members of `F`, largest first; stage 0 is the whole index set.
    pub stages: Vec<u32>,
    stage_of: BTreeMap<u32, usize>,
    pub products: Vec<StructureProduct>,
    pub diagrams: BTreeMap<String, DirectedDiagram>,
    pub colimits: BTreeMap<String, DirectedColimit>,
    pub structure: Arc<Structure>,
    pub cocone: Vec<StructureMorphism>,
}

pub fn filtered_product(filter: &FilterFin, family: &Family) -> Result<FilteredProduct> {
    if filter.labels() != family.labels.as_slice() {
        return Err(Error::shape("filter and family are indexed by different sets"));
    }
    let mut stages: Vec<u32> = filter.members().iter().copied().collect();
    stages.sort_by_key(|&m| (std::cmp::Reverse(m.count_ones()), bits(m).collect::<Vec<_>>()));
    let stage_of: BTreeMap<u32, usize> = stages.iter().enumerate().map(|(k, &m)| (m, k)).collect();
    let names: Vec<String> = stages.iter().map(|&m| filter.name(m)).collect();
    let products = stages
        .iter()
        .map(|&m| structure_product(&family.sub(m)))
        .collect::<Result<Vec<_>>>()?;

    let mut restrictions: BTreeMap<(usize, usize), StructureMorphism> = BTreeMap::new();
    for (a, &ja) in stages.iter().enumerate() {
        for (b, &jb) in stages.iter().enumerate() {
            if ja & jb == jb {
                let inside: Vec<usize> = bits(ja).collect();
                let positions: Vec<usize> = bits(jb).map(|i| inside.iter().position(|&x| x == i).unwrap()).collect();
                restrictions.insert((a, b), products[a].restrict_to(&products[b], &positions)?);
            }
        }
    }

    let first = &family.members[0];
    let sig = first.sig().clone();
    let base = first.base().clone();
    let mut diagrams = BTreeMap::new();
    let mut colimits = BTreeMap::new();
    for s in &sig.sorts {
        let nodes = products.iter().map(|p| p.sort_products[s].apex.clone()).collect();
        let arrows = restrictions
            .iter()
            .map(|(&k, h)| (k, h.components[s].clone()))
            .collect();
        let d = DirectedDiagram::new(base.clone(), names.clone(), nodes, arrows)?;
        colimits.insert(s.clone(), directed_colimit(&d)?);
        diagrams.insert(s.clone(), d);
    }

    let germs = Germs {
        stages: &stages,
        stage_of: &stage_of,
        diagrams: &diagrams,
        colimits: &colimits,
    };
    let sorts: BTreeMap<String, Arc<_>> = colimits.iter().map(|(s, c)| (s.clone(), c.apex.clone())).collect();
    let mut funcs = BTreeMap::new();
    for (f, prof) in &sig.funcs {
        let dom = product(&base, &prof.args.iter().map(|s| sorts[s].clone()).collect::<Vec<_>>())?;
        let comps = (0..base.n_objects())
            .map(|c| {
                (0..dom.apex.size(c))
                    .map(|t| {
                        let (k, coords) = germs.to_common_stage(&prof.args, c, &dom.decode(c, t));
                        let pk = &products[k].structure;
                        let v = pk.func(f).unwrap().apply(c, pk.arg_product(f).unwrap().encode(c, &coords));
                        colimits[&prof.result].coprojections[k].apply(c, v)
                    })
                    .collect()
            })
            .collect();
        funcs.insert(f.clone(), PresheafMap::from_parts(dom.apex.clone(), sorts[&prof.result].clone(), comps)?);
    }
    let mut rels = BTreeMap::new();
    for (r, args) in &sig.rels {
        let amb = product(&base, &args.iter().map(|s| sorts[s].clone()).collect::<Vec<_>>())?;
        let parts = (0..base.n_objects())
            .map(|c| {
                (0..amb.apex.size(c))
                    .map(|t| {
                        let (k, coords) = germs.to_common_stage(args, c, &amb.decode(c, t));
                        germs.somewhere_below(args, c, k, &coords, |k2, moved| {
                            let pk = &products[k2].structure;
                            pk.rel(r).unwrap().contains(c, pk.arg_product(r).unwrap().encode(c, moved))
                        })
                    })
                    .collect()
            })
            .collect();
        rels.insert(r.clone(), Subfunctor::from_parts(amb.apex.clone(), parts)?);
    }
    let structure = Arc::new(Structure::new(sig, base, sorts, funcs, rels)?);
    let cocone = products
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let comps = colimits
                .iter()
                .map(|(s, col)| (s.clone(), col.coprojections[k].clone()))
                .collect();
            StructureMorphism::new(p.structure.clone(), structure.clone(), comps)
        })
        .collect::<Result<_>>()?;
    Ok(FilteredProduct {
        filter: filter.clone(),
        family: family.clone(),
        stages,
        stage_of,
        products,
        diagrams,
        colimits,
        structure,
        cocone,
    })
}

/// Moving germ representatives between stages of the `A_F` diagrams.
struct Germs<'a> {
    stages: &'a [u32],
    stage_of: &'a BTreeMap<u32, usize>,
    diagrams: &'a BTreeMap<String, DirectedDiagram>,
    colimits: &'a BTreeMap<String, DirectedColimit>,
}

impl Germs<'_> {
    /// Representatives of `germs` (one per sort in `sorts`) moved to the
    /// intersection of their stages.
    fn to_common_stage(&self, sorts: &[String], c: usize, germs: &[usize]) -> (usize, Vec<usize>) {
        let reps: Vec<(usize, usize)> = sorts
            .iter()
            .zip(germs)
            .map(|(s, &g)| self.colimits[s].representatives[c][g])
            .collect();
        let mask = reps.iter().fold(self.stages[0], |m, &(k, _)| m & self.stages[k]);
        let k = self.stage_of[&mask];
        let coords = sorts
            .iter()
            .zip(&reps)
            .map(|(s, &(from, e))| self.diagrams[s].arrow(from, k).expect("arrow to a smaller stage").apply(c, e))
            .collect();
        (k, coords)
    }

    /// Whether `holds` is true of the tuple moved to some stage below `k`.
    fn somewhere_below(
        &self,
        sorts: &[String],
        c: usize,
        k: usize,
        coords: &[usize],
        holds: impl Fn(usize, &[usize]) -> bool,
    ) -> bool {
        (0..self.stages.len())
            .filter(|&k2| self.stages[k] & self.stages[k2] == self.stages[k2])
            .any(|k2| {
                let moved: Vec<usize> = sorts
                    .iter()
                    .zip(coords)
                    .map(|(s, &e)| self.diagrams[s].arrow(k, k2).unwrap().apply(c, e))
                    .collect();
                holds(k2, &moved)
            })
    }
}

impl FilteredProduct {
    fn germs(&self) -> Germs<'_> {
        Germs {
            stages: &self.stages,
            stage_of: &self.stage_of,
            diagrams: &self.diagrams,
            colimits: &self.colimits,
        }
    }

    pub fn stage_name(&self, k: usize) -> String {
        self.filter.name(self.stages[k])
    }

    /// `p_{I,J}` per stage, sortwise.
    pub fn projection(&self, from: usize, to: usize) -> Option<BTreeMap<String, &PresheafMap>> {
        self.diagrams
            .iter()
            .map(|(s, d)| d.arrow(from, to).map(|m| (s.clone(), m)))
            .collect()
    }

    /// Cocone law `μ_J' ∘ p_{J,J'} = μ_J` and joint surjectivity of the `μ_J`.
    pub fn cocone_report(&self) -> Vec<Violation> {
        let mut report = Vec::new();
        for (s, d) in &self.diagrams {
            let col = &self.colimits[s];
            for a in 0..self.stages.len() {
                for b in 0..self.stages.len() {
                    if let Some(p) = d.arrow(a, b) {
                        let composite = col.coprojections[b].after(p).expect("composable");
                        if composite.components() != col.coprojections[a].components() {
                            report.push(Violation::new(
                                "cocone",
                                format!("sort `{s}`: μ fails to commute from {} to {}", self.stage_name(a), self.stage_name(b)),
                            ));
                        }
                    }
                }
            }
            let base = d.base();
            for c in 0..base.n_objects() {
                let mut hit = vec![false; col.apex.size(c)];
                for mu in &col.coprojections {
                    mu.component(c).iter().for_each(|&g| hit[g] = true);
                }
                if hit.iter().any(|h| !h) {
                    report.push(Violation::new(
                        "cocone-epi",
                        format!("sort `{s}`: coprojections miss a germ at stage `{}`", base.object_name(c)),
                    ));
                }
            }
        }
        for (k, mu) in self.cocone.iter().enumerate() {
            for v in mu.validate() {
                report.push(Violation::new(v.code, format!("μ at {}: {}", self.stage_name(k), v.message)));
            }
        }
        report
    }

    /// Epi verdict of `p_{I,J}` for every `J ∈ F`.
    pub fn projections_epi(&self) -> Vec<(String, bool)> {
        (0..self.stages.len())
            .map(|k| {
                let p = self.projection(0, k).expect("I is the largest stage");
                (self.stage_name(k), p.values().all(|m| m.is_epi()))
            })
            .collect()
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.projections_epi().iter().all(|(_, ok)| *ok)
    }

    /// The canonical map `∏_F M → ∏_G M` onto the generator's product.
    pub fn to_generator(&self) -> Result<StructureMorphism> {
        let g = self.stages.len() - 1;
        debug_assert_eq!(self.stages[g], self.filter.generator());
        let target = self.products[g].structure.clone();
        let components = self
            .colimits
            .iter()
            .map(|(s, col)| {
                let d = &self.diagrams[s];
                let comps = col
                    .representatives
                    .iter()
                    .enumerate()
                    .map(|(c, reps)| reps.iter().map(|&(k, e)| d.arrow(k, g).unwrap().apply(c, e)).collect())
                    .collect();
                Ok((s.clone(), PresheafMap::from_parts(col.apex.clone(), target.sort(s)?.clone(), comps)?))
            })
            .collect::<Result<_>>()?;
        StructureMorphism::new(self.structure.clone(), target, components)
    }

    /// For a principal ultrafilter at `j`, the comparison `∏_F M → M_j`.
    pub fn comparison(&self) -> Result<StructureMorphism> {
        if !self.filter.is_ultrafilter() {
            return Err(Error::precondition("the comparison map needs a principal ultrafilter"));
        }
        let g = self.stages.len() - 1;
        self.products[g].projections[0].after(&self.to_generator()?)
    }

    /// The filtered product of the interpretations `[[x⃗.φ]]` in the stage
    /// products, as a subobject of `(∏_F M)_x⃗`.
    pub fn filtered_interpretation(&self, ctx: &Context, phi: &Formula) -> Result<Subfunctor> {
        let eval = Evaluator::global();
        let phi = phi.prepare(self.structure.sig(), ctx)?;
        let target = eval.context_object(&self.structure, ctx)?;
        let sorts = ctx.sorts();
        let interps = self
            .products
            .iter()
            .map(|p| eval.interp_formula(&p.structure, ctx, &phi))
            .collect::<Result<Vec<_>>>()?;
        let stage_ctx = self
            .products
            .iter()
            .map(|p| eval.context_object(&p.structure, ctx))
            .collect::<Result<Vec<_>>>()?;
        let germs = self.germs();
        let base = self.structure.base();
        let parts = (0..base.n_objects())
            .map(|c| {
                (0..target.apex.size(c))
                    .map(|t| {
                        let (k, coords) = germs.to_common_stage(&sorts, c, &target.decode(c, t));
                        germs.somewhere_below(&sorts, c, k, &coords, |k2, moved| {
                            interps[k2].contains(c, stage_ctx[k2].encode(c, moved))
                        })
                    })
                    .collect()
            })
            .collect();
        Subfunctor::new(target.apex.clone(), parts)
    }

    /// `[[x⃗.φ]]` in `∏_F M` equals the filtered product of interpretations.
    pub fn preserves(&self, ctx: &Context, phi: &Formula) -> Result<bool> {
        let direct = Evaluator::global().interp_formula(&self.structure, ctx, phi)?;
        Ok(direct == self.filtered_interpretation(ctx, phi)?)
    }
}

/// Epi verdicts of `p_{I,J}` for every `J ∈ F`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EpiReport {
    pub entries: Vec<(String, bool)>,
    pub all: bool,
}

pub fn projections_epi_check(filter: &FilterFin, family: &Family) -> Result<EpiReport> {
    let whole = structure_product(&family.members)?;
    let mut entries = Vec::new();
    for &j in filter.members() {
        let part = structure_product(&family.sub(j))?;
        let positions: Vec<usize> = bits(j).collect();
        let p = whole.restrict_to(&part, &positions)?;
        entries.push((filter.name(j), p.components.values().all(PresheafMap::is_epi)));
    }
    let all = entries.iter().all(|(_, ok)| *ok);
    Ok(EpiReport { entries, all })
}

// ------------------------------------------------------------------- Łoś

#[derive(Clone, Copy, Debug)]
pub struct LosOptions {
    pub limits: CheckLimits,
    /// Refuse to run when some `p_{I,J}` is not epi.
    pub enforce_hypotheses: bool,
}

impl Default for LosOptions {
    fn default() -> Self {
        LosOptions {
            limits: CheckLimits::default(),
            enforce_hypotheses: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub connective: &'static str,
    pub formula: String,
    pub forced: bool,
    pub detail: Value,
}

/// Finiteness of `Sub(U)` and stage factorizations of the descended element.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witnesses {
    pub hypotheses: bool,
    #[serde(rename = "monoInput")]
    pub mono_input: bool,
    pub subobjects: usize,
    pub stages: Vec<String>,
    #[serde(rename = "agreeAt")]
    pub agree_at: Vec<Option<String>>,
}

impl Witnesses {
    /// Every variable factors through a stage, essentially uniquely.
    pub fn hold(&self) -> bool {
        self.stages.len() == self.agree_at.len() && self.agree_at.iter().all(Option::is_some)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LosReport {
    pub formula: String,
    pub context: String,
    pub alpha: String,
    pub filter: String,
    pub lhs: bool,
    #[serde(rename = "rhsSet")]
    pub rhs_set: Vec<String>,
    #[serde(rename = "rhsInF")]
    pub rhs_in_f: bool,
    pub agree: bool,
    pub trace: Vec<TraceEntry>,
    pub witnesses: Witnesses,
}

impl LosReport {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("serializable")
    }
}

/// Checks `∏_F M ⊨_{(μ_I)_x⃗ ∘ α} φ  iff  {i | M_i ⊨_{(p_{I,i})_x⃗ ∘ α} φ} ∈ F`
/// for `α: U → (∏_I M_i)_x⃗`. A non-mono `α` is replaced by its image.
pub fn los_check(
    fp: &FilteredProduct,
    alpha: &GeneralizedElement,
    alpha_label: &str,
    phi: &Formula,
    opts: LosOptions,
) -> Result<LosReport> {
    if !fp.filter.is_ultrafilter() {
        return Err(Error::precondition("Łoś check needs an ultrafilter"));
    }
    let epi = fp.projections_epi();
    let hypotheses = epi.iter().all(|(_, ok)| *ok);
    if !hypotheses && opts.enforce_hypotheses {
        let failed: Vec<&str> = epi.iter().filter(|(_, ok)| !ok).map(|(j, _)| j.as_str()).collect();
        return Err(Error::precondition(format!(
            "projections onto {} are not epimorphisms",
            failed.join(", ")
        )));
    }
    let ctx = &alpha.ctx;
    let eval = Evaluator::global();
    let phi = phi.prepare(fp.structure.sig(), ctx)?;
    let whole = &fp.products[0];
    let ctx_i = eval.context_object(&whole.structure, ctx)?;
    if **alpha.map.dst() != *ctx_i.apex {
        return Err(Error::shape("α must land in the context object of the full product"));
    }
    let mono_input = alpha.map.is_mono();
    let a = if mono_input {
        alpha.map.with_dst(ctx_i.apex.clone())?
    } else {
        image_factorize(&alpha.map).mono.with_dst(ctx_i.apex.clone())?
    };
    let sorts = ctx.sorts();

    let ctx_f = eval.context_object(&fp.structure, ctx)?;
    let mu = ctx_i.map_product(
        &ctx_f,
        &sorts.iter().map(|s| fp.cocone[0].components[s].clone()).collect::<Vec<_>>(),
    )?;
    let descended = mu.after(&a)?;
    let lhs = forces(&fp.structure, &GeneralizedElement { ctx: ctx.clone(), map: descended.clone() }, &phi)?.verdict;

    let mut rhs_mask = 0u32;
    for (i, m) in fp.family.members.iter().enumerate() {
        let ctx_m = eval.context_object(m, ctx)?;
        let p = ctx_i.map_product(
            &ctx_m,
            &sorts.iter().map(|s| whole.projections[i].components[s].clone()).collect::<Vec<_>>(),
        )?;
        let gen = GeneralizedElement {
            ctx: ctx.clone(),
            map: p.after(&a)?,
        };
        if forces(m, &gen, &phi)?.verdict {
            rhs_mask |= 1 << i;
        }
    }
    let rhs_in_f = fp.filter.contains(rhs_mask);

    let u = a.src().clone();
    let subobjects = sub_enumerate(&u, opts.limits.max_subobjects)?.len();
    let mut stages = Vec::new();
    let mut agree_at = Vec::new();
    for (k, s) in sorts.iter().enumerate() {
        let (d, col) = (&fp.diagrams[s], &fp.colimits[s]);
        let uk = ctx_f.legs[k].after(&descended)?.with_dst(col.apex.clone())?;
        let found = factor_through_colimit_stage(&uk, d, col)?;
        let given = StageFactorization {
            stage: 0,
            map: ctx_i.legs[k].after(&a)?.with_dst(d.node(0).clone())?,
        };
        stages.push(fp.stage_name(found.stage));
        agree_at.push(essential_uniqueness(d, &given, &found).map(|k| fp.stage_name(k)));
    }

    let mut trace = Vec::new();
    descend(fp, ctx, &descended, &phi, &mut trace)?;

    Ok(LosReport {
        formula: phi.to_string(),
        context: ctx.to_string(),
        alpha: alpha_label.to_string(),
        filter: fp.filter.name(fp.filter.generator()),
        lhs,
        rhs_set: bits(rhs_mask).map(|i| fp.family.labels[i].clone()).collect(),
        rhs_in_f,
        agree: lhs == rhs_in_f,
        trace,
        witnesses: Witnesses {
            hypotheses,
            mono_input,
            subobjects,
            stages,
            agree_at,
        },
    })
}

/// Records the canonical witnesses for `∨` and `∃` along `α` into `∏_F M`,
/// descending through conjunctions, disjunctions and existentials.
fn descend(
    fp: &FilteredProduct,
    ctx: &Context,
    alpha: &PresheafMap,
    phi: &Formula,
    trace: &mut Vec<TraceEntry>,
) -> Result<()> {
    let m = &fp.structure;
    let eval = Evaluator::global();
    let forced_here = |ctx: &Context, map: &PresheafMap, f: &Formula| -> Result<bool> {
        let s = eval.formula_in(m, ctx, f)?;
        Ok((0..m.base().n_objects()).all(|c| map.component(c).iter().all(|&x| s.contains(c, x))))
    };
    let forced = forced_here(ctx, alpha, phi)?;
    match phi {
        Formula::And(a, b) => {
            descend(fp, ctx, alpha, a, trace)?;
            descend(fp, ctx, alpha, b, trace)?;
        }
        Formula::Or(a, b) => {
            let v = base_change(alpha, &eval.formula_in(m, ctx, a)?)?;
            let w = base_change(alpha, &eval.formula_in(m, ctx, b)?)?;
            let cover = v.join(&w)?.is_top();
            trace.push(TraceEntry {
                connective: "or",
                formula: phi.to_string(),
                forced,
                detail: json!({"left": v.count(), "right": w.count(), "cover": cover}),
            });
            descend(fp, ctx, &alpha.after(&v.to_presheaf().1)?, a, trace)?;
            descend(fp, ctx, &alpha.after(&w.to_presheaf().1)?, b, trace)?;
        }
        Formula::Exists(y, s, body) => {
            let ext = ctx.extend(y, s);
            let ms = m.sort(s)?.clone();
            let uxm = product(m.base(), &[alpha.src().clone(), ms])?;
            let target = eval.context_object(m, &ext)?;
            let here = eval.context_object(m, ctx)?;
            let a_then = alpha.after(&uxm.legs[0])?;
            let mut maps = here.legs.iter().map(|l| l.after(&a_then)).collect::<Result<Vec<_>>>()?;
            maps.push(uxm.legs[1].with_dst(target.factors[ctx.len()].clone())?);
            let pair = target.pairing(&uxm.apex, &maps)?;
            let v = base_change(&pair, &eval.formula_in(m, &ext, body)?)?;
            let (_, incl) = v.to_presheaf();
            let p = uxm.legs[0].after(&incl)?;
            let beta = uxm.legs[1].after(&incl)?;
            let mu_s = &fp.cocone[0].components[s];
            let descended = if mu_s.is_epi() {
                Some(factor_through_epi(&beta.with_dst(mu_s.dst().clone())?, mu_s)?.is_some())
            } else {
                None
            };
            trace.push(TraceEntry {
                connective: "exists",
                formula: phi.to_string(),
                forced,
                detail: json!({"witnesses": v.count(), "coverEpi": p.is_epi(), "betaDescends": descended}),
            });
            descend(fp, &ext, &pair.after(&incl)?, body, trace)?;
        }
        Formula::Implies(..) | Formula::Not(..) | Formula::Forall(..) => {
            let name = match phi {
                Formula::Implies(..) => "implies",
                Formula::Not(..) => "not",
                _ => "forall",
            };
            trace.push(TraceEntry {
                connective: name,
                formula: phi.to_string(),
                forced,
                detail: json!({"domain": alpha.src().total_size()}),
            });
        }
        _ => {}
    }
    Ok(())
}

/// Łoś for a sentence, at the identity of the terminal context object.
pub fn sentence_check(fp: &FilteredProduct, phi: &Formula, opts: LosOptions) -> Result<LosReport> {
    let ctx = Context::empty();
    let phi = phi.prepare(fp.structure.sig(), &ctx)?;
    let alpha = GeneralizedElement::identity(&fp.products[0].structure, ctx)?;
    los_check(fp, &alpha, "identity", &phi, opts)
}

/// All subobject inclusions into `(∏_I M_i)_x⃗`, labelled `sub#k`.
pub fn subobject_alphas(fp: &FilteredProduct, ctx: &Context, cap: usize) -> Result<Vec<(String, GeneralizedElement)>> {
    let ctx_i = Evaluator::global().context_object(&fp.products[0].structure, ctx)?;
    Ok(sub_enumerate(&ctx_i.apex, cap)?
        .elements
        .iter()
        .enumerate()
        .map(|(k, s)| (format!("sub#{k}"), GeneralizedElement::from_subobject(ctx.clone(), s)))
        .collect())
}

/// Runs `los_check` over every `(formula, α)` pair in parallel; results
/// come back in input order.
pub fn los_sweep(
    fp: &FilteredProduct,
    cases: &[(Context, Formula)],
    all_alphas: bool,
    opts: LosOptions,
) -> Result<Vec<LosReport>> {
    let mut jobs = Vec::new();
    for (ctx, phi) in cases {
        let alphas = if all_alphas {
            subobject_alphas(fp, ctx, opts.limits.max_subobjects)?
        } else {
            vec![("identity".to_string(), GeneralizedElement::identity(&fp.products[0].structure, ctx.clone())?)]
        };
        jobs.extend(alphas.into_iter().map(|(label, a)| (label, a, phi.clone())));
    }
    jobs.par_iter()
        .map(|(label, a, phi)| los_check(fp, a, label, phi, opts))
        .collect()
}

/// `{x⃗ | φ}` in `∏_J M_j` against `∏_J {x⃗ | φ}_{M_j}`; reports, never asserts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LemmaProbe {
    pub formula: String,
    pub indices: String,
    pub equal: bool,
    #[serde(rename = "inProduct")]
    pub in_product: usize,
    #[serde(rename = "productOfInterpretations")]
    pub product_of_interpretations: usize,
    pub counterexample: Option<(String, String)>,
}

pub fn lemma_probe(family: &Family, j: u32, ctx: &Context, phi: &Formula) -> Result<LemmaProbe> {
    if j == 0 || j & !family.full_mask() != 0 {
        return Err(Error::precondition("J must be a nonempty subset of the index set"));
    }
    let eval = Evaluator::global();
    let members = family.sub(j);
    let prod = structure_product(&members)?;
    let ctx_p = eval.context_object(&prod.structure, ctx)?;
    let direct = eval.interp_formula(&prod.structure, ctx, phi)?;
    let mut componentwise = Subfunctor::top(&ctx_p.apex);
    for (k, m) in members.iter().enumerate() {
        let ctx_m = eval.context_object(m, ctx)?;
        let p = ctx_p.map_product(
            &ctx_m,
            &ctx.sorts().iter().map(|s| prod.projections[k].components[s].clone()).collect::<Vec<_>>(),
        )?;
        componentwise = componentwise.meet(&base_change(&p, &eval.interp_formula(m, ctx, phi)?)?)?;
    }
    let base = prod.structure.base();
    let counterexample = (0..base.n_objects()).find_map(|c| {
        (0..ctx_p.apex.size(c))
            .find(|&t| direct.contains(c, t) != componentwise.contains(c, t))
            .map(|t| (base.object_name(c).to_string(), ctx_p.apex.element_id(c, t).to_string()))
    });
    Ok(LemmaProbe {
        formula: phi.to_string(),
        indices: mask_name(&family.labels, j),
        equal: counterexample.is_none(),
        in_product: direct.count(),
        product_of_interpretations: componentwise.count(),
        counterexample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::{bases, presheaf_from_lists};
    use crate::sigma::Signature;
    use crate::syntax::parse_formula;

    fn labels(n: usize) -> Vec<String> {
        (1..=n).map(|i| i.to_string()).collect()
    }

    fn set_graph(nodes: &[&str], edges: &[&str]) -> Arc<Structure> {
        let sig = Arc::new(Signature::new(["node"]).with_rel("adj", &["node", "node"]));
        let x = presheaf_from_lists(&bases::terminal(), &[("pt", nodes)], &[]);
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
    fn principal_filters() {
        let f = FilterFin::principal(labels(3), 0b011).unwrap();
        assert_eq!(f.member_names(), vec!["{1,2}", "{1,2,3}"]);
        assert!(FilterFin::principal(labels(2), 0b01).unwrap().is_ultrafilter());
        assert_eq!(f.extend_to_ultrafilter(), FilterFin::principal(labels(3), 0b001).unwrap());
        assert!(matches!(FilterFin::principal(labels(2), 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn filter_laws_are_enforced() {
        assert!(FilterFin::new(labels(2), BTreeSet::from([0b01, 0b10, 0b11])).is_err());
        assert!(FilterFin::new(labels(2), BTreeSet::from([0b01])).is_err());
        for n in 1..=4 {
            for j in 1..(1u32 << n) {
                assert!(FilterFin::principal(labels(n), j).unwrap().law_violations().is_empty());
            }
        }
    }

    #[test]
    fn restriction() {
        let f = FilterFin::principal(labels(3), 0b001).unwrap();
        assert_eq!(f.restrict(0b111).unwrap(), f);
        let r = f.restrict(0b011).unwrap();
        assert_eq!(r, FilterFin::principal(vec!["1".into(), "2".into()], 0b01).unwrap());
        let own = FilterFin::principal(labels(3), 0b011).unwrap().restrict(0b011).unwrap();
        assert_eq!(own.members().len(), 1);
        assert!(matches!(f.restrict(0b010), Err(Error::Precondition(_))));
    }

    #[test]
    fn principal_collapse_is_an_iso() {
        let m1 = set_graph(&["a", "b"], &["(a,b)"]);
        let m2 = set_graph(&["c"], &[]);
        let fam = Family::new(labels(2), vec![m1.clone(), m2.clone()]).unwrap();
        for j in 0..2 {
            let f = FilterFin::principal(labels(2), 1 << j).unwrap();
            let fp = filtered_product(&f, &fam).unwrap();
            assert!(fp.cocone_report().is_empty());
            let cmp = fp.comparison().unwrap();
            assert!(Arc::ptr_eq(&cmp.dst, &fam.members[j]) || *cmp.dst == *fam.members[j]);
            assert!(cmp.is_iso());
        }
    }

    #[test]
    fn singleton_family() {
        let m = set_graph(&["a", "b"], &["(a,b)"]);
        let fam = Family::new(labels(1), vec![m]).unwrap();
        let fp = filtered_product(&FilterFin::principal(labels(1), 1).unwrap(), &fam).unwrap();
        assert!(fp.comparison().unwrap().is_iso());
        assert!(fp.hypotheses_hold());
    }

    #[test]
    fn los_principal_examples() {
        let m1 = set_graph(&["a", "b"], &["(a,b)"]);
        let m2 = set_graph(&["c"], &[]);
        let fam = Family::new(labels(2), vec![m1, m2]).unwrap();
        let phi = parse_formula("exists y:node. exists z:node. adj(y,z)").unwrap();
        let fp1 = filtered_product(&FilterFin::principal(labels(2), 0b01).unwrap(), &fam).unwrap();
        let r = sentence_check(&fp1, &phi, LosOptions::default()).unwrap();
        assert!(r.lhs && r.rhs_in_f && r.agree);
        assert_eq!(r.rhs_set, vec!["1"]);
        assert!(r.witnesses.hold());
        let fp2 = filtered_product(&FilterFin::principal(labels(2), 0b10).unwrap(), &fam).unwrap();
        let r = sentence_check(&fp2, &phi, LosOptions::default()).unwrap();
        assert!(!r.lhs && !r.rhs_in_f && r.agree);
        let bottom = sentence_check(&fp2, &Formula::Bottom, LosOptions::default()).unwrap();
        assert!(!bottom.lhs && !bottom.rhs_in_f);
        let top = sentence_check(&fp2, &Formula::Top, LosOptions::default()).unwrap();
        assert!(top.lhs && top.rhs_in_f);
        assert!(matches!(
            sentence_check(&fp2, &parse_formula("adj(y,y)").unwrap(), LosOptions::default()),
            Err(Error::UnsuitableContext { .. })
        ));
    }

    #[test]
    fn sweep_over_subobjects_agrees() {
        let m1 = set_graph(&["a", "b"], &["(a,b)", "(b,b)"]);
        let m2 = set_graph(&["c"], &[]);
        let fam = Family::new(labels(2), vec![m1, m2]).unwrap();
        let ctx = Context::new([("y", "node")]).unwrap();
        let cases = vec![
            (ctx.clone(), parse_formula("exists z:node. adj(y,z)").unwrap()),
            (ctx.clone(), parse_formula("~adj(y,y) \\/ forall z:node. adj(z,y)").unwrap()),
        ];
        for j in 0..2 {
            let fp = filtered_product(&FilterFin::principal(labels(2), 1 << j).unwrap(), &fam).unwrap();
            for r in los_sweep(&fp, &cases, true, LosOptions::default()).unwrap() {
                assert!(r.agree, "{r:?}");
                assert!(r.witnesses.hold());
            }
        }
    }

    #[test]
    fn empty_factor_blocks_epi() {
        let m1 = set_graph(&["a"], &[]);
        let m2 = set_graph(&[], &[]);
        let fam = Family::new(labels(2), vec![m1, m2]).unwrap();
        let f = FilterFin::principal(labels(2), 0b01).unwrap();
        let rep = projections_epi_check(&f, &fam).unwrap();
        assert!(!rep.all);
        let fp = filtered_product(&f, &fam).unwrap();
        assert!(matches!(sentence_check(&fp, &Formula::Top, LosOptions::default()), Err(Error::Precondition(_))));
        let relaxed = LosOptions {
            enforce_hypotheses: false,
            ..Default::default()
        };
        let r = sentence_check(&fp, &Formula::Top, relaxed).unwrap();
        assert!(!r.witnesses.hypotheses);
    }

    #[test]
    fn atomic_formulas_are_preserved() {
        let m1 = set_graph(&["a", "b"], &["(a,b)"]);
        let m2 = set_graph(&["c", "d"], &["(c,c)", "(d,c)"]);
        let fam = Family::new(labels(2), vec![m1, m2]).unwrap();
        let ctx = Context::new([("y", "node"), ("z", "node")]).unwrap();
        for j in 1..4 {
            let fp = filtered_product(&FilterFin::principal(labels(2), j).unwrap(), &fam).unwrap();
            for phi in ["adj(y,z)", "y = z", "adj(z,y)"] {
                assert!(fp.preserves(&ctx, &parse_formula(phi).unwrap()).unwrap(), "{phi}");
            }
        }
    }

    #[test]
    fn lemma_probe_on_atoms_and_disjunction() {
        let sig = Arc::new(Signature::new(["s"]).with_rel("p", &["s"]).with_rel("q", &["s"]));
        let pt = presheaf_from_lists(&bases::terminal(), &[("pt", &["x"])], &[]);
        let make = |p: bool, q: bool| {
            let pick = |b: bool| {
                let ids = if b { vec!["x".to_string()] } else { vec![] };
                Subfunctor::from_named(pt.clone(), &BTreeMap::from([("pt".to_string(), ids)])).unwrap()
            };
            Arc::new(
                Structure::new(
                    sig.clone(),
                    pt.base().clone(),
                    BTreeMap::from([("s".into(), pt.clone())]),
                    BTreeMap::new(),
                    BTreeMap::from([("p".into(), pick(p)), ("q".into(), pick(q))]),
                )
                .unwrap(),
            )
        };
        let fam = Family::new(labels(2), vec![make(true, false), make(false, true)]).unwrap();
        let ctx = Context::new([("v", "s")]).unwrap();
        assert!(lemma_probe(&fam, 0b11, &ctx, &parse_formula("p(v)").unwrap()).unwrap().equal);
        assert!(lemma_probe(&fam, 0b11, &ctx, &parse_formula("v = v").unwrap()).unwrap().equal);
        let or = lemma_probe(&fam, 0b11, &ctx, &parse_formula("p(v) \\/ q(v)").unwrap()).unwrap();
        assert!(!or.equal);
        assert_eq!((or.in_product, or.product_of_interpretations), (0, 1));
    }
}
