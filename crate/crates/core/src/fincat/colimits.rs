//! Finite coproducts and directed colimits.

use super::{same_presheaf, FinCategory, Presheaf, PresheafMap};
use crate::error::{Error, Report, Result, Violation};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct Cocone {
    pub apex: Arc<Presheaf>,
    pub coprojections: Vec<PresheafMap>,
}

pub fn initial(base: &Arc<FinCategory>) -> Arc<Presheaf> {
    let carriers = vec![Vec::new(); base.n_objects()];
    let action = vec![Vec::new(); base.n_morphisms()];
    Arc::new(Presheaf::from_parts(base.clone(), carriers, action).expect("initial presheaf"))
}

/// Disjoint union; the element `e` of summand `k` is named `k:e`.
pub fn coproduct(base: &Arc<FinCategory>, summands: &[Arc<Presheaf>]) -> Result<Cocone> {
    if summands.iter().any(|s| s.base() != base) {
        return Err(Error::shape("coproduct summands live over different bases"));
    }
    let n_obj = base.n_objects();
    let offsets: Vec<Vec<usize>> = (0..n_obj)
        .map(|c| {
            summands
                .iter()
                .scan(0, |acc, s| {
                    let o = *acc;
                    *acc += s.size(c);
                    Some(o)
                })
                .collect()
        })
        .collect();
    let carriers = (0..n_obj)
        .map(|c| {
            summands
                .iter()
                .enumerate()
                .flat_map(|(k, s)| s.carrier(c).iter().map(move |e| format!("{k}:{e}")))
                .collect()
        })
        .collect();
    let action = (0..base.n_morphisms())
        .map(|f| {
            let a = base.dom(f);
            summands
                .iter()
                .enumerate()
                .flat_map(|(k, s)| s.action(f).iter().map(|&y| offsets[a][k] + y).collect::<Vec<_>>())
                .collect()
        })
        .collect();
    let apex = Arc::new(Presheaf::from_parts(base.clone(), carriers, action)?);
    let coprojections = summands
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let comps = (0..n_obj).map(|c| (0..s.size(c)).map(|x| offsets[c][k] + x).collect()).collect();
            PresheafMap::from_parts(s.clone(), apex.clone(), comps).expect("coprojection")
        })
        .collect();
    Ok(Cocone { apex, coprojections })
}

/// A diagram over an explicitly supplied directed poset of stages.
///
/// An arrow `i → j` is present exactly when `i ≤ j`; identities are included.
#[derive(Clone, Debug)]
pub struct DirectedDiagram {
    base: Arc<FinCategory>,
    stages: Vec<String>,
    nodes: Vec<Arc<Presheaf>>,
    arrows: BTreeMap<(usize, usize), PresheafMap>,
}

impl DirectedDiagram {
    pub fn new(
        base: Arc<FinCategory>,
        stages: Vec<String>,
        nodes: Vec<Arc<Presheaf>>,
        arrows: BTreeMap<(usize, usize), PresheafMap>,
    ) -> Result<Self> {
        if stages.len() != nodes.len() {
            return Err(Error::shape("one node per stage is required"));
        }
        if arrows.keys().any(|&(i, j)| i >= stages.len() || j >= stages.len()) {
            return Err(Error::shape("arrow between unknown stages"));
        }
        let d = DirectedDiagram {
            base,
            stages,
            nodes,
            arrows,
        };
        let report = d.validate();
        if report.iter().any(|v| v.code == "not-directed") {
            return Err(Error::Invalid {
                what: "directed diagram (index structure is not directed)".into(),
                report,
            });
        }
        Error::check("directed diagram", report)?;
        Ok(d)
    }

    /// Every arrow is the identity on one presheaf.
    pub fn constant(x: &Arc<Presheaf>, stages: Vec<String>, order: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let n = stages.len();
        let mut arrows = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                if i == j || order(i, j) {
                    arrows.insert((i, j), PresheafMap::identity(x));
                }
            }
        }
        Self::new(x.base().clone(), stages, vec![x.clone(); n], arrows)
    }

    pub fn base(&self) -> &Arc<FinCategory> {
        &self.base
    }

    pub fn stages(&self) -> &[String] {
        &self.stages
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn node(&self, i: usize) -> &Arc<Presheaf> {
        &self.nodes[i]
    }

    pub fn arrow(&self, i: usize, j: usize) -> Option<&PresheafMap> {
        self.arrows.get(&(i, j))
    }

    pub fn le(&self, i: usize, j: usize) -> bool {
        self.arrows.contains_key(&(i, j))
    }

    pub fn validate(&self) -> Report {
        let n = self.stages.len();
        let mut report = Vec::new();
        if n == 0 {
            report.push(Violation::new("not-directed", "a directed diagram needs at least one stage"));
            return report;
        }
        for (&(i, j), m) in &self.arrows {
            if !same_presheaf(m.src(), &self.nodes[i]) || !same_presheaf(m.dst(), &self.nodes[j]) {
                report.push(Violation::new(
                    "diagram-type",
                    format!("arrow {} → {} has the wrong endpoints", self.stages[i], self.stages[j]),
                ));
                continue;
            }
            for v in m.validate() {
                report.push(Violation::new(
                    "diagram-naturality",
                    format!("arrow {} → {}: {}", self.stages[i], self.stages[j], v.message),
                ));
            }
            if i != j && self.le(j, i) {
                report.push(Violation::new(
                    "not-directed",
                    format!("stages {} and {} are mutually related", self.stages[i], self.stages[j]),
                ));
            }
        }
        if !report.is_empty() {
            return report;
        }
        for i in 0..n {
            match self.arrow(i, i) {
                Some(m) if *m == PresheafMap::identity(&self.nodes[i]) => {}
                _ => report.push(Violation::new(
                    "not-directed",
                    format!("stage {} lacks its identity arrow", self.stages[i]),
                )),
            }
        }
        for (&(i, j), ij) in &self.arrows {
            for k in 0..n {
                if let Some(jk) = self.arrow(j, k) {
                    match self.arrow(i, k) {
                        None => report.push(Violation::new(
                            "not-directed",
                            format!(
                                "order is not transitive at {} ≤ {} ≤ {}",
                                self.stages[i], self.stages[j], self.stages[k]
                            ),
                        )),
                        Some(ik) => {
                            if jk.after(ij).ok().as_ref() != Some(ik) {
                                report.push(Violation::new(
                                    "diagram-functoriality",
                                    format!(
                                        "D({0} → {2}) ≠ D({1} → {2}) ∘ D({0} → {1})",
                                        self.stages[i], self.stages[j], self.stages[k]
                                    ),
                                ))
                            }
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if !(0..n).any(|k| self.le(i, k) && self.le(j, k)) {
                    report.push(Violation::new(
                        "not-directed",
                        format!("stages {} and {} have no common upper bound", self.stages[i], self.stages[j]),
                    ));
                }
            }
        }
        report
    }

    /// Stage indices ordered most-downstream first (most incoming arrows),
    /// ties broken by stage id.
    pub fn downstream_order(&self) -> Vec<usize> {
        let n = self.stages.len();
        let mut order: Vec<usize> = (0..n).collect();
        let indeg = |k: usize| (0..n).filter(|&i| self.le(i, k)).count();
        order.sort_by(|&a, &b| indeg(b).cmp(&indeg(a)).then_with(|| self.stages[a].cmp(&self.stages[b])));
        order
    }
}

/// The colimit of a directed diagram: germ classes of stage elements.
#[derive(Clone, Debug)]
pub struct DirectedColimit {
    pub apex: Arc<Presheaf>,
    pub coprojections: Vec<PresheafMap>,
    /// Canonical representative `(stage, element)` of each class, per object.
    pub representatives: Vec<Vec<(usize, usize)>>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

/// Stage-wise disjoint union modulo the germ relation. Each class is named
/// `stage:element` after its lexicographically least representative.
pub fn directed_colimit(d: &DirectedDiagram) -> Result<DirectedColimit> {
    let base = d.base.clone();
    let n = d.n_stages();
    let n_obj = base.n_objects();
    let mut class_of: Vec<Vec<Vec<usize>>> = Vec::with_capacity(n_obj);
    let mut representatives = Vec::with_capacity(n_obj);
    let mut carriers = Vec::with_capacity(n_obj);
    for c in 0..n_obj {
        let offsets: Vec<usize> = (0..n)
            .scan(0, |acc, i| {
                let o = *acc;
                *acc += d.nodes[i].size(c);
                Some(o)
            })
            .collect();
        let total: usize = (0..n).map(|i| d.nodes[i].size(c)).sum();
        let mut uf = UnionFind((0..total).collect());
        for (&(i, j), m) in &d.arrows {
            for x in 0..d.nodes[i].size(c) {
                uf.union(offsets[i] + x, offsets[j] + m.apply(c, x));
            }
        }
        let mut best: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for i in 0..n {
            for x in 0..d.nodes[i].size(c) {
                let root = uf.find(offsets[i] + x);
                let key = |(s, e): (usize, usize)| (d.stages[s].clone(), d.nodes[s].element_id(c, e).to_string());
                best.entry(root)
                    .and_modify(|cur| {
                        if key((i, x)) < key(*cur) {
                            *cur = (i, x);
                        }
                    })
                    .or_insert((i, x));
            }
        }
        let mut reps: Vec<(usize, (usize, usize))> = best.into_iter().collect();
        reps.sort_by(|a, b| {
            let ka = (&d.stages[a.1 .0], d.nodes[a.1 .0].element_id(c, a.1 .1));
            let kb = (&d.stages[b.1 .0], d.nodes[b.1 .0].element_id(c, b.1 .1));
            ka.cmp(&kb)
        });
        let root_to_class: BTreeMap<usize, usize> = reps.iter().enumerate().map(|(k, (r, _))| (*r, k)).collect();
        let classes: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..d.nodes[i].size(c)).map(|x| root_to_class[&uf.find(offsets[i] + x)]).collect())
            .collect();
        carriers.push(
            reps.iter()
                .map(|(_, (s, e))| format!("{}:{}", d.stages[*s], d.nodes[*s].element_id(c, *e)))
                .collect::<Vec<_>>(),
        );
        representatives.push(reps.into_iter().map(|(_, r)| r).collect::<Vec<_>>());
        class_of.push(classes);
    }
    let action = (0..base.n_morphisms())
        .map(|f| {
            let (a, b) = (base.dom(f), base.cod(f));
            representatives[b]
                .iter()
                .map(|&(s, e)| class_of[a][s][d.nodes[s].restrict(f, e)])
                .collect()
        })
        .collect();
    let apex = Arc::new(Presheaf::from_parts(base.clone(), carriers, action)?);
    let coprojections = (0..n)
        .map(|i| {
            let comps = (0..n_obj).map(|c| class_of[c][i].clone()).collect();
            PresheafMap::from_parts(d.nodes[i].clone(), apex.clone(), comps).expect("coprojection")
        })
        .collect();
    Ok(DirectedColimit {
        apex,
        coprojections,
        representatives,
    })
}
