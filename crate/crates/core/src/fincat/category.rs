use crate::error::{Error, Report, Result, Violation};
use std::collections::HashMap;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Morphism {
    pub name: String,
    pub dom: usize,
    pub cod: usize,
}

/// A finite category with a fully materialized composition table.
///
/// Objects and morphisms are addressed by position; names are only used for
/// lookup and serialization. `compose(g, f)` is `g ∘ f` (first `f`, then `g`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FinCategory {
    objects: Vec<String>,
    morphisms: Vec<Morphism>,
    identity: Vec<usize>,
    /// Row-major `compose[g * |Mor| + f]`.
    table: Vec<Option<usize>>,
    into: Vec<Vec<usize>>,
}

impl FinCategory {
    /// Assembles a category from raw tables without checking the axioms.
    ///
    /// Only structural problems (dangling indices, duplicate names, duplicate
    /// table entries) are rejected here; axiom violations are left for
    /// [`FinCategory::validate`] to report.
    pub fn from_parts(
        objects: Vec<String>,
        morphisms: Vec<Morphism>,
        identity: Vec<usize>,
        composites: impl IntoIterator<Item = (usize, usize, usize)>,
    ) -> Result<Self> {
        let n_obj = objects.len();
        let n_mor = morphisms.len();
        check_unique("object", objects.iter())?;
        check_unique("morphism", morphisms.iter().map(|m| &m.name))?;
        for m in &morphisms {
            if m.dom >= n_obj || m.cod >= n_obj {
                return Err(Error::shape(format!(
                    "morphism `{}` refers to a missing object",
                    m.name
                )));
            }
        }
        if identity.len() != n_obj || identity.iter().any(|&i| i >= n_mor) {
            return Err(Error::shape("identity table must name one morphism per object"));
        }
        let mut table = vec![None; n_mor * n_mor];
        for (g, f, h) in composites {
            if g >= n_mor || f >= n_mor || h >= n_mor {
                return Err(Error::shape("composition entry refers to a missing morphism"));
            }
            let slot = &mut table[g * n_mor + f];
            if slot.is_some() {
                return Err(Error::shape(format!(
                    "composite {} ∘ {} given twice",
                    morphisms[g].name, morphisms[f].name
                )));
            }
            *slot = Some(h);
        }
        let mut into = vec![Vec::new(); n_obj];
        for (i, m) in morphisms.iter().enumerate() {
            into[m.cod].push(i);
        }
        Ok(FinCategory {
            objects,
            morphisms,
            identity,
            table,
            into,
        })
    }

    pub fn builder() -> CategoryBuilder {
        CategoryBuilder::default()
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn morphisms(&self) -> &[Morphism] {
        &self.morphisms
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn n_morphisms(&self) -> usize {
        self.morphisms.len()
    }

    pub fn object_name(&self, c: usize) -> &str {
        &self.objects[c]
    }

    pub fn morphism_name(&self, m: usize) -> &str {
        &self.morphisms[m].name
    }

    pub fn object_index(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == name)
    }

    pub fn morphism_index(&self, name: &str) -> Option<usize> {
        self.morphisms.iter().position(|m| m.name == name)
    }

    pub fn dom(&self, m: usize) -> usize {
        self.morphisms[m].dom
    }

    pub fn cod(&self, m: usize) -> usize {
        self.morphisms[m].cod
    }

    pub fn id(&self, c: usize) -> usize {
        self.identity[c]
    }

    pub fn is_identity(&self, m: usize) -> bool {
        self.identity[self.morphisms[m].dom] == m
    }

    /// `g ∘ f`, or `None` when the table has no entry.
    pub fn compose(&self, g: usize, f: usize) -> Option<usize> {
        self.table[g * self.morphisms.len() + f]
    }

    /// All morphisms with codomain `c`, in index order.
    pub fn hom_into(&self, c: usize) -> &[usize] {
        &self.into[c]
    }

    pub fn hom(&self, a: usize, b: usize) -> impl Iterator<Item = usize> + '_ {
        self.into[b].iter().copied().filter(move |&m| self.morphisms[m].dom == a)
    }

    /// Composition table entries as `(g, f, g ∘ f)`.
    pub fn composites(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let n = self.morphisms.len();
        self.table
            .iter()
            .enumerate()
            .filter_map(move |(k, h)| h.map(|h| (k / n, k % n, h)))
    }

    pub fn validate(&self) -> Report {
        let mut report = Vec::new();
        let n = self.morphisms.len();
        for (c, &i) in self.identity.iter().enumerate() {
            let m = &self.morphisms[i];
            if m.dom != c || m.cod != c {
                report.push(Violation::new(
                    "identity-type",
                    format!("identity `{}` of `{}` is not an endomorphism of it", m.name, self.objects[c]),
                ));
            }
        }
        for g in 0..n {
            for f in 0..n {
                let composable = self.cod(f) == self.dom(g);
                match (composable, self.compose(g, f)) {
                    (true, None) => report.push(Violation::new(
                        "compose-missing",
                        format!("composite {} ∘ {} is undefined", self.morphism_name(g), self.morphism_name(f)),
                    )),
                    (false, Some(_)) => report.push(Violation::new(
                        "compose-spurious",
                        format!(
                            "composite {} ∘ {} is defined on a non-composable pair",
                            self.morphism_name(g),
                            self.morphism_name(f)
                        ),
                    )),
                    (true, Some(h)) if self.dom(h) != self.dom(f) || self.cod(h) != self.cod(g) => {
                        report.push(Violation::new(
                            "compose-type",
                            format!(
                                "composite {} ∘ {} = {} has the wrong domain or codomain",
                                self.morphism_name(g),
                                self.morphism_name(f),
                                self.morphism_name(h)
                            ),
                        ))
                    }
                    _ => {}
                }
            }
        }
        if !report.is_empty() {
            return report;
        }
        for f in 0..n {
            if self.compose(self.id(self.cod(f)), f) != Some(f) {
                report.push(Violation::new(
                    "identity-law",
                    format!("id ∘ {0} ≠ {0}", self.morphism_name(f)),
                ));
            }
            if self.compose(f, self.id(self.dom(f))) != Some(f) {
                report.push(Violation::new(
                    "identity-law",
                    format!("{0} ∘ id ≠ {0}", self.morphism_name(f)),
                ));
            }
        }
        for f in 0..n {
            for g in self.morphisms_from(self.cod(f)) {
                let gf = self.compose(g, f).expect("checked composable");
                for h in self.morphisms_from(self.cod(g)) {
                    let hg = self.compose(h, g).expect("checked composable");
                    if self.compose(h, gf) != self.compose(hg, f) {
                        report.push(Violation::new(
                            "associativity",
                            format!(
                                "({0} ∘ {1}) ∘ {2} ≠ {0} ∘ ({1} ∘ {2})",
                                self.morphism_name(h),
                                self.morphism_name(g),
                                self.morphism_name(f)
                            ),
                        ));
                    }
                }
            }
        }
        report
    }

    fn morphisms_from(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.morphisms.len()).filter(move |&m| self.morphisms[m].dom == c)
    }
}

fn check_unique<'a>(kind: &str, names: impl Iterator<Item = &'a String>) -> Result<()> {
    let mut seen = HashMap::new();
    for n in names {
        if seen.insert(n.as_str(), ()).is_some() {
            return Err(Error::shape(format!("duplicate {kind} name `{n}`")));
        }
    }
    Ok(())
}

/// Builds a category from its non-identity arrows.
///
/// Identities are named `id_<object>` and their composites are filled in
/// automatically; every composite of two non-identity arrows must be given.
#[derive(Clone, Debug, Default)]
pub struct CategoryBuilder {
    objects: Vec<String>,
    arrows: Vec<(String, String, String)>,
    composites: Vec<(String, String, String)>,
}

impl CategoryBuilder {
    pub fn object(mut self, name: impl Into<String>) -> Self {
        self.objects.push(name.into());
        self
    }

    pub fn objects<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.objects.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn arrow(mut self, name: impl Into<String>, dom: impl Into<String>, cod: impl Into<String>) -> Self {
        self.arrows.push((name.into(), dom.into(), cod.into()));
        self
    }

    /// Records `g ∘ f = h`.
    pub fn compose(mut self, g: impl Into<String>, f: impl Into<String>, h: impl Into<String>) -> Self {
        self.composites.push((g.into(), f.into(), h.into()));
        self
    }

    /// Builds without validating the axioms.
    pub fn build_unchecked(self) -> Result<FinCategory> {
        let mut morphisms = Vec::new();
        let obj = |name: &str| {
            self.objects
                .iter()
                .position(|o| o == name)
                .ok_or_else(|| Error::unknown("object", name))
        };
        let mut identity = Vec::new();
        for (c, name) in self.objects.iter().enumerate() {
            identity.push(morphisms.len());
            morphisms.push(Morphism {
                name: format!("id_{name}"),
                dom: c,
                cod: c,
            });
        }
        for (name, dom, cod) in &self.arrows {
            morphisms.push(Morphism {
                name: name.clone(),
                dom: obj(dom)?,
                cod: obj(cod)?,
            });
        }
        let mor = |name: &str| {
            morphisms
                .iter()
                .position(|m| m.name == name)
                .ok_or_else(|| Error::unknown("morphism", name))
        };
        let mut table = Vec::new();
        for m in 0..morphisms.len() {
            let (d, c) = (morphisms[m].dom, morphisms[m].cod);
            table.push((identity[c], m, m));
            if identity[d] != m {
                table.push((m, identity[d], m));
            }
        }
        for (g, f, h) in &self.composites {
            table.push((mor(g)?, mor(f)?, mor(h)?));
        }
        FinCategory::from_parts(self.objects.clone(), morphisms, identity, table)
    }

    pub fn build(self) -> Result<FinCategory> {
        let c = self.build_unchecked()?;
        Error::check("category", c.validate())?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::bases;

    #[test]
    fn terminal_is_valid() {
        assert!(bases::terminal().validate().is_empty());
    }

    #[test]
    fn graph_base_is_valid() {
        let g = bases::graph();
        assert!(g.validate().is_empty());
        assert_eq!(g.n_objects(), 2);
        assert_eq!(g.n_morphisms(), 4);
    }

    #[test]
    fn broken_identity_law_is_reported() {
        // arrow a → b with f ∘ id_a rewired to id_a
        let objects = vec!["a".to_string(), "b".to_string()];
        let morphisms = vec![
            Morphism { name: "id_a".into(), dom: 0, cod: 0 },
            Morphism { name: "id_b".into(), dom: 1, cod: 1 },
            Morphism { name: "f".into(), dom: 0, cod: 1 },
        ];
        let table = vec![(0, 0, 0), (1, 1, 1), (1, 2, 2), (2, 0, 1)];
        let c = FinCategory::from_parts(objects, morphisms, vec![0, 1], table).unwrap();
        let report = c.validate();
        assert!(report.iter().any(|v| v.code == "compose-type" || v.code == "identity-law"));
    }

    #[test]
    fn missing_composite_is_reported() {
        let c = FinCategory::builder()
            .objects(["a", "b", "c"])
            .arrow("f", "a", "b")
            .arrow("g", "b", "c")
            .build_unchecked()
            .unwrap();
        let report = c.validate();
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].code, "compose-missing");
    }

    #[test]
    fn duplicate_names_rejected() {
        let r = FinCategory::builder().objects(["a", "a"]).build_unchecked();
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    #[test]
    fn every_standard_base_is_valid() {
        for (name, c) in bases::all() {
            assert!(c.validate().is_empty(), "{name}: {:?}", c.validate());
        }
    }
}
