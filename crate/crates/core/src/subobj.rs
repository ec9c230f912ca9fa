//! Subobjects of presheaves: the Heyting algebra `Sub(X)`, base change, the
//! quantifier adjoints `∃_f ⊣ f* ⊣ ∀_f`, and the subobject classifier `Ω`.

use crate::error::{Error, Report, Result, Violation};
use crate::fincat::{same_presheaf, subpresheaf, terminal, FinCategory, Presheaf, PresheafMap};
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Default bound on the number of subobjects [`sub_enumerate`] may produce.
pub const DEFAULT_SUB_CAP: usize = 4096;

/// A stage-indexed family of subsets closed under the presheaf action.
#[derive(Clone, Debug)]
pub struct Subfunctor {
    ambient: Arc<Presheaf>,
    parts: Vec<Vec<bool>>,
}

impl PartialEq for Subfunctor {
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts && same_presheaf(&self.ambient, &other.ambient)
    }
}

impl Eq for Subfunctor {}

impl Hash for Subfunctor {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.parts.hash(state);
    }
}

impl Subfunctor {
    pub fn new(ambient: Arc<Presheaf>, parts: Vec<Vec<bool>>) -> Result<Self> {
        let s = Self::from_parts(ambient, parts)?;
        Error::check("subfunctor", s.closure_violations())?;
        Ok(s)
    }

    /// Shape-checked but not closure-checked.
    pub fn from_parts(ambient: Arc<Presheaf>, parts: Vec<Vec<bool>>) -> Result<Self> {
        if parts.len() != ambient.base().n_objects()
            || parts.iter().enumerate().any(|(c, p)| p.len() != ambient.size(c))
        {
            return Err(Error::shape("subfunctor mask does not match the ambient carriers"));
        }
        Ok(Subfunctor { ambient, parts })
    }

    /// From element ids listed per object name; unlisted objects are empty.
    pub fn from_named(ambient: Arc<Presheaf>, parts: &BTreeMap<String, Vec<String>>) -> Result<Self> {
        let base = ambient.base().clone();
        let mut mask: Vec<Vec<bool>> = (0..base.n_objects()).map(|c| vec![false; ambient.size(c)]).collect();
        for (obj, elems) in parts {
            let c = base.object_index(obj).ok_or_else(|| Error::unknown("object", obj))?;
            for e in elems {
                let x = ambient
                    .element_index(c, e)
                    .ok_or_else(|| Error::shape(format!("`{e}` is not an element at stage `{obj}`")))?;
                mask[c][x] = true;
            }
        }
        Self::from_parts(ambient, mask)
    }

    pub fn top(x: &Arc<Presheaf>) -> Self {
        Subfunctor {
            ambient: x.clone(),
            parts: x.carriers().iter().map(|c| vec![true; c.len()]).collect(),
        }
    }

    pub fn bottom(x: &Arc<Presheaf>) -> Self {
        Subfunctor {
            ambient: x.clone(),
            parts: x.carriers().iter().map(|c| vec![false; c.len()]).collect(),
        }
    }

    /// The least subfunctor containing the given `(stage, element)` pairs.
    pub fn generated_by(x: &Arc<Presheaf>, elements: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut s = Self::bottom(x);
        let base = x.base().clone();
        let mut stack: Vec<(usize, usize)> = elements.into_iter().collect();
        while let Some((c, e)) = stack.pop() {
            if std::mem::replace(&mut s.parts[c][e], true) {
                continue;
            }
            for &f in base.hom_into(c) {
                stack.push((base.dom(f), x.restrict(f, e)));
            }
        }
        s
    }

    /// Image of a presheaf map, as a subobject of its codomain.
    pub fn image_of(f: &PresheafMap) -> Self {
        let mut s = Self::bottom(f.dst());
        for (c, row) in s.parts.iter_mut().enumerate() {
            for &y in f.component(c) {
                row[y] = true;
            }
        }
        s
    }

    pub fn ambient(&self) -> &Arc<Presheaf> {
        &self.ambient
    }

    pub fn parts(&self) -> &[Vec<bool>] {
        &self.parts
    }

    pub fn contains(&self, c: usize, x: usize) -> bool {
        self.parts[c][x]
    }

    pub fn elements(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        self.parts[c].iter().enumerate().filter(|(_, &b)| b).map(|(x, _)| x)
    }

    pub fn count(&self) -> usize {
        self.parts.iter().flatten().filter(|&&b| b).count()
    }

    pub fn is_top(&self) -> bool {
        self.parts.iter().flatten().all(|&b| b)
    }

    pub fn is_bottom(&self) -> bool {
        !self.parts.iter().flatten().any(|&b| b)
    }

    pub fn closure_violations(&self) -> Report {
        let x = &self.ambient;
        let base = x.base();
        let mut report = Vec::new();
        for f in 0..base.n_morphisms() {
            let (a, b) = (base.dom(f), base.cod(f));
            for e in self.elements(b) {
                if !self.parts[a][x.restrict(f, e)] {
                    report.push(Violation::new(
                        "action-closure",
                        format!(
                            "element `{}` at stage `{}` restricts along `{}` to `{}`, which is missing at stage `{}`",
                            x.element_id(b, e),
                            base.object_name(b),
                            base.morphism_name(f),
                            x.element_id(a, x.restrict(f, e)),
                            base.object_name(a)
                        ),
                    ));
                }
            }
        }
        report
    }

    fn same_ambient(&self, other: &Subfunctor) -> Result<()> {
        if same_presheaf(&self.ambient, &other.ambient) {
            Ok(())
        } else {
            Err(Error::AmbientMismatch)
        }
    }

    pub fn leq(&self, other: &Subfunctor) -> Result<bool> {
        self.same_ambient(other)?;
        Ok(self.leq_unchecked(other))
    }

    pub(crate) fn leq_unchecked(&self, other: &Subfunctor) -> bool {
        self.parts
            .iter()
            .zip(&other.parts)
            .all(|(p, q)| p.iter().zip(q).all(|(&a, &b)| !a || b))
    }

    fn zip_with(&self, other: &Subfunctor, op: impl Fn(bool, bool) -> bool) -> Subfunctor {
        Subfunctor {
            ambient: self.ambient.clone(),
            parts: self
                .parts
                .iter()
                .zip(&other.parts)
                .map(|(p, q)| p.iter().zip(q).map(|(&a, &b)| op(a, b)).collect())
                .collect(),
        }
    }

    pub fn meet(&self, other: &Subfunctor) -> Result<Subfunctor> {
        self.same_ambient(other)?;
        Ok(self.zip_with(other, |a, b| a && b))
    }

    pub fn join(&self, other: &Subfunctor) -> Result<Subfunctor> {
        self.same_ambient(other)?;
        Ok(self.zip_with(other, |a, b| a || b))
    }

    /// Heyting implication: `x ∈ (A → B)(c)` iff every restriction of `x`
    /// that lies in `A` also lies in `B`.
    pub fn implies(&self, other: &Subfunctor) -> Result<Subfunctor> {
        self.same_ambient(other)?;
        let x = &self.ambient;
        let base = x.base();
        let parts = (0..base.n_objects())
            .map(|c| {
                (0..x.size(c))
                    .map(|e| {
                        base.hom_into(c).iter().all(|&f| {
                            let (d, r) = (base.dom(f), x.restrict(f, e));
                            !self.parts[d][r] || other.parts[d][r]
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(Subfunctor {
            ambient: x.clone(),
            parts,
        })
    }

    pub fn neg(&self) -> Subfunctor {
        self.implies(&Self::bottom(&self.ambient)).expect("same ambient")
    }

    /// The subobject as a presheaf in its own right, with its inclusion.
    pub fn to_presheaf(&self) -> (Arc<Presheaf>, PresheafMap) {
        subpresheaf(&self.ambient, &self.parts).expect("subfunctors are closed")
    }

    /// Element ids per object name, in carrier order.
    pub fn to_named(&self) -> BTreeMap<String, Vec<String>> {
        let base = self.ambient.base();
        (0..base.n_objects())
            .map(|c| {
                let mut ids: Vec<String> = self.elements(c).map(|e| self.ambient.element_id(c, e).to_string()).collect();
                ids.sort();
                (base.object_name(c).to_string(), ids)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeytingOp {
    Meet,
    Join,
    Impl,
    Neg,
    Top,
    Bottom,
}

/// Dispatches a Heyting operation; binary operations need `b`.
pub fn heyting(op: HeytingOp, a: &Subfunctor, b: Option<&Subfunctor>) -> Result<Subfunctor> {
    let need_b = || b.ok_or_else(|| Error::precondition("binary Heyting operation needs two operands"));
    match op {
        HeytingOp::Meet => a.meet(need_b()?),
        HeytingOp::Join => a.join(need_b()?),
        HeytingOp::Impl => a.implies(need_b()?),
        HeytingOp::Neg => Ok(a.neg()),
        HeytingOp::Top => Ok(Subfunctor::top(a.ambient())),
        HeytingOp::Bottom => Ok(Subfunctor::bottom(a.ambient())),
    }
}

/// `Sub(X)` listed exhaustively, bottom first.
#[derive(Clone, Debug)]
pub struct SubLattice {
    pub ambient: Arc<Presheaf>,
    pub elements: Vec<Subfunctor>,
}

impl SubLattice {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.elements[i].leq_unchecked(&self.elements[j])
    }

    /// The inclusion order as a matrix.
    pub fn order(&self) -> Vec<Vec<bool>> {
        (0..self.len()).map(|i| (0..self.len()).map(|j| self.leq(i, j)).collect()).collect()
    }

    pub fn index_of(&self, s: &Subfunctor) -> Option<usize> {
        self.elements.iter().position(|t| t == s)
    }
}

/// All subobjects of `x`, as the down-closed sets of its category of
/// elements. Fails once more than `cap` have been produced.
pub fn sub_enumerate(x: &Arc<Presheaf>, cap: usize) -> Result<SubLattice> {
    let base = x.base();
    let offsets: Vec<usize> = (0..base.n_objects())
        .scan(0, |acc, c| {
            let o = *acc;
            *acc += x.size(c);
            Some(o)
        })
        .collect();
    let flat: Vec<(usize, usize)> = (0..base.n_objects()).flat_map(|c| (0..x.size(c)).map(move |e| (c, e))).collect();
    let n = flat.len();
    let mut down = vec![Vec::new(); n];
    let mut up = vec![Vec::new(); n];
    for (k, &(c, e)) in flat.iter().enumerate() {
        let mut seen: Vec<usize> = base
            .hom_into(c)
            .iter()
            .map(|&f| offsets[base.dom(f)] + x.restrict(f, e))
            .collect();
        seen.sort_unstable();
        seen.dedup();
        for &j in &seen {
            up[j].push(k);
        }
        down[k] = seen;
    }

    struct Walk<'a> {
        down: &'a [Vec<usize>],
        up: &'a [Vec<usize>],
        state: Vec<Option<bool>>,
        out: Vec<Vec<bool>>,
        cap: usize,
    }

    impl Walk<'_> {
        fn go(&mut self, from: usize) -> Result<()> {
            let Some(k) = (from..self.state.len()).find(|&k| self.state[k].is_none()) else {
                if self.out.len() == self.cap {
                    return Err(Error::CapExceeded {
                        cap: self.cap,
                        what: "subobjects",
                    });
                }
                self.out.push(self.state.iter().map(|s| s == &Some(true)).collect());
                return Ok(());
            };
            let saved = self.state.clone();
            for &j in &self.up[k] {
                self.state[j] = Some(false);
            }
            self.go(k + 1)?;
            self.state = saved.clone();
            for &j in &self.down[k] {
                self.state[j] = Some(true);
            }
            self.go(k + 1)?;
            self.state = saved;
            Ok(())
        }
    }

    let mut walk = Walk {
        down: &down,
        up: &up,
        state: vec![None; n],
        out: Vec::new(),
        cap,
    };
    walk.go(0)?;
    let elements = walk
        .out
        .into_iter()
        .map(|mask| {
            let parts = (0..base.n_objects())
                .map(|c| (0..x.size(c)).map(|e| mask[offsets[c] + e]).collect())
                .collect();
            Subfunctor {
                ambient: x.clone(),
                parts,
            }
        })
        .collect();
    Ok(SubLattice {
        ambient: x.clone(),
        elements,
    })
}

fn check_ambient(s: &Subfunctor, x: &Arc<Presheaf>) -> Result<()> {
    if same_presheaf(s.ambient(), x) {
        Ok(())
    } else {
        Err(Error::AmbientMismatch)
    }
}

/// Pullback `f*B` of a subobject of the codomain: the stage-wise preimage.
pub fn base_change(f: &PresheafMap, b: &Subfunctor) -> Result<Subfunctor> {
    check_ambient(b, f.dst())?;
    let parts = f
        .components()
        .iter()
        .enumerate()
        .map(|(c, comp)| comp.iter().map(|&y| b.parts[c][y]).collect())
        .collect();
    Ok(Subfunctor {
        ambient: f.src().clone(),
        parts,
    })
}

/// `∃_f A`: the stage-wise image.
pub fn exists_along(f: &PresheafMap, a: &Subfunctor) -> Result<Subfunctor> {
    check_ambient(a, f.src())?;
    let mut s = Subfunctor::bottom(f.dst());
    for (c, comp) in f.components().iter().enumerate() {
        for (x, &y) in comp.iter().enumerate() {
            if a.parts[c][x] {
                s.parts[c][y] = true;
            }
        }
    }
    Ok(s)
}

/// `∀_f A`: `y ∈ Y(c)` iff for every `g: d → c`, the whole fibre of `f_d`
/// over `y · g` lies in `A(d)`.
pub fn forall_along(f: &PresheafMap, a: &Subfunctor) -> Result<Subfunctor> {
    check_ambient(a, f.src())?;
    let y = f.dst();
    let base = y.base();
    // fibre_ok[d][y'] = every x with f_d(x) = y' lies in A(d)
    let fibre_ok: Vec<Vec<bool>> = (0..base.n_objects())
        .map(|d| {
            let mut ok = vec![true; y.size(d)];
            for (x, &t) in f.component(d).iter().enumerate() {
                if !a.parts[d][x] {
                    ok[t] = false;
                }
            }
            ok
        })
        .collect();
    let parts = (0..base.n_objects())
        .map(|c| {
            (0..y.size(c))
                .map(|e| base.hom_into(c).iter().all(|&g| fibre_ok[base.dom(g)][y.restrict(g, e)]))
                .collect()
        })
        .collect();
    Ok(Subfunctor {
        ambient: y.clone(),
        parts,
    })
}

/// The presheaf of sieves with `true: 1 → Ω`.
#[derive(Clone, Debug)]
pub struct Omega {
    pub presheaf: Arc<Presheaf>,
    /// Sieves per object as bitmasks over morphism indices.
    pub sieves: Vec<Vec<u64>>,
    pub one: Arc<Presheaf>,
    pub truth: PresheafMap,
}

fn sieve_name(base: &FinCategory, mask: u64) -> String {
    let names: Vec<&str> = (0..base.n_morphisms())
        .filter(|&m| mask >> m & 1 == 1)
        .map(|m| base.morphism_name(m))
        .collect();
    format!("{{{}}}", names.join(","))
}

/// Builds `Ω` for a base with at most 64 morphisms.
pub fn omega(base: &Arc<FinCategory>) -> Result<Omega> {
    if base.n_morphisms() > 64 {
        return Err(Error::precondition("Ω is only built for bases with at most 64 morphisms"));
    }
    let n_obj = base.n_objects();
    let mut sieves = Vec::with_capacity(n_obj);
    for c in 0..n_obj {
        let into = base.hom_into(c);
        let mut found = Vec::new();
        for bits in 0u64..(1u64 << into.len()) {
            let mask = into
                .iter()
                .enumerate()
                .filter(|(k, _)| bits >> k & 1 == 1)
                .fold(0u64, |m, (_, &g)| m | 1 << g);
            let closed = into.iter().filter(|&&g| mask >> g & 1 == 1).all(|&g| {
                base.hom_into(base.dom(g))
                    .iter()
                    .all(|&h| mask >> base.compose(g, h).expect("composable") & 1 == 1)
            });
            if closed {
                found.push(mask);
            }
        }
        found.sort_by_key(|&m| {
            let members: Vec<usize> = (0..64).filter(|&i| m >> i & 1 == 1).collect();
            (members.len(), members)
        });
        sieves.push(found);
    }
    let carriers = (0..n_obj)
        .map(|c| sieves[c].iter().map(|&m| sieve_name(base, m)).collect())
        .collect();
    let action = (0..base.n_morphisms())
        .map(|f| {
            let (a, b) = (base.dom(f), base.cod(f));
            sieves[b]
                .iter()
                .map(|&r| {
                    let pulled = base
                        .hom_into(a)
                        .iter()
                        .filter(|&&g| r >> base.compose(f, g).expect("composable") & 1 == 1)
                        .fold(0u64, |m, &g| m | 1 << g);
                    sieves[a].iter().position(|&s| s == pulled).expect("pulled-back sieve")
                })
                .collect()
        })
        .collect();
    let presheaf = Arc::new(Presheaf::from_parts(base.clone(), carriers, action)?);
    let one = terminal(base);
    let maximal: Vec<Vec<usize>> = (0..n_obj)
        .map(|c| {
            let full = base.hom_into(c).iter().fold(0u64, |m, &g| m | 1 << g);
            vec![sieves[c].iter().position(|&s| s == full).expect("maximal sieve")]
        })
        .collect();
    let truth = PresheafMap::from_parts(one.clone(), presheaf.clone(), maximal)?;
    Ok(Omega {
        presheaf,
        sieves,
        one,
        truth,
    })
}

impl Omega {
    fn base(&self) -> &Arc<FinCategory> {
        self.presheaf.base()
    }

    pub fn maximal(&self, c: usize) -> usize {
        self.truth.apply(c, 0)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.presheaf.sizes()
    }

    /// `χ_S(x) = { g: d → c | x · g ∈ S(d) }`.
    pub fn characteristic_of(&self, s: &Subfunctor) -> Result<PresheafMap> {
        let x = s.ambient();
        if x.base() != self.base() {
            return Err(Error::shape("subobject over a different base"));
        }
        let base = self.base().clone();
        let comps = (0..base.n_objects())
            .map(|c| {
                (0..x.size(c))
                    .map(|e| {
                        let mask = base
                            .hom_into(c)
                            .iter()
                            .filter(|&&g| s.contains(base.dom(g), x.restrict(g, e)))
                            .fold(0u64, |m, &g| m | 1 << g);
                        self.sieves[c].iter().position(|&r| r == mask).expect("χ lands in sieves")
                    })
                    .collect()
            })
            .collect();
        PresheafMap::from_parts(x.clone(), self.presheaf.clone(), comps)
    }

    pub fn characteristic(&self, m: &PresheafMap) -> Result<PresheafMap> {
        if !m.is_mono() {
            return Err(Error::precondition("characteristic map needs a monomorphism"));
        }
        self.characteristic_of(&Subfunctor::image_of(m))
    }

    /// Elements sent to the maximal sieve.
    pub fn subobject_of(&self, chi: &PresheafMap) -> Result<Subfunctor> {
        if !same_presheaf(chi.dst(), &self.presheaf) {
            return Err(Error::shape("map does not land in Ω"));
        }
        let x = chi.src();
        let parts = (0..x.base().n_objects())
            .map(|c| (0..x.size(c)).map(|e| chi.apply(c, e) == self.maximal(c)).collect())
            .collect();
        Ok(Subfunctor {
            ambient: x.clone(),
            parts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::{bases, presheaf_from_lists, product, pullback, to_terminal};

    fn edge_graph() -> Arc<Presheaf> {
        presheaf_from_lists(
            &bases::graph(),
            &[("V", &["v1", "v2"]), ("E", &["e"])],
            &[("s", &[("e", "v1")]), ("t", &[("e", "v2")])],
        )
    }

    fn set(names: &[&str]) -> Arc<Presheaf> {
        presheaf_from_lists(&bases::terminal(), &[("pt", names)], &[])
    }

    #[test]
    fn terminal_has_two_subobjects() {
        let one = terminal(&bases::terminal());
        assert_eq!(sub_enumerate(&one, 10).unwrap().len(), 2);
    }

    #[test]
    fn representable_vertex_has_two_subobjects() {
        let base = bases::graph();
        let yv = Arc::new(Presheaf::representable(&base, 0));
        assert_eq!(sub_enumerate(&yv, 10).unwrap().len(), 2);
    }

    #[test]
    fn single_edge_has_five_subgraphs() {
        let subs = sub_enumerate(&edge_graph(), 100).unwrap();
        assert_eq!(subs.len(), 5);
        assert!(subs.elements[0].is_bottom());
        for s in &subs.elements {
            assert!(s.closure_violations().is_empty());
        }
    }

    #[test]
    fn cap_is_enforced() {
        let x = set(&["a", "b", "c"]);
        match sub_enumerate(&x, 7) {
            Err(Error::CapExceeded { cap, .. }) => assert_eq!(cap, 7),
            other => panic!("{other:?}"),
        }
        assert_eq!(sub_enumerate(&x, 8).unwrap().len(), 8);
    }

    #[test]
    fn negation_of_a_vertex_in_an_edge() {
        let g = edge_graph();
        let a = Subfunctor::from_named(g.clone(), &BTreeMap::from([("V".into(), vec!["v1".into()])])).unwrap();
        let n = a.neg();
        let expected = Subfunctor::from_named(g, &BTreeMap::from([("V".into(), vec!["v2".into()])])).unwrap();
        assert_eq!(n, expected);
    }

    #[test]
    fn implication_over_sets_is_classical() {
        let x = set(&["a", "b", "c"]);
        let subs = sub_enumerate(&x, 100).unwrap();
        for a in &subs.elements {
            for b in &subs.elements {
                let classical = a.zip_with(b, |p, q| !p || q);
                assert_eq!(a.implies(b).unwrap(), classical);
            }
        }
    }

    #[test]
    fn impl_from_top_is_identity() {
        let g = edge_graph();
        for b in sub_enumerate(&g, 100).unwrap().elements {
            assert_eq!(Subfunctor::top(&g).implies(&b).unwrap(), b);
        }
    }

    #[test]
    fn ambient_mismatch_is_an_error() {
        let a = Subfunctor::top(&set(&["a"]));
        let b = Subfunctor::top(&set(&["b"]));
        assert!(matches!(a.meet(&b), Err(Error::AmbientMismatch)));
        assert!(matches!(heyting(HeytingOp::Impl, &a, Some(&b)), Err(Error::AmbientMismatch)));
    }

    #[test]
    fn base_change_along_projection_is_a_cylinder() {
        let x = set(&["a", "b"]);
        let p = product(x.base(), &[x.clone(), x.clone()]).unwrap();
        let b = Subfunctor::from_named(x.clone(), &BTreeMap::from([("pt".into(), vec!["a".into()])])).unwrap();
        let cyl = base_change(&p.legs[0], &b).unwrap();
        let ids: Vec<&str> = cyl.elements(0).map(|e| p.apex.element_id(0, e)).collect();
        assert_eq!(ids, vec!["(a,a)", "(a,b)"]);
    }

    #[test]
    fn quantifiers_over_sets() {
        let x = set(&["a", "b"]);
        let p = product(x.base(), &[x.clone(), x.clone()]).unwrap();
        let rel = Subfunctor::from_named(
            p.apex.clone(),
            &BTreeMap::from([("pt".into(), vec!["(a,a)".into(), "(a,b)".into(), "(b,a)".into()])]),
        )
        .unwrap();
        let ex = exists_along(&p.legs[0], &rel).unwrap();
        assert_eq!(ex.count(), 2);
        let all = forall_along(&p.legs[0], &rel).unwrap();
        let ids: Vec<&str> = all.elements(0).map(|e| x.element_id(0, e)).collect();
        assert_eq!(ids, vec!["a"]);
    }

    #[test]
    fn quantifiers_along_identity() {
        let g = edge_graph();
        let id = PresheafMap::identity(&g);
        for a in sub_enumerate(&g, 100).unwrap().elements {
            assert_eq!(exists_along(&id, &a).unwrap(), a);
            assert_eq!(forall_along(&id, &a).unwrap(), a);
            assert_eq!(base_change(&id, &a).unwrap(), a);
        }
    }

    #[test]
    fn omega_sizes_on_standard_bases() {
        assert_eq!(omega(&bases::terminal()).unwrap().sizes(), vec![2]);
        assert_eq!(omega(&bases::arrow()).unwrap().sizes(), vec![2, 3]);
        assert_eq!(omega(&bases::graph()).unwrap().sizes(), vec![2, 5]);
    }

    #[test]
    fn omega_is_a_presheaf() {
        for (_, base) in bases::all() {
            let om = omega(&base).unwrap();
            assert!(om.presheaf.validate().is_empty());
            assert!(om.truth.validate().is_empty());
        }
    }

    #[test]
    fn classifier_round_trip_and_pullback() {
        let g = edge_graph();
        let om = omega(g.base()).unwrap();
        for s in sub_enumerate(&g, 100).unwrap().elements {
            let (_, incl) = s.to_presheaf();
            let chi = om.characteristic(&incl).unwrap();
            assert!(chi.validate().is_empty());
            assert_eq!(om.subobject_of(&chi).unwrap(), s);
            let pb = pullback(&om.truth, &chi).unwrap();
            assert!(pb.legs[1].is_mono());
            assert_eq!(Subfunctor::image_of(&pb.legs[1]), s);
        }
    }

    #[test]
    fn characteristic_rejects_non_mono() {
        let x = set(&["a", "b"]);
        let one = terminal(x.base());
        let om = omega(x.base()).unwrap();
        assert!(matches!(om.characteristic(&to_terminal(&x, &one)), Err(Error::Precondition(_))));
    }
}
