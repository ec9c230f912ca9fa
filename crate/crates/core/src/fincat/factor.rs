//! Image factorization and searches for natural transformations.

use super::limits::subpresheaf;
use super::{same_presheaf, DirectedColimit, DirectedDiagram, Presheaf, PresheafMap};
use crate::error::{Error, Result};
use std::sync::Arc;

/// `f = mono ∘ epi` through the stage-wise image.
#[derive(Clone, Debug)]
pub struct ImageFactorization {
    pub image: Arc<Presheaf>,
    pub epi: PresheafMap,
    pub mono: PresheafMap,
}

pub fn image_factorize(f: &PresheafMap) -> ImageFactorization {
    let dst = f.dst();
    let n_obj = f.base().n_objects();
    let mut mask: Vec<Vec<bool>> = (0..n_obj).map(|c| vec![false; dst.size(c)]).collect();
    for (c, row) in mask.iter_mut().enumerate() {
        for &y in f.component(c) {
            row[y] = true;
        }
    }
    let (image, mono) = subpresheaf(dst, &mask).expect("images are closed under the action");
    let comps = (0..n_obj)
        .map(|c| {
            let positions: Vec<usize> = mono.component(c).to_vec();
            f.component(c)
                .iter()
                .map(|y| positions.iter().position(|p| p == y).expect("in image"))
                .collect()
        })
        .collect();
    let epi = PresheafMap::from_parts(f.src().clone(), image.clone(), comps).expect("corestriction");
    ImageFactorization { image, epi, mono }
}

/// Backtracking search for natural transformations `A → B` whose value on
/// each element is drawn from a per-element candidate list.
struct NatSearch<'a> {
    a: &'a Presheaf,
    b: &'a Presheaf,
    candidates: Vec<Vec<Vec<usize>>>,
    allowed: Vec<Vec<Vec<bool>>>,
    assign: Vec<Vec<Option<usize>>>,
    trail: Vec<(usize, usize)>,
    order: Vec<(usize, usize)>,
}

impl<'a> NatSearch<'a> {
    fn new(a: &'a Presheaf, b: &'a Presheaf, candidates: Vec<Vec<Vec<usize>>>) -> Self {
        let n_obj = a.base().n_objects();
        let allowed = (0..n_obj)
            .map(|c| {
                candidates[c]
                    .iter()
                    .map(|cs| {
                        let mut row = vec![false; b.size(c)];
                        cs.iter().for_each(|&y| row[y] = true);
                        row
                    })
                    .collect()
            })
            .collect();
        let assign = (0..n_obj).map(|c| vec![None; a.size(c)]).collect();
        let order = (0..n_obj).flat_map(|c| (0..a.size(c)).map(move |x| (c, x))).collect();
        NatSearch {
            a,
            b,
            candidates,
            allowed,
            assign,
            trail: Vec::new(),
            order,
        }
    }

    fn propagate(&mut self, c: usize, x: usize, y: usize) -> bool {
        let base = self.a.base().clone();
        let mut stack = vec![(c, x, y)];
        while let Some((c, x, y)) = stack.pop() {
            match self.assign[c][x] {
                Some(z) if z == y => continue,
                Some(_) => return false,
                None => {}
            }
            if !self.allowed[c][x][y] {
                return false;
            }
            self.assign[c][x] = Some(y);
            self.trail.push((c, x));
            for &u in base.hom_into(c) {
                stack.push((base.dom(u), self.a.restrict(u, x), self.b.restrict(u, y)));
            }
        }
        true
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (c, x) = self.trail.pop().expect("trail");
            self.assign[c][x] = None;
        }
    }

    /// Visits solutions in lexicographic candidate order until `visit`
    /// returns `false`. Returns `false` if stopped early.
    fn run(&mut self, pos: usize, visit: &mut dyn FnMut(&[Vec<Option<usize>>]) -> bool) -> bool {
        let Some(&(c, x)) = self.order[pos..].iter().find(|&&(c, x)| self.assign[c][x].is_none()) else {
            return visit(&self.assign);
        };
        let next = self.order.iter().position(|&p| p == (c, x)).expect("in order") + 1;
        for k in 0..self.candidates[c][x].len() {
            let y = self.candidates[c][x][k];
            let mark = self.trail.len();
            if self.propagate(c, x, y) && !self.run(next, visit) {
                self.undo(mark);
                return false;
            }
            self.undo(mark);
        }
        true
    }
}

fn by_id_order(b: &Presheaf, c: usize, mut ys: Vec<usize>) -> Vec<usize> {
    ys.sort_by(|&p, &q| b.element_id(c, p).cmp(b.element_id(c, q)));
    ys
}

fn solution_to_map(a: &Arc<Presheaf>, b: &Arc<Presheaf>, sol: &[Vec<Option<usize>>]) -> PresheafMap {
    let comps = sol
        .iter()
        .map(|row| row.iter().map(|v| v.expect("complete assignment")).collect())
        .collect();
    PresheafMap::from_parts(a.clone(), b.clone(), comps).expect("search result")
}

/// Finds `h: A → X` with `f ∘ h = g`, preferring least element ids.
pub fn lift_through(g: &PresheafMap, f: &PresheafMap) -> Result<Option<PresheafMap>> {
    if !same_presheaf(g.dst(), f.dst()) {
        return Err(Error::shape("lift needs maps with a common codomain"));
    }
    let (a, x) = (g.src(), f.src());
    let n_obj = a.base().n_objects();
    let candidates = (0..n_obj)
        .map(|c| {
            (0..a.size(c))
                .map(|e| {
                    let target = g.apply(c, e);
                    by_id_order(x, c, (0..x.size(c)).filter(|&y| f.apply(c, y) == target).collect())
                })
                .collect()
        })
        .collect();
    let mut search = NatSearch::new(a, x, candidates);
    let mut found = None;
    search.run(0, &mut |sol| {
        found = Some(solution_to_map(a, x, sol));
        false
    });
    Ok(found)
}

/// Every natural transformation `A → B`, in lexicographic order.
pub fn enumerate_homs(a: &Arc<Presheaf>, b: &Arc<Presheaf>, cap: usize) -> Result<Vec<PresheafMap>> {
    if a.base() != b.base() {
        return Err(Error::shape("presheaves over different bases"));
    }
    let n_obj = a.base().n_objects();
    let candidates = (0..n_obj)
        .map(|c| (0..a.size(c)).map(|_| by_id_order(b, c, (0..b.size(c)).collect())).collect())
        .collect();
    let mut search = NatSearch::new(a, b, candidates);
    let mut out = Vec::new();
    let mut overflow = false;
    search.run(0, &mut |sol| {
        if out.len() == cap {
            overflow = true;
            return false;
        }
        out.push(solution_to_map(a, b, sol));
        true
    });
    if overflow {
        return Err(Error::CapExceeded {
            cap,
            what: "natural transformations",
        });
    }
    Ok(out)
}

/// Factors `g: A → B` through the epimorphism `f: X → B`.
///
/// Returns `Ok(None)` when no natural section exists; in a presheaf topos an
/// epimorphism need not split, so this can happen for non-initial `A`.
pub fn factor_through_epi(g: &PresheafMap, f: &PresheafMap) -> Result<Option<PresheafMap>> {
    if !f.is_epi() {
        return Err(Error::precondition("factor_through_epi needs an epimorphism"));
    }
    lift_through(g, f)
}

/// A factorization `u = μ_stage ∘ map` through one stage of a directed colimit.
#[derive(Clone, Debug, PartialEq)]
pub struct StageFactorization {
    pub stage: usize,
    pub map: PresheafMap,
}

/// Finds a stage `i` and `u_i: U → D(i)` with `μ_i ∘ u_i = u`. Stages are
/// tried most-downstream first.
pub fn factor_through_colimit_stage(
    u: &PresheafMap,
    diagram: &DirectedDiagram,
    colimit: &DirectedColimit,
) -> Result<StageFactorization> {
    if !same_presheaf(u.dst(), &colimit.apex) {
        return Err(Error::shape("map does not land in the colimit"));
    }
    for i in diagram.downstream_order() {
        if let Some(map) = lift_through(u, &colimit.coprojections[i])? {
            return Ok(StageFactorization { stage: i, map });
        }
    }
    Err(Error::NoStage)
}

/// A stage `k` above both factorizations where they become equal.
pub fn essential_uniqueness(
    diagram: &DirectedDiagram,
    a: &StageFactorization,
    b: &StageFactorization,
) -> Option<usize> {
    diagram.downstream_order().into_iter().rev().find(|&k| {
        match (diagram.arrow(a.stage, k), diagram.arrow(b.stage, k)) {
            (Some(da), Some(db)) => match (da.after(&a.map), db.after(&b.map)) {
                (Ok(x), Ok(y)) => x.components() == y.components(),
                _ => false,
            },
            _ => false,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::limits::{terminal, to_terminal};
    use crate::fincat::{bases, initial, presheaf_from_lists};
    use std::collections::BTreeMap;

    fn set(names: &[&str]) -> Arc<Presheaf> {
        presheaf_from_lists(&bases::terminal(), &[("pt", names)], &[])
    }

    #[test]
    fn image_of_mono_is_domain() {
        let g = set(&["a", "b"]);
        let id = PresheafMap::identity(&g);
        let im = image_factorize(&id);
        assert!(im.epi.is_iso());
        assert_eq!(im.image.sizes(), vec![2]);
    }

    #[test]
    fn graph_map_collapsing_vertices() {
        let base = bases::graph();
        let src = presheaf_from_lists(&base, &[("V", &["a", "b"]), ("E", &[])], &[]);
        let dst = presheaf_from_lists(&base, &[("V", &["x", "y"]), ("E", &[])], &[]);
        let f = PresheafMap::new(src, dst, vec![vec![0, 0], vec![]]).unwrap();
        let im = image_factorize(&f);
        assert_eq!(im.image.sizes(), vec![1, 0]);
        assert!(im.mono.is_mono() && im.epi.is_epi());
        assert_eq!(im.mono.after(&im.epi).unwrap(), f);
    }

    #[test]
    fn factor_through_epi_tie_break() {
        let a = set(&["a"]);
        let x = set(&["y", "x"]);
        let one = terminal(a.base());
        let g = to_terminal(&a, &one);
        let f = to_terminal(&x, &one);
        let h = factor_through_epi(&g, &f).unwrap().unwrap();
        assert_eq!(x.element_id(0, h.apply(0, 0)), "x");
    }

    #[test]
    fn factor_through_identity_is_g() {
        let a = set(&["a", "b"]);
        let b = set(&["p", "q"]);
        let g = PresheafMap::new(a, b.clone(), vec![vec![1, 0]]).unwrap();
        let h = factor_through_epi(&g, &PresheafMap::identity(&b)).unwrap().unwrap();
        assert_eq!(h, g);
    }

    #[test]
    fn factor_from_initial_is_empty_map() {
        let b = set(&["p"]);
        let zero = initial(b.base());
        let g = PresheafMap::new(zero.clone(), b.clone(), vec![vec![]]).unwrap();
        let h = factor_through_epi(&g, &PresheafMap::identity(&b)).unwrap().unwrap();
        assert_eq!(h.src().total_size(), 0);
    }

    #[test]
    fn non_epi_is_rejected() {
        let a = set(&["a"]);
        let b = set(&["p", "q"]);
        let f = PresheafMap::new(a.clone(), b.clone(), vec![vec![0]]).unwrap();
        let g = PresheafMap::new(a, b, vec![vec![0]]).unwrap();
        assert!(matches!(factor_through_epi(&g, &f), Err(Error::Precondition(_))));
    }

    #[test]
    fn non_split_epi_has_no_factorization() {
        // Over a ⇉ b: a single edge with distinct ends maps epically onto a loop,
        // but the loop has no natural preimage.
        let base = bases::parallel();
        let y = presheaf_from_lists(&base, &[("a", &["p"]), ("b", &["l"])], &[("u", &[("l", "p")]), ("v", &[("l", "p")])]);
        let x = presheaf_from_lists(
            &base,
            &[("a", &["p1", "p2"]), ("b", &["e"])],
            &[("u", &[("e", "p1")]), ("v", &[("e", "p2")])],
        );
        let f = PresheafMap::new(x, y.clone(), vec![vec![0, 0], vec![0]]).unwrap();
        assert!(f.is_epi());
        let id = PresheafMap::identity(&y);
        assert!(factor_through_epi(&id, &f).unwrap().is_none());
    }

    #[test]
    fn enumerate_homs_between_sets() {
        let a = set(&["a", "b"]);
        let b = set(&["p", "q", "r"]);
        assert_eq!(enumerate_homs(&a, &b, 100).unwrap().len(), 9);
        assert!(matches!(enumerate_homs(&a, &b, 5), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn enumerate_homs_respects_naturality() {
        let base = bases::graph();
        let edge = presheaf_from_lists(
            &base,
            &[("V", &["v1", "v2"]), ("E", &["e"])],
            &[("s", &[("e", "v1")]), ("t", &[("e", "v2")])],
        );
        // graph endomorphisms of a single edge: only the identity
        let homs = enumerate_homs(&edge, &edge, 100).unwrap();
        assert_eq!(homs.len(), 1);
        assert!(homs[0].validate().is_empty());
    }

    #[test]
    fn colimit_stage_for_terminal_u() {
        let x = set(&["a"]);
        let d = DirectedDiagram::constant(&x, vec!["0".into(), "1".into()], |i, j| i < j).unwrap();
        let col = crate::fincat::directed_colimit(&d).unwrap();
        let one = terminal(x.base());
        let u = PresheafMap::new(one, col.apex.clone(), vec![vec![0]]).unwrap();
        let sf = factor_through_colimit_stage(&u, &d, &col).unwrap();
        assert_eq!(col.coprojections[sf.stage].after(&sf.map).unwrap(), u);
        let other = StageFactorization {
            stage: 0,
            map: PresheafMap::new(u.src().clone(), x.clone(), vec![vec![0]]).unwrap(),
        };
        assert!(essential_uniqueness(&d, &sf, &other).is_some());
    }

    #[test]
    fn colimit_stage_of_coprojection_is_identity() {
        let x0 = set(&["a", "b"]);
        let x1 = set(&["c"]);
        let m = PresheafMap::new(x0.clone(), x1.clone(), vec![vec![0, 0]]).unwrap();
        let arrows = BTreeMap::from([
            ((0, 0), PresheafMap::identity(&x0)),
            ((1, 1), PresheafMap::identity(&x1)),
            ((0, 1), m),
        ]);
        let d = DirectedDiagram::new(x0.base().clone(), vec!["s0".into(), "s1".into()], vec![x0, x1.clone()], arrows)
            .unwrap();
        let col = crate::fincat::directed_colimit(&d).unwrap();
        let sf = factor_through_colimit_stage(&col.coprojections[1], &d, &col).unwrap();
        assert_eq!(sf.stage, 1);
        assert_eq!(sf.map, PresheafMap::identity(&x1));
    }
}
