//! Finite limits, computed stage by stage.

use super::{same_presheaf, FinCategory, Presheaf, PresheafMap};
use crate::error::{Error, Result};
use std::sync::Arc;

/// A limiting cone: apex plus its legs.
#[derive(Clone, Debug)]
pub struct Cone {
    pub apex: Arc<Presheaf>,
    pub legs: Vec<PresheafMap>,
}

/// Mixed-radix index of a tuple; the last coordinate varies fastest.
pub fn tuple_index(sizes: &[usize], coords: &[usize]) -> usize {
    coords.iter().zip(sizes).fold(0, |acc, (&t, &n)| acc * n + t)
}

pub fn tuple_coords(sizes: &[usize], mut index: usize) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for k in (0..sizes.len()).rev() {
        out[k] = index % sizes[k];
        index /= sizes[k];
    }
    out
}

/// Element id of a product tuple. Unary products keep the factor's id and
/// the empty product is the terminal point `*`.
pub fn tuple_name<S: AsRef<str>>(parts: &[S]) -> String {
    match parts.len() {
        0 => "*".to_string(),
        1 => parts[0].as_ref().to_string(),
        _ => {
            let inner: Vec<&str> = parts.iter().map(AsRef::as_ref).collect();
            format!("({})", inner.join(","))
        }
    }
}

pub fn terminal(base: &Arc<FinCategory>) -> Arc<Presheaf> {
    let carriers = vec![vec!["*".to_string()]; base.n_objects()];
    let action = vec![vec![0]; base.n_morphisms()];
    Arc::new(Presheaf::from_parts(base.clone(), carriers, action).expect("terminal presheaf"))
}

/// The unique map into the terminal presheaf.
pub fn to_terminal(x: &Arc<Presheaf>, one: &Arc<Presheaf>) -> PresheafMap {
    let comps = x.carriers().iter().map(|c| vec![0; c.len()]).collect();
    PresheafMap::from_parts(x.clone(), one.clone(), comps).expect("map to terminal")
}

/// A cartesian product with positional (flattened) tuples.
#[derive(Clone, Debug)]
pub struct Product {
    pub apex: Arc<Presheaf>,
    pub factors: Vec<Arc<Presheaf>>,
    pub legs: Vec<PresheafMap>,
}

impl Product {
    pub fn factor_sizes(&self, c: usize) -> Vec<usize> {
        self.factors.iter().map(|f| f.size(c)).collect()
    }

    pub fn encode(&self, c: usize, coords: &[usize]) -> usize {
        tuple_index(&self.factor_sizes(c), coords)
    }

    pub fn decode(&self, c: usize, index: usize) -> Vec<usize> {
        tuple_coords(&self.factor_sizes(c), index)
    }

    /// The mediating map `⟨m_1, …, m_n⟩: A → ∏ X_k`.
    pub fn pairing(&self, src: &Arc<Presheaf>, maps: &[PresheafMap]) -> Result<PresheafMap> {
        if maps.len() != self.factors.len() {
            return Err(Error::shape("pairing needs one map per factor"));
        }
        for (m, f) in maps.iter().zip(&self.factors) {
            if !same_presheaf(m.src(), src) || !same_presheaf(m.dst(), f) {
                return Err(Error::shape("pairing map does not match the product factors"));
            }
        }
        let base = src.base();
        let comps = (0..base.n_objects())
            .map(|c| {
                let sizes = self.factor_sizes(c);
                (0..src.size(c))
                    .map(|x| {
                        let coords: Vec<usize> = maps.iter().map(|m| m.apply(c, x)).collect();
                        tuple_index(&sizes, &coords)
                    })
                    .collect()
            })
            .collect();
        PresheafMap::from_parts(src.clone(), self.apex.clone(), comps)
    }

    /// `h_1 × … × h_n` from `self` to `target`.
    pub fn map_product(&self, target: &Product, maps: &[PresheafMap]) -> Result<PresheafMap> {
        let composed = self
            .legs
            .iter()
            .zip(maps)
            .map(|(leg, h)| h.after(leg))
            .collect::<Result<Vec<_>>>()?;
        target.pairing(&self.apex, &composed)
    }
}

pub fn product(base: &Arc<FinCategory>, factors: &[Arc<Presheaf>]) -> Result<Product> {
    if factors.iter().any(|f| f.base() != base) {
        return Err(Error::shape("product factors live over different bases"));
    }
    let n_obj = base.n_objects();
    let mut carriers: Vec<Vec<String>> = Vec::with_capacity(n_obj);
    for c in 0..n_obj {
        let sizes: Vec<usize> = factors.iter().map(|f| f.size(c)).collect();
        let total: usize = sizes.iter().product();
        let carrier = (0..total)
            .map(|i| {
                let coords = tuple_coords(&sizes, i);
                let parts: Vec<&str> = coords
                    .iter()
                    .zip(factors)
                    .map(|(&t, f)| f.element_id(c, t))
                    .collect();
                tuple_name(&parts)
            })
            .collect();
        carriers.push(carrier);
    }
    let action = (0..base.n_morphisms())
        .map(|f| {
            let (a, b) = (base.dom(f), base.cod(f));
            let sb: Vec<usize> = factors.iter().map(|p| p.size(b)).collect();
            let sa: Vec<usize> = factors.iter().map(|p| p.size(a)).collect();
            (0..carriers[b].len())
                .map(|i| {
                    let coords: Vec<usize> = tuple_coords(&sb, i)
                        .iter()
                        .zip(factors)
                        .map(|(&t, p)| p.restrict(f, t))
                        .collect();
                    tuple_index(&sa, &coords)
                })
                .collect()
        })
        .collect();
    let apex = Arc::new(Presheaf::from_parts(base.clone(), carriers, action)?);
    let legs = (0..factors.len())
        .map(|k| {
            let comps = (0..n_obj)
                .map(|c| {
                    let sizes: Vec<usize> = factors.iter().map(|f| f.size(c)).collect();
                    (0..apex.size(c)).map(|i| tuple_coords(&sizes, i)[k]).collect()
                })
                .collect();
            PresheafMap::from_parts(apex.clone(), factors[k].clone(), comps).expect("projection")
        })
        .collect();
    Ok(Product {
        apex,
        factors: factors.to_vec(),
        legs,
    })
}

/// The sub-presheaf on the elements selected by `mask`, with its inclusion.
/// Element ids are kept; `mask` must be closed under the action.
pub fn subpresheaf(x: &Arc<Presheaf>, mask: &[Vec<bool>]) -> Result<(Arc<Presheaf>, PresheafMap)> {
    let base = x.base();
    let mut index = Vec::with_capacity(base.n_objects());
    let mut carriers = Vec::with_capacity(base.n_objects());
    let mut incl = Vec::with_capacity(base.n_objects());
    for c in 0..base.n_objects() {
        let mut idx = vec![usize::MAX; x.size(c)];
        let mut carrier = Vec::new();
        let mut comp = Vec::new();
        for e in 0..x.size(c) {
            if mask[c][e] {
                idx[e] = carrier.len();
                carrier.push(x.element_id(c, e).to_string());
                comp.push(e);
            }
        }
        index.push(idx);
        carriers.push(carrier);
        incl.push(comp);
    }
    let mut action = Vec::with_capacity(base.n_morphisms());
    for f in 0..base.n_morphisms() {
        let a = base.dom(f);
        let row = incl[base.cod(f)]
            .iter()
            .map(|&e| {
                let r = index[a][x.restrict(f, e)];
                if r == usize::MAX {
                    Err(Error::shape("selected elements are not closed under the action"))
                } else {
                    Ok(r)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        action.push(row);
    }
    let apex = Arc::new(Presheaf::from_parts(base.clone(), carriers, action)?);
    let inclusion = PresheafMap::from_parts(apex.clone(), x.clone(), incl)?;
    Ok((apex, inclusion))
}

/// Equalizer of a parallel pair, as the sub-presheaf where they agree.
pub fn equalizer(f: &PresheafMap, g: &PresheafMap) -> Result<Cone> {
    if !same_presheaf(f.src(), g.src()) || !same_presheaf(f.dst(), g.dst()) {
        return Err(Error::shape("equalizer needs a parallel pair"));
    }
    let x = f.src();
    let mask: Vec<Vec<bool>> = (0..x.base().n_objects())
        .map(|c| (0..x.size(c)).map(|e| f.apply(c, e) == g.apply(c, e)).collect())
        .collect();
    let (apex, incl) = subpresheaf(x, &mask)?;
    Ok(Cone { apex, legs: vec![incl] })
}

/// Pullback of a cospan `f: X → Z ← Y: g`; legs are `[to X, to Y]`.
pub fn pullback(f: &PresheafMap, g: &PresheafMap) -> Result<Cone> {
    if !same_presheaf(f.dst(), g.dst()) {
        return Err(Error::shape("pullback needs a cospan"));
    }
    let base = f.base();
    let prod = product(base, &[f.src().clone(), g.src().clone()])?;
    let mask: Vec<Vec<bool>> = (0..base.n_objects())
        .map(|c| {
            (0..prod.apex.size(c))
                .map(|i| {
                    let xy = prod.decode(c, i);
                    f.apply(c, xy[0]) == g.apply(c, xy[1])
                })
                .collect()
        })
        .collect();
    let (apex, incl) = subpresheaf(&prod.apex, &mask)?;
    let legs = prod
        .legs
        .iter()
        .map(|leg| leg.after(&incl))
        .collect::<Result<Vec<_>>>()?;
    Ok(Cone { apex, legs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::{bases, presheaf_from_lists};

    fn two_vertex_one_edge() -> Arc<Presheaf> {
        presheaf_from_lists(
            &bases::graph(),
            &[("V", &["v1", "v2"]), ("E", &["e"])],
            &[("s", &[("e", "v1")]), ("t", &[("e", "v2")])],
        )
    }

    #[test]
    fn radix_roundtrip() {
        let sizes = [2, 3, 4];
        for i in 0..24 {
            assert_eq!(tuple_index(&sizes, &tuple_coords(&sizes, i)), i);
        }
    }

    #[test]
    fn product_of_edge_graph_with_itself() {
        let g = two_vertex_one_edge();
        let p = product(g.base(), &[g.clone(), g.clone()]).unwrap();
        assert_eq!(p.apex.sizes(), vec![4, 1]);
        assert!(p.apex.validate().is_empty());
        for leg in &p.legs {
            assert!(leg.validate().is_empty());
        }
    }

    #[test]
    fn empty_product_is_terminal() {
        let base = bases::graph();
        let p = product(&base, &[]).unwrap();
        assert_eq!(*p.apex, *terminal(&base));
    }

    #[test]
    fn unary_product_keeps_ids() {
        let g = two_vertex_one_edge();
        let p = product(g.base(), &[g.clone()]).unwrap();
        assert_eq!(*p.apex, *g);
    }

    #[test]
    fn equalizer_of_identical_pair_is_everything() {
        let g = two_vertex_one_edge();
        let id = PresheafMap::identity(&g);
        let eq = equalizer(&id, &id).unwrap();
        assert_eq!(*eq.apex, *g);
        assert!(eq.legs[0].is_iso());
    }

    #[test]
    fn equalizer_rejects_non_parallel() {
        let g = two_vertex_one_edge();
        let one = terminal(g.base());
        let f = to_terminal(&g, &one);
        let id = PresheafMap::identity(&g);
        assert!(matches!(equalizer(&f, &id), Err(Error::Shape(_))));
    }

    #[test]
    fn pullback_rejects_non_cospan() {
        let g = two_vertex_one_edge();
        let one = terminal(g.base());
        let f = to_terminal(&g, &one);
        let id = PresheafMap::identity(&g);
        assert!(matches!(pullback(&f, &id), Err(Error::Shape(_))));
    }

    #[test]
    fn pullback_over_terminal_is_product() {
        let g = two_vertex_one_edge();
        let one = terminal(g.base());
        let f = to_terminal(&g, &one);
        let pb = pullback(&f, &f).unwrap();
        assert_eq!(pb.apex.sizes(), vec![4, 1]);
    }
}
