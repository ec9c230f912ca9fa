//! Finite categories, presheaves over them and their (co)limit calculus.

pub mod bases;
mod category;
mod colimits;
mod factor;
mod limits;
mod presheaf;

pub use category::{CategoryBuilder, FinCategory, Morphism};
pub use colimits::{coproduct, directed_colimit, initial, Cocone, DirectedColimit, DirectedDiagram};
pub use factor::{
    enumerate_homs, essential_uniqueness, factor_through_colimit_stage, factor_through_epi, image_factorize,
    lift_through, ImageFactorization, StageFactorization,
};
pub use limits::{
    equalizer, product, pullback, subpresheaf, terminal, to_terminal, tuple_coords, tuple_index, tuple_name, Cone,
    Product,
};
pub use presheaf::{same_presheaf, Presheaf, PresheafMap};

use crate::error::Result;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Convenience constructor from string literals; panics on malformed input.
/// Identity actions and actions out of empty stages may be omitted.
pub fn presheaf_from_lists(
    base: &Arc<FinCategory>,
    carriers: &[(&str, &[&str])],
    actions: &[(&str, &[(&str, &str)])],
) -> Arc<Presheaf> {
    let carriers: BTreeMap<String, Vec<String>> = carriers
        .iter()
        .map(|(o, es)| (o.to_string(), es.iter().map(|e| e.to_string()).collect()))
        .collect();
    let actions: BTreeMap<String, BTreeMap<String, String>> = actions
        .iter()
        .map(|(f, pairs)| {
            (
                f.to_string(),
                pairs.iter().map(|(x, y)| (x.to_string(), y.to_string())).collect(),
            )
        })
        .collect();
    let p = Presheaf::from_named(base.clone(), &carriers, &actions).expect("well-formed presheaf");
    let report = p.validate();
    assert!(report.is_empty(), "presheaf is not functorial: {report:?}");
    Arc::new(p)
}

/// The map `y(d) → X` classifying `u ∈ X(d)`: `g ↦ u · g`.
pub fn yoneda_map(x: &Arc<Presheaf>, d: usize, u: usize) -> PresheafMap {
    let base = x.base();
    let yd = Arc::new(Presheaf::representable(base, d));
    let comps = (0..base.n_objects())
        .map(|c| base.hom(c, d).map(|g| x.restrict(g, u)).collect())
        .collect();
    PresheafMap::from_parts(yd, x.clone(), comps).expect("yoneda map")
}

/// The canonical epimorphism `∐ y(d) → X`, one summand per element of `X`.
pub fn representable_cover(x: &Arc<Presheaf>) -> Result<PresheafMap> {
    let base = x.base();
    let maps: Vec<PresheafMap> = (0..base.n_objects())
        .flat_map(|d| (0..x.size(d)).map(move |u| (d, u)))
        .map(|(d, u)| yoneda_map(x, d, u))
        .collect();
    let summands: Vec<Arc<Presheaf>> = maps.iter().map(|m| m.src().clone()).collect();
    let cocone = coproduct(base, &summands)?;
    let comps = (0..base.n_objects())
        .map(|c| maps.iter().flat_map(|m| m.component(c).iter().copied()).collect())
        .collect();
    PresheafMap::from_parts(cocone.apex, x.clone(), comps)
}
