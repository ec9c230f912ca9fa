mod common;

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use std::sync::Arc;
use topos_forge::dsl;
use topos_forge::fincat::{enumerate_homs, image_factorize, initial, PresheafMap};
use topos_forge::io::Workspace;
use topos_forge::semantics::{
    forces, interp_formula, interp_term, kj_rule_check, local_character_check, models, models_via_subobjects,
    monotonicity_check, negation_cross_check, stage_forcing, CheckLimits, Evaluator, GeneralizedElement,
};
use topos_forge::sigma::{Context, Structure};
use topos_forge::subobj::Subfunctor;
use topos_forge::syntax::{parse_context, parse_formula, Formula, Term};
use topos_forge::Error;

const EXAMPLES: &str = "
signature Graph
  sorts node
  rel adj : node node
end
signature Marked
  sorts node
  rel p : node
  func id : node -> node
  const c : node
end
presheaf Edge over graph
  V: v1 v2
  E: e
  s: e -> v1
  t: e -> v2
end
presheaf Arrow over arrow
  a: u
  b: i
  f: i -> u
end
structure M : Graph over terminal
  sort node = {a b}
  rel adj @pt: (a,b)
end
structure G : Graph over graph
  sort node = Edge
end
structure N : Marked over arrow
  sort node = Arrow
  rel p @a: (u)
  func id @a: (u) -> u
  func id @b: (i) -> i
  func c @a: () -> u
  func c @b: () -> i
end
";

fn workspace() -> Workspace {
    let (ws, report) = Workspace::from_doc(dsl::compile(EXAMPLES).unwrap()).unwrap();
    assert!(report.is_empty(), "{report:?}");
    ws
}

fn f(text: &str) -> Formula {
    parse_formula(text).unwrap()
}

fn ctx(text: &str) -> Context {
    parse_context(text).unwrap()
}

fn named(s: &Subfunctor, obj: &str) -> Vec<String> {
    s.to_named()[obj].clone()
}

#[test]
fn successors_on_a_two_element_set() {
    let ws = workspace();
    let m = ws.structure("M").unwrap();
    let s = interp_formula(m, &ctx("(y:node)"), &f("exists z:node. adj(y,z)")).unwrap();
    assert_eq!(named(&s, "pt"), vec!["a"]);
    assert!(!models(m, &Context::empty(), &f("forall y:node. exists z:node. adj(y,z)")).unwrap());
    assert!(models(m, &Context::empty(), &f("exists y:node. exists z:node. adj(y,z)")).unwrap());
    assert!(models(m, &Context::empty(), &f("true")).unwrap());
}

#[test]
fn forcing_at_a_point_names_the_counterexample() {
    let ws = workspace();
    let m = ws.structure("M").unwrap();
    let c = ctx("(y:node)");
    let phi = f("exists z:node. adj(y,z)");
    let prod = Evaluator::global().context_object(m, &c).unwrap();
    let b = prod.apex.element_index(0, "b").unwrap();
    let point = topos_forge::fincat::yoneda_map(&prod.apex, 0, b);
    let alpha = GeneralizedElement::new(m, c.clone(), point).unwrap();
    let j = forces(m, &alpha, &phi).unwrap();
    assert!(!j.verdict);
    assert_eq!(j.counterexample.unwrap().image, "b");

    let empty = PresheafMap::new(initial(m.base()), prod.apex.clone(), vec![vec![]]).unwrap();
    let alpha = GeneralizedElement::new(m, c.clone(), empty).unwrap();
    assert!(forces(m, &alpha, &f("false")).unwrap().verdict);
    let id = GeneralizedElement::identity(m, c.clone()).unwrap();
    assert!(forces(m, &id, &f("true")).unwrap().verdict);
}

#[test]
fn self_inequality_on_an_edge_is_bottom() {
    let ws = workspace();
    let g = ws.structure("G").unwrap();
    let s = interp_formula(g, &ctx("(y:node)"), &f("~(y = y)")).unwrap();
    assert!(s.is_bottom());
    assert!(interp_formula(g, &ctx("(x:node)"), &f("x = x")).unwrap().is_top());
}

#[test]
fn terms_are_projections_and_constants() {
    let ws = workspace();
    let n = ws.structure("N").unwrap();
    let c2 = ctx("(x:node, y:node)");
    let prod = Evaluator::global().context_object(n, &c2).unwrap();
    let y = interp_term(n, &c2, &Term::var("y")).unwrap();
    assert_eq!(y.components(), prod.legs[1].components());
    let idy = interp_term(n, &c2, &Term::app("id", vec![Term::var("y")])).unwrap();
    assert_eq!(idy.components(), y.components());
    let c = interp_term(n, &c2, &Term::app("c", vec![])).unwrap();
    for obj in 0..2 {
        assert!(c.component(obj).iter().all(|&v| v == 0));
    }
}

#[test]
fn double_negation_is_not_classical_over_the_arrow() {
    let ws = workspace();
    let n = ws.structure("N").unwrap();
    let c = ctx("(y:node)");
    let p = interp_formula(n, &c, &f("p(y)")).unwrap();
    let nn = interp_formula(n, &c, &f("~~p(y)")).unwrap();
    assert!(nn.is_top());
    assert!(!p.is_top());
    assert!(p.leq(&nn).unwrap());
    let b = n.base().object_index("b").unwrap();
    assert!(!stage_forcing(n, &c, b, 0, &f("p(y)")).unwrap());
    assert!(stage_forcing(n, &c, b, 0, &f("~~p(y)")).unwrap());
    assert!(!models(n, &c, &f("p(y) \\/ ~p(y)")).unwrap());
}

#[test]
fn existential_rule_on_the_set_example() {
    let ws = workspace();
    let m = ws.structure("M").unwrap();
    let alpha = GeneralizedElement::identity(m, ctx("(y:node)")).unwrap();
    let r = kj_rule_check(m, &alpha, &f("exists z:node. adj(y,z)"), CheckLimits::default()).unwrap();
    assert!(r.holds());
    assert!(!r.lhs);
}

fn random_alpha(r: &mut rand_chacha::ChaCha8Rng, m: &Structure, c: &Context) -> Option<GeneralizedElement> {
    let prod = Evaluator::global().context_object(m, c).ok()?;
    let u = random_presheaf(r, m.base());
    let map = enumerate_homs(&u, &prod.apex, 256).ok()?.choose(r).cloned()?;
    GeneralizedElement::new(m, c.clone(), map).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn subobject_and_stage_semantics_agree(seed in any::<u64>(), n in 0usize..3) {
        let mut r = rng(seed);
        let base = random_base(&mut r);
        let m = random_structure(&mut r, &base);
        let c = context(n);
        let phi = random_formula(&mut r, &scope(&c), 3);
        let s = interp_formula(&m, &c, &phi).unwrap();
        prop_assert!(s.closure_violations().is_empty());
        let apex = Evaluator::global().context_object(&m, &c).unwrap().apex;
        for obj in 0..base.n_objects() {
            for a in 0..apex.size(obj) {
                prop_assert_eq!(stage_forcing(&m, &c, obj, a, &phi).unwrap(), s.contains(obj, a), "{}", phi);
            }
        }
        prop_assert!(negation_cross_check(&m, &c, &phi).unwrap());
    }

    #[test]
    fn validity_is_forcing_everywhere(seed in any::<u64>(), n in 0usize..3) {
        let mut r = rng(seed);
        let base = random_base(&mut r);
        let m = random_structure(&mut r, &base);
        let c = context(n);
        let phi = random_formula(&mut r, &scope(&c), 3);
        let v = models(&m, &c, &phi).unwrap();
        let id = GeneralizedElement::identity(&m, c.clone()).unwrap();
        prop_assert_eq!(forces(&m, &id, &phi).unwrap().verdict, v);
        match models_via_subobjects(&m, &c, &phi, 4096) {
            Ok(all) => prop_assert_eq!(all, v),
            Err(e) => prop_assert!(matches!(e, Error::CapExceeded { .. }), "{}", e),
        }
    }

    #[test]
    fn forcing_depends_only_on_the_image(seed in any::<u64>(), n in 1usize..3) {
        let mut r = rng(seed);
        let base = random_base(&mut r);
        let m = random_structure(&mut r, &base);
        let c = context(n);
        let phi = random_formula(&mut r, &scope(&c), 3);
        let interp = interp_formula(&m, &c, &phi).unwrap();
        if let Some(alpha) = random_alpha(&mut r, &m, &c) {
            let verdict = forces(&m, &alpha, &phi).unwrap().verdict;
            let image = Subfunctor::image_of(&alpha.map);
            prop_assert_eq!(verdict, image.leq(&interp).unwrap());
            let mono = image_factorize(&alpha.map).mono;
            let restricted = GeneralizedElement::new(&m, c.clone(), mono).unwrap();
            prop_assert_eq!(forces(&m, &restricted, &phi).unwrap().verdict, verdict);
            let limits = CheckLimits::default();
            prop_assert!(monotonicity_check(&m, &alpha, &phi, limits).unwrap());
            prop_assert!(local_character_check(&m, &alpha, &phi).unwrap());
        }
    }

    #[test]
    fn forcing_rules_hold(seed in any::<u64>(), n in 0usize..2) {
        let mut r = rng(seed);
        let base = random_base(&mut r);
        let m: Arc<Structure> = random_structure(&mut r, &base);
        let c = context(n);
        let phi = random_formula(&mut r, &scope(&c), 2);
        let apex = Evaluator::global().context_object(&m, &c).unwrap().apex;
        let s = random_sub(&mut r, &apex, 0.4);
        for alpha in [GeneralizedElement::identity(&m, c.clone()).unwrap(), GeneralizedElement::from_subobject(c.clone(), &s)] {
            let rep = kj_rule_check(&m, &alpha, &phi, CheckLimits::default()).unwrap();
            prop_assert!(rep.holds(), "{} {:?}", phi, rep);
        }
    }
}
