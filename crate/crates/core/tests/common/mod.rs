//! Seeded generators shared by the integration suites.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;
use topos_forge::fincat::{bases, coproduct, enumerate_homs, product, terminal, FinCategory, Presheaf};
use topos_forge::sigma::{Context, Signature, Structure};
use topos_forge::subobj::{omega, Subfunctor};
use topos_forge::syntax::{Formula, Term};

pub const MAX_CARRIER: usize = 4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random poset on up to three objects, as a category.
pub fn random_poset(rng: &mut ChaCha8Rng) -> Arc<FinCategory> {
    let n = rng.gen_range(1..=3);
    let mut rel = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            rel[i][j] = rng.gen_bool(0.5);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if rel[i][k] && rel[k][j] {
                    rel[i][j] = true;
                }
            }
        }
    }
    let names: Vec<String> = (0..n).map(|i| format!("o{i}")).collect();
    let mut b = FinCategory::builder().objects(names.clone());
    let arrow = |i: usize, j: usize| format!("a{i}{j}");
    for i in 0..n {
        for j in 0..n {
            if rel[i][j] {
                b = b.arrow(arrow(i, j), &names[i], &names[j]);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if rel[i][j] && rel[j][k] {
                    b = b.compose(arrow(j, k), arrow(i, j), arrow(i, k));
                }
            }
        }
    }
    Arc::new(b.build().expect("posets are categories"))
}

/// A built-in base or a random poset.
pub fn random_base(rng: &mut ChaCha8Rng) -> Arc<FinCategory> {
    let all = bases::all();
    if rng.gen_bool(0.2) {
        random_poset(rng)
    } else {
        all.choose(rng).unwrap().1.clone()
    }
}

fn small(p: &Presheaf, cap: usize) -> bool {
    p.sizes().iter().all(|&s| s <= cap)
}

fn pool(base: &Arc<FinCategory>) -> Vec<Arc<Presheaf>> {
    let mut out: Vec<Arc<Presheaf>> = (0..base.n_objects())
        .map(|d| Arc::new(Presheaf::representable(base, d)))
        .collect();
    out.push(terminal(base));
    out.push(omega(base).unwrap().presheaf);
    out
}

/// A presheaf with at most `cap` elements per stage: a subpresheaf
/// generated inside a representable, `1`, `Ω`, or a sum or product of two.
pub fn random_presheaf_capped(rng: &mut ChaCha8Rng, base: &Arc<FinCategory>, cap: usize) -> Arc<Presheaf> {
    let pool = pool(base);
    loop {
        let a = pool.choose(rng).unwrap().clone();
        let b = pool.choose(rng).unwrap().clone();
        let ambient = match rng.gen_range(0..3) {
            0 => a,
            1 => coproduct(base, &[a, b]).unwrap().apex,
            _ => product(base, &[a, b]).unwrap().apex,
        };
        let x = if rng.gen_bool(0.3) {
            ambient
        } else {
            let elems: Vec<(usize, usize)> = (0..base.n_objects())
                .flat_map(|c| (0..ambient.size(c)).map(move |e| (c, e)))
                .filter(|_| rng.gen_bool(0.3))
                .collect();
            Subfunctor::generated_by(&ambient, elems).to_presheaf().0
        };
        if small(&x, cap) {
            return x;
        }
    }
}

pub fn random_presheaf(rng: &mut ChaCha8Rng, base: &Arc<FinCategory>) -> Arc<Presheaf> {
    random_presheaf_capped(rng, base, MAX_CARRIER)
}

/// A random subfunctor generated by elements picked with probability `p`.
pub fn random_sub(rng: &mut ChaCha8Rng, x: &Arc<Presheaf>, p: f64) -> Subfunctor {
    let base = x.base();
    let elems: Vec<(usize, usize)> = (0..base.n_objects())
        .flat_map(|c| (0..x.size(c)).map(move |e| (c, e)))
        .filter(|_| rng.gen_bool(p))
        .collect();
    Subfunctor::generated_by(x, elems)
}

/// `sorts node; rel adj : node node; rel p : node; func f : node -> node`.
pub fn graph_signature() -> Arc<Signature> {
    Arc::new(
        Signature::new(["node"])
            .with_rel("adj", &["node", "node"])
            .with_rel("p", &["node"])
            .with_func("f", &["node"], "node"),
    )
}

/// A structure for [`graph_signature`] on the given carrier.
pub fn structure_on(rng: &mut ChaCha8Rng, x: Arc<Presheaf>) -> Structure {
    let base = x.base().clone();
    let xx = product(&base, &[x.clone(), x.clone()]).unwrap();
    let x1 = product(&base, &[x.clone()]).unwrap();
    let adj = Subfunctor::new(xx.apex.clone(), random_sub(rng, &xx.apex, 0.25).parts().to_vec()).unwrap();
    let p = Subfunctor::new(x1.apex.clone(), random_sub(rng, &x1.apex, 0.3).parts().to_vec()).unwrap();
    let homs = enumerate_homs(&x1.apex, &x, 512).unwrap_or_default();
    let f = homs
        .choose(rng)
        .cloned()
        .unwrap_or_else(|| x1.legs[0].clone());
    Structure::new(
        graph_signature(),
        base,
        BTreeMap::from([("node".to_string(), x)]),
        BTreeMap::from([("f".to_string(), f)]),
        BTreeMap::from([("adj".to_string(), adj), ("p".to_string(), p)]),
    )
    .unwrap()
}

pub fn random_structure(rng: &mut ChaCha8Rng, base: &Arc<FinCategory>) -> Arc<Structure> {
    let x = random_presheaf(rng, base);
    Arc::new(structure_on(rng, x))
}

const VARS: [&str; 4] = ["x", "y", "z", "w"];

fn random_term(rng: &mut ChaCha8Rng, scope: &[String]) -> Term {
    let v = Term::Var(scope.choose(rng).unwrap().clone());
    if rng.gen_bool(0.2) {
        Term::App("f".into(), vec![v])
    } else {
        v
    }
}

fn random_atom(rng: &mut ChaCha8Rng, scope: &[String]) -> Formula {
    if scope.is_empty() {
        return if rng.gen_bool(0.5) { Formula::Top } else { Formula::Bottom };
    }
    match rng.gen_range(0..10) {
        0 => Formula::Top,
        1 => Formula::Bottom,
        2 | 3 => Formula::Eq(random_term(rng, scope), random_term(rng, scope)),
        4 | 5 => Formula::Rel("p".into(), vec![random_term(rng, scope)]),
        _ => Formula::Rel("adj".into(), vec![random_term(rng, scope), random_term(rng, scope)]),
    }
}

/// A formula over [`graph_signature`] of depth at most `depth` whose free
/// variables lie in `scope`. Quantifiers may shadow.
pub fn random_formula(rng: &mut ChaCha8Rng, scope: &[String], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return random_atom(rng, scope);
    }
    let sub = |rng: &mut ChaCha8Rng, scope: &[String]| random_formula(rng, scope, depth - 1);
    match rng.gen_range(0..6) {
        0 => Formula::and(sub(rng, scope), sub(rng, scope)),
        1 => Formula::or(sub(rng, scope), sub(rng, scope)),
        2 => Formula::implies(sub(rng, scope), sub(rng, scope)),
        3 => Formula::not(sub(rng, scope)),
        k => {
            let v = VARS.choose(rng).unwrap().to_string();
            let mut inner = scope.to_vec();
            if !inner.contains(&v) {
                inner.push(v.clone());
            }
            let body = sub(rng, &inner);
            if k == 4 {
                Formula::exists(&v, "node", body)
            } else {
                Formula::forall(&v, "node", body)
            }
        }
    }
}

/// A context of `n` distinct `node` variables drawn from x, y, z, w.
pub fn context(n: usize) -> Context {
    Context::new(VARS[..n].iter().map(|v| (*v, "node"))).unwrap()
}

pub fn scope(ctx: &Context) -> Vec<String> {
    ctx.vars().iter().map(|(v, _)| v.clone()).collect()
}
