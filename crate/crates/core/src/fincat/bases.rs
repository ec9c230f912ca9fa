//! Small base categories used throughout the test corpus and the CLI.

use super::FinCategory;
use std::sync::Arc;

/// One object, one identity: presheaves over it are finite sets.
pub fn terminal() -> Arc<FinCategory> {
    Arc::new(FinCategory::builder().object("pt").build().expect("valid"))
}

/// `a → b`.
pub fn arrow() -> Arc<FinCategory> {
    Arc::new(
        FinCategory::builder()
            .objects(["a", "b"])
            .arrow("f", "a", "b")
            .build()
            .expect("valid"),
    )
}

/// Objects `V`, `E` with `s, t: V → E`; presheaves are directed multigraphs.
pub fn graph() -> Arc<FinCategory> {
    Arc::new(
        FinCategory::builder()
            .objects(["V", "E"])
            .arrow("s", "V", "E")
            .arrow("t", "V", "E")
            .build()
            .expect("valid"),
    )
}

/// Graph base plus a loop selector `r: E → V` with `r ∘ s = r ∘ t = id_V`.
pub fn reflexive_graph() -> Arc<FinCategory> {
    Arc::new(
        FinCategory::builder()
            .objects(["V", "E"])
            .arrow("s", "V", "E")
            .arrow("t", "V", "E")
            .arrow("r", "E", "V")
            .arrow("sr", "E", "E")
            .arrow("tr", "E", "E")
            .compose("r", "s", "id_V")
            .compose("r", "t", "id_V")
            .compose("s", "r", "sr")
            .compose("t", "r", "tr")
            .compose("sr", "s", "s")
            .compose("sr", "t", "s")
            .compose("tr", "s", "t")
            .compose("tr", "t", "t")
            .compose("r", "sr", "r")
            .compose("r", "tr", "r")
            .compose("sr", "sr", "sr")
            .compose("sr", "tr", "sr")
            .compose("tr", "sr", "tr")
            .compose("tr", "tr", "tr")
            .build()
            .expect("valid"),
    )
}

/// `a → b → c` with the composite.
pub fn chain3() -> Arc<FinCategory> {
    Arc::new(
        FinCategory::builder()
            .objects(["a", "b", "c"])
            .arrow("f", "a", "b")
            .arrow("g", "b", "c")
            .arrow("gf", "a", "c")
            .compose("g", "f", "gf")
            .build()
            .expect("valid"),
    )
}

/// One object with an idempotent `e ∘ e = e`.
pub fn idempotent() -> Arc<FinCategory> {
    Arc::new(
        FinCategory::builder()
            .object("x")
            .arrow("e", "x", "x")
            .compose("e", "e", "e")
            .build()
            .expect("valid"),
    )
}

/// Two parallel arrows `a ⇉ b`.
pub fn parallel() -> Arc<FinCategory> {
    Arc::new(
        FinCategory::builder()
            .objects(["a", "b"])
            .arrow("u", "a", "b")
            .arrow("v", "a", "b")
            .build()
            .expect("valid"),
    )
}

pub fn all() -> Vec<(&'static str, Arc<FinCategory>)> {
    vec![
        ("terminal", terminal()),
        ("arrow", arrow()),
        ("graph", graph()),
        ("reflexive_graph", reflexive_graph()),
        ("chain3", chain3()),
        ("idempotent", idempotent()),
        ("parallel", parallel()),
    ]
}

pub fn by_name(name: &str) -> Option<Arc<FinCategory>> {
    all().into_iter().find(|(n, _)| *n == name).map(|(_, c)| c)
}
