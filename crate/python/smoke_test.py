"""Smoke test for the toposforge extension module.

Build and run:
    cargo build --release -p topos-forge-py --features extension-module
    cp target/release/libtoposforge.so python/toposforge.so
    python3 python/smoke_test.py
"""

import json
import pathlib
import sys

HERE = pathlib.Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

import toposforge as tf  # noqa: E402

CORPUS = HERE.parent / "corpus"

TERMINAL_ADJ = """
signature Graph
  sorts node
  rel adj : node node
end
structure M : Graph over terminal
  sort node = {a b}
  rel adj @pt: (a,b)
end
"""


def main():
    assert tf.omega_sizes("terminal") == [2]
    assert tf.omega_sizes("arrow") == [2, 3]
    assert tf.omega_sizes("graph") == [2, 5]

    text = tf.normalize("forall y:node. exists z:node. adj(y,z)")
    assert tf.normalize(text) == text
    assert tf.classify("exists z:node. adj(y,z)") == "regular"

    ws = tf.Workspace.from_dsl(TERMINAL_ADJ)
    assert ws.check() == []
    out = ws.eval("M", "exists z:node. adj(y,z)", "(y:node)")
    assert out["stages"] == {"pt": ["a"]}, out
    assert out["models"] is False
    assert ws.models("M", "exists y:node. exists z:node. adj(y,z)") is True
    assert ws.models("M", "forall y:node. exists z:node. adj(y,z)") is False
    assert ws.force("M", "true", "(y:node)")["verdict"] is True

    again = tf.Workspace.from_json(ws.to_json())
    assert json.loads(again.to_json()) == json.loads(ws.to_json())

    graphs = tf.Workspace([str(CORPUS / "graphs.topos")])
    for u in graphs.filters():
        if u == "W":
            continue
        reports = graphs.los(u, all_alphas=True)
        assert reports and all(r["agree"] for r in reports), u

    broken = tf.Workspace([str(CORPUS / "broken_naturality.topos")])
    assert any(v["code"] == "naturality" for v in broken.check())

    code, stdout, _ = tf.run_cli(["omega", "--base", "graph", "--json"])
    assert code == 0 and json.loads(stdout)["sizes"] == [2, 5]
    code, _, stderr = tf.run_cli(["los", "--filter", "U", str(CORPUS / "empty_member.topos")])
    assert code == 3 and "epi" in stderr

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
