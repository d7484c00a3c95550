import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from datalogpm.cli import run
from datalogpm.parser import parse_program

PROGRAMS = Path(__file__).parent.parent / "programs"


def call(*args):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in args], out, err)
    return code, out.getvalue(), err.getvalue()


def prog(name):
    return PROGRAMS / name


def test_classify_guarded_json():
    code, out, _ = call("classify", prog("guarded.dl"), "--format", "json-like")
    assert code == 0
    doc = json.loads(out)
    assert doc["guarded"] is True
    assert list(doc)[:6] == ["id", "linear", "guarded", "weakly_guarded", "weakly_acyclic", "sticky"]


def test_classify_text_names_the_cycle():
    code, out, _ = call("classify", prog("loop.dl"))
    assert code == 0
    assert "weakly_acyclic: false" in out
    assert "special cycle: e[1] -special-> e[2] ; e[2] -normal-> e[1]" in out


def test_query_not_entailed():
    code, out, _ = call("query", prog("parents.dl"), "--max-depth", "10")
    assert code == 0
    assert out.splitlines()[0] == "q1: NotEntailed"
    assert "q2: Entailed" in out
    assert "people: {(p)} Exact" in out
    assert "males: {} Exact" in out


def test_interlock_refuses_unlimited_budget():
    code, out, err = call("chase", prog("loop.dl"), "--max-steps", "unlimited", "--max-depth", "unlimited")
    assert code == 1 and out == ""
    assert "weakly acyclic" in err


def test_interlock_allows_weakly_acyclic_sets():
    code, _, _ = call("chase", prog("inclusion.dl"), "--max-steps", "unlimited")
    assert code == 0


def test_budget_exhausted_with_unknown():
    code, out, _ = call("query", prog("loop.dl"), "-q", "? e(Z, a).", "--max-steps", "20")
    assert code == 3
    assert "Unknown" in out


def test_bounded_loop_still_entails():
    code, out, _ = call("query", prog("loop.dl"), "--max-steps", "20")
    assert code == 0 and "Entailed" in out


def test_chase_failure_exit_code():
    code, out, _ = call("chase", prog("conflict.dl"))
    assert code == 2
    assert "outcome: Failure" in out


def test_query_with_no_model():
    code, out, _ = call("query", prog("no_model.dl"))
    assert code == 2
    assert "every leaf failed" in out


def test_chase_budget_exit_code():
    code, out, _ = call("chase", prog("loop.dl"), "--max-steps", "5")
    assert code == 3
    assert "outcome: BudgetExhausted" in out


def test_chase_output_parses_back():
    code, out, _ = call("chase", prog("guarded.dl"))
    assert code == 0
    lines = out.splitlines()
    assert lines[:2] == ["outcome: Success", "steps: 1"]
    facts = "\n".join(l for l in lines[2:] if "_:" not in l)
    assert len(parse_program(facts).facts) == len(lines) - 3


def test_trace_lines():
    code, out, _ = call("chase", prog("inclusion.dl"), "--trace")
    assert code == 0
    assert any(l.startswith("step 1: r1 with {") for l in out.splitlines())


@pytest.mark.parametrize("name", sorted(p.name for p in PROGRAMS.glob("*.dl")))
def test_json_is_deterministic(name):
    runs = [call("query", prog(name), "--format", "json-like", "--max-steps", "200") for _ in range(2)]
    assert runs[0] == runs[1]
    json.loads(runs[0][1])


def test_parallel_matches_sequential():
    seq = call("query", prog("parents.dl"), "--format", "json-like")
    par = call("query", prog("parents.dl"), "--format", "json-like", "--parallel")
    assert json.loads(seq[1]) == json.loads(par[1])


def test_parse_error(tmp_path):
    bad = tmp_path / "bad.dl"
    bad.write_text("p(a).\nq(b) -> .\n")
    code, out, err = call("validate", bad)
    assert code == 1 and out == ""
    assert "2:9" in err


def test_missing_file(tmp_path):
    code, _, err = call("validate", tmp_path / "nope.dl")
    assert code == 1 and err.startswith("error:")


def test_bad_flag():
    code, _, err = call("chase", prog("loop.dl"), "--max-steps", "lots")
    assert code == 1 and "lots" in err


def test_validate():
    code, out, _ = call("validate", prog("parents.dl"), "--format", "json-like")
    assert code == 0
    assert json.loads(out) == {"status": "ok", "facts": 2, "dependencies": 2, "queries": 4}


def test_generate_is_seeded():
    a = call("generate", "--seed", "7")
    b = call("generate", "--seed", "7")
    assert a == b and a[0] == 0
    parse_program(a[1])


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "datalogpm", "classify", str(prog("sticky.dl"))],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "sticky: true" in proc.stdout
