import math

import pytest
from hypothesis import given, settings, strategies as st

from eprsim.errors import ScenarioError
from eprsim.scenario import GHZ_LEDGER_SCRIPT, backend_for, parse_scenario, parse_scenario_text


def test_ghz_ledger_script():
    s = parse_scenario_text(GHZ_LEDGER_SCRIPT)
    assert s.state_id == "ghz"
    assert s.sites == ("A", "B", "C")
    kinds = [(st.kind, st.args) for st in s.steps]
    assert kinds == [
        ("prepare", ("ghz",)), ("set", ("A", "y")), ("set", ("B", "x")), ("set", ("C", "x")),
        ("snapshot", ("t_k",)), ("set", ("B", "y")), ("snapshot", ("t_m",)), ("set", ("A", "x")),
        ("snapshot", ("t_4",)),
    ]
    assert s.steps[4].line == 5


def test_empty_file_missing_prepare(tmp_path):
    p = tmp_path / "empty.txt"
    p.write_bytes(b"")
    with pytest.raises(ScenarioError, match="missing prepare"):
        parse_scenario(p)


def test_duplicate_prepare_names_both_lines():
    with pytest.raises(ScenarioError) as exc:
        parse_scenario_text("prepare ghz\n# note\nprepare bell\n")
    msg = str(exc.value)
    assert "line 1" in msg and "line 3" in msg
    assert exc.value.line == 3


def test_crlf_and_comments():
    s = parse_scenario_text("# header\r\nprepare bell   # two sites\r\n\r\nset A 0.7853981634\r\nreadout A B\r\n")
    assert s.state_id == "bell"
    assert s.steps[1].args == ("A", pytest.approx(math.pi / 4))
    assert s.steps[2].args == (("A", "B"),)


@pytest.mark.parametrize("text,line,token", [
    ("prepare ghz\nset D x\n", 2, "D"),
    ("prepare ghz\nset A w\n", 2, "w"),
    ("prepare ghz\nreadout A A\n", 2, "twice"),
    ("prepare ghz\nfrobnicate A\n", 2, "frobnicate"),
    ("set A x\nprepare ghz\n", 1, "missing prepare"),
    ("prepare qutrit\n", 1, "qutrit"),
    ("prepare ghz\nset A inf\n", 2, "inf"),
    ("prepare ghz\nsnapshot\n", 2, "snapshot"),
])
def test_parse_errors_name_line_and_token(text, line, token):
    with pytest.raises(ScenarioError) as exc:
        parse_scenario_text(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)
    assert token in str(exc.value)


def test_non_ascii_rejected(tmp_path):
    p = tmp_path / "s.txt"
    p.write_bytes("prepare ghz\nset A θ\n".encode("utf-8"))
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(p)
    assert exc.value.line == 2


def test_missing_file(tmp_path):
    with pytest.raises(ScenarioError):
        parse_scenario(tmp_path / "nope.txt")


def test_backends_for_each_state():
    for sid, n in (("bell", 2), ("ghz", 3), ("cat-bell", 2), ("noon", 3)):
        b = backend_for(parse_scenario_text(f"prepare {sid}\n"))
        assert len(b.sites) == n


axis_tok = st.sampled_from(["x", "y", "z", "0.5", "-1.25", "3"])
step = st.one_of(
    st.tuples(st.just("set"), st.sampled_from("ABC"), axis_tok),
    st.tuples(st.just("snapshot"), st.from_regex(r"t_[a-z0-9]{1,4}", fullmatch=True)),
)


@settings(max_examples=40, deadline=None)
@given(st.lists(step, max_size=10), st.booleans())
def test_generated_scripts_roundtrip(steps, crlf):
    lines = ["prepare ghz"] + [" ".join(s) for s in steps]
    nl = "\r\n" if crlf else "\n"
    s = parse_scenario_text(nl.join(lines) + nl)
    assert len(s.steps) == len(steps) + 1
    for parsed, raw in zip(s.steps[1:], steps):
        assert parsed.kind == raw[0]
        if raw[0] == "set":
            tok = raw[2]
            assert parsed.args[1] == (tok if tok in "xyz" else float(tok))
