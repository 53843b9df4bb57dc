import json
import subprocess
import sys

import pytest

from surgcalc.cli import main
from surgcalc.invariants import InvariantTable, torsion_lens
from surgcalc.linkform import FormBlock, LinkingForm, block_form
from surgcalc.planner import ReductionPlan


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out.strip(), out.err.strip()


@pytest.fixture
def files(tmp_path):
    unknot = tmp_path / "unknot.txt"
    unknot.write_text("link n=1\ncoef 1 5/2\n")
    e0 = tmp_path / "e0.json"
    e0.write_text(json.dumps(block_form(FormBlock("E0", 2, 1)).to_json()))
    mixed = tmp_path / "mixed.json"
    mixed.write_text(json.dumps(block_form(FormBlock("E0", 2, 1), FormBlock("A", 3, 1, 1)).to_json()))
    return {"unknot": str(unknot), "e0": str(e0), "mixed": str(mixed), "dir": tmp_path}


def test_spec_examples(capsys, files):
    assert run(capsys, "homology", files["unknot"]) == (0, "H = Z/5, lk(K,K) = 3/5", "")
    assert run(capsys, "cw", "--lens", "3/1") == (0, "-1/12", "")
    assert run(capsys, "complexity", files["e0"]) == (0, "16", "")


def test_homology_multi_component(capsys, tmp_path):
    p = tmp_path / "chain.txt"
    p.write_text("link n=2\ncoef 1 3\ncoef 2 2\nlk 1 2 1\n")
    code, out, _ = run(capsys, "homology", str(p))
    assert code == 0 and out.startswith("H = Z/5") and "lk(K2,K2) = 2/5" in out


def test_json_reports_round_trip(capsys, files):
    code, out, _ = run(capsys, "linkform", files["mixed"], "--json")
    assert code == 0
    f = LinkingForm.from_json(json.loads(out))
    assert f == LinkingForm.from_json(json.loads(open(files["mixed"]).read()))

    code, out, _ = run(capsys, "homology", files["unknot"], "--json")
    data = json.loads(out)
    assert data["group"] == [5] and LinkingForm.from_json(data["form"]).order == 5

    code, out, _ = run(capsys, "torsion", "--lens", "5/2", "--json")
    t = InvariantTable.from_json(json.loads(out))
    ref = torsion_lens(5, 2)
    assert t.cw == ref.cw and t.group == ref.group

    code, out, _ = run(capsys, "decompose", files["mixed"], "--json")
    data = json.loads(out)
    assert data["kappa"] == 144 and {b["kind"] for b in data["blocks"]} == {"E0", "A"}


def test_torsion_and_cw_sum(capsys):
    code, out, _ = run(capsys, "torsion", "--sum", "2/1", "3/1")
    assert code == 0 and "cw = -1/12" in out and "chi(0) = -1/4" in out
    assert run(capsys, "cw", "--sum", "2/1", "3/1")[1] == "-1/12"


def test_residual(capsys):
    code, out, _ = run(capsys, "residual", "--family", "unknot", "--slope", "7/3")
    assert code == 0 and float(out) < 1e-9
    code, out, _ = run(capsys, "residual", "--family", "split", "--slope=-5/2", "--base", "4/3", "--json")
    assert code == 0 and json.loads(out)["residual"] < 1e-9


def test_plan_verify_round_trip(capsys, files):
    code, out, _ = run(capsys, "plan", files["mixed"], "--json")
    assert code == 0
    data = json.loads(out)
    assert set(data) >= {"start", "moves", "terminal"}
    assert LinkingForm.from_json(data["start"]).order == 12
    assert all({"kind", "params", "kappa"} <= set(m) for m in data["moves"])
    plan = ReductionPlan.from_json(data)
    assert plan.kappa_trace == data["kappa_trace"]
    path = files["dir"] / "plan.json"
    path.write_text(out)
    assert run(capsys, "verify", str(path))[:2] == (0, "true")
    data["kappa_trace"][-1] += 7
    path.write_text(json.dumps(data))
    code, out, _ = run(capsys, "verify", str(path))
    assert code == 1 and out.startswith("false")


def test_deterministic_output(capsys, files):
    first = run(capsys, "plan", files["mixed"], "--json")
    second = run(capsys, "plan", files["mixed"], "--json")
    assert first == second
    assert run(capsys, "torsion", "--lens", "7/3") == run(capsys, "torsion", "--lens", "7/3")


def test_exit_codes(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("link n=2\ncoef 1 1\ncoef 2 1\nlk 1 2 3\nlk 2 1 4\n")
    code, _, err = run(capsys, "homology", str(bad))
    assert code == 2 and "line 5" in err
    zero = tmp_path / "zero.txt"
    zero.write_text("link n=1\ncoef 1 0\n")
    assert run(capsys, "homology", str(zero))[0] == 1
    assert run(capsys, "cw", "--lens", "4/2")[0] == 1
    assert run(capsys, "cw", "--lens", "x")[0] == 2
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert run(capsys, "complexity", str(broken))[0] == 2
    assert run(capsys, "complexity", str(tmp_path / "missing.json"))[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_module_entry_point(files):
    out = subprocess.run(
        [sys.executable, "-m", "surgcalc", "cw", "--lens", "3/1"], capture_output=True, text=True
    )
    assert out.returncode == 0 and out.stdout.strip() == "-1/12"
