import json
import shutil
import subprocess
from pathlib import Path

import pytest

from cnp import cli
from cnp.loaders import dump
from cnp.qlo import INFINITY

DATA = Path(__file__).resolve().parents[1] / "demos" / "data"


def run(*argv):
    return cli.run(list(argv))


def test_qlo_lub():
    assert run("qlo", "lub", "--monoid", "n2", "--x", "(1,0)", "--y", "(0,1)") == (0, {"lub": "(1,1)"})
    code, out = run("qlo", "lub", "--raag", str(DATA / "raag_path.json"), "--x", "a", "--y", "c")
    assert code == 0 and out["lub"] == str(INFINITY)


def test_qlo_components_and_foundation():
    code, out = run("qlo", "components", "--raag", str(DATA / "raag_path.json"))
    assert code == 0 and sorted(map(sorted, out["opp_components"])) == [["a", "c"], ["b"]]
    code, out = run("qlo", "foundation", "--raag", str(DATA / "raag_path.json"), "--F", "a")
    assert code == 0 and out["refuting_q"]


def test_kgraph_commands():
    assert run("kgraph", "mce", "square_loop", "--mu", "a", "--nu", "b") == (0, ["ab"])
    code, out = run("kgraph", "exhaustive", "no_common_extension", "--vertex", "v", "--F", "e")
    assert code == 0 and out["exhaustive"] is False and out["witness"] == "f"
    code, out = run("kgraph", "ck-defect", "no_common_extension", "--vertex", "v", "--F", "e,f", "--s", "(1,1)")
    assert code == 0 and out["zero"] and out["consistent"]
    code, out = run("kgraph", "minimal-exhaustive", "square_loop", "--vertex", "v")
    assert code == 0 and ["v"] in out


def test_psys_commands():
    code, out = run("psys", "phi-tilde", "lex", "--q", "(1,0)")
    assert code == 0
    assert out["phi_tilde"] == [{"q": "(1,0)", "phi_tilde_injective": False, "kernel_witness": "delta_v2"}]
    code, out = run("psys", "check", "kgraph:twisted_loops")
    assert code == 0 and out["associativity"]["status"] == "Pass"


def test_rep_check_exit_codes():
    sysf, good, bad = (str(DATA / f) for f in ("function_system.json", "function_rep.json", "inflated_rep.json"))
    code, out = run("rep", "check", "--system", sysf, "--rep", good, "--axioms", "T,N,CP,Fowler")
    assert code == 0 and all(out[a]["status"] in ("Pass", "VerifiedUpToHorizon") for a in ("T1", "T2", "T3", "N", "CP"))
    code, out = run("rep", "check", "--system", sysf, "--rep", bad, "--axioms", "Fowler,CP")
    assert code == 1 and out["Fowler"]["status"] == "Fail" and out["Fowler"]["witnesses"]


def test_boundary_commands():
    raag = str(DATA / "raag_path.json")
    code, out = run("boundary", "defect", "--raag", raag, "--foundation", "a,c", "--s", "bb")
    assert code == 0 and out["defect"] == 1 and out["consistent"]
    code, out = run("boundary", "relation", "--raag", raag, "--foundation", "a,c")
    assert code == 0 and out["boundary"]["status"] == "Pass"
    code, out = run("boundary", "relation", "--raag", raag, "--foundation", "a")
    assert code == 3 and out["boundary"]["status"] == "NotApplicable"
    code, out = run("boundary", "check", "--family", str(DATA / "toeplitz_family.json"))
    assert code == 0 and out["R4"]["status"] == "NotApplicable"
    assert all(v["status"] == "Pass" for k, v in out.items() if k.startswith("R4-symbolic"))


def test_scenarios():
    code, out = run("scenario", "counterexample")
    assert code == 0 and out["reproduced"]
    assert out["phi_tilde"][0]["q"] == "(1,0)" and out["phi_tilde"][0]["phi_tilde_injective"] is False
    code, out = run("scenario", "list")
    assert "counterexample" in out["scenarios"]
    assert run("scenario", "kgraph:cycle_times_loop")[0] == 0


def test_hypothesis_violation_exit_code(tmp_path):
    # w receives no edges, so phi(delta_w) = 0 and Fowler's hypothesis fails
    rep = {"dim": 2, "psi_e": {"u": [[1, 0], [0, 0]], "w": [[0, 0], [0, 1]]},
           "generators": {"1": {"e": [[0, 1], [0, 0]]}, "2": {"f": [[0, 1], [0, 0]]}}}
    f = tmp_path / "rep.json"
    f.write_text(json.dumps(rep))
    code, out = run("rep", "check", "--system", "kgraph:two_sources", "--rep", str(f), "--axioms", "T,Fowler")
    assert code == 3 and out["HypothesisViolated"] == ["phi_p injective for all p"]
    assert out["T3"]["status"] == "Pass" and out["Fowler"]["status"] == "NotApplicable"


def test_malformed_input(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"k\": 2, \"vertices\": [")
    code, out = run("kgraph", "mce", str(bad), "--mu", "a", "--nu", "b")
    assert code == 2 and out["error"] == "malformed input" and "bad.json" in out["location"]
    assert run("qlo", "lub", "--monoid", "z9", "--x", "a", "--y", "b")[0] == 2
    assert run("qlo", "lub", "--monoid", "n2", "--x", "(1,0", "--y", "(0,1)")[0] == 2
    assert run("nonsense")[0] == 2
    assert run("scenario", "nope")[0] == 2


def test_deterministic_reports():
    a = dump(run("scenario", "counterexample")[1])
    b = dump(run("scenario", "counterexample")[1])
    assert a == b


def test_text_format(capsys):
    code = cli.main(["--format", "text", "qlo", "lub", "--monoid", "n2", "--x", "(1,0)", "--y", "(0,1)"])
    assert code == 0 and capsys.readouterr().out.strip() == "lub: (1,1)"
    code = cli.main(["qlo", "lub", "--monoid", "n2", "--x", "(1,0)", "--y", "(0,1)"])
    assert json.loads(capsys.readouterr().out) == {"lub": "(1,1)"}


@pytest.mark.skipif(shutil.which("cnp") is None, reason="console script not installed")
def test_console_script():
    p = subprocess.run(["cnp", "qlo", "lub", "--monoid", "n2", "--x", "(1,0)", "--y", "(0,1)"],
                       capture_output=True, text=True)
    assert p.returncode == 0 and json.loads(p.stdout) == {"lub": "(1,1)"}
