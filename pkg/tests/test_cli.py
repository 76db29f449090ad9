import io
import json
from contextlib import redirect_stderr, redirect_stdout

import pytest

from gdnn.cli import main


def run_cli(argv, stdin_text=None):
    import sys

    out, err = io.StringIO(), io.StringIO()
    old_stdin = sys.stdin
    if stdin_text is not None:
        sys.stdin = io.StringIO(stdin_text)
    try:
        with redirect_stdout(out), redirect_stderr(err):
            code = main(argv)
    finally:
        sys.stdin = old_stdin
    return code, out.getvalue(), err.getvalue()


class TestGroups:
    def test_list_includes_icosahedral(self):
        code, out, _ = run_cli(["groups", "list"])
        assert code == 0
        assert "Icosahedral,60,12" in out

    def test_show_c8(self):
        code, out, _ = run_cli(["groups", "show", "C8"])
        assert code == 0
        info = json.loads(out)
        assert info["order"] == 8 and info["degree"] == 8

    def test_unknown_exits_2(self):
        code, out, err = run_cli(["groups", "show", "NoSuch"])
        assert code == 2
        assert "unknown group" in err
        assert out == ""


class TestCount:
    def test_c8_gdnn_depth2(self):
        code, out, _ = run_cli(["count", "--group", "C8", "--mode", "gdnn", "--max-depth", "2"])
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "depth,admissible,total,mode"
        assert lines[1] == "2,5,5,gdnn"

    def test_machine_output_clean(self):
        code, out, err = run_cli(["count", "--group", "Q8", "--mode", "crelu"])
        assert code == 0
        for line in out.strip().split("\n")[1:]:
            fields = line.split(",")
            assert len(fields) == 4
            int(fields[0]), int(fields[1]), int(fields[2])

    def test_deterministic(self):
        a = run_cli(["count", "--group", "D4", "--mode", "gdnn"])
        b = run_cli(["count", "--group", "D4", "--mode", "gdnn"])
        assert a == b

    def test_out_flag(self, tmp_path):
        target = tmp_path / "rows.csv"
        code, out, _ = run_cli(["count", "--group", "C8", "--mode", "gdnn", "--out", str(target)])
        assert code == 0
        assert target.read_text().startswith("depth,admissible")


class TestBuild:
    def test_scripted_session(self):
        # choose the degree-3 type-2 class, then finish
        code, out, err = run_cli(["build", "--group", "Z6_cyclic_perms"], stdin_text="2\n\n")
        assert code == 0
        spec = json.loads(out)
        assert spec["group"] == "Z6_cyclic_perms"
        assert len(spec["layers"]) == 2  # chosen + trivial

    def test_validate_spec_file(self, tmp_path):
        code, out, _ = run_cli(["build", "--group", "Z6_cyclic_perms"], stdin_text="2\n\n")
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(out)
        code2, out2, _ = run_cli(["build", "--group", "Z6_cyclic_perms", "--spec", str(spec_path)])
        assert code2 == 0
        assert out2 == out  # validation round-trips byte for byte

    def test_inadmissible_spec_rejected(self, tmp_path):
        from gdnn.train import binprod_architectures

        arch = binprod_architectures(16)["type1"]
        spec_path = tmp_path / "bad.json"
        spec_path.write_text(arch.to_json_str())
        code, out, err = run_cli(["build", "--group", "BinProd(16)", "--spec", str(spec_path)])
        assert code == 1
        assert "not admissible" in err

    def test_empty_architecture_valid(self):
        code, out, _ = run_cli(["build", "--group", "Z6_cyclic_perms"], stdin_text="\n")
        assert code == 0
        spec = json.loads(out)
        assert len(spec["layers"]) == 1  # depth-1 linear invariant model


class TestTrain:
    def test_zero_epochs_initial_equals_final(self):
        code, out, _ = run_cli(
            ["train", "binprod", "--arch", "type2", "--seeds", "2", "--epochs", "0", "--per-seed"]
        )
        assert code == 0
        lines = out.strip().split("\n")[1:]
        for line in lines:
            fields = line.split(",")
            assert fields[2] == fields[4]  # initial_train == final_train

    def test_type1_accuracy_aggregate(self):
        code, out, _ = run_cli(
            ["train", "binprod", "--arch", "type1", "--seeds", "2", "--epochs", "1"]
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0].startswith("architecture,initial_train_mean")
        row = lines[1].split(",")
        assert row[0] == "type1"
        assert float(row[-3]) == 0.5  # accuracy mean
        assert float(row[-2]) == 0.0  # accuracy std
        assert row[-1] == "2"


class TestAudit:
    def test_admissible_spec_passes(self, tmp_path):
        code, out, _ = run_cli(["build", "--group", "Z6_cyclic_perms"], stdin_text="2\n\n")
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(out)
        code2, out2, _ = run_cli(["audit", "--spec", str(spec_path), "--seed", "3"])
        assert code2 == 0
        report = json.loads(out2)
        assert all(c["passed"] for c in report["checks"])
        names = {c["name"] for c in report["checks"]}
        assert {"invariance", "forward_consistency", "cpz_reparameterization"} <= names
