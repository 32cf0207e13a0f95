import json
import os

import pytest

from ifslab.cli import main
from ifslab.config import SpecError, parse_spec_text

CANTOR_SPEC = """
[ifs]
dim = 1
map 1 = exact 0/3
map 2 = exact 2/3

[experiment]
seed = 42
rate = constant 1.0
mode = cylinder
levels = 12 13
samples = 200
depth = 4
prefix = 1
nlist = 60
"""


def write_spec(tmp_path, text=CANTOR_SPEC, name="run.spec"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_body(path):
    """File content with the timestamp header line stripped."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("# timestamp=")
    return "\n".join(lines[1:])


class TestSpecParsing:
    def test_minimal_roundtrip(self):
        spec = parse_spec_text(CANTOR_SPEC)
        assert spec.seed == 42
        assert spec.ifs.size == 2
        assert spec.levels == (12, 13)
        assert spec.prefix_labels == ("1",)

    def test_seed_required(self):
        text = CANTOR_SPEC.replace("seed = 42", "")
        with pytest.raises(SpecError) as e:
            parse_spec_text(text)
        assert "seed" in str(e.value)

    def test_q_below_two_names_field(self):
        text = CANTOR_SPEC.replace("map 1 = exact 0/3", "map 1 = exact 0/1")
        with pytest.raises(SpecError) as e:
            parse_spec_text(text)
        assert "map 1" in str(e.value)

    def test_bad_mode(self):
        text = CANTOR_SPEC.replace("mode = cylinder", "mode = sideways")
        with pytest.raises(SpecError):
            parse_spec_text(text)

    def test_weights_variants(self):
        spec = parse_spec_text(CANTOR_SPEC.replace(
            "rate = constant 1.0", "rate = constant 1.0\nweights = uniform"))
        assert spec.weights is not None
        spec = parse_spec_text(CANTOR_SPEC.replace(
            "rate = constant 1.0", "rate = constant 1.0\nweights = 1/3,2/3"))
        assert [str(w) for w in spec.weights.weights] == ["1/3", "2/3"]

    def test_rate_families(self):
        for line, fam in [("rate = power 2.0", "power"),
                          ("rate = power_log 1.0 2.0", "power_log"),
                          ("rate = geometric 0.5", "geometric"),
                          ("rate = table 0.5 0.25", "table")]:
            spec = parse_spec_text(CANTOR_SPEC.replace("rate = constant 1.0", line))
            assert spec.rate.family == fam

    def test_float_map_with_rotation(self):
        text = """
[ifs]
dim = 2
map a = float r=0.4 t=0.0,0.0 O=0,-1;1,0
map b = float r=0.4 t=1.0,0.0

[experiment]
seed = 1
"""
        spec = parse_spec_text(text)
        assert not spec.ifs.homothety


class TestCliRuns:
    def test_invalid_spec_exit_2(self, tmp_path, capsys):
        path = write_spec(tmp_path, CANTOR_SPEC.replace("exact 0/3", "exact 0/1"))
        code = main(["analyze", "--spec", path, "--out", str(tmp_path / "o")])
        assert code == 2
        assert "map 1" in capsys.readouterr().err

    def test_analyze_payload(self, tmp_path):
        path = write_spec(tmp_path)
        out = str(tmp_path / "o")
        assert main(["analyze", "--spec", path, "--out", out]) == 0
        body = json.loads(read_body(os.path.join(out, "analyze.json")))
        assert body["dim_s"] == pytest.approx(0.6309297535714574)
        assert body["measure_inequality_holds"] is True
        assert body["separation"] == "SSC-witnessed"
        assert body["meta"]["seed"] == 42

    def test_enumerate_and_cache(self, tmp_path):
        path = write_spec(tmp_path)
        out = str(tmp_path / "o")
        assert main(["enumerate", "--spec", path, "--out", out]) == 0
        first = json.loads(read_body(os.path.join(out, "enumerate.json")))
        assert first["from_cache"] is False
        csv_first = read_body(os.path.join(out, "enumerate.csv"))
        assert main(["enumerate", "--spec", path, "--out", out]) == 0
        second = json.loads(read_body(os.path.join(out, "enumerate.json")))
        assert second["from_cache"] is True
        assert read_body(os.path.join(out, "enumerate.csv")) == csv_first

    def test_qint_values(self, tmp_path, capsys):
        path = write_spec(tmp_path)
        out = str(tmp_path / "o")
        for value, expect in [("1/4", "8"), ("2/3", "6"), ("0", "2")]:
            assert main(["qint", "--spec", path, "--out", out, "--value", value]) == 0
            payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
            assert payload["q_int"] == expect
            assert payload["certified"] is True

    def test_seed_override_changes_hash_not_spec(self, tmp_path):
        path = write_spec(tmp_path)
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["lemma31", "--spec", path, "--out", out1]) == 0
        assert main(["lemma31", "--spec", path, "--out", out2, "--seed", "43"]) == 0
        b1 = read_body(os.path.join(out1, "lemma31.csv"))
        b2 = read_body(os.path.join(out2, "lemma31.csv"))
        assert b1 != b2  # seed line in meta differs

    def test_replay_byte_identical_across_threads(self, tmp_path):
        path = write_spec(tmp_path)
        outs = []
        for tag, threads in (("t1", "1"), ("t8", "8")):
            out = str(tmp_path / tag)
            assert main(["good-sets", "--spec", path, "--out", out,
                         "--threads", threads]) == 0
            outs.append((read_body(os.path.join(out, "good_sets.csv")),
                         read_body(os.path.join(out, "good_sets.json"))))
        assert outs[0] == outs[1]

    def test_hitrate_budget_exit_3(self, tmp_path):
        text = CANTOR_SPEC.replace("levels = 12 13", "levels = 1 3")
        path = write_spec(tmp_path, text)
        out = str(tmp_path / "o")
        code = main(["hitrate", "--spec", path, "--out", out, "--budget", "2"])
        assert code == 3

    def test_series_and_covering(self, tmp_path):
        path = write_spec(tmp_path)
        out = str(tmp_path / "o")
        assert main(["series", "--spec", path, "--out", out]) == 0
        body = json.loads(read_body(os.path.join(out, "series.json")))
        assert body["verdict"] == "Diverges"
        assert main(["covering", "--spec", path, "--out", out]) == 0
        cov = json.loads(read_body(os.path.join(out, "covering.json")))
        assert cov["verdict"] == "Diverges"

    def test_levelsets_run(self, tmp_path):
        path = write_spec(tmp_path)
        out = str(tmp_path / "o")
        assert main(["levelsets", "--spec", path, "--out", out]) == 0
        body = json.loads(read_body(os.path.join(out, "levelsets.json")))
        assert all(r["prefix_free"] for r in body["rows"])
        assert all(r["short_ext_ok"] for r in body["rows"])

    def test_dimension_run(self, tmp_path):
        text = CANTOR_SPEC.replace("levels = 12 13", "levels = 2 8")
        path = write_spec(tmp_path, text)
        out = str(tmp_path / "o")
        assert main(["dimension", "--spec", path, "--out", out]) == 0
        body = json.loads(read_body(os.path.join(out, "dimension.json")))
        assert body["box_estimate"] == pytest.approx(0.6309, abs=0.01)

    def test_csv_columns_documented(self, tmp_path):
        path = write_spec(tmp_path)
        out = str(tmp_path / "o")
        main(["lemma31", "--spec", path, "--out", out])
        with open(os.path.join(out, "lemma31.csv")) as fh:
            lines = fh.read().splitlines()
        assert lines[0].startswith("# timestamp=")
        assert any(ln.startswith("# columns:") for ln in lines[:4])
