import csv
import io
import json
import math

import pytest

from ghz_teleport import cli


def run_json(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured


def test_analyze_defaults(capsys):
    code, out = run_json(capsys, "analyze")
    assert code == 0
    report = json.loads(out.out)
    assert report["analytic_p"] == 1.0
    assert report["region_info"]["region"] == "E"
    assert len(report["branches"]) == 8


def test_analyze_n2(capsys):
    code, out = run_json(capsys, "analyze", "--config", '{"n": 2}')
    report = json.loads(out.out)
    assert code == 0
    assert report["analytic_p"] == pytest.approx(0.4, abs=1e-12)
    info = report["region_info"]
    assert info["region"] == "F" and info["p_max"] == pytest.approx(0.4)
    assert info["regional_p"] == pytest.approx(0.4, abs=1e-12)
    assert sum(b["success_mass"] for b in report["branches"]) == pytest.approx(0.4, abs=1e-12)


def test_analyze_complex_pair(capsys):
    code, out = run_json(capsys, "analyze", "--config", '{"n": [0, 2], "m": [1, 0], "b": 1}')
    assert code == 0
    report = json.loads(out.out)
    assert report["config"]["n"] == [0.0, 2.0]
    assert report["analytic_p"] == pytest.approx(0.4, abs=1e-12)


def test_config_file(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"n": 0.5, "m": 2, "b": 0.3}))
    code, out = run_json(capsys, "analyze", "--config", str(path))
    assert code == 0
    assert json.loads(out.out)["config"]["m"] == [2.0, 0.0]


def test_degenerate_channel_warns(capsys):
    code, out = run_json(capsys, "analyze", "--config", '{"n": 0}')
    assert code == 0
    assert "degenerate channel" in out.err
    assert json.loads(out.out)["analytic_p"] == 0.0


def test_analyze_lparty(capsys):
    code, out = run_json(capsys, "analyze", "--config", '{"n": 2, "L": 4}')
    report = json.loads(out.out)
    assert code == 0
    assert report["region_info"] is None
    assert len(report["branches"]) == 16


@pytest.mark.parametrize(
    "config",
    [
        '{"L": 1}',
        '{"n": "abc"}',
        '{"trials": 0}',
        '{"seed": -1}',
        '{"b": 1, "b_list": [1]}',
        '{"b_list": [1, 2], "L": 3}',
        '{"input": [0, 0]}',
        '{"unknown": 1}',
        '{"n": 1e400}',
        "{not json",
        "[1, 2]",
    ],
)
def test_invalid_config_exit_1(config, capsys):
    code, out = run_json(capsys, "simulate", "--config", config)
    assert code == cli.EXIT_INVALID
    assert out.err.startswith("error:")


def test_unwritable_output(capsys, tmp_path):
    code, out = run_json(capsys, "analyze", "--out", str(tmp_path / "missing" / "r.json"))
    assert code == cli.EXIT_INVALID


def test_simulate_small_has_records(capsys):
    code, out = run_json(capsys, "simulate", "--trials", "5", "--seed", "1")
    report = json.loads(out.out)
    assert code == 0
    assert len(report["records"]) == 5
    assert report["successes"] == 5
    for record in report["records"]:
        assert record["success"] and record["fidelity"] >= 1 - 1e-9
        assert [msg["sender"] for msg in record["transcript"]] == [1, 2]


def test_simulate_statistics(capsys):
    code, out = run_json(capsys, "simulate", "--config", '{"n": 2}', "--trials", "20000", "--seed", "4")
    report = json.loads(out.out)
    assert code == 0
    assert report["records"] == []
    sigma = math.sqrt(0.4 * 0.6 / 20000)
    assert abs(report["empirical_p"] - 0.4) < 4 * sigma
    assert not report["suspicious"]
    assert sum(b["count"] for b in report["branches"]) == 20000


def test_simulate_fixed_input(capsys):
    code, out = run_json(capsys, "simulate", "--config", '{"n": 2, "input": [1, 0]}', "--trials", "2000")
    assert code == 0
    assert json.loads(out.out)["config"]["input"] == [[1.0, 0.0], [0.0, 0.0]]


def test_simulate_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert cli.main(["simulate", "--config", '{"n": 1.5, "m": 0.7}', "--seed", "9", "--trials", "3000", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_changes_result(tmp_path):
    paths = [tmp_path / f"{s}.json" for s in (1, 2)]
    for seed, path in zip((1, 2), paths):
        cli.main(["simulate", "--config", '{"n": 1.5}', "--seed", str(seed), "--trials", "3000", "--out", str(path)])
    assert paths[0].read_bytes() != paths[1].read_bytes()


def test_csv_report(capsys):
    code, out = run_json(capsys, "simulate", "--format", "csv", "--trials", "1000", "--config", '{"n": 2}')
    assert code == 0
    rows = list(csv.reader(io.StringIO(out.out)))
    assert rows[0] == cli.SIMULATE_COLUMNS
    assert len(rows) == 1 + 8 + 1
    assert rows[-1][0] == "total" and rows[-1][1] == "1000"
    assert "\r" not in out.out


def test_analyze_csv(capsys):
    code, out = run_json(capsys, "analyze", "--format", "csv", "--config", '{"n": 2}')
    rows = list(csv.reader(io.StringIO(out.out)))
    assert rows[0] == cli.ANALYZE_COLUMNS
    assert float(rows[-1][-1]) == pytest.approx(0.4, abs=1e-12)


def test_run_config_round_trip():
    cfg = cli.RunConfig.from_dict({"n": [1, 2], "m": 0.5, "b_list": [1, [0, 1]], "L": 4, "trials": 7, "seed": 3})
    again = cli.RunConfig.from_dict(cfg.to_dict())
    assert again == cfg
    assert again.to_dict() == cfg.to_dict()


def sweep(capsys, spec):
    code, out = run_json(capsys, "sweep", "--config", json.dumps(spec))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.out)))
    return out.out, rows


def test_sweep_header_and_single_point(capsys):
    text, rows = sweep(capsys, {"xi": 0.2, "zeta": 0.3, "eta": 0.3})
    assert text.splitlines()[0] == ",".join(cli.SWEEP_COLUMNS)
    assert len(rows) == 1
    assert float(rows[0]["p"]) == pytest.approx(0.348, abs=1e-12)
    assert rows[0]["region"] == "E"


def test_sweep_grid_max(capsys):
    spec = {"xi": 0.2, "zeta": {"start": 0.02, "stop": 1.0, "num": 50}, "eta": {"start": 0.02, "stop": 1.0, "num": 50}}
    _, rows = sweep(capsys, spec)
    assert len(rows) == 2500
    best = max(float(r["p"]) for r in rows)
    assert best <= 0.4 + 1e-12
    assert abs(best - 0.4) < 1e-2


def test_sweep_zeta_eta_symmetry(capsys):
    axis = {"start": 0.1, "stop": 0.9, "step": 0.1}
    _, rows = sweep(capsys, {"xi": 0.3, "zeta": axis, "eta": axis})
    p = {(r["zeta"], r["eta"]): float(r["p"]) for r in rows}
    assert len(p) == 81
    for (z, e), value in p.items():
        assert abs(value - p[e, z]) <= 1e-15


def test_sweep_moduli_mode(capsys):
    _, rows = sweep(capsys, {"mode": "moduli", "n": [0, 1, 2], "m": 1, "b": 1})
    assert [float(r["p"]) for r in rows] == pytest.approx([0.0, 1.0, 0.4], abs=1e-12)
    assert rows[0]["region"] == "" and rows[0]["p_max"] == ""


@pytest.mark.parametrize(
    "spec",
    [{"xi": 1.5}, {"mode": "other"}, {"xi": {"start": 0, "stop": 1}}, {"xi": []}, {"mode": "moduli", "n": -1}],
)
def test_sweep_rejects(spec, capsys):
    assert cli.main(["sweep", "--config", json.dumps(spec)]) == cli.EXIT_INVALID


def test_sweep_to_file(tmp_path):
    out = tmp_path / "s.csv"
    assert cli.main(["sweep", "--config", '{"xi": [0.1, 0.2]}', "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 3


def test_verify_quick(capsys):
    code, out = run_json(capsys, "verify", "--seed", "0")
    assert code == 0
    assert out.out.strip().endswith(f"{len(cli.verify.CHECKS)}/{len(cli.verify.CHECKS)} checks passed")


def test_z_score_edges():
    assert cli.z_score(1.0, 1.0, 10) == 0.0
    assert cli.z_score(0.9, 1.0, 10) is None
    assert cli.z_score(0.5, 0.5, 100) == 0.0


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "ghz_teleport", "analyze", "--config", '{"n": 2}'], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["analytic_p"] == pytest.approx(0.4)
