import json
import math

import numpy as np
import pytest

from latscat import scattering as sc
from latscat.cli import main as cli_main
from latscat.harness import ExperimentConfig, emit, gen_family, run_experiment
from latscat.lattice import Potential


# ------------------------------------------------------------------ families

def test_family_zero():
    v = gen_family("zero", 100)
    assert v.is_zero


def test_family_qper_log_values():
    v = gen_family({"kind": "qper_log", "c": [0.1, -0.1]}, 8)
    assert abs(v.value(1) - 0.1 / math.log(3.0)) < 1e-15
    assert abs(v.value(2) + 0.1 / math.log(4.0)) < 1e-15
    assert len(v.values) == 8


@pytest.mark.parametrize("descriptor,q", [
    ({"kind": "qper_log", "c": [0.1, -0.07, 0.05]}, 3),
    ({"kind": "random_l2q", "q": 2, "amplitude": 0.2, "seed": 3}, 2),
    ({"kind": "slow_decay", "c": 0.2, "beta": 0.6}, 4),
])
def test_family_law_l2_q_differences(descriptor, q):
    # partial sums of |v_{n+q} - v_n|^2 settle as N grows
    v = gen_family(descriptor, 2**15)
    vals = np.concatenate([v.values, np.zeros(q)])
    sq = (vals[q:] - vals[:-q]) ** 2
    partial = np.cumsum(sq)
    assert v.value(2**15) != 0.0 or descriptor["kind"] == "qper_log"
    assert partial[-1] - partial[2**13] < 1e-3 * (1.0 + partial[-1])
    assert abs(v.value(2**15)) < 0.05  # v_n -> 0


def test_family_literal_and_compact():
    v = gen_family({"kind": "literal", "support_lo": 3, "values": [1.0, 2.0]}, 10)
    assert v.value(4) == 2.0
    v = gen_family({"kind": "random_compact", "support": 5, "amplitude": 0.3,
                    "seed": 1}, 12)
    assert v.support_hi == 5 and v.norm_inf() <= 0.3


def test_family_unknown_rejected():
    with pytest.raises(ValueError):
        gen_family({"kind": "nope"}, 10)
    with pytest.raises(ValueError):
        gen_family(42, 10)


# ------------------------------------------------------------------ suites

def test_identity_suite_runs_clean():
    cfg = ExperimentConfig(kind="IDENTITY_SUITE", seed=7, params={"count": 40})
    rep = run_experiment(cfg)
    assert rep.passed
    assert rep.summary["failures"] == 0
    assert rep.summary["max_variant_rel"] <= 1e-10


def test_route_agreement_small():
    cfg = ExperimentConfig(kind="ROUTE_AGREEMENT", seed=1,
                           params={"potentials": 2, "support": 6},
                           z_grid={"re": [-1.5, 1.5, 4], "im": [0.1, 0.8, 3]})
    rep = run_experiment(cfg)
    assert rep.passed
    assert rep.summary["max_route_rel"] <= 1e-8


def test_entropy_scan_zero_potential_constant_in_n():
    cfg = ExperimentConfig(kind="ENTROPY_SCAN", family="zero", q=1,
                           n_ladder=[32, 64, 128], params={"nodes": 65})
    rep = run_experiment(cfg)
    assert rep.passed
    vals = rep.summary["intervals"]["0"]["entropies"]
    assert max(vals) - min(vals) < 1e-12


def test_entropy_grid_refinement_tolerance():
    cfg = dict(kind="ENTROPY_SCAN", family={"kind": "qper_log", "c": [0.1, -0.08]},
               q=2, n_ladder=[64])
    coarse = run_experiment(ExperimentConfig(**cfg, params={"nodes": 257}))
    fine = run_experiment(ExperimentConfig(**cfg, params={"nodes": 513}))
    for j in ("0", "1"):
        a = coarse.summary["intervals"][j]["entropies"][0]
        b = fine.summary["intervals"][j]["entropies"][0]
        assert abs(a - b) < 1e-4


def test_transfer_diag_runs():
    cfg = ExperimentConfig(kind="TRANSFER_DIAG", q=2, delta=0.2,
                           family={"kind": "qper_log", "c": [0.08, -0.06]},
                           params={"m_max": 60, "band_points": 1},
                           z_grid={"im": [0.1, 0.4, 2]})
    rep = run_experiment(cfg)
    assert rep.passed
    assert rep.summary["max_alpha_sum_err"] <= 1e-10
    assert any("trace" in c for c in rep.cells)


def test_transfer_trace_csv_columns(tmp_path):
    cfg = ExperimentConfig(kind="TRANSFER_DIAG", q=1, delta=0.2, family="zero",
                           params={"m_max": 10, "band_points": 1},
                           z_grid={"im": [0.2, 0.2, 1]})
    rep = run_experiment(cfg)
    paths = emit(rep, "csv", tmp_path)
    traces = [p for p in paths if "trace" in p.name]
    assert traces
    header = traces[0].read_text().splitlines()[0]
    assert header == "m,S_abs,p_abs,phi_abs,nu_abs,W_norm"


def test_density_report():
    cfg = ExperimentConfig(kind="DENSITY", family="zero", q=1,
                           params={"N": 32, "nodes": 33})
    rep = run_experiment(cfg)
    assert rep.passed
    assert all(c["rho_prime"] > 0 for c in rep.cells)


# ------------------------------------------------------------------ determinism

def test_reports_deterministic():
    cfg = ExperimentConfig(kind="IDENTITY_SUITE", seed=11, params={"count": 12})
    a = run_experiment(cfg).to_json()
    b = run_experiment(cfg).to_json()
    assert a == b


def test_jobs_do_not_change_results():
    base = dict(kind="ROUTE_AGREEMENT", seed=2,
                params={"potentials": 2, "support": 5},
                z_grid={"re": [-1.0, 1.0, 3], "im": [0.2, 0.6, 2]})
    a = run_experiment(ExperimentConfig(**base, jobs=1)).to_json()
    b = run_experiment(ExperimentConfig(**base, jobs=4))
    b.config["jobs"] = 1  # only the echoed config differs
    assert a == b.to_json()


def test_emit_round_trip_and_bytes(tmp_path):
    cfg = ExperimentConfig(kind="ENTROPY_SCAN", family="zero", q=2,
                           n_ladder=[32, 64], params={"nodes": 33})
    rep = run_experiment(cfg)
    p1 = emit(rep, "json", tmp_path / "a")[0]
    p2 = emit(run_experiment(cfg), "json", tmp_path / "b")[0]
    assert p1.read_bytes() == p2.read_bytes()
    doc = json.loads(p1.read_text())
    assert doc["kind"] == "ENTROPY_SCAN"
    assert doc["stamp"]["package"] == "latscat"
    csvs = emit(rep, "csv", tmp_path / "c")
    text = csvs[0].read_text().splitlines()
    assert text[0] == "N,interval,a,b,entropy"
    assert len(text) == 1 + len([c for c in rep.cells if "error" not in c])


def test_emit_header_only_for_empty():
    rep = run_experiment(ExperimentConfig(kind="DENSITY", family="zero", q=1,
                                          params={"N": 8, "nodes": 5}))
    rep.cells = []
    import tempfile
    with tempfile.TemporaryDirectory() as d:
        path = emit(rep, "csv", d)[0]
        assert path.read_text() == "z,rho_prime,N\r\n" or \
            path.read_text() == "z,rho_prime,N\n"


def test_report_json_round_trip():
    from latscat.harness import ScanReport

    cfg = ExperimentConfig(kind="IDENTITY_SUITE", seed=4, params={"count": 5})
    rep = run_experiment(cfg)
    again = ScanReport.from_json(rep.to_json())
    assert again.to_json() == rep.to_json()


def test_routes_csv_columns(tmp_path):
    cfg = ExperimentConfig(kind="ROUTE_AGREEMENT", seed=5,
                           params={"potentials": 1, "support": 4},
                           z_grid={"re": [-1.0, 1.0, 2], "im": [0.2, 0.5, 2]})
    rep = run_experiment(cfg)
    path = emit(rep, "csv", tmp_path)[0]
    lines = path.read_text().splitlines()
    assert lines[0] == "z_re,z_im,a_re,a_im,b_re,b_im,route"
    # three routes per grid cell
    assert len(lines) == 1 + 3 * len(rep.cells)
    assert any(line.endswith("FORMULA") for line in lines[1:])


def test_failed_cell_does_not_abort():
    # an invalid quadrature setting fails every interval cell but still
    # yields a (failed) report instead of raising
    cfg = ExperimentConfig(kind="DENSITY", family="zero", q=1,
                           params={"N": 8, "nodes": 4})
    rep = run_experiment(cfg)
    assert not rep.passed
    assert all("error" in c for c in rep.cells)


def test_cli_failure_exit_code(tmp_path):
    cfg = ExperimentConfig(kind="DENSITY", family="zero", q=1,
                           params={"N": 8, "nodes": 4})
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    assert cli_main(["density", "--config", str(path)]) == 1


def test_config_json_round_trip():
    cfg = ExperimentConfig(kind="ENTROPY_SCAN", family={"kind": "qper_log",
                                                        "c": [0.1]}, q=1)
    again = ExperimentConfig.from_json(cfg.to_json())
    assert again.to_json() == cfg.to_json()


def test_config_rejects_bad_ladder():
    with pytest.raises(ValueError):
        ExperimentConfig(kind="ENTROPY_SCAN", n_ladder=[64, 32])
    with pytest.raises(ValueError):
        ExperimentConfig(kind="NOPE")


# ------------------------------------------------------------------ stability

def test_truncation_stability_curve():
    # cutting the first L sites moves the entropy continuously (no blow-up)
    base = gen_family({"kind": "qper_log", "c": [0.12, -0.09]}, 256)
    interval = (-1.9, -0.1)
    grid = sc.simpson_grid(interval, 129)
    curve = []
    for cut in (0, 4, 8, 16, 32):
        vals = base.values.copy()
        vals[:cut] = 0.0
        v = Potential(1, vals)
        samples = sc.spectral_density(v, grid, 256)
        curve.append(sc.entropy_integral(samples, interval))
    diffs = np.abs(np.diff(curve))
    assert np.isfinite(curve).all()
    assert diffs.max() < 1.0
    print("truncation-stability curve:", [f"{c:.4f}" for c in curve])


# ------------------------------------------------------------------ CLI

def test_cli_identities_exit_code(tmp_path, capsys):
    rc = cli_main(["identities", "--seed", "3", "--out", str(tmp_path),
                   "--format", "csv"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "passed: True" in out
    assert (tmp_path / "identity_suite.csv").exists()


def test_cli_config_file(tmp_path):
    cfg = ExperimentConfig(kind="ENTROPY_SCAN", family="zero", q=1,
                           n_ladder=[16, 32], params={"nodes": 17})
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(json.loads(cfg.to_json())))
    rc = cli_main(["entropy", "--config", str(path), "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "entropy_scan.json").exists()


def test_cli_jobs_flag(capsys):
    rc = cli_main(["entropy", "--q", "1", "--jobs", "3"])
    out = capsys.readouterr().out
    assert rc == 0 and "passed: True" in out


def test_cli_kind_mismatch(tmp_path):
    cfg = ExperimentConfig(kind="ENTROPY_SCAN")
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    assert cli_main(["identities", "--config", str(path)]) == 2
