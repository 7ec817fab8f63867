from __future__ import annotations

import json
import math

import numpy as np
import pytest

from dfsqubit.config import from_mapping
from dfsqubit.lindblad import UnspecifiedCoherenceWarning, decay_rate
from dfsqubit.model import bell_mixing_coeffs
from dfsqubit.runner import (
    RunError,
    compare,
    file_label,
    read_series_csv,
    realizations,
    run,
)

SHORT = {"t_final": "2.0", "dt": "0.05", "observe_every": "2", "alpha": "0.02"}
SMALL_MPS = {**SHORT, "n_modes": "2", "n_bos": "2", "t_final": "1.0", "d_max": "8"}


def _cfg(tmp_path, **values):
    values = {"output_dir": str(tmp_path / "run"), "cache_dir": str(tmp_path / "cache"), **values}
    return from_mapping(values)


def test_closed_method_gives_unit_fidelity(tmp_path):
    cfg = _cfg(tmp_path, **SHORT, method="closed", thin="16")
    result = run(cfg)
    for (metric, label), ts in result.series.items():
        if metric == "fidelity":
            np.testing.assert_allclose(ts.mean, 1.0, atol=1e-10, err_msg=label)
    assert (result.run_dir / "fidelity_TWOQUBIT.csv").exists()
    assert (result.run_dir / "leakage_AF.csv").exists()
    assert not (result.run_dir / "leakage_PHYSICAL.csv").exists()


def test_tf_minus_decays_exponentially(tmp_path):
    cfg = _cfg(tmp_path, **SHORT, method="lindblad_analytic", ensemble="single", state="TF-")
    result = run(cfg)
    gamma = decay_rate(cfg.model).gamma
    fid = result.series[("fidelity", "TWOQUBIT")].mean
    np.testing.assert_allclose(fid, np.exp(-gamma * cfg.times / 2), atol=1e-12)


def test_rerun_is_bitwise_identical(tmp_path):
    cfg = _cfg(tmp_path, **SHORT, method="lindblad_rk4", thin="32")
    run(cfg, tmp_path / "a")
    run(cfg, tmp_path / "b")
    for path in sorted((tmp_path / "a").glob("*.csv")):
        assert path.read_bytes() == (tmp_path / "b" / path.name).read_bytes(), path.name


@pytest.mark.slow
def test_worker_count_does_not_change_output(tmp_path):
    base = {**SMALL_MPS, "method": "mps", "mps_mode": "direct", "thin": "83"}
    run(_cfg(tmp_path, **base, workers="1"), tmp_path / "w1")
    run(_cfg(tmp_path, **base, workers="2"), tmp_path / "w2")
    for path in sorted((tmp_path / "w1").glob("*.csv")):
        assert path.read_bytes() == (tmp_path / "w2" / path.name).read_bytes(), path.name


def test_map_and_direct_modes_converge_to_oracle(tmp_path):
    # TDVP step errors depend on the state, so the two modes agree only up to
    # the integrator error; both must approach the oracle at second order
    errors = {}
    for dt in ("0.05", "0.025"):
        base = {**SMALL_MPS, "dt": dt, "thin": "83"}
        run(_cfg(tmp_path, **base, method="exact_oracle"), tmp_path / f"oracle{dt}")
        for mode in ("map", "direct"):
            run(_cfg(tmp_path, **base, method="mps", mps_mode=mode), tmp_path / f"{mode}{dt}")
            report = compare(tmp_path / f"{mode}{dt}", tmp_path / f"oracle{dt}")
            errors[mode, dt] = max(report["max_abs_diff"].values())
    for mode in ("map", "direct"):
        assert errors[mode, "0.05"] < 1e-3
        assert 2.5 < errors[mode, "0.05"] / errors[mode, "0.025"] < 5.5


def test_compare_with_itself_is_zero(tmp_path):
    cfg = _cfg(tmp_path, **SHORT, method="lindblad_analytic", ensemble="single", state="QF")
    run(cfg)
    report = compare(cfg.output_dir, cfg.output_dir)
    assert report["max_abs_diff"] and max(report["max_abs_diff"].values()) == 0.0
    assert set(report["table"]) == {"t", "abs_rho13_a", "P1_a", "P3_a", "abs_rho13_b", "P1_b", "P3_b"}


def test_rk4_and_analytic_runs_agree(tmp_path):
    common = {**SHORT, "ensemble": "single", "state": "QF", "nu": "5"}
    run(_cfg(tmp_path, **common, method="lindblad_rk4"), tmp_path / "rk4")
    run(_cfg(tmp_path, **common, method="lindblad_analytic"), tmp_path / "exact")
    report = compare(tmp_path / "rk4", tmp_path / "exact")
    assert max(report["max_abs_diff"].values()) < 1e-6
    # QF starts with |rho_13| = 1/2, decaying at rate gamma
    gamma = decay_rate(from_mapping({**common}).model).gamma
    np.testing.assert_allclose(
        report["table"]["abs_rho13_b"], 0.5 * np.exp(-gamma * report["times"]), atol=1e-12
    )


def test_compare_rejects_mismatched_grids(tmp_path):
    common = {"method": "lindblad_analytic", "ensemble": "single", "state": "TF-"}
    run(_cfg(tmp_path, **SHORT, **common), tmp_path / "a")
    run(_cfg(tmp_path, **{**SHORT, "t_final": "1.0"}, **common), tmp_path / "b")
    with pytest.raises(ValueError, match="time grids"):
        compare(tmp_path / "a", tmp_path / "b")


def test_unspecified_coherences_fail_the_run(tmp_path):
    amp = 1 / math.sqrt(2)
    state = f"{amp}, 0, 0, {amp}"  # (S + TF-)/sqrt2 carries rho_12
    cfg = _cfg(tmp_path, **SHORT, method="lindblad_analytic", ensemble="single", state=state)
    with pytest.raises(RunError):
        run(cfg)
    meta = json.loads((tmp_path / "run" / "metadata.json").read_text())
    assert "0" in meta["failures"]

    # a frozen rho_02 stays compatible with positivity: rho_00 only grows
    a, b = bell_mixing_coeffs(cfg.model)
    state = ", ".join(str(x / math.sqrt(2)) for x in (1.0, a, -b, 0.0))  # (S + E0)/sqrt2
    allowed = cfg.replace(allow_unspecified_coherences=True, state=state)
    with pytest.warns(UnspecifiedCoherenceWarning):
        result = run(allowed)
    assert result.series[("purity", "TWOQUBIT")].mean[0] == pytest.approx(1.0, abs=1e-12)


def test_fit_summary_written(tmp_path):
    cfg = _cfg(
        tmp_path,
        **{**SHORT, "t_final": "20.0"},
        method="lindblad_rk4",
        thin="4",
        strategies="AF",
        fit="true",
    )
    result = run(cfg)
    fits = json.loads((result.run_dir / "fits.json").read_text())
    assert set(fits) == {"AF", "TWOQUBIT"}
    assert "c1" in fits["AF"] or "error" in fits["AF"]


def test_logical_grid_run(tmp_path):
    cfg = _cfg(tmp_path, **SHORT, method="closed", ensemble="logical_grid_18", strategies="AF, NSYMM")
    reals = realizations(cfg)
    assert len(reals) == 36
    assert [r.strategy for r in reals[:18]] == ["AF"] * 18
    result = run(cfg)
    assert ("fidelity", "TWOQUBIT") not in result.series
    np.testing.assert_allclose(result.series[("fidelity", "NSYMM")].mean, 1.0, atol=1e-10)
    # closed dynamics never leave the logical subspace of a logical state on average
    leak = read_series_csv(result.run_dir / "leakage_AF.csv")
    assert leak["mean"][0] == pytest.approx(0.0, abs=1e-12)
    meta = json.loads((result.run_dir / "metadata.json").read_text())
    assert meta["n_realizations"] == 36 and meta["picture"] == "schrodinger"


def test_file_label():
    assert file_label("OPTSYMM(0.866025,0.5)") == "OPTSYMM_0.866025_0.5"
    assert file_label("AF") == "AF"
