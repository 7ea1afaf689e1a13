import csv
import io
import json

import pytest

from ccsketch.errors import ConfigurationError
from ccsketch.experiment import COLUMNS, DEFAULTS, cells, load_config, rows_to_csv, run_experiment

SMALL = {"vector": {"profile": "TWIST", "d": 20000, "seed": 2}, "trials": 2000}


def by_cell(rows):
    return {(r["estimator"], r["delta"], r["k"]): r for r in rows}


class TestConfig:
    def test_defaults_cover_full_sweep(self):
        cfg = load_config({})
        assert cfg["deltas"][0] == 0.2 and cfg["deltas"][-1] == pytest.approx(1e-10)
        assert len(cells(cfg)) == len(DEFAULTS["deltas"]) * 4 * 5

    def test_json_text_and_path(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"ks": [7]}))
        assert load_config(str(path))["ks"] == [7]
        assert load_config('{"ks": [8]}')["ks"] == [8]

    @pytest.mark.parametrize("bad", [{"nope": 1}, {"deltas": [1.5]}, {"ks": [0]}, {"estimators": ["x"]},
                                     {"trials": 10}, {"target": "x"}])
    def test_rejects(self, bad):
        with pytest.raises((ConfigurationError, ValueError)):
            load_config(bad)

    def test_invalid_json(self):
        with pytest.raises(ConfigurationError):
            load_config("{not json")


class TestRun:
    def test_byte_identical_reruns(self):
        cfg = {**SMALL, "deltas": [0.1, 1e-3], "ks": [3, 10], "estimators": ["new", "gm", "sym"]}
        a = rows_to_csv(run_experiment(cfg))
        b = rows_to_csv(run_experiment(cfg))
        assert a == b
        assert a.splitlines()[0] == ",".join(COLUMNS)

    def test_workers_do_not_change_output(self):
        cfg = {**SMALL, "deltas": [0.1, 0.01], "ks": [10], "estimators": ["new", "hm"]}
        assert rows_to_csv(run_experiment(cfg)) == rows_to_csv(run_experiment({**cfg, "workers": 2}))

    def test_status_column(self):
        cfg = {**SMALL, "deltas": [0.1, 1e-6], "ks": [1, 10], "estimators": ["new", "gm"]}
        rows = by_cell(run_experiment(cfg))
        assert rows[("gm", 0.1, 1)]["status"] == "skipped"
        assert rows[("gm", 1e-6, 10)]["status"] == "unstable"
        assert rows[("new", 1e-6, 10)]["status"] == "ok"
        assert rows[("new", 0.1, 1)]["status"] == "ok"
        parsed = list(csv.DictReader(io.StringIO(rows_to_csv(rows.values()))))
        assert {r["status"] for r in parsed} == {"ok", "skipped", "unstable"}

    def test_new_estimator_mse_scales_as_delta_squared(self):
        cfg = {**SMALL, "deltas": [0.1, 0.01, 0.001], "ks": [100], "estimators": ["new"], "trials": 5000}
        mse = [r["normalized_mse"] for r in run_experiment(cfg)]
        assert mse[0] / mse[1] == pytest.approx(100 * 2.8 / 2.98, rel=0.15)
        assert mse[1] / mse[2] == pytest.approx(100 * 2.98 / 2.998, rel=0.15)

    def test_symmetric_mse_is_flat_in_delta(self):
        cfg = {**SMALL, "deltas": [0.1, 0.01, 1e-4], "ks": [100], "estimators": ["sym"], "trials": 5000}
        mse = [r["normalized_mse"] for r in run_experiment(cfg)]
        assert max(mse) / min(mse) < 1.25

    def test_entropy_mse_plateaus(self):
        cfg = {**SMALL, "target": "entropy", "deltas": [1e-3, 1e-4, 1e-6, 1e-8], "ks": [10],
               "estimators": ["new"], "trials": 5000}
        mse = [r["normalized_mse"] for r in run_experiment(cfg)]
        assert max(mse) / min(mse) < 1.15

    def test_path_vector(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("#D 10 tiny\n0 1\n3 2\n7 5\n")
        rows = run_experiment({"vector": {"path": str(path)}, "deltas": [0.1], "ks": [10],
                               "estimators": ["new"], "trials": 200})
        assert rows[0]["vector"] == "tiny" and rows[0]["status"] == "ok"

    def test_unknown_profile(self):
        with pytest.raises(ConfigurationError):
            run_experiment({"vector": {"profile": "NOPE"}})
