import os

import numpy as np
import pytest

from interlace_lab.cli import main


def read_rows(path):
    import csv
    import io

    raw = open(path).read().splitlines()
    assert raw[0] == "#schema=1"
    return list(csv.DictReader(io.StringIO("\n".join(raw[1:]))))


class TestCLI:
    def test_classify(self, tmp_path):
        assert main(["classify", "--spec", "besq:3", "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "classify.csv")
        assert rows[0]["class"] == "entrance"
        assert rows[1]["class"] == "natural"

    def test_duality_check(self, tmp_path):
        assert main(["duality-check", "--spec", "bm", "--times", "0.5",
                     "--grid", "3", "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "duality.csv")
        assert len(rows) == 9
        assert all(float(r["residual"]) < 1e-8 for r in rows)

    def test_density_value(self, tmp_path):
        assert main(["density", "--spec", "bm", "--t", "1", "--x", "0 1",
                     "--y", "0 1", "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "density.csv")
        assert float(rows[0]["value"]) == pytest.approx(0.10060511, abs=1e-6)

    def test_eigen_check(self, tmp_path):
        assert main(["eigen-check", "--spec", "lag:3", "--n", "2",
                     "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "eigen.csv")
        assert float(rows[0]["residual"]) < 1e-8
        assert float(rows[0]["rate"]) == -2.0

    def test_entrance_law(self, tmp_path):
        assert main(["entrance-law", "--family", "gue", "--n", "2",
                     "--points", "-1 0.5", "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "entrance.csv")
        assert float(rows[0]["density"]) > 0

    def test_intertwine_check(self, tmp_path):
        assert main(["intertwine-check", "--spec", "bm", "--shape", "n,n+1",
                     "--n", "1", "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "intertwine.csv")
        assert all(r["pass"] == "True" for r in rows)

    def test_edge_cdf_with_oracle(self, tmp_path):
        assert main(["edge-cdf", "--spec", "bm", "--n", "2", "--zmin", "-1",
                     "--zmax", "3", "--znum", "5", "--oracle", "gue:2",
                     "--oracle-count", "20000", "--seed", "3",
                     "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "edge_cdf.csv")
        assert all(float(r["diff"]) < 0.02 for r in rows)

    def test_simulate_two_level(self, tmp_path):
        cfg = tmp_path / "sim.cfg"
        out = tmp_path / "simout"
        cfg.write_text(
            "[simulate]\nfamily = bm\nmode = two-level\nshape = n,n+1\n"
            "init_x = -1 1\ninit_y = 0\ny_family = bm\nt = 0.2\ndt = 0.01\n"
            f"paths = 20\nseed = 4\nrecord_stride = 10\noutput = {out}\n"
        )
        assert main(["simulate", "--config", str(cfg)]) == 0
        rows = read_rows(out / "terminal.csv")
        assert len(rows) == 20 * 3  # one y and two x particles per path
        assert (out / "trajectories.csv").exists()

    def test_simulate_edge_mode(self, tmp_path):
        cfg = tmp_path / "sim.cfg"
        out = tmp_path / "edgeout"
        cfg.write_text(
            "[simulate]\nfamily = besq:2\nmode = edge\nn = 2\nside = right\n"
            f"init = 0 0\nt = 0.2\ndt = 0.01\npaths = 10\nseed = 1\noutput = {out}\n"
        )
        assert main(["simulate", "--config", str(cfg)]) == 0
        rows = read_rows(out / "terminal.csv")
        vals = {}
        for r in rows:
            vals.setdefault(int(r["path_id"]), []).append(float(r["value"]))
        for pid, vv in vals.items():
            assert vv[0] <= vv[1] + 1e-12

    def test_campaign_exit_status(self, tmp_path):
        assert main(["campaign", "--name", "boundary-table", "--out", str(tmp_path)]) == 0

    def test_campaign_config_file(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("[campaign]\nname = chapman-bm\nnodes = 48\n")
        assert main(["campaign", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        assert (tmp_path / "chapman-bm.csv").exists()
