import csv
import io
import json

import pytest

from obfrank import cli, region
from obfrank import config as cfgmod
from obfrank.model import ConfigError, QosSpec

FIG2 = {
    "model": "wyner",
    "geometry": {"D": 2.0, "g": 0.1},
    "qos": {"eta": 4.0, "p": 0.1},
    "channel": {"K": 10, "Nt": 8, "noise_power": 0.01, "alpha": 3.0},
    "montecarlo": {"trials": 20000, "seed": 5},
}


@pytest.fixture
def write_config(tmp_path):
    def _write(doc=None, **section_updates):
        doc = json.loads(json.dumps(doc or FIG2))
        for key, value in section_updates.items():
            if isinstance(value, dict):
                doc.setdefault(key, {}).update(value)
            else:
                doc[key] = value
        path = tmp_path / f"cfg{len(list(tmp_path.iterdir()))}.json"
        path.write_text(json.dumps(doc))
        return str(path)

    return _write


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def data_rows(text):
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def meta(text):
    return dict(ln[2:].split(": ", 1) for ln in text.splitlines() if ln.startswith("# "))


class TestConfig:
    def test_round_trip(self):
        sc = cfgmod.from_dict(FIG2)
        again = cfgmod.from_dict(json.loads(cfgmod.dumps(sc)))
        assert again == sc
        assert cfgmod.from_dict(json.loads(cfgmod.dumps(again))) == again

    def test_round_trip_optional_fields(self):
        doc = json.loads(json.dumps(FIG2))
        doc["solver"] = {"l_other": 2.0, "grid": "1:3:0.5"}
        doc["montecarlo"]["ranks"] = [2, 3]
        doc["geometry"]["bs_x"] = [2.0, 6.0]
        sc = cfgmod.from_dict(doc)
        assert cfgmod.from_dict(cfgmod.to_dict(sc)) == sc

    def test_db_keys(self):
        doc = json.loads(json.dumps(FIG2))
        doc["qos"] = {"eta_db": 10.0, "p": 0.1}
        doc["channel"] = {"K": 10, "snr_db": 20.0}
        sc = cfgmod.from_dict(doc)
        assert sc.eta == pytest.approx(10.0)
        assert sc.noise_power == pytest.approx(0.01)
        assert "eta_db" not in cfgmod.dumps(sc)

    def test_errors_name_fields(self):
        doc = json.loads(json.dumps(FIG2))
        doc["channel"]["K"] = "ten"
        with pytest.raises(ConfigError, match="channel.K"):
            cfgmod.from_dict(doc)
        doc = json.loads(json.dumps(FIG2))
        doc["qos"]["p"] = 0.0
        with pytest.raises(ConfigError, match="p in open interval"):
            cfgmod.from_dict(doc)
        doc = json.loads(json.dumps(FIG2))
        doc["qos"]["bogus"] = 1
        with pytest.raises(ConfigError, match="qos.bogus"):
            cfgmod.from_dict(doc)

    def test_digest_stable(self):
        a = cfgmod.digest(cfgmod.from_dict(FIG2))
        b = cfgmod.digest(cfgmod.from_dict(json.loads(json.dumps(FIG2))))
        assert a == b and len(a) == 64

    def test_grid_parser(self):
        assert cli.parse_grid("1:2:0.25") == [1.0, 1.25, 1.5, 1.75, 2.0]
        assert cli.parse_grid("1:1.3:0.1") == [1.0, 1.1, 1.2, 1.3]
        with pytest.raises(cli.InputError):
            cli.parse_grid("1:2")

    def test_number_format(self):
        assert cli.fmt(1 / 3) == "0.333333333333"
        assert cli.fmt(1e-20) == "1e-20"


class TestMaxRank:
    def test_wyner_given_other_rank(self, capsys, write_config):
        code, out, _ = run(capsys, "max-rank", "--config", write_config(), "--l-other", "2")
        assert code == 0
        expected = region.max_rank_wyner(QosSpec(4.0, 0.1), 2.0, 0.1, 0.01, 10)
        assert cli.fmt(expected.relaxed) in out
        assert "closed-form" in out

    def test_infeasible_exit(self, capsys, write_config):
        code, out, err = run(capsys, "max-rank", "--config", write_config(qos={"eta": 1e4}))
        assert code == 2
        assert "infeasible at L=1" in err

    def test_bad_config_exit(self, capsys, write_config):
        code, _, err = run(capsys, "max-rank", "--config", write_config(channel={"K": 0}))
        assert code == 1
        assert "K must be" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "max-rank", "--config", str(tmp_path / "nope.json"))
        assert code == 1 and "cannot read" in err

    @pytest.mark.parametrize("model, method", [
        ("single-homo", "closed-form"), ("single-hetero", "bisection"),
        ("wyner", "closed-form"), ("two-hetero", "bisection"),
    ])
    def test_every_model(self, capsys, write_config, model, method, tmp_path):
        out_csv = tmp_path / "mr.csv"
        code, out, _ = run(capsys, "max-rank", "--config", write_config(), "--model", model, "--out", str(out_csv))
        assert code == 0
        row = data_rows(out_csv.read_text())[0]
        assert row["method"] == method
        assert float(row["outage"]) == pytest.approx(0.1, abs=1e-8)
        assert int(row["L"]) == min(8, int(float(row["L_relaxed"])))


class TestRegion:
    def test_fig2_corner(self, capsys, write_config):
        code, out, _ = run(capsys, "region", "--config", write_config(), "--grid", "1:2:0.05")
        assert code == 0
        corner = region.equal_rank_wyner(QosSpec(4.0, 0.1), 0.1, 0.01, 10).relaxed
        assert float(meta(out)["diagonal_crossing"]) == pytest.approx(corner, abs=1e-6)
        vals = [float(r["L2_max"]) for r in data_rows(out)]
        assert vals and all(b <= a for a, b in zip(vals, vals[1:]))

    def test_empty_region(self, capsys, write_config):
        code, out, err = run(capsys, "region", "--config", write_config(qos={"eta": 1e3}))
        assert code == 2
        assert data_rows(out) == []

    def test_single_cell_rejected(self, capsys, write_config):
        code, _, _ = run(capsys, "region", "--config", write_config(model="single-homo"))
        assert code == 1

    def test_byte_identical_with_manifest(self, capsys, write_config, tmp_path):
        cfg = write_config(model="two-hetero")
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(capsys, "region", "--config", cfg, "--grid", "1:2.5:0.5", "--out", str(a), "--threads", "1")[0] == 0
        assert run(capsys, "region", "--config", cfg, "--grid", "1:2.5:0.5", "--out", str(b), "--threads", "4")[0] == 0
        assert a.read_bytes() == b.read_bytes()
        manifest = json.loads((tmp_path / "a.manifest.json").read_text())
        assert manifest["outputs"] == [str(a)]
        assert manifest["config_digest"] == meta(a.read_text())["config_digest"]
        assert {"command", "seed", "tool_version", "duration_s"} <= set(manifest)


class TestValidate:
    def test_passes_and_echoes_seed(self, capsys, write_config):
        cfg = write_config(model="single-homo")
        code, out, _ = run(capsys, "validate", "--config", cfg, "--ranks", "2", "--seed", "42")
        assert code == 0
        assert meta(out)["seed"] == "42"
        code2, out2, _ = run(capsys, "validate", "--config", cfg, "--ranks", "2", "--seed", "42")
        assert out2 == out

    def test_corrupted_noise_detected(self, capsys, write_config):
        code, _, err = run(capsys, "validate", "--config", write_config(), "--corrupt-noise", "30")
        assert code == 3
        assert "validation failed" in err

    def test_rank_count_checked(self, capsys, write_config):
        code, _, _ = run(capsys, "validate", "--config", write_config(), "--ranks", "2")
        assert code == 1


class TestSweep:
    def _sweep(self, capsys, cfg, vary, values, models):
        code, out, _ = run(capsys, "sweep", "--config", cfg, "--vary", vary, "--values", values, "--models", models)
        assert code == 0
        by_model = {}
        for r in data_rows(out):
            value = -float("inf") if r["L_relaxed"] == "infeasible" else float(r["L_relaxed"])
            by_model.setdefault(r["model"], []).append(value)
        return by_model

    def test_snr(self, capsys, write_config):
        res = self._sweep(capsys, write_config(), "snr", "0,10,20,30", "single-homo,single-hetero,wyner,two-hetero")
        assert len(res) == 4
        for vals in res.values():
            assert all(b >= a for a, b in zip(vals, vals[1:]))
            assert vals[-1] > 1

    def test_cell_size(self, capsys, write_config):
        res = self._sweep(capsys, write_config(qos={"eta": 2.0}), "D", "1,2,4", "single-hetero,two-hetero")
        for vals in res.values():
            assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_users(self, capsys, write_config):
        res = self._sweep(capsys, write_config(), "K", "5,10,20,40", "single-hetero,wyner,two-hetero")
        for vals in res.values():
            assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_unknown_parameter(self, capsys, write_config):
        code, _, err = run(capsys, "sweep", "--config", write_config(), "--vary", "Nt", "--values", "1,2")
        assert code == 1 and "--vary" in err
