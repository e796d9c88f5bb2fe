import math
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

from mmcvqkd.errors import ConfigError
from mmcvqkd.experiments import cli
from mmcvqkd.experiments.config import (
    ChannelSpec,
    DistanceSweep,
    RepRateSweep,
    load_builtin,
    parse_scenario,
    scenario_hash,
    serialize_scenario,
)
from mmcvqkd.experiments.render import render_chart
from mmcvqkd.experiments.sweeps import (
    SweepResult,
    gain_defined_anywhere,
    run_fig1_sweep,
    run_fig3_sweep,
    run_fig5_sweep,
    run_montecarlo_check,
)
from mmcvqkd.multimode import key_rate_multimode
from mmcvqkd.security import ChannelParams, ProtocolParams

BUILTINS = ["fig1", "fig3", "fig5", "mc_check"]

SMALL_MC = """
[scenario]
name = small
[protocol]
electronic_noise = 0.5
[channel]
transmittance = 0.5
excess_noise = 0.01
[modes]
counts = 1, 3
[montecarlo]
sample_counts = 1, 5000
seed = 42
"""


@pytest.mark.parametrize("name", BUILTINS)
def test_builtin_round_trip(name):
    s = load_builtin(name)
    text = serialize_scenario(s)
    assert parse_scenario(text) == s
    assert serialize_scenario(parse_scenario(text)) == text
    assert len(scenario_hash(s)) == 64


def test_fraction_and_lists():
    s = parse_scenario("[scenario]\nname = x\n[protocol]\nkey_fraction = 1/3\n[modes]\ncounts = 1, 2,4\n")
    assert s.protocol.key_fraction == 1 / 3
    assert s.mode_counts == (1, 2, 4)


@pytest.mark.parametrize("text,match", [
    ("[scenario]\nname = x\n[bogus]\na = 1\n", "unknown sections"),
    ("[scenario]\nname = x\n[protocol]\nfoo = 1\n", "unknown keys"),
    ("[scenario]\nname = x\n[protocol]\nmodulation_variance = abc\n", "cannot parse"),
    ("[protocol]\nmodulation_variance = 1\n", "name"),
    ("[scenario]\nname = x\n[protocol]\ndetector_efficiency = 1.5\n", "protocol"),
    ("[scenario]\nname = x\n[channel]\ntransmittance = 0.5\ndistance_km = 3\n", "channel"),
    ("[scenario]\nname = x\n[channel]\ntransmittance = 0.5\n[distance_sweep]\nstop_km = 3\n", "either"),
    ("[scenario]\nname = x\n[modes]\ncounts = 0\n", "counts"),
    ("[scenario]\nname = x\n[montecarlo]\npolicy = z\n", "policy"),
    ("not an ini", None),
])
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_scenario(text)


def test_unknown_builtin():
    with pytest.raises(ConfigError):
        load_builtin("fig9")


def test_channel_spec_distance_conversion():
    ch = ChannelSpec(distance_km=15.0, bob_excess_noise=0.001).resolve(0.6)
    assert ch.transmittance == pytest.approx(10 ** -0.3, rel=1e-15)
    assert ch.excess_noise == pytest.approx(0.001 / (0.6 * 10 ** -0.3), rel=1e-15)


def test_fig1_sweep_monotone_and_lo_law():
    res = run_fig1_sweep(load_builtin("fig1"))
    rate = [r for r in res.rows if r[0] == "rep_rate"]
    v = [r[3] for r in rate]
    assert rate[0][1] == pytest.approx(1e6) and rate[-1][1] == pytest.approx(3e9)
    assert all(b > a for a, b in zip(v, v[1:]))
    lo = {r[2]: r[3] for r in res.rows if r[0] == "lo_power"}
    powers = sorted(lo)
    assert all(lo[a] > lo[b] for a, b in zip(powers, powers[1:]))
    assert all(lo[p] * p == pytest.approx(lo[powers[0]] * powers[0], rel=1e-12) for p in powers)


def test_fig1_single_point_grid():
    s = replace(load_builtin("fig1"), rep_rate=RepRateSweep(rate_min=5e6, rate_max=5e6, points=1, lo_points=1,
                                                            lo_power_min=2e-3, lo_power_max=2e-3))
    res = run_fig1_sweep(s)
    assert [r[1] for r in res.rows if r[0] == "rep_rate"] == [5e6]
    assert [r[2] for r in res.rows if r[0] == "lo_power"] == [2e-3]


def test_fig3_sweep_shape():
    res = run_fig3_sweep(load_builtin("fig3"))
    by_v = {}
    for m, v, r, _, limit, _, _ in res.rows:
        by_v.setdefault(v, []).append((m, r, limit))
    assert set(by_v) == {0.1, 1.0}
    for pts in by_v.values():
        assert pts[0][:2] == (1, 1.0)
        assert all(b[1] >= a[1] for a, b in zip(pts, pts[1:]))
        assert all(r <= limit for _, r, limit in pts)
    assert all(hi[1] > lo[1] for lo, hi in zip(by_v[0.1][1:], by_v[1.0][1:]))


def test_fig3_needs_fixed_channel():
    with pytest.raises(ConfigError):
        run_fig3_sweep(load_builtin("fig5"))


def test_fig5_sweep():
    res = run_fig5_sweep(load_builtin("fig5"))
    assert len(res.rows) == 2 * 101 * 4
    assert gain_defined_anywhere(res)
    for d, m, v, k1, km, g, ok in res.rows:
        if m == 1:
            assert (g == 1.0) if ok else math.isnan(g)
        if ok:
            assert g == pytest.approx(km / k1, rel=1e-12)
        else:
            assert k1 <= 0 and math.isnan(g)
    anchor = [g for d, m, v, _, _, g, _ in res.rows if d == 0.0 and m == 10 and v == 1.0]
    assert 1.5 <= anchor[0] <= 2.5


def test_fig5_threads_do_not_change_output():
    s = load_builtin("fig5")
    assert run_fig5_sweep(s, 1).to_csv() == run_fig5_sweep(s, 4).to_csv()


def test_fig5_all_undefined():
    s = replace(load_builtin("fig5"), distance_sweep=DistanceSweep(200, 210, 5, bob_excess_noise=0.001))
    assert not gain_defined_anywhere(run_fig5_sweep(s))


def test_montecarlo_check_small_and_degenerate():
    res = run_montecarlo_check(parse_scenario(SMALL_MC))
    assert res.metadata["seed"] == "42"
    rows = {(r[0], r[1]): r for r in res.rows}
    for m in (1, 3):
        degenerate = rows[(m, 1)]
        assert degenerate[-1] is False and math.isnan(degenerate[3])
        ok = rows[(m, 5000)]
        assert ok[-1] is True
        assert ok[2] == key_rate_multimode(m, ProtocolParams(electronic_noise=0.5), ChannelParams(0.5, 0.01)).key_rate_raw


def test_sweep_csv_round_trip():
    res = run_montecarlo_check(parse_scenario(SMALL_MC))
    text = res.to_csv()
    assert text.startswith("# kind: mc-check\n")
    back = SweepResult.from_csv(text)
    assert back.columns == res.columns and back.metadata == res.metadata
    assert back.to_csv() == text
    with pytest.raises(KeyError, match="available"):
        res.column("nope")


def test_render_is_deterministic(tmp_path):
    res = run_fig3_sweep(load_builtin("fig3"))
    render_chart(res, tmp_path / "a.svg", "m", "R_SNR", "v_ele")
    render_chart(res, tmp_path / "b.svg", "m", "R_SNR", "v_ele")
    a = (tmp_path / "a.svg").read_bytes()
    assert a == (tmp_path / "b.svg").read_bytes()
    assert a.lstrip().startswith(b"<?xml") and b"<svg" in a


def test_render_errors(tmp_path):
    res = run_fig3_sweep(load_builtin("fig3"))
    with pytest.raises(ConfigError, match="available"):
        render_chart(res, tmp_path / "x.svg", "m", "nope")
    with pytest.raises(ConfigError, match="empty"):
        render_chart(SweepResult("fig3", res.columns, []), tmp_path / "x.svg", "m", "R_SNR")


def test_render_multi_series_with_gaps(tmp_path):
    s = replace(load_builtin("fig5"), distance_sweep=DistanceSweep(60, 100, 10, bob_excess_noise=0.001))
    render_chart(run_fig5_sweep(s), tmp_path / "g.svg", "distance_km", "gain", ("v_ele", "m"))
    assert (tmp_path / "g.svg").stat().st_size > 1000


def _data_rows(path):
    return [line for line in path.read_text(encoding="utf-8").splitlines() if not line.startswith("#")]


@pytest.mark.parametrize("cmd", ["fig1", "fig3", "fig5"])
def test_cli_sweeps(tmp_path, cmd, capsys):
    assert cli.main([cmd, "--out", str(tmp_path), "--chart"]) == 0
    assert (tmp_path / f"{cmd}.csv").exists() and (tmp_path / f"{cmd}.svg").exists()
    raw = (tmp_path / f"{cmd}.csv").read_bytes()
    assert b"\r" not in raw


def test_cli_mc_check_export(tmp_path):
    cfg = tmp_path / "mc.cfg"
    cfg.write_text(SMALL_MC)
    assert cli.main(["mc-check", "--config", str(cfg), "--out", str(tmp_path), "--seed", "7", "--format", "binary"]) == 0
    assert (tmp_path / "batch_m3_n5000.bin").exists()
    assert "# seed: 7" in (tmp_path / "mc_check.csv").read_text()
    assert cli.main(["mc-check", "--config", str(cfg), "--out", str(tmp_path), "--format", "csv"]) == 0
    assert (tmp_path / "batch_m1_n1.csv").exists()


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[scenario]\nname = x\n[protocol]\nfoo = 1\n")
    assert cli.main(["fig3", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert cli.main(["fig3", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]) == 2
    assert cli.main(["mc-check", "--seed", str(2**64), "--out", str(tmp_path)]) == 2
    assert cli.main(["keyrate", "--transmittance", "1.5"]) == 3
    far = tmp_path / "far.cfg"
    s = replace(load_builtin("fig5"), distance_sweep=DistanceSweep(200, 210, 5, bob_excess_noise=0.001))
    far.write_text(serialize_scenario(s))
    assert cli.main(["fig5", "--config", str(far), "--out", str(tmp_path)]) == 4
    assert (tmp_path / "fig5.csv").exists()


def test_cli_keyrate(capsys):
    assert cli.main(["keyrate", "--transmittance", "0.5", "--xi", "0.01", "--vele", "1", "--modes", "4"]) == 0
    out = dict(line.split("=") for line in capsys.readouterr().out.splitlines())
    expected = key_rate_multimode(4, ProtocolParams(electronic_noise=1.0), ChannelParams(0.5, 0.01))
    assert float(out["key_rate_raw"]) == expected.key_rate_raw
    assert cli.main(["keyrate", "--distance", "25", "--bob-xi", "0.001", "--csv"]) == 0
    header, row = capsys.readouterr().out.splitlines()
    assert header.split(",")[0] == "snr" and len(row.split(",")) == len(header.split(","))


def test_cli_render(tmp_path):
    assert cli.main(["fig3", "--out", str(tmp_path)]) == 0
    assert cli.main(["render", str(tmp_path / "fig3.csv")]) == 0
    assert (tmp_path / "fig3.svg").exists()
    assert cli.main(["render", str(tmp_path / "fig3.csv"), "--x", "m", "--y", "nope"]) == 2


def test_cli_determinism(tmp_path):
    cfg = tmp_path / "mc.cfg"
    cfg.write_text(SMALL_MC)
    for run in ("a", "b"):
        assert cli.main(["fig5", "--out", str(tmp_path / run)]) == 0
        assert cli.main(["mc-check", "--config", str(cfg), "--seed", "42", "--out", str(tmp_path / run)]) == 0
    for name in ("fig5.csv", "mc_check.csv"):
        assert _data_rows(tmp_path / "a" / name) == _data_rows(tmp_path / "b" / name)


def test_console_script_module_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "mmcvqkd.experiments.cli", "keyrate", "--transmittance", "1",
                           "--eta", "1", "--va", "3"], capture_output=True, text=True, check=True)
    out = dict(line.split("=") for line in proc.stdout.splitlines())
    assert float(out["holevo_bound"]) == pytest.approx(0.0, abs=1e-12)
    assert np.isclose(float(out["mutual_information"]), 1.0, rtol=0, atol=1e-15)
