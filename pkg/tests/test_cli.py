import json
import math

import pytest

from resetguard import generators as gen
from resetguard.cli import main
from resetguard.qasm import emit_qasm, parse_qasm
from resetguard.sweep import SweepSpecError, load_sweep_spec, parse_condition, run_sweep


def write(tmp_path, name, circuit):
    path = tmp_path / name
    path.write_text(emit_qasm(circuit))
    return str(path)


def test_scan_exit_codes(tmp_path, capsys):
    x32 = write(tmp_path, "x32.qasm", gen.gen_x_chain(32))
    g3 = write(tmp_path, "g3.qasm", gen.gen_grover3())
    assert main(["scan", x32]) == 2
    report = json.loads(capsys.readouterr().out)
    assert report["qubits"][0]["category"] == "IDENTITY_BEFORE_MEASURE"
    assert main(["scan", g3]) == 0
    bad = tmp_path / "bad.qasm"
    bad.write_text('OPENQASM 2.0;\nqreg q[1];\nx q[4];\n')
    capsys.readouterr()
    assert main(["scan", str(bad), x32]) == 1
    assert "bad.qasm:3:" in capsys.readouterr().err


def test_scan_flags_and_out_dir(tmp_path):
    rx = write(tmp_path, "rx.qasm", gen.gen_rx_rz(math.pi / 2, 0, 1))
    assert main(["scan", rx]) == 0
    assert main(["scan", rx, "--theta-low", "pi/2+0.1", "--theta-high", "3*pi/4"]) == 2
    out = tmp_path / "reports"
    assert main(["scan", rx, "--text", "--out", str(out)]) == 0
    assert "EFFECTIVE_RX_OK" in (out / "rx.txt").read_text()


def test_gen_outputs(capsys):
    assert main(["gen", "xchain", "--n", "2"]) == 0
    assert parse_qasm(capsys.readouterr().out).equivalent(gen.gen_x_chain(2))
    assert main(["gen", "rxrz", "--theta", "pi", "--phi", "pi/2", "--depth", "2"]) == 0
    assert parse_qasm(capsys.readouterr().out).equivalent(gen.gen_rx_rz(math.pi, math.pi / 2, 2))
    assert main(["gen", "victim", "--theta", "0", "--phi", "0"]) == 0
    assert parse_qasm(capsys.readouterr().out).equivalent(gen.gen_victim([0], [0]))


def test_gen_compose(capsys):
    assert main(["gen", "xchain", "--n", "2", "--compose", "--k", "2", "--victim-theta", "3*pi/4"]) == 0
    c = parse_qasm(capsys.readouterr().out)
    kinds = [i.kind.value for i in c.instructions]
    assert kinds == ["rx", "rz", "measure", "reset", "reset", "x", "x", "measure"]
    assert c.num_clbits == 2


def test_gen_errors(capsys):
    assert main(["gen", "cxchain", "--compose", "--victim-theta", "0"]) == 1
    with pytest.raises(SystemExit):
        main(["gen", "nosuch"])


def _spec(tmp_path, doc):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(doc))
    return str(path)


SMALL = {
    "masking": {"family": "xchain", "params": {"n": [0, 2]}},
    "num_resets": [0, 1],
    "victim_thetas": [["0", "pi/4", "pi/2", "3*pi/4", "pi"]],
    "victim_phis": [["0", "pi"]],
    "shots": 512,
    "trials": 2,
}


def test_sweep_writes_and_is_deterministic(tmp_path):
    spec = _spec(tmp_path, SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", spec, "--out", str(a), "--seed", "3"]) == 0
    assert main(["sweep", spec, "--out", str(b), "--seed", "3", "--workers", "2"]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    assert "analysis.json" in names and len(names) == 5
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rows = json.loads((a / "analysis.json").read_text())
    assert {"condition", "qubit", "a", "b", "c", "rss", "signal", "sigma", "snr_db"} <= set(rows[0])


def test_trivial_sweep_single_row(tmp_path):
    doc = {"masking": {"family": "empty"}, "num_resets": 0,
           "victim_thetas": [[0]], "victim_phis": [[0]], "shots": 16}
    out = tmp_path / "o"
    assert main(["sweep", _spec(tmp_path, doc), "--out", str(out)]) == 0
    csv_files = list(out.glob("freq_*.csv"))
    assert len(csv_files) == 1
    assert len(csv_files[0].read_text().splitlines()) == 2
    assert "error" in json.loads((out / "analysis.json").read_text())[0]


@pytest.mark.parametrize(
    "patch, path",
    [
        ({"shots": 0}, "$.shots"),
        ({"masking": {"family": "nope"}}, "$.masking.family"),
        ({"masking": {"family": "xchain", "params": {"m": 1}}}, "$.masking.params.m"),
        ({"victim_thetas": [["0", "bogus"]]}, "$.victim_thetas[0][1]"),
        ({"victim_thetas": [["0"], ["0"]], "victim_phis": [["0"], ["0"]]}, "$.victim_thetas"),
        ({"channel": {"r1": 2}}, "$.channel.r1"),
    ],
)
def test_spec_errors_name_field(patch, path):
    with pytest.raises(SweepSpecError) as info:
        load_sweep_spec({**SMALL, **patch})
    assert info.value.path == path


def test_sweep_cli_reports_spec_error(tmp_path, capsys):
    assert main(["sweep", _spec(tmp_path, {**SMALL, "trials": -1})]) == 1
    assert "$.trials" in capsys.readouterr().err


def test_conditions_cover_product():
    spec = load_sweep_spec(SMALL)
    labels = [parse_condition(c.label) for c in spec.conditions]
    assert labels == [{"k": 0, "n": 0}, {"k": 0, "n": 2}, {"k": 1, "n": 0}, {"k": 1, "n": 2}]
    tables, rows = run_sweep(spec)
    assert len(tables) == 4 and len(rows) == 4
