import cmath
import csv
import io
import json
import math
import socket
import threading
import time

import pytest
import uvicorn

from expobif.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_comb_char(capsys):
    assert run(capsys, "comb", "char", "1/2 inf") == (0, "minus=per[0 1] plus=per[1 0]\n", "")


def test_comb_itin_wake(capsys):
    code, out, _ = run(capsys, "comb", "itin", "--r", "per[0 2 0 3 0]", "--wake", "1/2 inf")
    assert (code, out) == (0, "inside=true\n")


def test_comb_other_queries(capsys):
    assert run(capsys, "comb", "knead", "per[0 1]")[1] == "per[0 1|0]\n"
    assert run(capsys, "comb", "itin", "--r", "per[0 2]", "--base", "per[0 1]")[1] == "per[0 2]\n"
    out = run(capsys, "comb", "wake", "0 1/2 inf")[1]
    assert out.startswith("minus=per[0 0 1] plus=per[0 1 0] period=3")


def test_parse_error_exit_code(capsys):
    code, out, err = run(capsys, "comb", "char", "1/2 inff")
    assert code == 2 and out == ""
    assert "parse_error" in err and "position 4" in err


def test_trace_internal_period_one(capsys):
    code, out, _ = run(capsys, "trace", "internal", "--period", "1", "--h", "0.5", "--t", "-3..-0.01")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["t", "re", "im", "residual"]
    assert len(rows) == 102
    for t, re, im, _ in rows[1:]:
        w = complex(float(t), math.pi)
        assert abs(complex(float(re), float(im)) - (w - cmath.exp(w))) < 1e-12
    # 17 significant digits round-trip exactly
    assert rows[1][1] == format(float(rows[1][1]), ".17g")


def test_trace_to_file_and_json(capsys, tmp_path):
    p = tmp_path / "ray.csv"
    code, out, _ = run(capsys, "trace", "dynamic", "--kappa", "-2,0", "--address", "per[0]",
                       "--t", "10..12", "--steps", "2", "--out", str(p))
    assert code == 0 and out == ""
    assert p.read_text().splitlines()[0] == "t,re,im"
    code, out, _ = run(capsys, "trace", "parameter", "--address", "per[0]", "--t", "8..9", "--steps", "2",
                       "--format", "json")
    assert json.loads(out)["kind"] == "parameter"


def test_trace_missing_arguments(capsys):
    assert run(capsys, "trace", "dynamic", "--address", "per[0]", "--t", "10..11")[0] == 2
    assert run(capsys, "trace", "internal", "--t", "-3..-1")[0] == 2
    assert run(capsys, "trace", "internal", "--period", "1", "--h", "0", "--t", "-1..-3")[0] == 2


def test_solver_failure_exit_code(capsys):
    # a tolerance below double precision cannot be met
    code, out, err = run(capsys, "trace", "dynamic", "--kappa", "0,0", "--address", "per[0 1]",
                         "--t", "10..11", "--seed-tol", "1e-30")
    assert code == 3 and out == ""
    assert "no_convergence" in err


def test_component_json_and_boundary(capsys, tmp_path):
    b = tmp_path / "boundary.csv"
    code, out, _ = run(capsys, "component", "1/2 inf", "--boundary", str(b), "--boundary-points", "3",
                       "--boundary-h", "-0.5..0.5")
    assert code == 0
    rec = json.loads(out)
    assert set(rec) >= {"address", "period", "sample", "multiplier", "wake", "boundary"}
    assert rec["address"] == "1/2 inf" and rec["boundary"] == str(b)
    rows = list(csv.reader(b.open()))
    assert rows[0] == ["h", "re", "im"] and len(rows) == 4


def test_render_writes_ppm(capsys, tmp_path):
    p = tmp_path / "a.ppm"
    argv = ["render", "--region", "-6,4,0,6.283185307179586", "--size", "16x12", "--period-cap", "6",
            "--out", str(p)]
    assert run(capsys, *argv)[0] == 0
    first = p.read_bytes()
    assert first.startswith(b"P6\n16 12\n255\n")
    assert run(capsys, *argv)[0] == 0
    assert p.read_bytes() == first


def test_render_zero_area(capsys, tmp_path):
    code, _, err = run(capsys, "render", "--region", "-6,4,1,1", "--size", "4x4", "--out", str(tmp_path / "x.ppm"))
    assert code == 2 and "validation" in err


def test_render_bad_flags(capsys):
    with pytest.raises(SystemExit) as e:
        main(["render", "--region", "1,2,3", "--size", "4x4"])
    assert e.value.code == 2
    capsys.readouterr()
    assert run(capsys, "render", "--region", "0,1,0,1", "--size", "2x2", "--format", "csv")[0] == 2


def test_verify_exit_codes(capsys):
    code, out, _ = run(capsys, "verify", "--criteria", "3,9")
    assert code == 0
    assert out.splitlines()[-1] == "2/2 criteria passed"
    code, out, _ = run(capsys, "verify", "--criteria", "5")
    assert code == 4 and "[FAIL]" in out


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture(scope="module")
def server():
    port = free_port()
    srv = uvicorn.Server(uvicorn.Config("expobif.api:app", host="127.0.0.1", port=port, log_level="error"))
    th = threading.Thread(target=srv.run, daemon=True)
    th.start()
    for _ in range(100):
        if srv.started:
            break
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    srv.should_exit = True
    th.join(5)


def test_remote_server_matches_in_process(capsys, server):
    local = run(capsys, "comb", "char", "0 1/2 inf")
    remote = run(capsys, "--server", server, "comb", "char", "0 1/2 inf")
    assert remote == local
    assert run(capsys, "--server", server, "comb", "char", "per[0]")[0] == 2
