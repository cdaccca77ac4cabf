import subprocess
import sys

import numpy as np
import pytest

from tgextrap.block_linalg import parse_block
from tgextrap.cli import CSV_HEADER, main
from tgextrap.tensor_core import read_tensor


def run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main(["run", *argv, "--out", str(out)])
    return code, out


def rows(path):
    lines = path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    return [line.split(",") for line in lines[1:]]


def test_plain_linear_is_monotone(tmp_path):
    code, out = run(tmp_path, "linear1", "--method", "none", "--dims", "7", "--tol", "1e-10")
    assert code == 2  # the slow base iteration hits the 400-step cap
    body = rows(out)
    assert len(body) == 400
    errs = [float(r[1]) for r in body]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert all(r[4] == "none" for r in body)


def test_accelerated_reaches_tol(tmp_path):
    code, out = run(tmp_path, "linear1", "--method", "rre", "--width", "4", "--tol", "1e-10")
    assert code == 0
    body = rows(out)
    assert float(body[-1][1]) <= 1e-10
    assert int(body[-1][0]) <= 400


def test_nonlinear_rre_beats_plain(tmp_path):
    code, out = run(tmp_path, "nonlinear", "--method", "rre", "--dims", "5", "--max-cycles", "40")
    acc = rows(out)
    steps = int(acc[-1][0])
    _, base = run(tmp_path, "nonlinear", "--method", "none", "--dims", "5", "--max-iters", str(steps), name="b.csv")
    plain = rows(base)
    assert int(plain[-1][0]) == steps
    assert float(acc[-1][1]) < float(plain[-1][1])


def test_method_error_exit_code(tmp_path):
    code, out = run(tmp_path, "nonlinear", "--method", "mpe")
    assert code == 1
    assert len(rows(out)) >= 1


@pytest.mark.parametrize("argv", [
    ["run", "nosuch"],
    ["run", "linear1", "--width", "0"],
    ["run", "linear1", "--tol", "-1"],
    ["run", "linear2", "--dims", "5,4"],
    ["run", "linear1", "--dims", "0"],
    ["run", "linear1", "--method", "shanks"],
    ["run"],
    [],
])
def test_usage_errors(argv, capsys):
    # argparse failures exit from inside the parser; validation failures return
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 64
    assert "error" in capsys.readouterr().err


def test_io_errors(tmp_path):
    missing = tmp_path / "nope" / "x.csv"
    assert main(["run", "linear1", "--max-iters", "5", "--out", str(missing)]) == 74
    assert main(["run", "--manifest", str(tmp_path / "absent.txt")]) == 74
    assert main(["run", "linear1", "--emit-manifest", str(missing)]) == 74


def test_manifest_round_trip(tmp_path):
    man = tmp_path / "run.manifest"
    code1, a = run(tmp_path, "completion", "--method", "arnoldi-rre", "--seed", "3", "--dims", "8",
                   "--width", "2", "--emit-manifest", str(man), name="a.csv")
    text = man.read_text()
    for key in ("experiment=completion", "seed=3", "dims=8", "width=2", "p_obs=0.3", "rank=3"):
        assert key in text.splitlines()
    code2, b = run(tmp_path, "--manifest", str(man), name="b.csv")
    assert code1 == code2
    strip = lambda p: [r[:3] + r[4:] for r in rows(p)]
    assert strip(a) == strip(b)
    # explicit flags override manifest values
    code3, c = run(tmp_path, "--manifest", str(man), "--method", "none", name="c.csv")
    assert {r[4] for r in rows(c)} == {"none"}
    assert len(rows(c)) == 100  # completion default cap


def test_bad_manifest_is_usage_error(tmp_path):
    man = tmp_path / "bad.manifest"
    man.write_text("experiment=linear1\ncolour=blue\n")
    assert main(["run", "--manifest", str(man)]) == 64
    man.write_text("experiment=linear1\nwidth=three\n")
    assert main(["run", "--manifest", str(man)]) == 64


def test_determinism_and_budget(tmp_path):
    _, a = run(tmp_path, "linear2", "--method", "mpe", "--max-iters", "60", name="a.csv")
    _, b = run(tmp_path, "linear2", "--method", "mpe", "--max-iters", "60", name="b.csv")
    ra, rb = rows(a), rows(b)
    assert [r[:3] for r in ra] == [r[:3] for r in rb]
    assert int(ra[-1][0]) <= 60
    assert all(float(r[1]) >= 0 for r in ra)


def test_dump_iterates(tmp_path):
    dump = tmp_path / "dump"
    code, _ = run(tmp_path, "linear1", "--dims", "3", "--width", "2", "--max-cycles", "2",
                  "--dump-iterates", str(dump))
    windows = sorted(dump.glob("window_*.txt"))
    assert len(windows) == 2
    block = parse_block(windows[0].read_text())
    assert block.shape == (3, 3, 4)
    assert np.all(block[..., 0] == 0.0)  # runs start from zero
    assert read_tensor(dump / "final.txt").shape == (3, 3)


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "tgextrap", "run", "linear1", "--dims", "3", "--max-iters", "8"],
                         capture_output=True, text=True)
    assert out.returncode in (0, 2)
    assert out.stdout.splitlines()[0] == CSV_HEADER
    assert "status=" in out.stderr
