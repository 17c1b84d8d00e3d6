"""Build the extension, import it, and exercise each binding once."""

import math
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parents[1]


def build() -> pathlib.Path:
    subprocess.run(
        ["cargo", "build", "--release", "-p", "fracocp-py"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "libfracocp_py.so"
    dest = pathlib.Path(tempfile.mkdtemp()) / "fracocp_py.so"
    shutil.copy(lib, dest)
    return dest.parent


def main() -> None:
    sys.path.insert(0, str(build()))
    import fracocp_py as f

    s1, s2 = f.default_sigmas(0.4)
    assert abs(s1 - 8 / 3) < 1e-14 and abs(s2 - 8 / 7) < 1e-14
    assert f.temporal_nodes(2, 2.0, 1.0, 1.0) == [0.0, 0.125, 0.5, 0.75, 1.0]
    assert f.spatial_nodes(4) == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert abs(f.ml(1.0, 1.0, -2.0) - math.exp(-2.0)) < 1e-15
    assert abs(f.ml(0.5, 1.0, -1.0) - 0.4275835761) < 1e-10
    assert abs(f.estimate_order(4e-3, 1e-3, 10, 20) - 2.0) < 1e-14

    p = f.Problem.experiment(0.8)
    assert p.bounds == (-0.1, 0.1) and p.alpha == 0.8
    q = f.Problem.from_config(p.to_config())
    assert q.to_config() == p.to_config()
    try:
        f.Problem.experiment(1.5)
    except ValueError as e:
        assert "alpha" in str(e)
    else:
        raise AssertionError("alpha = 1.5 accepted")

    sol = f.solve_ocp(p, 5, 16)
    lo, hi = sol["control_range"]
    assert -0.1 <= lo <= hi <= 0.1
    assert sol["residual"] < 1e-12
    assert all(b <= a * (1 + 1e-15) for a, b in zip(sol["costs"], sol["costs"][1:]))
    assert len(sol["state"]) == 64 and len(sol["state"][0]) == 17
    try:
        f.solve_ocp(p, 5, 16, max_iter=1)
    except RuntimeError:
        pass
    else:
        raise AssertionError("expected non-convergence")

    table = f.spatial_study(f.Problem.experiment(0.5), 3, [6, 12], 48)
    lines = table.splitlines()
    assert lines[0] == "param,errY,ordY,errP,ordP,errU,ordU" and len(lines) == 3
    print(f.temporal_study(f.Problem.experiment(0.5), 8, [2, 3], 5, format="text"))
    print("smoke test ok")


if __name__ == "__main__":
    main()
