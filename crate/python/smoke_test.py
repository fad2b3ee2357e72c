"""Smoke test for the hflow_py extension.

Build first:
    cargo build -p hflow-py --release --features extension-module
then run:
    python3 python/smoke_test.py [path/to/libhflow_py.so]
"""

import importlib.util
import json
import math
import shutil
import sys
import tempfile
from pathlib import Path


def load(lib: Path):
    tmp = Path(tempfile.mkdtemp())
    target = tmp / "hflow_py.so"
    shutil.copy(lib, target)
    spec = importlib.util.spec_from_file_location("hflow_py", target)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def main() -> int:
    root = Path(__file__).resolve().parent.parent
    lib = Path(sys.argv[1]) if len(sys.argv) > 1 else root / "target" / "release" / "libhflow_py.so"
    if not lib.exists():
        print(f"extension not found at {lib}; build it with cargo first", file=sys.stderr)
        return 2
    hf = load(lib)

    keys = hf.catalog()
    assert "sl3r_trivial" in keys and "so_3_2_mod_so_3" in keys, keys

    sl3 = hf.Space("sl3r_trivial")
    assert sl3.dims == [1] * 8 and sl3.n_l == 3
    r = sl3.ricci([1.0] * 8)
    assert all(abs(v - 0.25) < 1e-12 for v in r[:3]), r
    assert all(abs(v + 0.75) < 1e-12 for v in r[3:]), r
    assert abs(sl3.scalar([1.0] * 8) + 3.0) < 1e-12

    so32 = hf.Space("so_3_2_mod_so_3")
    assert so32.dims == [1, 3, 3]
    slacks = so32.bound_slacks([0.7, 2.0, 3.5])
    assert min(slacks.values()) >= -1e-9, slacks

    hyp = hf.Space("hyperbolic_plane")
    traj = hyp.flow([1.5], t_end=100.0)
    assert traj["regime"] == "immortal"
    err = max(abs(x[0] - (1.5 + t)) / (1.5 + t) for t, x in zip(traj["t"], traj["x"]))
    assert err < 1e-8, err

    ext = sl3.flow([1.0] * 8)
    assert ext["regime"] == "extinct" and math.isfinite(ext["terminal_t"])

    summary = json.loads(
        hf.run_manifest(json.dumps({"space": {"catalog": "sl3r_trivial"}, "initial": {"isotropic": 1.0}}))
    )
    assert summary["regime"] == "extinct", summary
    assert abs(summary["t_estimate"] - ext["terminal_t"]) < 1e-3 * summary["t_estimate"]

    lines = hf.check("isotropy")
    assert lines and all(line[5] for line in lines)

    try:
        hf.Space("no_such_space")
    except hf.HflowError as e:
        assert "InputError" in str(e)
    else:
        raise AssertionError("unknown key accepted")

    print(f"smoke test passed: T(sl3, x=1) = {summary['t_estimate']:.6f}, {len(lines)} isotropy checks")
    return 0


if __name__ == "__main__":
    sys.exit(main())
