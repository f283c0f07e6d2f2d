"""Quick checks of the compiled extension.

Build it first with ``cargo build -p gfswme-py --release``; the script loads
``target/release/libgfswme.so`` (or the path in ``GFSWME_LIB``).
"""

import importlib.machinery
import importlib.util
import math
import os
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    path = os.environ.get("GFSWME_LIB")
    if path is None:
        suffix = {"darwin": "dylib", "win32": "dll"}.get(sys.platform, "so")
        prefix = "" if sys.platform == "win32" else "lib"
        path = ROOT / "target" / "release" / f"{prefix}gfswme.{suffix}"
    loader = importlib.machinery.ExtensionFileLoader("gfswme", str(path))
    spec = importlib.util.spec_from_file_location("gfswme", str(path), loader=loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def main():
    gf = load()
    print("scenarios:", ", ".join(gf.SCENARIOS))

    ev = gf.eigenvalues("swe", 2.0, 1.0)
    c = math.sqrt(9.812 * 2.0)
    assert abs(ev[0] - (1.0 + c)) < 1e-12 and abs(ev[1] - (1.0 - c)) < 1e-12, ev
    print("swe eigenvalues:", ev)
    print("swme1 eigenvalues:", gf.eigenvalues("swme1", 2.0, 12.0, [-0.25]))

    cfg = gf.Config("lake_at_rest")
    cfg.set("model", "swme1")
    print(cfg)
    solver = gf.Solver(cfg, "swme1", 50)
    u0 = solver.initial_state()
    assert len(u0) == 50 and len(u0[0]) == solver.n_vars
    rhs = solver.residual(u0)
    worst = max(abs(v) for row in rhs for v in row)
    print(f"lake at rest residual: {worst:.3e}")
    assert worst < 1e-12

    run = solver.advance(u0, 0.05)
    drift = max(abs(a - b) for ra, rb in zip(run.state, u0) for a, b in zip(ra, rb))
    print(f"lake at rest after {run.steps} steps: drift {drift:.3e}")
    assert drift < 1e-12

    sup = gf.Config("supercritical")
    sup.set("order", "3")
    sup.set("mesh_sizes", "25,50")
    sup.set("init", "reference")
    rows = gf.run_convergence(sup)
    for n, errors, eoa in rows:
        print(n, ["%.3e" % e for e in errors], eoa)
    assert rows[1][1][0] < rows[0][1][0]

    try:
        gf.Config("no_such_scenario")
    except ValueError as err:
        print("rejected:", err)
    else:
        raise AssertionError("unknown scenario accepted")

    print("ok")


if __name__ == "__main__":
    main()
