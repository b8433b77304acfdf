"""Smoke test of the Python bindings.

Builds the extension with cargo when it is not importable, loads it, and
checks a handful of analytic and simulated values.
"""

import importlib.machinery
import importlib.util
import math
import pathlib
import subprocess
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_extension():
    try:
        import sleepcell

        return sleepcell
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "--release", "-p", "sleepcell-py"], cwd=ROOT, check=True
    )
    library = ROOT / "target" / "release" / "libsleepcell.so"
    loader = importlib.machinery.ExtensionFileLoader("sleepcell", str(library))
    spec = importlib.util.spec_from_file_location("sleepcell", library, loader=loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    sys.modules["sleepcell"] = module
    return module


def main():
    sc = load_extension()

    for users in range(11):
        assert sc.round_robin_best_case(users) == 1.0 / (users + 1)

    total, after_sleep, after_zoom = sc.network_power(19, 0, 0.0)
    assert abs(total - 3871.63) < 1e-9
    assert after_sleep == total == after_zoom

    bundled = sc.Scenario.bundled(3)
    assert 0 in bundled.sleeping
    choice = dict(sc.mmap_choice(bundled))
    assert choice[0] == 1, choice

    pair = sc.Scenario.with_sleep_set(1, 500.0, [1, 5, 1, 1, 1, 1, 1], [0])
    greedy = sc.best_case_access(pair, 0, 1)
    assert 0.0 < greedy < sc.round_robin_best_case(5)

    reduced = sc.Scenario.with_sleep_set(1, 500.0, [3] * 7, [0, 1])
    analytic = sc.analyze(reduced, "mmap", "greedy", [1.0])
    simulated = sc.simulate(reduced, "mmap", "greedy", iterations=20000, seed=3)
    se = simulated["se_nats"]
    assert math.isfinite(analytic["se_nats"]) and analytic["se_nats"] > 0.0
    assert abs(analytic["se_nats"] / se["mean"] - 1.0) < 0.1, (analytic, se)
    assert 0.0 <= analytic["outage_curve"][0] <= 1.0

    try:
        sc.analyze(reduced, "hybrid", "greedy")
    except NotImplementedError:
        pass
    else:
        raise AssertionError("hybrid association has no analytic law")

    try:
        sc.Scenario.from_toml("[fading]\npath_loss = 1.5\n")
    except ValueError as e:
        assert "path_loss" in str(e)
    else:
        raise AssertionError("invalid path loss accepted")

    print("smoke test passed:", reduced, f"SE {analytic['se_nats']:.4f} nats")


if __name__ == "__main__":
    main()
