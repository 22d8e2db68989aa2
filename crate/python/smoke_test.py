"""Smoke test for the hadamard_resurgence extension module.

Build the module and put it on the path:

    cargo build --release -p hadamard-py --features extension-module
    cp target/release/libhadamard_resurgence.so python/hadamard_resurgence.so
    python3 python/smoke_test.py
"""

import math
import sys
from pathlib import Path as FsPath

sys.path.insert(0, str(FsPath(__file__).resolve().parent))

import hadamard_resurgence as hr  # noqa: E402


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    geom = hr.Germ.geometric(1)
    log = hr.Germ("log_f0")
    square = hr.Path([0.3, 0.3 - 0.5j, 1.7 - 0.5j, 1.7 + 0.5j, 0.3 + 0.5j, 0.3], rounding=0.1)

    assert hr.omega([1], [1], 2.0) == [0, 1]
    assert close(hr.hadamard_principal(log, log, 0.5), math.pi**2 / 12 - math.log(2) ** 2 / 2, 1e-12)

    r = hr.continue_hadamard(geom, geom, square, n_nodes=128)
    assert close(r.value, 10 / 7, 1e-8), r
    r = hr.continue_hadamard(log, geom, square, n_nodes=128, snapshots=[0.5, 1.0])
    assert close(r.value, -math.log(0.7) - 2j * math.pi, 1e-8), r
    assert [t for t, _ in r.snapshots] == [0.5, 1.0]
    assert close(log.continue_along(square), r.value, 1e-8)

    _, _, diff, kind = hr.monodromy(log, geom, 0.3, 1, n_nodes=128)
    assert close(diff, -2j * math.pi, 1e-8) and kind == "circle"

    bridge, conv = hr.borel_check([1, 0.5, 0.25], [2, 1, -1])
    assert bridge == 0.0 and conv == 0.0

    try:
        hr.continue_hadamard(geom, geom, hr.Path([0.3, 1.5]))
    except hr.ValidationError as e:
        assert "singular point" in str(e)
    else:
        raise AssertionError("path through 1 was accepted")

    try:
        hr.Germ("nope")
    except hr.InputError:
        pass
    else:
        raise AssertionError("unknown germ was accepted")

    print("smoke test passed:", r)


if __name__ == "__main__":
    main()
