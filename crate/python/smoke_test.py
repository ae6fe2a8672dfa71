"""Smoke test for the copositive_py extension.

Build and run:

    cargo build --release -p copositive-py --features extension-module
    cp target/release/libcopositive_py.so python/copositive_py.so
    python3 python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import copositive_py as cp  # noqa: E402


def main():
    horn = cp.horn_matrix()
    assert horn == cp.build_s([0.0] * 5)
    assert cp.classify_s([0.0] * 5) == "HORN"
    assert cp.classify_s([0.1] * 5) == "HILDEBRAND"
    assert cp.classify_s([math.pi / 5] * 5) == "PSD_BOUNDARY"

    c, s = cp.rank2_factors([math.pi / 5] * 5)
    b = cp.build_s([math.pi / 5] * 5)
    for i in range(5):
        for j in range(5):
            assert abs(c[i] * c[j] + s[i] * s[j] - b[i][j]) < 1e-12

    psd, lam = cp.is_psd(horn)
    assert not psd and lam < 0
    assert cp.check_copositive(horn)["status"] == "COPOSITIVE"
    assert cp.check_spn(horn, max_iter=2000)["status"] == "NOT_FOUND"

    doc = cp.generate("t5-spn", seed=7)
    trace = cp.certify_t5(doc["matrix"])
    cert = trace["certificate"]
    assert cp.validate_certificate(doc["matrix"], cert["p"], cert["n"], cert["tol"])
    assert cp.match_pattern(doc["matrix"], "t5")["kind"] == "T5_PATTERN"
    assert cp.match_pattern(horn, "t5") is None

    k25 = cp.generate("k2n", seed=1, n=5)["matrix"]
    try:
        cp.certify_k2n(k25)
    except cp.CopositiveError:
        pass
    else:
        raise AssertionError("K2,5 must be refused without allow_beyond_proved")
    assert cp.certify_k2n(k25, allow_beyond_proved=True)["route"]

    report = cp.search_t6(8, seed=3, max_iter=5000)
    assert report["samples"] == 8
    assert report == cp.search_t6(8, seed=3, max_iter=5000)

    print("smoke test ok")


if __name__ == "__main__":
    main()
