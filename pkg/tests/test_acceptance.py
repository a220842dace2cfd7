"""Acceptance criteria, one test each, at the stated sample sizes and tolerances.

Every test appends a PASS/FAIL line to the "acceptance criteria" section of
the pytest summary. Run directly (``python tests/test_acceptance.py``) to print
the same lines without pytest.
"""
import json
import math
import sys
import time

import pytest

from stochain import make_config, verify
from stochain.analytic import mean_square_length
from stochain.cli import main

# frozen references
FELLER_10_PI3 = 26.00390625
MSL_REF = 8 * math.exp(-0.5) - 4          # 0.852245277701067
SEED = 12345

_LOG = []


def _record(log, number, title, results, seconds, limit=None):
    oracle = [r for r in results if r.form == "oracle"]
    ok = all(r.passed for r in oracle) and (limit is None or seconds < limit)
    timing = f"{seconds:.1f}s" + (f" (limit {limit:g}s)" if limit else "")
    details = "; ".join(r.detail for r in results)
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title} [{timing}] {details}"
    log.append(line)
    print(line)
    return ok


def _run(log, number, title, fn, limit=None):
    t0 = time.perf_counter()
    results = fn()
    return _record(log, number, title, results, time.perf_counter() - t0, limit)


@pytest.fixture
def log(acceptance_log):
    return acceptance_log


def test_c01_feller_formula(log):
    assert _run(log, 1, "Feller mean square vs Monte Carlo",
                lambda: verify.check_feller(n=10, alpha=math.pi / 3, M=200_000, seed=SEED), limit=5)


def test_c02_lemma1(log):
    assert _run(log, 2, "exponential moment of a Wiener integral",
                lambda: verify.check_lemma1(alphas=(0.5, 1.0), M=1_000_000, seed=SEED), limit=10)


def test_c03_lemma2_constant(log):
    ok = _run(log, 3, "Gaussian-average constant (oracle vs published)",
              lambda: verify.check_lemma2(N=1, alpha=1, ba=1, t=1, M=1_000_000, seed=SEED + 1),
              limit=10)
    assert ok


def test_c04_simplex_identity(log):
    assert _run(log, 4, "degree transformation, deterministic simplex identity",
                lambda: verify.check_simplex_identity(coeffs=(1.0, 1.0), ms=(1, 2, 3), l=1.0), limit=5)


def test_c05_nested_moments(log):
    cfg = make_config(N=400, n=400, seed=SEED)
    assert _run(log, 5, "nested moments vs hat-field Monte Carlo",
                lambda: verify.check_moments(cfg, t=1.0, M=50_000, ms=(1, 2)), limit=60)


def test_c06_kappa_adjudication(log):
    cfg = make_config(N=400, time_steps=200, seed=SEED)
    assert _run(log, 6, "kappa adjudication, original vs hat field",
                lambda: verify.check_kappa(cfg, t=1.0, M=20_000), limit=120)


def test_c07_sde_invariant_and_weak_order(log):
    cfg = make_config(seed=SEED)
    assert _run(log, 7, "SDE radial invariant and Euler weak order",
                lambda: verify.check_sde(cfg, t=1.0, M=10_000, hs=(0.01, 0.005, 0.0025)), limit=60)


def test_c08_mean_square_length(log):
    cfg = make_config(seed=SEED)
    # the quadrature oracle must itself reproduce the closed form
    assert mean_square_length(1.0, 1.0, cfg) == pytest.approx(MSL_REF, rel=1e-6)
    assert _run(log, 8, "limit mean-square length vs exact-angle ensemble",
                lambda: verify.check_msl(cfg, t=1.0, M=50_000), limit=30)


def test_c09_char_function_coincidence(log):
    cfg = make_config(seed=SEED)
    assert _run(log, 9, "characteristic functions, hat field vs exact-angle SDE",
                lambda: verify.check_char_functions(cfg, t=1.0, M=20_000), limit=120)


def test_c10_phase_density(log):
    assert _run(log, 10, "reduced phase density vs Gaussian",
                lambda: verify.check_phase_density(points=2048, l=1.0), limit=10)


def test_c11_reproducibility(log, tmp_path):
    cfg = make_config(seed=SEED)

    def replay_check():
        out = tmp_path / "first"
        main(["simulate", "--which", "original", "-M", "300", "--paths", "2", "--out", str(out)])
        main(["replay", str(out / "manifest.json"), "--out", str(tmp_path / "second")])
        same = all((out / f).read_bytes() == (tmp_path / "second" / f).read_bytes()
                   for f in json.loads((out / "manifest.json").read_text())["outputs"])
        return [verify.CheckResult("manifest-replay", "oracle", same, 0.0,
                                   "replayed manifest reproduces every CSV bitwise" if same
                                   else "replayed CSVs differ")]

    assert _run(log, 11, "reproducibility contract",
                lambda: verify.check_reproducibility(cfg) + replay_check())


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    lines = []
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_c")]
    failed = 0
    for t in tests:
        try:
            if "tmp_path" in t.__code__.co_varnames[:t.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    t(lines, Path(d))
            else:
                t(lines)
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
