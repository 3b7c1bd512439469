"""Acceptance criteria at their stated tolerances.

One pass/fail line per criterion is printed in the terminal summary.
"""
import itertools
import json
import time

import numpy as np
import pytest

from localcca.cca import attenuation_matrix, fit_cca_population
from localcca.cli import error_decile_ratio, main
from localcca.diffusion import diffusion_maps
from localcca.metric import (KNearest, metric_anchored,
                             metric_endpoint_averaged, metric_euclidean,
                             metric_midpoint)
from localcca.synth import gen_warped_square, pendulum_solution, PendulumPhysics
from localcca.tcca import (covariance_tensor, mode_product, outer_product,
                           rank1_als)

from linear_models import linear_model, sample_model
from test_synth import rk4_pendulum


def criterion(number, title):
    return pytest.mark.criterion(number, title)


def run_cli(tmp_path, *argv):
    code = main(list(argv) + ["--out-dir", str(tmp_path)])
    return code, json.loads((tmp_path / "manifest.json").read_text())


@criterion(1, "linear exactness of the population metric")
def test_c01_linear_exactness():
    start = time.perf_counter()
    jx, jy, sxx, syy, sxy = linear_model(seed=0, dx=10, dy=12, d_z=3,
                                         d_eps=2, d_eta=3)
    assert jx.shape == (10, 5) and jy.shape == (12, 6)
    A = attenuation_matrix(fit_cca_population(sxx, syy, sxy))
    z, x, _ = sample_model(jx, jy, 3, 200, seed=1)
    pairs = np.random.default_rng(2).choice(200, size=(1000, 2))
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    dx = x[pairs[:, 0]] - x[pairs[:, 1]]
    dz = z[pairs[:, 0]] - z[pairs[:, 1]]
    D = np.einsum("ij,jk,ik->i", dx, A, dx)
    true = np.sum(dz ** 2, axis=1)
    err = np.max(np.abs(D - true) / true)
    print(f"criterion 1: max relative error {err:.2e}")
    assert err < 1e-6
    assert time.perf_counter() - start < 1.0


@criterion(2, "Mahalanobis degeneration without specific variables")
def test_c02_mahalanobis_degeneration():
    start = time.perf_counter()
    jx, jy, *_ = linear_model(seed=3, d_eps=0, d_eta=0)
    sxx, syy, sxy = jx @ jx.T, jy @ jy.T, jx @ jy.T
    A = attenuation_matrix(fit_cca_population(sxx, syy, sxy))
    pinv = np.linalg.pinv(sxx)
    err = np.linalg.norm(A - pinv) / np.linalg.norm(pinv)
    print(f"criterion 2: Frobenius-relative error {err:.2e}")
    assert err < 1e-6
    assert time.perf_counter() - start < 1.0


@criterion(3, "metric error scaling and midpoint vs endpoint ordering")
def test_c03_metric_error_scaling():
    start = time.perf_counter()
    ex = gen_warped_square(400, seed=0)
    x, z = ex.sets[0], ex.hidden_common
    spec = KNearest(20)
    mid = metric_midpoint(x, x, spec).values
    end = metric_endpoint_averaged(x, x, spec).values
    true = metric_euclidean(z).values
    ii, jj = np.triu_indices(400, 1)
    t, m, e = true[ii, jj], mid[ii, jj], end[ii, jj]
    ratio = error_decile_ratio(t, m)
    corr_mid = np.corrcoef(t, m)[0, 1]
    corr_end = np.corrcoef(t, e)[0, 1]
    print(f"criterion 3: decile ratio {ratio:.4f}, "
          f"corr midpoint {corr_mid:.4f}, corr endpoint {corr_end:.4f}")
    assert ratio <= 0.1
    assert corr_mid >= corr_end
    assert time.perf_counter() - start < 120.0


@criterion(4, "clean pendulum recovers f1 and f2")
def test_c04_pendulum_clean(tmp_path):
    start = time.perf_counter()
    code, m = run_cli(tmp_path, "pendulum", "--algorithm", "alg2")
    s = m["summary"]
    print(f"criterion 4: targets {s['targets']}")
    assert code == 0 and s["targets_hit"]
    assert s["targets"]["targets"] == pytest.approx([0.4985, 0.8690], abs=5e-4)
    assert time.perf_counter() - start < 180.0


@criterion(5, "noisy pendulum suppresses f3 and f4; single-set baseline fails")
def test_c05_pendulum_noisy(tmp_path):
    start = time.perf_counter()
    code, m = run_cli(tmp_path / "alg2", "pendulum", "--noisy",
                      "--algorithm", "alg2")
    s = m["summary"]
    print(f"criterion 5: alg2 targets {s['targets']['target_magnitudes']}, "
          f"noise {s['noise']['target_magnitudes']}")
    assert code == 0 and s["targets_hit"] and s["noise_suppressed"]
    code, m = run_cli(tmp_path / "base", "pendulum", "--noisy",
                      "--algorithm", "single-set")
    b = m["summary"]
    print(f"criterion 5: baseline targets {b['targets']['target_magnitudes']}, "
          f"noise {b['noise']['target_magnitudes']}")
    assert b["expected_failure"] and not b["passed"] and code == 0
    assert time.perf_counter() - start < 300.0


@criterion(6, "icons isolate the common 1/60 cycles/frame rotation")
@pytest.mark.parametrize("layout", ["disjoint", "pairwise"])
def test_c06_icons(tmp_path, layout):
    start = time.perf_counter()
    code, m = run_cli(tmp_path, "icons", "--layout", layout)
    s = m["summary"]
    print(f"criterion 6 ({layout}): common {s['common']['target_magnitudes']}, "
          f"others {s['noise']['target_magnitudes']}")
    assert code == 0 and s["passed"]
    assert s["common"]["targets"] == pytest.approx([1 / 60])
    assert all(v < 0.3 for v in s["noise"]["target_magnitudes"])
    assert time.perf_counter() - start < 300.0


@criterion(7, "rank-1 ALS oracle")
def test_c07_rank1_oracle():
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        T = rng.standard_normal(tuple(rng.integers(2, 7, size=2)))
        worst = max(worst, abs(rank1_als(T).rho - np.linalg.svd(T)[1][0]))
    assert worst < 1e-8
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        vecs = [v / np.linalg.norm(v) for v in
                (rng.standard_normal(d) for d in rng.integers(2, 6, size=3))]
        r = rank1_als(1.7 * outer_product(vecs))
        assert abs(r.rho - 1.7) < 1e-8
        for got, want in zip(r.directions, vecs):
            assert np.linalg.norm(abs(got @ want) * got - got) < 1e-8
            assert min(np.abs(got - want).max(), np.abs(got + want).max()) < 1e-8
    print(f"criterion 7: worst K=2 gap {worst:.2e}")


def _loop_mode_product(T, M, k):
    shape = list(T.shape)
    shape[k] = M.shape[1]
    out = np.zeros(shape)
    for idx in itertools.product(*map(range, shape)):
        for mk in range(T.shape[k]):
            src = list(idx)
            src[k] = mk
            out[idx] += T[tuple(src)] * M[mk, idx[k]]
    return out


def _loop_outer(vecs):
    out = np.zeros([v.size for v in vecs])
    for idx in itertools.product(*(range(v.size) for v in vecs)):
        out[idx] = np.prod([v[i] for v, i in zip(vecs, idx)])
    return out


def _loop_cov(sets):
    n = sets[0].shape[0]
    out = np.zeros([s.shape[1] for s in sets])
    for i in range(n):
        out += _loop_outer([s[i] for s in sets])
    return out / n


@criterion(8, "tensor brute-force equivalence")
def test_c08_tensor_brute_force():
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        dims = tuple(rng.integers(1, 5, size=3))
        T = rng.standard_normal(dims)
        k = int(rng.integers(3))
        M = rng.standard_normal((dims[k], int(rng.integers(1, 4))))
        worst = max(worst, np.abs(mode_product(T, M, k)
                                  - _loop_mode_product(T, M, k)).max())
        vecs = [rng.standard_normal(d) for d in dims]
        worst = max(worst, np.abs(outer_product(vecs) - _loop_outer(vecs)).max())
        n = int(rng.integers(1, 6))
        sets = [rng.standard_normal((n, d)) for d in dims]
        worst = max(worst, np.abs(covariance_tensor(sets) - _loop_cov(sets)).max())
    print(f"criterion 8: worst deviation {worst:.2e}")
    assert worst < 1e-12


@criterion(9, "landmark approximation stability")
def test_c09_landmark_stability():
    ex = gen_warped_square(400, seed=0)
    x = ex.sets[0]
    spec = KNearest(20)
    full = diffusion_maps(metric_anchored(x, x, None, spec), 1)
    half = np.arange(0, 400, 2)
    part = diffusion_maps(metric_anchored(x, x, half, spec), 1)
    r = abs(np.corrcoef(full.coordinates[:, 0], part.coordinates[:, 0])[0, 1])
    print(f"criterion 9: |corr| {r:.4f}")
    assert r >= 0.95


@criterion(10, "ODE oracle and normal-mode identities")
def test_c10_ode_oracle():
    ts = 0.0125
    t, u = rk4_pendulum(5.0, ts / 100)
    c1, c2 = pendulum_solution(t)
    err = max(np.abs(u[:, 0] - c1).max(), np.abs(u[:, 1] - c2).max())
    p = PendulumPhysics()
    tt = np.arange(400) * ts
    u1, u2 = pendulum_solution(tt)
    ident = max(np.abs(u1 + u2 - p.delta * np.cos(p.omega1 * tt)).max(),
                np.abs(u1 - u2 - p.delta * np.cos(p.omega2 * tt)).max())
    print(f"criterion 10: RK4 gap {err:.2e}, identity gap {ident:.2e}")
    assert err < 1e-6
    assert ident < 1e-12
