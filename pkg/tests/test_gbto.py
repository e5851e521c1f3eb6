import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from oracles import affinities, dijkstra_all_pairs, random_affinity
from threestage.gbto import ZERO_FLOOR, dwt, fw_blocked, fw_reference, fw_rows, gbto, shortest_paths, wdt

INF = np.inf
TRANSFORMS = ["reciprocal", "log"]


def _same(a, b, atol):
    assert_array_equal(np.isinf(a), np.isinf(b))
    fin = np.isfinite(a)
    assert_allclose(a[fin], b[fin], rtol=0, atol=atol)


# ---------------------------------------------------------------- transforms


def test_wdt_values():
    W = np.array([[0, 0.5, 0], [0.5, 0, 1.0], [0, 1.0, 0]])
    D = wdt(W, "reciprocal")
    assert D[0, 1] == 2.0 and D[1, 2] == 1.0
    assert np.isinf(D[0, 2]) and np.isinf(D[2, 0])
    assert_array_equal(np.diag(D), 0.0)
    L = wdt(W, "log")
    assert L[1, 2] == 1.0
    assert_allclose(L[0, 1], 1 + np.log(2))
    assert np.isinf(L[0, 2])


def test_wdt_zero_floor():
    W = np.array([[0, 1e-16], [1e-16, 0]])
    assert np.isinf(wdt(W)[0, 1])
    assert np.isfinite(wdt(W, zero_floor=0.0)[0, 1])


@pytest.mark.parametrize("bad", [1.5, -0.1, np.nan])
def test_wdt_rejects_out_of_range(bad):
    W = np.array([[0, bad], [bad, 0]])
    with pytest.raises(ValueError):
        wdt(W)


def test_dwt_values():
    D = np.array([[0, 2.0, INF], [2.0, 0, 1.0], [INF, 1.0, 0]])
    W = dwt(D)
    assert W[0, 1] == 0.5 and W[0, 2] == 0.0 and W[1, 2] == 1.0
    assert_array_equal(np.diag(W), 0.0)
    assert_allclose(dwt(D, "log")[1, 2], 1.0)


def test_dwt_rejects_nonpositive_distance():
    with pytest.raises(ValueError):
        dwt(np.array([[0, 0.0], [0.0, 0]]))


@pytest.mark.parametrize("transform", TRANSFORMS)
def test_roundtrip(rng, transform):
    W = random_affinity(rng, 20, p_zero=0.0)
    assert_allclose(dwt(wdt(W, transform), transform), W, rtol=0, atol=1e-12)


# ---------------------------------------------------------------- shortest paths


def test_chain():
    D = np.array([[0, 1, 3], [1, 0, 1], [3, 1, 0]], dtype=float)
    out = shortest_paths(D)
    assert out[0, 2] == 2.0 and out[2, 0] == 2.0


@pytest.mark.parametrize("kernel", ["reference", "rows", "blocked"])
def test_two_components_stay_apart(kernel):
    D = np.full((4, 4), INF)
    np.fill_diagonal(D, 0)
    D[0, 1] = D[1, 0] = 1.0
    D[2, 3] = D[3, 2] = 2.0
    out = shortest_paths(D, kernel=kernel)
    assert np.isinf(out[np.ix_([0, 1], [2, 3])]).all()
    assert np.isinf(out[np.ix_([2, 3], [0, 1])]).all()


@pytest.mark.parametrize("seed", range(20))
def test_hard_matches_dijkstra(seed):
    rng = np.random.default_rng(seed)
    D = wdt(random_affinity(rng, 30, p_zero=0.6))
    oracle = dijkstra_all_pairs(D)
    for kernel in ("reference", "rows", "blocked"):
        _same(shortest_paths(D, "hard", kernel=kernel, block=8), oracle, 1e-9)


@pytest.mark.parametrize("n", [1, 7, 64, 100])
@pytest.mark.parametrize("block", [4, 16, 64])
def test_blocked_matches_reference_on_ragged_sizes(n, block):
    rng = np.random.default_rng(n * 100 + block)
    D = wdt(random_affinity(rng, n, p_zero=0.3)) if n > 1 else np.zeros((1, 1))
    _same(shortest_paths(D, kernel="blocked", block=block), shortest_paths(D, kernel="reference"), 1e-9)


@pytest.mark.parametrize("mode", ["hard", "soft"])
def test_row_kernel_is_bitwise_reference(rng, mode):
    D = wdt(random_affinity(rng, 60, p_zero=0.5))
    a = shortest_paths(D, mode, kernel="reference")
    b = shortest_paths(D, mode, kernel="rows")
    assert a.tobytes() == b.tobytes()


@pytest.mark.parametrize("frozen_frac", [0.0, 0.4])
def test_compiled_reference_matches_python_loop(rng, frozen_frac):
    D = wdt(random_affinity(rng, 12, p_zero=0.3))
    frozen = rng.random(D.shape) < frozen_frac
    a, b = D.copy(), D.copy()
    fw_reference(a, frozen)
    fw_reference.py_func(b, frozen)
    assert a.tobytes() == b.tobytes()
    c = D.copy()
    fw_rows.py_func(c, frozen)
    assert a.tobytes() == c.tobytes()
    if frozen_frac == 0.0:
        d = D.copy()
        fw_blocked.py_func(d, 5)
        _same(d, a, 1e-12)


def test_soft_keeps_infinite_entries(rng):
    D = wdt(random_affinity(rng, 40, p_zero=0.7))
    out = shortest_paths(D, "soft")
    assert_array_equal(np.isinf(out), np.isinf(D))
    assert (out <= D).all()
    assert_array_equal(out, out.T)


def test_soft_equals_hard_without_missing_edges(rng):
    D = wdt(random_affinity(rng, 25, p_zero=0.0))
    assert_array_equal(shortest_paths(D, "soft"), shortest_paths(D, "hard", kernel="rows"))


def test_soft_rejects_blocked_kernel():
    with pytest.raises(ValueError):
        shortest_paths(np.zeros((3, 3)), "soft", kernel="blocked")


def test_shortest_paths_rejects_negative():
    with pytest.raises(ValueError):
        shortest_paths(np.array([[0, -1.0], [-1.0, 0]]))


# ---------------------------------------------------------------- gbto


def test_gbto_single_triple():
    # i=0, j=1, k=2: d = (10, 2, 2), min(10, 4) = 4
    W = np.array([[0, 0.1, 0.5], [0.1, 0, 0.5], [0.5, 0.5, 0]])
    out = gbto(W, "hard", "reciprocal")
    assert_allclose(out[0, 1], 0.25, rtol=1e-15)
    assert_allclose(out[0, 2], 0.5)


@given(st.floats(0.001, 1.0), st.floats(0.001, 1.0), st.floats(0.0, 1.0), st.sampled_from(TRANSFORMS),
       st.sampled_from(["hard", "soft"]))
def test_gbto_three_nodes_matches_max_formula(w_ik, w_kj, w_ij, transform, mode):
    W = np.array([[0, w_ij, w_ik], [w_ij, 0, w_kj], [w_ik, w_kj, 0]])
    out = gbto(W, mode, transform)
    via = dwt(np.array([[0.0, wdt(W, transform)[0, 2] + wdt(W, transform)[2, 1]], [1.0, 0.0]]), transform)[0, 1]
    expected = max(w_ij if w_ij > ZERO_FLOOR else 0.0, via) if (mode == "hard" or w_ij > ZERO_FLOOR) else 0.0
    assert_allclose(out[0, 1], expected, rtol=1e-12, atol=1e-15)


def test_gbto_metric_consistent_fixed_point(rng):
    W = rng.uniform(0.5, 1.0, (15, 15))
    W = np.triu(W, 1)
    W = W + W.T
    assert_allclose(gbto(W), W, rtol=0, atol=1e-12)


@given(affinities(), st.sampled_from(TRANSFORMS))
def test_gbto_properties(W, transform):
    hard = gbto(W, "hard", transform)
    soft = gbto(W, "soft", transform)
    for out in (hard, soft):
        assert (out >= W).all()
        assert (out <= 1.0).all()
        assert_array_equal(np.diag(out), 0.0)
        assert_allclose(out, out.T, rtol=0, atol=1e-15)
    assert_array_equal(soft > 0, W > 0)
    assert np.count_nonzero(hard) >= np.count_nonzero(W)
    assert_allclose(gbto(hard, "hard", transform), hard, rtol=0, atol=1e-10)


@given(affinities(max_n=20), st.sampled_from(TRANSFORMS))
def test_hard_distances_satisfy_triangle_inequality(W, transform):
    D = shortest_paths(wdt(W, transform), "hard")
    via = D[:, :, None] + D[None, :, :]  # via[i, k, j] = d_ik + d_kj
    assert (D[:, None, :] <= via + 1e-12 * np.where(np.isfinite(via), via, 0) + 1e-12).all()
