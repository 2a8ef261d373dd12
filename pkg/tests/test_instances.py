import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rmfs_poa.core import Order
from rmfs_poa.instances import (InstanceParams, Layout, desk_layout, fill_pods, gen_instance,
                                sample_order_length, sample_order_skus, table1_params,
                                truncated_geometric_pmf)
from rmfs_poa.io import dumps, instance_to_dict


def test_truncated_pmf_first_mass():
    pmf = truncated_geometric_pmf(0.4, 20)
    assert pmf[0] == pytest.approx(0.4 / (1 - 0.6**20), rel=1e-12)
    assert pmf[0] == pytest.approx(0.4000146, abs=1e-7)
    assert pmf.sum() == pytest.approx(1.0)


def test_length_degenerate_truncation(rng):
    assert all(sample_order_length(rng, 0.4, 1) == 1 for _ in range(50))


def test_length_mean():
    rng = np.random.default_rng(7)
    ks = sample_order_length(rng, 0.4, 20, size=10**6)
    assert ks.min() >= 1 and ks.max() <= 20
    assert abs(ks.mean() - 2.5) < 0.01


def test_length_chi_square():
    rng = np.random.default_rng(11)
    n = 10**5
    ks = sample_order_length(rng, 0.4, 20, size=n)
    pmf = truncated_geometric_pmf(0.4, 20)
    obs = np.bincount(ks, minlength=21)[1:]
    exp = pmf * n
    # pool the sparse tail so every cell expects at least 5
    cut = int(np.argmax(exp < 5))
    obs = np.append(obs[:cut], obs[cut:].sum())
    exp = np.append(exp[:cut], exp[cut:].sum())
    stat = float(((obs - exp) ** 2 / exp).sum())
    dof = len(obs) - 1
    # 0.001 critical value, Wilson-Hilferty approximation
    z = 3.090232
    crit = dof * (1 - 2 / (9 * dof) + z * math.sqrt(2 / (9 * dof))) ** 3
    assert stat < crit


def test_sku_sampling_full_set(rng):
    assert sample_order_skus(rng, 20, 20, 0.25) == frozenset(range(1, 21))


def test_sku_sampling_too_many(rng):
    with pytest.raises(ValueError):
        sample_order_skus(rng, 3, 2, 0.5)


def test_sku_two_of_two_probabilities():
    rng = np.random.default_rng(3)
    n = 200_000
    hits = sum(1 for _ in range(n) if sample_order_skus(rng, 1, 2, 0.5) == {1})
    assert abs(hits / n - 2 / 3) < 0.005


def test_sku_first_draw_rank_one():
    rng = np.random.default_rng(5)
    n = 200_000
    w = 0.25 * 0.75 ** np.arange(20)
    expected = w[0] / w.sum()
    hits = sum(1 for _ in range(n) if 1 in sample_order_skus(rng, 1, 20, 0.25))
    assert abs(hits / n - expected) < 0.003


class _FixedPerm:
    def __init__(self, perms):
        self.perms = list(perms)

    def permutation(self, xs):
        return self.perms.pop(0)


def test_fill_pods_single_permutation():
    assert fill_pods(_FixedPerm([[3, 1, 4, 2]]), 2, 2, [1, 2, 3, 4]) == [{3, 1}, {4, 2}]


def test_fill_pods_two_permutations():
    pods = fill_pods(_FixedPerm([[1, 2, 3, 4], [4, 3, 2, 1]]), 3, 2, [1, 2, 3, 4])
    assert pods == [{1, 2}, {3, 4}, {4, 3}]


@given(st.integers(1, 12), st.integers(1, 4), st.integers(1, 9), st.integers(0, 10**6))
def test_fill_pods_counts(num_pods, alpha, num_skus, seed):
    rng = np.random.default_rng(seed)
    pods = fill_pods(rng, num_pods, alpha, range(1, num_skus + 1))
    assert len(pods) == num_pods
    assert all(1 <= len(p) <= alpha for p in pods)
    if num_pods * alpha % num_skus == 0 and alpha <= num_skus:
        # every full permutation hands each SKU out exactly once
        dispensed = num_pods * alpha // num_skus
        counts = [sum(i in p for p in pods) for i in range(1, num_skus + 1)]
        assert all(c <= dispensed for c in counts)


def test_gen_instance_deterministic():
    p = InstanceParams(50, 20, 50, 2, seed=1)
    a = dumps(instance_to_dict(gen_instance(p)))
    b = dumps(instance_to_dict(gen_instance(p)))
    assert a == b
    assert a != dumps(instance_to_dict(gen_instance(InstanceParams(50, 20, 50, 2, seed=2))))


def test_gen_instance_table_row():
    inst = gen_instance(InstanceParams(50, 20, 50, 2, seed=1))
    assert len(inst.orders) == 50
    assert all(isinstance(o, Order) and 1 <= o.size <= 15 for o in inst.orders)
    assert len(inst.pods) == 50
    assert set().union(*inst.pods) == set(range(1, 21))


def test_table1_grid():
    grid = table1_params()
    assert len(grid) == 24 and len(set(grid)) == 24


@pytest.mark.parametrize("kw", [dict(num_orders=0), dict(skus_per_pod=0), dict(length_p=1.0),
                                dict(popularity_p=0.0), dict(num_pods=1, num_skus=20)])
def test_params_rejected(kw):
    base = dict(num_orders=5, num_skus=10, num_pods=10, skus_per_pod=2)
    with pytest.raises(ValueError):
        InstanceParams(**{**base, **kw})


def test_default_layout_counts():
    lay = Layout()
    assert lay.storage_count == 504
    assert len(lay.stations) == 4 and all(s.item_capacity == 15 for s in lay.stations)
    assert desk_layout().storage_count >= 30
