"""Instance generation (orders, SKU popularity, shared-storage pod filling) and
the grid layout of the simulated warehouse."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .core import Order

# independent random streams, one per concern
STREAM_LENGTHS = 1
STREAM_SKUS = 2
STREAM_PODS = 3
STREAM_PLACEMENT = 10
STREAM_JITTER = 11

TABLE1_GRID = {
    "num_orders": (50, 150, 250),
    "num_skus": (20, 100),
    "num_pods": (50, 100),
    "skus_per_pod": (2, 3),
}


def rng_stream(seed: int, stream: int) -> np.random.Generator:
    """PCG64 generator for one (seed, concern) pair."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream)])))


@dataclass(frozen=True)
class InstanceParams:
    num_orders: int
    num_skus: int
    num_pods: int
    skus_per_pod: int
    length_p: float = 0.4
    popularity_p: float | None = None  # default 5 / num_skus
    seed: int = 0

    def __post_init__(self):
        for name in ("num_orders", "num_skus", "num_pods", "skus_per_pod"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.popularity_p is None:
            object.__setattr__(self, "popularity_p",
                               5 / self.num_skus if self.num_skus > 5 else 0.5)
        if not 0 < self.length_p < 1:
            raise ValueError("length_p must lie in (0, 1)")
        if not 0 < self.popularity_p < 1:
            raise ValueError("popularity_p must lie in (0, 1)")
        if self.num_pods * self.skus_per_pod < self.num_skus:
            raise ValueError("num_pods * skus_per_pod must cover every SKU at least once")


def truncated_geometric_pmf(p: float, n: int) -> np.ndarray:
    k = np.arange(1, n + 1)
    w = (1 - p) ** (k - 1) * p
    return w / w.sum()


def sample_order_length(rng: np.random.Generator, length_p: float, num_skus: int,
                        size: int | None = None):
    """Draw from the geometric distribution truncated to 1..num_skus."""
    cdf = np.cumsum(truncated_geometric_pmf(length_p, num_skus))
    cdf[-1] = 1.0
    u = rng.random(size)
    k = np.searchsorted(cdf, u, side="right") + 1
    return int(k) if size is None else k


def sku_weights(popularity_p: float, num_skus: int) -> np.ndarray:
    r = np.arange(1, num_skus + 1)
    return (1 - popularity_p) ** (r - 1) * popularity_p


def sample_order_skus(rng: np.random.Generator, k: int, num_skus: int,
                      popularity_p: float) -> frozenset[int]:
    """Draw ``k`` distinct SKUs; each draw renormalises the rank weights over the remaining SKUs."""
    if not 0 <= k <= num_skus:
        raise ValueError(f"cannot draw {k} distinct SKUs from {num_skus}")
    weights = sku_weights(popularity_p, num_skus)
    remaining = list(range(1, num_skus + 1))
    chosen = []
    for _ in range(k):
        w = weights[np.array(remaining) - 1]
        cum = np.cumsum(w)
        pick = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        pick = min(pick, len(remaining) - 1)
        chosen.append(remaining.pop(pick))
    return frozenset(chosen)


def fill_pods(rng: np.random.Generator, num_pods: int, skus_per_pod: int,
              sku_ids) -> list[frozenset[int]]:
    """Concatenate shuffled copies of the SKU list and cut it into pods."""
    sku_ids = list(sku_ids)
    stream: list[int] = []
    while len(stream) < num_pods * skus_per_pod:
        stream.extend(int(i) for i in rng.permutation(sku_ids))
    return [frozenset(stream[j * skus_per_pod:(j + 1) * skus_per_pod]) for j in range(num_pods)]


@dataclass(frozen=True)
class StationSpec:
    id: int
    entry: tuple[int, int]
    exit: tuple[int, int]
    item_capacity: int = 15
    queue_length: int = 12
    open_at: float = 0.0


@dataclass(frozen=True)
class Layout:
    """Grid geometry: storage blocks of 2 x 4 cells separated by one-cell aisles,
    stations on the west wall (column 0) next to a two-lane highway."""

    blocks_x: int = 9
    blocks_y: int = 7
    num_stations: int = 4
    item_capacity: int = 15
    queue_length: int = 12
    num_robots: int = 8
    cell_edge: float = 1.0
    packing_capacity: int | None = None
    station_open_at: tuple[float, ...] = ()
    station_capacities: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "station_open_at", tuple(self.station_open_at))
        object.__setattr__(self, "station_capacities", tuple(self.station_capacities))
        if self.blocks_x < 1 or self.blocks_y < 1:
            raise ValueError("need at least one storage block")
        if self.num_stations < 1 or self.num_robots < 1:
            raise ValueError("need at least one station and one robot")
        if 2 * self.num_stations > self.height:
            raise ValueError("too many stations for the wall height")
        if self.cell_edge <= 0:
            raise ValueError("cell_edge must be positive")

    @property
    def width(self) -> int:
        return 3 + 5 * self.blocks_x

    @property
    def height(self) -> int:
        return 1 + 3 * self.blocks_y

    @property
    def storage_cells(self) -> tuple[tuple[int, int], ...]:
        cells = []
        for by, bx in itertools.product(range(self.blocks_y), range(self.blocks_x)):
            for dy, dx in itertools.product(range(2), range(4)):
                cells.append((3 + 5 * bx + dx, 1 + 3 * by + dy))
        return tuple(sorted(cells, key=lambda c: (c[1], c[0])))

    @property
    def stations(self) -> tuple[StationSpec, ...]:
        out = []
        for k in range(self.num_stations):
            y = int((k + 0.5) * self.height / self.num_stations)
            y = min(y, self.height - 2)
            cap = self.station_capacities[k] if k < len(self.station_capacities) else self.item_capacity
            opens = self.station_open_at[k] if k < len(self.station_open_at) else 0.0
            out.append(StationSpec(k + 1, (0, y), (0, y + 1), cap, self.queue_length, opens))
        return tuple(out)

    @property
    def storage_count(self) -> int:
        return 8 * self.blocks_x * self.blocks_y


def desk_layout(num_stations: int = 2, item_capacity: int = 6, num_robots: int = 4,
                blocks_x: int = 3, blocks_y: int = 2, **kw) -> Layout:
    """A small layout for desk-scale runs (48 storage locations by default)."""
    return Layout(blocks_x=blocks_x, blocks_y=blocks_y, num_stations=num_stations,
                  item_capacity=item_capacity, num_robots=num_robots, **kw)


@dataclass(frozen=True)
class Instance:
    params: InstanceParams
    skus: tuple[int, ...]
    orders: tuple[Order, ...]
    pods: tuple[frozenset[int], ...] = field(default=())  # pod j+1 holds pods[j]

    def pod_skus(self) -> dict[int, frozenset[int]]:
        return {j + 1: s for j, s in enumerate(self.pods)}


def gen_instance(params: InstanceParams, layout: Layout | None = None) -> Instance:
    """Orders and pod inventories for ``params``; deterministic in ``params.seed``.

    Order lengths are truncated at the largest station item capacity so every
    order fits some station.
    """
    layout = layout or Layout()
    max_len = min(params.num_skus, max(s.item_capacity for s in layout.stations))
    len_rng = rng_stream(params.seed, STREAM_LENGTHS)
    sku_rng = rng_stream(params.seed, STREAM_SKUS)
    pod_rng = rng_stream(params.seed, STREAM_PODS)
    orders = []
    for o in range(1, params.num_orders + 1):
        k = sample_order_length(len_rng, params.length_p, max_len)
        lines = sample_order_skus(sku_rng, k, params.num_skus, params.popularity_p)
        orders.append(Order(o, lines, 0.0))
    skus = tuple(range(1, params.num_skus + 1))
    pods = fill_pods(pod_rng, params.num_pods, params.skus_per_pod, skus)
    return Instance(params, skus, tuple(orders), tuple(pods))


def table1_params(seed: int = 0) -> list[InstanceParams]:
    keys = list(TABLE1_GRID)
    return [InstanceParams(**dict(zip(keys, combo)), seed=seed)
            for combo in itertools.product(*TABLE1_GRID.values())]
