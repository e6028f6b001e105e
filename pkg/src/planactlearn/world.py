"""Ground-truth grid world: unit rooms, walls, packs, and noisy actuation.

Room (i, j) is 1-based and spans [i-1, i] x [j-1, j]. ``n``/``s`` move along
y, ``e``/``w`` along x.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from planactlearn.errors import InvalidInput, InvalidParameter

MOVES: dict[str, tuple[int, int]] = {"n": (0, 1), "s": (0, -1), "e": (1, 0), "w": (-1, 0)}
PACK_ACTIONS = ("pick", "drop")
BUILDING_FORMAT = "planactlearn.building/1"
DEFAULT_NOISE_VAR = 1e-2

Cell = tuple[int, int]


def wall(c1: Cell, c2: Cell) -> frozenset:
    return frozenset((tuple(c1), tuple(c2)))


def _adjacent(c1: Cell, c2: Cell) -> bool:
    return abs(c1[0] - c2[0]) + abs(c1[1] - c2[1]) == 1


@dataclass(frozen=True)
class Building:
    width: int
    height: int
    walls: frozenset = frozenset()
    packs: tuple = ()
    seed: int | None = None

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidInput("building dimensions must be >= 1")
        walls = frozenset(wall(*sorted(w)) for w in self.walls)
        for w in walls:
            c1, c2 = sorted(w)
            if not (self.inside(c1) and self.inside(c2) and _adjacent(c1, c2)):
                raise InvalidInput(f"wall {sorted(w)} is not between adjacent cells")
        object.__setattr__(self, "walls", walls)
        packs = tuple(tuple(int(v) for v in p) for p in self.packs)
        for p in packs:
            if not self.inside(p):
                raise InvalidInput(f"pack at {p} is outside the building")
        object.__setattr__(self, "packs", packs)

    def inside(self, c: Cell) -> bool:
        return 1 <= c[0] <= self.width and 1 <= c[1] <= self.height

    def cells(self) -> list[Cell]:
        return [(i, j) for i in range(1, self.width + 1) for j in range(1, self.height + 1)]

    def blocked(self, c: Cell, a: str) -> bool:
        di, dj = MOVES[a]
        nxt = (c[0] + di, c[1] + dj)
        return not self.inside(nxt) or wall(c, nxt) in self.walls

    def open_neighbors(self, c: Cell) -> list[Cell]:
        return [
            (c[0] + MOVES[a][0], c[1] + MOVES[a][1]) for a in MOVES if not self.blocked(c, a)
        ]

    def is_connected(self) -> bool:
        cells = self.cells()
        seen = {cells[0]}
        stack = [cells[0]]
        while stack:
            for nb in self.open_neighbors(stack.pop()):
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == len(cells)

    def cell_of(self, xy) -> Cell:
        i = min(max(int(math.floor(xy[0])) + 1, 1), self.width)
        j = min(max(int(math.floor(xy[1])) + 1, 1), self.height)
        return (i, j)

    @staticmethod
    def center(c: Cell) -> np.ndarray:
        return np.array([c[0] - 0.5, c[1] - 0.5])

    def to_dict(self) -> dict:
        return {
            "format": BUILDING_FORMAT,
            "width": self.width,
            "height": self.height,
            "walls": sorted([list(a), list(b)] for a, b in (sorted(w) for w in self.walls)),
            "packs": [list(p) for p in self.packs],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> Building:
        if data.get("format", BUILDING_FORMAT) != BUILDING_FORMAT:
            raise InvalidInput(f"unsupported building format {data.get('format')!r}")
        return cls(
            int(data["width"]),
            int(data["height"]),
            frozenset(wall(tuple(a), tuple(b)) for a, b in data["walls"]),
            tuple(tuple(p) for p in data.get("packs", [])),
            data.get("seed"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> Building:
        return cls.from_dict(json.loads(Path(path).read_text()))


def generate_building(
    width: int, height: int, wall_density: float = 0.3, packs: int = 0, seed: int = 0
) -> Building:
    """Random interior walls, then wall removal in seeded order until connected."""
    if not 0.0 <= wall_density <= 1.0:
        raise InvalidParameter("wall_density must be in [0, 1]")
    rng = np.random.default_rng(seed)
    candidates = []
    for i in range(1, width + 1):
        for j in range(1, height + 1):
            if i < width:
                candidates.append(wall((i, j), (i + 1, j)))
            if j < height:
                candidates.append(wall((i, j), (i, j + 1)))
    keep = rng.random(len(candidates)) < wall_density
    walls = [w for w, k in zip(candidates, keep) if k]

    parent = {c: c for c in ((i, j) for i in range(1, width + 1) for j in range(1, height + 1))}

    def find(c):
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    wall_set = set(walls)
    for w in candidates:
        if w not in wall_set:
            a, b = sorted(w)
            parent[find(a)] = find(b)
    components = len({find(c) for c in parent})
    for k in rng.permutation(len(walls)):
        if components == 1:
            break
        a, b = sorted(walls[k])
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            wall_set.discard(walls[k])
            components -= 1

    pack_cells: list[Cell] = []
    if packs:
        cells = [(i, j) for i in range(1, width + 1) for j in range(1, height + 1) if (i, j) != (1, 1)]
        if not cells:
            cells = [(1, 1)]
        idx = rng.choice(len(cells), size=packs, replace=packs > len(cells))
        pack_cells = [cells[k] for k in idx]
    return Building(width, height, frozenset(wall_set), tuple(pack_cells), seed)


def _psd_sqrt(sigma: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (sigma + sigma.T))
    if w[0] < -1e-12:
        raise InvalidParameter("noise covariance must be positive semidefinite")
    return v * np.sqrt(np.clip(w, 0.0, None))


@dataclass
class NoiseModel:
    """Per-action actuation/sensing noise covariance."""

    default: np.ndarray = field(default_factory=lambda: DEFAULT_NOISE_VAR * np.eye(2))
    per_action: dict = field(default_factory=dict)

    def __post_init__(self):
        self.default = np.asarray(self.default, dtype=float)
        self.per_action = {a: np.asarray(s, dtype=float) for a, s in self.per_action.items()}
        self._sqrt = {a: _psd_sqrt(s) for a, s in self.per_action.items()}
        self._default_sqrt = _psd_sqrt(self.default)

    @classmethod
    def isotropic(cls, var: float, n: int = 2) -> NoiseModel:
        return cls(var * np.eye(n))

    def sigma(self, a: str) -> np.ndarray:
        return self.per_action.get(a, self.default)

    def sqrt(self, a: str) -> np.ndarray:
        return self._sqrt.get(a, self._default_sqrt)


@dataclass
class AgentPose:
    position: np.ndarray
    carrying: int = 0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)


class World:
    """Simulated environment producing noisy position perceptions."""

    def __init__(self, building: Building, noise: NoiseModel | None = None, start=(0.5, 0.5)):
        self.building = building
        self.noise = noise or NoiseModel()
        self.start = np.asarray(start, dtype=float)
        self.packs = Counter(building.packs)
        self.actions = tuple(MOVES) + (PACK_ACTIONS if building.packs else ())
        W, H = building.width, building.height
        self._disp = np.array([MOVES.get(a, (0, 0)) for a in self.actions], dtype=float)
        self._open = np.zeros((len(self.actions), W, H), dtype=bool)
        for k, a in enumerate(self.actions):
            if a in MOVES:
                for i, j in building.cells():
                    self._open[k, i - 1, j - 1] = not building.blocked((i, j), a)
        self._index = {a: k for k, a in enumerate(self.actions)}

    def initial_pose(self) -> AgentPose:
        return AgentPose(self.start.copy(), 0)

    def reset(self) -> None:
        self.packs = Counter(self.building.packs)

    def _check_action(self, a: str) -> int:
        try:
            return self._index[a]
        except KeyError:
            raise InvalidInput(f"unknown action {a!r}") from None

    def clamp(self, x: np.ndarray) -> np.ndarray:
        upper = np.array([self.building.width, self.building.height], dtype=float)
        return np.clip(x, 0.0, upper)

    def expected(self, x, a: str) -> np.ndarray:
        """Wall-aware noiseless outcome a(x)."""
        self._check_action(a)
        x = np.asarray(x, dtype=float)
        if a not in MOVES or self.building.blocked(self.building.cell_of(x), a):
            return x.copy()
        return x + np.array(MOVES[a], dtype=float)

    def _cell_index(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ci = np.clip(np.floor(X[:, 0]).astype(np.intp), 0, self.building.width - 1)
        cj = np.clip(np.floor(X[:, 1]).astype(np.intp), 0, self.building.height - 1)
        return ci, cj

    def expected_many(self, X: np.ndarray, a: str) -> np.ndarray:
        k = self._check_action(a)
        X = np.asarray(X, dtype=float)
        ci, cj = self._cell_index(X)
        ok = self._open[k, ci, cj]
        return X + ok[:, None] * self._disp[k]

    def act(self, pose: AgentPose, a: str, rng: np.random.Generator) -> tuple[AgentPose, np.ndarray]:
        self._check_action(a)
        new = AgentPose(pose.position.copy(), pose.carrying)
        cell = self.building.cell_of(pose.position)
        if a in MOVES:
            if not self.building.blocked(cell, a):
                new.position = pose.position + np.array(MOVES[a], dtype=float)
        elif a == "pick":
            if self.packs[cell] > 0:
                self.packs[cell] -= 1
                new.carrying += 1
        elif a == "drop":
            if pose.carrying > 0 and self.packs[cell] == 0:
                self.packs[cell] += 1
                new.carrying -= 1
        x = new.position + self.noise.sqrt(a) @ rng.standard_normal(len(new.position))
        return new, self.clamp(x)

    def action_gaussian(self, a: str, x) -> tuple[np.ndarray, np.ndarray]:
        return self.expected(x, a), self.noise.sigma(a)

    def true_action_density(self, a: str, x, x2) -> float:
        """Density of N(x2; a(x), Sigma_a)."""
        mean, cov = self.action_gaussian(a, x)
        d = np.asarray(x2, dtype=float) - mean
        n = len(d)
        logdet = np.linalg.slogdet(cov)[1]
        maha = float(d @ np.linalg.solve(cov, d))
        return math.exp(-0.5 * (n * math.log(2 * math.pi) + logdet + maha))

    def sample_walks(self, actions, n_walks: int, length: int, seed: int, x0=None, return_positions=False):
        """Perceptions along ``n_walks`` uniform random walks, shape (N, length, 2).

        Walk ``k`` draws from its own child seed, so the first N walks do
        not change when more are requested. With ``return_positions`` the
        noiseless poses are returned as well, as ``(X, P)``.
        """
        if n_walks < 1 or length < 1:
            raise InvalidParameter("need at least one walk of length >= 1")
        idx = np.array([self._check_action(a) for a in actions], dtype=np.intp)
        children = np.random.SeedSequence(seed).spawn(n_walks)
        choice = np.empty((n_walks, length), dtype=np.intp)
        z = np.empty((n_walks, length, 2))
        for k, ss in enumerate(children):
            g = np.random.default_rng(ss)
            choice[k] = idx[g.integers(0, len(idx), size=length)]
            z[k] = g.standard_normal((length, 2))
        pos = np.tile(self.start if x0 is None else np.asarray(x0, dtype=float), (n_walks, 1))
        out = np.empty((n_walks, length, 2))
        poses = np.empty((n_walks, length, 2))
        sqrts = np.stack([self.noise.sqrt(a) for a in self.actions])
        for t in range(length):
            a_k = choice[:, t]
            ci, cj = self._cell_index(pos)
            ok = self._open[a_k, ci, cj]
            pos = pos + ok[:, None] * self._disp[a_k]
            noise = np.einsum("kij,kj->ki", sqrts[a_k], z[:, t])
            out[:, t] = self.clamp(pos + noise)
            poses[:, t] = pos
        return (out, poses) if return_positions else out
