"""
Corpus
------
Test functions the suites run on:
1. Gaussian profiles g(z)h(t) read from the corpus JSON file
2. Sample points for pointwise comparisons
3. (f, g) cell-value pairs for the sparse suites: indicators, two-bump
   functions, seeded random fields and a constant pair
"""

import json
import logging

import numpy as np

from heislab.config import Config
from heislab.errors import ConfigError
from heislab.operators.heis_core import CellGrid, norm_arrays
from heislab.operators.spectral import GaussianProfile, ProfileSum

logger = logging.getLogger(__name__)


def load_corpus(path: str = None) -> dict:
    path = path or Config.CORPUS_FILE
    try:
        with open(path, "r") as file:
            content = file.read()
            if len(content) == 0:
                raise ConfigError(f"corpus file {path} is empty")
            return json.loads(content)
    except FileNotFoundError:
        raise ConfigError(f"corpus file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"corpus file {path} is not valid JSON: {exc}") from None


def save_corpus(corpus: dict, path: str):
    with open(path, "w") as file:
        json.dump(corpus, file, indent=2)


def _profile(entry: dict) -> GaussianProfile:
    try:
        return GaussianProfile(float(entry["a"]), float(entry["b"]), float(entry.get("c", 0.0)),
                               int(entry.get("n", 1)), float(entry.get("amplitude", 1.0)),
                               entry["name"])
    except KeyError as exc:
        raise ConfigError(f"corpus entry {entry} misses {exc}") from None


def gaussian_corpus(n: int, corpus: dict = None, with_sums: bool = True) -> list:
    """Profiles (and sums of profiles) of dimension n, in file order"""
    corpus = corpus if corpus is not None else load_corpus()
    profiles = [_profile(entry) for entry in corpus.get("gaussians", [])]
    by_name = {p.name: p for p in profiles}
    chosen = [p for p in profiles if p.n == n]
    if with_sums:
        for entry in corpus.get("sums", []):
            if int(entry.get("n", 1)) != n:
                continue
            try:
                terms = tuple(by_name[name] for name in entry["terms"])
            except KeyError as exc:
                raise ConfigError(f"sum {entry.get('name')} refers to unknown profile {exc}") from None
            chosen.append(ProfileSum(terms, entry["name"]))
    if not chosen:
        raise ConfigError(f"the corpus has no profiles for n={n}")
    return chosen


def sample_points(n: int, count: int, seed: int = 0, z_half: float = 1.0, t_half: float = 1.0):
    """``count`` seeded points of the box |z_i| <= z_half, |t| <= t_half, the origin first"""
    rng = np.random.default_rng([seed, n, count])
    z = rng.uniform(-z_half, z_half, size=(count, 2 * n))
    t = rng.uniform(-t_half, t_half, size=count)
    z[0] = 0.0
    t[0] = 0.0
    return z, t


def _box_indicator(grid: CellGrid, center, z_half: float, t_half: float) -> np.ndarray:
    z, t = grid.centers()
    inside = np.all(np.abs(z - center[:-1]) <= z_half, axis=-1) & (np.abs(t - center[-1]) <= t_half)
    return inside.astype(float)


def _bump(grid: CellGrid, center, width: float) -> np.ndarray:
    z, t = grid.centers()
    return np.exp(-(norm_arrays(z - center[:-1], t - center[-1]) / width) ** 2)


def sparse_pairs(grid: CellGrid, seed: int = 0, counts: dict = None) -> list:
    """
    (corpus_id, f, g) with nonnegative cell values, at least ten pairs:
    box indicators, two-bump functions, seeded random fields and a constant pair.
    """
    counts = counts or {}
    # shapes depend on the region only, so refined grids sample the same functions
    rng = np.random.default_rng([seed, grid.n])
    widths = np.asarray(grid.region.half_widths)
    pairs = []
    for i in range(int(counts.get("indicators", 3))):
        c_f = rng.uniform(-0.4, 0.4, size=widths.size) * widths
        c_g = rng.uniform(-0.4, 0.4, size=widths.size) * widths
        scale = 0.3 + 0.2 * i
        f = _box_indicator(grid, c_f, scale * widths[0], scale * widths[-1])
        g = _box_indicator(grid, c_g, 0.5 * widths[0], 0.5 * widths[-1])
        pairs.append((f"indicator-{i}", f, g))
    for i in range(int(counts.get("bumps", 3))):
        width = (0.3 + 0.15 * i) * widths[0]
        a, b = (rng.uniform(-0.5, 0.5, size=widths.size) * widths for _ in range(2))
        f = _bump(grid, a, width) + 0.5 * _bump(grid, b, width)
        g = _bump(grid, -a, 2.0 * width)
        pairs.append((f"two-bump-{i}", f, g))
    for i in range(int(counts.get("random_fields", 4))):
        f = rng.exponential(1.0, size=grid.size)
        g = rng.uniform(0.0, 1.0, size=grid.size)
        pairs.append((f"random-{i}", f, g))
    pairs.append(("constant", np.ones(grid.size), np.ones(grid.size)))
    # pairs with a zero side carry no information
    pairs = [(name, f, g) for name, f, g in pairs if f.any() and g.any()]
    logger.debug("sparse corpus: %d pairs on %d cells", len(pairs), grid.size)
    return pairs
