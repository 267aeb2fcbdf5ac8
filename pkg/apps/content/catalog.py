import logging
from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# Exact inclusion probabilities enumerate subsets of the catalog
MAX_EXACT_CATALOG = 16


@dataclass(frozen=True)
class Catalog:
    """
    File catalog; files are numbered 1..size.
    """
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"catalog size must be at least 1, got {self.size}")

    def __iter__(self) -> Iterator[int]:
        return iter(range(1, self.size + 1))

    def __len__(self):
        return self.size


@dataclass(frozen=True, eq=False)
class ZipfPmf:
    """
    Zipf popularity over a catalog: p(n) proportional to n^-exponent.

    ``probabilities[n - 1]`` holds p(n).
    """
    exponent: float
    probabilities: np.ndarray

    @property
    def size(self) -> int:
        return len(self.probabilities)

    @property
    def catalog(self) -> Catalog:
        return Catalog(self.size)

    def __call__(self, n: int) -> float:
        if not 1 <= n <= self.size:
            raise ValueError(f"file index {n} outside 1..{self.size}")
        return float(self.probabilities[n - 1])

    def mass(self, files) -> float:
        """Total probability of a set of files."""
        return float(sum(self.probabilities[n - 1] for n in files))


def zipf_pmf(exponent: float, size: int) -> ZipfPmf:
    """
    Build the Zipf pmf p(n) = n^-exponent / sum_m m^-exponent for n = 1..size.

    An exponent of zero gives the uniform distribution.
    """
    if exponent < 0:
        raise ValueError(f"Zipf exponent must be non-negative, got {exponent}")
    if size < 1:
        raise ValueError(f"catalog size must be at least 1, got {size}")

    weights = np.arange(1, size + 1, dtype=float) ** -exponent
    probabilities = weights / weights.sum()
    probabilities.setflags(write=False)
    return ZipfPmf(exponent=float(exponent), probabilities=probabilities)


@dataclass(frozen=True)
class CacheConfig:
    """
    Set of files stored at one transmitter.
    """
    files: frozenset

    def __contains__(self, file_index):
        return file_index in self.files

    def __len__(self):
        return len(self.files)

    def __iter__(self):
        return iter(sorted(self.files))


def _check_cache_size(pmf: ZipfPmf, size: int):
    if size < 1:
        raise ValueError(f"cache size must be at least 1, got {size}")
    if size >= pmf.size:
        raise ValueError(f"N_cache must be < M (N_cache={size}, M={pmf.size})")


def sample_caches(pmf: ZipfPmf, size: int, count: int, rng: np.random.Generator) -> Tuple[CacheConfig, ...]:
    """
    Draw independent cache configurations for ``count`` transmitters.

    Each cache holds the first ``size`` files of a weighted sampling without
    replacement from ``pmf``. The draw order is simulated as an exponential
    race: file n fires at time E_n / p(n) with E_n ~ Exp(1), and the earliest
    files win. This has the law of successive draws renormalized after each
    pick, and a shared random stream yields nested caches as ``size`` grows.

    Args:
        pmf (ZipfPmf): Placement popularity
        size (int): Files per cache, N_cache < M
        count (int): Number of transmitters
        rng (Generator): Random stream owned by the caller

    Returns:
        tuple: One CacheConfig per transmitter
    """
    _check_cache_size(pmf, size)
    if count == 0:
        return ()

    clocks = rng.exponential(size=(count, pmf.size)) / pmf.probabilities
    winners = np.argsort(clocks, axis=1, kind='stable')[:, :size] + 1
    return tuple(CacheConfig(frozenset(int(n) for n in row)) for row in winners)


def sample_cache(pmf: ZipfPmf, size: int, rng: np.random.Generator) -> CacheConfig:
    return sample_caches(pmf, size, 1, rng)[0]


def inclusion_probabilities(pmf: ZipfPmf, size: int) -> np.ndarray:
    """
    Exact probability that each file ends up in a cache of ``size`` files.

    Dynamic programming over the subsets drawn so far; only practical for
    small catalogs.
    """
    _check_cache_size(pmf, size)
    if pmf.size > MAX_EXACT_CATALOG:
        raise ValueError(f"exact inclusion needs M <= {MAX_EXACT_CATALOG}, got {pmf.size}")

    p = pmf.probabilities
    reach = {0: 1.0}
    for _ in range(size):
        following = {}
        for subset, probability in reach.items():
            remaining = 1.0 - sum(p[i] for i in range(pmf.size) if subset >> i & 1)
            for i in range(pmf.size):
                if subset >> i & 1:
                    continue
                key = subset | (1 << i)
                following[key] = following.get(key, 0.0) + probability * p[i] / remaining
        reach = following

    inclusion = np.zeros(pmf.size)
    for subset, probability in reach.items():
        for i in range(pmf.size):
            if subset >> i & 1:
                inclusion[i] += probability
    return inclusion


@dataclass(frozen=True, eq=False)
class RequestAssignment:
    """
    Requested file c_u for every receiver u.
    """
    files: np.ndarray

    def __post_init__(self):
        files = np.array(self.files, dtype=int).reshape(-1)
        files.setflags(write=False)
        object.__setattr__(self, 'files', files)

    def __len__(self):
        return len(self.files)

    def __getitem__(self, receiver):
        return int(self.files[receiver])


def sample_requests(pmf: ZipfPmf, receivers, rng: np.random.Generator) -> RequestAssignment:
    """Independent reference model: one iid request per receiver."""
    files = rng.choice(pmf.size, size=len(receivers), p=pmf.probabilities) + 1
    return RequestAssignment(files)
