"""Random sampling of hypersurfaces and verification of known tables.

Sampling draws the coefficient vector of a degree-n form uniformly
from F_p^N (N = 35 when n = 4), resampling the zero draw. Parallel
runs partition the sample count into contiguous per-worker blocks,
each with its own (seed, worker) substream, so a histogram is
reproducible for a fixed (seed, worker count) pair.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import DomainError, ParseError
from .height import INFINITE, SurfaceProblem, default_bound, height_matrix, height_naive
from .monomials import MonomialBasis
from .polyring import DenseVector, SparsePoly, from_dense, parse_poly, poly_to_text


@dataclass(frozen=True)
class SearchConfig:
    p: int
    n: int = 4
    sample_count: int = 1000
    rng_seed: int = 0
    bound: int | None = None
    target_height: int | None = None
    parallelism: int = 1

    def __post_init__(self):
        if self.sample_count < 1:
            raise DomainError(f"sample_count must be >= 1, got {self.sample_count}")
        if self.parallelism < 1:
            raise DomainError(f"parallelism must be >= 1, got {self.parallelism}")
        if self.target_height is not None and self.target_height < 1:
            raise DomainError("target_height must be a positive height")


@dataclass
class HeightHistogram:
    """Counts per finite height 1..bound plus infinity."""

    bound: int
    counts: dict = field(default_factory=dict)
    infinite: int = 0
    total: int = 0

    def record(self, height):
        if isinstance(height, float) and math.isinf(height):
            self.infinite += 1
        else:
            self.counts[height] = self.counts.get(height, 0) + 1
        self.total += 1

    def merge(self, other: "HeightHistogram"):
        if other.bound != self.bound:
            raise DomainError("histograms cover different bounds")
        for h, c in other.counts.items():
            self.counts[h] = self.counts.get(h, 0) + c
        self.infinite += other.infinite
        self.total += other.total

    def fraction_at_least(self, h: int) -> float:
        hits = self.infinite + sum(c for k, c in self.counts.items() if k >= h)
        return hits / self.total if self.total else 0.0

    def as_dict(self) -> dict:
        return {
            "bound": self.bound,
            "counts": {str(h): self.counts[h] for h in sorted(self.counts)},
            "inf": self.infinite,
            "total": self.total,
        }

    def check(self):
        if sum(self.counts.values()) + self.infinite != self.total:
            raise DomainError("histogram counts do not sum to total")


@dataclass(frozen=True)
class FoundSurface:
    """A sample that set a new maximum finite height when it was seen."""

    index: int
    height: int
    f: SparsePoly


def sample_surface(rng, p: int, n: int = 4) -> SparsePoly:
    """Uniform nonzero coefficient vector over the degree-n monomials."""
    bas = MonomialBasis(n, n)
    while True:
        values = rng.integers(0, p, size=len(bas)).astype(np.uint64)
        if values.any():
            return from_dense(DenseVector(bas, values), p)


def _worker_block(args):
    cfg, worker, start, count = args
    rng = np.random.default_rng([cfg.rng_seed, worker])
    bound = cfg.bound if cfg.bound is not None else default_bound(cfg.n)
    hist = HeightHistogram(bound)
    found = []
    best = 0
    for i in range(count):
        f = sample_surface(rng, cfg.p, cfg.n)
        prob = SurfaceProblem(cfg.p, cfg.n, f, bound)
        res = height_matrix(prob)
        hist.record(res.height)
        if res.is_finite and res.height > best:
            best = res.height
            found.append(FoundSurface(start + i, res.height, f))
        if cfg.target_height is not None and res.height == cfg.target_height:
            break
    return hist, found, best


def run_search(cfg: SearchConfig):
    """Heights of sample_count random surfaces as a histogram, plus the
    log of samples that raised the maximum finite height.

    With target_height set, workers stop at the first sample reaching
    it; the histogram then covers only the samples actually computed.
    """
    jobs = min(cfg.parallelism, cfg.sample_count)
    base, extra = divmod(cfg.sample_count, jobs)
    blocks = []
    start = 0
    for w in range(jobs):
        count = base + (1 if w < extra else 0)
        blocks.append((cfg, w, start, count))
        start += count
    if jobs == 1:
        results = [_worker_block(blocks[0])]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_worker_block, blocks))
    hist, found, _ = results[0]
    for other_hist, other_found, _ in results[1:]:
        hist.merge(other_hist)
        found.extend(other_found)
    # Replay the new-maximum rule over the merged stream in index order.
    found.sort(key=lambda s: s.index)
    merged = []
    best = 0
    for s in found:
        if s.height > best:
            best = s.height
            merged.append(s)
    hist.check()
    return hist, merged


def fixtures_path() -> str:
    """Location of the packaged table of known surfaces."""
    return str(resources.files("qfsplit") / "fixtures" / "k3_tables.txt")


@dataclass(frozen=True)
class FixtureRow:
    line: int
    p: int
    expected: object
    f: SparsePoly
    text: str


@dataclass(frozen=True)
class FixtureVerdict:
    row: FixtureRow
    got: object

    @property
    def ok(self) -> bool:
        return self.got == self.row.expected


def parse_fixtures(text: str, n: int = 4):
    """Rows of `p ; height ; polynomial`, with # comments and inf."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [part.strip() for part in line.split(";", 2)]
        if len(parts) != 3:
            raise ParseError(f"fixture line {lineno} needs 'p ; height ; poly'")
        try:
            p = int(parts[0])
        except ValueError:
            raise ParseError(f"fixture line {lineno}: bad prime {parts[0]!r}") from None
        if parts[1] == "inf":
            expected = INFINITE
        else:
            try:
                expected = int(parts[1])
            except ValueError:
                raise ParseError(
                    f"fixture line {lineno}: bad height {parts[1]!r}"
                ) from None
        try:
            f = parse_poly(parts[2], n, p)
        except ParseError as exc:
            raise ParseError(f"fixture line {lineno}: {exc}") from None
        rows.append(FixtureRow(lineno, p, expected, f, parts[2]))
    return rows


def _verify_row(args):
    row, method = args
    prob = SurfaceProblem(row.p, row.f.nvars, row.f)
    drive = height_naive if method == "naive" else height_matrix
    return FixtureVerdict(row, drive(prob).height)


def verify_fixtures(text: str, n: int = 4, primes=None, jobs: int = 1, method: str = "matrix"):
    """Recompute each fixture row's height; verdicts in file order."""
    rows = parse_fixtures(text, n)
    if primes is not None:
        keep = set(primes)
        rows = [r for r in rows if r.p in keep]
    work = [(r, method) for r in rows]
    if jobs <= 1 or len(work) <= 1:
        return [_verify_row(item) for item in work]
    with ProcessPoolExecutor(max_workers=min(jobs, len(work))) as pool:
        return list(pool.map(_verify_row, work))


def histogram_text(hist: HeightHistogram, p: int) -> str:
    """Aligned text rendering with the 1/p^h reference column."""
    lines = [f"{'height':>8} {'count':>10} {'fraction':>10} {'1/p^h':>10}"]
    for h in sorted(hist.counts):
        frac = hist.counts[h] / hist.total
        lines.append(f"{h:>8} {hist.counts[h]:>10} {frac:>10.5f} {1 / p**h:>10.5f}")
    if hist.infinite:
        frac = hist.infinite / hist.total
        lines.append(f"{'inf':>8} {hist.infinite:>10} {frac:>10.5f} {'':>10}")
    lines.append(f"{'total':>8} {hist.total:>10}")
    return "\n".join(lines)


def found_surfaces_text(found) -> str:
    if not found:
        return "no finite-height surfaces recorded"
    lines = []
    for s in found:
        lines.append(f"sample {s.index}: height {s.height}: {poly_to_text(s.f)}")
    return "\n".join(lines)
