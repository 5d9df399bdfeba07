"""Synthetic data, ballot ingestion and CSV/JSON persistence."""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    ComparisonDataset,
    InvalidArgumentError,
    ParseError,
    RankingList,
    ScoreVector,
    pair_indices,
    slot_count,
    slot_index,
)


@dataclass(frozen=True)
class SyntheticConfig:
    n: int
    total_votes: int
    noise_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise InvalidArgumentError("n must be at least 2")
        if self.total_votes < 1:
            raise InvalidArgumentError("total_votes must be at least 1")
        if not 0.0 <= self.noise_fraction < 1.0:
            raise InvalidArgumentError("noise_fraction must lie in [0, 1)")


def generate_synthetic(cfg: SyntheticConfig) -> tuple[ComparisonDataset, RankingList]:
    """Plant a random total order and scatter votes over the pair slots.

    ``round(noise_fraction * total_votes)`` votes (half-to-even) go to slots
    that contradict the planted order, the rest to slots that agree with it.
    Within each group slots are drawn uniformly with replacement.
    """
    rng = np.random.default_rng(cfg.seed)
    truth = RankingList(rng.permutation(cfg.n))
    i, j = pair_indices(cfg.n)
    agrees = truth.rank_of[i] < truth.rank_of[j]
    n_noise = int(round(cfg.noise_fraction * cfg.total_votes))
    weights = np.zeros(slot_count(cfg.n), dtype=np.int64)
    for mask, count in ((agrees, cfg.total_votes - n_noise), (~agrees, n_noise)):
        slots = np.flatnonzero(mask)
        weights[slots] = rng.multinomial(count, np.full(slots.size, 1.0 / slots.size))
    return ComparisonDataset(cfg.n, weights), truth


@dataclass(frozen=True)
class BallotFile:
    n: int
    orders: tuple[tuple[tuple[int, ...], int], ...]

    def __post_init__(self):
        for order, count in self.orders:
            if count < 1:
                raise InvalidArgumentError("ballot multiplicity must be at least 1")
            if len(set(order)) != len(order):
                raise InvalidArgumentError(f"ballot {order} repeats an item")
            if any(not 0 <= a < self.n for a in order):
                raise InvalidArgumentError(f"ballot {order} has an item outside 0..{self.n - 1}")


_HEADER = re.compile(r"^n\s*=\s*(\d+)$")
_BALLOT = re.compile(r"^(\d+)\s*:\s*(.+)$")


def parse_ballots(text: str) -> BallotFile:
    """Parse ``n=<int>`` followed by lines ``count: a > b > c``.

    Blank lines and ``#`` comments are skipped. Ties (``=`` or ``,``) are rejected.
    """
    n = None
    orders = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n is None:
            m = _HEADER.match(line)
            if not m:
                raise ParseError("expected header 'n=<int>'", lineno)
            n = int(m.group(1))
            continue
        m = _BALLOT.match(line)
        if not m:
            raise ParseError(f"malformed ballot {line!r}", lineno)
        count = int(m.group(1))
        if count < 1:
            raise ParseError("ballot count must be positive", lineno)
        body = m.group(2)
        if "=" in body or "," in body:
            raise ParseError("ties are not supported", lineno)
        try:
            order = tuple(int(tok) for tok in body.split(">"))
        except ValueError:
            raise ParseError(f"non-integer item in {body!r}", lineno) from None
        if len(set(order)) != len(order):
            raise ParseError(f"duplicate item in ballot {body!r}", lineno)
        bad = [a for a in order if not 0 <= a < n]
        if bad:
            raise ParseError(f"item {bad[0]} outside 0..{n - 1}", lineno)
        orders.append((order, count))
    if n is None:
        raise ParseError("empty ballot file: missing header 'n=<int>'")
    return BallotFile(n, tuple(orders))


def read_ballots(path) -> BallotFile:
    return parse_ballots(Path(path).read_text())


def ingest_ballots(ballots: BallotFile, n: int | None = None) -> ComparisonDataset:
    """Expand each ballot into the pairwise wins it implies."""
    n = ballots.n if n is None else n
    weights = np.zeros(slot_count(n), dtype=np.int64)
    for order, count in ballots.orders:
        if any(a >= n for a in order):
            raise InvalidArgumentError(f"ballot {order} references an item >= n={n}")
        for pos, a in enumerate(order):
            for b in order[pos + 1 :]:
                weights[slot_index(n, a, b)] += count
    return ComparisonDataset(n, weights)


def subsample_votes(data: ComparisonDataset, fraction: float, seed: int = 0) -> ComparisonDataset:
    """Keep ``round(fraction * M0)`` votes drawn uniformly without replacement."""
    if not 0.0 < fraction <= 1.0:
        raise InvalidArgumentError("fraction must lie in (0, 1]")
    keep = int(round(fraction * data.total))
    rng = np.random.default_rng(seed)
    return data.with_weights(rng.multivariate_hypergeometric(data.weights, keep))


def write_dataset(data: ComparisonDataset, path, n_header: bool = True) -> None:
    """Sparse comparison CSV. A leading ``# n=<int>`` comment keeps trailing empty items."""
    i, j = data.pairs
    with open(path, "w", newline="") as fh:
        if n_header:
            fh.write(f"# n={data.n}\n")
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "weight"])
        for s in np.flatnonzero(data.weights):
            writer.writerow([int(i[s]), int(j[s]), int(data.weights[s])])


def read_dataset(path, n: int | None = None) -> ComparisonDataset:
    """Read a comparison CSV; missing slots are zero.

    ``n`` comes from the argument, else a ``# n=`` comment, else the largest index + 1.
    """
    rows = []
    header_seen = False
    n_comment = None
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = re.match(r"#\s*n\s*=\s*(\d+)", line)
                if m:
                    n_comment = int(m.group(1))
                continue
            fields = [f.strip() for f in line.split(",")]
            if not header_seen:
                if fields != ["i", "j", "weight"]:
                    raise ParseError("expected header 'i,j,weight'", lineno)
                header_seen = True
                continue
            if len(fields) != 3:
                raise ParseError(f"expected 3 fields, got {len(fields)}", lineno)
            try:
                a, b, w = (int(f) for f in fields)
            except ValueError:
                raise ParseError(f"non-integer field in {line!r}", lineno) from None
            if a == b:
                raise ParseError(f"self-pair ({a}, {b}) is not allowed", lineno)
            if a < 0 or b < 0:
                raise ParseError("item indices must be nonnegative", lineno)
            if w < 0:
                raise ParseError(f"negative weight {w}", lineno)
            rows.append((a, b, w, lineno))
    if not header_seen:
        raise ParseError("missing header 'i,j,weight'")
    if n is None:
        n = n_comment
    if n is None:
        n = max((max(a, b) for a, b, _, _ in rows), default=1) + 1
    weights = np.zeros(slot_count(n), dtype=np.int64)
    for a, b, w, lineno in rows:
        if a >= n or b >= n:
            raise ParseError(f"pair ({a}, {b}) outside 0..{n - 1}", lineno)
        weights[slot_index(n, a, b)] += w
    return ComparisonDataset(n, weights)


def write_scores(scores: ScoreVector, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["item", "theta"])
        for k, t in enumerate(scores.theta):
            writer.writerow([k, repr(float(t))])


def read_scores(path) -> ScoreVector:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["item", "theta"]:
            raise ParseError("expected header 'item,theta'", 1)
        values = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                values[int(row[0])] = float(row[1])
            except (ValueError, IndexError):
                raise ParseError(f"malformed row {row!r}", lineno) from None
    n = len(values)
    if sorted(values) != list(range(n)):
        raise ParseError("items must be 0..n-1 without gaps")
    return ScoreVector(np.array([values[k] for k in range(n)]))


def ranking_to_scores(truth: RankingList) -> ScoreVector:
    """Scores whose ranking is ``truth``: the top item gets n-1, the last 0."""
    return ScoreVector(truth.n - truth.rank_of.astype(float))


def write_metrics(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def read_metrics(path) -> dict:
    return json.loads(Path(path).read_text())
