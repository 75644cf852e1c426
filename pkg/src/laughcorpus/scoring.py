"""Humour quotient scoring and the mu/sigma Likert binning rule."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .corpus import CorpusManifest, CorpusStatsRecord
from .errors import LaughCorpusError

BAND_WIDTH_SIGMAS = 0.75

ESTIMATORS = ("population", "sample")


@dataclass(frozen=True)
class CorpusStats:
    """Mean/spread of the corpus quotients, plus the clip count."""

    mu: float
    sigma: float
    n: int

    def __post_init__(self):
        if self.sigma < 0:
            raise LaughCorpusError(f"sigma must be >= 0, got {self.sigma}")
        if self.n < 1:
            raise LaughCorpusError(f"n must be >= 1, got {self.n}")


def humour_quotient(laugh_total_s: float, duration_s: float) -> float:
    """Normalized laughter duration: total laugh time over clip length.

    Raises:
        LaughCorpusError: non-positive duration, or laugh total exceeding
            the duration (an inconsistent detector output).
    """
    if duration_s <= 0:
        raise LaughCorpusError(f"duration_s must be > 0, got {duration_s}")
    if laugh_total_s < 0:
        raise LaughCorpusError(f"laugh_total_s must be >= 0, got {laugh_total_s}")
    if laugh_total_s > duration_s:
        raise LaughCorpusError(
            f"laugh_total_s {laugh_total_s} exceeds duration_s {duration_s} "
            "(detector inconsistency)")
    return laugh_total_s / duration_s


def corpus_stats(quotients, estimator: str = "population") -> CorpusStats:
    """Mean and standard deviation over all clips' quotients.

    Zero-quotient clips count like any other. The population estimator
    (divide by N) is the default; "sample" divides by N-1.
    """
    if estimator not in ESTIMATORS:
        raise LaughCorpusError(f"estimator {estimator!r} not in {ESTIMATORS}")
    values = np.asarray(list(quotients), dtype=np.float64)
    if values.size == 0:
        raise LaughCorpusError("cannot compute stats of an empty quotient list")
    if values.size == 1 and estimator == "sample":
        raise LaughCorpusError("sample estimator needs at least 2 quotients")
    ddof = 0 if estimator == "population" else 1
    return CorpusStats(mu=float(values.mean()),
                       sigma=float(values.std(ddof=ddof)),
                       n=int(values.size))


def bin_rating(quotient: float, stats: CorpusStats) -> int:
    """Map a quotient to the 0-4 rating using the mu +- 0.75 sigma bands.

    Band predicates, evaluated as written (zero always rates 0):
      4: q > mu + 0.75 sigma
      3: mu + 0.75 sigma >= q > mu
      2: mu >= q > mu - 0.75 sigma
      1: mu - 0.75 sigma >= q > 0
      0: q = 0
    The bands partition [0, inf) for every mu >= 0, sigma >= 0, including
    sigma = 0 (bands 2 and 3 collapse to empty) and mu - 0.75 sigma < 0
    (band 1 collapses to empty).
    """
    if quotient < 0:
        raise LaughCorpusError(f"quotient must be >= 0, got {quotient}")
    if quotient == 0:
        return 0
    band = BAND_WIDTH_SIGMAS * stats.sigma
    if quotient > stats.mu + band:
        return 4
    if quotient > stats.mu:
        return 3
    if quotient > stats.mu - band:
        return 2
    return 1


def score_corpus(manifest: CorpusManifest,
                 estimator: str = "population") -> CorpusManifest:
    """Fill quotient, corpus stats, and rating for every clip.

    Idempotent: results depend only on laugh_total_s and duration_s.

    Raises:
        LaughCorpusError: any clip missing laugh_total_s (ids listed).
    """
    missing = sorted(c.id for c in manifest.clips if c.laugh_total_s is None)
    if missing:
        raise LaughCorpusError(
            "clips missing laugh_total_s: " + ", ".join(missing))

    quotients = [humour_quotient(c.laugh_total_s, c.duration_s)
                 for c in manifest.clips]
    stats = corpus_stats(quotients, estimator=estimator)
    clips = [replace(c, quotient=q, rating=bin_rating(q, stats))
             for c, q in zip(manifest.clips, quotients)]
    out = replace(manifest, clips=clips,
                  stats=CorpusStatsRecord(mu=stats.mu, sigma=stats.sigma))
    out.validate()
    return out
