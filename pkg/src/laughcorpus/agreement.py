"""Chance-corrected agreement statistics.

Cohen's kappa (unweighted/linear/quadratic), Fleiss' kappa,
Krippendorff's alpha (nominal/ordinal/interval, missing entries allowed),
plus the multi-rater report the CLI renders as CSV and text.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import RatingTableError

MISSING = -1

WEIGHTINGS = ("none", "linear", "quadratic")
ALPHA_METRICS = ("nominal", "ordinal", "interval")


@dataclass
class RatingTable:
    """n_items x n_raters integer ratings; MISSING (-1) marks absent cells."""

    ratings: np.ndarray
    n_categories: int = 5
    rater_labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.ratings = np.asarray(self.ratings, dtype=np.int64)
        if self.ratings.ndim != 2 or self.ratings.shape[0] < 1:
            raise RatingTableError("ratings must be a non-empty 2-D matrix")
        if self.n_categories < 2:
            raise RatingTableError("need at least 2 categories")
        present = self.ratings != MISSING
        values = self.ratings[present]
        if values.size and (values.min() < 0 or values.max() >= self.n_categories):
            raise RatingTableError(
                f"ratings must lie in [0, {self.n_categories}); "
                f"found {values.min()}..{values.max()}")
        if not present.any(axis=1).all():
            bad = int(np.flatnonzero(~present.any(axis=1))[0])
            raise RatingTableError(f"item {bad} has no ratings")
        if not self.rater_labels:
            self.rater_labels = [chr(ord("A") + i) if i < 26 else f"R{i}"
                                 for i in range(self.ratings.shape[1])]
        elif len(self.rater_labels) != self.ratings.shape[1]:
            raise RatingTableError(
                f"{len(self.rater_labels)} rater labels for "
                f"{self.ratings.shape[1]} raters")

    @property
    def n_items(self) -> int:
        return self.ratings.shape[0]

    @property
    def n_raters(self) -> int:
        return self.ratings.shape[1]

    @property
    def has_missing(self) -> bool:
        return bool((self.ratings == MISSING).any())


@dataclass
class ConfusionMatrix:
    """k x k co-rating counts for two raters over shared items."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise RatingTableError("confusion matrix must be square")
        if (self.counts < 0).any():
            raise RatingTableError("confusion counts must be non-negative")

    @property
    def n_categories(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(table: RatingTable, rater_a: int, rater_b: int) -> ConfusionMatrix:
    """Counts[i][j] = number of shared items rated i by a and j by b."""
    a = table.ratings[:, rater_a]
    b = table.ratings[:, rater_b]
    shared = (a != MISSING) & (b != MISSING)
    if not shared.any():
        raise RatingTableError(
            f"raters {rater_a} and {rater_b} share no rated items")
    k = table.n_categories
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (a[shared], b[shared]), 1)
    return ConfusionMatrix(counts=counts)


def _weight_matrix(k: int, weights: str) -> np.ndarray:
    if weights not in WEIGHTINGS:
        raise RatingTableError(f"weights {weights!r} not in {WEIGHTINGS}")
    i = np.arange(k)[:, None]
    j = np.arange(k)[None, :]
    if weights == "none":
        return (i != j).astype(np.float64)
    if k == 1:
        return np.zeros((1, 1))
    if weights == "linear":
        return np.abs(i - j) / (k - 1)
    return ((i - j) ** 2) / float((k - 1) ** 2)


def cohen_kappa(cm: ConfusionMatrix, weights: str = "none") -> float:
    """kappa = 1 - sum(w*O) / sum(w*E), E the outer product of marginals.

    Convention: both weighted disagreements zero -> 1.0 (nothing to
    disagree about). Zero expected with observed disagreement is an error.
    """
    if cm.total == 0:
        raise RatingTableError("empty confusion matrix")
    w = _weight_matrix(cm.n_categories, weights)
    observed = cm.counts / cm.total
    expected = np.outer(observed.sum(axis=1), observed.sum(axis=0))
    num = float((w * observed).sum())
    den = float((w * expected).sum())
    if den == 0.0:
        if num == 0.0:
            return 1.0
        raise RatingTableError("degenerate marginals: zero expected "
                               "disagreement with observed disagreement")
    return 1.0 - num / den


def qwk(ratings_a, ratings_b, n_categories: int = 5) -> float:
    """Quadratic-weighted Cohen's kappa between two rating vectors."""
    a = np.asarray(ratings_a, dtype=np.int64)
    b = np.asarray(ratings_b, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 1:
        raise RatingTableError("rating vectors must be equal-length, >= 1")
    table = RatingTable(ratings=np.stack([a, b], axis=1),
                        n_categories=n_categories)
    return cohen_kappa(confusion(table, 0, 1), weights="quadratic")


def fleiss_kappa(table: RatingTable) -> float:
    """Fleiss' kappa for a fixed number of raters per item.

    Raises:
        RatingTableError: missing entries (unequal raters per item), or
            fewer than 2 raters.
    """
    if table.has_missing:
        raise RatingTableError(
            "fleiss_kappa requires every item rated by the same raters "
            "(missing entries found)")
    n = table.n_raters
    if n < 2:
        raise RatingTableError("fleiss_kappa needs >= 2 raters")
    k = table.n_categories
    item_counts = np.zeros((table.n_items, k), dtype=np.int64)
    for c in range(k):
        item_counts[:, c] = (table.ratings == c).sum(axis=1)
    p_item = ((item_counts ** 2).sum(axis=1) - n) / (n * (n - 1))
    p_bar = float(p_item.mean())
    shares = item_counts.sum(axis=0) / (table.n_items * n)
    p_exp = float((shares ** 2).sum())
    if p_exp == 1.0:
        return 1.0
    return (p_bar - p_exp) / (1.0 - p_exp)


def _coincidence_matrix(table: RatingTable) -> np.ndarray:
    """Krippendorff coincidences over all pairable values within items."""
    k = table.n_categories
    coin = np.zeros((k, k), dtype=np.float64)
    for row in table.ratings:
        values = row[row != MISSING]
        m = values.size
        if m < 2:
            continue
        counts = np.bincount(values, minlength=k).astype(np.float64)
        pair = np.outer(counts, counts) - np.diag(counts)
        coin += pair / (m - 1)
    return coin


def _alpha_delta_sq(metric: str, marginals: np.ndarray) -> np.ndarray:
    k = marginals.size
    i = np.arange(k)[:, None]
    j = np.arange(k)[None, :]
    if metric == "nominal":
        return (i != j).astype(np.float64)
    if metric == "interval":
        return ((i - j) ** 2).astype(np.float64)
    # ordinal: squared sum of marginals strictly between the two
    # categories plus half of each endpoint
    cum = np.concatenate(([0.0], np.cumsum(marginals)))
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    between = cum[hi + 1] - cum[lo]
    delta = between - (marginals[lo] + marginals[hi]) / 2.0
    return delta ** 2


def krippendorff_alpha(table: RatingTable, metric: str = "nominal") -> float:
    """alpha = 1 - D_o/D_e over the coincidence matrix; missing allowed.

    Raises:
        RatingTableError: fewer than 2 pairable values, or zero expected
            disagreement alongside observed disagreement.
    """
    if metric not in ALPHA_METRICS:
        raise RatingTableError(f"metric {metric!r} not in {ALPHA_METRICS}")
    coin = _coincidence_matrix(table)
    marginals = coin.sum(axis=1)
    n = marginals.sum()
    if n < 2:
        raise RatingTableError(
            "krippendorff_alpha needs >= 2 pairable ratings in some item")
    delta_sq = _alpha_delta_sq(metric, marginals)
    d_obs = float((coin * delta_sq).sum())
    d_exp = float((np.outer(marginals, marginals) * delta_sq).sum() / (n - 1.0))
    if d_exp == 0.0:
        if d_obs == 0.0:
            return 1.0
        raise RatingTableError("no variation: zero expected disagreement "
                               "with observed disagreement")
    return 1.0 - d_obs / d_exp


@dataclass
class PairwiseKappa:
    rater_a: str
    rater_b: str
    unweighted: float
    quadratic: float


@dataclass
class AgreementReport:
    pairwise: list[PairwiseKappa]
    average_unweighted: float
    average_quadratic: float
    fleiss: float | None
    alpha: float
    alpha_metric: str


def _pair_order(n: int) -> list[tuple[int, int]]:
    if n == 3:
        return [(0, 1), (1, 2), (2, 0)]
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def agreement_report(table: RatingTable,
                     alpha_metric: str = "nominal") -> AgreementReport:
    """All pairwise kappas, their averages, Fleiss' kappa, and alpha.

    Fleiss' kappa is omitted (None) when the table has missing entries,
    since it is undefined for unequal raters per item.
    """
    if table.n_raters < 2:
        raise RatingTableError("agreement report needs >= 2 raters")
    pairwise = []
    for a, b in _pair_order(table.n_raters):
        cm = confusion(table, a, b)
        pairwise.append(PairwiseKappa(
            rater_a=table.rater_labels[a],
            rater_b=table.rater_labels[b],
            unweighted=cohen_kappa(cm, "none"),
            quadratic=cohen_kappa(cm, "quadratic"),
        ))
    return AgreementReport(
        pairwise=pairwise,
        average_unweighted=float(np.mean([p.unweighted for p in pairwise])),
        average_quadratic=float(np.mean([p.quadratic for p in pairwise])),
        fleiss=None if table.has_missing else fleiss_kappa(table),
        alpha=krippendorff_alpha(table, metric=alpha_metric),
        alpha_metric=alpha_metric,
    )


def report_to_csv(report: AgreementReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["statistic", "raters", "value"])
    for p in report.pairwise:
        pair = f"{p.rater_a}-{p.rater_b}"
        writer.writerow(["cohen_kappa_unweighted", pair, repr(p.unweighted)])
        writer.writerow(["cohen_kappa_quadratic", pair, repr(p.quadratic)])
    writer.writerow(["average_pairwise_kappa_unweighted", "",
                     repr(report.average_unweighted)])
    writer.writerow(["average_pairwise_kappa_quadratic", "",
                     repr(report.average_quadratic)])
    writer.writerow(["fleiss_kappa", "",
                     "" if report.fleiss is None else repr(report.fleiss)])
    writer.writerow([f"krippendorff_alpha_{report.alpha_metric}", "",
                     repr(report.alpha)])
    return buf.getvalue()


def report_to_text(report: AgreementReport) -> str:
    lines = ["Pairwise Agreement"]
    for p in report.pairwise:
        lines.append(f"  Annotators {p.rater_a} and {p.rater_b}: "
                     f"unweighted {p.unweighted:.3f}, quadratic {p.quadratic:.3f}")
    lines.append(f"  Average pairwise Cohen's Kappa: "
                 f"unweighted {report.average_unweighted:.3f}, "
                 f"quadratic {report.average_quadratic:.3f}")
    if report.fleiss is None:
        lines.append("Fleiss' Kappa: n/a (missing entries)")
    else:
        lines.append(f"Fleiss' Kappa: {report.fleiss:.3f}")
    lines.append(f"Krippendorff's alpha ({report.alpha_metric}): "
                 f"{report.alpha:.3f}")
    return "\n".join(lines) + "\n"


def load_ratings_csv(path, n_categories: int = 5) -> RatingTable:
    """Read long-format ratings: header item_id,rater_id,rating.

    Missing entries are simply absent rows. Items and raters are ordered
    by sorted id.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != \
                ["item_id", "rater_id", "rating"]:
            raise RatingTableError(
                f"{path}: expected header item_id,rater_id,rating, got {header}")
        entries: dict[tuple[str, str], int] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 3:
                raise RatingTableError(f"{path}:{line_no}: expected 3 fields")
            item, rater, rating_text = row[0], row[1], row[2].strip()
            try:
                rating = int(rating_text)
            except ValueError as exc:
                raise RatingTableError(
                    f"{path}:{line_no}: rating {rating_text!r} is not an "
                    "integer") from exc
            if (item, rater) in entries:
                raise RatingTableError(
                    f"{path}:{line_no}: duplicate rating for item {item!r} "
                    f"by rater {rater!r}")
            entries[(item, rater)] = rating

    if not entries:
        raise RatingTableError(f"{path}: no ratings found")
    items = sorted({item for item, _ in entries})
    raters = sorted({rater for _, rater in entries})
    ratings = np.full((len(items), len(raters)), MISSING, dtype=np.int64)
    for (item, rater), rating in entries.items():
        ratings[items.index(item), raters.index(rater)] = rating
    return RatingTable(ratings=ratings, n_categories=n_categories,
                       rater_labels=raters)
