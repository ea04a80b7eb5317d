"""Evaluation of a dendrogram against measured data, and iterative reweighting.

Segment lengths are additive, so restored minus measured distances behave
like ordinary residuals: per language we take the spread of its residual row
as a reliability score and feed inverse dispersions back into the next build
pass as weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import builder, chronometry
from .errors import DomainError
from .model import (
    CoincidenceMatrix,
    Dendrogram,
    DistanceMatrix,
    LanguageSet,
    WeightVector,
    restore_distance_matrix,
)
from .modes import PAPER, PRECISE, check_mode, quantize

DISPERSION_FLOOR = 0.5  # svodesh^2; keeps weights finite on perfect fits
WEIGHT_MEAN = 10.0


@dataclass(frozen=True)
class EvaluationReport:
    """Restored distances, per-pair residuals, per-language dispersions."""

    languages: LanguageSet
    restored: DistanceMatrix
    residuals: np.ndarray  # restored - measured, NaN where measured absent
    dispersions: tuple[float, ...]
    worst_pairs: tuple[tuple[str, str, float], ...]

    def dispersion(self, label: str) -> float:
        return self.dispersions[self.languages.index(label)]

    def max_abs_residual(self) -> float:
        finite = self.residuals[~np.isnan(self.residuals)]
        return float(np.max(np.abs(finite))) if finite.size else 0.0


@dataclass(frozen=True)
class BuildPass:
    """One pass of the iterated build."""

    dendrogram: Dendrogram
    weights: WeightVector
    report: EvaluationReport
    weight_change: float | None  # max relative change vs the previous pass


@dataclass(frozen=True)
class IterationTrace:
    passes: tuple[BuildPass, ...]

    @property
    def final(self) -> Dendrogram:
        return self.passes[-1].dendrogram


@dataclass(frozen=True)
class PerturbationRow:
    delta: float
    coincidence: float
    depth: float
    lateral: float
    status: str
    flags: tuple[str, ...]


@dataclass(frozen=True)
class PerturbationReport:
    perturbed_pair: tuple[str, str]
    tracked_pair: tuple[str, str]
    rows: tuple[PerturbationRow, ...]  # first row is the unperturbed baseline


def evaluate(dendrogram: Dendrogram, measured: DistanceMatrix) -> EvaluationReport:
    """Residuals of the dendrogram's restored distances against measured ones.

    The dispersion of a language is the sample variance of its residual row
    about the row mean: the reconstruction is unbiased on average, so bias
    is removed before spread is measured.
    """
    langs = dendrogram.languages
    if set(measured.languages.labels) != set(langs.labels):
        raise DomainError("measured matrix covers a different language set")
    order = [measured.languages.index(lab) for lab in langs.labels]
    measured_values = measured.values[np.ix_(order, order)]
    restored = restore_distance_matrix(dendrogram)
    residuals = restored.values - measured_values
    np.fill_diagonal(residuals, 0.0)
    k = len(langs)
    dispersions = []
    for i in range(k):
        row = np.delete(residuals[i], i)
        row = row[~np.isnan(row)]
        dispersions.append(float(np.var(row, ddof=1)) if row.size >= 2 else 0.0)
    pairs = []
    for i in range(k):
        for j in range(i + 1, k):
            if not np.isnan(residuals[i, j]):
                pairs.append((langs.labels[i], langs.labels[j], float(residuals[i, j])))
    pairs.sort(key=lambda p: (-abs(p[2]), p[0], p[1]))
    residuals.setflags(write=False)
    return EvaluationReport(
        languages=langs,
        restored=restored,
        residuals=residuals,
        dispersions=tuple(dispersions),
        worst_pairs=tuple(pairs[:3]),
    )


def weights_from_dispersions(
    languages: LanguageSet,
    dispersions,
    mode: str = PRECISE,
    floor: float = DISPERSION_FLOOR,
    target_mean: float = WEIGHT_MEAN,
) -> WeightVector:
    """Inverse-dispersion weights, normalized to a mean of ``target_mean``.

    Only ratios matter downstream; the normalization keeps integer-mode
    weights in a legible range.  Dispersions below ``floor`` are floored so
    perfectly fitted languages do not get infinite weight.
    """
    check_mode(mode)
    disp = np.asarray(list(dispersions), dtype=float)
    if disp.shape != (len(languages),):
        raise DomainError("one dispersion per language required")
    if (disp < 0).any() or not np.isfinite(disp).all():
        raise DomainError("dispersions must be finite and >= 0")
    inverse = 1.0 / np.maximum(disp, floor)
    scaled = target_mean * inverse / inverse.mean()
    if mode == PAPER:
        scaled = np.maximum(1.0, np.array([quantize(w, PAPER) for w in scaled]))
    return WeightVector(languages, tuple(float(w) for w in scaled))


def iterate_build(
    measured: DistanceMatrix,
    max_passes: int = 3,
    tol: float = 0.05,
    mode: str = PRECISE,
    external_means: str = "weighted",
) -> IterationTrace:
    """Build, evaluate, reweight, repeat.

    Pass 1 is unweighted; each subsequent pass uses inverse-dispersion
    weights from the previous evaluation.  Stops at ``max_passes`` or when
    the maximum relative weight change drops below ``tol``.
    """
    if max_passes < 1:
        raise DomainError("max_passes must be >= 1")
    langs = measured.languages
    weights = WeightVector.unit(langs)
    passes: list[BuildPass] = []
    change: float | None = None
    for _ in range(max_passes):
        dendrogram = builder.build(
            measured, weights, mode=mode, external_means=external_means
        )
        report = evaluate(dendrogram, measured)
        passes.append(BuildPass(dendrogram, weights, report, change))
        if len(langs) < 3:
            break  # one residual per row: no degrees of freedom to reweight
        next_weights = weights_from_dispersions(langs, report.dispersions, mode)
        change = max(
            abs(nw - w) / w for nw, w in zip(next_weights.values, weights.values)
        )
        if change < tol:
            break
        weights = next_weights
    return IterationTrace(tuple(passes))


def _tracked_junction(dendrogram: Dendrogram, pair: tuple[str, str]):
    node = dendrogram.lca_junction(
        dendrogram.languages.index(pair[0]), dendrogram.languages.index(pair[1])
    )
    return dendrogram.junction_at(node)


def perturb(
    measured: CoincidenceMatrix,
    pair: tuple[str, str],
    deltas,
    track: tuple[str, str] | None = None,
    mode: str = PRECISE,
    external_means: str = "weighted",
) -> PerturbationReport:
    """Rebuild the dendrogram with one coincidence nudged by each delta.

    Reports the geometry of the junction where the ``track`` pair (default:
    the perturbed pair) first shares a cluster, next to the baseline.
    """
    track = tuple(track) if track is not None else tuple(pair)
    baseline_c = measured.value(*pair)
    rows = []
    for delta in (0.0, *deltas):
        c = baseline_c + delta
        if not (0 < c <= 100):
            raise DomainError(
                f"perturbed coincidence {c} for pair {pair} leaves (0, 100]"
            )
        matrix = measured.with_value(pair[0], pair[1], c) if delta else measured
        distances = chronometry.matrix_to_distances(matrix, mode)
        dendrogram = builder.build(
            distances, None, mode=mode, external_means=external_means
        )
        jn = _tracked_junction(dendrogram, track)
        rows.append(
            PerturbationRow(
                delta=float(delta),
                coincidence=float(c),
                depth=jn.depth,
                lateral=jn.lateral,
                status=jn.status,
                flags=jn.flags,
            )
        )
    return PerturbationReport(tuple(pair), track, tuple(rows))
