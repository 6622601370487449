"""Verbal descriptors of evidence against the null on a geometric P-value scale.

The labels are illustrative, not calibrated: the same P-value need not carry
the same weight in every experiment. Only two anchors are fixed by the
default scale (0.05 reads as "trivial", 0.002 as "moderately strong"); the
rest can be replaced from a JSON config.
"""
from dataclasses import dataclass
import json

from .errors import DomainError

DEFAULT_EDGES = (0.1, 0.05, 0.01, 0.001, 0.0001)
DEFAULT_LABELS = (
    "none",
    "trivial",
    "weak",
    "moderately strong",
    "strong",
    "very strong",
)


@dataclass(frozen=True)
class DescriptorScale:
    """Bands of a P-value scale.

    ``band_edges`` are strictly decreasing. Band 0 is ``p >= edges[0]``; band
    i covers ``edges[i] <= p < edges[i - 1]``; the last band is
    ``p < edges[-1]``. Higher band index means stronger evidence.
    """

    band_edges: tuple
    labels: tuple

    def __post_init__(self):
        edges = tuple(float(e) for e in self.band_edges)
        labels = tuple(str(s) for s in self.labels)
        if not edges:
            raise DomainError("a scale needs at least one edge")
        for e in edges:
            if not (0.0 < e < 1.0):
                raise DomainError(f"band edges must lie in (0, 1), got {e!r}")
        if any(b >= a for a, b in zip(edges, edges[1:])):
            raise DomainError("band edges must be strictly decreasing")
        if len(labels) != len(edges) + 1:
            raise DomainError(
                f"need {len(edges) + 1} labels for {len(edges)} edges, got {len(labels)}"
            )
        object.__setattr__(self, "band_edges", edges)
        object.__setattr__(self, "labels", labels)

    def band_index(self, p):
        if not (0.0 <= p <= 1.0):
            raise DomainError(f"P-value must lie in [0, 1], got {p!r}")
        for i, edge in enumerate(self.band_edges):
            if p >= edge:
                return i
        return len(self.band_edges)

    def bands(self):
        """(lower, upper, label) rows from weakest to strongest."""
        uppers = (1.0,) + self.band_edges
        lowers = self.band_edges + (0.0,)
        return list(zip(lowers, uppers, self.labels))

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(tuple(d["edges"]), tuple(d["labels"]))
        except KeyError as exc:
            raise DomainError(f"scale config is missing {exc.args[0]!r}") from None

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {"edges": list(self.band_edges), "labels": list(self.labels)}


def default_scale():
    return DescriptorScale(DEFAULT_EDGES, DEFAULT_LABELS)


def describe(p, scale=None):
    """Label for the band containing ``p``."""
    scale = scale or default_scale()
    return scale.labels[scale.band_index(p)]
