"""CSV ingestion of sites and observations, and rank standardization."""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .copula import CopulaDataset
from .errors import DataError
from .spatial import SiteSet


def read_sites(path):
    """Sites CSV with header ``site_id,x,y``."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["site_id", "x", "y"]:
                raise DataError(f"{path}: header must be site_id,x,y")
            ids, coords = [], []
            for line, row in enumerate(reader, start=2):
                try:
                    coords.append((float(row["x"]), float(row["y"])))
                except (TypeError, ValueError):
                    raise DataError(f"{path}:{line}: bad coordinates") from None
                ids.append(row["site_id"].strip())
    except OSError as exc:
        raise DataError(f"cannot read sites file: {exc}") from None
    if not ids:
        raise DataError(f"{path}: no sites")
    return SiteSet(np.array(coords), tuple(ids))


def write_sites(path, sites):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["site_id", "x", "y"])
        for sid, (x, y) in zip(sites.ids, sites.coords):
            w.writerow([sid, repr(float(x)), repr(float(y))])


@dataclass(frozen=True)
class RawDataset:
    """Observations (NaN marks a missing value) with columns aligned to ``sites``."""

    values: np.ndarray
    sites: SiteSet

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != len(self.sites):
            raise DataError("observations must be n x d with one column per site")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def missing_counts(self):
        return np.isnan(self.values).sum(axis=0)

    def drop_sparse(self, max_missing):
        """Drop columns with more than ``max_missing`` missing values."""
        keep = np.flatnonzero(self.missing_counts <= max_missing)
        if keep.size == 0:
            raise DataError("every column exceeds the missing-value threshold")
        return RawDataset(self.values[:, keep], self.sites.subset(keep))


def read_observations(path, sites, missing=""):
    """
    Observations CSV whose header row lists site ids (any order, each id of
    ``sites`` exactly once). Fields equal to ``missing`` become NaN.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read observations file: {exc}") from None
    if not header:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in header]
    if sorted(header) != sorted(sites.ids) or len(set(header)) != len(header):
        raise DataError(f"{path}: header ids do not match the sites file")
    order = [header.index(sid) for sid in sites.ids]
    values = np.empty((len(rows), len(header)))
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"{path}:{i + 2}: expected {len(header)} fields, got {len(row)}")
        for j, field in enumerate(row):
            f = field.strip()
            if f == missing or (missing != "" and f == ""):
                values[i, j] = np.nan
                continue
            try:
                values[i, j] = float(f)
            except ValueError:
                raise DataError(f"{path}:{i + 2}: bad value {field!r}") from None
    if not np.all(np.isfinite(values[~np.isnan(values)])):
        raise DataError(f"{path}: non-finite observations")
    return RawDataset(values[:, order], sites)


def write_matrix(path, header, values):
    """CSV with a header row; floats in shortest round-trip form."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in values:
            w.writerow([repr(float(v)) for v in row])


def rank_transform(raw):
    """
    Pseudo-uniforms ``rank / (n_j + 1)`` per column (midranks for ties, over
    the ``n_j`` non-missing entries), keeping only rows with no missing value.
    """
    v = raw.values
    u = np.full(v.shape, np.nan)
    for j in range(v.shape[1]):
        ok = ~np.isnan(v[:, j])
        if ok.sum() < 2:
            raise DataError(f"column {raw.sites.ids[j]!r} has fewer than two values")
        u[ok, j] = rankdata(v[ok, j]) / (ok.sum() + 1)
    complete = ~np.isnan(u).any(axis=1)
    if complete.sum() < 2:
        raise DataError("fewer than two complete rows")
    return CopulaDataset(u[complete], raw.sites)
