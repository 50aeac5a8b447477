"""Content-keyed on-disk cache of union spectra.

One JSON file per (model, p, q, tol, code version).  Writes go to a temp file
in the same directory followed by an atomic rename, so concurrent runs never
observe a partial entry.  Anything unreadable is a miss plus a warning.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import time
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .bands import BandSet
from .model import CoefficientFamily
from .spectral import union_spectrum

log = logging.getLogger(__name__)

ENV_VAR = "HARPERLAB_CACHE_DIR"
DEFAULT_DIR = ".harperlab-cache"


class CacheWarning(UserWarning):
    pass


def cache_dir(explicit=None) -> Path:
    return Path(explicit or os.environ.get(ENV_VAR) or DEFAULT_DIR)


def cache_key(model: dict, p: int, q: int, tol: float, version: str = __version__) -> str:
    doc = json.dumps({"model": model, "p": p, "q": q, "tol": repr(float(tol)), "version": version},
                     sort_keys=True)
    return hashlib.sha256(doc.encode()).hexdigest()


@dataclass
class BandCache:
    root: Path
    version: str = __version__

    def __post_init__(self):
        self.root = Path(self.root)

    def path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> BandSet | None:
        path = self.path(key)
        if not path.exists():
            return None
        try:
            doc = json.loads(path.read_text())
            if doc.get("version") != self.version:
                return None
            arr = np.asarray(doc["bands"], dtype=float).reshape(-1, 2)
            bs = BandSet(arr, float(doc.get("merge_tol", 0.0)))
            if not bs.is_normalized() or not np.all(np.isfinite(arr)):
                raise ValueError("bands are not sorted and disjoint")
            return bs
        except (ValueError, KeyError, TypeError) as exc:
            warnings.warn(f"ignoring corrupt cache entry {path.name}: {exc}", CacheWarning, stacklevel=2)
            return None

    def put(self, key: str, bands: BandSet, meta: dict) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        doc = dict(meta)
        doc.update(version=self.version, created=time.time(), merge_tol=bands.tolerance, bands=bands.to_list())
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(doc, fh)
            os.replace(tmp, self.path(key))
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise

    def union_spectrum(self, family: CoefficientFamily, frac, tol: float) -> BandSet:
        """Cached front end to :func:`spectral.union_spectrum`."""
        frac = Fraction(frac)
        model = family.cache_key()
        key = cache_key(model, frac.numerator, frac.denominator, tol, self.version)
        hit = self.get(key)
        if hit is not None:
            return hit
        bs = union_spectrum(family, frac, tol)
        self.put(key, bs, {"model": model, "lambda": family.lam, "p": frac.numerator,
                           "q": frac.denominator, "tol": tol})
        return self.get(key) or bs
