"""
On-disk curve files and the curve cache.

A curve file is a CSV table with columns t,u1,u2,tau1,tau2,kappa preceded by one header line

    # eqvidx-curve v1 {json metadata}

holding the orbit space, endpoints, marker rows and solver metadata. Floats are written
with 17 significant digits so that a curve read back is bitwise equal to the one written.
"""

import json
import os
import tempfile
import warnings

import numpy as np
import pandas as pd

from eqvidx.errors import DomainError
from eqvidx.profile_solver import COLUMNS, ProfileCurve

SCHEMA = 'eqvidx-curve v1'
DEFAULT_CACHE = '.eqvidx-cache'


def _to_builtin(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f'{type(obj).__name__} is not serializable')


def _atomic_write(path, text):
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix='.tmp-', suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, 'w', newline='') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def curve_to_csv(curve, path=None):
    """
    :param curve: ProfileCurve
    :param path: (str) target file, written atomically; None returns the text only
    :return: (str) file contents
    """
    header = json.dumps(curve.header(), sort_keys=True, default=_to_builtin)
    frame = pd.DataFrame(curve.samples, columns=list(COLUMNS))
    text = f'# {SCHEMA} {header}\n' + frame.to_csv(index=False, float_format='%.17g', lineterminator='\n')
    if path is not None:
        _atomic_write(path, text)
    return text


def plain_csv(curve, path=None):
    """Columns only, for plotting tools."""
    frame = pd.DataFrame(curve.samples, columns=list(COLUMNS))
    text = frame.to_csv(index=False, float_format='%.17g', lineterminator='\n')
    if path is not None:
        _atomic_write(path, text)
    return text


def read_header(path):
    with open(path) as f:
        first = f.readline().rstrip('\n')
    prefix = f'# {SCHEMA} '
    if not first.startswith(prefix):
        raise DomainError(f'{path} does not start with a "{SCHEMA}" header')
    return json.loads(first[len(prefix):])


def curve_from_csv(path):
    """
    :return: ProfileCurve read from a file written by curve_to_csv
    """
    header = read_header(path)
    frame = pd.read_csv(path, skiprows=1, dtype=float, float_precision='round_trip')
    assert tuple(frame.columns) == COLUMNS, f'unexpected columns {tuple(frame.columns)}'
    return ProfileCurve.from_header(frame.to_numpy(dtype=float), header)


class CurveCache:
    """
    Curve files keyed by (family, parameter, tolerance) under a cache directory.
    Writes go through a temporary file and os.replace, so readers never see partial files.
    """

    def __init__(self, root=None, enabled=True):
        """
        :param root: (str) cache directory; defaults to $EQVIDX_CACHE, then ./.eqvidx-cache
        :param enabled: (bool) False turns get/put into no-ops
        """
        self.root = root or os.environ.get('EQVIDX_CACHE', DEFAULT_CACHE)
        self.enabled = enabled
        self.hits, self.misses = 0, 0

    def path(self, family, parameter, tol):
        return os.path.join(self.root, f'{family}-{parameter}-tol{float(tol):.3e}.csv')

    def get(self, family, parameter, tol):
        if not self.enabled:
            return None
        path = self.path(family, parameter, tol)
        if not os.path.exists(path):
            self.misses += 1
            return None
        try:
            curve = curve_from_csv(path)
        except (ValueError, KeyError, AssertionError, DomainError) as e:
            warnings.warn(f'ignoring unreadable cache file {path}: {e}')
            self.misses += 1
            return None
        self.hits += 1
        return curve

    def put(self, curve, family, parameter, tol):
        if self.enabled:
            curve_to_csv(curve, self.path(family, parameter, tol))
        return curve

    def fetch(self, family, parameter, tol, solve):
        """
        Cached curve, or solve() written back to the cache. A fresh solve is re-read from
        its file so that warm and cold runs see the same floats.
        """
        curve = self.get(family, parameter, tol)
        if curve is not None:
            return curve
        curve = solve()
        if not self.enabled:
            return curve
        self.put(curve, family, parameter, tol)
        return curve_from_csv(self.path(family, parameter, tol))
