import numpy as np
import pytest

from eqvidx.dataset import (DEFAULT_CACHE, SCHEMA, CurveCache, curve_from_csv, curve_to_csv, plain_csv,
                            read_header)
from eqvidx.errors import DomainError
from eqvidx.orbit_models import SPHERE4, Edge
from eqvidx.profile_solver import COLUMNS, StopConditions, edge_launch, integrate_profile


@pytest.fixture(scope='module')
def curve():
    init = edge_launch(SPHERE4, Edge.EDGE1, 0.0)
    c = integrate_profile(SPHERE4, init, StopConditions(sample_step=0.01))
    c.meta.update({'family': 'hsiang', 'parameter': 1, 'tol': 1e-10, 'nsteps': np.int64(c.meta['nsteps'])})
    return c


def test_round_trip_is_exact(curve, tmp_path):
    path = tmp_path / 'eq.csv'
    text = curve_to_csv(curve, str(path))
    assert text.startswith(f'# {SCHEMA} ')
    assert path.read_text() == text
    back = curve_from_csv(str(path))
    assert np.array_equal(back.samples, curve.samples)
    assert back.endpoints == curve.endpoints
    for name in curve.markers:
        assert np.array_equal(back.markers[name], curve.markers[name])
    assert back.meta['nsteps'] == int(curve.meta['nsteps'])
    assert back.os is SPHERE4
    assert curve_to_csv(back) == text


def test_header_and_plain_csv(curve, tmp_path):
    path = tmp_path / 'eq.csv'
    curve_to_csv(curve, str(path))
    header = read_header(str(path))
    assert header['model'] == 'sphere4'
    assert header['endpoints'][1]['kind'] == 'edge2'
    plain = plain_csv(curve)
    assert plain.splitlines()[0] == ','.join(COLUMNS)
    assert len(plain.splitlines()) == len(curve.t) + 1


def test_bad_header(tmp_path):
    path = tmp_path / 'bad.csv'
    path.write_text('t,u1,u2,tau1,tau2,kappa\n0,0,0,0,0,0\n')
    with pytest.raises(DomainError):
        curve_from_csv(str(path))


def test_cache_fetch(curve, tmp_path):
    cache = CurveCache(str(tmp_path / 'cache'))
    calls = []

    def solve():
        calls.append(1)
        return curve

    cold = cache.fetch('hsiang', 1, 1e-10, solve)
    warm = cache.fetch('hsiang', 1, 1e-10, solve)
    assert len(calls) == 1
    assert (cache.hits, cache.misses) == (1, 1)
    assert np.array_equal(cold.samples, warm.samples)
    assert cache.path('hsiang', 1, 1e-10).endswith('hsiang-1-tol1.000e-10.csv')
    assert cache.fetch('hsiang', 1, 1e-8, solve) is not None
    assert len(calls) == 2


def test_disabled_cache(curve, tmp_path):
    cache = CurveCache(str(tmp_path / 'off'), enabled=False)
    assert cache.fetch('hsiang', 1, 1e-10, lambda: curve) is curve
    assert not (tmp_path / 'off').exists()
    assert cache.get('hsiang', 1, 1e-10) is None


def test_corrupt_cache_file_is_ignored(curve, tmp_path):
    cache = CurveCache(str(tmp_path))
    path = cache.path('fbms', 2, 1e-10)
    with open(path, 'w') as f:
        f.write(f'# {SCHEMA} {{truncated\n')
    with pytest.warns(UserWarning, match='unreadable cache file'):
        assert cache.get('fbms', 2, 1e-10) is None
    assert cache.misses == 1


def test_cache_location(monkeypatch):
    monkeypatch.delenv('EQVIDX_CACHE', raising=False)
    assert CurveCache().root == DEFAULT_CACHE
    monkeypatch.setenv('EQVIDX_CACHE', '/tmp/elsewhere')
    assert CurveCache().root == '/tmp/elsewhere'
    assert CurveCache('given').root == 'given'
