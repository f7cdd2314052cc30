"""
Index reports: the full pipeline from profile curve to equivariant eigenvalue counts,
partition bounds and known-field oracles, with pass/fail verdicts, JSON output, the
curve cache and the ``eqvidx`` command line.

    eqvidx hsiang solve|index --m M
    eqvidx fbms solve|index --ell L
    eqvidx partition demo
    eqvidx verify [--quick]

Exit codes: 0 success, 2 verification failure, 3 numerical budget exhausted, 4 usage error.
"""

import argparse
import contextlib
import dataclasses
import json
import math
import os
import re
import sys
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from eqvidx import arg
from eqvidx.callbacks import Callback, LoggerCallback
from eqvidx.dataset import DEFAULT_CACHE, CurveCache, plain_csv
from eqvidx.errors import (EXIT_OK, EXIT_VERIFICATION, EqvidxError, PreconditionError,
                           UsageError)
from eqvidx.jacobi_reduce import (BC, DIRICHLET, NEUMANN, FieldTag, ReducedOperator,
                                  field_eigenvalue, known_field, minimality_trace, reduce_jacobi)
from eqvidx.loggers import get_logger
from eqvidx.orbit_models import BALL4, SPHERE4
from eqvidx.partition_bounds import mr_bounds, robin_dirichlet_compare, split, split_mixed
from eqvidx.profile_solver import (RADIUS_RATIO_LIMIT, ShootingSetup, alencar_summary,
                                   curvature_residual, fd_curvature_residual, find_markers,
                                   shoot_hsiang, solve_alencar, symmetry_report, truncate_rescale)
from eqvidx.sturm_spectral import (count_below, eigen_residual, eigenpairs, lowest_eigenvalue,
                                   nodal_domains)

VERSION = '0.1.0'
SCHEMA_VERSION = 1
# non-totally-geodesic minimal hypersurfaces of S^4 have index at least this
KNOWN_INDEX_BASELINE = 6


# ---------------------------------------------------------------- configuration
@dataclass
class IndexConfig:
    """
    Every tunable of the pipeline. Precedence: these defaults < $EQVIDX_CACHE (cache_dir)
    < key=value config file < command line flags.
    """
    tol: float = 1e-10
    mesh: int = 400
    target_tol: float = 1e-7
    max_m: int = 8
    max_ell: int = 6
    scan_points: int = 200
    launch_offset: float = 1e-4
    edge_stop: float = 1e-4
    bounce_margin: float = 0.1
    sample_step: float = 2e-3
    max_length: float = 40.0
    max_steps: int = 200000
    integrator: str = 'DOP853'
    max_refinements: int = 6
    oracle_levels: int = 3
    eigen_tol: float = 1e-5
    lambda_grid_points: int = 50
    random_instances: int = 200
    seed: int = 408
    cache_dir: str = DEFAULT_CACHE
    use_cache: bool = True
    logger: str = 'stdout'
    savedir: str = 'eqvidx-runs'
    verbosity: int = 1
    quick: bool = False

    def shooting_setup(self):
        return ShootingSetup(scan_points=self.scan_points, tol=self.tol, launch_offset=self.launch_offset,
                             edge_stop=self.edge_stop, bounce_margin=self.bounce_margin,
                             max_crossings=max(9, self.max_m + 1), max_length=self.max_length,
                             sample_step=self.sample_step, method=self.integrator, max_steps=self.max_steps)

    def spectral(self):
        return dict(target_tol=self.target_tol, n=self.mesh, max_refinements=self.max_refinements)

    def update(self, values):
        names = {f.name: f for f in dataclasses.fields(self)}
        for key, value in values.items():
            if key not in names:
                raise UsageError(f'unknown configuration key {key!r}')
            setattr(self, key, _coerce(names[key], value))
        return self

    @classmethod
    def from_file(cls, path, base=None):
        """
        Flat ``key = value`` lines; ``#`` starts a comment.
        """
        values = {}
        with open(path) as f:
            for lineno, line in enumerate(f, 1):
                line = line.split('#', 1)[0].strip()
                if not line:
                    continue
                if '=' not in line:
                    raise UsageError(f'{path}:{lineno}: expected key=value, got {line!r}')
                key, value = (s.strip() for s in line.split('=', 1))
                values[key] = value
        return (base if base is not None else cls()).update(values)

    @classmethod
    def resolve(cls, args=None, environ=None):
        environ = os.environ if environ is None else environ
        config = cls()
        if environ.get('EQVIDX_CACHE'):
            config.cache_dir = environ['EQVIDX_CACHE']
        if args is None:
            return config
        if getattr(args, 'config', None):
            if not os.path.exists(args.config):
                raise UsageError(f'configuration file {args.config} not found')
            cls.from_file(args.config, config)
        flags = {k: getattr(args, k, None) for k in ('tol', 'mesh', 'target_tol', 'integrator', 'cache_dir',
                                                     'logger', 'savedir', 'verbosity')}
        config.update({k: v for k, v in flags.items() if v is not None})
        if getattr(args, 'no_cache', False):
            config.use_cache = False
        if getattr(args, 'quick', False):
            config.quick = True
        return config


def _coerce(f, value):
    if not isinstance(value, str):
        return value
    kind = f.type
    if kind is bool:
        if value.lower() not in ('1', '0', 'true', 'false', 'yes', 'no'):
            raise UsageError(f'{f.name} expects a boolean, got {value!r}')
        return value.lower() in ('1', 'true', 'yes')
    try:
        return kind(value)
    except ValueError:
        raise UsageError(f'{f.name} expects {kind.__name__}, got {value!r}') from None


# ---------------------------------------------------------------- serialization
def to_jsonable(obj):
    """Plain JSON types; non-finite floats become None."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


_FLOAT_MARK = '\x00float:'
_FLOAT_TOKEN = re.compile(r'"\\u0000float:([^"]*)"')


def _float_literal(x):
    text = format(x, '.17g')
    return text + '.0' if text.lstrip('-').isdigit() else text


def _mark_floats(obj):
    if isinstance(obj, dict):
        return {k: _mark_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_mark_floats(v) for v in obj]
    if isinstance(obj, float):
        return _FLOAT_MARK + _float_literal(obj)
    return obj


def dumps(report):
    """
    Deterministic JSON: sorted keys, every float written with 17 significant digits
    (``format(x, '.17g')``), NaN and inf as null.
    """
    text = json.dumps(_mark_floats(to_jsonable(report)), sort_keys=True, indent=2, allow_nan=False)
    return _FLOAT_TOKEN.sub(lambda m: m.group(1), text) + '\n'


def without_timing(report):
    report = to_jsonable(report)
    report.pop('timing', None)
    return report


def reports_equal(a, b):
    """Equality of two reports ignoring the timing field."""
    return dumps(without_timing(a)) == dumps(without_timing(b))


# ---------------------------------------------------------------- reports
@dataclass
class IndexReport:
    """
    :param family: 'hsiang' or 'fbms'
    :param counts: eigenvalue counts at the threshold of the family (-3 or 0)
    :param bounds: assembled index bounds and partition bounds
    :param verdicts: name -> bool, one per checked statement
    :param details: solver data (shooting solutions, markers, pieces, comparisons)
    """
    family: str
    parameter: int
    eigenvalues: list = field(default_factory=list)
    error_estimates: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    mesh: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    version: str = VERSION
    timing: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.verdicts.values())

    def to_dict(self):
        out = to_jsonable(self)
        out['schema'] = SCHEMA_VERSION
        return out


class Pipeline:
    """
    Runs named stages, tags failures with the stage name and reports begin/end events
    to callbacks.
    """
    def __init__(self, config, callbacks=(), cache=None, artifact_name='report.json'):
        self.config = config
        self.callbacks = list(callbacks) if callbacks else [Callback()]
        self.cache = cache if cache is not None else CurveCache(config.cache_dir, config.use_cache)
        self.artifact_name = artifact_name
        self.timing = {}
        for cb in self.callbacks:
            cb.begin_report(self)

    @staticmethod
    def serialize(report):
        return dumps(report.to_dict() if isinstance(report, IndexReport) else report)

    @contextlib.contextmanager
    def stage(self, name):
        output = {}
        start = time.time()
        for cb in self.callbacks:
            cb.begin_stage(self, name)
        try:
            yield output
        except EqvidxError as e:
            e.stage = e.stage or name
            for cb in self.callbacks:
                cb.stage_failed(self, name, e)
            raise
        self.timing[name] = time.time() - start
        for cb in self.callbacks:
            cb.end_stage(self, name, output)

    def finish(self, report):
        report.timing = dict(self.timing)
        for cb in self.callbacks:
            cb.end_report(self, report)
        return report

    def curve(self, family, parameter, solve):
        return self.cache.fetch(family, parameter, self.config.tol, solve)


def equator_spectrum(k=3):
    """Invariant spectrum of the totally geodesic S^3: k(k+2) - 3 over even k."""
    return [float(j * (j + 2) - 3) for j in range(0, 2 * k, 2)]


def clifford_spectrum(k=4):
    """Invariant spectrum of S^2(sqrt(2/3)) x S^1(sqrt(1/3)): 3j(j+1)/2 - 6."""
    return [1.5 * j * (j + 1) - 6.0 for j in range(k)]


def converges(oracle, order=1.9, floor=1e-9):
    """
    Observed order at least ``order`` on every level pair whose finer residual is above
    ``floor``; pairs already at the floor are resolved and carry no order.
    """
    res = oracle['residual']
    if max(res) <= floor:
        return True
    judged = [p for p, fine in zip(oracle['order'], res[1:]) if fine > floor]
    return all(p >= order for p in judged)


def _check_range(name, value, top):
    if not 1 <= value <= top:
        raise PreconditionError(f'{name}={value} outside 1..{top}')


def _count_gap(res, at, config):
    """Threshold band for counts on the finest mesh of an eigenpair solve."""
    return max(config.eigen_tol, 100.0 * float(res.error_estimate[at]))


def _piece_eigenvalues(pieces, count, config):
    out = []
    for piece in pieces:
        res = eigenpairs(piece, count=count, **config.spectral())
        out.append({'a': piece.a, 'b': piece.b, 'left': str(piece.bc_left), 'right': str(piece.bc_right),
                    'eigenvalues': res.eigenvalues.tolist(),
                    'simple': [res.is_simple(i) for i in range(count)]})
    return out


def solve_hsiang_curve(m, config=None, pipeline=None):
    config = config or IndexConfig()
    pipeline = pipeline or Pipeline(config)
    return pipeline.curve('hsiang', m, lambda: shoot_hsiang(m, config.tol, config.shooting_setup()))


def hsiang_solve_summary(curve):
    nodal = find_markers(curve)
    return {'family': 'hsiang', 'parameter': curve.meta['parameter'], 's0': curve.meta['s0'],
            'length': curve.L, 'solutions': curve.meta.get('solutions', []),
            'endpoints': curve.endpoints,
            'markers': {'crossings': nodal.crossings, 'nu5_zeros': nodal.zeros, 'nu5_criticals': nodal.criticals},
            'symmetry': symmetry_report(curve),
            'residuals': {'curvature': curvature_residual(curve), 'curvature_fd': fd_curvature_residual(curve),
                          'minimality_trace': minimality_trace(curve)},
            'version': VERSION}


def hsiang_report(m, config=None, callbacks=(), cache=None):
    """
    Equivariant index data of H_m: direct counts at -3, partition bounds at both cut
    families, the NU5 oracle and the assembled index bounds.

    :return: IndexReport
    """
    config = config or IndexConfig()
    _check_range('m', m, config.max_m)
    pipe = Pipeline(config, callbacks, cache, artifact_name=f'hsiang-{m}.json')
    lam = field_eigenvalue(FieldTag.NU5)
    report = IndexReport('hsiang', m)

    with pipe.stage('solve') as out:
        curve = solve_hsiang_curve(m, config, pipe)
        nodal = find_markers(curve)
        out['length'] = curve.L
        report.details.update({'s0': curve.meta['s0'], 'solutions': curve.meta.get('solutions', []),
                               'markers': {'crossings': nodal.crossings, 'nu5_zeros': nodal.zeros,
                                           'nu5_criticals': nodal.criticals},
                               'symmetry': symmetry_report(curve)})

    with pipe.stage('reduce') as out:
        op = reduce_jacobi(SPHERE4, curve)
        report.residuals['minimality_trace'] = out['minimality_trace'] = minimality_trace(curve)
        report.residuals['curvature'] = curvature_residual(curve)

    with pipe.stage('spectrum') as out:
        # m - 1 eigenvalues below -3, -3 itself and its upper neighbour
        res = eigenpairs(op, count=m + 1, **config.spectral())
        at = res.nearest(lam)
        counts = dict(mesh=res.pencil.mesh, gap=_count_gap(res, at, config), on_threshold='snap')
        strict = count_below(op, lam, True, **counts)
        nonstrict = count_below(op, lam, False, **counts)
        report.eigenvalues, report.error_estimates = res.eigenvalues.tolist(), res.error_estimate.tolist()
        report.counts = {'strict_below_minus3': strict, 'multiplicity_at_minus3': nonstrict - strict,
                         'eigenvalue_at_minus3': float(res.eigenvalues[at]), 'simple_at_minus3': res.is_simple(at),
                         'nodal_domains_at_minus3': res.nodal_counts[at]}
        report.mesh = {'elements': res.mesh_size, 'h': res.h, 'base_elements': config.mesh,
                       'target_tol': config.target_tol, 'integration_tol': config.tol}
        out['strict_below'] = strict

    with pipe.stage('partition') as out:
        lower = mr_bounds(op, nodal.zeros, lam, config.mesh, on_threshold='snap')
        upper = mr_bounds(op, nodal.criticals, lam, config.mesh, on_threshold='snap')
        dirichlet_pieces = _piece_eigenvalues(split(op, nodal.zeros)['D'], 1, config) if m > 1 else []
        neumann_pieces = _piece_eigenvalues(split(op, nodal.criticals)['N'], 2, config) if m > 2 else []
        mixed_pieces = (_piece_eigenvalues(split_mixed(op, nodal.criticals, nodal.zeros), 1, config)
                        if m > 2 else [])
        report.bounds.update({'mr_lower_at_nu5_zeros': lower.mr_lower, 'mr_upper_at_nu5_criticals': upper.mr_upper})
        report.details['partition'] = {'nu5_zeros': lower, 'nu5_criticals': upper,
                                       'dirichlet_pieces': dirichlet_pieces, 'neumann_pieces': neumann_pieces,
                                       'mixed_pieces': mixed_pieces}
        out.update({'mr_lower': lower.mr_lower, 'mr_upper': upper.mr_upper})

    with pipe.stage('oracle') as out:
        nu5 = known_field(SPHERE4, curve, FieldTag.NU5)
        oracle = eigen_residual(op, nu5, lam, n=config.mesh, levels=config.oracle_levels)
        report.residuals['nu5'] = oracle
        report.details['nu5_nodal_domains'] = nodal_domains(nu5.values)
        out['nu5_residual'] = oracle['residual'][-1]

    with pipe.stage('assemble'):
        tol = config.eigen_tol
        equivariant = nonstrict
        # the five-dimensional eigenspace at -3 contains the invariant NU5 counted in equivariant
        total = equivariant + 5 - 1
        report.bounds.update({'equivariant_index': equivariant, 'total_index': total,
                              'known_baseline': KNOWN_INDEX_BASELINE,
                              'saturates_baseline': total == KNOWN_INDEX_BASELINE})
        pieces_ok = all(abs(p['eigenvalues'][0] - lam) <= tol for p in dirichlet_pieces + mixed_pieces)
        pieces_ok &= all(abs(p['eigenvalues'][1] - lam) <= tol and p['simple'][1] for p in neumann_pieces)
        report.verdicts = {
            'strict_count_is_m_minus_1': strict == m - 1,
            'minus3_is_simple': nonstrict - strict == 1 and report.counts['simple_at_minus3'],
            'minus3_is_eigenvalue': abs(report.counts['eigenvalue_at_minus3'] - lam) <= tol,
            'partition_lower_is_m_minus_1': lower.mr_lower == m - 1 and lower.sandwich_ok,
            'partition_upper_is_m': upper.mr_upper == m and upper.sandwich_ok,
            'piece_eigenvalues': bool(pieces_ok),
            'nu5_nodal_domains': report.details['nu5_nodal_domains'] == m,
            'nu5_residual_order': converges(oracle),
            'nu5_residual_small': oracle['residual'][-1] <= 1e-6,
            'total_index_identity': total == m + 4,
        }
        if m == 1:
            expected = equator_spectrum(2)
            report.details['closed_form'] = {'name': 'equator', 'eigenvalues': expected}
            report.details['totally_geodesic'] = True
            report.verdicts['equator_spectrum'] = bool(np.allclose(report.eigenvalues[:2], expected, rtol=0, atol=1e-6))
        elif m == 2:
            # compared, not judged
            report.details['closed_form'] = {'name': 'clifford_product', 'eigenvalues': clifford_spectrum(4)}
    return pipe.finish(report)


def solve_fbms_curves(ell, config=None, pipeline=None):
    """
    :return: (Alencar profile up to its ell-th theta-critical point, truncated and rescaled A_ell)
    """
    config = config or IndexConfig()
    pipeline = pipeline or Pipeline(config)
    alencar = pipeline.curve('alencar', ell, lambda: solve_alencar(
        ell, config.tol, config.launch_offset, config.sample_step, config.integrator, config.max_steps))
    return alencar, truncate_rescale(alencar, ell)


def fbms_solve_summary(alencar, curve):
    end = curve.endpoints[1]
    return {'family': 'fbms', 'parameter': curve.meta['parameter'], 'alencar': alencar_summary(alencar),
            'r_ell': curve.meta['r_ell'], 'length': curve.L, 'free_end_incidence': end.incidence,
            'free_end_defect': end.defect, 'version': VERSION}


def fbms_report(ell, config=None, callbacks=(), cache=None):
    """
    Equivariant index data of the free boundary solid torus A_ell: Dirichlet and Robin
    spectra at 0, the x.nu witness and the Robin/Dirichlet comparison.

    :return: IndexReport
    """
    config = config or IndexConfig()
    _check_range('ell', ell, config.max_ell)
    pipe = Pipeline(config, callbacks, cache, artifact_name=f'fbms-{ell}.json')
    lam = field_eigenvalue(FieldTag.X_DOT_NU)
    report = IndexReport('fbms', ell)

    with pipe.stage('solve') as out:
        alencar, curve = solve_fbms_curves(ell, config, pipe)
        report.details['alencar'] = alencar_summary(alencar)
        report.details['r_ell'] = out['r_ell'] = curve.meta['r_ell']

    with pipe.stage('reduce') as out:
        op_rob = reduce_jacobi(BALL4, curve)
        op_dir = op_rob.with_bc(right=DIRICHLET)
        report.residuals['minimality_trace'] = out['minimality_trace'] = minimality_trace(curve)

    with pipe.stage('spectrum') as out:
        dres = eigenpairs(op_dir, count=ell + 1, **config.spectral())
        rres = eigenpairs(op_rob, count=ell + 1, **config.spectral())
        at = dres.nearest(lam)
        counts = dict(mesh=dres.pencil.mesh, gap=_count_gap(dres, at, config), on_threshold='snap')
        dir_strict = count_below(op_dir, lam, True, **counts)
        dir_nonstrict = count_below(op_dir, lam, False, **counts)
        rob_at = rres.nearest(lam)
        rob_negative = count_below(op_rob, lam, True, mesh=rres.pencil.mesh, gap=_count_gap(rres, rob_at, config),
                                   on_threshold='snap')
        report.eigenvalues, report.error_estimates = dres.eigenvalues.tolist(), dres.error_estimate.tolist()
        report.details['robin_eigenvalues'] = rres.eigenvalues.tolist()
        report.counts = {'dirichlet_strict_negative': dir_strict, 'dirichlet_nonpositive_count': dir_nonstrict,
                         'robin_negative_count': rob_negative, 'dirichlet_eigenvalue_at_zero': float(dres.eigenvalues[at]),
                         'nodal_domains_at_zero': dres.nodal_counts[at]}
        report.mesh = {'elements': dres.mesh_size, 'h': dres.h, 'base_elements': config.mesh,
                       'target_tol': config.target_tol, 'integration_tol': config.tol}
        out['robin_negative'] = rob_negative

    with pipe.stage('partition') as out:
        cuts = curve.markers['critical'][:, 0]
        partition = mr_bounds(op_dir, cuts, lam, config.mesh, on_threshold='snap')
        comparison = robin_dirichlet_compare(op_dir, op_rob, n_points=config.lambda_grid_points, n=config.mesh)
        report.bounds['mr_lower_at_criticals'] = partition.mr_lower
        report.details['partition'] = partition
        report.details['comparison'] = {'r': comparison.r, 'lambdas': comparison.lambdas,
                                        'robin_strict': comparison.robin_strict,
                                        'dirichlet_nonstrict': comparison.dirichlet_nonstrict,
                                        'violations': comparison.violations}
        out['violations'] = len(comparison.violations)

    with pipe.stage('oracle') as out:
        witness = known_field(BALL4, curve, FieldTag.X_DOT_NU)
        oracle = eigen_residual(op_dir, witness, lam, n=config.mesh, levels=config.oracle_levels)
        report.residuals['x_dot_nu'] = oracle
        report.details['x_dot_nu_nodal_domains'] = nodal_domains(witness.values)
        report.details['x_dot_nu_positive_at_start'] = bool(witness.values[1] > 0)
        out['x_dot_nu_residual'] = oracle['residual'][-1]

    with pipe.stage('assemble'):
        report.bounds['equivariant_index'] = rob_negative
        report.verdicts = {
            'robin_negative_at_least_ell': rob_negative >= ell,
            'dirichlet_zero_is_eigenvalue': abs(report.counts['dirichlet_eigenvalue_at_zero'] - lam) <= config.eigen_tol,
            'dirichlet_strict_is_ell_minus_1': dir_strict == ell - 1,
            'dirichlet_nonpositive_is_ell': dir_nonstrict == ell,
            'witness_nodal_domains': report.details['x_dot_nu_nodal_domains'] == ell,
            'robin_dominates_dirichlet': comparison.passed,
            'partition_sandwich': partition.sandwich_ok and partition.mr_lower == ell - 1,
        }
    return pipe.finish(report)


def partition_demo(n=400):
    """
    Partition bounds of V = 1, q = 2 on [0, pi] with Dirichlet ends cut at pi/2 at
    threshold 0, and the Robin/Dirichlet comparison on the unit interval with r = 1.
    """
    interval = ReducedOperator.from_functions(1.0, 2.0, 0.0, math.pi, DIRICHLET, DIRICHLET, 'demo-interval')
    partition = mr_bounds(interval, [math.pi / 2], 0.0, n)
    unit_rob = ReducedOperator.from_functions(1.0, 0.0, 0.0, 1.0, NEUMANN, BC.robin(1.0), 'demo-unit')
    unit_dir = dataclasses.replace(unit_rob, bc_right=DIRICHLET)
    comparison = robin_dirichlet_compare(unit_dir, unit_rob, n=n)
    return {'partition': partition, 'sandwich_ok': partition.sandwich_ok,
            'comparison': comparison, 'comparison_passed': comparison.passed,
            'robin_negative_at_zero': count_below(unit_rob, 0.0, True, n=n),
            'dirichlet_nonpositive_at_zero': count_below(unit_dir, 0.0, False, n=n),
            'version': VERSION}


# ---------------------------------------------------------------- verification
def random_operator(rng):
    """Smooth positive weight, smooth potential and random outer conditions on a random interval."""
    length = rng.uniform(1.0, 4.0)
    cv, wv = rng.normal(0.0, 0.7, 2), rng.uniform(0.5, 3.0, 2)
    cq, wq = rng.normal(0.0, 3.0, 3), rng.uniform(0.3, 4.0, 3)

    def V(t, cv=cv, wv=wv):
        t = np.asarray(t, dtype=float)
        return np.exp(cv[0] * np.sin(wv[0] * t) + cv[1] * np.cos(wv[1] * t))

    def q(t, cq=cq, wq=wq):
        t = np.asarray(t, dtype=float)
        return sum(c * np.cos(w * t + k) for k, (c, w) in enumerate(zip(cq, wq)))

    def outer():
        kind = rng.integers(3)
        return (DIRICHLET, NEUMANN, BC.robin(rng.uniform(-2.0, 2.0)))[kind]

    return ReducedOperator.from_functions(V, q, 0.0, length, outer(), outer(), 'random')


def random_cuts(rng, op):
    k = int(rng.integers(1, 4))
    margin = op.length / 20.0
    while True:
        cuts = np.sort(rng.uniform(op.a + margin, op.b - margin, k))
        if k == 1 or np.min(np.diff(cuts)) > margin:
            return cuts.tolist()


def sandwich_trials(instances, seed=408, n=120):
    """
    Partition bounds on random instances at exact discrete thresholds.

    :return: list of (mr_lower, full_strict, full_nonstrict, mr_upper) per instance
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(instances):
        op = random_operator(rng)
        cuts = random_cuts(rng, op)
        t = lowest_eigenvalue(op, n=n) + rng.uniform(-1.0, 30.0)
        rep = mr_bounds(op, cuts, t, n, gap=0.0)
        out.append((rep.mr_lower, rep.full_strict, rep.full_nonstrict, rep.mr_upper))
    return out


def _criterion(fn):
    try:
        return fn()
    except EqvidxError as e:
        return {'passed': False, 'error': str(e), 'exit_code': e.exit_code}


def verify_suite(config=None, callbacks=(), cache=None):
    """
    Run every acceptance check; failures are recorded, never raised.

    :return: dict {'criteria': {name: {'passed': bool, ...}}, 'passed': bool}
    """
    config = config or IndexConfig()
    ms = (2,) if config.quick else tuple(m for m in range(2, 7) if m <= config.max_m)
    ells = (1,) if config.quick else tuple(ell for ell in range(1, 6) if ell <= config.max_ell)
    instances = min(config.random_instances, 20) if config.quick else config.random_instances
    hsiang, fbms = {}, {}

    def hsiang_for(m):
        if m not in hsiang:
            hsiang[m] = hsiang_report(m, config, callbacks, cache)
        return hsiang[m]

    def fbms_for(ell):
        if ell not in fbms:
            fbms[ell] = fbms_report(ell, config, callbacks, cache)
        return fbms[ell]

    def hsiang_counts():
        per = {m: {k: hsiang_for(m).verdicts[k] for k in ('strict_count_is_m_minus_1', 'minus3_is_simple',
                                                          'minus3_is_eigenvalue')} for m in ms}
        return {'passed': all(all(v.values()) for v in per.values()), 'per_m': per}

    def nu5_oracle():
        per = {m: hsiang_for(m).residuals['nu5'] for m in ms}
        ok = all(hsiang_for(m).verdicts['nu5_residual_order'] and hsiang_for(m).verdicts['nu5_residual_small']
                 for m in ms)
        return {'passed': ok, 'per_m': per}

    def equator():
        rep = hsiang_for(1)
        return {'passed': rep.verdicts['equator_spectrum'], 'eigenvalues': rep.eigenvalues[:2],
                'expected': equator_spectrum(2)}

    def sandwich():
        trials = sandwich_trials(instances, config.seed)
        violations = [t for t in trials if not t[0] <= t[1] <= t[2] <= t[3]]
        families = [hsiang_for(m).verdicts['partition_lower_is_m_minus_1'] and
                    hsiang_for(m).verdicts['partition_upper_is_m'] for m in ms]
        families += [fbms_for(ell).verdicts['partition_sandwich'] for ell in ells]
        return {'passed': not violations and all(families), 'instances': len(trials),
                'violations': violations}

    def piece_spectra():
        piece_ms = (2,) if config.quick else tuple(m for m in (3, 4, 5) if m <= config.max_m)
        per = {m: hsiang_for(m).verdicts['piece_eigenvalues'] for m in piece_ms}
        return {'passed': all(per.values()), 'per_m': per}

    def tori():
        keys = ('robin_negative_at_least_ell', 'dirichlet_zero_is_eigenvalue', 'dirichlet_strict_is_ell_minus_1',
                'witness_nodal_domains', 'robin_dominates_dirichlet')
        per = {ell: {k: fbms_for(ell).verdicts[k] for k in keys} for ell in ells}
        return {'passed': all(all(v.values()) for v in per.values()), 'per_ell': per}

    def cone():
        curve = solve_alencar(7, config.tol, config.launch_offset, config.sample_step, config.integrator,
                              config.max_steps)
        ratios = alencar_summary(curve)['ratios']
        deviation = abs(ratios[5] / RADIUS_RATIO_LIMIT - 1.0)
        return {'passed': deviation <= 0.01, 'ratios': ratios, 'limit': RADIUS_RATIO_LIMIT,
                'relative_deviation': deviation}

    def total_index():
        per = {m: hsiang_for(m).bounds['total_index'] for m in ms}
        return {'passed': all(per[m] == m + 4 and hsiang_for(m).verdicts['strict_count_is_m_minus_1'] for m in ms),
                'per_m': per}

    criteria = {
        'hsiang_counts': hsiang_counts,
        'nu5_oracle': nu5_oracle,
        'equator_spectrum': equator,
        'partition_sandwich': sandwich,
        'piece_spectra': piece_spectra,
        'free_boundary_tori': tori,
        'cone_asymptotics': cone,
        'total_index_assembly': total_index,
    }
    results = {name: _criterion(fn) for name, fn in criteria.items()}
    return {'criteria': results, 'passed': all(r['passed'] for r in results.values()),
            'quick': config.quick, 'version': VERSION}


# ---------------------------------------------------------------- command line
def build_parser():
    parents = [arg.numerics(), arg.io(), arg.log()]
    parser = arg.ArgParser(prog='eqvidx', description='Equivariant index of invariant minimal hypersurfaces')
    sub = parser.add_subparsers(dest='command', required=True)

    hs = sub.add_parser('hsiang', parents=parents, help="Hsiang's hyperspheres H_m in S^4")
    hs.add_argument('action', choices=['solve', 'index'])
    hs.add_argument('--m', type=int, required=True)

    fb = sub.add_parser('fbms', parents=parents, help='free boundary solid tori A_ell in B^4')
    fb.add_argument('action', choices=['solve', 'index'])
    fb.add_argument('--ell', type=int, required=True)

    pt = sub.add_parser('partition', parents=parents, help='partition bounds on model intervals')
    pt.add_argument('action', choices=['demo'])

    vf = sub.add_parser('verify', parents=parents, help='run every acceptance check')
    vf.add_argument('--quick', action='store_true')
    return parser


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, 'w', newline='') as f:
            f.write(text)


def run(args, config, groups=None):
    """
    :param groups: (dict {group title: Namespace}) from ArgParser.parse_arg_groups
    :return: (payload, passed, curve or None)
    """
    logger = get_logger(_logger_args(args, config, groups))
    callbacks = [LoggerCallback(logger)] if logger is not None else []
    pipeline = Pipeline(config, callbacks)
    try:
        if args.command == 'hsiang':
            _check_range('m', args.m, config.max_m)
            if args.action == 'solve':
                curve = solve_hsiang_curve(args.m, config, pipeline)
                return hsiang_solve_summary(curve), True, curve
            report = hsiang_report(args.m, config, callbacks, pipeline.cache)
            return report.to_dict(), report.passed, None
        if args.command == 'fbms':
            _check_range('ell', args.ell, config.max_ell)
            if args.action == 'solve':
                alencar, curve = solve_fbms_curves(args.ell, config, pipeline)
                return fbms_solve_summary(alencar, curve), True, curve
            report = fbms_report(args.ell, config, callbacks, pipeline.cache)
            return report.to_dict(), report.passed, None
        if args.command == 'partition':
            demo = partition_demo(config.mesh)
            return demo, demo['sandwich_ok'] and demo['comparison_passed'], None
        summary = verify_suite(config, callbacks, pipeline.cache)
        return summary, summary['passed'], None
    finally:
        if logger is not None:
            logger.clean_up()


def _logger_args(args, config, groups=None):
    """
    LOGGING flags with their resolved values; the resolved NUMERICS values ride along as
    run parameters.
    """
    if groups is None or 'LOGGING' not in groups:
        out = argparse.Namespace(**vars(args))
    else:
        out = argparse.Namespace(**vars(groups['LOGGING']))
        for k, v in vars(groups.get('NUMERICS', argparse.Namespace())).items():
            setattr(out, k, getattr(config, k, v))
    out.logger, out.savedir, out.verbosity = config.logger, config.savedir, config.verbosity
    return out


def main(argv=None):
    parser = build_parser()
    args, groups = parser.parse_arg_groups(argv)
    try:
        config = IndexConfig.resolve(args)
        payload, passed, curve = run(args, config, groups)
    except EqvidxError as e:
        print(f'eqvidx: {e}', file=sys.stderr)
        return e.exit_code
    _emit(dumps(payload), args.json)
    if curve is not None and args.csv:
        plain_csv(curve, args.csv)
    return EXIT_OK if passed else EXIT_VERIFICATION
