"""
Profiles of O(2)xO(2)-invariant minimal hypersurfaces as curves in the orbit space.

Curves are launched off a collapsed-orbit edge by a second order series, integrated
with event location (midline crossings, theta-critical points, edge hits) and stored as
arclength samples with columns ``t, u1, u2, tau1, tau2, kappa``. Everything downstream
reads only those columns and the marker rows, so a curve reloaded from CSV gives the
same results as a freshly integrated one.

Hsiang's H_m are found by shooting on the launch position s0 along edge 1 of SPHERE4;
the Alencar profile is integrated in log-polar variables out to a requested number of
theta-critical points and then truncated and rescaled into the unit ball.
"""

import functools
import math
import warnings
from dataclasses import dataclass, field, asdict
from typing import Dict, Optional, Tuple

import numpy as np
from shapely.geometry import LineString

from eqvidx.errors import (BudgetExceededError, DomainError, EqvidxError,
                           InternalConsistencyError, NotFoundError, PreconditionError)
from eqvidx.integrators import Event, EventIntegrator
from eqvidx.interpolation import SplineInterp
from eqvidx.ode import ChartGeodesic, ConeGeodesic, profile_systems
from eqvidx.orbit_models import BALL4, SPHERE4, Edge, Model, QuotientPoint, wrap_angle, get_orbit_space

COLUMNS = ('t', 'u1', 'u2', 'tau1', 'tau2', 'kappa')
MARKERS = ('crossing', 'critical', 'field_critical')
QUARTER = math.pi / 4

# limit of successive critical radii of the cone-asymptotic profile, from the indicial
# roots (-1 +- i sqrt 7) / 2 of x'' + 3x' + 4x = 0 in log-radius
INDICIAL_ROOTS = (complex(-0.5, math.sqrt(7.0) / 2), complex(-0.5, -math.sqrt(7.0) / 2))
RADIUS_RATIO_LIMIT = math.exp(2.0 * math.pi / math.sqrt(7.0))


@dataclass
class LaunchState:
    """
    Initial data of a profile: a chart point, a direction angle and the arclength
    already travelled. ``edge`` and ``u0`` are set when the state comes from edge_launch.
    """
    os: object
    u1: float
    u2: float
    phi: float
    t: float = 0.0
    edge: Optional[Edge] = None
    u0: Optional[float] = None
    delta: Optional[float] = None

    @property
    def point(self):
        return QuotientPoint(self.u1, self.u2)

    @property
    def tangent(self):
        return self.os.tangent_chart(self.u1, self.phi)


@dataclass
class StopConditions:
    """
    :param edges: edges at which integration stops once closer than edge_stop
    :param edge_stop: (float) stopping distance from an edge, relative to the distance to the pole or origin
    :param max_length: (float) quotient arclength budget counted from the initial state
    :param length_is_stop: (bool) reaching max_length is a normal end rather than a budget failure
    :param max_crossings: (int or None) stop at the crossing after this many
    :param max_criticals: (int or None) stop at this theta-critical point
    :param bounce_margin: (float or None) stop at a theta-critical point within this angle of an edge
    :param max_radius: (float or None) BALL4 only, stop when |x| exceeds this
    :param pole_guard: (float) SPHERE4 only, stop when cos s drops below this
    :param sample_step: (float or None) spacing of stored samples in the integration variable
    :param track_field: (bool) record critical points of the known Jacobi field
    :param param_bound: (float or None) bound on the conformal integration variable, default 1e3
    """
    edges: Tuple[Edge, ...] = (Edge.EDGE1, Edge.EDGE2)
    edge_stop: float = 1e-4
    max_length: float = 40.0
    length_is_stop: bool = False
    max_crossings: Optional[int] = None
    max_criticals: Optional[int] = None
    bounce_margin: Optional[float] = None
    max_radius: Optional[float] = None
    pole_guard: float = 1e-8
    sample_step: Optional[float] = 2e-3
    track_field: bool = False
    param_bound: Optional[float] = None


@dataclass
class Endpoint:
    kind: str
    t: float
    u1: float
    u2: float
    incidence: float = float('nan')
    defect: float = float('nan')


@dataclass
class ProfileCurve:
    """
    Arclength samples of a profile with per-end metadata and marker rows.

    :param samples: (np.ndarray, shape [N, 6]) columns t, u1, u2, tau1, tau2, kappa
    :param endpoints: (Endpoint, Endpoint) start and end
    :param markers: dict name -> (np.ndarray, shape [k, 6]) rows at located events
    :param meta: dict of provenance (family, parameter, tolerance, shooting data)
    """
    os: object
    samples: np.ndarray
    endpoints: Tuple[Endpoint, Endpoint]
    markers: Dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float).reshape(-1, len(COLUMNS))
        for name in MARKERS:
            self.markers[name] = np.asarray(self.markers.get(name, []), dtype=float).reshape(-1, len(COLUMNS))

    @property
    def t(self):
        return self.samples[:, 0]

    @property
    def u1(self):
        return self.samples[:, 1]

    @property
    def u2(self):
        return self.samples[:, 2]

    @property
    def tau(self):
        return self.samples[:, 3:5]

    @property
    def kappa(self):
        return self.samples[:, 5]

    @property
    def L(self):
        return float(self.samples[-1, 0] - self.samples[0, 0])

    @property
    def crossings(self):
        return self.markers['crossing'][:, 0]

    @property
    def theta_critical(self):
        return self.markers['critical'][:, 0]

    def normals(self, rows=None):
        """Chart components of n, the +pi/2 rotation of tau, at sample (or marker) rows."""
        rows = self.samples if rows is None else rows
        g = self.os.G_vec(rows[:, 1])
        return np.stack([-g * rows[:, 4], rows[:, 3] / g], axis=-1)

    def phi(self, rows=None):
        rows = self.samples if rows is None else rows
        return np.arctan2(self.os.G_vec(rows[:, 1]) * rows[:, 4], rows[:, 3])

    def theta(self):
        return np.array([self.os.theta_value(u1, u2) for u1, u2 in self.samples[:, 1:3]])

    def field(self, rows=None):
        """The known Jacobi field (NU5 or X_DOT_NU) for the normal lifted from -n."""
        rows = self.samples if rows is None else rows
        n = self.normals(rows)
        return self.os.known_field(rows[:, 1], rows[:, 2], n[:, 0], n[:, 1])

    def header(self):
        return {'model': self.os.model.value,
                'endpoints': [asdict(e) for e in self.endpoints],
                'markers': {k: v.tolist() for k, v in self.markers.items()},
                'meta': self.meta}

    @classmethod
    def from_header(cls, samples, header):
        return cls(os=get_orbit_space(header['model']), samples=samples,
                   endpoints=tuple(Endpoint(**e) for e in header['endpoints']),
                   markers={k: np.asarray(v, dtype=float) for k, v in header['markers'].items()},
                   meta=header['meta'])


@dataclass
class NodalData:
    """
    Marker arclengths of an H_m profile: midline crossings c_j, zeros s_i of NU5 (the
    theta-critical points) and critical points t_i of NU5 between consecutive zeros.
    """
    crossings: np.ndarray
    zeros: np.ndarray
    criticals: np.ndarray

    def check(self):
        c, s, t = self.crossings, self.zeros, self.criticals
        if len(c) != len(s) + 1 or len(t) != max(len(s) - 1, 0):
            raise InternalConsistencyError(
                f'marker counts {len(c)}, {len(s)}, {len(t)} do not interlace; tighten the integration tolerance')
        merged = np.empty(len(c) + len(s))
        merged[0::2], merged[1::2] = c, s
        if np.any(np.diff(merged) <= 0):
            raise InternalConsistencyError('crossings and NU5 zeros do not alternate')
        if len(t) and (np.any(t <= s[:-1]) or np.any(t >= s[1:])):
            raise InternalConsistencyError('NU5 critical points are not between consecutive zeros')
        return self


@dataclass(frozen=True)
class ShootingSetup:
    scan_points: int = 200
    scan_margin: float = 0.01
    pole_points: int = 120
    pole_reach: float = 1e-4
    scan_tol: float = 1e-8
    tol: float = 1e-10
    launch_offset: float = 1e-4
    edge_stop: float = 1e-4
    bounce_margin: float = 0.1
    max_crossings: int = 9
    max_length: float = 40.0
    bisect_iter: int = 80
    orth_tol: float = 1e-8
    sample_step: float = 2e-3
    method: str = 'DOP853'
    max_steps: int = 200000


@dataclass(frozen=True)
class ShotRecord:
    """Classification of one shooting trajectory: how it ended, on which side, after how many crossings."""
    s0: float
    kind: str
    side: int
    crossings: int
    defect: float
    far_u0: float = float('nan')

    @property
    def key(self):
        return self.side, self.crossings


# ---------------------------------------------------------------- launch and integration
def edge_launch(os, edge, u0, delta=1e-4):
    """
    State at arclength delta of the profile leaving ``edge`` orthogonally at ``u0``.

    :param os: OrbitSpace
    :param edge: Edge
    :param u0: (float) position along the edge (s for SPHERE4, rho1 or rho2 for BALL4)
    :param delta: (float) offset, at most 1e-3
    :return: LaunchState
    """
    os, edge = get_orbit_space(os), Edge(edge)
    if not 0.0 < delta <= 1e-3:
        raise PreconditionError(f'launch offset {delta} outside (0, 1e-3]')
    p = os.edge_point(edge, u0)
    if not os.contains(*p) or os.is_singular(*p) or _at_corner(os, edge, u0):
        raise DomainError(f'{edge.name} launch at {u0} is not inside the edge')
    u1, u2, phi = os.edge_series(edge, u0, delta)
    return LaunchState(os, u1, u2, phi, t=delta, edge=edge, u0=u0, delta=delta)


def _at_corner(os, edge, u0):
    if os.model == Model.SPHERE4:
        return abs(u0) >= math.pi / 2
    return u0 <= 0.0


def launch_delta(os, edge, u0, offset):
    """Launch offset scaled by the distance of the edge point to the pole or origin."""
    os = get_orbit_space(os)
    return offset * min(1.0, os.local_scale(*os.edge_point(Edge(edge), u0)))


def interior_state(os, u1, u2, phi, t=0.0):
    os = get_orbit_space(os)
    os.check((u1, u2))
    return LaunchState(os, u1, u2, phi, t=t)


def _system(os, system):
    if system is None:
        system = 'cone' if os.model == Model.BALL4 else 'chart'
    assert system in profile_systems, f'Unknown profile system {system}, choose from {list(profile_systems)}'
    if system == 'cone':
        assert os.model == Model.BALL4, 'log-polar variables exist only for BALL4'
    return profile_systems[system](os)


def _events(os, system, stop, t_start):
    events = [Event(f'edge{int(e)}', lambda s, x, e=e: system.relative_edge_distance(e, x) - stop.edge_stop,
                    terminal=1, direction=-1) for e in stop.edges]
    events.append(Event('crossing', lambda s, x: system.theta(x),
                        terminal=stop.max_crossings + 1 if stop.max_crossings is not None else 0))
    events.append(Event('critical', lambda s, x: system.theta_rate(x), terminal=stop.max_criticals or 0))
    if stop.bounce_margin is not None:
        near = QUARTER - stop.bounce_margin
        events.append(Event('bounce', lambda s, x: system.theta_rate(x), terminal=1,
                            accept=lambda s, x: abs(system.theta(x)) > near))
    if stop.track_field:
        events.append(Event('field_critical', lambda s, x: system.field_rate(x)))
    if os.model == Model.SPHERE4:
        events.append(Event('pole', lambda s, x: os.G(system.chart_state(x)[0]) - stop.pole_guard,
                            terminal=1, direction=-1))
    if stop.max_radius is not None:
        events.append(Event('radius', lambda s, x: math.hypot(*system.chart_state(x)[:2]) - stop.max_radius,
                            terminal=1, direction=1))
    if math.isfinite(stop.max_length):
        end = t_start + stop.max_length
        events.append(Event('bound', lambda s, x: system.arclength(s, x) - end, terminal=1, direction=1))
    return events


def _integrate(os, init, stop, integrator, system):
    x0 = system.from_chart(init.t, init.u1, init.u2, init.phi)
    bound = stop.param_bound if stop.param_bound is not None else 1e3
    return integrator.integrate(system, 0.0, x0, bound, events=_events(os, system, stop, init.t),
                                sample_step=stop.sample_step)


def _edge_row(os, edge, u0, phi, t):
    p = os.edge_point(edge, u0)
    tau1, tau2 = os.tangent_chart(p.u1, phi)
    return [t, p.u1, p.u2, tau1, tau2, os.edge_curvature(edge, u0, phi)]


def _edge_end(os, edge, u1, u2, phi, t):
    """Sample row and Endpoint on ``edge`` for a curve arriving at (u1, u2) with direction phi."""
    u0, d = os.edge_foot(edge, u1, u2)
    defect = os.arrival_defect(edge, u1, u2, phi)
    phi_edge = wrap_angle(os.edge_series(edge, u0, 0.0)[2] + math.pi)
    row = _edge_row(os, edge, u0, phi_edge, t + d)
    return row, Endpoint(f'edge{int(edge)}', t + d, row[1], row[2], math.pi / 2 - abs(defect), defect)


def integrate_profile(os, init, stop=None, integrator=None, system=None):
    """
    Integrate the minimal-profile equation from ``init`` until a stop condition fires.

    :param os: OrbitSpace
    :param init: LaunchState from edge_launch or interior_state
    :param stop: StopConditions
    :param integrator: EventIntegrator, defaults to DOP853 at rtol 1e-10
    :param system: 'chart' or 'cone'; defaults to the log-polar system on BALL4
    :return: ProfileCurve
    """
    os = get_orbit_space(os)
    stop = stop if stop is not None else StopConditions()
    integrator = integrator if integrator is not None else EventIntegrator()
    system = _system(os, system)
    res = _integrate(os, init, stop, integrator, system)
    if res.status == 'bound' and not stop.length_is_stop:
        raise BudgetExceededError(f'no stop condition met within length {stop.max_length}')
    rows = [system.sample(s, x) for s, x in zip(res.ts, res.xs)]
    markers = {name: [system.sample(s, x) for n, s, x in res.events if n == name] for name in MARKERS}

    if init.edge is not None:
        phi0 = os.edge_series(init.edge, init.u0, 0.0)[2]
        rows.insert(0, _edge_row(os, init.edge, init.u0, phi0, 0.0))
        start = Endpoint(f'edge{int(init.edge)}', 0.0, rows[0][1], rows[0][2], math.pi / 2, 0.0)
    else:
        start = Endpoint('interior', init.t, init.u1, init.u2)

    t_end, u1, u2 = rows[-1][0], rows[-1][1], rows[-1][2]
    phi = os.phi_from_tangent(u1, rows[-1][3], rows[-1][4])
    if res.status in ('edge1', 'edge2'):
        row, end = _edge_end(os, Edge(int(res.status[-1])), u1, u2, phi, t_end)
        rows.append(row)
    else:
        end = Endpoint(res.status, t_end, u1, u2)
    curve = ProfileCurve(os, np.array(rows), (start, end), markers,
                         meta={'status': res.status, 'nsteps': res.nsteps})
    return curve


# ---------------------------------------------------------------- Hsiang shooting
def _stop_for(setup, sample_step=None, track_field=False):
    return StopConditions(edge_stop=setup.edge_stop, max_length=setup.max_length,
                          max_crossings=setup.max_crossings, bounce_margin=setup.bounce_margin,
                          sample_step=sample_step, track_field=track_field)


def _integrator_for(setup, tol):
    return EventIntegrator(setup.method, rtol=tol, atol=tol * 1e-2, max_steps=setup.max_steps)


def shoot_once(s0, setup=None, tol=None, edge=Edge.EDGE1):
    """
    Launch from ``edge`` of SPHERE4 at s0 and classify where the trajectory ends.

    :return: ShotRecord; defect is nan unless the curve hit or bounced off an edge
    """
    setup = setup if setup is not None else ShootingSetup()
    tol = tol if tol is not None else setup.tol
    init = edge_launch(SPHERE4, edge, s0, launch_delta(SPHERE4, edge, s0, setup.launch_offset))
    system = ChartGeodesic(SPHERE4)
    try:
        res = _integrate(SPHERE4, init, _stop_for(setup), _integrator_for(setup, tol), system)
    except EqvidxError:
        return ShotRecord(s0, 'singular', 0, -1, float('nan'))
    crossings = res.count('crossing')
    u1, u2, phi = system.chart_state(res.x_end)
    if res.status in ('edge1', 'edge2'):
        side = int(res.status[-1])
    elif res.status == 'bounce':
        side = 1 if SPHERE4.theta_value(u1, u2) < 0 else 2
    else:
        return ShotRecord(s0, res.status, 0, crossings, float('nan'))
    far_u0 = SPHERE4.edge_foot(Edge(side), u1, u2)[0]
    return ShotRecord(s0, res.status, side, crossings, SPHERE4.arrival_defect(Edge(side), u1, u2, phi), far_u0)


def scan_grid(setup):
    """
    Launch positions s0: a uniform grid away from the poles joined with geometric grids
    in the distance to either pole, down to pole_reach. Launch points of H_m approach a
    pole geometrically in m.
    """
    half = math.pi / 2 - setup.scan_margin
    rho = np.geomspace(setup.pole_reach, 0.5, setup.pole_points)
    near = math.pi / 2 - rho
    return np.unique(np.concatenate([np.linspace(-half, half, setup.scan_points), -near, near]))


@functools.lru_cache(maxsize=8)
def hsiang_scan(setup=ShootingSetup()):
    """
    Classify trajectories launched from edge 1 on scan_grid. The scan does not depend
    on m, so it is shared by every shoot_hsiang call with the same setup.

    :return: tuple of ShotRecord ordered by s0
    """
    grid = scan_grid(setup)
    return tuple(shoot_once(float(s0), setup, setup.scan_tol) for s0 in grid)


def brackets(records, key):
    """
    Neighbouring scan records of class ``key`` whose defects change sign without wrapping.
    At least one of the two must have landed on the edge; a pair of bounces is no bracket.
    """
    found = []
    for a, b in zip(records[:-1], records[1:]):
        if a.key != key or b.key != key or not (np.isfinite(a.defect) and np.isfinite(b.defect)):
            continue
        if a.kind == 'bounce' and b.kind == 'bounce':
            continue
        if a.defect * b.defect < 0 and abs(a.defect - b.defect) < math.pi:
            found.append((a, b))
    return found


def _bisect(a, b, setup):
    lo, hi = shoot_once(a.s0, setup), shoot_once(b.s0, setup)
    if lo.key != a.key or hi.key != a.key or not lo.defect * hi.defect < 0:
        warnings.warn(f'bracket ({a.s0:.6f}, {b.s0:.6f}) lost its sign change at full tolerance')
        return None
    for _ in range(setup.bisect_iter):
        s_mid = 0.5 * (lo.s0 + hi.s0)
        if s_mid in (lo.s0, hi.s0):
            break
        mid = shoot_once(s_mid, setup)
        if mid.key != a.key or not np.isfinite(mid.defect):
            warnings.warn(f'bracket ({a.s0:.6f}, {b.s0:.6f}) discarded: class changes inside it')
            return None
        if mid.defect == 0.0:
            return mid
        if np.sign(mid.defect) == np.sign(lo.defect):
            lo = mid
        else:
            hi = mid
    return min((lo, hi), key=lambda r: abs(r.defect))


def expected_side(m):
    """Odd m ends on edge 2 (the profile of a sphere), even m returns to edge 1."""
    return 2 if m % 2 else 1


def is_embedded(curve):
    """
    Whether the profile, truncated to its integrated samples, has no self-intersection
    in the chart plane. Rows closed onto an edge are left out: near a pole the chart
    stretches them across neighbouring arcs.
    """
    lo = 1 if curve.endpoints[0].kind.startswith('edge') else 0
    hi = len(curve.samples) - (1 if curve.endpoints[1].kind.startswith('edge') else 0)
    points = curve.samples[lo:hi, 1:3]
    if len(points) < 2:
        return True
    keep = np.concatenate([[True], np.any(np.diff(points, axis=0) != 0.0, axis=1)])
    return LineString(points[keep]).is_simple


def _solve_at(s0, m, setup):
    init = edge_launch(SPHERE4, Edge.EDGE1, s0, launch_delta(SPHERE4, Edge.EDGE1, s0, setup.launch_offset))
    stop = _stop_for(setup, sample_step=setup.sample_step, track_field=m >= 3)
    return integrate_profile(SPHERE4, init, stop, _integrator_for(setup, setup.tol), 'chart')


def _verified(curve, m, setup):
    end = curve.endpoints[1]
    return (end.kind == f'edge{expected_side(m)}' and len(curve.crossings) == m
            and abs(end.defect) <= setup.orth_tol)


def shoot_hsiang(m, tol=1e-10, setup=None):
    """
    Profile of Hsiang's H_m: launched orthogonally from edge 1, meeting an edge
    orthogonally at the far end after exactly m midline crossings.

    :param m: (int) number of crossings, at least 1
    :param tol: (float) integration tolerance used for bisection and the final curve
    :param setup: ShootingSetup overriding the scan parameters
    :return: ProfileCurve with meta['solutions'] listing every verified solution
    """
    if m < 1:
        raise PreconditionError(f'm must be at least 1, got {m}')
    setup = setup if setup is not None else ShootingSetup(tol=tol)
    if m > setup.max_crossings:
        raise PreconditionError(f'm={m} exceeds the scanned crossing limit {setup.max_crossings}')
    if m == 1:
        # symmetry forces the totally geodesic equator s = 0
        candidates = [0.0]
        records = ()
    else:
        records = hsiang_scan(setup)
        hits = [_bisect(a, b, setup) for a, b in brackets(records, (expected_side(m), m))]
        candidates = sorted({r.s0 for r in hits if r is not None}, key=lambda s: (abs(s), s))

    solutions, curves = [], []
    for s0 in candidates:
        if any(abs(s0 - sol['s0']) < 1e-9 for sol in solutions):
            continue
        curve = _solve_at(s0, m, setup)
        if not _verified(curve, m, setup):
            continue
        end = curve.endpoints[1]
        far_u0 = SPHERE4.edge_foot(Edge(expected_side(m)), end.u1, end.u2)[0] if m % 2 == 0 else float('nan')
        reverse_of = next((i for i, sol in enumerate(solutions)
                           if m % 2 == 0 and abs(sol['far_u0'] - s0) < 1e-6), None)
        # s -> -s maps a solution onto a congruent one launched at -s0
        mirror_of = next((i for i, sol in enumerate(solutions) if abs(sol['s0'] + s0) < 1e-6), None)
        solutions.append({'s0': s0, 'far_edge': end.kind, 'defect': end.defect, 'far_u0': far_u0,
                          'embedded': is_embedded(curve), 'reverse_of': reverse_of, 'mirror_of': mirror_of})
        curves.append(curve)

    chosen = [i for i, sol in enumerate(solutions)
              if sol['embedded'] and sol['reverse_of'] is None and sol['mirror_of'] is None]
    if not chosen:
        raise NotFoundError(f'no embedded H_{m} found among {len(candidates)} bracket(s)',
                            scan=[asdict(r) for r in records])
    if len(chosen) > 1:
        warnings.warn(f'{len(chosen)} distinct embedded solutions for m={m}; keeping s0={solutions[chosen[0]]["s0"]:.12g}')
    curve = curves[chosen[0]]
    curve.meta.update({'family': 'hsiang', 'parameter': m, 'tol': setup.tol,
                       's0': solutions[chosen[0]]['s0'], 'solutions': solutions,
                       'launch_offset': setup.launch_offset,
                       'launch_delta': launch_delta(SPHERE4, Edge.EDGE1, solutions[chosen[0]]['s0'], setup.launch_offset)})
    find_markers(curve)
    return curve


# ---------------------------------------------------------------- Alencar profile
def solve_alencar(max_criticals, tol=1e-10, launch_offset=1e-4, sample_step=2e-3,
                  method='DOP853', max_steps=200000):
    """
    Profile of the free-boundary-type surface launched orthogonally from edge 1 of BALL4
    at rho1 = 1, integrated in log-polar variables to its max_criticals-th theta-critical point.

    :return: ProfileCurve, meta['radii'] holds r_k = |x| at the critical points
    """
    if max_criticals < 1:
        raise PreconditionError(f'max_criticals must be at least 1, got {max_criticals}')
    init = edge_launch(BALL4, Edge.EDGE1, 1.0, launch_offset)
    stop = StopConditions(edges=(Edge.EDGE1, Edge.EDGE2), max_criticals=max_criticals,
                          max_length=math.inf, sample_step=sample_step,
                          param_bound=10.0 + 5.0 * max_criticals)
    integrator = EventIntegrator(method, rtol=tol, atol=tol * 1e-2, max_steps=max_steps)
    curve = integrate_profile(BALL4, init, stop, integrator, 'cone')
    if curve.endpoints[1].kind != 'critical':
        raise BudgetExceededError(f'{len(curve.theta_critical)} of {max_criticals} critical points '
                                  f'reached before {curve.endpoints[1].kind}')
    radii = find_markers(curve)
    curve.meta.update({'family': 'alencar', 'parameter': max_criticals, 'tol': tol,
                       'launch_offset': launch_offset, 'radii': radii.tolist()})
    return curve


def alencar_summary(curve):
    radii = find_markers(curve)
    return {'radii': radii.tolist(),
            'ratios': (radii[1:] / radii[:-1]).tolist(),
            'crossings': np.hypot(curve.markers['crossing'][:, 1], curve.markers['crossing'][:, 2]).tolist(),
            'indicial_roots': [[z.real, z.imag] for z in INDICIAL_ROOTS],
            'ratio_limit': RADIUS_RATIO_LIMIT}


# ---------------------------------------------------------------- markers
def find_markers(curve):
    """
    :return: NodalData on SPHERE4 (interlacing checked), else the radii |x| at the
             theta-critical points, checked to increase strictly
    """
    if curve.os.model == Model.BALL4:
        rows = curve.markers['critical']
        radii = np.hypot(rows[:, 1], rows[:, 2])
        if np.any(np.diff(radii) <= 0):
            raise InternalConsistencyError('critical radii are not strictly increasing')
        return radii
    zeros = curve.theta_critical
    candidates = curve.markers['field_critical']
    values = np.abs(curve.field(candidates)) if len(candidates) else np.zeros(0)
    criticals = []
    for left, right in zip(zeros[:-1], zeros[1:]):
        inside = np.flatnonzero((candidates[:, 0] > left) & (candidates[:, 0] < right))
        if not len(inside):
            raise InternalConsistencyError(f'no NU5 critical point between zeros {left:.6g} and {right:.6g}')
        criticals.append(candidates[inside[np.argmax(values[inside])], 0])
    return NodalData(curve.crossings.copy(), zeros.copy(), np.array(criticals)).check()


def truncate_rescale(curve, ell, rescale=True):
    """
    Cut the Alencar profile at its ell-th theta-critical point, radius r_ell, and scale
    by 1/r_ell so that the cut end lies on the unit circle.

    :param rescale: (bool) False keeps the truncation at its original size
    :return: ProfileCurve of A_ell with a free end
    """
    criticals = curve.markers['critical']
    if ell < 1 or len(criticals) < ell:
        raise PreconditionError(f'A_{ell} needs {ell} critical points, the curve has {len(criticals)}')
    cut = criticals[ell - 1]
    r = math.hypot(cut[1], cut[2])
    scale = 1.0 / r if rescale else 1.0
    keep = curve.samples[curve.samples[:, 0] < cut[0] - 1e-12 * max(1.0, cut[0])]
    samples = np.vstack([keep, cut[None, :]])

    def scaled(rows):
        rows = rows.copy()
        rows[:, :3] *= scale
        rows[:, 5] /= scale
        return rows

    samples = scaled(samples)
    markers = {name: scaled(rows[rows[:, 0] <= cut[0]]) for name, rows in curve.markers.items()}
    markers['critical'] = markers['critical'][:ell - 1]
    start = curve.endpoints[0]
    x = samples[-1, 1:3] / np.linalg.norm(samples[-1, 1:3])
    tangential = abs(samples[-1, 3] * -x[1] + samples[-1, 4] * x[0])
    end = Endpoint('free', samples[-1, 0], samples[-1, 1], samples[-1, 2],
                   math.acos(min(1.0, tangential)), math.asin(min(1.0, tangential)))
    meta = dict(curve.meta)
    meta.update({'family': 'fbms', 'parameter': ell, 'r_ell': r, 'rescaled': bool(rescale)})
    meta.pop('radii', None)
    return ProfileCurve(curve.os, samples,
                        (Endpoint(start.kind, 0.0, start.u1 * scale, start.u2 * scale, start.incidence, start.defect), end),
                        markers, meta)


# ---------------------------------------------------------------- diagnostics
def curvature_residual(curve, trim=2):
    """max |kappa + d_n log V| over the stored interior samples."""
    rows = curve.samples[trim:-trim]
    phi = curve.phi(rows)
    dn = np.array([curve.os.dlog_volume_normal(u1, u2, p) for u1, u2, p in zip(rows[:, 1], rows[:, 2], phi)])
    return float(np.max(np.abs(rows[:, 5] + dn)))


def fd_curvature_residual(curve, trim=0.05):
    """
    Recompute kappa from the sampled positions alone (spline derivatives of u1, u2 and of
    the resulting direction angle) and return the max minimality residual, ignoring a
    fraction ``trim`` of the length at either end where V vanishes.
    """
    t = curve.t
    pos = SplineInterp(t, curve.samples[:, 1:3])
    d = pos.derivative()(t)
    g = curve.os.G_vec(curve.u1)
    phi = np.unwrap(np.arctan2(g * d[:, 1], d[:, 0]))
    dphi = SplineInterp(t, phi).derivative()(t)
    dlogg = np.array([curve.os.dlogG(u) for u in curve.u1])
    kappa = -(dphi + dlogg * np.sin(phi))
    lo, hi = t[0] + trim * curve.L, t[-1] - trim * curve.L
    inside = np.flatnonzero((t > lo) & (t < hi))
    dn = np.array([curve.os.dlog_volume_normal(curve.u1[i], curve.u2[i], phi[i]) for i in inside])
    return float(np.max(np.abs(kappa[inside] + dn)))


def symmetry_report(curve, atol=1e-6):
    """
    Compare the profile with its image under s -> -s (m even) or (s, a) -> (-s, pi/2 - a)
    (m odd), traversed backwards. Observed, not assumed.
    """
    m = curve.meta.get('parameter', len(curve.crossings))
    interp = SplineInterp(curve.t, curve.samples[:, 1:3])
    mirrored = interp(curve.t[-1] + curve.t[0] - curve.t)
    if m % 2:
        name, image = 's,a -> -s,pi/2-a', np.stack([-curve.u1, math.pi / 2 - curve.u2], axis=-1)
    else:
        name, image = 's -> -s', np.stack([-curve.u1, curve.u2], axis=-1)
    deviation = float(np.max(np.abs(mirrored - image)))
    return {'reflection': name, 'max_deviation': deviation, 'symmetric': deviation <= atol}
