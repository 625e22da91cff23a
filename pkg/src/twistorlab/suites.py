"""Verification suites behind the command line.

A suite is split into independent work items (one catalog structure, one
value of t, ...).  Each item returns :class:`CheckRecord` rows, and the rows
of all items are sorted by (check id, manifold, structure, t, sample index)
so the report does not depend on how items were scheduled.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import catalog
from . import frame_algebra as fa
from . import frame_manifold as fm
from . import hermitian as hm
from . import hopf_cp3 as hc
from . import sigma_hypersurface as sh
from . import twistor as tw

SUITES = ("identities", "minimality", "tables", "hopf")

# default tolerance of every check id
TOLERANCES = {
    "identity.kk_product": 1e-9,
    "identity.curvature_cross": 1e-9,
    "identity.nabla_J": 1e-9,
    "identity.star_ricci_J": 1e-9,
    "identity.s_omega_formula": 1e-9,
    "identity.s_omega_symmetry": 1e-9,
    "identity.torsion": 1e-9,
    "twistor.lemma_oracle": 1e-6,
    "sigma.route_equivalence": 1e-9,
    "sigma.totally_geodesic": 1e-11,
    "minimality.trace_direct": 1e-8,
    "minimality.closed_form": 1e-8,
    "minimality.analytic": 1e-9,
    "kodaira.lee_A3": 1e-12,
    "kodaira.nabla_theta": 1e-12,
    "kodaira.star_ricci_E14": 1e-12,
    "kodaira.star_ricci_E13": 1e-12,
    "table.fixture": 0.0,
    "table.fixture_float": 1e-12,
    "table.pushforward": 1e-10,
    "table.horizontal_lift": 1e-12,
    "hopf.roundtrip": 1e-10,
    "hopf.roundtrip_inverse": 1e-10,
    "hopf.predicate": 1e-9,
    "hopf.j6_structure": 1e-10,
    "hopf.triangle": 1e-10,
    "hopf.twistor_metric": 1e-10,
    "hopf.kappa_metric": 1e-10,
    "hopf.twistor_level": 1e-9,
    "hopf.near_miss": 0.0,
}

PHI_GRID = (0.0, math.pi / 6, math.pi / 4, math.pi / 2)


@dataclass(frozen=True)
class CheckRecord:
    check_id: str
    manifold: str
    structure: str
    t: Optional[float]
    sample_index: int
    residual: float
    tolerance: float
    inputs: str = ""
    wall_time: float = field(default=0.0, compare=False)

    @property
    def passed(self) -> bool:
        return math.isfinite(self.residual) and self.residual <= self.tolerance

    def sort_key(self) -> tuple:
        return (self.check_id, self.manifold, self.structure,
                -1.0 if self.t is None else self.t, self.sample_index, self.inputs)


@dataclass(frozen=True)
class Settings:
    seed: int = 0
    t_values: tuple = sh.DEFAULT_T
    base_points: int = 4
    fiber_angles: int = 8
    samples: int = 20
    hopf_samples: int = 1000
    hopf_pairs: int = 200
    tolerance: Optional[float] = None

    def tol(self, check_id: str) -> float:
        return TOLERANCES[check_id] if self.tolerance is None else self.tolerance


# --- structure selection -------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def structure_label(name: str, params: dict) -> str:
    shown = {k: v for k, v in sorted(params.items()) if k != "exact" and v is not None}
    if not shown:
        return name
    return name + "(" + ",".join(f"{k}={_fmt(v)}" for k, v in shown.items()) + ")"


def default_variants(entry_id: str) -> list:
    """(structure name, params) pairs swept when no structure is selected."""
    if entry_id == "kodaira_primary":
        out = [("hermitian", {"eps": e}) for e in (1, -1)]
        out += [("symplectic", {"eps1": e1, "eps2": e2, "phi": phi})
                for e1 in (1, -1) for e2 in (1, -1) for phi in PHI_GRID]
        return out
    if entry_id == "kodaira_secondary":
        return [("complex", {"eps": e}) for e in (1, -1)]
    entry = catalog.get(entry_id)
    return [(name, {}) for name in entry.structures]


def variants(entry_ids, structure: Optional[str] = None, params: Optional[dict] = None) -> list:
    """(entry id, structure name, params) work list."""
    out = []
    for eid in entry_ids:
        entry = catalog.get(eid)
        if structure is None:
            chosen = default_variants(eid)
            if params:
                chosen = [(n, p) for n, p in chosen if all(p.get(k, v) == v for k, v in params.items())]
                if not chosen:
                    chosen = [(entry.structure_spec().name, dict(params))]
        else:
            entry.structure_spec(structure)
            chosen = [(structure, dict(params or {}))]
        for name, p in chosen:
            spec = entry.structure_spec(name)
            unknown = set(p) - set(spec.defaults)
            if unknown:
                raise KeyError(f"{eid}/{name}: unknown parameters {sorted(unknown)}")
            out.append((eid, name, p))
    return out


def _build(entry_id: str, name: str, params: dict):
    return catalog.get(entry_id).structure(name, **params)


# --- work items --------------------------------------------------------------------------


@dataclass(frozen=True)
class WorkItem:
    suite: str
    part: str
    entry_id: str
    structure: str
    params: tuple
    t: Optional[float]
    settings: Settings


def _record(item: WorkItem, check_id: str, sample: int, residual, label: str,
            inputs: str = "", t=None, wall: float = 0.0) -> CheckRecord:
    return CheckRecord(check_id, item.entry_id, label, item.t if t is None else t, sample,
                       float(residual), item.settings.tol(check_id), inputs, wall)


def _rng(item: WorkItem, *salt) -> np.random.Generator:
    words = [item.settings.seed, *(ord(ch) for ch in item.part + item.structure), *salt]
    if item.t is not None:
        words.append(int(round(item.t * 1000)))
    words += [ord(ch) for ch in repr(item.params)]
    return np.random.default_rng([abs(int(w)) for w in words])


def _points(h, item: WorkItem) -> list:
    return sh.base_points(h, item.settings.base_points, item.settings.seed)


def _max(values) -> float:
    return float(max(values, default=0.0))


# identities: pointwise algebra ----------------------------------------------------------


def _float_geo(h, p):
    g = h.at(p)
    return {"J": np.asarray(g.J, float), "rm": np.asarray(g.riemann, float),
            "ricci": np.asarray(g.ricci, float), "nabla_J": np.asarray(g.nabla_J, float),
            "dOmega": np.asarray(g.d_kahler_form, float), "N": np.asarray(g.nijenhuis, float),
            "rs": np.asarray(g.star_ricci, float), "geo": g}


def _random_sd(rng) -> np.ndarray:
    return fa.from_sd_coords(rng.normal(size=3))


def _kk_product(rng) -> float:
    a, b = _random_sd(rng), _random_sd(rng)
    lhs = fa.k_endo(a) @ fa.k_endo(b)
    rhs = -fa.inner(a, b) * np.eye(4) + fa.k_endo(fa.cross(a, b))
    return float(np.max(np.abs(lhs - rhs)))


def _curvature_cross(d, rop, rng) -> float:
    a = rng.normal(size=6)
    b, c = _random_sd(rng), _random_sd(rng)
    lhs = fa.inner(fa.derivation(fm.curvature_endo(d["rm"], a), b), c)
    rhs = fa.inner(fm.apply_curvature_operator(rop, fa.cross(b, c)), a)
    return abs(float(lhs - rhs))


def _nabla_J_identity(d) -> float:
    J, nJ, dom, N = d["J"], d["nabla_J"], d["dOmega"], d["N"]
    lhs = 2 * np.einsum("xzy->xyz", nJ)
    rhs = dom - np.einsum("xbc,by,cz->xyz", dom, J, J) + np.einsum("yzk,kx->xyz", N, J)
    return float(np.max(np.abs(lhs - rhs)))


def _star_ricci_J(d) -> float:
    J, rs = d["J"], d["rs"]
    return float(np.max(np.abs(J.T @ rs @ J - rs.T)))


def _s_omega_formula(d, rng) -> float:
    X, Y = rng.normal(size=4), rng.normal(size=4)
    g = d["geo"]
    return abs(float(g.s_omega(X, Y)) - float(g.s_omega_trace(X, Y)))


def _adapted_pair(J, rng):
    X = rng.normal(size=4)
    X /= np.linalg.norm(X)
    Y = rng.normal(size=4)
    Y -= (Y @ X) * X + (Y @ (J @ X)) * (J @ X)
    Y /= np.linalg.norm(Y)
    return [X, J @ X, Y, J @ Y]


def _s_omega_symmetry(d, rng) -> float:
    """The two S(Omega) conditions against the rho* asymmetries they encode:
    S13 + S42 = 2 (rho*_14 - rho*_41) and S14 + S23 = -2 (rho*_13 - rho*_24)."""
    g, rs = d["geo"], d["rs"]
    E = _adapted_pair(d["J"], rng)

    def S(i, j):
        return float(g.s_omega(E[i], E[j]))

    def r(i, j):
        return float(E[i] @ rs @ E[j])

    return max(abs(S(0, 2) + S(3, 1) - 2 * (r(0, 3) - r(3, 0))),
               abs(S(0, 3) + S(1, 2) + 2 * (r(0, 2) - r(1, 3))))


def _run_algebra(item: WorkItem) -> list:
    h = _build(item.entry_id, item.structure, dict(item.params))
    label = structure_label(item.structure, dict(item.params))
    symplectic = h.classification in (hm.KAHLER, hm.ALMOST_KAHLER)
    out = []
    for b, p in enumerate(_points(h, item)):
        rng = _rng(item, b)
        d = _float_geo(h, p)
        rop = np.asarray(fm.curvature_on_bivectors(h.manifold, np.asarray(p, float)), float)
        n = item.settings.samples
        checks = {
            "identity.kk_product": _max(_kk_product(rng) for _ in range(n)),
            "identity.curvature_cross": _max(_curvature_cross(d, rop, rng) for _ in range(n)),
            "identity.nabla_J": _nabla_J_identity(d),
            "identity.star_ricci_J": _star_ricci_J(d),
            "identity.s_omega_formula": _max(_s_omega_formula(d, rng) for _ in range(n)),
            "identity.torsion": fm.torsion_residual(h.manifold, np.asarray(p, float)),
        }
        if symplectic:
            checks["identity.s_omega_symmetry"] = _max(_s_omega_symmetry(d, rng) for _ in range(n))
        for cid, res in checks.items():
            out.append(_record(item, cid, b, res, label))
    return out


# identities: twistor space and Sigma ----------------------------------------------------


def _lemma_oracle(h, t, rng) -> float:
    m = h.manifold
    tau = tw.random_twistor_point(m, rng)
    X, Y = rng.normal(size=4), rng.normal(size=4)
    V = tw.random_vertical(tau, rng)
    a = tw.d_hh(m, X, Y, tau)
    b = tw.fd_connection_oracle(m, t, tau, tw.horizontal_lift(tau, X), tw.horizontal_field(Y))
    worst = float(np.max(np.abs(a.coords() - b.coords())))
    a = tw.d_vh(m, V, Y, tau, t)
    b = tw.fd_connection_oracle(m, t, tau, tw.vertical_vector(tau, V), tw.horizontal_field(Y))
    return max(worst, float(np.max(np.abs(a.coords() - b.coords()))))


def _random_sigma_pair(h, t, p, rng):
    psi = rng.uniform(0, 2 * math.pi)
    _, s2, s3 = sh.adapted_basis(np.asarray(h.at(tuple(p)).alpha, float))
    tau = sh.sigma_point(h, p, math.cos(psi) * s2 + math.sin(psi) * s3)
    frame = sh.sigma_tangent_frame(tau, h, t)
    a, b = rng.normal(size=5), rng.normal(size=5)
    E = sum((a[i] * frame.vectors[i] for i in range(1, 5)), a[0] * frame.vectors[0])
    F = sum((b[i] * frame.vectors[i] for i in range(1, 5)), b[0] * frame.vectors[0])
    return E, F


def _specialized_routes(h) -> list:
    routes = []
    if h.classification in (hm.KAHLER, hm.HERMITIAN):
        routes.append(sh.pi_pair_hermitian)
    if h.classification in (hm.KAHLER, hm.ALMOST_KAHLER):
        routes.append(sh.pi_pair_symplectic)
    return routes


def _run_twistor(item: WorkItem) -> list:
    h = _build(item.entry_id, item.structure, dict(item.params))
    label = structure_label(item.structure, dict(item.params))
    t = item.t
    out = []
    n = item.settings.samples
    points = _points(h, item)
    if h.manifold.frame is not None:
        rng = _rng(item, 1)
        t0 = time.perf_counter()
        res = _max(_lemma_oracle(h, t, rng) for _ in range(max(1, n // 4)))
        out.append(_record(item, "twistor.lemma_oracle", 0, res, label,
                           wall=time.perf_counter() - t0))
    routes = _specialized_routes(h)
    for b, p in enumerate(points):
        rng = _rng(item, 2, b)
        pairs = [_random_sigma_pair(h, t, p, rng) for _ in range(n)]
        general = [sh.pi_pair_general(E, F, h, t) for E, F in pairs]
        if routes:
            res = _max(abs(g - route(E, F, h, t)) for route in routes
                       for g, (E, F) in zip(general, pairs))
            out.append(_record(item, "sigma.route_equivalence", b, res, label))
        if h.classification == hm.KAHLER:
            out.append(_record(item, "sigma.totally_geodesic", b, _max(abs(g) for g in general), label))
    return out


# minimality ------------------------------------------------------------------------------


def _run_minimality(item: WorkItem) -> list:
    h = _build(item.entry_id, item.structure, dict(item.params))
    label = structure_label(item.structure, dict(item.params))
    t = item.t
    s = item.settings
    t0 = time.perf_counter()
    rep = sh.is_minimal(h, t, n_base=s.base_points, n_angles=s.fiber_angles, seed=s.seed,
                        tol=s.tol("minimality.trace_direct"), manifold_id=item.entry_id)
    wall = time.perf_counter() - t0
    out = []
    per_base: dict = {}
    for b, _, v in rep.traces:
        per_base[b] = max(per_base.get(b, 0.0), abs(v))
    for b in sorted(per_base):
        out.append(_record(item, "minimality.trace_direct", b, per_base[b], label, wall=wall))
    if rep.closed_form_residual is not None:
        out.append(_record(item, "minimality.closed_form", 0, rep.closed_form_residual, label))
    if rep.analytic_residual is not None:
        out.append(_record(item, "minimality.analytic", 0, rep.analytic_residual, label))
    return out


def _run_kodaira_fixtures(item: WorkItem) -> list:
    """Lee form and star-Ricci values of the primary Kodaira structures."""
    params = dict(item.params)
    label = structure_label(item.structure, params)
    h = _build(item.entry_id, item.structure, params)
    g = h.at((0.0, 0.0, 0.0, 0.0))
    out = []
    if item.structure == "hermitian":
        eps = params.get("eps", 1)
        dirs = np.asarray(catalog.kodaira_A_directions(eps), float)
        theta_A = dirs @ np.asarray(g.theta, float)
        out.append(_record(item, "kodaira.lee_A3", 0, abs(theta_A[2] + 2 * eps), label))
        out.append(_record(item, "kodaira.nabla_theta", 0, hm._max_abs(g.nabla_theta), label))
    elif item.structure == "symplectic":
        c, sn = catalog._cos_sin(params.get("phi", 0.0), params.get("cos"), params.get("sin"))
        e1 = params.get("eps1", 1)
        rs = np.asarray(g.star_ricci, float)
        target = -e1 * float(sn) * float(c)
        out.append(_record(item, "kodaira.star_ricci_E14", 0,
                           max(abs(rs[0, 3] - target), abs(rs[3, 0] - target)), label,
                           inputs=f"rho*(E1,E4)={rs[0, 3]:.12g}"))
        out.append(_record(item, "kodaira.star_ricci_E13", 0,
                           max(abs(rs[0, 2]), abs(rs[2, 0])), label))
    return out


# tables ------------------------------------------------------------------------------


def _run_tables(item: WorkItem) -> list:
    out = []
    for k, (text, res, exact) in enumerate(catalog.fixture_report(item.entry_id, item.settings.seed)):
        cid = "table.fixture" if exact else "table.fixture_float"
        out.append(_record(item, cid, k, res, "-", inputs=text))
    if item.entry_id == "kodaira_primary":
        for name, params in default_variants("kodaira_primary"):
            h = _build(item.entry_id, name, params)
            label = structure_label(name, params)
            for t in item.settings.t_values:
                for k, smp in enumerate(catalog.pushforward_samples(h, t, item.settings.samples,
                                                                    item.settings.seed)):
                    other = catalog.pushforward_metric(h, t, smp.p, smp.x, smp.first, smp.second,
                                                       route="twistor")
                    out.append(_record(item, "table.pushforward", k, abs(other - smp.value),
                                       label, t=t))
            rng = np.random.default_rng([item.settings.seed, 17])
            worst = 0.0
            for _ in range(50):
                p = h.manifold.sample_point(rng)
                x = rng.normal(size=3)
                x /= np.linalg.norm(x)
                img = catalog.horizontal_lift_images(h, p, x)
                worst = max(worst, float(np.max(np.abs(img - catalog.u_table(h, x, p)))))
            out.append(_record(item, "table.horizontal_lift", 0, worst, label))
    return out


# hopf -------------------------------------------------------------------------------------


NEAR_MISS = (
    (1, 0, 0, 0),
    (0, 0, 1, 1),
    (0, 0, 0, 1),
    (1, 1, 1, 1.001),
)


def near_miss_corpus(rng: np.random.Generator, n: int = 8) -> list:
    """Points just off the Sigma image: fixed corpus plus perturbed images."""
    out = [np.array(z, dtype=complex) for z in NEAR_MISS]
    for k in range(n):
        ce = hc.random_contact_element(rng, orthogonal_to_xi1=True)
        lam = ce.frame_coords
        z = hc.contact_to_cp3(ce.p, lam[1], lam[2])
        z[2 + k % 2] *= 1 + 1e-6
        out.append(z)
    return out


def _run_hopf(item: WorkItem) -> list:
    s = item.settings
    rng = np.random.default_rng([s.seed, 3])
    out = []
    lab = "hopf"
    for k in range(s.hopf_samples):
        ce = hc.random_contact_element(rng, orthogonal_to_xi1=True)
        lam = ce.frame_coords
        z = hc.contact_to_cp3(ce.p, lam[1], lam[2])
        n2 = float(np.vdot(z, z).real)
        pred = max(abs(4 * abs(z[2]) ** 2 - n2), abs(4 * abs(z[3]) ** 2 - n2)) / n2
        p, l2, l3 = hc.cp3_to_contact(z)
        rt = max(float(np.max(np.abs(p - ce.p))), abs(l2 - lam[1]), abs(l3 - lam[2]))
        z_back = hc.contact_to_cp3(p, l2 / math.hypot(l2, l3), l3 / math.hypot(l2, l3))
        J = hc.cp3_to_j6(z)
        res = hc.complex_structure_residuals(J)
        J_gen = hc.cp3_to_j6(rng.normal(size=4) + 1j * rng.normal(size=4))
        res_gen = hc.complex_structure_residuals(J_gen)
        orient = 0.0 if res["orientation"] > 0 and res_gen["orientation"] > 0 else 1.0
        ce_gen = hc.random_contact_element(rng)
        out += [
            _record(item, "hopf.predicate", k, pred, lab),
            _record(item, "hopf.roundtrip", k, rt, lab),
            _record(item, "hopf.roundtrip_inverse", k, hc.projective_distance(z_back, z), lab),
            _record(item, "hopf.j6_structure", k,
                    max(res["square"], res["orthogonal"], res_gen["square"],
                        res_gen["orthogonal"], orient), lab),
            _record(item, "hopf.triangle", k, float(np.max(np.abs(hc.kappa(ce) - J))), lab),
            _record(item, "hopf.twistor_level", k,
                    abs(hc.twistor_level(hc.j6_to_cp3(hc.kappa(ce_gen)))), lab),
        ]
    for k in range(s.hopf_pairs):
        c1 = hc.random_contact_element(rng)
        lam = rng.normal(size=3)
        c2 = hc.ContactElement.from_frame_coords(c1.p, lam / np.linalg.norm(lam))
        g = abs(hc.twistor_metric(hc.f_map(c1), hc.f_map(c2)) - float(c1.xi @ c2.xi))
        out.append(_record(item, "hopf.twistor_metric", k, g, lab))
        P = np.eye(4) - np.outer(c1.p, c1.p) - np.outer(c1.xi, c1.xi)
        d1, d2 = P @ rng.normal(size=4), P @ rng.normal(size=4)
        lhs = 0.5 * hc.skew_metric(hc.kappa_differential(c1, d1), hc.kappa_differential(c1, d2))
        out.append(_record(item, "hopf.kappa_metric", k,
                           abs(lhs - hc.fiber_metric_c(0.5, c1, d1, d2)), lab))
    for k, z in enumerate(near_miss_corpus(rng)):
        out.append(_record(item, "hopf.near_miss", k, 1.0 if hc.sigma_image_predicate(z) else 0.0,
                           lab, inputs=" ".join(f"{v.real:.6g}{v.imag:+.6g}j" for v in z)))
    return out


_RUNNERS = {
    ("identities", "algebra"): _run_algebra,
    ("identities", "twistor"): _run_twistor,
    ("minimality", "trace"): _run_minimality,
    ("minimality", "kodaira"): _run_kodaira_fixtures,
    ("tables", "fixtures"): _run_tables,
    ("hopf", "chain"): _run_hopf,
}


def run_item(item: WorkItem) -> list:
    return _RUNNERS[(item.suite, item.part)](item)


def plan(suite: str, entry_ids, settings: Settings, structure: Optional[str] = None,
         params: Optional[dict] = None) -> list:
    if suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}")
    if suite == "hopf":
        return [WorkItem("hopf", "chain", "s3xs1", "hopf", (), None, settings)]
    if suite == "tables":
        return [WorkItem("tables", "fixtures", eid, "-", (), None, settings) for eid in entry_ids]
    items = []
    for eid, name, p in variants(entry_ids, structure, params):
        key = tuple(sorted(p.items()))
        if suite == "identities":
            items.append(WorkItem(suite, "algebra", eid, name, key, None, settings))
            items += [WorkItem(suite, "twistor", eid, name, key, float(t), settings)
                      for t in settings.t_values]
        else:
            items += [WorkItem(suite, "trace", eid, name, key, float(t), settings)
                      for t in settings.t_values]
            if eid == "kodaira_primary":
                items.append(WorkItem(suite, "kodaira", eid, name, key, None, settings))
    return items


def run(items: list, workers: int = 1) -> list:
    """Execute work items (in a process pool when workers > 1); sorted records."""
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run_item, items))
    else:
        chunks = [run_item(it) for it in items]
    records = [r for chunk in chunks for r in chunk]
    return sorted(records, key=CheckRecord.sort_key)


def check_ids() -> list:
    return sorted(TOLERANCES)
