"""The ten end-to-end acceptance criteria, shared by the test suite and ``verify-all``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .ball import ball_radius_for_lambda1, ratio_gap_checks, scan, spectral_pair
from .bessel import bessel_zero
from .chiti import (MultipleCrossings, chiti_crossing, chiti_inequality_residual,
                    radial_measure, v1_volume_profile)
from .domain import domain_pair, gap_bound, ppw_check, study
from .mesh import make_domain, spherical_to_cartesian
from .perturbation import perturbation_report
from .profile import (build_profile, hemisphere_deviation, p_structure_check, q_bounds_check,
                      riccati_residuals)
from .radial import BallSpec
from .rearrangement import (DomainMeasure, cap_isoperimetric_defect, decreasing_rearrangement,
                            increasing_rearrangement, isoperimetric_check_s2)

DIMENSIONS = (2, 3, 4, 5, 6)
HALF_PI = math.pi / 2
MESH_H = 0.02


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool = True
    failures: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def require(self, ok: bool, what: str):
        if not ok:
            self.passed = False
            self.failures.append(what)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tail = "" if self.passed else " :: " + "; ".join(self.failures[:3])
        return f"[{status}] criterion {self.number:2d} {self.title} ({self.seconds:.1f}s){tail}"

    def as_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "failures": self.failures, "details": self.details, "seconds": self.seconds}


def _rel(a, b):
    return abs(a - b) / abs(b)


def hemisphere_exactness() -> CriterionResult:
    res = CriterionResult(1, "hemisphere eigenvalues n and 2(n+1)")
    for n in DIMENSIONS:
        pair = spectral_pair(BallSpec(n, HALF_PI))
        e1, e2 = _rel(pair.lambda1, n), _rel(pair.lambda2, 2 * (n + 1))
        res.details[f"n={n}"] = {"lambda1_rel_err": e1, "lambda2_rel_err": e2}
        res.require(e1 < 1e-8 and e2 < 1e-8, f"n={n}: relative errors {e1:.2e}, {e2:.2e}")
    return res


def euclidean_limit() -> CriterionResult:
    res = CriterionResult(2, "small-cap limit")
    theta = 1e-2
    ratio = spectral_pair(BallSpec(2, theta)).ratio
    res.details["ratio_n2"] = ratio
    res.require(abs(ratio - 2.5387) < 5e-3, f"ratio {ratio:.6f}")
    for n in (2, 3):
        scaled = theta**2 * spectral_pair(BallSpec(n, theta)).lambda1
        j = bessel_zero(n / 2 - 1, 1)
        err = _rel(scaled, j * j)
        res.details[f"scaled_lambda1_n{n}"] = {"value": scaled, "bessel": j * j, "rel_err": err}
        res.require(err < 1e-3, f"n={n}: theta^2 lambda1 off by {err:.2e}")
    return res


def _scan_check(res, n, lo, hi, check):
    table = scan(n, np.linspace(lo, hi, 200), [check], slack=1e-9)
    verdict = table.verdicts[check]
    res.details[f"n={n} [{lo:.3f},{hi:.3f}]"] = verdict
    res.require(verdict["passed"], f"n={n}: {check} broken at {verdict['first_violation']}")


def scaled_lambda1_decreasing() -> CriterionResult:
    res = CriterionResult(3, "theta1^2 lambda1 strictly decreasing")
    for n in DIMENSIONS:
        _scan_check(res, n, 0.05, math.pi - 0.05, "t2-lambda1-decreasing")
    return res


def ratio_increasing() -> CriterionResult:
    res = CriterionResult(4, "lambda2/lambda1 strictly increasing")
    for n in DIMENSIONS:
        _scan_check(res, n, 0.05, HALF_PI, "ratio-increasing")
    for n in (2, 3):
        _scan_check(res, n, 0.05, math.pi - 0.05, "ratio-increasing")
    return res


def ratio_and_gap_bounds() -> CriterionResult:
    res = CriterionResult(5, "ratio bound (n+2)/n and gap bound (n-1)/sin^2")
    thetas = np.concatenate([np.linspace(0.05, HALF_PI, 24, endpoint=False), [HALF_PI],
                             np.linspace(HALF_PI, math.pi - 0.05, 12)[1:]])
    for n in DIMENSIONS:
        worst = {}
        for t in thetas:
            check = ratio_gap_checks(spectral_pair(BallSpec(n, float(t))))
            flagged = check["equality"]
            if flagged != (check["regime"] == "hemisphere"):
                res.require(False, f"n={n} theta1={t:.4f}: equality flag {flagged}")
            res.require(check["passed"], f"n={n} theta1={t:.4f}: {check['regime']} check failed")
            worst[check["regime"]] = min(worst.get(check["regime"], math.inf),
                                         abs(check["ratio_delta"]))
        res.details[f"n={n}"] = worst
    return res


PERTURBATION_CASES = tuple((n, t) for n in (2, 3, 4, 5) for t in (0.3, 0.9, HALF_PI))


def perturbation_formulas() -> CriterionResult:
    res = CriterionResult(6, "dilation derivatives")
    for n, t in PERTURBATION_CASES:
        rep = perturbation_report(BallSpec(n, t))
        e1 = abs(rep.d_lambda1_dc - rep.fd1)
        e2 = abs(rep.d_lambda2_dc - rep.fd2)
        internal = abs(rep.d_lambda1_dc - rep.d_lambda1_dc_raw)
        key = f"n={n} theta1={t:.4f}"
        res.details[key] = {"fd_err1": e1, "fd_err2": e2, "internal": internal,
                            "d1": rep.d_lambda1_dc, "d2": rep.d_lambda2_dc}
        res.require(e1 < 1e-5 and e2 < 1e-5, f"{key}: FD disagreement {e1:.1e}, {e2:.1e}")
        res.require(internal < 1e-8, f"{key}: two forms differ by {internal:.1e}")
        res.require(rep.d_lambda1_dc < 0, f"{key}: d lambda1~/dc = {rep.d_lambda1_dc}")
        if n == 2:
            res.require(rep.d_lambda2_dc > 0, f"{key}: d lambda2~/dc = {rep.d_lambda2_dc}")
    return res


PROFILE_THETAS = (0.2, 0.5, 0.8, 1.1, 1.4, HALF_PI)


def profile_properties() -> CriterionResult:
    res = CriterionResult(7, "ratio profile structure")
    for n in DIMENSIONS:
        for t in PROFILE_THETAS:
            prof = build_profile(BallSpec(n, t))
            key = f"n={n} theta1={t:.4f}"
            p_check = p_structure_check(prof)
            q_check = q_bounds_check(prof)
            rp, rq = riccati_residuals(prof)
            bad = [k for k, ok in {**p_check["checks"], **q_check["checks"]}.items() if not ok]
            res.require(not bad, f"{key}: {', '.join(bad)}")
            res.require(rp < 1e-6 and rq < 1e-6, f"{key}: residuals {rp:.1e}, {rq:.1e}")
            entry = {"riccati_p": rp, "riccati_q": rq}
            if t == HALF_PI:
                dev = hemisphere_deviation(prof)
                entry["hemisphere"] = dev
                res.require(max(dev.values()) < 1e-8, f"{key}: closed forms off by {dev}")
            res.details[key] = entry
    return res


def rearrangement_checks() -> CriterionResult:
    res = CriterionResult(8, "rearrangement and isoperimetry on S^2")
    rng = np.random.default_rng(20240)
    cases = {
        "two-level": DomainMeasure.from_pairs([(2, 1), (1, 3)]),
        "constant": DomainMeasure.from_pairs([(1.5, 0.5), (1.5, 2.0)]),
        # dyadic data keeps every partial sum exact, so equality is bitwise
        "random dyadic": DomainMeasure(rng.integers(0, 40, 500) / 8.0,
                                       rng.integers(1, 64, 500) / 64.0),
    }
    for name, dm in cases.items():
        dec, inc = decreasing_rearrangement(dm), increasing_rearrangement(dm)
        levels = np.concatenate([np.unique(dm.values), [-1.0]])
        same = all(dm.distribution(t) == dec.distribution(t) == inc.distribution(t)
                   for t in levels)
        l2 = (dm.integral(2), dec.integral(2), inc.integral(2))
        res.require(same, f"{name}: distribution functions differ")
        res.require(l2[0] == l2[1] == l2[2], f"{name}: L2 mass {l2}")
        res.require(dec.is_monotone() and inc.is_monotone(), f"{name}: not monotone")
    two = decreasing_rearrangement(cases["two-level"])
    res.require(list(two.breaks) == [0, 1, 4] and list(two.values) == [2, 1],
                "two-level profile is not 2 on [0,1), 1 on [1,4)")
    for r in (0.1, 0.7, 1.3, HALF_PI, 2.5, 3.0):
        d = cap_isoperimetric_defect(r)["defect"]
        res.details[f"cap r={r:.3f}"] = d
        res.require(abs(d) < 1e-10, f"cap r={r}: defect {d:.2e}")
    corners = spherical_to_cartesian(np.array([0.75, 0.7, 0.8, 0.7]),
                                     np.array([0.0, 1.5, 3.2, 4.7]))
    quad = isoperimetric_check_s2(make_domain("geodesic_polygon", MESH_H, corners=corners))
    res.details["quadrilateral"] = quad
    res.require(quad["defect"] > 0, f"quadrilateral defect {quad['defect']}")
    return res


CHITI_AMPLITUDES = (0.05, 0.1)
PERTURBED_CAP = {"theta1": 1.0, "wavenumber": 2}


def _chiti_run(spectrum):
    spec = BallSpec(2, ball_radius_for_lambda1(2, spectrum.lambda1))
    v = v1_volume_profile(spec)
    dm = spectrum.u1_level_measure()
    report = chiti_crossing(dm, spec, v=v)
    ineq = chiti_inequality_residual(dm, spec, lambda1=spectrum.lambda1, v=v)
    return report, ineq


def chiti_comparison(h: float = MESH_H) -> CriterionResult:
    res = CriterionResult(9, "one-crossing comparison")
    for t in (0.6, 1.2):
        spec = BallSpec(2, t)
        rep = chiti_crossing(radial_measure(spec), spec)
        res.details[f"ball theta1={t}"] = rep.verdict_dict()
        res.require(rep.verdict == "identical", f"ball theta1={t}: verdict {rep.verdict}")
    for a in CHITI_AMPLITUDES:
        (_, fine), (_, coarse) = domain_pair("perturbed_cap", h, amplitude=a, **PERTURBED_CAP)
        key = f"perturbed cap a={a}"
        try:
            (rep, ineq), (_, ineq_c) = _chiti_run(fine), _chiti_run(coarse)
        except MultipleCrossings as exc:
            res.require(False, f"{key}: {exc}")
            continue
        est = float(np.max(np.abs(ineq.violations - ineq_c.violations))) / 3
        res.details[key] = {**rep.verdict_dict(), "max_violation": ineq.max_violation,
                            "mesh_error_estimate": est}
        res.require(rep.verdict == "one-crossing", f"{key}: verdict {rep.verdict}")
        res.require(rep.u_sharp_at_zero < rep.v_at_zero, f"{key}: u#(0) >= v(0)")
        res.require(ineq.max_violation <= 5 * est,
                    f"{key}: violation {ineq.max_violation:.2e} > 5 x {est:.2e}")
    return res


def _domain_cases():
    tri = spherical_to_cartesian(np.array([0.9, 0.7, 1.0]), np.array([0.0, 2.3, 4.0]))
    return [
        ("cap 0.8", "cap", {"theta1": 0.8}, True),
        ("cap 1.3", "cap", {"theta1": 1.3}, True),
        ("perturbed cap a=0.05", "perturbed_cap", {"amplitude": 0.05, **PERTURBED_CAP}, False),
        ("perturbed cap a=0.1", "perturbed_cap", {"amplitude": 0.1, **PERTURBED_CAP}, False),
        ("geodesic triangle", "geodesic_polygon", {"corners": tri}, False),
    ]


def end_to_end_ppw(h: float = MESH_H) -> CriterionResult:
    res = CriterionResult(10, "end-to-end PPW on S^2")
    for name, kind, params, is_cap in _domain_cases():
        (mf, sf), (mc, sc) = domain_pair(kind, h, **params)
        pf, pc = ppw_check(mf, sf), ppw_check(mc, sc)
        gf, gc = gap_bound(sf), gap_bound(sc)
        entry = {"ppw": pf.as_dict(), "gap": gf.as_dict()}
        margins = {}
        for key in ("gap_vs_equal_lambda1_cap", "ratio_vs_equal_area_cap"):
            st = study(pf.margins[key], pc.margins[key])
            margins[key] = {"margin": st.fine, "estimate": st.error_estimate}
            if is_cap:
                res.require(abs(st.fine) <= 3 * st.error_estimate,
                            f"{name}: {key} {st.fine:.2e} beyond 3 x {st.error_estimate:.2e}")
            else:
                res.require(st.fine > 3 * st.error_estimate,
                            f"{name}: {key} margin {st.fine:.2e} vs estimate {st.error_estimate:.2e}")
        for lf, lc in zip(gf.links, gc.links):
            tol = 3 * study(lf.margin, lc.margin).error_estimate
            res.require(lf.holds(tol), f"{name}: link '{lf.name}' margin {lf.margin:.2e}")
        resid = gf.center.max_residual
        res.require(resid < 1e-8 * gf.center.mass, f"{name}: center residual {resid:.1e}")
        entry["margins"] = margins
        res.details[name] = entry
    return res


CRITERIA = (hemisphere_exactness, euclidean_limit, scaled_lambda1_decreasing, ratio_increasing,
            ratio_and_gap_bounds, perturbation_formulas, profile_properties,
            rearrangement_checks, chiti_comparison, end_to_end_ppw)


def run_criterion(number: int) -> CriterionResult:
    start = time.perf_counter()
    res = CRITERIA[number - 1]()
    res.seconds = time.perf_counter() - start
    return res


def run_all(fail_fast: bool = False, numbers=None, echo=None) -> list[CriterionResult]:
    results = []
    for k in numbers or range(1, len(CRITERIA) + 1):
        res = run_criterion(k)
        results.append(res)
        if echo:
            echo(res.line())
        if fail_fast and not res.passed:
            break
    return results
