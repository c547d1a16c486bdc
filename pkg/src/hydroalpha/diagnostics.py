"""
Run monitors: energy law, vertical-mean invariant, data smallness, the
weighted-norm bounds of the global existence estimate and the analytic band.

Every monitor is a pure function of a trajectory (time-stamped Fields plus,
where needed, the theta series) and the run constants.  Generic constants of
the a-priori estimates are never tested against; the monitors report
measured ratios.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AnalyticBandExhausted, NumericError, ParameterError
from .field import Field, d_z, l2_norm, z_integral
from .littlewood_paley import (
    AnalyticWeightParams,
    DyadicProfile,
    analytic_weight,
    besov_norm,
    block_pairings,
    build_profile,
    chemin_lerner_norm,
)
from .model import ModelParams

__all__ = [
    "MONITOR_COLUMNS",
    "MonitorReport",
    "MonitorObserver",
    "EnergyBalance",
    "energy_of",
    "dissipation_of",
    "energy_balance",
    "blockwise_energy_balance",
    "mean_invariant",
    "SmallnessReport",
    "smallness_check",
    "theorem_monitor",
    "analytic_radius_monitor",
    "default_R_weight",
    "write_monitor_csv",
    "write_summary_json",
    "format_float",
    "run_summary",
]

MONITOR_COLUMNS = (
    "t",
    "E",
    "D",
    "energy_residual",
    "vertical_mean_max",
    "theta",
    "a_over_lambda",
    "besov_u_32",
    "besov_dzu_32",
    "weighted_sup_32",
    "smallness_ratio",
    "status",
)

MEAN_TOL = 1e-9


def format_float(x) -> str:
    """Shortest round-trip repr; the same bits always print the same text."""
    return repr(float(x))


def default_R_weight(params: ModelParams, lambda1: float) -> float:
    """R = min(1, lambda_1 / 2) unless configured."""
    return params.R_weight if params.R_weight is not None else min(1.0, 0.5 * lambda1)


def energy_of(u: Field, alpha1: float) -> float:
    """||u||^2 + a1^2 ||u_z||^2."""
    return l2_norm(u) ** 2 + alpha1**2 * l2_norm(d_z(u, 1)) ** 2


def dissipation_of(u: Field, alpha1: float) -> float:
    """||u_z||^2 + a1^2 ||u_zz||^2."""
    return l2_norm(d_z(u, 1)) ** 2 + alpha1**2 * l2_norm(d_z(u, 2)) ** 2


def _times_fields(traj) -> tuple[np.ndarray, list]:
    if hasattr(traj, "times") and hasattr(traj, "fields"):
        return np.asarray(traj.times, dtype=float), list(traj.fields)
    pairs = list(traj)
    return np.array([float(t) for t, _ in pairs]), [f for _, f in pairs]


def _thetas(traj, thetas) -> np.ndarray:
    if thetas is None:
        thetas = getattr(traj, "thetas", None)
    if thetas is None:
        raise ParameterError("theta series required (pass thetas or a Trajectory)")
    return np.asarray(thetas, dtype=float)


@dataclass(frozen=True)
class EnergyBalance:
    """Per-interval residuals E(t_{i+1}) - E(t_i) + 2 int D dt - 2 int W dt.

    ``work`` holds the midpoint nonlinear work W per interval (zeros when no
    work functional was supplied).
    """

    times: np.ndarray
    energy: np.ndarray
    residuals: np.ndarray
    rule: str
    work: np.ndarray | None = None

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.residuals).max()) if self.residuals.size else 0.0

    @property
    def cumulative(self) -> float:
        """Sum of |residual| over all intervals."""
        return float(np.abs(self.residuals).sum())

    @property
    def work_integral(self) -> float:
        """Sum of 2 h |W| over all intervals."""
        if self.work is None:
            return 0.0
        h = np.diff(self.times)
        return float(np.sum(2.0 * h * np.abs(self.work)))


def energy_balance(traj, alpha1: float, rule: str = "midpoint", work=None, basis=None
                   ) -> EnergyBalance:
    """Residual of the energy law (1/2) dE/dt + D = 0 on each interval.

    ``rule = "midpoint"`` integrates D at the interval's mean state, the
    quadrature the Crank-Nicolson step is exact for, so the residual isolates
    the explicit nonlinear treatment.  ``rule = "trapezoid"`` averages the
    endpoint dissipations instead and carries an additional
    (lambda dt)^3 E per step from the linear part.

    ``work(u, t)`` is the semi-discrete nonlinear work <R(u), u>, which is
    zero for the continuous equations and spectrally small for the discrete
    ones.  Subtracting it at the interval midpoint leaves only the time
    discretization error in the residual.

    With ``basis`` given and a trajectory carrying Galerkin amplitudes, E and
    D are evaluated as Lx sum |u~|^2 and Lx sum lambda |u~|^2.  These equal
    the quadrature forms up to rounding amplified by the largest eigenvalue
    (about 1e-13 relative), a floor that would otherwise accumulate to a
    dt-independent term in the summed residual.
    """
    if rule not in ("midpoint", "trapezoid"):
        raise ParameterError(f"rule must be 'midpoint' or 'trapezoid', got {rule!r}")
    t, fields = _times_fields(traj)
    if len(fields) < 2:
        raise ParameterError("energy balance needs at least two snapshots")
    amps = getattr(traj, "amplitudes", None)
    if basis is not None and amps is not None and len(amps) == len(fields):
        Lx = fields[0].grid.Lx
        lam = basis.lambdas
        amps = [np.asarray(a) for a in amps]

        def E_of(i):
            return Lx * float(np.sum(np.abs(amps[i]) ** 2))

        def D_of(a):
            return Lx * float(np.sum(lam * np.abs(a) ** 2))

        def D_mid(i):
            return D_of(0.5 * (amps[i] + amps[i + 1]))

        def D_end(i):
            return D_of(amps[i])
    else:
        def E_of(i):
            return energy_of(fields[i], alpha1)

        def D_mid(i):
            return dissipation_of((fields[i] + fields[i + 1]) * 0.5, alpha1)

        def D_end(i):
            return dissipation_of(fields[i], alpha1)

    E = np.array([E_of(i) for i in range(len(fields))])
    res = np.empty(len(fields) - 1)
    W = np.zeros(len(fields) - 1)
    for i in range(len(fields) - 1):
        h = t[i + 1] - t[i]
        mid = (fields[i] + fields[i + 1]) * 0.5
        if rule == "midpoint":
            D = D_mid(i)
        else:
            D = 0.5 * (D_end(i) + D_end(i + 1))
        if work is not None:
            W[i] = work(mid, 0.5 * (t[i] + t[i + 1]))
        res[i] = E[i + 1] - E[i] + 2.0 * h * D - 2.0 * h * W[i]
    return EnergyBalance(times=t, energy=E, residuals=res, rule=rule,
                         work=W if work is not None else None)


def _block_energy(u: Field, alpha1: float, profile: DyadicProfile) -> dict:
    uz = d_z(u, 1)
    p0 = block_pairings(u, u, profile)
    p1 = block_pairings(uz, uz, profile)
    return {q: p0[q] + alpha1**2 * p1[q] for q in p0}


def _block_dissipation(u: Field, alpha1: float, profile: DyadicProfile) -> dict:
    uz = d_z(u, 1)
    uzz = d_z(uz, 1)
    p1 = block_pairings(uz, uz, profile)
    p2 = block_pairings(uzz, uzz, profile)
    return {q: p1[q] + alpha1**2 * p2[q] for q in p1}


def blockwise_energy_balance(traj, alpha1: float, profile: DyadicProfile | None = None) -> dict:
    """Energy law per dyadic block, with the zero mode as its own entry.

    Block energies are the pairings <Delta_q u, u> + a1^2 <Delta_q u_z, u_z>,
    which sum over q (plus the zero mode) to the global energy exactly.
    Returns the per-block residual series and the largest gap between the
    summed blockwise residual and the global one.
    """
    t, fields = _times_fields(traj)
    if len(fields) < 2:
        raise ParameterError("energy balance needs at least two snapshots")
    if profile is None:
        profile = build_profile(fields[0].grid)
    glob = energy_balance(traj, alpha1, "midpoint")
    keys = list(profile.blocks) + ["zero"]
    per_block = {k: np.empty(len(fields) - 1) for k in keys}
    energies = [_block_energy(f, alpha1, profile) for f in fields]
    for i in range(len(fields) - 1):
        h = t[i + 1] - t[i]
        D = _block_dissipation((fields[i] + fields[i + 1]) * 0.5, alpha1, profile)
        for k in keys:
            per_block[k][i] = energies[i + 1][k] - energies[i][k] + 2.0 * h * D[k]
    summed = np.sum([per_block[k] for k in keys], axis=0)
    gap = np.abs(summed - glob.residuals)
    scale = max(float(np.abs(glob.energy).max()), np.finfo(float).tiny)
    return {
        "per_block": per_block,
        "global": glob.residuals,
        "max_gap": float(gap.max()),
        "max_gap_relative": float(gap.max() / scale),
    }


def _mean_line_max(u: Field) -> float:
    line = z_integral(u)
    vals = np.fft.ifft(line, norm="forward").real
    return float(np.abs(vals).max())


def mean_invariant(traj, tol: float = MEAN_TOL) -> dict:
    """Largest |int_0^1 u dz| over x and t, and its drift from the start."""
    _, fields = _times_fields(traj)
    if not fields:
        raise ParameterError("empty trajectory")
    first = np.fft.ifft(z_integral(fields[0]), norm="forward").real
    max_abs = 0.0
    drift = 0.0
    for f in fields:
        vals = np.fft.ifft(z_integral(f), norm="forward").real
        max_abs = max(max_abs, float(np.abs(vals).max()))
        drift = max(drift, float(np.abs(vals - first).max()))
    return {
        "max_abs": max_abs,
        "drift": drift,
        "tol": tol,
        "violated": bool(max_abs > tol),
    }


@dataclass(frozen=True)
class SmallnessReport:
    N_half: float
    N_32: float
    ratio: float
    passed: bool

    def to_json_dict(self) -> dict:
        return {"N_half": self.N_half, "N_32": self.N_32, "ratio": self.ratio,
                "pass": self.passed}


def _data_norm(u0: Field, a: float, s: float, profile: DyadicProfile) -> float:
    try:
        w = analytic_weight(u0, AnalyticWeightParams(a=a, lam=1.0, theta=0.0))
        val = besov_norm(w, s, profile).value + besov_norm(d_z(w, 1), s, profile).value
    except NumericError as exc:
        raise NumericError(f"initial data not analytic at band a = {a}") from exc
    if not math.isfinite(val):
        raise NumericError(f"initial data not analytic at band a = {a}")
    return val


def smallness_check(u0: Field, params: ModelParams, profile: DyadicProfile | None = None
                    ) -> SmallnessReport:
    """ratio = N_1/2 (1 + N_3/2) / (c a); the data pass when ratio <= 1.

    N_s = ||e^{a|D|} u0||_{B^s} + ||e^{a|D|} d_z u0||_{B^s}.
    """
    if profile is None:
        profile = build_profile(u0.grid)
    nh = _data_norm(u0, params.a, 0.5, profile)
    n32 = _data_norm(u0, params.a, 1.5, profile)
    ratio = nh * (1.0 + n32) / (params.c_small * params.a)
    return SmallnessReport(N_half=nh, N_32=n32, ratio=ratio, passed=bool(ratio <= 1.0))


def _weighted_fields(fields, times, thetas, a, lam, R, op):
    """e^{Rt} op(u)_phi at every sample; stops before the first exhausted band."""
    out = []
    for t, f, th in zip(times, fields, thetas):
        try:
            uphi = analytic_weight(f, AnalyticWeightParams(a=a, lam=lam, theta=th))
        except AnalyticBandExhausted:
            break
        out.append((t, op(uphi) * math.exp(R * t)))
    return out


def _sup_fraction(series: np.ndarray, times: np.ndarray) -> float:
    if times.size < 2 or times[-1] == times[0]:
        return 0.0
    return float((times[int(np.argmax(series))] - times[0]) / (times[-1] - times[0]))


def theorem_monitor(
    traj,
    params: ModelParams,
    lam: float,
    R_weight: float,
    thetas: Sequence[float] | None = None,
    profile: DyadicProfile | None = None,
    dt_snapshots=None,
) -> dict:
    """Weighted Chemin-Lerner norms of the global estimate, as ratios to the data.

    Monitored (all at s = 3/2, weight e^{Rt}, u_phi at the recorded theta):
    L~inf of u_phi and d_z u_phi, L~2 of d_z u_phi and d_z^2 u_phi.  With at
    least three snapshots the time-derivative norms are added, d_t u taken by
    central differences unless ``dt_snapshots`` supplies it.  The horizon is
    the run's final time, not infinity.
    """
    times, fields = _times_fields(traj)
    th = _thetas(traj, thetas)
    if profile is None:
        profile = build_profile(fields[0].grid)
    a = params.a
    ident = lambda f: f  # noqa: E731
    dz1 = lambda f: d_z(f, 1)  # noqa: E731
    dz2 = lambda f: d_z(f, 2)  # noqa: E731
    w_u = _weighted_fields(fields, times, th, a, lam, R_weight, ident)
    partial = len(w_u) < len(fields)
    if not w_u:
        raise AnalyticBandExhausted("analytic band exhausted at the first snapshot")
    nvalid = len(w_u)
    w_dz = _weighted_fields(fields[:nvalid], times, th, a, lam, R_weight, dz1)
    w_dzz = _weighted_fields(fields[:nvalid], times, th, a, lam, R_weight, dz2)

    norms = {
        "linf_u": chemin_lerner_norm(w_u, math.inf, 1.5, None, profile),
        "linf_dzu": chemin_lerner_norm(w_dz, math.inf, 1.5, None, profile),
        "l2_dzu": chemin_lerner_norm(w_dz, 2, 1.5, None, profile),
        "l2_dzzu": chemin_lerner_norm(w_dzz, 2, 1.5, None, profile),
    }
    u0 = fields[0]
    data = _data_norm(u0, a, 1.5, profile)
    ratios = {k: (v / data if data > 0 else 0.0) for k, v in norms.items()}

    # time series of the pointwise-in-time weighted norms, for the sup location
    series = np.array([besov_norm(f, 1.5, profile).value for _, f in w_u]) + np.array(
        [besov_norm(f, 1.5, profile).value for _, f in w_dz]
    )
    tv = times[:nvalid]
    half = tv <= tv[0] + 0.5 * (tv[-1] - tv[0])
    early_max = float(series[half].max()) if series.size else 0.0
    bounded = bool(series.size < 3 or series[-1] <= early_max * (1.0 + 1e-12))

    report = {
        "horizon": float(tv[-1]) if tv.size else 0.0,
        "R_weight": float(R_weight),
        "data_norm_32": data,
        "norms": norms,
        "ratios": ratios,
        "ratio_total": float(sum(norms.values()) / data) if data > 0 else 0.0,
        "sup_time_fraction": _sup_fraction(series, tv),
        "bounded": bounded,
        "partial": partial,
        "note": "finite horizon substitutes for the half line; ratios are measured, not tested",
    }

    if nvalid >= 3:
        if dt_snapshots is None:
            coeffs = np.array([f.coeffs for f in fields[:nvalid]])
            dcoef = np.gradient(coeffs, tv, axis=0, edge_order=2)
            ut = [Field(u0.grid, c) for c in dcoef]
        else:
            ut = list(dt_snapshots)[:nvalid]
        w_ut = _weighted_fields(ut, tv, th, a, lam, R_weight, ident)
        w_utz = _weighted_fields(ut, tv, th, a, lam, R_weight, dz1)
        tnorms = {
            "l2_ut": chemin_lerner_norm(w_ut, 2, 1.5, None, profile),
            "l2_utz": chemin_lerner_norm(w_utz, 2, 1.5, None, profile),
            "linf_dzu": norms["linf_dzu"],
            "linf_dzzu": chemin_lerner_norm(w_dzz, math.inf, 1.5, None, profile),
        }
        w0 = analytic_weight(u0, AnalyticWeightParams(a=a, lam=1.0, theta=0.0))
        tdata = (
            besov_norm(d_z(w0, 1), 1.5, profile).value
            + besov_norm(d_z(w0, 2), 1.5, profile).value
            + besov_norm(w0, 2.5, profile).value
            + besov_norm(d_z(w0, 1), 2.5, profile).value
        )
        lhs = sum(v**2 for v in tnorms.values())
        report["time_derivative"] = {
            "norms": tnorms,
            "data_norm": tdata,
            "ratio": float(lhs / tdata) if tdata > 0 else 0.0,
        }
    return report


def _C_R(R: float, T: float) -> float:
    """(int_0^T e^{-2Rt} dt)^{1/2}."""
    if R == 0.0:
        return math.sqrt(T)
    return math.sqrt(-math.expm1(-2.0 * R * T) / (2.0 * R))


def analytic_radius_monitor(
    traj,
    params: ModelParams,
    lam: float,
    R_weight: float,
    thetas: Sequence[float] | None = None,
    profile: DyadicProfile | None = None,
) -> dict:
    """theta series, margin to a/lambda and the Cauchy-Schwarz bound

        theta(T) <= C_R || e^{Rt} d_z^2 u_phi ||_{L~2_T(B^{1/2})},
        C_R = (int_0^T e^{-2Rt} dt)^{1/2}.
    """
    times, fields = _times_fields(traj)
    th = _thetas(traj, thetas)
    if profile is None:
        profile = build_profile(fields[0].grid)
    a_lam = params.a / lam
    T = float(times[-1] - times[0])
    w = _weighted_fields(fields, times - times[0], th, params.a, lam, R_weight,
                         lambda f: d_z(f, 2))
    l2 = chemin_lerner_norm(w, 2, 0.5, None, profile) if len(w) > 1 else 0.0
    C_R = _C_R(R_weight, T)
    bound = C_R * l2
    theta_T = float(th[-1])
    return {
        "theta": th.tolist(),
        "theta_final": theta_T,
        "a_over_lambda": a_lam,
        "margin": a_lam - theta_T,
        "half_band_ok": bool(theta_T <= 0.5 * a_lam),
        "monotone": bool(np.all(np.diff(th) >= 0.0)),
        "C_R": C_R,
        "l2_dzz_half": l2,
        "cs_bound": bound,
        "cs_holds": bool(theta_T <= bound + 1e-6),
    }


@dataclass
class MonitorReport:
    """Per-observation rows in ``MONITOR_COLUMNS`` order plus final verdicts."""

    rows: list = dc_field(default_factory=list)
    summary: dict = dc_field(default_factory=dict)


class MonitorObserver:
    """Solver observer filling a MonitorReport row per call.

    ``energy_residual`` is cumulative: E(t) - E(0) + 2 int_0^t D dt with the
    integral accumulated by the solver at each step's mean state.
    """

    def __init__(self, params: ModelParams, R_weight: float, smallness_ratio: float,
                 profile: DyadicProfile | None = None):
        self.params = params
        self.R_weight = R_weight
        self.smallness_ratio = smallness_ratio
        self.profile = profile
        self.report = MonitorReport()
        self._E0 = None
        self._wsup = 0.0
        self._mean_max = 0.0

    def __call__(self, state) -> None:
        u = state.field()
        profile = self.profile or state.profile
        E = state.energy()
        if self._E0 is None:
            self._E0 = E
        self._mean_max = max(self._mean_max, _mean_line_max(u))
        band = AnalyticWeightParams(a=self.params.a, lam=state.lam, theta=state.theta)
        if band.band > 0:
            uphi = analytic_weight(u, band)
            bu = besov_norm(uphi, 1.5, profile).value
            bdz = besov_norm(d_z(uphi, 1), 1.5, profile).value
            self._wsup = max(self._wsup, math.exp(self.R_weight * state.t) * (bu + bdz))
        else:
            bu = bdz = math.nan
        self.report.rows.append({
            "t": state.t,
            "E": E,
            "D": state.dissipation(),
            "energy_residual": E - self._E0 + state.dissipated,
            "vertical_mean_max": self._mean_max,
            "theta": state.theta,
            "a_over_lambda": state.a_over_lambda,
            "besov_u_32": bu,
            "besov_dzu_32": bdz,
            "weighted_sup_32": self._wsup,
            "smallness_ratio": self.smallness_ratio,
            "status": state.status,
        })


def _header_lines(header: dict | None) -> list:
    if not header:
        return []
    return [f"# {k}: {v}" for k, v in header.items()]


def write_monitor_csv(path, report: MonitorReport, header: dict | None = None) -> None:
    """CSV with '#' header lines, then the MONITOR_COLUMNS table."""
    buf = io.StringIO()
    for line in _header_lines(header):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MONITOR_COLUMNS)
    for row in report.rows:
        w.writerow([row[c] if c == "status" else format_float(row[c]) for c in MONITOR_COLUMNS])
    Path(path).write_text(buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_summary_json(path, summary: dict, header: dict | None = None) -> None:
    """JSON summary; the header (tool version, config hash) is the first key."""
    doc = {"header": dict(header or {})}
    doc.update(summary)
    Path(path).write_text(json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n")


def run_summary(traj, final, params: ModelParams, lam: float, R_weight: float,
                smallness: SmallnessReport | None, basis=None, work=None) -> dict:
    """Final verdicts and measured ratios of one run, JSON-ready.

    ``final`` is the solver's last state (status, t, tstar, steps).  Energy
    verdicts are only meaningful for unforced runs; ``work`` is the optional
    nonlinear work functional passed through to :func:`energy_balance`.
    """
    times, fields = _times_fields(traj)
    alpha1 = params.alpha1
    out = {
        "status": final.status,
        "t_final": float(final.t),
        "steps": int(final.steps),
        "tstar": None if final.tstar is None else float(final.tstar),
        "message": final.message or "",
        "lambda": float(lam),
        "a_over_lambda": float(params.a / lam),
        "R_weight": float(R_weight),
        "smallness": smallness.to_json_dict() if smallness is not None else None,
    }
    verdicts = {"completed": final.status == "completed"}
    if smallness is not None:
        verdicts["small_data"] = smallness.passed
    if len(fields) >= 2:
        eb = energy_balance(traj, alpha1, basis=basis, work=work)
        E0 = float(eb.energy[0])
        scale = E0 if E0 > 0 else 1.0
        out["energy"] = {
            "E0": E0,
            "max_residual": eb.max_abs,
            "max_residual_relative": eb.max_abs / scale,
            "cumulative_relative": eb.cumulative / scale,
            "work_relative": eb.work_integral / scale,
        }
        verdicts["energy_identity"] = bool(eb.max_abs <= 1e-7 * scale)
    mi = mean_invariant(traj)
    out["vertical_mean"] = mi
    verdicts["vertical_mean"] = not mi["violated"]
    ar = analytic_radius_monitor(traj, params, lam, R_weight)
    ar.pop("theta")
    out["analytic_radius"] = ar
    verdicts["half_band"] = ar["half_band_ok"]
    verdicts["theta_monotone"] = ar["monotone"]
    verdicts["cauchy_schwarz"] = ar["cs_holds"]
    try:
        out["theorem"] = theorem_monitor(traj, params, lam, R_weight)
    except AnalyticBandExhausted as exc:
        out["theorem"] = {"partial": True, "note": str(exc)}
    out["verdicts"] = verdicts
    return out
