"""
Verification experiments and the named check suites behind ``hydroalpha verify``.

Each experiment returns plain numbers; each suite turns experiments into a
list of :class:`Check` rows (measured value, tolerance, verdict).  The
reference configuration is the solver default grid with small single-mode
data u0 = delta e~_2(z) cos(x); e~_2 is odd about z = 1/2, so the data meet
the zero-vertical-mean compatibility condition.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .diagnostics import (
    MonitorObserver,
    analytic_radius_monitor,
    blockwise_energy_balance,
    default_R_weight,
    energy_balance,
    mean_invariant,
    smallness_check,
    theorem_monitor,
)
from .errors import ParameterError
from .field import Field, create_grid, d_x, d_z, l2_inner, l2_norm, to_coeffs, to_values, z_integral
from .littlewood_paley import (
    bony_parts,
    build_profile,
    chi,
    delta_q,
    plus_part,
    psi,
    s_q,
)
from .model import ModelParams, omega, pressure_gradient, rhs_R, vertical_velocity
from .oracles import EigenManufacturedField, clamped_eigenvalues_shooting
from .solver import init_state, nonlinear_work, run
from .zbasis import build_basis, h10_inner, h20_inner, l2z_inner

__all__ = [
    "Check",
    "SUITES",
    "REFERENCE_DELTA",
    "LARGE_DELTA",
    "reference_field",
    "reference_run",
    "energy_study",
    "decay_study",
    "mms_run",
    "mms_temporal",
    "mms_spatial",
    "bernstein_table",
    "poincare_study",
    "run_suite",
    "format_checks",
]

REFERENCE_DELTA = 0.01
LARGE_DELTA = 1.0


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    passed: bool
    relation: str = "<="

    def row(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.name:<48s} {self.value:>13.6g} {self.relation} {self.tol:.3g}"


def _le(name, value, tol) -> Check:
    return Check(name, float(value), float(tol), bool(value <= tol), "<=")


def _ge(name, value, tol) -> Check:
    return Check(name, float(value), float(tol), bool(value >= tol), ">=")


def _within(name, value, target, tol) -> Check:
    return Check(name, float(value), float(tol), bool(abs(value - target) <= tol),
                 f"~ {target:g} +-")


def format_checks(checks) -> str:
    return "\n".join(c.row() for c in checks)


# ---------------------------------------------------------------- reference run


def reference_field(grid, basis, delta: float = REFERENCE_DELTA, kx: int = 1, mode: int = 2
                    ) -> Field:
    """delta e~_mode(z) cos(kx x)."""
    c = np.zeros((grid.Nx, basis.n), dtype=complex)
    c[kx, mode - 1] = 0.5 * delta
    c[-kx, mode - 1] = 0.5 * delta
    return Field(grid, c @ basis.e_tilde)


def reference_run(
    dt: float = 1e-3,
    T: float = 2.0,
    delta: float = REFERENCE_DELTA,
    Nx: int = 64,
    Nz: int = 48,
    params: ModelParams | None = None,
    stride: int = 1,
    observe: bool = False,
) -> dict:
    """Reference configuration run; returns trajectory, final state and timing."""
    params = params or ModelParams()
    grid = create_grid(Nx, Nz)
    basis = build_basis(grid, params.n_modes, params.alpha1)
    u0 = reference_field(grid, basis, delta)
    small = smallness_check(u0, params)
    state = init_state(grid, basis, params, u0)
    R = default_R_weight(params, basis.lambdas[0])
    observers = []
    obs = None
    if observe:
        obs = MonitorObserver(params, R, small.ratio)
        observers.append(obs)
    t0 = time.perf_counter()
    traj, final = run(state, T, dt, observers, observer_stride=stride, snapshot_stride=stride)
    elapsed = time.perf_counter() - t0
    return {
        "grid": grid,
        "basis": basis,
        "params": params,
        "u0": u0,
        "smallness": small,
        "R_weight": R,
        "traj": traj,
        "state": final,
        "lam": state.lam,
        "elapsed": elapsed,
        "observer": obs,
    }


def energy_study(dts=(1e-3, 5e-4, 2.5e-4), T: float = 2.0, delta: float = REFERENCE_DELTA
                 ) -> dict:
    """Energy-law residuals of the reference run under dt refinement.

    ``max_rel`` is the largest per-interval residual over E(0); ``cum_rel``
    the summed |residual| over E(0), whose refinement ratios give the order.
    ``work_rel`` is the integrated discrete nonlinear work over E(0), which
    the continuous equations make vanish.  ``reference`` holds the first run.
    """
    out = {"dt": list(dts), "max_rel": [], "cum_rel": [], "work_rel": [], "mean_drift": [],
           "elapsed": []}
    for dt in dts:
        r = reference_run(dt=dt, T=T, delta=delta)
        eb = energy_balance(r["traj"], r["params"].alpha1, basis=r["basis"],
                            work=nonlinear_work(r["state"]))
        E0 = eb.energy[0]
        out["max_rel"].append(eb.max_abs / E0)
        out["cum_rel"].append(eb.cumulative / E0)
        out["work_rel"].append(eb.work_integral / E0)
        out["mean_drift"].append(mean_invariant(r["traj"])["max_abs"])
        out["elapsed"].append(r["elapsed"])
        if "reference" not in out:
            out["reference"] = r
    c = out["cum_rel"]
    out["orders"] = [math.log2(c[i] / c[i + 1]) for i in range(len(c) - 1)]
    return out


def decay_study(ks=(1, 2, 3), T: float = 0.05, dt: float = 1e-4, Nx: int = 64, Nz: int = 48,
                n_modes: int = 16, kx: int = 1) -> dict:
    """Log-slopes of R-disabled single-mode runs against lambda_k."""
    params = ModelParams(n_modes=n_modes)
    grid = create_grid(Nx, Nz)
    basis = build_basis(grid, n_modes, params.alpha1)
    rows = []
    for k in ks:
        u0 = reference_field(grid, basis, 1e-2, kx=kx, mode=k)
        st = init_state(grid, basis, params, u0, enforce_compatibility=False,
                        disable_nonlinear=True)
        a0 = st.amplitudes[kx, k - 1]
        _, fin = run(st, T, dt)
        slope = math.log(abs(fin.amplitudes[kx, k - 1] / a0)) / fin.t
        lam = float(basis.lambdas[k - 1])
        rows.append({"k": k, "slope": slope, "lambda": lam,
                     "rel_err": abs(-slope - lam) / lam,
                     "amp_rel_err": abs(fin.amplitudes[kx, k - 1] / a0 / math.exp(-lam * fin.t)
                                        - 1.0)})
    return {"rows": rows, "T": T, "dt": dt}


# ----------------------------------------------------------- manufactured field


def mms_run(Nx: int, Nz: int, n_modes: int, dt: float, T: float, amp: float = 0.05) -> dict:
    """Full nonlinear run forced by the manufactured field's residual.

    The analytic-band tracker is neutralised with a tiny lambda: the band
    does not enter the dynamics, only the stopping rule.
    """
    mf = EigenManufacturedField(amp=amp)
    params = ModelParams(n_modes=n_modes, lam=1e-8)
    grid = create_grid(Nx, Nz)
    basis = build_basis(grid, n_modes, params.alpha1)
    X, Z = grid.mesh()

    def forcing(t):
        u = to_coeffs(grid, mf.u(t, X, Z))
        lin = to_coeffs(grid, mf.linear_part(t, X, Z, params.alpha1))
        return lin - rhs_R(u, params)

    u0 = to_coeffs(grid, mf.u(0.0, X, Z))
    st = init_state(grid, basis, params, u0, forcing=forcing)
    _, fin = run(st, T, dt, snapshot_stride=10**9)
    exact = to_coeffs(grid, mf.u(fin.t, X, Z))
    return {"state": fin, "field": fin.field(), "error": l2_norm(fin.field() - exact)}


def mms_temporal(dts=(0.04, 0.02, 0.01, 0.005), T: float = 1.0, Nx: int = 64, Nz: int = 48,
                 n_modes: int = 16) -> dict:
    """Errors against the exact field and Richardson self-differences."""
    runs = [mms_run(Nx, Nz, n_modes, dt, T) for dt in dts]
    errs = [r["error"] for r in runs]
    diffs = [l2_norm(runs[i]["field"] - runs[i + 1]["field"]) for i in range(len(runs) - 1)]
    return {
        "dt": list(dts),
        "errors": errs,
        "orders": [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)],
        "richardson_orders": [math.log2(diffs[i] / diffs[i + 1]) for i in range(len(diffs) - 1)],
    }


def mms_spatial(grids=((32, 24), (64, 48)), dt: float = 2.5e-4, T: float = 0.5,
                n_modes: int = 16) -> dict:
    errs = [mms_run(nx, nz, n_modes, dt, T)["error"] for nx, nz in grids]
    return {"grids": list(grids), "errors": errs, "ratio": errs[0] / errs[-1]}


# ----------------------------------------------------------- harmonic analysis


def _random_band_field(grid, rng, kmax: int, kmin: int = 0) -> Field:
    c = np.zeros((grid.Nx, grid.Nz), dtype=complex)
    for k in range(kmin, kmax + 1):
        prof = rng.normal(size=grid.Nz) + 1j * rng.normal(size=grid.Nz)
        if k == 0:
            c[0] = prof.real
        else:
            c[k] = prof
            c[-k] = np.conj(prof)
    return Field(grid, c)


def bernstein_table(qs=range(0, 7), samples: int = 100, seed: int = 0) -> list:
    """Measured Bernstein constants per block.

    ``ball``: max ||d_x f|| / (2^q ||f||) over fields with |xi| <= (4/3) 2^q.
    ``ring``: smallest C with C^-1 2^q ||f|| <= ||d_x f|| <= C 2^q ||f|| over
    fields supported in the ring 2^q [3/4, 8/3].
    """
    rng = np.random.default_rng(seed)
    qs = list(qs)
    Nx = 2 ** (max(qs) + 3)
    grid = create_grid(Nx, 8)
    xi = np.abs(grid.xi)
    rows = []
    for q in qs:
        ring = (xi >= 0.75 * 2**q) & (xi <= 8.0 / 3.0 * 2**q) & (grid.k_index != Nx // 2)
        ball = (xi <= 4.0 / 3.0 * 2**q) & (grid.k_index != Nx // 2)
        c_ring, c_ball = 0.0, 0.0
        for _ in range(samples):
            for mask, kind in ((ring, "ring"), (ball, "ball")):
                vals = rng.normal(size=(Nx, 8))
                f = to_coeffs(grid, vals)
                f = Field(grid, np.where(mask[:, None], f.coeffs, 0.0))
                r = l2_norm(d_x(f)) / (2**q * l2_norm(f))
                if kind == "ring":
                    c_ring = max(c_ring, r, 1.0 / r)
                else:
                    c_ball = max(c_ball, r)
        rows.append({"q": q, "ring_C": c_ring, "ball_C": c_ball})
    return rows


def poincare_study(samples: int = 100, Nz: int = 48, seed: int = 0) -> dict:
    """Measured Poincare constants on random clamped profiles.

    The sharp discrete constants come from generalized eigenproblems on the
    clamped trial space; the measured ratios normalised by them must not
    exceed one (up to rounding).
    """
    from scipy.linalg import eigh

    from .zbasis import trial_space

    grid = create_grid(8, Nz)
    z = grid.z_nodes
    M = Nz - 4
    Phi = np.array([p(z) for p in trial_space(M)])
    D = grid.Dz
    w = grid.z_weights
    P1 = Phi @ D.T
    P2 = P1 @ D.T
    G0 = (Phi * w) @ Phi.T
    G1 = (P1 * w) @ P1.T
    G2 = (P2 * w) @ P2.T
    mu01 = eigh(G1, G0, eigvals_only=True, subset_by_index=[0, 0])[0]
    mu12 = eigh(G2, G1, eigvals_only=True, subset_by_index=[0, 0])[0]
    sharp01 = 1.0 / math.sqrt(mu01)
    sharp12 = 1.0 / math.sqrt(mu12)
    rng = np.random.default_rng(seed)
    r_inf, r01, r12 = [], [], []
    for _ in range(samples):
        coef = rng.normal(size=M) / (1.0 + np.arange(M)) ** rng.uniform(1.0, 3.0)
        u = coef @ Phi
        du, ddu = coef @ P1, coef @ P2
        n0 = math.sqrt(l2z_inner(grid, u, u))
        n1 = math.sqrt(l2z_inner(grid, du, du))
        n2 = math.sqrt(l2z_inner(grid, ddu, ddu))
        r_inf.append(np.abs(u).max() / n1)
        r01.append(n0 / n1)
        r12.append(n1 / n2)
    return {
        "sharp_L2_H1": sharp01,
        "sharp_H1_H2": sharp12,
        "max_Linf_over_dz": float(max(r_inf)),
        "max_L2_over_dz": float(max(r01)),
        "max_dz_over_dzz": float(max(r12)),
        "normalised_L2_over_dz": float(max(r01) / sharp01),
        "normalised_dz_over_dzz": float(max(r12) / sharp12),
    }


# ---------------------------------------------------------------- suites


def suite_lp(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    checks = []
    xi = np.exp(rng.uniform(math.log(1e-3), math.log(1e3), size=10_000))
    full = chi(xi) + sum(psi(2.0**-q * xi) for q in range(0, 14))
    homog = sum(psi(2.0**-q * xi) for q in range(-14, 14))
    checks.append(_le("partition chi + sum_{q>=0} psi", np.abs(full - 1).max(), 1e-12))
    checks.append(_le("partition sum_q psi (xi != 0)", np.abs(homog - 1).max(), 1e-12))

    grid = create_grid(64, 12)
    prof = build_profile(grid)
    f = _random_band_field(grid, rng, 31)
    worst = 0.0
    for q in prof.blocks:
        for q2 in prof.blocks:
            if abs(q - q2) >= 2:
                worst = max(worst, np.abs(delta_q(delta_q(f, q2, prof), q, prof).coeffs).max())
    checks.append(_le("Delta_q Delta_q' = 0 for |q-q'| >= 2", worst, 0.0))

    a = _random_band_field(grid, rng, 16)
    b = _random_band_field(grid, rng, 16)
    tab, tba, rem = bony_parts(a, b, prof)
    prod = to_values(a) * to_values(b)
    recon = to_values(tab) + to_values(tba) + to_values(rem)
    checks.append(_le("Bony reconstruction (relative)",
                      np.abs(recon - prod).max() / np.abs(prod).max(), 1e-12))

    worst = 0.0
    scale = 0.0
    for q2 in prof.blocks:
        piece = to_coeffs(grid, to_values(s_q(a, q2 - 1, prof)) * to_values(delta_q(b, q2, prof)))
        scale = max(scale, np.abs(piece.coeffs).max())
        for q in prof.blocks:
            if abs(q - q2) >= 5:
                worst = max(worst, np.abs(delta_q(piece, q, prof).coeffs).max())
    checks.append(_le("Delta_q(S_{q'-1}a Delta_q' b) = 0, |q-q'| >= 5", worst, 1e-14))

    fp = plus_part(f)
    checks.append(_le("||f+|| = ||f|| (relative)", abs(l2_norm(fp) - l2_norm(f)) / l2_norm(f),
                      1e-13))
    comm = max(
        np.abs(delta_q(fp, q, prof).coeffs - plus_part(delta_q(f, q, prof)).coeffs).max()
        for q in prof.blocks
    )
    comm_s = max(
        np.abs(s_q(fp, q, prof).coeffs - plus_part(s_q(f, q, prof)).coeffs).max()
        for q in prof.blocks
    )
    checks.append(_le("Delta_q f+ = (Delta_q f)+", comm, 1e-13))
    checks.append(_le("S_q f+ = (S_q f)+", comm_s, 1e-13))

    for row in bernstein_table(seed=seed):
        checks.append(_le(f"Bernstein ring C, q={row['q']}", row["ring_C"], 3.0))
        checks.append(_le(f"Bernstein ball C, q={row['q']}", row["ball_C"], 2.0))
    return checks


def suite_basis() -> list:
    checks = []
    grid = create_grid(16, 48)
    basis = build_basis(grid, 16, 1.0)
    n = basis.n
    H1 = np.array([[h10_inner(grid, a, b, 1.0) for b in basis.e_tilde] for a in basis.e_tilde])
    H2 = np.array([[h20_inner(grid, a, b, 1.0) for b in basis.e_tilde] for a in basis.e_tilde])
    checks.append(_le("H10 orthonormality", np.abs(H1 - np.eye(n)).max(), 1e-10))
    checks.append(_le("H20 = diag(lambda) (relative)",
                      np.abs(H2 - np.diag(basis.lambdas)).max() / basis.lambdas.max(), 1e-8))
    bc = max(np.abs(basis.e_tilde[:, [0, -1]]).max(), np.abs(basis.dz_tilde[:, [0, -1]]).max())
    checks.append(_le("clamped traces e, e'", bc, 1e-9))
    checks.append(_ge("lambda_1 / pi^2", basis.lambdas[0] / math.pi**2, 1.0))
    E = basis.e_orth
    G = (E * grid.z_weights) @ E.T
    checks.append(_le("L2 orthonormality of e_k", np.abs(G - np.eye(n)).max(), 1e-11))
    proj = ((basis.e_tilde * grid.z_weights) @ E.T) @ E
    checks.append(_le("span(e) = span(e~)", np.abs(proj - basis.e_tilde).max(), 1e-9))
    fine = build_basis(create_grid(16, 96), 8, 1.0)
    checks.append(_le("lambda_1 Nz=48 vs 96 (relative)",
                      abs(basis.lambdas[0] / fine.lambdas[0] - 1.0), 1e-3))
    oracle = clamped_eigenvalues_shooting(1.0, 3)
    for k in range(3):
        checks.append(_le(f"lambda_{k + 1} vs root oracle (relative)",
                          abs(basis.lambdas[k] / oracle[k] - 1.0), 1e-3))
    po = poincare_study()
    checks.append(_le("Poincare ||u||_inf / ||u_z||", po["max_Linf_over_dz"], 1.0 + 1e-6))
    checks.append(_le("Poincare ||u_z|| / ||u_zz||", po["max_dz_over_dzz"], 1.0 + 1e-6))
    checks.append(_le("Poincare ||u||/||u_z|| over sharp constant",
                      po["normalised_L2_over_dz"], 1.01))
    return checks


def suite_model(seed: int = 0) -> list:
    checks = []
    grid = create_grid(64, 48)
    X, Z = grid.mesh()
    gz = Z**2 * (1 - Z) ** 2
    u = to_coeffs(grid, np.cos(X) * gz)
    px = pressure_gradient(u, 1.0)
    expect = np.zeros(grid.Nx, dtype=complex)
    expect[1] = expect[-1] = -12.0
    expect[2] = (13.0 / 630.0) / 2j
    expect[-2] = np.conj(expect[2])
    checks.append(_le("pressure gradient example", np.abs(px - expect).max(), 1e-7))
    v = vertical_velocity(u)
    checks.append(_le("incompressibility u_x + v_z", np.abs(to_values(d_x(u) + d_z(v, 1))).max(),
                      1e-9))
    om = omega(to_coeffs(grid, np.sin(np.pi * Z) + 0 * X), 1.0)
    checks.append(_le("omega(sin pi z)", np.abs(to_values(om) - (1 + np.pi**2)
                                                * np.sin(np.pi * Z)).max(), 1e-8))
    # clamped profiles odd about z = 1/2 have zero vertical mean
    odd = gz * (2 * Z - 1)
    g1 = odd * np.cos(3 * Z - 1.5)
    g2 = odd * (2 * Z - 1) ** 2
    w = to_coeffs(grid, 0.3 * (np.cos(X) * g1 + 0.5 * np.sin(2 * X) * g2
                               + 0.2 * np.cos(3 * X + 1) * odd))
    mean = np.abs(z_integral(w)).max()
    Rw = rhs_R(w, ModelParams())
    checks.append(_le("zero-mean test field", mean, 1e-13))
    checks.append(_le("<R(u), u> / ||u||^3", abs(l2_inner(Rw, w)) / l2_norm(w) ** 3, 1e-7))
    pw = Field(grid, np.repeat(pressure_gradient(w, 1.0)[:, None], grid.Nz, axis=1))
    checks.append(_le("<p_x, u> for zero-mean u", abs(l2_inner(pw, w)), 1e-10))
    return checks


def suite_energy() -> list:
    es = energy_study()
    checks = [_le(f"energy residual / E(0), dt={dt:g}", m, 1e-7)
              for dt, m in zip(es["dt"], es["max_rel"])]
    checks += [_within(f"energy residual order {i + 1}", o, 2.0, 0.2)
               for i, o in enumerate(es["orders"])]
    checks += [_le(f"nonlinear work / E(0), dt={dt:g}", w, 1e-10)
               for dt, w in zip(es["dt"], es["work_rel"])]
    checks += [_le(f"vertical mean drift, dt={dt:g}", m, 1e-9)
               for dt, m in zip(es["dt"], es["mean_drift"])]
    checks.append(_le("reference run seconds", es["elapsed"][0], 60.0))
    blk = blockwise_energy_balance(es["reference"]["traj"], 1.0)
    checks.append(_le("blockwise vs global energy bookkeeping", blk["max_gap_relative"], 1e-10))
    return checks


def suite_decay() -> list:
    d = decay_study()
    return [_le(f"decay slope k={r['k']} vs lambda_k (relative)", r["rel_err"], 5e-3)
            for r in d["rows"]]


def suite_mms() -> list:
    tm = mms_temporal()
    sp = mms_spatial()
    checks = [_within(f"MMS temporal order {i + 1}", o, 2.0, 0.2)
              for i, o in enumerate(tm["richardson_orders"])]
    checks.append(_ge("MMS spatial error ratio (32,24)->(64,48)", sp["ratio"], 100.0))
    return checks


SUITES = {
    "lp": suite_lp,
    "basis": suite_basis,
    "model": suite_model,
    "energy": suite_energy,
    "decay": suite_decay,
    "mms": suite_mms,
}


def run_suite(name: str) -> list:
    """Checks of one named suite, or of every suite for ``"all"``."""
    if name == "all":
        return [c for key in SUITES for c in SUITES[key]()]
    if name not in SUITES:
        raise ParameterError(f"unknown suite {name!r}; choose from {[*SUITES, 'all']}")
    return SUITES[name]()
