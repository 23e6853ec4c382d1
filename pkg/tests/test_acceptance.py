"""Acceptance criteria at desk scale (circle N = 256, sphere 32 x 64).

Each test prints one ``PASS``/``FAIL`` line with the measured value and the
threshold, then asserts. Expensive runs are shared session fixtures.
"""

import numpy as np
import pytest

from conftest import sup
from gcflab import cli
from gcflab import convex_body as cb
from gcflab import flow_engine as fe
from gcflab import monitors as mo
from gcflab import sphere_grid as sg


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
        assert ok, detail

    return emit


def test_criterion_01_ball_extinction(report, disc_run, ball3_run):
    e2 = abs(disc_run.T_hat / 0.5 - 1)
    e3 = abs(ball3_run.T_hat * 3 - 1)
    ok = disc_run.termination == ball3_run.termination == "stop_rule" and e2 <= 0.01 and e3 <= 0.01
    report(1, ok, f"disc T_hat={disc_run.T_hat:.8g} (rel err {e2:.2e}), 3-ball T_hat={ball3_run.T_hat:.8g} (rel err {e3:.2e}); tol 1%")


def test_criterion_02_linear_volume_decay(report, disc_run, ellipse_run, ball3_run, ellipsoid3_run):
    runs = {"disc": disc_run, "ellipse": ellipse_run, "3-ball": ball3_run, "3-ellipsoid": ellipsoid3_run}
    devs = {k: cli.volume_rate_deviation(r) for k, r in runs.items()}
    ok = all(v <= 0.01 for v in devs.values())
    report(2, ok, "max |dV/dt + |S^{n-1}||/|S^{n-1}| " + ", ".join(f"{k} {v:.2e}" for k, v in devs.items()) + "; tol 1%")


def test_criterion_03_duality_identity(report, ellipse256, perturbed256):
    d_ell = mo.duality_report(ellipse256).max_deviation
    d_pert = mo.duality_report(perturbed256).max_deviation
    devs = [mo.duality_report(cb.perturbed_ball(sg.make_grid(2, N), [(3, 0.1)])).max_deviation for N in (64, 128, 256)]
    rates = np.log2(np.array(devs[:-1]) / np.array(devs[1:]))
    ok = d_ell <= 1e-4 and d_pert <= 1e-3 and bool(np.all(rates >= 2))
    report(
        3,
        ok,
        f"ellipse {d_ell:.2e} (tol 1e-4), perturbed {d_pert:.2e} (tol 1e-3), "
        f"refinement 64/128/256 {devs[0]:.1e}/{devs[1]:.1e}/{devs[2]:.1e} (observed orders {rates.round(1).tolist()} >= 2)",
    )


def test_criterion_04_primal_dual_commutation(report, ellipse_flows_at_0p1):
    err = sup(cb.polar(ellipse_flows_at_0p1["primal"].body).values, ellipse_flows_at_0p1["dual"].body.values)
    report(4, err <= 2e-3, f"sup |s_(K_t)* - s*_t| at t=0.1 = {err:.2e}; tol 2e-3")


def test_criterion_05_primal_radial_consistency(report, ellipse_flows_at_0p1):
    radial = cb.support_from_radial(ellipse_flows_at_0p1["radial"].body)
    err = sup(radial.values, ellipse_flows_at_0p1["primal"].body.values)
    report(5, err <= 2e-3, f"sup support difference at t=0.1 = {err:.2e}; tol 2e-3")


def test_criterion_06_polar_hessian_relation(report, ellipse256, perturbed256):
    e_ell = mo.polar_hessian_check(ellipse256)
    e_pert = mo.polar_hessian_check(perturbed256)
    errs = [mo.polar_hessian_check(cb.perturbed_ball(sg.make_grid(2, N), [(3, 0.1)])) for N in (64, 128, 256)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    ok = e_ell <= 1e-3 and e_pert <= 1e-3 and bool(np.all(rates >= 2))
    report(
        6,
        ok,
        f"ellipse {e_ell:.2e}, perturbed {e_pert:.2e} (tol 1e-3), "
        f"refinement 64/128/256 {errs[0]:.1e}/{errs[1]:.1e}/{errs[2]:.1e} (observed orders {rates.round(1).tolist()} >= 2)",
    )


def test_criterion_07_chi_sign_preservation(report, ellipse_dual_run, perturbed_dual_run):
    parts, ok = [], True
    for name, run in (("ellipse", ellipse_dual_run), ("perturbed", perturbed_dual_run)):
        gamma_min = min(d.gamma for d in run.diagnostics)
        lam0 = mo.chi_balance(run.snapshots[0].body)
        lam = max(mo.lambda_threshold(2, gamma_min), 1.05 * lam0)
        chi = max(mo.chi_field(s.body, lam)[1] for s in run.snapshots)
        recorded = max(d.chi_max for d in run.diagnostics)
        ok &= run.termination == "stop_rule" and chi < 0 and recorded < 0
        parts.append(f"{name} gamma_min={gamma_min:.6f} lambda={lam:.4g} max chi_max={chi:.4g} over {len(run.snapshots)} snapshots")
    report(7, ok, "; ".join(parts))


def test_criterion_08_lambda_values(report):
    vals = (mo.lambda_threshold(2, 1), mo.lambda_threshold(3, 1), mo.lambda_threshold(2, 0.5))
    ok = vals == (20, 306.25, 20 * 2**24)
    report(8, ok, f"lambda_threshold(2,1)={vals[0]}, (3,1)={vals[1]}, (2,1/2)={vals[2]} (= 20*2^24: {vals[2] == 20 * 2**24})")


def test_criterion_09_scaling_bands(report, ellipse_run, disc_run, ball3_run):
    bt = mo.bound_tracks(ellipse_run)
    floor = 0.1 * 2**-0.5
    window = bool(np.all(bt.t[bt.valid] <= 0.95 * ellipse_run.T_hat)) and bt.valid.sum() >= 3
    ball = {name: cli.ball_band_errors(r) for name, r in (("disc", disc_run), ("3-ball", ball3_run))}
    ok = window and bt.K_floor >= floor and bt.s_star_ratio <= 3 and all(max(e) <= 0.01 for e in ball.values())
    report(
        9,
        ok,
        f"ellipse K floor {bt.K_floor:.4f} (>= {floor:.4f}), s* band ratio {bt.s_star_ratio:.3f} (<= 3), "
        f"K* ceiling {bt.Kstar_ceiling:.3f}; ball constants rel err "
        + ", ".join(f"{k} s* {e[0]:.1e} K {e[1]:.1e}" for k, e in ball.items())
        + " (tol 1%)",
    )


def test_criterion_10_asymptotic_roundness(report, ellipse256, ellipse_run):
    t = 0.9 * ellipse_run.T_hat
    st = fe.integrate_to(fe.FlowState(0.0, ellipse256), t, "primal")
    rho = mo.roundness(fe.normalize(st.body))
    report(10, rho <= 1.05, f"normalized max s / min s at t = 0.9 T_hat = {t:.6f}: {rho:.4f}; tol 1.05")


def test_criterion_11_static_geometry(report, circle256, ellipse256):
    sigma0 = cb.sigma_from_support(ellipse256)[0]
    area = cb.volume(ellipse256)
    inv = sup(cb.polar(cb.polar(ellipse256)).values, ellipse256.values)
    v = np.array([0.3, -0.2])
    steiner = float(np.max(np.abs(cb.steiner_point(cb.translate(ellipse256, v)) - cb.steiner_point(ellipse256) - v)))
    ok = abs(sigma0 - 0.5) <= 1e-6 and abs(area - 2 * np.pi) <= 1e-6 and inv <= 1e-4 and steiner <= 1e-6
    report(
        11,
        ok,
        f"sigma_1(0) err {abs(sigma0 - 0.5):.1e}, area err {abs(area - 2 * np.pi):.1e} (tol 1e-6), "
        f"involution {inv:.1e} (tol 1e-4), Steiner equivariance {steiner:.1e} (tol 1e-6)",
    )
