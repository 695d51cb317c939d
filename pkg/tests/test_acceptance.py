"""Acceptance suite.

Every criterion runs at full preset fidelity (50000 Trotter steps, 5000
frame intervals, T = 500) and prints one PASS/FAIL line; run with
``pytest tests/test_acceptance.py -v -s`` to see the lines as they go.
"""

import numpy as np

from nhevolve import bench, evolve, matlin, models, predict, spectral

T = 500.0


def _criterion(cid, checks):
    """checks: list of (ok, detail); prints one line and asserts."""
    failures = [detail for ok, detail in checks if not ok]
    status = "FAIL" if failures else "PASS"
    summary = "; ".join(detail for _, detail in checks)
    print(f"{cid} {status}: {summary}")
    assert not failures, f"{cid}: " + "; ".join(failures)


def _last_crossing_of_growth_balance(frame):
    """Last time the two branches' accumulated Im Lambda trade places."""
    diff = frame.Lambda[:, 0].imag - frame.Lambda[:, 1].imag
    sign_change = np.where(np.diff(np.sign(diff[1:])) != 0)[0] + 1
    k = sign_change[-1]
    f = diff[k] / (diff[k] - diff[k + 1])
    return frame.times[k] + f * (frame.times[k + 1] - frame.times[k])


def test_a1_degeneracy_points():
    checks = []
    for g in (1.0, -1.0):
        lp, lm = models.closed_form_eigvals(0.0, g)
        checks.append((abs(lp) < 1e-12 and abs(lm) < 1e-12,
                       f"closed form |lambda(0,{g:+.0f})| = {max(abs(lp), abs(lm)):.2e}"))
    for g0 in (1 + 1e-6, 1 - 1e-6):
        spec = models.TrajectorySpec(0.0, g0, 0.0, 1.0, 0.0, 0.0)
        h = models.sample_h(models.HamiltonianPath.circle(spec), 0.0)
        dec = matlin.eig_general(h)
        gap = abs(dec.values[0] - dec.values[1])
        checks.append((gap < 3e-3, f"gap at (0, {g0}) = {gap:.3e} (< 3e-3)"))
    _criterion("A1", checks)


def test_a2_landau_zener_validation():
    path = models.HamiltonianPath.landau_zener(slope=0.5, coupling=0.25,
                                               window=160.0)
    frame = spectral.build_frame(path, 1000)
    hist = evolve.propagate(path, frame.initial_state("-"), steps=64000,
                            outputs=1001)
    evolve.extract_populations(frame, hist)
    p_exc = hist.populations[-1, 0]
    p_formula = np.exp(-2 * np.pi * 0.25 ** 2 / 0.5)
    rel = abs(p_exc - p_formula) / p_formula
    _criterion("A2", [
        (rel < 0.05,
         f"excited population {p_exc:.5f} vs formula {p_formula:.5f} "
         f"(rel {rel:.2e} < 5%)"),
    ])


def test_a3_open_trajectory_quantitative(preset_cache):
    result = preset_cache("fig1")
    report = result.reports["forward"]
    frame = result.frames["forward"]
    crossing = _last_crossing_of_growth_balance(frame)
    switches = report.switch_times["simulation"]
    checks = [
        (0.78 * T <= crossing <= 0.82 * T,
         f"growth-balance crossing at {crossing / T:.3f}T (0.80T +- 0.02T)"),
        (report.winners["simulation"] == "+",
         f"simulation winner {report.winners['simulation']} (want +)"),
        (bool(switches), "simulation switch exists"),
    ]
    if switches:
        sw = switches[-1]
        checks.append((0.55 * T <= sw <= 0.80 * T,
                       f"simulation switch at {sw / T:.3f}T in [0.55T, 0.80T]"))
        checks.append((sw < crossing,
                       f"switch {sw / T:.3f}T earlier than crossing "
                       f"{crossing / T:.3f}T"))
    _criterion("A3", checks)


def test_a4_most_growing_loses(preset_cache):
    result = preset_cache("fig2")
    report = result.reports["forward"]
    label, _ = bench.classify_endpoint_fastest(result.frames["forward"])
    _criterion("A4", [
        (report.winners["simulation"] == "-",
         f"simulation winner {report.winners['simulation']} (want -)"),
        (report.most_growing == "+",
         f"most-growing {report.most_growing} (want +)"),
        (label == "-", f"endpoint-fastest {label} (want -)"),
    ])


def test_a5_non_chiral_despite_loop_around_degeneracy(preset_cache):
    result = preset_cache("fig3")
    cw, ccw = result.reports["cw"], result.reports["ccw"]
    _criterion("A5", [
        (cw.winners["simulation"] == "-",
         f"cw simulation winner {cw.winners['simulation']} (want -)"),
        (ccw.winners["simulation"] == "-",
         f"ccw simulation winner {ccw.winners['simulation']} (want -)"),
        (cw.winners["naive"] != ccw.winners["naive"],
         f"naive winners differ (cw {cw.winners['naive']}, "
         f"ccw {ccw.winners['naive']})"),
    ])


def test_a6_chiral_without_loop_around_degeneracy(preset_cache):
    result = preset_cache("fig4")
    cw, ccw = result.reports["cw"], result.reports["ccw"]
    checks = [
        (cw.winners["simulation"] == "-",
         f"cw simulation winner {cw.winners['simulation']} (want -)"),
        (ccw.winners["simulation"] == "+",
         f"ccw simulation winner {ccw.winners['simulation']} (want +)"),
        (result.chirality.chiral["simulation"], "simulation verdict chiral"),
    ]
    worst = 0.0
    for run in result.runs:
        drift = np.max(np.abs(run.naive.populations[-1]
                              - run.naive.populations[0]))
        worst = max(worst, drift)
    checks.append((worst < 0.1,
                   f"naive max final-initial population drift {worst:.3f} (< 0.1)"))
    _criterion("A6", checks)


def test_a7_quantitative_agreement_with_the_drive(preset_cache):
    fig5 = preset_cache("fig5")
    unperturbed = {
        "forward": preset_cache("fig1").reports["forward"],
        "reverse": preset_cache("fig2").reports["forward"],
    }
    limits = {"forward": 0.6 * T, "reverse": 0.8 * T}
    checks = []
    for run in fig5.runs:
        tag = f"{run.direction}/init{run.init}"
        sim, adv = run.history.populations, run.advanced.populations
        times = run.naive.times
        crossings = []
        for pops in (sim, adv):
            for col in range(2):
                crossings += bench.detect_switch_times(times, pops[:, col])
        mask = np.ones(len(times), dtype=bool)
        for c in crossings:
            mask &= np.abs(times - c) > 0.02 * T
        dmax = np.max(np.abs(sim[mask] - adv[mask]))
        checks.append((dmax < 0.05,
                       f"{tag}: max|dp| {dmax:.4f} away from switches (< 0.05)"))

        report = fig5.reports[run.direction]
        widx = fig5.frames[run.direction].branch_index(
            report.winners["simulation"])
        sw_sim = bench.detect_switch_times(times, sim[:, widx])
        sw_adv = bench.detect_switch_times(times, adv[:, widx])
        if sw_sim and sw_adv:
            dsw = abs(sw_sim[-1] - sw_adv[-1])
            checks.append((dsw <= 0.01 * T,
                           f"{tag}: switch gap {dsw / T:.4f}T (<= 0.01T)"))
            checks.append((sw_sim[-1] < limits[run.direction],
                           f"{tag}: switch {sw_sim[-1] / T:.3f}T < "
                           f"{limits[run.direction] / T:.1f}T"))
        else:
            checks.append((False, f"{tag}: missing switch in sim or prediction"))
    for direction, base in unperturbed.items():
        sw_pert = fig5.reports[direction].switch_times["simulation"][-1]
        sw_free = base.switch_times["simulation"][-1]
        checks.append((sw_pert < sw_free,
                       f"{direction}: driven switch {sw_pert / T:.3f}T earlier "
                       f"than undriven {sw_free / T:.3f}T"))
    _criterion("A7", checks)


def test_a8_closed_loops_with_the_drive(preset_cache):
    checks = []
    expectations = {"fig6": ("+", "+"), "fig8": ("-", "-")}
    for name, (want_cw, want_ccw) in expectations.items():
        result = preset_cache(name)
        cw, ccw = result.reports["cw"], result.reports["ccw"]
        checks.append((cw.winners["simulation"] == want_cw
                       and ccw.winners["simulation"] == want_ccw,
                       f"{name}: winners cw {cw.winners['simulation']} / "
                       f"ccw {ccw.winners['simulation']} "
                       f"(want {want_cw}/{want_ccw})"))
        checks.append((not result.chirality.chiral["simulation"],
                       f"{name}: non-chiral"))
    fig7 = preset_cache("fig7")
    checks.append((fig7.chirality.chiral["simulation"],
                   f"fig7: chiral (cw {fig7.reports['cw'].winners['simulation']}"
                   f", ccw {fig7.reports['ccw'].winners['simulation']})"))
    fig8 = preset_cache("fig8")
    sw_cw = fig8.reports["cw"].switch_times["simulation"][-1]
    sw_ccw = fig8.reports["ccw"].switch_times["simulation"][-1]
    checks.append((abs(sw_cw - sw_ccw) > 0.01 * T,
                   f"fig8: last switches differ (cw {sw_cw / T:.3f}T vs "
                   f"ccw {sw_ccw / T:.3f}T)"))
    for name in ("fig6", "fig7", "fig8"):
        for direction, report in preset_cache(name).reports.items():
            ok = (report.winners["advanced"] == report.winners["simulation"]
                  == report.endpoint_fastest)
            checks.append((ok, f"{name}/{direction}: advanced = simulation = "
                               f"endpoint-fastest ({report.endpoint_fastest})"))
    _criterion("A8", checks)


def test_a9_property_suite(preset_cache):
    checks = []

    # frame reconstruction residuals on every preset frame
    worst = 0.0
    for name in bench.PRESETS:
        for frame in preset_cache(name).frames.values():
            hs = models.sample_h_batch(frame.path, frame.times)
            recon = np.einsum("kab,kb,kbc->kac", frame.frames, frame.lambdas,
                              frame.inverse_frames)
            rel = np.linalg.norm(hs - recon, axis=(1, 2)) / np.linalg.norm(
                hs, axis=(1, 2))
            worst = max(worst, float(np.max(rel)))
    checks.append((worst < 1e-8, f"frame reconstruction residual {worst:.2e}"))

    # population normalization across all runs and series
    drift = 0.0
    for name in bench.PRESETS:
        for run in preset_cache(name).runs:
            drift = max(drift, float(np.max(np.abs(
                run.history.populations.sum(axis=1) - 1))))
            drift = max(drift, float(np.max(np.abs(
                run.naive.populations.sum(axis=1) - 1))))
            if run.advanced is not None:
                drift = max(drift, float(np.max(np.abs(
                    run.advanced.populations.sum(axis=1) - 1))))
    checks.append((drift < 1e-12, f"population normalization drift {drift:.2e}"))

    # linearity of the drive terms and exact reduction at zero drive
    frame = preset_cache("fig5").frames["reverse"]
    phi0 = np.array([0.0, 1.0])
    one = predict.advanced_series(frame, phi0,
                                  models.PerturbationSpec(1e-4, 2 * np.pi / 5))
    two = predict.advanced_series(frame, phi0,
                                  models.PerturbationSpec(2e-4, 2 * np.pi / 5))
    lin_err = 0.0
    for term in ("term2", "term3", "term4", "term5"):
        a, b = one.term_breakdown[term], two.term_breakdown[term]
        finite = np.isfinite(a)
        lin_err = max(lin_err, float(np.max(np.abs(
            b[finite] - a[finite] - np.log(2.0)))))
    term1_same = np.array_equal(one.term_breakdown["term1"],
                                two.term_breakdown["term1"])
    checks.append((lin_err < 1e-10 and term1_same,
                   f"drive-term linearity error {lin_err:.2e}, term1 unchanged "
                   f"{term1_same}"))

    naive = predict.naive_series(frame, phi0)
    adv0 = predict.advanced_series(frame, phi0,
                                   models.PerturbationSpec(0.0, 2 * np.pi / 5))
    d0 = float(np.max(np.abs(adv0.populations - naive.populations)))
    checks.append((d0 < 1e-12, f"advanced(eps=0) vs naive max|dp| {d0:.2e}"))

    # second-order integrator convergence on the fig1 trajectory
    path = bench.preset_path("fig1")
    psi0 = np.array([1.0, 0.4 - 0.1j])
    ref = evolve.reference_propagate(path, psi0, steps=2000, refine=8,
                                     outputs=2).final_state

    def err(steps):
        out = evolve.propagate(path, psi0, steps=steps, outputs=2).final_state
        phase = np.vdot(out, ref)
        return np.linalg.norm(out * phase / abs(phase) - ref)

    ratio = err(2000) / err(4000)
    checks.append((3.0 < ratio < 5.0,
                   f"integrator error ratio {ratio:.2f} in [3, 5]"))

    # W1 scales as 1/T between T = 500 and T = 1000
    w_500 = float(np.abs(preset_cache("fig1").frames["forward"].W1).max())
    spec_1000 = models.TrajectorySpec(0.0, 1.0, 0.3, 1000.0, -np.pi / 1000.0,
                                      0.4 * np.pi)
    frame_1000 = spectral.build_frame(models.HamiltonianPath.circle(spec_1000),
                                      5000)
    w_ratio = w_500 / float(np.abs(frame_1000.W1).max())
    checks.append((2.0 * 0.8 < w_ratio < 2.0 * 1.2,
                   f"max|W1| ratio T=500/T=1000 = {w_ratio:.3f} (2.0 +- 20%)"))

    # the end segment of the injection integral fixes the advanced winner
    pert = bench.standard_perturbation()
    full = predict.advanced_series(frame, phi0, pert)
    late = predict.advanced_series(frame, phi0, pert, t1_window=(0.6 * T, T))
    winner = lambda s: frame.labels[int(np.argmax(s.populations[-1]))]
    checks.append((winner(late) == winner(full),
                   f"end-segment injection window reproduces the advanced "
                   f"winner ({winner(full)})"))
    _criterion("A9", checks)
