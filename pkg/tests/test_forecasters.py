import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hesforecast.forecasters import (
    CrostonState,
    ForecasterBank,
    HesState,
    Method,
    SesState,
    SmoothingParams,
    TsbState,
    burn_in,
    forecast,
    init_state,
    method_of,
    run_series,
    step,
    update,
)

factor = st.floats(0.005, 0.995)
params = st.builds(SmoothingParams, factor, factor)
demand = st.integers(0, 20)
positive = st.floats(0.1, 50.0)


# -- construction -------------------------------------------------------------


@pytest.mark.parametrize("alpha,beta", [(0.0, 0.1), (0.1, 1.0), (-0.2, 0.5), (0.5, float("nan"))])
def test_params_reject_out_of_range(alpha, beta):
    with pytest.raises(ValueError):
        SmoothingParams(alpha, beta)


def test_init_hes():
    s = init_state(Method.HES, SmoothingParams(0.1, 0.1))
    assert (s.y_hat, s.tau_hat, s.zero_run) == (1.0, 1.0, 0)


def test_init_tsb():
    s = init_state("TSB", SmoothingParams(0.1, 0.1))
    assert (s.y_hat, s.p_hat) == (1.0, 1.0)


def test_init_cr():
    s = init_state("cr", SmoothingParams(0.3, 0.3))
    assert (s.y_hat, s.tau_hat, s.zero_run) == (1.0, 1.0, 0)
    assert method_of(s) is Method.CR


def test_init_rejects_unknown_method():
    with pytest.raises(ValueError):
        init_state("ARIMA", SmoothingParams(0.1, 0.1))


# -- forecast -----------------------------------------------------------------


def test_hes_forecast_at_issue_point():
    s = HesState(SmoothingParams(0.1, 0.1), y_hat=2.1, tau_hat=3.8, zero_run=0)
    assert forecast(s) == pytest.approx(2.1 / 3.8, abs=1e-12)


def test_hes_forecast_after_zero_run():
    s = HesState(SmoothingParams(0.1, 0.1), y_hat=2.1, tau_hat=3.8, zero_run=3)
    assert forecast(s) == pytest.approx(2.1 / 3.95, abs=1e-12)
    assert forecast(s) == pytest.approx(0.531646, abs=1e-6)


def test_tsb_forecast():
    assert forecast(TsbState(SmoothingParams(0.1, 0.1), y_hat=2, p_hat=0.25)) == 0.5


def test_cr_non_intermittent_forecast():
    assert forecast(CrostonState(SmoothingParams(0.1, 0.1), y_hat=2, tau_hat=1)) == 2.0


def test_variant_forecasts():
    p = SmoothingParams(0.2, 0.2)
    assert forecast(CrostonState(p, Method.SBA, y_hat=3, tau_hat=2)) == pytest.approx(0.9 * 1.5)
    assert forecast(CrostonState(p, Method.SY, y_hat=3, tau_hat=2)) == pytest.approx(0.9 * 3 / 1.9)


def test_hes_pseudocounts():
    s = HesState(SmoothingParams(0.1, 0.1), y_hat=2.0, tau_hat=3.0, zero_run=2)
    assert s.c1 == pytest.approx(20.0)
    assert s.c0 == pytest.approx(40.0)
    # posterior mean of a demand after 2 further zeros: c1 / (c1 + c0 + 2)
    assert s.demand_probability() == pytest.approx(s.c1 / (s.c1 + s.c0 + 2 * 1))


def test_forecast_is_pure():
    s = CrostonState(SmoothingParams(0.1, 0.1), Method.SY, y_hat=2, tau_hat=3)
    forecast(s)
    assert s == CrostonState(SmoothingParams(0.1, 0.1), Method.SY, y_hat=2, tau_hat=3)


# -- update / step --------------------------------------------------------------


def test_cr_update_on_demand():
    s = CrostonState(SmoothingParams(0.1, 0.1), y_hat=2, tau_hat=4, zero_run=1)
    s = update(s, 3)
    assert s.y_hat == pytest.approx(2.1)
    assert s.tau_hat == pytest.approx(3.8)
    assert s.zero_run == 0


def test_tsb_update_on_zero():
    s = update(TsbState(SmoothingParams(0.1, 0.1), y_hat=2, p_hat=0.25), 0)
    assert s.y_hat == 2
    assert s.p_hat == pytest.approx(0.225)
    assert forecast(s) == pytest.approx(0.45)


def test_hes_zero_only_advances_counter():
    s = update(init_state("HES", SmoothingParams(0.4, 0.7)), 0)
    assert (s.y_hat, s.tau_hat, s.zero_run) == (1.0, 1.0, 1)


def test_step_cr_initial():
    f, s = step(init_state("CR", SmoothingParams(0.1, 0.1)), 0)
    assert f == 1.0
    assert s.zero_run == 1


def test_step_tsb():
    f, s = step(TsbState(SmoothingParams(0.1, 0.1), y_hat=2, p_hat=0.25), 3)
    assert f == 0.5
    assert s.y_hat == pytest.approx(2.1)
    assert s.p_hat == pytest.approx(0.325)


def test_step_ses():
    f, s = step(SesState(SmoothingParams(0.5, 0.5), level=1.0), 3)
    assert f == 1.0
    assert s.level == 2.0


@pytest.mark.parametrize("bad", [-1, -0.5, float("nan")])
@pytest.mark.parametrize("method", list(Method))
def test_update_rejects_bad_demand(method, bad):
    with pytest.raises(ValueError):
        update(init_state(method, SmoothingParams(0.1, 0.1)), bad)


def test_run_series_and_burn_in_agree():
    p = SmoothingParams(0.2, 0.1)
    ys = [0, 3, 0, 0, 1, 2, 0]
    fs, final = run_series(init_state("HES", p), ys)
    assert len(fs) == len(ys)
    assert final == burn_in(init_state("HES", p), ys)


# -- properties ------------------------------------------------------------------


@given(params, st.lists(demand, max_size=40), st.integers(1, 30))
def test_zero_run_shapes(p, history, n):
    """Constant, exponential and hyperbolic behaviour along a run of zeros."""
    states = {m: burn_in(init_state(m, p), history) for m in Method}
    for m in (Method.CR, Method.SBA, Method.SY):
        s = states[m]
        first = s.forecast()
        for _ in range(n):
            s = s.update(0)
            assert s.forecast() == first
    tsb, hes = states[Method.TSB], states[Method.HES]
    for _ in range(n):
        f_t, f_h = tsb.forecast(), hes.forecast()
        tsb, hes = tsb.update(0), hes.update(0)
        assert tsb.forecast() / f_t == pytest.approx(1 - p.beta, rel=1e-12)
        assert 1 / hes.forecast() - 1 / f_h == pytest.approx(p.beta / (2 * hes.y_hat), abs=1e-12, rel=1e-9)
        assert tsb.forecast() < f_t
        assert hes.forecast() < f_h


@given(params, st.lists(demand, max_size=60))
def test_forecasts_nonnegative_and_finite(p, ys):
    for m in Method:
        fs, _ = run_series(init_state(m, p), ys)
        assert all(math.isfinite(f) and f >= 0 for f in fs)


@given(params, st.lists(demand, max_size=60))
def test_zero_run_counts_zeros_since_last_demand(p, ys):
    s = burn_in(init_state("SY", p), ys)
    run = 0
    for y in ys:
        run = run + 1 if y == 0 else 0
    assert s.zero_run == run
    assert (s.zero_run == 0) == (not ys or ys[-1] != 0)


@given(params, st.lists(demand, max_size=30), demand)
def test_updates_are_convex(p, history, y):
    cr = burn_in(init_state("CR", p), history)
    tsb = burn_in(init_state("TSB", p), history)
    ses = burn_in(init_state("SES", p), history)
    new_cr, new_tsb, new_ses = cr.update(y), tsb.update(y), ses.update(y)

    def between(v, a, b):
        return min(a, b) - 1e-12 <= v <= max(a, b) + 1e-12

    assert between(new_ses.level, ses.level, y)
    assert between(new_tsb.p_hat, tsb.p_hat, float(y > 0))
    if y > 0:
        assert between(new_cr.y_hat, cr.y_hat, y)
        assert between(new_cr.tau_hat, cr.tau_hat, cr.zero_run + 1)
        assert between(new_tsb.y_hat, tsb.y_hat, y)


@given(params, st.floats(0.5, 20.0))
def test_non_intermittent_fixpoints(p, c):
    for m in Method:
        s = init_state(m, p)
        for _ in range(4000):
            s = s.update(c)
        want = (1 - p.beta / 2) * c if m is Method.SBA else c
        assert s.forecast() == pytest.approx(want, rel=1e-6)
        if m in (Method.CR, Method.HES):
            assert s.tau_hat == pytest.approx(1.0, abs=1e-6)


@given(params, positive, st.floats(1.0, 30.0))
def test_hes_matches_cr_at_issue_points(p, y_hat, tau_hat):
    hes = HesState(p, y_hat=y_hat, tau_hat=tau_hat, zero_run=0)
    cr = CrostonState(p, Method.CR, y_hat=y_hat, tau_hat=tau_hat, zero_run=0)
    assert hes.forecast() == cr.forecast()


@given(params, st.lists(st.lists(demand, min_size=5, max_size=5), min_size=1, max_size=4))
def test_bank_matches_scalar_states_bitwise(p, rows):
    series = np.array(rows, dtype=float)
    other = SmoothingParams(p.beta, p.alpha)
    for family_method, readers in [
        (Method.SES, [Method.SES]),
        (Method.CR, [Method.CR, Method.SBA, Method.SY, Method.HES]),
        (Method.TSB, [Method.TSB]),
    ]:
        bank = ForecasterBank(family_method, [p, other], len(rows))
        out = bank.run(series, burn=2, methods=readers)
        for m in readers:
            for k, q in enumerate((p, other)):
                for r, ys in enumerate(rows):
                    state = burn_in(init_state(m, q), ys[:2])
                    fs, _ = run_series(state, ys[2:])
                    assert out[m][k, r].tolist() == fs


def test_bank_rejects_cross_family_read():
    bank = ForecasterBank("TSB", [SmoothingParams(0.1, 0.1)], 3)
    with pytest.raises(ValueError):
        bank.forecast("HES")
