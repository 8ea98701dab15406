import math

import pytest

from gkp_repeater.model import (
    AmplificationStrategy,
    ConfigError,
    PhysicalConstants,
    RepeaterConfig,
    derive,
)


def test_constants():
    c = PhysicalConstants()
    assert c.c_fiber == 2.0e5
    assert c.L_att == 22.0


def test_derive_direct_substitution():
    d = derive(RepeaterConfig(L=100.0, n=4, p_link=1.0, t_coh=1.0))
    assert d.L0 == 25.0
    assert d.tau == pytest.approx(1.25e-4, rel=1e-12)
    assert d.alpha == pytest.approx(1.25e-4, rel=1e-12)
    assert d.p == pytest.approx(math.exp(-25.0 / 22.0), rel=1e-12)
    assert d.q == pytest.approx(1.0 - d.p, abs=1e-15)


def test_derive_zero_success_probability():
    with pytest.raises(ConfigError, match="zero success probability"):
        derive(RepeaterConfig(L=100.0, n=4, p_link=0.0))


def test_derive_long_chain_probability():
    # 800 km over 8 segments at p_link = 0.7; value cross-checked by hand
    d = derive(RepeaterConfig(L=800.0, n=8, p_link=0.7))
    assert d.p == pytest.approx(0.7 * math.exp(-100.0 / 22.0), rel=1e-12)
    assert d.p == pytest.approx(7.43e-3, abs=5e-5)


def test_mean_wait_rounds_half_up():
    from gkp_repeater.model import mean_wait_steps

    # the chosen convention is floor(x + 0.5): exact halves go up, never to even
    assert int(math.floor(0.5 + 0.5)) == 1
    assert int(math.floor(2.5 + 0.5)) == 3
    for p in (0.05, 0.1, 0.3, 0.5, 0.7, 0.9):
        cfg = RepeaterConfig(L=44.0, n=2, p_link=p, t_coh=1.0)
        d = derive(cfg)
        assert d.T == int(math.floor(mean_wait_steps(d.p) + 0.5))


@pytest.mark.parametrize("kwargs,field", [
    (dict(L=-1.0, n=1), "L"),
    (dict(L=10.0, n=0), "n"),
    (dict(L=10.0, n=2, p_link=1.5), "p_link"),
    (dict(L=10.0, n=2, delta_sq=0.0), "delta_sq"),
    (dict(L=10.0, n=2, t_coh=0.0), "t_coh"),
    (dict(L=10.0, n=2, gamma_sq=-0.1), "gamma_sq"),
])
def test_validation_names_offending_field(kwargs, field):
    with pytest.raises(ConfigError) as err:
        RepeaterConfig(**kwargs).validate()
    assert err.value.field_name == field


def test_monotonicity_in_segment_count():
    prev = None
    for n in (1, 2, 4, 8, 16, 32):
        d = derive(RepeaterConfig(L=400.0, n=n, p_link=0.8, t_coh=2.0))
        if prev is not None:
            assert d.p > prev.p
            assert d.tau < prev.tau
            assert d.alpha < prev.alpha
        assert d.p <= 0.8
        assert d.alpha > 0
        prev = d


def test_default_strategy_is_auto():
    assert RepeaterConfig(L=10.0, n=2).strategy is AmplificationStrategy.AUTO
