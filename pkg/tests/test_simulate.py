import json
import math
from pathlib import Path

import numpy as np
import pytest

from hlcone.geometry import (
    RotationGenerator,
    cylinder_model,
    moment_expansion,
    rotate_model,
    stabilizer_free_generator,
    su_basis,
)
from hlcone.harmonics import expansion
from hlcone.quadrature import GridSpec
from hlcone.simulate import (
    IterationLedger,
    IterationState,
    LedgerRecord,
    SimConfig,
    classify,
    extract_rotation,
    generator_from_entries,
    load_scenario,
    make_state,
    out_of_trichotomy,
    phi_audit,
    rate_fit,
    run,
    step_case1,
    step_case2,
    step_case3,
    validate_ratios,
)

MODEL = cylinder_model(1, 3)
F3 = expansion(1, 3).mode(nu=(1, -1), parity="cos", h={(1,): 1.0})
# coarse grids: every assertion below is ratio- or bookkeeping-based, and the
# grid is scale covariant, so node counts do not move the measured ratios
CONFIG = SimConfig(s_max=4, n_radial=20, n_polar=14, n_sphere=6)
SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def small_generator(norm=1e-3, seed=13):
    rng = np.random.default_rng(seed)
    basis = su_basis(4)
    a = np.zeros((4, 4), dtype=complex)
    for c, b in zip(rng.normal(size=len(basis)), basis):
        a += c * b
    gen = stabilizer_free_generator(MODEL, RotationGenerator(a))
    return RotationGenerator(gen.a * norm / gen.norm)


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(theta=0.6)
    with pytest.raises(ValueError):
        SimConfig(tau0=0.2)
    with pytest.raises(ValueError):
        SimConfig(b=-2)
    with pytest.raises(ValueError):
        SimConfig(delta3=0.0)
    with pytest.raises(ValueError):
        SimConfig(mode="other")
    cfg = SimConfig(b=math.inf)
    assert SimConfig.from_dict(cfg.to_jsonable()).b == math.inf


def test_classify_cases():
    zero = expansion(1, 3)
    st = make_state(MODEL, zero, 1.0, CONFIG)
    assert classify(st, CONFIG) == "case1"  # F = 0 satisfies the inequality

    st3 = make_state(MODEL, F3.scaled(1e-3), 1.0, CONFIG)
    assert classify(st3, CONFIG) == "case3"
    assert not out_of_trichotomy(st3, CONFIG)

    forced = SimConfig(force_case="case2")
    assert classify(st3, forced) == "case2"


def test_classify_case2_by_inflated_excess():
    st = make_state(MODEL, F3.scaled(1e-3), 1.0, CONFIG)
    inflated = IterationState(
        s=st.s, rho=st.rho, model=st.model, f=st.f, beta_offset=st.beta_offset,
        B=st.B, F=st.F, V=st.V, V_annulus=1e6 * (st.B + st.F),
    )
    assert classify(inflated, CONFIG) == "case2"
    assert not out_of_trichotomy(inflated, CONFIG)


def test_out_of_trichotomy_gap():
    # B/F ratio between the case-1 threshold (1e5 at the defaults) and the
    # case-3 control bound C1 tau0^-2 = 1e3: no lemma covers it
    st = make_state(MODEL, F3.scaled(1e-3), 1.0, CONFIG)
    gap = IterationState(
        s=st.s, rho=st.rho, model=st.model, f=st.f, beta_offset=st.beta_offset,
        B=1e8 * st.F, F=st.F, V=st.V, V_annulus=0.0,
    )
    assert classify(gap, CONFIG) == "case3"
    assert out_of_trichotomy(gap, CONFIG)
    assert not out_of_trichotomy(st, CONFIG)


def test_step_case1_zero_potential_with_offset():
    zero = expansion(1, 3)
    st = make_state(MODEL, zero, 1.0, CONFIG, beta_offset=0.5)
    assert st.B > 0
    new = step_case1(st, CONFIG)
    assert new.rho == 0.25
    assert abs(new.beta_offset) < 1e-10
    assert new.B < 1e-12


def test_step_case1_contraction_with_dominant_offset():
    # a large constant beta part is removed by recentering: B contracts by
    # far more than 1/100 when the offset dominates the mode content
    f = F3.scaled(1e-5)
    st = make_state(MODEL, f, 1.0, CONFIG, beta_offset=1.0)
    loose = SimConfig(delta3=1e9, s_max=2)  # calibration knob: force case1
    assert classify(st, loose) == "case1"
    new = step_case1(st, loose)
    assert new.rho == st.rho / 4
    assert new.B <= st.B / 100.0


def test_step_case2_bookkeeping():
    f = F3.scaled(1e-3)
    st = make_state(MODEL, f, 1.0, CONFIG)
    new = step_case2(st, CONFIG)
    assert new.rho == st.rho / 4
    # volume monotonicity: restriction to a smaller scale cannot increase VolEx
    assert new.V <= st.V + 1e-10


def test_step_case3_pure_contraction():
    f = F3.scaled(1e-3)
    st = make_state(MODEL, f, 1.0, CONFIG)
    new, gen, residual = step_case3(st, CONFIG)
    assert gen.norm == 0.0 and residual == 0.0
    assert new.rho == pytest.approx(0.15 * st.rho)
    assert new.F / st.F == pytest.approx((CONFIG.theta / 2) ** 2, rel=1e-6)


def test_step_case3_requires_rigid():
    model8 = cylinder_model(1, 8)
    zero8 = expansion(1, 8)
    st = IterationState(s=0, rho=1.0, model=model8, f=zero8, beta_offset=0.0,
                        B=1.0, F=1.0, V=0.0, V_annulus=0.0)
    with pytest.raises(ValueError, match="not rigid"):
        step_case3(st, CONFIG)


def light_state(f):
    # extraction only reads (model, f, rho); skip the quadrature passes
    return IterationState(s=0, rho=1.0, model=MODEL, f=f, beta_offset=0.0,
                          B=1.0, F=1.0, V=0.0, V_annulus=0.0)


def test_extract_rotation_recovers_generator():
    gen = small_generator()
    f = F3.scaled(1e-3) + moment_expansion(MODEL, gen)
    st = light_state(f)
    got, _quad, residual = extract_rotation(st, CONFIG)
    assert residual <= 1e-8
    assert np.linalg.norm(got.a - gen.a) / gen.norm <= 1e-2


def test_degree2_basis_lies_in_moment_span():
    # every p=0 degree-2 mode type projects onto the su(n) span with tiny residual
    basis_modes = [
        expansion(1, 3).mode(nu=(1, -1), parity="cos").scaled(1e-3),
        expansion(1, 3).mode(nu=(1, -1), parity="sin").scaled(1e-3),
        expansion(1, 3).mode(nu=(2, 1), parity="cos").scaled(1e-3),
        expansion(1, 3).mode(nu=(1, 0), parity="cos", h={(1,): 1.0}).scaled(1e-3),
        expansion(1, 3).mode(nu=(1, 1), parity="sin", h={(1,): 1.0}).scaled(1e-3),
    ]
    for f in basis_modes:
        _got, _quad, residual = extract_rotation(light_state(f), CONFIG)
        assert residual <= 1e-8, f.canonical()


def test_rotation_extraction_reduces_quad_part():
    gen = small_generator(seed=5)
    f = moment_expansion(MODEL, gen)
    st = make_state(MODEL, f, 1.0, CONFIG)
    new, got, _res = step_case3(st, CONFIG)
    from hlcone.harmonics import degree_split

    before = sum(abs(c) for c in degree_split(f).quad.canonical().values())
    after = sum(abs(c) for c in degree_split(new.f).quad.canonical().values())
    assert before > 0 and after <= before * 1e-6


def test_run_zero_potential():
    zero = expansion(1, 3)
    config = SimConfig(s_max=3, n_radial=12, n_polar=10, n_sphere=4)
    ledger = run(make_state(MODEL, zero, 1.0, config), config)
    assert [rec.case for rec in ledger.records] == ["case1"] * 3
    assert all(rec.B < 1e-12 and rec.F < 1e-12 for rec in ledger.records)
    assert validate_ratios(ledger, config.theta)
    assert ledger.exit_reason == "completed"


def test_run_degree3_contraction_law():
    config = SimConfig(s_max=5, n_radial=20, n_polar=14, n_sphere=6)
    st = make_state(MODEL, F3.scaled(1e-3), 1.0, config)
    ledger = run(st, config)
    assert [rec.case for rec in ledger.records] == ["case3"] * 5
    target = (config.theta / 2) ** 2
    prev_f = st.F
    for rec in ledger.records:
        assert rec.F / prev_f == pytest.approx(target, rel=0.1)
        prev_f = rec.F
    assert validate_ratios(ledger, config.theta)
    audit = phi_audit(ledger, config)
    assert audit["phi_max_ok"] and audit["phi_sum_ok"]


def test_run_rotation_then_contraction():
    gen = small_generator(seed=21)
    f = F3.scaled(1e-3) + moment_expansion(MODEL, gen)
    config = SimConfig(s_max=3, n_radial=20, n_polar=14, n_sphere=6)
    ledger = run(make_state(MODEL, f, 1.0, config), config)
    first = ledger.records[0]
    assert first.case == "case3"
    assert abs(first.rot_norm - gen.norm) <= 2e-2 * gen.norm + 1e-12
    assert all(rec.rot_norm <= 1e-10 for rec in ledger.records[1:])


def test_run_su_equivariance():
    rng = np.random.default_rng(2)
    basis = su_basis(4)
    g = np.zeros((4, 4), dtype=complex)
    for c, b in zip(rng.normal(size=len(basis)), basis):
        g += 0.2 * c * b
    rot = rotate_model(MODEL, RotationGenerator(g), 1.0)
    config = SimConfig(s_max=3, n_radial=16, n_polar=12, n_sphere=6)
    led_a = run(make_state(MODEL, F3.scaled(1e-3), 1.0, config), config)
    led_b = run(make_state(rot, F3.scaled(1e-3), 1.0, config), config)
    for ra, rb in zip(led_a.records, led_b.records):
        assert ra.case == rb.case
        assert ra.B == pytest.approx(rb.B, rel=1e-10)
        assert ra.F == pytest.approx(rb.F, rel=1e-10)
        assert ra.V == pytest.approx(rb.V, rel=1e-8, abs=1e-18)


def test_regime_exit_reported():
    config = SimConfig(s_max=3)
    big = F3.scaled(0.2)
    with pytest.raises(RuntimeError):
        # initial state construction already trips the gauge
        make_state(MODEL, big, 1.0, config)


def test_rate_fit_degree3():
    config = SimConfig(s_max=4, n_radial=16, n_polar=12, n_sphere=6)
    ledger = run(make_state(MODEL, F3.scaled(1e-3), 1.0, config), config)
    alpha = rate_fit(ledger, ledger.states[-1].model)
    assert 1.7 <= alpha <= 2.3


def test_rate_fit_mixed_degrees_dominated_by_slowest():
    # degree-3 and degree-4 content (k = 2): the fitted exponent follows the
    # slowest mode, alpha ~ 2
    model = cylinder_model(2, 3)
    f = (expansion(2, 3)
         .mode(nu=(1, -1), parity="cos", h={(1, 0): 1.0})
         .mode(nu=(1, -1), parity="sin", h={(1, 1): 0.7}))
    config = SimConfig(s_max=4, n_radial=12, n_polar=10, n_theta=8, n_sphere=6)
    ledger = run(make_state(model, f.scaled(1e-3), 1.0, config), config)
    alpha = rate_fit(ledger, ledger.states[-1].model)
    assert alpha == pytest.approx(2.0, rel=0.15)


def test_rate_fit_zero_sentinel():
    config = SimConfig(s_max=4, n_radial=12, n_polar=10, n_sphere=4)
    ledger = run(make_state(MODEL, expansion(1, 3), 1.0, config), config)
    assert rate_fit(ledger, MODEL) == math.inf
    with pytest.raises(ValueError):
        rate_fit(IterationLedger(records=(), states=()), MODEL)


def test_phi_schedule_modes():
    from hlcone.simulate import phi_schedule

    cfg1 = SimConfig(epsilon=1e-3, C_underline=100.0)
    cfg2 = SimConfig(epsilon=1e-3, mode="main2")
    v_hist = [0.5, 0.25]
    # power-law variant drops the excess ledger terms
    assert phi_schedule(cfg2, v_hist, 2) == pytest.approx(1e-5)
    expected = 1e-5 + 100.0 * (10.0 ** (0 - 2) * 0.5 + 10.0 ** (1 - 2) * 0.25)
    assert phi_schedule(cfg1, v_hist, 2) == pytest.approx(expected)


def test_ledger_serialization_and_ratio_guard():
    rec = LedgerRecord(s=1, rho=0.25, case="case1", B=0.0, F=0.0, V=0.0, phi=0.0, rot_norm=0.0)
    led = IterationLedger(records=(rec,))
    rows = list(led.csv_rows())
    assert rows[0].startswith("s,rho,case")
    with pytest.raises(ValueError):
        IterationLedger(records=(rec, rec))  # scales must strictly decrease


def test_scenario_loading_toml_and_json_mirror():
    model_t, f_t, cfg_t = load_scenario(str(SCENARIOS / "degree3.toml"))
    model_j, f_j, cfg_j = load_scenario(str(SCENARIOS / "degree3.json"))
    assert model_t.m == model_j.m == 3
    assert f_t.canonical() == f_j.canonical()
    assert cfg_t.to_jsonable() == cfg_j.to_jsonable()
    assert cfg_t.theta == 0.3 and cfg_t.s_max == 6


def test_scenario_with_moment_generator():
    model, f, _cfg = load_scenario(str(SCENARIOS / "rotation.toml"))
    from hlcone.harmonics import degree_split

    quad = degree_split(f).quad
    assert quad.canonical()  # the moment part contributes degree-2 modes
    gen = generator_from_entries(4, [[0, 2, 1.0, 0.0]])
    assert gen.norm == pytest.approx(math.sqrt(2.0))


def test_generator_entries_validation():
    with pytest.raises(ValueError):
        generator_from_entries(4, [[0, 0, 1.0, 0.0]])  # real diagonal forbidden
