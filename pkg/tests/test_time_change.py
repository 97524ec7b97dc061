import math

import numpy as np
import pytest

from exctime import (
    ClassMap,
    StarChainModel,
    SubordinatorSpec,
    build_clock_and_transform,
    class_lifetime_exponent,
    composed_exponent_oracle,
    derive_stream,
    extract_excursions,
    full_clock_exponent_oracle,
    gamma_family,
    laplace_exponent,
    mark_lifetimes,
    occupation_from_path,
    occupation_via_williams,
    simulate_path,
    single_state_ray,
    transformed_tail_oracle,
)
from exctime.ledger import ExcursionLedger
from exctime.star_chain import Path, RaySpec


def two_ray_model():
    return StarChainModel(
        (
            single_state_ray(1.0, 1.0),
            RaySpec(internal_rates=[[0.0, 1.0], [1.0, 0.0]], exit_rates=[1.0, 0.0], entry_rates=[1.0, 0.0]),
        )
    )


def stable_map(g0=0.6, g1=0.5, g2=0.7):
    return ClassMap(
        assign={0: "j0", 1: "j1", 2: "j2"},
        specs={
            "j0": SubordinatorSpec(0.0, 1.0, g0),
            "j1": SubordinatorSpec(0.0, 1.0, g1),
            "j2": SubordinatorSpec(0.0, 1.0, g2),
        },
    )


def drift_map(a=1.0):
    spec = SubordinatorSpec(a, 0.0, 0.5)
    return ClassMap(assign={0: "d", 1: "d", 2: "d"}, specs={"d": spec})


def test_class_map_validation():
    with pytest.raises(ValueError):
        ClassMap(assign={0: "a", 1: None}, specs={"a": SubordinatorSpec(1.0, 0.0)})
    with pytest.raises(ValueError):
        ClassMap(assign={0: "a", 1: "missing"}, specs={"a": SubordinatorSpec(1.0, 0.0)})
    cmap = ClassMap(assign={0: None, 1: "a"}, specs={"a": SubordinatorSpec(1.0, 0.0)})
    with pytest.raises(ValueError):
        cmap.validate_for(2)


def test_identity_drift_marks_equal_lifetimes():
    model = two_ray_model()
    rng = derive_stream(20, 0)
    path = simulate_path(model, rng, n_excursions=2000)
    led = extract_excursions(path, model)
    marked = mark_lifetimes(led, drift_map(1.0), derive_stream(20, 1))
    assert np.array_equal(marked.zeta_star, led.zeta)
    assert np.array_equal(marked.holding_mark, led.holding_before)
    # and the transformed path is the original path
    _, x_star = build_clock_and_transform(path, model, drift_map(1.0), derive_stream(20, 1))
    assert np.array_equal(x_star.durations, path.durations)


def test_drift_on_class0_only_doubles_holdings():
    model = two_ray_model()
    cmap = ClassMap(
        assign={0: "h", 1: "i", 2: "i"},
        specs={"h": SubordinatorSpec(2.0, 0.0), "i": SubordinatorSpec(1.0, 0.0)},
    )
    path = simulate_path(model, derive_stream(21, 0), n_excursions=500)
    led = extract_excursions(path, model)
    marked = mark_lifetimes(led, cmap, derive_stream(21, 1))
    assert np.array_equal(marked.zeta_star, led.zeta)
    assert np.array_equal(marked.holding_mark, 2.0 * led.holding_before)


def test_marked_lifetime_transform_exp_lifetimes():
    # gamma = 1/2 marks on Exp(1) lifetimes: E exp(-q zeta*) = 1/(1 + sqrt(q))
    model = StarChainModel((single_state_ray(1.0, 1.0),))
    cmap = ClassMap(assign={0: None, 1: "j"}, specs={"j": SubordinatorSpec(0.0, 1.0, 0.5)})
    rng = derive_stream(22, 0)
    path = simulate_path(model, rng, n_excursions=1_000_000)
    marked = mark_lifetimes(extract_excursions(path, model), cmap, rng)
    for q in (1.0, 4.0):
        v = np.exp(-q * marked.zeta_star)
        se = v.std(ddof=1) / math.sqrt(v.size)
        assert abs(v.mean() - 1.0 / (1.0 + math.sqrt(q))) <= 4 * se


def test_shared_label_marks_uncorrelated():
    # two classes sharing one subordinator label: consecutive marks stay
    # uncorrelated because they read disjoint increment stretches
    model = StarChainModel((single_state_ray(1.0, 1.0), single_state_ray(1.0, 1.0)))
    cmap = ClassMap(assign={0: None, 1: "j", 2: "j"}, specs={"j": SubordinatorSpec(0.0, 1.0, 0.7)})
    rng = derive_stream(23, 0)
    path = simulate_path(model, rng, n_excursions=100_000)
    marked = mark_lifetimes(extract_excursions(path, model), cmap, rng)
    # correlate on bounded transforms (raw marks are heavy-tailed)
    v = np.exp(-marked.zeta_star)
    corr = float(np.corrcoef(v[:-1], v[1:])[0, 1])
    assert abs(corr) <= 4.0 / math.sqrt(v.size - 1)


def test_route_coupling_bit_exact_lifetimes():
    # with retained sojourns and a shared stream, excursion lifetimes of
    # the transformed path equal the marked lifetimes to accumulation error
    model = two_ray_model()
    cmap = stable_map()
    path = simulate_path(model, derive_stream(24, 0), n_excursions=5000)
    led = extract_excursions(path, model, retain_subpaths=True)
    marked = mark_lifetimes(led, cmap, derive_stream(24, 1))
    _, x_star = build_clock_and_transform(path, model, cmap, derive_stream(24, 1))
    star_led = extract_excursions(x_star, model)
    assert np.allclose(star_led.zeta, marked.zeta_star, rtol=1e-12, atol=0.0)
    cls0 = model.class_of_state[x_star.states] == 0
    assert np.allclose(x_star.durations[cls0], marked.holding_mark, rtol=1e-12)


def test_gamma_family_trivials():
    empty = ExcursionLedger(
        s=np.array([]), class_id=np.array([], dtype=np.int64), zeta=np.array([]),
        holding_before=np.array([]), n_classes=2,
    )
    fam = gamma_family(empty)
    assert fam.processes[1].final_value == 0.0
    single = ExcursionLedger(
        s=np.array([1.0]), class_id=np.array([1]), zeta=np.array([2.0]),
        holding_before=np.array([1.0]), n_classes=1,
        zeta_star=np.array([5.0]), holding_mark=np.array([0.0]), trailing_mark=0.0,
    )
    fam = gamma_family(single)
    assert fam.processes[1](0.5) == 0.0
    assert fam.processes[1](1.0) == 5.0


def test_gamma_family_requires_marks():
    model = two_ray_model()
    path = simulate_path(model, derive_stream(25, 0), n_excursions=50)
    led = extract_excursions(path, model)
    with pytest.raises(ValueError):
        gamma_family(led)


def test_gamma_sum_equals_total_clock():
    model = two_ray_model()
    cmap = stable_map()
    rng = derive_stream(26, 0)
    path = simulate_path(model, rng, n_excursions=100_000)
    marked = mark_lifetimes(extract_excursions(path, model), cmap, rng)
    fam = gamma_family(marked)
    t_eta = np.cumsum(marked.holding_mark + marked.zeta_star)
    total = fam.total_marked(marked.s)
    assert np.max(np.abs(total - t_eta)) <= 2**-40 * t_eta[-1]


def test_occupation_from_path_partition_of_time():
    model = two_ray_model()
    cmap = stable_map()
    rng = derive_stream(27, 0)
    path = simulate_path(model, rng, n_excursions=2000)
    _, x_star = build_clock_and_transform(path, model, cmap, rng)
    dur = float(x_star.durations.sum())
    grid = np.linspace(0.0, dur, 257)
    occ = occupation_from_path(x_star, model, grid)
    assert np.max(np.abs(occ.sum(axis=1) - grid)) <= 2**-40 * max(dur, 1.0)
    assert np.allclose(occ[0], 0.0)
    with pytest.raises(ValueError):
        occupation_from_path(x_star, model, [dur * 1.01])


def test_single_excursion_ramp():
    model = StarChainModel((single_state_ray(1.0, 1.0),))
    path = Path(np.array([0, 1]), np.array([1.0, 2.0]))
    occ = occupation_from_path(path, model, np.array([0.5, 1.0, 2.0, 3.0]))
    assert np.allclose(occ[:, 0], [0.5, 1.0, 1.0, 1.0])
    assert np.allclose(occ[:, 1], [0.0, 0.0, 1.0, 2.0])


def test_williams_hand_instance():
    # class-1 atoms zeta* = (2, 3) at s = (1, 2); class-2 atom zeta* = 10 at
    # s = 1.5; no o-clock: O1(t) = t on [0,2], 2 on [2,12], t-10 on [12,15]
    led = ExcursionLedger(
        s=np.array([1.0, 1.5, 2.0]),
        class_id=np.array([1, 2, 1]),
        zeta=np.array([1.0, 1.0, 1.0]),
        holding_before=np.array([1.0, 0.5, 0.5]),
        n_classes=2,
        zeta_star=np.array([2.0, 10.0, 3.0]),
        holding_mark=np.zeros(3),
        trailing_mark=0.0,
    )
    fam = gamma_family(led)
    t = np.array([0.0, 1.0, 2.0, 5.0, 11.99, 12.0, 13.5, 14.999])
    got = occupation_via_williams(fam, 1, t)
    want = np.array([0.0, 1.0, 2.0, 2.0, 2.0, 2.0, 3.5, 4.999])
    assert np.allclose(got, want)
    # no-other-classes, no o-clock: identity
    led1 = ExcursionLedger(
        s=np.array([1.0, 2.0]), class_id=np.array([1, 1]), zeta=np.array([1.0, 1.0]),
        holding_before=np.array([1.0, 1.0]), n_classes=1,
        zeta_star=np.array([2.0, 3.0]), holding_mark=np.zeros(2), trailing_mark=0.0,
    )
    fam1 = gamma_family(led1)
    tg = np.array([0.0, 1.0, 4.99])
    assert np.allclose(occupation_via_williams(fam1, 1, tg), tg)


def test_route_equivalence_all_classes():
    model = two_ray_model()
    cmap = stable_map()
    path = simulate_path(model, derive_stream(28, 0), n_excursions=20_000)
    led = extract_excursions(path, model, retain_subpaths=True)
    marked = mark_lifetimes(led, cmap, derive_stream(28, 1))
    _, x_star = build_clock_and_transform(path, model, cmap, derive_stream(28, 1))
    fam = gamma_family(marked)
    dur = float(x_star.durations.sum())
    grid = np.linspace(0.0, dur * (1 - 1e-9), 500)
    direct = occupation_from_path(x_star, model, grid)
    for i in range(3):
        gap = np.max(np.abs(occupation_via_williams(fam, i, grid) - direct[:, i]))
        assert gap <= 1e-9 * dur, i


def test_route_equivalence_zero_stagnancy():
    model = StarChainModel((single_state_ray(1.0, 1.0), single_state_ray(1.0, 1.0)))
    cmap = ClassMap(
        assign={0: None, 1: "a", 2: "b"},
        specs={"a": SubordinatorSpec(0.0, 1.0, 0.5), "b": SubordinatorSpec(0.0, 1.0, 0.5)},
    )
    path = simulate_path(model, derive_stream(29, 0), n_excursions=20_000)
    led = extract_excursions(path, model, retain_subpaths=True)
    marked = mark_lifetimes(led, cmap, derive_stream(29, 1))
    _, x_star = build_clock_and_transform(path, model, cmap, derive_stream(29, 1))
    fam = gamma_family(marked)
    dur = float(x_star.durations.sum())
    grid = np.linspace(0.0, dur * (1 - 1e-9), 400)
    direct = occupation_from_path(x_star, model, grid)
    assert np.max(np.abs(direct[:, 0])) == 0.0
    assert np.max(np.abs(occupation_via_williams(fam, 0, grid))) == 0.0
    for i in (1, 2):
        gap = np.max(np.abs(occupation_via_williams(fam, i, grid) - direct[:, i]))
        assert gap <= 1e-9 * dur


def test_composed_exponent_oracle_values():
    model = two_ray_model()
    cmap = stable_map(g1=0.5)
    # single-state ray (r = mu = 1), psi = sqrt(q): Psi* = sqrt(q)/(sqrt(q)+1)
    for q in (0.25, 1.0, 4.0):
        want = math.sqrt(q) / (math.sqrt(q) + 1.0)
        assert composed_exponent_oracle(model, cmap, 1, q) == pytest.approx(want)
    # identity composition with a pure drift clock
    cmap_d = drift_map(1.0)
    for q in (0.5, 2.0):
        assert composed_exponent_oracle(model, cmap_d, 2, q) == pytest.approx(
            float(class_lifetime_exponent(model, 2, q))
        )
    # pure-power composition: Psi ~ m q, psi = b q^g  =>  Psi* ~ m b q^g as q -> 0
    q = 1e-9
    got = composed_exponent_oracle(model, cmap, 1, q)
    assert got == pytest.approx(1.0 * 1.0 * q**0.5, rel=1e-4)


def test_full_clock_exponent_oracle():
    model = two_ray_model()
    cmap_d = drift_map(1.0)
    for q in (0.5, 1.0, 2.0):
        want = q + float(class_lifetime_exponent(model, 1, q)) + float(class_lifetime_exponent(model, 2, q))
        assert full_clock_exponent_oracle(model, cmap_d, q) == pytest.approx(want)
    cmap = stable_map()
    q = 1.5
    want = float(laplace_exponent(cmap.spec_for(0), q))
    want += composed_exponent_oracle(model, cmap, 1, q) + composed_exponent_oracle(model, cmap, 2, q)
    assert full_clock_exponent_oracle(model, cmap, q) == pytest.approx(want)


def test_transformed_tail_oracle_cases():
    model = two_ray_model()
    cmap = stable_map()
    est, se = transformed_tail_oracle(model, cmap, 1, 0.0, 10_000, derive_stream(30, 0))
    assert est == pytest.approx(model.rays[0].r)
    assert se == 0.0
    # pure drift: r_i P(tau > h / a), single-state: r e^{-mu h / a}
    cmap_d = ClassMap(assign={0: "d", 1: "d", 2: "d"}, specs={"d": SubordinatorSpec(2.0, 0.0)})
    h = 1.0
    est, se = transformed_tail_oracle(model, cmap_d, 1, h, 400_000, derive_stream(30, 1))
    want = 1.0 * math.exp(-1.0 * h / 2.0)
    assert abs(est - want) <= 4 * max(se, 1e-12)
