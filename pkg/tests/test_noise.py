import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fttm.noise import (TOY_NOISE, NoiseSchedule, PreconditionError, burst_lemma_violations,
                        estimate_level_probability, is_isolated, isolated_points, noise_lines,
                        parse_noise, partition_bursts, project_to_spacetime, rectangle_sweep_violations,
                        sample_noise, stratify)


def test_sample_noise_basics():
    assert sample_noise(0, (0, 10, 0, 10), 1) == frozenset()
    assert sample_noise(0.3, (0, 20, 0, 20), 5) == sample_noise(0.3, (0, 20, 0, 20), 5)
    with pytest.raises(ValueError):
        sample_noise(1.0, (0, 2, 0, 2), 1)
    with pytest.raises(ValueError):
        sample_noise(-0.1, (0, 2, 0, 2), 1)


def test_sample_noise_density_near_one():
    eps = 0.999
    n = 10 ** 4
    total = sum(len(sample_noise(eps, (0, 10, 0, 10), s)) for s in range(n))
    m = 100 * n
    sigma = math.sqrt(m * eps * (1 - eps))
    assert abs(total - m * eps) <= 3 * sigma


def test_projection():
    assert project_to_spacetime({3, 7}, {3: 0, 7: -2}) == {(0, 3), (-2, 7)}
    assert project_to_spacetime(set(), {}) == frozenset()
    assert len(project_to_spacetime({1, 2}, {1: 5, 2: 5})) == 2
    with pytest.raises(PreconditionError):
        project_to_spacetime({4}, {3: 0})


def test_isolation_examples():
    assert is_isolated((0, 0), {(0, 0)}, (1, 1), (9, 9))
    E = {(0, 0), (1, 0)}
    assert not is_isolated((0, 0), E, (1, 1), (4, 4))
    assert not is_isolated((1, 0), E, (1, 1), (4, 4))
    assert is_isolated((0, 0), {(0, 0), (2, 1), (40, 40)}, (3, 3), (20, 20))
    with pytest.raises(PreconditionError):
        is_isolated((5, 5), E, (1, 1), (4, 4))


def test_stratify_examples():
    s = stratify({(0, 0)}, TOY_NOISE, 3)
    assert s.level(2) == frozenset() and s.sparse_level == 1
    sch = NoiseSchedule(B=(1, 4), S=(1, 4), beta=1, gamma=1)
    s = stratify({(0, 0), (1, 0)}, sch, 1)
    assert s.level(2) == {(0, 0), (1, 0)} and s.sparse_level is None
    assert "sparse_level not-sparse" in s.report()


def test_faithful_mode_rejects_toy_schedule():
    with pytest.raises(PreconditionError):
        stratify({(0, 0)}, NoiseSchedule(TOY_NOISE.B, TOY_NOISE.S, 1, 1, mode="faithful"), 2)
    waived = TOY_NOISE.validate()
    assert "gamma > 1" in waived and "beta >= 3 gamma" in waived
    ok = NoiseSchedule(B=(1, 20, 400), S=(1, 20, 400), beta=7.5, gamma=2, mode="faithful")
    assert ok.validate() == []


def test_partition_examples():
    cls = partition_bursts({(0, 0), (1, 1), (50, 50)}, (3, 3), (20, 20))
    assert cls == [frozenset({(0, 0), (1, 1)}), frozenset({(50, 50)})]
    assert partition_bursts(set(), (3, 3), (20, 20)) == []
    with pytest.raises(PreconditionError) as e:
        partition_bursts({(0, 0), (5, 0)}, (3, 3), (20, 20))
    assert "(0, 0)" in str(e.value)


def sparse_set(rng, n_centers, r, r_star, size=60):
    pts = set()
    for _ in range(n_centers):
        c = (rng.randrange(size), rng.randrange(size))
        for _ in range(rng.randrange(1, 4)):
            pts.add((c[0] + rng.randrange(r[0]), c[1] + rng.randrange(r[1])))
    return isolated_points(pts, r, r_star)


@given(st.integers(0, 10 ** 6), st.integers(1, 3), st.integers(1, 3))
@settings(max_examples=40, deadline=None)
def test_burst_lemma_matches_rectangle_sweep(seed, r0, r1):
    rng = random.Random(seed)
    r, rs = (r0, r1), (2 * r0 + 1 + rng.randrange(3), 2 * r1 + 1 + rng.randrange(3))
    E = sparse_set(rng, 12, r, rs, size=30)
    cls = partition_bursts(E, r, rs)
    assert sorted(p for c in cls for p in c) == sorted(E)
    size = (rs[0] - r[0], rs[1] - r[1])
    assert rectangle_sweep_violations(cls, size, (-2, 36, -2, 36)) == []
    # the class relation is an equivalence
    for c in cls:
        for x in c:
            assert frozenset(y for y in E if abs(y[0] - x[0]) < r0 and abs(y[1] - x[1]) < r1) == c


def test_violation_finder_detects_close_classes():
    cls = [frozenset({(0, 0)}), frozenset({(2, 0)})]
    assert burst_lemma_violations(cls, (1, 1), (4, 4))
    assert rectangle_sweep_violations(cls, (3, 3), (-4, 6, -4, 6))


@given(st.frozensets(st.tuples(st.integers(0, 24), st.integers(0, 24)), max_size=40))
@settings(max_examples=60, deadline=None)
def test_stratification_fixed_point(E):
    s = stratify(E, TOY_NOISE, 3)
    for k in range(1, 4):
        cur = s.level(k)
        assert s.level(k + 1) <= cur
        again = cur - isolated_points(cur, TOY_NOISE.r(k), TOY_NOISE.r_star(k))
        assert again == s.level(k + 1)
        for b in s.bursts[k - 1]:
            xs = [p[0] for p in b]
            ts = [p[1] for p in b]
            assert max(xs) - min(xs) < TOY_NOISE.r(k)[0] or len(b) == 1
            assert max(ts) - min(ts) < TOY_NOISE.r(k)[1] or len(b) == 1


def test_stratify_deterministic():
    E = sample_noise(0.05, (0, 40, 0, 40), 11)
    assert stratify(E, TOY_NOISE, 3).residues == stratify(sample_noise(0.05, (0, 40, 0, 40), 11), TOY_NOISE, 3).residues


def test_level_one_estimate_matches_binomial():
    eps, n = 0.05, 4000
    est = estimate_level_probability(eps, TOY_NOISE, 1, n, 3)
    p = 1 - (1 - eps) ** 1
    assert abs(est.freq - p) <= 3 * math.sqrt(p * (1 - p) / n)
    assert estimate_level_probability(0, TOY_NOISE, 3, 50, 1).hits == 0


def test_region_too_small_rejected():
    with pytest.raises(PreconditionError):
        estimate_level_probability(0.01, TOY_NOISE, 3, 5, 1, region=(-1, 2, -1, 2))


def test_noise_serialization():
    E = {(3, 1), (-2, 7), (0, 0)}
    assert noise_lines(E) == ["-2 7", "0 0", "3 1"]
    assert parse_noise("\n".join(noise_lines(E))) == E
