from __future__ import annotations

import math

import numpy as np
import pytest

from sobopatch import fixtures
from sobopatch.errors import IndexOutOfRange, NonPositiveMeasure, SelfLoop
from sobopatch.space import (
    dumps_space,
    empirical_rho,
    loads_space,
    make_space,
    read_space,
    unit_ball_volume,
    unit_sphere_area,
    write_space,
)


def small():
    return make_space([0.0, 1.0, 2.0, 1.5], [1, 2, 3, 4], [1, 1, 2, 2], [(0, 1), (1, 2), (0, 3)],
                      n=2, pair_length=[1.0, 1.0, 1.5], boundary=[2])


def test_unit_volumes():
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-15)
    assert unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-15)
    assert unit_sphere_area(2) == pytest.approx(4 * math.pi, rel=1e-15)
    assert unit_sphere_area(1) == pytest.approx(2 * math.pi, rel=1e-15)
    # |S^(n-1)| = n omega_n
    for n in range(2, 8):
        assert unit_sphere_area(n - 1) == pytest.approx(n * unit_ball_volume(n), rel=1e-14)


def test_text_roundtrip(tmp_path):
    sp = small()
    path = tmp_path / "s.txt"
    write_space(sp, path)
    back = read_space(path)
    assert dumps_space(back) == dumps_space(sp)
    assert back.boundary == (2,)
    assert back.pair_length.tolist() == [1.0, 1.5, 1.0]


def test_roundtrip_fixtures_bit_exact():
    for name, build in fixtures.FIXTURES.items():
        sp = build()
        back = loads_space(dumps_space(sp))
        assert back.mu.tobytes() == sp.mu.tobytes(), name
        assert back.lam.tobytes() == sp.lam.tobytes(), name
        assert back.radial.tobytes() == sp.radial.tobytes(), name


def test_components_deterministic():
    sp = small()
    assert sp.components([1, 2, 3]) == [[1, 2], [3]]
    assert sp.is_connected()
    assert not sp.is_connected([2, 3])


def test_energy_uses_max_weight():
    sp = small()
    f = np.array([0.0, 1.0, 1.0, 3.0])
    # pairs (0,1): 1*1, (0,3): max(1,2)/1.5^2 * 9, (1,2): 0
    assert sp.energy(f, 2.0) == pytest.approx(1 + 2 / 2.25 * 9, rel=1e-14)


@pytest.mark.parametrize(
    "kwargs, err",
    [
        (dict(radial=[0.0, 0.0]), ValueError),
        (dict(lam=[1, 0]), NonPositiveMeasure),
        (dict(mu=[1]), IndexOutOfRange),
        (dict(pairs=[(0, 0)]), SelfLoop),
        (dict(pairs=[(0, 5)]), IndexOutOfRange),
        (dict(boundary=[0]), ValueError),
    ],
)
def test_make_space_errors(kwargs, err):
    args = dict(radial=[0.0, 1.0], lam=[1, 1], mu=[1, 1], pairs=[(0, 1)], n=1)
    args.update(kwargs)
    with pytest.raises(err):
        make_space(**args)


def test_loads_errors():
    with pytest.raises(ValueError):
        loads_space("p 0 0 1 1\n")
    with pytest.raises(IndexOutOfRange):
        loads_space("space 2 1\np 0 0 1 1\n")
    with pytest.raises(ValueError):
        loads_space("space 1 1\np 0 0 1 1\nzz 1\n")


def test_empirical_rho_euclidean_grid():
    sp = fixtures.euclidean_radial_grid(3, 2001, 10.0)
    rho = empirical_rho(sp)
    # dual shells end at midpoints, so r^n / V(r) -> 1/omega away from the core
    far = sp.radial > 1.0
    np.testing.assert_allclose(rho[far][:-1], 1 / unit_ball_volume(3), rtol=0.02)
