import math

import numpy as np
import pytest

from ecpsim.elements import (
    ElementSpec,
    attenuation,
    beam_splitter,
    hadamard,
    hwp,
    pbs,
    sigma_x,
    sigma_z,
    time_delay,
)
from ecpsim.fock import OccupationConfig, PhotonicState, TimeBin, apply_transform, mode

S = 1 / math.sqrt(2)


def ket(*modes, amp=1.0):
    return PhotonicState.from_modes(*modes, amplitude=amp)


def close(s1, s2, tol=1e-12):
    keys = set(s1.terms) | set(s2.terms)
    return all(abs(s1.amplitude(k) - s2.amplitude(k)) <= tol for k in keys)


UNITARY_CATALOG = [
    beam_splitter("A", "B'"),
    hwp("A", 0),
    hwp("A", 22.5),
    hwp("A", 45),
    sigma_x("C"),
    sigma_z("C"),
    hadamard("C"),
    time_delay("A"),
    pbs(["A"], ["D1", "D2"]),
    pbs(["A", "B"], ["C", "D"]),
]


@pytest.mark.parametrize("t", UNITARY_CATALOG, ids=lambda t: t.name)
def test_catalog_elements_are_isometries(t):
    mat, _, cols = t.matrix()
    assert np.allclose(mat.conj().T @ mat, np.eye(len(cols)), atol=1e-12, rtol=0)


def test_attenuation_is_not_unitary():
    assert not attenuation(0.6, 0.8, ["B", "A'"]).is_isometry()


def test_beam_splitter_examples():
    bs = beam_splitter("A", "B")
    assert close(apply_transform(ket(mode("A", "H")), bs), (ket(mode("A", "H")) + ket(mode("B", "H"))) * S)
    assert close(apply_transform(ket(mode("B", "V")), bs), (ket(mode("B", "V")) - ket(mode("A", "V"))) * S)


def test_beam_splitter_twice_matches_matrix_square():
    bs = beam_splitter("A", "B")
    m = np.array([[S, -S], [S, S]])  # columns are images of a, b
    sq = m @ m
    out = apply_transform(apply_transform(ket(mode("A", "H")), bs), bs)
    assert out.amplitude(OccupationConfig.of(mode("A", "H"))) == pytest.approx(sq[0, 0], abs=1e-15)
    assert out.amplitude(OccupationConfig.of(mode("B", "H"))) == pytest.approx(sq[1, 0], abs=1e-15)


def test_beam_splitter_needs_distinct_rails():
    with pytest.raises(ValueError):
        beam_splitter("A", "A")


def test_wave_plates():
    h, v = ket(mode("A", "H")), ket(mode("A", "V"))
    assert close(apply_transform(h, hwp("A", 45)), v)
    assert close(apply_transform(v, hwp("A", 0)), -v)
    assert close(apply_transform(h, hwp("A", 22.5)), (h + v) * S)
    assert close(apply_transform(v, hwp("A", 22.5)), (h - v) * S)


def test_wave_plate_acts_on_tagged_modes_too():
    h0 = ket(mode("A", "H", TimeBin.T0))
    assert close(apply_transform(h0, sigma_x("A")), ket(mode("A", "V", TimeBin.T0)))


def test_unsupported_angle_rejected():
    with pytest.raises(ValueError):
        hwp("A", 30)


def test_disjoint_elements_commute():
    s = (ket(mode("A", "H"), mode("B", "V")) + ket(mode("A", "V"), mode("B", "H"), amp=0.5j)).normalized()
    t1, t2 = hadamard("A"), sigma_z("B")
    assert close(apply_transform(apply_transform(s, t1), t2), apply_transform(apply_transform(s, t2), t1))


def test_time_delay_tags_by_polarization():
    td = time_delay("A")
    assert close(apply_transform(ket(mode("A", "H")), td), ket(mode("A", "H", TimeBin.T0)))
    assert close(apply_transform(ket(mode("A", "V")), td), ket(mode("A", "V", TimeBin.T1)))


def test_time_delay_rejects_tagged_input():
    with pytest.raises(ValueError):
        apply_transform(ket(mode("A", "V", TimeBin.T1)), time_delay("A"))


def test_pbs_routing():
    t = pbs(["A", "B"], ["C", "D"])
    assert close(apply_transform(ket(mode("A", "H")), t), ket(mode("C", "H")))
    assert close(apply_transform(ket(mode("A", "V")), t), ket(mode("D", "V")))
    assert close(apply_transform(ket(mode("B", "H")), t), ket(mode("D", "H")))
    assert close(apply_transform(ket(mode("B", "V")), t), ket(mode("C", "V")))


@pytest.mark.parametrize("bad", [(["A"], ["C"]), (["A", "A"], ["C", "D"]), (["A"], ["C", "C"])])
def test_pbs_rejects_bad_rails(bad):
    with pytest.raises(ValueError):
        pbs(*bad)


def _sources():
    def pair(r1, r2):
        return (ket(mode(r1, "H"), mode(r2, "H")) + ket(mode(r1, "V"), mode(r2, "V"))) * S

    from ecpsim.fock import tensor

    return tensor(pair("A", "B"), pair("A'", "B'"))


def test_attenuation_at_balance_is_identity():
    s = _sources()
    assert close(apply_transform(s, attenuation(S, S, ["B", "A'"])), s)


def test_attenuation_builds_less_entangled_pairs():
    # built directly: (a|HH> + b|VV>) on both pairs
    a, b = 0.6, 0.8
    direct = PhotonicState()
    for p1, c1 in (("H", a), ("V", b)):
        for p2, c2 in (("H", a), ("V", b)):
            direct = direct + ket(mode("A", p1), mode("B", p1), mode("A'", p2), mode("B'", p2), amp=c1 * c2)
    out = apply_transform(_sources(), attenuation(a, b, ["B", "A'"]))
    assert close(out, direct)
    assert out.norm() == pytest.approx(1, abs=1e-12)


def test_attenuation_to_product_state():
    out = apply_transform(_sources(), attenuation(1, 0, ["B", "A'"]))
    assert len(out) == 1
    assert close(out, ket(mode("A", "H"), mode("B", "H"), mode("A'", "H"), mode("B'", "H")))


def test_attenuation_rejects_unnormalized():
    with pytest.raises(ValueError):
        attenuation(0.6, 0.7, ["B"])


def test_element_spec_validation():
    assert ElementSpec("HWP", ("A",), (45.0,)).transform() is hwp("A", 45.0)
    assert str(ElementSpec("PBS", ("A", "D1", "D2"))) == "PBS(A->D1,D2)"
    with pytest.raises(ValueError):
        ElementSpec("Mirror", ("A",))
    with pytest.raises(ValueError):
        ElementSpec("BS", ("A",))
    with pytest.raises(ValueError):
        ElementSpec("PBS", ("A", "B"))
