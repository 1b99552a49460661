from fractions import Fraction
import math

import numpy as np
import pytest

from conftest import table_row
from ledger_obata.catalog import routine_critical_points, standard_einstein_matrix
from ledger_obata.curvature import einstein_constant
from ledger_obata.errors import DomainError
from ledger_obata.metric_core import RatioCoordinates, scale, to_ratio_coords
from ledger_obata.reference import reference_coords, reference_rows
from ledger_obata.solver import (
    CriticalPoint,
    MultistartResult,
    Normalization,
    SolverOptions,
    critical_point,
    jacobian_batch,
    multistart,
    newton_solve,
    normalize,
    residual,
    residual_batch,
    run_multistart,
    sample_starts,
    verify_against_reference,
    with_starts,
)

S = math.sqrt
STILDE = Normalization.STILDE_EQUALS_N


def as_set(points, digits=9):
    return {tuple(np.round(p.coords.as_vector(), digits)) for p in points}


class TestResidual:
    def test_n2_identity_root(self):
        np.testing.assert_allclose(residual(RatioCoordinates([1, 1], [0])), 0.0, atol=1e-15)

    def test_row15_root(self):
        np.testing.assert_allclose(residual(to_ratio_coords(table_row(15))), 0.0, atol=1e-9)

    def test_non_root(self):
        assert np.max(np.abs(residual(RatioCoordinates([1, 1, 1], [0.5, 0.5, 0.5])))) > 1e-2

    def test_all_reference_rows_are_roots(self):
        for n in (2, 3):
            for c in reference_coords(n):
                assert np.max(np.abs(residual(c))) <= 1e-12

    def test_against_oracle(self, oracle):
        for case in oracle["curvature"]:
            x = [float(Fraction(v)) for v in case["x"]]
            u = [float(Fraction(v)) for v in case["u"]]
            np.testing.assert_allclose(residual(RatioCoordinates(x, u)), case["residual"], rtol=1e-11, atol=1e-11)

    def test_jacobian_against_oracle(self, oracle):
        for case in oracle["curvature"]:
            z = np.array([float(Fraction(v)) for v in case["x"] + case["u"]])
            jac = jacobian_batch(z[None, :], case["n"])[0]
            np.testing.assert_allclose(jac, case["jacobian"], rtol=1e-10, atol=1e-10)

    def test_jacobian_against_differences(self):
        rng = np.random.default_rng(12)
        n = 3
        z = np.concatenate([rng.uniform(0.5, 2, n), rng.uniform(-1, 1, 3)])
        jac = jacobian_batch(z[None, :], n)[0]
        h = 1e-6
        for t in range(z.size):
            e = np.zeros_like(z)
            e[t] = h
            fd = (residual_batch((z + e)[None], n)[0] - residual_batch((z - e)[None], n)[0]) / (2 * h)
            np.testing.assert_allclose(jac[:, t], fd, rtol=1e-6, atol=1e-6)


class TestNewton:
    def test_root_is_fixed_point(self):
        c = reference_coords(3)[0]
        pt = newton_solve(c)
        assert pt is not None
        np.testing.assert_allclose(pt.coords.as_vector(), c.as_vector(), atol=1e-15)

    def test_nearby_start_reaches_reference(self):
        pt = newton_solve(RatioCoordinates([1.1, 0.9, 1.05], [0.1, 0.05, 0.95]))
        assert pt is not None
        ref = np.array([c.as_vector() for c in reference_coords(3)])
        assert np.min(np.max(np.abs(ref - pt.coords.as_vector()), axis=1)) <= 1e-7

    def test_tiny_diagonal_rejected(self):
        assert newton_solve(RatioCoordinates([1e-9, 1.0], [0.3])) is None

    def test_singular_root_is_polished(self):
        # the standard-metric root has a rank-deficient Jacobian
        exact = to_ratio_coords(table_row(17)).as_vector()
        start = exact + np.array([2e-3, -1e-3, 1e-3, 3e-3, -2e-3, 1e-3])
        pt = newton_solve(RatioCoordinates.from_vector(start, 3))
        assert pt is not None
        assert np.max(np.abs(pt.coords.as_vector() - exact)) <= 1e-9
        assert pt.residual_norm <= 1e-12

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_routine_points_are_fixed_points(self, n):
        for m in routine_critical_points(n):
            c = to_ratio_coords(scale(m, 0.5))
            pt = newton_solve(c)
            assert pt is not None
            np.testing.assert_allclose(pt.coords.as_vector(), c.as_vector(), atol=1e-9)


class TestMultistart:
    def test_n1(self):
        pts = multistart(1)
        assert len(pts) == 1
        assert pts[0].coords.x[0] == pytest.approx(1.0, abs=1e-14)

    def test_n2(self, census_n2):
        assert len(census_n2.points) == 4
        assert verify_against_reference(census_n2.points, reference_coords(2), 1e-8).ok

    def test_domain(self):
        with pytest.raises(DomainError):
            run_multistart(0)

    def test_sorted_and_invariants(self, census_n2):
        vecs = [tuple(p.coords.as_vector()) for p in census_n2.points]
        assert vecs == sorted(vecs)
        for p in census_n2.points:
            assert p.residual_norm <= 1e-11
            assert abs(p.s_tilde - 2) <= 1e-9
            assert p.normalization is STILDE

    def test_deterministic(self):
        a = run_multistart(2, SolverOptions(starts=300, seed=7))
        b = run_multistart(2, SolverOptions(starts=300, seed=7))
        assert [p.to_json() for p in a.points] == [p.to_json() for p in b.points]

    def test_start_prefix(self):
        opts = SolverOptions(seed=3)
        np.testing.assert_array_equal(sample_starts(3, 50, opts), sample_starts(3, 200, opts)[:50])
        z = sample_starts(3, 2000, opts)
        assert np.all(z[:, :3] >= math.exp(-1) - 1e-15) and np.all(z[:, :3] <= math.e + 1e-15)
        assert np.all(np.abs(z[:, 3:]) <= 2.5)

    @pytest.mark.parametrize("n,k", [(2, 150), (3, 250)])
    def test_more_starts_never_lose_points(self, n, k):
        small = run_multistart(n, SolverOptions(starts=k, seed=11))
        big = run_multistart(n, SolverOptions(starts=2 * k, seed=11))
        assert as_set(small.points) <= as_set(big.points)

    def test_workers_match_serial(self):
        opts = SolverOptions(starts=600, seed=5, chunk_size=150)
        a = run_multistart(2, opts)
        b = run_multistart(2, with_starts(SolverOptions(seed=5, chunk_size=150, workers=2), 600))
        assert [p.to_json() for p in a.points] == [p.to_json() for p in b.points]

    def test_extra_starts(self):
        routine = [to_ratio_coords(scale(m, 0.5)) for m in routine_critical_points(4)]
        res = run_multistart(4, SolverOptions(starts=20, seed=1), extra_starts=routine)
        assert res.starts == 20 + len(routine)
        found = as_set(res.points, 7)
        for c in routine:
            assert tuple(np.round(c.as_vector(), 7)) in found
        for p in res.points:
            assert p.residual_norm <= 1e-11
            assert abs(p.s_tilde - 4) <= 1e-9
        with pytest.raises(DomainError):
            run_multistart(3, SolverOptions(starts=5), extra_starts=routine[:1])

    def test_stability_flag(self):
        assert MultistartResult(2, [], 100, 0, [0, 10, 49]).stable
        assert not MultistartResult(2, [], 100, 0, [0, 60]).stable


class TestNormalize:
    def _point(self, k, n=3):
        row = next(r for r in reference_rows(n) if r.index == k)
        return critical_point(row.coords, STILDE)

    def test_einstein_one_n2(self):
        pt = normalize(self._point(4, 2), "einstein-1")
        want = S(6 / 5) * np.array([[S(3), 0], [1, 2]])
        np.testing.assert_allclose(pt.matrix.matrix, want, rtol=1e-13)
        assert pt.residual_norm <= 1e-11
        assert einstein_constant(pt.s_tilde, 2) == pytest.approx(1.0, abs=1e-10)

    def test_einstein_one_row17(self):
        pt = normalize(self._point(17), Normalization.EINSTEIN_CONSTANT_ONE)
        assert pt.matrix.allclose(standard_einstein_matrix(3), atol=1e-12)

    def test_unit_volume(self):
        for row in reference_rows(3):
            pt = normalize(critical_point(row.coords, STILDE), Normalization.UNIT_VOLUME)
            assert pt.volume == pytest.approx(1.0, abs=1e-12)
            np.testing.assert_array_equal(pt.coords.u, row.coords.u)
            assert pt.residual_norm <= 1e-11

    def test_round_trip_conventions(self):
        pt = self._point(23)
        for conv in Normalization:
            back = normalize(normalize(pt, conv), STILDE)
            np.testing.assert_allclose(back.coords.as_vector(), pt.coords.as_vector(), rtol=1e-13)
            assert abs(back.s_tilde - 3) <= 1e-9

    def test_json_round_trip(self):
        pt = self._point(21)
        again = CriticalPoint.from_json(pt.to_json(), STILDE)
        assert again.to_json() == pt.to_json()


class TestVerify:
    def test_empty_input(self):
        rep = verify_against_reference([], reference_coords(3))
        assert rep.matched == [] and len(rep.missing) == 29 and not rep.ok
        assert rep.summary().startswith("0/29 matched")

    def test_reference_self_match(self):
        pts = [critical_point(c, STILDE) for c in reference_coords(2)]
        rep = verify_against_reference(pts, reference_coords(2))
        assert rep.ok and rep.summary() == "4/4 matched, 0 missing, 0 extra"

    def test_perturbed_point_fails(self):
        pts = [critical_point(c, STILDE) for c in reference_coords(2)]
        bad = pts[1].coords
        pts[1] = critical_point(RatioCoordinates(bad.x + 1e-3, bad.u), STILDE)
        rep = verify_against_reference(pts, reference_coords(2))
        assert not rep.ok and rep.missing == [1] and rep.extra == [1]

    def test_other_conventions_are_renormalized(self):
        pts = [normalize(critical_point(c, STILDE), "unit-volume") for c in reference_coords(2)]
        assert verify_against_reference(pts, reference_coords(2)).ok
