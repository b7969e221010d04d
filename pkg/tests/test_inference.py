import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from casefactor import EMPTY, UNIT, CfdStore
from casefactor import inference as inf
from casefactor.crosscheck import check_cfd, predicted_witness
from casefactor.oracle import (brute_log_z, brute_marginal, enumerate_cfd, family_a,
                               family_c, random_cfd, random_energy)


@pytest.fixture
def s():
    return CfdStore()


def energies(s, **kw):
    return inf.EnergyFn({s.var(k): v for k, v in kw.items()})


def test_energy_fn():
    psi = inf.EnergyFn({3: 1.5}, default=0.25)
    assert psi[3] == 1.5 and psi[7] == 0.25
    assert psi.of({3, 7}) == 1.75
    with pytest.raises(ValueError):
        inf.EnergyFn({0: math.nan})
    with pytest.raises(ValueError):
        inf.EnergyFn({}, default=math.inf)


def test_logaddexp():
    assert inf.logaddexp(inf.NEG_INF, inf.NEG_INF) == inf.NEG_INF
    assert inf.logaddexp(0.0, inf.NEG_INF) == 0.0
    assert inf.logaddexp(1000.0, 1000.0) == pytest.approx(1000 + math.log(2))
    assert inf.logsumexp([]) == inf.NEG_INF


# -- inside / z --------------------------------------------------------------

def test_inside_unit(s):
    assert inf.z(s, UNIT, energies(s, x=4.0)) == 0.0
    assert inf.z(s, EMPTY, inf.EnergyFn()) == -math.inf


def test_inside_a2(s):
    assert inf.z(s, family_a(s, 2), inf.EnergyFn()) == pytest.approx(math.log(4))


def test_inside_c3(s):
    c3 = family_c(s, 3)
    psi = inf.EnergyFn({}, default=1.0)
    assert inf.z(s, c3, psi) == pytest.approx(-3.0)
    assert brute_log_z(s, c3, psi) == pytest.approx(-3.0)


def test_inside_table_covers_all_nodes(s):
    root = family_a(s, 3)
    ins = inf.inside(s, root, inf.EnergyFn())
    assert set(ins.values) == set(s.reachable(root))
    assert ins.visits == s.size(root)


def test_no_underflow_on_large_energies(s):
    psi = inf.EnergyFn({}, default=400.0)
    assert inf.z(s, family_c(s, 50), psi) == pytest.approx(-20000.0)


# -- probability -------------------------------------------------------------

def test_probability(s):
    c2 = family_c(s, 2)
    assert inf.probability(s, c2, inf.EnergyFn(), frozenset(s.vars(c2))) == 1.0
    a1 = family_a(s, 1)
    assert inf.probability(s, a1, energies(s, x1=0.0), frozenset()) == 0.5
    with pytest.raises(inf.InfeasibleAssignment):
        inf.probability(s, a1, inf.EnergyFn(), frozenset({s.var("x2")}))


def test_probabilities_sum_to_one():
    s, root = random_cfd(11)
    psi = random_energy(11, s)
    total = sum(inf.probability(s, root, psi, rho) for rho in enumerate_cfd(s, root))
    assert total == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("seed", range(60))
def test_is_feasible_matches_enumeration(seed):
    s, root = random_cfd(seed, max_vars=6)
    feas = enumerate_cfd(s, root)
    vs = sorted(range(s.num_vars))
    for m in range(1 << len(vs)):
        rho = frozenset(v for i, v in enumerate(vs) if m >> i & 1)
        assert inf.is_feasible(s, root, rho) == (rho in feas)


# -- viterbi -----------------------------------------------------------------

def test_viterbi_empty(s):
    r = inf.viterbi(s, EMPTY, inf.EnergyFn())
    assert r.energy == math.inf and r.witness is None and not r.feasible


def test_viterbi_a2(s):
    r = inf.viterbi(s, family_a(s, 2), energies(s, x1=-1.0, x2=1.0))
    assert r.energy == -1.0
    assert s.names(r.witness) == ["x1"]


def test_viterbi_c3(s):
    r = inf.viterbi(s, family_c(s, 3), inf.EnergyFn({}, default=1.0))
    assert r.energy == 3.0
    assert s.names(r.witness) == ["x1", "x2", "x3"]


def test_viterbi_ties_take_hi(s):
    x1, x2 = s.var("x1"), s.var("x2")
    root = s.multi_case([(x1, UNIT), (x2, UNIT)])
    assert inf.viterbi(s, root, inf.EnergyFn()).witness == {x1}
    assert predicted_witness(s, root, inf.EnergyFn()) == {x1}


# -- conditioning and marginals ----------------------------------------------

def test_conditioned_z(s):
    a2 = family_a(s, 2)
    psi = inf.EnergyFn()
    assert inf.conditioned_z(s, a2, psi, {}) == inf.z(s, a2, psi)
    assert inf.conditioned_z(s, a2, psi, {s.var("x1"): 1}) == pytest.approx(math.log(2))
    assert inf.conditioned_z(s, a2, psi, {s.var("x5"): 1}) == -math.inf
    assert inf.conditioned_z(s, a2, psi, {s.var("x5"): 0}) == pytest.approx(math.log(4))


def test_conditioning_on_a_variable_dropped_by_a_branch(s):
    # x2 exists only under x1's hi side; x2 = 1 forces x1 = 1
    x1, x2 = s.var("x1"), s.var("x2")
    root = s.mk_case(x1, s.mk_case(x2, UNIT, UNIT), UNIT)
    assert math.exp(inf.conditioned_z(s, root, inf.EnergyFn(), {x2: 1})) == pytest.approx(1.0)
    assert inf.marginal(s, root, inf.EnergyFn(), {x2: 1}, x1) == pytest.approx(1.0)


def test_marginal(s):
    assert inf.marginal(s, family_c(s, 2), inf.EnergyFn(), {}, s.var("x1")) == 1.0
    assert inf.marginal(s, family_a(s, 1), inf.EnergyFn(), {}, s.var("x1")) == 0.5
    a2 = family_a(s, 2)
    assert inf.marginal(s, a2, inf.EnergyFn(), {s.var("x1"): 1}, s.var("x2")) == pytest.approx(0.5)
    assert inf.marginal(s, a2, inf.EnergyFn(), {s.var("x2"): 0}, s.var("x2")) == 0.0
    with pytest.raises(inf.ConditionInfeasible):
        inf.marginal(s, a2, inf.EnergyFn(), {s.var("x9"): 1}, s.var("x1"))


def test_outside_root_and_factor_child(s):
    p = s.mk_case(s.var("p"), UNIT, UNIT)
    q = family_c(s, 2)
    root = s.mk_factor(p, q)
    psi = energies(s, p=0.3, x1=0.7, x2=-0.2)
    ins = inf.inside(s, root, psi)
    outs = inf.outside(s, root, psi, ins)
    assert outs[root] == 0.0
    assert outs[p] == pytest.approx(ins[q])
    assert UNIT not in outs.values  # closed nodes get no outside value


def test_all_marginals(s):
    assert inf.all_marginals(s, family_c(s, 3), inf.EnergyFn()) == pytest.approx(
        {s.var(f"x{i}"): 1.0 for i in (1, 2, 3)})
    for p in inf.all_marginals(s, family_a(s, 3), inf.EnergyFn()).values():
        assert p == pytest.approx(0.5)
    with pytest.raises(inf.ConditionInfeasible):
        inf.all_marginals(s, s.mk_case(s.var("q"), EMPTY, EMPTY), inf.EnergyFn())


@pytest.mark.parametrize("seed", range(200))
def test_all_marginals_agree_with_marginal(seed):
    s, root = random_cfd(seed)
    psi = random_energy(seed, s)
    if inf.z(s, root, psi) == -math.inf:
        return
    am = inf.all_marginals(s, root, psi)
    for v, p in am.items():
        assert p == pytest.approx(inf.marginal(s, root, psi, {}, v), rel=1e-9, abs=0)
        assert p == pytest.approx(brute_marginal(s, root, psi, {}, v), rel=1e-9, abs=0)


# -- properties --------------------------------------------------------------

@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 10 ** 9), max_vars=st.integers(1, 10), depth=st.integers(1, 7))
def test_matches_oracle(seed, max_vars, depth):
    s, root = random_cfd(seed, max_vars=max_vars, max_depth=depth)
    psi = random_energy(seed, s)
    assert check_cfd(s, root, psi, random.Random(seed), n_sigma=3) == []


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10 ** 9), shift=st.floats(-50, 50))
def test_uniform_shift_on_single_assignment(seed, shift):
    # C_4 has one assignment with four true variables
    s = CfdStore()
    root = family_c(s, 4)
    psi = random_energy(seed, s)
    moved = inf.EnergyFn({v: e + shift for v, e in psi.energies.items()})
    assert inf.z(s, root, moved) == pytest.approx(inf.z(s, root, psi) - 4 * shift, abs=1e-9)


@pytest.mark.parametrize("seed", range(100))
def test_conditioning_complements_and_shrinks(seed):
    s, root = random_cfd(seed)
    psi = random_energy(seed, s)
    log_z = inf.z(s, root, psi)
    if log_z == -math.inf:
        return
    for v in s.vars(root):
        on = inf.conditioned_z(s, root, psi, {v: 1})
        off = inf.conditioned_z(s, root, psi, {v: 0})
        assert on <= log_z + 1e-12 and off <= log_z + 1e-12
        assert math.exp(on - log_z) + math.exp(off - log_z) == pytest.approx(1.0, rel=1e-9)
