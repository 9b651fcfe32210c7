import numpy as np
import pytest

from ghz_teleport import bases, cli, protocol, verify
from ghz_teleport.bases import BellOutcome, XOutcome
from ghz_teleport.statevec import Ket, OrthonormalBasis


def results_by_name(results):
    return {r.name: r for r in results}


def test_quick_run_passes():
    results = verify.run_checks(seed=0, scale="quick")
    assert len(results) == len(verify.CHECKS)
    assert all(r.passed for r in results), verify.format_table(results)


def test_run_is_deterministic():
    first = verify.run_checks(seed=3, scale="quick")
    second = verify.run_checks(seed=3, scale="quick")
    assert [r.detail for r in first] == [r.detail for r in second]


def test_unknown_scale():
    with pytest.raises(ValueError):
        verify.run_checks(scale="huge")


def test_format_table_summary():
    table = verify.format_table([verify.CheckResult("a", True, "ok"), verify.CheckResult("bb", False, "bad")])
    assert table.splitlines() == ["PASS  a   ok", "FAIL  bb  bad", "1/2 checks passed"]


@pytest.fixture
def faulty_bell(monkeypatch):
    original = bases.bell_basis

    def bell_basis(m):
        # conjugation moved between the phi rows; still orthonormal, but wrong
        m = complex(m)
        M = bases.normalizer(m)
        vecs = original(m).matrix.copy()
        vecs[1] = M * np.array([m, 0, 0, -1])
        vecs[0] = M * np.array([1, 0, 0, m.conjugate()])
        return OrthonormalBasis(tuple(Ket(v) for v in vecs))

    monkeypatch.setattr(bases, "bell_basis", bell_basis)


@pytest.fixture
def relabelled_bell(monkeypatch):
    original = bases.bell_basis

    def bell_basis(m):
        v = list(original(m).vectors)
        v[2], v[3] = v[3], v[2]
        return OrthonormalBasis(tuple(v))

    monkeypatch.setattr(bases, "bell_basis", bell_basis)


def test_faulty_bell_basis_is_caught(faulty_bell):
    results = results_by_name(verify.run_checks(seed=0, scale="quick"))
    assert results["basis orthonormality"].passed
    assert not results["three-party branch table"].passed


def test_relabelled_bell_basis_is_caught(relabelled_bell):
    results = results_by_name(verify.run_checks(seed=0, scale="quick"))
    assert results["basis orthonormality"].passed
    assert not results["three-party branch table"].passed
    assert not results["multi-party branch table"].passed


def test_cli_verify_exit_code_on_fault(relabelled_bell, capsys):
    assert cli.main(["verify", "--seed", "0"]) == cli.EXIT_VERIFY
    assert "FAIL" in capsys.readouterr().out


def test_corrupted_table_entry_is_caught(monkeypatch):
    table = dict(protocol.THREE_PARTY_TABLE)
    # drop the conjugate on b
    table[BellOutcome.PHI_MINUS, XOutcome.PLUS] = lambda n, m, b: ("Z", m, n * b)
    monkeypatch.setattr(protocol, "THREE_PARTY_TABLE", table)
    results = results_by_name(verify.run_checks(seed=0, scale="quick"))
    assert not results["three-party branch table"].passed
    assert results["multi-party branch table"].passed


def test_wrong_pauli_is_caught(monkeypatch):
    table = dict(protocol.THREE_PARTY_TABLE)
    table[BellOutcome.PSI_MINUS, XOutcome.MINUS] = lambda n, m, b: ("Y", m * n, b)
    monkeypatch.setattr(protocol, "THREE_PARTY_TABLE", table)
    results = results_by_name(verify.run_checks(seed=0, scale="quick"))
    assert not results["three-party branch table"].passed


def test_crashing_check_reported(monkeypatch):
    def boom(rng, sizes):
        raise RuntimeError("kaput")

    monkeypatch.setattr(verify, "CHECKS", [("boom", boom)])
    (result,) = verify.run_checks()
    assert not result.passed and "RuntimeError: kaput" in result.detail


def test_excluded_systems_shape():
    xi = np.array([0.2, 0.4])
    hits = verify.excluded_systems(xi, xi * 0 + 0.3, xi * 0 + 0.4)
    assert all(mask.shape == (2,) for mask in hits.values())
