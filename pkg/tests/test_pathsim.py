import csv

import numpy as np
import pytest

from volquote import ZERO, Put
from volquote.errors import ParameterError
from volquote.model import REFERENCE_PARAMS
from volquote.pathsim import LEDGER_COLUMNS, gamma_sensitivity, generate_ledger

P = REFERENCE_PARAMS
PUT = Put(0.15)


@pytest.fixture(scope="module")
def ledger():
    return generate_ledger(P, PUT, 1.0, 0.15)


def test_ledger_shape(ledger):
    t = ledger.column("t")
    assert len(ledger) == 251
    assert t[0] == 0.0 and t[-1] == 1.0 and np.all(np.diff(t) > 0)
    assert np.all(ledger.column("y_t") > 0)
    assert ledger.rows[0].y_t == 0.15


def test_terminal_price_is_payoff(ledger):
    last = ledger.rows[-1]
    assert abs(last.pi_t - PUT(last.y_t)) < 1e-4


def test_early_hedge_ignores_claim(ledger):
    early = ledger.window_mean_abs_excess(0.0, 0.5)
    late = ledger.window_mean_abs_excess(0.9, 1.0)
    assert early < 0.2 * late


def test_excess_bounded(ledger):
    assert np.all(np.isfinite(ledger.column("excess_dollars")))
    assert np.max(np.abs(ledger.column("excess_dollars"))) < 10.0


def test_zero_claim_has_no_excess():
    led = generate_ledger(P, ZERO, 1.0, 0.15, dt=0.02)
    assert np.all(led.column("excess_dollars") == 0.0)
    assert np.all(led.column("pi_t") == 0.0)


def test_deterministic_per_seed():
    a = generate_ledger(P, PUT, 1.0, 0.15, dt=0.02, seed=9)
    b = generate_ledger(P, PUT, 1.0, 0.15, dt=0.02, seed=9)
    c = generate_ledger(P, PUT, 1.0, 0.15, dt=0.02, seed=10)
    assert a.rows == b.rows
    assert a.rows != c.rows


def test_stock_scaling():
    a = generate_ledger(P, PUT, 1.0, 0.15, dt=0.02, s0=1.0)
    b = generate_ledger(P, PUT, 1.0, 0.15, dt=0.02, s0=50.0)
    np.testing.assert_allclose(a.column("excess_dollars"), b.column("excess_dollars"), rtol=1e-12)
    np.testing.assert_allclose(a.column("h_claim"), 50.0 * b.column("h_claim"), rtol=1e-12)


def test_gamma_sensitivity_common_path():
    table = gamma_sensitivity(P, PUT, [0.1, 1.0, 10.0], 0.15, dt=0.02)
    assert table.monotone_in_gamma
    ys = [table.ledgers[g].column("y_t") for g in (0.1, 1.0, 10.0)]
    assert np.array_equal(ys[0], ys[1]) and np.array_equal(ys[1], ys[2])
    # pinned on the first run; the same spread appears in the gamma acceptance check
    assert table.max_relative_spread == pytest.approx(0.12804792577820456, rel=1e-6)
    single = gamma_sensitivity(P, PUT, [1.0], 0.15, dt=0.02)
    assert single.max_relative_spread == 0.0 and len(single.rows) == 1


def test_csv_export(ledger, tmp_path):
    f = tmp_path / "ledger.csv"
    ledger.to_csv(f)
    lines = f.read_text().splitlines()
    assert lines[0] == "# volquote-schema 1"
    rows = list(csv.DictReader(lines[2:]))
    assert tuple(rows[0].keys()) == LEDGER_COLUMNS
    assert float(rows[10]["pi_t"]) == ledger.rows[10].pi_t


def test_validation():
    with pytest.raises(ParameterError):
        generate_ledger(P, PUT, 1.0, 0.15, dt=0.05)
    with pytest.raises(ParameterError):
        generate_ledger(P, PUT, 1.0, 0.0)
    with pytest.raises(ParameterError):
        gamma_sensitivity(P, PUT, [20.0], 0.15)
