import math

import numpy as np
import pytest

from conftest import A4
from covsteer.config import DEFAULTS, bundled_config, load_config, parse_config
from covsteer.errors import ConfigError

MINIMAL = """
[problem]
A = [[0.5, 0.0], [0.1, 0.4]]
B = [[0.1, 0.0], [0.0, 0.1]]
sigma_ref = [[0.02, 0.0], [0.0, 0.02]]
"""


def test_defaults_fill_in():
    cfg = parse_config(MINIMAL)
    assert cfg.solver.eta == DEFAULTS["solver"]["eta"]
    assert cfg.solver.epsilon == 1e-6
    assert cfg.solver.u0 is None
    assert cfg.problem.support.all()
    assert math.isinf(cfg.problem.l1_budget)
    assert cfg.sampling.num_trajectories == 1000
    assert cfg.lambda_values == [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]


def test_bundled_five_state():
    cfg = load_config(bundled_config("five_state"))
    np.testing.assert_array_equal(cfg.problem.A, A4)
    np.testing.assert_allclose(cfg.problem.B, np.sqrt(0.003) * np.eye(5), rtol=0, atol=0)
    assert cfg.solver.u0[4, 4] == 1e-3 and np.count_nonzero(cfg.solver.u0) == 1
    assert (cfg.solver.eta, cfg.solver.lam, cfg.solver.max_iter) == (0.1, 0.5, 100)
    assert cfg.problem.l1_budget == 4.0


def test_overrides():
    cfg = parse_config(MINIMAL, ["solver.lambda=0.3", "problem.support=[[1, 1], [2, 1]]", "sweep.lambda_values=[0, 1]"])
    assert cfg.solver.lam == 0.3
    assert cfg.problem.support.tolist() == [[True, False], [True, False]]
    assert cfg.lambda_values == [0.0, 1.0]
    assert cfg.document["solver"]["lambda"] == 0.3


def test_seed_override():
    assert parse_config(MINIMAL, seed=99).sampling.rng_seed == 99


@pytest.mark.parametrize("override", ["solver.nope=1", "nope.x=1", "solver=1", "solver.lambda"])
def test_bad_override(override):
    with pytest.raises(ConfigError):
        parse_config(MINIMAL, [override])


@pytest.mark.parametrize("text, fragment", [
    (MINIMAL + "\n[solver]\neta = -1\n", "eta"),
    (MINIMAL + "\n[solver]\nfoo = 1\n", "solver.foo"),
    (MINIMAL.replace("A = [[0.5, 0.0], [0.1, 0.4]]\n", ""), "problem.A"),
    (MINIMAL + "\n[sweep]\nlambda_values = [0.2, 0.1]\n", "increasing"),
    (MINIMAL + "\n[solver]\nu0_entries = [[3, 1, 0.1]]\n", "out of range"),
    (MINIMAL + "\n[problem2]\n", "problem2"),
    (MINIMAL.replace("0.02, 0.0], [0.0, 0.02", "0.02, 0.0], [0.0, -0.02"), "positive definite"),
    (MINIMAL + '\nsupport = [[1, 1]]\n[solver]\nu0 = [[0, 0.1], [0, 0]]\n', "support"),
])
def test_invalid_documents(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text)


def test_parse_error_has_line():
    with pytest.raises(ConfigError, match=r"line 3"):
        parse_config("[problem]\nA = [[1]]\nB = = 2\n")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.toml")
