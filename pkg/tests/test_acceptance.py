"""Multi-seed runs at full scale: T = 100, up to 15 seeds. Minutes each; deselect with -m 'not slow'."""

import numpy as np
import pytest

from config import parse_config
from harness import compare, run_seed, summarize
from regret import clear_oracle_cache


pytestmark = pytest.mark.slow

SEEDS = list(range(15))


@pytest.fixture(autouse=True)
def fresh_cache():
    clear_oracle_cache()
    yield
    clear_oracle_cache()


def test_robust_beats_plain_in_general_setting():
    """A misspecified centre N(0.5, 0.1) against the truth N(0.6, 0.2).

    The penalty is the UCB slope over contexts within ε of the centre samples.
    """
    config = parse_config(
        {
            "env": "general",
            "algos": ["wdrbo", "erbo"],
            "ambiguity": {"center": {"normal": [0.5, 0.1]}, "radius": {"constant": 0.1}},
            "T": 100,
            "seeds": SEEDS,
            "acquisition": {"beta": 1.5},
        }
    )
    summary = summarize(compare(config)).series
    robust, plain = summary["wdrbo"], summary["erbo"]
    assert robust.n_seeds == plain.n_seeds == 15
    pooled = np.hypot(robust.stderr_cum[-1], plain.stderr_cum[-1])
    assert plain.mean_cum[-1] - robust.mean_cum[-1] > pooled


@pytest.mark.parametrize("env", ["general", "three_humps", "ackley"])
def test_zero_radius_is_bit_identical_to_erbo(env):
    config = parse_config({"env": env, "T": 20, "ambiguity": {"radius": {"constant": 0.0}}})
    for seed in range(3):
        robust = run_seed(config, "wdrbo", seed)
        plain = run_seed(config, "erbo", seed)
        for a, b in zip(robust.steps, plain.steps):
            assert np.array_equal(a.x, b.x)
            assert a.y == b.y and a.r_inst == b.r_inst and a.r_cum == b.r_cum


def test_data_driven_average_regret_shrinks():
    config = parse_config(
        {
            "env": "three_humps",
            "algos": ["wdrbo"],
            "ambiguity": {"center": "empirical", "radius": {"inv_sqrt": 1.0}},
            "T": 100,
            "seeds": SEEDS,
        }
    )
    series = summarize(compare(config)).series["wdrbo"]
    average = series.mean_cum / np.arange(1, 101)
    assert average[99] <= 0.9 * average[49]


def test_robust_overhead_on_ackley():
    """Default 32-point Lipschitz grid; the robust step costs at most twice the plain one."""
    config = parse_config(
        {
            "env": "ackley",
            "algos": ["wdrbo", "erbo"],
            "ambiguity": {"center": "empirical"},
            "acquisition": {"lipschitz": "numeric"},
            "T": 100,
            "seeds": [0, 1, 2],
        }
    )
    summary = summarize(compare(config)).series
    assert summary["wdrbo"].time_mean <= 2.0 * summary["erbo"].time_mean
