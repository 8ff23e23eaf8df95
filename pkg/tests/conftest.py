import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hetswipt.channel import block_rng, draw_small_scale, generate_topology, topology_rng
from hetswipt.dl import pair_parameters
from hetswipt.model import ScenarioConfig


@pytest.fixture
def default_config():
    return ScenarioConfig()


def random_pairs(n, seed=0, config=None):
    """``n`` (signal, spread, decode_noise, harvest_base) tuples from random scenarios.

    Pairs are drawn from freshly generated topologies/channels and mix
    macro and pico links; only pairs with a positive signal are kept.
    """
    config = config or ScenarioConfig()
    rng = np.random.default_rng(seed)
    out = []
    scenario = 0
    while len(out) < n:
        cfg = config.replace(rng_seed=seed * 1000 + scenario)
        topo = generate_topology(cfg, topology_rng(cfg.rng_seed))
        ch = draw_small_scale(cfg, topo, block_rng(cfg.rng_seed, 0))
        params = pair_parameters(cfg, topo, ch)
        for _ in range(10):
            j = int(rng.integers(cfg.num_bs))
            k = int(rng.integers(cfg.num_users))
            if params.signal[j, k] > 0:
                out.append((float(params.signal[j, k]), float(params.spread[j, k]),
                            params.decode_noise, float(params.harvest_base[j, k])))
        scenario += 1
    return out[:n]


ACCEPTANCE_LINES = []


def report(criterion, passed, detail=""):
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
