import numpy as np
import pytest

from ieswpt.analytic import classify_regime
from ieswpt.model import ReceiverSpec, ScenarioSpec, validate_spec

# S1 from the worked examples: a=3.125 s, b=10 s, c=13.125 s, K_L=7, C'=8.125 s
S1 = ReceiverSpec(p_b=1.0, p_r=4.2, q_c=100.0, q_ies=10.0, t_d=0.0)
PAPER = ReceiverSpec(p_b=1.0, p_r=4.2, q_c=3600.0, q_ies=3.4, t_d=1e-3)


def scenario(rx=S1, n=3, **kw):
    return validate_spec(ScenarioSpec(rx, n, **kw))


def draw_receiver(rng, max_cycles=60.0):
    """Random valid constant-profile receiver with a modest cycle count."""
    p_b = rng.uniform(0.5, 2.0)
    p_r = p_b * rng.uniform(1.2, 6.0)
    q_ies = rng.uniform(0.5, 20.0)
    a = q_ies / (p_r - p_b)
    c = a + q_ies / p_b
    q_c = max(p_b * c * rng.uniform(0.3, max_cycles), q_ies * 1.01)
    t_d = 0.0 if rng.random() < 0.3 else rng.uniform(0.0, 0.3 * min(a, q_ies / p_b))
    return ReceiverSpec(p_b=p_b, p_r=p_r, q_c=q_c, q_ies=q_ies, t_d=t_d)


def draw_scenarios(seed, count, standby=None, n_range=(1, 8), **kw):
    """``count`` random (receiver, n) scenarios, optionally restricted to one regime."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        rx = draw_receiver(rng, **kw)
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        if standby is not None and classify_regime(rx, n).standby != standby:
            continue
        out.append(scenario(rx, n))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
