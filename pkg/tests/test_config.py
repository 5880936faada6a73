import textwrap

import numpy as np
import pytest

from nmrmod.algebra import CouplingModel
from nmrmod.config import ConfigError, bundled_config, load_config, parse_config
from nmrmod.shapes import gaussian_envelope, save_table

GOOD = textwrap.dedent("""
    [system]
    labels = A, B
    delta_hz = 10, -50   # offsets
    J_hz = 0, 7; 7, 0
    coupling_model = strong_isotropic

    [defaults]
    dt = 1e-5
    fidelity_gate = 1e-9
    seed = 3
""")


def test_bundled_constants():
    cfg = bundled_config()
    s = cfg.system
    assert s.labels == ("I", "S", "R")
    J = s.J_matrix
    assert (J[0, 1], J[0, 2], J[1, 2]) == (-10.1, 11.3, 4.3)
    # only the offset differences are physical
    assert s.delta[0] - s.delta[1] == pytest.approx(219.5)
    assert s.delta[2] - s.delta[0] == pytest.approx(188.5)
    assert cfg.fidelity_gate == 1e-10
    assert cfg.envelope().duration == pytest.approx(0.121)


def test_parse_good():
    cfg = parse_config(GOOD)
    assert cfg.system.coupling_model is CouplingModel.STRONG_ISOTROPIC
    assert cfg.dt == 1e-5 and cfg.fidelity_gate == 1e-9 and cfg.seed == 3


@pytest.mark.parametrize("bad,match", [
    (GOOD.replace("seed = 3", "seeds = 3"), "unknown key"),
    (GOOD + "\n[extra]\nx = 1\n", "unknown section"),
    (GOOD.replace("labels = A, B", "labels = A, A"), "unique|duplicate"),
    (GOOD.replace("J_hz = 0, 7; 7, 0", "J_hz = 0, 7; 6, 0"), "symmetric"),
    (GOOD.replace("delta_hz = 10, -50", "delta_hz = 10, x"), "numbers"),
    (GOOD.replace("strong_isotropic", "medium"), "coupling_model"),
    ("[defaults]\nseed = 1\n", "missing"),
])
def test_parse_rejects(bad, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(bad)


def test_envelope_path_relative_to_config(tmp_path):
    pulse = gaussian_envelope(0.05, n_samples=32)
    save_table(pulse, tmp_path / "g.txt")
    (tmp_path / "p.cfg").write_text(GOOD + "envelope = g.txt\n")
    cfg = load_config(tmp_path / "p.cfg")
    env = cfg.envelope()
    assert env.n_samples == 32
    assert env.flip_angle() == pytest.approx(np.pi)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.cfg")
