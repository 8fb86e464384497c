"""Synthetic data for simulation studies.

Every random draw comes from a Philox counter-based generator. Each
(purpose, row) pair gets its own substream: the key is derived from the
run seed and the purpose, and the row index is written into the high
word of the 256-bit counter. Row order therefore never affects the
output.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .model import ItemParamsMulti, ItemParamsTwo, prob_matrix
from .validation import check_binary_matrix

# substream purposes
_ATTRIBUTES = 1
_RESPONSES = 2
_MISSING = 3
_FIT = 4
_INIT = 5
_FOLDS = 6

GENERATOR_MODELS = ("dina", "dino", "multi_weak", "multi_strong")
Q_DESIGNS = ("blocks", "pairs", "example3")


class ConfigError(ValueError):
    """Raised for invalid simulation settings."""


def philox_key(seed, purpose):
    state = np.random.SeedSequence([int(seed) & (2**64 - 1), purpose]).generate_state(2, np.uint64)
    return int(state[0]) | (int(state[1]) << 64)


def row_generator(seed, purpose, row):
    """Generator for substream ``row`` of ``purpose`` under ``seed``."""
    counter = np.array([0, 0, 0, row], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=philox_key(seed, purpose), counter=counter))


def stream(seed, purpose):
    return row_generator(seed, purpose, 0)


def _row_uniforms(seed, purpose, n_rows, n_cols):
    out = np.empty((n_rows, n_cols))
    for i in range(n_rows):
        out[i] = row_generator(seed, purpose, i).random(n_cols)
    return out


@dataclass
class SimConfig:
    N: int = 1000
    J: int = 1000
    K: int = 7
    model: str = "dina"
    noise: float = 0.2
    theta_lo: float = 0.2
    theta_hi: float = 0.8
    missing_rate: float = 0.0
    seed: int = 1
    q_design: str = "blocks"

    def validate(self):
        if self.model not in GENERATOR_MODELS:
            raise ConfigError(f"model must be one of {GENERATOR_MODELS}, got {self.model!r}")
        if min(self.N, self.J, self.K) < 1:
            raise ConfigError("N, J and K must be positive")
        if not 0 <= self.noise < 0.5:
            raise ConfigError("noise must lie in [0, 0.5)")
        if not self.theta_lo < self.theta_hi:
            raise ConfigError("theta_lo must be below theta_hi")
        if not 0 <= self.missing_rate < 1:
            raise ConfigError("missing_rate must lie in [0, 1)")
        if self.q_design not in Q_DESIGNS:
            raise ConfigError(f"unknown q_design {self.q_design!r}")
        return self

    def to_dict(self):
        return asdict(self)


def _cyclic_blocks(K):
    eye = np.eye(K, dtype=np.int8)
    two = eye + np.roll(eye, 1, axis=1)
    three = np.minimum(two + np.roll(eye, 2, axis=1), 1)
    return eye, two, three


def _stack_cycled(J, K):
    eye, two, three = _cyclic_blocks(K)
    n2 = J // 4
    n1 = J - 2 * n2
    return np.vstack([eye[np.arange(n1) % K], two[np.arange(n2) % K], three[np.arange(n2) % K]])


def q_blocks(J, K, strict=False):
    """Stacked identity, two-attribute and three-attribute blocks.

    J/(2K) copies of I_K come first, then J/(4K) copies of the cyclic
    two-attribute block, then J/(4K) copies of the cyclic
    three-attribute block. When J is not a multiple of 4K the rows of
    each block keep cycling until the half/quarter/quarter split is
    filled; ``strict=True`` refuses such J instead.
    """
    if K < 3:
        raise ConfigError("q_blocks needs K >= 3")
    if J % (4 * K) and strict:
        valid = -(-J // (4 * K)) * 4 * K
        raise ConfigError(f"J must be divisible by 4K={4 * K}; smallest valid J >= {J} is {valid}")
    return _stack_cycled(J, K)


def q_pairs(J, K):
    """Identity rows for the first half of J, cyclic two-attribute rows for the rest."""
    if K < 2:
        raise ConfigError("q_pairs needs K >= 2")
    eye, two, _ = _cyclic_blocks(K)
    n1 = J - J // 2
    return np.vstack([eye[np.arange(n1) % K], two[np.arange(J // 2) % K]])


def q_example3(J, K=3):
    """Half single-attribute rows, a quarter two-attribute, a quarter three-attribute.

    Rows of each kind cycle over the K cyclic patterns (for K = 3 the
    three-attribute rows are all-ones).
    """
    if K < 3:
        raise ConfigError("q_example3 needs K >= 3")
    if J % 4:
        raise ConfigError(f"J must be divisible by 4; smallest valid J >= {J} is {-(-J // 4) * 4}")
    return _stack_cycled(J, K)


def sample_attributes(N, K, seed):
    """N x K matrix of independent fair bits."""
    return (_row_uniforms(seed, _ATTRIBUTES, N, K) < 0.5).astype(np.int8)


def two_params(J, noise):
    return ItemParamsTwo(np.full(J, 1.0 - noise), np.full(J, noise))


def multi_params(Q, regime="weak", theta_lo=0.2, theta_hi=0.8):
    """Identity-link GDINA coefficients for the weak and strong regimes.

    Both regimes put theta_lo on the empty profile and theta_hi on any
    profile holding every active attribute. ``weak`` splits the gap
    evenly over all non-empty subsets of the active set; ``strong`` gives
    half of it to the top interaction and splits the other half evenly
    over the remaining non-empty subsets. Single-attribute items are plain
    two-parameter items in both regimes.
    """
    Q = check_binary_matrix(Q, "Q")
    if regime not in ("weak", "strong"):
        raise ValueError(f"regime must be 'weak' or 'strong', got {regime!r}")
    gap = theta_hi - theta_lo
    coefs = []
    for q in Q:
        active = tuple(int(k) for k in np.flatnonzero(q))
        m = len(active)
        c = {(): theta_lo}
        subsets = [
            tuple(k for b, k in enumerate(active) if (code >> b) & 1) for code in range(1, 2**m)
        ]
        if m == 1:
            c[active] = gap
        elif regime == "weak":
            c.update({S: gap / (2**m - 1) for S in subsets})
        else:
            c.update({S: gap / 2 / (2**m - 2) for S in subsets if S != active})
            c[active] = gap / 2
        coefs.append(c)
    return ItemParamsMulti(coefs, link="identity")


def simulate_responses(Q, A, params, model="dina", missing_rate=0.0, seed=0):
    """Bernoulli responses, then MCAR masking (missing cells are NaN)."""
    Q = check_binary_matrix(Q, "Q")
    A = check_binary_matrix(A, "A")
    P = prob_matrix(Q, A, params, model)
    N, J = P.shape
    R = (_row_uniforms(seed, _RESPONSES, N, J) < P).astype(float)
    if missing_rate > 0:
        R[_row_uniforms(seed, _MISSING, N, J) < missing_rate] = np.nan
    return R


def simulate(config):
    """Generate (R, Q, A, params) for a :class:`SimConfig`."""
    cfg = config.validate()
    if cfg.q_design == "example3":
        Q = q_example3(cfg.J, cfg.K)
    elif cfg.q_design == "pairs":
        Q = q_pairs(cfg.J, cfg.K)
    else:
        Q = q_blocks(cfg.J, cfg.K)
    A = sample_attributes(cfg.N, cfg.K, cfg.seed)
    if cfg.model in ("dina", "dino"):
        params = two_params(cfg.J, cfg.noise)
        model = cfg.model
    else:
        params = multi_params(Q, cfg.model.split("_")[1], cfg.theta_lo, cfg.theta_hi)
        model = "multi"
    R = simulate_responses(Q, A, params, model, cfg.missing_rate, cfg.seed)
    return R, Q, A, params


def timss_like(N=1010, J=47, K=9, missing_rate=0.5173, noise=0.2, n_multi=10, seed=0):
    """Shape-compatible stand-in for a large-scale assessment dataset.

    Returns (R, Q_true, Q_provisional, anchors). The provisional Q has one
    attribute per item, the true Q adds a second attribute to ``n_multi``
    items, and the first K items form an identity block usable as anchors.
    """
    if J < K + n_multi:
        raise ConfigError("J must be at least K + n_multi")
    rng = stream(seed, _INIT)
    primary = np.concatenate([np.arange(K), rng.integers(0, K, J - K)])
    Q_prov = np.eye(K, dtype=np.int8)[primary]
    Q_true = Q_prov.copy()
    for j in rng.choice(np.arange(K, J), n_multi, replace=False):
        extra = rng.choice(np.delete(np.arange(K), primary[j]))
        Q_true[j, extra] = 1
    A = sample_attributes(N, K, seed)
    R = simulate_responses(Q_true, A, two_params(J, noise), "dina", missing_rate, seed)
    return R, Q_true, Q_prov, list(range(K))

