"""Minimal MLP stack with hand-written gradients.

All nets are SiLU MLPs over float64 numpy arrays.  Parameters live in flat
dicts ("W1", "b1", ...) so checkpoints and optimizers stay trivial.  In
addition to ordinary reverse-mode gradients, the stack exposes the exact
parameter gradient of the squared input-gradient norm (the R1 penalty),
implemented as an adjoint pass over the input-gradient computation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch

HEADS = ("gaussian", "scalar", "logit")


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden: tuple
    output_dim: int
    head: str = "scalar"

    def __post_init__(self):
        if len(self.hidden) < 1 or min(self.hidden) <= 0:
            raise ValueError("need at least one positive hidden width")
        if self.head not in HEADS:
            raise ValueError(f"unknown head {self.head!r}")

    @property
    def sizes(self) -> tuple:
        return (self.input_dim, *self.hidden, self.output_dim)

    @property
    def n_layers(self) -> int:
        return len(self.hidden) + 1


def silu(z):
    s = 1.0 / (1.0 + np.exp(-z))
    return z * s


def silu_prime(z):
    s = 1.0 / (1.0 + np.exp(-z))
    return s * (1.0 + z * (1.0 - s))


def silu_second(z):
    s = 1.0 / (1.0 + np.exp(-z))
    return s * (1.0 - s) * (2.0 + z * (1.0 - 2.0 * s))


def init_params(spec: MlpSpec, rng: np.random.Generator, final_scale: float = 0.01) -> dict:
    """He-style normal init; a small final layer keeps initial outputs near 0."""
    params = {}
    sizes = spec.sizes
    for i in range(spec.n_layers):
        fan_in = sizes[i]
        scale = np.sqrt(2.0 / fan_in)
        if i == spec.n_layers - 1:
            scale *= final_scale
        params[f"W{i + 1}"] = rng.normal(scale=scale, size=(sizes[i + 1], sizes[i]))
        params[f"b{i + 1}"] = np.zeros(sizes[i + 1])
    return params


def forward(spec: MlpSpec, params: dict, x: np.ndarray):
    """Returns (output (N, out), cache).  Hidden layers use SiLU, the output
    layer is linear (heads interpret it)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise ShapeMismatch(f"input {x.shape} does not match spec in={spec.input_dim}")
    acts = [x]
    zs = []
    a = x
    for i in range(spec.n_layers):
        z = a @ params[f"W{i + 1}"].T + params[f"b{i + 1}"]
        zs.append(z)
        a = silu(z) if i < spec.n_layers - 1 else z
        acts.append(a)
    return acts[-1], (acts, zs)


def backward(spec: MlpSpec, params: dict, cache, grad_out: np.ndarray):
    """Reverse pass: returns (param grads, input grad)."""
    acts, zs = cache
    grads = {}
    gz = np.asarray(grad_out, dtype=np.float64)
    for i in range(spec.n_layers, 0, -1):
        if i < spec.n_layers:
            gz = gz * silu_prime(zs[i - 1])
        grads[f"W{i}"] = gz.T @ acts[i - 1]
        grads[f"b{i}"] = gz.sum(axis=0)
        gz = gz @ params[f"W{i}"]
    return grads, gz


def mlp_forward_backward(spec: MlpSpec, params: dict, x: np.ndarray, grad_out: np.ndarray | None = None):
    """Forward plus gradients in one call: (output, param grads, input grads).

    grad_out seeds the reverse pass (all-ones when omitted).
    """
    y, cache = forward(spec, params, x)
    if grad_out is None:
        grad_out = np.ones_like(y)
    grads, gx = backward(spec, params, cache, grad_out)
    return y, grads, gx


def input_gradient(spec: MlpSpec, params: dict, x: np.ndarray):
    """Per-sample gradient of the scalar output w.r.t. the input.

    Only valid for output_dim == 1.  Returns (g (N, in), fwd cache, grad
    cache); the caches feed r1_param_grads.
    """
    if spec.output_dim != 1:
        raise ShapeMismatch("input_gradient needs a scalar output head")
    y, cache = forward(spec, params, x)
    acts, zs = cache
    n = x.shape[0]
    gammas = [None] * (spec.n_layers + 1)  # gamma[i]: grad wrt z_i, 1-indexed
    hs = [None] * spec.n_layers  # h[i]: grad wrt a_i before the SiLU factor
    gammas[spec.n_layers] = np.ones((n, 1))
    for i in range(spec.n_layers, 1, -1):
        h = gammas[i] @ params[f"W{i}"]
        hs[i - 1] = h
        gammas[i - 1] = silu_prime(zs[i - 2]) * h
    g = gammas[1] @ params["W1"]
    return g, cache, (gammas, hs)


def r1_param_grads(spec: MlpSpec, params: dict, cache, grad_cache):
    """Parameter gradients of S = mean_n ||grad_x f(x_n)||^2.

    Exact double-backward: one adjoint sweep over the input-gradient
    recursion (collecting the explicit W dependencies and the sigma''(z)
    terms), then an ordinary reverse sweep pushes the z-adjoints through
    the forward graph.
    """
    acts, zs = cache
    gammas, hs = grad_cache
    n = acts[0].shape[0]
    g = gammas[1] @ params["W1"]
    gbar = (2.0 / n) * g
    grads = {k: np.zeros_like(v) for k, v in params.items()}

    grads["W1"] += gammas[1].T @ gbar
    gamma_bar = gbar @ params["W1"].T
    zbars = [np.zeros_like(z) for z in zs]
    for i in range(2, spec.n_layers + 1):
        sprime = silu_prime(zs[i - 2])
        sbar = gamma_bar * hs[i - 1]
        hbar = gamma_bar * sprime
        grads[f"W{i}"] += gammas[i].T @ hbar
        zbars[i - 2] += sbar * silu_second(zs[i - 2])
        gamma_bar = hbar @ params[f"W{i}"].T
        # gamma at the top layer is constant; its adjoint stops there

    # push the accumulated z-adjoints down through the forward graph
    abar = None
    for i in range(spec.n_layers - 1, 0, -1):
        zb = zbars[i - 1]
        if abar is not None:
            zb = zb + abar * silu_prime(zs[i - 1])
        grads[f"W{i}"] += zb.T @ acts[i - 1]
        grads[f"b{i}"] += zb.sum(axis=0)
        abar = zb @ params[f"W{i}"]
    return grads


# ---------------------------------------------------------------------------
# parameter-dict utilities and Adam
# ---------------------------------------------------------------------------


def zeros_like_params(params: dict) -> dict:
    return {k: np.zeros_like(v) for k, v in params.items()}


def clip_grad_norm(grads: dict, max_norm: float) -> float:
    """Scale the whole gradient dict to a global norm cap (in place)."""
    total = 0.0
    for v in grads.values():
        total += float(np.sum(v * v))
    norm = np.sqrt(total)
    if norm > max_norm:
        scale = max_norm / norm
        for v in grads.values():
            v *= scale
    return norm


def add_scaled(into: dict, grads: dict, scale: float = 1.0) -> None:
    for k, v in grads.items():
        into[k] += scale * v


class Adam:
    """Deterministic Adam over a parameter dict."""

    def __init__(self, params: dict, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = zeros_like_params(params)
        self.v = zeros_like_params(params)

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for k in params:
            gk = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * gk
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * gk * gk
            params[k] -= self.lr * (self.m[k] / b1c) / (np.sqrt(self.v[k] / b2c) + self.eps)

    def state_dict(self) -> dict:
        return {"t": self.t, "m": self.m, "v": self.v}

    def load_state_dict(self, state: dict) -> None:
        self.t = int(state["t"])
        self.m = {k: np.array(v) for k, v in state["m"].items()}
        self.v = {k: np.array(v) for k, v in state["v"].items()}
