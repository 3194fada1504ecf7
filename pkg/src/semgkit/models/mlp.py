"""One-hidden-layer perceptron: ReLU hidden units, softmax output, Adam updates."""

from __future__ import annotations

import numpy as np

from ..errors import InsufficientClassRows, NonFiniteLoss

PARAM_NAMES = ("w1", "b1", "w2", "b2")


def init_params(d: int, hidden: int, n_classes: int, rng: np.random.Generator) -> dict:
    def glorot(fan_in, fan_out):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-lim, lim, (fan_in, fan_out))

    return {
        "w1": glorot(d, hidden),
        "b1": np.zeros(hidden),
        "w2": glorot(hidden, n_classes),
        "b2": np.zeros(n_classes),
    }


def forward(params: dict, x: np.ndarray):
    z1 = x @ params["w1"] + params["b1"]
    h = np.maximum(z1, 0.0)
    logits = h @ params["w2"] + params["b2"]
    return z1, h, logits


def softmax(logits: np.ndarray) -> np.ndarray:
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grads(params: dict, x: np.ndarray, y: np.ndarray) -> tuple[float, dict]:
    """Mean cross-entropy over the batch and its gradient for every parameter."""
    n = len(y)
    z1, h, logits = forward(params, x)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_p = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = -float(np.mean(log_p[np.arange(n), y]))

    d_logits = np.exp(log_p)
    d_logits[np.arange(n), y] -= 1.0
    d_logits /= n
    d_h = d_logits @ params["w2"].T
    d_z1 = d_h * (z1 > 0)
    grads = {
        "w2": h.T @ d_logits,
        "b2": d_logits.sum(axis=0),
        "w1": x.T @ d_z1,
        "b1": d_z1.sum(axis=0),
    }
    return loss, grads


def fit(x: np.ndarray, y: np.ndarray, n_classes: int, hidden: int = 64, epochs: int = 200, lr: float = 1e-3,
        batch_size: int = 32, seed: int = 0, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """Mini-batch Adam.  Returns ``(params, epoch_losses)``."""
    if n_classes < 2 or np.count_nonzero(np.bincount(y, minlength=n_classes)) < 2:
        raise InsufficientClassRows("MLP needs rows from at least two classes")
    rng = np.random.default_rng(seed)
    params = init_params(x.shape[1], hidden, n_classes, rng)
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(p) for k, p in params.items()}
    step = 0
    history = []
    n = len(y)
    for epoch in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            b = order[start:start + batch_size]
            loss, grads = loss_and_grads(params, x[b], y[b])
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss became {loss} at epoch {epoch}, step {step}; "
                                    f"lr={lr:g}, max |w1|={np.abs(params['w1']).max():.3g}")
            total += loss * len(b)
            step += 1
            for k in PARAM_NAMES:
                g = grads[k]
                m[k] = beta1 * m[k] + (1 - beta1) * g
                v[k] = beta2 * v[k] + (1 - beta2) * g * g
                m_hat = m[k] / (1 - beta1**step)
                v_hat = v[k] / (1 - beta2**step)
                params[k] = params[k] - lr * m_hat / (np.sqrt(v_hat) + eps)
        history.append(total / n)
    return params, history


def predict_proba(params: dict, x: np.ndarray) -> np.ndarray:
    return softmax(forward(params, x)[2])


def predict(params: dict, x: np.ndarray) -> np.ndarray:
    return np.argmax(forward(params, x)[2], axis=1)
