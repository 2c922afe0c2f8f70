"""Adam optimizer operating on a model's parameter traversal."""

from __future__ import annotations

import numpy as np


class Adam:
    """Standard Adam with bias correction.

    Moment estimates are kept in float64 regardless of the parameter dtype;
    updates are cast back when applied. State is keyed by qualified parameter
    name, so it survives only as long as the parameter set is stable.
    """

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0:
            raise ValueError("lr must be positive")
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, parameters):
        """Apply one update. `parameters` is an iterable of
        (name, layer, attr) triples as produced by TcnModel.parameters()."""
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name, layer, attr in parameters:
            p = getattr(layer, attr)
            g = getattr(layer, "d" + attr).astype(np.float64)
            if name not in self.m:
                self.m[name] = np.zeros(p.shape, dtype=np.float64)
                self.v[name] = np.zeros(p.shape, dtype=np.float64)
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
            p -= update.astype(p.dtype)
