"""Adam optimizer with bias correction.

Defaults beta1=0.9, beta2=0.999, epsilon=1e-8.  Frozen parameters keep
their values and moments untouched; the step counter advances once per
``step`` call regardless.
"""

import numpy as np

from .graph import Parameter


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0.0:
            raise ValueError(f"Adam: learning rate must be positive, got {lr}")
        if not params:
            raise ValueError("Adam: no parameters")
        self.params: list[Parameter] = list(params)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad[:] = 0.0

    def step(self):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for i, p in enumerate(self.params):
            if p.frozen:
                continue
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            p.value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
