"""Analytic gradients vs central finite differences on tiny variants.

The training loop relies on reverse-mode differentiation; the oracle here
is an independent numeric derivative of the same loss, parameter by
parameter, in double precision.
"""

import numpy as np
import pytest
import torch
from torch import nn

from dlmodels import build_model
from test_archs import TINY

EPS = 1e-5
REL_TOL = 1e-4


def _loss(model, x, aux, y):
    logits = model(x) if aux is None else model(x, aux)
    return nn.functional.cross_entropy(logits, y)


def numeric_gradients(model, x, aux, y):
    grads = []
    for p in model.parameters():
        flat = p.detach().view(-1)
        g = torch.zeros_like(flat)
        for i in range(flat.numel()):
            orig = float(flat[i])
            with torch.no_grad():
                flat[i] = orig + EPS
                hi = float(_loss(model, x, aux, y))
                flat[i] = orig - EPS
                lo = float(_loss(model, x, aux, y))
                flat[i] = orig
            g[i] = (hi - lo) / (2 * EPS)
        grads.append(g.view_as(p))
    return grads


@pytest.mark.parametrize("name", sorted(TINY))
def test_gradient_matches_finite_differences(name):
    spec = TINY[name]
    torch.manual_seed(3)
    model = build_model(name, spec["dims"], 2, spec["config"],
                        aux_dims=spec["aux"]).double()
    x = torch.rand(6, *spec["dims"], dtype=torch.float64)
    aux = (torch.rand(6, *spec["aux"], dtype=torch.float64)
           if spec["aux"] is not None else None)
    y = torch.tensor([0, 1, 0, 1, 1, 0])

    model.zero_grad()
    _loss(model, x, aux, y).backward()
    analytic = [p.grad.clone() for p in model.parameters()]
    numeric = numeric_gradients(model, x, aux, y)

    for a, n in zip(analytic, numeric):
        denom = np.maximum(1.0, (a.abs() + n.abs()).numpy())
        rel = np.abs((a - n).numpy()) / denom
        assert rel.max() <= REL_TOL, rel.max()
