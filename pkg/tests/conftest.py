#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import numpy as np
import pytest

from scaling.operator_scaling import MatrixTuple
from scaling.tensor_scaling import ghz, w_state


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def ghz_state():
    return ghz(3, 2)


@pytest.fixture
def w_tensor():
    return w_state(3)


@pytest.fixture
def cross_product_tuple():
    """A_i v = e_i x v; both marginals equal 2I"""
    return MatrixTuple.of(
        [[0, 0, 0], [0, 0, -1], [0, 1, 0]],
        [[0, 0, 1], [0, 0, 0], [-1, 0, 0]],
        [[0, -1, 0], [1, 0, 0], [0, 0, 0]],
    )


@pytest.fixture
def shrunk_tuple():
    """span(e1, e2) is mapped into span(e1) by both matrices"""
    return MatrixTuple.of(
        [[1, 0, 0], [0, 0, 1], [0, 0, 0]],
        [[0, 1, 0], [0, 0, 0], [0, 0, 1]],
    )
