# Copyright 2026 The amlrisk Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python bindings for the amlrisk money-laundering risk toolkit."""

import json as _json

from . import _core
from ._core import (
    ConfigError,
    Error,
    IntegrityError,
    IoError,
    Model,
    NotFoundError,
    SchemaError,
    ParameterError,
    Store,
    ValidationError,
    auroc,
    default_signals,
    generate_csv,
)

__all__ = [
    "ConfigError",
    "Error",
    "IntegrityError",
    "IoError",
    "Model",
    "NotFoundError",
    "SchemaError",
    "ParameterError",
    "Store",
    "ValidationError",
    "auroc",
    "default_signals",
    "evaluate",
    "generate_csv",
    "default_spec",
    "t_test",
    "train",
]


def t_test(a, b, welch=False):
    """Two-sample t-test; returns a dict with t, df, p_value and significant."""
    return _json.loads(_core.t_test(list(a), list(b), welch))


def default_spec():
    """The deployed-model specification as a dict."""
    return _json.loads(_core.default_spec())


def evaluate(store, pipeline, protocol="monte-carlo", repeats=30, outer=10, inner=10, test_fraction=0.25):
    """Runs an evaluation protocol on the store and returns the report as a dict."""
    text = _core.evaluate(store, _json.dumps(pipeline), protocol, repeats, outer, inner, test_fraction)
    return _json.loads(text)


def train(store, spec=None):
    """Trains and registers a model; `spec` is a dict like default_spec()."""
    return _core.train(store, None if spec is None else _json.dumps(spec))
