#  Copyright 2026 The herbvec Authors. All Rights Reserved.
#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.
"""Herb embeddings learned from prescription corpora."""

import json

from ._herbvec import (
    CheckpointError,
    ConfigError,
    ConvergenceError,
    DataError,
    Embeddings,
    Error,
    Model,
    NotFoundError,
    TrainingError,
    UndefinedError,
    run_cli,
    spearman,
)

__all__ = [
    "CheckpointError",
    "ConfigError",
    "ConvergenceError",
    "DataError",
    "Embeddings",
    "Error",
    "Model",
    "NotFoundError",
    "TrainingError",
    "UndefinedError",
    "config",
    "ingest",
    "run_cli",
    "spearman",
    "train",
]

_EXIT_ERRORS = {1: ConfigError, 2: DataError, 3: Error}


def _run(args):
    code, out, err = run_cli([str(a) for a in args])
    if code != 0:
        raise _EXIT_ERRORS.get(code, Error)(err.strip() or f"herbvec exited with {code}")
    return out


def _flags(options):
    args = []
    for key, value in options.items():
        flag = "--" + key.replace("_", "-")
        if value is True:
            args.append(flag)
        elif value not in (None, False):
            args += [flag, value]
    return args


def ingest(inputs, out_dir, **options):
    """Cleans, projects rare herbs and splits corpora; returns the summary."""
    if isinstance(inputs, (str, bytes)) or hasattr(inputs, "__fspath__"):
        inputs = [inputs]
    _run(["ingest", "--input", *inputs, "--out-dir", out_dir, *_flags(options)])
    with open(f"{out_dir}/ingest.json", encoding="utf-8") as f:
        return json.load(f)


def train(model, train, out, dev=None, **options):
    """Trains `model` (ngram, lsa, cbow, rnnlm or pllm) and loads the checkpoint."""
    _run(["train", "--model", model, "--train", train, "--out", out, *_flags({"dev": dev, **options})])
    return Model.load(out)


def config(model):
    """The JSON configuration stored in a checkpoint."""
    return json.loads(model.config_json)
