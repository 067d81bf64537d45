# Copyright 2026 The himrae Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python access to the himrae native core."""

from ._core import (
    ConfigError,
    ContractError,
    DataError,
    NumericalError,
    ade_fde,
    brute_force_min_entropy,
    entropy_minimizer_table,
    error_bounds,
    generate_synthetic,
    graph_entropy,
    load_checkpoint,
    min_graph_entropy,
    select_graph,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "DataError",
    "NumericalError",
    "ade_fde",
    "brute_force_min_entropy",
    "entropy_minimizer_table",
    "error_bounds",
    "generate_synthetic",
    "graph_entropy",
    "load_checkpoint",
    "min_graph_entropy",
    "select_graph",
]
