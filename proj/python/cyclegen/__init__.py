"""Drive cycle generation: preprocessing, transition matrices, PIESMC and baselines."""

import json as _json

from ._core import (
    CyclegenError,
    build_matrix,
    decode_state,
    encode_state,
    error_improvement,
    fragment_cost,
    haversine_distance,
    kinematic_fragments,
    n_states,
    run,
    savitzky_golay,
    synth_fleet,
    vsp,
    wavelet_hf_fraction,
)
from ._core import generate as _generate


def generate(fleet_dir, out_dir, method="piesmc", seed=0, t_target=2160.0, candidates=50, scheme="standard"):
    """Returns (cycle_csv_path, report_dict)."""
    path, report = _generate(str(fleet_dir), str(out_dir), method, seed, t_target, candidates, scheme)
    return path, _json.loads(report)


__all__ = [
    "CyclegenError",
    "build_matrix",
    "decode_state",
    "encode_state",
    "error_improvement",
    "fragment_cost",
    "generate",
    "haversine_distance",
    "kinematic_fragments",
    "n_states",
    "run",
    "savitzky_golay",
    "synth_fleet",
    "vsp",
    "wavelet_hf_fraction",
]
