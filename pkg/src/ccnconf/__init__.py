"""Named-data real-time conferencing: protocol library, deterministic
discrete-event simulator and analysis layer."""

from .names import ContentName, MediaType, NotificationName, build_data_name, parse_name
from .params import LatencyBudget, StreamParams, default_audio_params, default_video_params
from .scenario import ScenarioConfig, preset, preset_names
from .simulator import run_scenario

__all__ = [
    "ContentName", "MediaType", "NotificationName", "build_data_name",
    "parse_name", "LatencyBudget", "StreamParams", "default_audio_params",
    "default_video_params", "ScenarioConfig", "preset", "preset_names",
    "run_scenario",
]
