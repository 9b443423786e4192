from importlib import resources as resources
from typing import Any, Dict

import yaml


def get_detector_profiles() -> Dict[str, Dict[str, Any]]:
    with resources.files("resources").joinpath("detector_profiles.yaml").open("r", encoding="utf-8") as f:
        return yaml.safe_load(f)
