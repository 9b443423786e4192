from importlib import resources as resources
from typing import Any, Dict

import yaml


def get_default_config() -> Dict[str, Any]:
    with resources.files("resources").joinpath("default_config.yaml").open("r", encoding="utf-8") as f:
        return yaml.safe_load(f)
