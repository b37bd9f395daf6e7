# Copyright 2026 Hasan Mavlonov
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

# core/state_manager.py
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from .errors import ParseError
from .rpks import RpksParams, params_from_dict, params_to_dict

LOG_FILE = "calibration_log.jsonl"
PARAMS_FILE = "params.json"


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


class StateManager:
    """
    Owns every file of one run directory: fitted parameters and results as
    JSON, tables as CSV and the calibration run log as JSONL.
    """

    def __init__(self, root_dir: str | Path):
        self.root = Path(root_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self.log_path = self.root / LOG_FILE

    # ---------- Parameters ----------
    def load_params(self, rel: str = PARAMS_FILE) -> RpksParams:
        doc = self._read(rel, default=None)
        if doc is None:
            raise ParseError(f"no model parameters at {self.root / rel}")
        return params_from_dict(doc)

    def save_params(self, params: RpksParams, rel: str = PARAMS_FILE) -> Path:
        return self._write(rel, params_to_dict(params))

    # ---------- Results ----------
    def save_result(self, rel: str, result: Dict[str, Any]) -> Path:
        return self._write(rel, result)

    def write_table(self, rel: str, frame: pd.DataFrame) -> Path:
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.12g")
        return path

    # ---------- Run log (JSONL) ----------
    def append_log(self, record: Dict[str, Any]) -> None:
        with self.log_path.open("a", encoding="utf-8") as f:
            f.write(json.dumps(_jsonable(record), ensure_ascii=False) + "\n")

    def read_log(self, step: Optional[int] = None) -> List[Dict[str, Any]]:
        """Records in write order, optionally only those of one calibration step."""
        if not self.log_path.exists():
            return []
        out: List[Dict[str, Any]] = []
        with self.log_path.open("r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    continue
                if step is not None and rec.get("step") != step:
                    continue
                out.append(rec)
        return out

    # ---------- Helpers ----------
    def _read(self, rel: str, default: Any) -> Any:
        path = self.root / rel
        if not path.exists():
            return default
        text = path.read_text(encoding="utf-8").strip()
        if not text:
            return default
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path} is not valid JSON: {exc.msg}", row=exc.lineno) from None

    def _write(self, rel: str, data: Dict[str, Any]) -> Path:
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(_jsonable(data), indent=2, ensure_ascii=False), encoding="utf-8")
        return path
