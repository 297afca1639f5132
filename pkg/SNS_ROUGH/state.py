"""Methods for getting, updating, and saving calibrated constants."""

from copy import deepcopy
import json
import logging
import os
from typing import Dict
from typing import Optional

from SNS_ROUGH import config
from SNS_ROUGH.exceptions import ValidationFailure


logger = logging.getLogger(__name__)


class CalibrationStore:
    """Class for representing the calibration store, a JSON file of calibrated constants."""

    CONSTANTS = 'constants'
    REPORTS = 'reports'

    DEFAULT_STATE = {
        CONSTANTS: {},
        REPORTS: {}
    }

    def __init__(self, path: Optional[str] = None):
        """Load the store, or start an empty one when the file does not exist yet.

        Args:
            path: Location of the JSON file; defaults to SNS_ROUGH_CALIBRATION_FILE

        """
        self.path = path or config.CALIBRATION_FILE

        if os.path.exists(self.path):
            try:
                with open(self.path) as f:
                    self.store_state = json.load(f)
            except json.decoder.JSONDecodeError as error:
                raise ValidationFailure(f"calibration file {self.path} is not valid JSON: {error}") from error
        else:
            self.store_state = deepcopy(self.DEFAULT_STATE)

        for section, default in self.DEFAULT_STATE.items():
            self.store_state.setdefault(section, deepcopy(default))

    @staticmethod
    def key(ineq_id: str, d: int, N: int, g: float) -> str:
        """Key of a calibrated constant, for example 'GN:d=2:N=64:g=0.5'."""
        return f"{ineq_id}:d={d}:N={N}:g={g!r}"

    def get_constant(self, key: str) -> Optional[float]:
        return self.store_state[self.CONSTANTS].get(key)

    def get_report(self, key: str) -> Optional[Dict]:
        return self.store_state[self.REPORTS].get(key)

    def update_constant(self, key: str, value: float, report: Optional[Dict] = None):
        """Record a calibrated constant and, optionally, the report it came from.

        Args:
            key: Key built with key()
            value: Calibrated constant
            report: Serializable report

        """
        self.store_state[self.CONSTANTS][key] = value
        if report is not None:
            self.store_state[self.REPORTS][key] = report
        return self

    def save(self):
        """Save the store back to its file."""
        directory = os.path.dirname(self.path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(self.path, "w") as f:
            json.dump(self.store_state, f, indent=2, sort_keys=True)
        logger.debug("saved %d calibrated constants to %s", len(self.store_state[self.CONSTANTS]), self.path)
