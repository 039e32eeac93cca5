import os
import sys
import pandas as pd
from typing import Dict, List, Optional
from dotenv import load_dotenv
from loguru import logger

load_dotenv()

LOG_FORMAT = "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | {message}"


class LogManager:
    """Owns the loguru sinks and the per-run metrics CSV stream."""

    def __init__(self):
        self.level = os.getenv("CIF_TTS_LOG_LEVEL", "INFO").upper()
        self.file_sink_id: Optional[int] = None
        self.metrics_path: Optional[str] = None
        self.metrics_columns: List[str] = []

    def setup(self, level: Optional[str] = None):
        """Replace loguru's default handler with a stderr sink at the configured level."""
        self.level = (level or self.level).upper()
        logger.remove()
        logger.add(sys.stderr, format=LOG_FORMAT, level=self.level)
        self.file_sink_id = None

    def attach_run_dir(self, run_dir: str):
        """Also log to cif_tts.log inside the run directory, rotated at 10 MB."""
        os.makedirs(run_dir, exist_ok=True)
        if self.file_sink_id is not None:
            logger.remove(self.file_sink_id)
        self.file_sink_id = logger.add(
            os.path.join(run_dir, "cif_tts.log"),
            format="{time} {level} {message}",
            level=self.level,
            rotation="10 MB",
            compression="zip",
        )

    def open_metrics(self, path: str, columns: List[str], resume: bool = False):
        """
        Start a metrics CSV. Rows carry no timestamps, so identical runs produce identical files.

        @param resume: Keep existing rows (up to the resume step, see truncate_metrics) instead of starting over.
        """
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        self.metrics_path = path
        self.metrics_columns = list(columns)
        if not resume or not os.path.exists(path):
            pd.DataFrame(columns=self.metrics_columns).to_csv(path, index=False)

    def truncate_metrics(self, last_step: int):
        """Drop metric rows after last_step so a resumed run continues the file seamlessly."""
        if self.metrics_path is None or not os.path.exists(self.metrics_path):
            return
        frame = pd.read_csv(self.metrics_path, float_precision="round_trip")
        frame = frame[frame["step"] <= last_step]
        frame.to_csv(self.metrics_path, index=False)

    def log_metrics(self, row: Dict[str, object]):
        if self.metrics_path is None:
            return
        pd.DataFrame([row], columns=self.metrics_columns).to_csv(
            self.metrics_path, mode="a", header=False, index=False
        )

    def close_metrics(self):
        self.metrics_path = None


log_manager = LogManager()
