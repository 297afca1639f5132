"""Place for configuration variables."""

import os

from dotenv import load_dotenv


# inject environment variables into the environment
load_dotenv()


VERSION = "0.1.0"


OUTPUT_DIR = os.getenv("SNS_ROUGH_OUTPUT_DIR", "runs")


LOG_LEVEL = os.getenv("SNS_ROUGH_LOG_LEVEL", "INFO")


# worker processes for path-parallel ensembles
WORKERS = int(os.getenv("SNS_ROUGH_WORKERS", "1"))


# threads used by each scipy.fft transform
FFT_WORKERS = int(os.getenv("SNS_ROUGH_FFT_WORKERS", "1"))


CALIBRATION_FILE = os.getenv("SNS_ROUGH_CALIBRATION_FILE", "calibration.json")


# samples drawn when a constant has to be calibrated on the fly
CALIBRATION_SAMPLES = int(os.getenv("SNS_ROUGH_CALIBRATION_SAMPLES", "200"))


# any recorded norm above this aborts the run
OVERFLOW_THRESHOLD = 1e150


DEFAULT_RECORD_STRIDE = 8


CONSTANT_FREE_TOLERANCE = 1e-9


# rounding slack of the discrete energy balance, relative to the largest energy of the run
ENERGY_RESIDUAL_TOLERANCE = 1e-9
