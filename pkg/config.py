"""
Environment settings for the command line, read from .env
Import before anything that logs or writes output
"""
import os
from dotenv import load_dotenv

load_dotenv()

OUTPUT_DIR = os.environ.get("LUNAR_TRN_OUTPUT_DIR", "./output")
LOG_LEVEL = os.environ.get("LUNAR_TRN_LOG_LEVEL", "INFO").upper()

try:
    WORKERS = max(1, int(os.environ.get("LUNAR_TRN_WORKERS", "1")))
except ValueError:
    print("⚠️  WARNING: LUNAR_TRN_WORKERS is not an integer, using 1")
    WORKERS = 1
