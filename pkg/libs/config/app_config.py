import math
import os


class AppConfig:
    LOG_FILE_PATH = os.environ.get("ROTABLUR_LOG_FILE", "rotablur.log")
    LOG_LEVEL = os.environ.get("ROTABLUR_LOG_LEVEL", "INFO")

    # Worker threads for independent experiment cases (offsets, candidates, trials)
    MAX_WORKERS = 4

    # Deconvolution defaults, tuned for 1% noise
    DEFAULT_NSR = 1e-3
    DEFAULT_FREQ_THRESHOLD = 0.05
    DEFAULT_LAMBDA = 1e-3

    # Rings
    MIN_RING_SAMPLES = 8

    # Rig
    DEFAULT_JITTER_SIGMA = 0.25
    DOT_THRESHOLD = 0.5
    DOT_MARGIN = 3

    # Geometric identification
    REFERENCE_BOX_HALF_SIZE = 12.0
    TANGENCY_THRESHOLD = 1.0
    TANGENCY_TIE_TOLERANCE = 1e-6
    TANGENT_AT_ZERO_TOLERANCE = 0.5
    EDGE_LEVEL = 0.5
    IDENTIFY_MAX_ROUNDS = 8

    # Baselines
    HONG_MIN_EXTENT = 2.0
    HONG_MIN_RINGS = 3
    HOUGH_MIN_RADIUS = 4

    # Verification grid: 0, 45, ..., 315 degrees
    VERIFY_ANGLES_DEG = tuple(range(0, 360, 45))

    # Ringing
    RINGING_WINDOW = 5
    FLAT_TILE = 8
    FLAT_STD = 1e-3

    FULL_TURN = 2 * math.pi
