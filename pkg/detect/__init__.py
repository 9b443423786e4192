from detect.mask import (
    PredictionMask, FitDiagnostics, MaskStages, threshold_mask, erode_to_rims, extract_contours, fit_ellipses,
    run_mask_pipeline, detect_from_mask,
)
from detect.render import RimSpec, render_rim_mask
from detect.pgm import read_pgm, write_pgm
from detect.simulator import (
    BrightnessResponse, DetectorProfile, SimulatedDetection, DetectionStats, simulate_detections,
)

__all__ = [
    'PredictionMask', 'FitDiagnostics', 'MaskStages', 'threshold_mask', 'erode_to_rims', 'extract_contours',
    'fit_ellipses', 'run_mask_pipeline', 'detect_from_mask', 'RimSpec', 'render_rim_mask', 'read_pgm', 'write_pgm',
    'BrightnessResponse', 'DetectorProfile', 'SimulatedDetection', 'DetectionStats', 'simulate_detections',
]
