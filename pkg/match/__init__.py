from match.matching import (
    TRANSLATION, AFFINE, MatchParams, CandidatePair, RansacResult, IdentifyDiagnostics, Identification,
    expected_craters, lms_pair, ransac_filter, identify,
)

__all__ = [
    'TRANSLATION', 'AFFINE', 'MatchParams', 'CandidatePair', 'RansacResult', 'IdentifyDiagnostics',
    'Identification', 'expected_craters', 'lms_pair', 'ransac_filter', 'identify',
]
