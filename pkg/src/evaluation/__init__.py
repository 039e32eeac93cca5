from evaluation.mcd import MCD_CONSTANT, McdResult, mcd_dtw, mcd_plain
from evaluation.similarity import SimilarityReport, similarity_report
