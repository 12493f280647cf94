"""All-content financial ticket text detection, recognition and structuring."""

from .geometry import AnchorSpec, BBox, ScoredBox, generate_anchors, iou, lucnms, standard_nms
from .detect import (LossReport, RegionCrop, TextRegion, aggregate_pixels,
                     combined_loss, crop_regions, detect_maps, dice_loss,
                     eval_detection)
from .segment import (CHINESE_CATEGORY, CharDetectorModel, SegmentationOutput,
                      cc_segment, eval_segmentation, projection_segment,
                      propose_chars, segment_region, train_char_detector)
from .recognize import (GlyphClassifier, Prediction, SweepCurve, apply_threshold,
                        classify, normalize_glyph, sweep_thresholds,
                        train_classifier)
from .compose import CharResult, assemble_region, extract_fields, order_chars
from .metrics import MetricsReport, p_char, p_ticket, time_stage
from .pipeline import (ConflictError, CorrectionItem, PipelineConfig,
                       PipelineModels, TicketResult, apply_correction,
                       load_queue, run_batch, run_ticket)

__version__ = "0.1.0"
