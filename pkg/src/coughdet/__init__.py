"""Streaming cough detection for resource-constrained devices.

Pipeline: WAV ingest -> 1 s segmentation -> gain control -> band-pass ->
onset gating -> MFCC features -> tiny CNN (float or int8) -> event
consolidation. Companion tools cover evaluation metrics and static
memory/compute budgeting.
"""

from .audio import (AudioSegment, AudioStream, EmptyStream, MalformedWav,
                    UnsupportedFormat, iter_segments, parse_wav, segment)
from .budget import BudgetReport, mfcc_budget, model_budget, standard_table
from .events import CoughEvent, SegmentVerdict, consolidate
from .metrics import (COUGH, NOT_COUGH, ConfusionCounts, EvalReport, accumulate,
                      stratified_split)
# the mfcc() and metrics() functions stay on their submodules so the
# coughdet.mfcc / coughdet.metrics module paths keep working
from .mfcc import (DegenerateFilter, MfccConfig, MfccMatrix, build_mel_filterbank,
                   frame_signal, hz_to_mel, mel_to_hz)
from .model import (InferenceResult, ModelWeights, batch_norm_inference,
                    conv2d_valid_s2, forward, global_max_pool, load_weights,
                    save_weights)
from .pipeline import Detector, PipelineConfig, detect_events
from .preprocess import (OnsetPeak, PreprocessConfig, agc, band_pass,
                         onset_strength, pick_peaks)
from .quantize import (QuantizedTensor, dequantize_tensor, forward_quantized,
                       quantize_model, quantize_tensor)

__version__ = "0.1.0"
