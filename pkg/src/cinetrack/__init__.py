"""Memory-augmented single-object mask propagation for grayscale cine sequences."""

__version__ = "0.1.0"

from .encoder import DescriptorEncoder, EncoderSpec, FeatureGrid, encode_memory, encode_query
from .errors import (ConfigError, FormatError, MemoryStoreError, SequencingError,
                     ValidationError)
from .imaging import (AffineParams, RoiTransform, apply_affine, crop_resize, normalize_zscore,
                      roi_from_mask, uncrop_mask)
from .memory import MemoryEntry, MemoryStore, Readout, evict_lowest, memory_read, memory_write
from .metrics import MetricReport, dsc, evaluate_run, hd95, msd, surface_distances
from .postprocess import SmootherState, ema_update, largest_component, threshold
from .segmenter import decode
from .seqio import (Frame, Mask, SequenceMeta, read_mask, read_masks, read_sequence,
                    render_overlay, write_mask, write_sequence)
from .synthcine import PhantomSpec, generate, write_phantom
from .tracker import FrameResult, RunSummary, Tracker, TrackerConfig, run_sequence
