"""Video error concealment by motion compensated 3D frequency selective extrapolation."""

from .error_model import LossBlock, LossMask, apply_loss, enumerate_blocks, generate_pattern, read_mask, write_mask
from .evaluation import RegionPSNR, emit_report, full_frame_psnr, parse_report, psnr_region
from .pipeline import ConcealConfig, RunReport, conceal_block, conceal_sequence
from .sequence_io import VideoSequence, read_raw_video, write_raw_video

__version__ = "0.1.0"
