"""Streaming, pass-efficient low-rank compression of snapshot matrices."""

from .analysis import (ErrorReport, TauSweep, default_tau_grid, epsilon_tau,
                       error_report, mreo, oracle_error, rel_frob_error, rho_tau,
                       streaming_epsilon_sweep)
from .archive import (Archive, build_archive, compress_dataset, decompress,
                      decompress_blocks, spatio_temporal_cf, temporal_cf)
from .codec import FactorCodecParams, decode_factor, encode_factor, factor_error_bound
from .config import RunConfig
from .datagen import SpectrumSpec, gen_heat2d, gen_spectrum
from .errors import (ConfigError, FormatError, NumericalError, PassAuditError,
                     SketchpressError, StreamPoisonedError)
from .kernels import (PivotedQR, ThinQR, ThinSVD, lambda_max, pinv_apply,
                      pivoted_qr, thin_qr, thin_svd)
from .power import PowerConfig, RangeBasis, finalize_svd, power_basis, power_id, power_svd
from .rowid import RowIDFactors, build_lifting, row_id, single_pass_id, two_pass_id
from .sketch import (SketchOperator, SketchSpec, apply_sketch, build_sketch,
                     compose_gaussian, explicit_matrix, gather_columns, stride_columns)
from .snapshot_io import (ArraySnapshotStream, FileSnapshotStream, SnapshotHeader,
                          SnapshotStream, as_stream, open_stream, read_matrix,
                          write_snapshots)
from .svd import LowRankSVD, direct_svd, single_pass_svd, two_pass_svd

__version__ = "0.1.0"
