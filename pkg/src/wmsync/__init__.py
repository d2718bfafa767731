"""Watermark codes and drift-lattice inner decoders for a finite-state Markov
insertion/deletion/substitution channel."""
from .channel import TransmissionRecord, final_offset, realized_rates, transmit
from .codec import (
    Codebook,
    apply_watermark,
    build_codebook,
    desparsify,
    generate_watermark,
    sparsify,
    strip_watermark,
)
from .decoder import (
    DECODERS,
    DriftLattice,
    LatticeConfig,
    WindowTable,
    build_window_table,
    compute_xmax,
    decode,
    extract_path,
    forward_backward_dm1,
    forward_backward_dm2,
    forward_backward_fsmc,
    posteriors,
    resynchronize,
)
from .markov import (
    BANDS,
    ChannelParams,
    EntropyBand,
    TransitionMatrix,
    average_entropy,
    cap_insertion_row,
    derive_iid_params,
    generate_matrix,
    generate_matrix_for_entropy,
    reduce_to_three_state,
    state_entropy,
    stationary_distribution,
)
from .metrics import ber, niis, sao

__version__ = "0.1.0"
