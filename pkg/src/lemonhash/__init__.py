"""Monotone minimal perfect hashing for 64-bit integers and byte strings.

>>> import numpy as np
>>> from lemonhash import LeMonHash
>>> keys = np.array([3, 17, 42, 1000], dtype=np.uint64)
>>> h = LeMonHash.build(keys, mapper="pgm", eps=15)
>>> [h.query(int(k)) for k in keys]
[0, 1, 2, 3]
"""

from .bits import BitVector
from .elias_fano import DedupEliasFano, EliasFano
from .lemon import LeMonHash
from .mappers import (
    LinearMapper,
    PgmMapper,
    SegmentedMapper,
    auto_tune,
    build_mapper,
    mapper_cost_estimate,
    poisson_payload_constant,
)
from .pgm import PgmModel, pla_build
from .retrieval import PeelingRetrieval, RetrievalCollection, RibbonRetrieval, build_retrieval
from .vl import VlTree, build_alphabet, extract_chunk, lcp_length

__version__ = "0.1.0"

__all__ = [
    "BitVector",
    "DedupEliasFano",
    "EliasFano",
    "LeMonHash",
    "LinearMapper",
    "PeelingRetrieval",
    "PgmMapper",
    "PgmModel",
    "RetrievalCollection",
    "RibbonRetrieval",
    "SegmentedMapper",
    "VlTree",
    "auto_tune",
    "build_alphabet",
    "build_mapper",
    "build_retrieval",
    "extract_chunk",
    "lcp_length",
    "mapper_cost_estimate",
    "pla_build",
    "poisson_payload_constant",
]
