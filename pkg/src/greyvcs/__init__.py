"""Greyscale visual secret sharing with copy-machine (stack and reverse) reconstruction."""

from .basis import BasisPair, build_grey_family, naor_shamir_kk, perfect_black_2n, single_dot_2n
from .boolmat import ParameterError
from .pipeline import decode_image, encode_image, quantize
from .schemes import PreconditionError, SchemeSpec, default_base, make_codec

__version__ = "0.1.0"

__all__ = [
    "BasisPair",
    "ParameterError",
    "PreconditionError",
    "SchemeSpec",
    "build_grey_family",
    "decode_image",
    "default_base",
    "encode_image",
    "make_codec",
    "naor_shamir_kk",
    "perfect_black_2n",
    "quantize",
    "single_dot_2n",
]
