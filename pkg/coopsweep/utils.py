# -*- encoding: utf-8 -*-
""" Helper and utils functions """
import hashlib
import json

import numpy as np

from .cache import BaseCache
from .cache import DictCache
from .cache import DummyCache


def check_cache(cache):
    """ check if a cache fits coopsweep needs or not """
    if isinstance(cache, BaseCache):
        return cache
    elif cache is False:
        return DictCache()
    elif cache is None:
        return DummyCache()
    else:
        raise ValueError('Provided cache must implement BaseCache')


def make_cache_key(document, *extra):
    """ Generate a cache key from a JSON-compatible document (for instance
    a serialized problem) and extra hashable parameters. Two documents with
    the same content always give the same key. """
    payload = json.dumps(document, sort_keys=True, separators=(',', ':'))
    digest = hashlib.sha256(payload.encode('utf-8')).hexdigest()
    return (digest,) + tuple(extra)


def make_rng(seed=None):
    """ Return a numpy Generator. An existing Generator is returned as is,
    anything else is used as a seed (None means fresh entropy). """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def encode_mixed_radix(values, sizes):
    """ Canonical mixed-radix code of values, last position varies fastest """
    code = 0
    for value, size in zip(values, sizes):
        code = code * size + value
    return code


def decode_mixed_radix(code, sizes):
    """ Inverse of encode_mixed_radix """
    values = [0] * len(sizes)
    for position in range(len(sizes) - 1, -1, -1):
        code, values[position] = divmod(code, sizes[position])
    return tuple(values)


def product_size(sizes):
    """ Product of sizes as a python int (never overflows) """
    total = 1
    for size in sizes:
        total *= int(size)
    return total


def mixed_radix_strides(sizes):
    """ Multipliers turning values into their encode_mixed_radix code """
    strides = [1] * len(sizes)
    for position in range(len(sizes) - 2, -1, -1):
        strides[position] = strides[position + 1] * int(sizes[position + 1])
    return strides
