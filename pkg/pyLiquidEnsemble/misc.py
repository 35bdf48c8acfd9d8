from miscSupports import terminal_time
import numpy as np
import struct
import zlib
import zstd


# Entropy tags so draws made for different purposes never share a stream
INIT_STREAM = 0
DELEGATION_STREAM = 1
SHUFFLE_STREAM = 2
SYNTHETIC_STREAM = 3


def seeded_rng(*keys):
    """
    Construct a generator from a tuple of non-negative ints, for example (seed, trial, DELEGATION_STREAM, batch,
    voter). Draws depend only on the keys, so they do not change with scheduling or thread count.

    :rtype: np.random.Generator
    """
    return np.random.default_rng([int(key) for key in keys])


def struct_unpack(struct_format, data, list_return=False):
    if list_return:
        return struct.unpack(struct_format, data)
    else:
        return struct.unpack(struct_format, data)[0]


def no_decompress(data):
    """Don't decompress"""
    return data


def set_compression(compression_flag):
    """
    Return the compress and decompress pair for a checkpoint compression flag of 0 (none), 1 (zlib) or 2 (zstd),
    or None if the flag is not one of these
    """
    if compression_flag == 0:
        return no_decompress, no_decompress
    elif compression_flag == 1:
        return zlib.compress, zlib.decompress
    elif compression_flag == 2:
        return zstd.compress, zstd.decompress
    else:
        return None


def report(message, verbose=True):
    """Print a progress line stamped with the terminal time"""
    if verbose:
        print(f"{message} at {terminal_time()}")


def trial_seed(seed, trial):
    """An int seed for the streams of one trial of a run"""
    return int(np.random.SeedSequence([int(seed), int(trial)]).generate_state(1)[0])
