import zlib

import numpy as np


def purpose_key(purpose: str) -> int:
    """Stable integer label for a named random stream."""
    return zlib.crc32(purpose.encode("utf-8"))


def stream(master_seed: int, replicate: int, purpose: str) -> np.random.Generator:
    """
    Description: Build the random generator owned by one (replicate, purpose) pair.

    Streams depend only on their three inputs, so adding a consumer never shifts the draws
    of another.

    Args:
    - master_seed (int): The experiment-wide seed.
    - replicate (int): The Monte Carlo replicate index.
    - purpose (str): A label such as "population" or "noise".

    Returns: A numpy Generator seeded from a SeedSequence over the three values.
    """
    sequence = np.random.SeedSequence([int(master_seed), int(replicate), purpose_key(purpose)])
    return np.random.default_rng(sequence)


def derived_seed(master_seed: int, replicate: int, purpose: str) -> int:
    """An integer seed for APIs that take plain seeds rather than generators."""
    sequence = np.random.SeedSequence([int(master_seed), int(replicate), purpose_key(purpose)])
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def round_stream(rng_seed: int, round_index: int) -> np.random.Generator:
    """Generator dedicated to one quotation round of one run."""
    return np.random.default_rng(np.random.SeedSequence([int(rng_seed), int(round_index)]))
