"""
Counter-based random streams keyed by (master_seed, path_index).

Every path owns an independent Philox stream, so a path is reproduced bit for
bit no matter which worker generates it or in which order.
"""
import numpy as np

# Stream identifiers keep the increment draws and the Cholesky draws of one path apart
INCREMENT_STREAM = 0
EXACT_STREAM = 1


def path_generator(master_seed: int, path_index: int, stream: int = INCREMENT_STREAM) -> np.random.Generator:
    """
    Build the generator for one path.

    Args:
        master_seed (int): non-negative run seed
        path_index (int): index of the path inside the ensemble
        stream (int): stream identifier for the purpose of the draws

    Returns:
        np.random.Generator: a Philox-backed generator
    """
    sequence = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(stream), int(path_index)))
    return np.random.Generator(np.random.Philox(sequence))
