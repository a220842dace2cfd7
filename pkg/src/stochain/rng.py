"""Counter-based random substreams.

Every draw is addressed by (seed, trajectory, component): the pair
(seed, trajectory << 8 | component) is the Philox key, and the counter starts
at zero. Inside one substream, draws are taken in a fixed order, site-major
then time, so the position of a variate in the stream is its site/time
address. Nothing depends on which worker ran the trajectory or when.
"""
from enum import IntEnum

import numpy as np

_MASK64 = (1 << 64) - 1


class Component(IntEnum):
    FELLER = 1
    SPACE = 2      # spatial increments dw(l_k) of the original field
    TIME = 3       # inner Wiener paths w_k(tau) of the original field
    HAT = 4        # spatial increments of the hat field
    SDE = 5        # dw(l) driving the SDE schemes
    LEMMA = 6      # Gaussian draws for the expectation-lemma oracles


def substream(seed, trajectory, component):
    seed = int(seed)
    trajectory = int(trajectory)
    if not 0 <= seed <= _MASK64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    if not 0 <= trajectory < (1 << 56):
        raise ValueError("trajectory index out of range")
    key = [seed, ((trajectory << 8) | int(component)) & _MASK64]
    return np.random.Generator(np.random.Philox(key=key))


def normals(seed, trajectories, component, shape):
    """Stack standard normals of the given per-trajectory shape, one substream each."""
    trajectories = np.asarray(trajectories)
    out = np.empty((len(trajectories),) + tuple(shape))
    for i, tr in enumerate(trajectories):
        out[i] = substream(seed, tr, component).standard_normal(shape)
    return out


def raw_words(seed, trajectories, component, nwords):
    """(B, nwords) uint64 words; row i equals
    ``substream(seed, trajectories[i], component).bit_generator.random_raw(nwords)``.

    One Philox instance is re-keyed per trajectory, which is much cheaper than
    constructing a generator each time.
    """
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    trajectories = np.asarray(trajectories)
    bg = np.random.Philox(key=[seed, 0])
    state = bg.state
    out = np.empty((len(trajectories), nwords), dtype=np.uint64)
    for i, tr in enumerate(trajectories.tolist()):
        if not 0 <= tr < (1 << 56):
            raise ValueError("trajectory index out of range")
        state["state"]["counter"][:] = 0
        state["state"]["key"][:] = [seed, ((tr << 8) | int(component)) & _MASK64]
        state["buffer_pos"] = 4
        state["has_uint32"] = 0
        state["uinteger"] = 0
        bg.state = state
        out[i] = bg.random_raw(nwords)
    return out
