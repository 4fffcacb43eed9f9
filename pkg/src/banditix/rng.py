"""Deterministic random-stream construction.

Every replication of an experiment owns two independent streams, one for the
environment (losses, random graphs) and one for the policy (action sampling,
perturbations, resampling).  Streams are Philox counter-based generators whose
128-bit keys are derived by hashing ``(base_seed, replication, role)``, so any
replication can be regenerated in isolation and results do not depend on
scheduling order.

Within a stream, consumption order is part of each consumer's contract (e.g.
FPL-IX draws d perturbations, then d geometric caps, then d per resampling
copy, every round) so that independent implementations of the same policy
consume identically.
"""

import hashlib

import numpy as np

ROLE_ENV = "env"
ROLE_POLICY = "policy"


def stream_key(base_seed, *scope):
    """128-bit Philox key for a (base_seed, *scope) coordinate, as uint64[2]."""
    tag = "banditix:" + ":".join(str(part) for part in (base_seed,) + tuple(scope))
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return np.frombuffer(digest[:16], dtype=np.uint64).copy()


def make_stream(base_seed, *scope):
    """Independent ``np.random.Generator`` for the given coordinate."""
    return np.random.Generator(np.random.Philox(key=stream_key(base_seed, *scope)))


def env_stream(base_seed, rep):
    return make_stream(base_seed, rep, ROLE_ENV)


def policy_stream(base_seed, rep):
    return make_stream(base_seed, rep, ROLE_POLICY)
