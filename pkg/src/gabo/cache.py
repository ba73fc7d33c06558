"""On-disk cache of estimated lengthscale thresholds for manifolds without a published value."""
import json
import os
from pathlib import Path

import numpy as np

from .kernels import BetaMinConfig, estimate_beta_min


def cache_dir(path=None):
    path = path or os.environ.get("GABO_CACHE_DIR") or Path.home() / ".cache" / "gabo"
    return Path(path)


def cached_beta_min(m, path=None, cfg=None, seed=0):
    f = cache_dir(path) / "beta_min.json"
    table = json.loads(f.read_text()) if f.exists() else {}
    if m.name not in table:
        beta, _ = estimate_beta_min(m, cfg or BetaMinConfig.full_scale(), np.random.default_rng(seed))
        table[m.name] = beta
        f.parent.mkdir(parents=True, exist_ok=True)
        f.write_text(json.dumps(table, indent=1, sort_keys=True))
    return float(table[m.name])
