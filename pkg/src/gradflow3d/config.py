"""Flat key-value pipeline configuration.

Config files contain one ``key = value`` assignment per line with ``#``
comments; unknown keys are rejected so typos cannot silently fall back to
defaults. CLI flags override file values. Defaults follow the reference
protocol where it specifies one (s_recon=4, n_recon=100, r_closing=3,
(r_min, r_max)=(5, 100), p_overlap=0.2, err_gradient=0.8, patch 128x128x64).
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .encode import EncodeParams, EncodingKind
from .reconstruct import FilterParams, ReconstructionParams
from .synth import PhantomSpec


def _parse_triple(text: str) -> tuple[int, int, int]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated integers, got {text!r}")
    return tuple(int(p) for p in parts)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


@dataclass(frozen=True)
class PipelineConfig:
    # synth
    dims: tuple[int, int, int] = (64, 64, 64)
    cells: int = 50
    seed: int = 1
    min_seed_separation: float = 4.0
    membrane_width: int = 1
    noise_sigma: float = 0.1
    # encode
    encoding: str = "tanh"
    alpha: float = 3.0
    n_diff_factor: float = 2.0
    use_log_heat: bool = True
    # reconstruct
    s_recon: int = 4
    n_recon: int = 100
    r_closing: int = 3
    fg_threshold: float = 0.5
    connectivity: int = 26
    # filter
    r_min: float = 5.0
    r_max: float = 100.0
    p_overlap: float = 0.2
    err_gradient: float = 0.8
    # tiling
    patch_dims: tuple[int, int, int] = (128, 128, 64)
    overlap: tuple[int, int, int] = (32, 32, 16)
    # execution
    threads: int = 0

    _PARSERS = {
        "dims": _parse_triple, "cells": int, "seed": int,
        "min_seed_separation": float, "membrane_width": int, "noise_sigma": float,
        "encoding": str, "alpha": float, "n_diff_factor": float, "use_log_heat": _parse_bool,
        "s_recon": int, "n_recon": int, "r_closing": int,
        "fg_threshold": float, "connectivity": int,
        "r_min": float, "r_max": float, "p_overlap": float, "err_gradient": float,
        "patch_dims": _parse_triple, "overlap": _parse_triple,
        "threads": int,
    }

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        values = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in cls._PARSERS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            if key in values:
                raise ValueError(f"{path}:{lineno}: duplicate config key {key!r}")
            values[key] = cls._PARSERS[key](value.strip())
        return cls(**values)

    def override(self, **updates) -> "PipelineConfig":
        """Apply non-None overrides (CLI flags win over file values)."""
        effective = {k: v for k, v in updates.items() if v is not None}
        return replace(self, **effective) if effective else self

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = ",".join(str(x) for x in v) if isinstance(v, tuple) else v
        return out

    # param-object builders; these run the dataclass validators
    def encoding_kind(self) -> EncodingKind:
        try:
            return EncodingKind(self.encoding)
        except ValueError:
            raise ValueError(f"encoding must be 'tanh' or 'heat', got {self.encoding!r}") from None

    def encode_params(self) -> EncodeParams:
        return EncodeParams(alpha=self.alpha, n_diff_factor=self.n_diff_factor,
                            use_log_heat=self.use_log_heat)

    def reconstruction_params(self) -> ReconstructionParams:
        return ReconstructionParams(s_recon=self.s_recon, n_recon=self.n_recon,
                                    r_closing=self.r_closing, fg_threshold=self.fg_threshold,
                                    connectivity=self.connectivity)

    def filter_params(self) -> FilterParams:
        return FilterParams(r_min=self.r_min, r_max=self.r_max, p_overlap=self.p_overlap,
                            err_gradient=self.err_gradient, encoding=self.encoding_kind())

    def phantom_spec(self) -> PhantomSpec:
        return PhantomSpec(dims=self.dims, cell_count=self.cells, rng_seed=self.seed,
                           min_seed_separation=self.min_seed_separation,
                           membrane_width=self.membrane_width,
                           noise_sigma=self.noise_sigma)
