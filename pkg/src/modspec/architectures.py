"""Connectivity variants: how modules tile the input and output blocks."""

from __future__ import annotations

from dataclasses import dataclass

from .datasets import DatasetParams, ParameterError

DENSE = "dense"
SHALLOW = "shallow"
OUTPUT_PARTITIONED = "output_partitioned"
FULLY_PARTITIONED = "fully_partitioned"
IMPERFECT_PARTITION = "imperfect_partition"

_VARIANTS = (DENSE, SHALLOW, OUTPUT_PARTITIONED, FULLY_PARTITIONED, IMPERFECT_PARTITION)


@dataclass(frozen=True)
class Architecture:
    variant: str
    k_y_left: int | None = None
    k_y_right: int | None = None

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ParameterError(f"unknown architecture variant {self.variant!r}")
        if self.variant == IMPERFECT_PARTITION:
            if self.k_y_left is None or self.k_y_right is None:
                raise ParameterError("imperfect partition needs k_y_left and k_y_right")
            if self.k_y_left < 0 or self.k_y_right < 0:
                raise ParameterError("partition counts must be nonnegative")

    @classmethod
    def dense(cls) -> "Architecture":
        return cls(DENSE)

    @classmethod
    def shallow(cls) -> "Architecture":
        return cls(SHALLOW)

    @classmethod
    def output_partitioned(cls) -> "Architecture":
        return cls(OUTPUT_PARTITIONED)

    @classmethod
    def fully_partitioned(cls) -> "Architecture":
        return cls(FULLY_PARTITIONED)

    @classmethod
    def imperfect_partition(cls, k_y_left: int, k_y_right: int) -> "Architecture":
        return cls(IMPERFECT_PARTITION, k_y_left, k_y_right)

    def validate_for(self, params: DatasetParams) -> None:
        if self.variant == IMPERFECT_PARTITION and self.k_y_left + self.k_y_right != params.k_y:
            raise ParameterError(
                f"k_y_left + k_y_right = {self.k_y_left + self.k_y_right} "
                f"must equal k_y = {params.k_y}")

    def module_rows(self, params: DatasetParams) -> list[tuple[str, tuple[int, int], tuple[int, int]]]:
        """Modules as (name, input row range, output row range); empty modules dropped."""
        self.validate_for(params)
        P = params.n_examples
        nx, ny = params.n_x, params.n_y
        full_in = (0, params.input_dim)
        full_out = (0, params.output_dim)
        if self.variant in (DENSE, SHALLOW):
            return [("dense", full_in, full_out)]
        if self.variant == OUTPUT_PARTITIONED:
            mods = []
            if ny > 0:
                mods.append(("comp", full_in, (0, ny)))
            if params.k_y > 0:
                mods.append(("noncomp", full_in, (ny, params.output_dim)))
            return mods
        if self.variant == FULLY_PARTITIONED:
            mods = []
            if ny > 0:
                mods.append(("comp", (0, nx), (0, ny)))
            if params.k_y > 0 and params.k_x > 0:
                mods.append(("noncomp", (nx, params.input_dim), (ny, params.output_dim)))
            return mods
        left_stop = ny + self.k_y_left * P
        mods = []
        if left_stop > 0:
            mods.append(("left", full_in, (0, left_stop)))
        if self.k_y_right > 0:
            mods.append(("right", full_in, (left_stop, params.output_dim)))
        return mods
