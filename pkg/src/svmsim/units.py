"""Byte-size constants and helpers shared across the simulator."""

KIB = 1024
MIB = 1024 * KIB
GIB = 1024 * MIB

DEFAULT_PAGE_SIZE = 4 * KIB
MIN_ALIGNMENT = 2 * MIB


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def floor_power_of_two(n: int) -> int:
    if n <= 0:
        raise ValueError("floor_power_of_two needs n > 0")
    return 1 << (n.bit_length() - 1)
