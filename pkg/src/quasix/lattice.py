"""Sites and regions of a periodic 1-D chain.

All geometry uses the periodic distance min(|x-y|, N-|x-y|) on Z_N.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property


def periodic_dist(x: int, y: int, N: int) -> int:
    d = abs((x - y) % N)
    return min(d, N - d)


@dataclass(frozen=True)
class Region:
    """A set of sites of a periodic chain of ``N`` sites."""

    sites: tuple[int, ...]
    N: int

    def __post_init__(self):
        sites = tuple(sorted(set(s % self.N for s in self.sites)))
        object.__setattr__(self, "sites", sites)
        if not sites:
            raise ValueError("empty region")

    @property
    def size(self) -> int:
        return len(self.sites)

    @cached_property
    def diam(self) -> int:
        return max(
            (periodic_dist(x, y, self.N) for x in self.sites for y in self.sites),
            default=0,
        )

    def dist(self, other: "Region") -> int:
        if other.N != self.N:
            raise ValueError("regions live on different chains")
        return min(periodic_dist(x, y, self.N) for x in self.sites for y in other.sites)

    def ball(self, ell: int) -> "Region":
        """All sites within distance ``ell`` of this region."""
        if ell < 0:
            raise ValueError("ell must be >= 0")
        sites = {
            x
            for x in range(self.N)
            if min(periodic_dist(x, s, self.N) for s in self.sites) <= ell
        }
        return Region(tuple(sites), self.N)

    def shift(self, x: int) -> "Region":
        return Region(tuple((s + x) % self.N for s in self.sites), self.N)

    def is_contiguous(self) -> bool:
        """True if the region is an interval under the periodic metric."""
        if self.size == self.N:
            return True
        present = set(self.sites)
        # an interval has exactly one "gap edge" when walking around the ring
        edges = sum(1 for s in self.sites if (s + 1) % self.N not in present)
        return edges == 1

    def as_interval(self) -> tuple[int, int]:
        """Return (start, length) of a contiguous region."""
        if not self.is_contiguous():
            raise ValueError("region is not contiguous under the periodic metric")
        if self.size == self.N:
            return 0, self.N
        present = set(self.sites)
        start = next(s for s in self.sites if (s - 1) % self.N not in present)
        return start, self.size
