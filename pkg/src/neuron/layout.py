"""Electrode channel layout (international 10-20 labels)."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import UnknownChannel

# 16-channel default in headset order.  Odd suffix = left hemisphere,
# even = right; the letter prefix names the lobe (Fp, F, C, P, O, T).
DEFAULT_CHANNEL_NAMES = (
    "Fp1", "Fp2", "C3", "C4", "P7", "P8", "O1", "O2",
    "F7", "F8", "F3", "F4", "T7", "T8", "P3", "P4",
)


@dataclass(frozen=True)
class ChannelLayout:
    names: tuple[str, ...] = DEFAULT_CHANNEL_NAMES
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        names = tuple(self.names)
        if len(set(names)) != len(names):
            raise ValueError("channel names must be unique")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    @property
    def channels(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownChannel(f"channel {name!r} not in layout {self.names}") from None

    def lobe(self, name: str) -> str:
        self.index(name)
        return name[:2] if name.startswith("Fp") else name[0]

    def side(self, name: str) -> str:
        """'left', 'right', or 'midline' per the odd/even/z suffix convention."""
        self.index(name)
        suffix = name.lstrip("FPCOTp")
        if suffix.lower() == "z":
            return "midline"
        return "left" if int(suffix) % 2 == 1 else "right"


DEFAULT_LAYOUT = ChannelLayout()
