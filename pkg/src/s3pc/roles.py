"""Party roles and protocol identifiers; both travel as single wire bytes."""

from enum import IntEnum


class Role(IntEnum):
    CS = 0
    ALICE = 1
    BOB = 2
    CAROL = 3
    CLIENT = 4

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> "Role":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown role {text!r}") from None


class ProtocolId(IntEnum):
    CS_BUNDLE = 0
    S2PM = 1
    S3PM = 2
    S2PI = 3
    S2PHM = 4
    S3PHM = 5
    S3PLRT = 6
    S3PLRP = 7

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> "ProtocolId":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown protocol {text!r}") from None
