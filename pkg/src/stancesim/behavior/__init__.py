from . import bot, human

__all__ = ["bot", "human"]
