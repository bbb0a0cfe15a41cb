"""run logger with levels and streams

diagnostics go to the console (stderr, since stdout carries CSV data) and,
optionally, to a JSON-lines record file. levels work as in `muutils.logger`:
lower is more important, negative levels are warnings. streams are accessed
as attributes or items:

```python
logger = get_logger()
logger.summary({"p_max": 0.41, "t_argmax": 9}, lvl=0)
logger["violations"]({"mean_eta": 0.93, "q": 0.02, "w": -0.01}, lvl=-10)
```
"""

import json
import sys
import time
import typing
from functools import partial
from typing import Any, Callable, Sequence, TextIO

from muutils.json_serialize import JSONitem, json_serialize
from muutils.logger.headerfuncs import HEADER_FUNCTIONS, HeaderFunction
from muutils.logger.loggingstream import LoggingStream
from muutils.logger.simplelogger import AnyIO, NullIO

# pylint: disable=consider-using-with

DEFAULT_STREAMS: tuple[str, ...] = ("summary", "progress", "violations", "timing")


class RunLogger:
    """logger for simulation runs

    # Parameters:
     - `log_path : str | None`
       JSON-lines file for records (defaults to `None`, records are dropped)
     - `console : TextIO | None`
       where console messages go (defaults to `None`, meaning `sys.stderr` at call time)
     - `default_level : int`
       level for messages that don't specify one
       (defaults to `0`)
     - `console_print_threshold : int`
       messages with a level above this are not printed unless `console_print=True`
       (defaults to `10`)
     - `level_header : HeaderFunction`
       formats console messages
       (defaults to `HEADER_FUNCTIONS["md"]`)
     - `streams : Sequence[LoggingStream]`
       extra streams, on top of `DEFAULT_STREAMS`
    """

    def __init__(
        self,
        log_path: str | None = None,
        console: TextIO | None = None,
        default_level: int = 0,
        console_print_threshold: int = 10,
        level_header: HeaderFunction = HEADER_FUNCTIONS["md"],
        streams: Sequence[LoggingStream] = (),
    ):
        self._log_path: str | None = log_path
        self._log_file_handle: AnyIO = (
            open(log_path, "w", encoding="utf-8") if log_path is not None else NullIO()
        )
        self._console: TextIO | None = console
        self._default_level: int = default_level
        self._console_print_threshold: int = console_print_threshold
        self._level_header: HeaderFunction = level_header

        self._streams: dict[str | None, LoggingStream] = {
            name: LoggingStream(name) for name in DEFAULT_STREAMS
        }
        for s in streams:
            if s.name in self._streams:
                raise ValueError(f"stream {s.name} is already defined")
            self._streams[s.name] = s

        self._start_time: float = time.time()

    @property
    def console(self) -> TextIO:
        return self._console if self._console is not None else sys.stderr

    def log(
        self,
        msg: JSONitem = None,
        lvl: int | None = None,
        stream: str | None = None,
        console_print: bool = False,
        **kwargs,
    ) -> None:
        """log `msg` to `stream`, printing to the console if `lvl` is important enough"""
        if stream not in self._streams:
            self._streams[stream] = LoggingStream(stream)

        if lvl is None:
            stream_default: int | None = self._streams[stream].default_level
            lvl = stream_default if stream_default is not None else self._default_level

        if console_print or (lvl <= self._console_print_threshold):
            print(
                self._level_header(msg=msg, lvl=lvl, stream=stream),
                file=self.console,
            )

        msg_dict: dict[str, Any]
        if isinstance(msg, typing.Mapping):
            msg_dict = dict(msg)
        else:
            msg_dict = {"_msg": msg}

        msg_dict["_lvl"] = lvl
        if len(kwargs) > 0:
            msg_dict["_kwargs"] = kwargs

        msg_dict = {
            **{k: v() for k, v in self._streams[stream].default_contents.items()},
            **msg_dict,
        }

        handler: AnyIO | None = self._streams[stream].handler
        target: AnyIO = handler if handler is not None else self._log_file_handle
        target.write(json.dumps(json_serialize(msg_dict)) + "\n")

    def elapsed(self) -> float:
        """seconds since the logger was created"""
        return time.time() - self._start_time

    def flush_all(self) -> None:
        self._log_file_handle.flush()
        for stream in self._streams.values():
            if stream.handler is not None:
                stream.handler.flush()

    def close(self) -> None:
        self.flush_all()
        if self._log_path is not None:
            self._log_file_handle.close()

    def __getattr__(self, stream: str) -> Callable:
        if stream.startswith("_"):
            raise AttributeError(f"invalid stream name {stream} (no underscores)")
        return partial(self.log, stream=stream)

    def __getitem__(self, stream: str) -> Callable:
        return partial(self.log, stream=stream)

    def __call__(self, *args, **kwargs) -> None:
        return self.log(*args, **kwargs)


_LOGGER: RunLogger | None = None


def get_logger() -> RunLogger:
    """the shared logger, created with defaults on first use"""
    global _LOGGER
    if _LOGGER is None:
        _LOGGER = RunLogger()
    return _LOGGER


def configure_logger(**kwargs) -> RunLogger:
    """replace the shared logger, closing the previous one. kwargs go to `RunLogger`"""
    global _LOGGER
    if _LOGGER is not None:
        _LOGGER.close()
    _LOGGER = RunLogger(**kwargs)
    return _LOGGER
