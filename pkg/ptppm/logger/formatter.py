"""
One JSON object per log event.

Field order: timestamp, level, logger, event, then the timestep `t` when the
event carries one, then the remaining fields in the order they were passed.
"""
import json
import logging
from datetime import datetime, timezone
from typing import Any

import numpy as np


_RECORD_ATTRS = frozenset(vars(logging.LogRecord('', 0, '', 0, '', None, None))) | {'message', 'taskName'}


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    try:
        json.dumps(value)
    except (TypeError, ValueError):
        return str(value)
    return value


class JSONFormatter(logging.Formatter):

    def format(self, record: logging.LogRecord) -> str:
        created = datetime.fromtimestamp(record.created, tz=timezone.utc)
        payload: dict[str, Any] = {
            'timestamp': created.strftime('%Y-%m-%dT%H:%M:%S.') + f'{int(record.msecs):03d}Z',
            'level': record.levelname,
            'logger': record.name,
            'event': record.getMessage(),
        }
        fields = {k: v for k, v in vars(record).items() if k not in _RECORD_ATTRS and not k.startswith('_')}
        if 't' in fields:
            payload['t'] = _jsonable(fields.pop('t'))
        payload.update((k, _jsonable(v)) for k, v in fields.items())
        return json.dumps(payload, ensure_ascii=False)
