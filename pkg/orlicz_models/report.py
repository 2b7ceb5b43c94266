"""
Verification reports: entries with verdicts and numeric intervals, emitted as text lines or as JSON validated
against REPORT_SCHEMA.
"""
import json
import math
import os
import sys
from typing import NamedTuple, Optional

import jsonschema
from semantic_version import Version

from .orlicz_utilities import json_interval, json_number

SCHEMA_VERSION = Version('1.0.0')

_NUMBER = {'oneOf': [{'type': 'number'}, {'type': 'string', 'enum': ['inf', '-inf']}, {'type': 'null'}]}

REPORT_SCHEMA = {
    'type': 'object',
    'required': ['schema_version', 'command', 'entries', 'passed'],
    'additionalProperties': False,
    'properties': {
        'schema_version': {'type': 'string'},
        'command': {'type': 'string'},
        'passed': {'type': 'boolean'},
        'entries': {
            'type': 'array',
            'items': {
                'type': 'object',
                'required': ['check_id', 'inputs', 'verdict', 'interval', 'anchor', 'passed'],
                'additionalProperties': False,
                'properties': {
                    'check_id': {'type': 'string'},
                    'inputs': {'type': 'object'},
                    'verdict': {'type': 'string'},
                    'interval': {'oneOf': [{'type': 'null'},
                                           {'type': 'array', 'items': _NUMBER, 'minItems': 2, 'maxItems': 2}]},
                    'anchor': {'type': 'string', 'minLength': 1},
                    'passed': {'type': 'boolean'},
                    'detail': {'type': 'string'},
                }
            }
        }
    }
}


class ReportEntry(NamedTuple):
    """ One check. anchor names the mathematical statement being checked, or 'plumbing' """
    check_id: str
    inputs: dict
    verdict: str
    interval: Optional[tuple]
    anchor: str
    passed: bool
    detail: str = ''

    def to_dict(self):
        out = {'check_id': self.check_id, 'inputs': _json_safe(self.inputs), 'verdict': self.verdict,
               'interval': json_interval(self.interval), 'anchor': self.anchor, 'passed': bool(self.passed)}
        if self.detail:
            out['detail'] = self.detail
        return out

    @classmethod
    def from_dict(cls, data):
        interval = data.get('interval')
        if interval is not None:
            interval = tuple(_number_from_json(x) for x in interval)
        return cls(data['check_id'], data['inputs'], data['verdict'], interval, data['anchor'], data['passed'],
                   data.get('detail', ''))


class Report(NamedTuple):
    schema_version: Version
    command: str
    entries: tuple

    @property
    def passed(self):
        return all(e.passed for e in self.entries)

    @classmethod
    def build(cls, command, entries):
        return cls(SCHEMA_VERSION, command, tuple(entries))

    def to_dict(self):
        return {'schema_version': str(self.schema_version), 'command': self.command,
                'entries': [e.to_dict() for e in self.entries], 'passed': self.passed}

    def to_json(self):
        """ Schema-validated, key-sorted JSON; infinities are the strings 'inf' / '-inf' """
        data = self.to_dict()
        jsonschema.validate(data, REPORT_SCHEMA)
        return json.dumps(data, sort_keys=True, allow_nan=False, indent=2)

    def to_text(self, color=None):
        color = use_color() if color is None else color
        lines = []
        for e in self.entries:
            tag = '[PASS]' if e.passed else '[FAIL]'
            if color:
                tag = f'\033[32m{tag}\033[0m' if e.passed else f'\033[31m{tag}\033[0m'
            interval = ''
            if e.interval is not None:
                interval = f' [{_fmt(e.interval[0])}, {_fmt(e.interval[1])}]'
            detail = f' - {e.detail}' if e.detail else ''
            lines.append(f'{tag} {e.check_id}: {e.verdict}{interval}{detail}')
        lines.append(f'{sum(e.passed for e in self.entries)}/{len(self.entries)} checks passed')
        return '\n'.join(lines)


def load_report(text):
    """ Parses a JSON report

    Raises
    ------
    jsonschema.ValidationError on a malformed report, ValueError on an incompatible schema major version
    """
    data = json.loads(text)
    jsonschema.validate(data, REPORT_SCHEMA)
    version = Version(data['schema_version'])
    if version.major != SCHEMA_VERSION.major:
        raise ValueError(f'report.py::load_report() - schema version {version} is not compatible with '
                         f'{SCHEMA_VERSION}')
    entries = tuple(ReportEntry.from_dict(e) for e in data['entries'])
    return Report(version, data['command'], entries)


def use_color(stream=None):
    """ Colour only on a terminal and when NO_COLOR is unset """
    stream = stream or sys.stdout
    return 'NO_COLOR' not in os.environ and hasattr(stream, 'isatty') and stream.isatty()


def _fmt(x):
    return 'inf' if x == math.inf else '-inf' if x == -math.inf else f'{x:.10g}'


def _number_from_json(x):
    if x == 'inf':
        return math.inf
    if x == '-inf':
        return -math.inf
    return x


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float):
        return json_number(obj)
    return obj
