"""
This test module tests the orlicz_models command line by running the subcommands in-process, checking the schema of
the JSON reports and checking the results against known values.

Intended to be run with pytest: pytest -s test_cli_io.py
"""
import json
import math
from collections import namedtuple

from orlicz_models.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main
from orlicz_models.report import load_report

"""
tuple for storing pairs of (key, type) for report entry schemas
"""
_s = namedtuple('_s', ['key', 'type'])

schema_entry = [
    _s('check_id', str),
    _s('inputs', dict),
    _s('verdict', str),
    _s('anchor', str),
    _s('passed', bool),
]

STEPS = 'piecewise [0 1/2 const 1.5; 1/2 1 const 0.5]'
TARGET = 'piecewise [0 1/2 const 2; 1/2 1 const 0]'


def run_json(capsys, *argv):
    """ Runs the command line with --json and parses the report written to stdout

    Parameters
    ----------
    capsys - pytest capture fixture
    argv - command line arguments (without --json)

    Returns
    -------
    (exit status, report dict)
    """
    capsys.readouterr()
    status = main(list(argv) + ['--json'])
    out = capsys.readouterr().out
    return status, json.loads(out)


def check_report_schema(report):
    """ Checks that the report has the top-level fields and each entry conforms to the entry schema.

    Parameters
    ----------
    report - report dict

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    assert report is not None and report.get('schema_version') == '1.0.0'
    assert isinstance(report.get('entries'), list) and report['entries']
    for entry in report['entries']:
        for s in schema_entry:
            assert s.key in entry and isinstance(entry[s.key], s.type)
        assert 'interval' in entry
    assert report['passed'] == all(e['passed'] for e in report['entries'])


def entry(report, check_id):
    """ The entry with the given check id """
    matches = [e for e in report['entries'] if e['check_id'] == check_id]
    assert len(matches) == 1
    return matches[0]


def test_arc_exp_check(capsys):
    """ Check the exponential arc between the uniform density and 2x: connected with witness (-1, inf)

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    print('test_cli_io: testing arc exp-check..... ')
    status, report = run_json(capsys, 'arc', 'exp-check', '--p', 'uniform', '--q', 'beta beta=2')
    check_report_schema(report)
    assert status == EXIT_OK
    e = entry(report, 'arc.exponential')
    assert e['verdict'] == 'Connected'
    assert e['interval'] == [-1.0, 'inf']
    assert report['command'] == 'arc exp-check'


def test_arc_exp_check_divergenza(capsys):
    """ The divergenza density is not exponentially connected to the uniform density. The query still succeeds
    because the verdict is decided.

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    print('test_cli_io: testing arc exp-check on divergenza..... ')
    status, report = run_json(capsys, 'arc', 'exp-check', '--p', 'uniform', '--q', 'divergenza', '--no-jensen')
    check_report_schema(report)
    assert status == EXIT_OK
    e = entry(report, 'arc.exponential')
    assert e['verdict'] == 'NotConnected' and e['interval'] is None


def test_arc_mix_check(capsys):
    """ Check the mixture arc between the uniform density and a step density: lambda in (-2, 2)

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    print('test_cli_io: testing arc mix-check..... ')
    status, report = run_json(capsys, 'arc', 'mix-check', '--p', 'uniform', '--q', STEPS)
    check_report_schema(report)
    assert status == EXIT_OK
    e = entry(report, 'arc.mixture')
    assert e['verdict'] == 'Connected' and e['interval'] == [-2.0, 2.0]


def test_arc_crosscheck(capsys):
    """ Check that the equivalent characterizations agree for the uniform density and 2x

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    print('test_cli_io: testing arc crosscheck..... ')
    status, report = run_json(capsys, 'arc', 'crosscheck', '--p', 'uniform', '--q', 'beta beta=2')
    check_report_schema(report)
    assert status == EXIT_OK
    assert entry(report, 'arc.crosscheck')['verdict'] == 'Connected'


def test_divergence(capsys):
    """ Check D(2x||1) = log 2 - 1/2 and D(1||2x) = 1 - log 2

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    print('test_cli_io: testing divergence..... ')
    status, report = run_json(capsys, 'divergence', '--p', 'uniform', '--q', 'beta beta=2')
    check_report_schema(report)
    assert status == EXIT_OK
    lo, hi = entry(report, 'divergence.forward')['interval']
    assert lo - 1e-12 <= math.log(2.0) - 0.5 <= hi + 1e-12
    lo, hi = entry(report, 'divergence.reverse')['interval']
    assert lo - 1e-12 <= 1.0 - math.log(2.0) <= hi + 1e-12
    assert entry(report, 'divergence.equivalence')['verdict'] == 'Holds'
    assert entry(report, 'divergence.exponential_model')['passed']


def test_model(capsys):
    """ Check the model representation and the cumulant functional

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    print('test_cli_io: testing model..... ')
    status, report = run_json(capsys, 'model', '--p', 'uniform', '--q', 'beta beta=2')
    check_report_schema(report)
    assert status == EXIT_OK
    k, _ = entry(report, 'model.represent')['interval']
    assert abs(k - (1.0 - math.log(2.0))) <= 1e-9

    status, report = run_json(capsys, 'model', '--p', 'uniform', '--u', 'poly -0.5 1')
    assert status == EXIT_OK
    lo, hi = entry(report, 'model.cumulant')['interval']
    assert abs(0.5 * (lo + hi) - math.log(2.0 * math.sinh(0.5))) <= 1e-9

    # an off-centre variable is a library error reported as a failed entry
    status, report = run_json(capsys, 'model', '--p', 'uniform', '--u', 'const 1')
    assert status == EXIT_FAILED
    assert report['entries'][0]['verdict'] == 'Error'
    assert 'NotCenteredError' in report['entries'][0]['detail']


def test_norm(capsys):
    """ Check ||1||_Phi1 = 1/arccosh(2) under the uniform density

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    print('test_cli_io: testing norm..... ')
    status, report = run_json(capsys, 'norm', '--u', 'const 1', '--tol', '1e-12')
    check_report_schema(report)
    assert status == EXIT_OK
    lo, hi = entry(report, 'norm.luxemburg')['interval']
    assert lo - 1e-9 <= 1.0 / math.acosh(2.0) <= hi + 1e-9
    assert entry(report, 'norm.membership')['verdict'] == 'Finite'


def test_restrict_and_scan(capsys):
    """ Check F(1/2) = 1/4 for 2x and that its restrictions stay connected to the uniform density

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    print('test_cli_io: testing restrict and stability-scan..... ')
    status, report = run_json(capsys, 'restrict', '--p', 'beta beta=2', '--t', '0.5')
    check_report_schema(report)
    assert status == EXIT_OK
    assert entry(report, 'restrict')['interval'] == [0.25, 0.25]

    status, report = run_json(capsys, 'stability-scan', '--p', 'beta beta=2', '--grid', '0.25,0.5,1')
    check_report_schema(report)
    assert status == EXIT_OK
    assert entry(report, 'stability[0.5]')['verdict'] == 'Connected'
    assert entry(report, 'stability.monotone')['interval'] == ['inf', 'inf']


def test_counterexample_series(capsys):
    """ Check the closed-form divergence series of divergenza

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    print('test_cli_io: testing counterexample series..... ')
    status, report = run_json(capsys, 'counterexample', 'series', '--direction', 'p||q', '--terms', '1000')
    check_report_schema(report)
    assert status == EXIT_OK
    lo, hi = entry(report, 'counterexample.series')['interval']
    assert lo < hi


def test_closure(capsys):
    """ Check the mixture approximation of a density vanishing on (1/2, 1]

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    print('test_cli_io: testing closure approx..... ')
    status, report = run_json(capsys, 'closure', 'approx', '--target', TARGET, '--n-max', '3')
    check_report_schema(report)
    assert status == EXIT_OK
    assert [e['check_id'] for e in report['entries']] == ['closure.q[1]', 'closure.q[2]', 'closure.q[3]',
                                                          'closure.l1']
    assert entry(report, 'closure.l1')['verdict'] == 'Decreasing'


def test_verify_all_subset(capsys):
    """ Check a subset of the acceptance suite and that the JSON report round-trips byte for byte

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    print('test_cli_io: testing verify-all --only beta..... ')
    capsys.readouterr()
    status = main(['verify-all', '--only', 'beta', '--json'])
    out = capsys.readouterr().out
    assert status == EXIT_OK
    assert load_report(out).to_json() == out.rstrip('\n')


def test_deterministic_output(capsys):
    """ Two runs of the same command print identical bytes

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    argv = ['divergence', '--p', 'uniform', '--q', STEPS, '--json']
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    second = capsys.readouterr().out
    assert first == second


def test_text_output(capsys, monkeypatch):
    """ Without --json the report is one line per entry and a summary line

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    monkeypatch.setenv('NO_COLOR', '1')
    status = main(['restrict', '--p', 'uniform', '--t', '0.5'])
    lines = capsys.readouterr().out.splitlines()
    assert status == EXIT_OK
    assert lines[0].startswith('[PASS] restrict: Restricted [0.5, 0.5]')
    assert lines[-1] == '1/1 checks passed'


def test_usage_errors(capsys):
    """ Missing arguments, unknown commands and malformed densities are usage errors (exit status 2)

    Returns
    -------
    No return value. Asserts will be triggered upon failure.
    """
    print('test_cli_io: testing usage errors..... ')
    assert main([]) == EXIT_USAGE
    assert main(['frobnicate']) == EXIT_USAGE
    assert main(['arc', 'exp-check', '--p', 'uniform']) == EXIT_USAGE
    assert main(['arc', 'exp-check', '--p', 'uniform', '--q', 'gamma']) == EXIT_USAGE
    assert main(['arc', 'exp-check', '--p', 'uniform', '--q', 'piecewise [0 1 const 2]']) == EXIT_USAGE
    assert main(['restrict', '--p', 'uniform', '--t', '1.5']) == EXIT_USAGE
    assert main(['model', '--p', 'uniform', '--q', 'beta beta=2', '--u', 'const 0']) == EXIT_USAGE
    assert main(['--help']) == EXIT_OK
    capsys.readouterr()
