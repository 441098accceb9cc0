from __future__ import annotations

import pytest

from sdn_planner.exceptions import SolverError
from sdn_planner.optimkit import SolveStatus
from sdn_planner.optimkit.solutions import SolutionReader, PlainReader, CbcReader, HighsReader, GurobiReader


def test_reader_registry():
    assert SolutionReader.solver_names() == ['cbc', 'gurobi', 'highs', 'plain']
    assert isinstance(SolutionReader.for_solver('cbc'), CbcReader)
    with pytest.raises(SolverError):
        SolutionReader.for_solver('glpk')


@pytest.mark.parametrize(
    'command, reader_cls',
    [
        ('cbc {model} solve solu {solution}', CbcReader),
        ('/opt/highs/bin/highs --model_file {model}', HighsReader),
        ('gurobi_cl ResultFile={solution} {model}', GurobiReader),
        ('my_solver {model} {solution}', PlainReader),
        ('', PlainReader),
    ],
)
def test_reader_for_command(command, reader_cls):
    assert isinstance(SolutionReader.for_command(command), reader_cls)


def test_plain_reader():
    parsed = PlainReader().parse('# comment\nx0 1\n\nx1 2.5\nnonsense\n')
    assert parsed.status == SolveStatus.OPTIMAL
    assert parsed.values == {'x0': 1.0, 'x1': 2.5}
    assert PlainReader().parse('').status == SolveStatus.INFEASIBLE


def test_cbc_reader():
    text = (
        'Optimal - objective value 3.50000000\n'
        '      0 x0                     1                       0\n'
        '      1 x1                   2.5                       0\n'
        '**    2 x2                     0                       1\n'
    )
    parsed = CbcReader().parse(text)
    assert parsed.status == SolveStatus.OPTIMAL
    assert parsed.objective == 3.5
    assert parsed.values == {'x0': 1.0, 'x1': 2.5, 'x2': 0.0}


@pytest.mark.parametrize(
    'header, status',
    [
        ('Infeasible - objective value 0.00000000', SolveStatus.INFEASIBLE),
        ('Stopped on time - objective value 4.00000000', SolveStatus.LIMIT),
    ],
)
def test_cbc_reader_status(header, status):
    assert CbcReader().parse(f'{header}\n').status == status


def test_cbc_reader_rejects_unknown_status():
    with pytest.raises(SolverError):
        CbcReader().parse('Something else\n')
    with pytest.raises(SolverError):
        CbcReader().parse('')


def test_highs_reader():
    text = (
        'Model status\nOptimal\n\n# Primal solution values\nFeasible\nObjective 3.5\n'
        '# Columns 2\nx0 1\nx1 2.5\n# Rows 1\nc0 4\n'
    )
    parsed = HighsReader().parse(text)
    assert parsed.status == SolveStatus.OPTIMAL
    assert parsed.objective == 3.5
    assert parsed.values == {'x0': 1.0, 'x1': 2.5}


def test_highs_reader_infeasible():
    assert HighsReader().parse('Model status\nInfeasible\n').status == SolveStatus.INFEASIBLE
    with pytest.raises(SolverError):
        HighsReader().parse('Model status\nConfused\n')
    with pytest.raises(SolverError):
        HighsReader().parse('nothing here\n')


def test_gurobi_reader():
    parsed = GurobiReader().parse('# Objective value = 3.5\nx0 1\nx1 2.5\n')
    assert parsed.status == SolveStatus.OPTIMAL
    assert parsed.objective == 3.5
    assert parsed.values == {'x0': 1.0, 'x1': 2.5}
