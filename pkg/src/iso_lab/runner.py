import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Optional, Union

import numpy as np

from iso_lab.constants import BOUNDARY_TOL, DEFAULT_C, DEFAULT_EPSILON, DEFAULT_RATE_TRIALS
from iso_lab.errors import InvalidInputError, InvalidParameterError, IsoLabError
from iso_lab.linalg import Matrix, operator_norm, principal_submatrix, read_matrix
from iso_lab.prooftrace import normalize_operator, run_pipeline
from iso_lab.select import IndexMeasure, select_exhaustive, select_greedy, selection_result, with_reports
from iso_lab.structure import (
    check_isomorphism,
    check_suppression,
    gram_spectrum,
    IsoFamily,
    isomorphism_family,
    suppression_family,
    zero_columns,
)
from iso_lab.testbed import EnsembleSpec, estimate_constants, generate, random_subset_rate
from iso_lab.types import Command, EnsembleKind, MeasureKind, OutputFormat, SelectionMethod, SubsetMask
from iso_lab.utils import dumps_json, read_weights_file, save_json
from iso_lab.witness import isomorphism_witness, suppression_witness

GENERATOR_PREFIX = "gen:"
PARAMETRIZED_KINDS = (EnsembleKind.PAIR_CORRELATION, EnsembleKind.UNIFORM_CORRELATION, EnsembleKind.RANK_DEFICIENT)


@dataclass
class RunConfig:
    """One CLI invocation; numeric grids (epsilon, C) hold several values only for ``estimate``."""

    command: Command
    input: str
    epsilons: List[float] = field(default_factory=lambda: [DEFAULT_EPSILON])
    delta: Optional[float] = None
    c_values: List[float] = field(default_factory=lambda: [DEFAULT_C])
    mu: str = "counting"
    method: SelectionMethod = SelectionMethod.EXHAUSTIVE
    tol: float = BOUNDARY_TOL
    seed: Optional[int] = None
    out: Optional[str] = None
    format: Optional[OutputFormat] = None
    subset: Optional[str] = None
    trials: int = DEFAULT_RATE_TRIALS
    count: int = 1
    plot_dir: Optional[str] = None

    def __post_init__(self) -> None:
        for epsilon in self.epsilons:
            if not 0.0 < epsilon < 1.0:
                raise InvalidParameterError(f"--epsilon values must lie in (0, 1), got {epsilon}.")
        for c_bound in self.c_values:
            if not c_bound > 1.0:
                raise InvalidParameterError(f"--C values must exceed 1, got {c_bound}.")
        if self.delta is not None and not self.delta > 0.0:
            raise InvalidParameterError(f"--delta must be positive, got {self.delta}.")
        if self.tol < 0:
            raise InvalidParameterError(f"--tol must be nonnegative, got {self.tol}.")
        if self.command is not Command.ESTIMATE and (len(self.epsilons) > 1 or len(self.c_values) > 1):
            raise InvalidParameterError("Parameter grids are only accepted by the estimate command.")

    @property
    def epsilon(self) -> float:
        return self.epsilons[0]

    @property
    def c_bound(self) -> float:
        return self.c_values[0]


def parse_generator(text: str, seed: Optional[int] = None, count: int = 1) -> EnsembleSpec:
    """Parses ``gen:kind:n[:param][:seed]``; an explicit ``seed`` argument wins over the inline one."""
    fields = text[len(GENERATOR_PREFIX):].split(":")
    try:
        kind = EnsembleKind(fields[0])
        n = int(fields[1])
        rest = fields[2:]
        param = None
        if kind in PARAMETRIZED_KINDS:
            param = float(rest.pop(0))
        inline_seed = int(rest.pop(0)) if rest else 0
    except (ValueError, IndexError):
        raise InvalidInputError(f"Cannot parse generator '{text}'; expected gen:kind:n[:param][:seed].")
    if rest:
        raise InvalidInputError(f"Unexpected trailing fields in generator '{text}'.")
    return EnsembleSpec(kind=kind, n=n, seed=inline_seed if seed is None else seed, count=count, param=param)


def parse_measure(text: str, n: int) -> IndexMeasure:
    """``counting``, ``file:PATH`` (one weight per line) or ``inline:w0,w1,...``."""
    if text == "counting":
        return IndexMeasure.counting(n)
    if text.startswith("file:"):
        return IndexMeasure(read_weights_file(text[len("file:"):], n), MeasureKind.GENERAL)
    if text.startswith("inline:"):
        try:
            weights = np.array([float(x) for x in text[len("inline:"):].split(",")])
        except ValueError:
            raise InvalidInputError(f"Cannot parse inline measure '{text}'.")
        if weights.size != n:
            raise InvalidInputError(f"Inline measure has {weights.size} weights, expected {n}.")
        return IndexMeasure(weights, MeasureKind.GENERAL)
    raise InvalidInputError(f"Unknown measure spec '{text}'; use counting, file:PATH or inline:w0,w1,...")


class CommandRunner:
    """Executes one command; JSON artifacts come back as dicts, tables as text."""

    def __init__(self, config: RunConfig) -> None:
        self.config = config
        self.trace_failed = False
        logging.info(f"Initialized runner for command: {config.command.value}")

    def load_operator(self) -> Matrix:
        source = self.config.input
        if source.startswith(GENERATOR_PREFIX):
            return generate(parse_generator(source, self.config.seed))[0]
        return read_matrix(source)

    def perform(self) -> Union[dict, list, str]:
        handlers = {
            Command.CHECK: self._check,
            Command.ENUMERATE: self._enumerate,
            Command.WITNESS: self._witness,
            Command.SELECT: self._select,
            Command.TRACE: self._trace,
            Command.ESTIMATE: self._estimate,
            Command.RATE: self._rate,
        }
        return handlers[self.config.command]()

    def _check(self) -> dict:
        T = self.load_operator()
        if self.config.subset is None:
            raise InvalidInputError("check needs --subset.")
        if self.config.delta is not None:
            sigma = SubsetMask.parse(self.config.subset, T.rows)
            member = check_suppression(T, self.config.delta, sigma, self.config.tol)
            result = {
                "member": member,
                "kind": "suppression",
                "delta": self.config.delta,
                "subset": sigma.to_list(),
                "submatrix_norm": operator_norm(principal_submatrix(T, sigma)),
                "S_norm": operator_norm(T),
            }
        else:
            sigma = SubsetMask.parse(self.config.subset, T.cols)
            free = zero_columns(T)
            member = check_isomorphism(T, self.config.epsilon, sigma, self.config.tol)
            result = {
                "member": member,
                "kind": "isomorphism",
                "epsilon": self.config.epsilon,
                "subset": sigma.to_list(),
                "free_indices": [i for i in sigma if i in free],
                "gram_spectrum": gram_spectrum(T, sigma).eigenvalues.tolist(),
            }
        logging.info(f"Membership of {sigma}: {member}")
        return result

    def _family(self, T: Matrix) -> IsoFamily:
        if self.config.delta is not None:
            return suppression_family(T, self.config.delta, self.config.tol)
        return isomorphism_family(T, self.config.epsilon, self.config.tol)

    def _enumerate(self) -> dict:
        return self._family(self.load_operator()).to_dict()

    def _witness(self) -> dict:
        T = self.load_operator()
        if self.config.delta is not None:
            measure = suppression_witness(T, self.config.delta, self.config.tol)
        else:
            measure = isomorphism_witness(T, self.config.epsilon, self.config.tol)
        return measure.to_dict()

    def _select(self) -> dict:
        T = self.load_operator()
        mu = parse_measure(self.config.mu, T.cols)
        epsilon = self.config.epsilon
        if self.config.method is SelectionMethod.PIPELINE:
            trace = run_pipeline(T, epsilon, mu, self.config.c_bound, self.config.tol).raise_if_failed()
            normalized, _ = normalize_operator(T)
            result = selection_result(normalized, epsilon, mu, trace.sigma2, SelectionMethod.PIPELINE)
        else:
            normalized, _ = normalize_operator(T)
            select = select_exhaustive if self.config.method is SelectionMethod.EXHAUSTIVE else select_greedy
            result = select(normalized, epsilon, mu, self.config.tol)
        return with_reports(T, epsilon, mu, result, self.config.tol).to_dict()

    def _trace(self) -> dict:
        T = self.load_operator()
        mu = parse_measure(self.config.mu, T.cols)
        trace = run_pipeline(T, self.config.epsilon, mu, self.config.c_bound, self.config.tol)
        self.trace_failed = trace.failed
        return trace.to_dict()

    def _estimate(self) -> Union[list, str]:
        if not self.config.input.startswith(GENERATOR_PREFIX):
            raise InvalidInputError("estimate needs a generator input gen:kind:n[:param][:seed].")
        spec = parse_generator(self.config.input, self.config.seed, self.config.count)
        report = estimate_constants([spec], self.config.epsilons, self.config.c_values, self.config.tol)
        if self.config.plot_dir:
            from iso_lab.analyse.plot_constants import plot_constants_go
            plot_constants_go(report, self.config.plot_dir)
        if self.config.format is OutputFormat.TSV:
            return report.to_tsv()
        if self.config.format is OutputFormat.JSON:
            return report.rows.to_dict(orient="records")
        return report.to_csv()

    def _rate(self) -> dict:
        if not self.config.input.startswith(GENERATOR_PREFIX):
            raise InvalidInputError("rate needs a doubling generator input gen:doubling:n.")
        spec = parse_generator(self.config.input)
        seed = self.config.seed if self.config.seed is not None else spec.seed
        estimate = random_subset_rate(spec, self.config.epsilon, self.config.trials, seed, self.config.tol)
        return estimate.to_dict()


def emit(artifact: Any, out: Optional[str]) -> None:
    """Writes the artifact to ``out`` (stdout when None); non-string artifacts are JSON."""
    if not isinstance(artifact, str):
        if out:
            save_json(artifact, out)
            return
        artifact = dumps_json(artifact)
    if out:
        Path(out).write_text(artifact if artifact.endswith("\n") else artifact + "\n")
        logging.info(f"Results saved to {out}")
    else:
        print(artifact.rstrip("\n"))


def run(config: RunConfig) -> int:
    """Runs one command and returns the process exit code (0, 2, 3 or 4)."""
    runner = CommandRunner(config)
    try:
        artifact = runner.perform()
    except IsoLabError as e:
        logging.error(f"{config.command.value} failed: {e}")
        return e.exit_code
    emit(artifact, config.out)
    if runner.trace_failed:
        logging.error("Proof trace finished with failed checks.")
        return 4
    return 0
