"""Module containing the training datasets: synthesis, generation, import and packing"""

import json
import logging
import math
import re
from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from os import PathLike
from pathlib import Path
from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ._errors import DatasetError, SolverError
from ._pgm import read_image, write_pgm
from .simp import PRESET_ASSUMPTIONS, Preset, optimize, preset

_logger = logging.getLogger(__name__)

GENERATOR_VERSION = "topocnn-simp/1"
INPUT_DIR = "input_data"
OUTPUT_DIR = "output_data"
META_FILE = "meta.json"
_IMAGE_SUFFIXES = (".pgm", ".png")
_NAME_PATTERN = re.compile(r"^vf_(\d+)$")


class Provenance(str, Enum):
    GENERATED_SIMP = "generated-simp"
    IMPORTED = "imported"


class Sample(BaseModel):
    """A pair of volume-fraction image and optimized design

    Both images are (ny, nx) densities in [0, 1], 1 being solid.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    volfrac: Annotated[float, Field(gt=0, le=1)]
    input_image: np.ndarray
    target_image: np.ndarray
    provenance: Provenance = Provenance.GENERATED_SIMP
    problem_tag: str = ""
    name: str = ""

    @model_validator(mode="after")
    def _check_images(self) -> "Sample":
        if self.input_image.ndim != 2 or self.input_image.shape != self.target_image.shape:
            raise ValueError(
                f"input {self.input_image.shape} and target {self.target_image.shape} "
                "must be images of the same size"
            )
        for image in (self.input_image, self.target_image):
            if image.size and (image.min() < 0 or image.max() > 1):
                raise ValueError("image densities must lie in [0, 1]")
        if not self.name:
            self.name = sample_name(self.volfrac)
        return self


class DatasetMeta(BaseModel):
    """The contents of meta.json"""

    problem: str
    nx: int
    ny: int
    vf_start: float
    vf_end: float
    vf_step: float
    seed: int
    penal: float
    rmin: float
    ft: int = 1
    E0: float
    E1: float
    nu: float
    move: float
    change_tol: float
    maxit: int | None = None
    generator_version: str | None = None
    assumptions: str | None = None


class Dataset(BaseModel):
    """An ordered collection of samples sharing one image size

    Samples are kept in the lexicographic order of their file names.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    samples: list[Sample]
    nx: int
    ny: int
    metadata: DatasetMeta | None = None
    failures: dict[str, str] = {}

    @model_validator(mode="after")
    def _check_samples(self) -> "Dataset":
        if not self.samples:
            raise ValueError("a dataset needs at least one sample")
        for sample in self.samples:
            if sample.input_image.shape != (self.ny, self.nx):
                raise ValueError(
                    f"sample {sample.name} has shape {sample.input_image.shape}, "
                    f"expected {(self.ny, self.nx)}"
                )
        names = [sample.name for sample in self.samples]
        if len(set(names)) != len(names):
            raise ValueError(f"sample names must be unique, got {sorted(names)}")
        self.samples = sorted(self.samples, key=lambda s: s.name)
        return self

    def __len__(self) -> int:
        return len(self.samples)

    def find(self, volfrac: float) -> Sample | None:
        """The sample stored under the file name of this volume fraction, if any"""
        name = sample_name(volfrac)
        return next((s for s in self.samples if s.name == name), None)


def sample_name(volfrac: float) -> str:
    """The file stem of a volume fraction, ``vf_`` plus the fraction times 10000"""
    return f"vf_{round(volfrac * 10000):04d}"


def sample_seed(seed: int, volfrac: float) -> int:
    """Derives the input-image seed of one sample from the run seed"""
    sequence = np.random.SeedSequence([seed, round(volfrac * 10000)])
    return int(sequence.generate_state(1)[0])


def volfrac_sweep(vf_start: float, vf_end: float, vf_step: float) -> list[float]:
    """The volume fractions ``vf_start, vf_start + vf_step, ...`` up to vf_end inclusive

    Raises:
        ValueError: the range is empty or leaves (0, 1]
    """
    if not 0 < vf_start <= vf_end <= 1:
        raise ValueError(f"invalid volume fraction range [{vf_start}, {vf_end}]")
    if vf_step <= 0:
        raise ValueError(f"vf_step must be positive, got {vf_step}")
    count = math.floor((vf_end - vf_start) / vf_step + 1e-9) + 1
    return [round(vf_start + k * vf_step, 10) for k in range(count)]


def gen_input_image(volfrac: float, nx: int, ny: int, seed: int) -> np.ndarray:
    """Scatters exactly ``round(volfrac * nx * ny)`` solid pixels at random

    Pixels are drawn uniformly without replacement from a generator seeded
    with ``seed``; halves round up.

    Returns:
        the (ny, nx) image, 1.0 where solid and 0.0 elsewhere

    Raises:
        ValueError: volfrac is outside (0, 1]
    """
    if not 0 < volfrac <= 1:
        raise ValueError(f"volume fraction must lie in (0, 1], got {volfrac}")
    size = nx * ny
    count = math.floor(volfrac * size + 0.5)
    rng = np.random.default_rng(seed)
    image = np.zeros(size)
    image[rng.choice(size, size=count, replace=False)] = 1.0
    return image.reshape(ny, nx)


def generate_dataset(
    problem: Preset | str,
    nx: int,
    ny: int,
    vf_start: float = 0.01,
    vf_end: float = 0.95,
    vf_step: float = 0.01,
    seed: int = 0,
    workers: int = 1,
    allow_partial: bool = False,
    **solver_kwargs: Any,
) -> Dataset:
    """Optimizes one design per volume fraction of the sweep

    Args:
        problem: the preset load case
        nx: elements along x
        ny: elements along y
        vf_start: the first volume fraction
        vf_end: the last volume fraction, inclusive
        vf_step: the sweep increment
        seed: the run seed the input images derive from
        workers: number of worker processes; 1 solves in-process
        allow_partial: keep the successful samples when some solves fail
        solver_kwargs: ProblemSpec fields overriding the solver defaults

    Returns:
        the dataset; ``failures`` lists the failed samples of a partial dataset

    Raises:
        DatasetError: two volume fractions of the sweep share a file name, a
            solve failed and allow_partial is off, or every solve failed
    """
    problem = Preset(problem)
    volfracs = volfrac_sweep(vf_start, vf_end, vf_step)
    names = [sample_name(vf) for vf in volfracs]
    if len(set(names)) != len(names):
        clashes = sorted({name for name in names if names.count(name) > 1})
        raise DatasetError(
            f"vf_step {vf_step} is finer than the file names resolve; clashing: {clashes}"
        )
    reference = preset(problem, nx, ny, volfracs[0], **solver_kwargs)
    jobs = [(problem, nx, ny, vf, seed, solver_kwargs) for vf in volfracs]
    _logger.info("generating %d samples of %s with %d worker(s)", len(jobs), reference.tag, workers)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            outcomes = list(executor.map(_solve_sample, jobs))
    else:
        outcomes = [_solve_sample(job) for job in jobs]

    samples, failures = [], {}
    for outcome in outcomes:
        if isinstance(outcome, Sample):
            samples.append(outcome)
        else:
            name, error = outcome
            failures[name] = error
    if failures:
        if not allow_partial or not samples:
            raise DatasetError(f"{len(failures)} of {len(jobs)} samples failed", failures)
        _logger.warning("partial dataset: %d of %d samples failed", len(failures), len(jobs))

    metadata = DatasetMeta(
        problem=problem.value,
        nx=nx,
        ny=ny,
        vf_start=vf_start,
        vf_end=vf_end,
        vf_step=vf_step,
        seed=seed,
        penal=reference.penal,
        rmin=reference.rmin,
        E0=reference.E0,
        E1=reference.E1,
        nu=reference.nu,
        move=reference.move,
        change_tol=reference.change_tol,
        maxit=reference.maxit,
        generator_version=GENERATOR_VERSION,
        assumptions=PRESET_ASSUMPTIONS[problem],
    )
    return Dataset(samples=samples, nx=nx, ny=ny, metadata=metadata, failures=failures)


def write_dataset(ds: Dataset, root: str | PathLike):
    """Writes the dataset as ``<root>/input_data``, ``<root>/output_data`` and ``<root>/meta.json``"""
    root = Path(root)
    (root / INPUT_DIR).mkdir(parents=True, exist_ok=True)
    (root / OUTPUT_DIR).mkdir(parents=True, exist_ok=True)
    for sample in ds.samples:
        write_pgm(sample.input_image, root / INPUT_DIR / f"{sample.name}.pgm")
        write_pgm(sample.target_image, root / OUTPUT_DIR / f"{sample.name}.pgm")
    if ds.metadata is not None:
        (root / META_FILE).write_text(ds.metadata.model_dump_json(indent=2))
    _logger.info("wrote %d samples to %s", len(ds), root)


def load_dataset(dir_path: str | PathLike) -> Dataset:
    """Loads the image pairs of a dataset directory

    Inputs and targets are paired by identical file name and ordered
    lexicographically. Datasets without a meta.json from this generator are
    marked as imported; their volume fractions come from ``vf_XXXX`` file
    names or, failing that, from the solid fraction of the input image.

    Raises:
        DatasetError: a folder is missing, a file is unpaired or unreadable,
            or the images differ in size
    """
    root = Path(dir_path)
    folders = [root / INPUT_DIR, root / OUTPUT_DIR]
    for folder in folders:
        if not folder.is_dir():
            raise DatasetError(f"{folder} is not a directory")

    inputs, outputs = (_image_files(folder) for folder in folders)
    unpaired = sorted(set(inputs) ^ set(outputs))
    if unpaired:
        raise DatasetError(
            f"unpaired files: {', '.join(unpaired)}",
            {name: "missing counterpart" for name in unpaired},
        )
    if not inputs:
        raise DatasetError(f"{root} holds no images")

    metadata = _read_meta(root / META_FILE)
    generated = metadata is not None and metadata.generator_version is not None
    provenance = Provenance.GENERATED_SIMP if generated else Provenance.IMPORTED
    problem_tag = metadata.problem if metadata is not None else root.name

    samples = []
    for filename in sorted(inputs):
        input_image = _read(inputs[filename])
        target_image = _read(outputs[filename])
        if input_image.shape != target_image.shape:
            raise DatasetError(
                f"{filename}: input {input_image.shape} and target {target_image.shape} differ in size"
            )
        stem = Path(filename).stem
        samples.append(
            Sample(
                volfrac=_volfrac_of(stem, input_image),
                input_image=input_image,
                target_image=target_image,
                provenance=provenance,
                problem_tag=problem_tag,
                name=stem,
            )
        )

    ny, nx = samples[0].input_image.shape
    try:
        return Dataset(samples=samples, nx=nx, ny=ny, metadata=metadata)
    except ValidationError as exp:
        raise DatasetError(f"{root}: {exp}") from exp


def pack_tensors(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Stacks the samples into (N, ny, nx, 1) input and target tensors

    Pixel (r, c) of sample i lands at index ``[i, r, c, 0]``.
    """
    inputs = np.stack([s.input_image for s in ds.samples])[..., np.newaxis]
    targets = np.stack([s.target_image for s in ds.samples])[..., np.newaxis]
    return inputs.astype(np.float64), targets.astype(np.float64)


def _solve_sample(job: tuple) -> Sample | tuple[str, str]:
    problem, nx, ny, volfrac, seed, solver_kwargs = job
    name = sample_name(volfrac)
    try:
        spec = preset(problem, nx, ny, volfrac, **solver_kwargs)
        result = optimize(spec)
    except SolverError as exp:
        _logger.warning("%s failed: %s", name, exp)
        return name, str(exp)

    _logger.info(
        "%s: compliance %.6g after %d iterations", name, result.compliance, result.iterations
    )
    return Sample(
        volfrac=volfrac,
        input_image=gen_input_image(volfrac, nx, ny, sample_seed(seed, volfrac)),
        target_image=np.clip(result.density, 0.0, 1.0),
        provenance=Provenance.GENERATED_SIMP,
        problem_tag=spec.tag,
        name=name,
    )


def _image_files(folder: Path) -> dict[str, Path]:
    return {
        path.name: path
        for path in folder.iterdir()
        if path.is_file() and path.suffix.lower() in _IMAGE_SUFFIXES
    }


def _read(path: Path) -> np.ndarray:
    try:
        return read_image(path)
    except (OSError, ImportError) as exp:
        raise DatasetError(f"{path}: unreadable image: {exp}", {path.name: str(exp)}) from exp


def _read_meta(path: Path) -> DatasetMeta | None:
    if not path.is_file():
        return None
    try:
        return DatasetMeta.model_validate(json.loads(path.read_text()))
    except ValueError as exp:
        _logger.warning("ignoring unparsable %s: %s", path, exp)
        return None


def _volfrac_of(stem: str, input_image: np.ndarray) -> float:
    match = _NAME_PATTERN.match(stem)
    if match and 0 < int(match.group(1)) <= 10000:
        return int(match.group(1)) / 10000
    volfrac = float(np.clip(input_image.mean(), 1e-4, 1.0))
    _logger.warning("%s: volume fraction %.4f measured from the input image", stem, volfrac)
    return volfrac
