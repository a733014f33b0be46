"""Lowering of constructive-interference precoding problems to real ConvexPrograms.

Two decision spaces are used. Problems whose constraints only see the transmit
vector x = W b are posed over x (2N reals); problems that constrain individual
precoder columns are posed over vec(W) (2N(K+1) reals, column-major).
"""

import numpy as np

from src.model import ChannelSet, SymbolFrame
from src.regions import Region, eve_constraint_rows
from src.solver import ConvexProgram, complexify, real_block, real_linear_forms


class Layout:
    """Named slices of the real decision vector."""

    def __init__(self):
        self.blocks: dict[str, slice] = {}
        self.size = 0

    def add(self, name: str, size: int) -> slice:
        block = slice(self.size, self.size + size)
        self.blocks[name] = block
        self.size += size
        return block

    def __contains__(self, name: str) -> bool:
        return name in self.blocks

    def __getitem__(self, name: str) -> slice:
        return self.blocks[name]

    def embed(self, name: str, row: np.ndarray) -> np.ndarray:
        full = np.zeros(self.size)
        full[self.blocks[name]] = row
        return full

    def embed_matrix(self, name: str, matrix: np.ndarray) -> np.ndarray:
        full = np.zeros((self.size, self.size))
        block = self.blocks[name]
        full[block, block] = matrix
        return full

    def unit(self, name: str) -> np.ndarray:
        full = np.zeros(self.size)
        full[self.blocks[name].start] = 1.0
        return full

    def value(self, v: np.ndarray, name: str) -> float:
        return float(v[self.blocks[name].start])

    def complex_block(self, v: np.ndarray, name: str) -> np.ndarray:
        return complexify(v[self.blocks[name]])


def user_forms(channels: ChannelSet, frame: SymbolFrame) -> np.ndarray:
    """Rows c_k with lambda_k = c_k^T x (channel rotated by conj(s_k))."""
    return channels.H * frame.s.conj()[:, None]


def eve_form(channels: ChannelSet, frame: SymbolFrame) -> np.ndarray:
    """Row c_e with phi_e = c_e^T x."""
    return channels.g_e * np.conj(frame.target_symbol)


def add_constructive_rows(
    program: ConvexProgram,
    layout: Layout,
    block: str,
    forms: np.ndarray,
    cot: float,
    t_name: str | None = None,
    fixed: list[float] | None = None,
) -> None:
    """-Re(lambda_k) -/+ cot*Im(lambda_k) + t <= 0 for every user.

    Either ``t_name`` (a shared variable) or ``fixed`` (per-user constants) is used.
    """
    signs = (1.0,) if cot == 0.0 else (1.0, -1.0)
    for k, form in enumerate(forms):
        re, im = real_linear_forms(form)
        for sign in signs:
            row = layout.embed(block, -re + sign * cot * im)
            if t_name is not None:
                program.add_linear_ineq(row + layout.unit(t_name), 0.0)
            else:
                program.add_linear_ineq(row, -fixed[k])


def add_eve_rows(
    program: ConvexProgram,
    layout: Layout,
    block: str,
    form: np.ndarray,
    cot: float,
    region: Region,
    t_e_name: str | None = None,
    t_e_fixed: float | None = None,
) -> None:
    """Subregion membership rows for Eve's rotated observation."""
    rows, coefficients = eve_constraint_rows(region, cot)
    re, im = real_linear_forms(form)
    for (alpha, beta), coefficient in zip(rows, coefficients):
        row = layout.embed(block, alpha * re + beta * im)
        if t_e_name is not None:
            program.add_linear_ineq(row + coefficient * layout.unit(t_e_name), 0.0)
        else:
            program.add_linear_ineq(row, -coefficient * t_e_fixed)


def eve_rows_needed(region: Region | None, t_e_fixed: float | None) -> bool:
    """C&D with a free t_e constrains nothing."""
    return region is not None and not (region is Region.CD and t_e_fixed is None)


def _x_space(channels: ChannelSet, region: Region | None, t_e_fixed: float | None):
    layout = Layout()
    layout.add("x", 2 * channels.num_antennas)
    with_eve = eve_rows_needed(region, t_e_fixed)
    return layout, with_eve


def lower_balancing(
    channels: ChannelSet,
    frame: SymbolFrame,
    cot: float,
    region: Region | None,
    power: float,
    t_e_fixed: float | None = None,
) -> tuple[ConvexProgram, Layout]:
    """maximize t over x subject to constructive rows, Eve rows and |x|^2 <= power.

    ``region=None`` drops Eve entirely (users-only balancing).
    """
    layout, with_eve = _x_space(channels, region, t_e_fixed)
    layout.add("t", 1)
    if with_eve and t_e_fixed is None:
        layout.add("t_e", 1)
    program = ConvexProgram.empty(layout.size)
    program.q = -layout.unit("t")

    add_constructive_rows(program, layout, "x", user_forms(channels, frame), cot, t_name="t")
    program.add_linear_ineq(-layout.unit("t"), 0.0)
    if with_eve:
        t_e_name = "t_e" if "t_e" in layout else None
        add_eve_rows(program, layout, "x", eve_form(channels, frame), cot, region, t_e_name, t_e_fixed)
        if t_e_name:
            program.add_linear_ineq(-layout.unit("t_e"), 0.0)
    program.add_quad_ineq(layout.embed_matrix("x", np.eye(2 * channels.num_antennas)), np.zeros(layout.size), power)
    return program, layout


def lower_power_min(
    channels: ChannelSet,
    frame: SymbolFrame,
    cot: float,
    region: Region,
    thresholds: list[float],
    t_e_fixed: float | None = None,
) -> tuple[ConvexProgram, Layout]:
    """minimize |x|^2 subject to per-user constructive rows and Eve rows."""
    layout, with_eve = _x_space(channels, region, t_e_fixed)
    if with_eve and t_e_fixed is None:
        layout.add("t_e", 1)
    program = ConvexProgram.empty(layout.size)
    program.P = layout.embed_matrix("x", np.eye(2 * channels.num_antennas))

    add_constructive_rows(program, layout, "x", user_forms(channels, frame), cot, fixed=thresholds)
    if with_eve:
        t_e_name = "t_e" if "t_e" in layout else None
        add_eve_rows(program, layout, "x", eve_form(channels, frame), cot, region, t_e_name, t_e_fixed)
        if t_e_name:
            program.add_linear_ineq(-layout.unit("t_e"), 0.0)
    return program, layout


def lift_transmit_vector(x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-Frobenius W with W b = x."""
    return np.outer(x, b.conj()) / float(np.real(np.vdot(b, b)))


def column_selector(column: int, num_antennas: int, num_columns: int) -> np.ndarray:
    """E with W[:, column] = E vec(W) (column-major vec)."""
    selector = np.zeros((num_antennas, num_antennas * num_columns))
    selector[:, column * num_antennas:(column + 1) * num_antennas] = np.eye(num_antennas)
    return selector


def vec_to_precoder(z: np.ndarray, num_antennas: int) -> np.ndarray:
    """Inverse of column-major vec."""
    return z.reshape(-1, num_antennas).T


def precoder_to_vec(W: np.ndarray) -> np.ndarray:
    return np.asarray(W).T.reshape(-1)


def lower_precoder_space(
    channels: ChannelSet,
    frame: SymbolFrame,
    cot: float,
    power: float,
    extra: tuple[str, ...] = (),
) -> tuple[ConvexProgram, Layout, np.ndarray]:
    """maximize t over vec(W) with constructive rows, |W b|^2 <= power and |W|_F^2 <= power.

    ``extra`` names additional scalar variables appended after t. Returns the
    program, its layout and the map L with x = L vec(W).
    """
    N = channels.num_antennas
    columns = frame.num_users + 1
    layout = Layout()
    layout.add("w", 2 * N * columns)
    layout.add("t", 1)
    for name in extra:
        layout.add(name, 1)
    program = ConvexProgram.empty(layout.size)
    program.q = -layout.unit("t")

    L = np.kron(frame.b[None, :], np.eye(N))
    forms = user_forms(channels, frame) @ L
    add_constructive_rows(program, layout, "w", forms, cot, t_name="t")
    program.add_linear_ineq(-layout.unit("t"), 0.0)
    zeros = np.zeros(layout.size)
    program.add_quad_ineq(layout.embed_matrix("w", real_block(L.conj().T @ L)), zeros, power)
    program.add_quad_ineq(layout.embed_matrix("w", np.eye(2 * N * columns)), zeros, power)
    return program, layout, L
