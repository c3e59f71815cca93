"""Energy function over (molecule, template) pairs."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..molgraph import BOND_DIM, MolecularGraph, circular_fingerprint, featurize
from ..numerics import GraphBatch, MlpSpec, MpnnSpec, Tensor, message_passing_encode, mlp
from ..numerics import ops as T


@dataclass(frozen=True)
class EncoderConfig:
    """Encoder family and sizes.

    ``dense`` feeds fixed-length vectors (fingerprints or raw features)
    through a two-layer MLP; ``mpnn`` runs message passing on featurized
    graphs.
    """

    kind: str = "dense"
    hidden: int = 256
    embed: int = 256
    dropout: float = 0.1
    depth: int = 10
    head_hidden: int = 256
    fp_bits: int = 2048
    fp_radius: int = 2

    def __post_init__(self):
        if self.kind not in ("dense", "mpnn"):
            raise ValueError(f"unknown encoder kind {self.kind!r}")


@dataclass(frozen=True)
class NodeInputs:
    """Per-node encoder inputs: a dense matrix or a list of featurized graphs."""

    dense: np.ndarray | None = None
    graphs: tuple | None = None

    def __len__(self) -> int:
        return len(self.dense) if self.dense is not None else len(self.graphs)

    @property
    def width(self) -> int:
        if self.dense is not None:
            return self.dense.shape[1]
        return self.graphs[0][0].shape[1]


def fingerprint_inputs(graphs: Sequence[MolecularGraph], cfg: EncoderConfig) -> NodeInputs:
    if cfg.kind == "mpnn":
        return NodeInputs(graphs=tuple(featurize(g) for g in graphs))
    rows = [circular_fingerprint(g, cfg.fp_radius, cfg.fp_bits).bits for g in graphs]
    dense = np.asarray(rows, dtype=np.float64).reshape(len(rows), cfg.fp_bits)
    return NodeInputs(dense=dense)


@dataclass
class TemplateInputs:
    """Pattern-level inputs plus the owning template of each pattern row."""

    patterns: NodeInputs
    owner: np.ndarray
    n_templates: int


class EnergyModel:
    """``F(m, t) = head([h_m ; h_t ; h_m * h_t])``.

    ``h_m`` encodes the molecule; ``h_t`` is the mean of the encodings of the
    template's precursor-side patterns, so it ignores their order.
    """

    def __init__(self, cfg: EncoderConfig, mol_dim: int, pattern_dim: int, seed: int = 0,
                 params: dict[str, np.ndarray] | None = None):
        self.cfg = cfg
        self.mol_dim = mol_dim
        self.pattern_dim = pattern_dim
        if cfg.kind == "dense":
            self.mol_spec = MlpSpec((mol_dim, cfg.hidden, cfg.embed), cfg.dropout)
            self.tmpl_spec = MlpSpec((pattern_dim, cfg.hidden, cfg.embed), cfg.dropout)
        else:
            self.mol_spec = MpnnSpec(mol_dim, BOND_DIM, cfg.embed, cfg.depth)
            self.tmpl_spec = MpnnSpec(pattern_dim, BOND_DIM, cfg.embed, cfg.depth)
        self.head_spec = MlpSpec((3 * cfg.embed, cfg.head_hidden, 1), cfg.dropout)
        if params is None:
            rng = np.random.default_rng(seed)
            params = {}
            params.update(self.mol_spec.init(rng, "mol."))
            params.update(self.tmpl_spec.init(rng, "tmpl."))
            params.update(self.head_spec.init(rng, "head."))
        self.params = params

    def meta(self) -> dict:
        return {"encoder": asdict(self.cfg), "mol_dim": self.mol_dim, "pattern_dim": self.pattern_dim}

    @classmethod
    def from_meta(cls, meta: dict, params: dict[str, np.ndarray]) -> "EnergyModel":
        return cls(EncoderConfig(**meta["encoder"]), meta["mol_dim"], meta["pattern_dim"], params=params)

    def _encode(self, spec, prefix: str, p, inputs: NodeInputs, rows: np.ndarray, training: bool, seed):
        if self.cfg.kind == "dense":
            return mlp(spec, p, prefix, Tensor(inputs.dense[rows]), training, seed)
        batch = GraphBatch.from_features([inputs.graphs[i] for i in rows], BOND_DIM)
        return message_passing_encode(spec, p, prefix, batch)

    def pair_energies(self, p, mols: NodeInputs, tmpls: TemplateInputs, mol_rows: np.ndarray,
                      tmpl_ids: np.ndarray, training: bool = False, seed=None) -> Tensor:
        """Energies for pairs ``(mol_rows[i], tmpl_ids[i])`` as a vector Tensor.

        Only the molecules and templates that occur in the pairs are encoded.
        """
        mol_rows = np.asarray(mol_rows, dtype=np.int64)
        tmpl_ids = np.asarray(tmpl_ids, dtype=np.int64)
        u_mol, mol_local = np.unique(mol_rows, return_inverse=True)
        u_tmpl, tmpl_local = np.unique(tmpl_ids, return_inverse=True)
        seeds = np.random.SeedSequence(seed).spawn(3) if training else (None, None, None)
        h_mol = self._encode(self.mol_spec, "mol.", p, mols, u_mol, training, seeds[0])

        slot = np.full(tmpls.n_templates, -1, dtype=np.int64)
        slot[u_tmpl] = np.arange(len(u_tmpl))
        pattern_rows = np.flatnonzero(slot[tmpls.owner] >= 0)
        h_pat = self._encode(self.tmpl_spec, "tmpl.", p, tmpls.patterns, pattern_rows, training, seeds[1])
        h_tmpl = T.segment_mean(h_pat, slot[tmpls.owner[pattern_rows]], len(u_tmpl))

        hm = T.take_rows(h_mol, mol_local)
        ht = T.take_rows(h_tmpl, tmpl_local)
        joint = T.concat([hm, ht, T.mul(hm, ht)], axis=1)
        out = mlp(self.head_spec, p, "head.", joint, training, seeds[2])
        return T.reshape(out, (len(mol_rows),))

    def energies(self, mols: NodeInputs, tmpls: TemplateInputs, mol_rows, tmpl_ids,
                 chunk: int = 4096) -> np.ndarray:
        """Inference energies (dropout off), evaluated in chunks."""
        p = {k: Tensor(v) for k, v in self.params.items()}
        mol_rows = np.asarray(mol_rows, dtype=np.int64)
        tmpl_ids = np.asarray(tmpl_ids, dtype=np.int64)
        out = np.empty(len(mol_rows))
        for s in range(0, len(mol_rows), chunk):
            out[s : s + chunk] = self.pair_energies(p, mols, tmpls, mol_rows[s : s + chunk],
                                                    tmpl_ids[s : s + chunk]).value
        return out
