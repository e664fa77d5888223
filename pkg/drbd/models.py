"""
DRBD model: named blocks with their failure laws plus the root structure function.

Key invariants:
- every Var of the root names a declared non-spare block
- every spare construct names a declared spare block
- spare blocks appear only inside spare constructs
"""
from dataclasses import dataclass, replace
from types import MappingProxyType
from typing import Dict, List, Mapping, Optional, Union

from drbd.algebra import SPARES, Expr, Var, walk
from drbd.distributions import Distribution, Exponential, SpareSpec
from drbd.errors import ModelError

BlockLaw = Union[Distribution, SpareSpec]


@dataclass(frozen=True)
class DrbdModel:
    blocks: Mapping[str, BlockLaw]
    root: Expr
    name: str = "model"

    def __post_init__(self):
        object.__setattr__(self, "blocks", MappingProxyType(dict(self.blocks)))
        self.check_expr(self.root)

    @property
    def block_ids(self) -> List[str]:
        return sorted(self.blocks)

    @property
    def spare_ids(self) -> List[str]:
        return sorted(b for b, law in self.blocks.items() if isinstance(law, SpareSpec))

    def check_expr(self, e: Expr) -> None:
        """Raise ModelError unless every reference in e is declared and used correctly."""
        for node in walk(e):
            if isinstance(node, Var):
                law = self.blocks.get(node.name)
                if law is None:
                    raise ModelError(f"block '{node.name}' is not declared in model '{self.name}'")
                if isinstance(law, SpareSpec):
                    raise ModelError(f"spare block '{node.name}' referenced outside a spare construct")
            elif isinstance(node, SPARES):
                law = self.blocks.get(node.spare)
                if law is None:
                    raise ModelError(f"spare '{node.spare}' is not declared in model '{self.name}'")
                if not isinstance(law, SpareSpec):
                    raise ModelError(f"block '{node.spare}' is used as a spare but is not declared as one")

    def law(self, block: str) -> Distribution:
        law = self.blocks.get(block)
        if not isinstance(law, Distribution):
            raise ModelError(f"block '{block}' has no basic failure law")
        return law

    def spare(self, block: str) -> SpareSpec:
        law = self.blocks.get(block)
        if not isinstance(law, SpareSpec):
            raise ModelError(f"block '{block}' is not a spare")
        return law

    def with_root(self, root: Expr) -> "DrbdModel":
        return replace(self, root=root)

    def with_blocks(self, **overrides: BlockLaw) -> "DrbdModel":
        blocks = dict(self.blocks)
        for block, law in overrides.items():
            if block not in blocks:
                raise ModelError(f"cannot override undeclared block '{block}'")
            blocks[block] = law
        return replace(self, blocks=blocks)

    def with_rates(
        self,
        rates: Optional[Mapping[str, float]] = None,
        dormancy: Optional[Mapping[str, float]] = None,
    ) -> "DrbdModel":
        """Exponential rate and dormancy-factor overrides, by block id."""
        rates = dict(rates or {})
        dormancy = dict(dormancy or {})
        overrides: Dict[str, BlockLaw] = {}
        for block in sorted(set(rates) | set(dormancy)):
            law = self.blocks.get(block)
            if law is None:
                raise ModelError(f"cannot override undeclared block '{block}'")
            if isinstance(law, SpareSpec):
                active = Exponential(rates[block]) if block in rates else law.active
                alpha = dormancy.get(block, law.dormancy)
                if alpha is None:
                    raise ModelError(f"spare '{block}' has no dormancy factor to keep")
                overrides[block] = SpareSpec.from_active(active, alpha)
            else:
                if block in dormancy:
                    raise ModelError(f"block '{block}' is not a spare and takes no dormancy factor")
                overrides[block] = Exponential(rates[block])
        return self.with_blocks(**overrides) if overrides else self
