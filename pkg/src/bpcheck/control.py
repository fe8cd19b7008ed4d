"""Control configurations.

A configuration mirrors the component tree: each sequencing construct
records how far its current execution has progressed.  Configurations are
normalized: a finished subcomponent immediately advances its parent, so a
loop body restarts the moment it completes and a sequence moves to its
next item.  Completions observed during that advance are reported on the
transition for exit-annotation checks.

Encodings (hashable):
  action         0 at the point, 'D' done
  sequence       (i, sub) inside item i, 'D' done
  if             'B' at the fused point, 'D' done
  while          'T' at the test, ('B', sub) in the body, 'D' done
  loop           ('L', sub), never done
  join           tuple of child configurations, 'D' once all are done
"""
from __future__ import annotations

from typing import Optional

from .frontend import Analysis
from .syntax import Act, Comp, If, Join, Loop, SeqBlock, While

DONE = 'D'


def init_cfg(node: Comp):
    if isinstance(node, Act):
        return 0
    if isinstance(node, SeqBlock):
        return (0, init_cfg(node.items[0]))
    if isinstance(node, If):
        return 'B'
    if isinstance(node, While):
        return 'T'
    if isinstance(node, Loop):
        return ('L', init_cfg(node.body))
    if isinstance(node, Join):
        return tuple(init_cfg(ch) for ch in node.children)
    raise TypeError(node)


class ControlMap:
    """Path and configuration utilities for one analyzed program."""

    def __init__(self, analysis: Analysis):
        self.an = analysis
        self.root = analysis.prog.root
        self._paths: dict[int, tuple[str, ...]] = {}
        self._active_cache: dict = {}

    def path(self, node: Comp) -> tuple[str, ...]:
        key = id(node)
        if key not in self._paths:
            slots = []
            cur = node
            while True:
                par = self.an.parent[id(cur)]
                if par is None:
                    break
                slots.append(self.an.slot[id(cur)])
                cur = par
            self._paths[key] = tuple(reversed(slots))
        return self._paths[key]

    # ------------------------------------------------------------- queries

    def active_points(self, cfg) -> tuple[Comp, ...]:
        key = cfg
        hit = self._active_cache.get(key)
        if hit is None:
            hit = tuple(self._active(self.root, cfg))
            self._active_cache[key] = hit
        return hit

    def _active(self, node: Comp, cfg):
        if cfg == DONE:
            return
        if isinstance(node, Act):
            yield node
        elif isinstance(node, SeqBlock):
            i, sub = cfg
            yield from self._active(node.items[i], sub)
        elif isinstance(node, If):
            yield node
        elif isinstance(node, While):
            if cfg == 'T':
                yield node
            else:
                yield from self._active(node.body, cfg[1])
        elif isinstance(node, Loop):
            yield from self._active(node.body, cfg[1])
        elif isinstance(node, Join):
            for ch, sub in zip(node.children, cfg):
                yield from self._active(ch, sub)
        else:
            raise TypeError(node)

    def done_in(self, cfg, target: Comp) -> bool:
        """Has target completed its current execution in this configuration?
        Inside a loop the question is about the current iteration."""
        node = self.root
        for slot in self.path(target):
            if cfg == DONE:
                return True
            if isinstance(node, SeqBlock):
                j = int(slot)
                i, sub = cfg
                if j < i:
                    return True
                if j > i:
                    return False
                node, cfg = node.items[j], sub
            elif isinstance(node, If):
                return False          # alternatives have no standalone state
            elif isinstance(node, While):
                if cfg == 'T':
                    return False
                node, cfg = node.body, cfg[1]
            elif isinstance(node, Loop):
                node, cfg = node.body, cfg[1]
            elif isinstance(node, Join):
                j = int(slot)
                node, cfg = node.children[j], cfg[j]
            else:
                raise TypeError(node)
        return cfg == DONE

    def local_cfg(self, cfg, target: Comp):
        """The target's own sub-configuration, or None when control has not
        reached it (or has already passed it in a sequence)."""
        node = self.root
        for slot in self.path(target):
            if cfg == DONE:
                return DONE
            if isinstance(node, SeqBlock):
                j = int(slot)
                i, sub = cfg
                if j != i:
                    return DONE if j < i else None
                node, cfg = node.items[j], sub
            elif isinstance(node, If):
                return None
            elif isinstance(node, While):
                if cfg == 'T':
                    return None
                node, cfg = node.body, cfg[1]
            elif isinstance(node, Loop):
                node, cfg = node.body, cfg[1]
            elif isinstance(node, Join):
                j = int(slot)
                node, cfg = node.children[j], cfg[j]
            else:
                raise TypeError(node)
        return cfg

    # -------------------------------------------------------- transitions

    def step_cfg(self, cfg, target: Comp, new_local,
                 pre_completed: Optional[list] = None):
        """Replace target's sub-configuration and renormalize along the
        path to the root.  Returns (new_cfg, completed_nodes)."""
        chain = [(self.root, cfg)]
        node, cur = self.root, cfg
        for slot in self.path(target):
            if isinstance(node, SeqBlock):
                i, sub = cur
                node, cur = node.items[i], sub
            elif isinstance(node, While):
                node, cur = node.body, cur[1]
            elif isinstance(node, Loop):
                node, cur = node.body, cur[1]
            elif isinstance(node, Join):
                j = int(slot)
                node, cur = node.children[j], cur[j]
            else:
                raise TypeError(node)
            chain.append((node, cur))
        assert chain[-1][0] is target
        completed = list(pre_completed or [])
        cur = new_local
        for level in range(len(chain) - 1, -1, -1):
            node = chain[level][0]
            if cur == DONE:
                completed.append(node)
            if level == 0:
                break
            par, parcfg = chain[level - 1]
            if isinstance(par, SeqBlock):
                i, _ = parcfg
                if cur == DONE:
                    if i + 1 < len(par.items):
                        cur = (i + 1, init_cfg(par.items[i + 1]))
                    else:
                        cur = DONE
                else:
                    cur = (i, cur)
            elif isinstance(par, While):
                cur = 'T' if cur == DONE else ('B', cur)
            elif isinstance(par, Loop):
                cur = ('L', init_cfg(par.body)) if cur == DONE else ('L', cur)
            elif isinstance(par, Join):
                j = int(self.an.slot[id(node)])
                subs = list(parcfg)
                subs[j] = cur
                cur = DONE if all(s == DONE for s in subs) else tuple(subs)
            else:
                raise TypeError(par)
        return cur, completed
