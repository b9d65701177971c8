#!/usr/bin/env python3
"""Generate the bundled benchmark documents.

The brp and consensus models are transcribed from their PRISM sources and expanded
with a small explicit-state explorer that follows PRISM semantics: unlabelled
commands interleave, labelled commands synchronize across all modules that use the
label, DTMC choices are combined uniformly, and deadlocks get a self-loop.

States carrying the goal label keep a single choice that moves to a fresh `fin`;
`fin` and `fail` are added as sinks. This reproduces the original sizes of the
exported models (brp(64,2) has 2695 states and 2693 choices).

    python3 tools/gen_benchmarks.py --out benchmarks
"""

import argparse
import itertools
import json
from collections import deque
from fractions import Fraction
from pathlib import Path


class Command:
    def __init__(self, action, guard, updates):
        self.action = action  # None for unlabelled commands
        self.guard = guard
        self.updates = updates  # [(probability, state -> dict of assignments)]


def explore(init, modules, kind):
    keys = sorted(init)

    def freeze(values):
        return tuple(values[k] for k in keys)

    labels = sorted({c.action for m in modules for c in m if c.action})
    index = {freeze(init): 0}
    states = [freeze(init)]
    queue = deque(states)
    choices = {}
    while queue:
        state = queue.popleft()
        values = dict(zip(keys, state))
        moves = []  # (name, [(probability, successor)])
        for mi, module in enumerate(modules):
            for ci, command in enumerate(module):
                if command.action is None and command.guard(values):
                    outcomes = []
                    for p, update in command.updates:
                        nxt = dict(values)
                        nxt.update(update(values))
                        outcomes.append((Fraction(p), freeze(nxt)))
                    moves.append((f"m{mi}c{ci}", outcomes))
        for label in labels:
            enabled = []
            for module in modules:
                commands = [c for c in module if c.action == label]
                if not commands:
                    continue
                active = [c for c in commands if c.guard(values)]
                if not active:
                    enabled = None
                    break
                enabled.append(active)
            if not enabled:
                continue
            for k, combo in enumerate(itertools.product(*enabled)):
                outcomes = []
                for picks in itertools.product(*[c.updates for c in combo]):
                    p = Fraction(1)
                    nxt = dict(values)
                    for prob, update in picks:
                        p *= Fraction(prob)
                        nxt.update(update(values))
                    outcomes.append((p, freeze(nxt)))
                moves.append((label if k == 0 else f"{label}_{k}", outcomes))
        if not moves:
            moves = [("deadlock", [(Fraction(1), state)])]

        def merge(outcomes, scale=Fraction(1), into=None):
            dist = {} if into is None else into
            for p, succ in outcomes:
                dist[succ] = dist.get(succ, 0) + p * scale
            return dist

        if kind == "dtmc":
            dist = {}
            for _, outcomes in moves:
                merge(outcomes, Fraction(1, len(moves)), dist)
            listed = [("step", dist)]
        else:
            listed = [(name, merge(outcomes)) for name, outcomes in moves]
        choices[state] = listed
        for _, dist in listed:
            for succ in dist:
                if succ not in index:
                    index[succ] = len(states)
                    states.append(succ)
                    queue.append(succ)
    return keys, states, index, choices


def brp(n, max_retries):
    sender = [
        Command("NewFile", lambda s: s["s"] == 0, [(1, lambda s: dict(s=1, i=1, srep=0))]),
        Command("aF", lambda s: s["s"] == 1,
                [(1, lambda s: dict(s=2, fs=(s["i"] == 1), ls=(s["i"] == n), bs=s["s_ab"], nrtr=0))]),
        Command("aB", lambda s: s["s"] == 2, [(1, lambda s: dict(s=4, s_ab=not s["s_ab"]))]),
        Command("TO_Msg", lambda s: s["s"] == 2, [(1, lambda s: dict(s=3))]),
        Command("TO_Ack", lambda s: s["s"] == 2, [(1, lambda s: dict(s=3))]),
        Command("aF", lambda s: s["s"] == 3 and s["nrtr"] < max_retries,
                [(1, lambda s: dict(s=2, fs=(s["i"] == 1), ls=(s["i"] == n), bs=s["s_ab"], nrtr=s["nrtr"] + 1))]),
        Command(None, lambda s: s["s"] == 3 and s["nrtr"] == max_retries and s["i"] < n,
                [(1, lambda s: dict(s=5, srep=1))]),
        Command(None, lambda s: s["s"] == 3 and s["nrtr"] == max_retries and s["i"] == n,
                [(1, lambda s: dict(s=5, srep=2))]),
        Command(None, lambda s: s["s"] == 4 and s["i"] < n, [(1, lambda s: dict(s=1, i=s["i"] + 1))]),
        Command(None, lambda s: s["s"] == 4 and s["i"] == n, [(1, lambda s: dict(s=0, srep=3))]),
        Command("SyncWait", lambda s: s["s"] == 5, [(1, lambda s: dict(s=6))]),
        Command("SyncWait", lambda s: s["s"] == 6, [(1, lambda s: dict(s=0, s_ab=False))]),
    ]
    receiver = [
        Command("SyncWait", lambda s: s["r"] == 0, [(1, lambda s: dict(r=0))]),
        Command("aG", lambda s: s["r"] == 0,
                [(1, lambda s: dict(r=1, fr=s["fs"], lr=s["ls"], br=s["bs"], recv=s["T"]))]),
        Command(None, lambda s: s["r"] == 1, [(1, lambda s: dict(r=2, r_ab=s["br"]))]),
        Command(None, lambda s: s["r"] == 2 and s["r_ab"] == s["br"] and s["fr"] and not s["lr"],
                [(1, lambda s: dict(r=3, rrep=1))]),
        Command(None, lambda s: s["r"] == 2 and s["r_ab"] == s["br"] and not s["fr"] and not s["lr"],
                [(1, lambda s: dict(r=3, rrep=2))]),
        Command(None, lambda s: s["r"] == 2 and s["r_ab"] == s["br"] and not s["fr"] and s["lr"],
                [(1, lambda s: dict(r=3, rrep=3))]),
        Command("aA", lambda s: s["r"] == 2 and s["r_ab"] != s["br"], [(1, lambda s: dict(r=4))]),
        Command("aA", lambda s: s["r"] == 3, [(1, lambda s: dict(r=4, r_ab=not s["r_ab"]))]),
        Command("aG", lambda s: s["r"] == 4,
                [(1, lambda s: dict(r=2, fr=s["fs"], lr=s["ls"], br=s["bs"], recv=s["T"]))]),
        Command("SyncWait", lambda s: s["r"] == 4 and s["ls"], [(1, lambda s: dict(r=5))]),
        Command("SyncWait", lambda s: s["r"] == 4 and not s["ls"], [(1, lambda s: dict(r=5, rrep=4))]),
        Command("SyncWait", lambda s: s["r"] == 5, [(1, lambda s: dict(r=0, rrep=0))]),
    ]
    tester = [Command("NewFile", lambda s: not s["T"], [(1, lambda s: dict(T=True))])]
    channel_k = [
        Command("aF", lambda s: s["k"] == 0,
                [(Fraction(98, 100), lambda s: dict(k=1)), (Fraction(2, 100), lambda s: dict(k=2))]),
        Command("aG", lambda s: s["k"] == 1, [(1, lambda s: dict(k=0))]),
        Command("TO_Msg", lambda s: s["k"] == 2, [(1, lambda s: dict(k=0))]),
    ]
    channel_l = [
        Command("aA", lambda s: s["l"] == 0,
                [(Fraction(99, 100), lambda s: dict(l=1)), (Fraction(1, 100), lambda s: dict(l=2))]),
        Command("aB", lambda s: s["l"] == 1, [(1, lambda s: dict(l=0))]),
        Command("TO_Ack", lambda s: s["l"] == 2, [(1, lambda s: dict(l=0))]),
    ]
    init = dict(s=0, srep=0, nrtr=0, i=0, bs=False, s_ab=False, fs=False, ls=False, r=0, rrep=0, fr=False,
                lr=False, br=False, r_ab=False, recv=False, T=False, k=0, l=0)
    return explore(init, [sender, receiver, tester, channel_k, channel_l], "dtmc")


def consensus(n, k):
    top = 2 * (k + 1) * n
    left = n
    right = 2 * (k + 1) * n - n
    modules = []
    for p in range(1, n + 1):
        pc, coin = f"pc{p}", f"coin{p}"
        modules.append([
            Command(None, lambda s, pc=pc: s[pc] == 0,
                    [(Fraction(1, 2), lambda s, pc=pc, coin=coin: {coin: 0, pc: 1}),
                     (Fraction(1, 2), lambda s, pc=pc, coin=coin: {coin: 1, pc: 1})]),
            Command(None, lambda s, pc=pc, coin=coin: s[pc] == 1 and s[coin] == 0 and s["counter"] > 0,
                    [(1, lambda s, pc=pc, coin=coin: {"counter": s["counter"] - 1, pc: 2, coin: 0})]),
            Command(None, lambda s, pc=pc, coin=coin: s[pc] == 1 and s[coin] == 1 and s["counter"] < top,
                    [(1, lambda s, pc=pc, coin=coin: {"counter": s["counter"] + 1, pc: 2, coin: 0})]),
            Command(None, lambda s, pc=pc: s[pc] == 2 and s["counter"] <= left,
                    [(1, lambda s, pc=pc, coin=coin: {pc: 3, coin: 0})]),
            Command(None, lambda s, pc=pc: s[pc] == 2 and s["counter"] >= right,
                    [(1, lambda s, pc=pc, coin=coin: {pc: 3, coin: 1})]),
            Command(None, lambda s, pc=pc: s[pc] == 2 and left < s["counter"] < right,
                    [(1, lambda s, pc=pc: {pc: 0})]),
            Command("done", lambda s, pc=pc: s[pc] == 3, [(1, lambda s, pc=pc: {pc: 3})]),
        ])
    init = {"counter": (k + 1) * n}
    for p in range(1, n + 1):
        init[f"pc{p}"] = 0
        init[f"coin{p}"] = 0
    return explore(init, modules, "mdp")


def document(name, explored, goal):
    keys, states, index, choices = explored
    n = len(states)
    fin, fail = n, n + 1
    doc_states = [{"name": f"s{i}"} for i in range(n)]
    doc_states.append({"name": "fin", "target_weight": "1"})
    doc_states.append({"name": "fail", "target_weight": "0"})
    doc_choices = []
    for i, state in enumerate(states):
        if goal(dict(zip(keys, state))):
            doc_choices.append({"action": "goal", "from": i, "transitions": [{"poly": "1", "to": fin}]})
            continue
        for action, dist in choices[state]:
            transitions = [{"poly": str(p), "to": index[succ]} for succ, p in sorted(dist.items(), key=lambda e: index[e[0]])]
            doc_choices.append({"action": action, "from": i, "transitions": transitions})
    return {"choices": doc_choices, "name": name, "params": [], "states": doc_states, "subclass": "pmdp",
            "version": 1}


def write(doc, path):
    # Same layout as the library's canonical writer: one state or choice per line.
    def block(items):
        if not items:
            return "[]"
        body = ",\n".join("    " + json.dumps(item, sort_keys=True, separators=(",", ":")) for item in items)
        return "[\n" + body + "\n  ]"

    text = "{\n"
    text += f'  "choices": {block(doc["choices"])},\n'
    text += f'  "name": {json.dumps(doc["name"])},\n'
    text += f'  "params": {json.dumps(doc["params"])},\n'
    text += f'  "states": {block(doc["states"])},\n'
    text += f'  "subclass": {json.dumps(doc["subclass"])},\n'
    text += '  "version": 1\n}\n'
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


BRP_LABELS = {
    "no_succ_trans": lambda s: s["s"] == 5,
    "rep_uncertainty": lambda s: s["srep"] == 2,
    "not_rec_but_sent": lambda s: s["srep"] != 0 and not s["recv"],
}

CONSENSUS_LABELS = {
    "disagree": lambda s: s["pc1"] == 3 and s["pc2"] == 3 and s["coin1"] != s["coin2"],
    "fin_and_all_1": lambda s: s["pc1"] == 3 and s["pc2"] == 3 and s["coin1"] == 1 and s["coin2"] == 1,
    "fin_and_not_all_1": lambda s: s["pc1"] == 3 and s["pc2"] == 3 and not (s["coin1"] == 1 and s["coin2"] == 1),
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("benchmarks"))
    parser.add_argument("--brp-retries", type=int, nargs="*", default=[2, 3, 4, 5])
    parser.add_argument("--consensus-k", type=int, nargs="*", default=[2, 4, 8, 16])
    args = parser.parse_args()

    for retries in args.brp_retries:
        explored = brp(64, retries)
        for label, goal in BRP_LABELS.items():
            name = f"brp_64_{retries}_{label}"
            write(document(name, explored, goal), args.out / f"brp_{label}" / f"{name}.json")
            print(name, len(explored[1]) + 2)
    for k in args.consensus_k:
        explored = consensus(2, k)
        for label, goal in CONSENSUS_LABELS.items():
            name = f"consensus_2_{k}_{label}"
            write(document(name, explored, goal), args.out / f"consensus_{label}" / f"{name}.json")
            print(name, len(explored[1]) + 2)


if __name__ == "__main__":
    main()
