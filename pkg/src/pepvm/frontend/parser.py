"""Recursive-descent parser and compiler for PEP source.

Grammar (by example)::

    machine CPU {
        hd = null;
        init state setup(e) {
            hd = ctl.start(HD, null);
            when "read" => hd_read;
            when hd emits "interrupt" => hd_interrupt;
            ignore when "read";
            emit ("t");  emit ("t") => s;  emit ("t") to hd;  emit ("t") to hd => s;
            hd_reader = e.emitter;
            <label>;
            { ... } or { ... }
            => listen;
        }
    }
    ctl.run(CPU);
"""

from __future__ import annotations

from typing import Optional

from ..events import HALT, ack_type_of
from .ast import (
    CTX, LISTEN, RESERVED_STATES, AssignEmitter, Choice, Emit, MachineDef, Opaque,
    ProgramDef, SetReaction, StartMachine, StateDef, Transition, UnsetReaction,
)
from .lexer import PepError, Token, tokenize


class _Stmt:
    __slots__ = ("kind", "args", "tok")

    def __init__(self, kind: str, tok: Token, *args):
        self.kind = kind
        self.args = args
        self.tok = tok


class _RawState:
    def __init__(self, name: str, param: str, init: bool, body: list, tok: Token):
        self.name, self.param, self.init, self.body, self.tok = name, param, init, body, tok


class _RawMachine:
    def __init__(self, name: str, tok: Token):
        self.name = name
        self.tok = tok
        self.vars: dict[str, Token] = {}
        self.states: dict[str, _RawState] = {}


class Parser:
    def __init__(self, source: str):
        self.toks = tokenize(source)
        self.pos = 0

    # -- token helpers ----------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[Token] = None, kind: str = "syntax") -> PepError:
        tok = tok or self.tok
        return PepError(kind, msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("OP", "IDENT") and t.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}")
        return self.advance()

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def ident(self) -> Token:
        if self.tok.kind != "IDENT":
            raise self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def string(self) -> Token:
        if self.tok.kind != "STRING":
            raise self.error("expected a quoted event type")
        t = self.advance()
        if not t.text:
            raise self.error("empty event type", t)
        return t

    # -- grammar --------------------------------------------------------------
    def parse(self) -> tuple[dict, Token]:
        machines: dict[str, _RawMachine] = {}
        run: Optional[Token] = None
        while self.tok.kind != "EOF":
            if self.at("machine"):
                m = self.machine()
                if m.name in machines:
                    raise self.error(f"machine {m.name!r} defined twice", m.tok, "duplicate")
                machines[m.name] = m
            elif self.at("ctl"):
                start = self.advance()
                self.expect(".")
                self.expect("run")
                self.expect("(")
                target = self.ident()
                self.expect(")")
                self.expect(";")
                if run is not None:
                    raise self.error("more than one ctl.run entry", start, "duplicate")
                run = target
            else:
                raise self.error(f"expected 'machine' or 'ctl.run', found {self.tok.text!r}")
        if run is None:
            raise self.error("missing 'ctl.run(...)' entry point", kind="syntax")
        return machines, run

    def machine(self) -> _RawMachine:
        self.expect("machine")
        name_tok = self.ident()
        m = _RawMachine(name_tok.text, name_tok)
        self.expect("{")
        while not self.at("}"):
            if self.at("init") or self.at("state"):
                st = self.state()
                if st.name in RESERVED_STATES:
                    raise self.error(f"state name {st.name!r} is reserved", st.tok,
                                     "reserved-state-name")
                if st.name in m.states:
                    raise self.error(f"state {st.name!r} defined twice", st.tok, "duplicate")
                m.states[st.name] = st
            elif self.tok.kind == "IDENT" and self.peek().text == "=":
                var = self.advance()
                self.expect("=")
                self.expect("null")
                self.expect(";")
                m.vars[var.text] = var
            else:
                raise self.error(f"unexpected {self.tok.text or 'end of input'!r} in machine body")
        self.expect("}")
        inits = [s for s in m.states.values() if s.init]
        if not inits:
            raise self.error(f"machine {m.name!r} has no init state", name_tok,
                             "missing-init-state")
        if len(inits) > 1:
            raise self.error(f"machine {m.name!r} has more than one init state", inits[1].tok,
                             "duplicate")
        return m

    def state(self) -> _RawState:
        init = False
        if self.at("init"):
            self.advance()
            init = True
        self.expect("state")
        name = self.ident()
        self.expect("(")
        param = self.ident()
        self.expect(")")
        body = self.block()
        return _RawState(name.text, param.text, init, body, name)

    def block(self) -> list:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "EOF":
                raise self.error("unterminated block")
            stmts.append(self.statement())
        self.expect("}")
        return stmts

    def machine_ref(self) -> str:
        # a quoted identifier in machine position names the same variable
        if self.tok.kind in ("IDENT", "STRING"):
            return self.advance().text
        raise self.error("expected a machine variable")

    def statement(self) -> _Stmt:
        t = self.tok
        if self.at("=>"):
            self.advance()
            target = self.ident()
            self.expect(";")
            return _Stmt("goto", target, target.text)
        if self.at("{"):
            branches = [self.block()]
            while self.at("or"):
                self.advance()
                branches.append(self.block())
            if len(branches) < 2:
                raise self.error("a block must be followed by 'or { ... }'", t)
            return _Stmt("choice", t, branches)
        if self.at("<"):
            self.advance()
            label = self.ident()
            self.expect(">")
            self.expect(";")
            return _Stmt("opaque", t, label.text)
        if self.at("when"):
            self.advance()
            mvar = None
            if self.tok.kind == "STRING" and self.peek().text == "=>":
                etype = self.string()
            else:
                mvar = self.machine_ref()
                self.expect("emits")
                etype = self.string()
            self.expect("=>")
            target = self.ident()
            self.expect(";")
            return _Stmt("when", t, mvar, etype.text, target.text, target)
        if self.at("ignore"):
            self.advance()
            self.expect("when")
            mvar = None
            if self.tok.kind == "STRING" and self.peek().text == ";":
                etype = self.string()
            else:
                mvar = self.machine_ref()
                self.expect("emits")
                etype = self.string()
            self.expect(";")
            return _Stmt("ignore", t, mvar, etype.text)
        if self.at("emit") and self.peek().text == "(":
            self.advance()
            self.expect("(")
            etype = self.string()
            self.expect(")")
            to = None
            target = None
            if self.at("to"):
                self.advance()
                to = self.machine_ref()
            if self.at("=>"):
                self.advance()
                target = self.ident()
            self.expect(";")
            return _Stmt("emit", t, etype.text, to, target.text if target else None, target)
        if t.kind == "IDENT" and self.peek().text == "=":
            var = self.advance()
            self.expect("=")
            if self.at("ctl"):
                self.advance()
                self.expect(".")
                self.expect("start")
                self.expect("(")
                machine = self.ident()
                self.expect(",")
                self.expect("null")
                self.expect(")")
                self.expect(";")
                return _Stmt("start", var, var.text, machine.text, machine)
            src = self.ident()
            self.expect(".")
            self.expect("emitter")
            self.expect(";")
            return _Stmt("emitter", var, var.text, src.text, src)
        raise self.error(f"unexpected {t.text or 'end of input'!r}")


class _Compiler:
    def __init__(self, machines: dict, run: Token):
        self.raw = machines
        self.run = run
        self.alphabet = {HALT}

    def compile(self) -> ProgramDef:
        if self.run.text not in self.raw:
            raise PepError("unknown-machine", f"ctl.run names unknown machine {self.run.text!r}",
                           self.run.line, self.run.col)
        machines = {name: self.machine(m) for name, m in self.raw.items()}
        return ProgramDef(machines, self.run.text, frozenset(self.alphabet))

    def machine(self, m: _RawMachine) -> MachineDef:
        self.m = m
        self.vars = frozenset(m.vars) | {CTX}
        self.states = frozenset(m.states) | RESERVED_STATES
        states = {}
        for name, st in m.states.items():
            self.param = st.param
            body = self.seq(st.body, (Transition(LISTEN),))
            states[name] = StateDef(name, st.param, body, st.tok.line)
        states = _guard_pure_cycles(states)
        init = next(s.name for s in m.states.values() if s.init)
        return MachineDef(m.name, self.vars, states, init)

    def check_var(self, var: str, tok: Token) -> None:
        if var not in self.vars:
            raise PepError("unknown-variable",
                           f"variable {var!r} is not declared in machine {self.m.name!r}",
                           tok.line, tok.col)

    def check_state(self, state: str, tok: Token) -> None:
        if state not in self.states:
            raise PepError("unknown-state",
                           f"state {state!r} is not defined in machine {self.m.name!r}",
                           tok.line, tok.col)

    def seq(self, stmts: list, cont: tuple) -> tuple:
        out = []
        for i, st in enumerate(stmts):
            rest = stmts[i + 1:]
            if st.kind == "goto":
                self.check_state(st.args[0], st.tok)
                if rest:
                    raise PepError("syntax", "statement after a transition is unreachable",
                                   rest[0].tok.line, rest[0].tok.col)
                out.append(Transition(st.args[0]))
                return tuple(out)
            if st.kind == "choice":
                after = self.seq(rest, cont)
                branches = []
                for b in st.args[0]:
                    branch = self.seq(b, after)
                    if len(branch) == 1:
                        # a choice must commit on an observable step
                        branch = (Opaque(branch[0].state),) + branch
                    branches.append(branch)
                out.append(Choice(tuple(branches)))
                return tuple(out)
            out.append(self.action(st))
        return tuple(out) + cont

    def action(self, st: _Stmt):
        k, a = st.kind, st.args
        if k == "opaque":
            return Opaque(a[0])
        if k == "start":
            var, machine, mtok = a
            self.check_var(var, st.tok)
            if machine not in self.raw:
                raise PepError("unknown-machine", f"ctl.start names unknown machine {machine!r}",
                               mtok.line, mtok.col)
            return StartMachine(var, machine)
        if k == "emitter":
            var, src, stok = a
            self.check_var(var, st.tok)
            if src != self.param:
                raise PepError("unknown-variable",
                               f"{src!r} is not this state's event parameter {self.param!r}",
                               stok.line, stok.col)
            return AssignEmitter(var)
        if k == "when":
            mvar, etype, target, ttok = a
            if mvar is not None:
                self.check_var(mvar, st.tok)
            self.check_state(target, ttok)
            self.alphabet.add(etype)
            return SetReaction(mvar, etype, target)
        if k == "ignore":
            mvar, etype = a
            if mvar is not None:
                self.check_var(mvar, st.tok)
            self.alphabet.add(etype)
            return UnsetReaction(mvar, etype)
        if k == "emit":
            etype, to, target, ttok = a
            if to is not None:
                self.check_var(to, st.tok)
            self.alphabet.add(etype)
            if target is not None:
                self.check_state(target, ttok)
                self.alphabet.add(ack_type_of(etype))
            return Emit(etype, to, target)
        raise AssertionError(k)


def _guard_pure_cycles(states: dict) -> dict:
    """Insert an opaque step into bodies that are a bare transition taking part
    in a cycle of bare transitions (which would otherwise never perform a step)."""
    def pure_target(name):
        body = states[name].body if name in states else None
        if body is not None and len(body) == 1 and isinstance(body[0], Transition) \
                and body[0].state in states:
            return body[0].state
        return None

    out = dict(states)
    for name in states:
        seen = [name]
        nxt = pure_target(name)
        while nxt is not None and nxt not in seen:
            seen.append(nxt)
            nxt = pure_target(nxt)
        if nxt is not None:  # cycle reached
            target = states[name].body[0].state
            st = states[name]
            out[name] = StateDef(st.name, st.param, (Opaque(target), Transition(target)), st.line)
    return out


def parse_program(source: str) -> ProgramDef:
    machines, run = Parser(source).parse()
    return _Compiler(machines, run).compile()


def compute_alphabet(p: ProgramDef) -> frozenset:
    """Recompute the event-type alphabet of a compiled program."""
    types = {HALT}

    def walk(actions):
        for a in actions:
            if isinstance(a, (SetReaction, UnsetReaction)):
                types.add(a.etype)
            elif isinstance(a, Emit):
                types.add(a.etype)
                if a.ack_state is not None:
                    types.add(ack_type_of(a.etype))
            elif isinstance(a, Choice):
                for b in a.branches:
                    walk(b)

    for m in p.machines.values():
        for st in m.states.values():
            walk(st.body)
    return frozenset(types)


def compile_state(m: MachineDef, state: str) -> tuple:
    if state not in m.states:
        raise PepError("unknown-state", f"state {state!r} is not defined in machine {m.name!r}")
    return m.states[state].body
