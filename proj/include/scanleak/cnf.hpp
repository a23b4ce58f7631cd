#pragma once

#include <initializer_list>
#include <span>
#include <unordered_map>

#include "scanleak/netlist.hpp"
#include "scanleak/sat.hpp"
#include "scanleak/ternary.hpp"

namespace scanleak {

// Tseitin construction helpers on top of Solver. All returned literals are
// definitionally tied to their operands, so they can be reused freely.
class CnfBuilder {
public:
    explicit CnfBuilder(Solver& s) : s_(s) {}

    Solver& solver() { return s_; }

    Lit fresh() { return mk_lit(s_.new_var()); }
    Lit true_lit();
    Lit false_lit() { return ~true_lit(); }
    Lit from_bool(bool b) { return b ? true_lit() : false_lit(); }

    Lit land(std::span<const Lit> ins);
    Lit lor(std::span<const Lit> ins);
    Lit land(std::initializer_list<Lit> ins) { return land(std::span<const Lit>(ins.begin(), ins.size())); }
    Lit lor(std::initializer_list<Lit> ins) { return lor(std::span<const Lit>(ins.begin(), ins.size())); }
    Lit lxor2(Lit a, Lit b);

    void require(Lit a) { s_.add_clause({a}); }
    void require_equal(Lit a, Lit b);

private:
    Solver& s_;
    Lit true_{-2};
};

// Dual-rail literal pair for one three-valued net: `known` says whether the
// net carries a definite value, `value` is that value when it does. Encodings
// below treat known=0 as X regardless of the value rail, and every literal
// pair they produce has value=0 whenever known=0.
struct TLit {
    Lit known;
    Lit value;
};

TLit t_const(CnfBuilder& cb, Ternary t);

// One gate as a constraint network over already-encoded input literals,
// returning the output literal. Input count per kind as in the netlist.
Lit encode_gate_bool(CnfBuilder& cb, GateKind kind, std::span<const Lit> ins);
TLit encode_gate_ternary(CnfBuilder& cb, GateKind kind, std::span<const TLit> ins);

// Boolean encoding of a cone's gates. `input_lits` must give a literal for
// every cone input net (primary inputs and flop outputs); the result maps
// each net in the cone, inputs included, to its literal.
std::unordered_map<NetId, Lit> encode_cone_bool(
    CnfBuilder& cb, const Netlist& nl, const Cone& cone,
    const std::unordered_map<NetId, Lit>& input_lits);

// Three-valued counterpart over dual-rail pairs.
std::unordered_map<NetId, TLit> encode_cone_ternary(
    CnfBuilder& cb, const Netlist& nl, const Cone& cone,
    const std::unordered_map<NetId, TLit>& input_lits);

} // namespace scanleak
