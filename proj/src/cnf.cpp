#include "scanleak/cnf.hpp"

#include <stdexcept>
#include <vector>

namespace scanleak {

Lit CnfBuilder::true_lit() {
    if (true_.x < 0) {
        true_ = fresh();
        s_.add_clause({true_});
    }
    return true_;
}

Lit CnfBuilder::land(std::span<const Lit> ins) {
    if (ins.empty()) return true_lit();
    if (ins.size() == 1) return ins[0];
    Lit o = fresh();
    std::vector<Lit> big;
    big.reserve(ins.size() + 1);
    for (Lit a : ins) {
        s_.add_clause({~o, a});
        big.push_back(~a);
    }
    big.push_back(o);
    s_.add_clause(std::move(big));
    return o;
}

Lit CnfBuilder::lor(std::span<const Lit> ins) {
    if (ins.empty()) return false_lit();
    if (ins.size() == 1) return ins[0];
    Lit o = fresh();
    std::vector<Lit> big;
    big.reserve(ins.size() + 1);
    for (Lit a : ins) {
        s_.add_clause({o, ~a});
        big.push_back(a);
    }
    big.push_back(~o);
    s_.add_clause(std::move(big));
    return o;
}

Lit CnfBuilder::lxor2(Lit a, Lit b) {
    Lit o = fresh();
    s_.add_clause({~o, ~a, ~b});
    s_.add_clause({~o, a, b});
    s_.add_clause({o, ~a, b});
    s_.add_clause({o, a, ~b});
    return o;
}

void CnfBuilder::require_equal(Lit a, Lit b) {
    s_.add_clause({~a, b});
    s_.add_clause({a, ~b});
}

TLit t_const(CnfBuilder& cb, Ternary t) {
    switch (t) {
    case Ternary::F: return {cb.true_lit(), cb.false_lit()};
    case Ternary::T: return {cb.true_lit(), cb.true_lit()};
    default: return {cb.false_lit(), cb.false_lit()};
    }
}

Lit encode_gate_bool(CnfBuilder& cb, GateKind kind, std::span<const Lit> ins) {
    switch (kind) {
    case GateKind::And: return cb.land(ins);
    case GateKind::Nand: return ~cb.land(ins);
    case GateKind::Or: return cb.lor(ins);
    case GateKind::Nor: return ~cb.lor(ins);
    case GateKind::Xor: return cb.lxor2(ins[0], ins[1]);
    case GateKind::Xnor: return ~cb.lxor2(ins[0], ins[1]);
    case GateKind::Not: return ~ins[0];
    case GateKind::Buf: return ins[0];
    }
    throw std::logic_error("encode_gate_bool: bad gate kind");
}

std::unordered_map<NetId, Lit> encode_cone_bool(
    CnfBuilder& cb, const Netlist& nl, const Cone& cone,
    const std::unordered_map<NetId, Lit>& input_lits) {
    std::unordered_map<NetId, Lit> lit = input_lits;
    auto in = [&](NetId n) -> Lit {
        auto it = lit.find(n);
        if (it == lit.end()) throw std::logic_error("encode_cone_bool: missing input literal");
        return it->second;
    };

    for (std::uint32_t gi : cone.gates) {
        const Gate& g = nl.gates()[gi];
        std::vector<Lit> ins;
        ins.reserve(g.inputs.size());
        for (NetId n : g.inputs) ins.push_back(in(n));
        lit[g.output] = encode_gate_bool(cb, g.kind, ins);
    }
    return lit;
}

TLit encode_gate_ternary(CnfBuilder& cb, GateKind kind, std::span<const TLit> ins) {
    TLit out;
    switch (kind) {
    case GateKind::And:
    case GateKind::Nand: {
        // all inputs known 1 -> 1; any input known 0 -> 0; else X
        std::vector<Lit> ones, zeros;
        for (TLit t : ins) {
            ones.push_back(cb.land({t.known, t.value}));
            zeros.push_back(cb.land({t.known, ~t.value}));
        }
        Lit all1 = cb.land(ones);
        Lit any0 = cb.lor(zeros);
        out.known = cb.lor({all1, any0});
        out.value = (kind == GateKind::And) ? all1 : any0;
        break;
    }
    case GateKind::Or:
    case GateKind::Nor: {
        std::vector<Lit> ones, zeros;
        for (TLit t : ins) {
            ones.push_back(cb.land({t.known, t.value}));
            zeros.push_back(cb.land({t.known, ~t.value}));
        }
        Lit any1 = cb.lor(ones);
        Lit all0 = cb.land(zeros);
        out.known = cb.lor({any1, all0});
        out.value = (kind == GateKind::Or) ? any1 : all0;
        break;
    }
    case GateKind::Xor:
    case GateKind::Xnor: {
        out.known = cb.land({ins[0].known, ins[1].known});
        Lit diff = cb.lxor2(ins[0].value, ins[1].value);
        out.value = cb.land({out.known, kind == GateKind::Xor ? diff : ~diff});
        break;
    }
    case GateKind::Not:
        out.known = ins[0].known;
        out.value = cb.land({ins[0].known, ~ins[0].value});
        break;
    case GateKind::Buf:
        out = ins[0];
        break;
    }
    return out;
}

std::unordered_map<NetId, TLit> encode_cone_ternary(
    CnfBuilder& cb, const Netlist& nl, const Cone& cone,
    const std::unordered_map<NetId, TLit>& input_lits) {
    std::unordered_map<NetId, TLit> lit = input_lits;
    auto in = [&](NetId n) -> TLit {
        auto it = lit.find(n);
        if (it == lit.end()) throw std::logic_error("encode_cone_ternary: missing input literal");
        return it->second;
    };

    for (std::uint32_t gi : cone.gates) {
        const Gate& g = nl.gates()[gi];
        std::vector<TLit> ins;
        ins.reserve(g.inputs.size());
        for (NetId n : g.inputs) ins.push_back(in(n));
        lit[g.output] = encode_gate_ternary(cb, g.kind, ins);
    }
    return lit;
}

} // namespace scanleak
