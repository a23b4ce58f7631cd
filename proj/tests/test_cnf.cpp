#include "doctest.h"

#include <vector>

#include "scanleak/cnf.hpp"
#include "scanleak/rng.hpp"
#include "test_support.hpp"

using namespace scanleak;
namespace ts = scanleak::testsup;

namespace {

bool lit_model(const Solver& s, Lit l) { return s.model_value(lit_var(l)) ^ lit_negated(l); }

Lit pin(Solver& s, std::vector<Lit>& assumptions, bool value) {
    Lit l = mk_lit(s.new_var());
    assumptions.push_back(value ? l : ~l);
    return l;
}

} // namespace

TEST_SUITE("cnf") {

TEST_CASE("boolean gate encodings match the evaluator on every assignment") {
    struct Shape {
        GateKind kind;
        std::size_t arity;
    };
    const Shape shapes[] = {{GateKind::And, 3},  {GateKind::Nand, 3}, {GateKind::Or, 3},
                            {GateKind::Nor, 3},  {GateKind::Xor, 2},  {GateKind::Xnor, 2},
                            {GateKind::Not, 1},  {GateKind::Buf, 1}};
    for (const Shape& sh : shapes) {
        CAPTURE(gate_kind_name(sh.kind));
        for (std::uint32_t u = 0; u < (1u << sh.arity); ++u) {
            Solver s;
            CnfBuilder cb(s);
            std::vector<Lit> assumptions, ins;
            std::vector<Ternary> tins;
            for (std::size_t i = 0; i < sh.arity; ++i) {
                bool bit = (u >> i) & 1;
                ins.push_back(pin(s, assumptions, bit));
                tins.push_back(t_from_bool(bit));
            }
            Lit out = encode_gate_bool(cb, sh.kind, ins);
            REQUIRE(s.solve(assumptions));
            CHECK(lit_model(s, out) == (eval_gate_ternary(sh.kind, tins) == Ternary::T));
        }
    }
}

TEST_CASE("dual-rail gate encodings reproduce three-valued semantics") {
    struct Shape {
        GateKind kind;
        std::size_t arity;
    };
    const Shape shapes[] = {{GateKind::And, 3},  {GateKind::Nand, 3}, {GateKind::Or, 3},
                            {GateKind::Nor, 3},  {GateKind::Xor, 2},  {GateKind::Xnor, 2},
                            {GateKind::Not, 1},  {GateKind::Buf, 1}};
    Rng rng(0xd1a);
    for (const Shape& sh : shapes) {
        CAPTURE(gate_kind_name(sh.kind));
        std::uint32_t combos = 1;
        for (std::size_t i = 0; i < sh.arity; ++i) combos *= 3;
        for (std::uint32_t u = 0; u < combos; ++u) {
            Solver s;
            CnfBuilder cb(s);
            std::vector<Lit> assumptions;
            std::vector<TLit> ins;
            std::vector<Ternary> tins;
            std::uint32_t rest = u;
            for (std::size_t i = 0; i < sh.arity; ++i) {
                Ternary t = static_cast<Ternary>(rest % 3);
                rest /= 3;
                tins.push_back(t);
                TLit in;
                in.known = pin(s, assumptions, t != Ternary::X);
                // Deliberately non-canonical: the value rail of an X input is
                // driven randomly and must not matter.
                in.value = pin(s, assumptions,
                               t == Ternary::X ? rng.bit() : t == Ternary::T);
                ins.push_back(in);
            }
            TLit out = encode_gate_ternary(cb, sh.kind, ins);
            REQUIRE(s.solve(assumptions));
            const Ternary want = eval_gate_ternary(sh.kind, tins);
            CHECK(lit_model(s, out.known) == (want != Ternary::X));
            if (want != Ternary::X) CHECK(lit_model(s, out.value) == (want == Ternary::T));
            else CHECK(lit_model(s, out.value) == false); // canonical output pair
        }
    }
}

TEST_CASE("builder connectives behave as advertised") {
    Solver s;
    CnfBuilder cb(s);
    Lit t = cb.true_lit(), f = cb.false_lit(), ft = cb.from_bool(true);
    REQUIRE(s.solve());
    CHECK(lit_model(s, t));
    CHECK_FALSE(lit_model(s, f));
    CHECK(lit_model(s, ft));

    std::vector<Lit> assumptions;
    Lit a = pin(s, assumptions, true), b = pin(s, assumptions, false);
    Lit both = cb.land({a, b}), either = cb.lor({a, b}), differ = cb.lxor2(a, b);
    REQUIRE(s.solve(assumptions));
    CHECK_FALSE(lit_model(s, both));
    CHECK(lit_model(s, either));
    CHECK(lit_model(s, differ));

    Lit c = cb.fresh();
    cb.require_equal(c, both);
    REQUIRE(s.solve(assumptions));
    CHECK(lit_model(s, c) == lit_model(s, both));
}

TEST_CASE("cone encodings agree with direct evaluation") {
    Rng rng(0xc0e);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Netlist n = ts::random_netlist(seed * 101);
        REQUIRE(!n.pos().empty());
        NetId po = n.pos()[0];
        Cone cone = n.fanin_cone(po);

        for (int trial = 0; trial < 12; ++trial) {
            std::vector<std::uint8_t> pi(n.pis().size(), 0), st(n.flops().size(), 0);
            for (auto& b : pi) b = rng.bit();
            for (auto& b : st) b = rng.bit();
            const std::uint8_t want = n.eval_bool(pi, st).po[0];

            Solver s;
            CnfBuilder cb(s);
            std::vector<Lit> assumptions;
            std::unordered_map<NetId, Lit> inputs;
            for (NetId p : cone.pis) inputs[p] = pin(s, assumptions, pi[*n.pi_index(p)]);
            for (std::uint32_t f : cone.flops)
                inputs[n.flops()[f].q] = pin(s, assumptions, st[f]);
            auto lits = encode_cone_bool(cb, n, cone, inputs);
            REQUIRE(s.solve(assumptions));
            CHECK(lit_model(s, lits.at(po)) == (want != 0));
        }
    }
}

TEST_CASE("three-valued cone encodings agree with ternary evaluation") {
    Rng rng(0x7e5);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        Netlist n = ts::random_netlist(seed * 211);
        NetId po = n.pos()[0];
        Cone cone = n.fanin_cone(po);
        std::size_t po_idx = 0; // pos()[0]

        for (int trial = 0; trial < 10; ++trial) {
            std::vector<Ternary> pi(n.pis().size(), Ternary::F), st(n.flops().size(), Ternary::F);
            for (auto& t : pi) t = rng.below(3) == 0 ? Ternary::X : t_from_bool(rng.bit());
            for (auto& t : st) t = rng.below(3) == 0 ? Ternary::X : t_from_bool(rng.bit());
            const Ternary want = n.eval_ternary(pi, st).po[po_idx];

            Solver s;
            CnfBuilder cb(s);
            std::vector<Lit> assumptions;
            std::unordered_map<NetId, TLit> inputs;
            auto pin_t = [&](Ternary t) {
                TLit l;
                l.known = pin(s, assumptions, t != Ternary::X);
                l.value = pin(s, assumptions, t == Ternary::T);
                return l;
            };
            for (NetId p : cone.pis) inputs[p] = pin_t(pi[*n.pi_index(p)]);
            for (std::uint32_t f : cone.flops) inputs[n.flops()[f].q] = pin_t(st[f]);
            auto lits = encode_cone_ternary(cb, n, cone, inputs);
            REQUIRE(s.solve(assumptions));
            TLit got = lits.at(po);
            CHECK(lit_model(s, got.known) == (want != Ternary::X));
            if (want != Ternary::X) CHECK(lit_model(s, got.value) == (want == Ternary::T));
        }
    }
}

} // TEST_SUITE
