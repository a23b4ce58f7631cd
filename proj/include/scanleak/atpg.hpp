#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "scanleak/netlist.hpp"

namespace scanleak {

// A pattern that makes one primary output observe the content of one flop
// while every undetermined secure-cell input stays at X. Constraints are
// sparse: anything not listed is unconstrained.
struct LeakCondition {
    NetId po = kNoNet;
    std::uint32_t leak_flop = 0;
    std::vector<std::pair<std::uint32_t, std::uint8_t>> cells; // (flop index, required bit)
    std::vector<std::pair<NetId, std::uint8_t>> pis;           // (pi net, required bit)
    std::uint8_t expected_when_0 = 0; // po value when the flop holds 0
    std::uint8_t expected_when_1 = 0; // po value when the flop holds 1

    // Both expectations are definite and differ, so one observation decodes
    // the flop content.
    std::uint8_t decode(std::uint8_t po_value) const {
        return po_value == expected_when_1 ? 1 : 0;
    }
};

// Find an assignment of the controllable cells such that, with every net in
// `unknown_pis` held at X, `po(cone)` is a definite value that differs between
// leak_flop=0 and leak_flop=1. Deciphered key inputs are folded in as
// constants and re-emitted as PI constraints. Cone PIs outside unknown/known
// are free and may end up constrained. Returns nothing when no such
// assignment exists, or when the search overruns its conflict budget (the
// nonexistence proof is exponential on some parity-heavy cones). The search
// runs on a dual-rail (known,value) encoding of two cone copies, one per leak
// polarity; the surviving constraints are then greedily reduced under
// three-valued simulation.
std::optional<LeakCondition> gen_leak_condition(
    const Netlist& n, const Cone& cone, std::uint32_t leak_flop,
    std::span<const std::uint32_t> controllable_flops,
    std::span<const NetId> unknown_pis,
    std::span<const std::pair<NetId, std::uint8_t>> known_pis,
    std::ostream* dimacs = nullptr);

struct Fault {
    NetId net = kNoNet;
    std::uint8_t stuck = 0;
    bool operator==(const Fault&) const = default;
};

// Single stuck-at faults on every net, equivalence-collapsed across BUF/NOT:
// a net whose only reader is one inverter or buffer (and which is neither a
// primary output nor a flop data input) folds into that gate's output.
std::vector<Fault> collapsed_fault_list(const Netlist& n);

// One full-scan test pattern: values for every primary input and every flop.
struct TestPattern {
    std::vector<std::uint8_t> pi;
    std::vector<std::uint8_t> state;
};

// Per-fault detection flags: flag f is 1 when at least one pattern makes some
// primary output or flop data input differ from the fault-free circuit.
// Word-parallel serial fault simulation.
std::vector<std::uint8_t> detected_faults(const Netlist& n, std::span<const Fault> faults,
                                          std::span<const TestPattern> patterns);

// Fraction of the collapsed fault list detected by at least one pattern.
double fault_coverage(const Netlist& n, std::span<const TestPattern> patterns);

// SAT-based combinational test generation for one fault; nothing when the
// fault is undetectable or the search overruns its conflict budget.
std::optional<TestPattern> gen_fault_test(const Netlist& n, Fault f,
                                          std::ostream* dimacs = nullptr);

} // namespace scanleak
