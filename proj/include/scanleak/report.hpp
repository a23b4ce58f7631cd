#pragma once

#include <cstdint>
#include <string>

#include "scanleak/atpg.hpp"
#include "scanleak/chip.hpp"
#include "scanleak/locking.hpp"
#include "scanleak/netlist.hpp"

namespace scanleak {

// Gate-count proxy for instrumentation cost. Declared primitive inventory:
//   every secure cell costs 2 muxes + 1 storage flop (counted once, shared by
//   both defenses);
//   DFS masking adds one scan-out OR gate per chain plus a 5-primitive
//   transition detector (history flop, inverter, AND, OR, sticky flop);
//   MSSD masking adds one 4-primitive shift-disable block (NOR, inverter,
//   flop, delay) plus one 5-primitive clock-gating block (NOR, OR, flop,
//   latch, AND), independent of chain count.
struct OverheadReport {
    std::string design;
    DefenseVariant variant = DefenseVariant::Dfs; // variant the report was asked for
    std::size_t baseline_gates = 0;  // combinational gates in the locked netlist
    std::size_t baseline_flops = 0;
    std::size_t key_bits = 0;
    std::size_t n_chains = 0;
    std::size_t dfs_added = 0;
    std::size_t mssd_added = 0;

    std::size_t baseline() const { return baseline_gates + baseline_flops; }
    double dfs_percent() const;
    double mssd_percent() const;
    std::string to_text() const;
};

OverheadReport overhead(const LockedDesign& locked, const ScanChainLayout& layout,
                        DefenseVariant variant);

// Stuck-at coverage of the original and both instrumented designs under a
// shared pattern budget: a run of seeded random patterns, then one generated
// test per still-undetected fault while the budget lasts.
struct CoverageReport {
    double original = 0.0;
    double dfs = 0.0;
    double mssd = 0.0;
    std::size_t budget = 0;
    std::uint64_t seed = 0;

    std::string to_text() const;
};

CoverageReport coverage_compare(const Netlist& original, const Netlist& dfs_instrumented,
                                const Netlist& mssd_instrumented, std::size_t budget,
                                std::uint64_t seed);

// Combinational image of the scan-inserted design for stuck-at work, with
// every sequential element exposed to the full-scan abstraction (flop outputs
// controllable, flop inputs observable).
//
// The rebuilt netlist keeps the locked design's gates and renames nothing:
// each key input net is re-driven by its secure cell's flop, so the key
// material source becomes a `keymem_<k>` pin. Added pins: `test`, `se`, one
// `si_<c>` per chain; added outputs: one `so_<c>` per chain carrying the
// masked scan-out. Shift multiplexing follows the chain layout; the
// clock-gating pulse of the MSSD variant lives on the clock path, which
// stuck-at patterns cannot exercise, so it has no image here.
Netlist instrument_for_test(const LockedDesign& locked, const ScanChainLayout& layout,
                            DefenseVariant variant);

} // namespace scanleak
