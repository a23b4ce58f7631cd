#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scanleak/netlist.hpp"

namespace scanleak {

// One inserted key gate. The gate sits on `host_net`: the original driver now
// feeds a renamed net, and the key gate drives `host_net` so all fan-out is
// preserved. XOR gates are transparent when the key bit is 0, XNOR when 1.
struct KeyGateRecord {
    std::uint32_t key_index = 0;
    std::uint32_t gate_index = 0; // position in netlist.gates()
    std::string host_net;
    bool xnor = false;
};

struct LockedDesign {
    Netlist netlist;                      // includes keyinput<i> primary inputs
    std::vector<KeyGateRecord> key_gates; // entry i describes key bit i
    std::vector<NetId> key_inputs;        // keyinput<i> net ids, indexed by key bit
    // The correct key. Held for oracle construction and audits only; writing
    // the locked netlist never includes it.
    std::vector<std::uint8_t> hidden_key;

    std::uint32_t key_bits() const { return static_cast<std::uint32_t>(key_inputs.size()); }
};

// Random logic locking: K key gates on uniformly drawn distinct internal
// (gate-output) nets; key bits drawn uniformly, polarity set so the hidden
// key is the transparent one.
LockedDesign lock_rll(const Netlist& n, std::uint32_t key_bits, std::uint64_t seed);

// Interference-driven placement: greedily grow a host-net set that maximizes
// the summed pairwise overlap of fan-out cones, ties broken by seed.
LockedDesign lock_sll_heuristic(const Netlist& n, std::uint32_t key_bits, std::uint64_t seed);

// Summed pairwise fan-out-cone overlap (gate counts) of the host nets.
std::uint64_t interference_score(const Netlist& n, std::span<const NetId> hosts);

// Substitute a concrete key: each key gate becomes a BUF (transparent bit) or
// NOT, and the keyinput<i> inputs disappear.
Netlist apply_key(const LockedDesign& d, std::span<const std::uint8_t> key);

// Rebuild the key-gate records of a locked netlist read back from bench text
// (gates fed by keyinput<i> inputs). hidden_key is left empty.
LockedDesign locked_from_netlist(Netlist n);

// Key file format: one '0' or '1' line per bit, in key order.
std::string key_file_text(std::span<const std::uint8_t> key);
std::vector<std::uint8_t> parse_key_file(std::string_view text);

} // namespace scanleak
