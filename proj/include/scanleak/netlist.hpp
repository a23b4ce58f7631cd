#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scanleak/ternary.hpp"

// Gate-level netlist in the bench dialect: INPUT/OUTPUT declarations, D
// flip-flops, and combinational gates. Flops are state-holding declarations,
// not gates; evaluation treats each flop output as a state input and reports
// the value at each flop's data input as the next state.

namespace scanleak {

using NetId = std::uint32_t;
inline constexpr NetId kNoNet = UINT32_MAX;

enum class GateKind : std::uint8_t { And, Nand, Or, Nor, Xor, Xnor, Not, Buf };

const char* gate_kind_name(GateKind k);

struct Gate {
    GateKind kind;
    std::vector<NetId> inputs;
    NetId output = kNoNet;
};

struct Flop {
    NetId d = kNoNet;
    NetId q = kNoNet;
};

// Where a net's value comes from.
enum class DriverKind : std::uint8_t { None, PrimaryInput, GateOutput, FlopOutput };

struct ParseError : std::runtime_error {
    ParseError(int line, int col, const std::string& msg);
    int line;
    int col;
};

struct EvalResult {
    std::vector<std::uint8_t> po;
    std::vector<std::uint8_t> next_state;
};

struct TernaryEvalResult {
    std::vector<Ternary> po;
    std::vector<Ternary> next_state;
};

// Combinational fan-in cone of one primary output: the inputs it depends on
// (primary inputs and flop outputs) and the gates between them, traversal
// stopping at sequential boundaries.
struct Cone {
    NetId po = kNoNet;
    std::vector<NetId> pis;           // sorted
    std::vector<std::uint32_t> flops; // sorted flop indices
    std::vector<std::uint32_t> gates; // topological order within the cone

    bool contains_pi(NetId n) const;
    bool contains_flop(std::uint32_t f) const;
};

class Netlist {
public:
    // --- structure access ---
    std::size_t net_count() const { return names_.size(); }
    const std::string& net_name(NetId n) const { return names_.at(n); }
    std::optional<NetId> find_net(std::string_view name) const;

    const std::vector<NetId>& pis() const { return pis_; }
    const std::vector<NetId>& pos() const { return pos_; }
    const std::vector<Gate>& gates() const { return gates_; }
    const std::vector<Flop>& flops() const { return flops_; }
    const std::vector<std::uint32_t>& topo_order() const { return topo_; }

    DriverKind driver_kind(NetId n) const { return driver_kind_.at(n); }
    // Index of the driving gate / flop, valid when driver_kind says so.
    std::uint32_t driver_index(NetId n) const { return driver_index_.at(n); }
    std::optional<std::uint32_t> pi_index(NetId n) const;

    // --- evaluation ---
    // pi and state are indexed like pis() and flops(). One pass over the
    // gates in topological order; next_state[i] is the value at flops()[i].d.
    EvalResult eval_bool(std::span<const std::uint8_t> pi,
                         std::span<const std::uint8_t> state) const;
    TernaryEvalResult eval_ternary(std::span<const Ternary> pi,
                                   std::span<const Ternary> state) const;

    // Evaluation with caller-provided scratch, for hot paths. `values` must
    // have net_count() entries; po/next_state outputs are appended.
    void eval_bool_into(std::span<const std::uint8_t> pi,
                        std::span<const std::uint8_t> state,
                        std::vector<std::uint8_t>& values,
                        std::vector<std::uint8_t>& po,
                        std::vector<std::uint8_t>& next_state) const;

    Cone fanin_cone(NetId po) const;

    // --- bench text ---
    static Netlist parse_bench(std::string_view text);
    std::string to_bench() const;

private:
    friend class NetlistBuilder;

    std::vector<std::string> names_;
    std::unordered_map<std::string, NetId> by_name_;
    std::vector<NetId> pis_;
    std::vector<NetId> pos_;
    std::vector<Gate> gates_;
    std::vector<Flop> flops_;
    std::vector<DriverKind> driver_kind_;
    std::vector<std::uint32_t> driver_index_;
    std::vector<std::uint32_t> topo_; // gate indices, topological
};

// Incremental construction with validation (single driver per net, no
// dangling references, no combinational cycles) performed in build().
class NetlistBuilder {
public:
    void add_pi(const std::string& name, int line = 0);
    void add_po(const std::string& name, int line = 0);
    void add_flop(const std::string& q, const std::string& d, int line = 0);
    void add_gate(GateKind kind, const std::string& output,
                  const std::vector<std::string>& inputs, int line = 0);

    Netlist build();

private:
    struct PendingGate {
        GateKind kind;
        std::string output;
        std::vector<std::string> inputs;
        int line;
    };
    struct PendingFlop {
        std::string q, d;
        int line;
    };
    std::vector<std::pair<std::string, int>> pi_names_;
    std::vector<std::pair<std::string, int>> po_names_;
    std::vector<PendingGate> gates_;
    std::vector<PendingFlop> flops_;
};

Ternary eval_gate_ternary(GateKind kind, std::span<const Ternary> ins);

} // namespace scanleak
