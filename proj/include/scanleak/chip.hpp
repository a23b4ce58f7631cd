#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scanleak/locking.hpp"
#include "scanleak/netlist.hpp"

namespace scanleak {

// Mode pins. (test,se): M0=(0,0) functional, M1a=(0,1) regular-cell shift
// with secure cells bypassed, M1b=(1,0) capture, M2=(1,1) full-chain shift.
struct ModeInputs {
    std::uint8_t test = 0;
    std::uint8_t se = 0;
    bool operator==(const ModeInputs&) const = default;
};

inline constexpr ModeInputs kM0{0, 0};
inline constexpr ModeInputs kM1a{0, 1};
inline constexpr ModeInputs kM1b{1, 0};
inline constexpr ModeInputs kM2{1, 1};

enum class DefenseVariant : std::uint8_t { Dfs, Mssd };
const char* defense_name(DefenseVariant v);

enum class CellKind : std::uint8_t { Rc, Sc };

// One position in a scan chain: a regular cell wraps a netlist flop, a secure
// cell holds one key bit and drives that bit's keyinput net.
struct ChainCell {
    CellKind kind = CellKind::Rc;
    std::uint32_t index = 0; // flop index (Rc) or key index (Sc)
    bool operator==(const ChainCell&) const = default;
};

struct ScanChainLayout {
    // chains[c][p] = cell at position p, position 0 nearest scan-in.
    std::vector<std::vector<ChainCell>> chains;

    std::uint32_t n_chains() const { return static_cast<std::uint32_t>(chains.size()); }
    std::size_t total_cells() const;
    // (chain, position) of a cell; throws if absent.
    std::pair<std::uint32_t, std::uint32_t> find_sc(std::uint32_t key_index) const;
    std::pair<std::uint32_t, std::uint32_t> find_rc(std::uint32_t flop_index) const;
    // Every flop and key index appears exactly once.
    void validate(const LockedDesign& d) const;

    std::string to_text(const LockedDesign& d) const;
    static ScanChainLayout parse_text(std::string_view text, const LockedDesign& d);
};

struct StitchPolicy {
    // When set: the full cell sequence to deal round-robin into chains.
    // Default: flops in index order with secure-cell slots drawn by seed.
    std::optional<std::vector<ChainCell>> explicit_master;
};

ScanChainLayout stitch(const LockedDesign& d, std::uint32_t n_chains, std::uint64_t seed,
                       const StitchPolicy& policy = {});

// Shift-disable level: shifting is permitted only in M2 while the test pin
// has been stable high.
bool sd_value(bool test, bool se, bool test_stable);

// One pin operation of a session, for debugging and the acceptance fuzzer.
struct TraceRecord {
    bool clocked = false;
    ModeInputs mode;
    std::vector<std::uint8_t> pi, si, po, so;
    bool so_masked = false;
};

// Pin-level simulation of one powered chip: the locked netlist plus scan
// chains, with the mode machine of the selected defense. The hidden key lives
// in tamper-proof memory and is loaded into secure cells by M0 clocks.
class ChipSession {
public:
    ChipSession(const LockedDesign& locked, const ScanChainLayout& layout,
                DefenseVariant variant, ModeInputs boot_mode, std::uint64_t seed);

    // Power-on reset: all cells 0, sticky state cleared, no transition seen.
    void power_on(ModeInputs mode);

    struct StepOut {
        std::vector<std::uint8_t> po;
        std::vector<std::uint8_t> so;
    };
    // One clock pulse. pi covers non-key primary inputs in netlist order;
    // si has one bit per chain. Outputs reflect the pre-edge state.
    StepOut step(ModeInputs m, std::span<const std::uint8_t> pi,
                 std::span<const std::uint8_t> si);
    // Clockless mode switch + combinational read of the primary outputs.
    std::vector<std::uint8_t> observe(ModeInputs m, std::span<const std::uint8_t> pi);

    const LockedDesign& design() const { return locked_; }
    const ScanChainLayout& layout() const { return layout_; }
    DefenseVariant variant() const { return variant_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t pin_ops() const { return pin_ops_; }

    std::size_t pi_count() const { return pi_count_; }

    // Harness access only: the planted key, for auditing recovered bits.
    std::span<const std::uint8_t> audit_key() const { return locked_.hidden_key; }
    // Harness access only: current content of one cell.
    std::uint8_t peek_cell(std::uint32_t chain, std::uint32_t pos) const;

    void set_trace(std::vector<TraceRecord>* sink) { trace_ = sink; }

private:
    struct Eval {
        std::vector<std::uint8_t> po;
        std::vector<std::uint8_t> next_state;
    };
    Eval eval(std::span<const std::uint8_t> pi);
    void bookkeeping(ModeInputs m, bool& sd_out);
    std::uint8_t chain_out_raw(std::uint32_t c, ModeInputs m,
                               std::span<const std::uint8_t> si) const;

    const LockedDesign& locked_;
    const ScanChainLayout& layout_;
    DefenseVariant variant_;
    std::uint64_t seed_;

    std::vector<std::vector<std::uint8_t>> cells_;
    std::uint8_t prev_test_ = 0, prev_se_ = 0;
    bool srb_sticky_ = false;       // DFS: set on any 0->1 test edge
    bool test_cont_high_ = false;   // MSSD: test held high since power-on
    std::uint8_t cg_countdown_ = 0; // MSSD: pending one-cycle RC clock gate

    std::size_t pi_count_ = 0;                  // non-key primary inputs
    std::vector<std::int64_t> pi_slot_;         // netlist pi index -> pi arg slot or -1
    std::vector<std::uint32_t> key_of_pi_;      // netlist pi index -> key index (when slot -1)
    std::vector<std::pair<std::uint32_t, std::uint32_t>> sc_pos_;   // key -> (chain,pos)
    std::vector<std::pair<std::uint32_t, std::uint32_t>> flop_pos_; // flop -> (chain,pos)

    std::uint64_t pin_ops_ = 0;
    std::vector<TraceRecord>* trace_ = nullptr;

    // eval scratch
    std::vector<std::uint8_t> scratch_values_, scratch_pi_, scratch_state_;
};

} // namespace scanleak
