#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "scanleak/atpg.hpp"
#include "scanleak/chip.hpp"
#include "scanleak/locking.hpp"
#include "scanleak/netlist.hpp"

namespace scanleak {

// Scan-in streams that leave each chain's regular cells holding `desired`
// (index 0 = nearest scan-in) after simultaneous shifting. Every chain shifts
// the same number of cycles — the longest sequence — shorter chains getting
// leading zeros that flow out.
std::vector<std::vector<std::uint8_t>> preload_streams(
    std::span<const std::vector<std::uint8_t>> desired);

// --- phase 1: key bits from output-cone satisfiability ----------------------

struct PreprocessOutcome {
    std::unordered_map<std::uint32_t, std::uint8_t> bits; // key index -> value
    std::unordered_map<std::uint32_t, std::uint64_t> queries_by_bit;
    std::unordered_map<NetId, std::uint64_t> dips_by_cone; // po net -> loop iterations
    std::uint64_t queries = 0;
    std::uint32_t capped_cones = 0; // cones abandoned at the cap or conflict budget
};

// For every output cone containing secure-cell inputs, run the
// distinguishing-input loop: find an input on which two consistent keys
// disagree, ask the chip (key load, shift the input into the regular cells,
// clockless functional read of that one output), and keep only keys matching
// the answer. Converged cones report the key bits all remaining consistent
// keys agree on; cones abandoned at the iteration cap or the solver's
// conflict budget report nothing. Requires a variant whose regular cells
// shift in M1a; the cap per cone is min(4 * 2^cone_secure_cells, hard_cap).
PreprocessOutcome preprocess(ChipSession& session, const LockedDesign& locked,
                             const ScanChainLayout& layout, std::uint64_t hard_cap = 10000);

// --- phase 2: shift-and-leak -------------------------------------------------

struct ShiftPlan {
    std::uint32_t sc_key = 0;    // key bit being leaked
    std::uint32_t leak_flop = 0; // flop whose content the output will expose
    std::uint32_t chain = 0;
    std::uint32_t d = 0; // shift distance: leak-cell position minus SC position
    NetId po = kNoNet;
    std::vector<std::vector<std::uint8_t>> m1a_streams; // per chain, equal lengths
    std::vector<std::vector<std::uint8_t>> m2_scan_in;  // per chain, length d
    std::vector<std::uint8_t> pi;                       // observe-time primary inputs
    std::uint8_t expected_when_0 = 0;
    std::uint8_t expected_when_1 = 0;
    // Deciphered bits the plan relies on (pass-through placements).
    std::vector<std::pair<std::uint32_t, std::uint8_t>> known_bits;

    std::uint8_t decode(std::uint8_t po_value) const {
        return po_value == expected_when_1 ? 1 : 0;
    }
};

struct PlanInfeasible {
    std::uint32_t chain = 0;
    std::uint32_t position = 0;
    std::string reason;
};

// Translate a leak condition into the pin schedule that realizes it: back-
// shift every constrained bit d positions to its source. A source that is a
// regular cell becomes an M1a preload bit; one before the chain head becomes
// an M2 scan-in bit; a deciphered secure cell passes its own bit through
// (must match); an undetermined secure cell blocks the plan.
std::variant<ShiftPlan, PlanInfeasible> plan_shift(
    const LockedDesign& locked, const ScanChainLayout& layout, std::uint32_t sc_key,
    std::uint32_t leak_flop, const LeakCondition& cond,
    const std::unordered_map<std::uint32_t, std::uint8_t>& known);

// Raised when a plan cannot be decoded against the session's mode semantics:
// the predicted output is indefinite or fails to separate the two key-bit
// hypotheses. Raised before any pin operation.
struct PlanExecutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Attacker-side symbolic mirror of the chip's cell state: each cell holds a
// constant, one hidden key bit, or X (anything a functional capture may have
// produced). Used to pre-validate a plan's pin schedule without touching the
// chip, honoring the session variant's mode machine.
class ChainStateModel {
public:
    struct Tag {
        enum class Kind : std::uint8_t { Const, Key, X } kind = Kind::X;
        std::uint8_t bit = 0;
        std::uint32_t key = 0;
    };

    ChainStateModel(const LockedDesign& locked, const ScanChainLayout& layout,
                    DefenseVariant variant, ModeInputs boot_mode);

    void power_on(ModeInputs mode);
    void step(ModeInputs m, std::span<const std::uint8_t> si);

    // Value of every primary output with flops and key inputs read from the
    // modeled cells; `target` reads as `hypothesis`, deciphered keys as their
    // bits, everything else symbolic (X).
    std::vector<Ternary> outputs(
        std::span<const std::uint8_t> pi, std::uint32_t target, Ternary hypothesis,
        const std::unordered_map<std::uint32_t, std::uint8_t>& known) const;

    const Tag& cell(std::uint32_t chain, std::uint32_t pos) const {
        return cells_.at(chain).at(pos);
    }

private:
    const LockedDesign& locked_;
    const ScanChainLayout& layout_;
    DefenseVariant variant_;
    std::vector<std::vector<Tag>> cells_;
    std::uint8_t prev_test_ = 0, prev_se_ = 0;
    bool test_cont_high_ = false;
    std::uint8_t cg_countdown_ = 0;
};

// Drive one plan against the chip: power-on, key-loading clock, M1a preload
// shifting, d M2 shift cycles, clockless functional read, decode. The plan is
// first replayed on a ChainStateModel for the session's variant; if the two
// key-bit hypotheses do not produce the expected output pair, throws
// PlanExecutionError with zero pin operations spent.
std::uint8_t execute_plan(ChipSession& session, const ShiftPlan& plan);

// --- orchestration -----------------------------------------------------------

enum class BitStatus : std::uint8_t { Unrecovered, Preprocessed, Leaked };
const char* bit_status_name(BitStatus s);

struct BitOutcome {
    BitStatus status = BitStatus::Unrecovered;
    std::uint8_t bit = 0;
    std::uint64_t queries = 0;
};

struct AttackReport {
    DefenseVariant variant = DefenseVariant::Dfs;
    std::vector<BitOutcome> bits;
    std::uint64_t total_queries = 0;
    std::uint32_t capped_cones = 0;
    double preprocess_seconds = 0.0;
    double leak_seconds = 0.0;

    std::uint32_t count(BitStatus s) const;
    std::uint32_t recovered() const {
        return count(BitStatus::Preprocessed) + count(BitStatus::Leaked);
    }
    // One record per key bit plus a summary; timings included on request so
    // the default text is byte-stable across runs.
    std::string to_text(bool include_timings = false) const;
};

// Both phases end to end: cone preprocessing (shift-capable variants only),
// then per chain, leak cells rightmost first, one leak condition per leak
// cell reused for every secure cell to its left, repeated in passes until no
// further bit falls. Unrecovered bits are reported, never guessed.
AttackReport run_full_attack(ChipSession& session, const LockedDesign& locked,
                             const ScanChainLayout& layout, std::uint64_t dip_hard_cap = 10000);

} // namespace scanleak
