#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

// Conflict-driven clause-learning SAT solver: two-watched-literal
// propagation, first-UIP learning, activity-based decisions with phase
// saving, Luby restarts, and incremental solving under assumptions.
// Everything is deterministic, so callers that build identical formulas get
// identical models.

namespace scanleak {

using Var = std::int32_t;

struct Lit {
    std::int32_t x = -2; // 2*var, +1 when negated
    bool operator==(const Lit&) const = default;
};

inline Lit mk_lit(Var v, bool negated = false) { return Lit{2 * v + (negated ? 1 : 0)}; }
inline Lit operator~(Lit l) { return Lit{l.x ^ 1}; }
inline Var lit_var(Lit l) { return l.x >> 1; }
inline bool lit_negated(Lit l) { return (l.x & 1) != 0; }

enum class SolveStatus : std::uint8_t { Sat, Unsat, Unknown };

class Solver {
public:
    Var new_var();
    int num_vars() const { return static_cast<int>(assign_.size()); }

    // False means the clause made the formula unsatisfiable at the top level.
    bool add_clause(std::vector<Lit> lits);
    bool add_clause(std::initializer_list<Lit> lits);

    bool solve(std::span<const Lit> assumptions = {});
    bool solve_with(std::initializer_list<Lit> assumptions);

    // Like solve(), but abandons the search once it has burned through
    // `max_conflicts` conflicts, leaving the formula intact. Unknown means
    // the budget ran out before either answer was reached.
    SolveStatus solve_limited(std::span<const Lit> assumptions, std::uint64_t max_conflicts);

    // Valid after a satisfiable solve().
    bool model_value(Var v) const;

    bool okay() const { return ok_; }
    std::uint64_t conflicts() const { return conflicts_; }
    std::uint64_t decisions() const { return decisions_; }

    // When enabled, problem clauses are kept for a DIMACS-style dump.
    void record_dimacs(bool on) { record_ = on; }
    void dump_dimacs(std::ostream& out) const;

private:
    struct Clause {
        std::vector<Lit> lits;
        bool learnt = false;
    };
    struct Watcher {
        std::uint32_t clause;
        Lit blocker;
    };

    int value_of(Lit l) const {
        std::int8_t a = assign_[lit_var(l)];
        return lit_negated(l) ? -a : a;
    }

    void enqueue(Lit l, std::int32_t reason);
    std::int32_t propagate();
    void analyze(std::int32_t confl, std::vector<Lit>& learnt, int& bt_level);
    void cancel_until(int level);
    void attach(std::uint32_t ci);
    Lit pick_branch();
    void bump(Var v);
    void decay() { var_inc_ /= 0.95; }

    // activity-ordered heap of decision candidates
    void heap_insert(Var v);
    void heap_percolate_up(int i);
    void heap_percolate_down(int i);
    Var heap_pop();
    bool heap_empty() const { return heap_.empty(); }

    bool ok_ = true;
    std::vector<Clause> clauses_;
    std::vector<std::vector<Watcher>> watches_; // indexed by Lit.x
    std::vector<std::int8_t> assign_;           // 1 true, -1 false, 0 unset
    std::vector<std::int8_t> phase_;            // saved polarity per var
    std::vector<std::int32_t> reason_;          // clause index or -1
    std::vector<std::int32_t> level_;
    std::vector<Lit> trail_;
    std::vector<std::int32_t> trail_lim_;
    std::size_t qhead_ = 0;

    std::vector<double> activity_;
    double var_inc_ = 1.0;
    std::vector<std::int32_t> heap_;     // heap of vars
    std::vector<std::int32_t> heap_pos_; // var -> heap index or -1

    std::vector<std::int8_t> seen_;
    std::vector<std::int8_t> model_;
    std::uint64_t conflicts_ = 0;
    std::uint64_t decisions_ = 0;
    bool record_ = false;
    std::vector<std::vector<Lit>> recorded_;
};

} // namespace scanleak
