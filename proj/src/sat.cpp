#include "scanleak/sat.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace scanleak {

Var Solver::new_var() {
    Var v = static_cast<Var>(assign_.size());
    assign_.push_back(0);
    phase_.push_back(-1); // default polarity: false
    reason_.push_back(-1);
    level_.push_back(0);
    activity_.push_back(0.0);
    seen_.push_back(0);
    heap_pos_.push_back(-1);
    watches_.emplace_back();
    watches_.emplace_back();
    heap_insert(v);
    return v;
}

bool Solver::add_clause(std::initializer_list<Lit> lits) {
    return add_clause(std::vector<Lit>(lits));
}

bool Solver::add_clause(std::vector<Lit> lits) {
    if (!ok_) return false;
    if (record_) recorded_.push_back(lits);

    // Normalize: sort, drop duplicates and false literals, detect tautology.
    std::sort(lits.begin(), lits.end(), [](Lit a, Lit b) { return a.x < b.x; });
    std::vector<Lit> out;
    Lit prev{-2};
    for (Lit l : lits) {
        if (lit_var(l) >= num_vars()) throw std::invalid_argument("add_clause: unknown var");
        if (l == prev) continue;
        if (l.x == (prev.x ^ 1) && lit_var(l) == lit_var(prev)) return true; // l and ~l
        if (value_of(l) == 1 && level_[lit_var(l)] == 0) return true;        // already true
        if (value_of(l) == -1 && level_[lit_var(l)] == 0) continue;          // drop false
        out.push_back(l);
        prev = l;
    }
    if (out.empty()) {
        ok_ = false;
        return false;
    }
    if (out.size() == 1) {
        if (value_of(out[0]) == -1) {
            ok_ = false;
            return false;
        }
        if (value_of(out[0]) == 0) {
            enqueue(out[0], -1);
            if (propagate() != -1) {
                ok_ = false;
                return false;
            }
        }
        return true;
    }
    clauses_.push_back({std::move(out), false});
    attach(static_cast<std::uint32_t>(clauses_.size() - 1));
    return true;
}

void Solver::attach(std::uint32_t ci) {
    const Clause& c = clauses_[ci];
    watches_[(~c.lits[0]).x].push_back({ci, c.lits[1]});
    watches_[(~c.lits[1]).x].push_back({ci, c.lits[0]});
}

void Solver::enqueue(Lit l, std::int32_t reason) {
    Var v = lit_var(l);
    assign_[v] = lit_negated(l) ? -1 : 1;
    level_[v] = static_cast<std::int32_t>(trail_lim_.size());
    reason_[v] = reason;
    trail_.push_back(l);
}

std::int32_t Solver::propagate() {
    while (qhead_ < trail_.size()) {
        Lit p = trail_[qhead_++];
        std::vector<Watcher>& ws = watches_[p.x];
        std::size_t keep = 0;
        for (std::size_t wi = 0; wi < ws.size(); ++wi) {
            Watcher w = ws[wi];
            if (value_of(w.blocker) == 1) {
                ws[keep++] = w;
                continue;
            }
            Clause& c = clauses_[w.clause];
            // Ensure the false literal (~p) sits at position 1.
            if (c.lits[0] == ~p) std::swap(c.lits[0], c.lits[1]);
            if (value_of(c.lits[0]) == 1) {
                ws[keep++] = {w.clause, c.lits[0]};
                continue;
            }
            bool moved = false;
            for (std::size_t k = 2; k < c.lits.size(); ++k) {
                if (value_of(c.lits[k]) != -1) {
                    std::swap(c.lits[1], c.lits[k]);
                    watches_[(~c.lits[1]).x].push_back({w.clause, c.lits[0]});
                    moved = true;
                    break;
                }
            }
            if (moved) continue;
            // Unit or conflicting.
            ws[keep++] = {w.clause, c.lits[0]};
            if (value_of(c.lits[0]) == -1) {
                for (std::size_t rest = wi + 1; rest < ws.size(); ++rest) ws[keep++] = ws[rest];
                ws.resize(keep);
                qhead_ = trail_.size();
                return static_cast<std::int32_t>(w.clause);
            }
            enqueue(c.lits[0], static_cast<std::int32_t>(w.clause));
        }
        ws.resize(keep);
    }
    return -1;
}

void Solver::bump(Var v) {
    activity_[v] += var_inc_;
    if (activity_[v] > 1e100) {
        for (double& a : activity_) a *= 1e-100;
        var_inc_ *= 1e-100;
    }
    if (heap_pos_[v] >= 0) heap_percolate_up(heap_pos_[v]);
}

void Solver::analyze(std::int32_t confl, std::vector<Lit>& learnt, int& bt_level) {
    learnt.clear();
    learnt.push_back(Lit{-2}); // slot for the asserting literal
    int counter = 0;
    Lit p{-2};
    std::size_t index = trail_.size();
    int current_level = static_cast<int>(trail_lim_.size());

    do {
        const Clause& c = clauses_[confl];
        for (std::size_t i = (p.x == -2 ? 0 : 1); i < c.lits.size(); ++i) {
            Lit q = c.lits[i];
            Var v = lit_var(q);
            if (!seen_[v] && level_[v] > 0) {
                seen_[v] = 1;
                bump(v);
                if (level_[v] >= current_level)
                    ++counter;
                else
                    learnt.push_back(q);
            }
        }
        // Walk back to the next marked literal on the trail.
        while (!seen_[lit_var(trail_[index - 1])]) --index;
        p = trail_[--index];
        seen_[lit_var(p)] = 0;
        confl = reason_[lit_var(p)];
        --counter;
    } while (counter > 0);
    learnt[0] = ~p;

    // Cheap self-subsumption: drop literals whose reason clause is fully marked.
    auto redundant = [&](Lit q) {
        std::int32_t r = reason_[lit_var(q)];
        if (r < 0) return false;
        for (std::size_t i = 1; i < clauses_[r].lits.size(); ++i) {
            Var v = lit_var(clauses_[r].lits[i]);
            if (!seen_[v] && level_[v] > 0) return false;
        }
        return true;
    };
    std::vector<Var> marked;
    marked.reserve(learnt.size());
    for (Lit q : learnt) {
        seen_[lit_var(q)] = 1;
        marked.push_back(lit_var(q));
    }
    std::size_t keep = 1;
    for (std::size_t i = 1; i < learnt.size(); ++i)
        if (!redundant(learnt[i])) learnt[keep++] = learnt[i];
    learnt.resize(keep);
    for (Var v : marked) seen_[v] = 0;

    bt_level = 0;
    if (learnt.size() > 1) {
        std::size_t max_i = 1;
        for (std::size_t i = 2; i < learnt.size(); ++i)
            if (level_[lit_var(learnt[i])] > level_[lit_var(learnt[max_i])]) max_i = i;
        std::swap(learnt[1], learnt[max_i]);
        bt_level = level_[lit_var(learnt[1])];
    }
}

void Solver::cancel_until(int level) {
    if (static_cast<int>(trail_lim_.size()) <= level) return;
    for (std::size_t i = trail_.size(); i > static_cast<std::size_t>(trail_lim_[level]); --i) {
        Var v = lit_var(trail_[i - 1]);
        phase_[v] = assign_[v];
        assign_[v] = 0;
        reason_[v] = -1;
        if (heap_pos_[v] < 0) heap_insert(v);
    }
    trail_.resize(trail_lim_[level]);
    trail_lim_.resize(level);
    qhead_ = trail_.size();
}

Lit Solver::pick_branch() {
    while (!heap_empty()) {
        Var v = heap_pop();
        if (assign_[v] == 0) return mk_lit(v, phase_[v] < 0);
    }
    return Lit{-2};
}

static std::uint64_t luby(std::uint64_t i) {
    // Value of the Luby restart sequence at position i (1-based).
    std::uint64_t k = 1;
    while ((1ull << (k + 1)) - 1 <= i) ++k;
    while (i != (1ull << k) - 1) {
        i = i - (1ull << (k - 1)) + 1;
        k = 1;
        while ((1ull << (k + 1)) - 1 <= i) ++k;
    }
    return 1ull << (k - 1);
}

bool Solver::solve_with(std::initializer_list<Lit> assumptions) {
    std::vector<Lit> a(assumptions);
    return solve(a);
}

bool Solver::solve(std::span<const Lit> assumptions) {
    return solve_limited(assumptions, UINT64_MAX) == SolveStatus::Sat;
}

SolveStatus Solver::solve_limited(std::span<const Lit> assumptions,
                                  std::uint64_t max_conflicts) {
    if (!ok_) return SolveStatus::Unsat;
    cancel_until(0);
    if (propagate() != -1) {
        ok_ = false;
        return SolveStatus::Unsat;
    }

    std::uint64_t restart = 0;
    std::uint64_t spent = 0;
    std::vector<Lit> learnt;
    while (true) {
        ++restart;
        const std::uint64_t budget = 64 * luby(restart);
        std::uint64_t conflict_count = 0;
        bool restarting = false;
        while (!restarting) {
            std::int32_t confl = propagate();
            if (confl != -1) {
                ++conflicts_;
                ++conflict_count;
                if (++spent > max_conflicts) {
                    cancel_until(0);
                    return SolveStatus::Unknown;
                }
                if (trail_lim_.empty()) {
                    ok_ = false; // conflict with no decisions: unsatisfiable outright
                    return SolveStatus::Unsat;
                }
                int bt;
                analyze(confl, learnt, bt);
                cancel_until(bt);
                if (learnt.size() == 1) {
                    enqueue(learnt[0], -1);
                } else {
                    clauses_.push_back({learnt, true});
                    attach(static_cast<std::uint32_t>(clauses_.size() - 1));
                    enqueue(learnt[0], static_cast<std::int32_t>(clauses_.size() - 1));
                }
                decay();
                if (conflict_count >= budget) {
                    cancel_until(0);
                    restarting = true;
                }
                continue;
            }

            // No conflict: extend with assumptions first, then decide.
            if (trail_lim_.size() < assumptions.size()) {
                Lit a = assumptions[trail_lim_.size()];
                if (lit_var(a) >= num_vars())
                    throw std::invalid_argument("solve: assumption over unknown var");
                if (value_of(a) == 1) {
                    trail_lim_.push_back(static_cast<std::int32_t>(trail_.size()));
                    continue;
                }
                if (value_of(a) == -1) {
                    cancel_until(0);
                    return SolveStatus::Unsat; // assumptions contradict the formula
                }
                trail_lim_.push_back(static_cast<std::int32_t>(trail_.size()));
                enqueue(a, -1);
                continue;
            }
            Lit next = pick_branch();
            if (next.x == -2) {
                model_.assign(assign_.begin(), assign_.end());
                cancel_until(0);
                return SolveStatus::Sat;
            }
            ++decisions_;
            trail_lim_.push_back(static_cast<std::int32_t>(trail_.size()));
            enqueue(next, -1);
        }
    }
}

bool Solver::model_value(Var v) const {
    if (v < 0 || static_cast<std::size_t>(v) >= model_.size())
        throw std::logic_error("model_value: no model for var");
    return model_[v] == 1;
}

void Solver::dump_dimacs(std::ostream& out) const {
    out << "p cnf " << num_vars() << " " << recorded_.size() << "\n";
    for (const auto& c : recorded_) {
        for (Lit l : c) out << (lit_negated(l) ? -(lit_var(l) + 1) : (lit_var(l) + 1)) << " ";
        out << "0\n";
    }
}

// --- activity heap -----------------------------------------------------

void Solver::heap_insert(Var v) {
    heap_pos_[v] = static_cast<std::int32_t>(heap_.size());
    heap_.push_back(v);
    heap_percolate_up(heap_pos_[v]);
}

void Solver::heap_percolate_up(int i) {
    Var v = heap_[i];
    while (i > 0) {
        int parent = (i - 1) / 2;
        if (activity_[heap_[parent]] >= activity_[v]) break;
        heap_[i] = heap_[parent];
        heap_pos_[heap_[i]] = i;
        i = parent;
    }
    heap_[i] = v;
    heap_pos_[v] = i;
}

void Solver::heap_percolate_down(int i) {
    Var v = heap_[i];
    const int n = static_cast<int>(heap_.size());
    while (true) {
        int child = 2 * i + 1;
        if (child >= n) break;
        if (child + 1 < n && activity_[heap_[child + 1]] > activity_[heap_[child]]) ++child;
        if (activity_[heap_[child]] <= activity_[v]) break;
        heap_[i] = heap_[child];
        heap_pos_[heap_[i]] = i;
        i = child;
    }
    heap_[i] = v;
    heap_pos_[v] = i;
}

Var Solver::heap_pop() {
    Var top = heap_[0];
    heap_pos_[top] = -1;
    heap_[0] = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
        heap_pos_[heap_[0]] = 0;
        heap_percolate_down(0);
    }
    return top;
}

} // namespace scanleak
