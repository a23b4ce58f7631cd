#include "scanleak/atpg.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "scanleak/cnf.hpp"
#include "scanleak/sat.hpp"

namespace scanleak {

namespace {

bool lit_true(const Solver& s, Lit l) {
    return s.model_value(lit_var(l)) != lit_negated(l);
}

Ternary pair_model(const Solver& s, TLit t) {
    if (!lit_true(s, t.known)) return Ternary::X;
    return lit_true(s, t.value) ? Ternary::T : Ternary::F;
}

// Parity-heavy cones can turn the "no pattern exists" proof exponential, so
// pattern searches give up past this many conflicts and report no pattern.
// Well beyond anything a feasible search needs (easy instances finish in
// tens to hundreds of conflicts).
constexpr std::uint64_t kSearchConflictBudget = 5000;

} // namespace

std::optional<LeakCondition> gen_leak_condition(
    const Netlist& n, const Cone& cone, std::uint32_t leak_flop,
    std::span<const std::uint32_t> controllable_flops,
    std::span<const NetId> unknown_pis,
    std::span<const std::pair<NetId, std::uint8_t>> known_pis,
    std::ostream* dimacs) {
    if (!cone.contains_flop(leak_flop))
        throw std::invalid_argument("gen_leak_condition: leak flop outside the cone");
    for (std::uint32_t f : controllable_flops) {
        if (f == leak_flop)
            throw std::invalid_argument("gen_leak_condition: leak flop listed as controllable");
        if (!cone.contains_flop(f))
            throw std::invalid_argument("gen_leak_condition: controllable flop outside the cone");
    }
    std::unordered_set<NetId> unknown(unknown_pis.begin(), unknown_pis.end());
    std::unordered_map<NetId, std::uint8_t> known;
    for (auto [net, bit] : known_pis) {
        if (unknown.count(net))
            throw std::invalid_argument("gen_leak_condition: net both known and unknown");
        known.emplace(net, bit);
    }

    Solver solver;
    if (dimacs) solver.record_dimacs(true);
    CnfBuilder cb(solver);

    // Shared inputs, except the leaked flop which is 0 in one copy and 1 in
    // the other.
    std::unordered_map<NetId, TLit> in0, in1;
    std::unordered_set<std::uint32_t> controllable(controllable_flops.begin(),
                                                   controllable_flops.end());
    std::vector<std::pair<std::uint32_t, TLit>> flop_vars; // controllable only
    for (std::uint32_t f : cone.flops) {
        NetId q = n.flops()[f].q;
        if (f == leak_flop) {
            in0[q] = t_const(cb, Ternary::F);
            in1[q] = t_const(cb, Ternary::T);
            continue;
        }
        TLit t = controllable.count(f) ? TLit{cb.fresh(), cb.fresh()}
                                       : t_const(cb, Ternary::X);
        if (controllable.count(f)) flop_vars.emplace_back(f, t);
        in0[q] = in1[q] = t;
    }
    std::vector<std::pair<NetId, TLit>> pi_vars; // free (non-key) only
    for (NetId p : cone.pis) {
        TLit t;
        if (unknown.count(p)) {
            t = t_const(cb, Ternary::X);
        } else if (auto it = known.find(p); it != known.end()) {
            t = t_const(cb, it->second ? Ternary::T : Ternary::F);
        } else {
            t = {cb.fresh(), cb.fresh()};
            pi_vars.emplace_back(p, t);
        }
        in0[p] = in1[p] = t;
    }

    auto net0 = encode_cone_ternary(cb, n, cone, in0);
    auto net1 = encode_cone_ternary(cb, n, cone, in1);
    TLit po0 = net0.at(cone.po), po1 = net1.at(cone.po);
    cb.require(po0.known);
    cb.require(po1.known);
    cb.require(cb.lxor2(po0.value, po1.value));

    if (dimacs) solver.dump_dimacs(*dimacs);
    if (solver.solve_limited({}, kSearchConflictBudget) != SolveStatus::Sat) return std::nullopt;

    // Model -> dense ternary assignment over the whole netlist. Everything
    // outside the cone stays X; it cannot reach this output.
    std::vector<Ternary> pi_t(n.pis().size(), Ternary::X);
    std::vector<Ternary> state_t(n.flops().size(), Ternary::X);
    auto pi_pos = [&](NetId net) {
        auto idx = n.pi_index(net);
        if (!idx) throw std::logic_error("gen_leak_condition: cone input is not a primary input");
        return *idx;
    };
    for (auto& [f, t] : flop_vars) state_t[f] = pair_model(solver, t);
    for (auto& [p, t] : pi_vars) pi_t[pi_pos(p)] = pair_model(solver, t);
    for (auto& [p, bit] : known)
        if (cone.contains_pi(p)) pi_t[pi_pos(p)] = t_from_bool(bit != 0);

    std::size_t po_index = 0;
    while (po_index < n.pos().size() && n.pos()[po_index] != cone.po) ++po_index;
    if (po_index == n.pos().size())
        throw std::invalid_argument("gen_leak_condition: cone root is not a primary output");

    auto po_at = [&](Ternary leak) {
        state_t[leak_flop] = leak;
        Ternary v = n.eval_ternary(pi_t, state_t).po[po_index];
        state_t[leak_flop] = Ternary::X;
        return v;
    };
    const Ternary e0 = po_at(Ternary::F), e1 = po_at(Ternary::T);
    if (e0 == Ternary::X || e1 == Ternary::X || e0 == e1)
        throw std::logic_error("gen_leak_condition: model fails three-valued replay");

    // Greedily blank out constraints the expectation pair does not need.
    auto still_leaks = [&] { return po_at(Ternary::F) == e0 && po_at(Ternary::T) == e1; };
    std::sort(flop_vars.begin(), flop_vars.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [f, t] : flop_vars) {
        if (state_t[f] == Ternary::X) continue;
        Ternary saved = std::exchange(state_t[f], Ternary::X);
        if (!still_leaks()) state_t[f] = saved;
    }
    std::vector<NetId> cone_pis(cone.pis.begin(), cone.pis.end());
    std::sort(cone_pis.begin(), cone_pis.end());
    for (NetId p : cone_pis) {
        std::size_t i = pi_pos(p);
        if (pi_t[i] == Ternary::X) continue;
        Ternary saved = std::exchange(pi_t[i], Ternary::X);
        if (!still_leaks()) pi_t[i] = saved;
    }

    LeakCondition cond;
    cond.po = cone.po;
    cond.leak_flop = leak_flop;
    cond.expected_when_0 = e0 == Ternary::T;
    cond.expected_when_1 = e1 == Ternary::T;
    for (std::uint32_t f : cone.flops)
        if (f != leak_flop && state_t[f] != Ternary::X)
            cond.cells.emplace_back(f, state_t[f] == Ternary::T);
    for (NetId p : cone_pis)
        if (pi_t[pi_pos(p)] != Ternary::X)
            cond.pis.emplace_back(p, pi_t[pi_pos(p)] == Ternary::T);
    return cond;
}

// --- fault list --------------------------------------------------------------

std::vector<Fault> collapsed_fault_list(const Netlist& n) {
    const std::size_t nets = n.net_count();
    std::vector<std::uint32_t> reader_count(nets, 0);
    std::vector<std::uint32_t> sole_reader(nets, UINT32_MAX);
    for (std::uint32_t gi = 0; gi < n.gates().size(); ++gi)
        for (NetId in : n.gates()[gi].inputs) {
            ++reader_count[in];
            sole_reader[in] = gi;
        }
    std::vector<std::uint8_t> anchored(nets, 0); // PO or flop data input
    for (NetId p : n.pos()) anchored[p] = 1;
    for (const Flop& f : n.flops()) anchored[f.d] = 1;

    std::vector<Fault> faults;
    faults.reserve(2 * nets);
    for (NetId net = 0; net < nets; ++net) {
        bool folds = !anchored[net] && reader_count[net] == 1 &&
                     sole_reader[net] != UINT32_MAX &&
                     (n.gates()[sole_reader[net]].kind == GateKind::Buf ||
                      n.gates()[sole_reader[net]].kind == GateKind::Not);
        if (folds) continue;
        faults.push_back({net, 0});
        faults.push_back({net, 1});
    }
    return faults;
}

// --- fault simulation --------------------------------------------------------

namespace {

std::uint64_t eval_gate_word(GateKind kind, std::span<const std::uint64_t> ins) {
    switch (kind) {
    case GateKind::And:
    case GateKind::Nand: {
        std::uint64_t acc = ~0ULL;
        for (std::uint64_t w : ins) acc &= w;
        return kind == GateKind::And ? acc : ~acc;
    }
    case GateKind::Or:
    case GateKind::Nor: {
        std::uint64_t acc = 0;
        for (std::uint64_t w : ins) acc |= w;
        return kind == GateKind::Or ? acc : ~acc;
    }
    case GateKind::Xor: return ins[0] ^ ins[1];
    case GateKind::Xnor: return ~(ins[0] ^ ins[1]);
    case GateKind::Not: return ~ins[0];
    case GateKind::Buf: return ins[0];
    }
    return 0;
}

// Gates downstream of each net, in evaluation order.
std::vector<std::vector<std::uint32_t>> downstream_gates(const Netlist& n) {
    const std::size_t nets = n.net_count();
    std::vector<std::vector<std::uint32_t>> readers(nets);
    for (std::uint32_t gi = 0; gi < n.gates().size(); ++gi)
        for (NetId in : n.gates()[gi].inputs) readers[in].push_back(gi);

    std::vector<std::uint32_t> topo_rank(n.gates().size(), 0);
    for (std::uint32_t r = 0; r < n.topo_order().size(); ++r)
        topo_rank[n.topo_order()[r]] = r;

    std::vector<std::vector<std::uint32_t>> down(nets);
    std::vector<std::uint8_t> seen(n.gates().size());
    for (NetId net = 0; net < nets; ++net) {
        std::fill(seen.begin(), seen.end(), 0);
        std::vector<std::uint32_t> stack(readers[net]);
        for (std::uint32_t gi : stack) seen[gi] = 1;
        while (!stack.empty()) {
            std::uint32_t gi = stack.back();
            stack.pop_back();
            down[net].push_back(gi);
            for (std::uint32_t nxt : readers[n.gates()[gi].output])
                if (!seen[nxt]) {
                    seen[nxt] = 1;
                    stack.push_back(nxt);
                }
        }
        std::sort(down[net].begin(), down[net].end(),
                  [&](std::uint32_t a, std::uint32_t b) { return topo_rank[a] < topo_rank[b]; });
    }
    return down;
}

} // namespace

std::vector<std::uint8_t> detected_faults(const Netlist& n, std::span<const Fault> faults,
                                          std::span<const TestPattern> patterns) {
    for (const TestPattern& p : patterns)
        if (p.pi.size() != n.pis().size() || p.state.size() != n.flops().size())
            throw std::invalid_argument("fault simulation: pattern does not assign every input");
    if (faults.empty() || patterns.empty()) return std::vector<std::uint8_t>(faults.size(), 0);

    const std::size_t nets = n.net_count();
    auto down = downstream_gates(n);

    std::vector<NetId> observables;
    {
        std::vector<std::uint8_t> is_obs(nets, 0);
        for (NetId p : n.pos())
            if (!std::exchange(is_obs[p], 1)) observables.push_back(p);
        for (const Flop& f : n.flops())
            if (!std::exchange(is_obs[f.d], 1)) observables.push_back(f.d);
    }

    std::vector<std::uint64_t> good(nets), overlay(nets);
    std::vector<std::uint32_t> stamp(nets, 0);
    std::uint32_t epoch = 0;
    std::vector<std::uint8_t> detected(faults.size(), 0);
    std::size_t remaining = faults.size();
    std::vector<std::uint64_t> ins;

    for (std::size_t base = 0; base < patterns.size() && remaining; base += 64) {
        const std::size_t lanes = std::min<std::size_t>(64, patterns.size() - base);
        auto pack = [&](auto&& get) {
            std::uint64_t w = 0;
            for (std::size_t l = 0; l < 64; ++l) {
                const TestPattern& p = patterns[base + std::min(l, lanes - 1)];
                w |= static_cast<std::uint64_t>(get(p) & 1) << l;
            }
            return w;
        };
        for (std::size_t i = 0; i < n.pis().size(); ++i)
            good[n.pis()[i]] = pack([&](const TestPattern& p) { return p.pi[i]; });
        for (std::size_t f = 0; f < n.flops().size(); ++f)
            good[n.flops()[f].q] = pack([&](const TestPattern& p) { return p.state[f]; });
        for (std::uint32_t gi : n.topo_order()) {
            const Gate& g = n.gates()[gi];
            ins.clear();
            for (NetId in : g.inputs) ins.push_back(good[in]);
            good[g.output] = eval_gate_word(g.kind, ins);
        }

        for (std::size_t fi = 0; fi < faults.size(); ++fi) {
            if (detected[fi]) continue;
            const Fault f = faults[fi];
            const std::uint64_t site = f.stuck ? ~0ULL : 0ULL;
            if ((good[f.net] ^ site) == 0) continue; // never activated in this batch
            ++epoch;
            overlay[f.net] = site;
            stamp[f.net] = epoch;
            auto value = [&](NetId net) { return stamp[net] == epoch ? overlay[net] : good[net]; };
            for (std::uint32_t gi : down[f.net]) {
                const Gate& g = n.gates()[gi];
                ins.clear();
                for (NetId in : g.inputs) ins.push_back(value(in));
                overlay[g.output] = eval_gate_word(g.kind, ins);
                stamp[g.output] = epoch;
            }
            std::uint64_t diff = 0;
            for (NetId obs : observables) diff |= good[obs] ^ value(obs);
            if (diff) {
                detected[fi] = 1;
                --remaining;
            }
        }
    }
    return detected;
}

double fault_coverage(const Netlist& n, std::span<const TestPattern> patterns) {
    std::vector<Fault> faults = collapsed_fault_list(n);
    if (faults.empty()) throw std::invalid_argument("fault_coverage: netlist yields no faults");
    std::vector<std::uint8_t> det = detected_faults(n, faults, patterns);
    std::size_t hits = 0;
    for (std::uint8_t d : det) hits += d;
    return static_cast<double>(hits) / static_cast<double>(faults.size());
}

std::optional<TestPattern> gen_fault_test(const Netlist& n, Fault f, std::ostream* dimacs) {
    if (f.net >= n.net_count())
        throw std::invalid_argument("gen_fault_test: fault net out of range");

    Solver solver;
    if (dimacs) solver.record_dimacs(true);
    CnfBuilder cb(solver);

    // Two copies sharing all inputs; they diverge only downstream of the
    // fault site, where the faulty copy pins the net to the stuck value.
    const Lit unset{-2};
    std::vector<Lit> good(n.net_count(), unset), faulty(n.net_count(), unset);
    for (NetId p : n.pis()) good[p] = faulty[p] = cb.fresh();
    for (const Flop& fl : n.flops()) good[fl.q] = faulty[fl.q] = cb.fresh();
    const Lit pinned = cb.from_bool(f.stuck != 0);
    if (faulty[f.net].x >= 0) faulty[f.net] = pinned;

    std::vector<Lit> gi_good, gi_faulty;
    for (std::uint32_t gi : n.topo_order()) {
        const Gate& g = n.gates()[gi];
        gi_good.clear();
        gi_faulty.clear();
        bool diverged = false;
        for (NetId in : g.inputs) {
            gi_good.push_back(good[in]);
            gi_faulty.push_back(faulty[in]);
            diverged |= !(good[in] == faulty[in]);
        }
        good[g.output] = encode_gate_bool(cb, g.kind, gi_good);
        faulty[g.output] = g.output == f.net ? pinned
                           : diverged        ? encode_gate_bool(cb, g.kind, gi_faulty)
                                             : good[g.output];
    }

    cb.require(f.stuck ? ~good[f.net] : good[f.net]); // activate: fault-free value opposes the stuck value
    std::vector<Lit> diffs;
    auto add_obs = [&](NetId net) {
        if (!(good[net] == faulty[net])) diffs.push_back(cb.lxor2(good[net], faulty[net]));
    };
    for (NetId p : n.pos()) add_obs(p);
    for (const Flop& fl : n.flops()) add_obs(fl.d);
    if (diffs.empty()) return std::nullopt; // fault effect cannot reach an observation point
    cb.require(cb.lor(diffs));

    if (dimacs) solver.dump_dimacs(*dimacs);
    if (solver.solve_limited({}, kSearchConflictBudget) != SolveStatus::Sat) return std::nullopt;

    TestPattern p;
    for (NetId pi : n.pis()) p.pi.push_back(lit_true(solver, good[pi]));
    for (const Flop& fl : n.flops()) p.state.push_back(lit_true(solver, good[fl.q]));
    return p;
}

} // namespace scanleak
