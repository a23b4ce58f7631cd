#include "scanleak/attacks.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "scanleak/cnf.hpp"
#include "scanleak/sat.hpp"

namespace scanleak {

namespace {

bool lit_true(const Solver& s, Lit l) {
    return s.model_value(lit_var(l)) != lit_negated(l);
}

// Session pin order: key inputs are chip-internal, every other primary input
// gets a slot in declaration order.
struct PiSlots {
    std::unordered_map<NetId, std::size_t> slot;
    std::unordered_map<NetId, std::uint32_t> key;
    std::size_t count = 0;
};

PiSlots pi_slots(const LockedDesign& locked) {
    PiSlots ps;
    for (std::uint32_t k = 0; k < locked.key_inputs.size(); ++k)
        ps.key.emplace(locked.key_inputs[k], k);
    for (NetId p : locked.netlist.pis())
        if (!ps.key.count(p)) ps.slot.emplace(p, ps.count++);
    return ps;
}

std::vector<std::uint8_t> stream_column(const std::vector<std::vector<std::uint8_t>>& streams,
                                        std::size_t t) {
    std::vector<std::uint8_t> col(streams.size());
    for (std::size_t c = 0; c < streams.size(); ++c) col[c] = streams[c][t];
    return col;
}

// Per-solve conflict allowance inside the distinguishing-input loop. Some
// parity-heavy cones make the convergence proof exponential; a cone whose
// solve overruns this is abandoned and counted with the capped cones.
constexpr std::uint64_t kConeConflictBudget = 5000;

// Regular-cell rank of every chain position (UINT32_MAX at secure cells).
std::vector<std::vector<std::uint32_t>> rc_ranks(const ScanChainLayout& layout) {
    std::vector<std::vector<std::uint32_t>> ranks(layout.chains.size());
    for (std::size_t c = 0; c < layout.chains.size(); ++c) {
        std::uint32_t r = 0;
        ranks[c].assign(layout.chains[c].size(), UINT32_MAX);
        for (std::size_t p = 0; p < layout.chains[c].size(); ++p)
            if (layout.chains[c][p].kind == CellKind::Rc) ranks[c][p] = r++;
    }
    return ranks;
}

} // namespace

std::vector<std::vector<std::uint8_t>> preload_streams(
    std::span<const std::vector<std::uint8_t>> desired) {
    std::size_t t_max = 0;
    for (const auto& d : desired) t_max = std::max(t_max, d.size());
    std::vector<std::vector<std::uint8_t>> streams(desired.size());
    for (std::size_t c = 0; c < desired.size(); ++c) {
        streams[c].assign(t_max, 0);
        for (std::size_t t = 0; t < t_max; ++t) {
            std::size_t j = t_max - 1 - t; // cell this bit comes to rest in
            if (j < desired[c].size()) streams[c][t] = desired[c][j];
        }
    }
    return streams;
}

// --- preprocess --------------------------------------------------------------

PreprocessOutcome preprocess(ChipSession& session, const LockedDesign& locked,
                             const ScanChainLayout& layout, std::uint64_t hard_cap) {
    if (session.variant() != DefenseVariant::Dfs)
        throw std::invalid_argument(
            "preprocess: this defense variant never shifts regular cells outside full test mode");
    const Netlist& nl = locked.netlist;
    const PiSlots ps = pi_slots(locked);
    const auto ranks = rc_ranks(layout);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> flop_pos(nl.flops().size());
    for (std::uint32_t c = 0; c < layout.chains.size(); ++c)
        for (std::uint32_t p = 0; p < layout.chains[c].size(); ++p)
            if (layout.chains[c][p].kind == CellKind::Rc)
                flop_pos[layout.chains[c][p].index] = {c, p};

    PreprocessOutcome out;
    const std::uint64_t q0 = session.pin_ops();
    session.power_on(kM0);
    const std::vector<std::uint8_t> zero_si(layout.n_chains(), 0);
    const std::vector<std::uint8_t> zero_pi(session.pi_count(), 0);

    for (std::size_t pidx = 0; pidx < nl.pos().size(); ++pidx) {
        const NetId po = nl.pos()[pidx];
        const Cone cone = nl.fanin_cone(po);
        std::vector<std::pair<std::uint32_t, NetId>> cone_keys; // (key index, net)
        for (NetId p : cone.pis)
            if (auto it = ps.key.find(p); it != ps.key.end()) cone_keys.emplace_back(it->second, p);
        std::sort(cone_keys.begin(), cone_keys.end());
        bool any_open = false;
        for (auto& [k, net] : cone_keys) any_open |= !out.bits.count(k);
        if (!any_open) continue;

        const std::uint64_t cone_q0 = session.pin_ops();

        Solver solver;
        CnfBuilder cb(solver);
        std::unordered_map<NetId, Lit> inA, inB;
        std::vector<std::pair<NetId, Lit>> free_pis;
        std::vector<std::pair<std::uint32_t, Lit>> state_lits;
        std::vector<std::pair<std::uint32_t, Lit>> open_keys; // (key index, copy-A literal)
        for (NetId p : cone.pis) {
            auto kit = ps.key.find(p);
            if (kit == ps.key.end()) {
                Lit v = cb.fresh();
                inA[p] = inB[p] = v;
                free_pis.emplace_back(p, v);
            } else if (auto bit = out.bits.find(kit->second); bit != out.bits.end()) {
                inA[p] = inB[p] = cb.from_bool(bit->second); // folded from an earlier cone
            } else {
                inA[p] = cb.fresh();
                inB[p] = cb.fresh();
                open_keys.emplace_back(kit->second, inA[p]);
            }
        }
        for (std::uint32_t f : cone.flops) {
            Lit v = cb.fresh();
            inA[nl.flops()[f].q] = inB[nl.flops()[f].q] = v;
            state_lits.emplace_back(f, v);
        }
        auto litsA = encode_cone_bool(cb, nl, cone, inA);
        auto litsB = encode_cone_bool(cb, nl, cone, inB);
        const Lit miter = cb.lxor2(litsA.at(po), litsB.at(po));

        const std::size_t s_count = cone_keys.size();
        const std::uint64_t cap =
            s_count < 62 ? std::min<std::uint64_t>(hard_cap, 4ULL << s_count) : hard_cap;

        std::uint64_t iters = 0;
        bool abandoned = false;
        while (true) {
            if (iters >= cap) {
                ++out.capped_cones;
                abandoned = true;
                break;
            }
            const SolveStatus st =
                solver.solve_limited(std::span<const Lit>(&miter, 1), kConeConflictBudget);
            if (st == SolveStatus::Unsat) break; // no distinguishing input left
            if (st == SolveStatus::Unknown) {    // proof blew the conflict budget
                ++out.capped_cones;
                abandoned = true;
                break;
            }
            ++iters;

            // Pull the distinguishing input out of the model and play it
            // against the chip: key load, shift it into the regular cells,
            // clockless functional read of this one output.
            std::vector<std::uint8_t> dip_pi = zero_pi;
            for (auto& [net, lit] : free_pis) dip_pi[ps.slot.at(net)] = lit_true(solver, lit);
            std::vector<std::vector<std::uint8_t>> rc_desired(layout.n_chains());
            for (std::uint32_t c = 0; c < layout.n_chains(); ++c) {
                std::uint32_t n_rc = 0;
                for (const ChainCell& cell : layout.chains[c])
                    n_rc += cell.kind == CellKind::Rc;
                rc_desired[c].assign(n_rc, 0);
            }
            for (auto& [f, lit] : state_lits) {
                auto [c, p] = flop_pos[f];
                rc_desired[c][ranks[c][p]] = lit_true(solver, lit);
            }
            auto streams = preload_streams(rc_desired);
            session.step(kM0, zero_pi, zero_si);
            for (std::size_t t = 0; t < (streams.empty() ? 0 : streams[0].size()); ++t)
                session.step(kM1a, zero_pi, stream_column(streams, t));
            const std::uint8_t answer = session.observe(kM0, dip_pi)[pidx];

            // Pin two fresh copies of the cone at this input to the answer:
            // one over each key-literal vector.
            std::unordered_map<NetId, Lit> cA, cB;
            for (auto& [net, lit] : free_pis) cA[net] = cB[net] = cb.from_bool(lit_true(solver, lit));
            for (auto& [f, lit] : state_lits) {
                NetId q = nl.flops()[f].q;
                cA[q] = cB[q] = cb.from_bool(lit_true(solver, lit));
            }
            for (auto& [k, net] : cone_keys) {
                cA[net] = inA.at(net);
                cB[net] = inB.at(net);
            }
            auto rA = encode_cone_bool(cb, nl, cone, cA);
            auto rB = encode_cone_bool(cb, nl, cone, cB);
            cb.require(answer ? rA.at(po) : ~rA.at(po));
            cb.require(answer ? rB.at(po) : ~rB.at(po));
        }

        out.dips_by_cone[po] = iters;
        if (abandoned) continue; // keep nothing from a cone that never converged

        // Keep the bits every remaining consistent key agrees on.
        if (!solver.solve())
            throw std::logic_error("preprocess: chip answers contradict the cone model");
        std::vector<std::pair<std::uint32_t, std::pair<Lit, bool>>> candidate;
        for (auto& [k, lit] : open_keys) candidate.push_back({k, {lit, lit_true(solver, lit)}});
        for (auto& [k, lb] : candidate) {
            const Lit refute = lb.second ? ~lb.first : lb.first;
            if (solver.solve_limited(std::span<const Lit>(&refute, 1), kConeConflictBudget) ==
                SolveStatus::Unsat) {
                out.bits[k] = lb.second;
                out.queries_by_bit[k] = session.pin_ops() - cone_q0;
            }
        }
    }
    out.queries = session.pin_ops() - q0;
    return out;
}

// --- plan_shift --------------------------------------------------------------

std::variant<ShiftPlan, PlanInfeasible> plan_shift(
    const LockedDesign& locked, const ScanChainLayout& layout, std::uint32_t sc_key,
    std::uint32_t leak_flop, const LeakCondition& cond,
    const std::unordered_map<std::uint32_t, std::uint8_t>& known) {
    const auto [c_sc, p_sc] = layout.find_sc(sc_key);
    const auto [c_lc, p_lc] = layout.find_rc(leak_flop);
    if (c_sc != c_lc)
        return PlanInfeasible{c_sc, p_sc, "secure cell and leak cell sit on different chains"};
    if (p_lc <= p_sc)
        return PlanInfeasible{c_lc, p_lc, "leak cell is not downstream of the secure cell"};
    const std::uint32_t d = p_lc - p_sc;

    // Post-shift requirements over the whole cell grid; -1 = free.
    std::vector<std::vector<int>> want(layout.n_chains());
    for (std::uint32_t c = 0; c < layout.n_chains(); ++c)
        want[c].assign(layout.chains[c].size(), -1);
    const PiSlots ps = pi_slots(locked);
    std::vector<std::uint8_t> pi(ps.count, 0);
    for (auto [f, bit] : cond.cells) {
        auto [c, p] = layout.find_rc(f);
        want[c][p] = bit;
    }
    for (auto [net, bit] : cond.pis) {
        auto kit = ps.key.find(net);
        if (kit == ps.key.end())
            pi[ps.slot.at(net)] = bit; // a real pin, applied at observation
        else {
            auto [c, p] = layout.find_sc(kit->second);
            want[c][p] = bit;
        }
    }
    if (want[c_lc][p_lc] >= 0)
        return PlanInfeasible{c_lc, p_lc, "leak cell position is itself constrained"};

    ShiftPlan plan;
    plan.sc_key = sc_key;
    plan.leak_flop = leak_flop;
    plan.chain = c_sc;
    plan.d = d;
    plan.po = cond.po;
    plan.pi = std::move(pi);
    plan.expected_when_0 = cond.expected_when_0;
    plan.expected_when_1 = cond.expected_when_1;
    plan.m2_scan_in.assign(layout.n_chains(), std::vector<std::uint8_t>(d, 0));

    const auto ranks = rc_ranks(layout);
    std::vector<std::vector<std::uint8_t>> rc_desired(layout.n_chains());
    for (std::uint32_t c = 0; c < layout.n_chains(); ++c) {
        std::uint32_t n_rc = 0;
        for (const ChainCell& cell : layout.chains[c]) n_rc += cell.kind == CellKind::Rc;
        rc_desired[c].assign(n_rc, 0);
    }

    // Back-shift each requirement d positions to the cell (or scan-in slot)
    // its value must start from.
    for (std::uint32_t c = 0; c < layout.n_chains(); ++c)
        for (std::uint32_t p = 0; p < want[c].size(); ++p) {
            if (want[c][p] < 0) continue;
            const std::uint8_t bit = static_cast<std::uint8_t>(want[c][p]);
            if (p < d) {
                plan.m2_scan_in[c][d - 1 - p] = bit;
                continue;
            }
            const std::uint32_t q = p - d;
            const ChainCell& src = layout.chains[c][q];
            if (src.kind == CellKind::Rc) {
                rc_desired[c][ranks[c][q]] = bit;
                continue;
            }
            if (src.index == sc_key)
                return PlanInfeasible{c, q, "required value would come from the target secure cell"};
            auto kit = known.find(src.index);
            if (kit == known.end())
                return PlanInfeasible{c, q, "required value would come from an undetermined secure cell"};
            if (kit->second != bit)
                return PlanInfeasible{c, q, "deciphered secure cell holds the opposite value"};
            // match: the key-load clock places it, the shift delivers it
        }

    plan.m1a_streams = preload_streams(rc_desired);
    plan.known_bits.assign(known.begin(), known.end());
    std::sort(plan.known_bits.begin(), plan.known_bits.end());
    return plan;
}

// --- ChainStateModel -----------------------------------------------------------

ChainStateModel::ChainStateModel(const LockedDesign& locked, const ScanChainLayout& layout,
                                 DefenseVariant variant, ModeInputs boot_mode)
    : locked_(locked), layout_(layout), variant_(variant) {
    power_on(boot_mode);
}

void ChainStateModel::power_on(ModeInputs mode) {
    cells_.assign(layout_.chains.size(), {});
    for (std::size_t c = 0; c < layout_.chains.size(); ++c)
        cells_[c].assign(layout_.chains[c].size(), Tag{Tag::Kind::Const, 0, 0});
    prev_test_ = mode.test;
    prev_se_ = mode.se;
    test_cont_high_ = (mode.test == 1);
    cg_countdown_ = 0;
}

void ChainStateModel::step(ModeInputs m, std::span<const std::uint8_t> si) {
    const bool from_m2 = (prev_test_ == 1 && prev_se_ == 1);
    bool sd = false;
    if (variant_ == DefenseVariant::Mssd) {
        test_cont_high_ = test_cont_high_ && (m.test == 1);
        sd = sd_value(m.test != 0, m.se != 0, test_cont_high_);
    }
    prev_test_ = m.test;
    prev_se_ = m.se;
    if (variant_ == DefenseVariant::Mssd && from_m2 && m.test == 0 && m.se == 0)
        cg_countdown_ = 1;

    const bool rc_shift = variant_ == DefenseVariant::Dfs ? (m.se == 1) : sd;
    const bool sc_shift =
        (m.test == 1 && m.se == 1) && (variant_ == DefenseVariant::Dfs || sd);
    const bool rc_gated = variant_ == DefenseVariant::Mssd && cg_countdown_ == 1;

    auto next = cells_;
    for (std::uint32_t c = 0; c < layout_.chains.size(); ++c) {
        const auto& chain = layout_.chains[c];
        const Tag si_tag{Tag::Kind::Const, si[c], 0};
        for (std::uint32_t p = 0; p < chain.size(); ++p) {
            const ChainCell& cell = chain[p];
            if (cell.kind == CellKind::Sc) {
                if (m.test == 0 && m.se == 0)
                    next[c][p] = Tag{Tag::Kind::Key, 0, cell.index};
                else if (sc_shift)
                    next[c][p] = (p == 0) ? si_tag : cells_[c][p - 1];
            } else {
                if (rc_gated) continue;
                if (rc_shift) {
                    if (m.test == 1) {
                        next[c][p] = (p == 0) ? si_tag : cells_[c][p - 1];
                    } else {
                        Tag src = si_tag;
                        for (std::uint32_t q = p; q-- > 0;)
                            if (chain[q].kind == CellKind::Rc) {
                                src = cells_[c][q];
                                break;
                            }
                        next[c][p] = src;
                    }
                } else {
                    next[c][p] = Tag{}; // functional capture: unknown
                }
            }
        }
    }
    if (rc_gated) cg_countdown_ = 0;
    cells_ = std::move(next);
}

std::vector<Ternary> ChainStateModel::outputs(
    std::span<const std::uint8_t> pi, std::uint32_t target, Ternary hypothesis,
    const std::unordered_map<std::uint32_t, std::uint8_t>& known) const {
    auto tag_value = [&](const Tag& t) -> Ternary {
        switch (t.kind) {
        case Tag::Kind::Const: return t_from_bool(t.bit != 0);
        case Tag::Kind::Key:
            if (t.key == target) return hypothesis;
            if (auto it = known.find(t.key); it != known.end()) return t_from_bool(it->second != 0);
            return Ternary::X;
        default: return Ternary::X;
        }
    };
    const Netlist& nl = locked_.netlist;
    std::unordered_map<NetId, std::uint32_t> key_of;
    for (std::uint32_t k = 0; k < locked_.key_inputs.size(); ++k)
        key_of.emplace(locked_.key_inputs[k], k);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> sc_pos(locked_.key_bits());
    std::vector<std::pair<std::uint32_t, std::uint32_t>> flop_pos(nl.flops().size());
    for (std::uint32_t c = 0; c < layout_.chains.size(); ++c)
        for (std::uint32_t p = 0; p < layout_.chains[c].size(); ++p) {
            const ChainCell& cell = layout_.chains[c][p];
            (cell.kind == CellKind::Sc ? sc_pos[cell.index] : flop_pos[cell.index]) = {c, p};
        }

    std::vector<Ternary> pit(nl.pis().size(), Ternary::X);
    std::size_t slot = 0;
    for (std::size_t i = 0; i < nl.pis().size(); ++i) {
        auto kit = key_of.find(nl.pis()[i]);
        if (kit == key_of.end()) {
            pit[i] = t_from_bool(pi[slot++] != 0);
        } else {
            auto [c, p] = sc_pos[kit->second];
            pit[i] = tag_value(cells_[c][p]);
        }
    }
    std::vector<Ternary> st(nl.flops().size());
    for (std::size_t f = 0; f < st.size(); ++f) {
        auto [c, p] = flop_pos[f];
        st[f] = tag_value(cells_[c][p]);
    }
    return nl.eval_ternary(pit, st).po;
}

// --- execute_plan --------------------------------------------------------------

std::uint8_t execute_plan(ChipSession& session, const ShiftPlan& plan) {
    const LockedDesign& locked = session.design();
    const ScanChainLayout& layout = session.layout();
    const Netlist& nl = locked.netlist;
    const std::uint32_t n = layout.n_chains();
    if (plan.m1a_streams.size() != n || plan.m2_scan_in.size() != n)
        throw std::invalid_argument("execute_plan: plan and layout disagree on chain count");
    const std::size_t t_m1a = plan.m1a_streams.empty() ? 0 : plan.m1a_streams[0].size();
    for (const auto& s : plan.m1a_streams)
        if (s.size() != t_m1a) throw std::invalid_argument("execute_plan: ragged preload streams");
    for (const auto& s : plan.m2_scan_in)
        if (s.size() != plan.d) throw std::invalid_argument("execute_plan: scan-in length is not d");
    if (plan.pi.size() != session.pi_count())
        throw std::invalid_argument("execute_plan: wrong primary-input vector length");
    std::size_t po_index = 0;
    while (po_index < nl.pos().size() && nl.pos()[po_index] != plan.po) ++po_index;
    if (po_index == nl.pos().size())
        throw std::invalid_argument("execute_plan: plan output is not a primary output");

    // Rehearse the pin schedule symbolically first. If the two hypotheses for
    // the target bit do not surface as the expected output pair, the plan
    // cannot decode anything on this chip — refuse before touching a pin.
    std::unordered_map<std::uint32_t, std::uint8_t> known(plan.known_bits.begin(),
                                                          plan.known_bits.end());
    ChainStateModel model(locked, layout, session.variant(), kM0);
    const std::vector<std::uint8_t> zero_si(n, 0);
    model.step(kM0, zero_si);
    for (std::size_t t = 0; t < t_m1a; ++t) model.step(kM1a, stream_column(plan.m1a_streams, t));
    for (std::size_t t = 0; t < plan.d; ++t) model.step(kM2, stream_column(plan.m2_scan_in, t));
    const Ternary rehearsed0 = model.outputs(plan.pi, plan.sc_key, Ternary::F, known)[po_index];
    const Ternary rehearsed1 = model.outputs(plan.pi, plan.sc_key, Ternary::T, known)[po_index];
    if (rehearsed0 == Ternary::X || rehearsed1 == Ternary::X ||
        rehearsed0 != t_from_bool(plan.expected_when_0 != 0) ||
        rehearsed1 != t_from_bool(plan.expected_when_1 != 0))
        throw PlanExecutionError(std::string("plan rehearsal under ") +
                                 defense_name(session.variant()) +
                                 " semantics cannot decode the target bit");

    session.power_on(kM0);
    const std::vector<std::uint8_t> zero_pi(session.pi_count(), 0);
    session.step(kM0, zero_pi, zero_si); // load the key
    for (std::size_t t = 0; t < t_m1a; ++t)
        session.step(kM1a, zero_pi, stream_column(plan.m1a_streams, t));
    for (std::size_t t = 0; t < plan.d; ++t)
        session.step(kM2, zero_pi, stream_column(plan.m2_scan_in, t));
    const std::uint8_t seen = session.observe(kM0, plan.pi)[po_index];
    return plan.decode(seen);
}

// --- orchestration ---------------------------------------------------------------

const char* bit_status_name(BitStatus s) {
    switch (s) {
    case BitStatus::Preprocessed: return "preprocessed";
    case BitStatus::Leaked: return "leaked";
    default: return "unrecovered";
    }
}

std::uint32_t AttackReport::count(BitStatus s) const {
    std::uint32_t n = 0;
    for (const BitOutcome& b : bits) n += b.status == s;
    return n;
}

std::string AttackReport::to_text(bool include_timings) const {
    std::ostringstream out;
    out << "# scanleak attack report\n";
    out << "defense: " << defense_name(variant) << "\n";
    out << "key bits: " << bits.size() << "\n";
    out << "recovered: " << recovered() << "/" << bits.size() << " (preprocessed "
        << count(BitStatus::Preprocessed) << ", leaked " << count(BitStatus::Leaked) << ")\n";
    out << "oracle queries: " << total_queries << "\n";
    out << "capped cones: " << capped_cones << "\n";
    if (include_timings) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "timings: preprocess %.3fs, leak %.3fs\n",
                      preprocess_seconds, leak_seconds);
        out << buf;
    }
    for (std::size_t k = 0; k < bits.size(); ++k) {
        out << "bit " << k << ": " << bit_status_name(bits[k].status);
        if (bits[k].status != BitStatus::Unrecovered)
            out << " value=" << int(bits[k].bit) << " queries=" << bits[k].queries;
        out << "\n";
    }
    return out.str();
}

AttackReport run_full_attack(ChipSession& session, const LockedDesign& locked,
                             const ScanChainLayout& layout, std::uint64_t dip_hard_cap) {
    using clock = std::chrono::steady_clock;
    const Netlist& nl = locked.netlist;
    AttackReport rep;
    rep.variant = session.variant();
    rep.bits.assign(locked.key_bits(), {});
    const std::uint64_t q0 = session.pin_ops();
    std::unordered_map<std::uint32_t, std::uint8_t> known;

    const auto t0 = clock::now();
    if (session.variant() == DefenseVariant::Dfs) {
        PreprocessOutcome pre = preprocess(session, locked, layout, dip_hard_cap);
        known = pre.bits;
        rep.capped_cones = pre.capped_cones;
        for (auto& [k, b] : pre.bits) {
            rep.bits[k].status = BitStatus::Preprocessed;
            rep.bits[k].bit = b;
            auto it = pre.queries_by_bit.find(k);
            rep.bits[k].queries = it == pre.queries_by_bit.end() ? 0 : it->second;
        }
    }
    const auto t1 = clock::now();
    rep.preprocess_seconds = std::chrono::duration<double>(t1 - t0).count();

    std::vector<Cone> cones;
    cones.reserve(nl.pos().size());
    for (NetId po : nl.pos()) cones.push_back(nl.fanin_cone(po));

    // Leak cells rightmost first; one leak condition per leak cell, reused
    // with a different distance for every undetermined secure cell upstream.
    // Passes repeat while deciphered bits keep unlocking more plans.
    bool progress = true;
    while (progress) {
        progress = false;
        for (std::uint32_t c = 0; c < layout.n_chains(); ++c) {
            const auto& chain = layout.chains[c];
            for (std::uint32_t p = static_cast<std::uint32_t>(chain.size()); p-- > 1;) {
                if (chain[p].kind != CellKind::Rc) continue;
                const std::uint32_t lc_flop = chain[p].index;
                std::vector<std::uint32_t> targets; // open SC positions upstream, nearest first
                for (std::uint32_t q = p; q-- > 0;)
                    if (chain[q].kind == CellKind::Sc && !known.count(chain[q].index))
                        targets.push_back(q);
                if (targets.empty()) continue;

                for (std::size_t pidx = 0; pidx < nl.pos().size(); ++pidx) {
                    const Cone& cone = cones[pidx];
                    if (!cone.contains_flop(lc_flop)) continue;
                    std::vector<std::uint32_t> controllable;
                    for (std::uint32_t f : cone.flops)
                        if (f != lc_flop) controllable.push_back(f);
                    std::vector<NetId> unknown_nets;
                    std::vector<std::pair<NetId, std::uint8_t>> known_nets;
                    for (std::uint32_t k = 0; k < locked.key_bits(); ++k) {
                        auto it = known.find(k);
                        if (it == known.end())
                            unknown_nets.push_back(locked.key_inputs[k]);
                        else
                            known_nets.emplace_back(locked.key_inputs[k], it->second);
                    }
                    auto cond = gen_leak_condition(nl, cone, lc_flop, controllable, unknown_nets,
                                                   known_nets);
                    if (!cond) continue;

                    for (std::uint32_t sp : targets) {
                        const std::uint32_t key = chain[sp].index;
                        if (known.count(key)) continue;
                        auto planned = plan_shift(locked, layout, key, lc_flop, *cond, known);
                        if (std::holds_alternative<PlanInfeasible>(planned)) continue;
                        const std::uint64_t pq0 = session.pin_ops();
                        try {
                            const std::uint8_t bit =
                                execute_plan(session, std::get<ShiftPlan>(planned));
                            known[key] = bit;
                            rep.bits[key] = {BitStatus::Leaked, bit, session.pin_ops() - pq0};
                            progress = true;
                        } catch (const PlanExecutionError&) {
                            // the variant's mode machine blocks this schedule
                        }
                    }
                    break; // first workable condition owns this leak cell
                }
            }
        }
    }
    const auto t2 = clock::now();
    rep.leak_seconds = std::chrono::duration<double>(t2 - t1).count();
    rep.total_queries = session.pin_ops() - q0;
    return rep;
}

} // namespace scanleak
