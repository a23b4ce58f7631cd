#include "scanleak/report.hpp"

#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "scanleak/rng.hpp"

namespace scanleak {

namespace {

double percent(std::size_t added, std::size_t baseline) {
    if (baseline == 0) return 0.0;
    return 100.0 * static_cast<double>(added) / static_cast<double>(baseline);
}

std::string fixed2(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string fixed6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

double OverheadReport::dfs_percent() const { return percent(dfs_added, baseline()); }
double OverheadReport::mssd_percent() const { return percent(mssd_added, baseline()); }

std::string OverheadReport::to_text() const {
    std::ostringstream out;
    out << "# scanleak overhead report\n";
    out << "design: " << (design.empty() ? "-" : design) << "\n";
    out << "variant: " << defense_name(variant) << "\n";
    out << "baseline primitives: " << baseline() << " (" << baseline_gates << " gates + "
        << baseline_flops << " flops)\n";
    out << "key bits: " << key_bits << "\n";
    out << "scan chains: " << n_chains << "\n";
    out << "secure-cell primitives: 3 per bit = " << 3 * key_bits << "\n";
    out << "dfs added primitives: " << dfs_added << " (" << fixed2(dfs_percent()) << "%)\n";
    out << "mssd added primitives: " << mssd_added << " (" << fixed2(mssd_percent()) << "%)\n";
    return out.str();
}

OverheadReport overhead(const LockedDesign& locked, const ScanChainLayout& layout,
                        DefenseVariant variant) {
    OverheadReport r;
    r.variant = variant;
    r.baseline_gates = locked.netlist.gates().size();
    r.baseline_flops = locked.netlist.flops().size();
    r.key_bits = locked.key_bits();
    r.n_chains = layout.n_chains();
    const std::size_t per_sc = 3 * r.key_bits; // 2 muxes + 1 flop each
    r.dfs_added = per_sc + r.n_chains + 5;     // scan-out ORs + transition detector
    r.mssd_added = per_sc + 4 + 5;             // shift-disable block + clock-gating block
    return r;
}

// --- instrumentation -----------------------------------------------------------

Netlist instrument_for_test(const LockedDesign& locked, const ScanChainLayout& layout,
                            DefenseVariant variant) {
    layout.validate(locked);
    const Netlist& nl = locked.netlist;
    std::unordered_map<NetId, std::uint32_t> key_of;
    for (std::uint32_t k = 0; k < locked.key_inputs.size(); ++k)
        key_of.emplace(locked.key_inputs[k], k);

    NetlistBuilder b;
    for (NetId p : nl.pis())
        if (!key_of.count(p)) b.add_pi(nl.net_name(p));
    b.add_pi("test");
    b.add_pi("se");
    for (std::uint32_t c = 0; c < layout.n_chains(); ++c) b.add_pi("si_" + std::to_string(c));
    for (std::uint32_t k = 0; k < locked.key_bits(); ++k)
        b.add_pi("keymem_" + std::to_string(k));

    for (const Gate& g : nl.gates()) {
        std::vector<std::string> ins;
        ins.reserve(g.inputs.size());
        for (NetId in : g.inputs) ins.push_back(nl.net_name(in));
        b.add_gate(g.kind, nl.net_name(g.output), ins);
    }

    std::size_t fresh = 0;
    auto gate = [&](GateKind kind, std::vector<std::string> ins) {
        std::string out = "__ts" + std::to_string(fresh++);
        b.add_gate(kind, out, ins);
        return out;
    };
    std::unordered_map<std::string, std::string> inverted;
    auto inv = [&](const std::string& a) {
        auto it = inverted.find(a);
        if (it != inverted.end()) return it->second;
        std::string out = gate(GateKind::Not, {a});
        inverted.emplace(a, out);
        return out;
    };
    auto mux = [&](const std::string& s, const std::string& when1, const std::string& when0) {
        return gate(GateKind::Or,
                    {gate(GateKind::And, {s, when1}), gate(GateKind::And, {inv(s), when0})});
    };

    std::string rc_sh, sc_sh, sd, srb_seen;
    if (variant == DefenseVariant::Dfs) {
        rc_sh = "se";
        sc_sh = "se";
        // Transition detector: remember a test-pin rising edge forever. The
        // edge must mask the very cycle it happens on, so the masks read the
        // combinational edge alongside the registered history.
        b.add_flop("__srb_prev_q", "test");
        std::string posedge = gate(GateKind::And, {"test", inv("__srb_prev_q")});
        srb_seen = gate(GateKind::Or, {posedge, "__srb_sticky_q"});
        b.add_flop("__srb_sticky_q", srb_seen);
    } else {
        // Shift disable: high only while test has never dropped since reset
        // and both mode pins are up.
        std::string nor_o = gate(GateKind::Nor, {inv("test"), "__sd_hist_q"});
        b.add_flop("__sd_hist_q", gate(GateKind::Not, {nor_o}));
        sd = gate(GateKind::And, {"se", nor_o});
        rc_sh = sd;
        sc_sh = sd;
    }

    for (std::uint32_t c = 0; c < layout.n_chains(); ++c) {
        std::string chain_in = "si_" + std::to_string(c);
        for (const ChainCell& cell : layout.chains[c]) {
            if (cell.kind == CellKind::Sc) {
                const std::string q = nl.net_name(locked.key_inputs[cell.index]);
                const std::string keymem = "keymem_" + std::to_string(cell.index);
                const std::string in_test = mux(sc_sh, chain_in, q);
                const std::string in_func = mux("se", q, keymem);
                b.add_flop(q, mux("test", in_test, in_func));
                // DFS bypasses secure cells whenever test is low; MSSD never
                // shifts outside full test mode, so its cell needs no bypass
                // (and an unreachable bypass path would only shed coverage).
                chain_in = variant == DefenseVariant::Dfs ? mux("test", q, chain_in) : q;
            } else {
                const Flop& f = nl.flops()[cell.index];
                const std::string q = nl.net_name(f.q);
                b.add_flop(q, mux(rc_sh, chain_in, nl.net_name(f.d)));
                chain_in = q;
            }
        }
        const std::string so = "so_" + std::to_string(c);
        if (variant == DefenseVariant::Dfs)
            b.add_gate(GateKind::Or, so, {inv("test"), srb_seen, chain_in});
        else
            b.add_gate(GateKind::Or, so, {inv(sd), chain_in});
    }

    for (NetId p : nl.pos()) b.add_po(nl.net_name(p));
    for (std::uint32_t c = 0; c < layout.n_chains(); ++c) b.add_po("so_" + std::to_string(c));
    return b.build();
}

// --- coverage ------------------------------------------------------------------

namespace {

double budgeted_coverage(const Netlist& n, std::size_t budget, std::uint64_t seed) {
    const std::vector<Fault> faults = collapsed_fault_list(n);
    if (faults.empty()) return 1.0;

    std::vector<TestPattern> patterns;
    Rng rng(seed);
    const std::size_t n_random = std::min<std::size_t>(budget, 256);
    patterns.reserve(n_random);
    for (std::size_t i = 0; i < n_random; ++i) {
        TestPattern p;
        p.pi.resize(n.pis().size());
        p.state.resize(n.flops().size());
        for (auto& bit : p.pi) bit = rng.bit();
        for (auto& bit : p.state) bit = rng.bit();
        patterns.push_back(std::move(p));
    }

    std::vector<std::uint8_t> det = detected_faults(n, faults, patterns);
    for (std::size_t fi = 0; fi < faults.size() && patterns.size() < budget; ++fi) {
        if (det[fi]) continue;
        if (auto tp = gen_fault_test(n, faults[fi])) patterns.push_back(std::move(*tp));
    }
    det = detected_faults(n, faults, patterns);
    std::size_t hits = 0;
    for (std::uint8_t d : det) hits += d;
    return static_cast<double>(hits) / static_cast<double>(faults.size());
}

} // namespace

std::string CoverageReport::to_text() const {
    std::ostringstream out;
    out << "# scanleak coverage report\n";
    out << "pattern budget: " << budget << "\n";
    out << "seed: " << seed << "\n";
    out << "original: " << fixed6(original) << "\n";
    out << "dfs: " << fixed6(dfs) << "\n";
    out << "mssd: " << fixed6(mssd) << "\n";
    return out.str();
}

CoverageReport coverage_compare(const Netlist& original, const Netlist& dfs_instrumented,
                                const Netlist& mssd_instrumented, std::size_t budget,
                                std::uint64_t seed) {
    if (budget < 1) throw std::invalid_argument("coverage_compare: pattern budget must be at least 1");
    CoverageReport r;
    r.budget = budget;
    r.seed = seed;
    r.original = budgeted_coverage(original, budget, seed);
    r.dfs = budgeted_coverage(dfs_instrumented, budget, seed);
    r.mssd = budgeted_coverage(mssd_instrumented, budget, seed);
    return r;
}

} // namespace scanleak
