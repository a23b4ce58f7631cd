#include "scanleak/chip.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <stdexcept>

#include "scanleak/rng.hpp"

namespace scanleak {

const char* defense_name(DefenseVariant v) {
    return v == DefenseVariant::Dfs ? "dfs" : "mssd";
}

bool sd_value(bool test, bool se, bool test_stable) {
    return test && se && test_stable;
}

// --- ScanChainLayout -------------------------------------------------------

std::size_t ScanChainLayout::total_cells() const {
    std::size_t n = 0;
    for (const auto& c : chains) n += c.size();
    return n;
}

std::pair<std::uint32_t, std::uint32_t> ScanChainLayout::find_sc(std::uint32_t key_index) const {
    for (std::uint32_t c = 0; c < chains.size(); ++c)
        for (std::uint32_t p = 0; p < chains[c].size(); ++p)
            if (chains[c][p].kind == CellKind::Sc && chains[c][p].index == key_index)
                return {c, p};
    throw std::out_of_range("layout: no secure cell for key bit " + std::to_string(key_index));
}

std::pair<std::uint32_t, std::uint32_t> ScanChainLayout::find_rc(std::uint32_t flop_index) const {
    for (std::uint32_t c = 0; c < chains.size(); ++c)
        for (std::uint32_t p = 0; p < chains[c].size(); ++p)
            if (chains[c][p].kind == CellKind::Rc && chains[c][p].index == flop_index)
                return {c, p};
    throw std::out_of_range("layout: no cell for flop " + std::to_string(flop_index));
}

void ScanChainLayout::validate(const LockedDesign& d) const {
    const std::size_t n_flops = d.netlist.flops().size();
    const std::size_t n_keys = d.key_bits();
    std::vector<int> seen_flop(n_flops, 0), seen_key(n_keys, 0);
    for (const auto& chain : chains) {
        for (const ChainCell& cell : chain) {
            if (cell.kind == CellKind::Rc) {
                if (cell.index >= n_flops)
                    throw std::invalid_argument("layout: flop index out of range");
                ++seen_flop[cell.index];
            } else {
                if (cell.index >= n_keys)
                    throw std::invalid_argument("layout: key index out of range");
                ++seen_key[cell.index];
            }
        }
    }
    for (std::size_t f = 0; f < n_flops; ++f)
        if (seen_flop[f] != 1)
            throw std::invalid_argument("layout: flop " + d.netlist.net_name(d.netlist.flops()[f].q) +
                                        (seen_flop[f] ? " appears more than once" : " missing"));
    for (std::size_t k = 0; k < n_keys; ++k)
        if (seen_key[k] != 1)
            throw std::invalid_argument("layout: key bit " + std::to_string(k) +
                                        (seen_key[k] ? " appears more than once" : " missing"));
}

std::string ScanChainLayout::to_text(const LockedDesign& d) const {
    std::ostringstream out;
    out << "# scanleak layout v1\n";
    for (std::size_t c = 0; c < chains.size(); ++c) {
        out << "chain " << c << ":";
        for (const ChainCell& cell : chains[c]) {
            if (cell.kind == CellKind::Rc)
                out << " RC:" << d.netlist.net_name(d.netlist.flops()[cell.index].q);
            else
                out << " SC:" << cell.index;
        }
        out << "\n";
    }
    return out.str();
}

ScanChainLayout ScanChainLayout::parse_text(std::string_view text, const LockedDesign& d) {
    // Map flop q-net names to flop indices once.
    std::unordered_map<std::string_view, std::uint32_t> flop_by_name;
    for (std::uint32_t f = 0; f < d.netlist.flops().size(); ++f)
        flop_by_name.emplace(d.netlist.net_name(d.netlist.flops()[f].q), f);

    ScanChainLayout layout;
    std::size_t pos = 0;
    int line_no = 0;
    bool saw_header = false;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (!saw_header) {
                if (line.find("scanleak layout v1") == std::string_view::npos)
                    throw std::invalid_argument("layout line 1: expected \"# scanleak layout v1\" header");
                saw_header = true;
            }
            continue;
        }
        if (!saw_header)
            throw std::invalid_argument("layout line " + std::to_string(line_no) +
                                        ": missing \"# scanleak layout v1\" header");
        std::size_t colon = line.find(':');
        if (colon == std::string_view::npos || line.substr(0, 5) != "chain")
            throw std::invalid_argument("layout line " + std::to_string(line_no) +
                                        ": expected \"chain <n>: ...\"");
        std::istringstream cells(std::string(line.substr(colon + 1)));
        std::vector<ChainCell> chain;
        std::string tok;
        while (cells >> tok) {
            std::size_t sep = tok.find(':');
            if (sep == std::string::npos)
                throw std::invalid_argument("layout line " + std::to_string(line_no) +
                                            ": bad cell token \"" + tok + "\"");
            std::string kind = tok.substr(0, sep);
            std::string arg = tok.substr(sep + 1);
            if (kind == "RC") {
                auto it = flop_by_name.find(arg);
                if (it == flop_by_name.end())
                    throw std::invalid_argument("layout line " + std::to_string(line_no) +
                                                ": unknown flop \"" + arg + "\"");
                chain.push_back({CellKind::Rc, it->second});
            } else if (kind == "SC") {
                std::uint32_t k = 0;
                auto [p, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), k);
                if (ec != std::errc() || p != arg.data() + arg.size())
                    throw std::invalid_argument("layout line " + std::to_string(line_no) +
                                                ": bad key index \"" + arg + "\"");
                chain.push_back({CellKind::Sc, k});
            } else {
                throw std::invalid_argument("layout line " + std::to_string(line_no) +
                                            ": unknown cell kind \"" + kind + "\"");
            }
        }
        layout.chains.push_back(std::move(chain));
    }
    layout.validate(d);
    return layout;
}

ScanChainLayout stitch(const LockedDesign& d, std::uint32_t n_chains, std::uint64_t seed,
                       const StitchPolicy& policy) {
    const std::size_t n_flops = d.netlist.flops().size();
    const std::size_t n_keys = d.key_bits();
    const std::size_t total = n_flops + n_keys;
    if (n_chains < 1)
        throw std::invalid_argument("stitch: need at least one chain");
    if (n_chains > total)
        throw std::invalid_argument("stitch: " + std::to_string(n_chains) + " chains exceed " +
                                    std::to_string(total) + " cells");

    std::vector<ChainCell> master;
    if (policy.explicit_master) {
        master = *policy.explicit_master;
        if (master.size() != total)
            throw std::invalid_argument("stitch: explicit cell order has wrong length");
    } else {
        // Secure cells dropped at seed-chosen slots among the flops, key order
        // following chain order.
        Rng rng(seed ^ 0x5c1c5eedULL);
        std::vector<std::uint32_t> slots = rng.sample_indices(total, n_keys);
        std::sort(slots.begin(), slots.end());
        master.reserve(total);
        std::uint32_t next_flop = 0, next_key = 0;
        for (std::size_t j = 0; j < total; ++j) {
            if (next_key < n_keys && slots[next_key] == j)
                master.push_back({CellKind::Sc, next_key++});
            else
                master.push_back({CellKind::Rc, next_flop++});
        }
    }

    ScanChainLayout layout;
    layout.chains.resize(n_chains);
    for (std::size_t j = 0; j < master.size(); ++j)
        layout.chains[j % n_chains].push_back(master[j]);
    layout.validate(d);
    return layout;
}

// --- ChipSession -----------------------------------------------------------

ChipSession::ChipSession(const LockedDesign& locked, const ScanChainLayout& layout,
                         DefenseVariant variant, ModeInputs boot_mode, std::uint64_t seed)
    : locked_(locked), layout_(layout), variant_(variant), seed_(seed) {
    layout_.validate(locked_);
    if (locked_.hidden_key.size() != locked_.key_bits())
        throw std::invalid_argument("chip: design carries no hidden key");

    // Primary-input plumbing: key inputs are fed from secure cells, the rest
    // from the pi argument in declaration order.
    std::unordered_map<NetId, std::uint32_t> key_of_net;
    for (std::uint32_t k = 0; k < locked_.key_inputs.size(); ++k)
        key_of_net.emplace(locked_.key_inputs[k], k);
    const auto& pis = locked_.netlist.pis();
    pi_slot_.assign(pis.size(), -1);
    key_of_pi_.assign(pis.size(), 0);
    for (std::size_t i = 0; i < pis.size(); ++i) {
        auto it = key_of_net.find(pis[i]);
        if (it == key_of_net.end())
            pi_slot_[i] = static_cast<std::int64_t>(pi_count_++);
        else
            key_of_pi_[i] = it->second;
    }

    sc_pos_.resize(locked_.key_bits());
    flop_pos_.resize(locked_.netlist.flops().size());
    for (std::uint32_t c = 0; c < layout_.chains.size(); ++c)
        for (std::uint32_t p = 0; p < layout_.chains[c].size(); ++p) {
            const ChainCell& cell = layout_.chains[c][p];
            (cell.kind == CellKind::Sc ? sc_pos_[cell.index] : flop_pos_[cell.index]) = {c, p};
        }

    scratch_values_.resize(locked_.netlist.net_count());
    power_on(boot_mode);
}

void ChipSession::power_on(ModeInputs mode) {
    cells_.assign(layout_.chains.size(), {});
    for (std::size_t c = 0; c < layout_.chains.size(); ++c)
        cells_[c].assign(layout_.chains[c].size(), 0);
    prev_test_ = mode.test;
    prev_se_ = mode.se;
    srb_sticky_ = false;
    test_cont_high_ = (mode.test == 1);
    cg_countdown_ = 0;
    ++pin_ops_;
}

void ChipSession::bookkeeping(ModeInputs m, bool& sd_out) {
    const bool posedge = (prev_test_ == 0 && m.test == 1);
    if (variant_ == DefenseVariant::Dfs) {
        if (posedge) srb_sticky_ = true;
        sd_out = false;
    } else {
        test_cont_high_ = test_cont_high_ && (m.test == 1);
        sd_out = sd_value(m.test != 0, m.se != 0, test_cont_high_);
    }
    prev_test_ = m.test;
    prev_se_ = m.se;
}

ChipSession::Eval ChipSession::eval(std::span<const std::uint8_t> pi) {
    if (pi.size() != pi_count_)
        throw std::invalid_argument("chip: expected " + std::to_string(pi_count_) +
                                    " primary-input bits, got " + std::to_string(pi.size()));
    const auto& pis = locked_.netlist.pis();
    scratch_pi_.resize(pis.size());
    for (std::size_t i = 0; i < pis.size(); ++i) {
        if (pi_slot_[i] >= 0) {
            scratch_pi_[i] = pi[static_cast<std::size_t>(pi_slot_[i])];
        } else {
            auto [c, p] = sc_pos_[key_of_pi_[i]];
            scratch_pi_[i] = cells_[c][p];
        }
    }
    scratch_state_.resize(flop_pos_.size());
    for (std::size_t f = 0; f < flop_pos_.size(); ++f) {
        auto [c, p] = flop_pos_[f];
        scratch_state_[f] = cells_[c][p];
    }
    Eval ev;
    locked_.netlist.eval_bool_into(scratch_pi_, scratch_state_, scratch_values_, ev.po,
                                   ev.next_state);
    return ev;
}

std::uint8_t ChipSession::chain_out_raw(std::uint32_t c, ModeInputs m,
                                        std::span<const std::uint8_t> si) const {
    // Walk the bypass muxes: with test low a secure cell passes its chain
    // input straight through; otherwise every cell drives its own content.
    std::uint8_t cur = si.empty() ? 0 : si[c];
    for (std::uint32_t p = 0; p < layout_.chains[c].size(); ++p) {
        const ChainCell& cell = layout_.chains[c][p];
        if (cell.kind == CellKind::Sc && m.test == 0) continue;
        cur = cells_[c][p];
    }
    return cur;
}

ChipSession::StepOut ChipSession::step(ModeInputs m, std::span<const std::uint8_t> pi,
                                       std::span<const std::uint8_t> si) {
    if (si.size() != layout_.chains.size())
        throw std::invalid_argument("chip: expected " + std::to_string(layout_.chains.size()) +
                                    " scan-in bits, got " + std::to_string(si.size()));
    ++pin_ops_;

    const bool from_m2 = (prev_test_ == 1 && prev_se_ == 1);
    bool sd = false;
    bookkeeping(m, sd);
    if (variant_ == DefenseVariant::Mssd && from_m2 && m.test == 0 && m.se == 0)
        cg_countdown_ = 1;

    // Outputs reflect the state before the clock edge.
    Eval ev = eval(pi);
    const bool masked = variant_ == DefenseVariant::Dfs ? (m.test == 0 || srb_sticky_) : !sd;
    std::vector<std::uint8_t> so(layout_.chains.size());
    for (std::uint32_t c = 0; c < layout_.chains.size(); ++c)
        so[c] = masked ? 1 : chain_out_raw(c, m, si);

    // Commit the edge: every new value is computed from the pre-edge snapshot.
    std::vector<std::vector<std::uint8_t>> next = cells_;
    const bool rc_shift = variant_ == DefenseVariant::Dfs ? (m.se == 1) : sd;
    const bool sc_shift =
        (m.test == 1 && m.se == 1) && (variant_ == DefenseVariant::Dfs || sd);
    const bool rc_gated = variant_ == DefenseVariant::Mssd && cg_countdown_ == 1;
    for (std::uint32_t c = 0; c < layout_.chains.size(); ++c) {
        const auto& chain = layout_.chains[c];
        for (std::uint32_t p = 0; p < chain.size(); ++p) {
            const ChainCell& cell = chain[p];
            if (cell.kind == CellKind::Sc) {
                if (m.test == 0 && m.se == 0) {
                    next[c][p] = locked_.hidden_key[cell.index];
                } else if (sc_shift) {
                    next[c][p] = (p == 0) ? si[c] : cells_[c][p - 1];
                } // else hold
            } else {
                if (rc_gated) continue; // one-cycle clock gate: hold
                if (rc_shift) {
                    if (m.test == 1) {
                        next[c][p] = (p == 0) ? si[c] : cells_[c][p - 1];
                    } else {
                        // Secure cells are bypassed: take the nearest regular
                        // cell upstream, or scan-in past a prefix of them.
                        std::uint8_t src = si[c];
                        for (std::uint32_t q = p; q-- > 0;) {
                            if (chain[q].kind == CellKind::Rc) {
                                src = cells_[c][q];
                                break;
                            }
                        }
                        next[c][p] = src;
                    }
                } else {
                    next[c][p] = ev.next_state[cell.index];
                }
            }
        }
    }
    if (rc_gated) cg_countdown_ = 0;
    cells_ = std::move(next);

    if (trace_) {
        TraceRecord r;
        r.clocked = true;
        r.mode = m;
        r.pi.assign(pi.begin(), pi.end());
        r.si.assign(si.begin(), si.end());
        r.po = ev.po;
        r.so = so;
        r.so_masked = masked;
        trace_->push_back(std::move(r));
    }
    return {std::move(ev.po), std::move(so)};
}

std::vector<std::uint8_t> ChipSession::observe(ModeInputs m, std::span<const std::uint8_t> pi) {
    ++pin_ops_;
    bool sd = false;
    bookkeeping(m, sd);
    Eval ev = eval(pi);
    if (trace_) {
        TraceRecord r;
        r.clocked = false;
        r.mode = m;
        r.pi.assign(pi.begin(), pi.end());
        r.po = ev.po;
        trace_->push_back(std::move(r));
    }
    return std::move(ev.po);
}

std::uint8_t ChipSession::peek_cell(std::uint32_t chain, std::uint32_t pos) const {
    return cells_.at(chain).at(pos);
}

} // namespace scanleak
