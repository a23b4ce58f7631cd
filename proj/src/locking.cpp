#include "scanleak/locking.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "scanleak/rng.hpp"

namespace scanleak {

namespace {

// Internal nets eligible to host a key gate: combinational gate outputs.
// PI nets and flop Q nets stay untouched so the scan structure is unaffected.
std::vector<NetId> host_candidates(const Netlist& n) {
    std::vector<NetId> out;
    for (const Gate& g : n.gates()) out.push_back(g.output);
    std::sort(out.begin(), out.end());
    return out;
}

std::string fresh_name(const Netlist& n, const std::string& base) {
    std::string name = base;
    while (n.find_net(name).has_value()) name += "_";
    return name;
}

// Rebuild the netlist with a key gate spliced onto each host net.
LockedDesign build_locked(const Netlist& n, const std::vector<NetId>& hosts, Rng& rng) {
    const auto K = static_cast<std::uint32_t>(hosts.size());
    std::vector<std::uint8_t> key(K);
    for (auto& b : key) b = rng.bit() ? 1 : 0;

    // host net id -> key index
    std::map<NetId, std::uint32_t> host_key;
    for (std::uint32_t i = 0; i < K; ++i) host_key[hosts[i]] = i;

    NetlistBuilder b;
    for (NetId p : n.pis()) b.add_pi(n.net_name(p));
    for (std::uint32_t i = 0; i < K; ++i) b.add_pi("keyinput" + std::to_string(i));
    for (NetId p : n.pos()) b.add_po(n.net_name(p));
    for (const Flop& f : n.flops()) b.add_flop(n.net_name(f.q), n.net_name(f.d));

    std::vector<KeyGateRecord> records(K);
    std::uint32_t emitted = 0;
    for (const Gate& g : n.gates()) {
        std::vector<std::string> ins;
        ins.reserve(g.inputs.size());
        for (NetId in : g.inputs) ins.push_back(n.net_name(in));
        auto it = host_key.find(g.output);
        if (it == host_key.end()) {
            b.add_gate(g.kind, n.net_name(g.output), ins);
            ++emitted;
            continue;
        }
        const std::uint32_t k = it->second;
        const std::string host = n.net_name(g.output);
        const std::string raw = fresh_name(n, host + "__pre" + std::to_string(k));
        b.add_gate(g.kind, raw, ins);
        ++emitted;
        records[k] = KeyGateRecord{k, emitted, host, key[k] != 0};
        b.add_gate(key[k] ? GateKind::Xnor : GateKind::Xor, host,
                   {raw, "keyinput" + std::to_string(k)});
        ++emitted;
    }

    LockedDesign d;
    d.netlist = b.build();
    d.key_gates = std::move(records);
    d.hidden_key = std::move(key);
    d.key_inputs.resize(K);
    for (std::uint32_t i = 0; i < K; ++i)
        d.key_inputs[i] = *d.netlist.find_net("keyinput" + std::to_string(i));
    return d;
}

void check_key_count(std::uint32_t key_bits, std::size_t candidates) {
    if (key_bits == 0) throw std::invalid_argument("locking: key must have at least one bit");
    if (key_bits > candidates)
        throw std::invalid_argument("locking: " + std::to_string(key_bits) +
                                    " key bits requested but only " + std::to_string(candidates) +
                                    " internal nets available");
}

// Fan-out cone of each candidate as a gate bitset, for overlap scoring.
std::vector<std::vector<std::uint64_t>> fanout_bitsets(const Netlist& n,
                                                       const std::vector<NetId>& cands) {
    const std::size_t G = n.gates().size();
    const std::size_t words = (G + 63) / 64;

    // net -> consuming gate indices
    std::vector<std::vector<std::uint32_t>> sinks(n.net_count());
    for (std::uint32_t gi = 0; gi < G; ++gi)
        for (NetId in : n.gates()[gi].inputs) sinks[in].push_back(gi);

    std::vector<std::vector<std::uint64_t>> bits(cands.size(),
                                                 std::vector<std::uint64_t>(words, 0));
    std::vector<std::uint32_t> stack;
    std::vector<std::uint8_t> seen(G);
    for (std::size_t c = 0; c < cands.size(); ++c) {
        std::fill(seen.begin(), seen.end(), 0);
        stack.clear();
        for (std::uint32_t gi : sinks[cands[c]])
            if (!seen[gi]) {
                seen[gi] = 1;
                stack.push_back(gi);
            }
        while (!stack.empty()) {
            std::uint32_t gi = stack.back();
            stack.pop_back();
            bits[c][gi / 64] |= 1ull << (gi % 64);
            for (std::uint32_t next : sinks[n.gates()[gi].output])
                if (!seen[next]) {
                    seen[next] = 1;
                    stack.push_back(next);
                }
        }
    }
    return bits;
}

std::uint64_t overlap(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
    std::uint64_t s = 0;
    for (std::size_t w = 0; w < a.size(); ++w) s += static_cast<std::uint64_t>(__builtin_popcountll(a[w] & b[w]));
    return s;
}

} // namespace

LockedDesign lock_rll(const Netlist& n, std::uint32_t key_bits, std::uint64_t seed) {
    std::vector<NetId> cands = host_candidates(n);
    check_key_count(key_bits, cands.size());
    Rng rng(seed);
    std::vector<std::uint32_t> picks =
        rng.sample_indices(static_cast<std::uint32_t>(cands.size()), key_bits);
    std::vector<NetId> hosts;
    hosts.reserve(key_bits);
    for (std::uint32_t i : picks) hosts.push_back(cands[i]);
    return build_locked(n, hosts, rng);
}

std::uint64_t interference_score(const Netlist& n, std::span<const NetId> hosts) {
    std::vector<NetId> cands(hosts.begin(), hosts.end());
    auto bits = fanout_bitsets(n, cands);
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < bits.size(); ++i)
        for (std::size_t j = i + 1; j < bits.size(); ++j) s += overlap(bits[i], bits[j]);
    return s;
}

LockedDesign lock_sll_heuristic(const Netlist& n, std::uint32_t key_bits, std::uint64_t seed) {
    std::vector<NetId> cands = host_candidates(n);
    check_key_count(key_bits, cands.size());
    Rng rng(seed);
    if (key_bits == 1) {
        std::vector<NetId> hosts{cands[rng.below(cands.size())]};
        return build_locked(n, hosts, rng);
    }

    auto bits = fanout_bitsets(n, cands);
    const std::size_t C = cands.size();

    // Seed the set with the highest-overlap pair, then grow by best marginal
    // gain; ties are resolved by a seeded draw.
    std::vector<std::size_t> chosen;
    std::vector<std::uint8_t> used(C, 0);
    {
        std::uint64_t best = 0;
        std::vector<std::pair<std::size_t, std::size_t>> ties;
        for (std::size_t i = 0; i < C; ++i)
            for (std::size_t j = i + 1; j < C; ++j) {
                std::uint64_t s = overlap(bits[i], bits[j]);
                if (s > best || ties.empty()) {
                    if (s > best) ties.clear();
                    best = s;
                    ties.emplace_back(i, j);
                } else if (s == best) {
                    ties.emplace_back(i, j);
                }
            }
        auto [i, j] = ties[rng.below(ties.size())];
        chosen = {i, j};
        used[i] = used[j] = 1;
    }
    // marginal[c] = sum of overlaps with the chosen set
    std::vector<std::uint64_t> marginal(C, 0);
    for (std::size_t c = 0; c < C; ++c)
        if (!used[c])
            for (std::size_t k : chosen) marginal[c] += overlap(bits[c], bits[k]);

    while (chosen.size() < key_bits) {
        std::uint64_t best = 0;
        std::vector<std::size_t> ties;
        for (std::size_t c = 0; c < C; ++c) {
            if (used[c]) continue;
            if (marginal[c] > best || ties.empty()) {
                if (marginal[c] > best) ties.clear();
                best = marginal[c];
                ties.push_back(c);
            } else if (marginal[c] == best) {
                ties.push_back(c);
            }
        }
        std::size_t pick = ties[rng.below(ties.size())];
        used[pick] = 1;
        chosen.push_back(pick);
        for (std::size_t c = 0; c < C; ++c)
            if (!used[c]) marginal[c] += overlap(bits[c], bits[pick]);
    }

    std::vector<NetId> hosts;
    hosts.reserve(key_bits);
    for (std::size_t c : chosen) hosts.push_back(cands[c]);
    std::sort(hosts.begin(), hosts.end()); // key index order independent of pick order
    return build_locked(n, hosts, rng);
}

Netlist apply_key(const LockedDesign& d, std::span<const std::uint8_t> key) {
    if (key.size() != d.key_inputs.size())
        throw std::invalid_argument("apply_key: key length " + std::to_string(key.size()) +
                                    " does not match design key length " +
                                    std::to_string(d.key_inputs.size()));
    const Netlist& n = d.netlist;
    std::set<NetId> key_nets(d.key_inputs.begin(), d.key_inputs.end());
    // gate index -> key index
    std::map<std::uint32_t, std::uint32_t> key_gates;
    for (const KeyGateRecord& r : d.key_gates) key_gates[r.gate_index] = r.key_index;

    NetlistBuilder b;
    for (NetId p : n.pis())
        if (!key_nets.count(p)) b.add_pi(n.net_name(p));
    for (NetId p : n.pos()) b.add_po(n.net_name(p));
    for (const Flop& f : n.flops()) b.add_flop(n.net_name(f.q), n.net_name(f.d));
    for (std::uint32_t gi = 0; gi < n.gates().size(); ++gi) {
        const Gate& g = n.gates()[gi];
        auto it = key_gates.find(gi);
        if (it == key_gates.end()) {
            std::vector<std::string> ins;
            ins.reserve(g.inputs.size());
            for (NetId in : g.inputs) ins.push_back(n.net_name(in));
            b.add_gate(g.kind, n.net_name(g.output), ins);
            continue;
        }
        const std::uint32_t k = it->second;
        const bool bit = key[k] != 0;
        const bool transparent = (g.kind == GateKind::Xnor) ? bit : !bit;
        // data input = the one that is not the key input net
        NetId data = g.inputs[0] == d.key_inputs[k] ? g.inputs[1] : g.inputs[0];
        b.add_gate(transparent ? GateKind::Buf : GateKind::Not, n.net_name(g.output),
                   {n.net_name(data)});
    }
    return b.build();
}

LockedDesign locked_from_netlist(Netlist n) {
    // keyinput<i> PIs define the key; indices must be dense from 0 and each
    // must feed exactly one XOR/XNOR.
    std::map<std::uint32_t, NetId> by_index;
    for (NetId p : n.pis()) {
        const std::string& name = n.net_name(p);
        if (name.rfind("keyinput", 0) != 0) continue;
        std::string_view digits(name);
        digits.remove_prefix(8);
        if (digits.empty() ||
            digits.find_first_not_of("0123456789") != std::string_view::npos)
            continue;
        by_index[static_cast<std::uint32_t>(std::stoul(std::string(digits)))] = p;
    }
    if (by_index.empty())
        throw std::invalid_argument("locked netlist: no keyinput<i> primary inputs found");
    std::vector<NetId> key_inputs;
    for (auto& [idx, id] : by_index) {
        if (idx != key_inputs.size())
            throw std::invalid_argument("locked netlist: keyinput indices are not dense at " +
                                        std::to_string(idx));
        key_inputs.push_back(id);
    }

    std::vector<KeyGateRecord> records(key_inputs.size());
    std::vector<bool> found(key_inputs.size(), false);
    for (std::uint32_t gi = 0; gi < n.gates().size(); ++gi) {
        const Gate& g = n.gates()[gi];
        for (NetId in : g.inputs) {
            auto it = std::find(key_inputs.begin(), key_inputs.end(), in);
            if (it == key_inputs.end()) continue;
            auto k = static_cast<std::uint32_t>(it - key_inputs.begin());
            if (found[k])
                throw std::invalid_argument("locked netlist: keyinput" + std::to_string(k) +
                                            " feeds more than one gate");
            if (g.kind != GateKind::Xor && g.kind != GateKind::Xnor)
                throw std::invalid_argument("locked netlist: keyinput" + std::to_string(k) +
                                            " feeds a non-XOR/XNOR gate");
            if (g.inputs.size() != 2)
                throw std::invalid_argument("locked netlist: key gate for keyinput" +
                                            std::to_string(k) + " is not 2-input");
            found[k] = true;
            records[k] = KeyGateRecord{k, gi, n.net_name(g.output), g.kind == GateKind::Xnor};
        }
    }
    for (std::size_t k = 0; k < found.size(); ++k)
        if (!found[k])
            throw std::invalid_argument("locked netlist: keyinput" + std::to_string(k) +
                                        " drives no gate");

    LockedDesign d;
    d.netlist = std::move(n);
    d.key_gates = std::move(records);
    d.key_inputs = std::move(key_inputs);
    return d;
}

std::string key_file_text(std::span<const std::uint8_t> key) {
    std::string out;
    out.reserve(key.size() * 2);
    for (std::uint8_t b : key) {
        out += b ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::vector<std::uint8_t> parse_key_file(std::string_view text) {
    std::vector<std::uint8_t> key;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        // trim
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
        if (line.empty() || line.front() == '#') continue;
        if (line == "0")
            key.push_back(0);
        else if (line == "1")
            key.push_back(1);
        else
            throw std::invalid_argument("key file line " + std::to_string(line_no) +
                                        ": expected 0 or 1");
    }
    if (key.empty()) throw std::invalid_argument("key file: no key bits found");
    return key;
}

} // namespace scanleak
