#include "scanleak/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <sstream>

namespace scanleak {

const char* gate_kind_name(GateKind k) {
    switch (k) {
        case GateKind::And: return "AND";
        case GateKind::Nand: return "NAND";
        case GateKind::Or: return "OR";
        case GateKind::Nor: return "NOR";
        case GateKind::Xor: return "XOR";
        case GateKind::Xnor: return "XNOR";
        case GateKind::Not: return "NOT";
        case GateKind::Buf: return "BUF";
    }
    return "?";
}

ParseError::ParseError(int line_, int col_, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line_) + ", col " +
                         std::to_string(col_) + ": " + msg),
      line(line_),
      col(col_) {}

bool Cone::contains_pi(NetId n) const {
    return std::binary_search(pis.begin(), pis.end(), n);
}

bool Cone::contains_flop(std::uint32_t f) const {
    return std::binary_search(flops.begin(), flops.end(), f);
}

std::optional<NetId> Netlist::find_net(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::uint32_t> Netlist::pi_index(NetId n) const {
    if (n < driver_kind_.size() && driver_kind_[n] == DriverKind::PrimaryInput)
        return driver_index_[n];
    return std::nullopt;
}

Ternary eval_gate_ternary(GateKind kind, std::span<const Ternary> ins) {
    switch (kind) {
        case GateKind::And:
        case GateKind::Nand: {
            Ternary acc = Ternary::T;
            for (Ternary v : ins) acc = t_and(acc, v);
            return kind == GateKind::And ? acc : t_not(acc);
        }
        case GateKind::Or:
        case GateKind::Nor: {
            Ternary acc = Ternary::F;
            for (Ternary v : ins) acc = t_or(acc, v);
            return kind == GateKind::Or ? acc : t_not(acc);
        }
        case GateKind::Xor:
            return t_xor(ins[0], ins[1]);
        case GateKind::Xnor:
            return t_not(t_xor(ins[0], ins[1]));
        case GateKind::Not:
            return t_not(ins[0]);
        case GateKind::Buf:
            return ins[0];
    }
    return Ternary::X;
}

static std::uint8_t eval_gate_bool(GateKind kind,
                                   const std::vector<NetId>& ins,
                                   const std::vector<std::uint8_t>& val) {
    switch (kind) {
        case GateKind::And:
        case GateKind::Nand: {
            std::uint8_t acc = 1;
            for (NetId n : ins) acc &= val[n];
            return kind == GateKind::And ? acc : static_cast<std::uint8_t>(acc ^ 1u);
        }
        case GateKind::Or:
        case GateKind::Nor: {
            std::uint8_t acc = 0;
            for (NetId n : ins) acc |= val[n];
            return kind == GateKind::Or ? acc : static_cast<std::uint8_t>(acc ^ 1u);
        }
        case GateKind::Xor:
            return val[ins[0]] ^ val[ins[1]];
        case GateKind::Xnor:
            return static_cast<std::uint8_t>(val[ins[0]] ^ val[ins[1]] ^ 1u);
        case GateKind::Not:
            return static_cast<std::uint8_t>(val[ins[0]] ^ 1u);
        case GateKind::Buf:
            return val[ins[0]];
    }
    return 0;
}

void Netlist::eval_bool_into(std::span<const std::uint8_t> pi,
                             std::span<const std::uint8_t> state,
                             std::vector<std::uint8_t>& values,
                             std::vector<std::uint8_t>& po,
                             std::vector<std::uint8_t>& next_state) const {
    if (pi.size() != pis_.size() || state.size() != flops_.size())
        throw std::invalid_argument("eval_bool: input vector sizes do not match netlist");
    values.assign(net_count(), 0);
    for (std::size_t i = 0; i < pis_.size(); ++i) values[pis_[i]] = pi[i] ? 1 : 0;
    for (std::size_t i = 0; i < flops_.size(); ++i) values[flops_[i].q] = state[i] ? 1 : 0;
    for (std::uint32_t gi : topo_) {
        const Gate& g = gates_[gi];
        values[g.output] = eval_gate_bool(g.kind, g.inputs, values);
    }
    po.clear();
    po.reserve(pos_.size());
    for (NetId n : pos_) po.push_back(values[n]);
    next_state.clear();
    next_state.reserve(flops_.size());
    for (const Flop& f : flops_) next_state.push_back(values[f.d]);
}

EvalResult Netlist::eval_bool(std::span<const std::uint8_t> pi,
                              std::span<const std::uint8_t> state) const {
    EvalResult r;
    std::vector<std::uint8_t> scratch;
    eval_bool_into(pi, state, scratch, r.po, r.next_state);
    return r;
}

TernaryEvalResult Netlist::eval_ternary(std::span<const Ternary> pi,
                                        std::span<const Ternary> state) const {
    if (pi.size() != pis_.size() || state.size() != flops_.size())
        throw std::invalid_argument("eval_ternary: input vector sizes do not match netlist");
    std::vector<Ternary> values(net_count(), Ternary::X);
    for (std::size_t i = 0; i < pis_.size(); ++i) values[pis_[i]] = pi[i];
    for (std::size_t i = 0; i < flops_.size(); ++i) values[flops_[i].q] = state[i];
    std::vector<Ternary> ins;
    for (std::uint32_t gi : topo_) {
        const Gate& g = gates_[gi];
        ins.clear();
        for (NetId n : g.inputs) ins.push_back(values[n]);
        values[g.output] = eval_gate_ternary(g.kind, ins);
    }
    TernaryEvalResult r;
    for (NetId n : pos_) r.po.push_back(values[n]);
    for (const Flop& f : flops_) r.next_state.push_back(values[f.d]);
    return r;
}

Cone Netlist::fanin_cone(NetId po) const {
    if (po >= net_count()) throw std::invalid_argument("fanin_cone: no such net");
    Cone c;
    c.po = po;
    std::vector<std::uint8_t> seen(net_count(), 0);
    std::vector<std::uint8_t> gate_seen(gates_.size(), 0);
    std::deque<NetId> work{po};
    seen[po] = 1;
    while (!work.empty()) {
        NetId n = work.front();
        work.pop_front();
        switch (driver_kind_[n]) {
            case DriverKind::PrimaryInput:
                c.pis.push_back(n);
                break;
            case DriverKind::FlopOutput:
                c.flops.push_back(driver_index_[n]);
                break;
            case DriverKind::GateOutput: {
                std::uint32_t gi = driver_index_[n];
                if (!gate_seen[gi]) {
                    gate_seen[gi] = 1;
                    for (NetId in : gates_[gi].inputs) {
                        if (!seen[in]) {
                            seen[in] = 1;
                            work.push_back(in);
                        }
                    }
                }
                break;
            }
            case DriverKind::None:
                throw std::logic_error("fanin_cone: undriven net survived validation");
        }
    }
    std::sort(c.pis.begin(), c.pis.end());
    std::sort(c.flops.begin(), c.flops.end());
    // Keep the global topological order restricted to cone members.
    for (std::uint32_t gi : topo_)
        if (gate_seen[gi]) c.gates.push_back(gi);
    return c;
}

// ---------------------------------------------------------------------------
// builder

void NetlistBuilder::add_pi(const std::string& name, int line) {
    pi_names_.emplace_back(name, line);
}

void NetlistBuilder::add_po(const std::string& name, int line) {
    po_names_.emplace_back(name, line);
}

void NetlistBuilder::add_flop(const std::string& q, const std::string& d, int line) {
    flops_.push_back({q, d, line});
}

void NetlistBuilder::add_gate(GateKind kind, const std::string& output,
                              const std::vector<std::string>& inputs, int line) {
    if ((kind == GateKind::Not || kind == GateKind::Buf) && inputs.size() != 1)
        throw ParseError(line, 1, std::string(gate_kind_name(kind)) + " takes exactly one input");
    if ((kind == GateKind::Xor || kind == GateKind::Xnor) && inputs.size() != 2)
        throw ParseError(line, 1, std::string(gate_kind_name(kind)) + " takes exactly two inputs");
    if (inputs.empty())
        throw ParseError(line, 1, "gate with no inputs");
    gates_.push_back({kind, output, inputs, line});
}

Netlist NetlistBuilder::build() {
    Netlist n;
    auto intern = [&n](const std::string& name) -> NetId {
        auto it = n.by_name_.find(name);
        if (it != n.by_name_.end()) return it->second;
        NetId id = static_cast<NetId>(n.names_.size());
        n.names_.push_back(name);
        n.by_name_.emplace(name, id);
        return id;
    };

    // Intern everything first so error messages can reference any name.
    for (auto& [name, line] : pi_names_) intern(name);
    for (auto& g : gates_) {
        intern(g.output);
        for (auto& in : g.inputs) intern(in);
    }
    for (auto& f : flops_) {
        intern(f.q);
        intern(f.d);
    }
    for (auto& [name, line] : po_names_) {
        if (!n.by_name_.count(name))
            throw ParseError(line, 1, "output '" + name + "' references an undriven net");
        (void)intern(name);
    }

    n.driver_kind_.assign(n.names_.size(), DriverKind::None);
    n.driver_index_.assign(n.names_.size(), 0);
    auto claim = [&n](NetId id, DriverKind kind, std::uint32_t index, int line) {
        if (n.driver_kind_[id] != DriverKind::None)
            throw ParseError(line, 1, "net '" + n.names_[id] + "' has more than one driver");
        n.driver_kind_[id] = kind;
        n.driver_index_[id] = index;
    };

    for (std::size_t i = 0; i < pi_names_.size(); ++i) {
        auto& [name, line] = pi_names_[i];
        NetId id = n.by_name_.at(name);
        claim(id, DriverKind::PrimaryInput, static_cast<std::uint32_t>(i), line);
        n.pis_.push_back(id);
    }
    for (std::size_t i = 0; i < gates_.size(); ++i) {
        NetId id = n.by_name_.at(gates_[i].output);
        claim(id, DriverKind::GateOutput, static_cast<std::uint32_t>(i), gates_[i].line);
        Gate g;
        g.kind = gates_[i].kind;
        g.output = id;
        for (auto& in : gates_[i].inputs) g.inputs.push_back(n.by_name_.at(in));
        n.gates_.push_back(std::move(g));
    }
    for (std::size_t i = 0; i < flops_.size(); ++i) {
        NetId q = n.by_name_.at(flops_[i].q);
        claim(q, DriverKind::FlopOutput, static_cast<std::uint32_t>(i), flops_[i].line);
        n.flops_.push_back({n.by_name_.at(flops_[i].d), q});
    }
    for (auto& [name, line] : po_names_) n.pos_.push_back(n.by_name_.at(name));

    // Every net must be driven.
    for (NetId id = 0; id < n.names_.size(); ++id) {
        if (n.driver_kind_[id] == DriverKind::None) {
            int line = 1;
            for (auto& g : gates_)
                for (auto& in : g.inputs)
                    if (in == n.names_[id]) line = g.line;
            for (auto& f : flops_)
                if (f.d == n.names_[id]) line = f.line;
            throw ParseError(line, 1, "net '" + n.names_[id] + "' is referenced but never driven");
        }
    }

    // Topological order over gates; flop boundaries break cycles.
    std::vector<std::uint32_t> indeg(n.gates_.size(), 0);
    std::vector<std::vector<std::uint32_t>> out_edges(n.gates_.size());
    for (std::uint32_t gi = 0; gi < n.gates_.size(); ++gi) {
        for (NetId in : n.gates_[gi].inputs) {
            if (n.driver_kind_[in] == DriverKind::GateOutput) {
                out_edges[n.driver_index_[in]].push_back(gi);
                ++indeg[gi];
            }
        }
    }
    std::deque<std::uint32_t> ready;
    for (std::uint32_t gi = 0; gi < n.gates_.size(); ++gi)
        if (indeg[gi] == 0) ready.push_back(gi);
    while (!ready.empty()) {
        std::uint32_t gi = ready.front();
        ready.pop_front();
        n.topo_.push_back(gi);
        for (std::uint32_t succ : out_edges[gi])
            if (--indeg[succ] == 0) ready.push_back(succ);
    }
    if (n.topo_.size() != n.gates_.size()) {
        for (std::uint32_t gi = 0; gi < n.gates_.size(); ++gi) {
            if (indeg[gi] != 0)
                throw ParseError(gates_[gi].line, 1,
                                 "combinational cycle through net '" +
                                     n.names_[n.gates_[gi].output] + "'");
        }
    }
    return n;
}

// ---------------------------------------------------------------------------
// bench text

namespace {

struct Cursor {
    std::string_view text;
    std::size_t pos = 0;
    int line = 1;
    int col = 1;
};

bool is_name_char(char c) {
    return !std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')' &&
           c != ',' && c != '=' && c != '#';
}

GateKind parse_gate_kind(const std::string& word, int line, int col) {
    std::string up;
    for (char c : word) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (up == "AND") return GateKind::And;
    if (up == "NAND") return GateKind::Nand;
    if (up == "OR") return GateKind::Or;
    if (up == "NOR") return GateKind::Nor;
    if (up == "XOR") return GateKind::Xor;
    if (up == "XNOR") return GateKind::Xnor;
    if (up == "NOT" || up == "INV") return GateKind::Not;
    if (up == "BUF" || up == "BUFF") return GateKind::Buf;
    throw ParseError(line, col, "unknown gate type '" + word + "'");
}

} // namespace

Netlist Netlist::parse_bench(std::string_view text) {
    NetlistBuilder b;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos
                                                     ? std::string_view::npos
                                                     : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);

        std::size_t i = 0;
        auto skip_ws = [&] {
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        };
        auto read_name = [&]() -> std::string {
            skip_ws();
            std::size_t start = i;
            while (i < line.size() && is_name_char(line[i])) ++i;
            if (i == start)
                throw ParseError(line_no, static_cast<int>(i + 1), "expected a net name");
            return std::string(line.substr(start, i - start));
        };
        auto expect = [&](char c) {
            skip_ws();
            if (i >= line.size() || line[i] != c)
                throw ParseError(line_no, static_cast<int>(i + 1),
                                 std::string("expected '") + c + "'");
            ++i;
        };

        skip_ws();
        if (i >= line.size()) continue;

        std::size_t word_start = i;
        std::string first = read_name();
        skip_ws();

        std::string upper;
        for (char c : first)
            upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));

        if ((upper == "INPUT" || upper == "OUTPUT") && i < line.size() && line[i] == '(') {
            expect('(');
            std::string name = read_name();
            expect(')');
            skip_ws();
            if (i < line.size())
                throw ParseError(line_no, static_cast<int>(i + 1), "trailing text after declaration");
            if (upper == "INPUT")
                b.add_pi(name, line_no);
            else
                b.add_po(name, line_no);
            continue;
        }

        if (i >= line.size() || line[i] != '=')
            throw ParseError(line_no, static_cast<int>(word_start + 1),
                             "expected INPUT(...), OUTPUT(...) or an assignment");
        ++i; // '='
        skip_ws();
        std::size_t func_start = i;
        std::string func = read_name();
        expect('(');
        std::vector<std::string> args;
        args.push_back(read_name());
        skip_ws();
        while (i < line.size() && line[i] == ',') {
            ++i;
            args.push_back(read_name());
            skip_ws();
        }
        expect(')');
        skip_ws();
        if (i < line.size())
            throw ParseError(line_no, static_cast<int>(i + 1), "trailing text after gate");

        std::string func_up;
        for (char c : func)
            func_up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        if (func_up == "DFF") {
            if (args.size() != 1)
                throw ParseError(line_no, static_cast<int>(func_start + 1),
                                 "DFF takes exactly one input");
            b.add_flop(first, args[0], line_no);
        } else {
            b.add_gate(parse_gate_kind(func, line_no, static_cast<int>(func_start + 1)),
                       first, args, line_no);
        }
    }
    return b.build();
}

std::string Netlist::to_bench() const {
    std::ostringstream out;
    for (NetId n : pis_) out << "INPUT(" << names_[n] << ")\n";
    for (NetId n : pos_) out << "OUTPUT(" << names_[n] << ")\n";
    for (const Flop& f : flops_)
        out << names_[f.q] << " = DFF(" << names_[f.d] << ")\n";
    for (const Gate& g : gates_) {
        out << names_[g.output] << " = " << gate_kind_name(g.kind) << "(";
        for (std::size_t i = 0; i < g.inputs.size(); ++i) {
            if (i) out << ", ";
            out << names_[g.inputs[i]];
        }
        out << ")\n";
    }
    return out.str();
}

} // namespace scanleak
