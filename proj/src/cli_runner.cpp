#include "scanleak/cli_runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "scanleak/attacks.hpp"
#include "scanleak/chip.hpp"
#include "scanleak/locking.hpp"
#include "scanleak/netlist.hpp"
#include "scanleak/report.hpp"

namespace scanleak {

namespace {

namespace fs = std::filesystem;

struct RunConfig {
    std::string bench;
    std::string locked;
    std::string key;
    std::string layout;
    std::string out_dir = ".";
    std::uint32_t key_bits = 8;
    std::string scheme = "rll";
    std::uint32_t chains = 1;
    std::string defense = "dfs";
    std::uint64_t seed_lock = 1;
    std::uint64_t seed_stitch = 1;
    std::uint64_t seed_attack = 1;
    std::uint64_t seed_coverage = 1;
    std::uint64_t dip_cap = 10000;
    std::size_t budget = 10000;
    bool timings = false;
};

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write " + path.string());
    out << content;
}

LockedDesign load_locked(const RunConfig& cfg) {
    LockedDesign locked = locked_from_netlist(Netlist::parse_bench(read_text(cfg.locked)));
    locked.hidden_key = parse_key_file(read_text(cfg.key));
    if (locked.hidden_key.size() != locked.key_bits())
        throw std::invalid_argument("key file holds " + std::to_string(locked.hidden_key.size()) +
                                    " bits but the design has " +
                                    std::to_string(locked.key_bits()) + " key inputs");
    return locked;
}

DefenseVariant parse_defense(const std::string& name) {
    return name == "mssd" ? DefenseVariant::Mssd : DefenseVariant::Dfs;
}

int cmd_lock(const RunConfig& cfg, std::ostream& out) {
    const Netlist n = Netlist::parse_bench(read_text(cfg.bench));
    const LockedDesign locked = cfg.scheme == "sll"
                                    ? lock_sll_heuristic(n, cfg.key_bits, cfg.seed_lock)
                                    : lock_rll(n, cfg.key_bits, cfg.seed_lock);
    std::vector<NetId> hosts;
    for (const KeyGateRecord& kg : locked.key_gates) {
        auto id = n.find_net(kg.host_net);
        if (!id) throw std::logic_error("lock: host net missing from the input netlist");
        hosts.push_back(*id);
    }
    const std::uint64_t score = interference_score(n, hosts);

    const fs::path dir(cfg.out_dir);
    write_text(dir / "locked.bench", locked.netlist.to_bench());
    write_text(dir / "key.txt", key_file_text(locked.hidden_key));
    std::ostringstream rep;
    rep << "# scanleak lock report\n";
    rep << "config: bench=" << cfg.bench << " key-bits=" << cfg.key_bits
        << " scheme=" << cfg.scheme << " seed-lock=" << cfg.seed_lock << "\n";
    rep << "gates after locking: " << locked.netlist.gates().size() << "\n";
    rep << "interference score: " << score << "\n";
    write_text(dir / "lock_report.txt", rep.str());
    out << "locked " << cfg.bench << " with " << cfg.key_bits << " key bits ("
        << cfg.scheme << ") -> " << (dir / "locked.bench").string() << "\n";
    return 0;
}

int cmd_stitch(const RunConfig& cfg, std::ostream& out) {
    const LockedDesign locked = load_locked(cfg);
    const ScanChainLayout layout = stitch(locked, cfg.chains, cfg.seed_stitch);
    const fs::path dir(cfg.out_dir);
    write_text(dir / "layout.txt", layout.to_text(locked));
    out << "stitched " << layout.total_cells() << " cells into " << cfg.chains
        << " chain(s) -> " << (dir / "layout.txt").string() << "\n";
    return 0;
}

int cmd_attack(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const LockedDesign locked = load_locked(cfg);
    const ScanChainLayout layout = ScanChainLayout::parse_text(read_text(cfg.layout), locked);
    const DefenseVariant variant = parse_defense(cfg.defense);

    ChipSession session(locked, layout, variant, kM0, cfg.seed_attack);
    const AttackReport rep = run_full_attack(session, locked, layout, cfg.dip_cap);

    std::size_t correct = 0;
    for (std::uint32_t k = 0; k < locked.key_bits(); ++k)
        if (rep.bits[k].status != BitStatus::Unrecovered &&
            rep.bits[k].bit == locked.hidden_key[k])
            ++correct;

    std::ostringstream file;
    file << "config: locked=" << cfg.locked << " key=" << cfg.key << " layout=" << cfg.layout
         << " defense=" << cfg.defense << " seed-attack=" << cfg.seed_attack
         << " dip-cap=" << cfg.dip_cap << "\n";
    file << rep.to_text(cfg.timings);
    file << "audit: " << correct << "/" << rep.recovered() << " recovered bits correct\n";
    write_text(fs::path(cfg.out_dir) / "attack_report.txt", file.str());

    char tl[96];
    std::snprintf(tl, sizeof tl, "timings: preprocess %.3fs, leak %.3fs\n",
                  rep.preprocess_seconds, rep.leak_seconds);
    err << tl;
    out << "recovered " << rep.recovered() << "/" << locked.key_bits() << " key bits under "
        << defense_name(variant) << " (" << rep.total_queries << " pin operations)\n";
    return 0;
}

int cmd_report(const RunConfig& cfg, std::ostream& out) {
    const LockedDesign locked = load_locked(cfg);
    const ScanChainLayout layout = ScanChainLayout::parse_text(read_text(cfg.layout), locked);
    const std::string design = fs::path(cfg.locked).stem().string();

    OverheadReport oh_dfs = overhead(locked, layout, DefenseVariant::Dfs);
    OverheadReport oh_mssd = overhead(locked, layout, DefenseVariant::Mssd);
    oh_dfs.design = design;
    oh_mssd.design = design;

    const Netlist dfs_instr = instrument_for_test(locked, layout, DefenseVariant::Dfs);
    const Netlist mssd_instr = instrument_for_test(locked, layout, DefenseVariant::Mssd);
    const CoverageReport cov =
        coverage_compare(locked.netlist, dfs_instr, mssd_instr, cfg.budget, cfg.seed_coverage);

    const std::string echo = "config: locked=" + cfg.locked + " key=" + cfg.key +
                             " layout=" + cfg.layout + " budget=" + std::to_string(cfg.budget) +
                             " seed-coverage=" + std::to_string(cfg.seed_coverage) + "\n";
    const fs::path dir(cfg.out_dir);
    write_text(dir / "overhead_dfs.txt", echo + oh_dfs.to_text());
    write_text(dir / "overhead_mssd.txt", echo + oh_mssd.to_text());
    write_text(dir / "coverage.txt", echo + cov.to_text());

    char line[160];
    std::ostringstream sum;
    sum << "# scanleak design summary\n" << echo;
    sum << "variant    added  added%  coverage\n";
    std::snprintf(line, sizeof line, "original %7d %7.2f %9.6f\n", 0, 0.0, cov.original);
    sum << line;
    std::snprintf(line, sizeof line, "dfs      %7zu %7.2f %9.6f\n", oh_dfs.dfs_added,
                  oh_dfs.dfs_percent(), cov.dfs);
    sum << line;
    std::snprintf(line, sizeof line, "mssd     %7zu %7.2f %9.6f\n", oh_mssd.mssd_added,
                  oh_mssd.mssd_percent(), cov.mssd);
    sum << line;
    sum << "mssd adds fewer primitives than dfs: "
        << (oh_mssd.mssd_added < oh_dfs.dfs_added ? "yes" : "no") << "\n";
    write_text(dir / "summary.txt", sum.str());

    out << "coverage original/dfs/mssd: " << cov.original << "/" << cov.dfs << "/" << cov.mssd
        << "; added primitives dfs=" << oh_dfs.dfs_added << " mssd=" << oh_mssd.mssd_added
        << "\n";
    return 0;
}

} // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"gate-level scan locking laboratory"};
    app.set_config("--config", "", "read option defaults from an INI/TOML file");
    app.require_subcommand(1);

    RunConfig cfg;

    CLI::App* lock = app.add_subcommand("lock", "insert key gates into a bench netlist");
    lock->add_option("--bench", cfg.bench, "input bench netlist")->required();
    lock->add_option("--key-bits", cfg.key_bits, "key length")->capture_default_str();
    lock->add_option("--scheme", cfg.scheme, "locking scheme")
        ->check(CLI::IsMember({"rll", "sll"}))
        ->capture_default_str();
    lock->add_option("--seed-lock", cfg.seed_lock, "locking seed")->capture_default_str();
    lock->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();

    CLI::App* stitch_cmd =
        app.add_subcommand("stitch", "stitch all cells of a locked design into scan chains");
    stitch_cmd->add_option("--locked", cfg.locked, "locked bench netlist")->required();
    stitch_cmd->add_option("--key", cfg.key, "key file (one bit per line)")->required();
    stitch_cmd->add_option("--chains", cfg.chains, "number of scan chains")->capture_default_str();
    stitch_cmd->add_option("--seed-stitch", cfg.seed_stitch, "stitch seed")->capture_default_str();
    stitch_cmd->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();

    CLI::App* attack_cmd =
        app.add_subcommand("attack", "run the full key-recovery attack against a simulated chip");
    attack_cmd->add_option("--locked", cfg.locked, "locked bench netlist")->required();
    attack_cmd->add_option("--key", cfg.key, "key file (planted key for the chip)")->required();
    attack_cmd->add_option("--layout", cfg.layout, "scan chain layout file")->required();
    attack_cmd->add_option("--defense", cfg.defense, "defense variant")
        ->check(CLI::IsMember({"dfs", "mssd"}))
        ->capture_default_str();
    attack_cmd->add_option("--seed-attack", cfg.seed_attack, "attack seed")->capture_default_str();
    attack_cmd->add_option("--dip-cap", cfg.dip_cap, "hard cap on distinguishing inputs per cone")
        ->capture_default_str();
    attack_cmd->add_flag("--timings", cfg.timings, "embed wall-clock timings in the report file");
    attack_cmd->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();

    CLI::App* report_cmd =
        app.add_subcommand("report", "overhead and test-coverage reports for both defenses");
    report_cmd->add_option("--locked", cfg.locked, "locked bench netlist")->required();
    report_cmd->add_option("--key", cfg.key, "key file")->required();
    report_cmd->add_option("--layout", cfg.layout, "scan chain layout file")->required();
    report_cmd->add_option("--budget", cfg.budget, "test pattern budget")->capture_default_str();
    report_cmd->add_option("--seed-coverage", cfg.seed_coverage, "coverage pattern seed")
        ->capture_default_str();
    report_cmd->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();

    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::Success& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 1;
    }

    try {
        if (lock->parsed()) return cmd_lock(cfg, out);
        if (stitch_cmd->parsed()) return cmd_stitch(cfg, out);
        if (attack_cmd->parsed()) return cmd_attack(cfg, out, err);
        if (report_cmd->parsed()) return cmd_report(cfg, out);
        err << "error: no subcommand selected\n";
        return 1;
    } catch (const ParseError& e) {
        err << "parse error at line " << e.line << ", column " << e.col << ": " << e.what()
            << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace scanleak
