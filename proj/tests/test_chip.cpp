#include "doctest.h"

#include <vector>

#include "scanleak/chip.hpp"
#include "test_support.hpp"

using namespace scanleak;
namespace ts = scanleak::testsup;

namespace {
const std::vector<std::uint8_t> kNoPi{};
}

TEST_SUITE("chip") {

TEST_CASE("shift-disable asserts only in full test mode with a stable test pin") {
    for (int test = 0; test <= 1; ++test)
        for (int se = 0; se <= 1; ++se)
            for (int stable = 0; stable <= 1; ++stable) {
                const bool want = test == 1 && se == 1 && stable == 1;
                CHECK(sd_value(test != 0, se != 0, stable != 0) == want);
            }
}

TEST_CASE("stitching is deterministic, covers every cell once, and deals round-robin") {
    LockedDesign d = ts::leaky_cone_design(1);

    ScanChainLayout a = stitch(d, 2, 5), b = stitch(d, 2, 5);
    CHECK(a.chains == b.chains);
    // The secure-cell slot moves with the seed: several seeds, several layouts.
    bool seed_sensitive = false;
    for (std::uint64_t seed = 0; seed < 10 && !seed_sensitive; ++seed)
        seed_sensitive = stitch(d, 2, seed).chains != a.chains;
    CHECK(seed_sensitive);
    a.validate(d);
    CHECK(a.n_chains() == 2);
    CHECK(a.total_cells() == 6);

    StitchPolicy policy;
    policy.explicit_master = std::vector<ChainCell>{
        {CellKind::Rc, 0}, {CellKind::Rc, 1}, {CellKind::Sc, 0},
        {CellKind::Rc, 2}, {CellKind::Rc, 3}, {CellKind::Rc, 4}};
    ScanChainLayout dealt = stitch(d, 2, 0, policy);
    // Master cell j lands in chain j%2 at position j/2.
    CHECK(dealt.chains[0] ==
          std::vector<ChainCell>{{CellKind::Rc, 0}, {CellKind::Sc, 0}, {CellKind::Rc, 3}});
    CHECK(dealt.chains[1] ==
          std::vector<ChainCell>{{CellKind::Rc, 1}, {CellKind::Rc, 2}, {CellKind::Rc, 4}});

    CHECK(dealt.find_sc(0) == std::pair<std::uint32_t, std::uint32_t>{0, 1});
    CHECK(dealt.find_rc(4) == std::pair<std::uint32_t, std::uint32_t>{1, 2});
    CHECK_THROWS_AS((void)dealt.find_sc(7), std::out_of_range);

    CHECK_THROWS_AS((void)stitch(d, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)stitch(d, 7, 1), std::invalid_argument);
    StitchPolicy bad;
    bad.explicit_master = std::vector<ChainCell>{{CellKind::Rc, 0}};
    CHECK_THROWS_AS((void)stitch(d, 1, 1, bad), std::invalid_argument);
}

TEST_CASE("layout text round-trips and validation rejects gaps and repeats") {
    LockedDesign d = ts::leaky_cone_design(0);
    ScanChainLayout layout = ts::leaky_cone_layout();
    ScanChainLayout back = ScanChainLayout::parse_text(layout.to_text(d), d);
    CHECK(back.chains == layout.chains);

    ScanChainLayout missing = layout;
    missing.chains[0].pop_back(); // drops a flop
    CHECK_THROWS_AS(missing.validate(d), std::invalid_argument);
    ScanChainLayout doubled = layout;
    doubled.chains[0].push_back({CellKind::Sc, 0});
    CHECK_THROWS_AS(doubled.validate(d), std::invalid_argument);
    CHECK_THROWS_AS((void)ScanChainLayout::parse_text("chain 0: RC:bogus\n", d),
                    std::invalid_argument);
}

TEST_CASE("a functional clock loads the hidden key into the secure cells") {
    LockedDesign d = ts::triple_xnor_design(); // planted key 010
    ScanChainLayout layout = ts::triple_xnor_layout();
    ChipSession chip(d, layout, DefenseVariant::Dfs, kM0, 1);
    CHECK(chip.pi_count() == 0);

    (void)chip.step(kM0, kNoPi, std::vector<std::uint8_t>{0});
    for (std::uint32_t k = 0; k < 3; ++k) {
        auto [c, p] = layout.find_sc(k);
        CHECK(chip.peek_cell(c, p) == chip.audit_key()[k]);
    }
}

TEST_CASE("full-chain shifting moves every cell and exposes the tail pre-edge") {
    LockedDesign d = ts::triple_xnor_design();
    ScanChainLayout layout = ts::triple_xnor_layout();
    ChipSession chip(d, layout, DefenseVariant::Dfs, kM2, 1);

    const std::uint8_t stream[] = {1, 0, 1, 1, 0};
    const std::uint8_t want_so[] = {0, 0, 0, 0, 1}; // first shifted 1 arrives after 4 edges
    for (int t = 0; t < 5; ++t) {
        auto out = chip.step(kM2, kNoPi, std::vector<std::uint8_t>{stream[t]});
        CHECK(out.so[0] == want_so[t]);
    }
    // Post-edge contents: the last four bits of the stream, newest at head.
    CHECK(chip.peek_cell(0, 0) == 0);
    CHECK(chip.peek_cell(0, 1) == 1);
    CHECK(chip.peek_cell(0, 2) == 1);
    CHECK(chip.peek_cell(0, 3) == 0);
}

TEST_CASE("a test-pin rise latches the scan-out mask for the life of the power cycle") {
    LockedDesign d = ts::triple_xnor_design();
    ScanChainLayout layout = ts::triple_xnor_layout();
    ChipSession chip(d, layout, DefenseVariant::Dfs, kM0, 1);

    std::vector<TraceRecord> trace;
    chip.set_trace(&trace);
    // The step into test mode is itself the rising edge: masked from the start.
    auto out = chip.step(kM2, kNoPi, std::vector<std::uint8_t>{0});
    CHECK(out.so[0] == 1); // raw tail is 0, output forced high
    CHECK(trace.back().so_masked);
    // Shifting still happens underneath the mask.
    (void)chip.step(kM2, kNoPi, std::vector<std::uint8_t>{1});
    (void)chip.step(kM2, kNoPi, std::vector<std::uint8_t>{0});
    CHECK(chip.peek_cell(0, 1) == 1);
    out = chip.step(kM2, kNoPi, std::vector<std::uint8_t>{0});
    CHECK(out.so[0] == 1);
    CHECK(trace.back().so_masked);

    // Power cycling clears the latch.
    chip.power_on(kM2);
    out = chip.step(kM2, kNoPi, std::vector<std::uint8_t>{0});
    CHECK_FALSE(trace.back().so_masked);
}

TEST_CASE("a clockless mode switch also feeds the edge detector") {
    LockedDesign d = ts::triple_xnor_design();
    ScanChainLayout layout = ts::triple_xnor_layout();

    // Booted in test and staying there: unmasked.
    ChipSession stays(d, layout, DefenseVariant::Dfs, kM2, 1);
    std::vector<TraceRecord> trace;
    stays.set_trace(&trace);
    (void)stays.step(kM2, kNoPi, std::vector<std::uint8_t>{0});
    CHECK_FALSE(trace.back().so_masked);

    // Same boot, but an excursion through a clockless functional read makes
    // the return to test a rising edge.
    ChipSession leaves(d, layout, DefenseVariant::Dfs, kM2, 1);
    leaves.set_trace(&trace);
    (void)leaves.observe(kM0, kNoPi);
    (void)leaves.step(kM2, kNoPi, std::vector<std::uint8_t>{0});
    CHECK(trace.back().so_masked);
}

TEST_CASE("regular-cell shifting bypasses secure cells, which hold") {
    LockedDesign d = ts::leaky_cone_design(1);
    ScanChainLayout layout = ts::leaky_cone_layout(); // in2 in3 SC0 in4 in5 in6
    ChipSession chip(d, layout, DefenseVariant::Dfs, kM0, 1);
    (void)chip.step(kM0, std::vector<std::uint8_t>{0, 0}, std::vector<std::uint8_t>{0});
    REQUIRE(chip.peek_cell(0, 2) == 1); // key bit parked in the secure cell

    for (std::uint8_t bit : {1, 0, 1}) {
        auto out = chip.step(kM1a, std::vector<std::uint8_t>{0, 0},
                             std::vector<std::uint8_t>{bit});
        CHECK(out.so[0] == 1); // scan-out masked outside test mode
    }
    CHECK(chip.peek_cell(0, 0) == 1);
    CHECK(chip.peek_cell(0, 1) == 0);
    CHECK(chip.peek_cell(0, 2) == 1); // secure cell untouched
    CHECK(chip.peek_cell(0, 3) == 1); // first bit hopped over the secure cell
    CHECK(chip.peek_cell(0, 4) == 0);
    CHECK(chip.peek_cell(0, 5) == 0);
}

TEST_CASE("capture mode clocks functional data into regular cells only") {
    LockedDesign d = ts::triple_xnor_design();
    ScanChainLayout layout = ts::triple_xnor_layout();
    ChipSession chip(d, layout, DefenseVariant::Dfs, kM2, 1);

    // Park r=1 and the planted key pattern 010 in the cells by shifting.
    for (std::uint8_t bit : {0, 1, 0, 1})
        (void)chip.step(kM2, kNoPi, std::vector<std::uint8_t>{bit});
    REQUIRE(chip.peek_cell(0, 0) == 1);

    auto out = chip.step(kM1b, kNoPi, std::vector<std::uint8_t>{0});
    // Pre-edge output: key inputs read 010 from the cells, r=1.
    CHECK(out.po[0] == 0);
    CHECK(chip.peek_cell(0, 0) == 0); // captured ~r
    CHECK(chip.peek_cell(0, 1) == 0); // secure cells held
    CHECK(chip.peek_cell(0, 2) == 1);
    CHECK(chip.peek_cell(0, 3) == 0);
}

TEST_CASE("with the stricter defense, a chip booted functionally never shifts") {
    LockedDesign d = ts::triple_xnor_design();
    ScanChainLayout layout = ts::triple_xnor_layout();
    ChipSession chip(d, layout, DefenseVariant::Mssd, kM0, 1);
    (void)chip.step(kM0, kNoPi, std::vector<std::uint8_t>{0});
    REQUIRE(chip.peek_cell(0, 0) == 1); // r captured ~0

    auto out = chip.step(kM2, kNoPi, std::vector<std::uint8_t>{1});
    CHECK(out.so[0] == 1); // masked: shifting is disabled
    // The regular cell captured functional data instead of shifting, and the
    // secure cells kept the key.
    CHECK(chip.peek_cell(0, 0) == 0);
    CHECK(chip.peek_cell(0, 1) == 0);
    CHECK(chip.peek_cell(0, 2) == 1);
    CHECK(chip.peek_cell(0, 3) == 0);
}

TEST_CASE("with the stricter defense, leaving test mode once disables shifting for good") {
    LockedDesign d = ts::triple_xnor_design();
    ScanChainLayout layout = ts::triple_xnor_layout();
    ChipSession chip(d, layout, DefenseVariant::Mssd, kM2, 1);

    auto out = chip.step(kM2, kNoPi, std::vector<std::uint8_t>{1});
    CHECK(out.so[0] == 0);            // unmasked while booted in test
    CHECK(chip.peek_cell(0, 0) == 1); // shifted

    (void)chip.step(kM0, kNoPi, std::vector<std::uint8_t>{0}); // drop out of test
    (void)chip.step(kM2, kNoPi, std::vector<std::uint8_t>{0});
    (void)chip.step(kM2, kNoPi, std::vector<std::uint8_t>{0});
    // No shifting resumed: position 0 tracks functional captures, not scan-in.
    std::vector<TraceRecord> trace;
    chip.set_trace(&trace);
    out = chip.step(kM2, kNoPi, std::vector<std::uint8_t>{0});
    CHECK(trace.back().so_masked);
}

TEST_CASE("one regular-cell clock pulse is swallowed on a clocked return from full shift") {
    LockedDesign d = ts::toggle_design(0);
    ScanChainLayout layout = ts::toggle_layout(); // t0, r1, SC0
    const std::vector<std::uint8_t> a0{0};

    ChipSession chip(d, layout, DefenseVariant::Mssd, kM2, 1);
    (void)chip.step(kM2, a0, std::vector<std::uint8_t>{0});
    REQUIRE(chip.peek_cell(0, 0) == 0);

    // Clocked switch from full shift to functional: the regular cells hold
    // this one edge while the secure cells load the key.
    (void)chip.step(kM0, a0, std::vector<std::uint8_t>{0});
    CHECK(chip.peek_cell(0, 0) == 0); // toggle suppressed
    // The very next functional clock behaves normally.
    (void)chip.step(kM0, a0, std::vector<std::uint8_t>{0});
    CHECK(chip.peek_cell(0, 0) == 1);
    (void)chip.step(kM0, a0, std::vector<std::uint8_t>{0});
    CHECK(chip.peek_cell(0, 0) == 0);
}

TEST_CASE("a clockless switch out of full shift swallows nothing") {
    LockedDesign d = ts::toggle_design(0);
    ScanChainLayout layout = ts::toggle_layout();
    const std::vector<std::uint8_t> a0{0};

    ChipSession chip(d, layout, DefenseVariant::Mssd, kM2, 1);
    (void)chip.step(kM2, a0, std::vector<std::uint8_t>{0});
    (void)chip.observe(kM0, a0); // mode change without a clock edge
    (void)chip.step(kM0, a0, std::vector<std::uint8_t>{0});
    CHECK(chip.peek_cell(0, 0) == 1); // toggled: no pulse was swallowed
}

TEST_CASE("outputs reflect the state before the clock edge") {
    LockedDesign d = ts::toggle_design(1);
    ScanChainLayout layout = ts::toggle_layout();
    const std::vector<std::uint8_t> a0{0};

    ChipSession stepper(d, layout, DefenseVariant::Dfs, kM0, 1);
    ChipSession observer(d, layout, DefenseVariant::Dfs, kM0, 1);
    for (int t = 0; t < 4; ++t) {
        auto po_now = observer.observe(kM0, a0);
        auto out = stepper.step(kM0, a0, std::vector<std::uint8_t>{0});
        CHECK(out.po == po_now);
        (void)observer.step(kM0, a0, std::vector<std::uint8_t>{0});
    }
}

TEST_CASE("a clockless read never changes cell contents") {
    LockedDesign d = ts::leaky_cone_design(1);
    ScanChainLayout layout = ts::leaky_cone_layout();
    ChipSession chip(d, layout, DefenseVariant::Dfs, kM0, 1);
    (void)chip.step(kM0, std::vector<std::uint8_t>{1, 0}, std::vector<std::uint8_t>{0});

    std::vector<std::uint8_t> before;
    for (std::uint32_t p = 0; p < 6; ++p) before.push_back(chip.peek_cell(0, p));
    (void)chip.observe(kM1b, std::vector<std::uint8_t>{0, 1});
    (void)chip.observe(kM0, std::vector<std::uint8_t>{1, 1});
    for (std::uint32_t p = 0; p < 6; ++p) CHECK(chip.peek_cell(0, p) == before[p]);
}

TEST_CASE("every pin operation is counted") {
    LockedDesign d = ts::triple_xnor_design();
    ScanChainLayout layout = ts::triple_xnor_layout();
    ChipSession chip(d, layout, DefenseVariant::Dfs, kM0, 1);
    CHECK(chip.pin_ops() == 1); // construction powers on
    (void)chip.step(kM0, kNoPi, std::vector<std::uint8_t>{0});
    CHECK(chip.pin_ops() == 2);
    (void)chip.observe(kM0, kNoPi);
    CHECK(chip.pin_ops() == 3);
    chip.power_on(kM0);
    CHECK(chip.pin_ops() == 4);
}

TEST_CASE("sessions reject malformed pin vectors and keyless designs") {
    LockedDesign d = ts::leaky_cone_design(0);
    ScanChainLayout layout = ts::leaky_cone_layout();
    ChipSession chip(d, layout, DefenseVariant::Dfs, kM0, 1);
    CHECK_THROWS_AS((void)chip.step(kM0, std::vector<std::uint8_t>{1}, // needs 2 pi bits
                                    std::vector<std::uint8_t>{0}),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)chip.step(kM0, std::vector<std::uint8_t>{1, 0},
                                    std::vector<std::uint8_t>{0, 0}), // one chain only
                    std::invalid_argument);

    LockedDesign keyless = ts::leaky_cone_design(0);
    keyless.hidden_key.clear();
    CHECK_THROWS_AS(ChipSession(keyless, layout, DefenseVariant::Dfs, kM0, 1),
                    std::invalid_argument);
}

} // TEST_SUITE
