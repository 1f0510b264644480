#include <cmath>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "gridseam/merge.hpp"

using namespace gridseam;

namespace {

struct Desk {
    NetworkCase host = load_case_file(fixtures::data("desk/host.json"));
    BoundarySpec boundary = load_boundary_file(fixtures::data("desk/boundary.json"));
    EquivalentLibrary library{fixtures::data("equivalents")};
};

}  // namespace

TEST(Smtl, BuildsBalancedEquivalent) {
    SmtlParams p;
    p.machine_mw = 1150.0;
    p.machine_mbase = 1400.0;
    p.load_a_mw = 600.0;
    p.load_b_mw = 400.0;
    const auto c = build_smtl_equivalent(p);
    EXPECT_TRUE(validate_case(c).empty());
    EXPECT_EQ(c.buses.size(), 1u);
    EXPECT_EQ(c.machines.size(), 1u);
    EXPECT_EQ(c.loads.size(), 2u);
    EXPECT_DOUBLE_EQ(net_export_mw(c), 150.0);
}

TEST(MergeCases, DeskWithSmtl) {
    Desk d;
    const auto merged = merge_cases(d.host, d.library.get("smtl"), d.boundary, "smtl");
    EXPECT_EQ(merged.buses.size(), d.host.buses.size() + 1);
    EXPECT_EQ(merged.areas.size(), 7u);
    EXPECT_EQ(merged.branches.size(), d.host.branches.size() + 1);
    ASSERT_EQ(merged.transformers.size(), d.host.transformers.size() + 2);
    EXPECT_EQ(merged.transformers[merged.transformers.size() - 2].circuit, "1");
    EXPECT_EQ(merged.transformers.back().circuit, "2");
    ASSERT_TRUE(merged.merge);
    EXPECT_EQ(merged.merge->external_area, "MEX");
    EXPECT_EQ(merged.merge->kind, "smtl");
    EXPECT_TRUE(validate_case(merged).empty());
    // the host slack stays the only reference
    int slacks = 0;
    for (const auto& b : merged.buses) slacks += b.kind == BusKind::slack;
    EXPECT_EQ(slacks, 1);
    EXPECT_EQ(merged.find_bus("MEX-1")->kind, BusKind::pv);
}

TEST(MergeCases, CorridorCarriesScheduledInterchange) {
    Desk d;
    for (const std::string kind : {"smtl", "detailed"}) {
        const auto merged = merge_cases(d.host, d.library.get(kind), d.boundary, kind);
        const auto s = solve_powerflow(merged);
        ASSERT_TRUE(s.converged) << kind;
        double export_mw = 0.0;
        for (const auto& id : corridor_ids(d.boundary)) {
            const auto* f = s.flow(id);
            ASSERT_NE(f, nullptr);
            // corridor elements run MEX-1 -> GUA-1, so positive from-end P is export
            export_mw += f->p_from;
        }
        EXPECT_NEAR(export_mw, d.boundary.scheduled_mw, 0.02 * d.boundary.scheduled_mw) << kind;
    }
}

TEST(MergeCases, InputsUntouched) {
    Desk d;
    const auto host_before = d.host;
    const auto ext_before = d.library.get("detailed");
    (void)merge_cases(d.host, d.library.get("detailed"), d.boundary);
    EXPECT_EQ(d.host, host_before);
    EXPECT_EQ(d.library.get("detailed"), ext_before);
}

TEST(MergeCases, Rejections) {
    Desk d;
    const auto& smtl = d.library.get("smtl");
    auto empty = d.boundary;
    empty.interconnection.reset();
    empty.transformers.clear();
    EXPECT_THROW(merge_cases(d.host, smtl, empty), DataError);

    auto off = d.boundary;
    off.scheduled_mw = 100.0;
    EXPECT_THROW(merge_cases(d.host, smtl, off), DataError);

    auto wrong_bus = d.boundary;
    wrong_bus.host_bus = "NOWHERE";
    EXPECT_THROW(merge_cases(d.host, smtl, wrong_bus), DataError);

    auto stray = d.boundary;
    stray.transformers[0].to = "GUA-2";
    EXPECT_THROW(merge_cases(d.host, smtl, stray), DataError);

    const auto merged = merge_cases(d.host, smtl, d.boundary);
    EXPECT_THROW(merge_cases(merged, smtl, d.boundary), DataError);

    auto clash = smtl;
    clash.areas[0].id = "GUA";
    for (auto& b : clash.buses) b.area = "GUA";
    EXPECT_THROW(merge_cases(d.host, clash, d.boundary), DataError);
}

TEST(MergeCases, PrefixesCollidingIds) {
    Desk d;
    auto ext = d.library.get("smtl");
    ext.loads[0].id = "GUA-4-L";  // collides with a host load
    const auto merged = merge_cases(d.host, ext, d.boundary);
    EXPECT_NE(merged.find_load("MEX:GUA-4-L"), nullptr);
    EXPECT_NE(merged.find_load("GUA-4-L"), nullptr);
}

TEST(SwapEquivalent, RoundTrip) {
    Desk d;
    const auto smtl = merge_cases(d.host, d.library.get("smtl"), d.boundary, "smtl");
    const auto detailed = swap_equivalent(smtl, "detailed", d.library);
    int mex = 0;
    for (const auto& b : detailed.buses) mex += b.area == "MEX";
    EXPECT_EQ(mex, 5);
    EXPECT_EQ(detailed.merge->kind, "detailed");
    EXPECT_EQ(detailed, merge_cases(d.host, d.library.get("detailed"), d.boundary, "detailed"));

    EXPECT_EQ(swap_equivalent(smtl, "smtl", d.library), smtl);
    EXPECT_EQ(swap_equivalent(detailed, "smtl", d.library), smtl);
    EXPECT_THROW(swap_equivalent(d.host, "smtl", d.library), DataError);
    EXPECT_THROW(swap_equivalent(smtl, "no-such-equivalent", d.library), DataError);
}

TEST(SwapEquivalent, StripRestoresHost) {
    Desk d;
    const auto merged = merge_cases(d.host, d.library.get("detailed"), d.boundary, "detailed");
    EXPECT_EQ(strip_equivalent(merged), d.host);
}

TEST(MergeCases, ShippedMergedCaseMatches) {
    Desk d;
    const auto shipped = load_case_file(fixtures::data("desk/desk_smtl.json"));
    EXPECT_EQ(shipped, merge_cases(d.host, d.library.get("smtl"), d.boundary, "smtl"));
    EXPECT_EQ(load_case(serialize_case(shipped)), shipped);
}
