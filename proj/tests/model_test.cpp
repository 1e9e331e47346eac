#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace tdl;

namespace {

program prog(const std::string& text) { return parse_program(text); }

}  // namespace

TEST(Analysis, RunningExampleRadiiAndRanks) {
    auto malfunc = oracle::sample("malfunction.tdl");
    auto a = analyze(malfunc.prog);
    EXPECT_EQ(a.max_rule_radius, 2);
    EXPECT_EQ(a.program_radius, 10);
    EXPECT_TRUE(a.is_nonrecursive);
    EXPECT_TRUE(a.is_connected);
    EXPECT_FALSE(a.has_time_points);
    EXPECT_TRUE(a.has_objects);
    EXPECT_EQ(a.rank_of.at("Temp"), 0u);
    EXPECT_EQ(a.rank_of.at("Flag"), 1u);
    EXPECT_EQ(a.rank_of.at("Cool"), 2u);
    EXPECT_EQ(a.rank_of.at("Shdn"), 3u);
    EXPECT_EQ(a.rank_of.at("Malfunc"), 4u);

    auto shdn = oracle::sample("shutdown.tdl");
    EXPECT_EQ(analyze(shdn.prog).program_radius, 3);
    EXPECT_FALSE(analyze(oracle::sample("at_risk.tdl").prog).is_nonrecursive);
}

TEST(Analysis, RuleRadiusAndConnectivity) {
    auto p = prog("A(x, t) & B(x, t+3) -> C(x, t+1).\nA(x, t) & B(x, s) -> D(x, t).\nA(x, 4) -> F(x, 2).\n");
    EXPECT_EQ(rule_radius(p.rules[0]), 2);
    EXPECT_TRUE(rule_connected(p.rules[0]));
    EXPECT_FALSE(rule_connected(p.rules[1]));
    EXPECT_EQ(rule_radius(p.rules[2]), 0);
    EXPECT_TRUE(rule_connected(p.rules[2]));
    EXPECT_TRUE(analyze(p).has_time_points);
    EXPECT_FALSE(analyze(p).is_connected);
}

TEST(Analysis, FactsCountTowardsProgramRadius) {
    auto p = prog("A(x, t) -> B(x, t+2).\nA(a, 0).\n");
    EXPECT_EQ(analyze(p).program_radius, 4);
}

TEST(Validation, RejectsUnsafeAndEdbHeads) {
    program p;
    p.preds["A"] = {"A", 1, true, origin::edb};
    p.preds["B"] = {"B", 1, true, origin::idb};
    p.rules.push_back({atom{"B", {object_term::var("y")}, time_term::at("t")},
                       {atom{"A", {object_term::var("x")}, time_term::at("t")}}});
    p.rules.push_back({atom{"A", {object_term::var("x")}, time_term::at("t")},
                       {atom{"B", {object_term::var("x")}, time_term::at("t")}}});
    auto rep = validate(p);
    ASSERT_EQ(rep.errors.size(), 2u);
    EXPECT_EQ(rep.errors[0].rule_index, 0);
    EXPECT_EQ(rep.errors[1].rule_index, 1);
    EXPECT_THROW(require_valid(p), validation_error);
}

TEST(Validation, ReservedNamesAndSortClashes) {
    program p;
    p.preds["__X"] = {"__X", 0, true, origin::edb};
    p.preds["A"] = {"A", 1, true, origin::edb};
    p.preds["B"] = {"B", 0, true, origin::idb};
    p.rules.push_back({atom{"B", {}, time_term::at("x")}, {atom{"A", {object_term::var("x")}, time_term::at("x")}}});
    auto rep = validate(p);
    EXPECT_FALSE(rep.ok());
    EXPECT_NE(rep.str().find("reserved"), std::string::npos);
    EXPECT_NE(rep.str().find("both object and time"), std::string::npos);
    EXPECT_TRUE(validate(p, {true}).errors.size() < rep.errors.size());
}

TEST(Datasets, SegmentsHistoriesAndUpdates) {
    dataset d{{"T", {"a"}, 0}, {"T", {"a"}, 1}, {"T", {"a"}, 2}, {"N", {"a", "b"}, std::nullopt}};
    auto s = segment(d, 1);
    EXPECT_EQ(s.size(), 2u);
    EXPECT_TRUE(s.count({"N", {"a", "b"}, std::nullopt}));
    EXPECT_TRUE(s.count({"T", {"a"}, 2}));
    EXPECT_TRUE(is_history(d, 2));
    EXPECT_FALSE(is_history(d, 1));
    EXPECT_FALSE(is_update(d, -1));  // rigid facts never form an update
    EXPECT_TRUE(is_update(dataset{{"T", {"a"}, 3}}, 2));
    auto span = time_span(d);
    ASSERT_TRUE(span);
    EXPECT_EQ(span->first, 0);
    EXPECT_EQ(span->second, 2);
}

TEST(Renaming, TemporalEdbCopiesBecomeIdb) {
    auto q = oracle::sample("shutdown.tdl");
    auto r = rename_temporal_edb(q.prog);
    ASSERT_TRUE(r.find("Temp__r"));
    EXPECT_TRUE(r.is_idb("Temp__r"));
    EXPECT_FALSE(r.find("Temp"));
    EXPECT_EQ(r.rules[0].body[0].pred, "Temp__r");
}

TEST(Renaming, RigidAtomsNormalizeToTimeZero) {
    auto q = oracle::sample("at_risk.tdl");
    auto n = normalize_rigid_atoms(q);
    auto* s = n.prog.find(rigid_alias("Near"));
    ASSERT_TRUE(s);
    EXPECT_TRUE(s->temporal);
    auto facts = normalize_rigid_facts({{"Near", {"a", "b"}, std::nullopt}});
    EXPECT_TRUE(facts.count({rigid_alias("Near"), {"a", "b"}, 0}));
}
