#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tdl/dtp.hpp"

using namespace tdl;

namespace {

dtp_instance instance(const query& q, dataset d, time_point t_in, time_point t_out) { return {q, std::move(d), t_in, t_out}; }

}  // namespace

TEST(CriticalUpdate, Sizes) {
    auto malfunc = oracle::sample("malfunction.tdl");
    auto in = instance(malfunc, {{"Temp", {"a", "na"}, 0}}, 0, 0);
    EXPECT_EQ(critical_domain(in), (std::vector<std::string>{"__fresh_obj", "a", "high", "na"}));
    auto u = critical_update(in);
    EXPECT_EQ(u.size(), 17u);
    for (auto& f : u) EXPECT_EQ(f.time, 1);
    EXPECT_TRUE(u.count({marker_pred, {}, 1}));

    auto no_edb = parse_query("@pred Clock/1 idb temporal.\nNear(x, y) -> Link(x, y).\nNear(x, y) -> Clock(3).\n@query Clock.\n");
    EXPECT_EQ(critical_update(instance(no_edb, {}, 3, 3)), (dataset{{marker_pred, {}, 4}}));

    auto unary = parse_query("@pred Ping/2 edb temporal.\nPing(x, t) -> Seen(x, t).\n@query Seen.\n");
    EXPECT_EQ(saturating_update(unary.prog, {"a"}, {5}).size(), 1u);
    EXPECT_EQ(critical_update(instance(unary, {}, 0, 0)).size(), 2u);
}

TEST(CriticalQuery, Shape) {
    auto malfunc = oracle::sample("malfunction.tdl");
    auto cq = critical_query(malfunc);
    EXPECT_EQ(cq.prog.rules.size(), malfunc.prog.rules.size() + 4);
    EXPECT_TRUE(cq.prog.is_idb("Temp__r"));
    EXPECT_TRUE(cq.prog.is_edb("Temp"));
    EXPECT_TRUE(cq.prog.is_idb("Flag"));
    EXPECT_TRUE(validate(cq.prog, {true}).ok());

    auto two = parse_query("A(x, t) & B(x, t+1) -> C(x, t).\n@query C.\n");
    EXPECT_EQ(critical_query(two).prog.rules.size(), 1u + 6u);
}

TEST(Dtp, RunningExample) {
    auto malfunc = oracle::sample("malfunction.tdl");
    auto high = instance(malfunc, {{"Temp", {"a", "high"}, 0}}, 0, 0);
    auto na = instance(malfunc, {{"Temp", {"a", "na"}, 0}}, 0, 0);
    EXPECT_FALSE(decide_dtp_general(high));
    EXPECT_FALSE(decide_dtp_nonrecursive(high));
    EXPECT_TRUE(decide_dtp_general(na));
    EXPECT_TRUE(decide_dtp_nonrecursive(na));

    auto witness = dtp_oracle(high, dtp_exact_bound(high), critical_domain(high));
    EXPECT_FALSE(witness.holds);
    EXPECT_EQ(witness.witness, (dataset{{"Temp", {"a", "high"}, 1}, {"Temp", {"a", "high"}, 2}}));
    EXPECT_TRUE(dtp_oracle(na, dtp_exact_bound(na), critical_domain(na)).holds);
    EXPECT_TRUE(dtp_oracle(high, 0, critical_domain(high)).holds);  // only the empty update
}

TEST(Dtp, BoundedCriticalUpdate) {
    auto malfunc = oracle::sample("malfunction.tdl");
    auto u = bounded_critical_update(instance(malfunc, {{"Temp", {"a", "na"}, 0}}, 0, 0));
    EXPECT_EQ(u.size(), 160u);
    EXPECT_EQ(u.begin()->time, 1);
    EXPECT_EQ(u.rbegin()->time, 10);

    auto flat = parse_query("@pred Ping/2 edb temporal.\nPing(x, t) -> Seen(x, t).\n@query Seen.\n");
    EXPECT_TRUE(bounded_critical_update(instance(flat, {}, 2, 2)).empty());
    EXPECT_THROW(bounded_critical_update(instance(oracle::sample("at_risk.tdl"), {}, 0, 0)), validation_error);
}

// The answer at 1 needs a reading at -1, so no later update can change it.
TEST(Dtp, ShutdownAtOneIsAlreadyDefinitive) {
    auto shdn = oracle::sample("shutdown.tdl");
    auto in = instance(shdn, {{"Temp", {"a", "high"}, 0}, {"Temp", {"a", "high"}, 1}}, 1, 1);
    EXPECT_TRUE(decide_dtp_nonrecursive(in));
    EXPECT_TRUE(decide_dtp_general(in));
    EXPECT_TRUE(dtp_oracle(in, dtp_exact_bound(in), critical_domain(in)).holds);
    // shutdowns only look backwards, so every such instance is definitive
    auto early = instance(shdn, {{"Temp", {"a", "high"}, 0}}, 0, 0);
    EXPECT_TRUE(decide_dtp(early));
}

TEST(Dtp, SaturatedAnswersAreDefinitive) {
    auto q = parse_query("@pred Ping/2 edb temporal.\nPing(x, t) -> Seen(x, t).\n@query Seen.\n");
    EXPECT_TRUE(decide_dtp_nonrecursive(instance(q, {{"Ping", {"a"}, 0}}, 0, 0)));
}

TEST(Dtp, PreconditionsAreChecked) {
    auto shdn = oracle::sample("shutdown.tdl");
    EXPECT_THROW(decide_dtp_general(instance(shdn, {{"Temp", {"a", "high"}, 3}}, 1, 1)), validation_error);
    EXPECT_THROW(decide_dtp_general(instance(shdn, {}, 1, 2)), validation_error);
}

TEST(Dtp, RecursiveQueriesUseTheGeneralProcedure) {
    auto risk = oracle::sample("at_risk.tdl");
    dataset d{{"Near", {"a", "b"}, std::nullopt}, {"Temp", {"a", "high"}, 0}, {"Temp", {"a", "high"}, 1}};
    // nothing at 1 can appear later: shutdowns need three readings ending at 1
    EXPECT_TRUE(decide_dtp(instance(risk, d, 1, 1)));
    d.insert({"Temp", {"a", "high"}, 2});
    EXPECT_TRUE(decide_dtp(instance(risk, d, 2, 2)));
}

TEST(Differential, DecidersAgreeWithOracle) {
    std::mt19937_64 rng(17);
    int negatives = 0;
    for (int i = 0; i < 60; ++i) {
        oracle::gen_options o;
        o.idb = 2;
        o.max_rules = 3;
        o.max_arity = 1;
        o.constants = i % 2 == 0;
        o.rigid_edb = i % 3 == 0;
        auto q = oracle::random_query(rng, o);
        time_point t_in = std::uniform_int_distribution<time_point>(0, 4)(rng);
        time_point t_out = std::uniform_int_distribution<time_point>(std::max<time_point>(0, t_in - 2), t_in)(rng);
        auto d = oracle::random_dataset(rng, q.prog, {"a", "b"}, 0, t_in, 0.35);
        auto in = instance(q, d, t_in, t_out);
        SCOPED_TRACE(render_query(q) + render_dataset(d) + " t_in=" + std::to_string(t_in) + " t_out=" + std::to_string(t_out));

        bool nr = decide_dtp_nonrecursive(in);
        EXPECT_EQ(decide_dtp_general(in), nr);
        auto ref = dtp_oracle(in, dtp_exact_bound(in), critical_domain(in));
        EXPECT_EQ(ref.holds, nr);
        negatives += !nr;
        // answers never mention the fresh object
        for (auto& tup : evaluate_at(q, d, t_out))
            EXPECT_EQ(std::count(tup.begin(), tup.end(), fresh_object), 0);
    }
    EXPECT_GE(negatives, 5);
}
