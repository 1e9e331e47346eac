#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tdl/offline.hpp"

using namespace tdl;

namespace {

std::size_t rules_from(const query& q, const std::string& head, const std::string& body) {
    return static_cast<std::size_t>(std::count_if(q.prog.rules.begin(), q.prog.rules.end(), [&](const rule& r) {
        return r.head.pred == head && r.body.size() == 1 && r.body[0].pred == body;
    }));
}

std::set<time_point> offsets_from(const query& q, const std::string& head, const std::string& body) {
    std::set<time_point> out;
    for (auto& r : q.prog.rules)
        if (r.head.pred == head && r.body.size() == 1 && r.body[0].pred == body) out.insert(r.head.time->value);
    return out;
}

std::set<time_point> range(time_point lo, time_point hi) {
    std::set<time_point> out;
    for (time_point t = lo; t <= hi; ++t) out.insert(t);
    return out;
}

query near_query() {
    return parse_query(
        "Temp(x, high, t) -> Flag(x, t).\n"
        "Flag(x, t) & Flag(x, t+1) -> Cool(x, t+1).\n"
        "Cool(x, t) & Flag(x, t+1) -> Shdn(x, t+1).\n"
        "Shdn(x, t) & Near(x, y) -> Warn(y, t).\n"
        "@query Warn.\n");
}

std::vector<query> corpus() {
    return {oracle::sample("shutdown.tdl"), oracle::sample("malfunction.tdl"), near_query(),
            parse_query("@pred E/2 edb temporal.\nE(x, t) -> P(x, t).\n@query P.\n"),
            parse_query("E(x, t) & F(x, t+2) -> P(x, t+1).\n@query P.\n")};
}

}  // namespace

TEST(DelayQueries, Shape) {
    auto shdn = oracle::sample("shutdown.tdl");
    auto [q1, q2] = build_delay_queries(shdn, 0);
    EXPECT_EQ(q1.output, offline_names::answer);
    EXPECT_EQ(rules_from(q1, offline_names::keep, offline_names::at), 0u);
    EXPECT_EQ(offsets_from(q2, offline_names::keep, offline_names::at), range(-3, 0));
    EXPECT_TRUE(q2.prog.is_idb("Temp__r"));

    auto [m1, m2] = build_delay_queries(oracle::sample("malfunction.tdl"), 2);
    EXPECT_EQ(rules_from(m2, offline_names::keep, offline_names::at), 13u);
    EXPECT_THROW(build_delay_queries(shdn, -1), validation_error);
}

TEST(WindowQueries, Shape) {
    auto shdn = oracle::sample("shutdown.tdl");
    auto qs = build_window_queries(shdn, 0, 2);
    ASSERT_TRUE(qs);
    auto& [q1, q2] = *qs;
    for (auto* q : {&q1, &q2}) EXPECT_EQ(offsets_from(*q, offline_names::out, offline_names::in), range(1, 1));
    // Q1 keeps data after -d - rad, Q2 after -s
    EXPECT_EQ(offsets_from(q1, offline_names::keep, offline_names::in), range(-2, 4));
    EXPECT_EQ(offsets_from(q2, offline_names::keep, offline_names::in), range(-1, 4));

    EXPECT_FALSE(build_window_queries(shdn, 5, 8));
    EXPECT_TRUE(decide_window(shdn, 5, 8));
    EXPECT_TRUE(build_window_queries(shdn, 5, 7));
}

TEST(Delay, RunningExample) {
    auto shdn = oracle::sample("shutdown.tdl");
    auto malfunc = oracle::sample("malfunction.tdl");
    EXPECT_TRUE(decide_delay(shdn, 0));
    EXPECT_TRUE(decide_delay(malfunc, 2));
    EXPECT_FALSE(decide_delay(malfunc, 1));
    EXPECT_FALSE(decide_delay(malfunc, 0));
    EXPECT_EQ(minimal_delay(shdn), 0);
    EXPECT_EQ(minimal_delay(malfunc), 2);

    EXPECT_TRUE(delay_oracle(shdn, 0).holds);
    for (time_point d : {0, 1}) {
        auto r = delay_oracle(malfunc, d);
        EXPECT_FALSE(r.holds) << d;
        EXPECT_EQ(r.t_out, -d);
        EXPECT_FALSE(r.update.empty());
    }
}

TEST(Window, RunningExample) {
    auto shdn = oracle::sample("shutdown.tdl");
    EXPECT_TRUE(decide_window(shdn, 0, 2));
    EXPECT_FALSE(decide_window(shdn, 0, 1));
    EXPECT_FALSE(decide_window(shdn, 0, 0));
    EXPECT_EQ(minimal_window(shdn, 0), 2);
    EXPECT_TRUE(window_oracle(shdn, 0, 2).holds);
    EXPECT_FALSE(window_oracle(shdn, 0, 1).holds);
    EXPECT_FALSE(window_oracle(shdn, 0, 0).holds);
    EXPECT_THROW(minimal_window(oracle::sample("malfunction.tdl"), 1), validation_error);
}

TEST(Window, MalfunctionNeedsTwo) {
    auto malfunc = oracle::sample("malfunction.tdl");
    EXPECT_FALSE(decide_window(malfunc, 2, 1));
    EXPECT_TRUE(decide_window(malfunc, 2, 2));
    offline_oracle_options one;
    one.fresh_objects = 1;
    EXPECT_FALSE(window_oracle(malfunc, 2, 1, one).holds);
}

TEST(Offline, RecursiveQueriesAreRejected) {
    auto risk = oracle::sample("at_risk.tdl");
    for (auto f : {std::function<void()>([&] { decide_delay(risk, 1); }), std::function<void()>([&] { minimal_window(risk, 1); })}) {
        try {
            f();
            FAIL() << "accepted a recursive query";
        } catch (const validation_error& e) {
            EXPECT_NE(std::string(e.what()).find("undecidable in general"), std::string::npos);
            EXPECT_NE(std::string(e.what()).find(no_window_status), std::string::npos);
        }
    }
    EXPECT_THROW(decide_delay(parse_query("E(x, t) -> P(x, t+1).\nE(x, 2) -> P(x, 3).\n@query P.\n"), 0), validation_error);
}

TEST(Offline, GuaranteedBoundsHold) {
    for (auto& q : corpus()) {
        auto rad = analyze(q.prog).program_radius;
        EXPECT_TRUE(decide_delay(q, rad)) << render_query(q);
        for (time_point d : {minimal_delay(q), rad}) EXPECT_TRUE(decide_window(q, d, d + rad)) << render_query(q) << d;
    }
}

TEST(Offline, UpwardClosed) {
    for (auto& q : corpus()) {
        auto rad = analyze(q.prog).program_radius;
        auto d0 = minimal_delay(q);
        for (time_point d = d0; d <= std::min<time_point>(rad, d0 + 3); ++d) EXPECT_TRUE(decide_delay(q, d)) << render_query(q);
        auto s0 = minimal_window(q, d0);
        for (time_point s = s0; s <= std::min<time_point>(d0 + rad, s0 + 3); ++s)
            EXPECT_TRUE(decide_window(q, d0, s)) << render_query(q) << s;
        for (time_point s = 0; s < s0; ++s) EXPECT_FALSE(decide_window(q, d0, s));
    }
}

TEST(Differential, DelayAgreesWithOracle) {
    std::mt19937_64 rng(505);
    int negatives = 0, positives = 0;
    for (int i = 0; i < 50; ++i) {
        oracle::gen_options o;
        o.temporal_edb = 1 + i % 2;
        o.idb = 2;
        o.max_rules = 3;
        o.max_arity = 1;
        o.rigid_edb = false;
        o.constants = i % 3 == 0;
        auto q = oracle::random_query(rng, o);
        auto rad = analyze(q.prog).program_radius;
        time_point d = std::uniform_int_distribution<time_point>(0, std::min<time_point>(rad, 3))(rng);
        SCOPED_TRACE(render_query(q) + " d=" + std::to_string(d));
        bool decided = decide_delay(q, d);
        EXPECT_EQ(delay_oracle(q, d).holds, decided);
        (decided ? positives : negatives)++;
    }
    EXPECT_GE(negatives, 5);
    EXPECT_GE(positives, 5);
}

TEST(Differential, WindowAgreesWithOracle) {
    std::mt19937_64 rng(606);
    int negatives = 0, positives = 0;
    for (int i = 0; i < 50; ++i) {
        oracle::gen_options o;
        o.temporal_edb = 1;
        o.idb = 2;
        o.max_rules = 3;
        o.max_arity = 1;
        o.rigid_edb = false;
        o.constants = i % 3 == 0;
        auto q = oracle::random_query(rng, o);
        auto rad = analyze(q.prog).program_radius;
        auto d = minimal_delay(q);
        time_point s = std::uniform_int_distribution<time_point>(0, std::min<time_point>(d + rad, 3))(rng);
        SCOPED_TRACE(render_query(q) + " d=" + std::to_string(d) + " s=" + std::to_string(s));
        bool decided = decide_window(q, d, s);
        EXPECT_EQ(window_oracle(q, d, s).holds, decided);
        (decided ? positives : negatives)++;
    }
    EXPECT_GE(negatives, 5);
    EXPECT_GE(positives, 5);
}
