#include <gtest/gtest.h>

#include <chrono>

#include "oracles.hpp"
#include "tdl/dtp.hpp"
#include "tdl/forget.hpp"

using namespace tdl;

namespace {

forget_instance instance(const query& q, dataset d, time_point t_in, time_point t_out, time_point t_mem) {
    return {q, std::move(d), t_in, t_out, t_mem};
}

const dataset example_kept{{"Temp", {"a", "high"}, 0}, {"Temp", {"a", "low"}, 1}};
const dataset example_lost{{"Temp", {"a", "high"}, 0}, {"Temp", {"a", "high"}, 1}};

query near_query() {
    return parse_query(
        "Temp(x, high, t) -> Flag(x, t).\n"
        "Flag(x, t) & Flag(x, t+1) -> Cool(x, t+1).\n"
        "Cool(x, t) & Flag(x, t+1) -> Shdn(x, t+1).\n"
        "Shdn(x, t) & Near(x, y) -> Warn(y, t).\n"
        "@query Warn.\n");
}

std::size_t count_head(const query& q, const std::string& pred) {
    return static_cast<std::size_t>(
        std::count_if(q.prog.rules.begin(), q.prog.rules.end(), [&](const rule& r) { return r.head.pred == pred; }));
}

}  // namespace

TEST(RelevantPoints, Examples) {
    auto shdn = oracle::sample("shutdown.tdl");
    auto iv = relevant_points(instance(shdn, {}, 1, 1, 1));
    EXPECT_EQ(iv.output, (time_window{1, 4}));
    EXPECT_EQ(iv.update, (time_window{2, 7}));

    auto flat = parse_query("@pred E/2 edb temporal.\nE(x, t) -> P(x, t).\n@query P.\n");
    auto z = relevant_points(instance(flat, {}, 5, 5, 5));
    EXPECT_EQ(z.output, (time_window{5, 5}));
    EXPECT_TRUE(empty(z.update));

    EXPECT_TRUE(empty(relevant_points(instance(shdn, {}, 6, 5, 1)).output));
    EXPECT_THROW(relevant_points(instance(oracle::sample("at_risk.tdl"), {}, 1, 1, 1)), validation_error);
    auto pointy = parse_query("E(x, t) -> P(x, t+1).\nE(x, 2) -> P(x, 3).\n@query P.\n");
    EXPECT_THROW(relevant_points(instance(pointy, {}, 1, 1, 1)), validation_error);
}

TEST(BuildQueries, Structure) {
    auto shdn = oracle::sample("shutdown.tdl");
    auto [q1, q2] = build_forget_queries(instance(shdn, example_kept, 1, 1, 1));
    for (auto* q : {&q1, &q2}) {
        std::set<time_point> marks;
        for (auto& r : q->prog.rules)
            if (r.body.empty() && r.head.pred == update_marker_pred) marks.insert(r.head.time->value);
        EXPECT_EQ(marks, (std::set<time_point>{2, 3, 4, 5, 6, 7}));
        // the output rule is grounded at each of the 4 output-relevant points
        EXPECT_EQ(count_head(*q, "Shdn"), 4u);
        EXPECT_TRUE(q->prog.is_idb(update_marker_pred));
        EXPECT_TRUE(q->prog.is_idb("Temp__r"));
        EXPECT_TRUE(q->prog.is_edb("Temp"));
    }
    EXPECT_EQ(count_head(q1, "Temp__r"), 3u);  // two embedded facts and the update rule
    EXPECT_EQ(count_head(q2, "Temp__r"), 1u);

    auto [e1, e2] = build_forget_queries(instance(shdn, {}, 1, 1, 1));
    EXPECT_EQ(e1, e2);
    EXPECT_TRUE(decide_forget(instance(shdn, {}, 1, 1, 1)));
}

TEST(BuildQueries, SegmentConsistency) {
    auto q = near_query();
    dataset d{{"Near", {"a", "b"}, std::nullopt}, {"Temp", {"a", "high"}, 0}, {"Temp", {"a", "high"}, 2},
              {"Temp", {"b", "high"}, 3}, {"Unrelated", {"a"}, 1}};
    auto [q1, q2] = build_forget_queries(instance(q, d, 3, 3, 2));
    auto embedded = [](const query& x) {
        dataset out;
        for (auto& r : x.prog.rules)
            if (r.body.empty() && r.head.pred != update_marker_pred) out.insert(*to_fact(r.head));
        return out;
    };
    dataset want1, want2;
    for (auto f : d)
        if (f.pred != "Unrelated") want1.insert({renamed(f.pred), f.args, f.time});
    for (auto f : segment(d, 2))
        if (f.pred != "Unrelated") want2.insert({renamed(f.pred), f.args, f.time});
    EXPECT_EQ(embedded(q1), want1);
    EXPECT_EQ(embedded(q2), want2);
}

TEST(Forget, RunningExample) {
    auto shdn = oracle::sample("shutdown.tdl");
    auto kept = instance(shdn, example_kept, 1, 1, 1);
    auto lost = instance(shdn, example_lost, 1, 1, 1);
    auto start = std::chrono::steady_clock::now();
    EXPECT_TRUE(decide_forget(kept));
    EXPECT_FALSE(decide_forget(lost));
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(2));

    auto domain = critical_domain(shdn, example_lost);
    EXPECT_TRUE(forget_oracle(kept, domain).holds);
    auto r = forget_oracle(lost, domain);
    EXPECT_FALSE(r.holds);
    EXPECT_EQ(r.witness, (dataset{{"Temp", {"a", "high"}, 2}}));
}

TEST(Forget, RigidFactsAreAlwaysKept) {
    auto q = near_query();
    dataset d{{"Near", {"a", "b"}, std::nullopt}};
    EXPECT_TRUE(decide_forget(instance(q, d, 2, 2, 2)));
    // forgetting a flagged reading can lose a later warning
    d.insert({"Temp", {"a", "high"}, 2});
    EXPECT_TRUE(decide_forget(instance(q, d, 2, 2, 1)));
    EXPECT_FALSE(decide_forget(instance(q, d, 2, 2, 2)));
}

TEST(Forget, Vacuity) {
    auto shdn = oracle::sample("shutdown.tdl");
    // output interval [5, 4] is empty
    auto in = instance(shdn, example_lost, 5, 5, 1);
    EXPECT_TRUE(decide_forget(in));
    EXPECT_TRUE(forget_oracle(in, critical_domain(shdn, example_lost)).holds);
}

TEST(Forget, PreconditionsAreChecked) {
    auto shdn = oracle::sample("shutdown.tdl");
    EXPECT_THROW(decide_forget(instance(shdn, {}, 1, 1, 2)), validation_error);
    EXPECT_THROW(decide_forget(instance(shdn, {}, 1, 3, 1)), validation_error);
    EXPECT_THROW(decide_forget(instance(shdn, {{"Temp", {"a", "high"}, 4}}, 1, 1, 1)), validation_error);
    EXPECT_NO_THROW(decide_forget(instance(shdn, {}, 1, 2, 1)));
}

TEST(Forget, MonotoneInTheKeptSegment) {
    std::mt19937_64 rng(12);
    std::vector<query> corpus{oracle::sample("shutdown.tdl"), oracle::sample("malfunction.tdl"), near_query()};
    for (auto& q : corpus)
        for (int i = 0; i < 8; ++i) {
            auto d = oracle::random_dataset(rng, q.prog, {"a", "high", "na"}, 0, 4, 0.3);
            std::map<time_point, bool> verdict;
            for (time_point m = -1; m <= 4; ++m) verdict[m] = decide_forget(instance(q, d, 4, 4, m));
            for (time_point m = 0; m <= 4; ++m)
                if (verdict[m]) {
                    EXPECT_TRUE(verdict[m - 1]) << render_query(q) << render_dataset(d) << " t_mem=" << m;
                }
        }
}

TEST(Differential, AgreesWithOracle) {
    std::mt19937_64 rng(77);
    int negatives = 0;
    for (int i = 0; i < 60; ++i) {
        oracle::gen_options o;
        o.temporal_edb = 1 + i % 2;
        o.idb = 2;
        o.max_rules = 3;
        o.max_arity = 1;
        o.constants = i % 3 == 0;
        o.rigid_edb = i % 4 == 0;
        auto q = oracle::random_query(rng, o);
        time_point t_in = std::uniform_int_distribution<time_point>(1, 5)(rng);
        time_point t_out = std::uniform_int_distribution<time_point>(t_in - 1, t_in)(rng);
        time_point t_mem = std::uniform_int_distribution<time_point>(t_out - 2, t_out)(rng);
        auto d = oracle::random_dataset(rng, q.prog, {"a", "b"}, 0, t_in, 0.4);
        auto in = instance(q, d, t_in, t_out, t_mem);
        SCOPED_TRACE(render_query(q) + render_dataset(d) + " t_in=" + std::to_string(t_in) +
                     " t_out=" + std::to_string(t_out) + " t_mem=" + std::to_string(t_mem));
        bool decided = decide_forget(in);
        auto ref = forget_oracle(in, critical_domain(q, d));
        EXPECT_EQ(ref.holds, decided);
        negatives += !decided;
    }
    EXPECT_GE(negatives, 5);
}
