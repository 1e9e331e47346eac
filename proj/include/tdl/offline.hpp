#pragma once

#include <stdexcept>

#include "containment.hpp"

namespace tdl {

inline const std::string no_window_status = "no valid window size";

namespace offline_names {
inline const std::string answer = "__G";
inline const std::string at = "__A";
inline const std::string keep = "__B";
inline const std::string in = "__In";
inline const std::string out = "__Out";
}  // namespace offline_names

// Nonrecursive, connected, no time points in rules. Object constants are
// allowed: containment mappings fix them.
inline void require_offline_fragment(const query& q) {
    require_valid(q.prog);
    auto* s = q.prog.find(q.output);
    if (!s || !s->temporal) throw validation_error("output predicate must be temporal");
    auto a = analyze(q.prog);
    if (!a.is_nonrecursive)
        throw validation_error("recursive query: delay and window are undecidable in general; " + no_window_status);
    if (!a.is_connected) throw validation_error("query is not connected: delay and window are undecidable in general");
    if (a.has_time_points) throw validation_error("rules with time points are not supported here");
}

namespace offline_detail {

inline atom unary(const std::string& p, time_point k = 0) { return {p, {}, time_term::at("t", k)}; }

inline std::vector<object_term> answer_vars(const query& q) { return fresh_vars(q.prog.find(q.output)->objects); }

// G(x, t) <- P_Q(x, t) & guard(t)
inline rule guarded_answer(const query& q, const std::string& guard) {
    auto xs = answer_vars(q);
    return {atom{offline_names::answer, xs, time_term::at("t")}, {atom{q.output, xs, time_term::at("t")}, unary(guard)}};
}

inline void declare(program& p, const std::string& name, std::size_t objects, origin o) {
    p.preds[name] = {name, objects, true, o};
}

// psi(program) plus P(x, t) & B(t) -> P'(x, t) for every temporal EDB P.
inline program filtered_copy(const query& q) {
    program p = rename_temporal_edb(q.prog);
    declare(p, offline_names::keep, 0, origin::idb);
    for (auto& name : temporal_edb_preds(q.prog)) {
        auto xs = fresh_vars(q.prog.find(name)->objects);
        p.preds[name] = *q.prog.find(name);
        p.rules.push_back({atom{renamed(name), xs, time_term::at("t")},
                           {atom{name, xs, time_term::at("t")}, unary(offline_names::keep)}});
    }
    return p;
}

}  // namespace offline_detail

// Q1 answers Q wherever A holds; Q2 does the same from the data within
// [t - rad, t + d] only.
inline std::pair<query, query> build_delay_queries(const query& q, time_point d) {
    using namespace offline_detail;
    require_offline_fragment(q);
    if (d < 0) throw validation_error("delay must be nonnegative");
    auto rad = analyze(q.prog).program_radius;
    auto arity = q.prog.find(q.output)->objects;

    query q1{offline_names::answer, q.prog};
    declare(q1.prog, offline_names::at, 0, origin::edb);
    declare(q1.prog, offline_names::answer, arity, origin::idb);
    q1.prog.rules.push_back(guarded_answer(q, offline_names::at));

    query q2{offline_names::answer, filtered_copy(q)};
    declare(q2.prog, offline_names::at, 0, origin::edb);
    declare(q2.prog, offline_names::answer, arity, origin::idb);
    q2.prog.rules.push_back(guarded_answer(q, offline_names::at));
    for (time_point k = -rad; k <= d; ++k)
        q2.prog.rules.push_back({unary(offline_names::keep, k), {unary(offline_names::at)}});
    return {q1, q2};
}

inline bool decide_delay(const query& q, time_point d, containment_options opt = {}) {
    auto [q1, q2] = build_delay_queries(q, d);
    opt.unfolding.single_time.insert(offline_names::at);
    return decide_containment_grounded(q1, q2, opt).holds;
}

inline time_point minimal_delay(const query& q, containment_options opt = {}) {
    require_offline_fragment(q);
    auto rad = analyze(q.prog).program_radius;
    for (time_point d = 0; d <= rad; ++d)
        if (decide_delay(q, d, opt)) return d;
    throw std::logic_error("delay equal to the radius was rejected");
}

// The window construction for answers at (t_in - d, t_in - s + rad]. Q1 sees
// data after t_in - d - rad, Q2 only data after t_in - s. Empty when no
// output point is constrained.
inline std::optional<std::pair<query, query>> build_window_queries(const query& q, time_point d, time_point s) {
    using namespace offline_detail;
    require_offline_fragment(q);
    if (d < 0 || s < 0) throw validation_error("delay and window size must be nonnegative");
    auto rad = analyze(q.prog).program_radius;
    if (-d >= -s + rad) return std::nullopt;
    auto arity = q.prog.find(q.output)->objects;

    auto build = [&](time_point j) {
        query out{offline_names::answer, filtered_copy(q)};
        auto& p = out.prog;
        declare(p, offline_names::in, 0, origin::edb);
        declare(p, offline_names::out, 0, origin::idb);
        declare(p, offline_names::answer, arity, origin::idb);
        for (time_point k = -d + 1; k <= -s + rad; ++k)
            p.rules.push_back({unary(offline_names::out, k), {unary(offline_names::in)}});
        p.rules.push_back(guarded_answer(q, offline_names::out));
        for (time_point l = -j + 1; l <= -s + 2 * rad; ++l)
            p.rules.push_back({unary(offline_names::keep, l), {unary(offline_names::in)}});
        return out;
    };
    return std::pair{build(d + rad), build(s)};
}

inline bool decide_window(const query& q, time_point d, time_point s, containment_options opt = {}) {
    auto qs = build_window_queries(q, d, s);
    if (!qs) return true;
    // one t_in per instance: datasets with several __In facts say nothing more
    opt.unfolding.single_time.insert(offline_names::in);
    return decide_containment_grounded(qs->first, qs->second, opt).holds;
}

inline time_point minimal_window(const query& q, time_point d, containment_options opt = {}) {
    if (!decide_delay(q, d, opt)) throw validation_error(std::to_string(d) + " is not a valid delay");
    auto rad = analyze(q.prog).program_radius;
    for (time_point s = 0; s <= d + rad; ++s)
        if (decide_window(q, d, s, opt)) return s;
    throw std::logic_error("window size d + radius was rejected");
}

struct offline_oracle_options {
    std::size_t fresh_objects = 2;
    std::size_t max_size = 0;  // 0 picks witness_size_bound
    std::uint64_t max_checks = 4'000'000;
};

struct offline_counterexample {
    bool holds = true;
    dataset history;  // at or before t_in = 0
    dataset update;   // after t_in
    time_point t_out = 0;
};

namespace offline_detail {

inline std::vector<std::string> oracle_domain(const query& q, std::size_t fresh) {
    auto objs = objects_of(q.prog);
    std::vector<std::string> out(objs.begin(), objs.end());
    for (std::size_t i = 1; i <= fresh; ++i) out.push_back("__o" + std::to_string(i));
    return out;
}

// EDB facts over the domain, temporal ones at times in [lo, hi].
inline std::vector<fact> candidates(const query& q, const std::vector<std::string>& domain, time_point lo, time_point hi) {
    std::vector<fact> out;
    for (auto& [name, sig] : q.prog.preds) {
        if (sig.kind != origin::edb) continue;
        for (auto& tup : all_tuples(domain, sig.objects)) {
            if (!sig.temporal)
                out.push_back({name, tup, std::nullopt});
            else
                for (time_point t = lo; t <= hi; ++t) out.push_back({name, tup, t});
        }
    }
    return out;
}

// Looks for a dataset W and t_out with an answer in Q(W, t_out) missing from
// Q(kept part of W, t_out). By monotonicity a minimal such W has
// at most witness_size_bound facts.
inline offline_counterexample search(const query& q, const std::vector<time_point>& outs, time_point lo, time_point hi,
                                     const std::function<bool(const fact&)>& keep, const offline_oracle_options& opt) {
    auto cand = candidates(q, oracle_domain(q, opt.fresh_objects), lo, hi);
    std::size_t k = opt.max_size ? opt.max_size : witness_size_bound(q.prog, q.output);
    evaluator ev(q.prog);
    offline_counterexample res;
    std::uint64_t checks = 0;
    for_each_subset(cand.size(), k, [&](const std::vector<std::size_t>& pick) {
        if (++checks > opt.max_checks) throw decision_error("oracle: enumeration too large");
        dataset w, kept;
        for (auto i : pick) {
            w.insert(cand[i]);
            if (keep(cand[i])) kept.insert(cand[i]);
        }
        if (w.size() == kept.size()) return false;
        time_window span{*std::min_element(outs.begin(), outs.end()), *std::max_element(outs.begin(), outs.end())};
        auto every = ev.answers_in(w, q.output, span);
        auto some = ev.answers_in(kept, q.output, span);
        for (auto t : outs) {
            auto& all = every[t];
            auto& part = some[t];
            if (!std::includes(part.begin(), part.end(), all.begin(), all.end())) {
                res.holds = false;
                res.t_out = t;
                for (auto& f : w) (f.time && *f.time > 0 ? res.update : res.history).insert(f);
                return true;
            }
        }
        return false;
    });
    return res;
}

}  // namespace offline_detail

// Exhaustive check at t_in = 0: the answers at -d from a history and an update
// must not depend on the update.
inline offline_counterexample delay_oracle(const query& q, time_point d, offline_oracle_options opt = {}) {
    require_offline_fragment(q);
    auto reach = derivation_span(q);
    auto history = [](const fact& f) { return !f.time || *f.time <= 0; };
    return offline_detail::search(q, {-d}, -d - reach, -d + reach, history, opt);
}

// Exhaustive check at t_in = 0: answers at t_out > -d must not depend on
// history facts at or before -s.
inline offline_counterexample window_oracle(const query& q, time_point d, time_point s, offline_oracle_options opt = {}) {
    require_offline_fragment(q);
    auto rad = analyze(q.prog).program_radius;
    std::vector<time_point> outs;
    for (time_point t = -d + 1; t <= -s + rad; ++t) outs.push_back(t);
    if (outs.empty()) return {};
    auto reach = derivation_span(q);
    auto kept = [s](const fact& f) { return !f.time || *f.time > -s; };
    return offline_detail::search(q, outs, -d + 1 - reach, -s + rad + reach, kept, opt);
}

}  // namespace tdl
