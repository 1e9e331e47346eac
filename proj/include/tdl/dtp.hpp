#pragma once

#include "engine.hpp"
#include "search.hpp"

namespace tdl {

inline const std::string fresh_object = "__fresh_obj";
inline const std::string marker_pred = "__A";
inline const std::string future_pred = "__V";

struct dtp_instance {
    query q;
    dataset history;
    time_point t_in = 0;
    time_point t_out = 0;
};

inline void check_instance(const dtp_instance& in) {
    require_valid(in.q.prog, {true});
    auto* s = in.q.prog.find(in.q.output);
    if (!s || !s->temporal) throw validation_error("output predicate must be temporal");
    if (!is_history(in.history, in.t_in)) throw validation_error("history has facts after t_in");
    if (in.t_out > in.t_in) throw validation_error("t_out exceeds t_in");
}

// Objects of the program and the history plus one fresh object.
inline std::vector<std::string> critical_domain(const query& q, const dataset& d) {
    auto objs = objects_of(q.prog);
    objs.merge(objects_of(d));
    objs.insert(fresh_object);
    return {objs.begin(), objs.end()};
}

inline std::vector<std::string> critical_domain(const dtp_instance& in) { return critical_domain(in.q, in.history); }

// Every temporal EDB fact over the domain at each of `times`.
inline dataset saturating_update(const program& p, const std::vector<std::string>& domain,
                                 const std::vector<time_point>& times) {
    dataset out;
    for (auto& name : temporal_edb_preds(p)) {
        auto& sig = *p.find(name);
        for (auto& tup : all_tuples(domain, sig.objects))
            for (auto t : times) out.insert({name, tup, t});
    }
    return out;
}

inline dataset critical_update(const dtp_instance& in) {
    auto u = saturating_update(in.q.prog, critical_domain(in), {in.t_in + 1});
    u.insert({marker_pred, {}, in.t_in + 1});
    return u;
}

// The query with its temporal EDB predicates renamed, plus rules that carry
// the marked update into the whole future.
inline query critical_query(const query& q) {
    query out{q.output, rename_temporal_edb(q.prog)};
    auto& p = out.prog;
    p.preds[marker_pred] = {marker_pred, 0, true, origin::edb};
    p.preds[future_pred] = {future_pred, 0, true, origin::idb};
    auto unary = [](const std::string& n, time_point k) { return atom{n, {}, time_term::at("t", k)}; };
    p.rules.push_back({unary(future_pred, 0), {unary(marker_pred, 0)}});
    p.rules.push_back({unary(future_pred, 1), {unary(future_pred, 0)}});
    for (auto& name : temporal_edb_preds(q.prog)) {
        auto& sig = *q.prog.find(name);
        p.preds[name] = sig;
        auto xs = fresh_vars(sig.objects);
        atom orig{name, xs, time_term::at("t")};
        atom copy{renamed(name), xs, time_term::at("t")};
        atom next{renamed(name), xs, time_term::at("t", 1)};
        p.rules.push_back({copy, {orig}});
        p.rules.push_back({next, {unary(future_pred, 1), copy}});
    }
    return out;
}

inline bool answers_stable(const answer_set& before, const answer_set& after) {
    return std::includes(before.begin(), before.end(), after.begin(), after.end());
}

inline bool decide_dtp_general(const dtp_instance& in, engine_options opt = {}) {
    check_instance(in);
    auto cq = critical_query(in.q);
    evaluator ev(cq.prog, opt);
    auto base = ev.answers_at(in.history, cq.output, in.t_out);
    auto extended = in.history;
    extended.merge(critical_update(in));
    auto grown = ev.answers_at(extended, cq.output, in.t_out);
    return answers_stable(base, grown);
}

inline void require_nonrecursive_connected(const program& p) {
    auto a = analyze(p);
    if (!a.is_nonrecursive) throw validation_error("query is recursive");
    if (!a.is_connected) throw validation_error("query is not connected");
}

// Critical time points: t_in < t <= max(t_out, time points of the program) + rad.
inline std::vector<time_point> critical_time_points(const dtp_instance& in) {
    auto a = analyze(in.q.prog);
    auto points = time_points_of(in.q.prog);
    time_point t0 = in.t_out;
    if (!points.empty()) t0 = std::max(t0, *points.rbegin());
    std::vector<time_point> out;
    for (time_point t = in.t_in + 1; t <= t0 + a.program_radius; ++t) out.push_back(t);
    return out;
}

inline dataset bounded_critical_update(const dtp_instance& in) {
    require_nonrecursive_connected(in.q.prog);
    return saturating_update(in.q.prog, critical_domain(in), critical_time_points(in));
}

inline bool decide_dtp_nonrecursive(const dtp_instance& in, engine_options opt = {}) {
    check_instance(in);
    require_nonrecursive_connected(in.q.prog);
    evaluator ev(in.q.prog, opt);
    auto base = ev.answers_at(in.history, in.q.output, in.t_out);
    auto extended = in.history;
    extended.merge(bounded_critical_update(in));
    return answers_stable(base, ev.answers_at(extended, in.q.output, in.t_out));
}

inline bool decide_dtp(const dtp_instance& in, engine_options opt = {}) {
    auto a = analyze(in.q.prog);
    if (a.is_nonrecursive && a.is_connected) return decide_dtp_nonrecursive(in, opt);
    return decide_dtp_general(in, opt);
}

struct oracle_result {
    bool holds = true;
    dataset witness;  // an update (or dataset) violating the property
    std::optional<time_point> at;
};

// Smallest horizon past t_in for which enumeration is exact on nonrecursive,
// connected queries.
inline time_point dtp_exact_bound(const dtp_instance& in) {
    auto a = analyze(in.q.prog);
    auto points = time_points_of(in.q.prog);
    time_point t0 = in.t_out;
    if (!points.empty()) t0 = std::max(t0, *points.rbegin());
    time_point bound = t0 - in.t_in + a.program_radius;
    // without time points an update can only matter within a derivation's reach of t_out
    if (points.empty() && a.is_nonrecursive && a.is_connected)
        bound = std::min(bound, in.t_out + derivation_span(in.q) - in.t_in);
    return std::max<time_point>(0, bound);
}

// Tries every update over `domain` with times in (t_in, t_in + bound].
inline oracle_result dtp_oracle(const dtp_instance& in, time_point bound, const std::vector<std::string>& domain,
                                oracle_options opt = {}) {
    check_instance(in);
    std::vector<time_point> times;
    for (time_point t = in.t_in + 1; t <= in.t_in + bound; ++t) times.push_back(t);
    auto cand_set = saturating_update(in.q.prog, domain, times);
    std::vector<fact> cand(cand_set.begin(), cand_set.end());
    std::size_t k = opt.max_size ? opt.max_size : witness_size_bound(in.q.prog, in.q.output);
    evaluator ev(in.q.prog);
    auto base = ev.answers_at(in.history, in.q.output, in.t_out);
    oracle_result res;
    std::uint64_t checks = 0;
    for_each_subset(cand.size(), k, [&](const std::vector<std::size_t>& pick) {
        if (++checks > opt.max_checks) throw decision_error("dtp oracle: enumeration too large");
        dataset d = in.history;
        dataset u;
        for (auto i : pick) u.insert(cand[i]);
        d.insert(u.begin(), u.end());
        if (ev.answers_at(d, in.q.output, in.t_out) != base) {
            res.holds = false;
            res.witness = std::move(u);
            return true;
        }
        return false;
    });
    return res;
}

}  // namespace tdl
