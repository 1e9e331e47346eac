#pragma once

#include "containment.hpp"
#include "dtp.hpp"

namespace tdl {

inline const std::string update_marker_pred = "__B";

struct forget_instance {
    query q;
    dataset history;
    time_point t_in = 0;
    time_point t_out = 0;
    time_point t_mem = 0;
};

// Nonrecursive, connected and no time points in rules.
inline void require_forget_fragment(const query& q) {
    require_valid(q.prog, {true});
    auto a = analyze(q.prog);
    if (!a.is_nonrecursive) throw validation_error("forget: query is recursive");
    if (!a.is_connected) throw validation_error("forget: query is not connected");
    if (a.has_time_points) throw validation_error("forget: rules with time points are not supported");
    auto* s = q.prog.find(q.output);
    if (!s || !s->temporal) throw validation_error("forget: output predicate must be temporal");
}

inline void check_instance(const forget_instance& in) {
    require_forget_fragment(in.q);
    if (!is_history(in.history, in.t_in)) throw validation_error("history has facts after t_in");
    // t_out may sit one past t_in: the online loop asks right after emitting at t_in
    if (in.t_mem > in.t_out || in.t_out > in.t_in + 1)
        throw validation_error("forget needs t_mem <= t_out <= t_in + 1");
}

struct relevant_intervals {
    time_window output;  // empty when lo > hi
    time_window update;
};

inline bool empty(const time_window& w) { return w.lo > w.hi; }

inline relevant_intervals relevant_points(const forget_instance& in) {
    require_forget_fragment(in.q);
    auto rad = analyze(in.q.prog).program_radius;
    return {{in.t_out, in.t_mem + rad}, {in.t_in + 1, in.t_mem + 2 * rad}};
}

// Every EDB predicate, rigid ones included, gets a closed copy: the embedded
// data is the only source of rigid facts since updates are temporal.
inline program rename_all_edb(const program& p) {
    return rename_edb(p, [](const predicate_sig&) { return true; });
}

// Q1 embeds the whole history, Q2 only the kept segment; both accept update
// facts at update-relevant points and answer at output-relevant points.
inline std::pair<query, query> build_forget_queries(const forget_instance& in) {
    check_instance(in);
    auto iv = relevant_points(in);
    const program& src = in.q.prog;
    program renamed_prog = rename_all_edb(src);

    program base;
    base.preds = renamed_prog.preds;
    for (auto& name : temporal_edb_preds(src)) base.preds[name] = *src.find(name);
    base.preds[update_marker_pred] = {update_marker_pred, 0, true, origin::idb};

    for (auto& r : renamed_prog.rules) {
        if (r.head.pred != in.q.output) {
            base.rules.push_back(r);
            continue;
        }
        auto vars = time_vars_of(r);
        for (time_point t = iv.output.lo; t <= iv.output.hi; ++t) {
            if (vars.empty()) {
                base.rules.push_back(r);
                break;
            }
            substitution s;
            s.times[*vars.begin()] = time_term::point(t - r.head.time->value);
            rule g{s.apply(r.head), {}};
            for (auto& b : r.body) g.body.push_back(s.apply(b));
            base.rules.push_back(std::move(g));
        }
    }
    for (auto& name : temporal_edb_preds(src)) {
        auto xs = fresh_vars(src.find(name)->objects);
        base.rules.push_back({atom{renamed(name), xs, time_term::at("t")},
                              {atom{name, xs, time_term::at("t")}, atom{update_marker_pred, {}, time_term::at("t")}}});
    }
    for (time_point t = iv.update.lo; t <= iv.update.hi; ++t)
        base.rules.push_back(fact_rule({update_marker_pred, {}, t}));

    auto with_data = [&](const dataset& d) {
        query q{in.q.output, base};
        for (auto f : d) {
            // facts of predicates outside the program cannot matter
            if (src.is_edb(f.pred))
                f.pred = renamed(f.pred);
            else if (!src.is_idb(f.pred))
                continue;
            q.prog.rules.push_back(fact_rule(f));
        }
        return q;
    };
    return {with_data(in.history), with_data(segment(in.history, in.t_mem))};
}

inline bool decide_forget(const forget_instance& in, containment_options opt = {}) {
    check_instance(in);
    auto iv = relevant_points(in);
    if (empty(iv.output)) return true;
    auto [q1, q2] = build_forget_queries(in);
    std::vector<time_point> anchors;
    for (time_point t = iv.output.lo; t <= iv.output.hi; ++t) anchors.push_back(t);
    return decide_containment_unfolded(q1, q2, anchors, opt).holds;
}

// Tries every update over `domain` at update-relevant points and compares the
// answers with and without the forgotten prefix at output-relevant points.
inline oracle_result forget_oracle(const forget_instance& in, const std::vector<std::string>& domain,
                                   oracle_options opt = {}) {
    check_instance(in);
    auto iv = relevant_points(in);
    if (empty(iv.output)) return {};
    std::vector<time_point> times;
    // facts beyond a derivation's reach of the output points cannot matter
    time_point last = std::min(iv.update.hi, iv.output.hi + derivation_span(in.q));
    for (time_point t = iv.update.lo; t <= last; ++t) times.push_back(t);
    auto cand_set = saturating_update(in.q.prog, domain, times);
    std::vector<fact> cand(cand_set.begin(), cand_set.end());
    std::size_t k = opt.max_size ? opt.max_size : witness_size_bound(in.q.prog, in.q.output);

    evaluator ev(in.q.prog);
    auto kept = segment(in.history, in.t_mem);
    oracle_result res;
    std::uint64_t checks = 0;
    for_each_subset(cand.size(), k, [&](const std::vector<std::size_t>& pick) {
        if (++checks > opt.max_checks) throw decision_error("forget oracle: enumeration too large");
        dataset full = in.history, part = kept, u;
        for (auto i : pick) u.insert(cand[i]);
        full.insert(u.begin(), u.end());
        part.insert(u.begin(), u.end());
        auto a = ev.answers_in(full, in.q.output, iv.output), b = ev.answers_in(part, in.q.output, iv.output);
        for (time_point t = iv.output.lo; t <= iv.output.hi; ++t)
            if (a[t] != b[t]) {
                res = {false, std::move(u), t};
                return true;
            }
        return false;
    });
    return res;
}

}  // namespace tdl
