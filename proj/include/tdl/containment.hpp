#pragma once

#include <random>

#include "engine.hpp"
#include "search.hpp"

namespace tdl {

// Conjunctive query: answer atom plus a body of EDB atoms.
struct cq {
    atom head;
    std::vector<atom> body;
    auto operator<=>(const cq&) const = default;
};

using ucq = std::vector<cq>;

struct substitution {
    std::map<std::string, object_term> objs;
    std::map<std::string, time_term> times;

    object_term apply(object_term t) const {
        while (t.is_var) {
            auto it = objs.find(t.name);
            if (it == objs.end()) break;
            t = it->second;
        }
        return t;
    }
    time_term apply(time_term t) const {
        while (t.var) {
            auto it = times.find(*t.var);
            if (it == times.end()) break;
            auto& r = it->second;
            t = r.var ? time_term::at(*r.var, r.value + t.value) : time_term::point(r.value + t.value);
        }
        return t;
    }
    atom apply(const atom& a) const {
        atom out{a.pred, {}, std::nullopt};
        for (auto& t : a.args) out.args.push_back(apply(t));
        if (a.time) out.time = apply(*a.time);
        return out;
    }
};

inline bool unify_objects(const object_term& x, const object_term& y, substitution& s) {
    auto a = s.apply(x), b = s.apply(y);
    if (a == b) return true;
    if (a.is_var) return s.objs[a.name] = b, true;
    if (b.is_var) return s.objs[b.name] = a, true;
    return false;
}

inline bool unify_times(const time_term& x, const time_term& y, substitution& s) {
    auto a = s.apply(x), b = s.apply(y);
    if (a.is_point() && b.is_point()) return a.value == b.value;
    if (a.is_point()) std::swap(a, b);
    if (b.is_point()) return s.times[*a.var] = time_term::point(b.value - a.value), true;
    if (*a.var == *b.var) return a.value == b.value;
    s.times[*a.var] = time_term::at(*b.var, b.value - a.value);
    return true;
}

// Most general unifier of two atoms (the predicate names are not compared).
inline bool unify_args(const atom& a, const atom& b, substitution& s) {
    if (a.args.size() != b.args.size() || a.temporal() != b.temporal()) return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!unify_objects(a.args[i], b.args[i], s)) return false;
    return !a.time || unify_times(*a.time, *b.time, s);
}

struct unfold_options {
    std::size_t max_cqs = 100'000;
    std::optional<time_window> window;  // atoms at time points outside are not derivable
    std::set<std::string> single_time;  // EDB predicates whose atoms must all share one time point
};

// Answer atom over variables h0.. at `t`; a rigid anchor when `t` is empty.
inline atom anchor_atom(const program& p, const std::string& pred, std::optional<time_point> t) {
    auto* s = p.find(pred);
    if (!s) throw validation_error("unknown predicate '" + pred + "'");
    atom a{pred, fresh_vars(s->objects, "h"), std::nullopt};
    if (s->temporal) a.time = t ? time_term::point(*t) : time_term::at("T");
    return a;
}

// Maximal unfoldings of `anchor` into EDB atoms. Facts of the program
// unify with an atom and remove it; EDB atoms may also stay as leaves.
inline ucq unfold(const query& q, const atom& anchor, unfold_options opt = {}) {
    const program& p = q.prog;
    if (!analyze(p).is_nonrecursive) throw validation_error("cannot unfold a recursive query");

    std::map<std::string, std::vector<std::size_t>> free_heads;                      // head time not a point
    std::map<std::pair<std::string, time_point>, std::vector<std::size_t>> at_heads;  // head time a point
    for (std::size_t i = 0; i < p.rules.size(); ++i) {
        auto& h = p.rules[i].head;
        if (h.time && h.time->is_point())
            at_heads[{h.pred, h.time->value}].push_back(i);
        else
            free_heads[h.pred].push_back(i);
    }
    auto in_window = [&](const atom& a) {
        return !opt.window || !a.time || !a.time->is_point() || opt.window->contains(a.time->value);
    };

    struct partial {
        atom head;
        std::vector<atom> goals;
        std::vector<atom> leaves;
    };
    std::size_t counter = 0;
    auto rename = [&](const rule& r) {
        std::map<std::string, std::string> names;
        auto fresh = [&](const std::string& v) {
            auto [it, isnew] = names.try_emplace(v, "");
            if (isnew) it->second = "v" + std::to_string(counter++);
            return it->second;
        };
        auto fix = [&](const atom& a) {
            atom out{a.pred, {}, a.time};
            for (auto& t : a.args) out.args.push_back(t.is_var ? object_term::var(fresh("o:" + t.name)) : t);
            if (a.time && a.time->var) out.time = time_term::at(fresh("t:" + *a.time->var), a.time->value);
            return out;
        };
        rule out{fix(r.head), {}};
        for (auto& b : r.body) out.body.push_back(fix(b));
        return out;
    };

    ucq out;
    std::set<cq> seen;
    std::vector<partial> stack{{anchor, {anchor}, {}}};
    while (!stack.empty()) {
        auto cur = std::move(stack.back());
        stack.pop_back();
        auto it = std::find_if(cur.goals.begin(), cur.goals.end(), [&](const atom& a) { return p.is_idb(a.pred); });
        if (it == cur.goals.end()) {
            cq c{cur.head, cur.leaves};
            c.body.insert(c.body.end(), cur.goals.begin(), cur.goals.end());
            std::sort(c.body.begin(), c.body.end());
            c.body.erase(std::unique(c.body.begin(), c.body.end()), c.body.end());
            if (seen.insert(c).second) {
                out.push_back(std::move(c));
                if (out.size() > opt.max_cqs) throw decision_error("unfolding exceeds " + std::to_string(opt.max_cqs) + " conjunctive queries");
            }
            continue;
        }
        atom goal = *it;
        std::vector<atom> rest(cur.goals.begin(), it);
        rest.insert(rest.end(), std::next(it), cur.goals.end());

        std::vector<std::size_t> cands;
        if (auto f = free_heads.find(goal.pred); f != free_heads.end()) cands = f->second;
        if (goal.time && goal.time->is_point()) {
            if (auto f = at_heads.find({goal.pred, goal.time->value}); f != at_heads.end())
                cands.insert(cands.end(), f->second.begin(), f->second.end());
        } else {
            for (auto& [key, v] : at_heads)
                if (key.first == goal.pred) cands.insert(cands.end(), v.begin(), v.end());
        }
        std::sort(cands.begin(), cands.end());
        // push in reverse so the first rule is expanded first
        for (auto ri = cands.rbegin(); ri != cands.rend(); ++ri) {
            rule r = rename(p.rules[*ri]);
            substitution s;
            if (!unify_args(goal, r.head, s)) continue;
            partial next;
            next.head = s.apply(cur.head);
            bool ok = in_window(next.head);
            for (auto& g : rest) next.goals.push_back(s.apply(g));
            for (auto& b : r.body) next.goals.push_back(s.apply(b));
            for (auto& l : cur.leaves) next.leaves.push_back(s.apply(l));
            for (auto& g : next.goals) ok = ok && in_window(g);
            for (auto& l : next.leaves) ok = ok && in_window(l);
            if (ok && !opt.single_time.empty()) {
                std::map<std::string, time_point> seen_at;
                auto same = [&](const atom& a) {
                    if (!opt.single_time.count(a.pred) || !a.time || !a.time->is_point()) return true;
                    return seen_at.try_emplace(a.pred, a.time->value).first->second == a.time->value;
                };
                for (auto& g : next.goals) ok = ok && same(g);
                for (auto& l : next.leaves) ok = ok && same(l);
            }
            if (ok) stack.push_back(std::move(next));
        }
    }

    // EDB facts embedded in the program can discharge leaves
    std::vector<fact> edb_facts;
    for (auto& r : p.rules)
        if (r.body.empty() && p.is_edb(r.head.pred)) edb_facts.push_back(*to_fact(r.head));
    if (edb_facts.empty()) return out;
    ucq expanded;
    std::set<cq> seen2;
    for (auto& c : out) {
        std::vector<cq> work{c};
        for (std::size_t i = 0; i < work.size(); ++i) {
            if (seen2.insert(work[i]).second) expanded.push_back(work[i]);
            for (std::size_t j = 0; j < work[i].body.size(); ++j)
                for (auto& f : edb_facts) {
                    substitution s;
                    if (work[i].body[j].pred != f.pred || !unify_args(work[i].body[j], to_atom(f), s)) continue;
                    cq n{s.apply(work[i].head), {}};
                    for (std::size_t k = 0; k < work[i].body.size(); ++k)
                        if (k != j) n.body.push_back(s.apply(work[i].body[k]));
                    std::sort(n.body.begin(), n.body.end());
                    n.body.erase(std::unique(n.body.begin(), n.body.end()), n.body.end());
                    work.push_back(std::move(n));
                    if (work.size() > opt.max_cqs) throw decision_error("unfolding exceeds the cap");
                }
        }
    }
    return expanded;
}

// Substitution on the variables of the source query.
struct containment_mapping {
    std::map<std::string, object_term> objs;
    std::map<std::string, time_term> times;
};

namespace contain_detail {

inline bool map_object(const object_term& from, const object_term& to, containment_mapping& m) {
    if (!from.is_var) return !to.is_var && to.name == from.name;
    auto [it, fresh] = m.objs.try_emplace(from.name, to);
    return fresh || it->second == to;
}

inline bool map_time(const time_term& from, const time_term& to, containment_mapping& m) {
    if (from.is_point()) return to.is_point() && to.value == from.value;
    // from = v + c maps onto `to`, so v maps onto to - c
    time_term img = to.is_point() ? time_term::point(to.value - from.value) : time_term::at(*to.var, to.value - from.value);
    auto [it, fresh] = m.times.try_emplace(*from.var, img);
    return fresh || it->second == img;
}

inline bool map_atom(const atom& from, const atom& to, containment_mapping& m) {
    if (from.args.size() != to.args.size() || from.temporal() != to.temporal()) return false;
    for (std::size_t i = 0; i < from.args.size(); ++i)
        if (!map_object(from.args[i], to.args[i], m)) return false;
    return !from.time || map_time(*from.time, *to.time, m);
}

}  // namespace contain_detail

// A mapping of `from` into `to` (head onto head, body into body, constants
// fixed). A mapping from a disjunct of Q2 into a disjunct of Q1 shows that the
// Q1 disjunct is contained in Q2.
inline std::optional<containment_mapping> find_containment_mapping(const cq& from, const cq& to) {
    containment_mapping m;
    if (!contain_detail::map_atom(from.head, to.head, m)) return std::nullopt;
    std::vector<std::vector<const atom*>> cands(from.body.size());
    for (std::size_t i = 0; i < from.body.size(); ++i)
        for (auto& t : to.body)
            if (t.pred == from.body[i].pred) cands[i].push_back(&t);
    std::vector<std::size_t> order(from.body.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return cands[a].size() < cands[b].size(); });
    auto go = [&](auto& self, std::size_t k, containment_mapping& cur) -> bool {
        if (k == order.size()) return true;
        for (auto* t : cands[order[k]]) {
            auto next = cur;
            if (!contain_detail::map_atom(from.body[order[k]], *t, next)) continue;
            if (self(self, k + 1, next)) {
                cur = std::move(next);
                return true;
            }
        }
        return false;
    };
    if (!go(go, 0, m)) return std::nullopt;
    return m;
}

// Freezes variables into fresh objects; all times must already be points.
inline std::optional<std::pair<dataset, fact>> canonical_database(const cq& c) {
    auto freeze = [](const atom& a) -> std::optional<fact> {
        fact f{a.pred, {}, std::nullopt};
        for (auto& t : a.args) f.args.push_back(t.is_var ? "__c_" + t.name : t.name);
        if (a.time) {
            if (!a.time->is_point()) return std::nullopt;
            f.time = a.time->value;
        }
        return f;
    };
    dataset d;
    for (auto& b : c.body) {
        auto f = freeze(b);
        if (!f) return std::nullopt;
        d.insert(*f);
    }
    auto h = freeze(c.head);
    if (!h) return std::nullopt;
    return std::pair{std::move(d), std::move(*h)};
}

enum class containment_strategy { automatic, mappings, canonical };

struct containment_options {
    containment_strategy how = containment_strategy::automatic;
    unfold_options unfolding;
    std::size_t mapping_budget = 2'000;  // automatic: largest Q2 unfolding searched with mappings
    std::optional<query> q2_model;       // saturated on canonical databases in place of Q2; same model inside the window
};

struct containment_result {
    bool holds = true;
    std::optional<cq> counterexample;  // a disjunct of Q1 not covered by Q2
    std::optional<time_point> anchor;
};

inline void require_same_profile(const query& q1, const query& q2) {
    auto* a = q1.prog.find(q1.output);
    auto* b = q2.prog.find(q2.output);
    if (!a || !b) throw validation_error("output predicate missing");
    if (a->objects != b->objects || a->temporal != b->temporal)
        throw validation_error("queries have different answer profiles");
}

// Q1 ⊑ Q2 restricted to answers at the given anchor times (ignored for rigid
// outputs): every disjunct of Q1's unfolding must be covered by Q2.
inline containment_result decide_containment_unfolded(const query& q1, const query& q2,
                                                      const std::vector<time_point>& anchors,
                                                      containment_options opt = {}) {
    require_same_profile(q1, q2);
    bool rigid = !q1.prog.find(q1.output)->temporal;
    std::vector<std::optional<time_point>> points;
    if (rigid)
        points.push_back(std::nullopt);
    else
        for (auto t : anchors) points.push_back(t);

    std::optional<evaluator> ev2;
    for (auto& at : points) {
        auto u1 = unfold(q1, anchor_atom(q1.prog, q1.output, at), opt.unfolding);
        if (u1.empty()) continue;
        std::optional<ucq> u2;
        auto how = opt.how;
        if (how != containment_strategy::canonical) {
            auto small = opt.unfolding;
            if (how == containment_strategy::automatic) small.max_cqs = opt.mapping_budget;
            try {
                u2 = unfold(q2, anchor_atom(q2.prog, q2.output, at), small);
                how = containment_strategy::mappings;
            } catch (const decision_error&) {
                if (how == containment_strategy::mappings) throw;
                how = containment_strategy::canonical;
            }
        }
        for (auto& c1 : u1) {
            bool covered = false;
            if (how == containment_strategy::mappings) {
                for (auto& c2 : *u2)
                    if (find_containment_mapping(c2, c1)) {
                        covered = true;
                        break;
                    }
            } else {
                auto canon = canonical_database(c1);
                if (!canon) throw validation_error("canonical database needs concrete times");
                if (!ev2) ev2.emplace(opt.q2_model ? opt.q2_model->prog : q2.prog);
                auto& [db, head] = *canon;
                if (rigid)
                    covered = ev2->rigid_answers(db, q2.output).count(head.args) > 0;
                else {
                    // derived facts outside the unfolding window do not exist in the grounded reading
                    if (opt.unfolding.window) {
                        auto model = ev2->saturate(db, opt.unfolding.window);
                        covered = model.tuples_at(q2.output, *head.time).count(head.args) > 0;
                    } else {
                        covered = ev2->answers_at(db, q2.output, *head.time).count(head.args) > 0;
                    }
                }
            }
            if (!covered) return {false, c1, at};
        }
    }
    return {};
}

// Adds G(x, m) -> G'(x, m) and makes G' the output.
inline query with_output_at(query g, const std::string& pred, const predicate_sig& sig, time_point m) {
    g.output = pred + "__g";
    g.prog.preds[g.output] = {g.output, sig.objects, true, origin::idb};
    auto xs = fresh_vars(sig.objects);
    g.prog.rules.push_back({atom{g.output, xs, time_term::point(m)}, {atom{pred, xs, time_term::point(m)}}});
    return g;
}

// Instantiates every rule at the time points keeping all its atoms inside
// [0, 2m] and adds G(x, m) -> G'(x, m). Rigid outputs keep the rigid rules only.
inline query temporal_grounding(const query& q, time_point m) {
    auto a = analyze(q.prog);
    if (!a.is_nonrecursive || !a.is_connected || a.has_time_points)
        throw validation_error("grounding needs a nonrecursive, connected query without time points");
    auto* out_sig = q.prog.find(q.output);
    if (!out_sig) throw validation_error("unknown output predicate");
    query g;
    g.prog.preds = q.prog.preds;
    if (!out_sig->temporal) {
        g.output = q.output;
        for (auto& r : q.prog.rules)
            if (!q.prog.find(r.head.pred)->temporal) g.prog.rules.push_back(r);
        return g;
    }
    time_point lo = 0, hi = 2 * m;
    for (auto& r : q.prog.rules) {
        auto vars = time_vars_of(r);
        if (vars.empty()) {
            g.prog.rules.push_back(r);
            continue;
        }
        const std::string& v = *vars.begin();
        time_point min_off = std::numeric_limits<time_point>::max(), max_off = std::numeric_limits<time_point>::min();
        auto scan = [&](const atom& x) {
            if (x.time && x.time->var) min_off = std::min(min_off, x.time->value), max_off = std::max(max_off, x.time->value);
        };
        scan(r.head);
        for (auto& b : r.body) scan(b);
        for (time_point t = lo - min_off; t <= hi - max_off; ++t) {
            substitution s;
            s.times[v] = time_term::point(t);
            rule gr{s.apply(r.head), {}};
            for (auto& b : r.body) gr.body.push_back(s.apply(b));
            g.prog.rules.push_back(std::move(gr));
        }
    }
    return with_output_at(std::move(g), q.output, *out_sig, m);
}

// Containment of nonrecursive, connected queries without time points, via
// grounding both over [0, 2m] with m the larger program radius.
inline containment_result decide_containment_grounded(const query& q1, const query& q2, containment_options opt = {}) {
    require_same_profile(q1, q2);
    time_point m = std::max(analyze(q1.prog).program_radius, analyze(q2.prog).program_radius);
    auto g1 = temporal_grounding(q1, m);
    auto g2 = temporal_grounding(q2, m);
    opt.unfolding.window = time_window{0, 2 * m};
    // saturating the ungrounded program inside the window yields the grounding's model, with far fewer rules
    if (auto* sig = q2.prog.find(q2.output); sig->temporal) opt.q2_model = with_output_at(q2, q2.output, *sig, m);
    return decide_containment_unfolded(g1, g2, {m}, opt);
}

struct containment_oracle_result {
    bool holds = true;
    dataset witness;
    std::optional<time_point> at;
};

// Looks for a dataset on which some answer of Q1 is missing from Q2: first the
// canonical databases of Q1's unfolding, then random small datasets.
inline containment_oracle_result containment_oracle(const query& q1, const query& q2, const std::vector<time_point>& anchors,
                                                    std::size_t trials, std::uint64_t seed = 1) {
    require_same_profile(q1, q2);
    bool rigid = !q1.prog.find(q1.output)->temporal;
    evaluator e1(q1.prog), e2(q2.prog);
    auto answers = [&](const evaluator& e, const query& q, const dataset& d, time_point t) {
        return rigid ? e.rigid_answers(d, q.output) : e.answers_at(d, q.output, t);
    };
    auto violated = [&](const dataset& d, time_point t) {
        auto a1 = answers(e1, q1, d, t), a2 = answers(e2, q2, d, t);
        return !std::includes(a2.begin(), a2.end(), a1.begin(), a1.end());
    };
    std::vector<time_point> pts = rigid ? std::vector<time_point>{0} : anchors;

    if (analyze(q1.prog).is_nonrecursive)
        for (auto t : pts) {
            for (auto& c : unfold(q1, anchor_atom(q1.prog, q1.output, rigid ? std::nullopt : std::optional<time_point>(t)))) {
                auto canon = canonical_database(c);
                if (canon && violated(canon->first, t)) return {false, canon->first, t};
            }
        }

    std::set<std::string> preds;
    for (auto* p : {&q1.prog, &q2.prog})
        for (auto& [n, s] : p->preds)
            if (s.kind == origin::edb) preds.insert(n);
    auto objs = objects_of(q1.prog);
    objs.merge(objects_of(q2.prog));
    objs.insert({"o1", "o2"});
    std::vector<std::string> domain(objs.begin(), objs.end());
    time_point reach = std::max<time_point>(
        2, std::max(analyze(q1.prog).program_radius, analyze(q2.prog).program_radius));
    time_point lo = pts.empty() ? 0 : *std::min_element(pts.begin(), pts.end()) - reach;
    time_point hi = pts.empty() ? 0 : *std::max_element(pts.begin(), pts.end()) + reach;
    auto tp = time_points_of(q1.prog);
    tp.merge(time_points_of(q2.prog));
    if (!tp.empty()) lo = std::min(lo, *tp.begin()), hi = std::max(hi, *tp.rbegin());

    std::vector<fact> universe;
    for (auto& n : preds) {
        auto* s = q1.prog.find(n) ? q1.prog.find(n) : q2.prog.find(n);
        for (auto& tup : all_tuples(domain, s->objects)) {
            if (!s->temporal)
                universe.push_back({n, tup, std::nullopt});
            else
                for (time_point t = lo; t <= hi; ++t) universe.push_back({n, tup, t});
        }
    }
    std::mt19937_64 rng(seed);
    for (std::size_t trial = 0; trial < trials && !universe.empty(); ++trial) {
        double density = std::uniform_real_distribution<double>(0.05, 0.6)(rng);
        std::bernoulli_distribution keep(density);
        dataset d;
        for (auto& f : universe)
            if (keep(rng)) d.insert(f);
        for (auto t : pts)
            if (violated(d, t)) return {false, d, t};
    }
    return {};
}

}  // namespace tdl
