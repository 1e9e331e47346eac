#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tdl {

using time_point = std::int64_t;

class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
// bad input: syntax, sorts, safety, unmet preconditions
class validation_error : public error {
public:
    using error::error;
};
// a decision procedure could not finish (horizon cap, enumeration cap)
class decision_error : public error {
public:
    using error::error;
};

struct object_term {
    std::string name;
    bool is_var = false;

    static object_term var(std::string n) { return {std::move(n), true}; }
    static object_term obj(std::string n) { return {std::move(n), false}; }
    auto operator<=>(const object_term&) const = default;
};

// A point, or a variable shifted by an integer offset.
struct time_term {
    std::optional<std::string> var;
    time_point value = 0;

    static time_term point(time_point t) { return {std::nullopt, t}; }
    static time_term at(std::string v, time_point k = 0) { return {std::move(v), k}; }
    bool is_point() const { return !var; }
    time_point offset() const { return var ? value : 0; }
    auto operator<=>(const time_term&) const = default;
};

struct atom {
    std::string pred;
    std::vector<object_term> args;
    std::optional<time_term> time;

    bool temporal() const { return time.has_value(); }
    bool ground() const {
        for (auto& a : args)
            if (a.is_var) return false;
        return !time || time->is_point();
    }
    auto operator<=>(const atom&) const = default;
};

struct rule {
    atom head;
    std::vector<atom> body;

    bool is_fact() const { return body.empty(); }
    auto operator<=>(const rule&) const = default;
};

enum class origin { edb, idb };

struct predicate_sig {
    std::string name;
    std::size_t objects = 0;  // number of object positions
    bool temporal = false;    // a trailing time position
    origin kind = origin::edb;

    std::size_t arity() const { return objects + (temporal ? 1 : 0); }
    bool operator==(const predicate_sig&) const = default;
};

struct program {
    std::vector<rule> rules;
    std::map<std::string, predicate_sig, std::less<>> preds;

    const predicate_sig* find(std::string_view name) const {
        auto it = preds.find(name);
        return it == preds.end() ? nullptr : &it->second;
    }
    bool is_idb(std::string_view name) const {
        auto* s = find(name);
        return s && s->kind == origin::idb;
    }
    bool is_edb(std::string_view name) const {
        auto* s = find(name);
        return s && s->kind == origin::edb;
    }
    bool operator==(const program&) const = default;
};

struct query {
    std::string output;
    program prog;
    bool operator==(const query&) const = default;
};

// Ground atom; ordering is predicate, then argument tuple, then time.
struct fact {
    std::string pred;
    std::vector<std::string> args;
    std::optional<time_point> time;

    bool temporal() const { return time.has_value(); }
    auto operator<=>(const fact&) const = default;
};

using dataset = std::set<fact>;
using tuple = std::vector<std::string>;
using answer_set = std::set<tuple>;

inline atom to_atom(const fact& f) {
    atom a{f.pred, {}, std::nullopt};
    for (auto& s : f.args) a.args.push_back(object_term::obj(s));
    if (f.time) a.time = time_term::point(*f.time);
    return a;
}

inline std::optional<fact> to_fact(const atom& a) {
    if (!a.ground()) return std::nullopt;
    fact f{a.pred, {}, std::nullopt};
    for (auto& t : a.args) f.args.push_back(t.name);
    if (a.time) f.time = a.time->value;
    return f;
}

inline rule fact_rule(const fact& f) { return {to_atom(f), {}}; }

inline std::set<std::string> objects_of(const atom& a) {
    std::set<std::string> out;
    for (auto& t : a.args)
        if (!t.is_var) out.insert(t.name);
    return out;
}

inline std::set<std::string> objects_of(const program& p) {
    std::set<std::string> out;
    for (auto& r : p.rules) {
        out.merge(objects_of(r.head));
        for (auto& b : r.body) out.merge(objects_of(b));
    }
    return out;
}

inline std::set<std::string> objects_of(const dataset& d) {
    std::set<std::string> out;
    for (auto& f : d) out.insert(f.args.begin(), f.args.end());
    return out;
}

inline std::set<time_point> time_points_of(const rule& r) {
    std::set<time_point> out;
    auto add = [&](const atom& a) {
        if (a.time && a.time->is_point()) out.insert(a.time->value);
    };
    add(r.head);
    for (auto& b : r.body) add(b);
    return out;
}

inline std::set<time_point> time_points_of(const program& p) {
    std::set<time_point> out;
    for (auto& r : p.rules) out.merge(time_points_of(r));
    return out;
}

inline std::set<std::string> time_vars_of(const atom& a) {
    if (a.time && a.time->var) return {*a.time->var};
    return {};
}

inline std::set<std::string> time_vars_of(const rule& r) {
    auto out = time_vars_of(r.head);
    for (auto& b : r.body) out.merge(time_vars_of(b));
    return out;
}

inline std::set<std::string> object_vars_of(const atom& a) {
    std::set<std::string> out;
    for (auto& t : a.args)
        if (t.is_var) out.insert(t.name);
    return out;
}

// Temporal EDB predicates mentioned by some rule.
inline std::vector<std::string> temporal_edb_preds(const program& p) {
    std::set<std::string> used;
    for (auto& r : p.rules) {
        used.insert(r.head.pred);
        for (auto& b : r.body) used.insert(b.pred);
    }
    std::vector<std::string> out;
    for (auto& n : used) {
        auto* s = p.find(n);
        if (s && s->kind == origin::edb && s->temporal) out.push_back(n);
    }
    return out;
}

// Fill in signatures for predicates that have none: temporal iff the atom has
// a time argument, IDB iff it heads a rule with a non-empty body.
inline void infer_signatures(program& p) {
    std::set<std::string> heads;
    for (auto& r : p.rules)
        if (!r.body.empty()) heads.insert(r.head.pred);
    auto note = [&](const atom& a) {
        if (p.preds.count(a.pred)) return;
        p.preds[a.pred] = {a.pred, a.args.size(), a.temporal(),
                           heads.count(a.pred) ? origin::idb : origin::edb};
    };
    for (auto& r : p.rules) {
        note(r.head);
        for (auto& b : r.body) note(b);
    }
}

inline program make_program(std::vector<rule> rules, std::vector<predicate_sig> sigs = {}) {
    program p;
    p.rules = std::move(rules);
    for (auto& s : sigs) p.preds[s.name] = s;
    infer_signatures(p);
    return p;
}

// ---------------------------------------------------------------------------
// validation

struct diagnostic {
    int rule_index = -1;  // -1 for program-level problems
    std::string message;
};

struct validation_report {
    std::vector<diagnostic> errors;
    bool ok() const { return errors.empty(); }
    std::string str() const {
        std::string out;
        for (auto& d : errors) {
            if (!out.empty()) out += "\n";
            if (d.rule_index >= 0) out += "rule " + std::to_string(d.rule_index) + ": ";
            out += d.message;
        }
        return out;
    }
};

struct validate_options {
    bool allow_reserved = false;  // names containing "__" are kept for generated symbols
};

inline bool reserved_name(std::string_view s) { return s.find("__") != std::string_view::npos; }

inline validation_report validate(const program& p, validate_options opt = {}) {
    validation_report rep;
    auto err = [&](int i, std::string m) { rep.errors.push_back({i, std::move(m)}); };

    for (auto& [name, sig] : p.preds) {
        if (!opt.allow_reserved && reserved_name(name))
            err(-1, "predicate '" + name + "' uses the reserved '__' marker");
    }
    for (std::size_t i = 0; i < p.rules.size(); ++i) {
        const rule& r = p.rules[i];
        int ri = static_cast<int>(i);
        auto check_atom = [&](const atom& a) {
            auto* s = p.find(a.pred);
            if (!s) {
                err(ri, "undeclared predicate '" + a.pred + "'");
                return;
            }
            if (s->objects != a.args.size() || s->temporal != a.temporal())
                err(ri, "atom " + a.pred + " does not match signature " + a.pred + "/" +
                            std::to_string(s->arity()) + (s->temporal ? " temporal" : " rigid"));
            if (!opt.allow_reserved)
                for (auto& t : a.args)
                    if (reserved_name(t.name)) err(ri, "name '" + t.name + "' uses the reserved '__' marker");
        };
        check_atom(r.head);
        for (auto& b : r.body) check_atom(b);

        std::set<std::string> obj_vars, time_vars;
        for (auto& b : r.body) {
            obj_vars.merge(object_vars_of(b));
            time_vars.merge(time_vars_of(b));
        }
        for (auto& v : time_vars_of(r.head))
            if (obj_vars.count(v)) err(ri, "variable '" + v + "' used as both object and time");
        for (auto& v : time_vars)
            if (obj_vars.count(v)) err(ri, "variable '" + v + "' used as both object and time");
        for (auto& v : object_vars_of(r.head))
            if (!obj_vars.count(v)) err(ri, "unsafe rule: head variable '" + v + "' does not occur in the body");
        for (auto& v : time_vars_of(r.head))
            if (!time_vars.count(v)) err(ri, "unsafe rule: head variable '" + v + "' does not occur in the body");
        if (!r.body.empty() && p.is_edb(r.head.pred))
            err(ri, "EDB predicate '" + r.head.pred + "' in the head of a rule with a non-empty body");
    }
    return rep;
}

inline void require_valid(const program& p, validate_options opt = {}) {
    auto rep = validate(p, opt);
    if (!rep.ok()) throw validation_error(rep.str());
}

// ---------------------------------------------------------------------------
// static analysis

// Largest |offset(head time) - offset(body time)|, 0 for rules without a time variable.
inline time_point rule_radius(const rule& r) {
    if (time_vars_of(r).empty() || !r.head.time) return 0;
    time_point best = 0;
    for (auto& b : r.body)
        if (b.time) {
            time_point d = r.head.time->offset() - b.time->offset();
            best = std::max(best, d < 0 ? -d : d);
        }
    return best;
}

inline bool rule_connected(const rule& r) {
    auto vars = time_vars_of(r);
    if (vars.size() > 1) return false;
    if (vars.empty()) return true;
    bool in_body = false;
    for (auto& b : r.body)
        if (!time_vars_of(b).empty()) in_body = true;
    return !in_body || !time_vars_of(r.head).empty();
}

struct program_analysis {
    std::map<std::string, std::size_t> rank_of;  // empty when recursive
    std::size_t program_rank = 0;
    time_point max_rule_radius = 0;
    time_point program_radius = 0;
    bool is_nonrecursive = true;
    bool is_connected = true;
    bool has_time_points = false;
    bool has_objects = false;
    std::set<std::pair<std::string, std::string>> dependency_edges;  // (body pred, head pred)
};

inline program_analysis analyze(const program& p) {
    program_analysis a;
    std::set<std::string> names;
    for (auto& r : p.rules) {
        names.insert(r.head.pred);
        for (auto& b : r.body) {
            names.insert(b.pred);
            a.dependency_edges.insert({b.pred, r.head.pred});
        }
        a.max_rule_radius = std::max(a.max_rule_radius, rule_radius(r));
        a.is_connected = a.is_connected && rule_connected(r);
    }
    a.program_radius = static_cast<time_point>(p.rules.size()) * a.max_rule_radius;
    a.has_time_points = !time_points_of(p).empty();
    a.has_objects = !objects_of(p).empty();

    // longest path by memoised DFS, with a colour mark to detect cycles
    std::map<std::string, std::vector<std::string>> deps;
    for (auto& [from, to] : a.dependency_edges) deps[to].push_back(from);
    std::map<std::string, int> state;  // 1 on stack, 2 done
    std::map<std::string, std::size_t> rank;
    bool cyclic = false;
    auto visit = [&](auto& self, const std::string& n) -> std::size_t {
        auto& st = state[n];
        if (st == 2) return rank[n];
        if (st == 1) {
            cyclic = true;
            return 0;
        }
        st = 1;
        std::size_t best = 0;
        auto it = deps.find(n);
        if (it != deps.end())
            for (auto& d : it->second) best = std::max(best, self(self, d) + 1);
        state[n] = 2;
        return rank[n] = best;
    };
    for (auto& n : names) visit(visit, n);
    a.is_nonrecursive = !cyclic;
    if (!cyclic) {
        a.rank_of = rank;
        for (auto& [n, k] : rank) a.program_rank = std::max(a.program_rank, k);
    }
    return a;
}

// ---------------------------------------------------------------------------
// datasets

// Rigid facts plus the temporal facts strictly after `t`.
inline dataset segment(const dataset& d, time_point t) {
    dataset out;
    for (auto& f : d)
        if (!f.time || *f.time > t) out.insert(f);
    return out;
}

inline bool is_history(const dataset& d, time_point t_in) {
    return std::all_of(d.begin(), d.end(), [&](const fact& f) { return !f.time || *f.time <= t_in; });
}

inline bool is_update(const dataset& d, time_point t_in) {
    return std::all_of(d.begin(), d.end(), [&](const fact& f) { return f.time && *f.time > t_in; });
}

inline std::optional<std::pair<time_point, time_point>> time_span(const dataset& d) {
    std::optional<std::pair<time_point, time_point>> out;
    for (auto& f : d)
        if (f.time) {
            if (!out) out = {{*f.time, *f.time}};
            out->first = std::min(out->first, *f.time);
            out->second = std::max(out->second, *f.time);
        }
    return out;
}

// ---------------------------------------------------------------------------
// rigid atom elimination: P(c) becomes P__0(c, 0)

inline std::string rigid_alias(const std::string& pred) { return pred + "__0"; }

inline query normalize_rigid_atoms(const query& q) {
    query out;
    out.output = q.output;
    auto* osig = q.prog.find(q.output);
    if (osig && !osig->temporal) out.output = rigid_alias(q.output);
    for (auto& [name, sig] : q.prog.preds) {
        if (sig.temporal) {
            out.prog.preds[name] = sig;
            continue;
        }
        auto alias = rigid_alias(name);
        out.prog.preds[alias] = {alias, sig.objects, true, sig.kind};
    }
    auto fix = [&](atom a) {
        auto* s = q.prog.find(a.pred);
        if (s && !s->temporal) {
            a.pred = rigid_alias(a.pred);
            a.time = time_term::point(0);
        }
        return a;
    };
    for (auto& r : q.prog.rules) {
        rule n{fix(r.head), {}};
        for (auto& b : r.body) n.body.push_back(fix(b));
        out.prog.rules.push_back(std::move(n));
    }
    return out;
}

inline dataset normalize_rigid_facts(const dataset& d) {
    dataset out;
    for (auto f : d) {
        if (!f.time) {
            f.pred = rigid_alias(f.pred);
            f.time = 0;
        }
        out.insert(std::move(f));
    }
    return out;
}

// ---------------------------------------------------------------------------
// renaming of EDB predicates to fresh IDB copies

inline std::string renamed(const std::string& pred) { return pred + "__r"; }

// Renames every EDB predicate accepted by `pick` to a fresh IDB predicate.
template <class Pick>
program rename_edb(const program& p, Pick pick) {
    program out;
    std::set<std::string> hit;
    for (auto& [name, sig] : p.preds) {
        if (sig.kind == origin::edb && pick(sig)) {
            hit.insert(name);
            auto n = renamed(name);
            out.preds[n] = {n, sig.objects, sig.temporal, origin::idb};
        } else {
            out.preds[name] = sig;
        }
    }
    auto fix = [&](atom a) {
        if (hit.count(a.pred)) a.pred = renamed(a.pred);
        return a;
    };
    for (auto& r : p.rules) {
        rule n{fix(r.head), {}};
        for (auto& b : r.body) n.body.push_back(fix(b));
        out.rules.push_back(std::move(n));
    }
    return out;
}

// Renames temporal EDB predicates only.
inline program rename_temporal_edb(const program& p) {
    return rename_edb(p, [](const predicate_sig& s) { return s.temporal; });
}

// Variables x0..x{n-1} for generated rules.
inline std::vector<object_term> fresh_vars(std::size_t n, const std::string& stem = "x") {
    std::vector<object_term> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(object_term::var(stem + std::to_string(i)));
    return out;
}

}  // namespace tdl
