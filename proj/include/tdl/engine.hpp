#pragma once

#include <cstdlib>
#include <functional>
#include <limits>
#include <unordered_map>

#include "model.hpp"

namespace tdl {

struct time_window {
    time_point lo = 0;
    time_point hi = 0;

    bool contains(time_point t) const { return lo <= t && t <= hi; }
    bool operator==(const time_window&) const = default;
};

enum class strategy { semi_naive, naive };

struct engine_options {
    time_point max_horizon = 256;
    time_point initial_horizon = 8;
    strategy mode = strategy::semi_naive;
};

// TDL_MAX_HORIZON, when set to a positive integer, replaces the default cap.
inline time_point horizon_from_env(time_point fallback = 256) {
    if (const char* s = std::getenv("TDL_MAX_HORIZON")) {
        char* end = nullptr;
        long long v = std::strtoll(s, &end, 10);
        if (end && *end == '\0' && v > 0) return v;
    }
    return fallback;
}

class fact_store {
public:
    fact_store() = default;
    explicit fact_store(const dataset& d) {
        for (auto& f : d) insert(f);
    }

    void insert(const fact& f) {
        if (f.time)
            slices_[*f.time].insert(f);
        else
            rigid_.insert(f);
    }
    void insert(const dataset& d) {
        for (auto& f : d) insert(f);
    }
    bool contains(const fact& f) const {
        if (!f.time) return rigid_.count(f) > 0;
        auto it = slices_.find(*f.time);
        return it != slices_.end() && it->second.count(f);
    }
    std::size_t size() const {
        std::size_t n = rigid_.size();
        for (auto& [t, s] : slices_) n += s.size();
        return n;
    }
    std::size_t slice_count() const { return slices_.size(); }
    const std::set<fact>& rigid() const { return rigid_; }
    const std::map<time_point, std::set<fact>>& slices() const { return slices_; }

    dataset facts() const {
        dataset out = rigid_;
        for (auto& [t, s] : slices_) out.insert(s.begin(), s.end());
        return out;
    }
    void drop_slice(time_point t) { slices_.erase(t); }
    void drop_through(time_point t) {
        while (!slices_.empty() && slices_.begin()->first <= t) slices_.erase(slices_.begin());
    }
    answer_set tuples_at(const std::string& pred, time_point t) const {
        answer_set out;
        auto it = slices_.find(t);
        if (it == slices_.end()) return out;
        for (auto& f : it->second)
            if (f.pred == pred) out.insert(f.args);
        return out;
    }
    bool operator==(const fact_store&) const = default;

private:
    std::set<fact> rigid_;
    std::map<time_point, std::set<fact>> slices_;
};

// Node label is a ground rule instance; one child per body atom.
struct derivation_tree {
    int rule_index = -1;  // -1: a fact of the dataset
    rule label;
    std::vector<derivation_tree> children;

    std::size_t depth() const {
        std::size_t d = 0;
        for (auto& c : children) d = std::max(d, c.depth());
        return d + 1;
    }
};

namespace detail {

using row = std::vector<std::int64_t>;

struct row_hash {
    std::size_t operator()(const row& r) const noexcept {
        std::uint64_t h = 1469598103934665603ull;
        for (auto v : r) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

// Rows are appended in round order, so every round owns a contiguous id range.
struct relation {
    std::size_t width = 0;
    bool temporal = false;
    std::vector<row> rows;
    std::vector<std::uint32_t> gen;
    std::unordered_map<row, std::uint32_t, row_hash> index;
    std::unordered_map<time_point, std::vector<std::uint32_t>> slices;

    bool insert(row r, std::uint32_t g) {
        auto [it, fresh] = index.try_emplace(r, static_cast<std::uint32_t>(rows.size()));
        if (!fresh) return false;
        if (temporal) slices[r.back()].push_back(it->second);
        rows.push_back(std::move(r));
        gen.push_back(g);
        return true;
    }
    std::optional<std::uint32_t> find(const row& r) const {
        auto it = index.find(r);
        if (it == index.end()) return std::nullopt;
        return it->second;
    }
};

struct cterm {
    bool var = false;
    std::int64_t v = 0;  // slot when var, object id otherwise
};

struct ctime {
    enum kind_t { none, point, var } kind = none;
    std::int64_t v = 0;  // point value, or offset
    int slot = -1;
};

struct catom {
    int pred = 0;
    std::vector<cterm> args;
    ctime time;
};

struct crule {
    catom head;
    std::vector<catom> body;
    int slots = 0;
    int source = 0;
    std::vector<std::vector<int>> orders;  // join order starting with each body atom
};

struct symbols {
    std::unordered_map<std::string, std::int64_t> ids;
    std::vector<std::string> names;

    std::int64_t intern(const std::string& s) {
        auto [it, fresh] = ids.try_emplace(s, static_cast<std::int64_t>(names.size()));
        if (fresh) names.push_back(s);
        return it->second;
    }
    std::optional<std::int64_t> lookup(const std::string& s) const {
        auto it = ids.find(s);
        if (it == ids.end()) return std::nullopt;
        return it->second;
    }
};

struct binding {
    std::vector<std::int64_t> val;
    std::vector<char> set;
};

// Greedy join order: prefer atoms whose time is fixed, then atoms with many bound arguments.
inline std::vector<int> join_order(const crule& r, int first) {
    std::vector<int> order;
    std::vector<char> bound(r.slots, 0), used(r.body.size(), 0);
    auto take = [&](int i) {
        order.push_back(i);
        used[i] = 1;
        for (auto& a : r.body[i].args)
            if (a.var) bound[a.v] = 1;
        if (r.body[i].time.kind == ctime::var) bound[r.body[i].time.slot] = 1;
    };
    if (first >= 0) take(first);
    while (order.size() < r.body.size()) {
        int best = -1, best_score = -1;
        for (std::size_t i = 0; i < r.body.size(); ++i) {
            if (used[i]) continue;
            auto& a = r.body[i];
            int score = 0;
            if (a.time.kind == ctime::point || (a.time.kind == ctime::var && bound[a.time.slot])) score += 4;
            for (auto& t : a.args)
                if (!t.var || bound[t.v]) score += 1;
            if (score > best_score) best = static_cast<int>(i), best_score = score;
        }
        take(best);
    }
    return order;
}

}  // namespace detail

class evaluator {
public:
    explicit evaluator(program p, engine_options opt = {}) : prog_(std::move(p)), opt_(opt) {
        analysis_ = analyze(prog_);
        compile();
    }

    const program& source() const { return prog_; }
    const program_analysis& analysis() const { return analysis_; }
    const engine_options& options() const { return opt_; }

    // Least model of program ∪ d. Derived facts outside `w` are discarded; a
    // recursive program needs a window.
    fact_store saturate(const dataset& d, std::optional<time_window> w = std::nullopt) const {
        if (!w && !analysis_.is_nonrecursive)
            throw validation_error("saturating a recursive program needs a time window");
        auto st = run(d, w, std::nullopt);
        return decode(st, std::nullopt);
    }

    // Tuples a with program ∪ d ⊨ pred(a, t).
    answer_set answers_at(const dataset& d, std::string_view pred, time_point t) const {
        auto st = exact_run(d, t, t);
        return tuples(st, pred, t);
    }

    // Answers for every time point of `w`.
    std::map<time_point, answer_set> answers_in(const dataset& d, std::string_view pred, time_window w) const {
        auto st = exact_run(d, w.lo, w.hi);
        std::map<time_point, answer_set> out;
        for (time_point t = w.lo; t <= w.hi; ++t) out[t] = tuples(st, pred, t);
        return out;
    }

    // Answers of a rigid predicate.
    answer_set rigid_answers(const dataset& d, std::string_view pred) const {
        auto st = exact_run(d, 0, 0);
        answer_set out;
        int p = pred_id(pred);
        if (p < 0) return out;
        for (auto& r : st.rels[p].rows) out.insert(decode_args(st, r, st.rels[p].width));
        return out;
    }

    bool holds(const dataset& d, const fact& f) const {
        if (f.time) return answers_at(d, f.pred, *f.time).count(f.args) > 0;
        return rigid_answers(d, f.pred).count(f.args) > 0;
    }

    std::optional<derivation_tree> derive(const dataset& d, const fact& f) const {
        time_point t = f.time.value_or(0);
        auto st = exact_run(d, t, t);
        int p = pred_id(f.pred);
        if (p < 0) return std::nullopt;
        auto r = encode(st, f);
        if (!r) return std::nullopt;
        auto id = st.rels[p].find(*r);
        if (!id) return std::nullopt;
        return build_tree(st, d, p, *id);
    }

    // Answers over the whole least model; only for nonrecursive programs.
    std::map<time_point, answer_set> all_answers(const dataset& d, std::string_view pred) const {
        if (!analysis_.is_nonrecursive) throw validation_error("the least model of a recursive program may be infinite");
        auto st = run(d, std::nullopt, std::nullopt);
        std::map<time_point, answer_set> out;
        int p = pred_id(pred);
        if (p < 0) return out;
        auto& rel = st.rels[p];
        for (auto& r : rel.rows) out[r.back()].insert(decode_args(st, r, rel.width));
        return out;
    }

private:
    struct state {
        detail::symbols syms;
        std::vector<detail::relation> rels;
    };

    program prog_;
    engine_options opt_;
    program_analysis analysis_;
    std::map<std::string, int, std::less<>> pred_ids_;
    std::vector<predicate_sig> sigs_;
    std::vector<detail::crule> rules_;
    std::vector<std::pair<int, fact>> program_facts_;             // (rule index, fact)
    detail::symbols consts_;

    int pred_id(std::string_view name) const {
        auto it = pred_ids_.find(name);
        return it == pred_ids_.end() ? -1 : it->second;
    }

    void compile() {
        for (auto& [name, sig] : prog_.preds) {
            pred_ids_[name] = static_cast<int>(sigs_.size());
            sigs_.push_back(sig);
        }
        auto need = [&](const atom& a) {
            int p = pred_id(a.pred);
            if (p < 0) throw validation_error("undeclared predicate '" + a.pred + "'");
            auto& s = sigs_[p];
            if (s.objects != a.args.size() || s.temporal != a.temporal())
                throw validation_error("atom " + a.pred + " does not match its signature");
            return p;
        };
        for (std::size_t i = 0; i < prog_.rules.size(); ++i) {
            auto& r = prog_.rules[i];
            if (r.head.args.size() >= 64) throw validation_error("atom " + r.head.pred + " has too many arguments");
            for (auto& b : r.body)
                if (b.args.size() >= 64) throw validation_error("atom " + b.pred + " has too many arguments");
            if (r.body.empty()) {
                need(r.head);
                auto f = to_fact(r.head);
                if (!f) throw validation_error("fact " + r.head.pred + " is not ground");
                program_facts_.push_back({static_cast<int>(i), *f});
                continue;
            }
            std::map<std::string, int> slots;
            auto slot = [&](const std::string& v) {
                auto [it, fresh] = slots.try_emplace(v, static_cast<int>(slots.size()));
                return it->second;
            };
            auto comp = [&](const atom& a) {
                detail::catom c;
                c.pred = need(a);
                for (auto& t : a.args) {
                    if (t.is_var)
                        c.args.push_back({true, slot("o:" + t.name)});
                    else
                        c.args.push_back({false, consts_.intern(t.name)});
                }
                if (a.time) {
                    if (a.time->is_point())
                        c.time = {detail::ctime::point, a.time->value, -1};
                    else
                        c.time = {detail::ctime::var, a.time->value, slot("t:" + *a.time->var)};
                }
                return c;
            };
            detail::crule cr;
            for (auto& b : r.body) cr.body.push_back(comp(b));
            cr.head = comp(r.head);
            cr.slots = static_cast<int>(slots.size());
            cr.source = static_cast<int>(i);
            for (std::size_t k = 0; k < cr.body.size(); ++k) cr.orders.push_back(detail::join_order(cr, static_cast<int>(k)));
            rules_.push_back(std::move(cr));
        }
        for (auto& [i, f] : program_facts_)
            for (auto& a : f.args) consts_.intern(a);
    }

    std::optional<detail::row> encode(const state& st, const fact& f) const {
        detail::row r;
        for (auto& a : f.args) {
            auto id = st.syms.lookup(a);
            if (!id) return std::nullopt;
            r.push_back(*id);
        }
        if (f.time) r.push_back(*f.time);
        return r;
    }

    tuple decode_args(const state& st, const detail::row& r, std::size_t width) const {
        tuple out;
        for (std::size_t i = 0; i < width; ++i) out.push_back(st.syms.names[r[i]]);
        return out;
    }

    fact decode_fact(const state& st, int p, const detail::row& r) const {
        auto& rel = st.rels[p];
        fact f{sigs_[p].name, decode_args(st, r, rel.width), std::nullopt};
        if (rel.temporal) f.time = r.back();
        return f;
    }

    answer_set tuples(const state& st, std::string_view pred, time_point t) const {
        answer_set out;
        int p = pred_id(pred);
        if (p < 0) return out;
        auto& rel = st.rels[p];
        if (!rel.temporal) throw validation_error("predicate '" + std::string(pred) + "' is rigid");
        auto it = rel.slices.find(t);
        if (it == rel.slices.end()) return out;
        for (auto id : it->second) out.insert(decode_args(st, rel.rows[id], rel.width));
        return out;
    }

    fact_store decode(const state& st, std::optional<time_window> only) const {
        fact_store out;
        for (std::size_t p = 0; p < st.rels.size(); ++p)
            for (auto& r : st.rels[p].rows) {
                if (only && st.rels[p].temporal && !only->contains(r.back())) continue;
                out.insert(decode_fact(st, static_cast<int>(p), r));
            }
        return out;
    }

    // Saturation proper. `data_filter` drops input facts outside it.
    state run(const dataset& d, std::optional<time_window> w, std::optional<time_window> data_filter) const {
        state st;
        st.syms = consts_;
        st.rels.resize(sigs_.size());
        for (std::size_t p = 0; p < sigs_.size(); ++p) {
            st.rels[p].width = sigs_[p].objects;
            st.rels[p].temporal = sigs_[p].temporal;
        }
        auto add_base = [&](const fact& f) {
            int p = pred_id(f.pred);
            if (p < 0) return;
            auto& s = sigs_[p];
            if (s.objects != f.args.size() || s.temporal != f.temporal())
                throw validation_error("fact " + f.pred + " does not match its signature");
            if (f.time && data_filter && !data_filter->contains(*f.time)) return;
            detail::row r;
            for (auto& a : f.args) r.push_back(st.syms.intern(a));
            if (f.time) r.push_back(*f.time);
            st.rels[p].insert(std::move(r), 0);
        };
        for (auto& [i, f] : program_facts_) add_base(f);
        for (auto& f : d) add_base(f);
        saturate_state(st, w);
        return st;
    }

    void saturate_state(state& st, std::optional<time_window> w) const {
        std::size_t n = st.rels.size();
        std::vector<std::uint32_t> lo(n, 0), hi(n);
        for (std::size_t p = 0; p < n; ++p) hi[p] = static_cast<std::uint32_t>(st.rels[p].rows.size());
        detail::binding b;
        for (std::uint32_t round = 0;; ++round) {
            bool grew = false;
            for (auto& r : rules_) {
                auto emit = [&](const detail::binding& bb) {
                    detail::row out;
                    for (auto& a : r.head.args) out.push_back(a.var ? bb.val[a.v] : a.v);
                    if (r.head.time.kind == detail::ctime::point)
                        out.push_back(r.head.time.v);
                    else if (r.head.time.kind == detail::ctime::var)
                        out.push_back(bb.val[r.head.time.slot] + r.head.time.v);
                    if (r.head.time.kind != detail::ctime::none && w && !w->contains(out.back())) return;
                    if (st.rels[r.head.pred].insert(std::move(out), round + 1)) grew = true;
                };
                b.val.assign(r.slots, 0);
                b.set.assign(r.slots, 0);
                if (opt_.mode == strategy::naive) {
                    std::vector<std::pair<std::uint32_t, std::uint32_t>> range(r.body.size());
                    for (std::size_t k = 0; k < r.body.size(); ++k) range[k] = {0, hi[r.body[k].pred]};
                    join(st, r, r.orders[0], range, 0, b, emit);
                    continue;
                }
                for (std::size_t i = 0; i < r.body.size(); ++i) {
                    int pi = r.body[i].pred;
                    if (lo[pi] == hi[pi]) continue;
                    std::vector<std::pair<std::uint32_t, std::uint32_t>> range(r.body.size());
                    for (std::size_t k = 0; k < r.body.size(); ++k) {
                        int pk = r.body[k].pred;
                        if (k < i)
                            range[k] = {0, lo[pk]};
                        else if (k == i)
                            range[k] = {lo[pk], hi[pk]};
                        else
                            range[k] = {0, hi[pk]};
                    }
                    join(st, r, r.orders[i], range, 0, b, emit);
                }
            }
            if (!grew) break;
            for (std::size_t p = 0; p < n; ++p) {
                lo[p] = hi[p];
                hi[p] = static_cast<std::uint32_t>(st.rels[p].rows.size());
            }
        }
    }

    template <class Emit>
    void join(const state& st, const detail::crule& r, const std::vector<int>& order,
              const std::vector<std::pair<std::uint32_t, std::uint32_t>>& range, std::size_t depth,
              detail::binding& b, Emit&& emit) const {
        if (depth == order.size()) {
            emit(b);
            return;
        }
        int k = order[depth];
        const auto& a = r.body[k];
        const auto& rel = st.rels[a.pred];
        auto [from, to] = range[k];
        if (from >= to) return;

        std::int64_t undo[64];
        auto try_row = [&](std::uint32_t id) {
            const auto& row = rel.rows[id];
            int nundo = 0;
            bool ok = true;
            for (std::size_t j = 0; j < a.args.size() && ok; ++j) {
                auto& t = a.args[j];
                if (!t.var) {
                    ok = row[j] == t.v;
                } else if (b.set[t.v]) {
                    ok = row[j] == b.val[t.v];
                } else {
                    b.set[t.v] = 1;
                    b.val[t.v] = row[j];
                    undo[nundo++] = t.v;
                }
            }
            if (ok && a.time.kind == detail::ctime::var) {
                auto s = a.time.slot;
                std::int64_t val = row.back() - a.time.v;
                if (b.set[s]) {
                    ok = b.val[s] == val;
                } else {
                    b.set[s] = 1;
                    b.val[s] = val;
                    undo[nundo++] = s;
                }
            }
            if (ok) join(st, r, order, range, depth + 1, b, emit);
            for (int u = 0; u < nundo; ++u) b.set[undo[u]] = 0;
        };

        const std::vector<std::uint32_t>* ids = nullptr;
        if (a.time.kind == detail::ctime::point || (a.time.kind == detail::ctime::var && b.set[a.time.slot])) {
            time_point t = a.time.kind == detail::ctime::point ? a.time.v : b.val[a.time.slot] + a.time.v;
            auto it = rel.slices.find(t);
            if (it == rel.slices.end()) return;
            ids = &it->second;
        }
        if (ids) {
            auto it = std::lower_bound(ids->begin(), ids->end(), from);
            for (; it != ids->end() && *it < to; ++it) try_row(*it);
        } else {
            for (std::uint32_t id = from; id < to; ++id) try_row(id);
        }
    }

    // Exact model around [lo, hi]: the whole model (nonrecursive), the
    // relevance window (nonrecursive and connected), or horizon doubling.
    state exact_run(const dataset& d, time_point lo, time_point hi) const {
        auto& a = analysis_;
        auto points = time_points_of(prog_);
        if (a.is_nonrecursive) {
            if (!a.is_connected) return run(d, std::nullopt, std::nullopt);
            time_point tlo = lo, thi = hi;
            if (!points.empty()) {
                tlo = std::min(tlo, *points.begin());
                thi = std::max(thi, *points.rbegin());
            }
            time_window w{tlo - a.max_rule_radius * static_cast<time_point>(a.program_rank) - 1,
                          thi + a.program_radius};
            return run(d, w, w);
        }
        time_point tlo = lo, thi = hi;
        if (!points.empty()) {
            tlo = std::min(tlo, *points.begin());
            thi = std::max(thi, *points.rbegin());
        }
        if (auto span = time_span(d)) {
            tlo = std::min(tlo, span->first);
            thi = std::max(thi, span->second);
        }
        std::optional<state> prev;
        time_point prev_margin = 0;
        time_point start = std::max<time_point>(1, std::min(opt_.initial_horizon, opt_.max_horizon / 2));
        for (time_point margin = start;; margin *= 2) {
            if (margin > opt_.max_horizon) margin = opt_.max_horizon;
            auto cur = run(d, time_window{tlo - margin, thi + margin}, std::nullopt);
            if (prev) {
                time_point core = prev_margin / 2;
                time_window inner{tlo - core, thi + core};
                if (decode(*prev, inner) == decode(cur, inner)) return cur;
            }
            if (margin >= opt_.max_horizon)
                throw decision_error("evaluation did not stabilise within horizon " + std::to_string(opt_.max_horizon) +
                                     " (raise TDL_MAX_HORIZON)");
            prev = std::move(cur);
            prev_margin = margin;
        }
    }

    derivation_tree build_tree(const state& st, const dataset& d, int p, std::uint32_t id) const {
        auto& rel = st.rels[p];
        fact f = decode_fact(st, p, rel.rows[id]);
        std::uint32_t g = rel.gen[id];
        derivation_tree node;
        if (g == 0) {
            node.label = fact_rule(f);
            node.rule_index = -1;
            for (auto& [i, pf] : program_facts_)
                if (pf == f) {
                    node.rule_index = i;
                    break;
                }
            (void)d;
            return node;
        }
        // only facts from earlier rounds may support this one
        std::vector<std::uint32_t> limit(st.rels.size());
        for (std::size_t q = 0; q < st.rels.size(); ++q) {
            auto& gv = st.rels[q].gen;
            limit[q] = static_cast<std::uint32_t>(std::lower_bound(gv.begin(), gv.end(), g) - gv.begin());
        }
        const auto& row = rel.rows[id];
        for (auto& r : rules_) {
            if (r.head.pred != p) continue;
            detail::binding b;
            b.val.assign(r.slots, 0);
            b.set.assign(r.slots, 0);
            bool ok = true;
            for (std::size_t j = 0; j < r.head.args.size() && ok; ++j) {
                auto& t = r.head.args[j];
                if (!t.var)
                    ok = t.v == row[j];
                else if (b.set[t.v])
                    ok = b.val[t.v] == row[j];
                else
                    b.set[t.v] = 1, b.val[t.v] = row[j];
            }
            if (ok && r.head.time.kind == detail::ctime::point) ok = r.head.time.v == row.back();
            if (ok && r.head.time.kind == detail::ctime::var) b.set[r.head.time.slot] = 1, b.val[r.head.time.slot] = row.back() - r.head.time.v;
            if (!ok) continue;

            std::vector<std::pair<std::uint32_t, std::uint32_t>> range(r.body.size());
            for (std::size_t k = 0; k < r.body.size(); ++k) range[k] = {0, limit[r.body[k].pred]};
            std::optional<std::vector<std::pair<int, detail::row>>> best;
            std::vector<fact> best_key;
            auto order = detail::join_order(r, -1);
            join(st, r, order, range, 0, b, [&](const detail::binding& bb) {
                std::vector<std::pair<int, detail::row>> body;
                std::vector<fact> key;
                for (auto& a : r.body) {
                    detail::row br;
                    for (auto& t : a.args) br.push_back(t.var ? bb.val[t.v] : t.v);
                    if (a.time.kind == detail::ctime::point) br.push_back(a.time.v);
                    if (a.time.kind == detail::ctime::var) br.push_back(bb.val[a.time.slot] + a.time.v);
                    key.push_back(decode_fact(st, a.pred, br));
                    body.push_back({a.pred, std::move(br)});
                }
                if (!best || key < best_key) {
                    best = std::move(body);
                    best_key = std::move(key);
                }
            });
            if (!best) continue;
            node.rule_index = r.source;
            node.label.head = to_atom(f);
            for (auto& k : best_key) node.label.body.push_back(to_atom(k));
            for (auto& [bp, br] : *best) node.children.push_back(build_tree(st, d, bp, *st.rels[bp].find(br)));
            return node;
        }
        throw error("internal: no supporting rule instance for " + f.pred);
    }
};

// ---------------------------------------------------------------------------
// module-level operations

// Window whose grounding preserves the answers at `t` for a nonrecursive,
// connected query.
inline time_window relevant_window(const query& q, const dataset& d, time_point t) {
    (void)d;  // data outside the window is irrelevant, so it does not widen it
    auto a = analyze(q.prog);
    if (!a.is_nonrecursive) throw validation_error("relevant window needs a nonrecursive query");
    if (!a.is_connected) throw validation_error("relevant window needs a connected query");
    auto points = time_points_of(q.prog);
    points.insert(t);
    return {*points.begin() - a.max_rule_radius * static_cast<time_point>(a.program_rank) - 1,
            *points.rbegin() + a.program_radius};
}

inline answer_set evaluate_at(const query& q, const dataset& d, time_point t, engine_options opt = {}) {
    return evaluator(q.prog, opt).answers_at(d, q.output, t);
}

// All answers of a nonrecursive query; for recursive queries the answers in
// the span of the data and the program's time points.
inline std::map<time_point, answer_set> evaluate(const query& q, const dataset& d, engine_options opt = {}) {
    evaluator ev(q.prog, opt);
    if (ev.analysis().is_nonrecursive) return ev.all_answers(d, q.output);
    auto points = time_points_of(q.prog);
    auto span = time_span(d);
    if (!span && points.empty()) return {};
    time_window w{span ? span->first : *points.begin(), span ? span->second : *points.rbegin()};
    if (!points.empty()) w = {std::min(w.lo, *points.begin()), std::max(w.hi, *points.rbegin())};
    return ev.answers_in(d, q.output, w);
}

inline bool entails(const program& p, const fact& f, const dataset& d = {}, engine_options opt = {}) {
    return evaluator(p, opt).holds(d, f);
}

inline std::optional<derivation_tree> derivation(const program& p, const fact& f, const dataset& d = {},
                                                 engine_options opt = {}) {
    return evaluator(p, opt).derive(d, f);
}

// Does `ground` instantiate `pattern`? Extends `objs`/`times` consistently.
inline bool match_atom(const atom& pattern, const atom& ground, std::map<std::string, std::string>& objs,
                       std::map<std::string, time_point>& times) {
    if (pattern.pred != ground.pred || pattern.args.size() != ground.args.size() ||
        pattern.temporal() != ground.temporal() || !ground.ground())
        return false;
    for (std::size_t i = 0; i < pattern.args.size(); ++i) {
        auto& t = pattern.args[i];
        auto& g = ground.args[i].name;
        if (!t.is_var) {
            if (t.name != g) return false;
            continue;
        }
        auto [it, fresh] = objs.try_emplace(t.name, g);
        if (!fresh && it->second != g) return false;
    }
    if (pattern.time) {
        if (pattern.time->is_point()) return pattern.time->value == ground.time->value;
        time_point v = ground.time->value - pattern.time->value;
        auto [it, fresh] = times.try_emplace(*pattern.time->var, v);
        if (!fresh && it->second != v) return false;
    }
    return true;
}

// Re-checks a derivation tree against its definition.
inline bool check_derivation(const program& p, const dataset& d, const derivation_tree& t, const fact& root) {
    auto head = to_fact(t.label.head);
    if (!head || *head != root) return false;
    if (t.rule_index < 0) return t.label.body.empty() && t.children.empty() && d.count(root) > 0;
    if (t.rule_index >= static_cast<int>(p.rules.size())) return false;
    const rule& r = p.rules[t.rule_index];
    if (r.body.size() != t.label.body.size() || t.children.size() != r.body.size()) return false;
    std::map<std::string, std::string> objs;
    std::map<std::string, time_point> times;
    if (!match_atom(r.head, t.label.head, objs, times)) return false;
    for (std::size_t i = 0; i < r.body.size(); ++i)
        if (!match_atom(r.body[i], t.label.body[i], objs, times)) return false;
    for (std::size_t i = 0; i < r.body.size(); ++i) {
        auto child = to_fact(t.label.body[i]);
        if (!child || !check_derivation(p, d, t.children[i], *child)) return false;
    }
    return true;
}

}  // namespace tdl
