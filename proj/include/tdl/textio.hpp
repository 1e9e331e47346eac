#pragma once

#include <cctype>
#include <sstream>

#include <nlohmann/json.hpp>

#include "model.hpp"

namespace tdl {

class parse_error : public validation_error {
public:
    parse_error(int line, int col, const std::string& msg)
        : validation_error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg), line(line), col(col) {}
    int line;
    int col;
};

struct stream_event {
    time_point tick = 0;
    dataset facts;
    bool operator==(const stream_event&) const = default;
};

namespace text_detail {

enum class tok { ident, integer, lparen, rparen, comma, dot, arrow, plus, minus, slash, amp, directive, hash, end };

struct token {
    tok kind = tok::end;
    std::string text;
    long long value = 0;
    int line = 1;
    int col = 1;
};

class lexer {
public:
    explicit lexer(std::string_view s) : s_(s) {}

    std::vector<token> run() {
        std::vector<token> out;
        for (;;) {
            skip();
            token t;
            t.line = line_;
            t.col = col_;
            if (i_ >= s_.size()) {
                t.kind = tok::end;
                out.push_back(t);
                return out;
            }
            char c = s_[i_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                t.kind = tok::ident;
                while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '\''))
                    t.text += get();
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                t.kind = tok::integer;
                while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) t.text += get();
                if (t.text.size() > 17) throw parse_error(t.line, t.col, "integer too large");
                t.value = std::stoll(t.text);
            } else if (c == '@' || c == '#') {
                get();
                t.kind = c == '@' ? tok::directive : tok::hash;
                while (i_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[i_]))) t.text += get();
                if (t.text.empty()) throw parse_error(t.line, t.col, std::string("expected a keyword after '") + c + "'");
            } else if (starts("->")) {
                get(), get();
                t.kind = tok::arrow;
            } else if (starts("\xE2\x86\x92")) {  // →
                get(), get(), get();
                col_ -= 2;
                t.kind = tok::arrow;
            } else if (starts("\xE2\x88\xA7")) {  // ∧
                get(), get(), get();
                col_ -= 2;
                t.kind = tok::amp;
            } else {
                get();
                switch (c) {
                    case '(': t.kind = tok::lparen; break;
                    case ')': t.kind = tok::rparen; break;
                    case ',': t.kind = tok::comma; break;
                    case '.': t.kind = tok::dot; break;
                    case '+': t.kind = tok::plus; break;
                    case '-': t.kind = tok::minus; break;
                    case '/': t.kind = tok::slash; break;
                    case '&': t.kind = tok::amp; break;
                    default: throw parse_error(t.line, t.col, std::string("unexpected character '") + c + "'");
                }
                t.text = std::string(1, c);
            }
            out.push_back(t);
        }
    }

private:
    std::string_view s_;
    std::size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;

    bool starts(std::string_view p) const { return s_.substr(i_, p.size()) == p; }
    char get() {
        char c = s_[i_++];
        if (c == '\n')
            ++line_, col_ = 1;
        else
            ++col_;
        return c;
    }
    void skip() {
        while (i_ < s_.size()) {
            char c = s_[i_];
            if (c == '%') {
                while (i_ < s_.size() && s_[i_] != '\n') get();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                get();
            } else {
                break;
            }
        }
    }
};

struct raw_arg {
    enum kind_t { ident, integer, offset } kind = ident;
    std::string name;
    long long value = 0;
    int line = 0;
    int col = 0;
};

struct raw_atom {
    std::string pred;
    std::vector<raw_arg> args;
    int line = 0;
    int col = 0;
};

struct raw_clause {
    std::vector<raw_atom> body;
    raw_atom head;
    bool is_rule = false;  // written with "->"
};

struct raw_unit {
    std::vector<raw_clause> clauses;
    std::vector<std::pair<predicate_sig, std::pair<std::set<std::string>, token>>> decls;
    std::optional<std::string> output;
    std::set<std::string> vars, consts;
    std::vector<std::pair<token, std::size_t>> ticks;  // header token, index of first clause after it
};

class parser {
public:
    parser(std::vector<token> toks, bool allow_ticks) : t_(std::move(toks)), ticks_(allow_ticks) {}

    raw_unit run() {
        raw_unit u;
        while (peek().kind != tok::end) {
            auto& t = peek();
            if (t.kind == tok::directive) {
                directive(u);
            } else if (t.kind == tok::hash) {
                if (!ticks_ || t.text != "tick") fail(t, "unexpected '#" + t.text + "'");
                auto head = next();
                auto n = signed_int();
                head.value = n;
                u.ticks.push_back({head, u.clauses.size()});
            } else {
                u.clauses.push_back(clause());
            }
        }
        return u;
    }

private:
    std::vector<token> t_;
    std::size_t i_ = 0;
    bool ticks_;

    const token& peek() const { return t_[i_]; }
    token next() { return t_[i_++]; }
    [[noreturn]] static void fail(const token& t, const std::string& m) { throw parse_error(t.line, t.col, m); }
    token expect(tok k, const std::string& what) {
        if (peek().kind != k) fail(peek(), "expected " + what + found(peek()));
        return next();
    }
    static std::string found(const token& t) {
        if (t.kind == tok::end) return ", found end of input";
        return ", found '" + t.text + "'";
    }
    long long signed_int() {
        bool neg = false;
        if (peek().kind == tok::minus) next(), neg = true;
        auto n = expect(tok::integer, "an integer");
        return neg ? -n.value : n.value;
    }

    void directive(raw_unit& u) {
        auto d = next();
        if (d.text == "pred") {
            auto name = expect(tok::ident, "a predicate name");
            expect(tok::slash, "'/'");
            auto n = expect(tok::integer, "an arity");
            std::set<std::string> words;
            while (peek().kind == tok::ident) {
                auto w = next();
                if (w.text != "edb" && w.text != "idb" && w.text != "temporal" && w.text != "rigid")
                    fail(w, "unknown predicate attribute '" + w.text + "'");
                words.insert(w.text);
            }
            expect(tok::dot, "'.'");
            if (words.count("edb") && words.count("idb")) fail(name, "predicate declared both edb and idb");
            if (words.count("temporal") && words.count("rigid")) fail(name, "predicate declared both temporal and rigid");
            predicate_sig s{name.text, static_cast<std::size_t>(n.value), false, origin::edb};
            u.decls.push_back({s, {words, name}});
        } else if (d.text == "query") {
            auto name = expect(tok::ident, "a predicate name");
            expect(tok::dot, "'.'");
            if (u.output && *u.output != name.text) fail(name, "a second @query");
            u.output = name.text;
        } else if (d.text == "var" || d.text == "const") {
            auto& set = d.text == "var" ? u.vars : u.consts;
            for (;;) {
                set.insert(expect(tok::ident, "a name").text);
                if (peek().kind != tok::comma) break;
                next();
            }
            expect(tok::dot, "'.'");
        } else {
            fail(d, "unknown directive '@" + d.text + "'");
        }
    }

    raw_clause clause() {
        raw_clause c;
        std::vector<raw_atom> atoms;
        if (peek().kind != tok::arrow) {
            atoms.push_back(atom());
            while (peek().kind == tok::comma || peek().kind == tok::amp) {
                next();
                atoms.push_back(atom());
            }
        }
        if (peek().kind == tok::arrow) {
            next();
            c.is_rule = true;
            c.body = std::move(atoms);
            c.head = atom();
        } else {
            if (atoms.size() != 1) fail(peek(), "expected '->'" + found(peek()));
            c.head = std::move(atoms[0]);
        }
        expect(tok::dot, "'.'");
        return c;
    }

    raw_atom atom() {
        auto name = expect(tok::ident, "a predicate name");
        raw_atom a{name.text, {}, name.line, name.col};
        if (peek().kind != tok::lparen) return a;
        next();
        if (peek().kind == tok::rparen) {
            next();
            return a;
        }
        for (;;) {
            a.args.push_back(arg());
            if (peek().kind == tok::comma) {
                next();
                continue;
            }
            expect(tok::rparen, "',' or ')'");
            break;
        }
        return a;
    }

    raw_arg arg() {
        auto& t = peek();
        raw_arg r;
        r.line = t.line;
        r.col = t.col;
        if (t.kind == tok::ident) {
            r.name = next().text;
            if (peek().kind == tok::plus || peek().kind == tok::minus) {
                bool neg = next().kind == tok::minus;
                auto n = expect(tok::integer, "an offset");
                r.kind = raw_arg::offset;
                r.value = neg ? -n.value : n.value;
            }
            return r;
        }
        if (t.kind == tok::integer || t.kind == tok::minus) {
            r.kind = raw_arg::integer;
            r.value = signed_int();
            return r;
        }
        fail(t, "expected a term" + found(t));
    }
};

inline bool looks_like_var(const std::string& s) {
    if (s.empty()) return false;
    if (std::isupper(static_cast<unsigned char>(s[0]))) return true;
    if (!std::islower(static_cast<unsigned char>(s[0]))) return false;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i])) && s[i] != '\'') return false;
    return true;
}

struct build_result {
    program prog;
    std::optional<std::string> output;
    std::vector<std::pair<std::size_t, fact>> facts;  // clause index, fact
};

// Resolves sorts and variables and assembles the program. `base` supplies
// signatures that are already known.
inline build_result build(const raw_unit& u, const program* base, bool allow_reserved) {
    auto fail = [](int line, int col, const std::string& m) -> void { throw parse_error(line, col, m); };
    std::map<std::string, std::size_t> arity;
    std::map<std::string, std::optional<bool>> temporal;
    std::map<std::string, std::optional<origin>> kind;
    std::map<std::string, std::pair<int, int>> where;

    if (base)
        for (auto& [n, s] : base->preds) {
            arity[n] = s.arity();
            temporal[n] = s.temporal;
            kind[n] = s.kind;
        }
    for (auto& [sig, extra] : u.decls) {
        auto& [words, tk] = extra;
        auto it = arity.find(sig.name);
        if (it != arity.end() && it->second != sig.objects)
            fail(tk.line, tk.col, "conflicting arity for '" + sig.name + "'");
        arity[sig.name] = sig.objects;
        if (words.count("temporal")) temporal[sig.name] = true;
        if (words.count("rigid")) temporal[sig.name] = false;
        if (words.count("edb")) kind[sig.name] = origin::edb;
        if (words.count("idb")) kind[sig.name] = origin::idb;
        where.try_emplace(sig.name, std::pair{tk.line, tk.col});
    }
    auto note = [&](const raw_atom& a) {
        auto it = arity.find(a.pred);
        if (it != arity.end() && it->second != a.args.size())
            fail(a.line, a.col, "'" + a.pred + "' used with " + std::to_string(a.args.size()) + " arguments, expected " +
                                    std::to_string(it->second));
        arity[a.pred] = a.args.size();
        where.try_emplace(a.pred, std::pair{a.line, a.col});
        for (std::size_t i = 0; i + 1 < a.args.size(); ++i)
            if (a.args[i].kind != raw_arg::ident)
                fail(a.args[i].line, a.args[i].col, "time term in an object position of '" + a.pred + "'");
        if (!a.args.empty() && a.args.back().kind != raw_arg::ident) {
            auto& t = temporal[a.pred];
            if (t && !*t) fail(a.line, a.col, "'" + a.pred + "' is rigid but has a time argument");
            t = true;
        }
    };
    for (auto& c : u.clauses) {
        note(c.head);
        for (auto& b : c.body) note(b);
    }

    // propagate time-sortedness through shared variables until nothing changes
    std::vector<std::set<std::string>> time_vars(u.clauses.size());
    auto is_temporal = [&](const std::string& p) {
        auto it = temporal.find(p);
        return it != temporal.end() && it->second && *it->second;
    };
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t ci = 0; ci < u.clauses.size(); ++ci) {
            auto& c = u.clauses[ci];
            if (!c.is_rule) continue;
            auto visit = [&](const raw_atom& a) {
                if (a.args.empty()) return;
                auto& last = a.args.back();
                if (last.kind == raw_arg::offset && time_vars[ci].insert(last.name).second) changed = true;
                if (last.kind == raw_arg::ident && is_temporal(a.pred) && time_vars[ci].insert(last.name).second)
                    changed = true;
            };
            visit(c.head);
            for (auto& b : c.body) visit(b);
            auto mark = [&](const raw_atom& a) {
                if (a.args.empty() || a.args.back().kind != raw_arg::ident) return;
                if (!time_vars[ci].count(a.args.back().name)) return;
                auto& t = temporal[a.pred];
                if (t && !*t) fail(a.line, a.col, "'" + a.pred + "' is rigid but has a time variable");
                if (!t) t = true, changed = true;
            };
            mark(c.head);
            for (auto& b : c.body) mark(b);
        }
    }

    std::set<std::string> heads;
    for (auto& c : u.clauses)
        if (c.is_rule && !c.body.empty()) heads.insert(c.head.pred);

    build_result out;
    for (auto& [name, n] : arity) {
        bool tmp = is_temporal(name);
        if (tmp && n == 0) {
            auto [l, cl] = where[name];
            fail(l, cl, "temporal predicate '" + name + "' needs a time argument");
        }
        auto k = kind[name].value_or(heads.count(name) ? origin::idb : origin::edb);
        out.prog.preds[name] = {name, tmp ? n - 1 : n, tmp, k};
    }

    auto var_name = [&](const std::string& s) {
        if (u.consts.count(s)) return false;
        if (u.vars.count(s)) return true;
        return looks_like_var(s);
    };
    for (std::size_t ci = 0; ci < u.clauses.size(); ++ci) {
        auto& c = u.clauses[ci];
        bool in_rule = c.is_rule;
        auto make = [&](const raw_atom& a) {
            atom r{a.pred, {}, std::nullopt};
            bool tmp = is_temporal(a.pred);
            std::size_t nobj = tmp ? a.args.size() - 1 : a.args.size();
            for (std::size_t i = 0; i < nobj; ++i) {
                auto& x = a.args[i];
                if (in_rule && time_vars[ci].count(x.name))
                    fail(x.line, x.col, "'" + x.name + "' is used both as an object and as a time variable");
                r.args.push_back(in_rule && var_name(x.name) ? object_term::var(x.name) : object_term::obj(x.name));
            }
            if (tmp) {
                auto& x = a.args.back();
                if (x.kind == raw_arg::integer)
                    r.time = time_term::point(x.value);
                else if (!in_rule)
                    fail(x.line, x.col, "a fact needs an integer time argument");
                else
                    r.time = time_term::at(x.name, x.kind == raw_arg::offset ? x.value : 0);
            }
            return r;
        };
        rule r{make(c.head), {}};
        for (auto& b : c.body) r.body.push_back(make(b));
        if (!c.is_rule) {
            out.facts.push_back({ci, *to_fact(r.head)});
            if (!allow_reserved)
                for (auto& a : r.head.args)
                    if (reserved_name(a.name)) fail(c.head.line, c.head.col, "name '" + a.name + "' uses the reserved '__' marker");
        }
        out.prog.rules.push_back(std::move(r));
    }
    out.output = u.output;
    return out;
}

}  // namespace text_detail

// Program text: declarations, rules and (optionally) facts, plus an optional @query.
inline std::pair<program, std::optional<std::string>> parse_unit(std::string_view text) {
    auto toks = text_detail::lexer(text).run();
    auto raw = text_detail::parser(std::move(toks), false).run();
    auto b = text_detail::build(raw, nullptr, false);
    auto rep = validate(b.prog);
    if (!rep.ok()) throw validation_error(rep.str());
    return {std::move(b.prog), b.output};
}

inline program parse_program(std::string_view text) { return parse_unit(text).first; }

inline query parse_query(std::string_view text) {
    auto [p, out] = parse_unit(text);
    if (!out) throw validation_error("no @query selects an output predicate");
    auto* s = p.find(*out);
    if (!s) throw validation_error("output predicate '" + *out + "' does not occur in the program");
    if (s->kind != origin::idb) throw validation_error("output predicate '" + *out + "' is not IDB");
    return {*out, std::move(p)};
}

// Ground facts; signatures of `p` are used to resolve sorts.
inline dataset parse_dataset(std::string_view text, const program& p = {}) {
    auto toks = text_detail::lexer(text).run();
    auto raw = text_detail::parser(std::move(toks), false).run();
    for (auto& c : raw.clauses)
        if (c.is_rule) throw parse_error(c.head.line, c.head.col, "a dataset holds facts only");
    auto b = text_detail::build(raw, &p, false);
    dataset out;
    for (auto& [i, f] : b.facts) out.insert(f);
    return out;
}

// `#tick N` headers, each followed by the facts holding at N. Missing ticks
// (from 0 on) become empty events.
inline std::vector<stream_event> parse_stream(std::string_view text, const program& p) {
    auto toks = text_detail::lexer(text).run();
    auto raw = text_detail::parser(std::move(toks), true).run();
    for (auto& c : raw.clauses)
        if (c.is_rule) throw parse_error(c.head.line, c.head.col, "a stream holds facts only");
    if (!raw.clauses.empty() && (raw.ticks.empty() || raw.ticks.front().second > 0))
        throw parse_error(raw.clauses.front().head.line, raw.clauses.front().head.col, "fact before the first #tick");
    auto b = text_detail::build(raw, &p, false);
    std::vector<stream_event> out;
    for (std::size_t k = 0; k < raw.ticks.size(); ++k) {
        auto& [tk, first] = raw.ticks[k];
        time_point tick = tk.value;
        if (tick < 0) throw parse_error(tk.line, tk.col, "negative tick");
        if (!out.empty() && tick <= out.back().tick)
            throw parse_error(tk.line, tk.col, "tick " + std::to_string(tick) + " does not increase");
        while (static_cast<time_point>(out.size()) < tick) out.push_back({static_cast<time_point>(out.size()), {}});
        stream_event ev{tick, {}};
        std::size_t last = k + 1 < raw.ticks.size() ? raw.ticks[k + 1].second : raw.clauses.size();
        for (auto& [ci, f] : b.facts) {
            if (ci < first || ci >= last) continue;
            auto& c = raw.clauses[ci].head;
            auto* s = b.prog.find(f.pred);
            if (!s || !s->temporal) throw parse_error(c.line, c.col, "stream fact '" + f.pred + "' is not temporal");
            if (s->kind != origin::edb) throw parse_error(c.line, c.col, "stream fact '" + f.pred + "' is not EDB");
            if (*f.time != tick) throw parse_error(c.line, c.col, "fact time differs from its tick");
            ev.facts.insert(f);
        }
        out.push_back(std::move(ev));
    }
    return out;
}

// ---------------------------------------------------------------------------
// rendering

inline std::string render_time(const time_term& t) {
    if (t.is_point()) return std::to_string(t.value);
    if (t.value == 0) return *t.var;
    return *t.var + (t.value > 0 ? "+" : "-") + std::to_string(t.value > 0 ? t.value : -t.value);
}

inline std::string render_atom(const atom& a) {
    std::string s = a.pred;
    if (a.args.empty() && !a.time) return s;
    s += "(";
    bool first = true;
    for (auto& t : a.args) {
        if (!first) s += ", ";
        first = false;
        s += t.name;
    }
    if (a.time) {
        if (!first) s += ", ";
        s += render_time(*a.time);
    }
    return s + ")";
}

inline std::string render_fact(const fact& f) { return render_atom(to_atom(f)) + "."; }

inline std::string render_rule(const rule& r) {
    if (r.body.empty()) return render_atom(r.head) + ".";
    std::string s;
    for (std::size_t i = 0; i < r.body.size(); ++i) s += (i ? ", " : "") + render_atom(r.body[i]);
    return s + " -> " + render_atom(r.head) + ".";
}

inline std::string render_program(const program& p) {
    std::ostringstream os;
    for (auto& [n, s] : p.preds)
        os << "@pred " << n << "/" << s.arity() << (s.kind == origin::edb ? " edb" : " idb")
           << (s.temporal ? " temporal" : " rigid") << ".\n";
    std::set<std::string> vars, consts;
    for (auto& r : p.rules) {
        if (r.body.empty()) continue;
        auto scan = [&](const atom& a) {
            for (auto& t : a.args) {
                if (t.is_var && !text_detail::looks_like_var(t.name)) vars.insert(t.name);
                if (!t.is_var && text_detail::looks_like_var(t.name)) consts.insert(t.name);
            }
        };
        scan(r.head);
        for (auto& b : r.body) scan(b);
    }
    for (auto& v : vars)
        if (consts.count(v)) throw validation_error("'" + v + "' is used both as a variable and as an object");
    auto list = [&](const char* kw, const std::set<std::string>& s) {
        if (s.empty()) return;
        os << kw;
        bool first = true;
        for (auto& n : s) os << (first ? " " : ", ") << n, first = false;
        os << ".\n";
    };
    list("@var", vars);
    list("@const", consts);
    for (auto& r : p.rules) os << render_rule(r) << "\n";
    return os.str();
}

inline std::string render_query(const query& q) { return render_program(q.prog) + "@query " + q.output + ".\n"; }

inline std::string render_dataset(const dataset& d) {
    std::string s;
    for (auto& f : d) s += render_fact(f) + "\n";
    return s;
}

inline std::string render_stream(const std::vector<stream_event>& events) {
    std::string s;
    for (auto& e : events) {
        s += "#tick " + std::to_string(e.tick) + "\n";
        for (auto& f : e.facts) s += render_fact(f) + "\n";
    }
    return s;
}

// One JSON record per answer tuple, in tuple order.
inline std::vector<std::string> render_answers(const answer_set& answers, const std::string& pred, time_point t_out) {
    std::vector<std::string> out;
    for (auto& tup : answers) {
        nlohmann::ordered_json j;
        j["t_out"] = t_out;
        j["pred"] = pred;
        j["tuple"] = tup;
        out.push_back(j.dump());
    }
    return out;
}

// Marks a definitive time point without answers.
inline std::string render_empty_answer(const std::string& pred, time_point t_out) {
    nlohmann::ordered_json j;
    j["t_out"] = t_out;
    j["pred"] = pred;
    j["tuples"] = nlohmann::json::array();
    return j.dump();
}

}  // namespace tdl
