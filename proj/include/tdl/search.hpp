#pragma once

#include <cstdint>
#include <functional>
#include <limits>

#include "model.hpp"

namespace tdl {

// Number of subsets of an n-set with at most k elements, saturating.
inline std::uint64_t subsets_up_to(std::uint64_t n, std::uint64_t k) {
    const auto cap = std::numeric_limits<std::uint64_t>::max() / 4;
    std::uint64_t total = 0, c = 1;  // c = C(n, i)
    for (std::uint64_t i = 0; i <= k && i <= n; ++i) {
        total += c;
        if (total > cap) return cap;
        if (c > cap / (n - i + 1)) return cap;
        c = c * (n - i) / (i + 1);
    }
    return total;
}

// Visits subsets of {0..n-1} by increasing size, up to `k` elements; stops
// when `fn` returns true. Returns whether it was stopped.
inline bool for_each_subset(std::size_t n, std::size_t k, const std::function<bool(const std::vector<std::size_t>&)>& fn) {
    std::vector<std::size_t> pick;
    if (fn(pick)) return true;
    for (std::size_t size = 1; size <= k && size <= n; ++size) {
        pick.resize(size);
        for (std::size_t i = 0; i < size; ++i) pick[i] = i;
        for (;;) {
            if (fn(pick)) return true;
            std::size_t i = size;
            while (i > 0 && pick[i - 1] == n - size + i - 1) --i;
            if (i == 0) break;
            ++pick[i - 1];
            for (std::size_t j = i; j < size; ++j) pick[j] = pick[j - 1] + 1;
        }
    }
    return false;
}

// Every fact used to derive an answer at t lies within this distance of t
// (nonrecursive, connected programs without time points).
inline time_point derivation_span(const query& q) {
    auto a = analyze(q.prog);
    return a.max_rule_radius * static_cast<time_point>(a.program_rank);
}

// Largest number of EDB facts a single derivation of `pred` can use in a
// nonrecursive program. By monotonicity, a witness that some answer appears
// or disappears never needs more update facts than this.
inline std::size_t witness_size_bound(const program& p, const std::string& pred) {
    std::map<std::string, std::size_t> memo;
    auto go = [&](auto& self, const std::string& n, int depth) -> std::size_t {
        if (depth > 256) throw validation_error("witness bound needs a nonrecursive program");
        if (p.is_edb(n)) return 1;
        if (auto it = memo.find(n); it != memo.end()) return it->second;
        std::size_t best = 0;
        for (auto& r : p.rules) {
            if (r.head.pred != n || r.body.empty()) continue;
            std::size_t sum = 0;
            for (auto& b : r.body) sum += self(self, b.pred, depth + 1);
            best = std::max(best, sum);
        }
        return memo[n] = best;
    };
    return go(go, pred, 0);
}

// All tuples of length n over `domain`.
inline std::vector<tuple> all_tuples(const std::vector<std::string>& domain, std::size_t n) {
    std::vector<tuple> out{{}};
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<tuple> next;
        for (auto& t : out)
            for (auto& o : domain) {
                auto u = t;
                u.push_back(o);
                next.push_back(std::move(u));
            }
        out = std::move(next);
    }
    return out;
}

struct oracle_options {
    std::size_t max_size = 0;          // largest witness tried; 0 picks witness_size_bound
    std::uint64_t max_checks = 4'000'000;  // enumeration cap
};

}  // namespace tdl
