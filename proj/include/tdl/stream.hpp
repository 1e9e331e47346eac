#pragma once

#include <functional>

#include "forget.hpp"
#include "offline.hpp"
#include "textio.hpp"

namespace tdl {

struct emitted_answer {
    time_point t_out = 0;
    answer_set tuples;
    bool operator==(const emitted_answer&) const = default;
};

using answer_sink = std::function<void(const emitted_answer&)>;

struct session_summary {
    time_point t_in = 0;
    time_point t_out = 0;
    time_point t_mem = 0;
    std::size_t emitted = 0;
    std::size_t peak_slices = 0;  // temporal slices held, measured after each tick's facts arrive
    std::size_t peak_facts = 0;
    bool forgetting = false;
};

struct online_options {
    bool forget = true;  // only honoured for nonrecursive, connected, time-point-free queries
    engine_options engine;
};

// Tracks the held history between ticks.
class session_state {
public:
    void absorb(const dataset& facts) {
        for (auto& f : facts) store_.insert(f);
        peak_slices_ = std::max(peak_slices_, store_.slice_count());
        peak_facts_ = std::max(peak_facts_, store_.size());
    }
    void drop(time_point t) { store_.drop_slice(t); }
    dataset history() const { return store_.facts(); }
    std::size_t slices() const { return store_.slice_count(); }
    std::size_t peak_slices() const { return peak_slices_; }
    std::size_t peak_facts() const { return peak_facts_; }

private:
    fact_store store_;
    std::size_t peak_slices_ = 0, peak_facts_ = 0;
};

inline bool forgetting_supported(const query& q) {
    auto a = analyze(q.prog);
    return a.is_nonrecursive && a.is_connected && !a.has_time_points;
}

namespace stream_detail {

inline void check_events(const std::vector<stream_event>& events) {
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].tick != static_cast<time_point>(i))
            throw validation_error("events must cover ticks 0, 1, 2, ... in order");
        for (auto& f : events[i].facts)
            if (!f.time || *f.time != events[i].tick)
                throw validation_error("event at tick " + std::to_string(i) + " holds a fact at another time");
    }
}

inline void require_temporal_output(const query& q) {
    require_valid(q.prog);
    auto* s = q.prog.find(q.output);
    if (!s || !s->temporal) throw validation_error("output predicate must be temporal");
}

}  // namespace stream_detail

// Emits each output point once it is definitive and drops history slices once
// they are forgettable.
inline session_summary run_online(const query& q, const std::vector<stream_event>& events, const answer_sink& emit,
                                  online_options opt = {}) {
    stream_detail::require_temporal_output(q);
    stream_detail::check_events(events);
    evaluator ev(q.prog, opt.engine);
    session_summary sum;
    sum.forgetting = opt.forget && forgetting_supported(q);
    session_state st;
    time_point t_in = 0, t_out = 0, t_mem = 0;
    for (auto& e : events) {
        st.absorb(e.facts);
        auto d = st.history();
        while (t_out <= t_in && decide_dtp({q, d, t_in, t_out}, opt.engine)) {
            emit({t_out, ev.answers_at(d, q.output, t_out)});
            ++sum.emitted;
            ++t_out;
        }
        while (sum.forgetting && t_mem < t_out && decide_forget({q, d, t_in, t_out, t_mem})) {
            st.drop(t_mem);
            d = st.history();
            ++t_mem;
        }
        ++t_in;
    }
    sum.t_in = t_in;
    sum.t_out = t_out;
    sum.t_mem = t_mem;
    sum.peak_slices = st.peak_slices();
    sum.peak_facts = st.peak_facts();
    return sum;
}

struct offline_options {
    bool trust = false;  // skip validating (d, s)
    engine_options engine;
};

// Emits the answers at t_in - d every tick and keeps only the last s slices.
inline session_summary run_offline(const query& q, time_point d, time_point s, const std::vector<stream_event>& events,
                                   const answer_sink& emit, offline_options opt = {}) {
    stream_detail::require_temporal_output(q);
    stream_detail::check_events(events);
    if (d < 0 || s < 0) throw validation_error("delay and window size must be nonnegative");
    if (!opt.trust) {
        if (!decide_delay(q, d)) throw validation_error(std::to_string(d) + " is not a valid delay");
        if (!decide_window(q, d, s))
            throw validation_error(std::to_string(s) + " is not a valid window size for delay " + std::to_string(d));
    }
    evaluator ev(q.prog, opt.engine);
    session_summary sum;
    sum.forgetting = true;
    session_state st;
    time_point t_in = 0;
    for (auto& e : events) {
        st.absorb(e.facts);
        if (t_in - d >= 0) {
            emit({t_in - d, ev.answers_at(st.history(), q.output, t_in - d)});
            ++sum.emitted;
            sum.t_out = t_in - d + 1;
        }
        st.drop(t_in - s);
        ++t_in;
    }
    sum.t_in = t_in;
    sum.t_mem = std::max<time_point>(0, t_in - s);
    sum.peak_slices = st.peak_slices();
    sum.peak_facts = st.peak_facts();
    return sum;
}

// Answers over the whole stream at every tick.
inline std::map<time_point, answer_set> reference_run(const query& q, const std::vector<stream_event>& events,
                                                      engine_options opt = {}) {
    stream_detail::require_temporal_output(q);
    dataset all;
    for (auto& e : events) all.insert(e.facts.begin(), e.facts.end());
    std::map<time_point, answer_set> out;
    if (events.empty()) return out;
    evaluator ev(q.prog, opt);
    for (auto& e : events) out[e.tick] = ev.answers_at(all, q.output, e.tick);
    return out;
}

// Writes answers as JSON lines.
inline answer_sink json_lines_sink(std::ostream& os, const std::string& pred) {
    return [&os, pred](const emitted_answer& a) {
        if (a.tuples.empty())
            os << render_empty_answer(pred, a.t_out) << '\n';
        else
            for (auto& line : render_answers(a.tuples, pred, a.t_out)) os << line << '\n';
        os.flush();
    };
}

}  // namespace tdl
