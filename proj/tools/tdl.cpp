#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "tdl/stream.hpp"

namespace {

std::string read_file(const std::string& path) {
    if (path == "-") {
        std::stringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path);
    if (!in) throw tdl::validation_error("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

tdl::query load_query(const std::string& path) {
    try {
        return tdl::parse_query(read_file(path));
    } catch (const tdl::parse_error& e) {
        throw tdl::validation_error(path + ":" + e.what());
    }
}

tdl::dataset load_dataset(const std::string& path, const tdl::program& p) {
    try {
        return tdl::parse_dataset(read_file(path), p);
    } catch (const tdl::parse_error& e) {
        throw tdl::validation_error(path + ":" + e.what());
    }
}

void print(bool b) { std::cout << (b ? "true" : "false") << '\n'; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal Datalog stream reasoning"};
    app.require_subcommand(1);

    std::string program_path, history_path, q1_path, q2_path, stream_path = "-", mode = "online";
    tdl::time_point t_in = 0, t_out = 0, t_mem = 0, d = 0, s = 0;
    bool nonrecursive = false, minimal = false, trust = false, no_forget = false;
    std::vector<tdl::time_point> anchors;

    auto* dtp = app.add_subcommand("dtp", "is t_out definitive for the history");
    dtp->add_option("--program", program_path, "query file")->required();
    dtp->add_option("--history", history_path, "history file")->required();
    dtp->add_option("--t-in", t_in)->required();
    dtp->add_option("--t-out", t_out)->required();
    dtp->add_flag("--nonrecursive", nonrecursive, "use the bounded update (nonrecursive, connected queries)");

    auto* forget = app.add_subcommand("forget", "can the history up to t_mem be dropped");
    forget->add_option("--program", program_path, "query file")->required();
    forget->add_option("--history", history_path, "history file")->required();
    forget->add_option("--t-in", t_in)->required();
    forget->add_option("--t-out", t_out)->required();
    forget->add_option("--t-mem", t_mem)->required();

    auto* contain = app.add_subcommand("contain", "is every answer of q1 an answer of q2");
    contain->add_option("--q1", q1_path)->required();
    contain->add_option("--q2", q2_path)->required();
    contain->add_option("--at", anchors, "compare answers at these times only");

    auto* delay = app.add_subcommand("delay", "check a delay or find the least one");
    delay->add_option("--program", program_path, "query file")->required();
    auto* delay_d = delay->add_option("--d", d);
    auto* delay_min = delay->add_flag("--minimal", minimal);
    delay_d->excludes(delay_min);

    auto* window = app.add_subcommand("window", "check a window size or find the least one");
    window->add_option("--program", program_path, "query file")->required();
    window->add_option("--d", d)->required();
    auto* window_s = window->add_option("--s", s);
    auto* window_min = window->add_flag("--minimal", minimal);
    window_s->excludes(window_min);

    auto* run = app.add_subcommand("run", "stream answers for a tick-ordered stream");
    run->add_option("--mode", mode)->check(CLI::IsMember({"online", "offline"}));
    run->add_option("--program", program_path, "query file")->required();
    auto* run_d = run->add_option("--d", d, "offline delay (least valid one when omitted)");
    auto* run_s = run->add_option("--s", s, "offline window size (least valid one when omitted)");
    run->add_option("--stream", stream_path, "stream file, - for stdin");
    run->add_flag("--trust", trust, "skip validating --d and --s");
    run->add_flag("--no-forget", no_forget, "online: keep the whole history");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*dtp) {
            auto q = load_query(program_path);
            tdl::dtp_instance in{q, load_dataset(history_path, q.prog), t_in, t_out};
            print(nonrecursive ? tdl::decide_dtp_nonrecursive(in) : tdl::decide_dtp_general(in));
        } else if (*forget) {
            auto q = load_query(program_path);
            print(tdl::decide_forget({q, load_dataset(history_path, q.prog), t_in, t_out, t_mem}));
        } else if (*contain) {
            auto q1 = load_query(q1_path), q2 = load_query(q2_path);
            if (!anchors.empty() || !q1.prog.find(q1.output)->temporal)
                print(tdl::decide_containment_unfolded(q1, q2, anchors).holds);
            else
                print(tdl::decide_containment_grounded(q1, q2).holds);
        } else if (*delay) {
            auto q = load_query(program_path);
            if (minimal)
                std::cout << tdl::minimal_delay(q) << '\n';
            else
                print(tdl::decide_delay(q, d));
        } else if (*window) {
            auto q = load_query(program_path);
            if (minimal)
                std::cout << tdl::minimal_window(q, d) << '\n';
            else
                print(tdl::decide_window(q, d, s));
        } else if (*run) {
            auto q = load_query(program_path);
            std::vector<tdl::stream_event> events;
            try {
                events = tdl::parse_stream(read_file(stream_path), q.prog);
            } catch (const tdl::parse_error& e) {
                throw tdl::validation_error(stream_path + ":" + e.what());
            }
            auto sink = tdl::json_lines_sink(std::cout, q.output);
            tdl::session_summary sum;
            if (mode == "online") {
                tdl::online_options opt;
                opt.forget = !no_forget;
                opt.engine.max_horizon = tdl::horizon_from_env(opt.engine.max_horizon);
                sum = tdl::run_online(q, events, sink, opt);
            } else {
                tdl::offline_options opt;
                opt.trust = trust;
                opt.engine.max_horizon = tdl::horizon_from_env(opt.engine.max_horizon);
                if (!*run_d) d = tdl::minimal_delay(q);
                if (!*run_s) s = tdl::minimal_window(q, d);
                if (!*run_d || !*run_s) std::cerr << "delay " << d << ", window size " << s << '\n';
                sum = tdl::run_offline(q, d, s, events, sink, opt);
            }
            std::cerr << "t_in " << sum.t_in << ", t_out " << sum.t_out << ", t_mem " << sum.t_mem << ", emitted "
                      << sum.emitted << ", peak slices " << sum.peak_slices << '\n';
        }
    } catch (const tdl::validation_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const tdl::decision_error& e) {
        std::cerr << "undecided: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
