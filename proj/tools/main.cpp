// dispersionlab: batch experiment runner and transform utility.
//
// Subcommands mirror the experiment kinds (ode, wave1d, wave2d, wavepacket,
// transform, lemma-init, nonmatching) plus `presets` to list the built-in
// configurations. Exit codes: 0 success, 2 validation failure, 3 numeric
// failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "dispersionlab/presets.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using nlohmann::json;

struct CommonArgs {
    std::string preset;
    std::string config_path;
    std::string out_dir;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--preset", args.preset, "built-in preset name");
    cmd->add_option("--config", args.config_path, "JSON config path");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--threads", args.threads, "worker threads (default: all)");
}

void configure_threads(int threads) {
#ifdef _OPENMP
    if (threads <= 0) {
        if (const char* env = std::getenv("DISPERSIONLAB_THREADS")) threads = std::atoi(env);
    }
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

// Default parameter blocks for kinds without a named preset.
json default_params(const std::string& kind) {
    if (kind == "lemma-init")
        return {{"mu", 5.0}, {"sigma2", 0.1}, {"a", 0.0},
                {"dt_list", {0.04, 0.02, 0.01}}, {"t_max", 20.0}};
    if (kind == "nonmatching")
        return {{"l11", -1.0}, {"l12", 0.5}, {"l21", 0.5}, {"c", 2.0}, {"n", 2000}, {"dt", 0.02}};
    return {};
}

int run_kind(const std::string& kind, const CommonArgs& args) {
    configure_threads(args.threads);
    dlab::ExperimentConfig cfg;
    cfg.kind = kind;

    if (!args.preset.empty() && !args.config_path.empty())
        throw std::invalid_argument("--preset and --config are mutually exclusive");

    if (!args.preset.empty()) {
        const json pc = dlab::preset_config(args.preset);
        if (pc.at("kind").get<std::string>() != kind)
            throw std::invalid_argument("preset '" + args.preset + "' belongs to kind '" +
                                        pc.at("kind").get<std::string>() + "'");
        cfg.params = pc.at("params");
        cfg.preset_name = args.preset;
    } else if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw std::invalid_argument("cannot open config " + args.config_path);
        json file = json::parse(in);
        if (file.contains("kind")) {
            if (file.at("kind").get<std::string>() != kind)
                throw std::invalid_argument("config kind does not match the subcommand");
            cfg.params = file.at("params");
        } else {
            cfg.params = file;
        }
    } else {
        cfg.params = default_params(kind);
        if (cfg.params.empty())
            throw std::invalid_argument("subcommand '" + kind + "' needs --preset or --config");
    }

    cfg.out_dir = args.out_dir.empty()
                      ? std::filesystem::path("out") /
                            (kind + (args.preset.empty() ? "" : "-" + args.preset))
                      : std::filesystem::path(args.out_dir);
    const json results = dlab::run_experiment(cfg);
    std::cout << results.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time dispersion transform laboratory"};
    app.require_subcommand(1);

    const std::vector<std::string> kinds = {"ode",       "wave1d",     "wave2d",
                                            "wavepacket", "lemma-init", "nonmatching"};
    std::map<std::string, CommonArgs> args;
    for (const auto& kind : kinds) {
        auto* cmd = app.add_subcommand(kind, kind + " experiment");
        add_common(cmd, args[kind]);
    }

    // transform runs from flags (or --config) and writes a single CSV
    CommonArgs transform_args;
    std::string t_direction, t_scheme, t_in, t_out;
    double t_dt = 0.0;
    auto* t_cmd = app.add_subcommand("transform", "apply a discrete dispersion transform");
    t_cmd->add_option("--direction", t_direction, "forward | inverse | inverse-alt");
    t_cmd->add_option("--scheme", t_scheme, "central | leapfrog");
    t_cmd->add_option("--dt", t_dt, "sampling step, seconds");
    t_cmd->add_option("--in", t_in, "input CSV");
    t_cmd->add_option("--out", t_out, "output CSV");
    t_cmd->add_option("--config", transform_args.config_path, "JSON config path");
    t_cmd->add_option("--threads", transform_args.threads, "worker threads");

    auto* p_cmd = app.add_subcommand("presets", "list built-in presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (p_cmd->parsed()) {
            for (const auto& [name, cfg] : dlab::presets())
                std::cout << name << ": " << cfg.dump() << '\n';
            return 0;
        }
        if (t_cmd->parsed()) {
            configure_threads(transform_args.threads);
            dlab::ExperimentConfig cfg;
            cfg.kind = "transform";
            if (!transform_args.config_path.empty()) {
                std::ifstream in(transform_args.config_path);
                if (!in)
                    throw std::invalid_argument("cannot open config " + transform_args.config_path);
                json file = json::parse(in);
                cfg.params = file.contains("params") ? file.at("params") : file;
            } else {
                if (t_direction.empty() || t_scheme.empty() || t_in.empty() || t_out.empty() ||
                    !(t_dt > 0.0))
                    throw std::invalid_argument(
                        "transform needs --direction, --scheme, --dt, --in, --out");
                cfg.params = {{"direction", t_direction},
                              {"scheme", t_scheme},
                              {"dt", t_dt},
                              {"input", t_in},
                              {"output", t_out}};
            }
            dlab::run_experiment(cfg);
            return 0;
        }
        for (const auto& kind : kinds) {
            if (app.get_subcommand(kind)->parsed()) return run_kind(kind, args[kind]);
        }
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    }
}
