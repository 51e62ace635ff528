#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cppo/config.hpp"
#include "cppo/fuzz.hpp"
#include "cppo/plot.hpp"
#include "cppo/trainer.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write file: " + path.string());
    f << content;
}

cppo::TrainConfig env_defaults(cppo::EnvKind env) {
    cppo::TrainConfig cfg;
    cfg.env = env;
    switch (env) {
        case cppo::EnvKind::Bridge:
            cfg.total_steps = 60000;
            cfg.batch_size = 600;
            cfg.rollout_length = 30;
            cfg.cost_limit = 0.3;
            cfg.mstep.epochs = 20;
            cfg.mstep.minibatch = 0;
            cfg.mstep.learning_rate = 0.5;  // plain SGD at desk scale
            break;
        case cppo::EnvKind::Chain:
            cfg.total_steps = 40000;
            cfg.batch_size = 400;
            cfg.rollout_length = 20;
            cfg.cost_limit = 0.2;
            cfg.mstep.epochs = 20;
            cfg.mstep.minibatch = 0;
            cfg.mstep.learning_rate = 0.5;
            break;
        case cppo::EnvKind::PointCircle:
            cfg.total_steps = 200000;
            cfg.batch_size = 1000;
            cfg.rollout_length = 50;
            cfg.cost_limit = 5.0;
            cfg.mstep.epochs = 10;
            cfg.mstep.minibatch = 256;
            cfg.mstep.learning_rate = 0.01;
            cfg.ppo_lr = 0.01;
            break;
    }
    return cfg;
}

cppo::EnvKind parse_env(const std::string& name) {
    if (name == "bridge") return cppo::EnvKind::Bridge;
    if (name == "chain") return cppo::EnvKind::Chain;
    if (name == "point-circle") return cppo::EnvKind::PointCircle;
    throw std::invalid_argument("unknown env '" + name + "'");
}

cppo::Algo parse_algo(const std::string& name) {
    if (name == "cppo") return cppo::Algo::Cppo;
    if (name == "ppo") return cppo::Algo::Ppo;
    if (name == "ppo-lag") return cppo::Algo::PpoLag;
    throw std::invalid_argument("unknown algo '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constrained policy optimization laboratory"};
    app.require_subcommand(1);

    // ------------------------------------------------------------- train
    auto* train = app.add_subcommand("train", "Run a seeded training experiment");
    std::string env_flag, algo_flag, config_path, out_dir;
    uint64_t seed_flag = 0;
    double cost_limit_flag = 0.0;
    int total_steps_flag = 0;
    bool no_recovery = false;
    train->add_option("--env", env_flag, "bridge | chain | point-circle");
    train->add_option("--algo", algo_flag, "cppo | ppo | ppo-lag");
    auto* seed_opt = train->add_option("--seed", seed_flag, "run seed");
    train->add_option("--config", config_path, "TOML config overriding defaults");
    train->add_option("--out", out_dir, "output directory (default ./runs/<env>-<algo>-s<seed>)");
    auto* limit_opt = train->add_option("--cost-limit", cost_limit_flag, "cost threshold d");
    auto* steps_opt = train->add_option("--total-steps", total_steps_flag, "environment steps");
    train->add_flag("--no-recovery", no_recovery, "disable the recovery update (ablation)");

    // -------------------------------------------------------------- plot
    auto* plot = app.add_subcommand("plot", "Render learning-curve SVGs from metrics CSVs");
    std::vector<std::string> metrics_files;
    std::string plot_out = ".";
    double plot_limit = 5.0;
    plot->add_option("files", metrics_files, "metrics CSV files")->required()->expected(-1);
    plot->add_option("--out", plot_out, "output directory");
    plot->add_option("--cost-limit", plot_limit, "dashed constraint line level");

    // -------------------------------------------------------------- fuzz
    auto* fuzz = app.add_subcommand("solver-fuzz", "Heuristic-vs-oracle solver sweep");
    int fuzz_count = 200;
    uint64_t fuzz_seed = 0;
    std::string fuzz_out = "fuzz_report.json";
    fuzz->add_option("--count", fuzz_count, "number of random instances");
    fuzz->add_option("--seed", fuzz_seed, "sweep seed");
    fuzz->add_option("--out", fuzz_out, "report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (train->parsed()) {
            // Resolve the environment first so its defaults seed the config,
            // then file values, then explicit flags.
            std::string file_text = config_path.empty() ? "" : read_file(config_path);
            cppo::EnvKind env = cppo::EnvKind::Bridge;
            if (!env_flag.empty()) {
                env = parse_env(env_flag);
            } else if (!file_text.empty()) {
                auto keys = cppo::parse_toml(file_text);
                if (auto it = keys.find("env"); it != keys.end())
                    env = parse_env(std::get<std::string>(it->second));
            }
            cppo::TrainConfig cfg = env_defaults(env);
            if (!file_text.empty()) cppo::apply_config_file(cfg, file_text);
            if (!env_flag.empty()) cfg.env = env;
            if (!algo_flag.empty()) cfg.algo = parse_algo(algo_flag);
            if (seed_opt->count() > 0) cfg.seed = seed_flag;
            if (limit_opt->count() > 0) cfg.cost_limit = cost_limit_flag;
            if (steps_opt->count() > 0) cfg.total_steps = total_steps_flag;
            if (no_recovery) cfg.recovery_enabled = false;

            if (out_dir.empty()) {
                std::string env_name = env_flag.empty() ? "bridge" : env_flag;
                switch (cfg.env) {
                    case cppo::EnvKind::Bridge: env_name = "bridge"; break;
                    case cppo::EnvKind::Chain: env_name = "chain"; break;
                    case cppo::EnvKind::PointCircle: env_name = "point-circle"; break;
                }
                std::string algo_name = "cppo";
                switch (cfg.algo) {
                    case cppo::Algo::Cppo: algo_name = "cppo"; break;
                    case cppo::Algo::Ppo: algo_name = "ppo"; break;
                    case cppo::Algo::PpoLag: algo_name = "ppo-lag"; break;
                }
                out_dir = "runs/" + env_name + "-" + algo_name + "-s" + std::to_string(cfg.seed);
            }
            cppo::RunResult result = cppo::run_experiment(cfg, out_dir);
            const auto& last = result.rows.back();
            std::printf("done: %d iterations, final return %.4f, final cost %.4f -> %s\n",
                        last.iter + 1, last.ep_return_mean, last.ep_cost_mean, out_dir.c_str());
            return 0;
        }

        if (plot->parsed()) {
            std::vector<cppo::MetricsTable> runs;
            for (const auto& path : metrics_files) runs.push_back(cppo::parse_metrics_csv(read_file(path)));
            cppo::PlotFiles files = cppo::render_learning_curves(runs, plot_limit);
            fs::create_directories(plot_out);
            write_file(fs::path(plot_out) / "return.svg", files.return_svg);
            write_file(fs::path(plot_out) / "cost.svg", files.cost_svg);
            std::printf("wrote %s/return.svg and %s/cost.svg\n", plot_out.c_str(), plot_out.c_str());
            return 0;
        }

        if (fuzz->parsed()) {
            cppo::FuzzSummary summary = cppo::run_solver_fuzz(fuzz_count, fuzz_seed);
            write_file(fuzz_out, summary.report_json);
            std::printf("fuzz: %d instances, %d compared, max gap %.6f, max residual %.3g -> %s\n",
                        summary.count, summary.compared, summary.max_objective_gap,
                        summary.max_constraint_residual, fuzz_out.c_str());
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
