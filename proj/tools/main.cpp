#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "treegen/io.hpp"

namespace fs = std::filesystem;
using treegen::cli::CommandContext;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir = "out";
    std::int64_t seed = -1;
    std::int64_t threads = -1;
    std::string preset;
};

void add_common(CLI::App* app, CommonFlags& flags) {
    app->add_option("--config", flags.config_path, "key = value configuration file");
    app->add_option("--out", flags.out_dir, "output directory");
    app->add_option("--seed", flags.seed, "global RNG seed");
    app->add_option("--threads", flags.threads, "worker threads (TREEGEN_THREADS overrides)");
}

// Precedence: built-in defaults < config file < command line < TREEGEN_THREADS.
CommandContext make_context(const std::string& command, const CommonFlags& flags,
                            const std::vector<std::pair<std::string, std::string>>& cli_pairs) {
    CommandContext ctx;
    ctx.command = command;
    if (!flags.config_path.empty()) ctx.config = treegen::io::Config::from_file(flags.config_path);
    for (const auto& [key, value] : cli_pairs) ctx.config.set(key, value);
    if (flags.seed >= 0) ctx.config.set("seed", std::to_string(flags.seed));
    if (flags.threads >= 0) ctx.config.set("threads", std::to_string(flags.threads));
    if (!flags.preset.empty()) ctx.config.set("preset", flags.preset);
    if (const char* env = std::getenv("TREEGEN_THREADS"))
        ctx.config.set("threads", env);
    ctx.out_dir = flags.out_dir;
    fs::create_directories(ctx.out_dir);
    return ctx;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tree-type photonic cluster state generator toolkit"};
    app.require_subcommand(1);

    // Each subcommand stores its options as strings and forwards them into
    // the config so that file- and flag-based runs share one code path.
    struct Sub {
        CLI::App* app = nullptr;
        CommonFlags flags;
        std::vector<std::pair<std::string, std::string>> pairs;
    };
    std::map<std::string, Sub> subs;

    auto add_opt = [](Sub& sub, const std::string& flag, const std::string& key,
                      const std::string& help) {
        auto* opt = sub.app->add_option_function<std::string>(
            flag, [&sub, key](const std::string& v) { sub.pairs.emplace_back(key, v); }, help);
        opt->expected(1);
    };

    {
        Sub& s = subs["train"];
        s.app = app.add_subcommand("train", "train QPNNs on the unit-cell operation set");
        add_common(s.app, s.flags);
        s.app->add_option("--preset", s.flags.preset, "hardware preset (single|multi|future|lossless)");
        add_opt(s, "--trials", "trials", "optimization trials");
        add_opt(s, "--epochs", "epochs", "gradient steps per trial");
        add_opt(s, "--b-max", "b_max", "largest branching the network must support");
        add_opt(s, "--basis", "basis", "training set basis choice (restricted|full)");
        add_opt(s, "--modes", "modes", "override network mode count");
        add_opt(s, "--layers", "layers", "override network layer count");
        add_opt(s, "--learning-rate", "learning_rate", "Adam base learning rate");
        add_opt(s, "--decay", "decay", "exponential decay factor");
        add_opt(s, "--decay-period", "decay_period", "epochs per decay period");
        add_opt(s, "--dump-states", "dump_states", "write best-network output states");
    }
    {
        Sub& s = subs["schedule"];
        s.app = app.add_subcommand("schedule", "emit the timing protocol for a tree");
        add_common(s.app, s.flags);
        add_opt(s, "--b", "b", "branching vector, e.g. 2,4,2");
        add_opt(s, "--dt-ns", "dt_ns", "source period in ns");
        add_opt(s, "--sources", "sources", "single-photon sources (1 or 3)");
        add_opt(s, "--delay-mode", "delay_mode", "delay lines: dynamic|static");
    }
    {
        Sub& s = subs["analyze"];
        s.app = app.add_subcommand("analyze", "loss budgets and rates for one tree");
        add_common(s.app, s.flags);
        s.app->add_option("--preset", s.flags.preset, "hardware preset");
        add_opt(s, "--b", "b", "branching vector");
        add_opt(s, "--depth", "depth", "depth of an all-2 tree when --b is omitted");
        add_opt(s, "--dt-ns", "dt_ns", "source period in ns");
        add_opt(s, "--sources", "sources", "single-photon sources (1 or 3)");
        add_opt(s, "--delay-mode", "delay_mode", "delay lines: dynamic|static");
        add_opt(s, "--channel-km", "channel_km", "append a fiber channel to every photon");
    }
    {
        Sub& s = subs["repeater"];
        s.app = app.add_subcommand("repeater", "optimal trees along a repeater chain");
        add_common(s.app, s.flags);
        s.app->add_option("--preset", s.flags.preset, "hardware preset");
        add_opt(s, "--lengths", "lengths", "channel lengths km: list or start:stop:step");
        add_opt(s, "--constraint", "constraint", "branching constraint (b2|free)");
        add_opt(s, "--separation-km", "separation_km", "node separation in km");
        add_opt(s, "--max-depth", "max_depth", "search bound on tree depth");
        add_opt(s, "--max-branch", "max_branch", "search bound on branching");
        add_opt(s, "--dt-ns", "dt_ns", "source period in ns");
    }
    {
        Sub& s = subs["sweep"];
        s.app = app.add_subcommand("sweep", "parameter sweeps (loss-reduction, dc-sigma)");
        add_common(s.app, s.flags);
        s.app->add_option("--preset", s.flags.preset, "hardware preset");
        add_opt(s, "--kind", "kind", "sweep kind: loss-reduction|dc-sigma");
        add_opt(s, "--values", "values", "swept values: list or start:stop:step");
        add_opt(s, "--depths", "depths", "tree depths: list or start:stop:step");
        add_opt(s, "--trials", "trials", "trials per point (dc-sigma)");
        add_opt(s, "--epochs", "epochs", "epochs per trial (dc-sigma)");
        add_opt(s, "--dt-ns", "dt_ns", "source period in ns");
    }
    {
        Sub& s = subs["compare"];
        s.app = app.add_subcommand("compare", "protocol comparison curves vs tree scale");
        add_common(s.app, s.flags);
        add_opt(s, "--gen-loss", "gen_loss", "per-photon generation loss fraction");
        add_opt(s, "--hop-km", "hop_km", "fiber hop after generation, km");
        add_opt(s, "--max-depth", "max_depth", "largest tree depth");
        add_opt(s, "--max-branch", "max_branch", "largest branching");
        add_opt(s, "--dt-ns", "dt_ns", "source period in ns");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (auto& [name, sub] : subs) {
            if (!sub.app->parsed()) continue;
            CommandContext ctx = make_context(name, sub.flags, sub.pairs);
            if (name == "train") return treegen::cli::run_train(ctx);
            if (name == "schedule") return treegen::cli::run_schedule(ctx);
            if (name == "analyze") return treegen::cli::run_analyze(ctx);
            if (name == "repeater") return treegen::cli::run_repeater(ctx);
            if (name == "sweep") return treegen::cli::run_sweep(ctx);
            if (name == "compare") return treegen::cli::run_compare(ctx);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
