#pragma once

#include <filesystem>
#include <string>

#include "treegen/io.hpp"

namespace treegen::cli {

struct CommandContext {
    io::Config config;
    std::filesystem::path out_dir;
    std::string command;
};

int run_train(CommandContext& ctx);
int run_schedule(CommandContext& ctx);
int run_analyze(CommandContext& ctx);
int run_repeater(CommandContext& ctx);
int run_sweep(CommandContext& ctx);
int run_compare(CommandContext& ctx);

// Echoes the effective config, hashes it, and writes the manifest once the
// command has produced its files.
void finalize(CommandContext& ctx, const std::string& started,
              const std::vector<std::filesystem::path>& outputs);

}  // namespace treegen::cli
