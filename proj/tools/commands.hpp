#pragma once

#include <CLI11.hpp>

#include <functional>
#include <string>
#include <vector>

namespace edgesignal::cli {

/// A registered subcommand and what to run when it is selected. `run`
/// returns the process exit code.
struct Command {
    CLI::App* app = nullptr;
    std::function<int()> run;
};

Command register_simulate(CLI::App& app);
Command register_decide(CLI::App& app);
Command register_serve(CLI::App& app);
Command register_agent(CLI::App& app);
Command register_replay(CLI::App& app);
Command register_latency(CLI::App& app);
Command register_cloud(CLI::App& app);

} // namespace edgesignal::cli
