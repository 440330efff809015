#include "commands.hpp"

#include "edgesignal/config.hpp"
#include "edgesignal/errors.hpp"
#include "edgesignal/net/socket.hpp"

#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <iostream>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

} // namespace

int main(int argc, char** argv)
{
    // Long-running subcommands wait for these with sigtimedwait; block them
    // before any thread starts so none of them takes the signal instead.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    spdlog::set_default_logger(spdlog::stderr_color_mt("edgesignal"));
    spdlog::set_level(spdlog::level::warn);
    spdlog::cfg::load_env_levels();

    CLI::App app{"Adaptive traffic signal controller: simulator, edge server and tools"};
    app.set_version_flag("--version", std::string(edgesignal::kToolVersion));
    app.require_subcommand(1);

    namespace cli = edgesignal::cli;
    const std::vector<cli::Command> commands = {
        cli::register_simulate(app), cli::register_decide(app),  cli::register_serve(app),
        cli::register_agent(app),    cli::register_replay(app),  cli::register_latency(app),
        cli::register_cloud(app),
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        for (const auto& command : commands) {
            if (command.app->parsed()) {
                return command.run();
            }
        }
        return kExitInternal;
    } catch (const edgesignal::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const edgesignal::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const edgesignal::net::NetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
