#include <CLI11.hpp>
#include <iostream>

#include "qmnum/config.hpp"
#include "qmnum/experiments.hpp"

namespace {

// exit codes: 0 ok, 2 config error, 3 out of regime, 4 invariant violation
int guarded(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const qmnum::invalid_input& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const qmnum::out_of_regime& e) {
        std::cerr << "out of regime: " << e.what() << "\n";
        return 3;
    } catch (const qmnum::invariant_violation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

void add_named_flag(CLI::App* cmd, std::vector<std::string>& overrides, const std::string& flag,
                    const std::string& param) {
    cmd->add_option_function<std::string>(
        flag,
        [&overrides, param](const std::string& v) { overrides.push_back(param + "=" + v); },
        "shorthand for --set " + param + "=<value>");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qmnum: numerical experiments on matrix product states, almost commuting "
                 "unitaries, vector bundles, and erasure decoders"};
    app.require_subcommand(1);

    auto* list_cmd = app.add_subcommand("list", "list available experiments");

    std::string run_name, config_path, out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = -1;
    std::vector<std::string> overrides;

    auto* run_cmd = app.add_subcommand("run", "run an experiment");
    run_cmd->add_option("experiment", run_name, "experiment name")->required();
    run_cmd->add_option("--config", config_path, "TOML config file");
    run_cmd->add_option("--set", overrides, "override key=value (params.* or top level)");
    run_cmd->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t v) { seed = v; seed_set = true; }, "seed override");
    run_cmd->add_option("--out", out_dir, "output directory");
    run_cmd->add_option("--workers", workers, "worker pool width");
    add_named_flag(run_cmd, overrides, "--N", "params.n");
    add_named_flag(run_cmd, overrides, "--n", "params.n");
    add_named_flag(run_cmd, overrides, "--delta-override", "params.delta_override");
    add_named_flag(run_cmd, overrides, "--window", "params.window");
    add_named_flag(run_cmd, overrides, "--grid", "params.grid");
    add_named_flag(run_cmd, overrides, "--radius", "params.radius");
    add_named_flag(run_cmd, overrides, "--grid-step", "params.grid_step");
    add_named_flag(run_cmd, overrides, "--class", "params.class");

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "validate a config file");
    validate_cmd->add_option("config", validate_path, "TOML config file")->required();

    CLI11_PARSE(app, argc, argv);

    if (list_cmd->parsed()) {
        for (const auto& name : qmnum::experiments::names()) {
            std::cout << name << "  defaults: " << qmnum::experiments::defaults(name).dump()
                      << "\n";
        }
        return 0;
    }

    if (validate_cmd->parsed()) {
        return guarded([&] {
            nlohmann::json flat = qmnum::config::parse_toml_file(validate_path);
            qmnum::config::ExperimentConfig cfg = qmnum::config::make_config(flat);
            if (cfg.name.empty()) throw qmnum::invalid_input("config missing 'experiment'");
            nlohmann::json params = qmnum::experiments::resolve_params(cfg);
            std::cout << "ok: " << cfg.name << " " << params.dump() << "\n";
        });
    }

    return guarded([&] {
        nlohmann::json flat =
            config_path.empty() ? nlohmann::json::object() : qmnum::config::parse_toml_file(config_path);
        // flags win over the file
        flat["experiment"] = run_name;
        for (const std::string& ov : overrides) qmnum::config::apply_override(flat, ov);
        qmnum::config::ExperimentConfig cfg = qmnum::config::make_config(flat);
        if (seed_set) cfg.seed = seed;
        if (workers >= 0) cfg.workers = workers;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        nlohmann::json summary = qmnum::experiments::run(cfg);
        std::cout << summary.dump(2) << "\n";
    });
}
