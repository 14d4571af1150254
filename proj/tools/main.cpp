#include "idxadvis/error.hpp"
#include "idxadvis/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

namespace {

struct Flags {
    std::map<std::string, std::string> values;
    std::string config_file;
    bool zero_shot = false;
    bool no_vote = false;
    std::string ddl;
};

std::string dashed(std::string key) {
    for (auto& c : key)
        if (c == '_') c = '-';
    return key;
}

// Every subcommand takes the full setting list; irrelevant ones are ignored.
void add_settings(CLI::App* cmd, Flags& flags, std::map<std::string, CLI::Option*>& opts) {
    static const std::map<std::string, std::string> help{
        {"workload", "workload file (SQL text or JSON)"},
        {"catalog", "catalog JSON for the simulated backend"},
        {"dsn", "connection string for the live backend"},
        {"backend", "sim | live"},
        {"storage_pct", "storage budget as a fraction of database size"},
        {"llm", "mock | http"},
        {"model", "model name for the http backend"},
        {"endpoint", "chat-completions URL"},
        {"samples", "completions per inference"},
        {"temperature", "sampling temperature"},
        {"max_iters", "self-optimization rounds"},
        {"demos", "demonstration pool (JSON lines)"},
        {"match", "cosine | random | kmeans"},
        {"mode", "in-schema | cross-schema"},
        {"exclude_schema", "schema id whose demonstrations are skipped"},
        {"seed", "random seed"},
        {"out", "output path ('-' for stdout)"},
    };
    for (const auto& key : idxadvis::config_keys()) {
        if (key == "token" || key == "zero_shot" || key == "vote") continue;
        auto it = help.find(key);
        opts[key] = cmd->add_option("--" + dashed(key), flags.values[key], it == help.end() ? "" : it->second);
    }
    cmd->add_option("--config", flags.config_file, "JSON config file (flags override it, it overrides IDXADVIS_* variables)");
    cmd->add_flag("--zero-shot", flags.zero_shot, "advise without demonstrations");
    cmd->add_flag("--no-vote", flags.no_vote, "skip the voted option");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Workload index advisor"};
    app.require_subcommand(1);
    Flags flags;
    std::map<std::string, std::map<std::string, CLI::Option*>> opts;

    auto* advise = app.add_subcommand("advise", "recommend indexes for a workload");
    auto* build = app.add_subcommand("build-demos", "build a demonstration pool for a schema");
    auto* gen = app.add_subcommand("gen-workload", "synthesize and filter workload queries");
    auto* labels = app.add_subcommand("labels", "collect default and refined labels across the budget grid");
    auto* eval = app.add_subcommand("eval", "evaluate an index DDL file against a workload");
    for (auto* cmd : {advise, build, gen, labels, eval}) add_settings(cmd, flags, opts[cmd->get_name()]);
    eval->add_option("ddl", flags.ddl, "DDL file with CREATE INDEX statements (omit for the no-index state)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // usage errors count as configuration errors
    }

    try {
        CLI::App* cmd = app.get_subcommands().front();
        std::map<std::string, std::string> given;
        for (const auto& [key, opt] : opts[cmd->get_name()])
            if (opt->count() > 0) given[key] = flags.values[key];
        if (flags.zero_shot) given["zero_shot"] = "true";
        if (flags.no_vote) given["vote"] = "false";

        auto config = idxadvis::resolve_config(given, flags.config_file, idxadvis::process_env);
        const std::string name = cmd->get_name();
        if (name == "advise") return idxadvis::cmd_advise(config);
        if (name == "build-demos") return idxadvis::cmd_build_demos(config);
        if (name == "gen-workload") return idxadvis::cmd_gen_workload(config);
        if (name == "labels") return idxadvis::cmd_labels(config);
        return idxadvis::cmd_eval(config, flags.ddl);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return idxadvis::exit_code_for(e);
    }
}
