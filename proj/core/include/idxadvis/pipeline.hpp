#pragma once

#include "idxadvis/demos.hpp"
#include "idxadvis/scaling.hpp"
#include "idxadvis/whatif.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace idxadvis {

/// Resolved settings shared by every command.
struct AdvisorConfig {
    std::string workload;
    std::string catalog;
    std::string dsn;
    std::string backend = "sim";  // sim | live
    double storage_pct = 0.3;

    std::string llm = "mock";  // mock | http
    std::string model = "gpt-4-turbo";
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string token;
    int llm_timeout_s = 120;
    std::size_t samples = 8;
    double temperature = 0.6;
    std::size_t max_tokens = 16384;
    std::size_t max_iters = 4;
    bool vote = true;

    std::string demos;
    std::string match = "cosine";
    std::size_t kmeans_k = 8;
    std::string mode = "in-schema";  // in-schema | cross-schema
    std::string exclude_schema;
    bool zero_shot = false;

    std::uint64_t seed = 0;
    std::string out;
    std::size_t threads = 0;

    // label collection and pool building
    std::vector<double> grid{0.2, 0.3, 0.4, 0.5, 0.6};
    std::size_t max_width = 2;
    std::size_t queries_per_schema = 40;
    std::size_t workloads = 4;
    std::size_t workload_size_min = 3;
    std::size_t workload_size_max = 8;
    std::string templates;
    double similarity_threshold = 0.8;
    double timeout_factor = 50.0;
    std::size_t count = 20;  // gen-workload

    /// Throws ConfigError on out-of-range values.
    void validate() const;
    /// Every setting except the token, as JSON text.
    std::string echo_json() const;
};

/// Setting names accepted in config files, flags and IDXADVIS_<NAME> variables.
const std::vector<std::string>& config_keys();

/// Layers raw string settings: environment, then the config file (JSON object),
/// then flags. Unknown keys throw ConfigError.
AdvisorConfig resolve_config(const std::map<std::string, std::string>& flags,
                             const std::string& config_file,
                             const std::function<std::optional<std::string>(const std::string&)>& getenv);
std::optional<std::string> process_env(const std::string& name);

std::unique_ptr<WhatIfBackend> make_backend(const AdvisorConfig& config);
std::unique_ptr<LLMBackend> make_llm(const AdvisorConfig& config);

struct AdviseResult {
    std::string workload_name;
    std::size_t queries = 0;
    std::string backend;
    double database_size_mb = 0.0;
    double budget_mb = 0.0;
    std::vector<std::string> matched_demos;  // full ranking order
    OptimizeResult optimize;
    double runtime_s = 0.0;
};

/// Extraction, matching and self-optimization on already opened components.
/// `pool` may be null only in zero-shot mode.
AdviseResult advise(const WhatIfBackend& backend, LLMBackend& llm, const Workload& workload,
                    const DemoPool* pool, const AdvisorConfig& config);

/// Deterministic report JSON (no timing).
std::string advise_report_json(const AdviseResult& result, const AdvisorConfig& config);

struct EvalResult {
    std::string workload_name;
    IndexSet indexes;
    std::size_t parse_warnings = 0;
    double database_size_mb = 0.0;
    double budget_mb = 0.0;
    double size_mb = 0.0;
    CostReport baseline;
    CostReport current;
};

EvalResult evaluate_ddl(const WhatIfBackend& backend, const Workload& workload, const std::string& ddl_text,
                        double storage_pct);
std::string eval_report_json(const EvalResult& result);

struct WorkloadLabels {
    std::string workload_name;
    std::vector<double> budgets;
    std::vector<DefaultLabel> labels;  // one per budget
};

WorkloadLabels collect_labels(const WhatIfBackend& backend, const Workload& workload,
                              const std::vector<double>& grid, std::size_t max_width);
std::string labels_json(const WorkloadLabels& labels);

/// Sidecar paths next to the report: "<stem>.sql", "<stem>.metrics.json",
/// "<stem>.trace.jsonl".
std::string sidecar_path(const std::string& out, const std::string& suffix);

// Command entry points; each writes its outputs and returns a process exit code.
int cmd_advise(const AdvisorConfig& config);
int cmd_eval(const AdvisorConfig& config, const std::string& ddl_path);
int cmd_labels(const AdvisorConfig& config);
int cmd_build_demos(const AdvisorConfig& config);
int cmd_gen_workload(const AdvisorConfig& config);

/// 2 configuration, 3 backend, 4 LLM, 1 anything else.
int exit_code_for(const std::exception& e);

}  // namespace idxadvis
