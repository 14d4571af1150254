#pragma once

#include "idxadvis/demos.hpp"
#include "idxadvis/index.hpp"
#include "idxadvis/llm.hpp"
#include "idxadvis/prompt.hpp"
#include "idxadvis/whatif.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace idxadvis {

struct VoteTally {
    std::map<IndexDef, std::size_t> create_counts;
    std::map<IndexDef, std::size_t> drop_counts;
};

/// Each def counts at most once per option, separately for CREATE and DROP.
VoteTally tally(const std::vector<std::vector<IndexAction>>& options);

/// DROPs recommended at least twice, then CREATEs: every single-column def
/// and multi-column defs recommended at least twice, with strict prefixes
/// folded into their longer defs (counts added), ordered by count desc,
/// width asc, name asc.
std::vector<IndexAction> index_guided_major_voting(const VoteTally& tally);

struct CandidateOption {
    std::vector<IndexAction> actions;
    std::vector<IndexAction> applied;
    double cost = 0.0;
    double size_mb = 0.0;
    std::string origin;  // "sample:<i>" or "voted"
    IndexSet result;     // index state after the applied actions
    std::set<std::string> used_indexes;
};

/// Applies `actions` on a fresh session holding `existing`: absent DROPs and
/// present CREATEs are skipped, CREATEs that would push the session past
/// `budget_mb` are skipped.
CandidateOption evaluate_option(const WhatIfBackend& backend, const Workload& workload, const IndexSet& existing,
                                const std::vector<IndexAction>& actions, double budget_mb);

/// One session per option, spread over up to `threads` workers (0 = hardware
/// concurrency). Results keep the input order.
std::vector<CandidateOption> evaluate_options(const WhatIfBackend& backend, const Workload& workload,
                                              const IndexSet& existing,
                                              const std::vector<std::vector<IndexAction>>& options,
                                              const std::vector<std::string>& origins, double budget_mb,
                                              std::size_t threads = 0);

/// Minimum cost; ties by fewer applied actions, smaller size, then action
/// order. Throws EmptyOptions.
const CandidateOption& best_of_n(const std::vector<CandidateOption>& options);

struct OptimizeConfig {
    std::size_t max_iters = 4;
    SamplingParams sampling;
    bool use_voting = true;
    std::size_t demos_per_prompt = 2;
    std::size_t threads = 0;
};

struct IterationTrace {
    std::size_t iteration = 0;
    std::vector<double> option_costs;
    std::vector<std::string> option_origins;
    std::string chosen_origin;
    double chosen_cost = 0.0;
    std::vector<IndexAction> applied;
    bool accepted = false;
    double remaining_budget_mb = 0.0;
    std::vector<std::string> demo_ids;
    std::size_t parse_warnings = 0;
};

struct OptimizeResult {
    IndexSet final_indexes;
    std::vector<IndexAction> actions;  // from the initial state to final_indexes
    double baseline_cost = 0.0;
    double cost = 0.0;
    double size_mb = 0.0;
    std::vector<HistoryEntry> history;
    std::vector<IterationTrace> trace;
    bool aborted = false;  // an LLM failure cut the loop short
    std::string error;
};

struct OptimizeInputs {
    const WhatIfBackend* backend = nullptr;
    LLMBackend* llm = nullptr;
    const Workload* workload = nullptr;
    const WorkloadFeatures* features = nullptr;
    std::vector<Demonstration> ranked_demos;  // full ranking, best first
    IndexSet initial;
    double budget_fraction = 0.3;
};

/// Next prompt window: unseen demos in rank order, padded with the best seen.
std::vector<Demonstration> next_demo_window(const std::vector<Demonstration>& ranked,
                                            const std::set<std::string>& presented, std::size_t slots);

/// Sample, vote, evaluate and keep the best option while it lowers the cost.
OptimizeResult self_optimize(const OptimizeInputs& inputs, double budget_mb, const OptimizeConfig& config = {});

/// One JSON object per line: iteration, option costs, chosen option, applied
/// DDL, remaining budget.
std::string trace_to_jsonl(const std::vector<IterationTrace>& trace);

}  // namespace idxadvis
