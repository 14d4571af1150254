#pragma once

#include "idxadvis/demos.hpp"
#include "idxadvis/features.hpp"
#include "idxadvis/llm.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace idxadvis {

struct HistoryEntry {
    std::size_t iteration = 0;
    std::vector<IndexAction> recommended;
    double cost_before = 0.0;
    double cost_after = 0.0;
    std::set<std::string> used_indexes;
};

struct PromptDemo {
    Demonstration demo;
    RefinedLabel label;  // initial state and the actions to show
};

struct PromptState {
    WorkloadFeatures features;
    IndexSet existing;
    double remaining_budget_mb = 0.0;
    std::vector<HistoryEntry> history;
    std::vector<PromptDemo> demos;  // at most two
    double budget_fraction = 0.3;
    std::size_t workload_length = 0;
    bool first_iteration = true;
};

struct SamplingParams {
    double temperature = 0.6;
    std::size_t n_samples = 8;
    std::size_t max_tokens = 16384;
};

/// ceil(m x S_p), at least 1.
std::size_t minimum_index_count(std::size_t workload_length, double budget_fraction);

/// The fixed instruction, without the first-round clause.
extern const char* const kSystemInstruction;

/// Deterministic chat request: system instruction (+ the minimum-count
/// clause on the first iteration), demonstrations, then input information.
/// Demonstrations are dropped, last first, while the prompt is longer than
/// 3/4 of max_tokens (4 characters per token); after that the per-SQL column
/// listing is shortened.
ChatRequest build_prompt(const PromptState& state, const SamplingParams& params = {});

/// Human-readable feature block used inside prompts.
std::string describe_features(const WorkloadFeatures& features, std::size_t max_query_lines = SIZE_MAX);

}  // namespace idxadvis
