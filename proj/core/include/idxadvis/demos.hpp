#pragma once

#include "idxadvis/features.hpp"
#include "idxadvis/heuristics.hpp"
#include "idxadvis/index.hpp"
#include "idxadvis/llm.hpp"
#include "idxadvis/whatif.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace idxadvis {

inline constexpr std::size_t kDefaultMetaLength = 20;

/// Normalised (frequency, NDV) pairs, sorted descending, fixed length.
struct MetaFeature {
    std::vector<std::pair<double, double>> pairs;

    std::vector<double> flatten() const;
    friend bool operator==(const MetaFeature&, const MetaFeature&) = default;
};

MetaFeature build_meta_feature(const WorkloadFeatures& features, std::size_t k = kDefaultMetaLength);

/// Cosine over the flattened vectors; 0 when either side is all zeros.
double cosine_similarity(const MetaFeature& a, const MetaFeature& b);

struct RefinedLabel {
    IndexSet initial_state;
    std::vector<IndexAction> actions;

    friend bool operator==(const RefinedLabel&, const RefinedLabel&) = default;
};

struct Demonstration {
    std::string id;
    std::string schema_id;
    MetaFeature meta;
    std::string features_text;  // canonical WorkloadFeatures JSON
    std::vector<IndexAction> default_label;
    std::vector<RefinedLabel> refined_labels;
    double budget = 0.0;  // fraction of database size

    friend bool operator==(const Demonstration&, const Demonstration&) = default;
};

struct DemoPool {
    std::vector<Demonstration> demonstrations;

    bool empty() const { return demonstrations.empty(); }
    /// One JSON object per line. Throws ConfigError on malformed input or
    /// duplicate ids.
    std::string to_jsonl() const;
    static DemoPool from_jsonl(const std::string& text);
    static DemoPool load(const std::string& path);
    void save(const std::string& path) const;
};

enum class MatchStrategy { Cosine, Random, KMeans };
MatchStrategy parse_match_strategy(const std::string& name);
std::string_view to_string(MatchStrategy strategy);

struct MatchOptions {
    MatchStrategy strategy = MatchStrategy::Cosine;
    std::size_t n = 2;
    std::optional<std::string> exclude_schema;
    std::uint64_t seed = 0;
    std::size_t kmeans_k = 8;
};

/// Full ranking of the eligible demonstrations; the first `n` are the ones
/// to inject, the rest are kept for rotation. Throws MatchEmpty.
std::vector<Demonstration> match_demonstrations(const DemoPool& pool, const MetaFeature& meta,
                                                const MatchOptions& options);

/// Default label for an empty state, else the refined label whose initial
/// state has the highest Jaccard overlap with `existing` (ties: fewer
/// actions, then stored order). Falls back to the default label.
std::vector<IndexAction> select_label(const Demonstration& demo, const IndexSet& existing);
/// Same choice, also reporting the initial state the label starts from.
RefinedLabel select_label_with_state(const Demonstration& demo, const IndexSet& existing);

double jaccard(const IndexSet& a, const IndexSet& b);

struct SynthesisOptions {
    std::uint64_t seed = 0;
    std::vector<std::string> tables;           // sampled tables to focus on; empty = all
    std::vector<std::string> example_queries;  // sampled benchmark queries
    std::string dialect = "PostgreSQL";
};

/// Prompt asking for `n` analytical queries over the schema.
ChatRequest build_synthesis_prompt(const Catalog& catalog, std::size_t n, const SynthesisOptions& options);

/// Statements inside ```sql fenced blocks (or the whole text when it has no
/// fences). Throws NoQueriesParsed when nothing is found.
std::vector<std::string> extract_sql_blocks(const std::string& completion);

std::vector<std::string> synthesize_queries(LLMBackend& llm, const Catalog& catalog, std::size_t n,
                                            const SynthesisOptions& options);

struct FilterOptions {
    double similarity_threshold = 0.8;
    double timeout_factor = 50.0;  // x median query cost
};

struct FilterResult {
    std::vector<std::string> kept;
    std::size_t invalid = 0;
    std::size_t similar = 0;
    std::size_t timed_out = 0;
};

/// Token-set Jaccard over normalised SQL (literals folded to '?').
double query_similarity(const std::string& a, const std::string& b);

FilterResult validate_and_filter(const std::vector<std::string>& queries, const WhatIfBackend& backend,
                                 const std::vector<std::string>& benchmark_templates,
                                 const FilterOptions& options = {});

struct PoolConfig {
    std::size_t queries_per_schema = 40;
    std::size_t workloads = 4;
    std::size_t workload_size_min = 3;
    std::size_t workload_size_max = 8;
    std::vector<double> budget_grid{0.2, 0.3, 0.4, 0.5, 0.6};
    std::uint64_t seed = 0;
    std::size_t max_width = 2;
    std::vector<std::string> benchmark_templates;
    FilterOptions filter;
};

struct PoolBuildResult {
    DemoPool pool;
    std::vector<std::string> queries;  // surviving generated queries
    std::vector<std::string> warnings;
};

/// Synthesises and filters queries, samples workloads, collects default and
/// refined labels at every grid budget and wraps them as demonstrations.
PoolBuildResult build_pool(const WhatIfBackend& backend, LLMBackend& llm, const PoolConfig& config);

/// Demonstration for one labelled workload.
Demonstration make_demonstration(std::string id, const Catalog& catalog, const WorkloadFeatures& features,
                                 const DefaultLabel& label, double budget);

}  // namespace idxadvis
