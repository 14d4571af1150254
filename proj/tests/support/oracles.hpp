#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the simulated backend's cost or voting code.

#include "idxadvis/catalog.hpp"
#include "idxadvis/demos.hpp"
#include "idxadvis/features.hpp"
#include "idxadvis/index.hpp"
#include "idxadvis/whatif.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace oracle {

using namespace idxadvis;

std::string data_path(const std::string& name);

// ---- cost model written from its prose description

double index_size_mb(const Catalog& catalog, const IndexDef& def);
double query_cost(const Catalog& catalog, const QueryShape& shape, const SelectivityEstimator& sel,
                  const std::vector<IndexDef>& indexes);
double workload_cost(const Catalog& catalog, const Workload& workload, const std::vector<IndexDef>& indexes);

// ---- voting written from its prose description

std::vector<IndexAction> reference_vote(const std::vector<std::vector<IndexAction>>& samples);
bool has_prefix_pair(const std::vector<IndexAction>& actions);

// ---- exhaustive enumeration over candidate subsets within a budget

struct Optimum {
    IndexSet set;
    double cost = 0.0;
    double size_mb = 0.0;
};
Optimum exhaustive_optimum(const WhatIfBackend& backend, const Workload& workload,
                           const std::vector<IndexDef>& candidates, double budget_mb);

// ---- generated micro instances: 2-3 tables, a handful of queries

struct MicroInstance {
    std::uint64_t seed = 0;
    Catalog catalog;
    Workload workload;
    double storage_pct = 0.1;
};
MicroInstance make_micro_instance(std::uint64_t seed);

// ---- regression workload suite

struct SuiteEntry {
    std::string name;
    std::shared_ptr<const Catalog> catalog;
    Workload workload;
};
std::vector<SuiteEntry> regression_suite();

/// Deterministic mock-built demonstration pool for a catalog.
DemoPool mock_pool(const Catalog& catalog, std::uint64_t seed, std::size_t workloads = 4);

}  // namespace oracle
