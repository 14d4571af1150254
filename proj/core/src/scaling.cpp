#include "idxadvis/scaling.hpp"

#include "idxadvis/error.hpp"
#include "idxadvis/heuristics.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

namespace idxadvis {

VoteTally tally(const std::vector<std::vector<IndexAction>>& options) {
    VoteTally t;
    for (const auto& option : options) {
        std::set<IndexAction> seen(option.begin(), option.end());
        for (const auto& a : seen) {
            auto& m = a.kind == ActionKind::Create ? t.create_counts : t.drop_counts;
            ++m[a.def];
        }
    }
    return t;
}

std::vector<IndexAction> index_guided_major_voting(const VoteTally& tally) {
    std::vector<IndexAction> out;
    for (const auto& [def, n] : tally.drop_counts)
        if (n >= 2) out.push_back(IndexAction::drop(def));

    std::map<IndexDef, std::size_t> kept;
    for (const auto& [def, n] : tally.create_counts)
        if (def.width() == 1 || n >= 2) kept[def] = n;

    // Fold prefixes, shortest first; a prefix with several extensions goes
    // to the one with the highest count, then the narrowest, then by name.
    while (true) {
        const IndexDef* prefix = nullptr;
        const IndexDef* target = nullptr;
        for (const auto& [p, pn] : kept) {
            if (prefix && p.width() >= prefix->width()) continue;
            const IndexDef* best = nullptr;
            for (const auto& [l, ln] : kept) {
                if (!p.is_strict_prefix_of(l)) continue;
                if (!best || ln > kept.at(*best) || (ln == kept.at(*best) && l.width() < best->width()) ||
                    (ln == kept.at(*best) && l.width() == best->width() && l.name() < best->name()))
                    best = &l;
            }
            if (!best) continue;
            if (!prefix || p.width() < prefix->width() || (p.width() == prefix->width() && p.name() < prefix->name())) {
                prefix = &p;
                target = best;
            }
        }
        if (!prefix) break;
        IndexDef p = *prefix;
        kept[*target] += kept[p];
        kept.erase(p);
    }

    std::vector<std::pair<IndexDef, std::size_t>> creates(kept.begin(), kept.end());
    std::sort(creates.begin(), creates.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        if (a.first.width() != b.first.width()) return a.first.width() < b.first.width();
        return a.first.name() < b.first.name();
    });
    for (auto& [def, n] : creates) out.push_back(IndexAction::create(def));
    return out;
}

CandidateOption evaluate_option(const WhatIfBackend& backend, const Workload& workload, const IndexSet& existing,
                                const std::vector<IndexAction>& actions, double budget_mb) {
    CandidateOption opt;
    opt.actions = actions;
    auto session = open_session_with(backend, existing);
    for (const auto& a : actions) {
        if (a.kind == ActionKind::Drop) {
            if (!session->contains(a.def)) continue;
            session->drop(a.def);
            opt.applied.push_back(a);
        } else {
            if (session->contains(a.def)) continue;
            double size = session->size_estimate_mb(a.def);
            if (!(session->total_size_mb() + size <= budget_mb)) continue;
            session->create(a.def);
            opt.applied.push_back(a);
        }
    }
    CostReport report = session->estimate(workload);
    opt.cost = report.total;
    opt.used_indexes = std::move(report.used_indexes);
    opt.size_mb = session->total_size_mb();
    opt.result = session->index_set();
    return opt;
}

std::vector<CandidateOption> evaluate_options(const WhatIfBackend& backend, const Workload& workload,
                                              const IndexSet& existing,
                                              const std::vector<std::vector<IndexAction>>& options,
                                              const std::vector<std::string>& origins, double budget_mb,
                                              std::size_t threads) {
    std::vector<CandidateOption> out(options.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, options.size());

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(options.size());
    auto work = [&] {
        for (std::size_t i = next++; i < options.size(); i = next++) {
            try {
                out[i] = evaluate_option(backend, workload, existing, options[i], budget_mb);
                out[i].origin = i < origins.size() ? origins[i] : "option:" + std::to_string(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

const CandidateOption& best_of_n(const std::vector<CandidateOption>& options) {
    if (options.empty()) throw EmptyOptions("best_of_n needs at least one option");
    const CandidateOption* best = &options.front();
    for (const auto& o : options) {
        if (o.cost != best->cost) {
            if (o.cost < best->cost) best = &o;
            continue;
        }
        if (o.applied.size() != best->applied.size()) {
            if (o.applied.size() < best->applied.size()) best = &o;
            continue;
        }
        if (o.size_mb != best->size_mb) {
            if (o.size_mb < best->size_mb) best = &o;
            continue;
        }
        if (o.applied < best->applied) best = &o;
    }
    return *best;
}

std::vector<Demonstration> next_demo_window(const std::vector<Demonstration>& ranked,
                                            const std::set<std::string>& presented, std::size_t slots) {
    std::vector<Demonstration> window;
    for (const auto& d : ranked)
        if (window.size() < slots && !presented.count(d.id)) window.push_back(d);
    for (const auto& d : ranked) {
        if (window.size() >= slots) break;
        if (presented.count(d.id)) window.push_back(d);
    }
    return window;
}

OptimizeResult self_optimize(const OptimizeInputs& in, double budget_mb, const OptimizeConfig& config) {
    if (!in.backend || !in.llm || !in.workload || !in.features)
        throw ConfigError("self_optimize: missing backend, model, workload or features");
    if (config.max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (budget_mb < 0.0) throw ConfigError("budget must be >= 0");
    const WhatIfBackend& backend = *in.backend;

    OptimizeResult result;
    IndexSet existing = in.initial;
    double existing_size = 0.0;
    {
        auto session = open_session_with(backend, existing);
        result.baseline_cost = session->estimate(*in.workload).total;
        existing_size = session->total_size_mb();
    }
    double incumbent = result.baseline_cost;

    std::set<std::string> presented;
    auto window = next_demo_window(in.ranked_demos, presented, config.demos_per_prompt);

    for (std::size_t it = 1; it <= config.max_iters; ++it) {
        PromptState state;
        state.features = *in.features;
        state.existing = existing;
        state.remaining_budget_mb = std::max(0.0, budget_mb - existing_size);
        state.history = result.history;
        for (const auto& d : window) state.demos.push_back({d, select_label_with_state(d, existing)});
        state.budget_fraction = in.budget_fraction;
        state.workload_length = in.workload->queries.size();
        state.first_iteration = it == 1;

        ChatRequest request = build_prompt(state, config.sampling);
        std::vector<std::string> completions;
        try {
            completions = chat(*in.llm, request);
        } catch (const LLMError& e) {
            result.aborted = true;
            result.error = e.what();
            break;
        }

        IterationTrace trace;
        trace.iteration = it;
        for (const auto& d : window) trace.demo_ids.push_back(d.id);
        std::vector<std::vector<IndexAction>> lists;
        std::vector<std::string> origins;
        for (std::size_t s = 0; s < completions.size(); ++s) {
            ParsedActions parsed = parse_actions(completions[s], backend.catalog(), existing);
            trace.parse_warnings += parsed.warnings;
            lists.push_back(std::move(parsed.actions));
            origins.push_back("sample:" + std::to_string(s));
        }
        if (config.use_voting) {
            lists.push_back(index_guided_major_voting(tally(lists)));
            origins.emplace_back("voted");
        }
        auto options = evaluate_options(backend, *in.workload, existing, lists, origins, budget_mb, config.threads);
        const CandidateOption& best = best_of_n(options);

        for (const auto& o : options) {
            trace.option_costs.push_back(o.cost);
            trace.option_origins.push_back(o.origin);
        }
        trace.chosen_origin = best.origin;
        trace.chosen_cost = best.cost;
        trace.applied = best.applied;
        trace.accepted = best.cost < incumbent;
        trace.remaining_budget_mb = std::max(0.0, budget_mb - (trace.accepted ? best.size_mb : existing_size));
        result.trace.push_back(trace);

        result.history.push_back({it, best.applied, incumbent, best.cost, best.used_indexes});
        for (const auto& d : window) presented.insert(d.id);

        if (!trace.accepted) break;
        existing = best.result;
        existing_size = best.size_mb;
        incumbent = best.cost;
        window = next_demo_window(in.ranked_demos, presented, config.demos_per_prompt);
    }

    result.final_indexes = existing;
    result.cost = incumbent;
    result.size_mb = existing_size;
    result.actions = make_refined_label(in.initial, existing);
    return result;
}

std::string trace_to_jsonl(const std::vector<IterationTrace>& trace) {
    std::string out;
    for (const auto& t : trace) {
        nlohmann::json j;
        j["iteration"] = t.iteration;
        j["option_costs"] = t.option_costs;
        j["option_origins"] = t.option_origins;
        j["chosen"] = t.chosen_origin;
        j["chosen_cost"] = t.chosen_cost;
        j["accepted"] = t.accepted;
        auto ddl = nlohmann::json::array();
        for (const auto& a : t.applied) ddl.push_back(render_action(a));
        j["applied_ddl"] = std::move(ddl);
        j["remaining_budget_mb"] = t.remaining_budget_mb;
        j["demos"] = t.demo_ids;
        j["parse_warnings"] = t.parse_warnings;
        out += j.dump() + "\n";
    }
    return out;
}

}  // namespace idxadvis
