#include "idxadvis/prompt.hpp"

#include "prompt_format.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace idxadvis {

const char* const kSystemInstruction =
    "You are a database index advisor. Given the features of a SQL workload, the table sizes, the "
    "indexes that already exist, the remaining storage and the outcome of earlier recommendations, "
    "recommend index changes that minimise the estimated cost of the whole workload.\n"
    "Input: the columns used by each SQL with their NDV, rows and data type; every WHERE predicate "
    "with its selectivity; JOIN, GROUP BY and ORDER BY columns with their frequencies; table rows; "
    "existing indexes; remaining storage in MB; history of earlier rounds with cost changes and the "
    "indexes used by the query plans.\n"
    "Output: one ```sql code block containing only statements of the form "
    "CREATE INDEX ON <table> (<column>, ...); or DROP INDEX <index name>;\n"
    "Suggestions: prefer columns of selective WHERE predicates, then JOIN, GROUP BY and ORDER BY "
    "columns; prefer columns with many distinct values; put the column with the most selective "
    "predicate first in a multi-column index; list the most beneficial index first; drop existing "
    "indexes the plans do not use; keep the total size of new indexes within the remaining storage.";

namespace {

std::string num(double v, int precision = 6) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

std::string fixed(double v, int decimals) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(decimals) << v;
    return os.str();
}

std::string join_cols(const std::vector<std::string>& cols) {
    std::string out;
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? ", " : "") + cols[i];
    return out;
}

void freq_section(std::ostringstream& os, const char* header,
                  const std::map<ColumnRef, std::uint64_t>& freq) {
    os << header << "\n";
    if (freq.empty()) os << "none\n";
    for (const auto& [c, n] : freq) os << "- " << c.first << "." << c.second << ": " << n << "\n";
}

std::string rows_section(const std::map<std::string, std::uint64_t>& rows) {
    std::ostringstream os;
    os << fmt::kRows << "\n";
    if (rows.empty()) os << "none\n";
    for (const auto& [t, n] : rows) os << "- " << t << ": " << n << "\n";
    return os.str();
}

std::string existing_section(const IndexSet& existing) {
    std::ostringstream os;
    os << fmt::kExisting << "\n";
    if (existing.empty()) os << "none\n";
    for (const auto& d : existing) os << render_action(IndexAction::create(d)) << "\n";
    return os.str();
}

std::string history_section(const std::vector<HistoryEntry>& history) {
    std::ostringstream os;
    os << fmt::kHistory << "\n";
    if (history.empty()) os << "none\n";
    for (const auto& h : history) {
        os << "- iteration " << h.iteration << ": cost " << num(h.cost_before, 10) << " -> "
           << num(h.cost_after, 10);
        if (h.cost_before > 0)
            os << " (change " << fixed(100.0 * (h.cost_after - h.cost_before) / h.cost_before, 2) << "%)";
        os << "; recommended:";
        if (h.recommended.empty()) os << " none";
        for (const auto& a : h.recommended) os << " " << render_action(a);
        os << " used:";
        if (h.used_indexes.empty()) os << " none";
        bool first = true;
        for (const auto& u : h.used_indexes) {
            os << (first ? " " : ", ") << u;
            first = false;
        }
        os << "\n";
    }
    return os.str();
}

std::string demo_section(std::size_t index, const PromptDemo& d) {
    std::ostringstream os;
    os << fmt::kDemo << index << "\n";
    WorkloadFeatures f = WorkloadFeatures::from_json_text(d.demo.features_text);
    os << describe_features(f);
    os << rows_section(f.table_rows);
    os << existing_section(d.label.initial_state);
    os << fmt::kLabel << "\n```sql\n" << render_actions(d.label.actions) << "```\n";
    return os.str();
}

}  // namespace

std::size_t minimum_index_count(std::size_t workload_length, double budget_fraction) {
    double x = static_cast<double>(workload_length) * budget_fraction;
    auto n = static_cast<std::size_t>(std::ceil(x - 1e-9));
    return std::max<std::size_t>(n, 1);
}

std::string describe_features(const WorkloadFeatures& features, std::size_t max_query_lines) {
    std::ostringstream os;
    os << fmt::kFeatures << "\n" << fmt::kColumns << "\n";
    const auto& pq = features.per_query_columns;
    if (pq.empty()) os << "none\n";
    std::size_t shown = std::min(max_query_lines, pq.size());
    for (std::size_t i = 0; i < shown; ++i) {
        os << "- Q" << (i + 1) << ":";
        if (pq[i].empty()) os << " none";
        for (std::size_t j = 0; j < pq[i].size(); ++j) {
            const auto& c = pq[i][j];
            os << (j ? "; " : " ") << c.table << "." << c.column << " (ndv=" << c.ndv
               << ", rows=" << c.rows << ", type=" << to_string(c.data_type) << ")";
        }
        os << "\n";
    }
    if (shown < pq.size()) os << "- ... " << (pq.size() - shown) << " more queries omitted\n";

    os << fmt::kWhere << "\n";
    if (features.where_selectivities.empty()) os << "none\n";
    for (const auto& w : features.where_selectivities)
        os << "- " << w.table << "(" << join_cols(w.columns) << ") selectivity=" << num(w.selectivity)
           << " kind=" << (w.indexable ? "column" : "expression") << ": " << w.predicate << "\n";
    freq_section(os, fmt::kJoin, features.join_freq);
    freq_section(os, fmt::kGroup, features.groupby_freq);
    freq_section(os, fmt::kOrder, features.orderby_freq);
    return os.str();
}

ChatRequest build_prompt(const PromptState& state, const SamplingParams& params) {
    ChatRequest req;
    req.temperature = params.temperature;
    req.n_samples = params.n_samples;
    req.max_tokens = params.max_tokens;
    req.system_text = kSystemInstruction;
    if (state.first_iteration)
        req.system_text += "\nThis is the first round: recommend at least " +
                           std::to_string(minimum_index_count(state.workload_length, state.budget_fraction)) +
                           " indexes.";

    std::vector<std::string> demos;
    for (std::size_t i = 0; i < state.demos.size() && i < 2; ++i)
        demos.push_back(demo_section(i + 1, state.demos[i]));

    auto input = [&](std::size_t query_lines) {
        std::ostringstream os;
        os << fmt::kInput << "\n";
        os << describe_features(state.features, query_lines);
        os << rows_section(state.features.table_rows);
        os << existing_section(state.existing);
        os << fmt::kStorage << "\n"
           << fixed(std::max(0.0, state.remaining_budget_mb), 3) << " MB (storage constraint "
           << fixed(100.0 * state.budget_fraction, 1) << "% of the database)\n";
        os << history_section(state.history);
        return os.str();
    };

    double limit_chars = 0.75 * static_cast<double>(params.max_tokens) * 4.0;
    auto assemble = [&](std::size_t query_lines) {
        std::string user;
        for (const auto& d : demos) user += d + "\n";
        return user + input(query_lines);
    };
    auto too_long = [&](const std::string& user) {
        return static_cast<double>(req.system_text.size() + user.size()) > limit_chars;
    };

    std::size_t query_lines = state.features.per_query_columns.size();
    std::string user = assemble(query_lines);
    while (too_long(user) && !demos.empty()) {
        demos.pop_back();
        user = assemble(query_lines);
    }
    while (too_long(user) && query_lines > 0) {
        query_lines /= 2;
        user = assemble(query_lines);
    }
    req.user_text = std::move(user);
    return req;
}

}  // namespace idxadvis
