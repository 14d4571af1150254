#pragma once

#include "idxadvis/features.hpp"

namespace idxadvis::detail {

/// Resolves names in `stmt` (annotating column nodes with their bound table)
/// and builds the clause-classified shape.
QueryShape analyze_statement(const sql::SelectStmt& stmt, const std::string& sql,
                             const Catalog& catalog);

}  // namespace idxadvis::detail
