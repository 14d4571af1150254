#pragma once

// Section markers shared by the prompt builders and the mock model that
// reads them back.
namespace idxadvis::fmt {

inline constexpr const char* kInput = "## Input Information";
inline constexpr const char* kDemo = "## Demonstration ";
inline constexpr const char* kFeatures = "### Workload Features";
inline constexpr const char* kColumns = "#### Used Columns per SQL";
inline constexpr const char* kWhere = "#### WHERE Predicates";
inline constexpr const char* kJoin = "#### JOIN Columns";
inline constexpr const char* kGroup = "#### GROUP BY Columns";
inline constexpr const char* kOrder = "#### ORDER BY Columns";
inline constexpr const char* kRows = "### Table Rows";
inline constexpr const char* kExisting = "### Existing Indexes";
inline constexpr const char* kStorage = "### Remaining Storage";
inline constexpr const char* kHistory = "### History";
inline constexpr const char* kLabel = "### Label";

inline constexpr const char* kGenerationTask = "Task: SQL workload generation";
inline constexpr const char* kSchema = "## Schema";
inline constexpr const char* kJoinKeys = "## Join Keys";
inline constexpr const char* kValues = "## Value Constraints";
inline constexpr const char* kExamples = "## Example Queries";
inline constexpr const char* kRequest = "## Request";

}  // namespace idxadvis::fmt
