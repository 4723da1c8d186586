#pragma once

#include "beliefdb/sql.hpp"
#include "beliefdb/update.hpp"

namespace beliefdb {

struct ExecResult {
    enum class Kind { rows, dml, meta } kind = Kind::meta;
    ResultSet rows;
    std::vector<std::string> column_labels;
    long matched = 0;  // tuples the where clause selected (delete/update)
    long applied = 0;  // primitive operations that succeeded
    long rejected = 0; // operations turned down by the consistency rules
    std::string message;

    bool mutated() const { return applied > 0; }
};

// Runs one parsed BeliefSQL statement against the store. Parse and semantic
// problems throw; a rejected insert/delete is a regular outcome, not an error.
ExecResult execute_statement(Store& store, const sql::Statement& stmt);

ExecResult execute_text(Store& store, std::string_view text);

} // namespace beliefdb
