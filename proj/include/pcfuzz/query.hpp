#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pcfuzz/circuit.hpp"
#include "pcfuzz/inference.hpp"

namespace pcfuzz {

struct QueryResult {
  std::string query;
  std::variant<double, TokenId> value;
  // Filled for EVI queries when explanations are requested.
  std::vector<Contribution> trace;

  std::string value_string(const Vocabulary& vocab) const;
};

// One query per line:
//   EVI <tokens>
//   MAR <token>
//   MARSPAN <p> <tokens>
//   COND <token2> GIVEN <token1>
//   CONDAT <p2> <tokens> GIVEN <p1> <tokens>
//   CONDAFTER <token> GIVEN <p> <tokens>
//   MMAP AFTER <token>
//   MMAP NEXT <token> <p>
// Throws UsageError for malformed lines.
QueryResult run_query(const Circuit& c, std::string_view line,
                      bool explain = false);

// Runs every non-blank line not starting with '#'. Errors name the line.
std::vector<QueryResult> run_queries(const Circuit& c, std::string_view text,
                                     bool explain = false);

// `query<TAB>value` lines; traces follow their query as `#<TAB>label<TAB>flow`.
std::string format_results(const std::vector<QueryResult>& results,
                           const Vocabulary& vocab);

}  // namespace pcfuzz
