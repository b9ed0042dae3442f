#pragma once

// JSON (schema 1) and CSV forms of basis sets and search results. Complex
// numbers are [re, im] pairs in JSON; CSV cells use %.17g and RFC-4180
// quoting.

#include "mubsearch/optimizer.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace mub::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// %.17g
std::string format_double(double v);

/// Quotes a field if it contains a comma, quote, CR or LF.
std::string csv_field(const std::string& s);

/// Splits one CSV record, honoring quoted fields.
std::vector<std::string> parse_csv_line(const std::string& line);

/// {"dim", "k", "bases": [basis][row][col] -> [re, im]}
Json basis_set_to_json(const BasisSet& set);
BasisSet basis_set_from_json(const Json& j);

/// Rows "basis,row,col,re,im" after a header line.
void write_basis_set_csv(std::ostream& os, const BasisSet& set);
BasisSet read_basis_set_csv(std::istream& is);

Json config_to_json(const OptimizerConfig& cfg);
Json run_to_json(const RunRecord& r);
Json summary_to_json(const MultiStartSummary& s, double bin_width);

}  // namespace mub::io
