#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gci/judgment/comparison_tally.hpp"

namespace gci::judgment {

/// One row of the offline comparison file: `winner,loser,reviewer,timestamp`.
struct ComparisonRecord {
  ItemId winner;
  ItemId loser;
  std::string reviewer;
  std::string timestamp;
};

/// Parses the comparison CSV (header required, RFC 4180 quoting accepted).
/// Ties (winner == loser) are rejected as degenerate pairs.
std::vector<ComparisonRecord> read_comparison_csv(std::istream& in);

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRecord>& rows);

ComparisonTally tally_records(const std::vector<ComparisonRecord>& rows);

}  // namespace gci::judgment
