#include "gci/judgment/comparison_csv.hpp"

#include <istream>
#include <ostream>

#include "gci/common/error.hpp"

namespace gci::judgment {

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (quoted) {
    throw Error(ErrorCode::malformed, "unterminated quote on line " + std::to_string(line_no));
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

std::vector<ComparisonRecord> read_comparison_csv(std::istream& in) {
  std::vector<ComparisonRecord> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty()) continue;
    auto fields = split_csv_line(line, line_no);
    if (!header_seen) {
      if (fields.size() < 2 || fields[0] != "winner" || fields[1] != "loser") {
        throw Error(ErrorCode::malformed,
                    "expected header winner,loser,reviewer,timestamp");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() < 2 || fields[0].empty() || fields[1].empty()) {
      throw Error(ErrorCode::malformed, "missing winner/loser on line " + std::to_string(line_no));
    }
    if (fields[0] == fields[1]) {
      throw Error(ErrorCode::degenerate_pair,
                  "degenerate pair on line " + std::to_string(line_no));
    }
    fields.resize(4);
    rows.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  return rows;
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRecord>& rows) {
  out << "winner,loser,reviewer,timestamp\n";
  for (const auto& r : rows) {
    out << quote_if_needed(r.winner) << ',' << quote_if_needed(r.loser) << ','
        << quote_if_needed(r.reviewer) << ',' << quote_if_needed(r.timestamp) << '\n';
  }
}

ComparisonTally tally_records(const std::vector<ComparisonRecord>& rows) {
  ComparisonTally tally;
  for (const auto& r : rows) tally.record(r.winner, r.loser);
  return tally;
}

}  // namespace gci::judgment
