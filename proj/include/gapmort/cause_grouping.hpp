#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "gapmort/panel.hpp"

namespace gapmort {

/// Canonical form of an ICD code used for range comparison.
///
/// The numeric category is zero-padded to three digits ("B08" -> "B008",
/// "I25" -> "I025"). For ICD-10 a third digit is a subcategory and is kept
/// after a dot ("I251" and "I25.1" -> "I025.1"). A bare letter stays as is.
std::string normalize_icd_code(const std::string &code, int revision);

/// Inclusive code range. An end bound also covers every code it prefixes,
/// so "C" covers all of chapter C and "I99" covers "I99.9".
struct CodeRange {
  std::string start; // normalized
  std::string end;   // normalized
  std::string text;  // as written in the config

  bool contains(const std::string &normalized_code) const;
  bool overlaps(const CodeRange &other) const;
};

class CauseGroupingConfig {
public:
  /// revision -> cause name -> ranges
  using Table = std::map<int, std::map<std::string, std::vector<CodeRange>>>;

  CauseGroupingConfig() = default;
  explicit CauseGroupingConfig(Table table);

  /// Parses the sectioned key/value format:
  ///
  ///     [ICD10]
  ///     Cancer = C
  ///     Circulatory = I00-I99
  static CauseGroupingConfig parse(std::istream &in);
  static CauseGroupingConfig load(const std::filesystem::path &path);

  const Table &table() const noexcept { return table_; }
  bool has_revision(int revision) const { return table_.contains(revision); }

  /// Cause group for a code, or empty when no group matches.
  std::string classify(int revision, const std::string &code) const;

private:
  void validate() const;
  Table table_;
};

struct CauseRecord {
  int icd_revision = 10;
  std::string code;
  std::string age;
  int year = 0;
  long long count = 0;
};

struct UnmatchedTally {
  std::size_t records = 0;
  long long deaths = 0;
  std::map<std::string, long long> deaths_by_code;
};

struct GroupingResult {
  MortalityPanel panel;
  std::size_t matched_records = 0;
  UnmatchedTally unmatched;
};

/// Sums cause-coded records into a two-population panel. Cells of the
/// (age, year) grid spanned by the records that receive no matched deaths
/// are zero.
GroupingResult group_causes(const std::vector<CauseRecord> &records,
                            const CauseGroupingConfig &config,
                            const std::string &cause_a,
                            const std::string &cause_b);

/// Reads records from CSV with columns revision,code,age,year,deaths.
std::vector<CauseRecord> read_cause_records(std::istream &in);

} // namespace gapmort
