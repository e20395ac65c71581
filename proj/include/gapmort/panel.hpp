#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gapmort/grid.hpp"

namespace gapmort {

/// Raised for malformed or incomplete panel input.
class PanelError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Lower bound of an age-group label: "0-4" -> 0, "80+" -> 80, "40" -> 40.
int age_lower_bound(const std::string &label);

/// Death counts for two populations on a shared (age group, year) grid.
///
/// Rows follow `ages` (strictly increasing lower bounds), columns follow
/// `years` (consecutive calendar years).
struct MortalityPanel {
  std::vector<std::string> ages;
  std::vector<int> years;
  CountGrid counts_a;
  CountGrid counts_b;
  std::array<std::string, 2> labels{"A", "B"};

  std::size_t n_ages() const noexcept { return ages.size(); }
  std::size_t n_years() const noexcept { return years.size(); }

  /// Throws PanelError if any structural invariant is violated.
  void validate() const;

  friend bool operator==(const MortalityPanel &,
                         const MortalityPanel &) = default;
};

/// Signed cellwise differences G = D^A - D^B.
struct GapPanel {
  std::vector<std::string> ages;
  std::vector<int> years;
  CountGrid gaps;

  std::size_t n_ages() const noexcept { return ages.size(); }
  std::size_t n_years() const noexcept { return years.size(); }

  friend bool operator==(const GapPanel &, const GapPanel &) = default;
};

/// Column names used when reading a long-format CSV.
struct PanelSchema {
  std::string age = "age";
  std::string year = "year";
  std::string population = "population";
  std::string count = "deaths";
  /// Optional explicit population order; otherwise order of first appearance.
  std::optional<std::array<std::string, 2>> populations;

  /// Parses "age=Age,year=Year,population=Cause,count=Deaths[,a=X,b=Y]".
  static PanelSchema parse(const std::string &spec);
};

MortalityPanel read_panel(std::istream &in, const PanelSchema &schema = {});
MortalityPanel load_panel(const std::filesystem::path &path,
                          const PanelSchema &schema = {});

/// Writes the panel in long format using the schema's column names.
void write_panel(std::ostream &out, const MortalityPanel &panel,
                 const PanelSchema &schema = {});

GapPanel to_gap(const MortalityPanel &panel);

/// Contiguous sub-panel: ages whose lower bound is at least that of
/// `age_min` (all ages when empty) and years in [first, last].
MortalityPanel subset(const MortalityPanel &panel,
                      const std::optional<std::string> &age_min,
                      std::pair<int, int> year_range);
GapPanel subset(const GapPanel &panel, const std::optional<std::string> &age_min,
                std::pair<int, int> year_range);

namespace csv {
/// Splits one CSV line; handles double-quoted fields.
std::vector<std::string> split_line(const std::string &line);
std::string trim(const std::string &s);
} // namespace csv

} // namespace gapmort
