#include "gapmort/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace gapmort {

namespace csv {

std::string trim(const std::string &s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return {};
  }
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string &line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

} // namespace csv

namespace {

template <typename T> T parse_integer(const std::string &text, const char *what) {
  T value{};
  auto s = csv::trim(text);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw PanelError(std::string("invalid ") + what + " '" + text + "'");
  }
  return value;
}

std::string cell_name(const std::string &age, int year, const std::string &pop) {
  return "(age " + age + ", year " + std::to_string(year) + ", population " +
         pop + ")";
}

} // namespace

int age_lower_bound(const std::string &label) {
  std::size_t i = 0;
  while (i < label.size() && std::isspace(static_cast<unsigned char>(label[i]))) {
    ++i;
  }
  std::size_t j = i;
  while (j < label.size() && std::isdigit(static_cast<unsigned char>(label[j]))) {
    ++j;
  }
  if (j == i) {
    throw PanelError("age label '" + label + "' has no numeric lower bound");
  }
  return parse_integer<int>(label.substr(i, j - i), "age label");
}

void MortalityPanel::validate() const {
  if (ages.empty() || years.empty()) {
    throw PanelError("panel has no ages or no years");
  }
  for (std::size_t i = 1; i < ages.size(); ++i) {
    if (age_lower_bound(ages[i]) <= age_lower_bound(ages[i - 1])) {
      throw PanelError("age groups not strictly ordered at '" + ages[i] + "'");
    }
  }
  for (std::size_t i = 1; i < years.size(); ++i) {
    if (years[i] != years[i - 1] + 1) {
      throw PanelError("years not consecutive at " + std::to_string(years[i]));
    }
  }
  for (const auto *g : {&counts_a, &counts_b}) {
    if (g->rows() != ages.size() || g->cols() != years.size()) {
      throw PanelError("count grid dimensions do not match the index sets");
    }
    for (std::size_t a = 0; a < g->rows(); ++a) {
      for (std::size_t t = 0; t < g->cols(); ++t) {
        if ((*g)(a, t) < 0) {
          throw PanelError("negative count at " +
                           cell_name(ages[a], years[t],
                                     g == &counts_a ? labels[0] : labels[1]));
        }
      }
    }
  }
}

PanelSchema PanelSchema::parse(const std::string &spec) {
  PanelSchema schema;
  std::array<std::string, 2> pops;
  for (const auto &item : csv::split_line(spec)) {
    if (item.empty()) {
      continue;
    }
    auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw PanelError("schema entry '" + item + "' is not key=value");
    }
    auto key = csv::trim(item.substr(0, eq));
    auto value = csv::trim(item.substr(eq + 1));
    if (key == "age") {
      schema.age = value;
    } else if (key == "year") {
      schema.year = value;
    } else if (key == "population") {
      schema.population = value;
    } else if (key == "count") {
      schema.count = value;
    } else if (key == "a") {
      pops[0] = value;
    } else if (key == "b") {
      pops[1] = value;
    } else {
      throw PanelError("unknown schema key '" + key + "'");
    }
  }
  if (pops[0].empty() != pops[1].empty()) {
    throw PanelError("schema must name both populations (a= and b=) or neither");
  }
  if (!pops[0].empty()) {
    schema.populations = pops;
  }
  return schema;
}

MortalityPanel read_panel(std::istream &in, const PanelSchema &schema) {
  std::string line;
  if (!std::getline(in, line)) {
    throw PanelError("empty panel input");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  auto header = csv::split_line(line);
  auto column = [&](const std::string &name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw PanelError("missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto c_age = column(schema.age);
  const auto c_year = column(schema.year);
  const auto c_pop = column(schema.population);
  const auto c_count = column(schema.count);
  const auto width = std::max({c_age, c_year, c_pop, c_count}) + 1;

  std::vector<std::string> pops;
  if (schema.populations) {
    pops = {(*schema.populations)[0], (*schema.populations)[1]};
  }
  std::map<std::string, int> age_lb;
  std::map<int, bool> year_seen;
  std::map<std::tuple<std::string, int, std::size_t>, long long> sums;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) {
      continue;
    }
    auto f = csv::split_line(line);
    if (f.size() < width) {
      throw PanelError("line " + std::to_string(line_no) + ": too few fields");
    }
    const auto &age = f[c_age];
    const auto year = parse_integer<int>(f[c_year], "year");
    const auto &pop = f[c_pop];
    const auto count = parse_integer<long long>(f[c_count], "count");
    if (count < 0) {
      throw PanelError("negative count at " + cell_name(age, year, pop));
    }
    auto pit = std::find(pops.begin(), pops.end(), pop);
    if (pit == pops.end()) {
      if (schema.populations) {
        continue;
      }
      if (pops.size() == 2) {
        throw PanelError("more than two population labels: '" + pops[0] +
                         "', '" + pops[1] + "', '" + pop + "'");
      }
      pops.push_back(pop);
      pit = pops.end() - 1;
    }
    age_lb.emplace(age, age_lower_bound(age));
    year_seen[year] = true;
    sums[{age, year, static_cast<std::size_t>(pit - pops.begin())}] += count;
  }
  if (pops.size() != 2) {
    throw PanelError("panel needs exactly two populations, found " +
                     std::to_string(pops.size()));
  }
  if (sums.empty()) {
    throw PanelError("panel input has no data rows");
  }

  MortalityPanel panel;
  panel.labels = {pops[0], pops[1]};
  std::vector<std::pair<int, std::string>> ordered;
  for (const auto &[label, lb] : age_lb) {
    ordered.emplace_back(lb, label);
  }
  std::sort(ordered.begin(), ordered.end());
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i].first == ordered[i - 1].first) {
      throw PanelError("age labels '" + ordered[i - 1].second + "' and '" +
                       ordered[i].second + "' share a lower bound");
    }
  }
  for (const auto &o : ordered) {
    panel.ages.push_back(o.second);
  }
  const int y0 = year_seen.begin()->first;
  const int y1 = year_seen.rbegin()->first;
  for (int y = y0; y <= y1; ++y) {
    panel.years.push_back(y);
  }
  panel.counts_a = CountGrid(panel.ages.size(), panel.years.size());
  panel.counts_b = CountGrid(panel.ages.size(), panel.years.size());
  for (std::size_t a = 0; a < panel.ages.size(); ++a) {
    for (std::size_t t = 0; t < panel.years.size(); ++t) {
      for (std::size_t p = 0; p < 2; ++p) {
        auto it = sums.find({panel.ages[a], panel.years[t], p});
        if (it == sums.end()) {
          throw PanelError("incomplete panel: missing cell " +
                           cell_name(panel.ages[a], panel.years[t], pops[p]));
        }
        (p == 0 ? panel.counts_a : panel.counts_b)(a, t) = it->second;
      }
    }
  }
  panel.validate();
  return panel;
}

MortalityPanel load_panel(const std::filesystem::path &path,
                          const PanelSchema &schema) {
  std::ifstream in(path);
  if (!in) {
    throw PanelError("cannot open panel file '" + path.string() + "'");
  }
  return read_panel(in, schema);
}

void write_panel(std::ostream &out, const MortalityPanel &panel,
                 const PanelSchema &schema) {
  out << schema.age << ',' << schema.year << ',' << schema.population << ','
      << schema.count << '\n';
  for (std::size_t a = 0; a < panel.n_ages(); ++a) {
    for (std::size_t t = 0; t < panel.n_years(); ++t) {
      out << panel.ages[a] << ',' << panel.years[t] << ',' << panel.labels[0]
          << ',' << panel.counts_a(a, t) << '\n';
      out << panel.ages[a] << ',' << panel.years[t] << ',' << panel.labels[1]
          << ',' << panel.counts_b(a, t) << '\n';
    }
  }
}

GapPanel to_gap(const MortalityPanel &panel) {
  GapPanel gap{panel.ages, panel.years,
               CountGrid(panel.n_ages(), panel.n_years())};
  for (std::size_t a = 0; a < panel.n_ages(); ++a) {
    for (std::size_t t = 0; t < panel.n_years(); ++t) {
      gap.gaps(a, t) = panel.counts_a(a, t) - panel.counts_b(a, t);
    }
  }
  return gap;
}

namespace {

struct Window {
  std::size_t age_begin;
  std::size_t year_begin;
  std::size_t year_end; // exclusive
};

Window resolve_window(const std::vector<std::string> &ages,
                      const std::vector<int> &years,
                      const std::optional<std::string> &age_min,
                      std::pair<int, int> year_range) {
  const auto [y0, y1] = year_range;
  if (years.empty() || ages.empty()) {
    throw PanelError("cannot subset an empty panel");
  }
  if (y0 > y1) {
    throw PanelError("year range " + std::to_string(y0) + ":" +
                     std::to_string(y1) + " is reversed");
  }
  if (y0 < years.front() || y1 > years.back()) {
    throw PanelError("year range " + std::to_string(y0) + ":" +
                     std::to_string(y1) + " outside panel years " +
                     std::to_string(years.front()) + ":" +
                     std::to_string(years.back()));
  }
  std::size_t age_begin = 0;
  if (age_min && !age_min->empty()) {
    const int lb = age_lower_bound(*age_min);
    while (age_begin < ages.size() && age_lower_bound(ages[age_begin]) < lb) {
      ++age_begin;
    }
    if (age_begin == ages.size()) {
      throw PanelError("age minimum '" + *age_min +
                       "' leaves no age groups in the panel");
    }
  }
  return {age_begin, static_cast<std::size_t>(y0 - years.front()),
          static_cast<std::size_t>(y1 - years.front() + 1)};
}

CountGrid slice(const CountGrid &g, const Window &w) {
  CountGrid out(g.rows() - w.age_begin, w.year_end - w.year_begin);
  for (std::size_t a = 0; a < out.rows(); ++a) {
    for (std::size_t t = 0; t < out.cols(); ++t) {
      out(a, t) = g(a + w.age_begin, t + w.year_begin);
    }
  }
  return out;
}

} // namespace

MortalityPanel subset(const MortalityPanel &panel,
                      const std::optional<std::string> &age_min,
                      std::pair<int, int> year_range) {
  const auto w = resolve_window(panel.ages, panel.years, age_min, year_range);
  MortalityPanel out;
  out.labels = panel.labels;
  out.ages.assign(panel.ages.begin() + static_cast<long>(w.age_begin),
                  panel.ages.end());
  out.years.assign(panel.years.begin() + static_cast<long>(w.year_begin),
                   panel.years.begin() + static_cast<long>(w.year_end));
  out.counts_a = slice(panel.counts_a, w);
  out.counts_b = slice(panel.counts_b, w);
  return out;
}

GapPanel subset(const GapPanel &panel, const std::optional<std::string> &age_min,
                std::pair<int, int> year_range) {
  const auto w = resolve_window(panel.ages, panel.years, age_min, year_range);
  GapPanel out;
  out.ages.assign(panel.ages.begin() + static_cast<long>(w.age_begin),
                  panel.ages.end());
  out.years.assign(panel.years.begin() + static_cast<long>(w.year_begin),
                   panel.years.begin() + static_cast<long>(w.year_end));
  out.gaps = slice(panel.gaps, w);
  return out;
}

} // namespace gapmort
