#include "gapmort/cause_grouping.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace gapmort {

namespace {

int parse_revision(const std::string &text) {
  std::string digits;
  for (char c : text) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
    }
  }
  if (digits.empty()) {
    throw PanelError("cannot read ICD revision from '" + text + "'");
  }
  return std::stoi(digits);
}

CodeRange parse_range(const std::string &text, int revision) {
  auto t = csv::trim(text);
  auto dash = t.find('-');
  CodeRange r;
  r.text = t;
  if (dash == std::string::npos) {
    r.start = r.end = normalize_icd_code(t, revision);
  } else {
    r.start = normalize_icd_code(t.substr(0, dash), revision);
    r.end = normalize_icd_code(t.substr(dash + 1), revision);
  }
  if (r.start.empty() || r.end.empty()) {
    throw PanelError("empty code in range '" + t + "'");
  }
  if (r.end < r.start) {
    throw PanelError("code range '" + t + "' has start after end");
  }
  return r;
}

} // namespace

std::string normalize_icd_code(const std::string &code, int revision) {
  std::string s;
  for (char c : code) {
    if (c == '.' || std::isspace(static_cast<unsigned char>(c))) {
      continue;
    }
    s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  std::size_t i = 0;
  while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) {
    ++i;
  }
  std::string prefix = s.substr(0, i);
  std::string digits = s.substr(i);
  if (!std::all_of(digits.begin(), digits.end(),
                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw PanelError("malformed ICD code '" + code + "'");
  }
  if (digits.empty()) {
    return prefix;
  }
  std::string sub;
  if (revision == 10 && digits.size() > 2) {
    sub = digits.substr(2);
    digits = digits.substr(0, 2);
  }
  if (digits.size() < 3) {
    digits.insert(0, 3 - digits.size(), '0');
  }
  return prefix + digits + (sub.empty() ? "" : "." + sub);
}

bool CodeRange::contains(const std::string &c) const {
  return start <= c && (c <= end || c.starts_with(end));
}

bool CodeRange::overlaps(const CodeRange &other) const {
  const auto &m = std::max(start, other.start);
  return contains(m) && other.contains(m);
}

CauseGroupingConfig::CauseGroupingConfig(Table table) : table_{std::move(table)} {
  validate();
}

void CauseGroupingConfig::validate() const {
  for (const auto &[rev, groups] : table_) {
    for (auto g1 = groups.begin(); g1 != groups.end(); ++g1) {
      for (auto g2 = std::next(g1); g2 != groups.end(); ++g2) {
        for (const auto &r1 : g1->second) {
          for (const auto &r2 : g2->second) {
            if (r1.overlaps(r2)) {
              throw PanelError("ICD" + std::to_string(rev) + ": range '" +
                               r1.text + "' of " + g1->first +
                               " overlaps range '" + r2.text + "' of " +
                               g2->first);
            }
          }
        }
      }
    }
  }
}

CauseGroupingConfig CauseGroupingConfig::parse(std::istream &in) {
  Table table;
  std::optional<int> revision;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    line = csv::trim(line);
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw PanelError("line " + std::to_string(line_no) +
                         ": unterminated section header");
      }
      revision = parse_revision(line.substr(1, line.size() - 2));
      table[*revision];
      continue;
    }
    if (!revision) {
      throw PanelError("line " + std::to_string(line_no) +
                       ": cause entry before any [ICDn] section");
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw PanelError("line " + std::to_string(line_no) +
                       ": expected 'Cause = ranges'");
    }
    auto name = csv::trim(line.substr(0, eq));
    auto &ranges = table[*revision][name];
    std::stringstream list(line.substr(eq + 1));
    std::string item;
    while (std::getline(list, item, ',')) {
      if (!csv::trim(item).empty()) {
        ranges.push_back(parse_range(item, *revision));
      }
    }
  }
  return CauseGroupingConfig(std::move(table));
}

CauseGroupingConfig CauseGroupingConfig::load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw PanelError("cannot open cause grouping config '" + path.string() + "'");
  }
  return parse(in);
}

std::string CauseGroupingConfig::classify(int revision,
                                          const std::string &code) const {
  auto it = table_.find(revision);
  if (it == table_.end()) {
    throw PanelError("unknown ICD revision " + std::to_string(revision));
  }
  const auto normalized = normalize_icd_code(code, revision);
  for (const auto &[name, ranges] : it->second) {
    for (const auto &r : ranges) {
      if (r.contains(normalized)) {
        return name;
      }
    }
  }
  return {};
}

GroupingResult group_causes(const std::vector<CauseRecord> &records,
                            const CauseGroupingConfig &config,
                            const std::string &cause_a,
                            const std::string &cause_b) {
  if (cause_a == cause_b) {
    throw PanelError("cause groups must differ");
  }
  bool seen_a = false;
  bool seen_b = false;
  for (const auto &[rev, groups] : config.table()) {
    seen_a = seen_a || groups.contains(cause_a);
    seen_b = seen_b || groups.contains(cause_b);
    if (groups.contains(cause_a) && groups.contains(cause_b)) {
      for (const auto &r1 : groups.at(cause_a)) {
        for (const auto &r2 : groups.at(cause_b)) {
          if (r1.overlaps(r2)) {
            throw PanelError("overlapping ranges for " + cause_a + " and " +
                             cause_b);
          }
        }
      }
    }
  }
  if (!seen_a || !seen_b) {
    throw PanelError("cause group '" + (seen_a ? cause_b : cause_a) +
                     "' not present in the grouping config");
  }

  std::map<std::string, int> age_lb;
  std::set<int> years;
  for (const auto &r : records) {
    if (r.count < 0) {
      throw PanelError("negative count for code " + r.code);
    }
    if (!config.has_revision(r.icd_revision)) {
      throw PanelError("unknown ICD revision " + std::to_string(r.icd_revision));
    }
    age_lb.emplace(r.age, age_lower_bound(r.age));
    years.insert(r.year);
  }
  if (records.empty()) {
    throw PanelError("no cause records");
  }

  GroupingResult result;
  auto &panel = result.panel;
  panel.labels = {cause_a, cause_b};
  std::vector<std::pair<int, std::string>> ordered;
  for (const auto &[label, lb] : age_lb) {
    ordered.emplace_back(lb, label);
  }
  std::sort(ordered.begin(), ordered.end());
  for (const auto &o : ordered) {
    panel.ages.push_back(o.second);
  }
  for (int y = *years.begin(); y <= *years.rbegin(); ++y) {
    panel.years.push_back(y);
  }
  panel.counts_a = CountGrid(panel.n_ages(), panel.n_years());
  panel.counts_b = CountGrid(panel.n_ages(), panel.n_years());
  std::map<std::string, std::size_t> age_index;
  for (std::size_t i = 0; i < panel.ages.size(); ++i) {
    age_index[panel.ages[i]] = i;
  }

  for (const auto &r : records) {
    const auto group = config.classify(r.icd_revision, r.code);
    const auto a = age_index.at(r.age);
    const auto t = static_cast<std::size_t>(r.year - panel.years.front());
    if (group == cause_a) {
      panel.counts_a(a, t) += r.count;
      ++result.matched_records;
    } else if (group == cause_b) {
      panel.counts_b(a, t) += r.count;
      ++result.matched_records;
    } else {
      ++result.unmatched.records;
      result.unmatched.deaths += r.count;
      result.unmatched.deaths_by_code["ICD" + std::to_string(r.icd_revision) +
                                      ":" + r.code] += r.count;
    }
  }
  panel.validate();
  return result;
}

std::vector<CauseRecord> read_cause_records(std::istream &in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw PanelError("empty cause record input");
  }
  auto header = csv::split_line(line);
  auto column = [&](const std::string &name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw PanelError("missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto c_rev = column("revision");
  const auto c_code = column("code");
  const auto c_age = column("age");
  const auto c_year = column("year");
  const auto c_count = column("deaths");
  std::vector<CauseRecord> out;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) {
      continue;
    }
    auto f = csv::split_line(line);
    if (f.size() < header.size()) {
      throw PanelError("cause record line has too few fields: " + line);
    }
    out.push_back({parse_revision(f[c_rev]), f[c_code], f[c_age],
                   std::stoi(f[c_year]), std::stoll(f[c_count])});
  }
  return out;
}

} // namespace gapmort
