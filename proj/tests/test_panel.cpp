#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "gapmort/cause_grouping.hpp"
#include "gapmort/panel.hpp"

using namespace gapmort;

namespace {

MortalityPanel parse(const std::string &csv, const PanelSchema &schema = {}) {
  std::istringstream in(csv);
  return read_panel(in, schema);
}

std::string full_csv() {
  std::ostringstream out;
  out << "age,year,population,deaths\n";
  const char *ages[] = {"0-4", "5-9", "40-44", "45-49", "80+"};
  for (const auto *age : ages) {
    for (int y = 1960; y <= 2015; ++y) {
      out << age << ',' << y << ",A," << (y % 7 + 3) << '\n';
      out << age << ',' << y << ",B," << (y % 5 + 1) << '\n';
    }
  }
  return out.str();
}

} // namespace

TEST_CASE("minimal complete grid") {
  const auto p = parse("age,year,population,deaths\n"
                       "0-4,1960,A,1\n0-4,1961,A,1\n5-9,1960,A,1\n5-9,1961,A,1\n"
                       "0-4,1960,B,1\n0-4,1961,B,1\n5-9,1960,B,1\n5-9,1961,B,1\n");
  CHECK(p.ages == std::vector<std::string>{"0-4", "5-9"});
  CHECK(p.years == std::vector<int>{1960, 1961});
  CHECK(p.labels[0] == "A");
  CHECK(p.labels[1] == "B");
  for (auto v : p.counts_a.values()) {
    CHECK(v == 1);
  }
  for (auto v : p.counts_b.values()) {
    CHECK(v == 1);
  }
}

TEST_CASE("missing cell names the cell") {
  try {
    parse("age,year,population,deaths\n"
          "0-4,1960,A,1\n0-4,1961,A,1\n0-4,1960,B,1\n");
    FAIL("expected an error");
  } catch (const PanelError &e) {
    const std::string msg = e.what();
    CHECK(msg.find("incomplete panel") != std::string::npos);
    CHECK(msg.find("0-4") != std::string::npos);
    CHECK(msg.find("1961") != std::string::npos);
    CHECK(msg.find("B") != std::string::npos);
  }
}

TEST_CASE("duplicate rows are summed") {
  const auto p = parse("age,year,population,deaths\n"
                       "0-4,1960,A,3\n0-4,1960,A,4\n0-4,1960,B,1\n");
  CHECK(p.counts_a(0, 0) == 7);
}

TEST_CASE("negative counts and extra populations are rejected") {
  CHECK_THROWS_AS(parse("age,year,population,deaths\n0-4,1960,A,-1\n0-4,1960,B,1\n"),
                  PanelError);
  CHECK_THROWS_AS(parse("age,year,population,deaths\n0-4,1960,A,1\n0-4,1960,B,1\n"
                        "0-4,1960,C,1\n"),
                  PanelError);
  CHECK_THROWS_AS(parse("age,year,population\n0-4,1960,A\n"), PanelError);
}

TEST_CASE("ages ordered by lower bound and years made consecutive") {
  const auto p = parse("age,year,population,deaths\n"
                       "80+,1961,A,1\n80+,1961,B,1\n10-14,1961,A,2\n10-14,1961,B,2\n"
                       "5-9,1961,A,3\n5-9,1961,B,3\n");
  CHECK(p.ages == std::vector<std::string>{"5-9", "10-14", "80+"});
  CHECK_THROWS_AS(parse("age,year,population,deaths\n"
                        "0-4,1960,A,1\n0-4,1960,B,1\n0-4,1962,A,1\n0-4,1962,B,1\n"),
                  PanelError);
}

TEST_CASE("schema maps column names and population order") {
  const auto schema = PanelSchema::parse("age=Age,year=Year,population=Cause,count=Deaths,"
                                         "a=Circulatory,b=Cancer");
  const auto p = parse("Year,Cause,Age,Deaths\n"
                       "1960,Cancer,0-4,5\n1960,Circulatory,0-4,2\n",
                       schema);
  CHECK(p.labels[0] == "Circulatory");
  CHECK(p.counts_a(0, 0) == 2);
  CHECK(p.counts_b(0, 0) == 5);
  CHECK_THROWS(PanelSchema::parse("age=Age,colour=blue"));
}

TEST_CASE("write and read round trip") {
  const auto p = parse(full_csv());
  std::ostringstream out;
  write_panel(out, p);
  CHECK(parse(out.str()) == p);
}

TEST_CASE("to_gap is A minus B") {
  const auto p = parse("age,year,population,deaths\n"
                       "0-4,1960,A,5\n0-4,1960,B,3\n0-4,1961,A,0\n0-4,1961,B,7\n");
  const auto g = to_gap(p);
  CHECK(g.gaps(0, 0) == 2);
  CHECK(g.gaps(0, 1) == -7);
  auto same = p;
  same.counts_b = same.counts_a;
  const auto zero = to_gap(same);
  for (auto v : zero.gaps.values()) {
    CHECK(v == 0);
  }
}

TEST_CASE("to_gap equals cellwise subtraction on every small grid") {
  for (std::size_t na = 1; na <= 3; ++na) {
    for (std::size_t nt = 1; nt <= 3; ++nt) {
      MortalityPanel p;
      for (std::size_t a = 0; a < na; ++a) {
        p.ages.push_back(std::to_string(5 * a) + "-" + std::to_string(5 * a + 4));
      }
      for (std::size_t t = 0; t < nt; ++t) {
        p.years.push_back(2000 + static_cast<int>(t));
      }
      p.counts_a = CountGrid(na, nt);
      p.counts_b = CountGrid(na, nt);
      for (std::size_t i = 0; i < na * nt; ++i) {
        p.counts_a.values()[i] = static_cast<long long>(3 * i + 1);
        p.counts_b.values()[i] = static_cast<long long>(i * i);
      }
      const auto g = to_gap(p);
      for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t t = 0; t < nt; ++t) {
          CHECK(g.gaps(a, t) == p.counts_a(a, t) - p.counts_b(a, t));
        }
      }
    }
  }
}

TEST_CASE("subset windows") {
  const auto p = parse(full_csv());
  const auto forty_years = subset(p, std::nullopt, {1961, 2000});
  CHECK(forty_years.n_years() == 40);
  CHECK(forty_years.years.front() == 1961);
  CHECK(forty_years.counts_a(0, 0) == p.counts_a(0, 1));

  const auto adults = subset(p, std::string("40"), {1961, 2000});
  CHECK(adults.ages.front() == "40-44");
  CHECK(adults.n_ages() == 3);

  CHECK_THROWS_AS(subset(p, std::nullopt, {1950, 2000}), PanelError);
  CHECK_THROWS_AS(subset(p, std::nullopt, {2000, 1990}), PanelError);
  CHECK_THROWS_AS(subset(p, std::string("85"), {1961, 2000}), PanelError);

  // nested subsets compose
  const auto outer = subset(p, std::string("5"), {1965, 2010});
  const auto inner = subset(outer, std::string("40"), {1970, 1990});
  CHECK(inner == subset(p, std::string("40"), {1970, 1990}));

  const auto gap = subset(to_gap(p), std::string("40"), {1970, 1990});
  CHECK(gap == to_gap(inner));
}

TEST_CASE("age lower bounds") {
  CHECK(age_lower_bound("0-4") == 0);
  CHECK(age_lower_bound("80+") == 80);
  CHECK(age_lower_bound("40") == 40);
  CHECK_THROWS(age_lower_bound("old"));
}

TEST_CASE("csv helpers") {
  const auto f = csv::split_line("a,\"b,c\",\"d\"\"e\", f ");
  REQUIRE(f.size() == 4);
  CHECK(f[1] == "b,c");
  CHECK(f[2] == "d\"e");
  CHECK(csv::trim(f[3]) == "f");
}

// ---------------------------------------------------------------------------
// cause grouping

namespace {

CauseGroupingConfig shipped_config() {
  return CauseGroupingConfig::load(std::string(GAPMORT_DATA_DIR) + "/icd_cause_groups.cfg");
}

} // namespace

TEST_CASE("ICD code normalization") {
  CHECK(normalize_icd_code("A44", 7) == "A044");
  CHECK(normalize_icd_code("a044", 7) == "A044");
  CHECK(normalize_icd_code("B08", 9) == "B008");
  CHECK(normalize_icd_code("I25", 10) == "I025");
  CHECK(normalize_icd_code("I251", 10) == "I025.1");
  CHECK(normalize_icd_code("I25.1", 10) == "I025.1");
  CHECK(normalize_icd_code("C", 10) == "C");
  CHECK_THROWS_AS(normalize_icd_code("C5X", 10), PanelError);
}

TEST_CASE("shipped config reproduces the classification table") {
  const auto cfg = shipped_config();
  for (int rev : {7, 8, 9, 10}) {
    CHECK(cfg.has_revision(rev));
  }
  CHECK(cfg.classify(10, "C50") == "Cancer");
  CHECK(cfg.classify(10, "C509") == "Cancer");
  CHECK(cfg.classify(10, "I25") == "Circulatory");
  CHECK(cfg.classify(10, "I99.9") == "Circulatory");
  CHECK(cfg.classify(10, "J44").empty());
  CHECK(cfg.classify(7, "A044") == "Cancer");
  CHECK(cfg.classify(7, "A059") == "Cancer");
  CHECK(cfg.classify(7, "A060").empty());
  CHECK(cfg.classify(7, "B018") == "Cancer");
  CHECK(cfg.classify(7, "A070") == "Circulatory");
  CHECK(cfg.classify(7, "A071").empty());
  CHECK(cfg.classify(7, "B023").empty());
  CHECK(cfg.classify(8, "A060") == "Cancer");
  CHECK(cfg.classify(8, "A085") == "Circulatory");
  CHECK(cfg.classify(9, "B08") == "Cancer");
  CHECK(cfg.classify(9, "B101") == "Cancer");
  CHECK(cfg.classify(9, "B102").empty());
  CHECK(cfg.classify(9, "B17") == "Cancer");
  CHECK(cfg.classify(9, "B25") == "Circulatory");
  CHECK(cfg.classify(9, "B30") == "Circulatory");
  CHECK_THROWS(cfg.classify(6, "A044"));
}

TEST_CASE("overlapping groups are a config error") {
  std::istringstream in("[ICD10]\nCancer = C00-D48\nOther = D10-D20\n");
  CHECK_THROWS_AS(CauseGroupingConfig::parse(in), PanelError);
  std::istringstream reversed("[ICD10]\nCancer = C50-C10\n");
  CHECK_THROWS_AS(CauseGroupingConfig::parse(reversed), PanelError);
}

TEST_CASE("group_causes assigns, sums and tallies") {
  const auto cfg = shipped_config();
  std::vector<CauseRecord> records{
      {10, "C50", "0-4", 2000, 1},  {10, "I25", "0-4", 2000, 2},
      {10, "J44", "0-4", 2000, 1},  {10, "C34", "0-4", 2001, 5},
      {10, "C349", "0-4", 2001, 2}, {9, "B25", "5-9", 2000, 3},
  };
  const auto r = group_causes(records, cfg, "Cancer", "Circulatory");
  CHECK(r.matched_records + r.unmatched.records == records.size());
  CHECK(r.unmatched.records == 1);
  CHECK(r.unmatched.deaths == 1);
  CHECK(r.panel.labels[0] == "Cancer");
  CHECK(r.panel.counts_a(0, 0) == 1);
  CHECK(r.panel.counts_b(0, 0) == 2);
  CHECK(r.panel.counts_a(0, 1) == 7);
  CHECK(r.panel.counts_b(1, 0) == 3);
  CHECK(r.panel.counts_a(1, 1) == 0);

  records.push_back({6, "A01", "0-4", 2000, 1});
  CHECK_THROWS(group_causes(records, cfg, "Cancer", "Circulatory"));
  CHECK_THROWS(group_causes({}, cfg, "Cancer", "Respiratory"));
}

TEST_CASE("cause records from csv") {
  std::istringstream in("revision,code,age,year,deaths\n10,C50,0-4,2000,3\n9,B25,80+,1990,4\n");
  const auto recs = read_cause_records(in);
  REQUIRE(recs.size() == 2);
  CHECK(recs[1].icd_revision == 9);
  CHECK(recs[1].age == "80+");
  CHECK(recs[1].count == 4);
}
