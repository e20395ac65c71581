#include "gapmort/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace gapmort {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fixed(double v, int digits) {
  if (std::isnan(v)) {
    return "-";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string opt_num(const std::optional<double> &v) {
  return v ? format_double(*v) : std::string{};
}

} // namespace

std::vector<double> criteria_values(const EvalReport &r) {
  const auto &out = r.out_of_sample;
  return {r.criteria.bic,
          r.criteria.aic,
          r.criteria.aicc.value_or(kNaN),
          r.in_sample.rmse,
          r.in_sample.mae,
          r.in_sample.mape.value_or(kNaN),
          out ? out->rmse : kNaN,
          out ? out->mae : kNaN,
          out && out->mape ? *out->mape : kNaN};
}

std::vector<std::vector<int>> criteria_ranks(const std::vector<EvalReport> &reports) {
  std::vector<std::vector<double>> vals;
  for (const auto &r : reports) {
    vals.push_back(criteria_values(r));
  }
  std::vector<std::vector<int>> ranks(reports.size(), std::vector<int>(9, 0));
  for (std::size_t c = 0; c < 9; ++c) {
    std::vector<double> col;
    for (const auto &v : vals) {
      if (!std::isnan(v[c])) {
        col.push_back(v[c]);
      }
    }
    std::sort(col.begin(), col.end());
    col.erase(std::unique(col.begin(), col.end()), col.end());
    for (std::size_t m = 0; m < reports.size(); ++m) {
      const double v = vals[m][c];
      if (std::isnan(v)) {
        continue;
      }
      const auto pos = std::lower_bound(col.begin(), col.end(), v) - col.begin();
      ranks[m][c] = pos < 2 ? static_cast<int>(pos) + 1 : 0;
    }
  }
  return ranks;
}

void write_eval_rows(std::ostream &out, const std::vector<EvalReport> &reports) {
  out << "model,log_lik,n_params,in_bic,in_aic,in_aicc,in_rmse,in_mae,in_mape,"
         "out_rmse,out_mae,out_mape,cells_used,mape_excluded_cells\n";
  for (const auto &r : reports) {
    out << model_id(r.model) << ',' << format_double(r.log_lik) << ',' << r.n_params
        << ',' << format_double(r.criteria.bic) << ',' << format_double(r.criteria.aic)
        << ',' << opt_num(r.criteria.aicc) << ',' << format_double(r.in_sample.rmse) << ','
        << format_double(r.in_sample.mae) << ',' << opt_num(r.in_sample.mape) << ',';
    if (r.out_of_sample) {
      out << format_double(r.out_of_sample->rmse) << ','
          << format_double(r.out_of_sample->mae) << ',' << opt_num(r.out_of_sample->mape);
    } else {
      out << ",,";
    }
    out << ',' << r.cells_used << ',' << r.mape_excluded_cells << '\n';
  }
}

void render_eval_table(std::ostream &out, const std::vector<EvalReport> &reports,
                       const std::string &title) {
  const auto ranks = criteria_ranks(reports);
  std::vector<std::vector<std::string>> cells;
  std::size_t name_w = 5;
  for (std::size_t m = 0; m < reports.size(); ++m) {
    const auto vals = criteria_values(reports[m]);
    std::vector<std::string> row;
    for (std::size_t c = 0; c < 9; ++c) {
      const int digits = c < 3 ? 1 : 2;
      std::string s = fixed(vals[c], digits);
      if (ranks[m][c] == 1) {
        s += " (1st)";
      } else if (ranks[m][c] == 2) {
        s += " (2nd)";
      }
      row.push_back(std::move(s));
    }
    cells.push_back(std::move(row));
    name_w = std::max(name_w, model_name(reports[m].model).size());
  }
  std::vector<std::size_t> width(9, 0);
  for (std::size_t c = 0; c < 9; ++c) {
    width[c] = std::string(kCriteriaColumns[c]).size();
    for (const auto &row : cells) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  std::size_t in_w = 0, out_w = 0;
  for (std::size_t c = 0; c < 6; ++c) {
    in_w += width[c] + 2;
  }
  for (std::size_t c = 6; c < 9; ++c) {
    out_w += width[c] + 2;
  }
  out << title << '\n';
  out << std::left << std::setw(static_cast<int>(name_w)) << "" << " | "
      << std::setw(static_cast<int>(in_w)) << "In-Sample" << "| " << "Out-of-Sample" << '\n';
  out << std::setw(static_cast<int>(name_w)) << "Model" << " | ";
  for (std::size_t c = 0; c < 9; ++c) {
    if (c == 6) {
      out << "| ";
    }
    out << std::right << std::setw(static_cast<int>(width[c])) << kCriteriaColumns[c] << "  ";
  }
  out << '\n' << std::string(name_w + 3 + in_w + 2 + out_w, '-') << '\n';
  for (std::size_t m = 0; m < reports.size(); ++m) {
    out << std::left << std::setw(static_cast<int>(name_w)) << model_name(reports[m].model)
        << " | ";
    for (std::size_t c = 0; c < 9; ++c) {
      if (c == 6) {
        out << "| ";
      }
      out << std::right << std::setw(static_cast<int>(width[c])) << cells[m][c] << "  ";
    }
    out << '\n';
  }
  out << std::left;
}

std::string format_dm_cell(const DmResult &r) {
  if (r.degenerate) {
    return r.mean_differential == 0.0 ? "identical" : (r.mean_differential > 0 ? "degenerate(+)" : "degenerate(-)");
  }
  return fixed(r.statistic, 3) + stars(r.significance);
}

void write_dm_rows(std::ostream &out, const std::vector<DmComparison> &comparisons) {
  out << "comparison,age_group,statistic,p_value,n,stars,note\n";
  for (const auto &c : comparisons) {
    for (const auto &r : c.results) {
      out << c.label << ',' << r.age_group << ',' << format_double(r.statistic) << ','
          << format_double(r.p_value) << ',' << r.n << ',' << stars(r.significance) << ','
          << r.note << '\n';
    }
  }
}

void render_dm_table(std::ostream &out, const std::vector<DmComparison> &comparisons,
                     const std::string &title) {
  std::vector<std::string> groups;
  std::map<std::string, std::vector<std::string>> cells;
  for (std::size_t k = 0; k < comparisons.size(); ++k) {
    for (const auto &r : comparisons[k].results) {
      auto &row = cells[r.age_group];
      if (row.empty()) {
        groups.push_back(r.age_group);
        row.assign(comparisons.size(), "-");
      }
      row[k] = format_dm_cell(r);
    }
  }
  std::size_t gw = std::string("Age Group").size();
  for (const auto &g : groups) {
    gw = std::max(gw, g.size());
  }
  std::vector<std::size_t> width;
  for (std::size_t k = 0; k < comparisons.size(); ++k) {
    std::size_t w = comparisons[k].label.size();
    for (const auto &g : groups) {
      w = std::max(w, cells[g][k].size());
    }
    width.push_back(w);
  }
  out << title << '\n' << std::left << std::setw(static_cast<int>(gw)) << "Age Group";
  for (std::size_t k = 0; k < comparisons.size(); ++k) {
    out << "  " << std::right << std::setw(static_cast<int>(width[k])) << comparisons[k].label;
  }
  out << '\n';
  for (const auto &g : groups) {
    out << std::left << std::setw(static_cast<int>(gw)) << g;
    for (std::size_t k = 0; k < comparisons.size(); ++k) {
      out << "  " << std::right << std::setw(static_cast<int>(width[k])) << cells[g][k];
    }
    out << '\n';
  }
  out << std::left << "Significance (two-sided): * 5%, ** 1%, *** 0.1%\n";
}

} // namespace gapmort
